//! Monte Carlo checks of the variance machinery and of the ladder's marginal
//! law.

use std::collections::BTreeMap;

use blocklcs::analysis::stats::{chi_square_test, total_variance_split};
use blocklcs::analysis::{make_domain, variance_scan};
use blocklcs::block_model::{build_string, compute_tzr, enumerate_xi, ModelParams, DEFAULT_ENUMERATION_CAP};
use blocklcs::ladder::{build_ladder, leftmost_z, Parity};
use blocklcs::seed::derive_seed;
use blocklcs::{lcs_len, Engine, TzrStats};

#[test]
fn total_variance_dominates_conditional_variance() {
    let params = ModelParams::new(5, 1000).unwrap();
    let domain = make_domain(&params, 1.0).unwrap();
    let k = 300;
    let (mut ls, mut os) = (Vec::new(), Vec::new());
    for rep in 0..k {
        let x = build_string(&params, derive_seed(9, "x", rep));
        let y = build_string(&params, derive_seed(9, "y", rep));
        ls.push(lcs_len(&x.symbols(), &y.symbols(), Engine::BitParallel).unwrap() as f64);
        let st = compute_tzr(&params, &x);
        os.push(domain.contains(st.t, st.z));
    }
    let (total, conditional) = total_variance_split(&ls, &os);
    // normal-theory standard error of a sample variance
    let sigma = total * (2.0 / (k as f64 - 1.0)).sqrt();
    assert!(total >= conditional - 3.0 * sigma, "{total} vs {conditional}");
}

#[test]
fn mean_lcs_per_symbol_is_stable() {
    let table = variance_scan(3, &[2048, 4096, 8192], 30, 5, Some(Engine::BitParallel)).unwrap();
    let ratios: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r.mean_l.unwrap() / r.n as f64)
        .collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(hi / lo - 1.0 < 0.02, "{ratios:?}");
}

#[test]
fn var_z_grows_linearly() {
    let table = variance_scan(10, &[1024, 2048, 4096, 8192], 500, 17, None).unwrap();
    let fit = table.fit_var_z();
    assert!(fit.r2 >= 0.95, "{fit:?}");
    assert!(fit.slope > 0.0);
    assert!(table.fit_var_l().is_none());
}

#[test]
fn ladder_rungs_follow_the_conditional_law() {
    let params = ModelParams::new(3, 24).unwrap();
    let domain = make_domain(&params, 1.0).unwrap();
    let (t, r) = (8, 0);
    let z0 = leftmost_z(&params, t, r, &domain).unwrap();
    let y = build_string(&params, 1).symbols();
    let reps = 6000;

    let mut by_rung: BTreeMap<i64, BTreeMap<Vec<u8>, u64>> = BTreeMap::new();
    for seed in 0..reps {
        let ladder = build_ladder(&params, t, r, &y, &domain, seed, Engine::BitParallel).unwrap();
        for rung in ladder.class(Parity::Even).into_iter().take(2) {
            *by_rung.entry(rung.z).or_default().entry(rung.string.symbols()).or_default() += 1;
        }
    }
    for (k, (&z, counts)) in by_rung.iter().enumerate() {
        assert_eq!(z, z0 + 4 * k as i64);
        let support = enumerate_xi(&params, TzrStats::new(t, z, r), DEFAULT_ENUMERATION_CAP).unwrap();
        let total: u64 = counts.values().sum();
        assert!(counts.len() <= support.len());
        let observed: Vec<u64> = support
            .iter()
            .map(|s| counts.get(&s.symbols()).copied().unwrap_or(0))
            .collect();
        assert_eq!(observed.iter().sum::<u64>(), total, "rung outside the support");
        let expected = vec![total as f64 / support.len() as f64; support.len()];
        let (_, p, _) = chi_square_test(&observed, &expected, 5.0);
        assert!(p > 0.001, "z = {z}: p = {p}");
    }
    assert_eq!(by_rung.len(), 2);
}

#[test]
fn scan_moments_are_sane() {
    let table = variance_scan(4, &[256], 40, 3, Some(Engine::Reference)).unwrap();
    let row = &table.rows[0];
    assert!(row.var_z > 0.0 && row.var_l.unwrap() > 0.0);
}
