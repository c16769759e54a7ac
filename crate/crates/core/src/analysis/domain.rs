//! The typical domain `D = D_T x D_Z` and exact scans of the `(T, Z, R)` law
//! over it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_model::{build_string, compute_tzr, counts_from_tzr, ModelParams, TzrLaw, TzrStats};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, RandomSeed};

/// Product interval of typical `(T, Z)` values:
/// `D_T = [n/l - c sqrt(n), n/l + c sqrt(n)]`,
/// `D_Z = [-n/(3l) - c sqrt(n), -n/(3l) + c sqrt(n)]`,
/// rounded outward to integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainD {
    pub c: f64,
    pub t_lo: i64,
    pub t_hi: i64,
    pub z_lo: i64,
    pub z_hi: i64,
}

impl DomainD {
    pub fn contains_t(&self, t: i64) -> bool {
        (self.t_lo..=self.t_hi).contains(&t)
    }

    pub fn contains_z(&self, z: i64) -> bool {
        (self.z_lo..=self.z_hi).contains(&z)
    }

    pub fn contains(&self, t: i64, z: i64) -> bool {
        self.contains_t(t) && self.contains_z(z)
    }
}

pub fn make_domain(params: &ModelParams, c: f64) -> Result<DomainD> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("domain scale c = {c} must be positive")));
    }
    let n = params.n() as f64;
    let l = params.l() as f64;
    let half = c * n.sqrt();
    let t_mid = n / l;
    let z_mid = -n / (3.0 * l);
    Ok(DomainD {
        c,
        t_lo: (t_mid - half).floor() as i64,
        t_hi: (t_mid + half).ceil() as i64,
        z_lo: (z_mid - half).floor() as i64,
        z_hi: (z_mid + half).ceil() as i64,
    })
}

fn simulate_tz(params: &ModelParams, reps: usize, seed: RandomSeed) -> Vec<(i64, i64)> {
    (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let s = build_string(params, derive_seed(seed, "domain", i));
            let st = compute_tzr(params, &s);
            (st.t, st.z)
        })
        .collect()
}

/// Empirical `P((T, Z) in D)` over `reps` simulated strings.
pub fn coverage(params: &ModelParams, domain: &DomainD, reps: usize, seed: RandomSeed) -> f64 {
    let tz = simulate_tz(params, reps, seed);
    tz.iter().filter(|(t, z)| domain.contains(*t, *z)).count() as f64 / reps as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c: f64,
    pub coverage: f64,
    pub reps: usize,
    /// `(c, coverage)` for every grid point visited
    pub grid: Vec<(f64, f64)>,
}

/// Grid step for [`calibrate_c`].
pub const CALIBRATION_STEP: f64 = 0.25;

/// Smallest `c` on the grid `0.25, 0.5, ...` whose empirical coverage reaches
/// `target`.
pub fn calibrate_c(params: &ModelParams, target: f64, reps: usize, seed: RandomSeed) -> Result<Calibration> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!("target {target} outside (0, 1)")));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let tz = simulate_tz(params, reps, seed);
    let mut grid = Vec::new();
    let mut k = 1u32;
    loop {
        let c = CALIBRATION_STEP * f64::from(k);
        let d = make_domain(params, c)?;
        let cov = tz.iter().filter(|(t, z)| d.contains(*t, *z)).count() as f64 / reps as f64;
        grid.push((c, cov));
        // every (T, Z) lies within n of the centre, so this terminates
        if cov >= target {
            return Ok(Calibration {
                c,
                coverage: cov,
                reps,
                grid,
            });
        }
        k += 1;
    }
}

/// Extremum of a scan over the admissible points of `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbExtremum {
    pub value: f64,
    pub at: TzrStats,
    /// number of admissible points scanned
    pub admissible: usize,
}

fn admissible_points(params: &ModelParams, domain: &DomainD) -> Vec<TzrStats> {
    let mut out = Vec::new();
    for t in domain.t_lo.max(0)..=domain.t_hi {
        for r in 0..=params.l() as i64 {
            for z in domain.z_lo..=domain.z_hi {
                let st = TzrStats::new(t, z, r);
                if counts_from_tzr(params, st).is_ok() {
                    out.push(st);
                }
            }
        }
    }
    out
}

/// Exact minimum of `n * P((T, Z, R) = (t, z, r))` over admissible triples
/// with `(t, z)` in `D` and `r` in `[0, l]`.
pub fn min_prob_over_d(params: &ModelParams, domain: &DomainD) -> Result<ProbExtremum> {
    let law = TzrLaw::new(*params);
    let points = admissible_points(params, domain);
    let n = params.n() as f64;
    let mut best: Option<(f64, TzrStats)> = None;
    for &st in &points {
        let v = n * law.log_prob(st)?.exp();
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, st));
        }
    }
    let (value, at) = best.ok_or(Error::EmptyDomain)?;
    Ok(ProbExtremum {
        value,
        at,
        admissible: points.len(),
    })
}

/// `P(Z = z + 4 | t, r) / P(Z = z | t, r)` for an admissible `(t, z, r)`,
/// or `None` when either side has probability zero.
pub fn step_ratio(law: &TzrLaw, st: TzrStats) -> Option<f64> {
    let a = law.log_prob(st).ok()?;
    let b = law.log_prob(TzrStats::new(st.t, st.z + 4, st.r)).ok()?;
    Some((b - a).exp())
}

/// Exact `sqrt(n) * max |P(Z = z+4 | t, r) / P(Z = z | t, r) - 1|` over the
/// pairs with both `(t, z)` and `(t, z+4)` admissible in `D`.
pub fn ratio_check(params: &ModelParams, domain: &DomainD) -> Result<ProbExtremum> {
    let law = TzrLaw::new(*params);
    let sqrt_n = (params.n() as f64).sqrt();
    let mut best: Option<(f64, TzrStats)> = None;
    let mut count = 0;
    for st in admissible_points(params, domain) {
        if !domain.contains_z(st.z + 4) {
            continue;
        }
        let Some(ratio) = step_ratio(&law, st) else {
            continue;
        };
        count += 1;
        let v = sqrt_n * (ratio - 1.0).abs();
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, st));
        }
    }
    let (value, at) = best.ok_or(Error::EmptyDomain)?;
    Ok(ProbExtremum {
        value,
        at,
        admissible: count,
    })
}
