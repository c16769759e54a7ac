//! One function per subcommand. Each writes into an open [`RunDir`] and
//! returns whether the command's checks passed.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use blocklcs::analysis::{calibrate_c, coverage, make_domain, min_prob_over_d, ratio_check, variance_scan, DomainD};
use blocklcs::block_model::{build_string, compute_tzr, BlockString, ModelParams};
use blocklcs::ladder::{
    build_ladder, ladder_drifts, leftmost_z, martingale_diagnostics, repair_ladder, slope_event_check,
    LadderDiagnostics, Parity,
};
use blocklcs::lcs::{lcs_len_batch, read_pairs_csv, write_lcs_csv};
use blocklcs::modification::{drift_exact, drift_sampled, DriftEstimate};
use blocklcs::seed::derive_seed;
use blocklcs::{Error, RandomSeed, TzrStats};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{csv_writer, RunDir};
use crate::verify::{self, Suite};

/// Seeds of the `X` and `Y` strings of replicate `i` under `label`.
fn pair_seeds(master: RandomSeed, label: &str, i: u64) -> (RandomSeed, RandomSeed) {
    let rep = derive_seed(master, label, i);
    (derive_seed(rep, "x", 0), derive_seed(rep, "y", 0))
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct StringRow<'a> {
    replicate: usize,
    role: &'a str,
    t: i64,
    z: i64,
    r: i64,
    truncated: bool,
    symbols: String,
}

#[derive(Serialize)]
struct GeneratedPair {
    replicate: usize,
    x: BlockString,
    y: BlockString,
}

pub fn generate(cfg: &RunConfig, run: &mut RunDir) -> CliResult<bool> {
    let params = cfg.params()?;
    run.seed("generate");
    if cfg.reps == 0 {
        return Ok(true);
    }
    let pairs: Vec<GeneratedPair> = (0..cfg.reps)
        .into_par_iter()
        .map(|i| {
            let (sx, sy) = pair_seeds(cfg.seed, "generate", i as u64);
            GeneratedPair {
                replicate: i,
                x: build_string(&params, sx),
                y: build_string(&params, sy),
            }
        })
        .collect();
    run.write_csv("strings.csv", |buf| {
        let mut w = csv_writer(buf);
        for p in &pairs {
            for (role, s) in [("x", &p.x), ("y", &p.y)] {
                let st = compute_tzr(&params, s);
                w.serialize(StringRow {
                    replicate: p.replicate,
                    role,
                    t: st.t,
                    z: st.z,
                    r: st.r,
                    truncated: s.truncated(),
                    symbols: s.to_ascii(),
                })?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    run.write_json("blocks.json", &pairs)?;
    Ok(true)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct DriftRow {
    replicate: usize,
    n1: usize,
    n3: usize,
    mean: f64,
    stderr: f64,
    exact: bool,
}

#[derive(Debug, Serialize)]
struct DriftSummary {
    replicates: usize,
    evaluated: usize,
    /// replicates whose X had no `(l-1, l+1)` pair to modify
    skipped: usize,
    epsilon: f64,
    at_least_epsilon: usize,
    fraction_at_least_epsilon: Option<f64>,
    min_mean: Option<f64>,
    max_mean: Option<f64>,
}

/// Drift of one `(X, Y)` pair: exact when `n1 * n3 <= cap`, else `k` draws.
pub fn drift_for(
    params: &ModelParams,
    x: &BlockString,
    y: &[u8],
    cfg: &RunConfig,
    draw_seed: RandomSeed,
) -> CliResult<Option<DriftEstimate>> {
    let engine = cfg.require_engine()?;
    let est = match drift_exact(params, x, y, engine, cfg.cap) {
        Err(Error::TooLarge { .. }) => drift_sampled(params, x, y, cfg.k, draw_seed, engine),
        other => other,
    };
    match est {
        Ok(d) => Ok(Some(d)),
        Err(Error::NoModifiableBlocks { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn drift(cfg: &RunConfig, run: &mut RunDir) -> CliResult<bool> {
    let params = cfg.params()?;
    cfg.require_engine()?;
    run.seed("drift");
    let rows: Vec<Option<DriftRow>> = (0..cfg.reps)
        .into_par_iter()
        .map(|i| -> CliResult<Option<DriftRow>> {
            let (sx, sy) = pair_seeds(cfg.seed, "drift", i as u64);
            let x = build_string(&params, sx);
            let y = build_string(&params, sy).symbols();
            let c = x.counts(&params);
            let draws = derive_seed(derive_seed(cfg.seed, "drift", i as u64), "draws", 0);
            Ok(drift_for(&params, &x, &y, cfg, draws)?.map(|d| DriftRow {
                replicate: i,
                n1: c.n1 as usize,
                n3: c.n3 as usize,
                mean: d.mean,
                stderr: d.stderr,
                exact: d.exact,
            }))
        })
        .collect::<CliResult<_>>()?;
    let rows: Vec<DriftRow> = rows.into_iter().flatten().collect();
    run.write_csv("drift.csv", |buf| {
        let mut w = csv_writer(buf);
        for row in &rows {
            w.serialize(row)?;
        }
        if rows.is_empty() {
            w.write_record(["replicate", "n1", "n3", "mean", "stderr", "exact"])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let at_least = rows.iter().filter(|r| r.mean >= cfg.epsilon).count();
    let means = rows.iter().map(|r| r.mean);
    let summary = DriftSummary {
        replicates: cfg.reps,
        evaluated: rows.len(),
        skipped: cfg.reps - rows.len(),
        epsilon: cfg.epsilon,
        at_least_epsilon: at_least,
        fraction_at_least_epsilon: (!rows.is_empty()).then(|| at_least as f64 / rows.len() as f64),
        min_mean: means.clone().reduce(f64::min),
        max_mean: means.reduce(f64::max),
    };
    run.write_json("drift_summary.json", &summary)?;
    Ok(rows.iter().all(|r| r.mean.abs() <= 2.0))
}

// ---------------------------------------------------------------------------

/// Admissible block count closest to `n / l` (ties to the smaller value).
pub fn central_t(params: &ModelParams, r: i64, domain: &DomainD) -> CliResult<i64> {
    let mid = (params.n() as f64 / params.l() as f64).round() as i64;
    let span = (domain.t_hi - domain.t_lo).max(0);
    (0..=span)
        .flat_map(|d| [mid - d, mid + d])
        .find(|&t| domain.contains_t(t) && leftmost_z(params, t, r, domain).is_some())
        .ok_or(CliError::Model(Error::NoAdmissibleZ {
            t: mid,
            r,
            z_lo: domain.z_lo,
            z_hi: domain.z_hi,
        }))
}

#[derive(Debug, Serialize)]
struct ClassDiagnostics {
    parity: Parity,
    rungs: usize,
    drifts: Vec<DriftEstimate>,
    repaired: Vec<f64>,
    diagnostics: LadderDiagnostics,
}

#[derive(Debug, Serialize)]
struct DiagnosticsReport {
    epsilon: f64,
    c2: f64,
    classes: Vec<ClassDiagnostics>,
}

pub fn ladder(cfg: &RunConfig, run: &mut RunDir, t: Option<i64>, r: i64) -> CliResult<bool> {
    let params = cfg.params()?;
    let engine = cfg.require_engine()?;
    let domain = make_domain(&params, cfg.c)?;
    let y = build_string(&params, run.seed("ladder-y")).symbols();
    let t = match t {
        Some(t) => t,
        None => central_t(&params, r, &domain)?,
    };
    let ladder = build_ladder(&params, t, r, &y, &domain, run.seed("ladder"), engine)?;
    run.write_csv("ladder.csv", |buf| Ok(ladder.write_csv(buf)?))?;
    run.write_json("ladder.json", &ladder.manifest())?;
    run.write_json("slope_event.json", &slope_event_check(&ladder, cfg.epsilon, cfg.c2)?)?;

    let mut classes = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let label = match parity {
            Parity::Even => "ladder-drift-even",
            Parity::Odd => "ladder-drift-odd",
        };
        let drifts = ladder_drifts(&ladder, parity, &y, cfg.cap, cfg.k, run.seed(label))?;
        let repaired = repair_ladder(&ladder, parity, &drifts, cfg.epsilon)?;
        let means: Vec<f64> = drifts.iter().map(|d| d.mean).collect();
        let diagnostics = martingale_diagnostics(&repaired, cfg.epsilon, cfg.c2, params.n(), Some(&means))?;
        classes.push(ClassDiagnostics {
            parity,
            rungs: ladder.class(parity).len(),
            drifts,
            repaired,
            diagnostics,
        });
    }
    run.write_json(
        "diagnostics.json",
        &DiagnosticsReport {
            epsilon: cfg.epsilon,
            c2: cfg.c2,
            classes,
        },
    )?;
    Ok(true)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ScanFit {
    l: usize,
    reps: usize,
    ns: Vec<usize>,
    var_l: Option<blocklcs::analysis::LinearFit>,
    var_z: blocklcs::analysis::LinearFit,
}

pub fn scan(cfg: &RunConfig, run: &mut RunDir, ns: &[usize]) -> CliResult<bool> {
    if ns.is_empty() {
        return Err(CliError::Config("scan needs at least one n".into()));
    }
    let table = variance_scan(cfg.l, ns, cfg.reps, run.seed("scan"), cfg.engine.engine())?;
    run.write_csv("scan.csv", |buf| Ok(table.write_csv(buf)?))?;
    run.write_json(
        "scan_fit.json",
        &ScanFit {
            l: cfg.l,
            reps: cfg.reps,
            ns: ns.to_vec(),
            var_l: table.fit_var_l(),
            var_z: table.fit_var_z(),
        },
    )?;
    Ok(true)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct CalibrationReport {
    l: usize,
    n: usize,
    target: f64,
    c: f64,
    coverage: f64,
    reps: usize,
    domain: DomainD,
    /// coverage at `c` on an independent sample of the same size
    fresh_coverage: f64,
    /// coverage at `c` on an independent sample ten times larger
    recheck_coverage: f64,
    recheck_reps: usize,
    /// `|recheck - coverage|` in units of the first estimate's standard error
    recheck_sigmas: f64,
}

pub fn calibrate_domain(cfg: &RunConfig, run: &mut RunDir, target: f64) -> CliResult<bool> {
    let params = cfg.params()?;
    let cal = calibrate_c(&params, target, cfg.reps, run.seed("calibrate"))?;
    let domain = make_domain(&params, cal.c)?;
    let fresh = coverage(&params, &domain, cfg.reps, run.seed("calibrate-fresh"));
    let recheck_reps = 10 * cfg.reps;
    let recheck = coverage(&params, &domain, recheck_reps, run.seed("calibrate-recheck"));
    let se = (cal.coverage * (1.0 - cal.coverage) / cfg.reps as f64).sqrt();
    let recheck_sigmas = if se > 0.0 {
        (recheck - cal.coverage).abs() / se
    } else if recheck == cal.coverage {
        0.0
    } else {
        f64::INFINITY
    };
    run.write_csv("calibration.csv", |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["c", "coverage"])?;
        for (c, cov) in &cal.grid {
            w.write_record([c.to_string(), cov.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    run.write_json(
        "calibration.json",
        &CalibrationReport {
            l: cfg.l,
            n: cfg.n,
            target,
            c: cal.c,
            coverage: cal.coverage,
            reps: cfg.reps,
            domain,
            fresh_coverage: fresh,
            recheck_coverage: recheck,
            recheck_reps,
            recheck_sigmas,
        },
    )?;
    Ok(fresh >= target)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub t_lo: i64,
    pub t_hi: i64,
    pub z_lo: i64,
    pub z_hi: i64,
    pub admissible: usize,
    pub min_np: f64,
    pub min_t: i64,
    pub min_z: i64,
    pub min_r: i64,
    pub k_hat: f64,
    pub k_hat_t: i64,
    pub k_hat_z: i64,
    pub k_hat_r: i64,
}

#[derive(Debug, Serialize)]
struct ExactReport {
    l: usize,
    c: f64,
    rows: Vec<ReportRow>,
    /// largest over smallest across the grid
    min_np_spread: f64,
    k_hat_spread: f64,
    min_np_limit: f64,
    k_hat_limit: f64,
}

pub const MIN_NP_SPREAD_LIMIT: f64 = 10.0;
pub const K_HAT_SPREAD_LIMIT: f64 = 4.0;

fn spread(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.fold(f64::INFINITY, f64::min);
    hi / lo
}

fn report_row(l: usize, n: usize, c: f64) -> CliResult<ReportRow> {
    let params = ModelParams::new(l, n)?;
    let d = make_domain(&params, c)?;
    let m = min_prob_over_d(&params, &d)?;
    let k = ratio_check(&params, &d)?;
    let TzrStats { t: min_t, z: min_z, r: min_r } = m.at;
    let TzrStats { t: k_hat_t, z: k_hat_z, r: k_hat_r } = k.at;
    Ok(ReportRow {
        n,
        t_lo: d.t_lo,
        t_hi: d.t_hi,
        z_lo: d.z_lo,
        z_hi: d.z_hi,
        admissible: m.admissible,
        min_np: m.value,
        min_t,
        min_z,
        min_r,
        k_hat: k.value,
        k_hat_t,
        k_hat_z,
        k_hat_r,
    })
}

pub fn report(cfg: &RunConfig, run: &mut RunDir, ns: &[usize]) -> CliResult<bool> {
    if ns.is_empty() {
        return Err(CliError::Config("report needs at least one n".into()));
    }
    let rows = ns
        .iter()
        .map(|&n| report_row(cfg.l, n, cfg.c))
        .collect::<CliResult<Vec<_>>>()?;
    run.write_csv("report.csv", |buf| {
        let mut w = csv_writer(buf);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    })?;
    let min_np_spread = spread(rows.iter().map(|r| r.min_np));
    let k_hat_spread = spread(rows.iter().map(|r| r.k_hat));
    let passed = rows.iter().all(|r| r.min_np > 0.0 && r.k_hat.is_finite())
        && min_np_spread <= MIN_NP_SPREAD_LIMIT
        && k_hat_spread <= K_HAT_SPREAD_LIMIT;
    run.write_json(
        "report.json",
        &ExactReport {
            l: cfg.l,
            c: cfg.c,
            rows,
            min_np_spread,
            k_hat_spread,
            min_np_limit: MIN_NP_SPREAD_LIMIT,
            k_hat_limit: K_HAT_SPREAD_LIMIT,
        },
    )?;
    Ok(passed)
}

// ---------------------------------------------------------------------------

pub fn lcs(cfg: &RunConfig, run: &mut RunDir, input: &Path) -> CliResult<bool> {
    let engine = cfg.require_engine()?;
    let pairs = read_pairs_csv(BufReader::new(File::open(input)?))?;
    let values = lcs_len_batch(&pairs, engine)
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CliError::Config(format!("pair {i}: {e}"))))
        .collect::<CliResult<Vec<_>>>()?;
    run.write_csv("lcs.csv", |buf| Ok(write_lcs_csv(buf, &values)?))?;
    Ok(true)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct SuiteVerdict {
    suite: &'static str,
    passed: bool,
}

/// `n` used by the multinomial suite: at most `4 l`, so the conditional
/// supports stay small enough for a chi-square test.
pub fn multinomial_n(cfg: &RunConfig) -> usize {
    cfg.n.min(4 * cfg.l)
}

fn verify_one(cfg: &RunConfig, run: &mut RunDir, suite: Suite) -> CliResult<bool> {
    let file = format!("verify_{}.json", suite.name().replace('-', "_"));
    let label = format!("verify-{}", suite.name());
    let seed = run.seed(&label);
    let passed = match suite {
        Suite::Possz => {
            let rep = verify::possz(cfg.l, 0, 6, cfg.xi_cap.into())?;
            run.write_json(&file, &rep)?;
            rep.passed
        }
        Suite::LinearSystem => {
            let mut ls = vec![3, 5, 10, cfg.l];
            ls.sort_unstable();
            ls.dedup();
            let rep = verify::linear_system(&ls, 50)?;
            run.write_json(&file, &rep)?;
            rep.passed
        }
        Suite::Multinomial => {
            let rep = verify::multinomial(cfg.l, multinomial_n(cfg), seed)?;
            run.write_json(&file, &rep)?;
            rep.passed
        }
        Suite::Engines => {
            let rep = verify::engines(cfg.reps, seed)?;
            run.write_json(&file, &rep)?;
            rep.passed
        }
        Suite::Bonetto => {
            let rep = verify::bonetto(seed)?;
            run.write_json(&file, &rep)?;
            rep.passed
        }
        Suite::Hoeffding => {
            let rep = verify::hoeffding(cfg.reps, seed)?;
            run.write_json(&file, &rep)?;
            rep.passed
        }
        Suite::All => unreachable!("expanded by the caller"),
    };
    Ok(passed)
}

pub fn verify(cfg: &RunConfig, run: &mut RunDir, suite: Suite) -> CliResult<bool> {
    let suites: Vec<Suite> = match suite {
        Suite::All => Suite::EACH.to_vec(),
        one => vec![one],
    };
    let mut verdicts = Vec::new();
    for s in suites {
        let passed = verify_one(cfg, run, s)?;
        verdicts.push(SuiteVerdict {
            suite: s.name(),
            passed,
        });
    }
    let all = verdicts.iter().all(|v| v.passed);
    if suite == Suite::All {
        run.write_json("verify_summary.json", &verdicts)?;
    }
    Ok(all)
}
