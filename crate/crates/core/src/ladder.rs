//! Coupled family of conditioned strings over the `z` grid.
//!
//! For fixed `(t, r)` the ladder starts from a string drawn uniformly among
//! those with statistics `(t, z0, r)`, `z0` the leftmost admissible value in
//! `D_Z`, and climbs by repeated tilde modifications (`z0, z0+4, ...`). The
//! odd sub-ladder starts with a half-step from the `z0` string
//! (`z0+2, z0+6, ...`). Every rung is scored against one fixed `y`.
//!
//! A half-step moves one symbol between the blocks and the rest, so the odd
//! rungs carry rest `r - 1` or `r + 1`; each rung records its own rest.

use std::io;

use serde::{Deserialize, Serialize};

use crate::analysis::bounds::azuma_bound;
use crate::analysis::domain::DomainD;
use crate::block_model::{counts_from_tzr, sample_conditional, BlockString, ModelParams, TzrStats};
use crate::error::{Error, Result};
use crate::lcs::{Engine, LcsTarget};
use crate::modification::{
    drift_exact, drift_sampled, half_tilde, tilde, DriftEstimate, TraceStep,
};
use crate::seed::{derive_seed, RandomSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// the next rung would leave `D_Z`
    DomainExit,
    /// no block pair left to modify
    NoModifiableBlocks,
    /// the odd sub-ladder could not be started
    NotSeeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub z: i64,
    pub r: i64,
    pub parity: Parity,
    pub lcs: usize,
    pub string: BlockString,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubLadder {
    pub termination: Termination,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcsLadder {
    pub params: ModelParams,
    pub t: i64,
    pub r: i64,
    pub seed: RandomSeed,
    pub engine: Engine,
    /// sorted by `z`
    pub rungs: Vec<Rung>,
    pub even: SubLadder,
    pub odd: SubLadder,
}

/// JSON companion of the ladder CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderManifest {
    pub seed: RandomSeed,
    pub l: usize,
    pub n: usize,
    pub t: i64,
    pub r: i64,
    pub engine: Engine,
    pub rungs: usize,
    pub even_termination: Termination,
    pub odd_termination: Termination,
    pub even_trace: Vec<TraceStep>,
    pub odd_trace: Vec<TraceStep>,
}

#[derive(Serialize)]
struct LadderRow {
    t: i64,
    r: i64,
    z: i64,
    lcs: usize,
    parity: Parity,
}

impl LcsLadder {
    pub fn z_values(&self) -> Vec<i64> {
        self.rungs.iter().map(|r| r.z).collect()
    }

    pub fn lcs_values(&self) -> Vec<usize> {
        self.rungs.iter().map(|r| r.lcs).collect()
    }

    pub fn class(&self, parity: Parity) -> Vec<&Rung> {
        self.rungs.iter().filter(|r| r.parity == parity).collect()
    }

    pub fn manifest(&self) -> LadderManifest {
        LadderManifest {
            seed: self.seed,
            l: self.params.l(),
            n: self.params.n(),
            t: self.t,
            r: self.r,
            engine: self.engine,
            rungs: self.rungs.len(),
            even_termination: self.even.termination,
            odd_termination: self.odd.termination,
            even_trace: self.even.trace.clone(),
            odd_trace: self.odd.trace.clone(),
        }
    }

    /// CSV `t,r,z,lcs,parity`, one row per rung; `r` is the rung's own rest.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> io::Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for rung in &self.rungs {
            wtr.serialize(LadderRow {
                t: self.t,
                r: rung.r,
                z: rung.z,
                lcs: rung.lcs,
                parity: rung.parity,
            })?;
        }
        wtr.flush()
    }
}

/// Smallest `z` in `D_Z` with valid block counts for `(t, z, r)`.
pub fn leftmost_z(params: &ModelParams, t: i64, r: i64, domain: &DomainD) -> Option<i64> {
    (domain.z_lo..=domain.z_hi).find(|&z| counts_from_tzr(params, TzrStats::new(t, z, r)).is_ok())
}

#[allow(clippy::too_many_arguments)]
fn climb(
    params: &ModelParams,
    start: BlockString,
    z_start: i64,
    r: i64,
    parity: Parity,
    z_hi: i64,
    target: &LcsTarget<'_>,
    seed: RandomSeed,
    label: &str,
    trace: &mut Vec<TraceStep>,
    rungs: &mut Vec<Rung>,
) -> Result<Termination> {
    let mut cur = start;
    let mut z = z_start;
    let mut step = trace.len();
    loop {
        rungs.push(Rung {
            z,
            r,
            parity,
            lcs: target.lcs(&cur.symbols())?,
            string: cur.clone(),
        });
        if z + 4 > z_hi {
            return Ok(Termination::DomainExit);
        }
        match tilde(params, &cur, derive_seed(seed, label, step as u64)) {
            Ok((next, choice)) => {
                trace.push(TraceStep::new(step, choice));
                step += 1;
                cur = next;
                z += 4;
            }
            Err(Error::NoModifiableBlocks { .. }) => return Ok(Termination::NoModifiableBlocks),
            Err(e) => return Err(e),
        }
    }
}

/// Builds both sub-ladders for `(t, r)` against the fixed string `y`.
pub fn build_ladder(
    params: &ModelParams,
    t: i64,
    r: i64,
    y: &[u8],
    domain: &DomainD,
    seed: RandomSeed,
    engine: Engine,
) -> Result<LcsLadder> {
    if y.len() != params.n() {
        return Err(Error::InvalidArgument(format!(
            "y has length {}, expected n = {}",
            y.len(),
            params.n()
        )));
    }
    let z0 = leftmost_z(params, t, r, domain).ok_or(Error::NoAdmissibleZ {
        t,
        r,
        z_lo: domain.z_lo,
        z_hi: domain.z_hi,
    })?;
    let target = LcsTarget::new(y, engine)?;
    let start = sample_conditional(params, TzrStats::new(t, z0, r), derive_seed(seed, "ladder-start", 0))?;

    let mut rungs = Vec::new();
    let mut even_trace = Vec::new();
    let even_end = climb(
        params,
        start.clone(),
        z0,
        r,
        Parity::Even,
        domain.z_hi,
        &target,
        seed,
        "ladder-even",
        &mut even_trace,
        &mut rungs,
    )?;

    let mut odd_trace = Vec::new();
    let odd_end = if z0 + 2 > domain.z_hi {
        Termination::NotSeeded
    } else {
        match half_tilde(params, &start, derive_seed(seed, "ladder-half", 0)) {
            Ok((seeded, choice)) => {
                odd_trace.push(TraceStep::new(0, choice));
                let r_odd = seeded.rest() as i64;
                climb(
                    params,
                    seeded,
                    z0 + 2,
                    r_odd,
                    Parity::Odd,
                    domain.z_hi,
                    &target,
                    seed,
                    "ladder-odd",
                    &mut odd_trace,
                    &mut rungs,
                )?
            }
            Err(Error::NoModifiableBlocks { .. }) => Termination::NotSeeded,
            Err(e) => return Err(e),
        }
    };

    rungs.sort_by_key(|r| r.z);
    Ok(LcsLadder {
        params: *params,
        t,
        r,
        seed,
        engine,
        rungs,
        even: SubLadder {
            termination: even_end,
            trace: even_trace,
        },
        odd: SubLadder {
            termination: odd_end,
            trace: odd_trace,
        },
    })
}

/// Outcome of checking that `z -> L(z)` climbs with slope `epsilon / 8` on
/// every window of width at least `c2 ln(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEvent {
    pub epsilon: f64,
    pub c2: f64,
    /// `c2 ln(n)`
    pub window: f64,
    pub holds: bool,
    pub violating_pair: Option<(i64, i64)>,
}

/// Checks every ordered pair `z1 < z2` with `z2 - z1 >= c2 ln(n)`; the first
/// violation in `(z1, z2)` order is reported.
pub fn slope_event(z: &[i64], values: &[f64], n: usize, epsilon: f64, c2: f64) -> Result<SlopeEvent> {
    if z.len() != values.len() {
        return Err(Error::MisalignedInput {
            expected: format!("{} values", z.len()),
            got: values.len(),
        });
    }
    if !(epsilon > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidArgument("epsilon and c2 must be positive".into()));
    }
    let window = c2 * (n as f64).ln();
    for i in 0..z.len() {
        for j in 0..z.len() {
            let gap = z[j] - z[i];
            if gap <= 0 || (gap as f64) < window {
                continue;
            }
            if values[j] - values[i] < epsilon / 8.0 * gap as f64 {
                return Ok(SlopeEvent {
                    epsilon,
                    c2,
                    window,
                    holds: false,
                    violating_pair: Some((z[i], z[j])),
                });
            }
        }
    }
    Ok(SlopeEvent {
        epsilon,
        c2,
        window,
        holds: true,
        violating_pair: None,
    })
}

pub fn slope_event_check(ladder: &LcsLadder, epsilon: f64, c2: f64) -> Result<SlopeEvent> {
    let values: Vec<f64> = ladder.rungs.iter().map(|r| r.lcs as f64).collect();
    slope_event(&ladder.z_values(), &values, ladder.params.n(), epsilon, c2)
}

/// Repaired process: `L*` follows `L` while every drift so far is at least
/// `epsilon`; from the first failure on it grows by exactly `epsilon` per step.
///
/// `drifts[i]` is the drift at rung `i`. Its length must be `values.len()` or
/// `values.len() - 1` (the last rung's drift points beyond the ladder). No
/// drifts at all means nothing was observed to fail, so `L* = L`.
pub fn repair_values(values: &[f64], drifts: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if drifts.is_empty() {
        return Ok(values.to_vec());
    }
    let aligned = drifts.len() == values.len() || drifts.len() + 1 == values.len();
    if !aligned {
        return Err(Error::MisalignedInput {
            expected: format!("{} or {} drifts", values.len().saturating_sub(1), values.len()),
            got: drifts.len(),
        });
    }
    let mut out = Vec::with_capacity(values.len());
    let mut intact = true;
    for (i, &v) in values.iter().enumerate() {
        if i == 0 {
            out.push(v);
            continue;
        }
        intact = intact && drifts[i - 1] >= epsilon;
        out.push(if intact { v } else { out[i - 1] + epsilon });
    }
    Ok(out)
}

pub fn repair_ladder(
    ladder: &LcsLadder,
    parity: Parity,
    drifts: &[DriftEstimate],
    epsilon: f64,
) -> Result<Vec<f64>> {
    let values: Vec<f64> = ladder.class(parity).iter().map(|r| r.lcs as f64).collect();
    let means: Vec<f64> = drifts.iter().map(|d| d.mean).collect();
    repair_values(&values, &means, epsilon)
}

/// Drift at every rung of one parity class: exact when `n1 * n3 <= cap`,
/// otherwise `k` sampled draws. Stops at a rung without modifiable blocks.
pub fn ladder_drifts(
    ladder: &LcsLadder,
    parity: Parity,
    y: &[u8],
    cap: u64,
    k: usize,
    seed: RandomSeed,
) -> Result<Vec<DriftEstimate>> {
    let params = &ladder.params;
    let mut out = Vec::new();
    for (i, rung) in ladder.class(parity).into_iter().enumerate() {
        let est = match drift_exact(params, &rung.string, y, ladder.engine, cap) {
            Err(Error::TooLarge { .. }) => drift_sampled(
                params,
                &rung.string,
                y,
                k,
                derive_seed(seed, "ladder-drift", i as u64),
                ladder.engine,
            ),
            other => other,
        };
        match est {
            Ok(d) => out.push(d),
            Err(Error::NoModifiableBlocks { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderDiagnostics {
    /// conditional increment per +4 step
    pub e_values: Vec<f64>,
    /// `L*(i+1) - L*(i) - e_i`
    pub martingale_residuals: Vec<f64>,
    /// `M_0 = L*(0)`, `M_{i+1} = M_i + residual_i`
    pub martingale_path: Vec<f64>,
    /// `z2 - z1 = 4m` of the checked window
    pub window: i64,
    /// `2 exp(-(eps^2/32)(z2 - z1))`, from increments bounded by 1
    pub azuma_bound: f64,
    /// the same tail with increments bounded by 2
    pub azuma_bound_lipschitz2: f64,
    /// `eps^2 c2 / 32`
    pub tau: f64,
    /// `2 n^-tau`
    pub window_bound: f64,
    pub max_abs_increment: f64,
}

/// Martingale decomposition of a repaired sequence (one parity class, so
/// consecutive values are `+4` apart in `z`).
///
/// With `drift_means`, `e_i` is the drift while the process is unrepaired and
/// `epsilon` afterwards; without, every `e_i` is the average increment.
pub fn martingale_diagnostics(
    repaired: &[f64],
    epsilon: f64,
    c2: f64,
    n: usize,
    drift_means: Option<&[f64]>,
) -> Result<LadderDiagnostics> {
    let m = repaired.len().saturating_sub(1);
    let increments: Vec<f64> = repaired.windows(2).map(|w| w[1] - w[0]).collect();
    let e_values: Vec<f64> = match drift_means {
        Some(d) => {
            if d.len() < m {
                return Err(Error::MisalignedInput {
                    expected: format!("at least {m} drifts"),
                    got: d.len(),
                });
            }
            let mut intact = true;
            d[..m]
                .iter()
                .map(|&e| {
                    intact = intact && e >= epsilon;
                    if intact {
                        e
                    } else {
                        epsilon
                    }
                })
                .collect()
        }
        None if m > 0 => vec![increments.iter().sum::<f64>() / m as f64; m],
        None => Vec::new(),
    };
    let residuals: Vec<f64> = increments.iter().zip(&e_values).map(|(d, e)| d - e).collect();
    let mut path = Vec::with_capacity(repaired.len());
    if let Some(&first) = repaired.first() {
        path.push(first);
        for r in &residuals {
            path.push(path.last().expect("non-empty") + r);
        }
    }
    let window = 4 * m as i64;
    let v = epsilon / 8.0 * window as f64;
    let tau = epsilon * epsilon * c2 / 32.0;
    let (azuma, azuma2) = if m == 0 {
        (2.0, 2.0)
    } else {
        (azuma_bound(v, &vec![1.0; m]), azuma_bound(v, &vec![2.0; m]))
    };
    Ok(LadderDiagnostics {
        e_values,
        martingale_residuals: residuals,
        martingale_path: path,
        window,
        azuma_bound: azuma,
        azuma_bound_lipschitz2: azuma2,
        tau,
        window_bound: 2.0 * (n as f64).powf(-tau),
        max_abs_increment: increments.iter().fold(0.0, |a, d| a.max(d.abs())),
    })
}
