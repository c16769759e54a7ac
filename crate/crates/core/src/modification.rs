//! Random block modifications and the conditional LCS drift they induce.
//!
//! The *tilde* modification picks one block of length `l-1` and one block of
//! length `l+1`, each uniformly among its class, and sets both to length `l`.
//! It keeps `T`, `R` and the string length, and raises `Z` by 4. The
//! *half-step* changes a single block to length `l` and raises `Z` by 2; since
//! that changes the covered length by one symbol, the difference is absorbed
//! by the rest segment.

use num_rational::Ratio;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_model::{BlockClass, BlockString, ModelParams};
use crate::error::{Error, Result};
use crate::lcs::{Engine, LcsTarget};
use crate::seed::{self, RandomSeed};

/// Default cap on `n1 * n3` for [`drift_exact`].
pub const DEFAULT_DRIFT_CAP: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModificationKind {
    Tilde,
    Half,
}

/// Which blocks a modification touched (block indices in the input string).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Choice {
    pub kind: ModificationKind,
    pub chosen_short_index: Option<usize>,
    pub chosen_long_index: Option<usize>,
}

/// One entry of a modification trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub kind: ModificationKind,
    pub chosen_short_index: Option<usize>,
    pub chosen_long_index: Option<usize>,
}

impl TraceStep {
    pub fn new(step: usize, choice: Choice) -> Self {
        Self {
            step,
            kind: choice.kind,
            chosen_short_index: choice.chosen_short_index,
            chosen_long_index: choice.chosen_long_index,
        }
    }
}

/// Conditional expectation `E[L~ - L | X, Y]`, exact or Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// `n1 * n3`, the number of equally likely outcomes
    pub outcomes: u64,
    pub exact: bool,
}

fn classes(params: &ModelParams, s: &BlockString) -> (Vec<usize>, Vec<usize>) {
    (
        s.indices_of(params, BlockClass::Short),
        s.indices_of(params, BlockClass::Long),
    )
}

fn modifiable(params: &ModelParams, s: &BlockString) -> Result<(Vec<usize>, Vec<usize>)> {
    let (short, long) = classes(params, s);
    if short.is_empty() || long.is_empty() {
        return Err(Error::NoModifiableBlocks {
            n1: short.len(),
            n3: long.len(),
        });
    }
    Ok((short, long))
}

/// Tilde modification at the given block indices.
pub fn tilde_at(params: &ModelParams, s: &BlockString, short: usize, long: usize) -> Result<BlockString> {
    let class = |i: usize| s.blocks().get(i).and_then(|&b| params.classify(b));
    if class(short) != Some(BlockClass::Short) || class(long) != Some(BlockClass::Long) {
        return Err(Error::InvalidArgument(format!(
            "blocks {short} and {long} are not a (l-1, l+1) pair"
        )));
    }
    let mut out = s.clone();
    out.blocks_mut()[short] = params.l();
    out.blocks_mut()[long] = params.l();
    Ok(out)
}

/// Tilde modification with uniformly random choices.
pub fn tilde(params: &ModelParams, s: &BlockString, seed: RandomSeed) -> Result<(BlockString, Choice)> {
    let (short, long) = modifiable(params, s)?;
    let mut rng = seed::rng(seed);
    let i = short[rng.gen_range(0..short.len())];
    let j = long[rng.gen_range(0..long.len())];
    let choice = Choice {
        kind: ModificationKind::Tilde,
        chosen_short_index: Some(i),
        chosen_long_index: Some(j),
    };
    Ok((tilde_at(params, s, i, j)?, choice))
}

/// All `n1 * n3` tilde outcomes, each with probability `1 / (n1 * n3)`.
pub fn tilde_enumerate(params: &ModelParams, s: &BlockString) -> Result<Vec<(BlockString, Ratio<u64>)>> {
    let (short, long) = modifiable(params, s)?;
    let p = Ratio::new(1, (short.len() * long.len()) as u64);
    let mut out = Vec::with_capacity(short.len() * long.len());
    for &i in &short {
        for &j in &long {
            out.push((tilde_at(params, s, i, j)?, p));
        }
    }
    Ok(out)
}

/// Half-step at a single block, with the length change absorbed by the rest:
/// `l-1 -> l` shortens the rest by one, `l+1 -> l` lengthens it by one.
pub fn half_tilde_at(params: &ModelParams, s: &BlockString, index: usize) -> Result<BlockString> {
    let class = s.blocks().get(index).and_then(|&b| params.classify(b));
    let rest = s.rest();
    let new_rest = match class {
        Some(BlockClass::Short) if rest >= 1 => rest - 1,
        Some(BlockClass::Long) if rest < params.l() => rest + 1,
        Some(BlockClass::Short | BlockClass::Long) => {
            return Err(Error::InvalidArgument(format!(
                "rest {rest} cannot absorb a change at block {index}"
            )))
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "block {index} has no length l-1 or l+1"
            )))
        }
    };
    let mut out = s.clone();
    out.blocks_mut()[index] = params.l();
    out.set_rest(new_rest);
    Ok(out)
}

/// Half-step with random choices: a side (`l-1` or `l+1`) with equal
/// probability, then a block uniformly within it.
///
/// A side is usable when it has a block and the rest can absorb its length
/// change (the `l-1` side needs a non-empty rest, the `l+1` side a rest
/// shorter than `l`). If only one side is usable it is taken with probability
/// one; if neither is, the step fails with [`Error::NoModifiableBlocks`].
pub fn half_tilde(params: &ModelParams, s: &BlockString, seed: RandomSeed) -> Result<(BlockString, Choice)> {
    let (short, long) = classes(params, s);
    let short_ok = !short.is_empty() && s.rest() >= 1;
    let long_ok = !long.is_empty() && s.rest() < params.l();
    let mut rng = seed::rng(seed);
    let take_short = match (short_ok, long_ok) {
        (true, true) => rng.gen_bool(0.5),
        (true, false) => true,
        (false, true) => false,
        (false, false) => {
            return Err(Error::NoModifiableBlocks {
                n1: short.len(),
                n3: long.len(),
            })
        }
    };
    let pool = if take_short { &short } else { &long };
    let index = pool[rng.gen_range(0..pool.len())];
    let choice = Choice {
        kind: ModificationKind::Half,
        chosen_short_index: take_short.then_some(index),
        chosen_long_index: (!take_short).then_some(index),
    };
    Ok((half_tilde_at(params, s, index)?, choice))
}

/// Exact drift: the average LCS change over all `n1 * n3` tilde outcomes.
pub fn drift_exact(
    params: &ModelParams,
    s: &BlockString,
    y: &[u8],
    engine: Engine,
    cap: u64,
) -> Result<DriftEstimate> {
    let (short, long) = modifiable(params, s)?;
    let outcomes = (short.len() * long.len()) as u64;
    if outcomes > cap {
        return Err(Error::TooLarge {
            size: outcomes.into(),
            cap: cap.into(),
        });
    }
    let target = LcsTarget::new(y, engine)?;
    let base = target.lcs(&s.symbols())? as i64;
    let pairs: Vec<(usize, usize)> = short
        .iter()
        .flat_map(|&i| long.iter().map(move |&j| (i, j)))
        .collect();
    let total: i64 = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<i64> {
            let x = tilde_at(params, s, i, j)?;
            Ok(target.lcs(&x.symbols())? as i64 - base)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(DriftEstimate {
        mean: total as f64 / outcomes as f64,
        stderr: 0.0,
        outcomes,
        exact: true,
    })
}

/// Monte Carlo drift over `k >= 2` independent tilde draws; `stderr` uses the
/// unbiased sample variance.
pub fn drift_sampled(
    params: &ModelParams,
    s: &BlockString,
    y: &[u8],
    k: usize,
    seed: RandomSeed,
    engine: Engine,
) -> Result<DriftEstimate> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} draws, need at least 2")));
    }
    let (short, long) = modifiable(params, s)?;
    let target = LcsTarget::new(y, engine)?;
    let base = target.lcs(&s.symbols())? as i64;
    let mut rng = seed::rng(seed);
    let draws: Vec<(usize, usize)> = (0..k)
        .map(|_| {
            (
                short[rng.gen_range(0..short.len())],
                long[rng.gen_range(0..long.len())],
            )
        })
        .collect();
    let diffs = draws
        .par_iter()
        .map(|&(i, j)| -> Result<i64> {
            let x = tilde_at(params, s, i, j)?;
            Ok(target.lcs(&x.symbols())? as i64 - base)
        })
        .collect::<Result<Vec<_>>>()?;
    let sum: i64 = diffs.iter().sum();
    let sum_sq: i64 = diffs.iter().map(|d| d * d).sum();
    let kf = k as f64;
    let mean = sum as f64 / kf;
    // integer sums keep the variance exact up to the final division
    let var = ((sum_sq as f64) - (sum as f64) * (sum as f64) / kf) / (kf - 1.0);
    Ok(DriftEstimate {
        mean,
        stderr: (var.max(0.0) / kf).sqrt(),
        outcomes: (short.len() * long.len()) as u64,
        exact: false,
    })
}
