//! Variance scans of `L_n` and `Z` across string lengths.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, mean_var, variance_ci, LinearFit};
use crate::block_model::{build_string, compute_tzr, ModelParams};
use crate::error::{Error, Result};
use crate::lcs::{lcs_len, Engine};
use crate::seed::{derive_seed, RandomSeed};

/// Confidence level of the variance intervals.
pub const CI_LEVEL: f64 = 0.95;

/// One grid point of a scan. The `L` columns are empty when the scan ran
/// without an LCS engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n: usize,
    pub replicates: usize,
    pub mean_l: Option<f64>,
    pub var_l: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub mean_z: f64,
    pub var_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceTable {
    pub l: usize,
    pub rows: Vec<VarianceRow>,
}

impl VarianceTable {
    pub fn ns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.n as f64).collect()
    }

    pub fn fit_var_z(&self) -> LinearFit {
        let ys: Vec<f64> = self.rows.iter().map(|r| r.var_z).collect();
        linear_fit(&self.ns(), &ys)
    }

    pub fn fit_var_l(&self) -> Option<LinearFit> {
        let ys: Option<Vec<f64>> = self.rows.iter().map(|r| r.var_l).collect();
        ys.map(|ys| linear_fit(&self.ns(), &ys))
    }

    /// CSV with a header row and LF line endings.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> io::Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()
    }
}

/// Seeds of the `X` and `Y` strings of one scan replicate.
pub fn replicate_seeds(seed: RandomSeed, n: usize, rep: u64) -> (RandomSeed, RandomSeed) {
    let base = derive_seed(seed, "scan", n as u64);
    (derive_seed(base, "x", rep), derive_seed(base, "y", rep))
}

/// For each `n`, simulates `reps` independent `(X, Y)` pairs and reports the
/// sample moments of `L_n = |LCS(X, Y)|` (skipped when `engine` is `None`)
/// and of `Z` computed on `X`.
pub fn variance_scan(
    l: usize,
    ns: &[usize],
    reps: usize,
    seed: RandomSeed,
    engine: Option<Engine>,
) -> Result<VarianceTable> {
    if reps < 30 {
        return Err(Error::InvalidArgument(format!("reps = {reps}, need at least 30")));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let params = ModelParams::new(l, n)?;
        let samples = (0..reps as u64)
            .into_par_iter()
            .map(|rep| -> Result<(Option<f64>, f64)> {
                let (sx, sy) = replicate_seeds(seed, n, rep);
                let x = build_string(&params, sx);
                let z = compute_tzr(&params, &x).z as f64;
                let lv = match engine {
                    Some(engine) => {
                        let y = build_string(&params, sy);
                        Some(lcs_len(&x.symbols(), &y.symbols(), engine)? as f64)
                    }
                    None => None,
                };
                Ok((lv, z))
            })
            .collect::<Result<Vec<_>>>()?;
        let zs: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let (mean_z, var_z) = mean_var(&zs);
        let ls: Option<Vec<f64>> = samples.iter().map(|s| s.0).collect();
        let (mean_l, var_l, ci_low, ci_high) = match ls {
            Some(ls) => {
                let (m, v) = mean_var(&ls);
                let (lo, hi) = variance_ci(v, reps, CI_LEVEL);
                (Some(m), Some(v), Some(lo), Some(hi))
            }
            None => (None, None, None, None),
        };
        rows.push(VarianceRow {
            n,
            replicates: reps,
            mean_l,
            var_l,
            ci_low,
            ci_high,
            mean_z,
            var_z,
        });
    }
    Ok(VarianceTable { l, rows })
}
