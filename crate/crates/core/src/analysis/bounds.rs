//! Concentration bounds and the variance inequality for slope maps.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::mean_var;
use crate::error::{Error, Result};
use crate::seed::{self, derive_seed, RandomSeed};

/// Azuma–Hoeffding tail for a martingale with increment bounds `a_i`:
/// `P(|V_n - V_0| >= v) <= 2 exp(-v^2 / (2 sum a_i^2))`.
pub fn azuma_bound(v: f64, increment_bounds: &[f64]) -> f64 {
    let s: f64 = increment_bounds.iter().map(|a| a * a).sum();
    2.0 * (-v * v / (2.0 * s)).exp()
}

/// Tail bound for the mean of `n` i.i.d. variables within `a` of their mean:
/// `P(|mean - E| >= delta) <= 2 exp(-(delta^2 / (2 a^2)) n)`.
pub fn hoeffding_bound(a: f64, delta: f64, n: usize) -> f64 {
    2.0 * (-(delta * delta) / (2.0 * a * a) * n as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub a: f64,
    pub delta: f64,
    pub n: usize,
    pub reps: usize,
    pub exceedances: usize,
    pub empirical: f64,
    pub bound: f64,
}

impl TailCheck {
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound
    }
}

/// Empirical `P(|mean - 0| >= delta)` for `n` fair `±a` variables over `reps`
/// runs, next to [`hoeffding_bound`].
pub fn hoeffding_tail_check(a: f64, delta: f64, n: usize, reps: usize, seed: RandomSeed) -> Result<TailCheck> {
    if a.is_nan() || a <= 0.0 || delta < 0.0 || n == 0 || reps == 0 {
        return Err(Error::InvalidArgument(format!(
            "need a > 0, delta >= 0, n > 0, reps > 0 (got {a}, {delta}, {n}, {reps})"
        )));
    }
    let threshold = delta * n as f64;
    let exceedances = (0..reps as u64)
        .into_par_iter()
        .filter(|&rep| {
            let mut rng = seed::rng(derive_seed(seed, "hoeffding", rep));
            let mut plus = 0u64;
            let mut left = n;
            while left > 0 {
                let take = left.min(64);
                let bits = rng.next_u64();
                let bits = if take == 64 { bits } else { bits & ((1u64 << take) - 1) };
                plus += u64::from(bits.count_ones());
                left -= take;
            }
            // |sum| = a |2 plus - n|; compare against delta n with a relative slack
            // for the rounding of delta * n
            let sum = a * (2.0 * plus as f64 - n as f64).abs();
            sum >= threshold * (1.0 - 1e-12)
        })
        .count();
    Ok(TailCheck {
        a,
        delta,
        n,
        reps,
        exceedances,
        empirical: exceedances as f64 / reps as f64,
        bound: hoeffding_bound(a, delta, n),
    })
}

/// Integer map on `[lo, lo + values.len())` with the constants of the slope
/// conditions:
///
/// - `z2 - z1 >= m` implies `f(z2) - f(z1) >= (epsilon / 8)(z2 - z1)`
/// - `0 < z2 - z1 < m` implies `f(z2) - f(z1) <= beta (z2 - z1)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeMapSpec {
    pub epsilon: f64,
    pub m: f64,
    pub beta: f64,
    pub lo: i64,
    pub values: Vec<i64>,
}

// slack for comparing integer differences against real multiples
const SLACK: f64 = 1e-9;

impl SlopeMapSpec {
    pub fn new(epsilon: f64, m: f64, beta: f64, lo: i64, values: Vec<i64>) -> Self {
        Self {
            epsilon,
            m,
            beta,
            lo,
            values,
        }
    }

    /// Builds the map by evaluating `f` on `[lo, hi]`.
    pub fn from_fn(epsilon: f64, m: f64, beta: f64, lo: i64, hi: i64, f: impl Fn(i64) -> i64) -> Self {
        Self::new(epsilon, m, beta, lo, (lo..=hi).map(f).collect())
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn eval(&self, z: i64) -> Option<i64> {
        let i = usize::try_from(z - self.lo).ok()?;
        self.values.get(i).copied()
    }

    /// Checks both slope conditions over every pair of the interval.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.m > 0.0 && self.beta > 0.0) {
            return Err(Error::SpecViolation(format!(
                "constants must be positive (epsilon {}, m {}, beta {})",
                self.epsilon, self.m, self.beta
            )));
        }
        let slope = self.epsilon / 8.0;
        let w = self.values.len();
        // smallest integer gap that counts as long
        let long_gap = self.m.ceil() as usize;
        // superlog: g(z) = f(z) - slope z must not decrease across a long gap
        let g: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &f)| f as f64 - slope * i as f64)
            .collect();
        let mut suffix_min = vec![f64::INFINITY; w + 1];
        for i in (0..w).rev() {
            suffix_min[i] = suffix_min[i + 1].min(g[i]);
        }
        for i in 0..w {
            let j = i + long_gap;
            if j >= w {
                break;
            }
            if suffix_min[j] < g[i] - SLACK * (1.0 + g[i].abs()) {
                let k = (j..w)
                    .min_by(|&a, &b| g[a].total_cmp(&g[b]))
                    .expect("non-empty");
                return Err(Error::SpecViolation(format!(
                    "f({}) - f({}) = {} < (epsilon/8) * {}",
                    self.lo + k as i64,
                    self.lo + i as i64,
                    self.values[k] - self.values[i],
                    k - i
                )));
            }
        }
        // sublog: every short gap
        for d in 1..long_gap.min(w) {
            for i in 0..w - d {
                let diff = (self.values[i + d] - self.values[i]) as f64;
                let cap = self.beta * d as f64;
                if diff > cap + SLACK * (1.0 + cap.abs()) {
                    return Err(Error::SpecViolation(format!(
                        "f({}) - f({}) = {diff} > beta * {d}",
                        self.lo + (i + d) as i64,
                        self.lo + i as i64,
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Right-hand side of the variance inequality:
/// `(eps^2/64) (1 - 16 (eps/8 + beta) m / (eps sqrt(var_b))) var_b`.
pub fn bonetto_rhs(epsilon: f64, beta: f64, m: f64, var_b: f64) -> f64 {
    let factor = 1.0 - 16.0 * (epsilon / 8.0 + beta) * m / (epsilon * var_b.sqrt());
    epsilon * epsilon / 64.0 * factor * var_b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonettoCheck {
    /// sample `Var[f(B)]`
    pub lhs: f64,
    pub rhs: f64,
    /// sample `Var[B]`
    pub var_b: f64,
    pub holds: bool,
}

/// Validates the map, then compares the sample `Var[f(B)]` with the bound
/// evaluated at the sample `Var[B]`.
pub fn check_bonetto_refined(spec: &SlopeMapSpec, b_samples: &[i64]) -> Result<BonettoCheck> {
    spec.validate()?;
    let fb = b_samples
        .iter()
        .map(|&b| {
            spec.eval(b).map(|v| v as f64).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "sample {b} outside the map's interval [{}, {}]",
                    spec.lo,
                    spec.hi()
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bs: Vec<f64> = b_samples.iter().map(|&b| b as f64).collect();
    let (_, var_b) = mean_var(&bs);
    if var_b.is_nan() || var_b <= 0.0 {
        return Err(Error::InvalidArgument("samples of B are degenerate".into()));
    }
    let (_, lhs) = mean_var(&fb);
    let rhs = bonetto_rhs(spec.epsilon, spec.beta, spec.m, var_b);
    Ok(BonettoCheck {
        lhs,
        rhs,
        var_b,
        holds: lhs >= rhs,
    })
}
