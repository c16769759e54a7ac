//! Small statistics helpers shared by the scans and the test suites.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and unbiased sample variance. The variance is `NaN` for fewer
/// than two values.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (k - 1.0))
}

/// Two-sided chi-square confidence interval for a variance estimated from
/// `k` normal samples. Heuristic for non-normal data.
pub fn variance_ci(var: f64, k: usize, level: f64) -> (f64, f64) {
    let df = (k - 1) as f64;
    let chi = ChiSquared::new(df).expect("df > 0");
    let alpha = 1.0 - level;
    let hi_q = chi.inverse_cdf(1.0 - alpha / 2.0);
    let lo_q = chi.inverse_cdf(alpha / 2.0);
    (df * var / hi_q, df * var / lo_q)
}

/// Upper tail `P(X >= stat)` of a chi-square law with `df` degrees of freedom.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("df > 0").sf(stat)
}

/// Pearson statistic and p-value of observed counts against expected counts.
/// Cells with expected count below `min_expected` are pooled into one cell.
pub fn chi_square_test(observed: &[u64], expected: &[f64], min_expected: f64) -> (f64, f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < min_expected {
            pool_o += o as f64;
            pool_e += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pool_e > 0.0 {
        if pool_e >= min_expected || cells.is_empty() {
            cells.push((pool_o, pool_e));
        } else {
            // too small on its own: fold into the smallest regular cell
            let idx = (0..cells.len())
                .min_by(|&a, &b| cells[a].1.total_cmp(&cells[b].1))
                .expect("non-empty");
            cells[idx].0 += pool_o;
            cells[idx].1 += pool_e;
        }
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len().saturating_sub(1);
    let p = if df == 0 { 1.0 } else { chi_square_sf(stat, df as f64) };
    (stat, p, df)
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit {
        slope,
        intercept,
        r2,
    }
}

/// `(Var[Y], E[Var[Y | G]])` for a sample split by a boolean label, with
/// group weights equal to the empirical frequencies.
pub fn total_variance_split(values: &[f64], labels: &[bool]) -> (f64, f64) {
    assert_eq!(values.len(), labels.len());
    let (_, total) = mean_var(values);
    let k = values.len() as f64;
    let mut expected_conditional = 0.0;
    for flag in [false, true] {
        let group: Vec<f64> = values
            .iter()
            .zip(labels)
            .filter(|(_, &g)| g == flag)
            .map(|(v, _)| *v)
            .collect();
        if group.len() >= 2 {
            let (_, var) = mean_var(&group);
            expected_conditional += var * group.len() as f64 / k;
        }
    }
    (total, expected_conditional)
}
