//! Statistical tests for the verification harness.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use statrs::function::gamma::gamma_ur;

pub use treesub_core::stats::{log_log_fit, median, survival_counts};

/// Weighted least squares of `log(rate)` on `log(r)` over survival counts of
/// weighted samples. Requires `min_grid` usable grid points with at least
/// `min_exceed` exceedances each.
pub fn tail_regression(
    samples: &[f64],
    total_weight: f64,
    grid: &[f64],
    min_grid: usize,
    min_exceed: u64,
) -> Result<(f64, f64)> {
    if samples.is_empty() || total_weight <= 0.0 {
        bail!("no samples");
    }
    let counts = survival_counts(samples, grid);
    let pts: Vec<(f64, f64, f64)> = grid
        .iter()
        .zip(&counts)
        .filter(|&(_, &c)| c >= min_exceed)
        .map(|(&r, &c)| (r, c as f64 / total_weight, c as f64))
        .collect();
    if pts.len() < min_grid {
        bail!("only {} grid points with >= {min_exceed} exceedances", pts.len());
    }
    match log_log_fit(&pts) {
        Some((slope, _, stderr)) => Ok((slope, stderr)),
        None => bail!("degenerate tail regression input"),
    }
}

/// Two-sample chi-square homogeneity test over binned histograms.
/// Returns `(statistic, p_value)`. Bins whose pooled expected count falls
/// below 5 are merged into the last bin; fails on bin starvation.
pub fn two_sample_chi2(
    hist_a: &BTreeMap<u32, u64>,
    hist_b: &BTreeMap<u32, u64>,
    bins: &[(u32, u32)],
) -> Result<(f64, f64)> {
    let count_in = |h: &BTreeMap<u32, u64>, lo: u32, hi: u32| -> f64 {
        h.iter().filter(|&(&k, _)| k >= lo && k <= hi).map(|(_, &v)| v as f64).sum()
    };
    let mut a: Vec<f64> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for &(lo, hi) in bins {
        a.push(count_in(hist_a, lo, hi));
        b.push(count_in(hist_b, lo, hi));
    }
    let na: f64 = a.iter().sum();
    let nb: f64 = b.iter().sum();
    if na == 0.0 || nb == 0.0 {
        bail!("empty histogram");
    }
    // Merge sparse bins from the right.
    loop {
        let k = a.len();
        if k <= 2 {
            break;
        }
        let pooled = (a[k - 1] + b[k - 1]) * (na.min(nb)) / (na + nb);
        if pooled >= 5.0 {
            break;
        }
        a[k - 2] += a[k - 1];
        b[k - 2] += b[k - 1];
        a.pop();
        b.pop();
    }
    if a.len() < 2 {
        bail!("bin starvation");
    }
    for i in 0..a.len() {
        let pooled = (a[i] + b[i]) * (na.min(nb)) / (na + nb);
        if pooled < 5.0 {
            bail!("bin {i} starved (pooled expectation {pooled:.2})");
        }
    }
    let mut stat = 0.0;
    for i in 0..a.len() {
        let tot = a[i] + b[i];
        if tot == 0.0 {
            continue;
        }
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (a[i] - ea).powi(2) / ea + (b[i] - eb).powi(2) / eb;
    }
    let df = (a.len() - 1) as f64;
    let p = gamma_ur(df / 2.0, stat / 2.0);
    Ok((stat, p))
}

/// Index of dispersion (variance / mean) of counts pooled over conditioning
/// bins. Each bin must contain at least `min_per_bin` observations.
pub fn dispersion_index(
    values: &[(f64, u64)],
    bin_count: usize,
    min_per_bin: usize,
) -> Result<f64> {
    if values.len() < bin_count * min_per_bin {
        bail!("insufficient observations: {}", values.len());
    }
    let mut sorted: Vec<(f64, u64)> = values.to_vec();
    sorted.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("NaN conditioning value"));
    let per = sorted.len() / bin_count;
    let mut num = 0.0;
    let mut den = 0.0;
    for b in 0..bin_count {
        let lo = b * per;
        let hi = if b + 1 == bin_count { sorted.len() } else { (b + 1) * per };
        let bin = &sorted[lo..hi];
        if bin.len() < min_per_bin {
            bail!("bin {b} starved");
        }
        let n = bin.len() as f64;
        let mean = bin.iter().map(|&(_, c)| c as f64).sum::<f64>() / n;
        if mean == 0.0 {
            continue;
        }
        let var = bin.iter().map(|&(_, c)| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Pool weighted by observations.
        num += n * var / mean;
        den += n;
    }
    if den == 0.0 {
        bail!("all bins empty");
    }
    Ok(num / den)
}

/// Two-sample Kolmogorov-Smirnov test; returns `(statistic, p_value)` with
/// the asymptotic Kolmogorov distribution.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() || ys.is_empty() {
        bail!("empty sample");
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("NaN"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("NaN"));
    let (n, m) = (a.len(), b.len());
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, ks_q(lambda)))
}

/// One-sample KS test against the uniform distribution on `[0, hi]`.
pub fn ks_uniform(xs: &[f64], hi: f64) -> Result<(f64, f64)> {
    if xs.is_empty() || hi <= 0.0 {
        bail!("empty sample or bad support");
    }
    let mut a = xs.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("NaN"));
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in a.iter().enumerate() {
        let f = (x / hi).clamp(0.0, 1.0);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    Ok((d, ks_q(lambda)))
}

/// Asymptotic Kolmogorov survival function.
fn ks_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += term;
        sign = -sign;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Spearman rank correlation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        bail!("need matched samples of size >= 3");
    }
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).expect("NaN"));
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..xs.len() {
        num += (rx[i] - mean) * (ry[i] - mean);
        dx += (rx[i] - mean).powi(2);
        dy += (ry[i] - mean).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        bail!("degenerate ranks");
    }
    Ok(num / (dx * dy).sqrt())
}
