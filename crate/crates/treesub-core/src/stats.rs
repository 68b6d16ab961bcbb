//! Small numeric helpers shared by the verification harness: weighted least
//! squares on log-log survival curves.

use alloc::vec::Vec;

use crate::math;

/// Weighted least-squares fit of `log(rate)` against `log(r)`.
/// Returns `(slope, intercept, slope_stderr)`.
///
/// Points carry Poisson counts; the weight of a point is its count (the
/// variance of `log` of a Poisson count is about `1/count`).
pub fn log_log_fit(points: &[(f64, f64, f64)]) -> Option<(f64, f64, f64)> {
    // points: (r, rate, count)
    let usable: Vec<(f64, f64, f64)> =
        points.iter().copied().filter(|&(r, y, c)| r > 0.0 && y > 0.0 && c > 0.0).collect();
    if usable.len() < 2 {
        return None;
    }
    let mut sw = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for &(r, y, c) in &usable {
        let x = math::ln(r);
        let ly = math::ln(y);
        sw += c;
        sx += c * x;
        sy += c * ly;
    }
    let xbar = sx / sw;
    let ybar = sy / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(r, y, c) in &usable {
        let x = math::ln(r) - xbar;
        let ly = math::ln(y) - ybar;
        sxx += c * x * x;
        sxy += c * x * ly;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    // Poisson noise propagated through the log: var(log y_i) ~ 1/count_i,
    // weights are counts, so var(slope) ~ 1 / sxx.
    let stderr = math::sqrt(1.0 / sxx);
    Some((slope, intercept, stderr))
}

/// Survival counts of a sample over a grid of thresholds.
pub fn survival_counts(samples: &[f64], grid: &[f64]) -> Vec<u64> {
    grid.iter().map(|&r| samples.iter().filter(|&&x| x > r).count() as u64).collect()
}

/// Median of a sample (averaging the two middle order statistics).
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in median input"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use alloc::vec::Vec;

    #[test]
    fn recovers_exact_power_law() {
        // rate(r) = 3 / (2 r^2) exactly.
        let grid = [0.4, 0.5, 0.7, 1.0, 1.4];
        let pts: Vec<(f64, f64, f64)> =
            grid.iter().map(|&r| (r, 1.5 / (r * r), 1000.0)).collect();
        let (slope, intercept, _) = log_log_fit(&pts).unwrap();
        assert!((slope + 2.0).abs() < 1e-12);
        assert!((intercept - crate::math::ln(1.5)).abs() < 1e-12);
    }

    #[test]
    fn recovers_slope_from_sampled_survival() {
        // Inverse-CDF oracle: P(X > r) = min(1, r0^2 / r^2) i.e. X = r0 /
        // sqrt(U); survival counts over a grid refit the exponent.
        let mut rng = CounterRng::new(5, 0);
        let r0 = 0.3;
        let n = 200_000usize;
        let samples: Vec<f64> =
            (0..n).map(|_| r0 / crate::math::sqrt(rng.next_unit())).collect();
        let grid: Vec<f64> = (0..12).map(|i| 0.4 * crate::math::powf(1.18, i as f64)).collect();
        let counts = survival_counts(&samples, &grid);
        let pts: Vec<(f64, f64, f64)> = grid
            .iter()
            .zip(&counts)
            .map(|(&r, &c)| (r, c as f64 / n as f64, c as f64))
            .collect();
        let (slope, _, se) = log_log_fit(&pts).unwrap();
        assert!((slope + 2.0).abs() < 3.0 * se.max(0.01), "slope {slope} se {se}");
    }

    #[test]
    fn degenerate_input_is_rejected() {
        assert!(log_log_fit(&[(1.0, 1.0, 10.0)]).is_none());
        assert!(log_log_fit(&[(1.0, 1.0, 10.0), (1.0, 1.0, 10.0)]).is_none());
        assert!(log_log_fit(&[]).is_none());
    }

    #[test]
    fn median_of_small_samples() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
