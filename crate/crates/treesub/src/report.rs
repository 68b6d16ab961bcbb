//! Pass/fail reporting for statistical gates.

use std::fmt;
use std::time::Instant;

/// One checked statistic. `pass` is `|estimate - target| <= tolerance` for
/// value gates, or `estimate >= target` for p-value gates (see the
/// constructors).
#[derive(Clone, Debug)]
pub struct TestReport {
    pub name: String,
    pub estimate: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub sample_size: u64,
    pub runtime_secs: f64,
}

impl TestReport {
    /// Gate on `|estimate - target| <= tolerance`.
    pub fn value_gate(
        name: impl Into<String>,
        estimate: f64,
        target: f64,
        tolerance: f64,
        sample_size: u64,
        started: Instant,
    ) -> Self {
        TestReport {
            name: name.into(),
            estimate,
            target,
            tolerance,
            pass: (estimate - target).abs() <= tolerance,
            sample_size,
            runtime_secs: started.elapsed().as_secs_f64(),
        }
    }

    /// Gate on `estimate` lying inside `[lo, hi]`; reported with the
    /// midpoint as target and half-width as tolerance.
    pub fn interval_gate(
        name: impl Into<String>,
        estimate: f64,
        lo: f64,
        hi: f64,
        sample_size: u64,
        started: Instant,
    ) -> Self {
        TestReport {
            name: name.into(),
            estimate,
            target: 0.5 * (lo + hi),
            tolerance: 0.5 * (hi - lo),
            pass: estimate >= lo && estimate <= hi,
            sample_size,
            runtime_secs: started.elapsed().as_secs_f64(),
        }
    }

    /// Gate on `estimate >= threshold` (p-values, counts of exact checks).
    pub fn floor_gate(
        name: impl Into<String>,
        estimate: f64,
        threshold: f64,
        sample_size: u64,
        started: Instant,
    ) -> Self {
        TestReport {
            name: name.into(),
            estimate,
            target: threshold,
            tolerance: 0.0,
            pass: estimate >= threshold,
            sample_size,
            runtime_secs: started.elapsed().as_secs_f64(),
        }
    }

    /// An exact boolean check.
    pub fn exact_gate(
        name: impl Into<String>,
        pass: bool,
        sample_size: u64,
        started: Instant,
    ) -> Self {
        TestReport {
            name: name.into(),
            estimate: if pass { 1.0 } else { 0.0 },
            target: 1.0,
            tolerance: 0.0,
            pass,
            sample_size,
            runtime_secs: started.elapsed().as_secs_f64(),
        }
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<44} estimate={:<12.6} target={:<10.6} tol={:<9.4} n={:<8} t={:.1}s",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.estimate,
            self.target,
            self.tolerance,
            self.sample_size,
            self.runtime_secs
        )
    }
}

/// Prints reports and returns whether all passed.
pub fn print_all(reports: &[TestReport]) -> bool {
    let mut ok = true;
    for r in reports {
        println!("{r}");
        ok &= r.pass;
    }
    ok
}
