//! Compact real trees coded by excursion functions.
//!
//! A nonnegative function `h` on a uniform grid with `h[0] = h[n] = 0` codes
//! a rooted compact real tree: the distance between grid times `i` and `j`
//! is `h[i] + h[j] - 2 * min(h over [i, j])`, and times at zero distance are
//! the same tree point. All tree manipulation in this crate goes through
//! coding functions; no node/edge structure is ever materialised.
//!
//! Subordination collapses the segments of the tree on which a monotone
//! function `g` is constant. When `g` is given on the same grid (constant on
//! coded-point classes, nondecreasing along ancestry), the subordinate tree
//! is again coded by the grid function `g` itself, with the interval minimum
//! taken in `g`.

use alloc::vec::Vec;
use core::fmt;

use crate::rmq::RangeMin;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodedTreeError {
    IndexOutOfRange { index: usize, len: usize },
    GridMismatch { expected: usize, got: usize },
    NotAnExcursion,
    MonotonicityViolation { ancestor: usize, descendant: usize },
}

impl fmt::Display for CodedTreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodedTreeError::IndexOutOfRange { index, len } => {
                write!(f, "grid index {index} out of range (len {len})")
            }
            CodedTreeError::GridMismatch { expected, got } => {
                write!(f, "grid mismatch: expected {expected} points, got {got}")
            }
            CodedTreeError::NotAnExcursion => {
                write!(f, "coding function must be nonnegative with zero endpoints")
            }
            CodedTreeError::MonotonicityViolation { ancestor, descendant } => {
                write!(f, "g decreases from ancestor {ancestor} to descendant {descendant}")
            }
        }
    }
}

/// A sampled nonnegative excursion on the uniform grid `k * sigma / n`,
/// `k = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodingFunction {
    sigma: f64,
    h: Vec<f64>,
}

impl CodingFunction {
    /// `h` must hold `n + 1` values with `h[0] = h[n] = 0` and `h >= 0`.
    pub fn new(sigma: f64, h: Vec<f64>) -> Result<Self, CodedTreeError> {
        if h.len() < 2 || sigma <= 0.0 {
            return Err(CodedTreeError::NotAnExcursion);
        }
        if h[0] != 0.0 || *h.last().unwrap() != 0.0 || h.iter().any(|&x| !(x >= 0.0)) {
            return Err(CodedTreeError::NotAnExcursion);
        }
        Ok(CodingFunction { sigma, h })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of grid cells (`n`); there are `n + 1` samples.
    pub fn grid_size(&self) -> usize {
        self.h.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn into_values(self) -> Vec<f64> {
        self.h
    }
}

/// A coding function together with a precomputed range-minimum index.
#[derive(Clone, Debug)]
pub struct TreeView {
    coding: CodingFunction,
    rmq: RangeMin,
}

/// A grid function to subordinate by: `g[0] = 0`, constant on coded-point
/// classes, nondecreasing along ancestry. The class and monotonicity
/// conditions are checked by [`TreeView::check_monotone`].
#[derive(Clone, Debug, PartialEq)]
pub struct SubordinationInput {
    g: Vec<f64>,
}

impl SubordinationInput {
    pub fn new(g: Vec<f64>) -> Result<Self, CodedTreeError> {
        if g.is_empty() || g[0] != 0.0 || g.iter().any(|&x| !(x >= 0.0)) {
            return Err(CodedTreeError::NotAnExcursion);
        }
        Ok(SubordinationInput { g })
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }
}

impl TreeView {
    pub fn new(coding: CodingFunction) -> Self {
        let rmq = RangeMin::new(coding.h.clone());
        TreeView { coding, rmq }
    }

    pub fn coding(&self) -> &CodingFunction {
        &self.coding
    }

    pub fn len(&self) -> usize {
        self.coding.h.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_index(&self, i: usize) -> Result<(), CodedTreeError> {
        if i < self.len() {
            Ok(())
        } else {
            Err(CodedTreeError::IndexOutOfRange { index: i, len: self.len() })
        }
    }

    /// Leftmost grid index realising the interval minimum of `h` over
    /// `[min(i,j), max(i,j)]`; codes the most recent common ancestor.
    pub fn mrca(&self, i: usize, j: usize) -> Result<usize, CodedTreeError> {
        self.check_index(i)?;
        self.check_index(j)?;
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        Ok(self.rmq.argmin(lo, hi))
    }

    /// `h[i] + h[j] - 2 * min(h over [i, j])`.
    pub fn tree_distance(&self, i: usize, j: usize) -> Result<f64, CodedTreeError> {
        let m = self.mrca(i, j)?;
        let h = &self.coding.h;
        Ok(h[i] + h[j] - 2.0 * h[m])
    }

    /// True iff the point coded by `i` is an ancestor of the point coded by
    /// `j`, i.e. `h[i]` equals the interval minimum.
    pub fn is_ancestor(&self, i: usize, j: usize) -> Result<bool, CodedTreeError> {
        let m = self.mrca(i, j)?;
        Ok(self.coding.h[i] == self.coding.h[m])
    }

    /// Height of the coded tree: `max h`.
    pub fn tree_height(&self) -> f64 {
        self.coding.h.iter().cloned().fold(0.0, f64::max)
    }

    /// True iff `g` is nondecreasing along ancestry: `g[i] <= g[j]` whenever
    /// `i < j` and `h[i]` is the minimum of `h` over `[i, j]`. Runs in O(n)
    /// with an ancestral stack.
    pub fn check_monotone(&self, g: &SubordinationInput) -> Result<bool, CodedTreeError> {
        let h = &self.coding.h;
        if g.g.len() != h.len() {
            return Err(CodedTreeError::GridMismatch { expected: h.len(), got: g.g.len() });
        }
        // Stack entries are (h value, max of g over the ancestors kept so
        // far). An entry survives while no later point goes strictly below
        // its h value, which is exactly the ancestor condition.
        let mut stack: Vec<(f64, f64)> = Vec::new();
        for j in 0..h.len() {
            let mut inherited: f64 = 0.0;
            while let Some(&(hv, _)) = stack.last() {
                if hv > h[j] {
                    stack.pop();
                } else {
                    break;
                }
            }
            if let Some(&(_, gmax)) = stack.last() {
                inherited = gmax;
            }
            if inherited > g.g[j] {
                return Ok(false);
            }
            let gmax = if g.g[j] > inherited { g.g[j] } else { inherited };
            stack.push((h[j], gmax));
        }
        Ok(true)
    }

    /// Coding function of the subordinate tree: the grid function `g` itself,
    /// carried on the same time grid. Fails if `g` is not monotone along
    /// ancestry or does not vanish at the endpoints.
    pub fn subordinate_coding(
        &self,
        g: &SubordinationInput,
    ) -> Result<CodingFunction, CodedTreeError> {
        if !self.check_monotone(g)? {
            // Locate a witness pair for the error message.
            for j in 1..g.g.len() {
                for i in 0..j {
                    if self.is_ancestor(i, j)? && g.g[i] > g.g[j] {
                        return Err(CodedTreeError::MonotonicityViolation {
                            ancestor: i,
                            descendant: j,
                        });
                    }
                }
            }
            return Err(CodedTreeError::MonotonicityViolation { ancestor: 0, descendant: 0 });
        }
        CodingFunction::new(self.coding.sigma, g.g.clone())
    }
}

/// Subordinate distance `g[i] + g[j] - 2 * min(g over [i, j])` evaluated
/// directly; equals the tree distance of [`TreeView::subordinate_coding`].
pub fn subordinate_distance(g: &[f64], i: usize, j: usize) -> f64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    let m = g[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
    g[i] + g[j] - 2.0 * m
}
