//! The snake with spatial motion (reflected walk, local time at zero).
//!
//! Each lifetime up-step extends the spatial pair by one reflected lattice
//! move with step variance dh, accumulating one unit `dh` of local time per
//! visit to zero; down-steps pop. The accumulated local time at the tip is
//! nondecreasing along ancestry by construction, so it is a valid
//! subordination function of the lifetime tree.

use alloc::vec::Vec;

use crate::bits::BitVec;
use crate::coded_tree::{CodingFunction, SubordinationInput, TreeView};
use crate::rng::CounterRng;
use crate::snake::{LifetimeWalk, SnakeError};

/// Spatial motion selector; the frozen variant is a degenerate test double
/// whose local time grows by one unit per edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpatialKind {
    ReflectedWalk,
    FrozenAtZero,
}

#[derive(Clone, Copy, Debug)]
pub struct LtSnakeConfig {
    pub dt: f64,
    pub dh: f64,
    pub seed: u64,
    pub spatial: SpatialKind,
}

impl LtSnakeConfig {
    pub fn new(dt: f64, seed: u64, spatial: SpatialKind) -> Result<Self, SnakeError> {
        if !(dt > 0.0) {
            return Err(SnakeError::BadConfig);
        }
        Ok(LtSnakeConfig { dt, dh: crate::math::sqrt(dt), seed, spatial })
    }
}

/// A recorded trace of the local-time snake.
#[derive(Clone, Debug)]
pub struct LtSnakeTrace {
    pub dt: f64,
    pub dh: f64,
    pub zeta: Vec<f64>,
    /// Tip spatial value.
    pub xi_tip: Vec<f64>,
    /// Tip accumulated local time at zero.
    pub lambda_hat: Vec<f64>,
    pub steps: BitVec,
}

impl LtSnakeTrace {
    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }
}

#[derive(Clone, Copy)]
struct Entry {
    xi: f64,
    /// Zero visits along the path; local time is `visits * dh`.
    visits: u64,
}

/// Runs the local-time snake over a lifetime walk.
pub fn run_lt_snake(cfg: &LtSnakeConfig, walk: &LifetimeWalk) -> LtSnakeTrace {
    let mut rng = CounterRng::new(cfg.seed, 2);
    run_lt_snake_with_rng(cfg, walk, &mut rng)
}

pub fn run_lt_snake_with_rng(
    cfg: &LtSnakeConfig,
    walk: &LifetimeWalk,
    rng: &mut CounterRng,
) -> LtSnakeTrace {
    let n = walk.len() + 1;
    let mut zeta = Vec::with_capacity(n);
    let mut xi_tip = Vec::with_capacity(n);
    let mut lambda_hat = Vec::with_capacity(n);
    let step = crate::math::sqrt(cfg.dh);
    let mut stack: Vec<Entry> = Vec::with_capacity(64);
    stack.push(Entry { xi: 0.0, visits: 0 });
    zeta.push(0.0);
    xi_tip.push(0.0);
    lambda_hat.push(0.0);
    for (i, up) in walk.steps.iter().enumerate() {
        if up {
            let top = *stack.last().unwrap();
            let (xi, visits) = match cfg.spatial {
                SpatialKind::ReflectedWalk => {
                    let dir = if rng.next_u64() & 1 == 1 { step } else { -step };
                    // The walk lives on integer multiples of `step` in
                    // exact float arithmetic, so the zero test is exact.
                    let xi = crate::math::abs(top.xi + dir);
                    let visits = if xi == 0.0 { top.visits + 1 } else { top.visits };
                    (xi, visits)
                }
                SpatialKind::FrozenAtZero => (0.0, top.visits + 1),
            };
            stack.push(Entry { xi, visits });
        } else {
            stack.pop();
        }
        let top = stack.last().unwrap();
        zeta.push((stack.len() - 1) as f64 * cfg.dh);
        xi_tip.push(top.xi);
        lambda_hat.push(top.visits as f64 * cfg.dh);
        let _ = i;
    }
    LtSnakeTrace { dt: cfg.dt, dh: cfg.dh, zeta, xi_tip, lambda_hat, steps: walk.steps.clone() }
}

/// Summary of one local-time snake excursion simulated without storage.
#[derive(Clone, Copy, Debug, Default)]
pub struct LtExcursionStats {
    pub steps: u64,
    /// Maximum accumulated zero visits at the tip over the excursion; the
    /// local time maximum is `max_visits * dh`.
    pub max_visits: u64,
    pub truncated: bool,
}

/// Simulates one reflected-lifetime excursion of the local-time snake and
/// returns the maximum tip-accumulated local time.
pub fn lt_excursion_stats(rng: &mut CounterRng, dh: f64, cap_steps: u64) -> LtExcursionStats {
    let step = crate::math::sqrt(dh);
    let mut stack: Vec<Entry> = Vec::with_capacity(1024);
    stack.push(Entry { xi: 0.0, visits: 0 });
    // Forced first lifetime up-step.
    {
        let dir = if rng.next_u64() & 1 == 1 { step } else { -step };
        let xi = crate::math::abs(dir);
        stack.push(Entry { xi, visits: 0 });
    }
    let mut max_visits = 0u64;
    let mut steps = 1u64;
    while stack.len() > 1 && steps < cap_steps {
        if rng.next_u64() & 1 == 1 {
            let top = *stack.last().unwrap();
            let dir = if rng.next_u64() & 1 == 1 { step } else { -step };
            let xi = crate::math::abs(top.xi + dir);
            let visits = if xi == 0.0 { top.visits + 1 } else { top.visits };
            if visits > max_visits {
                max_visits = visits;
            }
            stack.push(Entry { xi, visits });
        } else {
            stack.pop();
        }
        steps += 1;
    }
    LtExcursionStats { steps, max_visits, truncated: stack.len() > 1 }
}

/// The accumulated-local-time series as a coding function of the subordinate
/// tree. Fails only if the monotonicity audit fails, which would indicate a
/// construction bug.
pub fn subordinate_by_lambda(trace: &LtSnakeTrace) -> Result<CodingFunction, SnakeError> {
    let lifetime = CodingFunction::new(
        (trace.len() - 1) as f64 * trace.dt,
        trace.zeta.clone(),
    )
    .map_err(|_| SnakeError::BadConfig)?;
    let tree = TreeView::new(lifetime);
    let g = SubordinationInput::new(trace.lambda_hat.clone()).map_err(|_| SnakeError::BadConfig)?;
    if !tree.check_monotone(&g).map_err(|_| SnakeError::BadConfig)? {
        return Err(SnakeError::BadConfig);
    }
    tree.subordinate_coding(&g).map_err(|_| SnakeError::BadConfig)
}
