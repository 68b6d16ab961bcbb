//! The lattice Brownian snake.
//!
//! The lifetime is a ±dh walk on a grid of time step dt with dh = sqrt(dt);
//! the tree-indexed label field lives on an ancestral stack: an up-step
//! pushes `Z + N(0, dh)`, a down-step pops. Tip, running path maximum and
//! running path minimum are read off the stack top, so equal recorded values
//! are bitwise copies of the same stack entry and exact float comparison is
//! meaningful.

use alloc::vec::Vec;
use core::fmt;

use crate::bits::BitVec;
use crate::levy::BranchingLaw;
use crate::rng::CounterRng;

#[derive(Clone, Debug, PartialEq)]
pub enum SnakeError {
    BadStepCount(usize),
    BadConfig,
    EmptySkeleton,
    LevelOutOfRange(f64),
}

impl fmt::Display for SnakeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnakeError::BadStepCount(n) => {
                write!(f, "excursion length must be even and >= 2, got {n}")
            }
            SnakeError::BadConfig => write!(f, "dt and dh must be positive"),
            SnakeError::EmptySkeleton => write!(f, "trace has no structure at this resolution"),
            SnakeError::LevelOutOfRange(r) => write!(f, "level {r} out of range"),
        }
    }
}

/// Simulation mode: a single excursion conditioned on its lattice length, or
/// a reflected run of the given total step budget (trimmed to its last zero).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SnakeMode {
    NormalizedExcursion { steps: usize },
    ReflectedRun { total_steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnakeConfig {
    pub dt: f64,
    pub dh: f64,
    pub seed: u64,
    pub mode: SnakeMode,
}

impl SnakeConfig {
    pub fn new(dt: f64, seed: u64, mode: SnakeMode) -> Result<Self, SnakeError> {
        if !(dt > 0.0) {
            return Err(SnakeError::BadConfig);
        }
        Ok(SnakeConfig { dt, dh: crate::math::sqrt(dt), seed, mode })
    }
}

/// A lifetime path as a step record: bit 1 = up (+dh), bit 0 = down (-dh).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LifetimeWalk {
    pub steps: BitVec,
}

impl LifetimeWalk {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Integer depth profile (values of zeta in dh units), length `len()+1`.
    pub fn depths(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut d = 0i64;
        out.push(0);
        for b in self.steps.iter() {
            d += if b { 1 } else { -1 };
            debug_assert!(d >= 0);
            out.push(d as u32);
        }
        out
    }
}

/// Uniform lattice excursion of the given even length: zero at both ends,
/// strictly positive inside. Sampled by the cycle construction: a uniform
/// arrangement of m up and m+1 down steps has exactly one rotation whose
/// proper prefix sums stay nonnegative; dropping its final down step gives a
/// uniform nonnegative bridge, which is wrapped in a mandatory first up and
/// last down step.
pub fn sample_excursion(steps: usize, rng: &mut CounterRng) -> Result<LifetimeWalk, SnakeError> {
    if steps < 2 || steps % 2 != 0 {
        return Err(SnakeError::BadStepCount(steps));
    }
    let m = steps / 2 - 1;
    let mut inner: Vec<bool> = Vec::with_capacity(2 * m + 1);
    {
        // Sequential sampling without replacement: uniform arrangement of
        // m ups among 2m+1 slots.
        let mut ups = m as u64;
        let mut slots = (2 * m + 1) as u64;
        for _ in 0..(2 * m + 1) {
            let pick_up = rng.next_below(slots) < ups;
            inner.push(pick_up);
            if pick_up {
                ups -= 1;
            }
            slots -= 1;
        }
    }
    // Cycle lemma: rotate to start right after the (first) position where the
    // prefix sum attains its minimum; then every proper prefix of the rotated
    // word has nonnegative sum and the final step is the unmatched down.
    let mut best_pos = 0usize;
    let mut best = i64::MAX;
    let mut sum = 0i64;
    for (i, &b) in inner.iter().enumerate() {
        sum += if b { 1 } else { -1 };
        if sum < best {
            best = sum;
            best_pos = i;
        }
    }
    let n = inner.len();
    let mut bits = BitVec::with_capacity(steps);
    bits.push(true);
    for k in 0..n - 1 {
        bits.push(inner[(best_pos + 1 + k) % n]);
    }
    bits.push(false);
    debug_assert_eq!(bits.len(), steps);
    Ok(LifetimeWalk { steps: bits })
}

/// Reflected lattice lifetime: ±1 fair steps, forced up at zero, truncated
/// at the last return to zero within the budget.
pub fn sample_reflected_run(
    total_steps: usize,
    rng: &mut CounterRng,
) -> Result<LifetimeWalk, SnakeError> {
    if total_steps < 2 {
        return Err(SnakeError::BadStepCount(total_steps));
    }
    let mut bits = BitVec::with_capacity(total_steps);
    let mut depth = 0i64;
    let mut last_zero = 0usize;
    let mut word = 0u64;
    let mut avail = 0u32;
    for i in 0..total_steps {
        let up = if depth == 0 {
            true
        } else {
            if avail == 0 {
                word = rng.next_u64();
                avail = 64;
            }
            let b = word & 1 == 1;
            word >>= 1;
            avail -= 1;
            b
        };
        bits.push(up);
        depth += if up { 1 } else { -1 };
        if depth == 0 {
            last_zero = i + 1;
        }
    }
    let trimmed: BitVec = bits.iter().take(last_zero).collect();
    if trimmed.is_empty() {
        return Err(SnakeError::BadStepCount(total_steps));
    }
    Ok(LifetimeWalk { steps: trimmed })
}

/// Per-time view of the running snake handed to streaming visitors.
#[derive(Clone, Copy, Debug)]
pub struct SnakeStep {
    /// Time index (0-based, including the initial state at 0).
    pub index: usize,
    /// Lifetime in dh units.
    pub depth: u32,
    /// Tip label.
    pub tip: f64,
    /// Running path maximum.
    pub bar: f64,
    /// Running path minimum.
    pub min: f64,
}

#[derive(Clone, Copy, Debug)]
struct StackEntry {
    z: f64,
    bar: f64,
    min: f64,
}

/// Drives the label stack over a lifetime walk, calling `visit` at every
/// grid time (including time 0). Labels for a trace are drawn from `rng` in
/// step order, one Gaussian per up-step.
pub fn run_snake_streaming<F: FnMut(SnakeStep)>(
    dh: f64,
    walk: &LifetimeWalk,
    rng: &mut CounterRng,
    mut visit: F,
) {
    let sd = crate::math::sqrt(dh);
    let mut stack: Vec<StackEntry> = Vec::with_capacity(64);
    stack.push(StackEntry { z: 0.0, bar: 0.0, min: 0.0 });
    visit(SnakeStep { index: 0, depth: 0, tip: 0.0, bar: 0.0, min: 0.0 });
    for (i, up) in walk.steps.iter().enumerate() {
        if up {
            let top = *stack.last().unwrap();
            let z = top.z + sd * rng.next_gaussian();
            stack.push(StackEntry {
                z,
                bar: if z > top.bar { z } else { top.bar },
                min: if z < top.min { z } else { top.min },
            });
        } else {
            stack.pop();
            debug_assert!(!stack.is_empty());
        }
        let top = stack.last().unwrap();
        visit(SnakeStep {
            index: i + 1,
            depth: (stack.len() - 1) as u32,
            tip: top.z,
            bar: top.bar,
            min: top.min,
        });
    }
}

/// A fully recorded snake trace.
#[derive(Clone, Debug)]
pub struct SnakeTrace {
    pub dt: f64,
    pub dh: f64,
    /// Lifetimes `zeta[s] = depth * dh`.
    pub zeta: Vec<f64>,
    /// Tip labels.
    pub zhat: Vec<f64>,
    /// Running path maxima.
    pub zbar: Vec<f64>,
    /// Running path minima.
    pub zmin: Vec<f64>,
    /// Push/pop record: bit i is the step from time i to i+1 (1 = push).
    pub steps: BitVec,
}

impl SnakeTrace {
    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    /// Duration in time units.
    pub fn sigma(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Integer lifetime profile in dh units.
    pub fn depths(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len());
        let mut d = 0i64;
        out.push(0);
        for b in self.steps.iter() {
            d += if b { 1 } else { -1 };
            out.push(d as u32);
        }
        out
    }

    /// Reconstructs the full path `W_s` (labels at heights 0..=depth) by
    /// replaying the push/pop log.
    pub fn reconstruct_path(&self, s: usize) -> Vec<f64> {
        assert!(s < self.len());
        let mut stack: Vec<f64> = Vec::new();
        stack.push(0.0);
        for i in 0..s {
            if self.steps.get(i) {
                stack.push(self.zhat[i + 1]);
            } else {
                stack.pop();
            }
        }
        stack
    }

    /// Total local time of the lifetime at zero: `2 dh x (returns to zero)`,
    /// the calibration under which excursions with max above eps arrive at
    /// rate `1/(2 eps)` per unit local time.
    pub fn local_time_at_zero(&self) -> f64 {
        let mut zeros = 0u64;
        let mut d = 0i64;
        for b in self.steps.iter() {
            d += if b { 1 } else { -1 };
            if d == 0 {
                zeros += 1;
            }
        }
        2.0 * self.dh * zeros as f64
    }

    /// Start indices of the lifetime excursions away from zero.
    pub fn excursion_starts(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut d = 0i64;
        for (i, b) in self.steps.iter().enumerate() {
            if d == 0 {
                out.push(i);
            }
            d += if b { 1 } else { -1 };
        }
        out
    }
}

/// Runs the snake over a lifetime walk and records the full trace.
pub fn run_snake(cfg: &SnakeConfig, walk: &LifetimeWalk) -> SnakeTrace {
    let mut rng = CounterRng::new(cfg.seed, 1);
    run_snake_with_rng(cfg, walk, &mut rng)
}

pub fn run_snake_with_rng(
    cfg: &SnakeConfig,
    walk: &LifetimeWalk,
    rng: &mut CounterRng,
) -> SnakeTrace {
    let n = walk.len() + 1;
    let mut zeta = Vec::with_capacity(n);
    let mut zhat = Vec::with_capacity(n);
    let mut zbar = Vec::with_capacity(n);
    let mut zmin = Vec::with_capacity(n);
    run_snake_streaming(cfg.dh, walk, rng, |st| {
        zeta.push(st.depth as f64 * cfg.dh);
        zhat.push(st.tip);
        zbar.push(st.bar);
        zmin.push(st.min);
    });
    SnakeTrace { dt: cfg.dt, dh: cfg.dh, zeta, zhat, zbar, zmin, steps: walk.steps.clone() }
}

/// Samples a trace according to the config mode. Stream index 0 is used for
/// the lifetime, stream 1 for the labels, so lifetime-only consumers stay
/// in sync with full runs.
pub fn sample_trace(cfg: &SnakeConfig) -> Result<SnakeTrace, SnakeError> {
    let mut lifetime_rng = CounterRng::new(cfg.seed, 0);
    let walk = match cfg.mode {
        SnakeMode::NormalizedExcursion { steps } => sample_excursion(steps, &mut lifetime_rng)?,
        SnakeMode::ReflectedRun { total_steps } => {
            sample_reflected_run(total_steps, &mut lifetime_rng)?
        }
    };
    Ok(run_snake(cfg, &walk))
}

/// Summary of one lifetime excursion simulated without storage.
#[derive(Clone, Copy, Debug, Default)]
pub struct LifetimeExcursionStats {
    pub steps: u64,
    /// Maximum lifetime in dh units.
    pub max_depth: u32,
    /// Whether the cap cut the excursion short.
    pub truncated: bool,
}

/// Simulates one reflected lifetime excursion (from zero back to zero) and
/// returns its length and maximum depth. `cap_steps` bounds the walk; a
/// truncated excursion keeps its running maximum.
pub fn lifetime_excursion_stats(rng: &mut CounterRng, cap_steps: u64) -> LifetimeExcursionStats {
    let mut depth = 1i64; // forced first step up
    let mut max_depth = 1u32;
    let mut steps = 1u64;
    let mut word = 0u64;
    let mut avail = 0u32;
    while depth > 0 && steps < cap_steps {
        if avail == 0 {
            word = rng.next_u64();
            avail = 64;
        }
        depth += if word & 1 == 1 { 1 } else { -1 };
        word >>= 1;
        avail -= 1;
        steps += 1;
        if depth as u32 > max_depth {
            max_depth = depth as u32;
        }
    }
    LifetimeExcursionStats { steps, max_depth, truncated: depth > 0 }
}

/// Summary of one labelled snake excursion simulated without storage.
#[derive(Clone, Copy, Debug, Default)]
pub struct LabelExcursionStats {
    pub steps: u64,
    pub max_depth: u32,
    pub max_label: f64,
    pub min_label: f64,
    pub truncated: bool,
}

/// Simulates one reflected snake excursion with Gaussian labels and returns
/// the extremes of the tip over the excursion. The stack footprint is the
/// maximum depth; nothing else is stored.
pub fn label_excursion_stats(
    rng: &mut CounterRng,
    dh: f64,
    cap_steps: u64,
) -> LabelExcursionStats {
    let sd = crate::math::sqrt(dh);
    let mut labels: Vec<f64> = Vec::with_capacity(1024);
    labels.push(0.0);
    let g0 = sd * rng.next_gaussian();
    labels.push(g0);
    let mut max_label = if g0 > 0.0 { g0 } else { 0.0 };
    let mut min_label = if g0 < 0.0 { g0 } else { 0.0 };
    let mut max_depth = 1u32;
    let mut steps = 1u64;
    while labels.len() > 1 && steps < cap_steps {
        if rng.next_u64() & 1 == 1 {
            let z = *labels.last().unwrap() + sd * rng.next_gaussian();
            labels.push(z);
            if z > max_label {
                max_label = z;
            }
            if z < min_label {
                min_label = z;
            }
            let d = (labels.len() - 1) as u32;
            if d > max_depth {
                max_depth = d;
            }
        } else {
            labels.pop();
        }
        steps += 1;
    }
    LabelExcursionStats {
        steps,
        max_depth,
        max_label,
        min_label,
        truncated: labels.len() > 1,
    }
}

/// Per-excursion half-line crossing summary, simulated without storage.
#[derive(Clone, Copy, Debug, Default)]
pub struct HalfLineStats {
    pub steps: u64,
    /// Whether any path crossed the level.
    pub crossed: bool,
    /// Connected components of the crossed region whose labels pass
    /// `level + eps` (signed away from zero).
    pub components_hitting: u32,
    /// Lattice times inside the exit-local-time window (first `lt_units`
    /// heights beyond the crossing); the exit local time is
    /// `count * dt / (lt_units * dh)`.
    pub window_count: u64,
    pub truncated: bool,
}

/// Simulates one reflected snake excursion and accumulates the half-line
/// statistics at `level` (positive: crossing upward; negative: downward).
pub fn half_line_excursion_stats(
    rng: &mut CounterRng,
    dh: f64,
    level: f64,
    eps: f64,
    lt_units: u32,
    cap_steps: u64,
) -> HalfLineStats {
    let side = CrossSide::of_level(level);
    let threshold = if level >= 0.0 { level + eps } else { level - eps };
    let sd = crate::math::sqrt(dh);
    // Stack entries: (label, first crossing depth or u32::MAX).
    let mut labels: Vec<(f64, u32)> = Vec::with_capacity(1024);
    labels.push((0.0, u32::MAX));
    {
        let z = sd * rng.next_gaussian();
        let fc = if side.crossed(z, level) { 1u32 } else { u32::MAX };
        labels.push((z, fc));
    }
    let mut stats = HalfLineStats { steps: 1, ..Default::default() };
    let mut open = false;
    let mut hit = false;
    while labels.len() > 1 && stats.steps < cap_steps {
        if rng.next_u64() & 1 == 1 {
            let (z0, fc0) = *labels.last().unwrap();
            let z = z0 + sd * rng.next_gaussian();
            let depth = labels.len() as u32;
            let fc = if fc0 != u32::MAX {
                fc0
            } else if side.crossed(z, level) {
                depth
            } else {
                u32::MAX
            };
            labels.push((z, fc));
        } else {
            labels.pop();
        }
        stats.steps += 1;
        let depth = (labels.len() - 1) as u32;
        let (z, fc) = *labels.last().unwrap();
        if fc != u32::MAX {
            stats.crossed = true;
            if depth > fc && depth - fc < lt_units {
                stats.window_count += 1;
            }
            let inside = depth > fc;
            if inside {
                if !open {
                    open = true;
                    hit = false;
                }
                if side.crossed(z, threshold) {
                    hit = true;
                }
            } else if open {
                open = false;
                if hit {
                    stats.components_hitting += 1;
                }
            }
        } else if open {
            open = false;
            if hit {
                stats.components_hitting += 1;
            }
        }
    }
    if open && hit {
        stats.components_hitting += 1;
    }
    stats.truncated = labels.len() > 1;
    stats
}

/// A reflected run split into its lifetime excursions.
#[derive(Clone, Debug)]
pub struct ReflectedRun {
    pub traces: Vec<SnakeTrace>,
    /// Total local time at zero across the run.
    pub local_time: f64,
}

/// Samples a reflected run and splits it at the zeros of the lifetime.
pub fn sample_reflected_excursions(cfg: &SnakeConfig) -> Result<ReflectedRun, SnakeError> {
    let full = sample_trace(&SnakeConfig {
        mode: match cfg.mode {
            SnakeMode::ReflectedRun { total_steps } => SnakeMode::ReflectedRun { total_steps },
            SnakeMode::NormalizedExcursion { .. } => return Err(SnakeError::BadConfig),
        },
        ..*cfg
    })?;
    let starts = full.excursion_starts();
    let local_time = full.local_time_at_zero();
    let depths = full.depths();
    let mut traces = Vec::with_capacity(starts.len());
    for (k, &a) in starts.iter().enumerate() {
        let b = if k + 1 < starts.len() { starts[k + 1] } else { full.len() - 1 };
        let steps: BitVec = (a..b).map(|i| full.steps.get(i)).collect();
        debug_assert_eq!(depths[a], 0);
        debug_assert_eq!(depths[b], 0);
        traces.push(SnakeTrace {
            dt: full.dt,
            dh: full.dh,
            zeta: full.zeta[a..=b].to_vec(),
            zhat: full.zhat[a..=b].to_vec(),
            zbar: full.zbar[a..=b].to_vec(),
            zmin: full.zmin[a..=b].to_vec(),
            steps,
        });
    }
    Ok(ReflectedRun { traces, local_time })
}

/// Times with `zhat == zmin` (exact; both sides are copies of the same stack
/// entry when equal). Realises the set of tree points whose label equals
/// their ancestral minimum.
pub fn theta_times(trace: &SnakeTrace) -> Vec<usize> {
    (0..trace.len()).filter(|&s| trace.zhat[s] == trace.zmin[s]).collect()
}

/// One excursion of the snake outside a half-line domain.
#[derive(Clone, Debug)]
pub struct OutsideExcursion {
    /// Component interval of times whose path strictly crosses the level.
    pub start: usize,
    pub end: usize,
    /// Label of the first stack entry at or beyond the level (crossing value,
    /// including the lattice overshoot).
    pub crossing_label: f64,
    /// Height (in dh units) of the crossing entry.
    pub crossing_depth: u32,
    /// Exit local time accumulated strictly before the component.
    pub entry_local_time: f64,
    /// Minimum label attained by paths inside the component (absolute).
    pub inner_min: f64,
    /// Maximum label attained by paths inside the component (absolute).
    pub inner_max: f64,
    /// Sub-trace re-rooted at the crossing point, labels shifted so they
    /// start at the level.
    pub trace: SnakeTrace,
}

/// Whether a crossing looks for labels >= level (positive levels) or
/// <= level (negative levels).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossSide {
    Above,
    Below,
}

impl CrossSide {
    pub fn of_level(level: f64) -> CrossSide {
        if level >= 0.0 {
            CrossSide::Above
        } else {
            CrossSide::Below
        }
    }

    #[inline(always)]
    fn crossed(self, z: f64, level: f64) -> bool {
        match self {
            CrossSide::Above => z >= level,
            CrossSide::Below => z <= level,
        }
    }
}

/// Internal replay that tracks, per stack entry, the first height at which
/// the path crosses the level.
struct CrossReplay<'a> {
    trace: &'a SnakeTrace,
    level: f64,
    side: CrossSide,
    /// Stack of labels.
    labels: Vec<f64>,
    /// First crossing depth of the current path prefix, if any.
    first_cross: Vec<Option<u32>>,
}

impl<'a> CrossReplay<'a> {
    fn new(trace: &'a SnakeTrace, level: f64, side: CrossSide) -> Self {
        let crossed0 = side.crossed(0.0, level);
        CrossReplay {
            trace,
            level,
            side,
            labels: alloc::vec![0.0],
            first_cross: alloc::vec![if crossed0 { Some(0) } else { None }],
        }
    }

    /// Applies step `i` (from time i to i+1); returns (depth, tau) where tau
    /// is the first crossing depth of the new current path.
    #[inline]
    fn step(&mut self, i: usize) -> (u32, Option<u32>) {
        if self.trace.steps.get(i) {
            let z = self.trace.zhat[i + 1];
            let inherited = *self.first_cross.last().unwrap();
            let depth = self.labels.len() as u32;
            let fc = inherited.or(if self.side.crossed(z, self.level) {
                Some(depth)
            } else {
                None
            });
            self.labels.push(z);
            self.first_cross.push(fc);
        } else {
            self.labels.pop();
            self.first_cross.pop();
        }
        ((self.labels.len() - 1) as u32, *self.first_cross.last().unwrap())
    }
}

/// Decomposes the trace into the excursions of the snake outside the
/// half-line delimited by `level` (above it for positive levels, below it
/// for negative ones): maximal intervals of times whose path crosses the
/// level strictly before its tip. Each excursion is re-rooted at the
/// crossing point with labels shifted to start at the level, and carries the
/// exit local time accumulated before it (window `eps_lt`, in label height
/// units of dh).
pub fn excursions_outside(
    trace: &SnakeTrace,
    level: f64,
    eps_lt_units: u32,
) -> Vec<OutsideExcursion> {
    let side = CrossSide::of_level(level);
    let mut replay = CrossReplay::new(trace, level, side);
    let mut out = Vec::new();
    let mut open: Option<(usize, u32, f64, f64, f64)> = None; // (start, depth, label, min, max)
    let mut exit_lt = 0.0f64;
    let lt_weight = trace.dt / (eps_lt_units as f64 * trace.dh);
    for i in 0..trace.steps.len() {
        let (depth, tau) = replay.step(i);
        let s = i + 1;
        let inside = matches!(tau, Some(d) if d < depth);
        if let Some(d) = tau {
            if depth > d && depth - d < eps_lt_units {
                // Time spent just beyond the crossing; exit local time mass.
                exit_lt += lt_weight;
            }
        }
        match (&mut open, inside) {
            (None, true) => {
                let d = tau.unwrap();
                let label = replay.labels[d as usize];
                let z = trace.zhat[s];
                open = Some((s, d, label, z, z));
            }
            (Some((_, _, _, min, max)), true) => {
                let z = trace.zhat[s];
                if z < *min {
                    *min = z;
                }
                if z > *max {
                    *max = z;
                }
            }
            (Some(_), false) => {
                let (start, d, label, min, max) = open.take().unwrap();
                out.push(build_outside(trace, start, s, d, label, level, exit_lt, min, max));
            }
            (None, false) => {}
        }
    }
    if let Some((start, d, label, min, max)) = open {
        out.push(build_outside(trace, start, trace.len() - 1, d, label, level, exit_lt, min, max));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn build_outside(
    trace: &SnakeTrace,
    start: usize,
    end: usize,
    crossing_depth: u32,
    crossing_label: f64,
    level: f64,
    entry_local_time: f64,
    inner_min: f64,
    inner_max: f64,
) -> OutsideExcursion {
    // The component interval is [start, end) in open-interval terms; the
    // recorded sub-trace spans [start-1, end] so it begins and ends at the
    // crossing depth.
    let a = start - 1;
    let shift = level - crossing_label;
    let mut stack: Vec<(f64, f64, f64)> = Vec::new();
    let base = level;
    stack.push((base, base, base));
    let mut zeta = Vec::with_capacity(end - a + 1);
    let mut zhat = Vec::with_capacity(end - a + 1);
    let mut zbar = Vec::with_capacity(end - a + 1);
    let mut zmin = Vec::with_capacity(end - a + 1);
    let mut bits = BitVec::with_capacity(end - a);
    zeta.push(0.0);
    zhat.push(base);
    zbar.push(base);
    zmin.push(base);
    for i in a..end {
        let up = trace.steps.get(i);
        bits.push(up);
        if up {
            let z = trace.zhat[i + 1] + shift;
            let top = *stack.last().unwrap();
            stack.push((z, if z > top.1 { z } else { top.1 }, if z < top.2 { z } else { top.2 }));
        } else {
            stack.pop();
        }
        let top = *stack.last().unwrap();
        zeta.push((stack.len() - 1) as f64 * trace.dh);
        zhat.push(top.0);
        zbar.push(top.1);
        zmin.push(top.2);
    }
    let _ = crossing_depth;
    OutsideExcursion {
        start,
        end,
        crossing_label,
        crossing_depth,
        entry_local_time,
        inner_min,
        inner_max,
        trace: SnakeTrace { dt: trace.dt, dh: trace.dh, zeta, zhat, zbar, zmin, steps: bits },
    }
}

/// Exit-measure estimate at a negative level.
#[derive(Clone, Copy, Debug)]
pub struct ExitEstimate {
    pub level: f64,
    pub eps: f64,
    /// Number of excursions outside `(-level, inf)` whose labels go below
    /// `-(level + eps)`.
    pub count: u64,
    /// `count / v(eps)` with `v(eps) = 3 / (2 eps^2)`.
    pub mass: f64,
}

/// Counts excursions of the snake outside `(-s, inf)` whose internal label
/// minimum goes below `-s - eps`, normalised by `v(eps) = 3/(2 eps^2)`.
pub fn exit_measure(trace: &SnakeTrace, s: f64, eps: f64) -> Result<ExitEstimate, SnakeError> {
    if !(s > 0.0 && eps > 0.0) {
        return Err(SnakeError::LevelOutOfRange(s));
    }
    let level = -s;
    let threshold = -s - eps;
    let count = count_outside_excursions(trace, level, threshold);
    let v = BranchingLaw::Psi0.theoretical_v(eps).expect("eps > 0");
    Ok(ExitEstimate { level: s, eps, count, mass: count as f64 / v })
}

/// Number of excursions outside the half-line at `level` whose labels pass
/// `threshold` (absolute). Streaming, no trace materialisation.
pub fn count_outside_excursions(trace: &SnakeTrace, level: f64, threshold: f64) -> u64 {
    let side = CrossSide::of_level(level);
    let mut replay = CrossReplay::new(trace, level, side);
    let mut count = 0u64;
    let mut open = false;
    let mut hit = false;
    for i in 0..trace.steps.len() {
        let (depth, tau) = replay.step(i);
        let inside = matches!(tau, Some(d) if d < depth);
        let z = trace.zhat[i + 1];
        if inside {
            if !open {
                open = true;
                hit = false;
            }
            let beyond = match side {
                CrossSide::Above => z >= threshold,
                CrossSide::Below => z <= threshold,
            };
            if beyond {
                hit = true;
            }
        } else if open {
            open = false;
            if hit {
                count += 1;
            }
        }
    }
    if open && hit {
        count += 1;
    }
    count
}

/// Finite-window exit local time at a signed level: `(dt / eps) * #{ r :
/// tau(W_r) < zeta_r < tau(W_r) + eps }`, the lattice version of the exit
/// local time approximation for the half-line domain at `level`.
pub fn exit_local_time(trace: &SnakeTrace, level: f64, eps: f64) -> Result<f64, SnakeError> {
    if !(eps > 0.0) {
        return Err(SnakeError::LevelOutOfRange(eps));
    }
    let units = (eps / trace.dh) as u32;
    if units == 0 {
        return Err(SnakeError::LevelOutOfRange(eps));
    }
    let side = CrossSide::of_level(level);
    let mut replay = CrossReplay::new(trace, level, side);
    let mut acc = 0.0f64;
    let weight = trace.dt / (units as f64 * trace.dh);
    for i in 0..trace.steps.len() {
        let (depth, tau) = replay.step(i);
        if let Some(d) = tau {
            if depth > d && depth - d < units {
                acc += weight;
            }
        }
    }
    Ok(acc)
}
