//! Dyadic level-crossing skeletons and the vertex-counting time change.
//!
//! For a nonnegative series starting at 0, the level-n skeleton collects, for
//! every integer level `j >= 0`, the excursions of the series strictly above
//! `j * 2^-n` whose maximum exceeds `(j+1) * 2^-n`. Vertex k is the start
//! time of such an excursion; the vertices in (time, level) order form the
//! height sequence of a plane forest. Strict comparisons double as the
//! half-offset convention for integer-valued series, so no level ever
//! coincides with a grid value.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::snake::SnakeTrace;

#[derive(Clone, Debug, PartialEq)]
pub enum EmbedError {
    EmptySkeleton,
    BadLevel(u32),
}

impl fmt::Display for EmbedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedError::EmptySkeleton => write!(f, "series never completes a level crossing"),
            EmbedError::BadLevel(n) => write!(f, "dyadic level {n} out of range"),
        }
    }
}

/// One skeleton vertex: the start of a confirmed band crossing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkeletonVertex {
    /// Grid index of the excursion start (first index strictly above the
    /// base level).
    pub time: usize,
    /// Integer level `j` (the vertex generation in the forest).
    pub level: u32,
    /// Series value at the crossing time.
    pub value: f64,
    /// Parent vertex index in the skeleton arrays, if any.
    pub parent: Option<usize>,
}

/// The embedded plane forest at one dyadic resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicSkeleton {
    /// Dyadic resolution; the band width is `2^-n` times `unit`.
    pub n: u32,
    /// Band width in series units.
    pub band: f64,
    pub vertices: Vec<SkeletonVertex>,
}

impl DyadicSkeleton {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertex levels in time order: the forest height sequence.
    pub fn heights(&self) -> Vec<u32> {
        self.vertices.iter().map(|v| v.level).collect()
    }

    /// Offspring histogram over all vertices of the forest.
    pub fn offspring_empirical(&self) -> Result<BTreeMap<u32, u64>, EmbedError> {
        if self.vertices.is_empty() {
            return Err(EmbedError::EmptySkeleton);
        }
        let mut children = alloc::vec![0u32; self.vertices.len()];
        for v in &self.vertices {
            if let Some(p) = v.parent {
                children[p] += 1;
            }
        }
        let mut hist = BTreeMap::new();
        for c in children {
            *hist.entry(c).or_insert(0u64) += 1;
        }
        Ok(hist)
    }

    /// Number of roots (level-0 vertices).
    pub fn tree_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.level == 0).count()
    }

    /// The deterministic pruning that recovers the level-(n-1) skeleton:
    /// keep even-level vertices with at least one child, halve levels,
    /// re-link to the nearest kept ancestor.
    pub fn prune(&self) -> DyadicSkeleton {
        let mut has_child = alloc::vec![false; self.vertices.len()];
        for v in &self.vertices {
            if let Some(p) = v.parent {
                has_child[p] = true;
            }
        }
        let keep: Vec<usize> = (0..self.vertices.len())
            .filter(|&i| self.vertices[i].level % 2 == 0 && has_child[i])
            .collect();
        let mut remap = alloc::vec![usize::MAX; self.vertices.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        // Nearest kept proper ancestor.
        let nearest_kept = |mut idx: Option<usize>| -> Option<usize> {
            while let Some(i) = idx {
                if remap[i] != usize::MAX {
                    return Some(remap[i]);
                }
                idx = self.vertices[i].parent;
            }
            None
        };
        let vertices = keep
            .iter()
            .map(|&old| {
                let v = self.vertices[old];
                SkeletonVertex {
                    time: v.time,
                    level: v.level / 2,
                    value: v.value,
                    parent: nearest_kept(v.parent),
                }
            })
            .collect();
        DyadicSkeleton { n: self.n - 1, band: self.band * 2.0, vertices }
    }
}

/// Streaming skeleton builder: feed series values in grid order; confirmed
/// vertices accumulate into an offspring histogram (and optionally a vertex
/// list) with O(depth) state. A level-j excursion becomes a vertex the
/// moment the series first exceeds `(j+1) * band` inside it.
pub struct OnlineSkeleton {
    band: f64,
    open: Vec<OpenLevel>,
    /// Offspring histogram over closed confirmed vertices.
    pub hist: BTreeMap<u32, u64>,
    /// Collected vertices in (time, level) order, when enabled.
    pub vertices: Option<Vec<SkeletonVertex>>,
    /// Confirmed vertex count.
    pub confirmed: u64,
    /// Confirmed roots (level-0 vertices).
    pub roots: u64,
}

struct OpenLevel {
    start: usize,
    value: f64,
    confirmed: bool,
    children: u32,
    /// Index into the collected vertex list, when collecting.
    vertex: usize,
}

impl OnlineSkeleton {
    pub fn new(band: f64, collect_vertices: bool) -> Self {
        assert!(band > 0.0);
        OnlineSkeleton {
            band,
            open: Vec::new(),
            hist: BTreeMap::new(),
            vertices: if collect_vertices { Some(Vec::new()) } else { None },
            confirmed: 0,
            roots: 0,
        }
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    #[inline]
    fn close_top(&mut self) {
        let top = self.open.pop().expect("close on empty stack");
        if top.confirmed {
            *self.hist.entry(top.children).or_insert(0) += 1;
        } else {
            debug_assert_eq!(top.children, 0);
        }
    }

    /// Feed the series value at grid index `t`; indices must be fed in
    /// increasing order.
    #[inline]
    pub fn push(&mut self, t: usize, x: f64) {
        // Close levels whose excursions ended.
        while !self.open.is_empty() && x <= (self.open.len() - 1) as f64 * self.band {
            self.close_top();
        }
        // Open every level the value strictly exceeds; opening level j
        // confirms the level j-1 excursion as a vertex.
        while x > self.open.len() as f64 * self.band {
            let depth = self.open.len();
            if depth >= 1 && !self.open[depth - 1].confirmed {
                self.open[depth - 1].confirmed = true;
                self.confirmed += 1;
                if depth >= 2 {
                    self.open[depth - 2].children += 1;
                } else {
                    self.roots += 1;
                }
                let parent = if depth >= 2 { Some(self.open[depth - 2].vertex) } else { None };
                let (start, value) = (self.open[depth - 1].start, self.open[depth - 1].value);
                if let Some(vs) = self.vertices.as_mut() {
                    self.open[depth - 1].vertex = vs.len();
                    vs.push(SkeletonVertex {
                        time: start,
                        level: (depth - 1) as u32,
                        value,
                        parent,
                    });
                }
            }
            self.open.push(OpenLevel {
                start: t,
                value: x,
                confirmed: false,
                children: 0,
                vertex: usize::MAX,
            });
        }
    }

    /// Close all remaining open excursions.
    pub fn finish(&mut self) {
        while !self.open.is_empty() {
            self.close_top();
        }
    }
}

/// Builds the level-n dyadic skeleton of a nonnegative series. `unit` scales
/// the dyadic bands: level `j` sits at `j * unit * 2^-n` in series units
/// (`unit = 1` for label series already in continuum units).
pub fn dyadic_crossings(series: &[f64], n: u32, unit: f64) -> DyadicSkeleton {
    assert!(!series.is_empty() && unit > 0.0);
    let band = unit * crate::math::powf(2.0, -(n as f64));
    let mut engine = OnlineSkeleton::new(band, true);
    for (t, &x) in series.iter().enumerate() {
        engine.push(t, x);
    }
    engine.finish();
    DyadicSkeleton { n, band, vertices: engine.vertices.unwrap() }
}

/// Sup-norm error of the count-indexed skeleton reconstruction against the
/// series itself: `sup_t | value(vertex floor(v_n t)) - series(t) |` with
/// the convention that the reconstruction is 0 beyond the last vertex.
/// `dt` is the series grid spacing and `v_n` the vertex rate per unit time.
pub fn approximation_error(series: &[f64], dt: f64, sk: &DyadicSkeleton, v_n: f64) -> f64 {
    assert!(v_n > 0.0 && dt > 0.0);
    let mut worst = 0.0f64;
    for (i, &x) in series.iter().enumerate() {
        let t = i as f64 * dt;
        let k = (v_n * t) as usize;
        let rec = if k < sk.vertices.len() { sk.vertices[k].value } else { 0.0 };
        let err = crate::math::abs(rec - x);
        if err > worst {
            worst = err;
        }
    }
    worst
}

/// Which monotone functional of the snake drives the time change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaSeries {
    /// Running path maximum `zbar`.
    Max,
    /// Negated running path minimum `-zmin`.
    Min,
}

/// Grid resolution of the time change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaResolution {
    /// Dyadic skeleton vertices at level n.
    Skeleton(u32),
    /// Every strict increase of the series (the finest lattice realisation;
    /// at these times the tip equals the running extremum exactly).
    Records,
}

/// A nondecreasing time change from the source grid onto a uniform target
/// grid, together with its right inverse restricted to grid points.
///
/// The change is stored exactly as vertex counts: `gamma_count[s]` is the
/// number of marked source times up to `s`, and the target time is
/// `gamma_count[s] * spacing`.
#[derive(Clone, Debug)]
pub struct TimeChange {
    /// Marked-time count per source index (piecewise constant, jumps at
    /// marked source times).
    pub gamma_count: Vec<u32>,
    /// `tau[k]` = source index matched to target grid point k (`tau[0] = 0`
    /// is the root).
    pub tau: Vec<usize>,
    /// Target grid spacing.
    pub spacing: f64,
}

impl TimeChange {
    /// Target time after source index `s`.
    pub fn gamma(&self, s: usize) -> f64 {
        self.gamma_count[s] as f64 * self.spacing
    }

    /// Target duration.
    pub fn chi(&self) -> f64 {
        self.tau.len() as f64 * self.spacing
    }
}

/// The target height series carried by a [`TimeChange`]: value\[k\] at target
/// time `k * spacing`, piecewise constant in between.
#[derive(Clone, Debug)]
pub struct TargetSeries {
    pub values: Vec<f64>,
    pub spacing: f64,
}

impl TargetSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at grid point `k` (clamped at the last point).
    pub fn at_index(&self, k: usize) -> f64 {
        self.values[k.min(self.values.len() - 1)]
    }

    /// Value at a target time: piecewise constant on `[k*spacing,
    /// (k+1)*spacing)`, with a guard against division rounding at grid
    /// points.
    pub fn at(&self, u: f64) -> f64 {
        let mut k = (u / self.spacing) as usize;
        if (k + 1) as f64 * self.spacing <= u {
            k += 1;
        }
        self.at_index(k)
    }
}

/// Builds the time change carrying the chosen monotone functional onto a
/// uniform grid. Marked source times are skeleton crossing times (skeleton
/// resolution) or all strict increase times (record resolution); the target
/// series holds the exact source values at those times, prefixed by the
/// root at height 0.
///
/// `spacing`: target time per vertex. Pass `None` to use the closed-form
/// vertex rate `v_n = 2^n v(2^-n)` of the psi0 mechanism at skeleton
/// resolution (labels are already in continuum units), or `1.0` spacing at
/// record resolution.
pub fn build_gamma(
    trace: &SnakeTrace,
    which: GammaSeries,
    resolution: GammaResolution,
    spacing: Option<f64>,
) -> Result<(TargetSeries, TimeChange), EmbedError> {
    let series: Vec<f64> = match which {
        GammaSeries::Max => trace.zbar.clone(),
        GammaSeries::Min => trace.zmin.iter().map(|&x| -x).collect(),
    };
    let marks: Vec<usize> = match resolution {
        GammaResolution::Skeleton(n) => {
            let sk = dyadic_crossings(&series, n, 1.0);
            if sk.is_empty() {
                return Err(EmbedError::EmptySkeleton);
            }
            let mut times: Vec<usize> = sk.vertices.iter().map(|v| v.time).collect();
            times.sort_unstable();
            times
        }
        GammaResolution::Records => {
            let t: Vec<usize> =
                (1..series.len()).filter(|&s| series[s] > series[s - 1]).collect();
            if t.is_empty() {
                return Err(EmbedError::EmptySkeleton);
            }
            t
        }
    };
    let spacing = spacing.unwrap_or(match resolution {
        GammaResolution::Skeleton(n) => {
            let v_n = crate::math::powf(2.0, n as f64)
                * crate::levy::BranchingLaw::Psi0
                    .theoretical_v(crate::math::powf(2.0, -(n as f64)))
                    .expect("positive band");
            1.0 / v_n
        }
        GammaResolution::Records => 1.0,
    });
    // Target grid: root at u = 0 plus one point per marked time.
    let mut values = Vec::with_capacity(marks.len() + 1);
    let mut tau = Vec::with_capacity(marks.len() + 1);
    values.push(0.0);
    tau.push(0);
    for &s in &marks {
        values.push(series[s]);
        tau.push(s);
    }
    // gamma_count[s] = #(marks <= s): piecewise constant, right continuous,
    // zero at the origin.
    let mut gamma_count = Vec::with_capacity(series.len());
    let mut k = 0usize;
    for s in 0..series.len() {
        while k < marks.len() && marks[k] <= s {
            k += 1;
        }
        gamma_count.push(k as u32);
    }
    Ok((TargetSeries { values, spacing }, TimeChange { gamma_count, tau, spacing }))
}
