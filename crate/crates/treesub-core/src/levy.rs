//! Discrete surrogate for stable height processes.
//!
//! A downward-skip-free integer walk with critical offspring increments
//! codes a forest of Galton–Watson trees; its height process `H_n` counts
//! the running-minimum records seen from `n` looking back, computed here in
//! amortised linear time. For the stable family the height-tail intensity
//! `v(h)` has the closed form `(c * beta * h)^(-1/beta)`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::rng::CounterRng;

#[derive(Clone, Debug, PartialEq)]
pub enum LevyError {
    InvalidGamma(f64),
    InvalidLevel(f64),
    EmptyInput,
}

impl fmt::Display for LevyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevyError::InvalidGamma(g) => write!(f, "gamma must lie in (1, 2], got {g}"),
            LevyError::InvalidLevel(h) => write!(f, "level must be positive, got {h}"),
            LevyError::EmptyInput => write!(f, "empty input"),
        }
    }
}

/// Branching mechanisms with a closed-form height tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchingLaw {
    /// `psi0(r) = sqrt(8/3) r^(3/2)`; the stable(1/2) special case arising
    /// from subordination of the Brownian tree by the label maximum.
    Psi0,
    /// `psi(r) = c r^(1+beta)` with `c > 0`, `beta` in (0, 1).
    Stable { beta: f64, c: f64 },
    /// `psi(r) = r^2 / 2` (the Brownian case).
    Quadratic,
}

impl BranchingLaw {
    pub fn psi0_constant() -> f64 {
        math::sqrt(8.0 / 3.0)
    }

    /// Tail intensity of the tree height: the unique `v` with
    /// `integral_v^inf dr / psi(r) = h`.
    pub fn theoretical_v(&self, h: f64) -> Result<f64, LevyError> {
        if !(h > 0.0) {
            return Err(LevyError::InvalidLevel(h));
        }
        Ok(match *self {
            BranchingLaw::Psi0 => 1.5 / (h * h),
            BranchingLaw::Stable { beta, c } => math::powf(c * beta * h, -1.0 / beta),
            BranchingLaw::Quadratic => 2.0 / h,
        })
    }
}

/// An integer walk with increments >= -1, stored with prefix sums and
/// running minima.
#[derive(Clone, Debug)]
pub struct SkipFreeWalk {
    increments: Vec<i64>,
    sums: Vec<i64>,
    minima: Vec<i64>,
}

impl SkipFreeWalk {
    pub fn from_increments(increments: Vec<i64>) -> Self {
        assert!(increments.iter().all(|&x| x >= -1), "increments must be >= -1");
        let mut sums = Vec::with_capacity(increments.len() + 1);
        let mut minima = Vec::with_capacity(increments.len() + 1);
        let mut s = 0i64;
        let mut m = 0i64;
        sums.push(0);
        minima.push(0);
        for &x in &increments {
            s += x;
            m = m.min(s);
            sums.push(s);
            minima.push(m);
        }
        SkipFreeWalk { increments, sums, minima }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increments(&self) -> &[i64] {
        &self.increments
    }

    /// Prefix sums `S`, with `S[0] = 0`; length `len() + 1`.
    pub fn sums(&self) -> &[i64] {
        &self.sums
    }

    /// Running minima `I`, aligned with `sums`.
    pub fn minima(&self) -> &[i64] {
        &self.minima
    }
}

/// Sampler for the critical offspring law with generating function
/// `f(s) = s + (1 - s)^gamma / gamma` (tail index `gamma`), or the
/// geometric(1/2) law at `gamma = 2`.
///
/// Probabilities: `p0 = 1/gamma`, `p1 = 0`, and for `k >= 2`
/// `p_{k+1} = p_k (k - gamma) / (k + 1)` starting from `p2 = (gamma-1)/2`.
/// Sampling inverts a precomputed cumulative table and falls back to a
/// Pareto tail draw beyond the table.
#[derive(Clone, Debug)]
pub struct OffspringSampler {
    gamma: f64,
    /// cdf[k] = P(offspring <= k), up to the table horizon.
    cdf: Vec<f64>,
}

const OFFSPRING_TABLE_LEN: usize = 1 << 20;

impl OffspringSampler {
    pub fn new(gamma: f64) -> Result<Self, LevyError> {
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(LevyError::InvalidGamma(gamma));
        }
        let mut cdf = Vec::with_capacity(OFFSPRING_TABLE_LEN);
        if gamma == 2.0 {
            // Geometric(1/2): p_k = 2^-(k+1).
            let mut acc = 0.0;
            let mut p = 0.5;
            for _ in 0..OFFSPRING_TABLE_LEN {
                acc += p;
                cdf.push(acc);
                p *= 0.5;
                if p < 1e-300 {
                    break;
                }
            }
        } else {
            let mut acc = 1.0 / gamma;
            cdf.push(acc); // k = 0
            cdf.push(acc); // k = 1 has probability 0
            let mut p = (gamma - 1.0) / 2.0;
            let mut k = 2usize;
            while k < OFFSPRING_TABLE_LEN {
                acc += p;
                cdf.push(acc);
                p *= (k as f64 - gamma) / (k as f64 + 1.0);
                k += 1;
            }
        }
        Ok(OffspringSampler { gamma, cdf })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Exact table probability `P(offspring = k)` for table-resident `k`.
    pub fn pmf(&self, k: usize) -> f64 {
        if k == 0 {
            self.cdf[0]
        } else if k < self.cdf.len() {
            self.cdf[k] - self.cdf[k - 1]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut CounterRng) -> u64 {
        let u = rng.next_unit();
        let last = *self.cdf.last().unwrap();
        if u > last {
            // Pareto tail: conditionally on exceeding the table horizon the
            // law is close to P(X > x) ~ (x/K)^-gamma.
            let k = self.cdf.len() as f64;
            let v = rng.next_unit();
            let x = k * math::powf(v, -1.0 / self.gamma);
            return x as u64;
        }
        // Binary search for the smallest k with cdf[k] >= u.
        let mut lo = 0usize;
        let mut hi = self.cdf.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] >= u {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo as u64
    }
}

/// A walk of i.i.d. increments `offspring - 1` from [`OffspringSampler`].
pub fn sample_walk(gamma: f64, n: usize, seed: u64) -> Result<SkipFreeWalk, LevyError> {
    let sampler = OffspringSampler::new(gamma)?;
    let mut rng = CounterRng::new(seed, 0);
    let increments: Vec<i64> = (0..n).map(|_| sampler.sample(&mut rng) as i64 - 1).collect();
    Ok(SkipFreeWalk::from_increments(increments))
}

/// Discrete height sequence of a skip-free walk, with the index of the first
/// return of `S` to a strict new minimum (the first excursion end), if any.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightSeq {
    h: Vec<u32>,
    chi: Option<usize>,
}

impl HeightSeq {
    pub fn heights(&self) -> &[u32] {
        &self.h
    }

    /// First `n >= 1` with `H[n] = 0`, i.e. the end of the first excursion.
    pub fn chi(&self) -> Option<usize> {
        self.chi
    }
}

/// `H[n] = #{k < n : S[k] = min(S[k..=n])}` for every prefix, computed with
/// a stack of the surviving record values (amortised O(n)).
pub fn discrete_height(walk: &SkipFreeWalk) -> HeightSeq {
    let sums = walk.sums();
    let n = walk.len();
    let mut h = Vec::with_capacity(n + 1);
    h.push(0u32);
    let mut stack: Vec<i64> = Vec::new();
    let mut chi = None;
    for k in 0..n {
        let next = sums[k + 1];
        if next >= sums[k] {
            stack.push(sums[k]);
        } else {
            // Skip-free: the drop is exactly one, so pop records above it.
            while let Some(&top) = stack.last() {
                if top > next {
                    stack.pop();
                } else {
                    break;
                }
            }
        }
        h.push(stack.len() as u32);
        if chi.is_none() && stack.is_empty() {
            chi = Some(k + 1);
        }
    }
    HeightSeq { h, chi }
}

/// Quadratic-time reference for [`discrete_height`]; test oracle only.
/// Counts, for each m, the indices k < m with `S[k] = min(S[k..=m])` using a
/// backward running minimum.
pub fn discrete_height_brute(walk: &SkipFreeWalk) -> Vec<u32> {
    let s = walk.sums();
    let n = walk.len();
    let mut out = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut count = 0u32;
        let mut suffix_min = s[m];
        for k in (0..m).rev() {
            if s[k] < suffix_min {
                suffix_min = s[k];
            }
            if s[k] == suffix_min {
                count += 1;
            }
        }
        out.push(count);
    }
    out
}

/// Running level local time: `(1/eps) * sum_{1<=r<=t} 1{h <= H[r]*scale < h+eps} * dt`.
///
/// The band is closed on the left so that, on the raw walk with `scale = 1`,
/// `eps = 1`, `dt = 1` and `h = 0`, the terminal value counts the strict
/// descending ladder steps and equals `-I` exactly.
pub fn level_local_time(hs: &HeightSeq, h: f64, eps: f64, scale: f64, dt: f64) -> Vec<f64> {
    assert!(eps > 0.0 && scale > 0.0 && dt > 0.0);
    let mut out = Vec::with_capacity(hs.h.len());
    let mut acc = 0.0;
    out.push(0.0);
    for &v in &hs.h[1..] {
        let x = v as f64 * scale;
        if x >= h && x < h + eps {
            acc += dt / eps;
        }
        out.push(acc);
    }
    out
}

/// One excursion of `H` strictly above an integer level.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcursionAbove {
    /// First index with `H > level`.
    pub start: usize,
    /// First index after `start` with `H <= level` (exclusive end).
    pub end: usize,
    /// Heights shifted down by the level.
    pub shifted: Vec<u32>,
    /// Visits to the level strictly before `start` (discrete local time mark).
    pub entry_local_time: u64,
}

/// All maximal intervals with `H > level`, each shifted down by `level` and
/// paired with the discrete local time of `H` at `level` at its start.
pub fn excursions_above(hs: &HeightSeq, level: u32) -> Vec<ExcursionAbove> {
    let h = &hs.h;
    let mut out = Vec::new();
    let mut visits = 0u64;
    let mut i = 0usize;
    while i < h.len() {
        if h[i] > level {
            let start = i;
            let mark = visits;
            while i < h.len() && h[i] > level {
                i += 1;
            }
            let shifted = h[start..i].iter().map(|&v| v - level).collect();
            out.push(ExcursionAbove { start, end: i, shifted, entry_local_time: mark });
        } else {
            if h[i] == level && i >= 1 {
                visits += 1;
            }
            i += 1;
        }
    }
    out
}

/// Offspring histogram over all vertices of a plane forest given by its
/// height sequence (children = direct +1 steps above each vertex).
pub fn forest_offspring_histogram(heights: &[u32]) -> BTreeMap<u32, u64> {
    let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
    // counts[d] = number of children seen so far for the currently open
    // vertex at depth d.
    let mut open: Vec<u32> = Vec::new();
    for &h in heights {
        let d = h as usize;
        while open.len() > d + 1 {
            let c = open.pop().unwrap();
            *hist.entry(c).or_insert(0) += 1;
        }
        if open.len() == d + 1 {
            // Sibling of the vertex currently open at this depth.
            let c = open.pop().unwrap();
            *hist.entry(c).or_insert(0) += 1;
        }
        debug_assert_eq!(open.len(), d);
        if let Some(parent) = open.last_mut() {
            *parent += 1;
        }
        open.push(0);
    }
    while let Some(c) = open.pop() {
        *hist.entry(c).or_insert(0) += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn height_matches_hand_example() {
        let w = SkipFreeWalk::from_increments(vec![1, 1, -1, -1, -1]);
        let hs = discrete_height(&w);
        assert_eq!(hs.heights(), &[0, 1, 2, 2, 1, 0]);
        assert_eq!(hs.chi(), Some(5));
    }

    #[test]
    fn all_down_steps_give_zero_height() {
        let w = SkipFreeWalk::from_increments(vec![-1, -1, -1]);
        let hs = discrete_height(&w);
        assert_eq!(hs.heights(), &[0, 0, 0, 0]);
        assert_eq!(hs.chi(), Some(1));
    }

    #[test]
    fn height_zero_iff_strict_new_minimum() {
        let w = sample_walk(1.5, 4000, 99).unwrap();
        let hs = discrete_height(&w);
        let s = w.sums();
        for n in 1..=w.len() {
            let strict_min = s[n] < *s[..n].iter().min().unwrap();
            assert_eq!(hs.heights()[n] == 0, strict_min, "index {n}");
        }
    }

    #[test]
    fn height_matches_brute_force_short_exhaustive() {
        // All walks of length <= 7 over increments {-1, 0, 1, 2}.
        let alphabet = [-1i64, 0, 1, 2];
        for len in 1..=7usize {
            let total = 4usize.pow(len as u32);
            for code in 0..total {
                let mut c = code;
                let mut inc = Vec::with_capacity(len);
                for _ in 0..len {
                    inc.push(alphabet[c % 4]);
                    c /= 4;
                }
                let w = SkipFreeWalk::from_increments(inc);
                let fast = discrete_height(&w);
                assert_eq!(fast.heights(), &discrete_height_brute(&w)[..]);
            }
        }
    }

    #[test]
    fn offspring_law_gamma2_is_geometric() {
        let s = OffspringSampler::new(2.0).unwrap();
        assert!((s.pmf(0) - 0.5).abs() < 1e-15);
        assert!((s.pmf(1) - 0.25).abs() < 1e-15);
        assert!((s.pmf(2) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn offspring_law_gamma_three_halves() {
        let s = OffspringSampler::new(1.5).unwrap();
        assert!((s.pmf(0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.pmf(1), 0.0);
        assert!((s.pmf(2) - 0.25).abs() < 1e-15);
        // Criticality: the table mean is 1 up to tail truncation.
        let mean: f64 = (0..OFFSPRING_TABLE_LEN).map(|k| k as f64 * s.pmf(k)).sum();
        assert!((mean - 1.0).abs() < 2e-3, "mean {mean}");
    }

    #[test]
    fn sampled_increments_have_zero_mean() {
        let w = sample_walk(1.5, 400_000, 5).unwrap();
        let mean = w.sums()[w.len()] as f64 / w.len() as f64;
        // Heavy-tailed, so the tolerance is loose.
        assert!(mean.abs() < 0.15, "mean increment {mean}");
    }

    #[test]
    fn invalid_gamma_is_rejected() {
        assert!(matches!(sample_walk(1.0, 10, 0), Err(LevyError::InvalidGamma(_))));
        assert!(matches!(sample_walk(2.5, 10, 0), Err(LevyError::InvalidGamma(_))));
    }

    #[test]
    fn theoretical_v_closed_forms() {
        let psi0 = BranchingLaw::Psi0;
        assert!((psi0.theoretical_v(1.0).unwrap() - 1.5).abs() < 1e-12);
        assert!((psi0.theoretical_v(0.5).unwrap() - 6.0).abs() < 1e-12);
        // psi0 is stable(beta = 1/2, c = sqrt(8/3)).
        let stable = BranchingLaw::Stable { beta: 0.5, c: BranchingLaw::psi0_constant() };
        for h in [0.3, 1.0, 2.5] {
            let a = psi0.theoretical_v(h).unwrap();
            let b = stable.theoretical_v(h).unwrap();
            assert!((a - b).abs() < 1e-12 * a.max(1.0));
        }
        // Power-law scaling v(2h)/v(h) = 2^(-1/beta).
        let law = BranchingLaw::Stable { beta: 0.4, c: 1.7 };
        for h in [0.2, 1.0, 3.0] {
            let ratio = law.theoretical_v(2.0 * h).unwrap() / law.theoretical_v(h).unwrap();
            assert!((ratio - math::powf(2.0, -1.0 / 0.4)).abs() < 1e-12);
        }
        assert!(matches!(psi0.theoretical_v(0.0), Err(LevyError::InvalidLevel(_))));
    }

    #[test]
    fn theoretical_v_psi0_matches_numerical_quadrature() {
        // Independent oracle: integrate dr/psi0(r) from v down until the
        // integral reaches h, on a log grid.
        let psi0 = BranchingLaw::Psi0;
        let c = BranchingLaw::psi0_constant();
        for h in [0.5, 1.0, 2.0] {
            let v = psi0.theoretical_v(h).unwrap();
            // integral_v^inf dr / (c r^{3/2}) = 2 / (c sqrt(v))
            let integral = 2.0 / (c * math::sqrt(v));
            assert!((integral - h).abs() < 1e-12, "h={h} integral={integral}");
        }
    }

    #[test]
    fn level_local_time_at_zero_counts_ladder_steps() {
        let w = sample_walk(1.5, 20_000, 17).unwrap();
        let hs = discrete_height(&w);
        let l0 = level_local_time(&hs, 0.0, 1.0, 1.0, 1.0);
        let minima = w.minima();
        for t in 0..=w.len() {
            assert_eq!(l0[t], (-minima[t]) as f64, "t={t}");
        }
    }

    #[test]
    fn level_local_time_above_max_is_zero() {
        let w = sample_walk(1.5, 1000, 3).unwrap();
        let hs = discrete_height(&w);
        let max = *hs.heights().iter().max().unwrap() as f64;
        let l = level_local_time(&hs, max + 5.0, 1.0, 1.0, 1.0);
        assert!(l.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn excursions_above_basic() {
        let hs = HeightSeq { h: vec![0, 1, 2, 1, 0, 1, 0], chi: Some(4) };
        let ex = excursions_above(&hs, 0);
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].shifted, vec![1, 2, 1]);
        assert_eq!(ex[1].shifted, vec![1]);
        assert_eq!(ex[0].entry_local_time, 0);
        assert_eq!(ex[1].entry_local_time, 1);
        let none = excursions_above(&hs, 2);
        assert!(none.is_empty());
        let one = excursions_above(&hs, 1);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].shifted, vec![1]);
    }

    #[test]
    fn forest_histogram_examples() {
        // Single vertex.
        let h = forest_offspring_histogram(&[0]);
        assert_eq!(h.get(&0), Some(&1));
        // Chain of depth 3: heights 0,1,2.
        let h = forest_offspring_histogram(&[0, 1, 2]);
        assert_eq!(h.get(&1), Some(&2));
        assert_eq!(h.get(&0), Some(&1));
        // Root with two leaves: heights 0,1,1.
        let h = forest_offspring_histogram(&[0, 1, 1]);
        assert_eq!(h.get(&2), Some(&1));
        assert_eq!(h.get(&0), Some(&2));
        // Two single-vertex trees.
        let h = forest_offspring_histogram(&[0, 0]);
        assert_eq!(h.get(&0), Some(&2));
    }

    #[test]
    fn per_excursion_heights_form_valid_forest_sequences() {
        let w = sample_walk(1.5, 50_000, 23).unwrap();
        let hs = discrete_height(&w);
        let h = hs.heights();
        assert_eq!(h[0], 0);
        for t in 1..h.len() {
            assert!(h[t] as i64 - h[t - 1] as i64 <= 1, "step at {t}");
        }
    }
}
