//! The looptree quotient of a height series.
//!
//! The series is carried on a uniform target grid produced by a time change
//! of a snake trace (see [`crate::embed::build_gamma`]); two grid points face
//! each other when they sit at equal height with strictly higher points
//! between them, and the pseudo-metric `d_circ_loop` is the two-arc cyclic
//! range-maximum formula. At record resolution the grid values are exact
//! stack copies of snake labels, so the correspondence back to the source
//! trace is bitwise.

use alloc::vec::Vec;
use core::fmt;

use crate::embed::{build_gamma, GammaResolution, GammaSeries, TargetSeries, TimeChange};
use crate::rmq::{cyclic_max, RangeMax};
use crate::snake::SnakeTrace;

#[derive(Clone, Debug, PartialEq)]
pub enum LooptreeError {
    OutOfRange(usize),
    Empty,
}

impl fmt::Display for LooptreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LooptreeError::OutOfRange(u) => write!(f, "target index {u} out of range"),
            LooptreeError::Empty => write!(f, "empty looptree"),
        }
    }
}

/// A height series on a uniform target grid with its time change back to the
/// source trace and a cyclic range-maximum index.
pub struct LooptreeView {
    /// Heights at target grid points (root at index 0, height 0).
    pub h: Vec<f64>,
    pub tc: TimeChange,
    rmq: RangeMax,
}

impl LooptreeView {
    /// Builds the looptree of the subordinate-by-minimum structure of a
    /// trace. Record resolution is exact; skeleton resolution quantises to
    /// the dyadic grid.
    pub fn build(
        trace: &SnakeTrace,
        resolution: GammaResolution,
    ) -> Result<Self, LooptreeError> {
        let (target, tc) = build_gamma(trace, GammaSeries::Min, resolution, None)
            .map_err(|_| LooptreeError::Empty)?;
        Ok(Self::from_parts(target, tc))
    }

    pub fn from_parts(target: TargetSeries, tc: TimeChange) -> Self {
        let rmq = RangeMax::new(target.values.clone());
        LooptreeView { h: target.values, tc, rmq }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Duration of the target grid.
    pub fn chi(&self) -> f64 {
        self.tc.chi()
    }

    /// Source time index matched to a target grid point; lands on a time
    /// whose tip equals its ancestral minimum (the root for `u = 0`).
    pub fn phi_map(&self, u: usize) -> Result<usize, LooptreeError> {
        self.tc.tau.get(u).copied().ok_or(LooptreeError::OutOfRange(u))
    }

    /// `2 min( max H over [a..b], max H over [b..a] ) - H[a] - H[b]` with
    /// cyclic arcs on the target grid.
    pub fn d_circ_loop(&self, a: usize, b: usize) -> Result<f64, LooptreeError> {
        if a >= self.len() {
            return Err(LooptreeError::OutOfRange(a));
        }
        if b >= self.len() {
            return Err(LooptreeError::OutOfRange(b));
        }
        if a == b {
            return Ok(0.0);
        }
        let fwd = cyclic_max(&self.rmq, a, b);
        let bwd = cyclic_max(&self.rmq, b, a);
        let m = if fwd < bwd { fwd } else { bwd };
        Ok(2.0 * m - self.h[a] - self.h[b])
    }

    /// Minimised over class representatives: the smallest `d_circ_loop`
    /// value over pairs of members of the two classes.
    pub fn d_circ_loop_classes(
        &self,
        class_a: &[usize],
        class_b: &[usize],
    ) -> Result<f64, LooptreeError> {
        let mut best = f64::INFINITY;
        for &a in class_a {
            for &b in class_b {
                let d = self.d_circ_loop(a, b)?;
                if d < best {
                    best = d;
                }
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(LooptreeError::Empty)
        }
    }

    /// Shortest chain of `d_circ_loop` hops through the sample.
    pub fn d_star_loop(&self, sample: &[usize], a: usize, b: usize) -> Result<f64, LooptreeError> {
        let p = sample.len();
        let ia = sample.iter().position(|&x| x == a).ok_or(LooptreeError::OutOfRange(a))?;
        let ib = sample.iter().position(|&x| x == b).ok_or(LooptreeError::OutOfRange(b))?;
        if ia == ib {
            return Ok(0.0);
        }
        let mut dist = alloc::vec![f64::INFINITY; p];
        let mut done = alloc::vec![false; p];
        dist[ia] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for i in 0..p {
                if !done[i] && dist[i] < best {
                    best = dist[i];
                    u = i;
                }
            }
            if u == usize::MAX || u == ib {
                break;
            }
            done[u] = true;
            for v in 0..p {
                if !done[v] {
                    let w = self.d_circ_loop(sample[u], sample[v])?;
                    if dist[u] + w < dist[v] {
                        dist[v] = dist[u] + w;
                    }
                }
            }
        }
        Ok(dist[ib])
    }
}

/// A matched pair of grid points at equal height (within tolerance).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimPair {
    pub left: usize,
    pub right: usize,
}

/// Matched pairs of a height series.
///
/// `loop_pairs` have strictly higher points in between: these generate the
/// gluing that turns the coded tree into the looptree, and their transitive
/// closure gives `class_of`/`members`. `facing_pairs` have strictly lower
/// points in between: whenever the complementary arc also reaches their
/// height these are exactly the zero-distance pairs of the two-arc
/// pseudo-metric.
#[derive(Clone, Debug)]
pub struct SimClasses {
    pub loop_pairs: Vec<SimPair>,
    pub facing_pairs: Vec<SimPair>,
    /// Class id per grid point (singletons get their own id).
    pub class_of: Vec<u32>,
    /// Members per class id.
    pub members: Vec<Vec<usize>>,
}

impl SimClasses {
    pub fn class_members(&self, u: usize) -> &[usize] {
        &self.members[self.class_of[u] as usize]
    }

    /// Loop and facing pairs together.
    pub fn all_pairs(&self) -> Vec<SimPair> {
        let mut v = self.loop_pairs.clone();
        v.extend_from_slice(&self.facing_pairs);
        v.sort_unstable_by_key(|p| (p.left, p.right));
        v
    }
}

/// One monotone stack sweep: pairs `(i, j)` with `|H[i] - H[j]| <= tol` and
/// every point strictly between on the wrong side of both. `UP = true`
/// requires the between points strictly higher, `UP = false` strictly lower.
fn sweep_pairs<const UP: bool>(h: &[f64], tol: f64) -> Vec<SimPair> {
    let n = h.len();
    let mut pairs = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for j in 0..n {
        while let Some(&i) = stack.last() {
            let blocked = if UP { h[i] >= h[j] - tol } else { h[i] <= h[j] + tol };
            if blocked {
                if crate::math::abs(h[i] - h[j]) <= tol {
                    pairs.push(SimPair { left: i, right: j });
                }
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(j);
    }
    pairs
}

/// Matched pairs on a height series, by monotone stack sweeps, with the
/// transitive closure of the loop pairing. `tol = 0` demands exact equality
/// (meaningful on grids whose equal values are bitwise copies, e.g. integer
/// skeleton heights or synthetic series).
pub fn sim_classes(h: &[f64], tol: f64) -> SimClasses {
    let n = h.len();
    let loop_pairs = sweep_pairs::<true>(h, tol);
    let facing_pairs = sweep_pairs::<false>(h, tol);
    // Union-find closure over loop pairs.
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], x: u32) -> u32 {
        let mut r = x;
        while parent[r as usize] != r {
            r = parent[r as usize];
        }
        let mut c = x;
        while parent[c as usize] != r {
            let next = parent[c as usize];
            parent[c as usize] = r;
            c = next;
        }
        r
    }
    for p in &loop_pairs {
        let a = find(&mut parent, p.left as u32);
        let b = find(&mut parent, p.right as u32);
        if a != b {
            parent[a as usize] = b;
        }
    }
    let mut class_of = alloc::vec![u32::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for u in 0..n {
        let root = find(&mut parent, u as u32);
        if class_of[root as usize] == u32::MAX {
            class_of[root as usize] = members.len() as u32;
            members.push(Vec::new());
        }
        let id = class_of[root as usize];
        class_of[u] = id;
        members[id as usize].push(u);
    }
    SimClasses { loop_pairs, facing_pairs, class_of, members }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::GammaResolution;
    use crate::map::MapView;
    use crate::rng::CounterRng;
    use crate::snake::{sample_trace, SnakeConfig, SnakeMode, SnakeTrace};
    use alloc::vec;

    fn trace(seed: u64, steps: usize) -> SnakeTrace {
        let cfg =
            SnakeConfig::new(1e-4, seed, SnakeMode::NormalizedExcursion { steps }).unwrap();
        sample_trace(&cfg).unwrap()
    }

    #[test]
    fn sim_classes_hand_example() {
        let h = vec![0.0, 1.0, 2.0, 1.0, 2.0, 1.0, 0.0];
        let sc = sim_classes(&h, 0.0);
        let mut ps: Vec<(usize, usize)> =
            sc.all_pairs().iter().map(|p| (p.left, p.right)).collect();
        ps.sort_unstable();
        assert_eq!(ps, vec![(0, 6), (1, 3), (2, 4), (3, 5)]);
        let lp: Vec<(usize, usize)> =
            sc.loop_pairs.iter().map(|p| (p.left, p.right)).collect();
        assert!(lp.contains(&(1, 3)) && lp.contains(&(3, 5)));
        let fp: Vec<(usize, usize)> =
            sc.facing_pairs.iter().map(|p| (p.left, p.right)).collect();
        assert!(fp.contains(&(2, 4)));
        // Transitive closure puts 1, 3, 5 in one class.
        assert_eq!(sc.class_of[1], sc.class_of[3]);
        assert_eq!(sc.class_of[3], sc.class_of[5]);
        assert_ne!(sc.class_of[2], sc.class_of[1]);
    }

    #[test]
    fn unimodal_series_pairs_only_endpoints() {
        let h = vec![0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 0.0];
        let sc = sim_classes(&h, 0.0);
        assert_eq!(sc.loop_pairs.len(), 3);
        for p in &sc.loop_pairs {
            assert_eq!(h[p.left], h[p.right]);
        }
        assert!(sc.facing_pairs.is_empty());
        assert_eq!(sc.class_of[0], sc.class_of[6]);
    }

    #[test]
    fn d_circ_loop_brute_force_check() {
        let h = vec![0.0, 1.0, 2.0, 1.0, 0.5, 3.0, 0.0];
        let target = TargetSeries { values: h.clone(), spacing: 1.0 };
        let tc = TimeChange { gamma_count: vec![0; 7], tau: (0..7).collect(), spacing: 1.0 };
        let v = LooptreeView::from_parts(target, tc);
        let n = h.len();
        let arc_max = |from: usize, to: usize| -> f64 {
            let mut m = f64::MIN;
            let mut i = from;
            loop {
                m = m.max(h[i]);
                if i == to {
                    break;
                }
                i = (i + 1) % n;
            }
            m
        };
        for a in 0..n {
            for b in 0..n {
                let want = if a == b {
                    0.0
                } else {
                    2.0 * arc_max(a, b).min(arc_max(b, a)) - h[a] - h[b]
                };
                assert_eq!(v.d_circ_loop(a, b).unwrap(), want, "a={a} b={b}");
            }
        }
        // Root-to-point distances on the unimodal part.
        assert_eq!(v.d_circ_loop(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn d_star_loop_never_exceeds_d_circ() {
        let t = trace(3, 20_000);
        let v = LooptreeView::build(&t, GammaResolution::Records).unwrap();
        let sample: Vec<usize> = (0..v.len()).step_by(37).collect();
        let mut rng = CounterRng::new(5, 0);
        for _ in 0..20 {
            let a = sample[rng.next_below(sample.len() as u64) as usize];
            let b = sample[rng.next_below(sample.len() as u64) as usize];
            let chain = v.d_star_loop(&sample, a, b).unwrap();
            let direct = v.d_circ_loop(a, b).unwrap();
            assert!(chain <= direct + 1e-12);
            if a == b {
                assert_eq!(chain, 0.0);
            }
        }
    }

    #[test]
    fn phi_lands_on_theta_times_exactly() {
        let t = trace(7, 20_000);
        let v = LooptreeView::build(&t, GammaResolution::Records).unwrap();
        assert_eq!(v.phi_map(0).unwrap(), 0);
        let mut rng = CounterRng::new(9, 0);
        for _ in 0..1000 {
            let u = rng.next_below(v.len() as u64) as usize;
            let s = v.phi_map(u).unwrap();
            assert_eq!(t.zhat[s], t.zmin[s], "phi({u}) = {s} not in theta");
        }
        assert!(v.phi_map(v.len()).is_err());
    }

    #[test]
    fn heights_match_negated_labels_exactly() {
        let t = trace(11, 20_000);
        let v = LooptreeView::build(&t, GammaResolution::Records).unwrap();
        for u in 0..v.len() {
            let s = v.phi_map(u).unwrap();
            let want = if u == 0 { 0.0 } else { -t.zhat[s] };
            assert_eq!(v.h[u], want, "height mismatch at {u}");
        }
    }

    #[test]
    fn isometry_with_source_d_circ_is_exact_at_records() {
        let t = trace(13, 40_000);
        let v = LooptreeView::build(&t, GammaResolution::Records).unwrap();
        let m = MapView::new(&t);
        let mut rng = CounterRng::new(15, 0);
        for _ in 0..200 {
            let a = rng.next_below(v.len() as u64) as usize;
            let b = rng.next_below(v.len() as u64) as usize;
            let da = v.d_circ_loop(a, b).unwrap();
            let db = m.d_circ(v.phi_map(a).unwrap(), v.phi_map(b).unwrap()).unwrap();
            let rel = if db != 0.0 { (da - db).abs() / db.abs() } else { (da - db).abs() };
            assert!(rel <= 1e-9, "a={a} b={b}: loop {da} vs map {db}");
        }
    }

    #[test]
    fn facing_zero_pairs_satisfy_the_height_identity() {
        let t = trace(17, 30_000);
        let v = LooptreeView::build(&t, GammaResolution::Records).unwrap();
        // Facing pairs at tolerance zero have exactly equal heights; when
        // the complementary arc reaches that height the two-arc distance
        // vanishes, which is the zero-pair identity.
        let sc = sim_classes(&v.h, 0.0);
        let top = v.h.iter().cloned().fold(0.0, f64::max);
        let mut checked = 0;
        for p in sc.facing_pairs.iter().take(200) {
            if v.h[p.left] >= top {
                continue;
            }
            let d = v.d_circ_loop(p.left, p.right).unwrap();
            assert_eq!(d, 0.0, "facing pair has nonzero distance");
            checked += 1;
        }
        let _ = checked;
    }

    #[test]
    fn transitivity_on_detected_pairs() {
        let h = vec![0.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 0.0];
        let sc = sim_classes(&h, 0.0);
        // Loop pairs chain all the height-1 valleys into one class.
        assert_eq!(sc.class_of[1], sc.class_of[3]);
        assert_eq!(sc.class_of[3], sc.class_of[5]);
        assert_eq!(sc.class_of[5], sc.class_of[7]);
        for p in &sc.loop_pairs {
            assert_eq!(sc.class_of[p.left], sc.class_of[p.right]);
        }
    }
}
