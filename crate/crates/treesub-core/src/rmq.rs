//! Sparse-table range minimum / maximum queries.
//!
//! O(n log n) precomputation, O(1) queries, leftmost index on ties. Traces
//! reach 10^7 points, so the tables store 32-bit indices.

use alloc::vec::Vec;

#[inline(always)]
fn flog2(v: usize) -> usize {
    (usize::BITS - 1 - v.leading_zeros()) as usize
}

/// Shared sparse-table skeleton; `LESS = true` selects minima, otherwise
/// maxima. Ties resolve to the leftmost index.
#[derive(Clone, Debug)]
struct Sparse<const LESS: bool> {
    n: usize,
    table: Vec<u32>,
}

impl<const LESS: bool> Sparse<LESS> {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n > 0, "empty array");
        assert!(n < u32::MAX as usize, "array too large for u32 indices");
        let lgn = flog2(n);
        let mut table: Vec<u32> = Vec::with_capacity((lgn + 1) * n);
        table.extend((0..n as u32).map(|j| j));
        for i in 1..=lgn {
            let half = 1usize << (i - 1);
            for j in 0..n {
                let idx = if j + (1 << i) <= n {
                    let a = table[(i - 1) * n + j];
                    let b = table[(i - 1) * n + j + half];
                    Self::pick(values, a, b)
                } else {
                    table[(i - 1) * n + j]
                };
                table.push(idx);
            }
        }
        Sparse { n, table }
    }

    #[inline(always)]
    fn pick(values: &[f64], a: u32, b: u32) -> u32 {
        let better = if LESS {
            values[b as usize] < values[a as usize]
        } else {
            values[b as usize] > values[a as usize]
        };
        if better {
            b
        } else {
            a
        }
    }

    /// Best index over the inclusive range `[i, j]`.
    #[inline]
    fn query(&self, values: &[f64], i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        let k = flog2(j - i + 1);
        let a = self.table[k * self.n + i];
        let b = self.table[k * self.n + j + 1 - (1 << k)];
        Self::pick(values, a, b) as usize
    }

}

/// Range-minimum index over an owned array.
#[derive(Clone, Debug)]
pub struct RangeMin {
    values: Vec<f64>,
    sparse: Sparse<true>,
}

impl RangeMin {
    pub fn new(values: Vec<f64>) -> Self {
        let sparse = Sparse::new(&values);
        RangeMin { values, sparse }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Leftmost argmin over the inclusive range `[i, j]`.
    #[inline]
    pub fn argmin(&self, i: usize, j: usize) -> usize {
        self.sparse.query(&self.values, i, j)
    }

    #[inline]
    pub fn min(&self, i: usize, j: usize) -> f64 {
        self.values[self.argmin(i, j)]
    }
}

/// Range-maximum index over an owned array.
#[derive(Clone, Debug)]
pub struct RangeMax {
    values: Vec<f64>,
    sparse: Sparse<false>,
}

impl RangeMax {
    pub fn new(values: Vec<f64>) -> Self {
        let sparse = Sparse::new(&values);
        RangeMax { values, sparse }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Leftmost argmax over the inclusive range `[i, j]`.
    #[inline]
    pub fn argmax(&self, i: usize, j: usize) -> usize {
        self.sparse.query(&self.values, i, j)
    }

    #[inline]
    pub fn max(&self, i: usize, j: usize) -> f64 {
        self.values[self.argmax(i, j)]
    }
}

/// Minimum over the cyclic arc from `i` to `j` (inclusive endpoints, going
/// forward and wrapping past the end).
#[inline]
pub fn cyclic_min(rm: &RangeMin, i: usize, j: usize) -> f64 {
    if i <= j {
        rm.min(i, j)
    } else {
        let n = rm.len();
        let a = rm.min(i, n - 1);
        let b = rm.min(0, j);
        if b < a {
            b
        } else {
            a
        }
    }
}

/// Maximum over the cyclic arc from `i` to `j`.
#[inline]
pub fn cyclic_max(rm: &RangeMax, i: usize, j: usize) -> f64 {
    if i <= j {
        rm.max(i, j)
    } else {
        let n = rm.len();
        let a = rm.max(i, n - 1);
        let b = rm.max(0, j);
        if b > a {
            b
        } else {
            a
        }
    }
}
