//! Count-min sketches sharing one layout.
//!
//! A detector owns several sketches over the same `rows x cols` grid and the
//! same per-row hash functions, so the cell indices of a key are computed
//! once per record and reused everywhere ([`SketchLayout::hash_edge`] /
//! [`SketchLayout::hash_node`] produce an [`IndexVector`] valid for every
//! sketch built on that layout).
//!
//! Row hashers come from the affine-modular family
//! `((a * k + b) mod p) mod cols` with `p = 2^61 - 1`, which is pairwise
//! independent over the reduced key space and fully determined by
//! `(rows, cols, seed)`. A separate identity layout (one row, `k mod cols`)
//! exists for tests that need collision-free cells.

use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::key;
use crate::num::Real;

const MERSENNE61: u64 = (1 << 61) - 1;

/// Geometry rejected at construction.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("sketch geometry must have rows >= 1 and cols >= 1, got {rows}x{cols}")]
    EmptyGeometry { rows: usize, cols: usize },
}

/// One cell coordinate, as returned by [`CountSketch::arg_query`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellPos {
    pub row: usize,
    pub col: usize,
}

/// Per-row column indices of one key; entry `i` belongs to row `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexVector {
    cols: SmallVec<[u32; 8]>,
}

impl IndexVector {
    /// Number of rows this vector indexes.
    #[inline]
    pub fn len(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    /// Column index for `row`.
    #[inline]
    pub fn col(&self, row: usize) -> usize {
        self.cols[row] as usize
    }

    /// Cell coordinate for `row`.
    #[inline]
    pub fn cell(&self, row: usize) -> CellPos {
        CellPos {
            row,
            col: self.col(row),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.cols.iter().map(|&c| c as usize)
    }
}

#[derive(Debug, Clone, Copy)]
struct RowHasher {
    a: u64,
    b: u64,
}

impl RowHasher {
    #[inline]
    fn index(&self, key: u64, cols: u64) -> u32 {
        let k = key % MERSENNE61;
        let h = mod_m61(mul_mod_m61(self.a, k) as u128 + self.b as u128);
        (h % cols) as u32
    }
}

/// `a * b mod (2^61 - 1)` without u128 division.
#[inline]
fn mul_mod_m61(a: u64, b: u64) -> u64 {
    mod_m61(a as u128 * b as u128)
}

#[inline]
fn mod_m61(x: u128) -> u64 {
    let folded = (x & MERSENNE61 as u128) as u64 + (x >> 61) as u64;
    let folded = (folded & MERSENNE61) + (folded >> 61);
    if folded >= MERSENNE61 {
        folded - MERSENNE61
    } else {
        folded
    }
}

#[derive(Debug, Clone)]
enum HashFamily {
    Seeded(Vec<RowHasher>),
    /// One row, `key mod cols`. Collision-free whenever keys stay below
    /// `cols`, which makes exact-tracker comparisons meaningful.
    Identity,
}

/// Shared sketch geometry plus the per-row hash functions.
#[derive(Debug, Clone)]
pub struct SketchLayout {
    rows: usize,
    cols: usize,
    family: HashFamily,
}

impl SketchLayout {
    /// Layout with `rows` hashers drawn deterministically from `seed`.
    pub fn seeded(rows: usize, cols: usize, seed: u64) -> Result<Self, LayoutError> {
        if rows == 0 || cols == 0 {
            return Err(LayoutError::EmptyGeometry { rows, cols });
        }
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            key::mix64(state)
        };
        let hashers = (0..rows)
            .map(|_| RowHasher {
                a: 1 + next() % (MERSENNE61 - 1),
                b: next() % MERSENNE61,
            })
            .collect();
        Ok(SketchLayout {
            rows,
            cols,
            family: HashFamily::Seeded(hashers),
        })
    }

    /// Single-row identity layout: key `k` lands in column `k mod cols`.
    pub fn identity(cols: usize) -> Result<Self, LayoutError> {
        if cols == 0 {
            return Err(LayoutError::EmptyGeometry { rows: 1, cols });
        }
        Ok(SketchLayout {
            rows: 1,
            cols,
            family: HashFamily::Identity,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Cells per sketch.
    #[inline]
    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    /// Index vector of a raw 64-bit key.
    pub fn hash_key(&self, key: u64) -> IndexVector {
        let mut cols = SmallVec::with_capacity(self.rows);
        match &self.family {
            HashFamily::Seeded(hashers) => {
                for h in hashers {
                    cols.push(h.index(key, self.cols as u64));
                }
            }
            HashFamily::Identity => cols.push((key % self.cols as u64) as u32),
        }
        IndexVector { cols }
    }

    /// Index vector of the ordered edge type `(s, d)`.
    #[inline]
    pub fn hash_edge(&self, s: u64, d: u64) -> IndexVector {
        self.hash_key(key::edge_key(s, d))
    }

    /// Index vector of a single node id.
    #[inline]
    pub fn hash_node(&self, n: u64) -> IndexVector {
        self.hash_key(key::node_key(n))
    }
}

/// Count-min sketch over non-negative real cells.
///
/// Queries return the row minimum, so without decay an estimate never falls
/// below the true count. Cells are reals rather than integers because the
/// detector multiplies them by a scale factor in `(0, 1)`.
#[derive(Debug, Clone)]
pub struct CountSketch<F> {
    layout: Arc<SketchLayout>,
    cells: Vec<F>,
    /// Running sum of all cells, maintained by every mutation.
    total: F,
}

impl<F: Real> CountSketch<F> {
    pub fn new(layout: Arc<SketchLayout>) -> Self {
        let cells = vec![F::zero(); layout.size()];
        CountSketch {
            layout,
            cells,
            total: F::zero(),
        }
    }

    #[inline]
    pub fn layout(&self) -> &SketchLayout {
        &self.layout
    }

    #[inline]
    fn flat(&self, pos: CellPos) -> usize {
        debug_assert!(pos.row < self.layout.rows && pos.col < self.layout.cols);
        pos.row * self.layout.cols + pos.col
    }

    /// Add `amount` to the indexed cell of every row.
    pub fn add(&mut self, idx: &IndexVector, amount: F) {
        debug_assert!(idx.len() == self.layout.rows);
        debug_assert!(amount >= F::zero());
        let cols = self.layout.cols;
        for (row, col) in idx.iter().enumerate() {
            self.cells[row * cols + col] += amount;
            self.total += amount;
        }
    }

    /// Minimum over the indexed cells.
    pub fn query(&self, idx: &IndexVector) -> F {
        debug_assert!(idx.len() == self.layout.rows);
        let cols = self.layout.cols;
        let mut min = F::infinity();
        for (row, col) in idx.iter().enumerate() {
            let v = self.cells[row * cols + col];
            if v < min {
                min = v;
            }
        }
        min
    }

    /// Coordinate of a minimal indexed cell; ties go to the smallest row.
    pub fn arg_query(&self, idx: &IndexVector) -> CellPos {
        debug_assert!(idx.len() == self.layout.rows);
        let cols = self.layout.cols;
        let mut best = CellPos {
            row: 0,
            col: idx.col(0),
        };
        let mut min = self.cells[best.col];
        for (row, col) in idx.iter().enumerate().skip(1) {
            let v = self.cells[row * cols + col];
            if v < min {
                min = v;
                best = CellPos { row, col };
            }
        }
        best
    }

    /// Multiply every cell by `factor`.
    pub fn scale(&mut self, factor: F) {
        debug_assert!(factor >= F::zero() && factor <= F::one());
        for c in &mut self.cells {
            *c *= factor;
        }
        self.total *= factor;
    }

    /// Sum of every cell.
    #[inline]
    pub fn total(&self) -> F {
        self.total
    }

    /// Value at one cell.
    #[inline]
    pub fn cell(&self, pos: CellPos) -> F {
        self.cells[self.flat(pos)]
    }

    /// Add `amount` to one cell.
    #[inline]
    pub fn add_cell(&mut self, pos: CellPos, amount: F) {
        let i = self.flat(pos);
        self.cells[i] += amount;
        self.total += amount;
    }

    /// Multiply one cell by `factor`.
    #[inline]
    pub fn scale_cell(&mut self, pos: CellPos, factor: F) {
        let i = self.flat(pos);
        let old = self.cells[i];
        let new = old * factor;
        self.cells[i] = new;
        self.total += new - old;
    }

    #[inline]
    pub(crate) fn cell_flat(&self, i: usize) -> F {
        self.cells[i]
    }

    #[inline]
    pub(crate) fn add_flat(&mut self, i: usize, amount: F) {
        self.cells[i] += amount;
        self.total += amount;
    }

    #[inline]
    pub(crate) fn scale_flat(&mut self, i: usize, factor: F) {
        let old = self.cells[i];
        let new = old * factor;
        self.cells[i] = new;
        self.total += new - old;
    }
}

/// Boolean twin of [`CountSketch`]: marks, per cell, whether the keys
/// hashing there were active in a timestamp (the busy indicator).
#[derive(Debug, Clone)]
pub struct FlagSketch {
    layout: Arc<SketchLayout>,
    cells: Vec<bool>,
}

impl FlagSketch {
    pub fn new(layout: Arc<SketchLayout>) -> Self {
        let cells = vec![false; layout.size()];
        FlagSketch { layout, cells }
    }

    #[inline]
    pub fn layout(&self) -> &SketchLayout {
        &self.layout
    }

    #[inline]
    fn flat(&self, pos: CellPos) -> usize {
        debug_assert!(pos.row < self.layout.rows && pos.col < self.layout.cols);
        pos.row * self.layout.cols + pos.col
    }

    #[inline]
    pub fn get_cell(&self, pos: CellPos) -> bool {
        self.cells[self.flat(pos)]
    }

    #[inline]
    pub fn set_cell(&mut self, pos: CellPos, value: bool) {
        let i = self.flat(pos);
        self.cells[i] = value;
    }

    /// Set the indexed cell of every row.
    pub fn set(&mut self, idx: &IndexVector) {
        debug_assert!(idx.len() == self.layout.rows);
        let cols = self.layout.cols;
        for (row, col) in idx.iter().enumerate() {
            self.cells[row * cols + col] = true;
        }
    }

    /// Reset every cell to false.
    pub fn clear(&mut self) {
        self.cells.fill(false);
    }

    /// Copy this sketch's cells into `dst`.
    pub fn copy_into(&self, dst: &mut FlagSketch) {
        debug_assert!(dst.cells.len() == self.cells.len());
        dst.cells.copy_from_slice(&self.cells);
    }

    #[inline]
    pub(crate) fn get_flat(&self, i: usize) -> bool {
        self.cells[i]
    }

    #[inline]
    pub(crate) fn set_flat(&mut self, i: usize, value: bool) {
        self.cells[i] = value;
    }
}
