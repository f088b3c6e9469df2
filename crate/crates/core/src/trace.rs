//! Boundary trace layout.
//!
//! Every W-matrix acts on the trace vector of `ℋx`, stacked as
//! `(ℋx(b), (ℋx)'(b), ℋx(a), (ℋx)'(a))` with `n` entries per block.

use num_complex::Complex64;

use crate::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceBlock {
    ValueAtB,
    SlopeAtB,
    ValueAtA,
    SlopeAtA,
}

impl TraceBlock {
    pub const ORDER: [TraceBlock; 4] = [
        TraceBlock::ValueAtB,
        TraceBlock::SlopeAtB,
        TraceBlock::ValueAtA,
        TraceBlock::SlopeAtA,
    ];

    pub fn position(self) -> usize {
        match self {
            TraceBlock::ValueAtB => 0,
            TraceBlock::SlopeAtB => 1,
            TraceBlock::ValueAtA => 2,
            TraceBlock::SlopeAtA => 3,
        }
    }

    pub fn is_slope(self) -> bool {
        matches!(self, TraceBlock::SlopeAtB | TraceBlock::SlopeAtA)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceConvention {
    pub n: usize,
}

impl TraceConvention {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn len(&self) -> usize {
        4 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Index of component `k` of `block` inside the trace vector.
    pub fn index(&self, block: TraceBlock, k: usize) -> usize {
        debug_assert!(k < self.n);
        block.position() * self.n + k
    }

    /// Stacks the four boundary quantities into a trace vector.
    pub fn assemble(
        &self,
        value_b: &[Complex64],
        slope_b: &[Complex64],
        value_a: &[Complex64],
        slope_a: &[Complex64],
    ) -> Vec<Complex64> {
        let mut z = Vec::with_capacity(self.len());
        z.extend_from_slice(value_b);
        z.extend_from_slice(slope_b);
        z.extend_from_slice(value_a);
        z.extend_from_slice(slope_a);
        debug_assert_eq!(z.len(), self.len());
        z
    }

    /// A row vector with a single coefficient at (`block`, `k`).
    pub fn unit_row(&self, block: TraceBlock, k: usize, coeff: Complex64) -> CMatrix {
        let mut row = CMatrix::zeros(1, self.len());
        row[(0, self.index(block, k))] = coeff;
        row
    }

    /// Columns of `w` belonging to one block.
    pub fn block_columns(&self, w: &CMatrix, block: TraceBlock) -> CMatrix {
        w.columns(block.position() * self.n, self.n).into_owned()
    }
}
