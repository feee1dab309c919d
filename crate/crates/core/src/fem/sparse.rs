//! Compressed sparse row matrices sized for 2D finite element work, with a
//! coordinate-format builder for assembly.
//!
//! Invariants: column indices are strictly increasing within each row and no
//! explicitly stored zeros survive construction (entries that cancel during
//! duplicate merging are dropped).

use crate::error::Error;
use crate::Result;
use std::io::Write;

/// CSR matrix over f64.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates (row, col, value) triplets; duplicates are summed on build.
#[derive(Clone, Debug)]
pub struct CooBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl CooBuilder {
    pub fn new(nrows: usize, ncols: usize) -> CooBuilder {
        assert!(nrows < u32::MAX as usize && ncols < u32::MAX as usize);
        CooBuilder { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row as u32, col as u32, value));
        }
    }

    /// Add a whole operator, scaled, at a block offset.
    pub fn push_block(&mut self, op: &SparseOperator, scale: f64, row_off: usize, col_off: usize) {
        for row in 0..op.nrows {
            for (col, v) in op.row(row) {
                self.push(row + row_off, col + col_off, scale * v);
            }
        }
    }

    /// Like [`push_block`](Self::push_block) but inserting the transpose.
    pub fn push_block_transposed(
        &mut self,
        op: &SparseOperator,
        scale: f64,
        row_off: usize,
        col_off: usize,
    ) {
        for row in 0..op.nrows {
            for (col, v) in op.row(row) {
                self.push(col + row_off, row + col_off, scale * v);
            }
        }
    }

    pub fn build(mut self) -> SparseOperator {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut iter = self.entries.iter().peekable();
        while let Some(&(r, c, v)) = iter.next() {
            let mut sum = v;
            while let Some(&&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    sum += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if sum != 0.0 {
                row_ptr[r as usize + 1] += 1;
                col_idx.push(c as usize);
                values.push(sum);
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

impl SparseOperator {
    /// Identity of the given size.
    pub fn identity(n: usize) -> SparseOperator {
        SparseOperator {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Diagonal matrix from the nonzero entries of `diag`.
    pub fn from_diagonal(diag: &[f64]) -> SparseOperator {
        let mut b = CooBuilder::new(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            b.push(i, i, v);
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row, paired.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(col, _)| col == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    /// x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    /// Sum of scaled operators with identical shape.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)]) -> SparseOperator {
        let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
        let mut b = CooBuilder::new(nrows, ncols);
        for &(scale, op) in terms {
            assert_eq!((op.nrows, op.ncols), (nrows, ncols), "shape mismatch");
            b.push_block(op, scale, 0, 0);
        }
        b.build()
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut b = CooBuilder::new(self.ncols, self.nrows);
        b.push_block_transposed(self, 1.0, 0, 0);
        b.build()
    }

    /// Largest absolute asymmetry, max |A - A^T|, for symmetry checks.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - t.get(r, c)).abs());
            }
            for (c, v) in t.row(r) {
                worst = worst.max((v - self.get(r, c)).abs());
            }
        }
        worst
    }

    /// Replace the given rows (ascending, deduplicated by the caller) with
    /// identity rows. Used to impose nodal constraints.
    pub fn replace_rows_with_identity(&self, rows: &[usize]) -> SparseOperator {
        let mut b = CooBuilder::new(self.nrows, self.ncols);
        let mut is_constrained = vec![false; self.nrows];
        for &r in rows {
            is_constrained[r] = true;
        }
        for r in 0..self.nrows {
            if is_constrained[r] {
                b.push(r, r, 1.0);
            } else {
                for (c, v) in self.row(r) {
                    b.push(r, c, v);
                }
            }
        }
        b.build()
    }

    /// Dense copy, row major; only sensible for small matrices in tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[r][c] = v;
            }
        }
        d
    }

    /// Write in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }

    /// Indices of rows with no stored entries (structurally singular when
    /// square). Cheap pre-check before factorization.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.nrows)
            .filter(|&r| self.row_ptr[r] == self.row_ptr[r + 1])
            .collect()
    }

}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Check every entry is finite; `what` names the vector in the error.
pub fn check_finite(x: &[f64], what: &str) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::DimensionMismatch(format!(
            "{what} has non-finite entry at index {i}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseOperator {
        let mut b = CooBuilder::new(3, 3);
        b.push(0, 0, 2.0);
        b.push(0, 2, -1.0);
        b.push(1, 1, 3.0);
        b.push(2, 0, 0.5);
        b.push(2, 2, 1.0);
        b.build()
    }

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let mut b = CooBuilder::new(2, 2);
        b.push(0, 0, 1.5);
        b.push(0, 0, 2.5);
        b.push(1, 0, 1.0);
        b.push(1, 0, -1.0);
        b.push(1, 1, 1.0);
        let m = b.build();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let m = sample();
        let x = [1.0, 2.0, 3.0];
        let y = m.matvec(&x);
        assert_eq!(y, vec![2.0 - 3.0, 6.0, 0.5 + 3.0]);
    }

    #[test]
    fn transpose_round_trip() {
        let m = sample();
        let tt = m.transpose().transpose();
        assert_eq!(m.to_dense(), tt.to_dense());
    }

    #[test]
    fn linear_combination_cancels_exactly() {
        let m = sample();
        let z = SparseOperator::linear_combination(&[(1.0, &m), (-1.0, &m)]);
        assert_eq!(z.nnz(), 0);
    }

    #[test]
    fn row_replacement_keeps_other_rows() {
        let m = sample().replace_rows_with_identity(&[1]);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.row(1).count(), 1);
        assert_eq!(m.get(0, 2), -1.0);
    }

    #[test]
    fn matrix_market_output_shape() {
        let mut buf = Vec::new();
        sample().write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("%%MatrixMarket"));
        assert_eq!(lines.next().unwrap(), "3 3 5");
        assert_eq!(lines.count(), 5);
    }

    #[test]
    fn empty_row_detection() {
        let mut b = CooBuilder::new(3, 3);
        b.push(0, 0, 1.0);
        b.push(2, 1, 1.0);
        let m = b.build();
        assert_eq!(m.empty_rows(), vec![1]);
    }
}
