//! Direct sparse solves. Factorizations run single-threaded so repeated
//! runs produce bit-identical results.

use super::sparse::{norm2, SparseOperator};
use crate::error::Error;
use crate::Result;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use std::sync::Once;

/// Relative residual accepted from a direct solve before the system is
/// reported as ill-conditioned.
pub const DIRECT_SOLVE_REL_TOL: f64 = 1e-9;

static PAR_INIT: Once = Once::new();

fn init_parallelism() {
    PAR_INIT.call_once(|| {
        faer::set_global_parallelism(faer::Par::Seq);
    });
}

/// Sparse LU factorization, reusable across right-hand sides.
pub struct SparseLu {
    lu: Lu<usize, f64>,
    n: usize,
}

pub fn factorize(a: &SparseOperator) -> Result<SparseLu> {
    init_parallelism();
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "cannot factorize a {} x {} system",
            a.nrows(),
            a.ncols()
        )));
    }
    if let Some(&r) = a.empty_rows().first() {
        return Err(Error::SingularSystem(format!(
            "row {r} of the system has no entries"
        )));
    }
    let mut triplets = Vec::with_capacity(a.nnz());
    for r in 0..a.nrows() {
        for (c, v) in a.row(r) {
            triplets.push(Triplet::new(r, c, v));
        }
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows(), a.ncols(), &triplets)
        .map_err(|e| Error::SingularSystem(format!("sparse structure rejected: {e:?}")))?;
    let symbolic = SymbolicLu::try_new(mat.symbolic())
        .map_err(|e| Error::SingularSystem(format!("symbolic factorization failed: {e:?}")))?;
    let lu = Lu::try_new_with_symbolic(symbolic, mat.as_ref())
        .map_err(|e| Error::SingularSystem(format!("numeric factorization failed: {e:?}")))?;
    Ok(SparseLu { lu, n: a.nrows() })
}

impl SparseLu {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} does not match system size {}",
                b.len(),
                self.n
            )));
        }
        let mut x = b.to_vec();
        self.lu
            .solve_in_place(faer::MatMut::from_column_major_slice_mut(&mut x, self.n, 1));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem(
                "solution contains non-finite entries".into(),
            ));
        }
        Ok(x)
    }
}

/// Factorize, solve, and verify the relative residual
/// |Ax - b| / max(|b|, eps).
pub fn solve_checked(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    let lu = factorize(a)?;
    let x = lu.solve(b)?;
    let mut r = a.matvec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    let scale = norm2(b).max(f64::MIN_POSITIVE.sqrt());
    let rel = norm2(&r) / scale;
    if !(rel <= DIRECT_SOLVE_REL_TOL) {
        return Err(Error::SolverTolerance { residual: rel, tol: DIRECT_SOLVE_REL_TOL });
    }
    Ok(x)
}

/// Reference dense LU with partial pivoting. Quadratic storage: use only to
/// cross-check the sparse path on small systems in tests.
pub fn solve_dense_reference(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n != a.ncols() || b.len() != n {
        return Err(Error::DimensionMismatch("dense reference solve shape".into()));
    }
    let mut m = a.to_dense();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot_row][col].abs() < 1e-300 {
            return Err(Error::SingularSystem(format!("zero pivot at column {col}")));
        }
        m.swap(col, pivot_row);
        x.swap(col, pivot_row);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for row in 0..col {
            x[row] -= m[row][col] * x[col];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::sparse::CooBuilder;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_diag_dominant(n: usize, seed: u64) -> (SparseOperator, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coo = CooBuilder::new(n, n);
        for i in 0..n {
            let mut off = 0.0;
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    coo.push(i, j, v);
                    off += v.abs();
                }
            }
            coo.push(i, i, off + rng.random_range(1.0..2.0));
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (coo.build(), b)
    }

    #[test]
    fn sparse_and_dense_paths_agree() {
        for seed in 0..5 {
            let (a, b) = random_diag_dominant(40, seed);
            let x_sparse = solve_checked(&a, &b).unwrap();
            let x_dense = solve_dense_reference(&a, &b).unwrap();
            for (s, d) in x_sparse.iter().zip(&x_dense) {
                assert!((s - d).abs() < 1e-10, "seed {seed}: {s} vs {d}");
            }
        }
    }

    #[test]
    fn factorization_is_reusable() {
        let (a, b) = random_diag_dominant(30, 7);
        let lu = factorize(&a).unwrap();
        let x1 = lu.solve(&b).unwrap();
        let b2 = a.matvec(&x1);
        let x2 = lu.solve(&b2).unwrap();
        // Solving A x2 = A x1 recovers x1.
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let (a, b) = random_diag_dominant(50, 11);
        let x1 = solve_checked(&a, &b).unwrap();
        let x2 = solve_checked(&a, &b).unwrap();
        assert!(x1.iter().zip(&x2).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn structurally_singular_systems_are_reported() {
        let mut coo = CooBuilder::new(3, 3);
        coo.push(0, 0, 1.0);
        coo.push(2, 2, 1.0);
        let a = coo.build();
        assert!(matches!(
            factorize(&a),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn numerically_singular_systems_are_reported() {
        // Two identical rows.
        let mut coo = CooBuilder::new(2, 2);
        coo.push(0, 0, 1.0);
        coo.push(0, 1, 2.0);
        coo.push(1, 0, 1.0);
        coo.push(1, 1, 2.0);
        let a = coo.build();
        let r = solve_checked(&a, &[1.0, 0.0]);
        assert!(r.is_err(), "rank-deficient system accepted");
    }
}
