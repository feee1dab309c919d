//! Discrete norms: quadrature L2 errors against analytic fields, and the
//! weighted two-level norm used to analyze the second-order time stepper.

use super::quadrature::TriQuadrature;
use super::space::{ElementMap, FeSpace};
use super::sparse::SparseOperator;
use crate::mesh::Point2;
use crate::Result;

/// L2 norm of (u_h - exact) over the mesh, all components summed, using a
/// rule exact at `quad_degree`.
pub fn l2_error(
    space: &FeSpace,
    coeffs: &[f64],
    exact: impl Fn(Point2, usize) -> f64,
    quad_degree: usize,
) -> Result<f64> {
    let quad = TriQuadrature::for_degree(quad_degree)?;
    let mesh = space.mesh().clone();
    let mut total = 0.0;
    for elem in 0..mesh.num_triangles() {
        let map = ElementMap::new(&mesh, elem);
        for (q, bary) in quad.points.iter().enumerate() {
            let w = quad.weights[q] * map.det;
            let p = map.point(&mesh, elem, *bary);
            for c in 0..space.components() {
                let diff = space.eval_in_elem(coeffs, elem, *bary, c) - exact(p, c);
                total += w * diff * diff;
            }
        }
    }
    Ok(total.sqrt())
}

/// L2 norm of a discrete field.
pub fn l2_norm(space: &FeSpace, coeffs: &[f64]) -> Result<f64> {
    l2_error(space, coeffs, |_, _| 0.0, 2 * space.degree())
}

/// Weight matrix of the two-level stepper norm: for the pair (a, b),
/// |(a, b)|_G^2 = (1/2)|a|_M^2 - 2 (a, b)_M + (5/2)|b|_M^2 with M the mass
/// matrix. Positive definite on pairs, equivalent to |a|^2 + |b|^2.
pub const G_NORM_WEIGHTS: [[f64; 2]; 2] = [[0.5, -1.0], [-1.0, 2.5]];

/// Squared G-norm of the state pair (prev, curr) in the mass inner product.
pub fn g_norm_sq(mass: &SparseOperator, prev: &[f64], curr: &[f64]) -> f64 {
    let w = &G_NORM_WEIGHTS;
    w[0][0] * mass.bilinear(prev, prev)
        + (w[0][1] + w[1][0]) * mass.bilinear(prev, curr)
        + w[1][1] * mass.bilinear(curr, curr)
}

pub fn g_norm(mass: &SparseOperator, prev: &[f64], curr: &[f64]) -> f64 {
    g_norm_sq(mass, prev, curr).max(0.0).sqrt()
}
