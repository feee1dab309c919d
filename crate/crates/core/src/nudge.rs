//! Observation operators for coarse-cell data assimilation.
//!
//! A [`CoarseCover`](crate::mesh::CoarseCover) pairs each coarse cell with
//! one finite element node. Sampling a discrete field at those nodes and
//! spreading each sample over its cell defines a piecewise-constant
//! surrogate of the field; because the surrogate depends on one nodal value
//! per cell, the feedback term it induces in a Galerkin system is a diagonal
//! matrix, assembled here. The classical cell-average (L2) projection onto
//! the same piecewise constants is provided for comparison.

use crate::error::Error;
use crate::fem::quadrature::TriQuadrature;
use crate::fem::space::ElementMap;
use crate::fem::{FeSpace, SparseOperator};
use crate::mesh::{CoarseCover, Point2};
use crate::Result;

/// One value per coarse cell.
#[derive(Clone, Debug)]
pub struct PwConstField {
    pub values: Vec<f64>,
}

impl PwConstField {
    /// Value over a given mesh triangle.
    pub fn on_triangle(&self, cover: &CoarseCover, tri: usize) -> f64 {
        self.values[cover.tri_to_cell[tri]]
    }
}

fn require_scalar(space: &FeSpace) -> Result<()> {
    if space.components() != 1 {
        return Err(Error::IncompatibleSpace(
            "piecewise-constant surrogates are defined for scalar fields".into(),
        ));
    }
    Ok(())
}

fn check_cover(cover: &CoarseCover, space: &FeSpace) -> Result<()> {
    if cover.tri_to_cell.len() != space.mesh().num_triangles() {
        return Err(Error::IncompatibleSpace(
            "cover and space were built on different meshes".into(),
        ));
    }
    Ok(())
}

/// Nodal-sample surrogate: each cell takes the field value at its paired
/// node.
pub fn interp_tilde(cover: &CoarseCover, space: &FeSpace, coeffs: &[f64]) -> Result<PwConstField> {
    require_scalar(space)?;
    check_cover(cover, space)?;
    if coeffs.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} dofs",
            coeffs.len(),
            space.num_dofs()
        )));
    }
    Ok(PwConstField {
        values: cover.cells.iter().map(|c| coeffs[c.paired_node]).collect(),
    })
}

/// Cell-average surrogate: the L2 projection of the field onto piecewise
/// constants over the cover, computed by exact quadrature.
pub fn project_l2_pwconst(
    cover: &CoarseCover,
    space: &FeSpace,
    coeffs: &[f64],
) -> Result<PwConstField> {
    require_scalar(space)?;
    check_cover(cover, space)?;
    let quad = TriQuadrature::for_degree(space.degree())?;
    let mesh = space.mesh().clone();
    let mut values = Vec::with_capacity(cover.cells.len());
    for cell in &cover.cells {
        let mut integral = 0.0;
        for &t in &cell.member_triangles {
            let map = ElementMap::new(&mesh, t);
            for (q, bary) in quad.points.iter().enumerate() {
                integral += quad.weights[q] * map.det * space.eval_in_elem(coeffs, t, *bary, 0);
            }
        }
        values.push(integral / cell.area);
    }
    Ok(PwConstField { values })
}

/// Weighting of the diagonal feedback matrix.
#[derive(Clone, Copy, Debug)]
pub enum NudgeWeight {
    /// Entry = area of the observing cell; the Galerkin matrix of the
    /// nodal-sample surrogate pair.
    CellArea,
    /// Constant entry, a simplified variant that only changes the effective
    /// feedback strength.
    Uniform(f64),
}

/// Diagonal matrix with one entry per paired node and field component.
/// Multiplying a coefficient vector by it picks out observed nodal values
/// scaled by the cell weight; everything else maps to zero.
pub fn build_nudging_matrix(
    cover: &CoarseCover,
    space: &FeSpace,
    weight: NudgeWeight,
) -> Result<SparseOperator> {
    check_cover(cover, space)?;
    let mut diag = vec![0.0; space.num_dofs()];
    for cell in &cover.cells {
        let w = match weight {
            NudgeWeight::CellArea => cell.area,
            NudgeWeight::Uniform(v) => v,
        };
        for c in 0..space.components() {
            diag[space.dof_index(c, cell.paired_node)] = w;
        }
    }
    Ok(SparseOperator::from_diagonal(&diag))
}

/// Nodal samples of an analytic field at the paired nodes, zero elsewhere.
/// Feeding this (or a full truth coefficient vector) through the nudging
/// matrix gives the observation term of an assimilating system.
pub fn sample_observations(
    cover: &CoarseCover,
    space: &FeSpace,
    f: impl Fn(Point2, usize) -> f64,
) -> Result<Vec<f64>> {
    check_cover(cover, space)?;
    let mut samples = vec![0.0; space.num_dofs()];
    for cell in &cover.cells {
        let p = space.node_coords()[cell.paired_node];
        for c in 0..space.components() {
            samples[space.dof_index(c, cell.paired_node)] = f(p, c);
        }
    }
    Ok(samples)
}

/// L2 distances of the nodal-sample surrogate from the field itself and
/// from the cell-average projection, for one scalar field.
#[derive(Clone, Copy, Debug)]
pub struct InterpErrorReport {
    /// Largest cell diameter of the cover.
    pub h: f64,
    /// |field - surrogate|_L2.
    pub err_vs_field: f64,
    /// |surrogate - cell averages|_L2.
    pub err_vs_l2proj: f64,
}

pub fn interp_error_report(
    cover: &CoarseCover,
    space: &FeSpace,
    coeffs: &[f64],
) -> Result<InterpErrorReport> {
    let tilde = interp_tilde(cover, space, coeffs)?;
    // Work with the shifted field u_h - sample on each element: forming the
    // difference in coefficient space (sum of shapes is identically one)
    // makes both errors vanish bitwise for constant fields.
    let quad = TriQuadrature::for_degree(2 * space.degree())?;
    let mesh = space.mesh().clone();
    let mut field_sq = 0.0;
    let mut cell_residual = vec![0.0; cover.num_cells()];
    for t in 0..mesh.num_triangles() {
        let map = ElementMap::new(&mesh, t);
        let cell = cover.tri_to_cell[t];
        let tv = tilde.values[cell];
        let nodes = space.elem_nodes(t);
        for (q, bary) in quad.points.iter().enumerate() {
            let shapes = crate::fem::space::shape_values(space.degree(), *bary);
            let mut d = 0.0;
            for (loc, &node) in nodes.iter().enumerate() {
                d += (coeffs[node] - tv) * shapes[loc];
            }
            let w = quad.weights[q] * map.det;
            field_sq += w * d * d;
            cell_residual[cell] += w * d;
        }
    }
    // The cell average differs from the sample by the mean residual, so
    // |sample - average|^2 per cell is residual^2 / area.
    let mut proj_sq = 0.0;
    for (cell, r) in cover.cells.iter().zip(&cell_residual) {
        proj_sq += r * r / cell.area;
    }
    Ok(InterpErrorReport {
        h: cover.h_max,
        err_vs_field: field_sq.sqrt(),
        err_vs_l2proj: proj_sq.sqrt(),
    })
}
