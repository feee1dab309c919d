//! Weak-form assembly of the operators used by the transport and flow
//! solvers: mass, stiffness, convection (plain or skew-symmetrized),
//! velocity-pressure coupling and load vectors.

use super::quadrature::TriQuadrature;
use super::space::{shape_ref_gradients, shape_values, ElementMap, FeSpace, MAX_LOCAL_NODES};
use super::sparse::{CooBuilder, SparseOperator};
use crate::error::Error;
use crate::mesh::{BoundaryTag, Point2};
use crate::Result;

/// Advecting velocity for convection terms.
pub enum VelocityField<'a> {
    Constant([f64; 2]),
    Analytic(&'a dyn Fn(Point2) -> [f64; 2]),
    /// A discrete vector field on the same mesh as the space being assembled.
    Finite { space: &'a FeSpace, coeffs: &'a [f64] },
}

impl VelocityField<'_> {
    fn eval(&self, elem: usize, bary: [f64; 3], point: Point2) -> [f64; 2] {
        match self {
            VelocityField::Constant(u) => *u,
            VelocityField::Analytic(f) => f(point),
            VelocityField::Finite { space, coeffs } => [
                space.eval_in_elem(coeffs, elem, bary, 0),
                space.eval_in_elem(coeffs, elem, bary, 1),
            ],
        }
    }

    fn check_compatible(&self, target: &FeSpace) -> Result<()> {
        if let VelocityField::Finite { space, coeffs } = self {
            if space.components() != 2 {
                return Err(Error::IncompatibleSpace(
                    "advecting field must have two components".into(),
                ));
            }
            if !space.same_mesh(target) {
                return Err(Error::IncompatibleSpace(
                    "advecting field lives on a different mesh".into(),
                ));
            }
            if coeffs.len() != space.num_dofs() {
                return Err(Error::DimensionMismatch(format!(
                    "advecting field has {} coefficients for {} dofs",
                    coeffs.len(),
                    space.num_dofs()
                )));
            }
        }
        Ok(())
    }
}

/// Bilinear form selector for [`assemble_operator`].
pub enum OperatorKind<'a> {
    /// (u, v)
    Mass,
    /// (grad u, grad v)
    Stiffness,
    /// (U . grad u, v), optionally in skew-symmetrized form
    /// ((U . grad u, v) - (U . grad v, u)) / 2.
    Convection { velocity: &'a VelocityField<'a>, skew: bool },
}

/// Assemble a square operator on `space`. Vector spaces get the scalar
/// kernel on each component block; no cross-component coupling arises from
/// these forms. Integration is exact for the mass and stiffness kernels and
/// for convection by fields of the same polynomial degree.
pub fn assemble_operator(space: &FeSpace, kind: &OperatorKind) -> Result<SparseOperator> {
    if let OperatorKind::Convection { velocity, .. } = kind {
        velocity.check_compatible(space)?;
    }
    let quad = TriQuadrature::for_degree(2 * space.degree() + 2)?;
    let n = space.num_dofs();
    let g = space.num_geometric_nodes();
    let nloc = space.nodes_per_elem();
    let mesh = space.mesh().clone();
    let mut coo = CooBuilder::new(n, n);
    let mut local = [[0.0f64; MAX_LOCAL_NODES]; MAX_LOCAL_NODES];
    for elem in 0..mesh.num_triangles() {
        for row in local.iter_mut() {
            row.fill(0.0);
        }
        let map = ElementMap::new(&mesh, elem);
        for (q, bary) in quad.points.iter().enumerate() {
            let w = quad.weights[q] * map.det;
            let shapes = shape_values(space.degree(), *bary);
            match kind {
                OperatorKind::Mass => {
                    for i in 0..nloc {
                        for j in 0..nloc {
                            local[i][j] += w * shapes[i] * shapes[j];
                        }
                    }
                }
                OperatorKind::Stiffness => {
                    let refg = shape_ref_gradients(space.degree(), *bary);
                    let mut grads = [[0.0; 2]; MAX_LOCAL_NODES];
                    for i in 0..nloc {
                        grads[i] = map.physical_gradient(refg[i]);
                    }
                    for i in 0..nloc {
                        for j in 0..nloc {
                            local[i][j] +=
                                w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                        }
                    }
                }
                OperatorKind::Convection { velocity, skew } => {
                    let point = map.point(&mesh, elem, *bary);
                    let u = velocity.eval(elem, *bary, point);
                    let refg = shape_ref_gradients(space.degree(), *bary);
                    let mut conv = [0.0; MAX_LOCAL_NODES];
                    for i in 0..nloc {
                        let gp = map.physical_gradient(refg[i]);
                        conv[i] = u[0] * gp[0] + u[1] * gp[1];
                    }
                    for i in 0..nloc {
                        for j in 0..nloc {
                            local[i][j] += if *skew {
                                0.5 * w * (conv[j] * shapes[i] - conv[i] * shapes[j])
                            } else {
                                w * conv[j] * shapes[i]
                            };
                        }
                    }
                }
            }
        }
        let nodes = space.elem_nodes(elem);
        for c in 0..space.components() {
            for i in 0..nloc {
                for j in 0..nloc {
                    coo.push(c * g + nodes[i], c * g + nodes[j], local[i][j]);
                }
            }
        }
    }
    Ok(coo.build())
}

/// Velocity-pressure coupling B with B[q, u] = (div u, q): rows are pressure
/// dofs, columns velocity dofs. Requires a two-component velocity space and
/// a scalar pressure space of one degree lower on the same mesh (the stable
/// Taylor-Hood pairing).
pub fn assemble_divergence(velocity: &FeSpace, pressure: &FeSpace) -> Result<SparseOperator> {
    if velocity.components() != 2
        || pressure.components() != 1
        || velocity.degree() != pressure.degree() + 1
    {
        return Err(Error::NotInfSup {
            vel: format!("P{} x {}", velocity.degree(), velocity.components()),
            pres: format!("P{} x {}", pressure.degree(), pressure.components()),
        });
    }
    if !velocity.same_mesh(pressure) {
        return Err(Error::IncompatibleSpace(
            "velocity and pressure live on different meshes".into(),
        ));
    }
    let quad = TriQuadrature::for_degree(2 * velocity.degree() + 2)?;
    let mesh = velocity.mesh().clone();
    let gv = velocity.num_geometric_nodes();
    let nv = velocity.nodes_per_elem();
    let np = pressure.nodes_per_elem();
    let mut coo = CooBuilder::new(pressure.num_dofs(), velocity.num_dofs());
    for elem in 0..mesh.num_triangles() {
        let map = ElementMap::new(&mesh, elem);
        let mut local = [[[0.0f64; 2]; MAX_LOCAL_NODES]; MAX_LOCAL_NODES];
        for (q, bary) in quad.points.iter().enumerate() {
            let w = quad.weights[q] * map.det;
            let p_shapes = shape_values(pressure.degree(), *bary);
            let refg = shape_ref_gradients(velocity.degree(), *bary);
            for i in 0..np {
                for j in 0..nv {
                    let gp = map.physical_gradient(refg[j]);
                    local[i][j][0] += w * p_shapes[i] * gp[0];
                    local[i][j][1] += w * p_shapes[i] * gp[1];
                }
            }
        }
        let pn = pressure.elem_nodes(elem);
        let vn = velocity.elem_nodes(elem);
        for i in 0..np {
            for j in 0..nv {
                for c in 0..2 {
                    coo.push(pn[i], c * gv + vn[j], local[i][j][c]);
                }
            }
        }
    }
    Ok(coo.build())
}

/// Load vector (f, v) with `f(point, component)` integrated at the given
/// polynomial degree of exactness.
pub fn assemble_load(
    space: &FeSpace,
    quad_degree: usize,
    f: impl Fn(Point2, usize) -> f64,
) -> Result<Vec<f64>> {
    let quad = TriQuadrature::for_degree(quad_degree)?;
    let mesh = space.mesh().clone();
    let g = space.num_geometric_nodes();
    let nloc = space.nodes_per_elem();
    let mut rhs = vec![0.0; space.num_dofs()];
    for elem in 0..mesh.num_triangles() {
        let map = ElementMap::new(&mesh, elem);
        let nodes = space.elem_nodes(elem);
        for (q, bary) in quad.points.iter().enumerate() {
            let w = quad.weights[q] * map.det;
            let shapes = shape_values(space.degree(), *bary);
            let point = map.point(&mesh, elem, *bary);
            for c in 0..space.components() {
                let fv = f(point, c);
                if fv == 0.0 {
                    continue;
                }
                for i in 0..nloc {
                    rhs[c * g + nodes[i]] += w * fv * shapes[i];
                }
            }
        }
    }
    Ok(rhs)
}

/// Overwrite the essential entries of a right-hand side with boundary values
/// `g(point, component, tag)`; pairs with
/// [`SparseOperator::replace_rows_with_identity`] on the matrix side.
pub fn set_essential_values(
    rhs: &mut [f64],
    space: &FeSpace,
    g: impl Fn(Point2, usize, BoundaryTag) -> f64,
) {
    let gn = space.num_geometric_nodes();
    for (node, tag) in space.essential_nodes() {
        let p = space.node_coords()[node];
        for c in 0..space.components() {
            rhs[c * gn + node] = g(p, c, tag);
        }
    }
}
