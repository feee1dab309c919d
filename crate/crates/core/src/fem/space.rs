//! Continuous Lagrange finite element spaces (P1 and P2) on triangle
//! meshes, scalar or vector valued.
//!
//! Geometric nodes are mesh vertices followed by edge midpoints (P2 only),
//! edges numbered in sorted endpoint order. A vector space with `c`
//! components stores degrees of freedom component-major: dof = comp * G + g
//! where G is the geometric node count, so the scalar layout is a prefix.

use crate::error::Error;
use crate::mesh::{BoundaryTag, Point2, TriMesh};
use crate::Result;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Local shape function order on the reference triangle: three vertex
/// functions, then (for P2) the midpoints of edges (0,1), (1,2), (2,0).
pub const MAX_LOCAL_NODES: usize = 6;

#[derive(Clone, Debug)]
pub struct FeSpace {
    mesh: Arc<TriMesh>,
    degree: usize,
    components: usize,
    node_coords: Vec<Point2>,
    /// Geometric node ids per element, `nodes_per_elem` each.
    elem_nodes: Vec<usize>,
    /// Geometric boundary nodes on essential sections, with their tag.
    essential_nodes: BTreeMap<usize, BoundaryTag>,
}

/// Build a P`degree` space with `components` field components. Nodes on
/// boundary edges whose tag appears in `essential_tags` are classified as
/// essential (strong Dirichlet); everything else is free.
pub fn build_fe_space(
    mesh: Arc<TriMesh>,
    degree: usize,
    components: usize,
    essential_tags: &[BoundaryTag],
) -> Result<FeSpace> {
    if degree != 1 && degree != 2 {
        return Err(Error::UnsupportedDegree(degree));
    }
    if components == 0 || components > 2 {
        return Err(Error::DimensionMismatch(format!(
            "field must have 1 or 2 components, got {components}"
        )));
    }
    mesh.validate()?;
    let nv = mesh.num_vertices();
    let mut node_coords = mesh.vertices.clone();
    let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    if degree == 2 {
        for (eid, (a, b)) in mesh.edges().into_iter().enumerate() {
            edge_ids.insert((a, b), eid);
            node_coords.push(Point2::new(
                0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
                0.5 * (mesh.vertices[a].y + mesh.vertices[b].y),
            ));
        }
    }
    let per_elem = if degree == 1 { 3 } else { 6 };
    let mut elem_nodes = Vec::with_capacity(per_elem * mesh.num_triangles());
    for t in &mesh.triangles {
        elem_nodes.extend_from_slice(t);
        if degree == 2 {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                elem_nodes.push(nv + edge_ids[&(a.min(b), a.max(b))]);
            }
        }
    }
    let mut essential_nodes = BTreeMap::new();
    for e in &mesh.boundary_edges {
        if !essential_tags.contains(&e.tag) {
            continue;
        }
        let (a, b) = (e.v[0], e.v[1]);
        essential_nodes.entry(a).or_insert(e.tag);
        essential_nodes.entry(b).or_insert(e.tag);
        if degree == 2 {
            let m = nv + edge_ids[&(a.min(b), a.max(b))];
            essential_nodes.entry(m).or_insert(e.tag);
        }
    }
    Ok(FeSpace {
        mesh,
        degree,
        components,
        node_coords,
        elem_nodes,
        essential_nodes,
    })
}

impl FeSpace {
    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_geometric_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.components * self.node_coords.len()
    }

    pub fn nodes_per_elem(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    pub fn node_coords(&self) -> &[Point2] {
        &self.node_coords
    }

    /// Coordinate of a degree of freedom (same node for every component).
    pub fn dof_coord(&self, dof: usize) -> Point2 {
        self.node_coords[dof % self.node_coords.len()]
    }

    /// Component of a degree of freedom under the component-major layout.
    pub fn dof_component(&self, dof: usize) -> usize {
        dof / self.node_coords.len()
    }

    pub fn dof_index(&self, component: usize, node: usize) -> usize {
        component * self.node_coords.len() + node
    }

    /// Geometric node ids of one element.
    pub fn elem_nodes(&self, elem: usize) -> &[usize] {
        let n = self.nodes_per_elem();
        &self.elem_nodes[elem * n..(elem + 1) * n]
    }

    /// Geometric boundary nodes on essential sections, ascending, with tags.
    pub fn essential_nodes(&self) -> impl Iterator<Item = (usize, BoundaryTag)> + '_ {
        self.essential_nodes.iter().map(|(&n, &t)| (n, t))
    }

    /// Essential degrees of freedom across all components, ascending.
    pub fn essential_dofs(&self) -> Vec<usize> {
        let g = self.node_coords.len();
        let mut dofs: Vec<usize> = (0..self.components)
            .flat_map(|c| self.essential_nodes.keys().map(move |&n| c * g + n))
            .collect();
        dofs.sort_unstable();
        dofs
    }

    /// Two spaces are compatible when they share the same mesh object.
    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Interpolate an analytic field at the nodes: coeffs of the Lagrange
    /// interpolant. `f(p, comp)` gives the component value at a point.
    pub fn interpolate(&self, f: impl Fn(Point2, usize) -> f64) -> Vec<f64> {
        let g = self.node_coords.len();
        let mut coeffs = vec![0.0; self.num_dofs()];
        for c in 0..self.components {
            for (n, p) in self.node_coords.iter().enumerate() {
                coeffs[c * g + n] = f(*p, c);
            }
        }
        coeffs
    }

    /// Evaluate a coefficient vector at a barycentric point of an element.
    pub fn eval_in_elem(&self, coeffs: &[f64], elem: usize, bary: [f64; 3], component: usize) -> f64 {
        debug_assert_eq!(coeffs.len(), self.num_dofs());
        let g = self.node_coords.len();
        let shapes = shape_values(self.degree, bary);
        self.elem_nodes(elem)
            .iter()
            .enumerate()
            .map(|(loc, &node)| coeffs[component * g + node] * shapes[loc])
            .sum()
    }

    /// Physical-space gradient of a coefficient field at a barycentric point
    /// of an element.
    pub fn eval_grad_in_elem(
        &self,
        coeffs: &[f64],
        elem: usize,
        bary: [f64; 3],
        component: usize,
    ) -> [f64; 2] {
        debug_assert_eq!(coeffs.len(), self.num_dofs());
        let g = self.node_coords.len();
        let map = ElementMap::new(&self.mesh, elem);
        let ref_grads = shape_ref_gradients(self.degree, bary);
        let mut grad = [0.0, 0.0];
        for (loc, &node) in self.elem_nodes(elem).iter().enumerate() {
            let pg = map.physical_gradient(ref_grads[loc]);
            let c = coeffs[component * g + node];
            grad[0] += c * pg[0];
            grad[1] += c * pg[1];
        }
        grad
    }
}

/// Shape function values at a barycentric point; entries past
/// `nodes_per_elem` are zero.
pub fn shape_values(degree: usize, bary: [f64; 3]) -> [f64; MAX_LOCAL_NODES] {
    let [l0, l1, l2] = bary;
    match degree {
        1 => [l0, l1, l2, 0.0, 0.0, 0.0],
        2 => [
            l0 * (2.0 * l0 - 1.0),
            l1 * (2.0 * l1 - 1.0),
            l2 * (2.0 * l2 - 1.0),
            4.0 * l0 * l1,
            4.0 * l1 * l2,
            4.0 * l2 * l0,
        ],
        _ => unreachable!("space construction rejects degree {degree}"),
    }
}

/// Shape function gradients with respect to the reference coordinates
/// (xi, eta) where bary = (1 - xi - eta, xi, eta).
pub fn shape_ref_gradients(degree: usize, bary: [f64; 3]) -> [[f64; 2]; MAX_LOCAL_NODES] {
    let [l0, l1, l2] = bary;
    // d lambda / d(xi, eta) rows: (-1, -1), (1, 0), (0, 1).
    match degree {
        1 => [
            [-1.0, -1.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0; 2],
            [0.0; 2],
            [0.0; 2],
        ],
        2 => {
            let d0 = 4.0 * l0 - 1.0;
            let d1 = 4.0 * l1 - 1.0;
            let d2 = 4.0 * l2 - 1.0;
            [
                [-d0, -d0],
                [d1, 0.0],
                [0.0, d2],
                [4.0 * (l0 - l1), -4.0 * l1],
                [4.0 * l2, 4.0 * l1],
                [-4.0 * l2, 4.0 * (l0 - l2)],
            ]
        }
        _ => unreachable!("space construction rejects degree {degree}"),
    }
}

/// Geometry of one element needed to map reference gradients: the inverse
/// transpose Jacobian applied on the fly, plus the physical area.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    /// Columns of the Jacobian: edge vectors v1 - v0 and v2 - v0.
    j: [[f64; 2]; 2],
    pub det: f64,
    pub area: f64,
}

impl ElementMap {
    pub fn new(mesh: &TriMesh, elem: usize) -> ElementMap {
        let [a, b, c] = mesh.triangles[elem];
        let (p, q, r) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        let j = [[q.x - p.x, r.x - p.x], [q.y - p.y, r.y - p.y]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        ElementMap { j, det, area: 0.5 * det }
    }

    /// Physical gradient from a reference gradient: J^{-T} grad_ref.
    pub fn physical_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let inv_det = 1.0 / self.det;
        [
            (self.j[1][1] * g[0] - self.j[1][0] * g[1]) * inv_det,
            (-self.j[0][1] * g[0] + self.j[0][0] * g[1]) * inv_det,
        ]
    }

    /// Physical location of a barycentric point.
    pub fn point(&self, mesh: &TriMesh, elem: usize, bary: [f64; 3]) -> Point2 {
        let [a, b, c] = mesh.triangles[elem];
        let (p, q, r) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        Point2::new(
            bary[0] * p.x + bary[1] * q.x + bary[2] * r.x,
            bary[0] * p.y + bary[1] * q.y + bary[2] * r.y,
        )
    }
}
