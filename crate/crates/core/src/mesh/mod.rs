//! Conforming triangulations of 2D domains with tagged boundary edges,
//! uniform refinement, and plain-text import/export.
//!
//! Meshes are immutable after construction and safe to share across threads.

mod cover;
mod generate;
mod io;

pub use cover::{build_coarse_cover, pair_observation_nodes, CoarseCell, CoarseCover, CoverGrid, CoverLayout};
pub use generate::{build_channel_mesh, build_cylinder_channel_mesh, CylinderMeshParams};
pub use io::{read_tri_mesh, write_tri_mesh};

use crate::error::Error;
use crate::util::Fnv1a;
use crate::Result;
use std::collections::BTreeMap;

/// A point in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Boundary edge label. Tag values are free-form; the canonical split used by
/// the transport solver is `GAMMA1` (essential) / `GAMMA2` (natural), and the
/// cylinder channel meshes add inflow/outflow/wall/cylinder labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoundaryTag(pub u16);

/// Essential (Dirichlet) part of the boundary.
pub const GAMMA1: BoundaryTag = BoundaryTag(1);
/// Natural (zero-flux) part of the boundary.
pub const GAMMA2: BoundaryTag = BoundaryTag(2);
/// Channel inflow section.
pub const TAG_INFLOW: BoundaryTag = BoundaryTag(3);
/// Channel outflow section.
pub const TAG_OUTFLOW: BoundaryTag = BoundaryTag(4);
/// Channel walls.
pub const TAG_WALL: BoundaryTag = BoundaryTag(5);
/// Cylinder surface.
pub const TAG_CYLINDER: BoundaryTag = BoundaryTag(6);

/// A boundary edge with its label. Vertex order follows the adjacent
/// triangle's orientation.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

/// Conforming triangulation with positively oriented triangles.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

impl TriMesh {
    /// Validate orientation, edge conformity and boundary labeling.
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.triangles.iter().enumerate() {
            for &v in t {
                if v >= self.vertices.len() {
                    return Err(Error::NonConforming(format!(
                        "triangle {i} references vertex {v} out of range"
                    )));
                }
            }
            let a = self.signed_area(i);
            if !(a > 0.0) {
                return Err(Error::NonConforming(format!(
                    "triangle {i} has non-positive signed area {a:.3e}"
                )));
            }
        }
        for v in &self.vertices {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(Error::InvalidDomain("non-finite vertex coordinate".into()));
            }
        }
        // Every edge must be shared by exactly one or two triangles, and the
        // single-incidence edges must coincide with the tagged boundary.
        let mut incidence: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *incidence.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if let Some((e, n)) = incidence.iter().find(|(_, &n)| n > 2) {
            return Err(Error::NonConforming(format!(
                "edge ({}, {}) is shared by {n} triangles",
                e.0, e.1
            )));
        }
        let single: Vec<(usize, usize)> = incidence
            .iter()
            .filter(|(_, &n)| n == 1)
            .map(|(&e, _)| e)
            .collect();
        let mut tagged: Vec<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|e| (e.v[0].min(e.v[1]), e.v[0].max(e.v[1])))
            .collect();
        tagged.sort_unstable();
        if tagged.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::NonConforming("duplicate boundary edge tag".into()));
        }
        if single != tagged {
            return Err(Error::NonConforming(format!(
                "boundary tags cover {} edges but the mesh boundary has {}",
                tagged.len(),
                single.len()
            )));
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.triangles[tri];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y))
    }

    pub fn centroid(&self, tri: usize) -> Point2 {
        let [a, b, c] = self.triangles[tri];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        Point2::new((p.x + q.x + r.x) / 3.0, (p.y + q.y + r.y) / 3.0)
    }

    /// Total mesh area.
    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.signed_area(i)).sum()
    }

    /// Longest edge over the whole mesh.
    pub fn max_edge_length(&self) -> f64 {
        let mut h = 0.0f64;
        for t in &self.triangles {
            for k in 0..3 {
                let d = self.vertices[t[k]].dist(&self.vertices[t[(k + 1) % 3]]);
                h = h.max(d);
            }
        }
        h
    }

    /// Sorted list of unique undirected edges (pairs with smaller index first).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                (a.min(b), a.max(b))
            }))
            .collect();
        set.sort_unstable();
        set.dedup();
        set
    }

    /// Stable fingerprint of geometry, connectivity and boundary tags.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_usize(self.vertices.len());
        h.write_usize(self.triangles.len());
        for v in &self.vertices {
            h.write_f64(v.x);
            h.write_f64(v.y);
        }
        for t in &self.triangles {
            for &v in t {
                h.write_usize(v);
            }
        }
        for e in &self.boundary_edges {
            h.write_usize(e.v[0]);
            h.write_usize(e.v[1]);
            h.write_usize(e.tag.0 as usize);
        }
        h.finish()
    }
}

/// Build a uniform triangulation of the rectangle spanned by `rect`,
/// with `nx * ny` squares each split along the bottom-left/top-right
/// diagonal. All boundary edges are tagged [`GAMMA1`].
pub fn build_uniform_tri_mesh(nx: usize, ny: usize, rect: (Point2, Point2)) -> Result<TriMesh> {
    let (lo, hi) = rect;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidDomain(format!(
            "grid must have at least one cell per direction, got {nx} x {ny}"
        )));
    }
    if !(hi.x > lo.x) || !(hi.y > lo.y) {
        return Err(Error::InvalidDomain(format!(
            "degenerate rectangle ({}, {}) - ({}, {})",
            lo.x, lo.y, hi.x, hi.y
        )));
    }
    let dx = (hi.x - lo.x) / nx as f64;
    let dy = (hi.y - lo.y) / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point2::new(lo.x + i as f64 * dx, lo.y + j as f64 * dy));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { v: [vid(i, 0), vid(i + 1, 0)], tag: GAMMA1 });
        boundary_edges.push(BoundaryEdge { v: [vid(i + 1, ny), vid(i, ny)], tag: GAMMA1 });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { v: [vid(nx, j), vid(nx, j + 1)], tag: GAMMA1 });
        boundary_edges.push(BoundaryEdge { v: [vid(0, j + 1), vid(0, j)], tag: GAMMA1 });
    }
    let mesh = TriMesh { vertices, triangles, boundary_edges };
    mesh.validate()?;
    Ok(mesh)
}

/// Split every triangle into four by connecting edge midpoints. Boundary
/// edge tags are inherited by the two child edges.
pub fn refine_uniform(mesh: &TriMesh) -> Result<TriMesh> {
    mesh.validate()?;
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point2>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let p = Point2::new(
                0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
                0.5 * (mesh.vertices[a].y + mesh.vertices[b].y),
            );
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for t in &mesh.triangles {
        let [a, b, c] = *t;
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([b, bc, ab]);
        triangles.push([c, ca, bc]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let m = midpoint[&(e.v[0].min(e.v[1]), e.v[0].max(e.v[1]))];
        boundary_edges.push(BoundaryEdge { v: [e.v[0], m], tag: e.tag });
        boundary_edges.push(BoundaryEdge { v: [m, e.v[1]], tag: e.tag });
    }
    let refined = TriMesh { vertices, triangles, boundary_edges };
    refined.validate()?;
    Ok(refined)
}
