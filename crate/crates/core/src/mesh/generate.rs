//! Structured mesh generators for the two flow geometries used by the
//! solvers: a sheared channel with a wavy floor and a rectangular channel
//! with a circular obstacle.

use super::{
    BoundaryEdge, Point2, TriMesh, TAG_CYLINDER, TAG_INFLOW, TAG_OUTFLOW, TAG_WALL,
};
use crate::error::Error;
use crate::Result;
use std::collections::{BTreeMap, BTreeSet};

/// Channel of unit height whose floor follows `floor(x)`, triangulated on a
/// sheared `nx * ny` grid. Left edge is tagged inflow, right edge outflow,
/// top and bottom walls.
///
/// The shear map `(x, y) -> (x, y + floor(x))` has unit Jacobian, so the
/// grid triangles stay positively oriented for any floor profile.
pub fn build_channel_mesh(
    nx: usize,
    ny: usize,
    x_range: (f64, f64),
    height: f64,
    floor: impl Fn(f64) -> f64,
) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidDomain(format!(
            "channel grid must have at least one cell per direction, got {nx} x {ny}"
        )));
    }
    let (x0, x1) = x_range;
    if !(x1 > x0) || !(height > 0.0) {
        return Err(Error::InvalidDomain(format!(
            "degenerate channel: x in [{x0}, {x1}], height {height}"
        )));
    }
    let dx = (x1 - x0) / nx as f64;
    let dy = height / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = x0 + i as f64 * dx;
            vertices.push(Point2::new(x, floor(x) + j as f64 * dy));
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
    let mut boundary_edges = Vec::new();
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { v: [vid(i, 0), vid(i + 1, 0)], tag: TAG_WALL });
        boundary_edges.push(BoundaryEdge { v: [vid(i + 1, ny), vid(i, ny)], tag: TAG_WALL });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { v: [vid(nx, j), vid(nx, j + 1)], tag: TAG_OUTFLOW });
        boundary_edges.push(BoundaryEdge { v: [vid(0, j + 1), vid(0, j)], tag: TAG_INFLOW });
    }
    let mesh = TriMesh { vertices, triangles, boundary_edges };
    mesh.validate()?;
    Ok(mesh)
}

/// Sizing knobs for [`build_cylinder_channel_mesh`]. `near_h` is the target
/// edge length in a band around the cylinder, `far_h` downstream.
#[derive(Clone, Copy, Debug)]
pub struct CylinderMeshParams {
    pub near_h: f64,
    pub far_h: f64,
}

impl Default for CylinderMeshParams {
    fn default() -> Self {
        CylinderMeshParams { near_h: 0.016, far_h: 0.05 }
    }
}

/// Geometry of the cylinder-in-channel benchmark domain built by
/// [`build_cylinder_channel_mesh`].
pub const CYLINDER_CHANNEL: CylinderGeometry = CylinderGeometry {
    length: 2.2,
    height: 0.41,
    center: Point2 { x: 0.2, y: 0.2 },
    radius: 0.05,
};

#[derive(Clone, Copy, Debug)]
pub struct CylinderGeometry {
    pub length: f64,
    pub height: f64,
    pub center: Point2,
    pub radius: f64,
}

/// Rectangular channel with a circular hole: a graded tensor grid is
/// triangulated, triangles overlapping the disk are removed, the rim of the
/// hole is snapped onto the circle, and the neighborhood is relaxed to
/// restore element quality. Tags: inflow (left), outflow (right), walls
/// (top/bottom), cylinder (hole rim).
pub fn build_cylinder_channel_mesh(params: &CylinderMeshParams) -> Result<TriMesh> {
    let geo = CYLINDER_CHANNEL;
    if !(params.near_h > 0.0) || !(params.far_h > 0.0) {
        return Err(Error::InvalidDomain("mesh spacings must be positive".into()));
    }
    // Graded breakpoints: fine band around the cylinder, moderate wake,
    // coarser far field.
    let xs = graded_axis(&[
        (0.0, 0.1, 1.6 * params.near_h),
        (0.1, 0.3, params.near_h),
        (0.3, 0.7, 1.6 * params.near_h),
        (0.7, geo.length, params.far_h),
    ]);
    let ys = graded_axis(&[
        (0.0, 0.1, 1.3 * params.near_h),
        (0.1, 0.3, params.near_h),
        (0.3, geo.height, 1.3 * params.near_h),
    ]);
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            vertices.push(Point2::new(x, y));
        }
    }
    let dist = |p: &Point2| p.dist(&geo.center);
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            for tri in [[a, b, c], [a, c, d]] {
                let centroid = Point2::new(
                    (vertices[tri[0]].x + vertices[tri[1]].x + vertices[tri[2]].x) / 3.0,
                    (vertices[tri[0]].y + vertices[tri[1]].y + vertices[tri[2]].y) / 3.0,
                );
                let vertex_inside = tri
                    .iter()
                    .any(|&v| dist(&vertices[v]) < geo.radius * (1.0 - 1e-12));
                if dist(&centroid) >= geo.radius && !vertex_inside {
                    triangles.push(tri);
                }
            }
        }
    }
    // Drop vertices that no surviving triangle uses and compact indices.
    let used: BTreeSet<usize> = triangles.iter().flatten().copied().collect();
    let remap: BTreeMap<usize, usize> = used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let mut vertices: Vec<Point2> = used.iter().map(|&v| vertices[v]).collect();
    for t in &mut triangles {
        for v in t.iter_mut() {
            *v = remap[v];
        }
    }
    // Classify the free boundary: edges with a single incident triangle.
    let mut incidence: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *incidence.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let rim_band = geo.radius + 3.0 * params.near_h;
    let mut rim_vertices = BTreeSet::new();
    for (&(a, b), &n) in &incidence {
        if n == 1 && dist(&vertices[a]) < rim_band && dist(&vertices[b]) < rim_band {
            rim_vertices.insert(a);
            rim_vertices.insert(b);
        }
    }
    for &v in &rim_vertices {
        let p = vertices[v];
        let d = dist(&p);
        vertices[v] = Point2::new(
            geo.center.x + geo.radius * (p.x - geo.center.x) / d,
            geo.center.y + geo.radius * (p.y - geo.center.y) / d,
        );
    }
    // Laplacian relaxation of interior vertices near the hole, with the rim,
    // outer boundary and far field held fixed. Under-relaxed so that the
    // snapped rim does not drag its neighbors onto the circle.
    let mut neighbors: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            neighbors.entry(a).or_default().insert(b);
            neighbors.entry(b).or_default().insert(a);
        }
    }
    let on_outer = |p: &Point2| {
        p.x < 1e-12
            || p.x > geo.length - 1e-12
            || p.y < 1e-12
            || p.y > geo.height - 1e-12
    };
    let relax_band = geo.radius + 6.0 * params.near_h;
    for _ in 0..8 {
        let snapshot = vertices.clone();
        for (v, nbrs) in &neighbors {
            let p = snapshot[*v];
            if rim_vertices.contains(v) || on_outer(&p) || dist(&p) > relax_band {
                continue;
            }
            let (mut sx, mut sy) = (0.0, 0.0);
            for &n in nbrs {
                sx += snapshot[n].x;
                sy += snapshot[n].y;
            }
            let m = nbrs.len() as f64;
            let target = Point2::new(sx / m, sy / m);
            vertices[*v] = Point2::new(
                p.x + 0.5 * (target.x - p.x),
                p.y + 0.5 * (target.y - p.y),
            );
        }
    }
    // Tag the boundary. Rim edges are those whose endpoints sit on the circle.
    let mut boundary_edges = Vec::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if incidence[&(a.min(b), a.max(b))] != 1 {
                continue;
            }
            let (pa, pb) = (vertices[a], vertices[b]);
            let tag = if pa.x < 1e-12 && pb.x < 1e-12 {
                TAG_INFLOW
            } else if pa.x > geo.length - 1e-12 && pb.x > geo.length - 1e-12 {
                TAG_OUTFLOW
            } else if (pa.y < 1e-12 && pb.y < 1e-12)
                || (pa.y > geo.height - 1e-12 && pb.y > geo.height - 1e-12)
            {
                TAG_WALL
            } else if (dist(&pa) - geo.radius).abs() < 1e-9
                && (dist(&pb) - geo.radius).abs() < 1e-9
            {
                TAG_CYLINDER
            } else {
                return Err(Error::InvalidDomain(format!(
                    "free edge ({:.4}, {:.4})-({:.4}, {:.4}) lies on no boundary section",
                    pa.x, pa.y, pb.x, pb.y
                )));
            };
            boundary_edges.push(BoundaryEdge { v: [a, b], tag });
        }
    }
    let mesh = TriMesh { vertices, triangles, boundary_edges };
    mesh.validate()?;
    Ok(mesh)
}

/// Node coordinates for a piecewise-uniform axis: each `(lo, hi, h)` segment
/// is divided into `ceil((hi - lo) / h)` equal cells, so segment endpoints
/// land exactly on nodes.
fn graded_axis(segments: &[(f64, f64, f64)]) -> Vec<f64> {
    let mut nodes = vec![segments[0].0];
    for &(lo, hi, h) in segments {
        let n = ((hi - lo) / h).ceil().max(1.0) as usize;
        for k in 1..=n {
            nodes.push(lo + (hi - lo) * k as f64 / n as f64);
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GAMMA1;

    #[test]
    fn wavy_channel_is_valid_and_area_matches() {
        let mesh = build_channel_mesh(48, 8, (0.0, 4.0 * std::f64::consts::PI), 1.0, f64::sin)
            .unwrap();
        // Shear preserves area: length * height.
        let expect = 4.0 * std::f64::consts::PI;
        assert!((mesh.area() - expect).abs() / expect < 1e-12);
        assert!(mesh.boundary_edges.iter().all(|e| e.tag != GAMMA1));
    }

    #[test]
    fn channel_inflow_edges_sit_on_left_end() {
        let mesh = build_channel_mesh(10, 4, (0.0, 2.0), 1.0, |x| 0.5 * x).unwrap();
        let inflow: Vec<_> = mesh
            .boundary_edges
            .iter()
            .filter(|e| e.tag == TAG_INFLOW)
            .collect();
        assert_eq!(inflow.len(), 4);
        for e in inflow {
            assert!(mesh.vertices[e.v[0]].x.abs() < 1e-14);
            assert!(mesh.vertices[e.v[1]].x.abs() < 1e-14);
        }
    }

    #[test]
    fn cylinder_mesh_is_valid_with_hole() {
        let mesh = build_cylinder_channel_mesh(&CylinderMeshParams::default()).unwrap();
        let geo = CYLINDER_CHANNEL;
        let rect = geo.length * geo.height;
        let disk = std::f64::consts::PI * geo.radius * geo.radius;
        // Polygonal hole is inscribed in the circle, so the mesh area sits
        // between rect - disk and rect, close to the former.
        assert!(mesh.area() < rect - 0.9 * disk);
        assert!(mesh.area() > rect - 1.1 * disk);
        let n_cyl = mesh
            .boundary_edges
            .iter()
            .filter(|e| e.tag == TAG_CYLINDER)
            .count();
        assert!(n_cyl >= 16, "hole rim has only {n_cyl} edges");
        for e in &mesh.boundary_edges {
            if e.tag == TAG_CYLINDER {
                for &v in &e.v {
                    let d = mesh.vertices[v].dist(&geo.center);
                    assert!((d - geo.radius).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn cylinder_mesh_min_quality() {
        let mesh = build_cylinder_channel_mesh(&CylinderMeshParams::default()).unwrap();
        let mut min_ratio = f64::INFINITY;
        for i in 0..mesh.num_triangles() {
            let t = mesh.triangles[i];
            let mut longest = 0.0f64;
            for k in 0..3 {
                longest = longest
                    .max(mesh.vertices[t[k]].dist(&mesh.vertices[t[(k + 1) % 3]]));
            }
            // Height relative to longest edge; degenerate slivers go to 0.
            min_ratio = min_ratio.min(2.0 * mesh.signed_area(i) / (longest * longest));
        }
        assert!(min_ratio > 0.05, "sliver triangle: quality {min_ratio:.4}");
    }
}
