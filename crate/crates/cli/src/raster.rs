//! Uniform-raster sampling of finite element fields for plot data.
//!
//! Sample points outside the meshed domain are skipped, so rasters of
//! non-rectangular domains (the wavy river, the cylinder channel) contain
//! exactly the in-domain points.

use nudgefem::mesh::{Point2, TriMesh};

use crate::config::RasterSpec;
use crate::outdir::num;

/// Accept points this far outside an element in barycentric coordinates;
/// covers roundoff for raster points on edges and vertices.
const BARY_TOL: f64 = 1e-9;

/// Uniform-bucket triangle index over the mesh bounding box.
pub struct PointLocator<'a> {
    mesh: &'a TriMesh,
    lo: Point2,
    hi: Point2,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a TriMesh) -> PointLocator<'a> {
        let (lo, hi) = bounding_box(mesh);
        // Aim for a handful of triangles per bucket.
        let per_side = ((mesh.triangles.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let (nx, ny) = (per_side, per_side);
        let mut buckets = vec![Vec::new(); nx * ny];
        let bucket_of = |x: f64, lo: f64, hi: f64, n: usize| -> usize {
            let frac = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            ((frac * n as f64) as usize).min(n - 1)
        };
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let xs = tri.map(|v| mesh.vertices[v].x);
            let ys = tri.map(|v| mesh.vertices[v].y);
            let (x0, x1) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
            let (y0, y1) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
            let (i0, i1) = (bucket_of(x0, lo.x, hi.x, nx), bucket_of(x1, lo.x, hi.x, nx));
            let (j0, j1) = (bucket_of(y0, lo.y, hi.y, ny), bucket_of(y1, lo.y, hi.y, ny));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        PointLocator { mesh, lo, hi, nx, ny, buckets }
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        (self.lo, self.hi)
    }

    /// Find a triangle containing `p` and the barycentric coordinates of
    /// `p` in it (weights ordered like the triangle's vertices). Returns
    /// the lowest-index match so ties on shared edges are deterministic.
    pub fn locate(&self, p: Point2) -> Option<(usize, [f64; 3])> {
        if p.x < self.lo.x - BARY_TOL
            || p.x > self.hi.x + BARY_TOL
            || p.y < self.lo.y - BARY_TOL
            || p.y > self.hi.y + BARY_TOL
        {
            return None;
        }
        let frac_x = ((p.x - self.lo.x) / (self.hi.x - self.lo.x)).clamp(0.0, 1.0);
        let frac_y = ((p.y - self.lo.y) / (self.hi.y - self.lo.y)).clamp(0.0, 1.0);
        let i = ((frac_x * self.nx as f64) as usize).min(self.nx - 1);
        let j = ((frac_y * self.ny as f64) as usize).min(self.ny - 1);
        for &t in &self.buckets[j * self.nx + i] {
            if let Some(bary) = barycentric_in(self.mesh, t, p) {
                return Some((t, bary));
            }
        }
        None
    }
}

fn bounding_box(mesh: &TriMesh) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::MAX, f64::MAX);
    let mut hi = Point2::new(f64::MIN, f64::MIN);
    for v in &mesh.vertices {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    (lo, hi)
}

fn barycentric_in(mesh: &TriMesh, tri: usize, p: Point2) -> Option<[f64; 3]> {
    let [a, b, c] = mesh.triangles[tri].map(|v| mesh.vertices[v]);
    let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    let l2 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
    let l3 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
    let l1 = 1.0 - l2 - l3;
    if l1 >= -BARY_TOL && l2 >= -BARY_TOL && l3 >= -BARY_TOL {
        Some([l1, l2, l3])
    } else {
        None
    }
}

/// Sample `value` on the raster grid over the mesh bounding box, row-major
/// bottom to top, skipping out-of-domain points. Rows are (x, y, value)
/// cells ready for [`crate::outdir::csv`].
pub fn raster_rows(
    locator: &PointLocator,
    spec: &RasterSpec,
    value: impl Fn(usize, [f64; 3]) -> f64,
) -> Vec<Vec<String>> {
    let (lo, hi) = locator.bounds();
    let mut rows = Vec::new();
    for j in 0..=spec.ny {
        let y = lo.y + (hi.y - lo.y) * j as f64 / spec.ny as f64;
        for i in 0..=spec.nx {
            let x = lo.x + (hi.x - lo.x) * i as f64 / spec.nx as f64;
            if let Some((elem, bary)) = locator.locate(Point2::new(x, y)) {
                rows.push(vec![num(x), num(y), num(value(elem, bary))]);
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use nudgefem::fem::build_fe_space;
    use nudgefem::mesh::build_uniform_tri_mesh;
    use std::sync::Arc;

    #[test]
    fn locates_interior_edge_and_outside_points() {
        let mesh = build_uniform_tri_mesh(
            3,
            3,
            (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
        )
        .unwrap();
        let locator = PointLocator::new(&mesh);

        let (tri, bary) = locator.locate(Point2::new(0.51, 0.24)).unwrap();
        let [a, b, c] = mesh.triangles[tri].map(|v| mesh.vertices[v]);
        let x = bary[0] * a.x + bary[1] * b.x + bary[2] * c.x;
        let y = bary[0] * a.y + bary[1] * b.y + bary[2] * c.y;
        assert!((x - 0.51).abs() < 1e-12 && (y - 0.24).abs() < 1e-12);

        // A grid vertex lies in several triangles; any consistent answer
        // reconstructs the point itself.
        let (_, bary) = locator.locate(Point2::new(1.0 / 3.0, 2.0 / 3.0)).unwrap();
        assert!(bary.iter().all(|&l| l >= -1e-12));

        assert!(locator.locate(Point2::new(1.2, 0.5)).is_none());
    }

    #[test]
    fn raster_reproduces_a_linear_field_exactly() {
        let mesh = build_uniform_tri_mesh(
            4,
            4,
            (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
        )
        .unwrap();
        let space = build_fe_space(Arc::new(mesh), 1, 1, &[]).unwrap();
        let coeffs: Vec<f64> =
            space.node_coords().iter().map(|p| 2.0 * p.x - p.y + 0.25).collect();
        let locator = PointLocator::new(space.mesh());
        let rows = raster_rows(&locator, &RasterSpec { nx: 7, ny: 5 }, |elem, bary| {
            space.eval_in_elem(&coeffs, elem, bary, 0)
        });
        assert_eq!(rows.len(), 8 * 6, "every unit-square raster point is inside");
        for row in rows {
            let x: f64 = row[0].parse().unwrap();
            let y: f64 = row[1].parse().unwrap();
            let v: f64 = row[2].parse().unwrap();
            assert!((v - (2.0 * x - y + 0.25)).abs() < 1e-12);
        }
    }
}
