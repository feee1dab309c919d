//! One module per CLI verb.

pub mod conv_rate;
pub mod cylinder_da;
pub mod cylinder_dns;
pub mod field_file;
pub mod gen_mesh;
pub mod interp_check;
pub mod mu_sweep;
pub mod stokes;
pub mod transport_demo;

use nudgefem::mesh::{Point2, TriMesh};

/// Axis-aligned bounding box of a triangulation; observation grids and
/// rasters are anchored at its lower-left corner.
pub fn mesh_bbox(mesh: &TriMesh) -> (Point2, Point2) {
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

/// Steps needed to land on `final_time` with approximately `dt`, never
/// fewer than the two the stepper requires.
pub fn steps_for(final_time: f64, dt: f64) -> usize {
    ((final_time / dt).round() as usize).max(2)
}
