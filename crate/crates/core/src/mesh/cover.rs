//! Coarse observation covers: a rectangular grid of side `h` laid over the
//! mesh groups triangles into cells by centroid, and each nonempty cell is
//! paired with one finite element node near its center. The pairing is what
//! turns pointwise samples of a field into a piecewise-constant surrogate
//! with one value per cell.

use super::{Point2, TriMesh};
use crate::error::Error;
use crate::fem::FeSpace;
use crate::Result;
use std::collections::{BTreeMap, BTreeSet};

/// Rectangular grid defining cell boundaries: cell (i, j) covers
/// `[origin + (i, j) h, origin + (i + 1, j + 1) h)`.
#[derive(Clone, Copy, Debug)]
pub struct CoverGrid {
    pub h: f64,
    pub origin: Point2,
}

/// Cell geometry before a node is paired.
#[derive(Clone, Debug)]
pub struct LayoutCell {
    pub grid_index: (i64, i64),
    /// Triangles whose centroid falls in the cell.
    pub member_triangles: Vec<usize>,
    /// Total area of the member triangles.
    pub area: f64,
    /// Area-weighted centroid of the members; the pairing target.
    pub anchor: Point2,
}

/// Cells with geometry assigned, ordered by grid index.
#[derive(Clone, Debug)]
pub struct CoverLayout {
    pub grid: CoverGrid,
    pub cells: Vec<LayoutCell>,
    /// Cell id of every triangle.
    pub tri_to_cell: Vec<usize>,
}

/// A layout cell together with its observation node (geometric node id of
/// the paired space).
#[derive(Clone, Debug)]
pub struct CoarseCell {
    pub grid_index: (i64, i64),
    pub member_triangles: Vec<usize>,
    pub area: f64,
    pub anchor: Point2,
    pub paired_node: usize,
}

#[derive(Clone, Debug)]
pub struct CoarseCover {
    pub grid: CoverGrid,
    pub cells: Vec<CoarseCell>,
    pub tri_to_cell: Vec<usize>,
    /// Largest cell diameter (max pairwise vertex distance within a cell).
    pub h_max: f64,
}

impl CoarseCover {
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
}

/// Group triangles into grid cells by centroid. Cells with no member are
/// dropped; remaining cells are ordered by (i, j) so the layout does not
/// depend on triangle order beyond membership itself.
pub fn build_cover_layout(mesh: &TriMesh, grid: &CoverGrid) -> Result<CoverLayout> {
    if !(grid.h > 0.0) || !grid.h.is_finite() {
        return Err(Error::InvalidDomain(format!(
            "cover cell size must be positive, got {}",
            grid.h
        )));
    }
    let mut groups: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let ix = ((c.x - grid.origin.x) / grid.h).floor() as i64;
        let iy = ((c.y - grid.origin.y) / grid.h).floor() as i64;
        groups.entry((ix, iy)).or_default().push(t);
    }
    let mut cells = Vec::with_capacity(groups.len());
    let mut tri_to_cell = vec![usize::MAX; mesh.num_triangles()];
    for (grid_index, member_triangles) in groups {
        let id = cells.len();
        let mut area = 0.0;
        let (mut cx, mut cy) = (0.0, 0.0);
        for &t in &member_triangles {
            let a = mesh.signed_area(t);
            let c = mesh.centroid(t);
            area += a;
            cx += a * c.x;
            cy += a * c.y;
            tri_to_cell[t] = id;
        }
        cells.push(LayoutCell {
            grid_index,
            member_triangles,
            area,
            anchor: Point2::new(cx / area, cy / area),
        });
    }
    Ok(CoverLayout { grid: *grid, cells, tri_to_cell })
}

/// Pair every cell with the space's geometric node closest to the cell
/// anchor, among nodes of the cell's member triangles. Ties prefer the
/// lowest node index; a node already claimed by an earlier cell is skipped,
/// keeping the pairing injective.
pub fn pair_observation_nodes(layout: &CoverLayout, space: &FeSpace) -> Result<CoarseCover> {
    let mesh = space.mesh();
    if mesh.num_triangles() != layout.tri_to_cell.len() {
        return Err(Error::IncompatibleSpace(
            "cover layout was built on a different mesh".into(),
        ));
    }
    let coords = space.node_coords();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut cells = Vec::with_capacity(layout.cells.len());
    let mut h_max = 0.0f64;
    for cell in &layout.cells {
        let mut candidates: BTreeSet<usize> = BTreeSet::new();
        for &t in &cell.member_triangles {
            candidates.extend(space.elem_nodes(t).iter().copied());
        }
        let paired_node = candidates
            .iter()
            .copied()
            .filter(|n| !used.contains(n))
            .min_by(|&a, &b| {
                let da = coords[a].dist(&cell.anchor);
                let db = coords[b].dist(&cell.anchor);
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .ok_or(Error::PairingFailure {
                cell: cells.len(),
                x: cell.anchor.x,
                y: cell.anchor.y,
            })?;
        used.insert(paired_node);
        // Diameter of the cell: vertices of its members are the extreme
        // points of the covered region.
        let mut verts: BTreeSet<usize> = BTreeSet::new();
        for &t in &cell.member_triangles {
            verts.extend(mesh.triangles[t]);
        }
        let verts: Vec<usize> = verts.into_iter().collect();
        for (k, &a) in verts.iter().enumerate() {
            for &b in &verts[k + 1..] {
                h_max = h_max.max(mesh.vertices[a].dist(&mesh.vertices[b]));
            }
        }
        cells.push(CoarseCell {
            grid_index: cell.grid_index,
            member_triangles: cell.member_triangles.clone(),
            area: cell.area,
            anchor: cell.anchor,
            paired_node,
        });
    }
    Ok(CoarseCover {
        grid: layout.grid,
        cells,
        tri_to_cell: layout.tri_to_cell.clone(),
        h_max,
    })
}

/// Convenience for the common path: layout plus pairing in one call.
pub fn build_coarse_cover(space: &FeSpace, grid: &CoverGrid) -> Result<CoarseCover> {
    let layout = build_cover_layout(space.mesh(), grid)?;
    pair_observation_nodes(&layout, space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_fe_space;
    use crate::mesh::{build_uniform_tri_mesh, refine_uniform, GAMMA1};
    use std::sync::Arc;

    fn unit_square_cover(n: usize, degree: usize, h: f64) -> (FeSpace, CoarseCover) {
        let mesh = build_uniform_tri_mesh(n, n, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))
            .unwrap();
        let space = build_fe_space(Arc::new(mesh), degree, 1, &[GAMMA1]).unwrap();
        let grid = CoverGrid { h, origin: Point2::new(0.0, 0.0) };
        let cover = build_coarse_cover(&space, &grid).unwrap();
        (space, cover)
    }

    #[test]
    fn cover_partitions_all_triangles() {
        let (_, cover) = unit_square_cover(16, 1, 0.25);
        assert_eq!(cover.num_cells(), 16);
        let total: usize = cover.cells.iter().map(|c| c.member_triangles.len()).sum();
        assert_eq!(total, 2 * 16 * 16);
        let area: f64 = cover.cells.iter().map(|c| c.area).sum();
        assert!((area - 1.0).abs() < 1e-13);
        assert!(cover.tri_to_cell.iter().all(|&c| c != usize::MAX));
    }

    #[test]
    fn aligned_cover_pairs_cell_centers() {
        let (space, cover) = unit_square_cover(16, 2, 0.25);
        for cell in &cover.cells {
            let p = space.node_coords()[cell.paired_node];
            let cx = 0.25 * cell.grid_index.0 as f64 + 0.125;
            let cy = 0.25 * cell.grid_index.1 as f64 + 0.125;
            assert!(
                (p.x - cx).abs() < 1e-12 && (p.y - cy).abs() < 1e-12,
                "cell {:?} paired ({}, {})",
                cell.grid_index,
                p.x,
                p.y
            );
        }
    }

    #[test]
    fn pairing_is_injective_even_when_cells_compete() {
        // Cover finer than the mesh: many cells share the few available
        // nodes, forcing the fallback to later candidates.
        let (_, cover) = unit_square_cover(2, 1, 0.25);
        let mut seen = BTreeSet::new();
        for cell in &cover.cells {
            assert!(seen.insert(cell.paired_node), "node paired twice");
        }
    }

    #[test]
    fn oversubscribed_cover_fails_cleanly() {
        // 4x4 P1 mesh: 25 nodes, 32 triangles. A cover at half the mesh
        // spacing populates one cell per triangle, so by pigeonhole some
        // cell cannot receive a distinct node.
        let mesh = build_uniform_tri_mesh(4, 4, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))
            .unwrap();
        let space = build_fe_space(Arc::new(mesh), 1, 1, &[GAMMA1]).unwrap();
        let grid = CoverGrid { h: 0.125, origin: Point2::new(0.0, 0.0) };
        assert!(matches!(
            build_coarse_cover(&space, &grid),
            Err(Error::PairingFailure { .. })
        ));
    }

    #[test]
    fn cell_diameter_reflects_grid_size() {
        let (_, cover) = unit_square_cover(16, 1, 0.25);
        // Square cells of side 0.25: diameter is the diagonal.
        let expect = 0.25 * 2.0f64.sqrt();
        assert!((cover.h_max - expect).abs() < 1e-12);
    }

    #[test]
    fn pairing_survives_refinement() {
        // On aligned uniform meshes the anchor is the cell center and a node
        // sits exactly there, so refining the mesh must not move the paired
        // coordinates.
        let mesh = build_uniform_tri_mesh(8, 8, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))
            .unwrap();
        let fine = refine_uniform(&mesh).unwrap();
        let grid = CoverGrid { h: 0.25, origin: Point2::new(0.0, 0.0) };
        let s1 = build_fe_space(Arc::new(mesh), 2, 1, &[GAMMA1]).unwrap();
        let s2 = build_fe_space(Arc::new(fine), 2, 1, &[GAMMA1]).unwrap();
        let c1 = build_coarse_cover(&s1, &grid).unwrap();
        let c2 = build_coarse_cover(&s2, &grid).unwrap();
        assert_eq!(c1.num_cells(), c2.num_cells());
        for (a, b) in c1.cells.iter().zip(&c2.cells) {
            let pa = s1.node_coords()[a.paired_node];
            let pb = s2.node_coords()[b.paired_node];
            assert!(pa.dist(&pb) < 1e-12);
        }
    }
}
