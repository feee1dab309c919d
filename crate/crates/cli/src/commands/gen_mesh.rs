//! `gen-mesh`: write a generated triangulation to a mesh file.

use std::path::Path;

use nudgefem::mesh::write_tri_mesh;

use crate::config::{self, GenMeshConfig};
use crate::outdir::OutDir;
use crate::CliResult;

pub fn run(config_path: &Path, out: &Path) -> CliResult<()> {
    let cfg: GenMeshConfig = config::load(config_path)?;
    let mesh = cfg.mesh.build()?;
    let mut dir = OutDir::create(out)?;
    write_tri_mesh(&mesh, &dir.path(&cfg.file_name))?;
    dir.register_file(&cfg.file_name);
    dir.write_file(
        "mesh_info.csv",
        &crate::outdir::csv(
            "vertices,triangles,boundary_edges",
            &[vec![
                mesh.vertices.len().to_string(),
                mesh.triangles.len().to_string(),
                mesh.boundary_edges.len().to_string(),
            ]],
        ),
    )?;
    dir.finish("gen-mesh", &cfg)
}
