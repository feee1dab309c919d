//! Plain-text mesh serialization.
//!
//! Format (whitespace separated, one record per line):
//!
//! ```text
//! trimesh 1
//! <num_vertices> <num_triangles> <num_boundary_edges>
//! x y            -- per vertex
//! a b c          -- per triangle, zero-based vertex indices
//! a b tag        -- per boundary edge
//! ```
//!
//! Coordinates use shortest round-trip decimal form, so write/read is
//! bit-exact.

use super::{BoundaryEdge, BoundaryTag, Point2, TriMesh};
use crate::error::Error;
use crate::Result;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn write_tri_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "trimesh 1")?;
    writeln!(
        w,
        "{} {} {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.boundary_edges.len()
    )?;
    for v in &mesh.vertices {
        writeln!(w, "{} {}", v.x, v.y)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in &mesh.boundary_edges {
        writeln!(w, "{} {} {}", e.v[0], e.v[1], e.tag.0)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tri_mesh(path: &Path) -> Result<TriMesh> {
    let file = std::fs::File::open(path)?;
    parse_tri_mesh(BufReader::new(file))
}

fn parse_tri_mesh<R: Read>(reader: BufReader<R>) -> Result<TriMesh> {
    let mut lines = reader.lines();
    let mut next_line = || -> Result<String> {
        loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        return Ok(line);
                    }
                }
                None => return Err(Error::Parse("unexpected end of mesh file".into())),
            }
        }
    };
    let header = next_line()?;
    if header.trim() != "trimesh 1" {
        return Err(Error::Parse(format!("unrecognized mesh header '{header}'")));
    }
    let counts = next_line()?;
    let counts: Vec<usize> = parse_fields(&counts, "mesh size header")?;
    let [nv, nt, nb] = counts[..] else {
        return Err(Error::Parse(format!("expected 3 counts, got {}", counts.len())));
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = next_line()?;
        let xy: Vec<f64> = parse_fields(&line, "vertex")?;
        let [x, y] = xy[..] else {
            return Err(Error::Parse(format!("bad vertex record '{line}'")));
        };
        vertices.push(Point2::new(x, y));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = next_line()?;
        let abc: Vec<usize> = parse_fields(&line, "triangle")?;
        let [a, b, c] = abc[..] else {
            return Err(Error::Parse(format!("bad triangle record '{line}'")));
        };
        triangles.push([a, b, c]);
    }
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let line = next_line()?;
        let abt: Vec<usize> = parse_fields(&line, "boundary edge")?;
        let [a, b, tag] = abt[..] else {
            return Err(Error::Parse(format!("bad boundary record '{line}'")));
        };
        let tag = u16::try_from(tag)
            .map_err(|_| Error::Parse(format!("boundary tag {tag} out of range")))?;
        boundary_edges.push(BoundaryEdge { v: [a, b], tag: BoundaryTag(tag) });
    }
    let mesh = TriMesh { vertices, triangles, boundary_edges };
    mesh.validate()?;
    Ok(mesh)
}

fn parse_fields<T: std::str::FromStr>(line: &str, what: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse()
                .map_err(|_| Error::Parse(format!("bad {what} field '{tok}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{build_uniform_tri_mesh, Point2};
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mesh = build_uniform_tri_mesh(
            3,
            2,
            (Point2::new(-0.1, 0.3), Point2::new(1.7, 2.9)),
        )
        .unwrap();
        let dir = std::env::temp_dir().join("nudgefem-mesh-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("round_trip.txt");
        write_tri_mesh(&mesh, &path).unwrap();
        let back = read_tri_mesh(&path).unwrap();
        assert_eq!(mesh.triangles, back.triangles);
        assert_eq!(mesh.vertices.len(), back.vertices.len());
        for (a, b) in mesh.vertices.iter().zip(back.vertices.iter()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
        assert_eq!(mesh.fingerprint(), back.fingerprint());
    }

    #[test]
    fn malformed_header_is_rejected() {
        let dir = std::env::temp_dir().join("nudgefem-mesh-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad_header.txt");
        std::fs::write(&path, "not a mesh\n1 2 3\n").unwrap();
        assert!(matches!(read_tri_mesh(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = std::env::temp_dir().join("nudgefem-mesh-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("truncated.txt");
        std::fs::write(&path, "trimesh 1\n4 2 4\n0 0\n1 0\n").unwrap();
        assert!(matches!(read_tri_mesh(&path), Err(Error::Parse(_))));
    }
}
