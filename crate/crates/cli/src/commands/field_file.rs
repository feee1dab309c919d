//! Plain-text velocity coefficient files.
//!
//! Format: a `velocityfield 1` header, then the fingerprint of the mesh the
//! coefficients live on and their count, then one coefficient per line in
//! the shortest decimal form that parses back exactly.

use std::path::Path;

use nudgefem::fem::FeSpace;

use crate::CliResult;

pub fn write_velocity_field(path: &Path, space: &FeSpace, coeffs: &[f64]) -> CliResult<()> {
    let mut text = String::with_capacity(coeffs.len() * 20 + 64);
    text.push_str("velocityfield 1\n");
    text.push_str(&format!("{:016x} {}\n", space.mesh().fingerprint(), coeffs.len()));
    for c in coeffs {
        text.push_str(&format!("{c}\n"));
    }
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(())
}

/// Read a field written by [`write_velocity_field`] and check it belongs to
/// `space`'s mesh and degrees of freedom.
pub fn read_velocity_field(path: &Path, space: &FeSpace) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read velocity field {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "velocityfield 1" {
        return Err(format!("{} is not a velocity field file", path.display()).into());
    }
    let meta = lines.next().unwrap_or_default();
    let mut parts = meta.split_whitespace();
    let fingerprint = parts.next().unwrap_or_default();
    let count: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("malformed velocity field header in {}", path.display()))?;
    let expected = format!("{:016x}", space.mesh().fingerprint());
    if fingerprint != expected {
        return Err(format!(
            "velocity field {} was computed on a different mesh \
             (fingerprint {fingerprint}, this run's mesh is {expected})",
            path.display()
        )
        .into());
    }
    if count != space.num_dofs() {
        return Err(format!(
            "velocity field {} has {count} coefficients, expected {}",
            path.display(),
            space.num_dofs()
        )
        .into());
    }
    let mut coeffs = Vec::with_capacity(count);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        coeffs.push(
            line.parse::<f64>()
                .map_err(|e| format!("bad coefficient {line:?} in {}: {e}", path.display()))?,
        );
    }
    if coeffs.len() != count {
        return Err(format!(
            "velocity field {} is truncated: {} of {count} coefficients",
            path.display(),
            coeffs.len()
        )
        .into());
    }
    Ok(coeffs)
}
