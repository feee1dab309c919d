//! On-disk archive of time-stepped flow states.
//!
//! A reference run stores one binary file per archived step plus a JSON
//! manifest describing the discretization, so that a later assimilation run
//! can verify it is sampling states from a compatible computation.
//!
//! Each state file is little-endian: `u64` step index, `f64` time, the
//! velocity coefficients, then the pressure coefficients. Replaying a stored
//! step returns bit-identical vectors.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Bumped when the binary layout or manifest contents change.
pub const ARCHIVE_FORMAT: u32 = 1;

const MANIFEST_FILE: &str = "manifest.json";

/// Discretization summary stored alongside the state files. Readers check
/// these fields against their own setup before trusting the states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveManifest {
    pub format: u32,
    /// Hex fingerprint of the mesh the states live on.
    pub mesh_fingerprint: String,
    pub dt: f64,
    pub viscosity: f64,
    /// Free-form label for the boundary-condition setup, e.g. "dirichlet".
    pub bc_mode: String,
    pub num_velocity_dofs: usize,
    pub num_pressure_dofs: usize,
    /// Step index of the first stored state.
    pub first_step: usize,
    /// Number of stored states (consecutive steps starting at `first_step`).
    pub num_steps: usize,
}

impl ArchiveManifest {
    pub fn last_step(&self) -> Option<usize> {
        self.num_steps.checked_sub(1).map(|k| self.first_step + k)
    }

    pub fn contains_step(&self, step: usize) -> bool {
        step >= self.first_step && step < self.first_step + self.num_steps
    }
}

fn state_file_name(step: usize) -> String {
    format!("step_{step:08}.bin")
}

/// Writes consecutive states and finishes with the manifest. Dropping the
/// writer without calling [`ArchiveWriter::finish`] leaves no manifest, so
/// readers will refuse the incomplete directory.
pub struct ArchiveWriter {
    dir: PathBuf,
    manifest: ArchiveManifest,
}

impl ArchiveWriter {
    /// Create the archive directory (if needed) and prepare a manifest with
    /// `num_steps = 0`; each stored state increments the count.
    pub fn create(dir: &Path, mut manifest: ArchiveManifest) -> Result<ArchiveWriter> {
        manifest.num_steps = 0;
        fs::create_dir_all(dir)?;
        Ok(ArchiveWriter { dir: dir.to_path_buf(), manifest })
    }

    /// Store one state. Steps must be consecutive starting at
    /// `manifest.first_step`.
    pub fn write_state(
        &mut self,
        step: usize,
        t: f64,
        velocity: &[f64],
        pressure: &[f64],
    ) -> Result<()> {
        let expected = self.manifest.first_step + self.manifest.num_steps;
        if step != expected {
            return Err(Error::Archive(format!(
                "states must be stored consecutively: got step {step}, expected {expected}"
            )));
        }
        if velocity.len() != self.manifest.num_velocity_dofs
            || pressure.len() != self.manifest.num_pressure_dofs
        {
            return Err(Error::Archive(format!(
                "state size mismatch at step {step}: velocity {} / pressure {} vs manifest {} / {}",
                velocity.len(),
                pressure.len(),
                self.manifest.num_velocity_dofs,
                self.manifest.num_pressure_dofs
            )));
        }
        let mut buf =
            Vec::with_capacity(16 + 8 * (velocity.len() + pressure.len()));
        buf.extend_from_slice(&(step as u64).to_le_bytes());
        buf.extend_from_slice(&t.to_le_bytes());
        for v in velocity.iter().chain(pressure) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(self.dir.join(state_file_name(step)), &buf)
            .map_err(|e| Error::Archive(format!("failed to store step {step}: {e}")))?;
        self.manifest.num_steps += 1;
        Ok(())
    }

    pub fn manifest(&self) -> &ArchiveManifest {
        &self.manifest
    }

    /// Write the manifest, sealing the archive for readers.
    pub fn finish(self) -> Result<ArchiveManifest> {
        let text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Archive(format!("manifest serialization failed: {e}")))?;
        fs::write(self.dir.join(MANIFEST_FILE), text)
            .map_err(|e| Error::Archive(format!("failed to store manifest: {e}")))?;
        Ok(self.manifest)
    }
}

/// One stored state.
#[derive(Clone, Debug, PartialEq)]
pub struct ArchivedState {
    pub step: usize,
    pub t: f64,
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
}

/// Read-only view of a finished archive.
pub struct ArchiveReader {
    dir: PathBuf,
    manifest: ArchiveManifest,
}

impl ArchiveReader {
    pub fn open(dir: &Path) -> Result<ArchiveReader> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| {
            Error::Archive(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        let manifest: ArchiveManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Archive(format!("malformed manifest: {e}")))?;
        if manifest.format != ARCHIVE_FORMAT {
            return Err(Error::Archive(format!(
                "archive format {} is not supported (expected {ARCHIVE_FORMAT})",
                manifest.format
            )));
        }
        Ok(ArchiveReader { dir: dir.to_path_buf(), manifest })
    }

    pub fn manifest(&self) -> &ArchiveManifest {
        &self.manifest
    }

    pub fn read_state(&self, step: usize) -> Result<ArchivedState> {
        if !self.manifest.contains_step(step) {
            return Err(Error::Archive(format!(
                "step {step} is outside the stored range {}..={}",
                self.manifest.first_step,
                self.manifest.last_step().unwrap_or(self.manifest.first_step)
            )));
        }
        let path = self.dir.join(state_file_name(step));
        let buf = fs::read(&path)
            .map_err(|e| Error::Archive(format!("cannot read {}: {e}", path.display())))?;
        let nv = self.manifest.num_velocity_dofs;
        let np = self.manifest.num_pressure_dofs;
        let expected_len = 16 + 8 * (nv + np);
        if buf.len() != expected_len {
            return Err(Error::Archive(format!(
                "state file for step {step} has {} bytes, expected {expected_len}",
                buf.len()
            )));
        }
        let stored_step = u64::from_le_bytes(buf[0..8].try_into().unwrap());
        if stored_step != step as u64 {
            return Err(Error::Archive(format!(
                "state file for step {step} records step {stored_step}"
            )));
        }
        let t = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        let read_f64s = |lo: usize, n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let at = lo + 8 * k;
                    f64::from_le_bytes(buf[at..at + 8].try_into().unwrap())
                })
                .collect()
        };
        Ok(ArchivedState {
            step,
            t,
            velocity: read_f64s(16, nv),
            pressure: read_f64s(16 + 8 * nv, np),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn test_manifest() -> ArchiveManifest {
        ArchiveManifest {
            format: ARCHIVE_FORMAT,
            mesh_fingerprint: "deadbeef".into(),
            dt: 0.005,
            viscosity: 0.001,
            bc_mode: "dirichlet".into(),
            num_velocity_dofs: 7,
            num_pressure_dofs: 3,
            first_step: 10,
            num_steps: 0,
        }
    }

    fn temp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("nudgefem-archive-{name}-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).unwrap();
        }
        dir
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = temp_dir("round-trip");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let states: Vec<(Vec<f64>, Vec<f64>)> = (0..3)
            .map(|_| {
                (
                    (0..7).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect();

        let mut writer = ArchiveWriter::create(&dir, test_manifest()).unwrap();
        for (k, (v, p)) in states.iter().enumerate() {
            writer.write_state(10 + k, 0.005 * k as f64, v, p).unwrap();
        }
        let manifest = writer.finish().unwrap();
        assert_eq!(manifest.num_steps, 3);

        let reader = ArchiveReader::open(&dir).unwrap();
        assert_eq!(reader.manifest(), &manifest);
        for (k, (v, p)) in states.iter().enumerate() {
            let state = reader.read_state(10 + k).unwrap();
            // Bit-identical replay: compare raw bits, not approximate values.
            let bits = |xs: &[f64]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&state.velocity), bits(v));
            assert_eq!(bits(&state.pressure), bits(p));
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn non_consecutive_steps_rejected() {
        let dir = temp_dir("gap");
        let mut writer = ArchiveWriter::create(&dir, test_manifest()).unwrap();
        let v = vec![0.0; 7];
        let p = vec![0.0; 3];
        writer.write_state(10, 0.0, &v, &p).unwrap();
        let err = writer.write_state(12, 0.01, &v, &p).unwrap_err();
        assert!(matches!(err, Error::Archive(_)), "{err}");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn out_of_range_and_corrupt_states_reported() {
        let dir = temp_dir("corrupt");
        let mut writer = ArchiveWriter::create(&dir, test_manifest()).unwrap();
        let v = vec![1.0; 7];
        let p = vec![2.0; 3];
        writer.write_state(10, 0.0, &v, &p).unwrap();
        writer.write_state(11, 0.005, &v, &p).unwrap();
        writer.finish().unwrap();

        let reader = ArchiveReader::open(&dir).unwrap();
        assert!(reader.read_state(9).is_err());
        assert!(reader.read_state(12).is_err());

        // Truncate one state file and expect a clean error.
        let path = dir.join(state_file_name(11));
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(reader.read_state(11), Err(Error::Archive(_))));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_manifest_refused() {
        let dir = temp_dir("no-manifest");
        fs::create_dir_all(&dir).unwrap();
        assert!(matches!(ArchiveReader::open(&dir), Err(Error::Archive(_))));
        fs::remove_dir_all(&dir).unwrap();
    }
}
