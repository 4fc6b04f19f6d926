//! Binary field files, JSON sidecars and trajectory directories.
//!
//! A field file is the 5-byte magic `BRGF1`, then little-endian `d: u32`,
//! `n: u32`, `L: f64`, `components: u32`, `time: f64`, then each component's
//! `n^d` samples as `f64` in row-major order.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::trajectory::{Trajectory, TrajectoryMeta};

pub const MAGIC: &[u8; 5] = b"BRGF1";

/// Library version in `git describe` style.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub fn write_field<W: Write>(mut w: W, field: &Field, time: f64) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&g.length().to_le_bytes())?;
    w.write_all(&(field.num_components() as u32).to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for c in field.components() {
        for v in c {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

/// Reads a field and its time stamp.
pub fn read_field<R: Read>(mut r: R) -> Result<(Field, f64)> {
    let magic: [u8; 5] = read_array(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let n = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let length = f64::from_le_bytes(read_array(&mut r)?);
    let ncomp = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let time = f64::from_le_bytes(read_array(&mut r)?);
    let grid = TorusGrid::with_length(dim, n, length)?;
    if ncomp == 0 || ncomp > 16 {
        return Err(Error::Format(format!("unsupported component count {ncomp}")));
    }
    let mut components = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        let mut c = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            c.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        components.push(c);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after samples".into()));
    }
    Ok((Field::new(grid, components)?, time))
}

/// Metadata stored next to a field file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn save_field(path: &Path, field: &Field, time: f64, sidecar: Option<&FieldSidecar>) -> Result<()> {
    write_field(BufWriter::new(fs::File::create(path)?), field, time)?;
    if let Some(meta) = sidecar {
        fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)? + "\n")?;
    }
    Ok(())
}

pub fn load_field(path: &Path) -> Result<(Field, f64)> {
    read_field(BufReader::new(fs::File::open(path)?))
}

pub fn load_sidecar(path: &Path) -> Result<Option<FieldSidecar>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(side)?)?))
}

/// `manifest.json` of a trajectory directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub version: String,
    pub solver: String,
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub components: usize,
    pub nu: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blown_up_at: Option<f64>,
    pub meta: TrajectoryMeta,
    /// Configuration echo supplied by the caller.
    #[serde(default)]
    pub config: serde_json::Value,
}

pub fn snapshot_name(k: usize) -> String {
    format!("snap_{k:05}.brgf")
}

/// Writes every snapshot plus `manifest.json` into `dir` (created if missing).
pub fn save_trajectory(dir: &Path, traj: &Trajectory, config: serde_json::Value) -> Result<TrajectoryManifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(traj.len());
    for (k, s) in traj.snapshots().iter().enumerate() {
        let name = snapshot_name(k);
        save_field(&dir.join(&name), s, traj.time(k), None)?;
        files.push(name);
    }
    let g = traj.grid();
    let manifest = TrajectoryManifest {
        version: VERSION.to_string(),
        solver: traj.meta.solver.clone(),
        dim: g.dim(),
        n: g.n(),
        length: g.length(),
        components: traj.num_components(),
        nu: traj.nu(),
        dt: traj.dt(),
        times: traj.times(),
        files,
        blown_up_at: traj.blown_up_at(),
        meta: traj.meta.clone(),
        config,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}

pub fn load_trajectory(dir: &Path) -> Result<(Trajectory, TrajectoryManifest)> {
    let manifest: TrajectoryManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let snaps = manifest
        .files
        .iter()
        .map(|f| load_field(&dir.join(f)).map(|(field, _)| field))
        .collect::<Result<Vec<_>>>()?;
    let mut traj = Trajectory::new(manifest.nu, manifest.dt, snaps)?.with_meta(manifest.meta.clone());
    if let Some(t) = manifest.blown_up_at {
        traj.mark_blown_up(t);
    }
    Ok((traj, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_band_limited;

    #[test]
    fn field_round_trip_is_bit_exact() {
        let g = TorusGrid::with_length(2, 8, 3.5).unwrap();
        let f = random_band_limited(&g, 2, 3, 1.0, 5);
        let mut buf = Vec::new();
        write_field(&mut buf, &f, 0.25).unwrap();
        assert_eq!(buf.len(), 5 + 4 + 4 + 8 + 4 + 8 + 2 * 64 * 8);
        assert_eq!(&buf[..5], b"BRGF1");
        let (back, t) = read_field(buf.as_slice()).unwrap();
        assert_eq!(t, 0.25);
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_input_rejected() {
        assert!(matches!(read_field(&b"BRGF2"[..]), Err(Error::Format(_))));
        let g = TorusGrid::new(1, 8).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &Field::zeros(&g, 1), 0.0).unwrap();
        assert!(read_field(&buf[..buf.len() - 1]).is_err());
        buf.push(0);
        assert!(read_field(buf.as_slice()).is_err());
    }

    #[test]
    fn trajectory_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::new(1, 16).unwrap();
        let snaps: Vec<Field> = (0..4).map(|k| random_band_limited(&g, 1, 4, 1.0, k)).collect();
        let traj = Trajectory::new(0.1, 0.05, snaps).unwrap().with_meta(TrajectoryMeta {
            solver: "test".into(),
            seeds: vec![7],
            ..Default::default()
        });
        let m = save_trajectory(dir.path(), &traj, serde_json::json!({"n": 16})).unwrap();
        assert_eq!(m.files[3], "snap_00003.brgf");
        let (back, manifest) = load_trajectory(dir.path()).unwrap();
        assert_eq!(manifest, m);
        assert_eq!(back.snapshots(), traj.snapshots());
        assert_eq!(back.meta, traj.meta);

        let path = dir.path().join("u0.brgf");
        let side = FieldSidecar {
            nu: Some(0.1),
            provenance: "random".into(),
            seed: Some(3),
        };
        save_field(&path, traj.initial(), 0.0, Some(&side)).unwrap();
        assert_eq!(load_sidecar(&path).unwrap(), Some(side));
    }
}
