//! Artifact directories: CSV tables, certificates, trajectories and the run manifest.
//!
//! Everything is written into a hidden staging directory next to the target
//! and renamed into place at the end, so a failed run leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use burgerlab_core::io::{save_trajectory, VERSION};
use burgerlab_core::{Certificate, Trajectory};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// A CSV table; cells are preformatted strings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation in exponent form.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Everything an experiment produces.
#[derive(Default)]
pub struct Artifacts {
    pub certificates: Vec<Certificate>,
    pub tables: Vec<(String, Table)>,
    pub trajectories: Vec<(String, Trajectory)>,
    /// Extra JSON reports, written as `<name>.json`.
    pub reports: Vec<(String, serde_json::Value)>,
    pub notes: Vec<String>,
}

impl Artifacts {
    pub fn pass(&self) -> bool {
        Certificate::all_pass(&self.certificates)
    }

    pub fn report<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.reports.push((name.to_string(), serde_json::to_value(value)?));
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct CertificateSummary {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub pass: bool,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub certificates: Vec<CertificateSummary>,
    pub files: Vec<String>,
    pub notes: Vec<String>,
    /// Full configuration echo; `config.toml` holds the same in runnable form.
    pub config: serde_json::Value,
}

fn staging_path(out: &Path) -> Result<PathBuf> {
    let name = out
        .file_name()
        .ok_or_else(|| CliError::Output(format!("bad output directory {}", out.display())))?;
    Ok(out.with_file_name(format!(".{}.partial", name.to_string_lossy())))
}

fn write_all(dir: &Path, cfg: &ExperimentConfig, art: &Artifacts, manifest: &mut RunManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = vec!["config.toml".to_string(), "certificates.json".to_string()];
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    fs::write(
        dir.join("certificates.json"),
        serde_json::to_string_pretty(&art.certificates)? + "\n",
    )?;
    for (name, table) in &art.tables {
        let file = format!("{name}.csv");
        table.write(&dir.join(&file))?;
        files.push(file);
    }
    for (name, value) in &art.reports {
        let file = format!("{name}.json");
        fs::write(dir.join(&file), serde_json::to_string_pretty(value)? + "\n")?;
        files.push(file);
    }
    let config_json = serde_json::to_value(cfg)?;
    for (name, traj) in &art.trajectories {
        save_trajectory(&dir.join(name), traj, config_json.clone())?;
        files.push(format!("{name}/"));
    }
    files.push("manifest.json".into());
    manifest.files = files;
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(manifest)? + "\n",
    )?;
    Ok(())
}

/// Writes the artifact directory `out`. An existing directory is replaced only
/// if it holds a previous run (has a `manifest.json`).
pub fn write_outputs(
    out: &Path,
    cfg: &ExperimentConfig,
    art: &Artifacts,
    wall_clock_seconds: f64,
    threads: usize,
) -> Result<RunManifest> {
    if out.exists() && !out.join("manifest.json").is_file() {
        return Err(CliError::Output(format!(
            "refusing to overwrite {}: not a previous run directory",
            out.display()
        )));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let staging = staging_path(out)?;
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    let mut manifest = RunManifest {
        experiment: cfg.experiment.clone(),
        version: VERSION.to_string(),
        pass: art.pass(),
        seeds: cfg.seeds(),
        threads,
        wall_clock_seconds,
        certificates: art
            .certificates
            .iter()
            .map(|c| CertificateSummary {
                name: c.name.clone(),
                pass: c.pass,
            })
            .collect(),
        files: Vec::new(),
        notes: art.notes.clone(),
        config: serde_json::to_value(cfg)?,
    };
    let result = write_all(&staging, cfg, art, &mut manifest).and_then(|()| {
        if out.exists() {
            fs::remove_dir_all(out)?;
        }
        fs::rename(&staging, out)?;
        Ok(())
    });
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    Ok(manifest)
}
