//! Built-in experiments and their default configs.

use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Entry {
    pub name: &'static str,
    /// Library module the experiment drives.
    pub module: &'static str,
    pub description: &'static str,
    /// Result the experiment checks numerically.
    pub exercises: &'static str,
    #[serde(skip)]
    config: &'static str,
}

pub const EXPERIMENTS: &[Entry] = &[
    Entry {
        name: "semigroup-rates",
        module: "semigroup",
        description: "log-log smoothing slopes of the heat semigroup and the vanishing-limit check",
        exercises: "L^p-L^q and derivative smoothing estimates",
        config: include_str!("../configs/semigroup-rates.toml"),
    },
    Entry {
        name: "picard-vs-ifrk4",
        module: "mild",
        description: "Picard iteration of the Duhamel map against integrating-factor RK4",
        exercises: "local existence by contraction in the weighted trajectory space",
        config: include_str!("../configs/picard-vs-ifrk4.toml"),
    },
    Entry {
        name: "colehopf-1d",
        module: "mild",
        description: "both solvers against the exact Cole-Hopf solution of 1-D Burgers",
        exercises: "mild solution equals the classical solution",
        config: include_str!("../configs/colehopf-1d.toml"),
    },
    Entry {
        name: "fk-validate",
        module: "stochastic",
        description: "Monte Carlo along stochastic characteristics against the spectral solution",
        exercises: "Feynman-Kac representation and the L^inf bound",
        config: include_str!("../configs/fk-validate.toml"),
    },
    Entry {
        name: "bkm-certify",
        module: "bkm",
        description: "divergence and energy identities, energy inequality with computed K, blow-up scan",
        exercises: "L^p energy inequality and global existence on the torus",
        config: include_str!("../configs/bkm-certify.toml"),
    },
    Entry {
        name: "kpz-sweep",
        module: "kpz",
        description: "Hamilton-Jacobi to Burgers link, a priori estimate and vanishing-viscosity sweep",
        exercises: "gradient link to the KPZ equation and its viscous limit",
        config: include_str!("../configs/kpz-sweep.toml"),
    },
];

pub fn find(name: &str) -> Option<&'static Entry> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

pub fn builtin_config(name: &str) -> Option<&'static str> {
    find(name).map(|e| e.config)
}

/// Entries whose name or module contains `filter`.
pub fn list(filter: Option<&str>) -> Vec<&'static Entry> {
    EXPERIMENTS
        .iter()
        .filter(|e| filter.is_none_or(|f| e.name.contains(f) || e.module.contains(f)))
        .collect()
}
