//! Stochastic characteristics `dX = −u(T − s, X) ds + √(2ν) dW` on the torus and
//! the Monte Carlo estimate
//!
//! ```text
//! u(T, x) ≈ E[u(δ, X_{T−δ}(x))] + E[Σ_j f(T − s_j, X_{s_j}) Δs].
//! ```
//!
//! Every path draws from its own ChaCha stream `(seed, path index)`, so results
//! do not depend on how paths are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateRow};
use crate::error::{invalid, Error, Result};
use crate::force::Force;
use crate::grid::MAX_DIM;
use crate::interp::{eval_linear, eval_spectral, wrap, Interpolation};
use crate::norms::lp_norm;
use crate::trajectory::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub nu: f64,
    /// Terminal time `T` of the representation.
    pub horizon: f64,
    /// Lower cutoff `δ ∈ (0, T)`.
    pub delta: f64,
    /// Euler–Maruyama step; rounded so that `(T − δ)/dt` is an integer.
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl FlowConfig {
    pub fn new(nu: f64, horizon: f64, delta: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            nu,
            horizon,
            delta,
            dt,
            n_paths,
            seed,
            interpolation: Interpolation::default(),
        }
    }

    /// `δ = 5 Δt` of the source trajectory.
    pub fn default_delta(traj: &Trajectory) -> f64 {
        5.0 * traj.dt()
    }

    pub fn with_interpolation(mut self, mode: Interpolation) -> Self {
        self.interpolation = mode;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            v.push(format!("flow viscosity must be ≥ 0 (got {})", self.nu));
        }
        if !(self.delta > 0.0 && self.delta < self.horizon) {
            v.push(format!(
                "need 0 < delta < T (got delta={}, T={})",
                self.delta, self.horizon
            ));
        }
        if !(self.dt > 0.0 && self.dt <= (self.horizon - self.delta) / 10.0) {
            v.push(format!(
                "dt must lie in (0, (T − delta)/10] (got {})",
                self.dt
            ));
        }
        if self.n_paths < 100 {
            v.push(format!("n_paths must be ≥ 100 (got {})", self.n_paths));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(invalid(v.join("; ")))
        }
    }

    /// Number of Euler–Maruyama steps covering `[0, T − δ]`.
    pub fn steps(&self) -> usize {
        (((self.horizon - self.delta) / self.dt).round() as usize).max(1)
    }

    /// Step actually used: `(T − δ) / steps`.
    pub fn effective_dt(&self) -> f64 {
        (self.horizon - self.delta) / self.steps() as f64
    }
}

/// Monte Carlo value at one query point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub point: Vec<f64>,
    pub value: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub interpolation: Interpolation,
}

/// Precomputed time brackets of `u(T − s_j)`: snapshot pair and weight.
struct Schedule {
    brackets: Vec<(usize, usize, f64)>,
    times: Vec<f64>,
    dt: f64,
}

impl Schedule {
    fn new(traj: &Trajectory, cfg: &FlowConfig) -> Self {
        let steps = cfg.steps();
        let dt = cfg.effective_dt();
        let last = traj.len() - 1;
        let mut brackets = Vec::with_capacity(steps + 1);
        let mut times = Vec::with_capacity(steps + 1);
        for j in 0..=steps {
            let tau = if j == steps {
                cfg.delta
            } else {
                cfg.horizon - j as f64 * dt
            };
            let s = (tau / traj.dt()).clamp(0.0, last as f64);
            let a = (s.floor() as usize).min(last);
            let (b, w) = if a == last { (a, 0.0) } else { (a + 1, s - a as f64) };
            // snap weights within round-off of a node
            let w = if w < 1e-12 { 0.0 } else { w };
            brackets.push((a, b, w));
            times.push(tau);
        }
        Self {
            brackets,
            times,
            dt,
        }
    }
}

fn eval(traj: &Trajectory, bracket: (usize, usize, f64), x: &[f64], mode: Interpolation, out: &mut [f64]) {
    let (a, b, w) = bracket;
    let point = |k: usize, buf: &mut [f64]| match mode {
        Interpolation::Spectral => eval_spectral(traj.snapshot(k), x, buf),
        Interpolation::Linear => eval_linear(traj.snapshot(k), x, buf),
    };
    point(a, out);
    if w > 0.0 {
        let mut tmp = [0.0; MAX_DIM];
        let tmp = &mut tmp[..out.len()];
        point(b, tmp);
        for (o, v) in out.iter_mut().zip(tmp.iter()) {
            *o = (1.0 - w) * *o + w * v;
        }
    }
}

fn check_inputs(traj: &Trajectory, x: &[f64], cfg: &FlowConfig) -> Result<()> {
    cfg.validate()?;
    let d = traj.grid().dim();
    if traj.num_components() != d {
        return Err(invalid("the flow needs a velocity trajectory"));
    }
    if x.len() != d {
        return Err(invalid(format!("start point must have {d} coordinates")));
    }
    if cfg.horizon > traj.end_time() * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "trajectory ends at {} but the flow needs [delta, T] = [{}, {}]",
            traj.end_time(),
            cfg.delta,
            cfg.horizon
        )));
    }
    Ok(())
}

/// Runs one path; returns `u(δ, X_J) + Σ_j f(T − s_j, X_j) Δs` and optionally
/// records every position.
fn run_path(
    traj: &Trajectory,
    f: &Force,
    x0: &[f64],
    cfg: &FlowConfig,
    sched: &Schedule,
    stream: u64,
    mut record: Option<&mut Vec<Vec<f64>>>,
) -> [f64; MAX_DIM] {
    let d = x0.len();
    let length = traj.grid().length();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let noise = (2.0 * cfg.nu * sched.dt).sqrt();
    let mut x = [0.0; MAX_DIM];
    for a in 0..d {
        x[a] = wrap(x0[a], length);
    }
    if let Some(r) = record.as_deref_mut() {
        r.push(x[..d].to_vec());
    }
    let mut drift = [0.0; MAX_DIM];
    let mut forcing = [0.0; MAX_DIM];
    let steps = sched.brackets.len() - 1;
    for j in 0..steps {
        eval(traj, sched.brackets[j], &x[..d], cfg.interpolation, &mut drift[..d]);
        f.accumulate_point(sched.times[j], &x[..d], cfg.interpolation, &mut forcing[..d]);
        for a in 0..d {
            let xi: f64 = rng.sample(StandardNormal);
            x[a] = wrap(x[a] - drift[a] * sched.dt + noise * xi, length);
        }
        if let Some(r) = record.as_deref_mut() {
            r.push(x[..d].to_vec());
        }
    }
    let mut value = [0.0; MAX_DIM];
    eval(traj, sched.brackets[steps], &x[..d], cfg.interpolation, &mut value[..d]);
    for a in 0..d {
        value[a] += forcing[a] * sched.dt;
    }
    value
}

/// Euler–Maruyama path `X_{s_j}`, `j = 0..=steps`, of path number `stream`.
pub fn simulate_flow(traj: &Trajectory, x: &[f64], cfg: &FlowConfig, stream: u64) -> Result<Vec<Vec<f64>>> {
    check_inputs(traj, x, cfg)?;
    let sched = Schedule::new(traj, cfg);
    let mut path = Vec::with_capacity(sched.brackets.len());
    run_path(traj, &Force::Zero, x, cfg, &sched, stream, Some(&mut path));
    Ok(path)
}

/// Pairwise (cascade) summation; the result depends only on the input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Monte Carlo estimate of `u(T, x)` from the flow driven by `traj`.
pub fn feynman_kac_estimate(traj: &Trajectory, f: &Force, x: &[f64], cfg: &FlowConfig) -> Result<McEstimate> {
    check_inputs(traj, x, cfg)?;
    if traj.is_blown_up() {
        return Err(Error::BlownUp(traj.blown_up_at().unwrap_or(f64::NAN)));
    }
    let d = x.len();
    f.check_compatible(traj.grid(), d)?;
    let sched = Schedule::new(traj, cfg);
    let samples: Vec<[f64; MAX_DIM]> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| run_path(traj, f, x, cfg, &sched, i, None))
        .collect();
    let n = samples.len() as f64;
    let mut value = Vec::with_capacity(d);
    let mut std_error = Vec::with_capacity(d);
    let mut column = vec![0.0; samples.len()];
    for a in 0..d {
        for (c, s) in column.iter_mut().zip(&samples) {
            *c = s[a];
        }
        let mean = pairwise_sum(&column) / n;
        column.iter_mut().for_each(|c| *c = (*c - mean).powi(2));
        let var = pairwise_sum(&column) / (n - 1.0);
        value.push(mean);
        std_error.push((var / n).sqrt());
    }
    Ok(McEstimate {
        point: x.to_vec(),
        value,
        std_error,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        interpolation: cfg.interpolation,
    })
}

/// `|u(T)|_∞ ≤ |u(δ)|_∞ + ∫_0^T |f(s)|_∞ ds` with `T` the trajectory end;
/// tolerance `1e−8 + 1e−3 · RHS`.
pub fn linfty_certificate(traj: &Trajectory, f: &Force, delta: f64) -> Result<Certificate> {
    if !(delta >= 0.0 && delta <= traj.end_time()) {
        return Err(invalid(format!("delta must lie in [0, T] (got {delta})")));
    }
    let t_end = traj.end_time();
    let lhs = lp_norm(traj.last(), f64::INFINITY)?.value;
    let start = lp_norm(&traj.at_time(delta), f64::INFINITY)?.value;
    let mut integral = 0.0;
    if !f.is_zero() {
        let fsup = traj
            .times()
            .iter()
            .map(|&t| lp_norm(&f.at(t).expect("nonzero force"), f64::INFINITY).map(|r| r.value))
            .collect::<Result<Vec<_>>>()?;
        integral = fsup.windows(2).map(|w| 0.5 * traj.dt() * (w[0] + w[1])).sum();
    }
    let rhs = start + integral;
    let tol = 1e-8 + 1e-3 * rhs;
    let row = CertificateRow::new(t_end, lhs, rhs, tol);
    Ok(Certificate::from_rows("linfty-bound", vec![row])
        .with_metric("delta", delta)
        .with_metric("force_integral", integral))
}
