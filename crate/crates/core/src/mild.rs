//! Mild solutions by Picard iteration of the Duhamel map
//!
//! ```text
//! ℱ(u)(t) = S_t u0 − ∫_0^t S_{t−s} (F(u(s)) − f(s)) ds,
//! ```
//!
//! in the weighted trajectory norm
//! `|u|_{Q_T} = sup_t |u(t)|_p + sup_{t>0} t^b |u(t)|_{2p} + sup_{t>0} t^c |u(t)|_{1,p}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::force::Force;
use crate::ifrk4::heat_flow;
use crate::norms::{lp_norm, sobolev_norm};
use crate::ops::advect_spectra;
use crate::trajectory::{Trajectory, TrajectoryMeta};

/// Starting trajectory of the iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialIterate {
    #[default]
    Zero,
    HeatFlow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub nu: f64,
    /// Lebesgue index of `X = L^p`; `Y = L^{2p}`, `Z = H^{1,p}`.
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Requested horizon; the search may shrink it.
    pub horizon: f64,
    /// Uniform time steps (quadrature intervals) on `[0, T]`, kept when `T` is halved.
    pub steps: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub t_min: f64,
    pub initial: InitialIterate,
}

impl PicardConfig {
    /// Exponents `a = b = d/(4p)`, `c = 1/2`; 60 iterations, `tol = 1e−10`, `T_min = 1e−4`.
    pub fn new(dim: usize, p: f64, nu: f64, horizon: f64, steps: usize) -> Self {
        let w = dim as f64 / (4.0 * p);
        Self {
            nu,
            p,
            a: w,
            b: w,
            c: 0.5,
            horizon,
            steps,
            max_iter: 60,
            tol: 1e-10,
            t_min: 1e-4,
            initial: InitialIterate::Zero,
        }
    }

    /// Every violated constraint, empty when the configuration is usable on `dim`.
    pub fn violations(&self, dim: usize) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.nu > 0.0) {
            v.push(format!("nu must be positive (got {})", self.nu));
        }
        if !(self.p >= dim as f64) {
            v.push(format!("p must be ≥ d = {dim} (got {})", self.p));
        }
        if [self.a, self.b, self.c].iter().any(|e| !(*e >= 0.0)) {
            v.push("weight exponents must be nonnegative".into());
        }
        if !(self.a + self.b + self.c <= 1.0) {
            v.push(format!(
                "a + b + c must be ≤ 1 (got {})",
                self.a + self.b + self.c
            ));
        }
        if !(self.horizon > 0.0) {
            v.push("horizon must be positive".into());
        }
        if self.steps == 0 {
            v.push("steps must be ≥ 1".into());
        }
        if self.max_iter == 0 {
            v.push("max_iter must be ≥ 1".into());
        }
        if !(self.tol > 0.0) {
            v.push("tol must be positive".into());
        }
        if !(self.t_min > 0.0) {
            v.push("t_min must be positive".into());
        }
        v
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let v = self.violations(dim);
        if v.is_empty() {
            Ok(())
        } else {
            Err(invalid(v.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// `|u^{(k+1)} − u^{(k)}|_{Q_T}` at the accepted horizon.
    pub iterate_distances: Vec<f64>,
    /// Geometric mean of successive distance ratios (0 when there is only one distance).
    pub estimated_ratio: f64,
    /// `sup_t |free(t)|_X` with `free = S_t u0 + ∫ S_{t−s} f ds`.
    pub alpha_bound: f64,
    /// `max(sup t^b |free|_Y, sup t^c |free|_Z)`.
    pub beta_bound: f64,
    /// Whether every iterate stayed in the ball `M(α, β, T)`.
    pub iterates_in_ball: bool,
    pub converged: bool,
    #[serde(rename = "T_0")]
    pub t0: f64,
    /// Horizons tried before `T_0`, with the ratio measured on each.
    pub rejected: Vec<(f64, f64)>,
}

/// The three weighted parts of the `Q_T` norm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QtParts {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl QtParts {
    pub fn total(&self) -> f64 {
        self.x + self.y + self.z
    }
}

pub fn qt_parts(traj: &Trajectory, cfg: &PicardConfig) -> Result<QtParts> {
    let mut parts = QtParts::default();
    for (k, s) in traj.snapshots().iter().enumerate() {
        parts.x = parts.x.max(lp_norm(s, cfg.p)?.value);
        let t = traj.time(k);
        if t > 0.0 {
            parts.y = parts.y.max(t.powf(cfg.b) * lp_norm(s, 2.0 * cfg.p)?.value);
            parts.z = parts.z.max(t.powf(cfg.c) * sobolev_norm(s, 1.0, cfg.p)?.value);
        }
    }
    Ok(parts)
}

/// `|u|_{Q_T}` with suprema over the grid times.
pub fn qt_norm(traj: &Trajectory, cfg: &PicardConfig) -> Result<f64> {
    Ok(qt_parts(traj, cfg)?.total())
}

pub fn qt_distance(a: &Trajectory, b: &Trajectory, cfg: &PicardConfig) -> Result<f64> {
    qt_norm(&a.difference(b)?, cfg)
}

/// One application of the Duhamel map on the time grid of `traj`.
///
/// The integrand at node `s_j` is `F(u_j) − f(s_j)` (advection dealiased); the
/// semigroup acts exactly per mode and the time integral is the composite
/// trapezoid rule, accumulated with the recurrence `S_k = E S_{k−1} + ĝ_k`,
/// `E = e^{−ν|k|²Δt}`. Snapshot 0 is `u0` itself.
pub fn duhamel_apply(traj: &Trajectory, u0: &Field, f: &Force) -> Result<Trajectory> {
    let grid = traj.grid().clone();
    u0.ensure_same_grid(traj.initial())?;
    u0.ensure_finite()?;
    let d = u0.num_components();
    if traj.num_components() != d || d != grid.dim() {
        return Err(invalid("trajectory and initial datum must be d-vector fields"));
    }
    f.check_compatible(&grid, d)?;
    if traj.is_blown_up() {
        return Err(Error::BlownUp(traj.blown_up_at().unwrap_or(f64::NAN)));
    }
    let nu = traj.nu();
    let dt = traj.dt();

    let integrands: Vec<Vec<Vec<Complex64>>> = traj
        .snapshots()
        .par_iter()
        .enumerate()
        .map(|(j, u)| {
            let mut g = advect_spectra(u, u);
            if let Some(fj) = f.at(traj.time(j)) {
                for (gc, fc) in g.iter_mut().zip(fj.spectrum()) {
                    for (a, b) in gc.iter_mut().zip(fc) {
                        *a -= b;
                    }
                }
            }
            g
        })
        .collect();
    for (j, g) in integrands.iter().enumerate() {
        if g.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::DuhamelBlowUp {
                node: j,
                time: traj.time(j),
            });
        }
    }

    let k2 = &grid.tables().k2;
    let step: Vec<f64> = k2.iter().map(|&k| (-nu * k * dt).exp()).collect();
    let u0_hat = u0.spectrum();
    let mut acc = integrands[0].clone();
    let mut snaps = Vec::with_capacity(traj.len());
    snaps.push(u0.clone());
    for (k, gk) in integrands.iter().enumerate().skip(1) {
        let t = traj.time(k);
        let decay: Vec<f64> = k2.iter().map(|&q| (-nu * q * t).exp()).collect();
        let mut out = Vec::with_capacity(d);
        for c in 0..d {
            let s = &mut acc[c];
            let g0 = &integrands[0][c];
            let gc = &gk[c];
            let mut spec = Vec::with_capacity(grid.len());
            for m in 0..grid.len() {
                s[m] = step[m] * s[m] + gc[m];
                let integral = dt * (s[m] - 0.5 * decay[m] * g0[m] - 0.5 * gc[m]);
                spec.push(decay[m] * u0_hat[c][m] - integral);
            }
            out.push(spec);
        }
        snaps.push(Field::from_spectrum(&grid, out));
    }
    Ok(Trajectory::new(nu, dt, snaps)?.with_meta(TrajectoryMeta {
        solver: "duhamel".into(),
        ..Default::default()
    }))
}

fn zero_trajectory(u0: &Field, nu: f64, horizon: f64, steps: usize) -> Result<Trajectory> {
    let z = Field::zeros(u0.grid(), u0.num_components());
    Trajectory::new(nu, horizon / steps as f64, vec![z; steps + 1])
}

fn geometric_ratio(distances: &[f64]) -> f64 {
    match distances {
        [] | [_] => 0.0,
        [first, .., last] => {
            if *first == 0.0 || *last == 0.0 {
                0.0
            } else {
                (last / first).powf(1.0 / (distances.len() - 1) as f64)
            }
        }
    }
}

#[allow(clippy::large_enum_variant)] // short-lived, one per horizon
enum Attempt {
    Done(Trajectory, ContractionReport),
    Rejected(f64),
}

fn attempt(u0: &Field, f: &Force, cfg: &PicardConfig, horizon: f64) -> Result<Attempt> {
    let zero = zero_trajectory(u0, cfg.nu, horizon, cfg.steps)?;
    let free = duhamel_apply(&zero, u0, f)?;
    let free_parts = qt_parts(&free, cfg)?;
    let alpha = free_parts.x;
    let beta = free_parts.y.max(free_parts.z);

    let mut current = match cfg.initial {
        InitialIterate::Zero => zero,
        InitialIterate::HeatFlow => heat_flow(u0, cfg.nu, horizon, cfg.steps)?,
    };
    let mut distances = Vec::new();
    let mut in_ball = true;
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let next = match duhamel_apply(&current, u0, f) {
            Ok(n) if n.snapshots().iter().all(Field::is_finite) => n,
            Ok(_) | Err(Error::DuhamelBlowUp { .. }) | Err(Error::NonFinite { .. }) => {
                return Ok(Attempt::Rejected(f64::INFINITY));
            }
            Err(e) => return Err(e),
        };
        let dist = qt_distance(&next, &current, cfg)?;
        let parts = qt_parts(&next, cfg)?;
        in_ball &= parts.x <= 2.0 * alpha * (1.0 + 1e-12)
            && parts.y.max(parts.z) <= 2.0 * beta * (1.0 + 1e-12);
        distances.push(dist);
        current = next;
        if !dist.is_finite() {
            return Ok(Attempt::Rejected(f64::INFINITY));
        }
        if dist <= cfg.tol {
            converged = true;
            break;
        }
        let n = distances.len();
        if n >= 3 && distances[n - 1] >= distances[n - 2] && distances[n - 2] >= distances[n - 3] {
            break;
        }
    }
    let ratio = geometric_ratio(&distances);
    if !converged && ratio >= 1.0 {
        return Ok(Attempt::Rejected(ratio));
    }
    current.meta = TrajectoryMeta {
        solver: "picard".into(),
        iterations: Some(distances.len()),
        ..Default::default()
    };
    Ok(Attempt::Done(
        current,
        ContractionReport {
            iterate_distances: distances,
            estimated_ratio: ratio,
            alpha_bound: alpha,
            beta_bound: beta,
            iterates_in_ball: in_ball,
            converged,
            t0: horizon,
            rejected: Vec::new(),
        },
    ))
}

/// Picard iteration `u^{(k+1)} = ℱ(u^{(k)})` with horizon halving.
///
/// Starting from `cfg.horizon`, each horizon is iterated until the `Q_T`
/// distance drops below `tol` or `max_iter` is reached. A horizon whose
/// measured ratio is `≥ 1` is halved (keeping the step count) until it
/// contracts or falls below `t_min`.
pub fn picard_solve(u0: &Field, f: &Force, cfg: &PicardConfig) -> Result<(Trajectory, ContractionReport)> {
    cfg.validate(u0.grid().dim())?;
    u0.ensure_finite()?;
    let mut horizon = cfg.horizon;
    let mut rejected = Vec::new();
    while horizon >= cfg.t_min {
        match attempt(u0, f, cfg, horizon)? {
            Attempt::Done(traj, mut report) => {
                report.rejected = rejected;
                return Ok((traj, report));
            }
            Attempt::Rejected(ratio) => {
                rejected.push((horizon, ratio));
                horizon *= 0.5;
            }
        }
    }
    Err(Error::NoContraction {
        t_min: cfg.t_min,
        last_ratio: rejected.last().map_or(f64::NAN, |r| r.1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub p: f64,
    pub ceiling: f64,
    pub times: Vec<f64>,
    pub sup_lp_per_time: Vec<f64>,
    /// First time `|u(t)|_p` exceeds the ceiling, or the blow-up time of a
    /// truncated trajectory; `None` otherwise.
    pub t_max_estimate: Option<f64>,
}

impl BlowupReport {
    /// Whether `|u(t_k)|_p` never increases for `k ≥ 1` (relative slack `rel`).
    pub fn nonincreasing_after_first_step(&self, rel: f64) -> bool {
        self.sup_lp_per_time
            .windows(2)
            .skip(1)
            .all(|w| w[1] <= w[0] * (1.0 + rel))
    }
}

/// Records `|u(t_k)|_p`; the default ceiling is `1e6 · |u0|_p`.
pub fn blowup_scan(traj: &Trajectory, p: f64, ceiling: Option<f64>) -> Result<BlowupReport> {
    let norms = traj
        .snapshots()
        .iter()
        .map(|s| lp_norm(s, p).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let ceiling = ceiling.unwrap_or(1e6 * norms[0]);
    let crossing = norms.iter().position(|&v| v > ceiling).map(|k| traj.time(k));
    Ok(BlowupReport {
        p,
        ceiling,
        times: traj.times(),
        sup_lp_per_time: norms,
        t_max_estimate: crossing.or(traj.blown_up_at()),
    })
}
