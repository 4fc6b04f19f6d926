//! Integrating-factor RK4 for semilinear equations `∂_t v = νΔv + N(v, t)`.
//!
//! Diffusion is integrated exactly with `E = e^{−ν|k|²Δt/2}`; the classical
//! RK4 stages act on the transformed variable. Shared by the Burgers solver and
//! the Hamilton–Jacobi solver.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::force::Force;
use crate::ops::{advect_spectra, heat_semigroup_apply};
use crate::trajectory::{Trajectory, TrajectoryMeta};

pub(crate) type Spectra = Vec<Vec<Complex64>>;

/// Whether the Burgers solver keeps the advection term. `Off` reduces the
/// equation to the forced heat equation (a test hook).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Nonlinearity {
    #[default]
    On,
    Off,
}

fn axpy(acc: &mut Spectra, a: f64, x: &Spectra) {
    for (ac, xc) in acc.iter_mut().zip(x) {
        for (p, q) in ac.iter_mut().zip(xc) {
            *p += a * q;
        }
    }
}

fn scale_modes(e: &[f64], x: &Spectra) -> Spectra {
    x.iter()
        .map(|c| c.iter().zip(e).map(|(z, &w)| z * w).collect())
        .collect()
}

pub(crate) fn validate_run(nu: f64, t_end: f64, steps: usize) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(invalid(format!("viscosity must be positive (got {nu})")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("horizon must be positive (got {t_end})")));
    }
    if steps == 0 {
        return Err(invalid("need at least one time step"));
    }
    Ok(())
}

/// Integrates `∂_t v = νΔv + rhs(v, t)` with `steps` uniform steps and
/// records every step. Stops at the first non-finite state.
pub(crate) fn integrate<N>(
    v0: &Field,
    nu: f64,
    t_end: f64,
    steps: usize,
    rhs: N,
    solver: &str,
) -> Result<Trajectory>
where
    N: Fn(&Spectra, f64) -> Spectra,
{
    validate_run(nu, t_end, steps)?;
    v0.ensure_finite()?;
    let grid = v0.grid();
    let dt = t_end / steps as f64;
    let half: Vec<f64> = grid
        .tables()
        .k2
        .iter()
        .map(|&k| (-0.5 * nu * k * dt).exp())
        .collect();
    let full: Vec<f64> = half.iter().map(|e| e * e).collect();

    let mut state: Spectra = v0.spectrum().to_vec();
    let mut snaps = Vec::with_capacity(steps + 1);
    snaps.push(v0.clone());
    let mut blown = None;
    for k in 0..steps {
        let t = k as f64 * dt;
        let a = rhs(&state, t);
        let mut probe = scale_modes(&half, &state);
        let mut stage = state.clone();
        axpy(&mut stage, 0.5 * dt, &a);
        let b = rhs(&scale_modes(&half, &stage), t + 0.5 * dt);
        axpy(&mut probe, 0.5 * dt, &b);
        let c = rhs(&probe, t + 0.5 * dt);
        let mut last = scale_modes(&full, &state);
        axpy(&mut last, dt, &scale_modes(&half, &c));
        let d = rhs(&last, t + dt);

        let mut next = scale_modes(&full, &state);
        axpy(&mut next, dt / 6.0, &scale_modes(&full, &a));
        let mut bc = b;
        axpy(&mut bc, 1.0, &c);
        axpy(&mut next, dt / 3.0, &scale_modes(&half, &bc));
        axpy(&mut next, dt / 6.0, &d);
        state = next;

        let snap = Field::from_spectrum(grid, state.clone());
        if !snap.is_finite() {
            blown = Some((k + 1) as f64 * dt);
            break;
        }
        snaps.push(snap);
    }
    let mut traj = Trajectory::new(nu, dt, snaps)?.with_meta(TrajectoryMeta {
        solver: solver.to_string(),
        ..Default::default()
    });
    if let Some(t) = blown {
        traj.mark_blown_up(t);
    }
    Ok(traj)
}

/// Adds the force spectrum at time `t` into `acc`.
pub(crate) fn add_force(acc: &mut Spectra, f: &Force, t: f64) {
    if let Some(ft) = f.at(t) {
        for (a, s) in acc.iter_mut().zip(ft.spectrum()) {
            for (p, q) in a.iter_mut().zip(s) {
                *p += q;
            }
        }
    }
}

/// Integrating-factor RK4 for `u_t + (u·∇)u = νΔu + f` with `steps` steps on `[0, t_end]`.
pub fn if_rk4_solve(u0: &Field, f: &Force, nu: f64, t_end: f64, steps: usize) -> Result<Trajectory> {
    if_rk4_solve_with(u0, f, nu, t_end, steps, Nonlinearity::On)
}

/// As [`if_rk4_solve`] with the advection term optionally switched off.
pub fn if_rk4_solve_with(
    u0: &Field,
    f: &Force,
    nu: f64,
    t_end: f64,
    steps: usize,
    nonlinearity: Nonlinearity,
) -> Result<Trajectory> {
    let grid = u0.grid().clone();
    let d = grid.dim();
    if u0.num_components() != d {
        return Err(invalid(format!(
            "velocity must have {d} components, got {}",
            u0.num_components()
        )));
    }
    f.check_compatible(&grid, d)?;
    let rhs = |v: &Spectra, t: f64| -> Spectra {
        let mut out = match nonlinearity {
            Nonlinearity::On => {
                let u = Field::from_spectrum(&grid, v.clone());
                let mut s = advect_spectra(&u, &u);
                s.iter_mut().flatten().for_each(|z| *z = -*z);
                s
            }
            Nonlinearity::Off => vec![vec![Complex64::default(); grid.len()]; d],
        };
        add_force(&mut out, f, t);
        out
    };
    let id = match nonlinearity {
        Nonlinearity::On => "ifrk4",
        Nonlinearity::Off => "ifrk4-heat",
    };
    integrate(u0, nu, t_end, steps, rhs, id)
}

/// `t ↦ S_t^ν u0` sampled on `steps + 1` uniform times, each snapshot exact.
pub fn heat_flow(u0: &Field, nu: f64, t_end: f64, steps: usize) -> Result<Trajectory> {
    validate_run(nu, t_end, steps)?;
    let dt = t_end / steps as f64;
    let snaps = (0..=steps)
        .map(|k| heat_semigroup_apply(u0, nu, k as f64 * dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(nu, dt, snaps)?.with_meta(TrajectoryMeta {
        solver: "heat".into(),
        ..Default::default()
    }))
}
