//! Quantities of the conditional global-existence argument: the divergence
//! identity and its evolution equation, the componentwise `L^p` energy balance,
//! the growth constant `K` and the resulting energy inequality, plus a discrete
//! Gronwall check.

use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateRow};
use crate::error::{invalid, Result};
use crate::field::Field;
use crate::force::Force;
use crate::norms::{componentwise_lp_power, lp_norm, sobolev_norm};
use crate::ops::{
    advect, curl, curl_norm_sq, divergence, gradient, gradient_norm_sq, laplacian,
};
use crate::trajectory::Trajectory;

/// Note attached to every report: growth conditions at infinity are vacuous on the torus.
pub const PERIODIC_NOTE: &str = "assumed: periodic surrogate";

/// `K = p + M + ω_∞ + |div f|_∞` with its ingredients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BkmReport {
    pub p: f64,
    pub t0: f64,
    /// `sup_x div u(t0, x)`.
    #[serde(rename = "M")]
    pub m: f64,
    /// `sup_{t ∈ [t0, T]} |curl u(t)|_∞`.
    pub omega_inf: f64,
    /// `sup_{t ∈ [t0, T]} |div f(t)|_∞`.
    pub divf_inf: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub notes: Vec<String>,
}

impl BkmReport {
    pub fn assemble(p: f64, t0: f64, m: f64, omega_inf: f64, divf_inf: f64) -> Self {
        Self {
            p,
            t0,
            m,
            omega_inf,
            divf_inf,
            k: p + m + omega_inf + divf_inf,
            notes: vec![PERIODIC_NOTE.to_string()],
        }
    }
}

fn h1_sq(u: &Field) -> Result<f64> {
    Ok(sobolev_norm(u, 1.0, 2.0)?.value.powi(2))
}

/// Pointwise `div F(u) − [(u·∇) div u + |∇u|² − |curl u|²]`, all products dealiased.
pub fn divergence_identity_defect(u: &Field) -> Result<Field> {
    let lhs = divergence(&advect(u, u)?)?;
    let r = divergence(u)?;
    let rhs = advect(u, &r)?
        .add(&gradient_norm_sq(u)?)?
        .sub(&curl_norm_sq(u)?)?;
    lhs.sub(&rhs)
}

/// Sup-norm of [`divergence_identity_defect`] against `1e−8 (1 + |u|²_{H^{1,2}})`.
pub fn divergence_identity_residual(u: &Field) -> Result<Certificate> {
    let defect = lp_norm(&divergence_identity_defect(u)?, f64::INFINITY)?.value;
    let tol = 1e-8 * (1.0 + h1_sq(u)?);
    Ok(Certificate::new("divergence-identity", defect, 0.0, tol))
}

/// Residual certificate with `Δt`-halving calibration.
///
/// `residuals` evaluates the per-time residuals of a trajectory. It is run on
/// the full trajectory and on every other snapshot; a second-order residual
/// shrinks by ≈ 4 and the certificate passes when the observed factor is at
/// least 3, i.e. `fine ≤ coarse / 3`, or when `fine` is below `floor`.
fn halving_certificate<R>(name: &str, traj: &Trajectory, floor: f64, residuals: R) -> Result<Certificate>
where
    R: Fn(&Trajectory) -> Result<Vec<(f64, f64)>>,
{
    if traj.len() < 5 {
        return Err(invalid(
            "Δt-halving calibration needs at least 5 snapshots (3 after subsampling)",
        ));
    }
    let fine = residuals(traj)?;
    let coarse = residuals(&traj.subsample(2)?)?;
    let max = |v: &[(f64, f64)]| v.iter().map(|r| r.1).fold(0.0, f64::max);
    let (rf, rc) = (max(&fine), max(&coarse));
    let tol = (rc / 3.0).max(floor);
    let rows = fine
        .iter()
        .map(|&(t, r)| CertificateRow::new(t, r, 0.0, tol))
        .collect();
    let ratio = if rf > 0.0 { rc / rf } else { f64::INFINITY };
    Ok(Certificate::from_rows(name, rows)
        .with_metric("residual_fine", rf)
        .with_metric("residual_coarse", rc)
        .with_metric("halving_ratio", ratio)
        .with_metric("floor", floor)
        .with_metric("dt", traj.dt()))
}

fn require_velocity(traj: &Trajectory, f: &Force) -> Result<()> {
    let d = traj.grid().dim();
    if traj.num_components() != d {
        return Err(invalid("expected a velocity trajectory"));
    }
    f.check_compatible(traj.grid(), d)
}

fn div_force(f: &Force, t: f64) -> Result<Option<Field>> {
    f.at(t).map(|ft| divergence(&ft)).transpose()
}

/// `max_k |∂_t r + (u·∇)r − νΔr + |∇u|² − |curl u|² − div f|_2` over interior
/// times, `r = div u`, `∂_t` by central differences.
pub fn divergence_evolution_residual(traj: &Trajectory, f: &Force) -> Result<Certificate> {
    require_velocity(traj, f)?;
    let residuals = |tr: &Trajectory| -> Result<Vec<(f64, f64)>> {
        let r: Vec<Field> = tr.snapshots().iter().map(divergence).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for k in 1..tr.len() - 1 {
            let u = tr.snapshot(k);
            let rt = r[k + 1].lincomb(0.5 / tr.dt(), -0.5 / tr.dt(), &r[k - 1])?;
            let mut e = rt
                .add(&advect(u, &r[k])?)?
                .sub(&laplacian(&r[k])?.scaled(tr.nu()))?
                .add(&gradient_norm_sq(u)?)?
                .sub(&curl_norm_sq(u)?)?;
            if let Some(df) = div_force(f, tr.time(k))? {
                e = e.sub(&df)?;
            }
            out.push((tr.time(k), lp_norm(&e, 2.0)?.value));
        }
        Ok(out)
    };
    let scale = traj
        .snapshots()
        .iter()
        .map(h1_sq)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    halving_certificate("divergence-evolution", traj, 1e-10 * (1.0 + scale), residuals)
}

/// Per-snapshot terms of the componentwise balance
/// `d/dt Σ∫|u^i|^p + νp(p−1) Σ∫|u^i|^{p−2}|∇u^i|² = Σ∫|u^i|^p div u + p Σ∫ f^i |u^i|^{p−2} u^i`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyTerms {
    pub energy: f64,
    /// `Σ∫|u^i|^{p−2}|∇u^i|²` (without the `νp(p−1)` factor).
    pub dissipation: f64,
    pub stretching: f64,
    pub forcing: f64,
}

pub fn energy_terms(u: &Field, f: Option<&Field>, p: f64) -> Result<EnergyTerms> {
    let grid = u.grid();
    let d = grid.dim();
    let jac = gradient(u)?;
    let div = divergence(u)?;
    let dv = grid.cell_volume();
    let mut t = EnergyTerms::default();
    for i in 0..u.num_components() {
        let ui = u.component(i);
        for idx in 0..grid.len() {
            let a = ui[idx].abs();
            let pw = a.powf(p);
            let grad_sq: f64 = (0..d).map(|j| jac.component(i * d + j)[idx].powi(2)).sum();
            t.energy += pw;
            if p == 2.0 {
                t.dissipation += grad_sq;
            } else if a > 0.0 {
                t.dissipation += a.powf(p - 2.0) * grad_sq;
            }
            t.stretching += pw * div.component(0)[idx];
            if let Some(f) = f {
                if a > 0.0 {
                    t.forcing += p * f.component(i)[idx] * ui[idx] * a.powf(p - 2.0);
                }
            }
        }
    }
    t.energy *= dv;
    t.dissipation *= dv;
    t.stretching *= dv;
    t.forcing *= dv;
    Ok(t)
}

fn require_even(p: f64) -> Result<()> {
    if !(p >= 2.0 && p.fract() == 0.0 && (p as u64).is_multiple_of(2)) {
        return Err(invalid(format!(
            "energy identity needs an even integer p ≥ 2 (got {p}); use p = 2, 4, 6, …"
        )));
    }
    Ok(())
}

/// Largest central-difference residual of the componentwise `L^p` balance,
/// calibrated by `Δt` halving. `p` must be an even integer.
pub fn energy_identity_residual(traj: &Trajectory, f: &Force, p: f64) -> Result<Certificate> {
    require_even(p)?;
    require_velocity(traj, f)?;
    let nu = traj.nu();
    let terms = traj
        .snapshots()
        .iter()
        .enumerate()
        .map(|(k, u)| energy_terms(u, f.at(traj.time(k)).as_deref(), p))
        .collect::<Result<Vec<_>>>()?;
    let weight = nu * p * (p - 1.0);
    let scale = terms
        .iter()
        .map(|t| t.energy + weight * t.dissipation + t.stretching.abs() + t.forcing.abs())
        .fold(0.0, f64::max);
    let residuals = |tr: &Trajectory| -> Result<Vec<(f64, f64)>> {
        let stride = (tr.dt() / traj.dt()).round() as usize;
        let e: Vec<&EnergyTerms> = terms.iter().step_by(stride).take(tr.len()).collect();
        Ok((1..tr.len() - 1)
            .map(|k| {
                let dedt = (e[k + 1].energy - e[k - 1].energy) / (2.0 * tr.dt());
                let r = dedt + weight * e[k].dissipation - e[k].stretching - e[k].forcing;
                (tr.time(k), r.abs())
            })
            .collect())
    };
    let name = format!("energy-identity-p{p}");
    Ok(halving_certificate(&name, traj, 1e-12 * scale, residuals)?.with_metric("p", p))
}

/// Evaluates `K` on the window `[t0, T]`; `t0` is snapped to the nearest grid time.
pub fn compute_k(traj: &Trajectory, f: &Force, p: f64, t0: f64) -> Result<BkmReport> {
    require_velocity(traj, f)?;
    let k0 = traj.index_of(t0);
    let m = divergence(traj.snapshot(k0))?
        .component(0)
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut omega = 0.0f64;
    let mut divf = 0.0f64;
    for k in k0..traj.len() {
        omega = omega.max(lp_norm(&curl(traj.snapshot(k))?, f64::INFINITY)?.value);
        if let Some(df) = div_force(f, traj.time(k))? {
            divf = divf.max(lp_norm(&df, f64::INFINITY)?.value);
        }
    }
    Ok(BkmReport::assemble(p, traj.time(k0), m, omega, divf))
}

/// `y_k = y_0 e^{∫_0^{t_k} β} + ∫_0^{t_k} F(s) e^{∫_s^{t_k} β} ds`, both integrals
/// by the trapezoid rule on the sample grid.
pub fn exponential_envelope(y0: f64, rate: &[f64], forcing: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(rate.len());
    let mut growth = 0.0;
    let mut acc = 0.0;
    out.push(y0);
    for k in 1..rate.len() {
        let step = 0.5 * dt * (rate[k - 1] + rate[k]);
        growth += step;
        let g = step.exp();
        acc = g * acc + 0.5 * dt * (forcing[k - 1] * g + forcing[k]);
        out.push(y0 * growth.exp() + acc);
    }
    out
}

/// Checks the energy inequality on `[t0, T]` with the report's `K`:
/// for `K ≥ 0`, `Σ∫|u^i|^p + νp(p−1)∫_{t0}^t D ≤ E(t0) e^{K(t−t0)} + ∫_{t0}^t Σ∫|f^i|^p e^{K(t−s)}`;
/// for `K < 0` the dissipation term is dropped. Tolerance `1e−6 · RHS`.
pub fn energy_inequality_certificate(traj: &Trajectory, f: &Force, report: &BkmReport) -> Result<Certificate> {
    require_velocity(traj, f)?;
    let p = report.p;
    if !(p >= 2.0) {
        return Err(invalid(format!("energy inequality needs p ≥ 2 (got {p})")));
    }
    let k0 = traj.index_of(report.t0);
    let n = traj.len() - k0;
    let mut energy = Vec::with_capacity(n);
    let mut diss = Vec::with_capacity(n);
    let mut fpow = Vec::with_capacity(n);
    for k in k0..traj.len() {
        let t = traj.time(k);
        let terms = energy_terms(traj.snapshot(k), None, p)?;
        energy.push(terms.energy);
        diss.push(terms.dissipation);
        fpow.push(match f.at(t) {
            Some(ft) => componentwise_lp_power(&ft, p)?,
            None => 0.0,
        });
    }
    let dt = traj.dt();
    let rhs = exponential_envelope(energy[0], &vec![report.k; n], &fpow, dt);
    let weight = if report.k >= 0.0 {
        traj.nu() * p * (p - 1.0)
    } else {
        0.0
    };
    let mut dissipated = 0.0;
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        if j > 0 {
            dissipated += 0.5 * dt * (diss[j - 1] + diss[j]);
        }
        let lhs = energy[j] + weight * dissipated;
        rows.push(CertificateRow::new(traj.time(k0 + j), lhs, rhs[j], 1e-6 * rhs[j]));
    }
    Ok(Certificate::from_rows(format!("energy-inequality-p{p}"), rows)
        .with_metric("K", report.k)
        .with_metric("t0", report.t0)
        .with_note(PERIODIC_NOTE))
}

/// Discrete Gronwall check: `u_k ≤ u_0 exp(Σ trapezoid β)` at every sample.
///
/// The forward-difference hypothesis `(u_{k+1} − u_k)/Δt ≤ β_k u_k` is
/// reported as the metric `hypothesis_excess` (its largest violation) but does
/// not decide the verdict.
pub fn gronwall_bound(u: &[f64], beta: &[f64], dt: f64) -> Result<Certificate> {
    if u.len() != beta.len() {
        return Err(invalid(format!(
            "length mismatch: {} samples of u, {} of β",
            u.len(),
            beta.len()
        )));
    }
    if u.is_empty() || !(dt > 0.0) {
        return Err(invalid("need samples and dt > 0"));
    }
    let bound = exponential_envelope(u[0], beta, &vec![0.0; u.len()], dt);
    let rows = u
        .iter()
        .zip(&bound)
        .enumerate()
        .map(|(k, (&uk, &bk))| {
            CertificateRow::new(k as f64 * dt, uk, bk, 1e-10 * bk.abs().max(uk.abs()))
        })
        .collect();
    let excess = u
        .windows(2)
        .zip(beta)
        .map(|(w, b)| (w[1] - w[0]) / dt - b * w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Certificate::from_rows("gronwall", rows).with_metric("hypothesis_excess", excess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gradient_of, random_band_limited};
    use crate::grid::TorusGrid;
    use crate::ifrk4::{heat_flow, if_rk4_solve};

    #[test]
    fn identity_on_gradient_and_random_fields() {
        for d in 1..=3 {
            let g = TorusGrid::new(d, 16).unwrap();
            let u = random_band_limited(&g, d, 3, 1.0, d as u64);
            assert!(divergence_identity_residual(&u).unwrap().pass);
            let grad = gradient_of(&g, "mixed").unwrap();
            assert!(divergence_identity_residual(&grad).unwrap().pass);
        }
    }

    #[test]
    fn k_is_the_stated_sum() {
        let r = BkmReport::assemble(4.0, 0.0, 1.0, 2.0, 0.5);
        assert_eq!(r.k, 7.5);
        let g = TorusGrid::new(2, 8).unwrap();
        let zero = Trajectory::new(1.0, 0.1, vec![Field::zeros(&g, 2); 4]).unwrap();
        let rep = compute_k(&zero, &Force::Zero, 4.0, 0.1).unwrap();
        assert_eq!(rep.k, 4.0);
        assert_eq!(rep.t0, 0.1);
    }

    #[test]
    fn zero_trajectory_certificates() {
        let g = TorusGrid::new(1, 16).unwrap();
        let zero = Trajectory::new(0.3, 0.1, vec![Field::zeros(&g, 1); 9]).unwrap();
        for p in [2.0, 4.0] {
            let c = energy_identity_residual(&zero, &Force::Zero, p).unwrap();
            assert!(c.pass && c.lhs == 0.0);
        }
        let c = divergence_evolution_residual(&zero, &Force::Zero).unwrap();
        assert!(c.pass && c.lhs == 0.0);
        let rep = compute_k(&zero, &Force::Zero, 4.0, 0.1).unwrap();
        let c = energy_inequality_certificate(&zero, &Force::Zero, &rep).unwrap();
        assert!(c.pass && c.lhs == 0.0 && c.rhs == 0.0);
    }

    #[test]
    fn odd_p_rejected() {
        let g = TorusGrid::new(1, 8).unwrap();
        let zero = Trajectory::new(0.3, 0.1, vec![Field::zeros(&g, 1); 9]).unwrap();
        for p in [3.0, 2.5, 0.0] {
            assert!(energy_identity_residual(&zero, &Force::Zero, p).is_err());
        }
    }

    #[test]
    fn heat_flow_energy_balance() {
        let g = TorusGrid::new(1, 32).unwrap();
        let u0 = Field::scalar_from_fn(&g, |x| x[0].sin());
        let traj = heat_flow(&u0, 0.1, 0.2, 400).unwrap();
        let c = energy_identity_residual(&traj, &Force::Zero, 2.0).unwrap();
        assert!(c.lhs < 1e-8, "{c}");
        let ratio = c.metric("halving_ratio").unwrap();
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
        let rep = compute_k(&traj, &Force::Zero, 4.0, 0.0).unwrap();
        assert_eq!(rep.k, 4.0 + rep.m);
        let ineq = energy_inequality_certificate(&traj, &Force::Zero, &rep).unwrap();
        assert!(ineq.pass);
        assert!(ineq.rows.iter().skip(1).all(|r| r.lhs < r.rhs));
    }

    #[test]
    fn forced_run_balance_is_second_order() {
        let g = TorusGrid::new(2, 32).unwrap();
        let u0 = random_band_limited(&g, 2, 2, 0.5, 7);
        let f = Force::Steady(random_band_limited(&g, 2, 2, 0.3, 8));
        let traj = if_rk4_solve(&u0, &f, 0.2, 0.4, 80).unwrap();
        for p in [2.0, 4.0] {
            let c = energy_identity_residual(&traj, &f, p).unwrap();
            let ratio = c.metric("halving_ratio").unwrap();
            assert!((3.0..=5.0).contains(&ratio), "p={p} ratio={ratio} {:?}", c.metrics);
        }
        let c = divergence_evolution_residual(&traj, &f).unwrap();
        let ratio = c.metric("halving_ratio").unwrap();
        assert!((3.0..=5.0).contains(&ratio), "ratio={ratio}");
    }

    #[test]
    fn gronwall_cases() {
        let dt = 0.01;
        let t: Vec<f64> = (0..101).map(|k| k as f64 * dt).collect();
        let grow: Vec<f64> = t.iter().map(|s| (2.0 * s).exp()).collect();
        let c = gronwall_bound(&grow, &vec![2.0; 101], dt).unwrap();
        assert!(c.pass);
        assert!(c.rows.iter().all(|r| (r.lhs - r.rhs).abs() <= 1e-10 * r.rhs));
        let decay: Vec<f64> = t.iter().map(|s| (-s).exp()).collect();
        assert!(gronwall_bound(&decay, &vec![-1.0; 101], dt).unwrap().pass);
        let fast: Vec<f64> = t.iter().map(|s| (3.0 * s).exp()).collect();
        let c = gronwall_bound(&fast, &vec![2.0; 101], dt).unwrap();
        assert!(!c.pass);
        assert!(c.metric("hypothesis_excess").unwrap() > 0.0);
        assert!(gronwall_bound(&fast, &[1.0], dt).is_err());
    }

    #[test]
    fn envelope_matches_closed_form() {
        // y' = K y + c with y(0) = 1: y = e^{Kt} + c (e^{Kt} − 1)/K
        let (k, c, dt) = (1.5, 0.7, 1e-3);
        let n = 1001;
        let y = exponential_envelope(1.0, &vec![k; n], &vec![c; n], dt);
        let t = (n - 1) as f64 * dt;
        let exact = (k * t).exp() + c * ((k * t).exp() - 1.0) / k;
        assert!((y[n - 1] - exact).abs() < 1e-6 * exact);
    }
}
