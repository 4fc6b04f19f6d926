//! Viscous Hamilton–Jacobi equation `ψ_t + λ|∇ψ|² = νΔψ + h` and its link to
//! Burgers: `u = 2λ∇ψ` solves Burgers with force `f = 2λ∇h`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bkm::{compute_k, exponential_envelope, BkmReport};
use crate::certificate::{Certificate, CertificateRow};
use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::force::Force;
use crate::ifrk4::{add_force, if_rk4_solve, integrate, Spectra};
use crate::norms::{lp_norm, sobolev_norm};
use crate::ops::{gradient, gradient_norm_sq, truncate};
use crate::trajectory::Trajectory;

/// Largest spectral energy fraction (mean excluded) allowed outside the 2/3 band.
pub const RESOLUTION_LIMIT: f64 = 0.01;
/// Smallest viscosity accepted by the sweep.
pub const NU_FLOOR: f64 = 1e-3;

/// A solved Hamilton–Jacobi run.
#[derive(Clone, Debug)]
pub struct HjRun {
    pub psi: Trajectory,
    pub h: Force,
    pub nu: f64,
    pub lambda: f64,
    /// Growth constant taken from the linked Burgers run, once computed.
    pub k_est: Option<BkmReport>,
}

impl HjRun {
    pub fn grid(&self) -> &crate::grid::TorusGrid {
        self.psi.grid()
    }

    /// Burgers data `(2λ∇ψ0, 2λ∇h)`.
    pub fn burgers_data(&self) -> Result<(Field, Force)> {
        let u0 = gradient(self.psi.initial())?.scaled(2.0 * self.lambda);
        Ok((u0, lift_force(&self.h, 2.0 * self.lambda)?))
    }

    /// Solves the linked Burgers problem on the same grid and time grid.
    pub fn linked_burgers(&self) -> Result<Trajectory> {
        let (u0, f) = self.burgers_data()?;
        let steps = self.psi.len() - 1;
        if_rk4_solve(&u0, &f, self.nu, self.psi.end_time(), steps.max(1))
    }

    /// Stores `K` from the linked Burgers run (reference time 0).
    pub fn estimate_k(&mut self, burgers: &Trajectory, p: f64) -> Result<&BkmReport> {
        let (_, f) = self.burgers_data()?;
        let report = compute_k(burgers, &f, p, 0.0)?;
        Ok(self.k_est.insert(report))
    }
}

/// `scale · ∇h` for every form of a scalar force.
fn lift_force(h: &Force, scale: f64) -> Result<Force> {
    Ok(match h {
        Force::Zero => Force::Zero,
        Force::Steady(f) => Force::Steady(gradient(f)?.scaled(scale)),
        Force::Sampled { t0, dt, fields } => Force::Sampled {
            t0: *t0,
            dt: *dt,
            fields: fields
                .iter()
                .map(|f| gradient(f).map(|g| g.scaled(scale)))
                .collect::<Result<_>>()?,
        },
    })
}

/// `ψ_t = νΔψ − |∇ψ|² + h` by integrating-factor RK4 (dealiased quadratic term).
pub fn solve_hj(psi0: &Field, h: &Force, nu: f64, t_end: f64, steps: usize) -> Result<HjRun> {
    solve_hj_with(psi0, h, nu, 1.0, t_end, steps)
}

/// As [`solve_hj`] with coupling `λ` in front of `|∇ψ|²`.
pub fn solve_hj_with(
    psi0: &Field,
    h: &Force,
    nu: f64,
    lambda: f64,
    t_end: f64,
    steps: usize,
) -> Result<HjRun> {
    if psi0.num_components() != 1 {
        return Err(invalid("ψ must be a scalar field"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("coupling λ must be positive (got {lambda})")));
    }
    let grid = psi0.grid().clone();
    h.check_compatible(&grid, 1)?;
    let rhs = |v: &Spectra, t: f64| -> Spectra {
        let psi = Field::from_spectrum(&grid, v.clone());
        let sq = gradient_norm_sq(&psi).expect("finite stage");
        let mut out: Spectra = sq
            .spectrum()
            .iter()
            .map(|s| s.iter().map(|z| -lambda * z).collect())
            .collect();
        add_force(&mut out, h, t);
        out
    };
    let mut psi = integrate(psi0, nu, t_end, steps, rhs, "ifrk4-hj")?;
    psi.meta.notes.push(format!("lambda={lambda}"));
    Ok(HjRun {
        psi,
        h: h.clone(),
        nu,
        lambda,
        k_est: None,
    })
}

/// Outcome of [`gradient_link_check`].
#[derive(Clone, Debug)]
pub struct LinkReport {
    pub certificate: Certificate,
    pub burgers: Trajectory,
    /// `max_t |curl u(t)|_∞` of the Burgers run.
    pub curl_max: f64,
}

/// Compares `2λ∇ψ(t)` with an independent Burgers solve from `u0 = 2λ∇ψ0`,
/// `f = 2λ∇h`: residual `max_t |2λ∇ψ(t) − u(t)|_2`, tolerance `1e−6 (1 + |∇ψ0|_2)`.
pub fn gradient_link_check(run: &HjRun) -> Result<LinkReport> {
    let burgers = run.linked_burgers()?;
    if burgers.len() != run.psi.len() {
        return Err(Error::BlownUp(burgers.blown_up_at().unwrap_or(f64::NAN)));
    }
    let tol = 1e-6 * (1.0 + lp_norm(&gradient(run.psi.initial())?, 2.0)?.value);
    let mut rows = Vec::with_capacity(run.psi.len());
    let mut curl_max = 0.0f64;
    for k in 0..run.psi.len() {
        let lifted = gradient(run.psi.snapshot(k))?.scaled(2.0 * run.lambda);
        let u = burgers.snapshot(k);
        let diff = lp_norm(&lifted.sub(u)?, 2.0)?.value;
        rows.push(CertificateRow::new(run.psi.time(k), diff, 0.0, tol));
        curl_max = curl_max.max(lp_norm(&crate::ops::curl(u)?, f64::INFINITY)?.value);
    }
    let certificate = Certificate::from_rows("gradient-link", rows)
        .with_metric("lambda", run.lambda)
        .with_metric("curl_max", curl_max);
    Ok(LinkReport {
        certificate,
        burgers,
        curl_max,
    })
}

/// `|ψ(t)|^p_{1,p} ≤ |ψ0|^p_{1,p} e^{Kt} + ∫_0^t |h(s)|^p_{1,p} e^{K(t−s)} ds` on the
/// grid times, `K` from [`HjRun::estimate_k`]. Tolerance `1e−6 · RHS`.
pub fn apriori_estimate_check(run: &HjRun, p: f64) -> Result<Certificate> {
    let d = run.grid().dim() as f64;
    if !(p > d) {
        return Err(invalid(format!("the estimate needs p > d = {d} (got {p})")));
    }
    let report = run
        .k_est
        .as_ref()
        .ok_or_else(|| invalid("no growth constant: call HjRun::estimate_k first"))?;
    let psi = &run.psi;
    let lhs = psi
        .snapshots()
        .iter()
        .map(|s| sobolev_norm(s, 1.0, p).map(|r| r.value.powf(p)))
        .collect::<Result<Vec<_>>>()?;
    let hpow = psi
        .times()
        .iter()
        .map(|&t| match run.h.at(t) {
            Some(h) => sobolev_norm(&h, 1.0, p).map(|r| r.value.powf(p)),
            None => Ok(0.0),
        })
        .collect::<Result<Vec<_>>>()?;
    let rhs = exponential_envelope(lhs[0], &vec![report.k; psi.len()], &hpow, psi.dt());
    let rows = lhs
        .iter()
        .zip(&rhs)
        .enumerate()
        .map(|(k, (&l, &r))| CertificateRow::new(psi.time(k), l, r, 1e-6 * r))
        .collect();
    Ok(Certificate::from_rows(format!("apriori-estimate-p{p}"), rows)
        .with_metric("K", report.k)
        .with_metric("p", p))
}

/// Fraction of spectral energy (mean excluded) outside the 2/3 band.
pub fn high_mode_fraction(field: &Field) -> f64 {
    let keep = &field.grid().tables().keep;
    let (mut hi, mut total) = (0.0, 0.0);
    for s in field.spectrum() {
        for (idx, z) in s.iter().enumerate().skip(1) {
            let e = z.norm_sqr();
            total += e;
            if !keep[idx] {
                hi += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        hi / total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu: f64,
    pub sup_norm: f64,
    pub h1p_norm: f64,
    /// `max_t |ψ^ν(t) − ψ^{ν'}(t)|_∞` against the previous accepted ν.
    pub sup_distance: Option<f64>,
    /// Upper bound `RHS(T)` of the a priori estimate for this ν.
    pub bound: f64,
    pub high_mode_fraction: f64,
    pub excluded: bool,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub certificate: Certificate,
    pub runs: Vec<HjRun>,
}

/// Resolution fraction of the steepest snapshot.
fn worst_resolution(traj: &Trajectory) -> f64 {
    traj.snapshots()
        .iter()
        .map(high_mode_fraction)
        .fold(0.0, f64::max)
}

/// Runs [`solve_hj_with`] for each ν (strictly decreasing, ≥ [`NU_FLOOR`]) on a
/// shared time grid and checks (a) successive sup-distances decrease and
/// (b) `max_ν |ψ^ν(T)|^p_{1,p} ≤ min_ν RHS_ν(T)`. Runs with more than
/// [`RESOLUTION_LIMIT`] of their energy in the top third of the spectrum are excluded.
pub fn viscous_limit_sweep(
    psi0: &Field,
    h: &Force,
    nus: &[f64],
    lambda: f64,
    t_end: f64,
    steps: usize,
    p: f64,
) -> Result<SweepReport> {
    if nus.is_empty() {
        return Err(invalid("empty viscosity sequence"));
    }
    if nus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("viscosities must be strictly decreasing"));
    }
    if let Some(nu) = nus.iter().find(|&&nu| nu < NU_FLOOR) {
        return Err(invalid(format!(
            "viscosity {nu} is below the resolvable floor {NU_FLOOR}"
        )));
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut runs: Vec<HjRun> = Vec::new();
    let mut notes = Vec::new();
    for &nu in nus {
        let mut run = solve_hj_with(psi0, h, nu, lambda, t_end, steps)?;
        let frac = worst_resolution(&run.psi);
        let burgers = run.linked_burgers()?;
        run.estimate_k(&burgers, p)?;
        let bound = apriori_estimate_check(&run, p)?.rows.last().map_or(0.0, |r| r.rhs);
        let excluded = frac > RESOLUTION_LIMIT || run.psi.is_blown_up();
        if excluded {
            notes.push(format!("nu={nu} excluded: high-mode fraction {frac:.3e}"));
        }
        let last = run.psi.last();
        let sup_distance = match runs.iter().zip(&rows).rev().find(|(_, r)| !r.excluded) {
            Some((prev, _)) if !excluded => Some(sup_distance(&prev.psi, &run.psi)?),
            _ => None,
        };
        rows.push(SweepRow {
            nu,
            sup_norm: lp_norm(last, f64::INFINITY)?.value,
            h1p_norm: sobolev_norm(last, 1.0, p)?.value,
            sup_distance,
            bound,
            high_mode_fraction: frac,
            excluded,
        });
        runs.push(run);
    }
    let included: Vec<&SweepRow> = rows.iter().filter(|r| !r.excluded).collect();
    let dists: Vec<(f64, f64)> = included
        .iter()
        .filter_map(|r| r.sup_distance.map(|d| (r.nu, d)))
        .collect();
    let mut cert_rows: Vec<CertificateRow> = dists
        .windows(2)
        .map(|w| CertificateRow::new(w[1].0, w[1].1, w[0].1, 0.0))
        .collect();
    let uniform = included
        .iter()
        .map(|r| r.bound)
        .fold(f64::INFINITY, f64::min);
    for r in &included {
        let lhs = r.h1p_norm.powf(p);
        cert_rows.push(CertificateRow::new(r.nu, lhs, uniform, 1e-6 * uniform));
    }
    let mut certificate = Certificate::from_rows("viscous-limit", cert_rows)
        .with_metric("included_runs", included.len() as f64)
        .with_metric("uniform_bound", uniform);
    if let (Some(first), Some(last)) = (dists.first(), dists.last()) {
        certificate = certificate
            .with_metric("first_distance", first.1)
            .with_metric("last_distance", last.1);
    }
    for n in notes {
        certificate = certificate.with_note(n);
    }
    if included.len() < 2 {
        certificate = certificate.fail("fewer than two resolved runs");
    }
    Ok(SweepReport {
        rows,
        certificate,
        runs,
    })
}

/// `max_k |a_k − b_k|_∞` on a shared time grid.
pub fn sup_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let diff = a.difference(b)?;
    diff.snapshots()
        .iter()
        .map(|s| lp_norm(s, f64::INFINITY).map(|r| r.value))
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
}

/// `h = λ|∇ψ̄|² − νΔψ̄`, the force that keeps `ψ̄` steady.
pub fn steady_force(psi_bar: &Field, nu: f64, lambda: f64) -> Result<Field> {
    let grid = psi_bar.grid();
    let sq = gradient_norm_sq(psi_bar)?;
    let k2 = &grid.tables().k2;
    let mut spec: Vec<Complex64> = sq.spectrum()[0]
        .iter()
        .zip(&psi_bar.spectrum()[0])
        .zip(k2)
        .map(|((a, b), &k)| lambda * a + nu * k * b)
        .collect();
    truncate(grid, &mut spec);
    Ok(Field::from_spectrum(grid, vec![spec]))
}
