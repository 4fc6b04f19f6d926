//! The built-in experiments. Each one turns a validated config into artifacts.

use burgerlab_core::bkm::divergence_identity_residual;
use burgerlab_core::kpz::solve_hj_with;
use burgerlab_core::norms::componentwise_lp_power;
use burgerlab_core::oracle::BurgersSine;
use burgerlab_core::semigroup::{measure_smoothing_rate_auto, SMOOTH_FLAG};
use burgerlab_core::*;

use crate::config::{ExperimentConfig, SolverChoice};
use crate::error::{CliError, Result};
use crate::output::{num, opt, Artifacts, Table};
use crate::spec::FieldSpec;

/// Largest number of rows in a per-time table.
const MAX_ROWS: usize = 200;

fn renamed(mut c: Certificate, name: impl Into<String>) -> Certificate {
    c.name = name.into();
    c
}

fn rel_l2(a: &Field, b: &Field) -> Result<f64> {
    let diff = lp_norm(&a.sub(b)?, 2.0)?.value;
    let base = lp_norm(b, 2.0)?.value;
    Ok(if base == 0.0 { diff } else { diff / base })
}

fn table_stride(len: usize) -> usize {
    len.div_ceil(MAX_ROWS).max(1)
}

struct Inputs {
    u0: Field,
    force: Force,
}

fn inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    let grid = cfg.grid().map_err(|e| CliError::Config(vec![e]))?;
    let comps = cfg.components();
    Ok(Inputs {
        u0: cfg.initial.build(&grid, comps)?,
        force: cfg.force.build_force(&grid, comps)?,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let input = inputs(cfg)?;
    let mut art = Artifacts::default();
    match cfg.experiment.as_str() {
        "semigroup-rates" => semigroup_rates(cfg, &input, &mut art)?,
        "picard-vs-ifrk4" => picard_vs_ifrk4(cfg, &input, &mut art)?,
        "colehopf-1d" => colehopf_1d(cfg, &input, &mut art)?,
        "fk-validate" => fk_validate(cfg, &input, &mut art)?,
        "bkm-certify" => bkm_certify(cfg, &input, &mut art)?,
        "kpz-sweep" => kpz_sweep(cfg, &input, &mut art)?,
        other => unreachable!("validated experiment {other}"),
    }
    Ok(art)
}

fn semigroup_rates(cfg: &ExperimentConfig, input: &Inputs, art: &mut Artifacts) -> Result<()> {
    let spec = cfg.semigroup.as_ref().expect("validated");
    let mut table = Table::new(&["m", "p", "q", "t", "norm", "weighted_norm"]);
    let mut reports = Vec::new();
    for &(m, p, q) in &spec.triples {
        let tag = format!("m{m}-p{p}-q{q}");
        let r = measure_smoothing_rate_auto(&input.u0, m, p, q)?;
        for s in &r.samples {
            table.push(vec![m.to_string(), num(p), num(q), num(s.t), num(s.norm), num(s.weighted_norm)]);
        }
        let dev = (r.measured_slope - r.predicted_slope).abs();
        let mut c = Certificate::new(format!("slope-{tag}"), dev, 0.0, spec.slope_tol)
            .with_metric("measured_slope", r.measured_slope)
            .with_metric("predicted_slope", r.predicted_slope)
            .with_metric("r_squared", r.r_squared)
            .with_metric("t_lo", r.t_range.0)
            .with_metric("t_hi", r.t_range.1);
        if r.flags.iter().any(|f| f == SMOOTH_FLAG) {
            c = c.with_note(SMOOTH_FLAG);
        }
        art.certificates.push(c);
        let vl = check_vanishing_limit(&input.u0, ExponentTriple::Lebesgue { m, p, q })?;
        art.certificates.push(renamed(vl, format!("vanishing-limit-{tag}")));
        reports.push(r);
    }
    art.tables.push(("rates".into(), table));
    art.report("rates", &reports)
}

/// Picard run plus its contraction certificate.
fn picard(cfg: &ExperimentConfig, input: &Inputs, art: &mut Artifacts) -> Result<Trajectory> {
    let (traj, report) = picard_solve(&input.u0, &input.force, &cfg.picard_config())?;
    let d = &report.iterate_distances;
    let mut c = Certificate::new("contraction", report.estimated_ratio, 1.0, 0.0)
        .with_metric("T_0", report.t0)
        .with_metric("iterations", d.len() as f64)
        .with_metric("alpha_bound", report.alpha_bound)
        .with_metric("beta_bound", report.beta_bound);
    if !report.iterates_in_ball {
        c = c.with_note("iterates left the ball M(alpha, beta, T)");
    }
    if !report.converged {
        c = c.fail("Picard iteration did not reach its tolerance");
    }
    if report.t0 < cfg.t_end {
        art.notes.push(format!(
            "Picard horizon reduced from {} to T_0 = {}",
            cfg.t_end, report.t0
        ));
    }
    art.certificates.push(c);
    let mut table = Table::new(&["iteration", "distance"]);
    for (k, v) in d.iter().enumerate() {
        table.push(vec![(k + 1).to_string(), num(*v)]);
    }
    art.tables.push(("iterates".into(), table));
    art.report("contraction", &report)?;
    Ok(traj)
}

/// `max_k` relative L² gap between two trajectories on the same time grid.
fn agreement(a: &Trajectory, b: &Trajectory, tol: f64, table: Option<&mut Table>) -> Result<Certificate> {
    let len = a.len().min(b.len());
    let mut rows = Vec::new();
    let mut gaps = Vec::with_capacity(len);
    for k in 0..len {
        let gap = rel_l2(a.snapshot(k), b.snapshot(k))?;
        gaps.push(gap);
        rows.push(CertificateRow::new(a.time(k), gap, 0.0, tol));
    }
    if let Some(t) = table {
        for k in (0..len).step_by(table_stride(len)) {
            t.push(vec![
                num(a.time(k)),
                num(lp_norm(a.snapshot(k), 2.0)?.value),
                num(lp_norm(b.snapshot(k), 2.0)?.value),
                num(gaps[k]),
            ]);
        }
    }
    let mut c = Certificate::from_rows("solver-agreement", rows);
    c.rows.clear();
    Ok(c)
}

fn picard_vs_ifrk4(cfg: &ExperimentConfig, input: &Inputs, art: &mut Artifacts) -> Result<()> {
    let pic = picard(cfg, input, art)?;
    // same horizon and step count as the certified Picard run
    let rk = if_rk4_solve(&input.u0, &input.force, cfg.nu, pic.end_time(), cfg.steps)?;
    let mut table = Table::new(&["t", "picard_l2", "ifrk4_l2", "rel_diff"]);
    art.certificates
        .push(agreement(&pic, &rk, cfg.checks.agreement_tol, Some(&mut table))?);
    art.tables.push(("solvers".into(), table));
    art.trajectories.push(("picard".into(), pic));
    art.trajectories.push(("ifrk4".into(), rk));
    Ok(())
}

fn colehopf_1d(cfg: &ExperimentConfig, input: &Inputs, art: &mut Artifacts) -> Result<()> {
    let FieldSpec::NegSine { amp, mode } = cfg.initial else {
        unreachable!("validated");
    };
    let oracle = BurgersSine::new(cfg.nu, amp, mode)?;
    let grid = input.u0.grid();
    let mut runs = Vec::new();
    if matches!(cfg.solver, SolverChoice::Picard | SolverChoice::Both) {
        runs.push(("picard", picard(cfg, input, art)?));
    }
    if matches!(cfg.solver, SolverChoice::Ifrk4 | SolverChoice::Both) {
        let t_end = runs.first().map_or(cfg.t_end, |(_, t)| t.end_time());
        runs.push(("ifrk4", if_rk4_solve(&input.u0, &Force::Zero, cfg.nu, t_end, cfg.steps)?));
    }
    let len = runs[0].1.len();
    let stride = table_stride(len);
    let mut header = vec!["t"];
    header.extend(runs.iter().map(|(name, _)| match *name {
        "picard" => "picard_rel_l2",
        _ => "ifrk4_rel_l2",
    }));
    let mut table = Table::new(&header);
    let mut worst = vec![0.0f64; runs.len()];
    let mut sampled: Vec<usize> = (0..len).step_by(stride).collect();
    if sampled.last() != Some(&(len - 1)) {
        sampled.push(len - 1);
    }
    for &k in &sampled {
        let t = runs[0].1.time(k);
        let exact = oracle.field(grid, t)?;
        let mut row = vec![num(t)];
        for (j, (_, traj)) in runs.iter().enumerate() {
            let e = rel_l2(traj.snapshot(k), &exact)?;
            worst[j] = worst[j].max(e);
            row.push(num(e));
        }
        table.push(row);
    }
    for ((name, _), w) in runs.iter().zip(&worst) {
        art.certificates.push(
            Certificate::new(format!("oracle-error-{name}"), *w, 0.0, cfg.checks.oracle_tol)
                .with_metric("samples", sampled.len() as f64),
        );
    }
    if runs.len() == 2 {
        art.certificates
            .push(agreement(&runs[0].1, &runs[1].1, cfg.checks.agreement_tol, None)?);
    }
    art.tables.push(("error_vs_oracle".into(), table));
    for (name, traj) in runs {
        art.trajectories.push((name.into(), traj));
    }
    Ok(())
}

/// The trajectory the diagnostics run on: IF-RK4 unless Picard alone is requested.
fn primary(cfg: &ExperimentConfig, input: &Inputs, art: &mut Artifacts) -> Result<Trajectory> {
    if cfg.solver == SolverChoice::Picard {
        picard(cfg, input, art)
    } else {
        Ok(if_rk4_solve(&input.u0, &input.force, cfg.nu, cfg.t_end, cfg.steps)?)
    }
}

/// Query points spread over the torus (golden-ratio offsets between axes).
fn query_points(dim: usize, length: f64, count: usize) -> Vec<Vec<f64>> {
    const SHIFT: f64 = 0.381_966_011_250_105;
    (0..count)
        .map(|j| {
            (0..dim)
                .map(|a| length * ((j as f64 + 0.5) / count as f64 + a as f64 * SHIFT).fract())
                .collect()
        })
        .collect()
}

fn fk_validate(cfg: &ExperimentConfig, input: &Inputs, art: &mut Artifacts) -> Result<()> {
    let traj = primary(cfg, input, art)?;
    let mut flow = cfg.flow_config().expect("validated");
    flow.horizon = traj.end_time();
    flow.validate()?;
    let grid = traj.grid();
    let points = query_points(grid.dim(), grid.length(), cfg.mc.as_ref().map_or(16, |m| m.points));
    let mut header = vec!["point".to_string(), "component".to_string()];
    header.extend((0..grid.dim()).map(|a| format!("x{a}")));
    header.extend(["mc", "std_error", "spectral", "abs_error", "tolerance"].map(String::from));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut rows = Vec::new();
    for (j, x) in points.iter().enumerate() {
        let est = feynman_kac_estimate(&traj, &input.force, x, &flow)?;
        let spectral = eval_at(traj.last(), x, Interpolation::Spectral).value;
        for a in 0..est.value.len() {
            let err = (est.value[a] - spectral[a]).abs();
            let tol = (3.0 * est.std_error[a]).max(2e-2);
            rows.push(CertificateRow::new(j as f64, err, 0.0, tol));
            let mut row = vec![j.to_string(), a.to_string()];
            row.extend(x.iter().map(|v| num(*v)));
            row.extend([est.value[a], est.std_error[a], spectral[a], err, tol].map(num));
            table.push(row);
        }
    }
    art.certificates.push(
        Certificate::from_rows("feynman-kac-agreement", rows)
            .with_metric("n_paths", flow.n_paths as f64)
            .with_metric("delta", flow.delta)
            .with_metric("dt", flow.effective_dt())
            .with_note("rows indexed by query point"),
    );
    art.certificates
        .push(linfty_certificate(&traj, &input.force, flow.delta)?);
    art.tables.push(("feynman_kac".into(), table));
    art.report("flow", &flow)?;
    art.trajectories.push(("trajectory".into(), traj));
    Ok(())
}

fn bkm_certify(cfg: &ExperimentConfig, input: &Inputs, art: &mut Artifacts) -> Result<()> {
    let traj = primary(cfg, input, art)?;
    let f = &input.force;
    let p = cfg.p;
    art.certificates.push(renamed(
        divergence_identity_residual(traj.initial())?,
        "divergence-identity-initial",
    ));
    art.certificates.push(renamed(
        divergence_identity_residual(traj.last())?,
        "divergence-identity-final",
    ));
    art.certificates
        .push(divergence_evolution_residual(&traj, f)?);
    let even = p.fract() == 0.0 && (p as u64).is_multiple_of(2);
    art.certificates
        .push(energy_identity_residual(&traj, f, 2.0)?);
    if even && p != 2.0 {
        art.certificates.push(energy_identity_residual(&traj, f, p)?);
    } else if !even {
        art.notes
            .push(format!("energy identity checked for p = 2 only (p = {p} is not an even integer)"));
    }
    let report = compute_k(&traj, f, p, cfg.reference_time())?;
    art.certificates
        .push(energy_inequality_certificate(&traj, f, &report)?);
    art.certificates
        .push(linfty_certificate(&traj, f, 5.0 * traj.dt())?);
    let mut table = Table::new(&["t", "lp_norm", "energy", "curl_inf", "divergence_max", "h1_norm"]);
    let mut energy = Vec::with_capacity(traj.len());
    for (k, s) in traj.snapshots().iter().enumerate() {
        let e = componentwise_lp_power(s, p)?;
        energy.push(e);
        if k % table_stride(traj.len()) == 0 || k + 1 == traj.len() {
            let div_max = divergence(s)?
                .component(0)
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            table.push(vec![
                num(traj.time(k)),
                num(lp_norm(s, p)?.value),
                num(e),
                num(lp_norm(&curl(s)?, f64::INFINITY)?.value),
                num(div_max),
                num(sobolev_norm(s, 1.0, 2.0)?.value),
            ]);
        }
    }
    if f.is_zero() {
        let beta = vec![report.k; energy.len()];
        art.certificates
            .push(gronwall_bound(&energy, &beta, traj.dt())?);
    }
    let scan = blowup_scan(&traj, p, None)?;
    let peak = scan.sup_lp_per_time.iter().copied().fold(0.0, f64::max);
    let mut c = Certificate::new("blowup-scan", peak, scan.ceiling, 0.0);
    if let Some(t) = scan.t_max_estimate {
        c = c.fail(format!("t_max estimate {t}"));
    } else if f.is_zero() && !scan.nonincreasing_after_first_step(1e-12) {
        c = c.with_note("L^p norm increased after the first step");
    }
    art.certificates.push(c);
    art.tables.push(("timeseries".into(), table));
    art.report("bkm", &report)?;
    art.report("blowup", &scan)?;
    art.trajectories.push(("trajectory".into(), traj));
    Ok(())
}

fn kpz_sweep(cfg: &ExperimentConfig, input: &Inputs, art: &mut Artifacts) -> Result<()> {
    let spec = cfg.kpz.as_ref().expect("validated");
    let mut run = solve_hj_with(&input.u0, &input.force, cfg.nu, spec.lambda, cfg.t_end, cfg.steps)?;
    let link = gradient_link_check(&run)?;
    run.estimate_k(&link.burgers, cfg.p)?;
    art.certificates
        .push(link.certificate.clone().with_metric("curl_max", link.curl_max));
    art.certificates.push(apriori_estimate_check(&run, cfg.p)?);
    let sweep = viscous_limit_sweep(
        &input.u0,
        &input.force,
        &spec.nus,
        spec.lambda,
        cfg.t_end,
        cfg.steps,
        cfg.p,
    )?;
    let mut table = Table::new(&[
        "nu",
        "sup_norm",
        "h1p_norm",
        "sup_distance",
        "bound",
        "high_mode_fraction",
        "excluded",
    ]);
    for r in &sweep.rows {
        table.push(vec![
            num(r.nu),
            num(r.sup_norm),
            num(r.h1p_norm),
            opt(r.sup_distance),
            num(r.bound),
            num(r.high_mode_fraction),
            r.excluded.to_string(),
        ]);
    }
    art.certificates.push(sweep.certificate.clone());
    art.tables.push(("sweep".into(), table));
    art.report("k_estimate", &run.k_est)?;
    art.trajectories.push(("psi".into(), run.psi));
    art.trajectories.push(("burgers".into(), link.burgers));
    Ok(())
}
