//! Empirical smoothing rates and vanishing limits of the heat semigroup `e^{tΔ}` (ν = 1).

use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateRow};
use crate::error::{invalid, Result};
use crate::field::Field;
use crate::norms::{lp_norm, sobolev_norm};
use crate::ops::{gradient, heat_semigroup_apply};

/// Flag raised when the datum has no energy near the grid cutoff.
pub const SMOOTH_FLAG: &str = "smooth datum: rate not sharp";

/// Exponents of a probed estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExponentTriple {
    /// `|∇^m e^{tΔ} h|_q` against `|h|_p`.
    Lebesgue { m: u32, p: f64, q: f64 },
    /// `|e^{tΔ} h|_{H^{β,p}}` against `|h|_{H^{α,p}}`.
    Sobolev { alpha: f64, beta: f64, p: f64 },
}

impl ExponentTriple {
    /// Weight exponent `γ` such that `t^γ · norm` stays bounded.
    pub fn gamma(&self, dim: usize) -> f64 {
        match *self {
            ExponentTriple::Lebesgue { m, p, q } => -predicted_slope(dim, m, p, q),
            ExponentTriple::Sobolev { alpha, beta, .. } => 0.5 * (beta - alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ExponentTriple::Lebesgue { m, p, q } => check_lebesgue(m, p, q),
            ExponentTriple::Sobolev { alpha, beta, p } => {
                if !(alpha < beta) || !(p > 1.0 && p.is_finite()) {
                    return Err(invalid(format!(
                        "Sobolev triple needs α < β and 1 < p < ∞ (got α={alpha}, β={beta}, p={p})"
                    )));
                }
                Ok(())
            }
        }
    }

    fn norm_at(&self, h: &Field, t: f64) -> Result<f64> {
        let s = heat_semigroup_apply(h, 1.0, t)?;
        match *self {
            ExponentTriple::Lebesgue { m, q, .. } => lebesgue_norm(&s, m, q),
            ExponentTriple::Sobolev { beta, p, .. } => Ok(sobolev_norm(&s, beta, p)?.value),
        }
    }
}

fn check_lebesgue(m: u32, p: f64, q: f64) -> Result<()> {
    if m > 1 {
        return Err(invalid(format!("derivative order must be 0 or 1 (got {m})")));
    }
    if !(p > 1.0 && p <= q && q.is_finite()) {
        return Err(invalid(format!("need 1 < p ≤ q < ∞ (got p={p}, q={q})")));
    }
    Ok(())
}

fn lebesgue_norm(s: &Field, m: u32, q: f64) -> Result<f64> {
    if m == 0 {
        Ok(lp_norm(s, q)?.value)
    } else {
        Ok(lp_norm(&gradient(s)?, q)?.value)
    }
}

/// `−(m/2 + d/(2r))` with `1/r = 1/p − 1/q`.
pub fn predicted_slope(dim: usize, m: u32, p: f64, q: f64) -> f64 {
    -(0.5 * m as f64 + 0.5 * dim as f64 * (1.0 / p - 1.0 / q))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    pub t: f64,
    pub norm: f64,
    pub weighted_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub dim: usize,
    pub m: u32,
    pub p: f64,
    pub q: f64,
    pub measured_slope: f64,
    pub predicted_slope: f64,
    pub r_squared: f64,
    pub t_range: (f64, f64),
    pub flags: Vec<String>,
    pub samples: Vec<RateSample>,
}

/// `count` log-spaced times from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

/// The probe window `[10 / k_max², 0.01]` of a grid datum.
pub fn auto_window(h: &Field) -> (f64, f64) {
    let k = h.grid().k_max();
    (10.0 / (k * k), 0.01)
}

/// Largest `|k|` carrying a coefficient above `1e−10` of the peak (0 for the zero field).
pub fn effective_wavenumber(h: &Field) -> f64 {
    let k2 = &h.grid().tables().k2;
    let peak = h
        .spectrum()
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    h.spectrum()
        .iter()
        .flat_map(|s| s.iter().zip(k2))
        .filter(|(z, _)| z.norm() > 1e-10 * peak)
        .map(|(_, &k)| k)
        .fold(0.0, f64::max)
        .sqrt()
}

/// Least-squares slope and `R²` of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Regresses `log |∇^m e^{tΔ} h|_q` on `log t` over `t_grid`.
pub fn measure_smoothing_rate(h: &Field, m: u32, p: f64, q: f64, t_grid: &[f64]) -> Result<RateReport> {
    check_lebesgue(m, p, q)?;
    if t_grid.len() < 4 {
        return Err(invalid(format!(
            "time grid needs at least 4 points (got {})",
            t_grid.len()
        )));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("time grid must be positive and strictly increasing"));
    }
    h.ensure_finite()?;
    let dim = h.grid().dim();
    let predicted = predicted_slope(dim, m, p, q);
    let triple = ExponentTriple::Lebesgue { m, p, q };
    let samples = t_grid
        .iter()
        .map(|&t| {
            let norm = triple.norm_at(h, t)?;
            Ok(RateSample {
                t,
                norm,
                weighted_norm: t.powf(-predicted) * norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t_range = (t_grid[0], t_grid[t_grid.len() - 1]);
    let mut flags = Vec::new();
    let k_eff = effective_wavenumber(h);
    let (slope, r2) = if samples.iter().any(|s| s.norm == 0.0) {
        flags.push("zero datum".to_string());
        (0.0, 1.0)
    } else {
        let x: Vec<f64> = samples.iter().map(|s| s.t.ln()).collect();
        let y: Vec<f64> = samples.iter().map(|s| s.norm.ln()).collect();
        linear_fit(&x, &y)
    };
    if k_eff > 0.0 && 10.0 / (k_eff * k_eff) > t_range.1 {
        flags.push(SMOOTH_FLAG.to_string());
    }
    Ok(RateReport {
        dim,
        m,
        p,
        q,
        measured_slope: slope,
        predicted_slope: predicted,
        r_squared: r2,
        t_range,
        flags,
        samples,
    })
}

/// [`measure_smoothing_rate`] over 16 log-spaced times in [`auto_window`].
pub fn measure_smoothing_rate_auto(h: &Field, m: u32, p: f64, q: f64) -> Result<RateReport> {
    let (lo, hi) = auto_window(h);
    measure_smoothing_rate(h, m, p, q, &log_spaced(lo, hi, 16))
}

/// Weighted quantity `t^γ · norm(e^{tΔ} h)` along a decade-spaced sequence
/// descending from `0.1 / k_max²`.
///
/// The sequence spans `ceil(2/γ)` decades (at least 6, at most 24), enough for
/// the weight alone to drop by two orders. Passes when every step is
/// nonincreasing and the last value is below 10 % of the first.
pub fn check_vanishing_limit(h: &Field, triple: ExponentTriple) -> Result<Certificate> {
    triple.validate()?;
    h.ensure_finite()?;
    let dim = h.grid().dim();
    let gamma = triple.gamma(dim);
    if !(gamma > 0.0) {
        return Err(invalid(format!(
            "weight exponent γ = {gamma} has no vanishing limit; choose m > 0 or q > p"
        )));
    }
    let k = h.grid().k_max();
    let start = 0.1 / (k * k);
    let decades = ((2.0 / gamma).ceil() as i32).clamp(6, 24);
    let mut values = Vec::new();
    for j in 0..=decades {
        let t = start * 10f64.powi(-j);
        values.push((t, t.powf(gamma) * triple.norm_at(h, t)?));
    }
    let rows = values
        .windows(2)
        .map(|w| CertificateRow::new(w[1].0, w[1].1, w[0].1, 0.0))
        .collect();
    let first = values[0].1;
    let last = values[values.len() - 1].1;
    let cert = Certificate::from_rows("vanishing-limit", rows)
        .with_metric("gamma", gamma)
        .with_metric("first", first)
        .with_metric("last", last);
    if last > 0.1 * first {
        return Ok(cert.fail("weighted norm did not fall below 10% of its initial value"));
    }
    Ok(cert)
}
