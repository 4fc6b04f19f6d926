//! Lebesgue and Bessel-potential norms by uniform Riemann sums.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::ops::bessel_potential;

/// A computed norm together with the exponents that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// Lebesgue exponent; `f64::INFINITY` for the sup norm.
    pub p: f64,
    /// Sobolev order (0 for plain `L^p`).
    pub alpha: f64,
    pub value: f64,
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("Lebesgue exponent must be ≥ 1 (got {p})")));
    }
    Ok(())
}

/// `|u|_p = (h^d Σ_x (Σ_i |u^i(x)|²)^{p/2})^{1/p}`; for `p = ∞` the grid maximum
/// of the pointwise Euclidean magnitude.
pub fn lp_norm(field: &Field, p: f64) -> Result<NormReport> {
    check_exponent(p)?;
    field.ensure_finite()?;
    let grid = field.grid();
    let comps = field.components();
    let sq = |idx: usize| comps.iter().map(|c| c[idx] * c[idx]).sum::<f64>();
    let value = if p.is_infinite() {
        (0..grid.len()).map(sq).fold(0.0, f64::max).sqrt()
    } else {
        let sum: f64 = (0..grid.len()).map(|i| sq(i).powf(0.5 * p)).sum();
        (grid.cell_volume() * sum).powf(1.0 / p)
    };
    Ok(NormReport {
        p,
        alpha: 0.0,
        value,
    })
}

/// `|u|_{α,p} = |(I − Δ)^{α/2} u|_p`.
pub fn sobolev_norm(field: &Field, alpha: f64, p: f64) -> Result<NormReport> {
    check_exponent(p)?;
    let lifted = bessel_potential(field, alpha)?;
    let mut report = lp_norm(&lifted, p)?;
    report.alpha = alpha;
    Ok(report)
}

/// Componentwise `p`-th power `Σ_i ∫ |u^i|^p dx`, the functional that the
/// energy balance of each equation controls. Equal to `|u|_p^p` for `d = 1` or `p = 2`.
pub fn componentwise_lp_power(field: &Field, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Err(invalid("componentwise power needs a finite exponent"));
    }
    field.ensure_finite()?;
    let sum: f64 = field
        .components()
        .iter()
        .flatten()
        .map(|v| v.abs().powf(p))
        .sum();
    Ok(field.grid().cell_volume() * sum)
}
