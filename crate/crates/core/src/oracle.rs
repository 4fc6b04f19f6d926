//! Closed-form Cole–Hopf solutions on the 1-torus, evaluated by direct
//! trigonometric sums (no FFT) so they can serve as independent references.
//!
//! With `φ_0(x) = e^{−β cos(mx)}` the heat flow is
//! `φ(t, x) = I_0(β) + 2 Σ_j (−1)^j I_j(β) e^{−ν j² m² t} cos(jmx)`.
//! All series are carried with the common factor `e^{−β}` removed.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::grid::TorusGrid;

/// `e^{−β} I_j(β)` for `j = 0, 1, …` until the terms fall below `1e−18 · I_0`.
///
/// Uses the periodic trapezoid rule on `I_j(β) = π^{-1} ∫_0^π e^{β cos θ} cos jθ dθ`,
/// which converges geometrically for this entire integrand.
pub fn scaled_bessel_i(beta: f64) -> Vec<f64> {
    let nodes = (4.0 * beta.abs()).ceil() as usize + 256;
    let samples: Vec<(f64, f64)> = (0..nodes)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / nodes as f64;
            (theta, (beta * (theta.cos() - 1.0)).exp())
        })
        .collect();
    let coeff = |j: usize| {
        samples
            .iter()
            .map(|(theta, w)| w * (j as f64 * theta).cos())
            .sum::<f64>()
            / nodes as f64
    };
    let i0 = coeff(0);
    let mut out = vec![i0];
    for j in 1..nodes / 2 {
        let c = coeff(j);
        if c.abs() < 1e-18 * i0 {
            break;
        }
        out.push(c);
    }
    out
}

/// Above this `β` positive times are evaluated with the heat kernel.
const KERNEL_BETA: f64 = 4.0;

/// Heat flow of `e^{−β cos(mx)}` with viscosity `ν`.
#[derive(Clone, Debug)]
struct HeatSeries {
    nu: f64,
    mode: f64,
    beta: f64,
    coeffs: Vec<f64>,
}

impl HeatSeries {
    fn new(nu: f64, mode: u32, beta: f64) -> Result<Self> {
        if !(nu > 0.0) || mode == 0 {
            return Err(invalid("Cole–Hopf series needs ν > 0 and mode ≥ 1"));
        }
        Ok(Self {
            nu,
            mode: mode as f64,
            beta,
            coeffs: scaled_bessel_i(beta),
        })
    }

    /// `(log φ, φ_x / φ)` at `(t, x)`.
    ///
    /// For large `β` the series cancels catastrophically where `φ` is tiny, so
    /// positive times use the periodized heat kernel in log-sum-exp form instead.
    fn eval(&self, t: f64, x: f64) -> (f64, f64) {
        if t == 0.0 {
            let mx = self.mode * x;
            (-self.beta * mx.cos(), self.beta * self.mode * mx.sin())
        } else if self.beta.abs() > KERNEL_BETA && self.beta.abs() > KERNEL_BETA {
            self.eval_kernel(t, x)
        } else {
            self.eval_series(t, x)
        }
    }

    fn eval_series(&self, t: f64, x: f64) -> (f64, f64) {
        let m = self.mode;
        let mut phi = self.coeffs[0];
        let mut phi_x = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().skip(1) {
            let jm = j as f64 * m;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let w = 2.0 * sign * c * (-self.nu * jm * jm * t).exp();
            phi += w * (jm * x).cos();
            phi_x -= w * jm * (jm * x).sin();
        }
        (phi.ln() + self.beta, phi_x / phi)
    }

    fn eval_kernel(&self, t: f64, x: f64) -> (f64, f64) {
        let width = (2.0 * self.nu * t).sqrt();
        let nodes = ((16.0 * 2.0 * PI / width).ceil() as usize)
            .max((8.0 * (self.beta.abs() + 10.0) * self.mode).ceil() as usize)
            .max(512);
        let dy = 2.0 * PI / nodes as f64;
        let wraps = (1.0 + 8.0 * width / (2.0 * PI)).ceil() as i64;
        let mut terms = Vec::with_capacity(nodes * (2 * wraps as usize + 1));
        for i in 0..nodes {
            let y = i as f64 * dy;
            let base = -self.beta * (self.mode * y).cos();
            for w in -wraps..=wraps {
                let r = x - y + 2.0 * PI * w as f64;
                terms.push((base - r * r / (4.0 * self.nu * t), r));
            }
        }
        let top = terms.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
        let (mut sum, mut moment) = (0.0, 0.0);
        for (e, r) in terms {
            let w = (e - top).exp();
            sum += w;
            moment += w * r;
        }
        let log_phi = top + sum.ln() + (dy / (4.0 * PI * self.nu * t).sqrt()).ln();
        (log_phi, -moment / (sum * 2.0 * self.nu * t))
    }
}

/// Exact solution of `u_t + u u_x = ν u_xx` with `u(0, x) = −A sin(mx)`:
/// `u = −2ν ∂_x log φ`, `φ_0 = exp(−(2ν)^{-1} ∫_0^x u_0)`.
#[derive(Clone, Debug)]
pub struct BurgersSine {
    series: HeatSeries,
}

impl BurgersSine {
    pub fn new(nu: f64, amplitude: f64, mode: u32) -> Result<Self> {
        let beta = amplitude / (2.0 * nu * mode as f64);
        Ok(Self {
            series: HeatSeries::new(nu, mode, beta)?,
        })
    }

    pub fn velocity(&self, t: f64, x: f64) -> f64 {
        -2.0 * self.series.nu * self.series.eval(t, x).1
    }

    /// One-component field of `u(t, ·)` on a 1-D grid.
    pub fn field(&self, grid: &TorusGrid, t: f64) -> Result<Field> {
        require_standard_1d(grid)?;
        Ok(Field::scalar_from_fn(grid, |x| self.velocity(t, x[0])))
    }
}

/// Exact solution of `ψ_t + λ|ψ_x|² = ν ψ_xx` with `ψ(0, x) = c cos(mx)`:
/// `ψ = −(ν/λ) log φ`, `φ_0 = exp(−λψ_0/ν)`.
#[derive(Clone, Debug)]
pub struct HamiltonJacobiCosine {
    series: HeatSeries,
    lambda: f64,
}

impl HamiltonJacobiCosine {
    pub fn new(nu: f64, lambda: f64, amplitude: f64, mode: u32) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(invalid("coupling λ must be positive"));
        }
        let beta = lambda * amplitude / nu;
        Ok(Self {
            series: HeatSeries::new(nu, mode, beta)?,
            lambda,
        })
    }

    pub fn potential(&self, t: f64, x: f64) -> f64 {
        -(self.series.nu / self.lambda) * self.series.eval(t, x).0
    }

    pub fn field(&self, grid: &TorusGrid, t: f64) -> Result<Field> {
        require_standard_1d(grid)?;
        Ok(Field::scalar_from_fn(grid, |x| self.potential(t, x[0])))
    }
}

fn require_standard_1d(grid: &TorusGrid) -> Result<()> {
    if grid.dim() != 1 || (grid.length() - 2.0 * PI).abs() > 1e-12 {
        return Err(invalid("Cole–Hopf references live on the 1-torus of length 2π"));
    }
    Ok(())
}
