//! Off-grid evaluation of fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::grid::MAX_DIM;

/// How a field is evaluated between grid points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Exact trigonometric interpolant (direct Fourier sum, `O(n^d)` per point).
    #[default]
    Spectral,
    /// Multilinear interpolation between the `2^d` surrounding samples.
    Linear,
}

/// Value of every component at one point, tagged with the evaluation mode.
#[derive(Clone, Debug, PartialEq)]
pub struct PointValue {
    pub value: Vec<f64>,
    pub mode: Interpolation,
}

/// Evaluates `field` at `x`; coordinates are wrapped into `[0, L)`.
pub fn eval_at(field: &Field, x: &[f64], mode: Interpolation) -> PointValue {
    let mut value = vec![0.0; field.num_components()];
    match mode {
        Interpolation::Spectral => eval_spectral(field, x, &mut value),
        Interpolation::Linear => eval_linear(field, x, &mut value),
    }
    PointValue { value, mode }
}

pub(crate) fn wrap(x: f64, length: f64) -> f64 {
    let r = x.rem_euclid(length);
    // rem_euclid can round up to `length` for tiny negative inputs
    if r >= length {
        0.0
    } else {
        r
    }
}

pub(crate) fn eval_spectral(field: &Field, x: &[f64], out: &mut [f64]) {
    let grid = field.grid();
    let (n, d) = (grid.n(), grid.dim());
    let kappa = grid.kappa();
    // per-axis basis e^{i κ f x}; the Nyquist column uses cos so the interpolant is real
    let basis: Vec<Vec<Complex64>> = (0..d)
        .map(|a| {
            let xa = wrap(x[a], grid.length());
            (0..n)
                .map(|i| {
                    if i == n / 2 {
                        Complex64::new((kappa * (n / 2) as f64 * xa).cos(), 0.0)
                    } else {
                        let f = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                        Complex64::from_polar(1.0, kappa * f * xa)
                    }
                })
                .collect()
        })
        .collect();
    let scale = 1.0 / grid.len() as f64;
    for (c, spec) in field.spectrum().iter().enumerate() {
        let total: Complex64 = match d {
            1 => spec.iter().zip(&basis[0]).map(|(s, b)| s * b).sum(),
            2 => spec
                .chunks_exact(n)
                .zip(&basis[0])
                .map(|(row, b0)| b0 * row.iter().zip(&basis[1]).map(|(s, b)| s * b).sum::<Complex64>())
                .sum(),
            _ => spec
                .chunks_exact(n * n)
                .zip(&basis[0])
                .map(|(plane, b0)| {
                    b0 * plane
                        .chunks_exact(n)
                        .zip(&basis[1])
                        .map(|(row, b1)| {
                            b1 * row.iter().zip(&basis[2]).map(|(s, b)| s * b).sum::<Complex64>()
                        })
                        .sum::<Complex64>()
                })
                .sum(),
        };
        out[c] = total.re * scale;
    }
}

pub(crate) fn eval_linear(field: &Field, x: &[f64], out: &mut [f64]) {
    let grid = field.grid();
    let (n, d) = (grid.n(), grid.dim());
    let h = grid.spacing();
    let mut lo = [0usize; MAX_DIM];
    let mut frac = [0.0; MAX_DIM];
    for a in 0..d {
        let s = wrap(x[a], grid.length()) / h;
        let i = (s.floor() as usize).min(n - 1);
        lo[a] = i;
        frac[a] = s - i as f64;
    }
    out.iter_mut().for_each(|v| *v = 0.0);
    let mut idx = [0usize; MAX_DIM];
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        for a in 0..d {
            let up = (corner >> a) & 1 == 1;
            idx[a] = if up { (lo[a] + 1) % n } else { lo[a] };
            w *= if up { frac[a] } else { 1.0 - frac[a] };
        }
        let flat = grid.flat_index(&idx);
        for (c, o) in out.iter_mut().enumerate() {
            *o += w * field.component(c)[flat];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_band_limited;
    use crate::grid::TorusGrid;
    use std::f64::consts::PI;

    #[test]
    fn reproduces_grid_samples() {
        for (d, n) in [(1, 32), (2, 16), (3, 8)] {
            let g = TorusGrid::new(d, n).unwrap();
            let f = random_band_limited(&g, 2, n / 2, 1.0, 17);
            for idx in (0..g.len()).step_by(7) {
                let x = g.point(idx);
                let v = eval_at(&f, &x[..d], Interpolation::Spectral);
                for c in 0..2 {
                    assert!((v.value[c] - f.component(c)[idx]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn sine_off_grid() {
        let g = TorusGrid::new(1, 32).unwrap();
        let f = Field::scalar_from_fn(&g, |x| x[0].sin());
        let v = eval_at(&f, &[PI / 3.0], Interpolation::Spectral);
        assert!((v.value[0] - (PI / 3.0).sin()).abs() <= 1e-12);
        assert_eq!(v.mode, Interpolation::Spectral);
        // wrapping
        let w = eval_at(&f, &[PI / 3.0 - 4.0 * PI], Interpolation::Spectral);
        assert!((w.value[0] - (PI / 3.0).sin()).abs() <= 1e-12);
    }

    #[test]
    fn linear_mode_second_order() {
        let n = 128;
        let g = TorusGrid::new(1, n).unwrap();
        let f = Field::scalar_from_fn(&g, |x| x[0].sin());
        let h = 2.0 * PI / n as f64;
        let mut worst = 0.0f64;
        for i in 0..1000 {
            let x = 0.00631 * i as f64;
            let v = eval_at(&f, &[x], Interpolation::Linear);
            assert_eq!(v.mode, Interpolation::Linear);
            worst = worst.max((v.value[0] - x.sin()).abs());
        }
        // bound measured against the h²/8·max|f''| interpolation estimate
        assert!(worst <= h * h, "worst={worst}");
        assert!(worst <= h * h / 8.0 + 1e-15);
    }

    #[test]
    fn linear_mode_exact_at_nodes_in_3d() {
        let g = TorusGrid::new(3, 8).unwrap();
        let f = random_band_limited(&g, 3, 3, 1.0, 5);
        let x = g.point(77);
        let v = eval_at(&f, &x[..3], Interpolation::Linear);
        for c in 0..3 {
            assert!((v.value[c] - f.component(c)[77]).abs() < 1e-14);
        }
    }
}
