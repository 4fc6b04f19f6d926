//! Initial-condition and forcing generators: single Fourier modes, seeded
//! random band-limited fields, discrete white noise, and named scalar potentials.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::grid::{TorusGrid, MAX_DIM};
use crate::ops::gradient;

/// Index of the mode with negated frequency.
fn conjugate_index(grid: &TorusGrid, idx: usize) -> usize {
    let n = grid.n();
    let m = grid.multi_index(idx);
    let mut neg = [0usize; MAX_DIM];
    for a in 0..grid.dim() {
        neg[a] = (n - m[a]) % n;
    }
    grid.flat_index(&neg)
}

/// Fills a Hermitian spectrum: `coeff(idx)` is drawn once per conjugate pair,
/// self-conjugate modes keep only the real part.
fn hermitian_spectrum<F>(grid: &TorusGrid, mut coeff: F) -> Vec<Complex64>
where
    F: FnMut(usize) -> Complex64,
{
    let mut spec = vec![Complex64::default(); grid.len()];
    for idx in 0..grid.len() {
        let neg = conjugate_index(grid, idx);
        if idx < neg {
            let c = coeff(idx);
            spec[idx] = c;
            spec[neg] = c.conj();
        } else if idx == neg {
            spec[idx] = Complex64::new(coeff(idx).re, 0.0);
        }
    }
    spec
}

/// Seeded random trigonometric polynomial with every `|f_j| ≤ k_max`
/// (Nyquist excluded), rescaled so the largest sample magnitude equals `amplitude`.
pub fn random_band_limited(
    grid: &TorusGrid,
    num_components: usize,
    k_max: usize,
    amplitude: f64,
    seed: u64,
) -> Field {
    let k_max = k_max.min(grid.n() / 2 - 1) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tables = grid.tables();
    let spectra: Vec<Vec<Complex64>> = (0..num_components)
        .map(|_| {
            hermitian_spectrum(grid, |idx| {
                let inside = tables.freqs[idx][..grid.dim()]
                    .iter()
                    .all(|f| f.abs() <= k_max);
                let re: f64 = rng.random_range(-1.0..1.0);
                let im: f64 = rng.random_range(-1.0..1.0);
                if inside {
                    Complex64::new(re, im)
                } else {
                    Complex64::default()
                }
            })
        })
        .collect();
    let raw = Field::from_spectrum(grid, spectra);
    let peak = raw
        .components()
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        raw
    } else {
        let s = amplitude / peak;
        Field::from_spectrum(
            grid,
            raw.spectrum()
                .iter()
                .map(|c| c.iter().map(|z| z * s).collect())
                .collect(),
        )
    }
}

/// Discrete white noise: every nonzero mode has the same magnitude and an
/// independent uniform phase. The magnitude is `sqrt(n^d)`, which gives
/// samples of unit variance. The mean is zero.
pub fn white_noise(grid: &TorusGrid, num_components: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mag = (grid.len() as f64).sqrt();
    let spectra = (0..num_components)
        .map(|_| {
            let mut spec = hermitian_spectrum(grid, |_| {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(mag, theta)
            });
            // self-conjugate modes: keep unit magnitude with a random sign
            for idx in 0..grid.len() {
                if conjugate_index(grid, idx) == idx {
                    spec[idx] = Complex64::new(mag * spec[idx].re.signum(), 0.0);
                }
            }
            spec[0] = Complex64::default();
            spec
        })
        .collect();
    Field::from_spectrum(grid, spectra)
}

/// `amplitude · sin(k·x_axis)` in component `component`, zero elsewhere.
pub fn single_mode(
    grid: &TorusGrid,
    num_components: usize,
    component: usize,
    axis: usize,
    k: f64,
    amplitude: f64,
) -> Result<Field> {
    if component >= num_components || axis >= grid.dim() {
        return Err(invalid("single-mode component or axis out of range"));
    }
    Ok(Field::from_fn(grid, num_components, |x, out| {
        out[component] = amplitude * (k * x[axis]).sin();
    }))
}

/// Smooth scalar potentials addressable by name.
///
/// * `cos-x`: `cos x_0`
/// * `cos-sum`: `Σ_j cos x_j`
/// * `mixed`: `cos x_0 + ½ sin(x_0 + x_last) + ¼ cos 2x_last`
/// * `zero`
pub fn named_scalar(grid: &TorusGrid, name: &str) -> Result<Field> {
    let d = grid.dim();
    type Profile = Box<dyn Fn(&[f64]) -> f64>;
    let f: Profile = match name {
        "cos-x" => Box::new(|x: &[f64]| x[0].cos()),
        "cos-sum" => Box::new(|x: &[f64]| x.iter().map(|v| v.cos()).sum()),
        "mixed" => Box::new(move |x: &[f64]| {
            x[0].cos() + 0.5 * (x[0] + x[d - 1]).sin() + 0.25 * (2.0 * x[d - 1]).cos()
        }),
        "zero" => Box::new(|_: &[f64]| 0.0),
        other => return Err(invalid(format!("unknown scalar potential '{other}'"))),
    };
    Ok(Field::scalar_from_fn(grid, f))
}

/// `∇φ` for a named potential.
pub fn gradient_of(grid: &TorusGrid, name: &str) -> Result<Field> {
    gradient(&named_scalar(grid, name)?)
}
