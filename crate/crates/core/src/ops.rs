//! Fourier-multiplier operators: heat semigroup, derivatives, dealiased products.
//!
//! Odd derivatives drop the Nyquist mode so real data stays real. Every
//! quadratic product is formed on the grid and then truncated with the 2/3 rule.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::grid::TorusGrid;

/// `S_t^ν = e^{νtΔ}` applied componentwise: `û(k) ↦ e^{−νt|k|²} û(k)`.
///
/// `t = 0` returns an exact copy of the input.
pub fn heat_semigroup_apply(field: &Field, nu: f64, t: f64) -> Result<Field> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(invalid(format!("viscosity must be positive (got {nu})")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("time must be ≥ 0 (got {t})")));
    }
    field.ensure_finite()?;
    if t == 0.0 {
        return Ok(field.clone());
    }
    let k2 = &field.grid().tables().k2;
    let spectra = field
        .spectrum()
        .iter()
        .map(|s| {
            s.iter()
                .zip(k2)
                .map(|(z, &k)| z * (-nu * t * k).exp())
                .collect()
        })
        .collect();
    Ok(Field::from_spectrum(field.grid(), spectra))
}

/// Spectrum of `∂_axis` applied to one component spectrum.
pub(crate) fn derivative_spectrum(
    grid: &TorusGrid,
    spec: &[Complex64],
    axis: usize,
) -> Vec<Complex64> {
    let kvec = &grid.tables().kvec;
    spec.iter()
        .zip(kvec)
        .map(|(z, k)| z * Complex64::new(0.0, k[axis]))
        .collect()
}

pub(crate) fn to_real(grid: &TorusGrid, mut spec: Vec<Complex64>) -> Vec<f64> {
    grid.fft_inverse(&mut spec);
    spec.into_iter().map(|z| z.re).collect()
}

pub(crate) fn to_spectrum(grid: &TorusGrid, real: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_forward(&mut buf);
    buf
}

/// Zeroes every mode outside the 2/3-rule box.
pub(crate) fn truncate(grid: &TorusGrid, spec: &mut [Complex64]) {
    for (z, &keep) in spec.iter_mut().zip(&grid.tables().keep) {
        if !keep {
            *z = Complex64::default();
        }
    }
}

/// Real-space samples of every first derivative, ordered `[c * d + j] = ∂_j v^c`.
pub(crate) fn jacobian_samples(field: &Field) -> Vec<Vec<f64>> {
    let grid = field.grid();
    let d = grid.dim();
    field
        .spectrum()
        .iter()
        .flat_map(|s| (0..d).map(move |j| to_real(grid, derivative_spectrum(grid, s, j))))
        .collect()
}

/// Spectral gradient. A field with `c` components yields `c·d` components,
/// ordered `[i * d + j] = ∂_j u^i`.
pub fn gradient(field: &Field) -> Result<Field> {
    field.ensure_finite()?;
    let grid = field.grid();
    let d = grid.dim();
    let spectra = field
        .spectrum()
        .iter()
        .flat_map(|s| (0..d).map(move |j| derivative_spectrum(grid, s, j)))
        .collect();
    Ok(Field::from_spectrum(grid, spectra))
}

fn require_vector(field: &Field) -> Result<()> {
    let d = field.grid().dim();
    if field.num_components() != d {
        return Err(invalid(format!(
            "expected a {d}-component vector field, got {} components",
            field.num_components()
        )));
    }
    Ok(())
}

/// `div u = Σ_j ∂_j u^j`.
pub fn divergence(field: &Field) -> Result<Field> {
    require_vector(field)?;
    field.ensure_finite()?;
    let grid = field.grid();
    let kvec = &grid.tables().kvec;
    let mut acc = vec![Complex64::default(); grid.len()];
    for (j, s) in field.spectrum().iter().enumerate() {
        for ((a, z), k) in acc.iter_mut().zip(s).zip(kvec) {
            *a += z * Complex64::new(0.0, k[j]);
        }
    }
    Ok(Field::from_spectrum(grid, vec![acc]))
}

/// Antisymmetric part of the Jacobian, one component per pair `i < j`:
/// `∂_i u^j − ∂_j u^i`, in the order (0,1), (0,2), (1,2).
///
/// In one dimension there are no pairs and a single zero component is returned.
/// For `d = 2` the component is the usual scalar vorticity `∂_x u^y − ∂_y u^x`.
pub fn curl(field: &Field) -> Result<Field> {
    require_vector(field)?;
    field.ensure_finite()?;
    let grid = field.grid();
    let d = grid.dim();
    if d == 1 {
        return Ok(Field::zeros(grid, 1));
    }
    let spec = field.spectrum();
    let kvec = &grid.tables().kvec;
    let mut spectra = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let s: Vec<Complex64> = spec[j]
                .iter()
                .zip(&spec[i])
                .zip(kvec)
                .map(|((uj, ui), k)| Complex64::new(0.0, 1.0) * (k[i] * uj - k[j] * ui))
                .collect();
            spectra.push(s);
        }
    }
    Ok(Field::from_spectrum(grid, spectra))
}

/// Spectral Laplacian `−|k|²`, componentwise.
pub fn laplacian(field: &Field) -> Result<Field> {
    field.ensure_finite()?;
    let k2 = &field.grid().tables().k2;
    let spectra = field
        .spectrum()
        .iter()
        .map(|s| s.iter().zip(k2).map(|(z, &k)| -k * z).collect())
        .collect();
    Ok(Field::from_spectrum(field.grid(), spectra))
}

/// Bessel potential `(I − Δ)^{α/2}`, componentwise.
pub fn bessel_potential(field: &Field, alpha: f64) -> Result<Field> {
    field.ensure_finite()?;
    if alpha == 0.0 {
        return Ok(field.clone());
    }
    let k2 = &field.grid().tables().k2;
    let spectra = field
        .spectrum()
        .iter()
        .map(|s| {
            s.iter()
                .zip(k2)
                .map(|(z, &k)| z * (1.0 + k).powf(0.5 * alpha))
                .collect()
        })
        .collect();
    Ok(Field::from_spectrum(field.grid(), spectra))
}

/// Applies the 2/3-rule mask to every component.
pub fn dealias(field: &Field) -> Field {
    let grid = field.grid();
    let spectra = field
        .spectrum()
        .iter()
        .map(|s| {
            let mut s = s.clone();
            truncate(grid, &mut s);
            s
        })
        .collect();
    Field::from_spectrum(grid, spectra)
}

/// Dealiased spectra of `(u·∇)v`, one per component of `v`.
pub(crate) fn advect_spectra(u: &Field, v: &Field) -> Vec<Vec<Complex64>> {
    let grid = u.grid();
    let d = grid.dim();
    let dv = jacobian_samples(v);
    (0..v.num_components())
        .map(|c| {
            let mut prod = vec![0.0; grid.len()];
            for j in 0..d {
                let uj = u.component(j);
                for ((p, a), b) in prod.iter_mut().zip(uj).zip(&dv[c * d + j]) {
                    *p += a * b;
                }
            }
            let mut s = to_spectrum(grid, &prod);
            truncate(grid, &mut s);
            s
        })
        .collect()
}

/// `F(u, v) = (u·∇)v` with the 2/3-rule applied after forming the product.
///
/// `u` must be a `d`-vector; `v` may have any number of components.
pub fn advect(u: &Field, v: &Field) -> Result<Field> {
    u.ensure_same_grid(v)?;
    require_vector(u)?;
    u.ensure_finite()?;
    v.ensure_finite()?;
    Ok(Field::from_spectrum(u.grid(), advect_spectra(u, v)))
}

/// Pointwise sum of squares of the given sample arrays, dealiased.
fn dealiased_sum_of_squares(grid: &TorusGrid, terms: &[Vec<f64>]) -> Field {
    let mut acc = vec![0.0; grid.len()];
    for t in terms {
        for (a, v) in acc.iter_mut().zip(t) {
            *a += v * v;
        }
    }
    let mut s = to_spectrum(grid, &acc);
    truncate(grid, &mut s);
    Field::from_spectrum(grid, vec![s])
}

/// `|∇u|² = Σ_{i,j} (∂_j u^i)²`, dealiased.
pub fn gradient_norm_sq(u: &Field) -> Result<Field> {
    u.ensure_finite()?;
    Ok(dealiased_sum_of_squares(u.grid(), &jacobian_samples(u)))
}

/// `|curl u|² = Σ_{i<j} (∂_j u^i − ∂_i u^j)²`, dealiased.
pub fn curl_norm_sq(u: &Field) -> Result<Field> {
    let w = curl(u)?;
    Ok(dealiased_sum_of_squares(u.grid(), w.components()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_band_limited;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn rel_err(a: &Field, b: &Field) -> f64 {
        let scale = b
            .components()
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        a.max_abs_diff(b).unwrap() / scale.max(f64::MIN_POSITIVE)
    }

    #[test]
    fn heat_fixes_constants() {
        let g = TorusGrid::new(2, 16).unwrap();
        let c = Field::from_fn(&g, 2, |_, out| {
            out[0] = 3.5;
            out[1] = -1.25;
        });
        let out = heat_semigroup_apply(&c, 0.7, 2.3).unwrap();
        assert!(out.max_abs_diff(&c).unwrap() < 1e-14);
    }

    #[test]
    fn heat_single_mode_decay() {
        let g = grid1(64);
        let u = Field::scalar_from_fn(&g, |x| (2.0 * x[0]).sin());
        let out = heat_semigroup_apply(&u, 1.0, 0.5).unwrap();
        let expect = Field::scalar_from_fn(&g, |x| (-2.0f64).exp() * (2.0 * x[0]).sin());
        assert!(rel_err(&out, &expect) <= 1e-12);
    }

    #[test]
    fn heat_zero_time_is_identity() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = random_band_limited(&g, 2, 5, 1.0, 3);
        let out = heat_semigroup_apply(&u, 0.3, 0.0).unwrap();
        assert_eq!(out, u);
    }

    #[test]
    fn heat_rejects_bad_input() {
        let g = grid1(8);
        let u = Field::zeros(&g, 1);
        assert!(heat_semigroup_apply(&u, 0.0, 1.0).is_err());
        assert!(heat_semigroup_apply(&u, 1.0, -1.0).is_err());
        let bad = u.map(|_| f64::INFINITY);
        assert!(heat_semigroup_apply(&bad, 1.0, 1.0).is_err());
    }

    #[test]
    fn semigroup_law() {
        let g = TorusGrid::new(2, 32).unwrap();
        let u = random_band_limited(&g, 2, 10, 1.0, 11);
        let (nu, s, t) = (0.4, 0.03, 0.11);
        let a = heat_semigroup_apply(&heat_semigroup_apply(&u, nu, t).unwrap(), nu, s).unwrap();
        let b = heat_semigroup_apply(&u, nu, s + t).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }

    #[test]
    fn gradient_of_constant_and_sine() {
        let g = grid1(32);
        let c = Field::scalar_from_fn(&g, |_| 2.0);
        let gc = gradient(&c).unwrap();
        assert!(gc.component(0).iter().all(|v| v.abs() < 1e-14));

        let s = Field::scalar_from_fn(&g, |x| (3.0 * x[0]).sin());
        let ds = gradient(&s).unwrap();
        let expect = Field::scalar_from_fn(&g, |x| 3.0 * (3.0 * x[0]).cos());
        assert!(rel_err(&ds, &expect) <= 1e-12);
    }

    #[test]
    fn grad_then_div_matches_laplacian_multiplier() {
        for (d, n) in [(1, 64), (2, 32), (3, 16)] {
            let g = TorusGrid::new(d, n).unwrap();
            let phi = random_band_limited(&g, 1, n / 3, 1.0, 5);
            let lap = divergence(&gradient(&phi).unwrap()).unwrap();
            // independent route: multiply the spectrum by −|k|² directly
            let k2 = &g.tables().k2;
            let direct: Vec<Complex64> = phi.spectrum()[0]
                .iter()
                .zip(k2)
                .map(|(z, &k)| -k * z)
                .collect();
            let direct = Field::new(g.clone(), vec![to_real(&g, direct)]).unwrap();
            assert!(lap.max_abs_diff(&direct).unwrap() <= 1e-10, "d={d}");
        }
    }

    #[test]
    fn curl_and_divergence_of_shear() {
        let g = TorusGrid::new(2, 32).unwrap();
        let u = Field::from_fn(&g, 2, |x, out| out[0] = x[1].sin());
        let w = curl(&u).unwrap();
        let expect = Field::scalar_from_fn(&g, |x| -x[1].cos());
        assert!(w.max_abs_diff(&expect).unwrap() < 1e-12);
        let div = divergence(&u).unwrap();
        assert!(div.component(0).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = TorusGrid::new(3, 16).unwrap();
        let phi = random_band_limited(&g, 1, 5, 1.0, 21);
        let u = gradient(&phi).unwrap();
        let w = curl(&u).unwrap();
        assert_eq!(w.num_components(), 3);
        assert!(w.components().iter().flatten().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn advect_single_modes() {
        let g = TorusGrid::new(2, 32).unwrap();
        let u = Field::from_fn(&g, 2, |_, out| {
            out[0] = 1.5;
            out[1] = -0.5;
        });
        let cst = Field::from_fn(&g, 2, |_, out| out[0] = 4.0);
        let z = advect(&u, &cst).unwrap();
        assert!(z.components().iter().flatten().all(|v| v.abs() < 1e-13));

        let v = Field::scalar_from_fn(&g, |x| (2.0 * x[0] + x[1]).sin());
        let out = advect(&u, &v).unwrap();
        let expect = Field::scalar_from_fn(&g, |x| {
            (1.5 * 2.0 - 0.5) * (2.0 * x[0] + x[1]).cos()
        });
        assert!(out.max_abs_diff(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn advect_grid_mismatch() {
        let a = Field::zeros(&TorusGrid::new(1, 8).unwrap(), 1);
        let b = Field::zeros(&TorusGrid::new(1, 16).unwrap(), 1);
        assert!(advect(&a, &b).is_err());
    }

    #[test]
    fn dealiased_product_matches_refined_grid() {
        // Band-limited (3|k| < n) data: the truncated product must equal the
        // exact product computed without aliasing on a grid twice as fine.
        let n = 32;
        let g = grid1(n);
        let fine = grid1(2 * n);
        let u = random_band_limited(&g, 1, 10, 1.0, 2);
        let v = random_band_limited(&g, 1, 10, 1.0, 3);
        let out = advect(&u, &v).unwrap();

        let upsample = |f: &Field| {
            let s = &f.spectrum()[0];
            let mut big = vec![Complex64::default(); 2 * n];
            for (i, z) in s.iter().enumerate() {
                let fi = if i < n / 2 { i } else { 2 * n - (n - i) };
                big[fi] = z * 2.0;
            }
            Field::new(fine.clone(), vec![to_real(&fine, big)]).unwrap()
        };
        let (uf, vf) = (upsample(&u), upsample(&v));
        let dv = gradient(&vf).unwrap();
        let prod: Vec<f64> = uf
            .component(0)
            .iter()
            .zip(dv.component(0))
            .map(|(a, b)| a * b)
            .collect();
        let ps = to_spectrum(&fine, &prod);
        let mut coarse = vec![Complex64::default(); n];
        for (i, z) in coarse.iter_mut().enumerate() {
            let f = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
            if 3 * f.abs() < n as i64 {
                let fi = if f >= 0 { f as usize } else { (2 * n as i64 + f) as usize };
                *z = ps[fi] / 2.0;
            }
        }
        let expect = Field::new(g.clone(), vec![to_real(&g, coarse)]).unwrap();
        assert!(out.max_abs_diff(&expect).unwrap() <= 1e-10);
    }

    #[test]
    fn rotation_has_equal_gradient_and_curl_energy() {
        let g = TorusGrid::new(2, 32).unwrap();
        let u = Field::from_fn(&g, 2, |x, out| {
            out[0] = -x[1].sin();
            out[1] = x[0].sin();
        });
        let a = gradient_norm_sq(&u).unwrap();
        let b = curl_norm_sq(&u).unwrap();
        // |∇u|² = cos²y + cos²x; |curl u|² = (cos x + cos y)², so they differ
        // pointwise by 2 cos x cos y; check the algebra rather than equality.
        let expect = Field::scalar_from_fn(&g, |x| 2.0 * x[0].cos() * x[1].cos());
        assert!(b.sub(&a).unwrap().max_abs_diff(&expect).unwrap() < 1e-12);
    }
}
