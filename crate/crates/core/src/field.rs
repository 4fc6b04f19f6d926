//! Multi-component real fields sampled on a [`TorusGrid`].

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{TorusGrid, MAX_DIM};

/// Real samples of one or more components with a lazily computed Fourier table.
///
/// Scalars (`div u`, `ψ`, `h`) are one-component fields; velocities carry `d`
/// components. Fields are immutable once built; every operation returns a new one.
#[derive(Clone)]
pub struct Field {
    grid: TorusGrid,
    components: Vec<Vec<f64>>,
    spectrum: OnceLock<Vec<Vec<Complex64>>>,
}

impl Field {
    pub fn new(grid: TorusGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("a field needs at least one component"));
        }
        for (i, c) in components.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(invalid(format!(
                    "component {i} has {} samples, grid holds {}",
                    c.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self {
            grid,
            components,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: &TorusGrid, num_components: usize) -> Self {
        let components = vec![vec![0.0; grid.len()]; num_components.max(1)];
        Self {
            grid: grid.clone(),
            components,
            spectrum: OnceLock::new(),
        }
    }

    /// Samples `f(x, out)` at every grid point; `out` has one slot per component.
    pub fn from_fn<F>(grid: &TorusGrid, num_components: usize, mut f: F) -> Self
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut components = vec![vec![0.0; grid.len()]; num_components];
        let mut out = vec![0.0; num_components];
        let dim = grid.dim();
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            out.iter_mut().for_each(|v| *v = 0.0);
            f(&x[..dim], &mut out);
            for (c, v) in components.iter_mut().zip(&out) {
                c[idx] = *v;
            }
        }
        Self {
            grid: grid.clone(),
            components,
            spectrum: OnceLock::new(),
        }
    }

    pub fn scalar_from_fn<F>(grid: &TorusGrid, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> f64,
    {
        Self::from_fn(grid, 1, |x, out| out[0] = f(x))
    }

    /// Builds a field from Fourier coefficients, keeping the real part of the inverse.
    pub fn from_spectrum(grid: &TorusGrid, spectra: Vec<Vec<Complex64>>) -> Self {
        let components = spectra
            .iter()
            .map(|s| {
                let mut buf = s.clone();
                grid.fft_inverse(&mut buf);
                buf.into_iter().map(|z| z.re).collect()
            })
            .collect();
        let spectrum = OnceLock::new();
        let _ = spectrum.set(spectra);
        Self {
            grid: grid.clone(),
            components,
            spectrum,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    /// Unnormalized DFT of each component (cached after the first call).
    pub fn spectrum(&self) -> &[Vec<Complex64>] {
        self.spectrum.get_or_init(|| {
            self.components
                .iter()
                .map(|c| {
                    let mut buf: Vec<Complex64> =
                        c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                    self.grid.fft_forward(&mut buf);
                    buf
                })
                .collect()
        })
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }

    /// Rejects fields holding NaN or infinite samples, naming the first offender.
    pub fn ensure_finite(&self) -> Result<()> {
        match self
            .components
            .iter()
            .position(|c| c.iter().any(|v| !v.is_finite()))
        {
            Some(component) => Err(Error::NonFinite { component }),
            None => Ok(()),
        }
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    fn ensure_same_shape(&self, other: &Field) -> Result<()> {
        self.ensure_same_grid(other)?;
        if self.num_components() != other.num_components() {
            return Err(invalid(format!(
                "component count mismatch: {} vs {}",
                self.num_components(),
                other.num_components()
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, b: f64, other: &Field) -> Result<Field> {
        self.ensure_same_shape(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
            .collect();
        Ok(Field {
            grid: self.grid.clone(),
            components,
            spectrum: OnceLock::new(),
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.lincomb(1.0, 1.0, other)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.lincomb(1.0, -1.0, other)
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.map(|v| factor * v)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|&v| f(v)).collect())
                .collect(),
            spectrum: OnceLock::new(),
        }
    }

    /// Largest absolute sample difference over all components.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
            .fold(0.0, f64::max))
    }

    /// Pointwise Euclidean magnitude `(Σ_i |u^i(x)|²)^{1/2}` as a scalar field.
    pub fn magnitude(&self) -> Field {
        let len = self.grid.len();
        let mag = (0..len)
            .map(|idx| {
                self.components
                    .iter()
                    .map(|c| c[idx] * c[idx])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Field {
            grid: self.grid.clone(),
            components: vec![mag],
            spectrum: OnceLock::new(),
        }
    }

    /// Coordinates of sample `idx`, trimmed to the grid dimension.
    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        self.grid.point(idx)
    }

    /// Stacks the components of several fields on the same grid.
    pub fn stack(fields: &[&Field]) -> Result<Field> {
        let first = fields.first().ok_or_else(|| invalid("nothing to stack"))?;
        let mut components = Vec::new();
        for f in fields {
            first.ensure_same_grid(f)?;
            components.extend(f.components.iter().cloned());
        }
        Field::new(first.grid.clone(), components)
    }
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("components", &self.components.len())
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.components == other.components
    }
}
