//! Uniform periodic grids on the torus `[0, L)^d` and their Fourier tables.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A uniform periodic grid with `n` points per axis in `d` dimensions.
///
/// Cloning is cheap: the FFT plans and wavenumber tables are shared.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    tables: OnceLock<ModeTables>,
}

/// Per-mode lookup tables, laid out in the same row-major order as the samples.
pub(crate) struct ModeTables {
    /// Signed integer frequency per axis (`-n/2` for the Nyquist index).
    pub freqs: Vec<[i64; MAX_DIM]>,
    /// Wavevector used for odd derivatives; the Nyquist component is zeroed.
    pub kvec: Vec<[f64; MAX_DIM]>,
    /// `|k|^2` including the Nyquist components.
    pub k2: Vec<f64>,
    /// 2/3-rule mask: `true` where `3|f_j| < n` on every axis.
    pub keep: Vec<bool>,
}

impl TorusGrid {
    /// Grid on `[0, 2π)^d`.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        Self::with_length(dim, n, 2.0 * std::f64::consts::PI)
    }

    pub fn with_length(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be even power of two ≥ 4 (got {n})"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "period length must be positive and finite (got {length})"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                length,
                forward,
                inverse,
                tables: OnceLock::new(),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    /// Grid spacing `h = L / n`.
    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d` of the uniform Riemann sum.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    /// Volume of the torus, `L^d`.
    pub fn volume(&self) -> f64 {
        self.inner.length.powi(self.inner.dim as i32)
    }

    /// Scale factor `2π / L` between integer frequencies and wavenumbers.
    pub fn kappa(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.inner.length
    }

    /// Per-axis wavenumber table in FFT order: `κ·[0, 1, …, n/2−1, −n/2, …, −1]`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.inner.n as i64;
        let kappa = self.kappa();
        (0..n).map(|i| kappa * signed_freq(i, n) as f64).collect()
    }

    /// Largest resolved wavenumber magnitude along one axis, `κ·n/2`.
    pub fn k_max(&self) -> f64 {
        self.kappa() * (self.inner.n / 2) as f64
    }

    /// Row-major multi-index of a flat sample index (axis 0 slowest).
    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let n = self.inner.n;
        let mut out = [0; MAX_DIM];
        for a in (0..self.inner.dim).rev() {
            out[a] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.inner.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.inner.n + i)
    }

    /// Physical coordinates of a sample.
    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.multi_index(idx);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.inner.dim {
            x[a] = m[a] as f64 * h;
        }
        x
    }

    pub(crate) fn tables(&self) -> &ModeTables {
        self.inner.tables.get_or_init(|| self.build_tables())
    }

    fn build_tables(&self) -> ModeTables {
        let len = self.len();
        let n = self.inner.n as i64;
        let kappa = self.kappa();
        let mut freqs = Vec::with_capacity(len);
        let mut kvec = Vec::with_capacity(len);
        let mut k2 = Vec::with_capacity(len);
        let mut keep = Vec::with_capacity(len);
        for idx in 0..len {
            let m = self.multi_index(idx);
            let mut f = [0i64; MAX_DIM];
            let mut kv = [0.0; MAX_DIM];
            let mut ksq = 0.0;
            let mut kept = true;
            for a in 0..self.inner.dim {
                f[a] = signed_freq(m[a] as i64, n);
                let k = kappa * f[a] as f64;
                ksq += k * k;
                kv[a] = if f[a] == -n / 2 { 0.0 } else { k };
                kept &= 3 * f[a].abs() < n;
            }
            freqs.push(f);
            kvec.push(kv);
            k2.push(ksq);
            keep.push(kept);
        }
        ModeTables {
            freqs,
            kvec,
            k2,
            keep,
        }
    }

    /// In-place unnormalized forward transform of a row-major array.
    pub(crate) fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.forward);
    }

    /// In-place inverse transform, normalized by `1 / n^d`.
    pub(crate) fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inverse);
        let scale = 1.0 / self.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.inner.n;
        let dim = self.inner.dim;
        debug_assert_eq!(data.len(), self.len());
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // Last axis is contiguous and can be processed as one batch.
        plan.process_with_scratch(data, &mut scratch);
        if dim == 1 {
            return;
        }
        let mut line = vec![Complex64::default(); n];
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (i, z) in line.iter_mut().enumerate() {
                        *z = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, z) in line.iter().enumerate() {
                        data[base + i * stride] = *z;
                    }
                }
            }
        }
    }
}

fn signed_freq(i: i64, n: i64) -> i64 {
    if i < n / 2 {
        i
    } else {
        i - n
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.length == other.inner.length)
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(1, 3).is_err());
        assert!(TorusGrid::new(1, 2).is_err());
        assert!(TorusGrid::new(1, 12).is_err());
        assert!(TorusGrid::new(4, 8).is_err());
        assert!(TorusGrid::with_length(2, 8, 0.0).is_err());
        let msg = TorusGrid::new(1, 3).unwrap_err().to_string();
        assert!(msg.contains("n must be even power of two ≥ 4"), "{msg}");
    }

    #[test]
    fn spacing_and_counts() {
        let g = TorusGrid::with_length(3, 8, 4.0).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.cell_volume(), 0.125);
    }

    #[test]
    fn index_round_trip() {
        let g = TorusGrid::new(3, 4).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(idx)), idx);
        }
    }

    #[test]
    fn wavenumber_table_order() {
        let g = TorusGrid::new(1, 8).unwrap();
        assert_eq!(
            g.wavenumbers(),
            vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]
        );
        let t = g.tables();
        assert_eq!(t.kvec[4][0], 0.0);
        assert_eq!(t.k2[4], 16.0);
        // 3|f| < 8 keeps |f| ≤ 2.
        let kept: Vec<bool> = t.keep.clone();
        assert_eq!(kept, vec![true, true, true, false, false, false, true, true]);
    }
}
