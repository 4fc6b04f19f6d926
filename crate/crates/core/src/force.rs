use std::borrow::Cow;

use crate::error::{invalid, Result};
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::interp::{eval_linear, eval_spectral, Interpolation};

/// External forcing `f(t)`.
#[derive(Clone, Debug, Default)]
pub enum Force {
    #[default]
    Zero,
    /// Time-independent field.
    Steady(Field),
    /// Snapshots on a uniform time grid starting at `t0`, linearly interpolated
    /// in time and held constant outside the sampled window.
    Sampled { t0: f64, dt: f64, fields: Vec<Field> },
}

impl Force {
    pub fn is_zero(&self) -> bool {
        matches!(self, Force::Zero)
    }

    pub fn sampled(t0: f64, dt: f64, fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() || !(dt > 0.0) {
            return Err(invalid("sampled force needs ≥ 1 snapshot and dt > 0"));
        }
        for f in &fields[1..] {
            fields[0].ensure_same_grid(f)?;
        }
        Ok(Force::Sampled { t0, dt, fields })
    }

    /// Checks the force lives on `grid` with `components` components.
    pub fn check_compatible(&self, grid: &TorusGrid, components: usize) -> Result<()> {
        let probe = match self {
            Force::Zero => return Ok(()),
            Force::Steady(f) => f,
            Force::Sampled { fields, .. } => &fields[0],
        };
        if probe.grid() != grid {
            return Err(crate::Error::GridMismatch("force grid differs from solution grid".into()));
        }
        if probe.num_components() != components {
            return Err(invalid(format!(
                "force has {} components, solution has {components}",
                probe.num_components()
            )));
        }
        Ok(())
    }

    fn bracket(t0: f64, dt: f64, count: usize, t: f64) -> (usize, usize, f64) {
        let s = ((t - t0) / dt).max(0.0);
        let k = (s.floor() as usize).min(count - 1);
        if k + 1 >= count {
            (count - 1, count - 1, 0.0)
        } else {
            (k, k + 1, (s - k as f64).clamp(0.0, 1.0))
        }
    }

    /// Force field at time `t`; `None` for the zero force.
    pub fn at(&self, t: f64) -> Option<Cow<'_, Field>> {
        match self {
            Force::Zero => None,
            Force::Steady(f) => Some(Cow::Borrowed(f)),
            Force::Sampled { t0, dt, fields } => {
                let (a, b, w) = Self::bracket(*t0, *dt, fields.len(), t);
                if w == 0.0 {
                    Some(Cow::Borrowed(&fields[a]))
                } else {
                    let f = fields[a]
                        .lincomb(1.0 - w, w, &fields[b])
                        .expect("sampled force snapshots share a grid");
                    Some(Cow::Owned(f))
                }
            }
        }
    }

    /// Adds `f(t, x)` into `out`.
    pub fn accumulate_point(&self, t: f64, x: &[f64], mode: Interpolation, out: &mut [f64]) {
        if self.is_zero() {
            return;
        }
        let mut buf = vec![0.0; out.len()];
        let mut add = |field: &Field, w: f64, buf: &mut Vec<f64>| {
            match mode {
                Interpolation::Spectral => eval_spectral(field, x, buf),
                Interpolation::Linear => eval_linear(field, x, buf),
            }
            for (o, v) in out.iter_mut().zip(buf.iter()) {
                *o += w * v;
            }
        };
        match self {
            Force::Zero => {}
            Force::Steady(f) => add(f, 1.0, &mut buf),
            Force::Sampled { t0, dt, fields } => {
                let (a, b, w) = Self::bracket(*t0, *dt, fields.len(), t);
                add(&fields[a], 1.0 - w, &mut buf);
                if w > 0.0 {
                    add(&fields[b], w, &mut buf);
                }
            }
        }
    }
}
