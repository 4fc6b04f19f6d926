use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::interp::{eval_linear, eval_spectral, Interpolation};

/// Provenance carried alongside a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub solver: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Snapshots `u(t_k)`, `t_k = k·dt`, of a solution on a fixed grid.
///
/// If a solver produced non-finite values the trajectory is truncated to the
/// last finite snapshot and `blown_up_at` records the first bad time.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: TorusGrid,
    nu: f64,
    dt: f64,
    snapshots: Vec<Field>,
    blown_up_at: Option<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(nu: f64, dt: f64, snapshots: Vec<Field>) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| invalid("a trajectory needs at least one snapshot"))?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive (got {dt})")));
        }
        for s in &snapshots[1..] {
            first.ensure_same_grid(s)?;
            if s.num_components() != first.num_components() {
                return Err(invalid("snapshots disagree on component count"));
            }
        }
        let mut traj = Self {
            grid: first.grid().clone(),
            nu,
            dt,
            snapshots,
            blown_up_at: None,
            meta: TrajectoryMeta::default(),
        };
        if let Some(k) = traj.snapshots.iter().position(|s| !s.is_finite()) {
            if k == 0 {
                return Err(Error::NonFinite { component: 0 });
            }
            traj.blown_up_at = Some(k as f64 * dt);
            traj.snapshots.truncate(k);
        }
        Ok(traj)
    }

    pub(crate) fn mark_blown_up(&mut self, t: f64) {
        self.blown_up_at = Some(t);
    }

    pub fn with_meta(mut self, meta: TrajectoryMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of snapshots (`N + 1` for `N` steps).
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn num_components(&self) -> usize {
        self.snapshots[0].num_components()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn snapshot(&self, k: usize) -> &Field {
        &self.snapshots[k]
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectory is nonempty")
    }

    pub fn blown_up_at(&self) -> Option<f64> {
        self.blown_up_at
    }

    pub fn is_blown_up(&self) -> bool {
        self.blown_up_at.is_some()
    }

    /// Snapshot index nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.len() - 1)
    }

    fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let s = (t / self.dt).clamp(0.0, (self.len() - 1) as f64);
        let k = (s.floor() as usize).min(self.len() - 1);
        if k + 1 >= self.len() {
            (k, k, 0.0)
        } else {
            (k, k + 1, s - k as f64)
        }
    }

    /// Field at time `t`, linear in time between snapshots.
    pub fn at_time(&self, t: f64) -> Field {
        let (a, b, w) = self.bracket(t);
        if w == 0.0 {
            self.snapshots[a].clone()
        } else {
            self.snapshots[a]
                .lincomb(1.0 - w, w, &self.snapshots[b])
                .expect("snapshots share a grid")
        }
    }

    /// Writes `u(t, x)` into `out`, linear in time and `mode` in space.
    pub fn eval_point(&self, t: f64, x: &[f64], mode: Interpolation, out: &mut [f64]) {
        let (a, b, w) = self.bracket(t);
        let eval = |f: &Field, buf: &mut [f64]| match mode {
            Interpolation::Spectral => eval_spectral(f, x, buf),
            Interpolation::Linear => eval_linear(f, x, buf),
        };
        eval(&self.snapshots[a], out);
        if w > 0.0 {
            let mut tmp = vec![0.0; out.len()];
            eval(&self.snapshots[b], &mut tmp);
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o = (1.0 - w) * *o + w * v;
            }
        }
    }

    /// Every `stride`-th snapshot, i.e. the same run seen with step `stride·dt`.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(invalid("stride must be ≥ 1"));
        }
        let snaps = self.snapshots.iter().step_by(stride).cloned().collect();
        let mut t = Trajectory::new(self.nu, self.dt * stride as f64, snaps)?;
        t.meta = self.meta.clone();
        Ok(t)
    }

    /// Snapshots restricted to the first `count` entries.
    pub fn truncated(&self, count: usize) -> Self {
        let mut t = self.clone();
        t.snapshots.truncate(count.max(1));
        t
    }

    /// Applies `f` to every snapshot.
    pub fn map_snapshots<F: Fn(usize, &Field) -> Field>(&self, f: F) -> Result<Self> {
        let snaps = self
            .snapshots
            .iter()
            .enumerate()
            .map(|(k, s)| f(k, s))
            .collect();
        let mut t = Trajectory::new(self.nu, self.dt, snaps)?;
        t.meta = self.meta.clone();
        Ok(t)
    }

    /// Multiplies every snapshot by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.map_snapshots(|_, s| s.scaled(factor))
            .expect("scaling keeps the shape")
    }

    /// Snapshot-wise difference on a common time grid.
    pub fn difference(&self, other: &Trajectory) -> Result<Self> {
        if self.len() != other.len() || (self.dt - other.dt).abs() > 1e-14 * self.dt {
            return Err(invalid("trajectories have different time grids"));
        }
        let snaps = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.nu, self.dt, snaps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(g: &TorusGrid, steps: usize) -> Trajectory {
        let snaps = (0..=steps)
            .map(|k| Field::scalar_from_fn(g, |_| k as f64))
            .collect();
        Trajectory::new(0.1, 0.5, snaps).unwrap()
    }

    #[test]
    fn truncates_at_first_non_finite_snapshot() {
        let g = TorusGrid::new(1, 8).unwrap();
        let mut snaps: Vec<Field> = (0..5).map(|_| Field::zeros(&g, 1)).collect();
        snaps[3] = snaps[3].map(|_| f64::NAN);
        let t = Trajectory::new(1.0, 0.1, snaps).unwrap();
        assert_eq!(t.len(), 3);
        assert!((t.blown_up_at().unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn time_interpolation() {
        let g = TorusGrid::new(1, 8).unwrap();
        let t = ramp(&g, 4);
        assert_eq!(t.end_time(), 2.0);
        assert!((t.at_time(0.75).component(0)[2] - 1.5).abs() < 1e-15);
        let mut out = [0.0];
        t.eval_point(1.25, &[1.0], Interpolation::Linear, &mut out);
        assert!((out[0] - 2.5).abs() < 1e-14);
        assert_eq!(t.at_time(10.0).component(0)[0], 4.0);
    }

    #[test]
    fn subsample_doubles_step() {
        let g = TorusGrid::new(1, 8).unwrap();
        let t = ramp(&g, 4).subsample(2).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.dt(), 1.0);
        assert_eq!(t.snapshot(2).component(0)[0], 4.0);
    }
}
