//! Time grids starting at `t = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for matching a requested time to a grid point.
const MATCH_TOL: f64 = 1e-12;

/// Strictly ascending times with `t_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.first() != Some(&0.0) {
            return Err(Error::Grid("grid must start at t = 0".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::Grid("grid has non-finite times".into()));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Grid(format!("grid not strictly ascending at {} -> {}", w[0], w[1])));
        }
        Ok(Self(points))
    }

    /// `cells` equal cells on `[0, t_max]`.
    pub fn uniform(t_max: f64, cells: usize) -> Result<Self> {
        if !(t_max > 0.0) || cells == 0 {
            return Err(Error::Grid(format!("uniform grid needs t_max > 0 and cells > 0, got {t_max}, {cells}")));
        }
        let mut pts: Vec<f64> = (0..=cells).map(|i| t_max * i as f64 / cells as f64).collect();
        pts[cells] = t_max;
        Self::new(pts)
    }

    /// Grid on `[0, t]` containing every pulse boundary `j t / n`.
    ///
    /// Each pulse interval has `cells_per_interval` cells; in the first one the
    /// points are square-spaced, `(j/J)² t/n`, so that cells shrink where the
    /// generator of a dissipative dilation diverges like `t^{-1/2}`.
    pub fn pulse_aligned(t: f64, n: usize, cells_per_interval: usize) -> Result<Self> {
        if !(t > 0.0) || n == 0 || cells_per_interval == 0 {
            return Err(Error::Grid(format!(
                "pulse-aligned grid needs t > 0, n > 0, cells > 0, got {t}, {n}, {cells_per_interval}"
            )));
        }
        let j_max = cells_per_interval;
        let dt = t / n as f64;
        let mut pts = Vec::with_capacity(n * j_max + 1);
        for j in 0..j_max {
            let r = j as f64 / j_max as f64;
            pts.push(r * r * dt);
        }
        for p in 1..n {
            let start = t * p as f64 / n as f64;
            for j in 0..j_max {
                pts.push(start + dt * j as f64 / j_max as f64);
            }
        }
        pts.push(t);
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.0.last().expect("grid is non-empty")
    }

    /// Index of the grid point equal to `t` up to a relative `1e-12`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let (i, dist) = self.nearest(t);
        (dist <= MATCH_TOL * self.t_max().max(1.0)).then_some(i)
    }

    /// Nearest grid index and its distance from `t`.
    pub fn nearest(&self, t: f64) -> (usize, f64) {
        let pos = self.0.partition_point(|&x| x < t);
        let candidates = [pos.saturating_sub(1), pos.min(self.0.len() - 1)];
        candidates
            .into_iter()
            .map(|i| (i, (self.0[i] - t).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("two candidates")
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_aligned_contains_boundaries() {
        let g = TimeGrid::pulse_aligned(1.0, 8, 4).unwrap();
        assert_eq!(g.len(), 8 * 4 + 1);
        for j in 0..=8 {
            assert!(g.index_of(j as f64 / 8.0).is_some(), "missing boundary {j}");
        }
        // square spacing in the first interval
        assert!((g.points()[1] - 1.0 / 16.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.2, 0.2]).is_err());
        assert!(TimeGrid::uniform(0.0, 3).is_err());
    }

    #[test]
    fn nearest_snaps() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        assert_eq!(g.nearest(0.34).0, 3);
        assert_eq!(g.nearest(7.0).0, 10);
        assert_eq!(g.nearest(-1.0).0, 0);
        assert_eq!(g.index_of(0.3), Some(3));
        assert_eq!(g.index_of(0.31), None);
    }
}
