//! Data-parallel helpers for per-grid-point work. With the `parallel`
//! feature (default) the maps fan out over a rayon thread pool; without it
//! they run sequentially with identical results.

/// Uniform time grid, inclusive of both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    /// Number of grid points (>= 2); the step count is `points - 1`.
    pub points: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("a time grid needs at least two points, got {points}")]
    TooFewPoints { points: usize },
    #[error("time grid bounds must satisfy t0 < t1, got {t0} .. {t1}")]
    EmptyInterval { t0: f64, t1: f64 },
    #[error("time grid bounds must be finite")]
    NonFinite,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, points: usize) -> Result<Self, GridError> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(GridError::NonFinite);
        }
        if points < 2 {
            return Err(GridError::TooFewPoints { points });
        }
        if t1 <= t0 {
            return Err(GridError::EmptyInterval { t0, t1 });
        }
        Ok(Self { t0, t1, points })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.points - 1) as f64
    }

    /// Time of grid point `i`; the endpoints are exact.
    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.t1
        } else {
            self.t0 + (self.t1 - self.t0) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.time(i)).collect()
    }
}

/// Apply `f` to every index in `0..n`, in parallel when the `parallel`
/// feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
