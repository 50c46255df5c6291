//! Error signals extracted from a trajectory log, and exponential decay fits.

use crate::error::{Error, Result};
use crate::formation::RobotId;
use crate::simulation::{Scenario, TrajectoryLog};

/// Samples below this magnitude are treated as converged and dropped from fits.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;
pub const MIN_FIT_POINTS: usize = 10;

/// Error channels for one robot, sampled at every log record where it is active.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RobotErrors {
    pub id: RobotId,
    pub times: Vec<f64>,
    /// `rho* - rho`.
    pub rho: Vec<f64>,
    /// `omega* - phi'`, with `phi'` from central differences of the continuous angle.
    pub omega: Vec<f64>,
    /// `z* - z`.
    pub z: Vec<f64>,
    /// `Delta - f`, radians.
    pub spacing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorSeries {
    pub robots: Vec<RobotErrors>,
    /// Times at which some utility switched, i.e. segment boundaries.
    pub boundaries: Vec<f64>,
}

impl ErrorSeries {
    pub fn robot(&self, id: RobotId) -> Option<&RobotErrors> {
        self.robots.iter().find(|r| r.id == id)
    }

    /// Constant-utility segments `[start, end)` covering `[0, duration]`.
    pub fn segments(&self, duration: f64) -> Vec<(f64, f64)> {
        let mut edges = vec![0.0];
        edges.extend(self.boundaries.iter().copied().filter(|&t| t > 0.0 && t < duration));
        edges.push(duration);
        edges.dedup();
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Central-difference derivative; one-sided at the ends.
pub fn differentiate(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

pub fn error_series(log: &TrajectoryLog, scenario: &Scenario) -> ErrorSeries {
    let mut robots: Vec<RobotErrors> = (0..scenario.robots.len())
        .map(|i| RobotErrors {
            id: RobotId(i),
            ..RobotErrors::default()
        })
        .collect();
    let mut angles: Vec<Vec<f64>> = vec![Vec::new(); robots.len()];
    let sp = &scenario.setpoints;
    for record in &log.records {
        for r in &record.robots {
            let e = &mut robots[r.id.0];
            e.times.push(record.time);
            e.rho.push(sp.rho_star - r.rho);
            e.z.push(scenario.z_star(r.id) - r.z);
            e.spacing.push(r.delta - r.desired_delta);
            angles[r.id.0].push(r.phi);
        }
    }
    let boundaries = switch_boundaries(log);
    for (e, phi) in robots.iter_mut().zip(&angles) {
        e.omega = differentiate_by_segment(&e.times, phi, &boundaries)
            .into_iter()
            .map(|rate| sp.omega_star - rate)
            .collect();
    }
    robots.retain(|e| !e.times.is_empty());
    ErrorSeries { robots, boundaries }
}

fn switch_boundaries(log: &TrajectoryLog) -> Vec<f64> {
    let mut times: Vec<f64> = log.events.iter().map(|e| e.time).filter(|&t| t > 0.0).collect();
    times.dedup();
    times
}

/// Differentiates each constant-utility piece separately, so the rate jump at
/// a switch does not smear across it. Gaps in activity also split pieces.
fn differentiate_by_segment(times: &[f64], values: &[f64], boundaries: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut start = 0;
    for i in 1..=times.len() {
        let split = i == times.len()
            || boundaries.iter().any(|&b| times[i - 1] < b && times[i] >= b);
        if split {
            out.extend(differentiate(&times[start..i], &values[start..i]));
            start = i;
        }
    }
    out
}

/// Least-squares slope of `ln|e|` over `window`, negated: the exponential
/// decay rate of `e`. Samples below [`MAGNITUDE_FLOOR`] are skipped.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    let points: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|&(&t, &v)| t >= window.0 && t <= window.1 && v.abs() > MAGNITUDE_FLOOR)
        .map(|(&t, &v)| (t, v.abs().ln()))
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            usable: points.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - t_mean) * (p.1 - y_mean)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData {
            usable: 1,
            required: MIN_FIT_POINTS,
        });
    }
    Ok(-sxy / sxx)
}
