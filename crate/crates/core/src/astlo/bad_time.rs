use serde::{Deserialize, Serialize};

use crate::astlo::cutoff::CutoffFunction;
use crate::astlo::observable::{astlo_weights, weighted_density, Sign};
use crate::astlo::schedule::MultiscaleSchedule;
use crate::dynamics::{validate_time_grid, Propagator};
use crate::error::{invalid, Result};
use crate::fock::QuantumState;

/// `<N_{f,t,l}>_t` on a time grid for one level and sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSeries {
    pub level: usize,
    pub sign: Sign,
    /// Inner radius `r_l` of the level.
    pub inner: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadTime {
    /// First grid time with `min ratio <= 1/e`; `None` stands for +infinity.
    pub t1: Option<f64>,
    /// Analytic lower bound `(R - r) / (3 v)`.
    pub floor: f64,
    /// `min over levels and signs of <N>_t / (lambda1 r_l^d)` per grid time.
    pub min_ratio: Vec<f64>,
}

impl BadTime {
    /// True unless `T_1` was observed strictly below the floor.
    pub fn respects_floor(&self) -> bool {
        self.t1.is_none_or(|t| t >= self.floor)
    }
}

/// First grid time at which some level's observable drops to
/// `lambda1 r_l^d / e` or below.
pub fn bad_time(
    times: &[f64],
    series: &[LevelSeries],
    lambda1: f64,
    dim: usize,
    floor: f64,
) -> Result<BadTime> {
    if !(lambda1 > 0.0) {
        return Err(invalid("lambda1", format!("must be positive, got {lambda1}")));
    }
    if series.is_empty() {
        return Err(invalid("series", "need at least one level"));
    }
    if let Some(s) = series.iter().find(|s| s.values.len() != times.len()) {
        return Err(invalid(
            "series",
            format!("level {} has {} samples for {} times", s.level, s.values.len(), times.len()),
        ));
    }
    let threshold = (-1.0f64).exp();
    let min_ratio: Vec<f64> = (0..times.len())
        .map(|k| {
            series
                .iter()
                .map(|s| s.values[k] / (lambda1 * s.inner.powi(dim as i32)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let t1 = min_ratio
        .iter()
        .position(|&r| r <= threshold)
        .map(|k| times[k]);
    Ok(BadTime {
        t1,
        floor,
        min_ratio,
    })
}

/// Simulates every level and sign of `schedule` and monitors the bad time.
pub fn monitor_bad_time(
    prop: &Propagator,
    psi0: &QuantumState,
    schedule: &MultiscaleSchedule,
    cutoff: &CutoffFunction,
    center: &[f64],
    lambda1: f64,
    times: &[f64],
) -> Result<(BadTime, Vec<LevelSeries>)> {
    validate_time_grid(times)?;
    let lattice = psi0.basis().lattice();
    let densities: Vec<Vec<f64>> = prop
        .evolve_many(psi0, times)?
        .iter()
        .map(QuantumState::site_densities)
        .collect();
    let mut series = Vec::new();
    for lv in &schedule.levels {
        for sign in Sign::BOTH {
            let values = times
                .iter()
                .zip(&densities)
                .map(|(&t, dens)| {
                    let w = astlo_weights(lattice, schedule, lv.index, cutoff, sign, t, center)?;
                    Ok(weighted_density(&w, dens))
                })
                .collect::<Result<Vec<_>>>()?;
            series.push(LevelSeries {
                level: lv.index,
                sign,
                inner: lv.inner,
                values,
            });
        }
    }
    let bt = bad_time(times, &series, lambda1, lattice.dim(), schedule.bad_time_floor())?;
    Ok((bt, series))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(level: usize, inner: f64, value: f64, n: usize) -> LevelSeries {
        LevelSeries {
            level,
            sign: Sign::Minus,
            inner,
            values: vec![value; n],
        }
    }

    #[test]
    fn constant_at_threshold_scale_never_triggers() {
        let times = [0.0, 0.5, 1.0];
        let lambda1 = 0.5;
        let s = [flat(0, 2.0, lambda1 * 2.0, 3), flat(1, 4.0, lambda1 * 4.0, 3)];
        let bt = bad_time(&times, &s, lambda1, 1, 0.1).unwrap();
        assert_eq!(bt.t1, None);
        assert!(bt.respects_floor());
    }

    #[test]
    fn low_start_triggers_at_zero() {
        let times = [0.0, 0.5];
        let s = [flat(0, 2.0, 0.3, 2)];
        let bt = bad_time(&times, &s, 0.5, 1, 0.1).unwrap();
        assert_eq!(bt.t1, Some(0.0));
        assert!(!bt.respects_floor());
        assert!(bad_time(&times, &s, 0.0, 1, 0.1).is_err());
    }
}
