use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::propagator::Propagator;
use crate::error::{Error, Result};
use crate::fock::{QuantumState, SparseOperator};

/// Checks that `times` starts at 0 and increases strictly.
pub fn validate_time_grid(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::TimeGrid("time grid is empty".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::TimeGrid(format!("first time must be 0, got {t0}")))
        }
        _ => {}
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::TimeGrid(format!(
            "times must increase strictly ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `n + 1` equally spaced times on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::TimeGrid(format!(
            "need a positive horizon and step count, got {t_max} and {steps}"
        )));
    }
    Ok((0..=steps).map(|k| t_max * k as f64 / steps as f64).collect())
}

/// Expectation values of named observables on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub observables: Vec<String>,
    /// `values[o][k]` is observable `o` at `times[k]`.
    pub values: Vec<Vec<Complex64>>,
    pub config_hash: Option<String>,
}

impl Trajectory {
    pub fn series(&self, id: &str) -> Option<&[Complex64]> {
        let o = self.observables.iter().position(|s| s == id)?;
        Some(&self.values[o])
    }

    pub fn real_series(&self, id: &str) -> Option<Vec<f64>> {
        self.series(id).map(|v| v.iter().map(|z| z.re).collect())
    }

    /// CSV with header `time,observable_id,re,im`, rows ordered by time and
    /// then by observable, floats in 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,observable_id,re,im\n");
        for (k, t) in self.times.iter().enumerate() {
            for (o, id) in self.observables.iter().enumerate() {
                let z = self.values[o][k];
                let _ = writeln!(out, "{},{},{},{}", fmt_f64(*t), id, fmt_f64(z.re), fmt_f64(z.im));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Records `<psi_t, A psi_t>` for each labelled observable.
pub fn record(
    prop: &Propagator,
    observables: &[(String, &SparseOperator)],
    psi0: &QuantumState,
    times: &[f64],
) -> Result<Trajectory> {
    validate_time_grid(times)?;
    for (_, a) in observables {
        a.basis().check_same(psi0.basis())?;
    }
    let states = prop.evolve_many(psi0, times)?;
    let values = observables
        .iter()
        .map(|(_, a)| states.iter().map(|s| a.expectation(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: times.to_vec(),
        observables: observables.iter().map(|(id, _)| id.clone()).collect(),
        values,
        config_hash: None,
    })
}

/// `<alpha_t(A)>_0 = <psi_t, A psi_t>` on a time grid.
pub fn heisenberg_expectation(
    prop: &Propagator,
    a: &SparseOperator,
    psi0: &QuantumState,
    times: &[f64],
) -> Result<Trajectory> {
    record(prop, &[("A".to_string(), a)], psi0, times)
}
