use serde::{Deserialize, Serialize};

use crate::astlo::cutoff::CutoffFunction;
use crate::astlo::schedule::{Level, MultiscaleSchedule};
use crate::error::{invalid, Error, Result};
use crate::fock::{FockBasis, QuantumState, SparseOperator};
use crate::lattice::Lattice;

/// Which moving cutoff is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    /// `f((R - v' t - |x|) / s)`, shrinking from the outer radius.
    Minus,
    /// `f(((R + 2 r) / 3 + v' t - |x|) / s)`, growing from inside.
    Plus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Minus, Sign::Plus];

    pub fn label(&self) -> &'static str {
        match self {
            Sign::Minus => "minus",
            Sign::Plus => "plus",
        }
    }
}

/// Argument of the cutoff at distance `dist` from the centre.
pub fn cutoff_argument(level: &Level, mid_speed: f64, sign: Sign, t: f64, dist: f64) -> f64 {
    let front = match sign {
        Sign::Minus => level.outer - mid_speed * t,
        Sign::Plus => (level.outer + 2.0 * level.inner) / 3.0 + mid_speed * t,
    };
    (front - dist) / level.adiabatic
}

/// Per-site weights `f_sign(|x|_{t,l})` with `|x|` measured from `center`.
pub fn astlo_weights(
    lattice: &Lattice,
    schedule: &MultiscaleSchedule,
    level: usize,
    cutoff: &CutoffFunction,
    sign: Sign,
    t: f64,
    center: &[f64],
) -> Result<Vec<f64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("must be nonnegative and finite, got {t}")));
    }
    if (cutoff.omega() - schedule.omega).abs() > 1e-12 * schedule.omega {
        return Err(invalid(
            "cutoff",
            format!(
                "cutoff omega {} differs from the schedule's v - v' = {}",
                cutoff.omega(),
                schedule.omega
            ),
        ));
    }
    if center.len() != lattice.dim() {
        return Err(Error::Geometry(format!(
            "centre has {} coordinates, lattice dimension is {}",
            center.len(),
            lattice.dim()
        )));
    }
    let lv = schedule.level(level)?;
    Ok((0..lattice.n_sites())
        .map(|x| {
            let d = lattice.distance_to_point(x, center);
            cutoff.f(cutoff_argument(lv, schedule.mid_speed, sign, t, d))
        })
        .collect())
}

/// Diagonal observable `sum_x f_sign(|x|_{t,l}) n_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AstloObservable {
    pub level: Level,
    pub sign: Sign,
    pub time: f64,
    pub weights: Vec<f64>,
    pub operator: SparseOperator,
}

impl AstloObservable {
    /// `<psi, N_f psi>` from site densities.
    pub fn expectation(&self, psi: &QuantumState) -> f64 {
        weighted_density(&self.weights, &psi.site_densities())
    }
}

pub(crate) fn weighted_density(weights: &[f64], densities: &[f64]) -> f64 {
    weights.iter().zip(densities).map(|(w, n)| w * n).sum()
}

#[allow(clippy::too_many_arguments)]
pub fn astlo_operator(
    basis: &FockBasis,
    schedule: &MultiscaleSchedule,
    level: usize,
    cutoff: &CutoffFunction,
    sign: Sign,
    t: f64,
    center: &[f64],
) -> Result<AstloObservable> {
    let weights = astlo_weights(basis.lattice(), schedule, level, cutoff, sign, t, center)?;
    let diag = (0..basis.dim())
        .map(|k| {
            basis
                .state(k)
                .iter()
                .zip(&weights)
                .map(|(&n, w)| w * f64::from(n))
                .sum()
        })
        .collect();
    Ok(AstloObservable {
        level: *schedule.level(level)?,
        sign,
        time: t,
        weights,
        operator: SparseOperator::diagonal(basis, diag)?,
    })
}
