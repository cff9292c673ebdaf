use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::lrb_exponent;
use crate::dynamics::{remainder_pairings, LocalizedPair, PropagatorOptions};
use crate::error::{invalid, Error, Result};
use crate::fock::{FockBasis, HamiltonianSpec, QuantumState, SparseOperator};
use crate::lattice::Region;
use crate::probes::moments::{envelope_report, Side};
use crate::probes::report::{midpoint_split, BoundReport, EXACT_TOL};

/// One separation in a scan: `B` supported in `y`, initial state with an
/// empty shell `X_{2 xi} \ X`.
#[derive(Debug, Clone)]
pub struct LrbPoint {
    pub xi: f64,
    pub y: Region,
    pub b: SparseOperator,
    pub psi0: QuantumState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrbSample {
    pub xi: f64,
    pub t: f64,
    pub commutator: Complex64,
    pub b_rem: Complex64,
    pub rem_b: Complex64,
    pub identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrbScan {
    pub alpha: f64,
    /// `floor(alpha - 3 d - 1)`.
    pub beta: f64,
    /// `alpha > 3 d + 1`.
    pub in_regime: bool,
    /// Samples ordered by `xi`, then by time.
    pub samples: Vec<LrbSample>,
    /// Least-squares slope of `log |commutator|` against `log xi` per time.
    pub slopes: Vec<(f64, Option<f64>)>,
    /// `|commutator| <= C |t| xi^{-beta}` with `C` fitted on `t <= T/2`.
    pub envelope: BoundReport,
}

impl LrbScan {
    pub fn magnitudes_at(&self, t: f64) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.t == t)
            .map(|s| (s.xi, s.commutator.norm()))
            .collect()
    }
}

/// Scans `|<[alpha_t(A), B]>_0|` and `|<B Rem_t(A)>_0|` over separations.
#[allow(clippy::too_many_arguments)]
pub fn lrb_scan(
    spec: &HamiltonianSpec,
    basis: &FockBasis,
    options: PropagatorOptions,
    x: &Region,
    a: &SparseOperator,
    points: &[LrbPoint],
    times: &[f64],
    alpha: f64,
    speed: f64,
) -> Result<LrbScan> {
    if points.is_empty() {
        return Err(invalid("points", "need at least one separation"));
    }
    if !(speed > 0.0) {
        return Err(invalid("v", format!("must be positive, got {speed}")));
    }
    for pt in points {
        if let Some(&t) = times.iter().find(|&&t| t.abs() * speed >= pt.xi) {
            return Err(Error::TimeGrid(format!(
                "|t| = {} is not below xi / v = {} for xi = {}",
                t.abs(),
                pt.xi / speed,
                pt.xi
            )));
        }
        let shell = x.fatten(2.0 * pt.xi)?.difference(x)?;
        let dens = pt.psi0.site_densities();
        if let Some(&site) = shell.members().iter().find(|&&s| dens[s] > 0.0) {
            return Err(Error::ShellPopulated {
                site,
                occupation: dens[site].round().clamp(1.0, 255.0) as u8,
            });
        }
    }
    let d = basis.lattice().dim();
    let beta = lrb_exponent(alpha, d);
    let per_point: Vec<Vec<LrbSample>> = points
        .par_iter()
        .map(|pt| {
            let pair = LocalizedPair::new(spec, basis, x, pt.xi, options)?;
            times
                .iter()
                .map(|&t| {
                    let r = remainder_pairings(&pair, a, x, &pt.b, &pt.y, pt.xi, t, &pt.psi0, EXACT_TOL)?;
                    Ok(LrbSample {
                        xi: pt.xi,
                        t,
                        commutator: r.commutator,
                        b_rem: r.b_rem,
                        rem_b: r.rem_b,
                        identity_residual: r.identity_residual,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<LrbSample> = per_point.into_iter().flatten().collect();

    let slopes = times
        .iter()
        .map(|&t| {
            let pts: Vec<(f64, f64)> = samples
                .iter()
                .filter(|s| s.t == t && s.commutator.norm() > 0.0)
                .map(|s| (s.xi.ln(), s.commutator.norm().ln()))
                .collect();
            (t, least_squares_slope(&pts))
        })
        .collect();

    // envelope over (t, xi) samples with t != 0, ordered by time
    let mut env: Vec<&LrbSample> = samples.iter().filter(|s| s.t != 0.0).collect();
    env.sort_by(|p, q| p.t.abs().total_cmp(&q.t.abs()).then(p.xi.total_cmp(&q.xi)));
    let env_t: Vec<f64> = env.iter().map(|s| s.t.abs()).collect();
    let observed: Vec<f64> = env.iter().map(|s| s.commutator.norm()).collect();
    let shape: Vec<f64> = env.iter().map(|s| s.t.abs() * s.xi.powf(-beta)).collect();
    let envelope = if env.is_empty() {
        BoundReport::inapplicable("lrb_envelope", "no samples with t != 0")
    } else {
        let (fit, val) = midpoint_split(&env_t);
        let gaps: Vec<f64> = fit.clone().map(|k| observed[k] / shape[k]).collect();
        envelope_report(
            "lrb_envelope",
            &env_t,
            &observed,
            |c| shape.iter().map(|s| c * s).collect(),
            Side::Upper,
            &gaps,
            (fit, val),
        )
    };
    Ok(LrbScan {
        alpha,
        beta,
        in_regime: alpha > 3.0 * d as f64 + 1.0,
        samples,
        slopes,
        envelope,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}
