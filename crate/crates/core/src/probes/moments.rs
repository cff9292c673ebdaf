use serde::{Deserialize, Serialize};

use crate::dynamics::validate_time_grid;
use crate::error::{invalid, Error, Result};
use crate::probes::density::{density_window, DensityWindow};
use crate::probes::report::{midpoint_split, min_gap, minimal_constant, BoundReport, Verdict, FIT_TOL};
use crate::system::System;

/// Radii, speed and moment order of one propagation-bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentParams {
    pub outer: f64,
    pub inner: f64,
    pub speed: f64,
    pub p: u32,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReports {
    /// `<N^p_{B_r}>_t <= <N^p_{B_R}>_0 exp(C / R^d + v t / (R - r))`.
    pub upper: BoundReport,
    /// `<N^p_{B_R}>_t >= <N^p_{B_r}>_0 exp(-(C / R^d + v t / (R - r)))`,
    /// stored as `lhs` = bound, `rhs` = moment.
    pub lower: BoundReport,
    pub density: DensityWindow,
}

/// Evaluates both moment envelopes on `times`.
///
/// Without fitting (`C = 0`) a passing envelope is reported as holding.
/// Otherwise `C` is the smallest nonnegative constant that makes the envelope
/// hold in log space on `t <= T/2`, and the remaining times validate it.
pub fn check_moment_bounds(sys: &System, params: &MomentParams, times: &[f64]) -> Result<MomentReports> {
    validate_time_grid(times)?;
    let MomentParams {
        outer,
        inner,
        speed,
        p,
        ref center,
    } = *params;
    if !(outer > inner && inner > 0.0) {
        return Err(invalid("R", format!("need R > r > 0, got R = {outer}, r = {inner}")));
    }
    if !(speed > 0.0) {
        return Err(invalid("v", format!("must be positive, got {speed}")));
    }
    if p == 0 {
        return Err(invalid("p", "must be a positive integer"));
    }
    let gap = outer - inner;
    if let Some(t) = times.iter().find(|&&t| speed * t > gap * (1.0 + 1e-12)) {
        return Err(Error::TimeGrid(format!(
            "v t = {} exceeds R - r = {gap} at t = {t}",
            speed * t
        )));
    }
    let lat = sys.lattice();
    let density = density_window(&sys.initial, p, &[inner, outer])?;
    if !density.feasible() {
        let reason = "initial state has no positive density floor";
        return Ok(MomentReports {
            upper: BoundReport::inapplicable("moment_upper", reason).with_hash(sys.config_hash.clone()),
            lower: BoundReport::inapplicable("moment_lower", reason).with_hash(sys.config_hash.clone()),
            density,
        });
    }
    let small = lat.ball(center, inner)?.mask();
    let big = lat.ball(center, outer)?.mask();
    let states = sys.states(times)?;
    let small_t: Vec<f64> = states.iter().map(|s| s.region_moment(&small, p)).collect();
    let big_t: Vec<f64> = states.iter().map(|s| s.region_moment(&big, p)).collect();
    let growth: Vec<f64> = times.iter().map(|t| speed * t / gap).collect();
    let vol = outer.powi(lat.dim() as i32);
    let (fit, val) = midpoint_split(times);

    // upper: log lhs <= log A0 + C / R^d + growth
    let a0 = big_t[0];
    let upper_gaps: Vec<f64> = fit
        .clone()
        .map(|k| nan_to_neg_inf(vol * (small_t[k].ln() - a0.ln() - growth[k])))
        .collect();
    let mut upper = envelope_report(
        "moment_upper",
        times,
        &small_t,
        |c| growth.iter().map(|g| a0 * (c / vol + g).exp()).collect(),
        Side::Upper,
        &upper_gaps,
        (fit.clone(), val.clone()),
    );

    // lower: B0 exp(-(C / R^d + growth)) <= moment
    let b0 = small_t[0];
    let lower_gaps: Vec<f64> = fit
        .clone()
        .map(|k| nan_to_neg_inf(vol * (b0.ln() - growth[k] - big_t[k].ln())))
        .collect();
    let mut lower = envelope_report(
        "moment_lower",
        times,
        &big_t,
        |c| growth.iter().map(|g| b0 * (-(c / vol + g)).exp()).collect(),
        Side::Lower,
        &lower_gaps,
        (fit, val),
    );

    for r in [&mut upper, &mut lower] {
        r.config_hash = sys.config_hash.clone();
        r.diagnostics.insert("R".into(), outer);
        r.diagnostics.insert("r".into(), inner);
        r.diagnostics.insert("v".into(), speed);
        r.diagnostics.insert("p".into(), f64::from(p));
        r.diagnostics.insert("lambda1".into(), density.lambda1);
        r.diagnostics.insert("lambda2".into(), density.lambda2);
    }
    Ok(MomentReports { upper, lower, density })
}

fn nan_to_neg_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// Which side of the inequality the fitted envelope sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// `observed <= envelope`.
    Upper,
    /// `envelope <= observed`.
    Lower,
}

/// Report for `observed` against a one-constant envelope. `gaps` are the
/// per-sample lower limits on the constant over the fit window.
pub(crate) fn envelope_report(
    name: &str,
    times: &[f64],
    observed: &[f64],
    envelope: impl Fn(f64) -> Vec<f64>,
    side: Side,
    gaps: &[f64],
    (fit, val): (std::ops::Range<usize>, std::ops::Range<usize>),
) -> BoundReport {
    let sides = |c: f64| match side {
        Side::Upper => (observed.to_vec(), envelope(c)),
        Side::Lower => (envelope(c), observed.to_vec()),
    };
    let (lhs, rhs) = sides(0.0);
    let mut r = BoundReport::new(name, times.to_vec(), lhs, rhs, FIT_TOL);
    if r.verdict == Verdict::Holds {
        r.fitted_constants.insert("C".into(), 0.0);
        return r;
    }
    if fit.is_empty() {
        r.notes.push("no samples in the fit window".into());
        return r;
    }
    r.fit_window = Some([times[fit.start], times[fit.end - 1]]);
    let Some(c) = minimal_constant(gaps.iter().copied()) else {
        r.notes.push("no finite constant fits the first half of the grid".into());
        return r;
    };
    let (lhs, rhs) = sides(c);
    r.lhs = lhs;
    r.rhs = rhs;
    r.fitted_constants.insert("C".into(), c);
    r.margin = min_gap(&r.lhs, &r.rhs, 0..r.lhs.len());
    let vm = min_gap(&r.lhs, &r.rhs, val.clone());
    r.validation_margin = Some(vm);
    r.verdict = if vm >= -r.tolerance {
        Verdict::FittedHolds
    } else {
        Verdict::Violated
    };
    r.notes.push(format!(
        "C is the minimal log-space envelope constant on t in [{}, {}]; validated on the remaining {} samples",
        times[fit.start],
        times[fit.end - 1],
        val.len()
    ));
    r
}
