use serde::{Deserialize, Serialize};

use crate::couplings::lrb_exponent;
use crate::dynamics::validate_time_grid;
use crate::error::{invalid, Error, Result};
use crate::lattice::Region;
use crate::probes::density::density_window;
use crate::probes::moments::{envelope_report, Side};
use crate::probes::report::midpoint_split;
use crate::system::System;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusParams {
    pub xi: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: u32,
    pub speed: f64,
    /// Decay exponent used for `beta = floor(alpha - 3 d - 1)`.
    pub alpha: f64,
}

/// `sup_{s <= t} <N^p_{gamma1, xi}>_s <= C (<N^p_{gamma2, xi}>_0 + [(gamma2 - gamma1) xi]^{-beta} lambda^p)`
/// with `lambda` the measured density ceiling of the initial state.
///
/// `C = 1` is tried first; otherwise the smallest `C` on `t <= T/2` is fitted.
pub fn annulus_mvb(sys: &System, x: &Region, params: &AnnulusParams, times: &[f64]) -> Result<crate::probes::BoundReport> {
    validate_time_grid(times)?;
    let AnnulusParams {
        xi,
        gamma1,
        gamma2,
        p,
        speed,
        alpha,
    } = *params;
    if !(0.0 <= gamma1 && gamma1 < gamma2 && gamma2 <= 1.0) {
        return Err(Error::Geometry(format!(
            "need 1 >= gamma2 > gamma1 >= 0, got gamma1 = {gamma1}, gamma2 = {gamma2}"
        )));
    }
    let width = gamma2 - gamma1;
    if !(xi * width > 1.0) {
        return Err(Error::Geometry(format!(
            "need xi > 1 / (gamma2 - gamma1) = {}, got {xi}",
            1.0 / width
        )));
    }
    if !(speed > 0.0) {
        return Err(invalid("v", format!("must be positive, got {speed}")));
    }
    if p == 0 {
        return Err(invalid("p", "must be a positive integer"));
    }
    if let Some(t) = times.iter().find(|&&t| speed * t >= width * xi) {
        return Err(Error::TimeGrid(format!(
            "t = {t} is not below (gamma2 - gamma1) xi / v = {}",
            width * xi / speed
        )));
    }
    sys.basis.check_region(x)?;
    if x.is_empty() {
        return Err(Error::EmptyRegion("annulus base region"));
    }
    let (inner, outer) = x.annulus(xi, gamma1, gamma2)?;
    let (inner, outer) = (inner.mask(), outer.mask());
    let lat = sys.lattice();
    let beta = lrb_exponent(alpha, lat.dim());
    let lambda = density_window(&sys.initial, p, &[])?.lambda2;
    let tail = (width * xi).powf(-beta) * lambda.powi(p as i32);
    let base = sys.initial.region_moment(&outer, p) + tail;

    let mut sup = f64::NEG_INFINITY;
    let lhs: Vec<f64> = sys
        .states(times)?
        .iter()
        .map(|s| {
            sup = sup.max(s.region_moment(&inner, p));
            sup
        })
        .collect();
    let (fit, val) = midpoint_split(times);
    // envelope (1 + c) base, so c = 0 is C = 1
    let gaps: Vec<f64> = fit
        .clone()
        .map(|k| {
            if base > 0.0 {
                lhs[k] / base - 1.0
            } else if lhs[k] > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut r = envelope_report(
        "annulus_mvb",
        times,
        &lhs,
        |c| vec![(1.0 + c) * base; times.len()],
        Side::Upper,
        &gaps,
        (fit, val),
    );
    if let Some(c) = r.fitted_constants.get_mut("C") {
        *c += 1.0;
    }
    r.config_hash = sys.config_hash.clone();
    for (k, v) in [
        ("xi", xi),
        ("gamma1", gamma1),
        ("gamma2", gamma2),
        ("p", f64::from(p)),
        ("v", speed),
        ("beta", beta),
        ("lambda", lambda),
        ("tail", tail),
    ] {
        r.diagnostics.insert(k.into(), v);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{power_law_couplings, CouplingKind, CouplingMatrix};
    use crate::dynamics::PropagatorOptions;
    use crate::fock::{FockBasis, HamiltonianSpec, QuantumState, Sector};
    use crate::lattice::Lattice;
    use crate::probes::Verdict;

    fn params(xi: f64) -> AnnulusParams {
        AnnulusParams {
            xi,
            gamma1: 0.0,
            gamma2: 0.5,
            p: 1,
            speed: 2.0,
            alpha: 6.0,
        }
    }

    #[test]
    fn frozen_empty_annulus_holds() {
        let l = Lattice::chain(9).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(1)).unwrap();
        let j = CouplingMatrix::zeros(&l, CouplingKind::Hopping);
        let psi = QuantumState::basis_vector(&b, &[1, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let sys = System::new(&b, HamiltonianSpec::new(j, None), psi, PropagatorOptions::default()).unwrap();
        let x = l.region([0]).unwrap();
        let r = annulus_mvb(&sys, &x, &params(4.0), &[0.0, 0.25, 0.5]).unwrap();
        assert_eq!(r.lhs, vec![0.0; 3]);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn geometry_preconditions() {
        let l = Lattice::chain(9).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(1)).unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, 6.0, 1.0, None).unwrap();
        let psi = QuantumState::basis_vector(&b, &[1, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let sys = System::new(&b, HamiltonianSpec::new(j, None), psi, PropagatorOptions::default()).unwrap();
        let x = l.region([0]).unwrap();
        assert!(matches!(annulus_mvb(&sys, &x, &params(1.5), &[0.0]), Err(Error::Geometry(_))));
        let mut bad = params(4.0);
        bad.gamma1 = 0.6;
        assert!(matches!(annulus_mvb(&sys, &x, &bad, &[0.0]), Err(Error::Geometry(_))));
        assert!(matches!(annulus_mvb(&sys, &x, &params(4.0), &[0.0, 1.0]), Err(Error::TimeGrid(_))));
        let r = annulus_mvb(&sys, &x, &params(4.0), &[0.0, 0.2, 0.4, 0.6, 0.8]).unwrap();
        assert!(r.verdict.passed());
        // at t = 0 the inner annulus sits inside the outer one
        assert!(r.lhs[0] <= r.rhs[0]);
    }
}
