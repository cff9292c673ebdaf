use crate::error::{invalid, Result};
use crate::fock::{QuantumState, Sector};
use crate::lattice::Region;
use crate::probes::report::{BoundReport, Verdict, EXACT_TOL};
use crate::system::System;

/// Splits `psi_t` at each particle cap `N0` of `ladder` and checks
/// `<N_X^p>_t = <psi^<=, N_X^p psi^<=> + <psi^>, N_X^p psi^>>`.
///
/// The report has one sample per cap with `lhs = <psi^<=, N_X^p psi^<=>` and
/// `rhs = <N_X^p>_t`. It fails if the cross term or the decomposition error
/// exceed `1e-12 max(1, <N_X^p>_t)`, or if `lhs` decreases along the ladder.
pub fn truncation_consistency(sys: &System, ladder: &[usize], x: &Region, p: u32, t: f64) -> Result<BoundReport> {
    const NAME: &str = "truncation_consistency";
    let Sector::Truncated(cap) = sys.basis.sector() else {
        return Ok(BoundReport::inapplicable(NAME, "basis is not a truncated sector").with_hash(sys.config_hash.clone()));
    };
    if ladder.is_empty() {
        return Err(invalid("ladder", "need at least one particle cap"));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("ladder", "caps must increase strictly"));
    }
    if p == 0 {
        return Err(invalid("p", "must be a positive integer"));
    }
    sys.basis.check_region(x)?;
    let mask = x.mask();
    let basis = &sys.basis;
    let moment = |k: usize| (basis.count_in(k, &mask) as f64).powi(p as i32);
    let psi = sys.propagator.evolve(&sys.initial, t)?;
    let full = psi.diagonal_expectation(moment);
    let tol = EXACT_TOL * full.max(1.0);

    let mut lhs = Vec::with_capacity(ladder.len());
    let mut cross = 0.0f64;
    let mut decomposition = 0.0f64;
    let mut commutation = 0.0f64;
    for &n0 in ladder {
        let low = psi.project_particles(|n| n <= n0);
        let high = psi.project_particles(|n| n > n0);
        let lo = low.diagonal_expectation(moment);
        let hi = high.diagonal_expectation(moment);
        cross = cross.max(2.0 * cross_term(&low, &high, moment).abs());
        decomposition = decomposition.max((full - lo - hi).abs());
        // projecting before or after evolving gives the same block
        let evolved = sys
            .propagator
            .evolve(&sys.initial.project_particles(|n| n <= n0), t)?;
        commutation = commutation.max(evolved.distance(&low)?);
        lhs.push(lo);
    }
    let caps: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    let mut r = BoundReport::new(NAME, caps, lhs, vec![full; ladder.len()], tol);
    let monotone = r.lhs.windows(2).all(|w| w[1] >= w[0] - tol);
    if cross > tol || decomposition > tol || !monotone {
        r.verdict = Verdict::Violated;
    }
    if ladder.last().is_some_and(|&n| n >= cap) && (r.lhs[ladder.len() - 1] - full).abs() > tol {
        r.verdict = Verdict::Violated;
        r.notes.push("top cap does not reproduce the full expectation".into());
    }
    r.config_hash = sys.config_hash.clone();
    r.diagnostics.insert("cross_term".into(), cross);
    r.diagnostics.insert("decomposition_error".into(), decomposition);
    r.diagnostics.insert("projection_commutation".into(), commutation);
    r.diagnostics.insert("t".into(), t);
    r.diagnostics.insert("p".into(), f64::from(p));
    r.diagnostics.insert("monotone".into(), if monotone { 1.0 } else { 0.0 });
    r.notes.push("samples are indexed by the particle cap N0".into());
    Ok(r)
}

fn cross_term(low: &QuantumState, high: &QuantumState, moment: impl Fn(usize) -> f64) -> f64 {
    low.amplitudes()
        .iter()
        .zip(high.amplitudes())
        .enumerate()
        .map(|(k, (l, h))| (l.conj() * h).re * moment(k))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{power_law_couplings, CouplingKind};
    use crate::dynamics::PropagatorOptions;
    use crate::fock::{FockBasis, HamiltonianSpec};
    use crate::lattice::Lattice;
    use num_complex::Complex64;

    fn system(seed: f64) -> System {
        let l = Lattice::chain(4).unwrap();
        let b = FockBasis::new(&l, Sector::Truncated(3)).unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, 2.5, 1.0, None).unwrap();
        let v = power_law_couplings(&l, CouplingKind::Interaction, 3.0, 0.5, None).unwrap();
        let amps = (0..b.dim())
            .map(|k| Complex64::new((seed * k as f64).sin(), (seed + k as f64).cos()))
            .collect();
        let psi = QuantumState::new(&b, amps).unwrap().normalized().unwrap();
        System::new(&b, HamiltonianSpec::new(j, Some(v)), psi, PropagatorOptions::default()).unwrap()
    }

    #[test]
    fn block_sums_reproduce_the_full_moment() {
        let sys = system(0.7);
        let x = sys.lattice().region([0, 1]).unwrap();
        let r = truncation_consistency(&sys, &[1, 2, 3], &x, 2, 0.8).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.diagnostics["decomposition_error"] < 1e-12);
        assert!(r.diagnostics["projection_commutation"] < 1e-9);
        assert!((r.lhs[2] - r.rhs[2]).abs() < 1e-12);
    }

    #[test]
    fn low_block_state_has_no_high_part() {
        let l = Lattice::chain(3).unwrap();
        let b = FockBasis::new(&l, Sector::Truncated(3)).unwrap();
        let psi = QuantumState::basis_vector(&b, &[1, 0, 0]).unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, 2.5, 1.0, None).unwrap();
        let sys = System::new(&b, HamiltonianSpec::new(j, None), psi, PropagatorOptions::default()).unwrap();
        let x = l.region([0]).unwrap();
        let r = truncation_consistency(&sys, &[1, 2], &x, 1, 0.5).unwrap();
        assert_eq!(r.lhs[0], r.rhs[0]);
        assert_eq!(r.verdict, Verdict::Holds);
    }
}
