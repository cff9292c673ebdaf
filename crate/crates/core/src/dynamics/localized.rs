use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::propagator::{Propagator, PropagatorOptions};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, HamiltonianSpec, QuantumState, SparseOperator};
use crate::lattice::Region;

/// Tolerance of the support and identity checks.
pub const LOCALITY_TOL: f64 = 1e-12;

/// Checks that `a` conserves particle number and acts only on the modes in
/// `region`.
///
/// Every stored entry must leave occupations outside `region` unchanged
/// (the commutator with each such `n_x` vanishes), and its value must not
/// depend on those outside occupations: an entry present for one outside
/// configuration must appear with the same value for every other outside
/// configuration compatible with the basis.
pub fn check_support(a: &SparseOperator, region: &Region) -> Result<()> {
    let basis = a.basis();
    basis.check_region(region)?;
    if !a.conserves_particle_number() {
        return Err(Error::SupportViolation("operator does not conserve particle number".into()));
    }
    let mask = region.mask();
    let split = |k: usize| -> (Vec<u8>, Vec<u8>) {
        let occ = basis.state(k);
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        for (x, &n) in occ.iter().enumerate() {
            if mask[x] {
                inside.push(n);
            } else {
                outside.push(n);
            }
        }
        (inside, outside)
    };
    type Key = (Vec<u8>, Vec<u8>);
    let mut seen: BTreeMap<Key, (Complex64, BTreeSet<Vec<u8>>)> = BTreeMap::new();
    for (i, j, v) in a.entries() {
        let (in_i, out_i) = split(i);
        let (in_j, out_j) = split(j);
        if out_i != out_j {
            return Err(Error::SupportViolation(format!(
                "entry ({i}, {j}) changes occupations outside the region"
            )));
        }
        if v.norm() <= LOCALITY_TOL {
            continue;
        }
        let slot = seen.entry((in_i, in_j)).or_insert_with(|| (v, BTreeSet::new()));
        if (slot.0 - v).norm() > LOCALITY_TOL {
            return Err(Error::SupportViolation(format!(
                "entry ({i}, {j}) depends on occupations outside the region"
            )));
        }
        slot.1.insert(out_i);
    }
    if seen.is_empty() {
        return Ok(());
    }
    let outside_configs: BTreeSet<Vec<u8>> = (0..basis.dim()).map(|k| split(k).1).collect();
    let full_state = |inside: &[u8], outside: &[u8]| -> Vec<u8> {
        let (mut p, mut q) = (0, 0);
        mask.iter()
            .map(|&m| {
                if m {
                    p += 1;
                    inside[p - 1]
                } else {
                    q += 1;
                    outside[q - 1]
                }
            })
            .collect()
    };
    for ((in_i, in_j), (_, outs)) in &seen {
        for o in &outside_configs {
            if outs.contains(o) {
                continue;
            }
            let both = basis.index(&full_state(in_i, o)).is_some()
                && basis.index(&full_state(in_j, o)).is_some();
            if both {
                return Err(Error::SupportViolation(format!(
                    "matrix element {in_i:?} <- {in_j:?} is missing for outside occupations {o:?}"
                )));
            }
        }
    }
    Ok(())
}

/// `<psi, alpha_s^S(A) psi>` with `propagator_s` generated by `H_S`.
pub fn localized_heisenberg(
    propagator_s: &Propagator,
    a: &SparseOperator,
    support: &Region,
    psi: &QuantumState,
    s: f64,
) -> Result<Complex64> {
    check_support(a, support)?;
    let phi = propagator_s.evolve(psi, s)?;
    a.expectation(&phi)
}

/// `<phi, alpha_t(A) chi>` via the two evolved states.
pub fn heisenberg_pairing(
    prop: &Propagator,
    a: &SparseOperator,
    phi: &QuantumState,
    chi: &QuantumState,
    t: f64,
) -> Result<Complex64> {
    let phi_t = prop.evolve(phi, t)?;
    let chi_t = prop.evolve(chi, t)?;
    a.sandwich(&phi_t, &chi_t)
}

/// `<B Rem_t(A)>_0`, `<Rem_t(A) B>_0` and the commutators entering the
/// Lieb-Robinson identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderPairings {
    pub b_rem: Complex64,
    pub rem_b: Complex64,
    /// `<[alpha_t(A), B]>_0` from the full dynamics.
    pub commutator: Complex64,
    /// `<[alpha_t^{X_xi}(A), B]>_0`, zero for disjoint supports.
    pub localized_commutator: Complex64,
    /// `| commutator - (rem_b - b_rem) |`.
    pub identity_residual: f64,
}

/// Full and `X_xi`-localized propagators over one basis.
#[derive(Debug, Clone)]
pub struct LocalizedPair {
    pub full: Propagator,
    pub local: Propagator,
    pub fattened: Region,
}

impl LocalizedPair {
    pub fn new(
        spec: &HamiltonianSpec,
        basis: &FockBasis,
        region: &Region,
        xi: f64,
        options: PropagatorOptions,
    ) -> Result<Self> {
        let fattened = region.fatten(xi)?;
        let full = Propagator::new(spec.build(basis)?, options)?;
        let local = Propagator::new(spec.restrict(&fattened)?.build(basis)?, options)?;
        Ok(Self {
            full,
            local,
            fattened,
        })
    }
}

/// The remainder pairings without the separation check on `B`'s support.
pub fn rem_expectations(
    pair: &LocalizedPair,
    a: &SparseOperator,
    b: &SparseOperator,
    t: f64,
    psi0: &QuantumState,
) -> Result<RemainderPairings> {
    let full = &pair.full;
    let local = &pair.local;
    a.basis().check_same(psi0.basis())?;
    b.basis().check_same(psi0.basis())?;
    let bd_psi = b.apply_adjoint_state(psi0)?;
    let b_psi = b.apply(psi0)?;
    // <B alpha(A)> = <B^dag psi, alpha(A) psi>, <alpha(A) B> = <psi, alpha(A) B psi>
    let psi_t = full.evolve(psi0, t)?;
    let bd_t = full.evolve(&bd_psi, t)?;
    let b_t = full.evolve(&b_psi, t)?;
    let b_alpha = a.sandwich(&bd_t, &psi_t)?;
    let alpha_b = a.sandwich(&psi_t, &b_t)?;
    let psi_s = local.evolve(psi0, t)?;
    let bd_s = local.evolve(&bd_psi, t)?;
    let b_s = local.evolve(&b_psi, t)?;
    let b_alpha_s = a.sandwich(&bd_s, &psi_s)?;
    let alpha_s_b = a.sandwich(&psi_s, &b_s)?;
    let b_rem = b_alpha - b_alpha_s;
    let rem_b = alpha_b - alpha_s_b;
    let commutator = alpha_b - b_alpha;
    let localized_commutator = alpha_s_b - b_alpha_s;
    Ok(RemainderPairings {
        b_rem,
        rem_b,
        commutator,
        localized_commutator,
        identity_residual: (commutator - (rem_b - b_rem)).norm(),
    })
}

/// Remainder pairings for `A` supported in `X` and `B` supported in `Y`
/// with `dist(X, Y) >= 2 xi`. Fails if the identity
/// `<[alpha_t(A), B]> = <[Rem_t(A), B]>` is off by more than `tol`.
#[allow(clippy::too_many_arguments)]
pub fn remainder_pairings(
    pair: &LocalizedPair,
    a: &SparseOperator,
    x: &Region,
    b: &SparseOperator,
    y: &Region,
    xi: f64,
    t: f64,
    psi0: &QuantumState,
    tol: f64,
) -> Result<RemainderPairings> {
    if x.is_empty() {
        return Err(Error::EmptyRegion("support of A"));
    }
    if y.is_empty() {
        return Err(Error::EmptyRegion("support of B"));
    }
    let d = x.distance(y)?;
    if d < 2.0 * xi {
        return Err(Error::Geometry(format!(
            "dist(X, Y) = {d} is below 2 xi = {}",
            2.0 * xi
        )));
    }
    if pair.fattened != x.fatten(xi)? {
        return Err(Error::Geometry("localized propagator was built for another X_xi".into()));
    }
    check_support(a, x)?;
    check_support(b, y)?;
    let out = rem_expectations(pair, a, b, t, psi0)?;
    // the localized part commutes with B; what is left is the identity
    let scale = 1.0 + out.commutator.norm();
    if out.identity_residual > tol * scale || out.localized_commutator.norm() > tol * scale {
        return Err(Error::OperatorPrecondition(format!(
            "commutator identity failed: residual {:e}, localized commutator {:e}",
            out.identity_residual,
            out.localized_commutator.norm()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{power_law_couplings, CouplingKind};
    use crate::dynamics::propagator::Method;
    use crate::fock::{bond_hop, hop_term, site_number, Sector};
    use crate::lattice::Lattice;
    use nalgebra::DMatrix;

    fn chain_spec(len: usize, alpha: f64) -> (Lattice, HamiltonianSpec) {
        let l = Lattice::chain(len).unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, alpha, 1.0, None).unwrap();
        let v = power_law_couplings(&l, CouplingKind::Interaction, alpha, 0.5, None).unwrap();
        (l, HamiltonianSpec::new(j, Some(v)))
    }

    /// exp(-i t H) by Taylor series with scaling and squaring.
    fn expm_oracle(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
        let n = h.nrows();
        let norm: f64 = h.iter().map(|z| z.norm()).sum::<f64>() * t.abs();
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let a = h * Complex64::new(0.0, -t / 2f64.powi(squarings));
        let mut term = DMatrix::<Complex64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &a / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn support_checks() {
        let l = Lattice::chain(4).unwrap();
        let b = FockBasis::new(&l, Sector::Truncated(2)).unwrap();
        let x = l.region([0, 1]).unwrap();
        assert!(check_support(&site_number(&b, 0).unwrap(), &x).is_ok());
        assert!(check_support(&bond_hop(&b, 0, 1).unwrap(), &x).is_ok());
        assert!(check_support(&site_number(&b, 2).unwrap(), &x).is_err());
        assert!(check_support(&bond_hop(&b, 1, 2).unwrap(), &x).is_err());
        // diagonal weight that depends on an outside occupation
        let diag = (0..b.dim())
            .map(|k| f64::from(b.state(k)[0]) * f64::from(b.state(k)[3]))
            .collect();
        let coupled = SparseOperator::diagonal(&b, diag).unwrap();
        assert!(check_support(&coupled, &x).is_err());
        // a hop present for only part of the outside configurations
        let partial = SparseOperator::from_triplets(
            &b,
            vec![(b.index(&[1, 0, 0, 0]).unwrap(), b.index(&[0, 1, 0, 0]).unwrap(), Complex64::new(1.0, 0.0))],
            false,
        )
        .unwrap();
        assert!(check_support(&partial, &x).is_err());
        assert!(check_support(&hop_term(&b, 0, 1, Complex64::new(1.0, 0.0)).unwrap(), &x).is_ok());
    }

    #[test]
    fn localized_matches_masked_dense_oracle() {
        let (l, spec) = chain_spec(6, 3.0);
        let b = FockBasis::new(&l, Sector::FixedN(2)).unwrap();
        let x = l.region([0]).unwrap();
        let pair = LocalizedPair::new(&spec, &b, &x, 2.0, PropagatorOptions::default()).unwrap();
        let a = site_number(&b, 0).unwrap();
        let psi = QuantumState::basis_vector(&b, &[1, 1, 0, 0, 0, 0]).unwrap();
        let s = 0.8;
        let got = localized_heisenberg(&pair.local, &a, &x, &psi, s).unwrap();
        let hs = spec.restrict(&l.region([0, 1, 2]).unwrap()).unwrap().build(&b).unwrap();
        let u = expm_oracle(&hs.to_dense(), s);
        let p = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let phi = &u * &p;
        let ad = a.to_dense();
        let want = (phi.adjoint() * ad * &phi)[(0, 0)];
        assert!((got - want).norm() < 1e-12);
        assert_eq!(localized_heisenberg(&pair.local, &a, &x, &psi, 0.0).unwrap(), a.expectation(&psi).unwrap());
        // X_xi = Lambda reproduces the full dynamics
        let wide = LocalizedPair::new(&spec, &b, &x, 10.0, PropagatorOptions::default()).unwrap();
        let full = a.expectation(&wide.full.evolve(&psi, s).unwrap()).unwrap();
        let loc = localized_heisenberg(&wide.local, &a, &x, &psi, s).unwrap();
        assert!((full - loc).norm() < 1e-13);
    }

    #[test]
    fn pairings_identity_and_trivial_cases() {
        let (l, spec) = chain_spec(8, 4.0);
        let b = FockBasis::new(&l, Sector::FixedN(2)).unwrap();
        let x = l.region([0]).unwrap();
        let y = l.region([7]).unwrap();
        let a = site_number(&b, 0).unwrap();
        let bop = bond_hop(&b, 6, 7).unwrap();
        let y2 = l.region([6, 7]).unwrap();
        let psi = QuantumState::basis_vector(&b, &[1, 0, 0, 0, 0, 0, 0, 1]).unwrap();
        for xi in [1.0, 2.0, 3.0] {
            let pair = LocalizedPair::new(&spec, &b, &x, xi, PropagatorOptions::default()).unwrap();
            let zero = remainder_pairings(&pair, &a, &x, &bop, &y2, xi, 0.0, &psi, 1e-12).unwrap();
            assert_eq!(zero.commutator, Complex64::new(0.0, 0.0));
            assert_eq!(zero.b_rem, Complex64::new(0.0, 0.0));
            let r = remainder_pairings(&pair, &a, &x, &bop, &y2, xi, 0.5, &psi, 1e-12).unwrap();
            assert!(r.identity_residual < 1e-12);
            let n7 = site_number(&b, 7).unwrap();
            assert!(remainder_pairings(&pair, &a, &x, &n7, &y, xi, 0.5, &psi, 1e-12).is_ok());
        }
        let pair = LocalizedPair::new(&spec, &b, &x, 3.0, PropagatorOptions::default()).unwrap();
        let near = l.region([5, 6]).unwrap();
        let bnear = bond_hop(&b, 5, 6).unwrap();
        assert!(matches!(
            remainder_pairings(&pair, &a, &x, &bnear, &near, 3.0, 0.5, &psi, 1e-12),
            Err(Error::Geometry(_))
        ));
        let sat = LocalizedPair::new(&spec, &b, &x, 8.0, PropagatorOptions::default()).unwrap();
        let r = rem_expectations(&sat, &a, &bop, 0.5, &psi).unwrap();
        assert!(r.b_rem.norm() < 1e-14 && r.rem_b.norm() < 1e-14);
        assert_eq!(sat.full.resolved_method(), Method::DenseEigen);
    }
}
