use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{QuantumState, SparseOperator};
use crate::probes::report::{BoundReport, EXACT_TOL};

/// Largest tolerated `|[A, B]|` entry and negative eigenvalue.
const PRECONDITION_TOL: f64 = 1e-12;

/// `<AB> <= <A^p>^{1/p} <B^q>^{1/q}` with `q = p / (p - 1)` for commuting
/// positive `A`, `B`.
///
/// The comparison uses the tolerance `1e-12 max(1, rhs)`.
pub fn check_operator_holder(
    a: &SparseOperator,
    b: &SparseOperator,
    p: f64,
    psi: &QuantumState,
) -> Result<BoundReport> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("must be finite and > 1, got {p}")));
    }
    a.basis().check_same(b.basis())?;
    a.basis().check_same(psi.basis())?;
    let q = p / (p - 1.0);
    let (ab, ap, bq, path) = match (a.real_diagonal(), b.real_diagonal()) {
        (Some(da), Some(db)) => {
            for (name, d) in [("A", &da), ("B", &db)] {
                if let Some(v) = d.iter().find(|&&v| v < 0.0) {
                    return Err(Error::OperatorPrecondition(format!(
                        "{name} has negative diagonal entry {v}"
                    )));
                }
            }
            let prob = psi.probabilities();
            let sum = |f: &dyn Fn(usize) -> f64| (0..prob.len()).map(|k| prob[k] * f(k)).sum::<f64>();
            (
                sum(&|k| da[k] * db[k]),
                sum(&|k| da[k].powf(p)),
                sum(&|k| db[k].powf(q)),
                "diagonal",
            )
        }
        _ => {
            let comm = a.commutator(b)?.max_abs();
            if comm >= PRECONDITION_TOL {
                return Err(Error::OperatorPrecondition(format!(
                    "operators do not commute, max |[A, B]| = {comm:e}"
                )));
            }
            let ab = b.apply(psi)?;
            let ab = a.apply(&ab)?;
            let ab = psi.inner(&ab)?;
            if ab.im.abs() > PRECONDITION_TOL * (1.0 + ab.norm()) {
                return Err(Error::OperatorPrecondition(format!(
                    "<AB> is not real: {ab}"
                )));
            }
            (ab.re, power_expectation(a, p, psi, "A")?, power_expectation(b, q, psi, "B")?, "dense")
        }
    };
    let rhs = ap.powf(1.0 / p) * bq.powf(1.0 / q);
    let tol = EXACT_TOL * rhs.max(1.0);
    let mut r = BoundReport::new("operator_holder", vec![0.0], vec![ab], vec![rhs], tol);
    r.diagnostics.insert("p".into(), p);
    r.diagnostics.insert("q".into(), q);
    r.diagnostics.insert("moment_a".into(), ap);
    r.diagnostics.insert("moment_b".into(), bq);
    r.notes.push(format!("{path} evaluation"));
    Ok(r)
}

/// `<psi, A^s psi>` through a dense eigendecomposition.
fn power_expectation(a: &SparseOperator, s: f64, psi: &QuantumState, name: &str) -> Result<f64> {
    if a.hermitian_deviation() > PRECONDITION_TOL {
        return Err(Error::OperatorPrecondition(format!("{name} is not Hermitian")));
    }
    let eig = SymmetricEigen::new(a.to_dense());
    if let Some(v) = eig.eigenvalues.iter().find(|&&v| v < -PRECONDITION_TOL) {
        return Err(Error::OperatorPrecondition(format!(
            "{name} has negative eigenvalue {v}"
        )));
    }
    let coeffs = eig.eigenvectors.adjoint() * DVector::from_column_slice(psi.amplitudes());
    Ok(eig
        .eigenvalues
        .iter()
        .zip(coeffs.iter())
        .map(|(&l, c): (&f64, &Complex64)| l.max(0.0).powf(s) * c.norm_sqr())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{bond_hop, number_operator, site_number, FockBasis, Sector};
    use crate::lattice::Lattice;
    use crate::probes::Verdict;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(b: &FockBasis, rng: &mut ChaCha8Rng) -> QuantumState {
        let amps = (0..b.dim())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        QuantumState::new(b, amps).unwrap().normalized().unwrap()
    }

    #[test]
    fn identity_and_cauchy_schwarz() {
        let l = Lattice::chain(4).unwrap();
        let b = FockBasis::new(&l, Sector::Truncated(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = random_state(&b, &mut rng);
        let n = number_operator(&b, &l.full()).unwrap();
        let id = SparseOperator::identity(&b);
        let r = check_operator_holder(&n, &id, 3.0, &psi).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        let r = check_operator_holder(&n, &n, 2.0, &psi).unwrap();
        assert!((r.lhs[0] - r.rhs[0]).abs() < 1e-12 * r.rhs[0]);
    }

    #[test]
    fn dense_path_matches_diagonal() {
        let l = Lattice::chain(3).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(&b, &mut rng);
        let h = bond_hop(&b, 0, 1).unwrap();
        // h^2 + 3 commutes with h^2 and is positive
        let h2 = h.matmul(&h).unwrap();
        let a = h2.add(&SparseOperator::identity(&b).scale(Complex64::new(3.0, 0.0))).unwrap();
        let r = check_operator_holder(&a, &h2, 1.5, &psi).unwrap();
        assert_eq!(r.notes[0], "dense evaluation");
        assert_eq!(r.verdict, Verdict::Holds);
        let n0 = site_number(&b, 0).unwrap();
        let n1 = site_number(&b, 1).unwrap();
        let d = check_operator_holder(&n0, &n1, 2.0, &psi).unwrap();
        assert_eq!(d.notes[0], "diagonal evaluation");
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = Lattice::chain(3).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(&b, &mut rng);
        let n0 = site_number(&b, 0).unwrap();
        let h = bond_hop(&b, 0, 1).unwrap();
        assert!(matches!(check_operator_holder(&n0, &h, 2.0, &psi), Err(Error::OperatorPrecondition(_))));
        let neg = n0.scale(Complex64::new(-1.0, 0.0));
        assert!(matches!(check_operator_holder(&neg, &n0, 2.0, &psi), Err(Error::OperatorPrecondition(_))));
        assert!(check_operator_holder(&n0, &n0, 1.0, &psi).is_err());
    }
}
