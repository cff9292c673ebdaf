use crate::couplings::{holder_exponent, CouplingMatrix};
use crate::error::{invalid, Result};
use crate::fock::QuantumState;
use crate::lattice::Region;

/// `R_{p}(tau) = <N_B^p> + sum_{x in B} sum_y |J_xy| |x - y|^{1+eps} <N_B^{p-1} n_y>`
/// on the state `psi` (already evolved to `tau`).
pub fn remainder_functional(
    psi: &QuantumState,
    j: &CouplingMatrix,
    ball: &Region,
    eps: f64,
    p: u32,
) -> Result<f64> {
    if p == 0 {
        return Err(invalid("p", "must be a positive integer"));
    }
    psi.basis().check_region(ball)?;
    if j.lattice() != ball.lattice() {
        return Err(crate::error::Error::LatticeMismatch(
            "hopping matrix and ball use different lattices".into(),
        ));
    }
    let lat = ball.lattice();
    let n = lat.n_sites();
    // w_y = sum_{x in B} |J_xy| |x - y|^{1 + eps}
    let w: Vec<f64> = (0..n)
        .map(|y| {
            ball.members()
                .iter()
                .filter(|&&x| x != y)
                .map(|&x| j.get(x, y).norm() * lat.distance(x, y).powf(1.0 + eps))
                .sum()
        })
        .collect();
    let mask = ball.mask();
    let basis = psi.basis();
    Ok(psi.diagonal_expectation(|k| {
        let nb = basis.count_in(k, &mask) as f64;
        let spread: f64 = basis
            .state(k)
            .iter()
            .zip(&w)
            .map(|(&ny, wy)| wy * f64::from(ny))
            .sum();
        nb.powi(p as i32) + nb.powi(p as i32 - 1) * spread
    }))
}

/// The functional on `B_{R_l}` around `center`, with `eps = (alpha - d - 1) / 2`.
pub fn level_remainder(
    psi: &QuantumState,
    j: &CouplingMatrix,
    alpha: f64,
    outer_radius: f64,
    center: &[f64],
    p: u32,
) -> Result<f64> {
    let lat = psi.basis().lattice();
    let eps = holder_exponent(alpha, lat.dim())?;
    let ball = lat.ball(center, outer_radius)?;
    remainder_functional(psi, j, &ball, eps, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{power_law_couplings, CouplingKind};
    use crate::error::Error;
    use crate::fock::{mott_state, FockBasis, Sector};
    use crate::lattice::Lattice;
    use num_complex::Complex64;

    #[test]
    fn reduces_to_particle_count_without_hopping() {
        let l = Lattice::chain(5).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(5)).unwrap();
        let psi = mott_state(&b, 1).unwrap();
        let j = CouplingMatrix::zeros(&l, CouplingKind::Hopping);
        let ball = l.ball(&[0.0], 2.0).unwrap();
        assert_eq!(remainder_functional(&psi, &j, &ball, 0.25, 1).unwrap(), 3.0);
    }

    #[test]
    fn mott_direct_double_sum() {
        let l = Lattice::chain(7).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(7)).unwrap();
        let psi = mott_state(&b, 1).unwrap();
        let alpha = 3.0;
        let j = power_law_couplings(&l, CouplingKind::Hopping, alpha, 1.0, None).unwrap();
        let eps = (alpha - 2.0) / 2.0;
        let got = level_remainder(&psi, &j, alpha, 3.0, &[0.0], 1).unwrap();
        let mut want = 4.0;
        for x in 0..4i32 {
            for y in 0..7i32 {
                if x != y {
                    let d = f64::from((x - y).abs());
                    want += (1.0 + d).powf(-alpha) * d.powf(1.0 + eps);
                }
            }
        }
        assert!((got - want).abs() < 1e-12);
        assert!(matches!(
            level_remainder(&psi, &j, 2.0, 3.0, &[0.0], 1),
            Err(Error::DecayExponent { .. })
        ));
    }

    #[test]
    fn second_moment_below_crude_bound() {
        let l = Lattice::chain(6).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(3)).unwrap();
        let amps: Vec<Complex64> = (0..b.dim())
            .map(|k| Complex64::new((k as f64).sin(), (2.0 * k as f64).cos()))
            .collect();
        let psi = QuantumState::new(&b, amps).unwrap().normalized().unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, 2.5, 1.0, None).unwrap();
        let r1 = level_remainder(&psi, &j, 2.5, 2.0, &[0.0], 1).unwrap();
        let r2 = level_remainder(&psi, &j, 2.5, 2.0, &[0.0], 2).unwrap();
        assert!(r2 <= 3.0 * r1 + 1e-12);
    }
}
