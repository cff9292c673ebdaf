use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::couplings::{CouplingKind, CouplingMatrix};
use crate::error::{invalid, Result};

/// One-body propagator `U(t) = exp(-i t J)`.
pub fn one_body_propagator(j: &CouplingMatrix, t: f64) -> Result<DMatrix<Complex64>> {
    if j.kind() != CouplingKind::Hopping {
        return Err(invalid("j", "expected a hopping matrix"));
    }
    j.validate()?;
    let n = j.n();
    if t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let m = DMatrix::from_fn(n, n, |x, y| j.get(x, y));
    let eig = SymmetricEigen::new(m);
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * t)));
    Ok(&eig.eigenvectors * phases * eig.eigenvectors.adjoint())
}

/// Site densities of a free (V = 0) evolution from a product Fock state:
/// `<n_x>_t = sum_y |U_xy(t)|^2 n_y(0)`.
pub fn one_body_density_oracle(j: &CouplingMatrix, occupations: &[u8], t: f64) -> Result<Vec<f64>> {
    if occupations.len() != j.n() {
        return Err(invalid(
            "occupations",
            format!("expected {} sites, got {}", j.n(), occupations.len()),
        ));
    }
    let u = one_body_propagator(j, t)?;
    Ok((0..j.n())
        .map(|x| {
            occupations
                .iter()
                .enumerate()
                .map(|(y, &n)| u[(x, y)].norm_sqr() * f64::from(n))
                .sum()
        })
        .collect())
}
