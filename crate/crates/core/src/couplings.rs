//! Long-range coupling matrices and their decay moments.
//!
//! Hopping matrices are Hermitian, interaction matrices real symmetric. The
//! power-law generator weights off-diagonal entries by `(1 + |x - y|)^(-alpha)`,
//! the same weight used by [`decay_constant`], so the generator's amplitude is
//! recovered exactly.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{Lattice, Region};

/// Entrywise tolerance for the Hermiticity / symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    Hopping,
    Interaction,
}

/// Dense `|Λ| x |Λ|` coupling matrix tied to a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    lattice: Lattice,
    kind: CouplingKind,
    entries: Vec<Complex64>,
    alpha_hint: Option<f64>,
}

/// Radial profile used by the generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `amplitude * (1 + |x - y|)^(-alpha)`.
    PowerLaw,
    /// `amplitude` for every pair within the range cap.
    Flat,
}

impl CouplingMatrix {
    pub fn zeros(lattice: &Lattice, kind: CouplingKind) -> Self {
        let n = lattice.n_sites();
        Self {
            lattice: lattice.clone(),
            kind,
            entries: vec![Complex64::new(0.0, 0.0); n * n],
            alpha_hint: None,
        }
    }

    /// Builds a matrix from row-major entries, validating Hermiticity (hopping)
    /// or real symmetry (interaction).
    pub fn from_entries(
        lattice: &Lattice,
        kind: CouplingKind,
        entries: Vec<Complex64>,
    ) -> Result<Self> {
        let n = lattice.n_sites();
        if entries.len() != n * n {
            return Err(invalid(
                "entries",
                format!("expected {} entries, got {}", n * n, entries.len()),
            ));
        }
        let m = Self {
            lattice: lattice.clone(),
            kind,
            entries,
            alpha_hint: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// Real-valued convenience constructor.
    pub fn from_real(lattice: &Lattice, kind: CouplingKind, entries: &[f64]) -> Result<Self> {
        Self::from_entries(
            lattice,
            kind,
            entries.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for x in 0..n {
            for y in x..n {
                let a = self.get(x, y);
                let b = self.get(y, x);
                match self.kind {
                    CouplingKind::Hopping => {
                        let dev = (a - b.conj()).norm();
                        if dev > SYMMETRY_TOL {
                            return Err(Error::Symmetry {
                                expected: "Hermitian",
                                row: x,
                                col: y,
                                deviation: dev,
                            });
                        }
                    }
                    CouplingKind::Interaction => {
                        let dev = (a - b).norm().max(a.im.abs()).max(b.im.abs());
                        if dev > SYMMETRY_TOL {
                            return Err(Error::Symmetry {
                                expected: "real symmetric",
                                row: x,
                                col: y,
                                deviation: dev,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn kind(&self) -> CouplingKind {
        self.kind
    }

    pub fn alpha_hint(&self) -> Option<f64> {
        self.alpha_hint
    }

    pub fn n(&self) -> usize {
        self.lattice.n_sites()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.entries[x * self.n() + y]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.norm() == 0.0)
    }

    pub fn has_diagonal(&self) -> bool {
        (0..self.n()).any(|x| self.get(x, x).norm() != 0.0)
    }

    /// Couplings with every pair outside `S x S` set to zero.
    pub fn masked(&self, region: &Region) -> Result<Self> {
        if region.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch(
                "mask region and coupling matrix use different lattices".into(),
            ));
        }
        let mask = region.mask();
        let n = self.n();
        let mut out = self.clone();
        for x in 0..n {
            for y in 0..n {
                if !(mask[x] && mask[y]) {
                    out.entries[x * n + y] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(out)
    }

    /// Entrywise |M_xy| as a dense row-major array.
    pub fn abs_entries(&self) -> Vec<f64> {
        self.entries.iter().map(|z| z.norm()).collect()
    }
}

/// Options for the radial generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    pub profile: Profile,
    /// Pairs with |x - y| above this distance are zeroed (finite-range mode).
    pub range_cap: Option<f64>,
    /// Diagonal value; only honoured for interaction matrices.
    pub onsite: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            profile: Profile::PowerLaw,
            range_cap: None,
            onsite: 0.0,
        }
    }
}

/// Off-diagonal entries `amplitude * (1 + |x - y|)^(-alpha)`, zero hopping
/// diagonal, optional on-site interaction and range cap.
pub fn power_law_couplings(
    lattice: &Lattice,
    kind: CouplingKind,
    alpha: f64,
    amplitude: f64,
    range_cap: Option<f64>,
) -> Result<CouplingMatrix> {
    generate(
        lattice,
        kind,
        alpha,
        amplitude,
        GeneratorOptions {
            range_cap,
            ..Default::default()
        },
    )
}

/// Constant couplings `amplitude` for 0 < |x - y| <= range (e.g. the
/// nearest-neighbour 0/1 matrix for `range = 1`).
pub fn flat_couplings(
    lattice: &Lattice,
    kind: CouplingKind,
    amplitude: f64,
    range: f64,
) -> Result<CouplingMatrix> {
    let mut m = generate(
        lattice,
        kind,
        1.0,
        amplitude,
        GeneratorOptions {
            profile: Profile::Flat,
            range_cap: Some(range),
            onsite: 0.0,
        },
    )?;
    m.alpha_hint = None;
    Ok(m)
}

pub fn generate(
    lattice: &Lattice,
    kind: CouplingKind,
    alpha: f64,
    amplitude: f64,
    opts: GeneratorOptions,
) -> Result<CouplingMatrix> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    if !amplitude.is_finite() {
        return Err(invalid("amplitude", "must be finite"));
    }
    if let Some(cap) = opts.range_cap {
        if !(cap >= 0.0) {
            return Err(invalid("range_cap", format!("must be nonnegative, got {cap}")));
        }
    }
    let n = lattice.n_sites();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for x in 0..n {
        for y in 0..n {
            let value = if x == y {
                match kind {
                    CouplingKind::Hopping => 0.0,
                    CouplingKind::Interaction => opts.onsite,
                }
            } else {
                let d = lattice.distance(x, y);
                if opts.range_cap.is_some_and(|cap| d > cap) {
                    0.0
                } else {
                    match opts.profile {
                        Profile::PowerLaw => amplitude * (1.0 + d).powf(-alpha),
                        Profile::Flat => amplitude,
                    }
                }
            };
            entries[x * n + y] = Complex64::new(value, 0.0);
        }
    }
    Ok(CouplingMatrix {
        lattice: lattice.clone(),
        kind,
        entries,
        alpha_hint: Some(alpha),
    })
}

/// kappa = sup_x sum_y |J_xy| |x - y|.
pub fn kappa(j: &CouplingMatrix) -> Result<f64> {
    if j.kind() != CouplingKind::Hopping {
        return Err(invalid("j", "kappa is defined for hopping matrices"));
    }
    kappa_moment(j, None, 1.0)
}

/// kappa_nu = sup_x sum_y (|J_xy| + |V_xy|) |x - y|^(nu + 1).
pub fn kappa_nu(j: &CouplingMatrix, v: Option<&CouplingMatrix>, nu: u32) -> Result<f64> {
    kappa_moment(j, v, f64::from(nu) + 1.0)
}

/// Real-exponent moment sup_x sum_y (|J_xy| + |V_xy|) |x - y|^exponent. With
/// `v = None` and `exponent = 1 + eps` this is kappa_eps.
pub fn kappa_moment(j: &CouplingMatrix, v: Option<&CouplingMatrix>, exponent: f64) -> Result<f64> {
    if let Some(v) = v {
        if v.lattice() != j.lattice() {
            return Err(Error::LatticeMismatch(
                "hopping and interaction matrices use different lattices".into(),
            ));
        }
    }
    if !(exponent > 0.0) {
        return Err(invalid("exponent", format!("must be positive, got {exponent}")));
    }
    let lat = j.lattice();
    let n = j.n();
    let mut best = 0.0f64;
    for x in 0..n {
        let mut row = 0.0;
        for y in 0..n {
            if x == y {
                continue;
            }
            let mut w = j.get(x, y).norm();
            if let Some(v) = v {
                w += v.get(x, y).norm();
            }
            if w != 0.0 {
                row += w * lat.distance(x, y).powf(exponent);
            }
        }
        best = best.max(row);
    }
    Ok(best)
}

/// kappa_eps with eps = (alpha - d - 1) / 2.
pub fn kappa_eps(j: &CouplingMatrix, eps: f64) -> Result<f64> {
    kappa_moment(j, None, 1.0 + eps)
}

/// sup_{x,y} |M_xy| (1 + |x - y|)^alpha.
pub fn decay_constant(m: &CouplingMatrix, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let lat = m.lattice();
    let n = m.n();
    let mut best = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let a = m.get(x, y).norm();
            if a != 0.0 {
                best = best.max(a * (1.0 + lat.distance(x, y)).powf(alpha));
            }
        }
    }
    Ok(best)
}

/// eps = (alpha - d - 1) / 2, defined for alpha > d + 1.
pub fn holder_exponent(alpha: f64, dim: usize) -> Result<f64> {
    let bound = dim as f64 + 1.0;
    if !(alpha > bound) {
        return Err(Error::DecayExponent { alpha, bound });
    }
    Ok((alpha - bound) / 2.0)
}

/// LRB error exponent floor(alpha - 3d - 1).
pub fn lrb_exponent(alpha: f64, dim: usize) -> f64 {
    (alpha - 3.0 * dim as f64 - 1.0).floor()
}

/// Summary of the decay constants of a coupling matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub alpha: f64,
    pub c_decay: f64,
    pub kappa: f64,
    pub kappa_nu: BTreeMap<u32, f64>,
}

impl DecayReport {
    pub fn new(m: &CouplingMatrix, alpha: f64, nus: &[u32]) -> Result<Self> {
        let c_decay = decay_constant(m, alpha)?;
        let kappa = kappa_moment(m, None, 1.0)?;
        let kappa_nu = nus
            .iter()
            .map(|&nu| Ok((nu, kappa_moment(m, None, f64::from(nu) + 1.0)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            alpha,
            c_decay,
            kappa,
            kappa_nu,
        })
    }
}

/// C_{H,alpha} = C_{J,alpha} + C_{V,alpha}.
pub fn hamiltonian_decay_constant(
    j: &CouplingMatrix,
    v: &CouplingMatrix,
    alpha: f64,
) -> Result<f64> {
    Ok(decay_constant(j, alpha)? + decay_constant(v, alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nearest_neighbour_mode_is_tridiagonal() {
        let l = Lattice::chain(5).unwrap();
        let j = flat_couplings(&l, CouplingKind::Hopping, 1.0, 1.0).unwrap();
        for x in 0..5usize {
            for y in 0..5 {
                let expect = if x.abs_diff(y) == 1 { 1.0 } else { 0.0 };
                assert_eq!(j.get(x, y).re, expect);
            }
        }
    }

    #[test]
    fn power_law_entries() {
        let l = Lattice::chain(5).unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, 2.0, 1.0, None).unwrap();
        assert_relative_eq!(j.get(0, 2).re, 1.0 / 9.0, max_relative = 1e-15);
        assert_eq!(j.get(3, 3).re, 0.0);
        let z = power_law_couplings(&l, CouplingKind::Hopping, 2.0, 0.0, None).unwrap();
        assert!(z.is_zero());
        assert!(power_law_couplings(&l, CouplingKind::Hopping, 0.0, 1.0, None).is_err());
        let capped = power_law_couplings(&l, CouplingKind::Hopping, 2.0, 1.0, Some(1.0)).unwrap();
        assert_eq!(capped.get(0, 2).re, 0.0);
        assert_relative_eq!(capped.get(0, 1).re, 0.25);
    }

    #[test]
    fn kappa_examples() {
        let l = Lattice::chain(6).unwrap();
        let j = flat_couplings(&l, CouplingKind::Hopping, 1.0, 1.0).unwrap();
        assert_eq!(kappa(&j).unwrap(), 2.0);
        assert_eq!(kappa_nu(&j, None, 0).unwrap(), 2.0);
        let l2 = Lattice::chain(2).unwrap();
        let j2 = flat_couplings(&l2, CouplingKind::Hopping, 1.0, 1.0).unwrap();
        assert_eq!(kappa(&j2).unwrap(), 1.0);
        let zero = CouplingMatrix::zeros(&l, CouplingKind::Hopping);
        assert_eq!(kappa_nu(&zero, Some(&CouplingMatrix::zeros(&l, CouplingKind::Interaction)), 3).unwrap(), 0.0);
    }

    #[test]
    fn kappa_power_law_matches_double_loop() {
        let l = Lattice::chain(7).unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, 3.0, 1.0, None).unwrap();
        // independent oracle: direct double loop over integer offsets
        let oracle = (0..7)
            .map(|x: i32| {
                (0..7)
                    .filter(|&y| y != x)
                    .map(|y: i32| {
                        let d = f64::from((x - y).abs());
                        (1.0 + d).powi(-3) * d
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        assert_relative_eq!(kappa(&j).unwrap(), oracle, max_relative = 1e-14);
        let oracle_nu1 = (0..7)
            .map(|x: i32| {
                (0..7)
                    .filter(|&y| y != x)
                    .map(|y: i32| {
                        let d = f64::from((x - y).abs());
                        (1.0 + d).powi(-3) * d * d
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        assert_relative_eq!(kappa_nu(&j, None, 1).unwrap(), oracle_nu1, max_relative = 1e-14);
    }

    #[test]
    fn decay_constant_examples() {
        let l = Lattice::chain(6).unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, 2.5, 0.7, None).unwrap();
        assert_relative_eq!(decay_constant(&j, 2.5).unwrap(), 0.7, max_relative = 1e-14);
        let nn = flat_couplings(&l, CouplingKind::Hopping, 1.0, 1.0).unwrap();
        assert_eq!(decay_constant(&nn, 2.0).unwrap(), 4.0);
        let zero = CouplingMatrix::zeros(&l, CouplingKind::Hopping);
        assert_eq!(decay_constant(&zero, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn symmetry_validation() {
        let l = Lattice::chain(2).unwrap();
        let bad = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 0.0),
        ];
        assert!(CouplingMatrix::from_entries(&l, CouplingKind::Hopping, bad.clone()).is_err());
        let good = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(0.0, 0.0),
        ];
        assert!(CouplingMatrix::from_entries(&l, CouplingKind::Hopping, good.clone()).is_ok());
        assert!(CouplingMatrix::from_entries(&l, CouplingKind::Interaction, good).is_err());
        assert!(CouplingMatrix::from_real(&l, CouplingKind::Interaction, &[0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn onsite_and_masking() {
        let l = Lattice::chain(4).unwrap();
        let v = generate(
            &l,
            CouplingKind::Interaction,
            2.0,
            1.0,
            GeneratorOptions {
                onsite: 3.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(v.get(2, 2).re, 3.0);
        let half = l.region([0, 1]).unwrap();
        let m = v.masked(&half).unwrap();
        assert_eq!(m.get(2, 2).re, 0.0);
        assert_eq!(m.get(0, 3).re, 0.0);
        assert_eq!(m.get(0, 1), v.get(0, 1));
    }

    #[test]
    fn exponents() {
        assert_eq!(holder_exponent(2.5, 1).unwrap(), 0.25);
        assert!(holder_exponent(2.0, 1).is_err());
        assert_eq!(lrb_exponent(6.0, 1), 2.0);
    }
}
