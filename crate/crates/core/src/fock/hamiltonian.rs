use num_complex::Complex64;
use rayon::prelude::*;

use crate::couplings::{CouplingKind, CouplingMatrix};
use crate::error::{invalid, Error, Result};
use crate::fock::basis::FockBasis;
use crate::fock::operator::SparseOperator;
use crate::lattice::Region;

fn check_lattice(basis: &FockBasis, m: &CouplingMatrix) -> Result<()> {
    if m.lattice() != basis.lattice() {
        return Err(Error::LatticeMismatch(
            "coupling matrix and basis use different lattices".into(),
        ));
    }
    Ok(())
}

/// `N_X = sum_{x in X} n_x`.
pub fn number_operator(basis: &FockBasis, region: &Region) -> Result<SparseOperator> {
    basis.check_region(region)?;
    let mask = region.mask();
    let diag = (0..basis.dim())
        .map(|k| basis.count_in(k, &mask) as f64)
        .collect();
    SparseOperator::diagonal(basis, diag)
}

/// `n_x` for a single site.
pub fn site_number(basis: &FockBasis, site: usize) -> Result<SparseOperator> {
    if site >= basis.n_sites() {
        return Err(invalid("site", format!("{site} is not a lattice site")));
    }
    let diag = (0..basis.dim())
        .map(|k| f64::from(basis.state(k)[site]))
        .collect();
    SparseOperator::diagonal(basis, diag)
}

/// `amplitude * a_x^* a_y` (a single directed hop from `y` to `x`).
pub fn hop_term(basis: &FockBasis, x: usize, y: usize, amplitude: Complex64) -> Result<SparseOperator> {
    let n = basis.n_sites();
    if x >= n || y >= n {
        return Err(invalid("site", format!("({x}, {y}) outside the lattice")));
    }
    let mut trip = Vec::new();
    let mut occ = vec![0u8; n];
    for col in 0..basis.dim() {
        if let Some((row, w)) = hop_target(basis, col, x, y, &mut occ) {
            trip.push((row, col, amplitude * w));
        }
    }
    SparseOperator::from_triplets(basis, trip, false)
}

/// `a_x^* a_y + a_y^* a_x`, the symmetric bond hop.
pub fn bond_hop(basis: &FockBasis, x: usize, y: usize) -> Result<SparseOperator> {
    let one = Complex64::new(1.0, 0.0);
    let fwd = hop_term(basis, x, y, one)?;
    if x == y {
        return fwd.scale(Complex64::new(2.0, 0.0)).into_hermitian();
    }
    fwd.add(&hop_term(basis, y, x, one)?)?.into_hermitian()
}

/// Row index and CCR weight of `a_x^* a_y` applied to basis state `col`.
#[inline]
fn hop_target(basis: &FockBasis, col: usize, x: usize, y: usize, scratch: &mut Vec<u8>) -> Option<(usize, f64)> {
    let src = basis.state(col);
    let ny = src[y];
    if ny == 0 {
        return None;
    }
    if x == y {
        return Some((col, f64::from(ny)));
    }
    let nx = src[x];
    scratch.clear();
    scratch.extend_from_slice(src);
    scratch[y] -= 1;
    scratch[x] = nx.checked_add(1)?;
    let row = basis.index(scratch)?;
    Some((row, (f64::from(ny) * (f64::from(nx) + 1.0)).sqrt()))
}

/// `sum_{x,y} J_xy a_x^* a_y`.
pub fn hopping_operator(basis: &FockBasis, j: &CouplingMatrix) -> Result<SparseOperator> {
    check_lattice(basis, j)?;
    if j.kind() != CouplingKind::Hopping {
        return Err(invalid("j", "expected a hopping matrix"));
    }
    j.validate()?;
    let n = basis.n_sites();
    // sources y with their nonzero targets x
    let links: Vec<Vec<(usize, Complex64)>> = (0..n)
        .map(|y| {
            (0..n)
                .filter_map(|x| {
                    let v = j.get(x, y);
                    (v.norm() != 0.0).then_some((x, v))
                })
                .collect()
        })
        .collect();
    let per_col: Vec<Vec<(usize, usize, Complex64)>> = (0..basis.dim())
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |scratch, col| {
                let mut out = Vec::new();
                for (y, targets) in links.iter().enumerate() {
                    if basis.state(col)[y] == 0 {
                        continue;
                    }
                    for &(x, v) in targets {
                        if let Some((row, w)) = hop_target(basis, col, x, y, scratch) {
                            out.push((row, col, v * w));
                        }
                    }
                }
                out
            },
        )
        .collect();
    let trip = per_col.into_iter().flatten().collect();
    SparseOperator::from_triplets(basis, trip, true)
}

/// Normal-ordered two-body term, diagonal with entries
/// `1/2 sum_{x != y} V_xy n_x n_y + 1/2 sum_x V_xx n_x (n_x - 1)`.
pub fn interaction_operator(basis: &FockBasis, v: &CouplingMatrix) -> Result<SparseOperator> {
    check_lattice(basis, v)?;
    if v.kind() != CouplingKind::Interaction {
        return Err(invalid("v", "expected an interaction matrix"));
    }
    v.validate()?;
    let n = basis.n_sites();
    let vr: Vec<f64> = v.entries().iter().map(|z| z.re).collect();
    let diag = (0..basis.dim())
        .into_par_iter()
        .map(|k| {
            let occ = basis.state(k);
            let mut e = 0.0;
            for x in 0..n {
                let nx = f64::from(occ[x]);
                if nx == 0.0 {
                    continue;
                }
                for y in 0..n {
                    let w = vr[x * n + y];
                    if w == 0.0 {
                        continue;
                    }
                    let ny = f64::from(occ[y]);
                    e += if x == y { w * nx * (nx - 1.0) } else { w * nx * ny };
                }
            }
            0.5 * e
        })
        .collect();
    SparseOperator::diagonal(basis, diag)
}

/// Diagonal term `1/2 sum_{x,y} V_xy n_x^{q/2} n_y^{q/2}`.
pub fn interaction_operator_q(basis: &FockBasis, vq: &CouplingMatrix, q: u32) -> Result<SparseOperator> {
    check_lattice(basis, vq)?;
    if q == 0 {
        return Err(invalid("q", "must be a positive integer"));
    }
    vq.validate()?;
    let n = basis.n_sites();
    let half = f64::from(q) / 2.0;
    let vr: Vec<f64> = vq.entries().iter().map(|z| z.re).collect();
    let diag = (0..basis.dim())
        .into_par_iter()
        .map(|k| {
            let occ = basis.state(k);
            let pw: Vec<f64> = occ.iter().map(|&m| f64::from(m).powf(half)).collect();
            let mut e = 0.0;
            for x in 0..n {
                if pw[x] == 0.0 {
                    continue;
                }
                for y in 0..n {
                    e += vr[x * n + y] * pw[x] * pw[y];
                }
            }
            0.5 * e
        })
        .collect();
    SparseOperator::diagonal(basis, diag)
}

/// Couplings defining `H = sum J a^* a + 1/2 sum V a^* a^* a a + sum_q (q-terms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub hopping: CouplingMatrix,
    pub interaction: Option<CouplingMatrix>,
    pub q_terms: Vec<(u32, CouplingMatrix)>,
}

impl HamiltonianSpec {
    pub fn new(hopping: CouplingMatrix, interaction: Option<CouplingMatrix>) -> Self {
        Self {
            hopping,
            interaction,
            q_terms: Vec::new(),
        }
    }

    pub fn with_q_term(mut self, q: u32, vq: CouplingMatrix) -> Self {
        self.q_terms.push((q, vq));
        self
    }

    pub fn build(&self, basis: &FockBasis) -> Result<SparseOperator> {
        let mut h = hopping_operator(basis, &self.hopping)?;
        if let Some(v) = &self.interaction {
            h = h.add(&interaction_operator(basis, v)?)?;
        }
        for (q, vq) in &self.q_terms {
            h = h.add(&interaction_operator_q(basis, vq, *q)?)?;
        }
        h.into_hermitian()
    }

    /// The same couplings restricted to `S x S`.
    pub fn restrict(&self, region: &Region) -> Result<Self> {
        if region.is_empty() {
            return Err(Error::EmptyRegion("restriction region"));
        }
        Ok(Self {
            hopping: self.hopping.masked(region)?,
            interaction: self
                .interaction
                .as_ref()
                .map(|v| v.masked(region))
                .transpose()?,
            q_terms: self
                .q_terms
                .iter()
                .map(|(q, m)| Ok((*q, m.masked(region)?)))
                .collect::<Result<_>>()?,
        })
    }
}

/// `H_S` built from couplings zeroed outside `S x S`, acting on the full basis.
pub fn restrict_hamiltonian(
    j: &CouplingMatrix,
    v: &CouplingMatrix,
    region: &Region,
    basis: &FockBasis,
) -> Result<SparseOperator> {
    HamiltonianSpec::new(j.clone(), Some(v.clone()))
        .restrict(region)?
        .build(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{flat_couplings, power_law_couplings, GeneratorOptions};
    use crate::fock::basis::Sector;
    use crate::lattice::Lattice;
    use approx::assert_abs_diff_eq;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn number_operator_examples() {
        let l = Lattice::chain(3).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(3)).unwrap();
        let x = l.region([0, 2]).unwrap();
        let nx = number_operator(&b, &x).unwrap();
        let k = b.index(&[2, 0, 1]).unwrap();
        assert_eq!(nx.get(k, k), c(3.0));
        assert_eq!(number_operator(&b, &l.empty_region()).unwrap().nnz(), 0);
        let all = number_operator(&b, &l.full()).unwrap();
        assert_eq!(all, SparseOperator::identity(&b).scale(c(3.0)));
    }

    #[test]
    fn hopping_ccr_examples() {
        let l = Lattice::chain(2).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(1)).unwrap();
        let a01 = hop_term(&b, 0, 1, c(1.0)).unwrap();
        let src = b.index(&[0, 1]).unwrap();
        let dst = b.index(&[1, 0]).unwrap();
        assert_eq!(a01.get(dst, src), c(1.0));

        let l3 = Lattice::chain(3).unwrap();
        let b3 = FockBasis::new(&l3, Sector::FixedN(2)).unwrap();
        let a02 = hop_term(&b3, 0, 2, c(1.0)).unwrap();
        let src = b3.index(&[1, 0, 1]).unwrap();
        let dst = b3.index(&[2, 0, 0]).unwrap();
        assert_abs_diff_eq!(a02.get(dst, src).re, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn two_bosons_two_sites_spectrum() {
        let l = Lattice::chain(2).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(2)).unwrap();
        let j = flat_couplings(&l, CouplingKind::Hopping, 1.0, 1.0).unwrap();
        let h = hopping_operator(&b, &j).unwrap();
        let dense = h.to_dense().map(|z| z.re);
        let mut ev: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, e) in ev.iter().zip([-2.0, 0.0, 2.0]) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn interaction_examples() {
        let l = Lattice::chain(2).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(2)).unwrap();
        let u = 1.7;
        let v = CouplingMatrix::from_real(&l, CouplingKind::Interaction, &[u, 0.0, 0.0, 0.0]).unwrap();
        let op = interaction_operator(&b, &v).unwrap();
        let k = b.index(&[2, 0]).unwrap();
        assert_abs_diff_eq!(op.get(k, k).re, u, epsilon = 1e-15);
        let w = 0.3;
        let v = CouplingMatrix::from_real(&l, CouplingKind::Interaction, &[0.0, w, w, 0.0]).unwrap();
        let op = interaction_operator(&b, &v).unwrap();
        let k = b.index(&[1, 1]).unwrap();
        assert_abs_diff_eq!(op.get(k, k).re, w, epsilon = 1e-15);

        let v = CouplingMatrix::from_real(&l, CouplingKind::Interaction, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let b3 = FockBasis::new(&l, Sector::FixedN(3)).unwrap();
        let q2 = interaction_operator_q(&b3, &v, 2).unwrap();
        let k = b3.index(&[2, 1]).unwrap();
        assert_abs_diff_eq!(q2.get(k, k).re, 2.0, epsilon = 1e-15);
        let q1 = interaction_operator_q(&b3, &v, 1).unwrap();
        assert!(q1.entries().all(|(_, _, z)| z.re.is_finite()));
        assert!(interaction_operator_q(&b3, &v, 0).is_err());
    }

    #[test]
    fn interaction_matches_pair_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let l = Lattice::chain(4).unwrap();
        let n = 4;
        let mut m = vec![0.0; n * n];
        for x in 0..n {
            for y in x..n {
                let w: f64 = rng.gen_range(-1.0..1.0);
                m[x * n + y] = w;
                m[y * n + x] = w;
            }
        }
        let v = CouplingMatrix::from_real(&l, CouplingKind::Interaction, &m).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(4)).unwrap();
        let op = interaction_operator(&b, &v).unwrap();
        let q3 = interaction_operator_q(&b, &v, 3).unwrap();
        for k in 0..b.dim() {
            let occ: Vec<f64> = b.state(k).iter().map(|&v| f64::from(v)).collect();
            // a^* a^* a a on the ordered pair (x, y)
            let mut e = 0.0;
            let mut eq = 0.0;
            for x in 0..n {
                for y in 0..n {
                    let pair = if x == y { occ[x] * (occ[x] - 1.0) } else { occ[x] * occ[y] };
                    e += 0.5 * m[x * n + y] * pair;
                    eq += 0.5 * m[x * n + y] * occ[x].powf(1.5) * occ[y].powf(1.5);
                }
            }
            assert_abs_diff_eq!(op.get(k, k).re, e, epsilon = 1e-12);
            assert_abs_diff_eq!(q3.get(k, k).re, eq, epsilon = 1e-12);
        }
    }

    #[test]
    fn asymmetric_or_non_hermitian_rejected() {
        let l = Lattice::chain(2).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(1)).unwrap();
        let j = CouplingMatrix::from_real(&l, CouplingKind::Interaction, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(hopping_operator(&b, &j).is_err());
        let h = CouplingMatrix::from_real(&l, CouplingKind::Hopping, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(interaction_operator(&b, &h).is_err());
    }

    #[test]
    fn restriction_examples() {
        let l = Lattice::chain(6).unwrap();
        let b = FockBasis::new(&l, Sector::FixedN(2)).unwrap();
        let j = power_law_couplings(&l, CouplingKind::Hopping, 2.5, 1.0, None).unwrap();
        let v = crate::couplings::generate(
            &l,
            CouplingKind::Interaction,
            2.5,
            0.5,
            GeneratorOptions {
                onsite: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let full = HamiltonianSpec::new(j.clone(), Some(v.clone())).build(&b).unwrap();
        assert_eq!(restrict_hamiltonian(&j, &v, &l.full(), &b).unwrap(), full);
        let single = HamiltonianSpec::new(j.clone(), None)
            .restrict(&l.region([2]).unwrap())
            .unwrap()
            .build(&b)
            .unwrap();
        assert_eq!(single.nnz(), 0);
        let half = l.region([0, 1, 2]).unwrap();
        let hs = restrict_hamiltonian(&j, &v, &half, &b).unwrap();
        // oracle: sum of the individual terms with S-local couplings
        let mut oracle = SparseOperator::zero(&b);
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    oracle = oracle.add(&hop_term(&b, x, y, j.get(x, y)).unwrap()).unwrap();
                }
            }
        }
        let mask = half.mask();
        let diag = (0..b.dim())
            .map(|k| {
                let o = b.state(k);
                let mut e = 0.0;
                for x in 0..6 {
                    for y in 0..6 {
                        if !(mask[x] && mask[y]) {
                            continue;
                        }
                        let (nx, ny) = (f64::from(o[x]), f64::from(o[y]));
                        e += 0.5 * v.get(x, y).re * if x == y { nx * (nx - 1.0) } else { nx * ny };
                    }
                }
                e
            })
            .collect();
        oracle = oracle.add(&SparseOperator::diagonal(&b, diag).unwrap()).unwrap();
        assert!(hs.sub(&oracle).unwrap().max_abs() < 1e-14);
        assert!(HamiltonianSpec::new(j, None).restrict(&l.empty_region()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn hamiltonian_structure(sites in 2usize..6, n in 0usize..4, alpha in 1.5f64..4.0, truncated in any::<bool>()) {
            let l = Lattice::chain(sites).unwrap();
            let sector = if truncated { Sector::Truncated(n) } else { Sector::FixedN(n) };
            let b = FockBasis::new(&l, sector).unwrap();
            let j = power_law_couplings(&l, CouplingKind::Hopping, alpha, 1.0, None).unwrap();
            let v = power_law_couplings(&l, CouplingKind::Interaction, alpha, 0.7, None).unwrap();
            let h = HamiltonianSpec::new(j.clone(), Some(v)).build(&b).unwrap();
            prop_assert!(h.conserves_particle_number());
            prop_assert!(h.hermitian_deviation() <= 1e-14);
            let hop = hopping_operator(&b, &j).unwrap();
            prop_assert!(hop.hermitian_deviation() <= 1e-14);
            if !truncated {
                let total = number_operator(&b, &l.full()).unwrap();
                prop_assert_eq!(total, SparseOperator::identity(&b).scale(c(n as f64)));
            }
        }
    }
}
