use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::basis::{FockBasis, Sector};
use crate::lattice::Region;

/// Complex amplitude vector over a Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    basis: FockBasis,
    amplitudes: Vec<Complex64>,
    norm: f64,
}

/// One `(occupation, re, im)` entry of the JSON state format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEntry(pub Vec<u8>, pub f64, pub f64);

impl QuantumState {
    pub fn new(basis: &FockBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "expected {} amplitudes, got {}",
                basis.dim(),
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("amplitudes", "entries must be finite"));
        }
        let norm = norm_of(&amplitudes);
        Ok(Self {
            basis: basis.clone(),
            amplitudes,
            norm,
        })
    }

    /// The basis vector for one occupation vector.
    pub fn basis_vector(basis: &FockBasis, occ: &[u8]) -> Result<Self> {
        let k = basis.index_or_err(occ)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[k] = Complex64::new(1.0, 0.0);
        Self::new(basis, amps)
    }

    /// Product Fock state with the given site occupations.
    pub fn product_state(basis: &FockBasis, occ: &[u8]) -> Result<Self> {
        if occ.len() != basis.n_sites() {
            return Err(invalid(
                "occupations",
                format!("expected {} sites, got {}", basis.n_sites(), occ.len()),
            ));
        }
        let total: usize = occ.iter().map(|&n| n as usize).sum();
        let fits = match basis.sector() {
            Sector::FixedN(n) => total == n,
            Sector::Truncated(n0) => total <= n0,
        };
        if !fits {
            return Err(Error::SectorMismatch(format!(
                "{total} particles do not fit the sector {:?}",
                basis.sector()
            )));
        }
        Self::basis_vector(basis, occ)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Euclidean norm, computed at construction.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.norm == 0.0 {
            return Err(invalid("state", "cannot normalize the zero vector"));
        }
        let s = 1.0 / self.norm;
        Self::new(&self.basis, self.amplitudes.iter().map(|z| z * s).collect())
    }

    /// `<self, other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.basis.check_same(&other.basis)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|| self - other ||`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.basis.check_same(&other.basis)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Probability weight |psi_k|^2 of every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Expectation of a diagonal observable given by its entries.
    pub fn diagonal_expectation(&self, entries: impl Fn(usize) -> f64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
            .map(|(k, z)| z.norm_sqr() * entries(k))
            .sum()
    }

    /// `<n_x>` for every site.
    pub fn site_densities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.n_sites()];
        for (k, z) in self.amplitudes.iter().enumerate() {
            let w = z.norm_sqr();
            if w == 0.0 {
                continue;
            }
            for (o, &n) in out.iter_mut().zip(self.basis.state(k)) {
                *o += w * f64::from(n);
            }
        }
        out
    }

    /// `<N_X^p>` for a region mask.
    pub fn region_moment(&self, mask: &[bool], p: u32) -> f64 {
        self.diagonal_expectation(|k| (self.basis.count_in(k, mask) as f64).powi(p as i32))
    }

    /// Projection onto the blocks whose total particle number passes `keep`.
    pub fn project_particles(&self, keep: impl Fn(usize) -> bool) -> Self {
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                if keep(self.basis.total(k)) {
                    z
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::new(&self.basis, amps).expect("projection of a valid state")
    }

    /// Nonzero amplitudes as `(occupation, re, im)` triples in basis order.
    pub fn to_entries(&self) -> Vec<StateEntry> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
            .map(|(k, z)| StateEntry(self.basis.state(k).to_vec(), z.re, z.im))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&self.to_entries()).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Reads `(occupation, re, im)` triples; repeated occupations are summed.
    pub fn from_entries(basis: &FockBasis, entries: &[StateEntry]) -> Result<Self> {
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        for StateEntry(occ, re, im) in entries {
            let k = basis.index_or_err(occ)?;
            amps[k] += Complex64::new(*re, *im);
        }
        Self::new(basis, amps)
    }

    pub fn from_json(basis: &FockBasis, json: &str) -> Result<Self> {
        let entries: Vec<StateEntry> =
            serde_json::from_str(json).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::from_entries(basis, &entries)
    }
}

fn norm_of(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Uniform filling `filling` on every site; the sector must hold exactly
/// `filling * |Lambda|` particles.
pub fn mott_state(basis: &FockBasis, filling: u8) -> Result<QuantumState> {
    if filling == 0 {
        return Err(invalid("filling", "must be positive"));
    }
    let total = filling as usize * basis.n_sites();
    let ok = match basis.sector() {
        Sector::FixedN(n) => n == total,
        Sector::Truncated(n0) => n0 >= total,
    };
    if !ok {
        return Err(Error::SectorMismatch(format!(
            "filling {filling} on {} sites needs {total} particles, sector is {:?}",
            basis.n_sites(),
            basis.sector()
        )));
    }
    QuantumState::basis_vector(basis, &vec![filling; basis.n_sites()])
}

/// Product state with an empty shell `X_{2 xi} \ X`.
///
/// `occupations` gives the particle number on every site; any particle in the
/// shell is rejected.
pub fn shell_state(
    basis: &FockBasis,
    region: &Region,
    xi: f64,
    occupations: &[u8],
) -> Result<QuantumState> {
    basis.check_region(region)?;
    if occupations.len() != basis.n_sites() {
        return Err(invalid(
            "occupations",
            format!("expected {} sites, got {}", basis.n_sites(), occupations.len()),
        ));
    }
    let shell = region.fatten(2.0 * xi)?.difference(region)?;
    if let Some(&site) = shell.members().iter().find(|&&x| occupations[x] > 0) {
        return Err(Error::ShellPopulated {
            site,
            occupation: occupations[site],
        });
    }
    QuantumState::product_state(basis, occupations)
}
