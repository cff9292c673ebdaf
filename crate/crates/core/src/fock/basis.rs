use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{Lattice, Region};

/// Default hard cap on the number of basis states.
pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

/// Particle-number sector of the occupation basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    /// Exactly `N` particles.
    FixedN(usize),
    /// Every particle number `0..=N0`.
    Truncated(usize),
}

impl Sector {
    pub fn max_particles(&self) -> usize {
        match *self {
            Sector::FixedN(n) | Sector::Truncated(n) => n,
        }
    }

    pub fn min_particles(&self) -> usize {
        match *self {
            Sector::FixedN(n) => n,
            Sector::Truncated(_) => 0,
        }
    }
}

/// C(n, k) with saturation at u128::MAX.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        match acc.checked_mul(u128::from(n - i)) {
            Some(v) => acc = v / u128::from(i + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Number of occupation vectors with `n` particles on `sites` sites.
pub fn block_dimension(sites: usize, n: usize) -> u128 {
    if sites == 0 {
        return u128::from(n == 0);
    }
    binomial((n + sites - 1) as u64, n as u64)
}

/// Dimension of a sector without enumerating it.
pub fn sector_dimension(sites: usize, sector: Sector) -> u128 {
    (sector.min_particles()..=sector.max_particles())
        .map(|n| block_dimension(sites, n))
        .fold(0u128, u128::saturating_add)
}

struct BasisInner {
    lattice: Lattice,
    sector: Sector,
    states: Vec<u8>,
    /// block_start[k] is the index of the first state with min_particles + k particles.
    block_start: Vec<usize>,
    /// ways[m][s] = number of ways to put m particles on s sites, as usize.
    ways: Vec<Vec<usize>>,
}

/// Occupation-number basis of a particle-number sector, ordered by total
/// particle number and then lexicographically (ascending) within each block.
///
/// Cheap to clone. The inverse map is a combinatorial rank, so no hash table
/// is stored.
#[derive(Clone)]
pub struct FockBasis {
    inner: Arc<BasisInner>,
}

impl fmt::Debug for FockBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockBasis")
            .field("sites", &self.n_sites())
            .field("sector", &self.inner.sector)
            .field("dim", &self.dim())
            .finish()
    }
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.sector == other.inner.sector && self.inner.lattice == other.inner.lattice)
    }
}

impl FockBasis {
    pub fn new(lattice: &Lattice, sector: Sector) -> Result<Self> {
        Self::with_cap(lattice, sector, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(lattice: &Lattice, sector: Sector, cap: usize) -> Result<Self> {
        let sites = lattice.n_sites();
        let nmax = sector.max_particles();
        if nmax > u8::MAX as usize {
            return Err(invalid(
                "sector",
                format!("at most {} particles are supported, got {nmax}", u8::MAX),
            ));
        }
        let dim = sector_dimension(sites, sector);
        if dim > cap as u128 {
            return Err(Error::DimensionCap { dim, cap });
        }
        let dim = dim as usize;

        let mut ways = vec![vec![0usize; sites + 1]; nmax + 1];
        for (m, row) in ways.iter_mut().enumerate() {
            for (s, w) in row.iter_mut().enumerate() {
                // bounded by the block size, which fits under the cap
                *w = block_dimension(s, m).min(usize::MAX as u128) as usize;
            }
        }

        let mut states = Vec::with_capacity(dim * sites);
        let mut block_start = Vec::new();
        let mut occ = vec![0u8; sites];
        for n in sector.min_particles()..=nmax {
            block_start.push(states.len() / sites);
            enumerate_block(&mut occ, 0, n, &mut states);
        }
        debug_assert_eq!(states.len(), dim * sites);
        Ok(Self {
            inner: Arc::new(BasisInner {
                lattice: lattice.clone(),
                sector,
                states,
                block_start,
                ways,
            }),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.inner.lattice
    }

    pub fn sector(&self) -> Sector {
        self.inner.sector
    }

    pub fn n_sites(&self) -> usize {
        self.inner.lattice.n_sites()
    }

    pub fn dim(&self) -> usize {
        self.inner.states.len() / self.n_sites()
    }

    /// Occupation vector of basis state `k`.
    #[inline]
    pub fn state(&self, k: usize) -> &[u8] {
        let s = self.n_sites();
        &self.inner.states[k * s..(k + 1) * s]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        (0..self.dim()).map(move |k| self.state(k))
    }

    pub fn total(&self, k: usize) -> usize {
        self.state(k).iter().map(|&n| n as usize).sum()
    }

    /// Index range of the block with exactly `n` particles.
    pub fn block(&self, n: usize) -> Option<std::ops::Range<usize>> {
        let lo = self.sector().min_particles();
        if n < lo || n > self.sector().max_particles() {
            return None;
        }
        let k = n - lo;
        let start = self.inner.block_start[k];
        let end = self
            .inner
            .block_start
            .get(k + 1)
            .copied()
            .unwrap_or_else(|| self.dim());
        Some(start..end)
    }

    /// Position of an occupation vector, or `None` if it is outside the sector.
    pub fn index(&self, occ: &[u8]) -> Option<usize> {
        let sites = self.n_sites();
        if occ.len() != sites {
            return None;
        }
        let n: usize = occ.iter().map(|&v| v as usize).sum();
        let start = self.block(n)?.start;
        let ways = &self.inner.ways;
        let mut rank = 0usize;
        let mut remaining = n;
        for (x, &nx) in occ.iter().enumerate().take(sites.saturating_sub(1)) {
            let rest = sites - x - 1;
            // vectors sharing the prefix but with a smaller value at x
            for k in 0..nx as usize {
                rank += ways[remaining - k][rest];
            }
            remaining -= nx as usize;
        }
        Some(start + rank)
    }

    pub fn index_or_err(&self, occ: &[u8]) -> Result<usize> {
        self.index(occ)
            .ok_or_else(|| Error::UnknownOccupation(occ.to_vec()))
    }

    /// Total number of particles on `region` in basis state `k`.
    pub fn count_in(&self, k: usize, mask: &[bool]) -> usize {
        self.state(k)
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&n, _)| n as usize)
            .sum()
    }

    pub fn check_region(&self, region: &Region) -> Result<()> {
        if region.lattice() != self.lattice() {
            return Err(Error::LatticeMismatch(
                "region and basis use different lattices".into(),
            ));
        }
        Ok(())
    }

    pub fn check_same(&self, other: &FockBasis) -> Result<()> {
        if self != other {
            return Err(Error::BasisMismatch(format!(
                "{:?} vs {:?}",
                self.sector(),
                other.sector()
            )));
        }
        Ok(())
    }
}

fn enumerate_block(occ: &mut [u8], pos: usize, remaining: usize, out: &mut Vec<u8>) {
    let sites = occ.len();
    if pos == sites - 1 {
        occ[pos] = remaining as u8;
        out.extend_from_slice(occ);
        return;
    }
    for k in 0..=remaining {
        occ[pos] = k as u8;
        enumerate_block(occ, pos + 1, remaining - k, out);
    }
    occ[pos] = 0;
}
