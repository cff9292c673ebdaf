//! Finite lattice geometry in Z^d: sites, Euclidean distances, balls,
//! fattened regions and annuli.
//!
//! Sites are stored in lexicographic order of their coordinates, so every
//! region-indexed operator built on top of a [`Lattice`] has a reproducible
//! layout. Squared distances between sites are exact integers; distances are
//! their square roots, which are exact for perfect squares.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, PartialEq)]
struct LatticeInner {
    dim: usize,
    shape: Vec<usize>,
    sites: Vec<Vec<i64>>,
    dist2: Vec<i64>,
}

/// A finite set of sites of Z^d with the Euclidean metric.
///
/// Cheap to clone; clones share the same site table.
#[derive(Clone, PartialEq)]
pub struct Lattice {
    inner: Arc<LatticeInner>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("dim", &self.inner.dim)
            .field("shape", &self.inner.shape)
            .field("n_sites", &self.inner.sites.len())
            .finish()
    }
}

/// Serializable description of a box lattice, `{dim, shape: [L1..Ld]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub shape: Vec<usize>,
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice> {
        if self.shape.len() != self.dim {
            return Err(invalid(
                "shape",
                format!("expected {} extents, got {}", self.dim, self.shape.len()),
            ));
        }
        Lattice::grid(&self.shape)
    }
}

impl Lattice {
    /// The chain {0, 1, ..., len - 1} in Z.
    pub fn chain(len: usize) -> Result<Self> {
        Self::grid(&[len])
    }

    /// The axis-aligned box {0..L1-1} x ... x {0..Ld-1}.
    pub fn grid(shape: &[usize]) -> Result<Self> {
        if shape.is_empty() {
            return Err(invalid("shape", "dimension must be positive"));
        }
        if shape.contains(&0) {
            return Err(invalid("shape", "every extent must be positive"));
        }
        let dim = shape.len();
        let n: usize = shape.iter().product();
        let mut sites = Vec::with_capacity(n);
        let mut coord = vec![0i64; dim];
        for _ in 0..n {
            sites.push(coord.clone());
            // odometer, last axis fastest: lexicographic order
            for axis in (0..dim).rev() {
                coord[axis] += 1;
                if (coord[axis] as usize) < shape[axis] {
                    break;
                }
                coord[axis] = 0;
            }
        }
        Ok(Self::from_parts(dim, shape.to_vec(), sites))
    }

    /// An arbitrary finite subset of Z^d. Sites are sorted lexicographically;
    /// duplicates are rejected.
    pub fn from_sites(dim: usize, mut sites: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be positive"));
        }
        if sites.is_empty() {
            return Err(invalid("sites", "lattice must contain at least one site"));
        }
        if let Some(bad) = sites.iter().find(|s| s.len() != dim) {
            return Err(invalid(
                "sites",
                format!("site {bad:?} does not have {dim} coordinates"),
            ));
        }
        sites.sort();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("sites", "sites must be distinct"));
        }
        Ok(Self::from_parts(dim, Vec::new(), sites))
    }

    fn from_parts(dim: usize, shape: Vec<usize>, sites: Vec<Vec<i64>>) -> Self {
        let n = sites.len();
        let mut dist2 = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                dist2[i * n + j] = sites[i]
                    .iter()
                    .zip(&sites[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
            }
        }
        Self {
            inner: Arc::new(LatticeInner {
                dim,
                shape,
                sites,
                dist2,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n_sites(&self) -> usize {
        self.inner.sites.len()
    }

    /// Box extents; empty for lattices built from explicit site lists.
    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn coords(&self, site: usize) -> &[i64] {
        &self.inner.sites[site]
    }

    pub fn sites(&self) -> impl Iterator<Item = &[i64]> {
        self.inner.sites.iter().map(Vec::as_slice)
    }

    pub fn site_index(&self, coords: &[i64]) -> Option<usize> {
        self.inner
            .sites
            .binary_search_by(|s| s.as_slice().cmp(coords))
            .ok()
    }

    /// Exact squared distance between two sites.
    pub fn dist2(&self, a: usize, b: usize) -> i64 {
        self.inner.dist2[a * self.n_sites() + b]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        (self.dist2(a, b) as f64).sqrt()
    }

    /// Distance from a site to an arbitrary point of R^d.
    pub fn distance_to_point(&self, site: usize, point: &[f64]) -> f64 {
        self.coords(site)
            .iter()
            .zip(point)
            .map(|(&c, &p)| {
                let d = c as f64 - p;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn diameter(&self) -> f64 {
        let max = self.inner.dist2.iter().copied().max().unwrap_or(0);
        (max as f64).sqrt()
    }

    /// Per-axis (min, max) of the site coordinates.
    pub fn bounding_box(&self) -> Vec<(i64, i64)> {
        (0..self.dim())
            .map(|axis| {
                let it = self.inner.sites.iter().map(|s| s[axis]);
                (it.clone().min().unwrap_or(0), it.max().unwrap_or(0))
            })
            .collect()
    }

    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    pub fn full(&self) -> Region {
        Region {
            lattice: self.clone(),
            members: (0..self.n_sites()).collect(),
        }
    }

    pub fn empty_region(&self) -> Region {
        Region {
            lattice: self.clone(),
            members: Vec::new(),
        }
    }

    /// A region from explicit site indices (sorted and deduplicated).
    pub fn region(&self, sites: impl IntoIterator<Item = usize>) -> Result<Region> {
        let mut members: Vec<usize> = sites.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&s| s >= self.n_sites()) {
            return Err(invalid(
                "sites",
                format!("site index {bad} out of range 0..{}", self.n_sites()),
            ));
        }
        Ok(Region {
            lattice: self.clone(),
            members,
        })
    }

    /// All sites within Euclidean distance `radius` of `center`. The center
    /// need not be a site.
    pub fn ball(&self, center: &[f64], radius: f64) -> Result<Region> {
        if center.len() != self.dim() {
            return Err(invalid(
                "center",
                format!("expected {} coordinates, got {}", self.dim(), center.len()),
            ));
        }
        if !(radius >= 0.0) {
            return Err(invalid("radius", format!("must be nonnegative, got {radius}")));
        }
        let members = (0..self.n_sites())
            .filter(|&s| self.distance_to_point(s, center) <= radius)
            .collect();
        Ok(Region {
            lattice: self.clone(),
            members,
        })
    }

    /// Ball around a lattice site.
    pub fn ball_at_site(&self, site: usize, radius: f64) -> Result<Region> {
        let center: Vec<f64> = self.coords(site).iter().map(|&c| c as f64).collect();
        self.ball(&center, radius)
    }
}

/// A subset of the sites of a [`Lattice`], kept as sorted site indices.
#[derive(Clone, PartialEq)]
pub struct Region {
    lattice: Lattice,
    members: Vec<usize>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Region").field(&self.members).finish()
    }
}

impl Region {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.members.binary_search(&site).is_ok()
    }

    /// Membership mask over all lattice sites.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.lattice.n_sites()];
        for &s in &self.members {
            mask[s] = true;
        }
        mask
    }

    pub fn complement(&self) -> Region {
        let mask = self.mask();
        Region {
            lattice: self.lattice.clone(),
            members: (0..mask.len()).filter(|&s| !mask[s]).collect(),
        }
    }

    fn check_same(&self, other: &Region) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch(
                "regions live on different lattices".into(),
            ));
        }
        Ok(())
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        self.check_same(other)?;
        let mut members: Vec<usize> = self.members.iter().chain(&other.members).copied().collect();
        members.sort_unstable();
        members.dedup();
        Ok(Region {
            lattice: self.lattice.clone(),
            members,
        })
    }

    pub fn difference(&self, other: &Region) -> Result<Region> {
        self.check_same(other)?;
        let mask = other.mask();
        Ok(Region {
            lattice: self.lattice.clone(),
            members: self.members.iter().copied().filter(|&s| !mask[s]).collect(),
        })
    }

    pub fn intersection(&self, other: &Region) -> Result<Region> {
        self.check_same(other)?;
        let mask = other.mask();
        Ok(Region {
            lattice: self.lattice.clone(),
            members: self.members.iter().copied().filter(|&s| mask[s]).collect(),
        })
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        let mask = other.mask();
        self.lattice == other.lattice && self.members.iter().all(|&s| mask[s])
    }

    /// d_X(x) = min over y in X of |x - y|, as an exact squared distance.
    fn dist2_to_site(&self, site: usize) -> Option<i64> {
        self.members
            .iter()
            .map(|&m| self.lattice.dist2(site, m))
            .min()
    }

    /// Distance from a site to this region.
    pub fn distance_to_site(&self, site: usize) -> Result<f64> {
        self.dist2_to_site(site)
            .map(|d2| (d2 as f64).sqrt())
            .ok_or(Error::EmptyRegion("distance function of an empty region"))
    }

    /// X_xi = {x : d_X(x) <= xi}.
    pub fn fatten(&self, xi: f64) -> Result<Region> {
        if self.is_empty() {
            return Err(Error::EmptyRegion("cannot fatten an empty region"));
        }
        if !(xi >= 0.0) {
            return Err(invalid("xi", format!("must be nonnegative, got {xi}")));
        }
        let members = (0..self.lattice.n_sites())
            .filter(|&s| {
                let d2 = self.dist2_to_site(s).unwrap_or(i64::MAX);
                (d2 as f64).sqrt() <= xi
            })
            .collect();
        Ok(Region {
            lattice: self.lattice.clone(),
            members,
        })
    }

    /// The annular shell X_{(1+gamma) xi} \ X_{(1-gamma) xi}.
    pub fn annular_shell(&self, xi: f64, gamma: f64) -> Result<Region> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("must lie in [0, 1], got {gamma}")));
        }
        if !(xi > 0.0) {
            return Err(invalid("xi", format!("must be positive, got {xi}")));
        }
        let outer = self.fatten((1.0 + gamma) * xi)?;
        let inner = self.fatten((1.0 - gamma) * xi)?;
        outer.difference(&inner)
    }

    /// Inner (gamma1) and outer (gamma2) annular shells around the boundary of
    /// X_xi. Requires gamma1 < gamma2.
    pub fn annulus(&self, xi: f64, gamma1: f64, gamma2: f64) -> Result<(Region, Region)> {
        if !(gamma2 > gamma1) {
            return Err(invalid(
                "gamma2",
                format!("must exceed gamma1 ({gamma2} <= {gamma1})"),
            ));
        }
        let inner = self.annular_shell(xi, gamma1)?;
        let outer = self.annular_shell(xi, gamma2)?;
        Ok((inner, outer))
    }

    /// Largest distance between two members (0 for singletons and empty sets).
    pub fn diameter(&self) -> f64 {
        let mut best = 0i64;
        for (i, &a) in self.members.iter().enumerate() {
            for &b in &self.members[i + 1..] {
                best = best.max(self.lattice.dist2(a, b));
            }
        }
        (best as f64).sqrt()
    }

    /// min over pairs of |x - y|.
    pub fn distance(&self, other: &Region) -> Result<f64> {
        self.check_same(other)?;
        if self.is_empty() || other.is_empty() {
            return Err(Error::EmptyRegion("distance between regions"));
        }
        let d2 = self
            .members
            .iter()
            .flat_map(|&a| other.members.iter().map(move |&b| (a, b)))
            .map(|(a, b)| self.lattice.dist2(a, b))
            .min()
            .unwrap_or(0);
        Ok((d2 as f64).sqrt())
    }
}

/// Serializable region description: explicit site indices or a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    Sites { sites: Vec<usize> },
    Ball { ball: BallSpec },
    All { all: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl RegionSpec {
    pub fn resolve(&self, lattice: &Lattice) -> Result<Region> {
        match self {
            RegionSpec::Sites { sites } => lattice.region(sites.iter().copied()),
            RegionSpec::Ball { ball } => lattice.ball(&ball.center, ball.radius),
            RegionSpec::All { all: true } => Ok(lattice.full()),
            RegionSpec::All { all: false } => Ok(lattice.empty_region()),
        }
    }
}
