use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fock::QuantumState;

/// Tightest `(lambda1, lambda2)` with
/// `(lambda1 r^d)^q <= <N_{B_r(x)}^q> <= (lambda2 r^d)^q`
/// over site-centred balls and `q = 1..=p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityWindow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub radii: Vec<f64>,
    pub p: u32,
}

impl DensityWindow {
    /// A window with a positive floor exists.
    pub fn feasible(&self) -> bool {
        self.lambda1 > 0.0
    }

    /// Whether a proposed window contains the measured one.
    pub fn admits(&self, lambda1: f64, lambda2: f64) -> bool {
        lambda1 <= self.lambda1 && lambda2 >= self.lambda2
    }
}

/// Radii `1, 2, 4, ...` up to the lattice diameter, merged with `extra`.
pub fn scan_radii(diameter: f64, extra: &[f64]) -> Vec<f64> {
    let mut radii = vec![1.0];
    let mut r = 2.0;
    while r <= diameter {
        radii.push(r);
        r *= 2.0;
    }
    radii.extend(extra.iter().copied().filter(|&r| r >= 1.0 && r.is_finite()));
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
}

pub fn density_window(psi: &QuantumState, p: u32, extra_radii: &[f64]) -> Result<DensityWindow> {
    if p == 0 {
        return Err(invalid("p", "must be a positive integer"));
    }
    let lat = psi.basis().lattice();
    let radii = scan_radii(lat.diameter(), extra_radii);
    let d = lat.dim() as i32;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &r in &radii {
        for x in 0..lat.n_sites() {
            let mask = lat.ball_at_site(x, r)?.mask();
            for q in 1..=p {
                let v = psi.region_moment(&mask, q).max(0.0).powf(1.0 / f64::from(q)) / r.powi(d);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    Ok(DensityWindow {
        lambda1: lo,
        lambda2: hi,
        radii,
        p,
    })
}

/// Checks a proposed window; returns the verdict with the measured window.
pub fn density_window_check(
    psi: &QuantumState,
    lambda1: f64,
    lambda2: f64,
    p: u32,
) -> Result<(bool, DensityWindow)> {
    let w = density_window(psi, p, &[])?;
    Ok((w.admits(lambda1, lambda2), w))
}
