use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::fmt_f64;
use crate::error::{invalid, Result};

/// Grid intervals used when no resolution is requested.
pub const DEFAULT_RESOLUTION: usize = 2000;

/// Smallest grid (in points) accepted by the Hölder seminorm.
pub const MIN_HOLDER_POINTS: usize = 1000;

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Smooth monotone step: 0 on `(-inf, omega/2]`, 1 on `[omega, inf)`.
///
/// `f' = g^2 / Z` with the bump `g(x) = exp(-1/((x - omega/2)(omega - x)))`
/// and `u = sqrt(f') = g / sqrt(Z)`. The bump is evaluated relative to its
/// peak so narrow supports do not underflow. `f` is tabulated on a uniform
/// grid by Gauss-Legendre quadrature per cell and interpolated by monotone
/// cubic Hermite pieces; `f'` and `u` are evaluated in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    omega: f64,
    intervals: usize,
    f: Vec<f64>,
    fprime: Vec<f64>,
    u: Vec<f64>,
    /// Integral of the peak-relative bump squared.
    norm: f64,
    /// Limited end slopes of each Hermite piece.
    slopes: Vec<(f64, f64)>,
}

/// `exp(1/q_max - 1/q)` with `q = (x - omega/2)(omega - x)`, zero off the support.
fn bump(omega: f64, x: f64) -> f64 {
    let q = (x - 0.5 * omega) * (omega - x);
    if q <= 0.0 {
        return 0.0;
    }
    let q_max = 0.0625 * omega * omega;
    (1.0 / q_max - 1.0 / q).exp()
}

impl CutoffFunction {
    /// `resolution` grid intervals on `[0, omega]`, rounded up to an even count
    /// so that `omega/2` is a node.
    pub fn new(omega: f64, resolution: usize) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(invalid("omega", format!("must be positive and finite, got {omega}")));
        }
        if resolution < 2 {
            return Err(invalid("resolution", "need at least two grid intervals"));
        }
        let n = resolution + resolution % 2;
        let h = omega / n as f64;
        let mut cumulative = vec![0.0; n + 1];
        for i in 0..n {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let mut cell = 0.0;
            for (&xk, &wk) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                cell += wk * (bump(omega, mid - half * xk).powi(2) + bump(omega, mid + half * xk).powi(2));
            }
            cumulative[i + 1] = cumulative[i] + half * cell;
        }
        let norm = cumulative[n];
        let f: Vec<f64> = cumulative.iter().map(|c| c / norm).collect();
        let fprime: Vec<f64> = (0..=n).map(|i| bump(omega, i as f64 * h).powi(2) / norm).collect();
        let u: Vec<f64> = (0..=n).map(|i| bump(omega, i as f64 * h) / norm.sqrt()).collect();
        let slopes = (0..n)
            .map(|i| {
                let delta = (f[i + 1] - f[i]) / h;
                let (mut m0, mut m1) = (fprime[i], fprime[i + 1]);
                if delta == 0.0 {
                    return (0.0, 0.0);
                }
                // Fritsch-Carlson limiter keeps each piece monotone
                let (a, b) = (m0 / delta, m1 / delta);
                let r2 = a * a + b * b;
                if r2 > 9.0 {
                    let tau = 3.0 / r2.sqrt();
                    m0 = tau * a * delta;
                    m1 = tau * b * delta;
                }
                (m0, m1)
            })
            .collect();
        Ok(Self {
            omega,
            intervals: n,
            f,
            fprime,
            u,
            norm,
            slopes,
        })
    }

    pub fn with_default_resolution(omega: f64) -> Result<Self> {
        Self::new(omega, DEFAULT_RESOLUTION)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn step(&self) -> f64 {
        self.omega / self.intervals as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.intervals).map(|i| i as f64 * self.step()).collect()
    }

    pub fn grid_f(&self) -> &[f64] {
        &self.f
    }

    pub fn grid_fprime(&self) -> &[f64] {
        &self.fprime
    }

    pub fn grid_u(&self) -> &[f64] {
        &self.u
    }

    pub fn f(&self, x: f64) -> f64 {
        if x <= 0.5 * self.omega {
            return 0.0;
        }
        if x >= self.omega {
            return 1.0;
        }
        let h = self.step();
        let i = ((x / h).floor() as usize).min(self.intervals - 1);
        let s = (x - i as f64 * h) / h;
        let (m0, m1) = self.slopes[i];
        let (y0, y1) = (self.f[i], self.f[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * m1;
        v.clamp(0.0, 1.0)
    }

    pub fn fprime(&self, x: f64) -> f64 {
        bump(self.omega, x).powi(2) / self.norm
    }

    pub fn u(&self, x: f64) -> f64 {
        bump(self.omega, x) / self.norm.sqrt()
    }

    /// Trapezoid integral of `f'` over the grid.
    pub fn fprime_integral(&self) -> f64 {
        let h = self.step();
        let n = self.intervals;
        h * (self.fprime[1..n].iter().sum::<f64>() + 0.5 * (self.fprime[0] + self.fprime[n]))
    }

    /// `C_f = ||u||_inf |u|_{0,eps} + |f'|_{0,eps}` with seminorms maximized
    /// over grid pairs.
    pub fn holder_constant(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1], got {eps}")));
        }
        if self.intervals + 1 < MIN_HOLDER_POINTS {
            return Err(invalid(
                "resolution",
                format!(
                    "Hölder seminorms need at least {MIN_HOLDER_POINTS} grid points, have {}",
                    self.intervals + 1
                ),
            ));
        }
        let sup_u = self.u.iter().copied().fold(0.0, f64::max);
        Ok(sup_u * self.seminorm(&self.u, eps) + self.seminorm(&self.fprime, eps))
    }

    /// `sup |v_i - v_j| / |x_i - x_j|^eps` over grid pairs.
    ///
    /// Both tabulated functions vanish outside `(omega/2, omega)`, and a pair
    /// with one node outside is dominated by the pair using the nearest
    /// support endpoint, so only nodes in `[omega/2, omega]` are scanned.
    fn seminorm(&self, v: &[f64], eps: f64) -> f64 {
        let h = self.step();
        let (lo, hi) = (self.intervals / 2, self.intervals);
        if eps == 1.0 {
            return (lo..hi)
                .map(|i| (v[i + 1] - v[i]).abs() / h)
                .fold(0.0, f64::max);
        }
        let window = &v[lo..=hi];
        let range = window.iter().copied().fold(f64::MIN, f64::max)
            - window.iter().copied().fold(f64::MAX, f64::min);
        let mut best = 0.0f64;
        for i in lo..=hi {
            for j in i + 1..=hi {
                let d = ((j - i) as f64 * h).powf(eps);
                if range / d <= best {
                    break;
                }
                best = best.max((v[i] - v[j]).abs() / d);
            }
        }
        best
    }

    /// CSV table `x,f,fprime,u` on the grid.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,f,fprime,u\n");
        for (i, x) in self.grid().iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(*x),
                fmt_f64(self.f[i]),
                fmt_f64(self.fprime[i]),
                fmt_f64(self.u[i])
            );
        }
        out
    }
}
