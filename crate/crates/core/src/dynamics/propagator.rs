use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{QuantumState, SparseOperator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DenseEigen,
    Krylov,
    /// Dense below `dense_threshold`, Krylov above.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagatorOptions {
    pub method: Method,
    pub krylov_dim: usize,
    /// Local error target per accepted substep, relative to the state norm.
    pub substep_tolerance: f64,
    pub dense_threshold: usize,
    /// Substeps allowed per call before giving up.
    pub max_substeps: usize,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            krylov_dim: 30,
            substep_tolerance: 1e-10,
            dense_threshold: 400,
            max_substeps: 100_000,
        }
    }
}

impl PropagatorOptions {
    pub fn validate(&self) -> Result<()> {
        if self.krylov_dim < 2 {
            return Err(invalid("krylov_dim", "must be at least 2"));
        }
        if !(self.substep_tolerance > 0.0) {
            return Err(invalid("substep_tolerance", "must be positive"));
        }
        if self.max_substeps == 0 {
            return Err(invalid("max_substeps", "must be positive"));
        }
        Ok(())
    }
}

/// Eigendecomposition `H = U diag(E) U^dagger`.
struct Spectrum {
    energies: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

/// `psi -> exp(-i t H) psi` for a Hermitian sparse `H`.
#[derive(Clone)]
pub struct Propagator {
    hamiltonian: Arc<SparseOperator>,
    options: PropagatorOptions,
    spectrum: Arc<OnceLock<Spectrum>>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("dim", &self.hamiltonian.dim())
            .field("options", &self.options)
            .field("resolved", &self.resolved_method())
            .finish()
    }
}

impl Propagator {
    pub fn new(hamiltonian: SparseOperator, options: PropagatorOptions) -> Result<Self> {
        options.validate()?;
        if !hamiltonian.is_hermitian() {
            return Err(Error::OperatorPrecondition(
                "the generator of the dynamics must be Hermitian".into(),
            ));
        }
        Ok(Self {
            hamiltonian: Arc::new(hamiltonian),
            options,
            spectrum: Arc::new(OnceLock::new()),
        })
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    pub fn options(&self) -> &PropagatorOptions {
        &self.options
    }

    /// The method actually used (`Auto` resolved by dimension).
    pub fn resolved_method(&self) -> Method {
        match self.options.method {
            Method::Auto if self.hamiltonian.dim() <= self.options.dense_threshold => Method::DenseEigen,
            Method::Auto => Method::Krylov,
            m => m,
        }
    }

    /// Same Hamiltonian, forced method.
    pub fn with_method(&self, method: Method) -> Self {
        Self {
            hamiltonian: Arc::clone(&self.hamiltonian),
            options: PropagatorOptions {
                method,
                ..self.options
            },
            spectrum: Arc::clone(&self.spectrum),
        }
    }

    fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let eig = SymmetricEigen::new(self.hamiltonian.to_dense());
            Spectrum {
                energies: eig.eigenvalues.iter().copied().collect(),
                vectors: eig.eigenvectors,
            }
        })
    }

    pub fn evolve(&self, psi: &QuantumState, t: f64) -> Result<QuantumState> {
        self.hamiltonian.basis().check_same(psi.basis())?;
        if !t.is_finite() {
            return Err(invalid("t", "time must be finite"));
        }
        if t == 0.0 {
            return Ok(psi.clone());
        }
        let amps = match self.resolved_method() {
            Method::DenseEigen => self.evolve_dense(psi.amplitudes(), t),
            _ => self.evolve_krylov(psi.amplitudes(), t)?,
        };
        QuantumState::new(psi.basis(), amps)
    }

    /// States at each of `times` (any order), starting from `psi` at time 0.
    ///
    /// Dense propagation evaluates every time directly; Krylov steps from one
    /// sorted time to the next.
    pub fn evolve_many(&self, psi: &QuantumState, times: &[f64]) -> Result<Vec<QuantumState>> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::TimeGrid("times must be finite".into()));
        }
        if self.resolved_method() == Method::DenseEigen {
            return times.iter().map(|&t| self.evolve(psi, t)).collect();
        }
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut out: Vec<Option<QuantumState>> = vec![None; times.len()];
        // forward from 0 for nonnegative times, backward for negative ones
        let split = order.partition_point(|&k| times[k] < 0.0);
        let (neg, pos) = order.split_at(split);
        let mut cur = psi.clone();
        let mut now = 0.0;
        for &k in pos {
            cur = self.evolve(&cur, times[k] - now)?;
            now = times[k];
            out[k] = Some(cur.clone());
        }
        let mut cur = psi.clone();
        let mut now = 0.0;
        for &k in neg.iter().rev() {
            cur = self.evolve(&cur, times[k] - now)?;
            now = times[k];
            out[k] = Some(cur.clone());
        }
        Ok(out.into_iter().map(|s| s.expect("every time visited")).collect())
    }

    fn evolve_dense(&self, x: &[Complex64], t: f64) -> Vec<Complex64> {
        let sp = self.spectrum();
        let u = &sp.vectors;
        let v = DVector::from_column_slice(x);
        let mut c = u.ad_mul(&v);
        for (ck, &e) in c.iter_mut().zip(&sp.energies) {
            *ck *= Complex64::from_polar(1.0, -e * t);
        }
        (u * c).iter().copied().collect()
    }

    fn evolve_krylov(&self, x: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let h = &*self.hamiltonian;
        let dim = h.dim();
        let m_max = self.options.krylov_dim.min(dim).max(1);
        let tol = self.options.substep_tolerance;
        let mut psi = x.to_vec();
        let mut done = 0.0f64;
        let mut steps = 0usize;
        let mut tau = t;
        while done.abs() < t.abs() {
            let beta0 = norm(&psi);
            if beta0 == 0.0 {
                break;
            }
            let basis = lanczos(h, &psi, beta0, m_max);
            let remaining = t - done;
            if tau.abs() > remaining.abs() {
                tau = remaining;
            }
            // shrink tau on the current basis until the local error passes
            let (coeffs, tau_used) = loop {
                steps += 1;
                if steps > self.options.max_substeps {
                    let (_, err) = basis.step(tau, beta0);
                    return Err(Error::KrylovNonConvergence {
                        residual: err,
                        tau,
                    });
                }
                let (c, err) = basis.step(tau, beta0);
                if err <= tol * beta0 {
                    break (c, tau);
                }
                tau *= 0.5;
            };
            psi = basis.expand(&coeffs, beta0);
            done += tau_used;
            if basis.invariant {
                tau = t - done;
            } else {
                // try a larger step next time
                tau = tau_used * 2.0;
            }
            if (t - done).abs() <= f64::EPSILON * t.abs() {
                break;
            }
        }
        Ok(psi)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Orthonormal Krylov basis with the real tridiagonal projection of `H`.
struct KrylovBasis {
    vectors: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Residual coupling out of the subspace (0 on breakdown).
    beta_last: f64,
    invariant: bool,
}

fn lanczos(h: &SparseOperator, psi: &[Complex64], beta0: f64, m_max: usize) -> KrylovBasis {
    let inv = 1.0 / beta0;
    let mut vectors = vec![psi.iter().map(|z| z * inv).collect::<Vec<_>>()];
    let mut alpha = Vec::with_capacity(m_max);
    let mut beta = Vec::with_capacity(m_max);
    let mut w = vec![ZERO; psi.len()];
    let scale = h.max_abs().max(1e-300);
    loop {
        let j = vectors.len() - 1;
        h.matvec_into(&vectors[j], &mut w);
        let a = dot(&vectors[j], &w).re;
        alpha.push(a);
        // full reorthogonalization, applied twice
        for _ in 0..2 {
            for v in &vectors {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = norm(&w);
        if b <= 1e-13 * scale * (j as f64 + 1.0) {
            return KrylovBasis {
                vectors,
                alpha,
                beta,
                beta_last: 0.0,
                invariant: true,
            };
        }
        if vectors.len() == m_max {
            return KrylovBasis {
                vectors,
                alpha,
                beta,
                beta_last: b,
                invariant: false,
            };
        }
        beta.push(b);
        let ib = 1.0 / b;
        vectors.push(w.iter().map(|z| z * ib).collect());
    }
}

impl KrylovBasis {
    /// Coefficients of `exp(-i tau T) e_1` and the local error estimate
    /// `beta0 * beta_m * |last coefficient|`.
    fn step(&self, tau: f64, beta0: f64) -> (Vec<Complex64>, f64) {
        let m = self.alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let q = &eig.eigenvectors;
        let coeffs: Vec<Complex64> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| Complex64::from_polar(q[(i, k)] * q[(0, k)], -eig.eigenvalues[k] * tau))
                    .sum()
            })
            .collect();
        let err = beta0 * self.beta_last * coeffs[m - 1].norm();
        (coeffs, err)
    }

    fn expand(&self, coeffs: &[Complex64], beta0: f64) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.vectors[0].len()];
        for (v, &c) in self.vectors.iter().zip(coeffs) {
            let c = c * beta0;
            for (o, vi) in out.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
        out
    }
}
