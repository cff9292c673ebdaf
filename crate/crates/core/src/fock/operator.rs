use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::basis::FockBasis;
use crate::fock::state::QuantumState;

/// Entrywise tolerance behind the Hermitian flag.
pub const HERMITIAN_TOL: f64 = 1e-14;

/// Rows per rayon task in matrix-vector products.
const PAR_CHUNK: usize = 2048;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Operator on a Fock basis in compressed sparse row layout.
///
/// Duplicate entries are merged at construction and explicit zeros dropped,
/// so two operators with equal matrices have identical layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    basis: FockBasis,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Builds an operator from `(row, col, value)` triplets.
    ///
    /// With `hermitian = true` the result is checked against its adjoint.
    pub fn from_triplets(
        basis: &FockBasis,
        mut triplets: Vec<(usize, usize, Complex64)>,
        hermitian: bool,
    ) -> Result<Self> {
        let dim = basis.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::OperatorPrecondition(format!(
                "entry ({r}, {c}) outside dimension {dim}"
            )));
        }
        if let Some(&(r, c, v)) = triplets.iter().find(|t| !(t.2.re.is_finite() && t.2.im.is_finite())) {
            return Err(Error::OperatorPrecondition(format!(
                "entry ({r}, {c}) is not finite: {v}"
            )));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                values.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(cols.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(values) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let op = Self {
            basis: basis.clone(),
            row_ptr,
            cols: keep_cols,
            values: keep_vals,
            hermitian: false,
        };
        if hermitian {
            op.into_hermitian()
        } else {
            Ok(op)
        }
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(basis: &FockBasis, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != basis.dim() {
            return Err(Error::OperatorPrecondition(format!(
                "expected {} diagonal entries, got {}",
                basis.dim(),
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::OperatorPrecondition("diagonal entries must be finite".into()));
        }
        let dim = basis.dim();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, v) in entries.into_iter().enumerate() {
            if v != 0.0 {
                cols.push(i);
                values.push(Complex64::new(v, 0.0));
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            basis: basis.clone(),
            row_ptr,
            cols,
            values,
            hermitian: true,
        })
    }

    pub fn zero(basis: &FockBasis) -> Self {
        Self {
            basis: basis.clone(),
            row_ptr: vec![0; basis.dim() + 1],
            cols: Vec::new(),
            values: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(basis: &FockBasis) -> Self {
        Self::diagonal(basis, vec![1.0; basis.dim()]).expect("finite entries")
    }

    /// Marks the operator Hermitian after checking `A = A^dagger` entrywise.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::OperatorPrecondition(format!(
                "operator is not Hermitian (max deviation {dev:e})"
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[Complex64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(i, j, _)| i == j)
    }

    /// Real diagonal entries if the operator is diagonal with real values.
    pub fn real_diagonal(&self) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        for (i, j, v) in self.entries() {
            if i != j || v.im != 0.0 {
                return None;
            }
            out[i] = v.re;
        }
        Some(out)
    }

    /// Largest entrywise |A_ij - conj(A_ji)|.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for (i, j, v) in self.entries() {
            dev = dev.max((v - self.get(j, i).conj()).norm());
        }
        dev
    }

    /// True if every entry connects states with the same particle number.
    pub fn conserves_particle_number(&self) -> bool {
        self.entries()
            .all(|(i, j, _)| self.basis.total(i) == self.basis.total(j))
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y = A x`. Rows are processed in parallel chunks; each output entry
    /// is summed in a fixed order, so results do not depend on thread count.
    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim(), "vector length must match dimension");
        assert_eq!(y.len(), self.dim(), "output length must match dimension");
        let row_kernel = |i: usize| -> Complex64 {
            let (cols, vals) = self.row(i);
            let mut acc = ZERO;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            acc
        };
        if self.dim() >= 2 * PAR_CHUNK {
            y.par_chunks_mut(PAR_CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * PAR_CHUNK;
                    for (k, out) in chunk.iter_mut().enumerate() {
                        *out = row_kernel(base + k);
                    }
                });
        } else {
            for (i, out) in y.iter_mut().enumerate() {
                *out = row_kernel(i);
            }
        }
    }

    /// `A^dagger x`.
    pub fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        if self.hermitian {
            return self.matvec(x);
        }
        assert_eq!(x.len(), self.dim(), "vector length must match dimension");
        let mut y = vec![ZERO; self.dim()];
        for (i, j, v) in self.entries() {
            y[j] += v.conj() * x[i];
        }
        y
    }

    pub fn apply(&self, psi: &QuantumState) -> Result<QuantumState> {
        self.basis.check_same(psi.basis())?;
        QuantumState::new(&self.basis, self.matvec(psi.amplitudes()))
    }

    pub fn apply_adjoint_state(&self, psi: &QuantumState) -> Result<QuantumState> {
        self.basis.check_same(psi.basis())?;
        QuantumState::new(&self.basis, self.apply_adjoint(psi.amplitudes()))
    }

    /// `<psi, A psi>`.
    pub fn expectation(&self, psi: &QuantumState) -> Result<Complex64> {
        self.basis.check_same(psi.basis())?;
        Ok(self.sandwich_raw(psi.amplitudes(), psi.amplitudes()))
    }

    /// `<phi, A chi>`.
    pub fn sandwich(&self, phi: &QuantumState, chi: &QuantumState) -> Result<Complex64> {
        self.basis.check_same(phi.basis())?;
        self.basis.check_same(chi.basis())?;
        Ok(self.sandwich_raw(phi.amplitudes(), chi.amplitudes()))
    }

    pub(crate) fn sandwich_raw(&self, phi: &[Complex64], chi: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for (i, p) in phi.iter().enumerate().take(self.dim()) {
            let (cols, vals) = self.row(i);
            let mut row = ZERO;
            for (&j, &v) in cols.iter().zip(vals) {
                row += v * chi[j];
            }
            acc += p.conj() * row;
        }
        acc
    }

    pub fn adjoint(&self) -> Self {
        if self.hermitian {
            return self.clone();
        }
        let trip = self.entries().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(&self.basis, trip, false).expect("adjoint of a valid operator")
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let trip = self.entries().map(|(i, j, v)| (i, j, v * c)).collect();
        let out = Self::from_triplets(&self.basis, trip, false).expect("scaled valid operator");
        if self.hermitian && c.im == 0.0 {
            Self { hermitian: true, ..out }
        } else {
            out
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.basis.check_same(&other.basis)?;
        let trip = self.entries().chain(other.entries()).collect();
        let out = Self::from_triplets(&self.basis, trip, false)?;
        let hermitian = self.hermitian && other.hermitian;
        Ok(Self { hermitian, ..out })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.basis.check_same(&other.basis)?;
        let mut trip = Vec::new();
        for i in 0..self.dim() {
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (cols2, vals2) = other.row(k);
                for (&j, &b) in cols2.iter().zip(vals2) {
                    trip.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(&self.basis, trip, false)
    }

    /// `[self, other] = self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Largest absolute entry (0 for the zero operator).
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Integer power of a real diagonal operator.
    pub fn diagonal_powi(&self, p: i32) -> Result<Self> {
        let d = self.real_diagonal().ok_or_else(|| {
            Error::OperatorPrecondition("powers are only taken of real diagonal operators".into())
        })?;
        Self::diagonal(&self.basis, d.into_iter().map(|v| v.powi(p)).collect())
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }
}
