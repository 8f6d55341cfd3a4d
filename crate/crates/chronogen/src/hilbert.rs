//! Dense complex linear-algebra kernel.
//!
//! Vectors and matrices are immutable after construction and all operations
//! are pure functions, so everything here is safe to use from multiple
//! threads. Storage is dense (`nalgebra` behind the scenes); the global
//! dimension is capped at [`MAX_DIM`] — this is a desk-scale exact kernel,
//! not a sparse solver.
//!
//! Flat indexing of bipartite states is **system-major**: the global basis
//! index of `|s⟩ ⊗ |c⟩` is `s * d_c + c`. With that convention the two-qubit
//! basis reads `{|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩}` at indices 0..4.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex<f64>;

/// Maximum supported (global) dimension for dense operations.
pub const MAX_DIM: usize = 4096;

/// Relative tolerance for Hermiticity validation.
pub const HERMITICITY_TOL: f64 = 1e-12;

pub(crate) fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A finite-dimensional complex vector (dimension ≥ 1, finite entries).
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    data: DVector<C64>,
}

impl CVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Validation("vector dimension must be >= 1".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("vector entries must be finite".into()));
        }
        Ok(Self {
            data: DVector::from_vec(entries),
        })
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&r| c64(r, 0.0)).collect())
    }

    /// Computational basis state `|index⟩` of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Validation(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut entries = vec![c64(0.0, 0.0); dim];
        entries[index] = c64(1.0, 0.0);
        Self::new(entries)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("vector dimension must be >= 1".into()));
        }
        Ok(Self {
            data: DVector::from_element(dim, c64(0.0, 0.0)),
        })
    }

    pub(crate) fn from_dvector(data: DVector<C64>) -> Self {
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, i: usize) -> C64 {
        self.data[i]
    }

    pub fn entries(&self) -> &[C64] {
        self.data.as_slice()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.norm_squared()
    }

    /// Inner product `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &CVector) -> C64 {
        self.data.dotc(&other.data)
    }

    pub fn scaled(&self, factor: C64) -> CVector {
        CVector {
            data: &self.data * factor,
        }
    }

    pub fn add(&self, other: &CVector) -> CVector {
        CVector {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &CVector) -> CVector {
        CVector {
            data: &self.data - &other.data,
        }
    }

    pub fn normalized(&self) -> Result<CVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Validation("cannot normalize zero vector".into()));
        }
        Ok(self.scaled(c64(1.0 / n, 0.0)))
    }
}

/// A dense complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    data: DMatrix<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, row_major: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Validation("matrix dimensions must be >= 1".into()));
        }
        if row_major.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "expected {} entries for a {}x{} matrix, got {}",
                    rows * cols,
                    rows,
                    cols,
                    row_major.len()
                ),
            });
        }
        if row_major
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Validation("matrix entries must be finite".into()));
        }
        Ok(Self {
            data: DMatrix::from_row_slice(rows, cols, &row_major),
        })
    }

    pub fn from_rows_real(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Validation("matrix dimensions must be >= 1".into()));
        }
        let cols = rows[0].len();
        let mut entries = Vec::with_capacity(r * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "ragged rows in matrix literal".into(),
                });
            }
            entries.extend(row.iter().map(|&x| c64(x, 0.0)));
        }
        Self::new(r, cols, entries)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::new(rows, cols, entries)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("matrix dimensions must be >= 1".into()));
        }
        Ok(Self {
            data: DMatrix::identity(dim, dim),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Validation("matrix dimensions must be >= 1".into()));
        }
        Ok(Self {
            data: DMatrix::from_element(rows, cols, c64(0.0, 0.0)),
        })
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::from_fn(entries.len(), entries.len(), |i, j| {
            if i == j {
                c64(entries[i], 0.0)
            } else {
                c64(0.0, 0.0)
            }
        })
    }

    pub(crate) fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    /// Largest entry magnitude (max-norm); the reference scale for all
    /// relative tolerances in this crate.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix {
            data: self.data.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.diagonal().iter().sum()
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other)?;
        Ok(CMatrix {
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.check_same_shape(other)?;
        Ok(CMatrix {
            data: &self.data - &other.data,
        })
    }

    pub fn scaled(&self, factor: C64) -> CMatrix {
        CMatrix {
            data: &self.data * factor,
        }
    }

    pub fn mul_mat(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "cannot multiply {}x{} by {}x{}",
                    self.rows(),
                    self.cols(),
                    other.rows(),
                    other.cols()
                ),
            });
        }
        Ok(CMatrix {
            data: &self.data * &other.data,
        })
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector> {
        if self.cols() != v.dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "cannot apply {}x{} matrix to vector of dimension {}",
                    self.rows(),
                    self.cols(),
                    v.dim()
                ),
            });
        }
        Ok(CVector {
            data: &self.data * &v.data,
        })
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
        CMatrix {
            data: &a.data * b.data.adjoint(),
        }
    }

    /// `max|M - M†|` relative to `max|M|` (0 for the zero matrix).
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.data.is_square() {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows() {
            for j in i..self.cols() {
                let d = (self.data[(i, j)] - self.data[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_residual() <= rel_tol
    }

    fn check_same_shape(&self, other: &CMatrix) -> Result<()> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "shape {}x{} vs {}x{}",
                    self.rows(),
                    self.cols(),
                    other.rows(),
                    other.cols()
                ),
            });
        }
        Ok(())
    }
}

/// Result of a Hermitian eigendecomposition: ascending real eigenvalues and
/// column-orthonormal eigenvectors, with a deterministic ordering and phase
/// convention (largest-magnitude component of each column made real positive;
/// numerically equal eigenvalues tie-broken by lexicographic comparison of
/// the phase-fixed columns).
#[derive(Debug, Clone)]
pub struct EighResult {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl EighResult {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// The `k`-th eigenvector as a column vector.
    pub fn vector(&self, k: usize) -> CVector {
        CVector::from_dvector(self.vectors.data.column(k).into_owned())
    }

    /// Apply `f(eigenvalue)` in the eigenbasis: returns `U f(D) U† x`.
    /// The workhorse behind matrix exponentials and invariance checks.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64, x: &CVector) -> Result<CVector> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "eigenbasis dimension {} vs vector dimension {}",
                    self.dim(),
                    x.dim()
                ),
            });
        }
        let u = &self.vectors.data;
        let mut coeffs = u.adjoint() * &x.data;
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= f(self.values[k]);
        }
        Ok(CVector::from_dvector(u * coeffs))
    }

    /// Build the matrix `U f(D) U†`.
    pub fn map_to_matrix(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let u = &self.vectors.data;
        let n = self.dim();
        let mut fd = DMatrix::from_element(n, n, c64(0.0, 0.0));
        for k in 0..n {
            fd[(k, k)] = f(self.values[k]);
        }
        CMatrix {
            data: u * fd * u.adjoint(),
        }
    }
}

/// Kronecker product with system-major flat indexing:
/// entry `((i*b.rows + k), (j*b.cols + l)) = a(i,j) * b(k,l)`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let rows = a.rows().saturating_mul(b.rows());
    let cols = a.cols().saturating_mul(b.cols());
    let dim = rows.max(cols);
    if dim > MAX_DIM {
        return Err(Error::Capacity { dim, max: MAX_DIM });
    }
    Ok(CMatrix {
        data: a.data.kronecker(&b.data),
    })
}

/// Hermitian eigendecomposition with deterministic output.
///
/// The input must be Hermitian within [`HERMITICITY_TOL`] (relative to its
/// max-norm); it is symmetrized exactly before decomposition so the computed
/// eigenvalues are real by construction.
pub fn eigh(m: &CMatrix) -> Result<EighResult> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch {
            context: format!("eigh requires a square matrix, got {}x{}", m.rows(), m.cols()),
        });
    }
    let residual = m.hermiticity_residual();
    if residual > HERMITICITY_TOL {
        return Err(Error::NotHermitian {
            residual,
            tol: HERMITICITY_TOL,
        });
    }
    let herm = (&m.data + m.data.adjoint()) * c64(0.5, 0.0);
    let se = herm.clone().symmetric_eigen();

    // Polish the decomposition: project H into the computed basis and kill
    // the residual off-diagonal coupling with complex Jacobi rotations. The
    // projected matrix is already nearly diagonal, so this converges in a
    // sweep or two and pushes eigenpair residuals to rounding level.
    let mut q = se.eigenvectors;
    let mut t = q.adjoint() * &herm * &q;
    jacobi_polish(&mut t, &mut q);

    let n = m.rows();
    // Phase-fix every column, then order ascending with a deterministic
    // tie-break inside numerically degenerate clusters.
    let mut columns: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| {
            let col: Vec<C64> = q.column(k).iter().cloned().collect();
            (t[(k, k)].re, phase_fix(col))
        })
        .collect();
    columns.sort_by(|a, b| a.0.total_cmp(&b.0));

    let scale = columns
        .iter()
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let tie_tol = 1e-12 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (columns[end].0 - columns[start].0).abs() <= tie_tol {
            end += 1;
        }
        if end - start > 1 {
            columns[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        }
        start = end;
    }

    let values: Vec<f64> = columns.iter().map(|(v, _)| *v).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| columns[k].1[i]);
    Ok(EighResult {
        values,
        vectors: CMatrix { data: vectors },
    })
}

/// Cyclic complex Jacobi sweeps on the Hermitian matrix `t`, accumulating
/// the rotations into `q`. Intended for nearly diagonal input; terminates
/// when every off-diagonal entry is at rounding level.
fn jacobi_polish(t: &mut DMatrix<C64>, q: &mut DMatrix<C64>) {
    let n = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    let tol = 1e-15 * scale;
    for _sweep in 0..8 {
        let mut rotated = false;
        for p in 0..n {
            for qq in p + 1..n {
                let beta = t[(p, qq)];
                let mag = beta.norm();
                if mag <= tol {
                    continue;
                }
                rotated = true;
                let alpha = t[(p, p)].re;
                let gamma = t[(qq, qq)].re;
                // zero t[p][q]: rotation angle from the 2x2 block, phase
                // from the off-diagonal entry
                let phi = 0.5 * (2.0 * mag).atan2(alpha - gamma);
                let (s, c) = phi.sin_cos();
                let sigma = beta / mag * c64(s, 0.0);

                // T <- U† T U on rows/columns p, q
                for k in 0..n {
                    let tkp = t[(k, p)];
                    let tkq = t[(k, qq)];
                    t[(k, p)] = tkp * c64(c, 0.0) + tkq * sigma.conj();
                    t[(k, qq)] = tkq * c64(c, 0.0) - tkp * sigma;
                }
                for k in 0..n {
                    let tpk = t[(p, k)];
                    let tqk = t[(qq, k)];
                    t[(p, k)] = tpk * c64(c, 0.0) + tqk * sigma;
                    t[(qq, k)] = tqk * c64(c, 0.0) - tpk * sigma.conj();
                }
                // restore exact Hermitian structure on the touched entries
                t[(p, qq)] = c64(0.0, 0.0);
                t[(qq, p)] = c64(0.0, 0.0);
                t[(p, p)] = c64(t[(p, p)].re, 0.0);
                t[(qq, qq)] = c64(t[(qq, qq)].re, 0.0);

                // Q <- Q U
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, qq)];
                    q[(k, p)] = qkp * c64(c, 0.0) + qkq * sigma.conj();
                    q[(k, qq)] = qkq * c64(c, 0.0) - qkp * sigma;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Make the largest-magnitude component real positive (lowest index wins on
/// magnitude ties) so eigenvector phases are reproducible.
fn phase_fix(mut col: Vec<C64>) -> Vec<C64> {
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for (i, z) in col.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag > 0.0 {
        let phase = col[best] / best_mag;
        let rot = phase.conj();
        for z in col.iter_mut() {
            *z *= rot;
        }
        // kill the residual imaginary dust on the anchor entry
        col[best] = c64(col[best].re, 0.0);
    }
    col
}

fn lex_cmp(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Unitary exponential `exp(-i tau H)` of a Hermitian matrix, via
/// eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, tau: f64) -> Result<CMatrix> {
    if !tau.is_finite() {
        return Err(Error::Validation("expm parameter must be finite".into()));
    }
    let eig = eigh(h)?;
    Ok(eig.map_to_matrix(|w| c64(0.0, -tau * w).exp()))
}

/// Project the global state onto a clock state:
/// `out[s] = Σ_c conj(chi[c]) psi[s*d_c + c]`.
///
/// Antilinear in `chi`, linear in `psi`. The system dimension is inferred
/// from `psi.dim() / chi.dim()`.
pub fn project_clock(chi: &CVector, psi: &CVector) -> Result<CVector> {
    let d_c = chi.dim();
    if !psi.dim().is_multiple_of(d_c) {
        return Err(Error::DimensionMismatch {
            context: format!(
                "global dimension {} is not a multiple of clock dimension {}",
                psi.dim(),
                d_c
            ),
        });
    }
    let d_s = psi.dim() / d_c;
    let mut out = DVector::from_element(d_s, c64(0.0, 0.0));
    for s in 0..d_s {
        let mut acc = c64(0.0, 0.0);
        for c in 0..d_c {
            acc += chi.data[c].conj() * psi.data[s * d_c + c];
        }
        out[s] = acc;
    }
    Ok(CVector { data: out })
}
