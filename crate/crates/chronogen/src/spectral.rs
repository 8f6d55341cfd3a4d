//! Eigen-analysis of the global Hamiltonian: degeneracy grouping, state
//! selection inside eigenspaces, the invariance-principle residual, and
//! entanglement diagnosis.

use crate::error::{Error, Result};
use crate::hilbert::{c64, eigh, CMatrix, CVector, C64};

/// An eigenstate of the global Hamiltonian. The vector need not be
/// normalized; downstream formulas normalize explicitly.
#[derive(Debug, Clone)]
pub struct GlobalEigenstate {
    psi: CVector,
    energy: f64,
    residual: f64,
}

impl GlobalEigenstate {
    /// Maximum admissible relative eigen-residual `||(H - E)psi|| / ||psi||`.
    pub const RESIDUAL_BOUND: f64 = 1e-9;

    /// Validate `psi` as an eigenstate of `h` with eigenvalue `energy`.
    pub fn new(h: &CMatrix, psi: CVector, energy: f64) -> Result<Self> {
        let residual = eigen_residual(h, &psi, energy)?;
        if residual > Self::RESIDUAL_BOUND {
            return Err(Error::Validation(format!(
                "eigen-residual {residual:.3e} exceeds {:.1e}",
                Self::RESIDUAL_BOUND
            )));
        }
        Ok(Self {
            psi,
            energy,
            residual,
        })
    }

    /// Build without enforcing the residual bound. Intended for diagnostics
    /// that deliberately examine non-eigenstates (e.g. invariance-violation
    /// tests); the stored residual still reports the truth.
    pub fn new_unchecked(h: &CMatrix, psi: CVector, energy: f64) -> Result<Self> {
        let residual = eigen_residual(h, &psi, energy)?;
        Ok(Self {
            psi,
            energy,
            residual,
        })
    }

    pub fn psi(&self) -> &CVector {
        &self.psi
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }
}

fn eigen_residual(h: &CMatrix, psi: &CVector, energy: f64) -> Result<f64> {
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(Error::Validation("eigenstate must be nonzero".into()));
    }
    let hpsi = h.mul_vec(psi)?;
    Ok(hpsi.sub(&psi.scaled(c64(energy, 0.0))).norm() / norm)
}

/// A degenerate (or simple) eigenspace: shared energy and an orthonormal
/// basis of the corresponding eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    energy: f64,
    basis: CMatrix,
}

impl Eigenspace {
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn multiplicity(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn basis_vector(&self, k: usize) -> CVector {
        CVector::from_dvector(self.basis.as_dmatrix().column(k).into_owned())
    }
}

/// Group the spectrum of `h` into eigenspaces by single-linkage clustering of
/// the sorted eigenvalues: a new group starts whenever the gap to the
/// previous eigenvalue exceeds `degeneracy_tol` (default `1e-8 * max|h|`).
pub fn eigenspaces(h: &CMatrix, degeneracy_tol: Option<f64>) -> Result<Vec<Eigenspace>> {
    let tol = match degeneracy_tol {
        Some(t) if t > 0.0 => t,
        Some(_) => {
            return Err(Error::Validation("degeneracy tolerance must be > 0".into()));
        }
        None => 1e-8 * h.max_abs().max(f64::MIN_POSITIVE),
    };
    let eig = eigh(h)?;
    let n = eig.dim();
    let mut spaces = Vec::new();
    let mut start = 0usize;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values()[end] - eig.values()[end - 1] <= tol {
            end += 1;
        }
        let mult = end - start;
        let energy = eig.values()[start..end].iter().sum::<f64>() / mult as f64;
        let basis = CMatrix::from_fn(n, mult, |i, k| eig.vectors().get(i, start + k))?;
        spaces.push(Eigenspace { energy, basis });
        start = end;
    }
    Ok(spaces)
}

/// Form the eigenstate `basis * coefficients` inside an eigenspace and
/// recompute its residual against `h`.
///
/// The stored energy is the Rayleigh quotient of the selected vector rather
/// than the cluster mean: for clusters that merged numerically close (but
/// not exactly degenerate) eigenvalues, the mean can sit up to half the
/// clustering tolerance away from the selected vector's eigenvalue.
pub fn select_state(
    h: &CMatrix,
    space: &Eigenspace,
    coefficients: &[C64],
) -> Result<GlobalEigenstate> {
    if coefficients.len() != space.multiplicity() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "{} coefficients for an eigenspace of multiplicity {}",
                coefficients.len(),
                space.multiplicity()
            ),
        });
    }
    let coeff_vec = CVector::new(coefficients.to_vec())?;
    if coeff_vec.norm() == 0.0 {
        return Err(Error::Validation(
            "eigenspace coefficients must not all vanish".into(),
        ));
    }
    let psi = space.basis.mul_vec(&coeff_vec)?;
    let rayleigh = psi.inner(&h.mul_vec(&psi)?).re / psi.norm_squared();
    GlobalEigenstate::new(h, psi, rayleigh)
}

/// Residual of the invariance principle:
/// `|| exp(i lambda (H - E)) psi - psi || / ||psi||`.
///
/// Vanishes (to numerical precision) exactly when `psi` is an eigenstate
/// with energy `E`, for every real `lambda`.
pub fn invariance_residual(h: &CMatrix, state: &GlobalEigenstate, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::Validation("lambda must be finite".into()));
    }
    if lambda == 0.0 {
        // exp(0) is the identity; no eigenbasis round trip needed
        if state.psi().norm() == 0.0 {
            return Err(Error::Validation("state must be nonzero".into()));
        }
        return Ok(0.0);
    }
    let eig = eigh(h)?;
    let energy = state.energy();
    let rotated = eig.apply_function(
        |w| c64(0.0, lambda * (w - energy)).exp(),
        state.psi(),
    )?;
    Ok(rotated.sub(state.psi()).norm() / state.psi().norm())
}

/// Schmidt rank of the `d_s x d_c` reshape of the state: the number of
/// singular values above `tol` times the largest one. Rank 1 means a
/// product (unentangled) state.
pub fn schmidt_rank(state: &GlobalEigenstate, d_s: usize, d_c: usize, tol: f64) -> Result<usize> {
    let psi = state.psi();
    if d_s * d_c != psi.dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "reshape {}x{} incompatible with state dimension {}",
                d_s,
                d_c,
                psi.dim()
            ),
        });
    }
    // true singular values (a Gram-matrix route would square the
    // conditioning and floor small singular values at √ε instead of ε)
    let m = CMatrix::from_fn(d_s, d_c, |s, c| psi.get(s * d_c + c))?;
    let svd = m.as_dmatrix().clone().svd(false, false);
    let sigmas: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let max_sigma = sigmas.iter().cloned().fold(0.0, f64::max);
    if max_sigma == 0.0 {
        return Ok(0);
    }
    Ok(sigmas.iter().filter(|&&s| s > tol * max_sigma).count())
}
