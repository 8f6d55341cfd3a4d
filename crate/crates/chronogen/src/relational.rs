//! The conditional-state machinery: clock evolution, the c-number `ℰ(λ)`,
//! the accumulated complex phase `S(λ)`, the effective Hermitian potential
//! `V_S(λ)`, the decomposition identity, envariance and pointer diagnostics.
//!
//! With `φ = ⟨χ_λ|Ψ⟩` (raw projection) and `u = ⟨χ_λ|V Ψ⟩`, the exact
//! identities this module is built on are
//!
//! ```text
//!   i dφ/dλ = H_S φ + u                 (projection of the global TISE)
//!   u       = V_S φ − ℰ φ               (symmetrized Hermitian decomposition)
//!   V_S     = (|u⟩⟨φ| + |φ⟩⟨u|) / ⟨φ|φ⟩
//!   ℰ       = ⟨u|φ⟩ / ⟨φ|φ⟩
//! ```
//!
//! so the phased state `e^{−iS(λ)} φ(λ)` with `S = ∫ ℰ dλ'` solves the
//! emergent TDSE with generator `H_S + V_S(λ)`. The scalar `e^{−iS}`
//! multiplies the projection directly (it is attached to the bra functional,
//! not conjugated); the real part of `ℰ` feeds the phase, the imaginary part
//! the normalization. `ℰ` and `V_S` are invariant under rescaling of the
//! clock state, so they are always computed from the raw evolved `χ_λ`.
//!
//! Projectors onto the global state or the clock state are never
//! materialized; every formula reduces to the two vectors `u` and `φ`.

use rayon::prelude::*;

use crate::dynamics::PotentialProvider;
use crate::error::{Error, Result};
use crate::hilbert::{c64, eigh, expm_hermitian, project_clock, CMatrix, CVector, C64, EighResult};

/// `N ≤ SINGULAR_OVERLAP_FACTOR * ||psi||^2` (with normalized clock state)
/// raises [`Error::SingularOverlap`]; the overlap sits in denominators.
pub const SINGULAR_OVERLAP_FACTOR: f64 = 1e-12;

/// Cached eigendecomposition of the clock Hamiltonian, for evolving the
/// clock state to arbitrary `λ` cheaply:
/// `χ_λ = e^{−iλ(H_C − E)} χ_0 = U e^{−iλ(w−E)} U† χ_0`.
#[derive(Debug, Clone)]
pub struct ClockEvolver {
    eig: EighResult,
    chi0: CVector,
    energy: f64,
}

impl ClockEvolver {
    pub fn new(chi0: &CVector, h_clock: &CMatrix, energy: f64) -> Result<Self> {
        if chi0.norm() == 0.0 {
            return Err(Error::Validation("clock state must be nonzero".into()));
        }
        if h_clock.rows() != chi0.dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "clock Hamiltonian {}x{} vs clock state dimension {}",
                    h_clock.rows(),
                    h_clock.cols(),
                    chi0.dim()
                ),
            });
        }
        Ok(Self {
            eig: eigh(h_clock)?,
            chi0: chi0.clone(),
            energy,
        })
    }

    pub fn state_at(&self, lambda: f64) -> CVector {
        self.eig
            .apply_function(
                |w| c64(0.0, -lambda * (w - self.energy)).exp(),
                &self.chi0,
            )
            .expect("dimensions validated at construction")
    }

    pub fn chi0(&self) -> &CVector {
        &self.chi0
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }
}

/// Evolve the clock state: `e^{−iλ(H_C − E)} χ_0`. Norm-preserving.
pub fn evolve_clock(
    chi0: &CVector,
    h_clock: &CMatrix,
    energy: f64,
    lambda: f64,
) -> Result<CVector> {
    Ok(ClockEvolver::new(chi0, h_clock, energy)?.state_at(lambda))
}

/// Clock states, effective energies and accumulated phases on a λ grid.
///
/// Construction is staged: [`ClockTrajectory::evolve`] fills the raw clock
/// states `χ_λ`; [`ClockTrajectory::with_effective_energies`] evaluates
/// `ℰ(λ)`; [`accumulate_phase`] integrates `S(λ)`. Until then `ℰ` and `S`
/// are zero, which is exact for vanishing interaction.
#[derive(Debug, Clone)]
pub struct ClockTrajectory {
    lambda_grid: Vec<f64>,
    chi: Vec<CVector>,
    e_script: Vec<C64>,
    s_phase: Vec<C64>,
}

impl ClockTrajectory {
    pub fn evolve(
        chi0: &CVector,
        h_clock: &CMatrix,
        energy: f64,
        lambda_grid: &[f64],
    ) -> Result<Self> {
        validate_grid(lambda_grid)?;
        let evolver = ClockEvolver::new(chi0, h_clock, energy)?;
        let chi: Vec<CVector> = lambda_grid
            .iter()
            .map(|&l| evolver.state_at(l))
            .collect();
        Ok(Self {
            lambda_grid: lambda_grid.to_vec(),
            chi,
            e_script: vec![c64(0.0, 0.0); lambda_grid.len()],
            s_phase: vec![c64(0.0, 0.0); lambda_grid.len()],
        })
    }

    /// Evaluate `ℰ(λ)` at every grid point for the given global state and
    /// interaction. Phases are reset to zero; run [`accumulate_phase`] after.
    ///
    /// Grid points are independent and evaluated in parallel on the current
    /// rayon pool (results are positionally collected, so the output does
    /// not depend on the thread count).
    pub fn with_effective_energies(mut self, psi: &CVector, v: &CMatrix) -> Result<Self> {
        let vpsi = v.mul_vec(psi)?;
        let grid = &self.lambda_grid;
        self.e_script = self
            .chi
            .par_iter()
            .zip(grid.par_iter())
            .map(|(chi, &lambda)| {
                condition_with(psi, chi, &vpsi)
                    .map(|cond| cond.e_script())
                    .map_err(|e| e.with_lambda(lambda))
            })
            .collect::<Result<Vec<C64>>>()?;
        self.s_phase = vec![c64(0.0, 0.0); self.lambda_grid.len()];
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.lambda_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda_grid[k]
    }

    pub fn chi(&self, k: usize) -> &CVector {
        &self.chi[k]
    }

    pub fn e_script(&self, k: usize) -> C64 {
        self.e_script[k]
    }

    pub fn e_script_all(&self) -> &[C64] {
        &self.e_script
    }

    pub fn s_phase(&self, k: usize) -> C64 {
        self.s_phase[k]
    }

    pub fn s_phase_all(&self) -> &[C64] {
        &self.s_phase
    }

    /// Keep every `stride`-th point (the first point always survives).
    /// Used by scenario runners that accumulate `S` on a refined grid and
    /// publish results on a coarser one.
    pub fn thin(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !(self.len() - 1).is_multiple_of(stride) {
            return Err(Error::Validation(format!(
                "stride {stride} does not evenly thin a {}-point grid",
                self.len()
            )));
        }
        let pick = |v: &Vec<C64>| v.iter().step_by(stride).cloned().collect::<Vec<_>>();
        Ok(Self {
            lambda_grid: self.lambda_grid.iter().step_by(stride).cloned().collect(),
            chi: self.chi.iter().step_by(stride).cloned().collect(),
            e_script: pick(&self.e_script),
            s_phase: pick(&self.s_phase),
        })
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Validation("lambda grid must be nonempty".into()));
    }
    if grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::Validation("lambda grid entries must be finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("lambda grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Integrate the complex phase `S(λ) = ∫ ℰ dλ'` by cumulative composite
/// trapezoidal quadrature over the trajectory's own grid (`S(λ_0) = 0`).
/// Grid resolution is the caller's responsibility.
pub fn accumulate_phase(mut trajectory: ClockTrajectory) -> ClockTrajectory {
    let n = trajectory.len();
    let mut s = vec![c64(0.0, 0.0); n];
    for k in 1..n {
        let dl = trajectory.lambda_grid[k] - trajectory.lambda_grid[k - 1];
        let avg = (trajectory.e_script[k] + trajectory.e_script[k - 1]) * c64(0.5, 0.0);
        s[k] = s[k - 1] + avg * c64(dl, 0.0);
    }
    trajectory.s_phase = s;
    trajectory
}

/// One grid point of the effective potential: the Hermitian `V_S`, the
/// overlap weight `N_λ` (computed with the normalized clock state) and the
/// c-number `ℰ(λ)`.
#[derive(Debug, Clone)]
pub struct EffectivePotentialSample {
    lambda: f64,
    v_s: CMatrix,
    overlap_n: f64,
    e_script: C64,
}

impl EffectivePotentialSample {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn v_s(&self) -> &CMatrix {
        &self.v_s
    }

    pub fn overlap_n(&self) -> f64 {
        self.overlap_n
    }

    pub fn e_script(&self) -> C64 {
        self.e_script
    }
}

/// The conditioned pair `(u, φ)` plus derived scalars; the common core of
/// `ℰ` and `V_S`.
struct Conditioned {
    u: CVector,
    phi: CVector,
    /// raw `⟨φ|φ⟩` for the supplied (unnormalized) clock state
    n_raw: f64,
    /// `⟨φ|φ⟩` with normalized clock state: the physical overlap weight
    n_hat: f64,
}

impl Conditioned {
    fn e_script(&self) -> C64 {
        self.u.inner(&self.phi) / c64(self.n_raw, 0.0)
    }
}

fn condition(psi: &CVector, chi: &CVector, v: &CMatrix) -> Result<Conditioned> {
    let vpsi = v.mul_vec(psi)?;
    condition_with(psi, chi, &vpsi)
}

/// Same as [`condition`] but with `V|Ψ⟩` precomputed (grid sweeps).
fn condition_with(psi: &CVector, chi: &CVector, vpsi: &CVector) -> Result<Conditioned> {
    let chi_norm_sq = chi.norm_squared();
    if chi_norm_sq == 0.0 {
        return Err(Error::Validation("clock state must be nonzero".into()));
    }
    let phi = project_clock(chi, psi)?;
    let n_raw = phi.norm_squared();
    let n_hat = n_raw / chi_norm_sq;
    let threshold = SINGULAR_OVERLAP_FACTOR * psi.norm_squared();
    if n_hat <= threshold {
        return Err(Error::SingularOverlap {
            lambda: None,
            overlap: n_hat,
            threshold,
        });
    }
    let u = project_clock(chi, vpsi)?;
    Ok(Conditioned {
        u,
        phi,
        n_raw,
        n_hat,
    })
}

/// The c-number `ℰ = ⟨u|φ⟩ / ⟨φ|φ⟩`. Invariant under rescaling of `chi`
/// by any nonzero complex factor; vanishes identically for `V = 0`.
pub fn effective_energy(psi: &CVector, chi: &CVector, v: &CMatrix) -> Result<C64> {
    Ok(condition(psi, chi, v)?.e_script())
}

/// The effective Hermitian system potential
/// `V_S = (|u⟩⟨φ| + |φ⟩⟨u|) / ⟨φ|φ⟩`, sampled at `lambda`.
///
/// Hermitian by construction and invariant under rescaling of `chi`. The
/// exact decomposition identity `u = V_S φ − ℰ φ` ties the sample to the
/// projected TISE; see [`verify_decomposition`].
pub fn effective_potential(
    lambda: f64,
    psi: &CVector,
    chi: &CVector,
    v: &CMatrix,
) -> Result<EffectivePotentialSample> {
    let cond = condition(psi, chi, v).map_err(|e| e.with_lambda(lambda))?;
    let inv_n = c64(1.0 / cond.n_raw, 0.0);
    let v_s = CMatrix::outer(&cond.u, &cond.phi)
        .add(&CMatrix::outer(&cond.phi, &cond.u))?
        .scaled(inv_n);
    Ok(EffectivePotentialSample {
        lambda,
        v_s,
        overlap_n: cond.n_hat,
        e_script: cond.e_script(),
    })
}

/// Sample the effective potential at every point of a clock trajectory.
/// Points are independent; evaluation runs on the current rayon pool.
pub fn sample_potentials(
    psi: &CVector,
    trajectory: &ClockTrajectory,
    v: &CMatrix,
) -> Result<Vec<EffectivePotentialSample>> {
    (0..trajectory.len())
        .into_par_iter()
        .map(|k| effective_potential(trajectory.lambda(k), psi, trajectory.chi(k), v))
        .collect()
}

/// Residual of the decomposition identity `u = V_S φ − ℰ φ`, relative to
/// `||u||` (absolute when `u` vanishes). Exact to rounding for every sample
/// produced by [`effective_potential`].
pub fn verify_decomposition(
    sample: &EffectivePotentialSample,
    u: &CVector,
    phi: &CVector,
) -> Result<f64> {
    let lhs = sample
        .v_s
        .mul_vec(phi)?
        .sub(&phi.scaled(sample.e_script));
    let abs = lhs.sub(u).norm();
    let scale = u.norm();
    Ok(if scale > 0.0 { abs / scale } else { abs })
}

/// The conditioned pair `(u, φ)` for external identity checks.
pub fn conditioned_pair(psi: &CVector, chi: &CVector, v: &CMatrix) -> Result<(CVector, CVector)> {
    let cond = condition(psi, chi, v)?;
    Ok((cond.u, cond.phi))
}

/// The conditional system state at grid point `index`:
/// `e^{−i S(λ)} ⟨χ_λ|Ψ⟩`, with the scalar attached to the projection
/// directly. Under this convention the emergent TDSE holds with `+` signs
/// and generator `H_S + V_S(λ)`.
pub fn conditional_state(
    psi: &CVector,
    trajectory: &ClockTrajectory,
    index: usize,
) -> Result<CVector> {
    if index >= trajectory.len() {
        return Err(Error::Validation(format!(
            "grid index {index} out of range for {} points",
            trajectory.len()
        )));
    }
    let s = trajectory.s_phase[index];
    // e^{-iS} for complex S = e^{Im S} * e^{-i Re S}
    let factor = c64(s.im, -s.re).exp();
    Ok(project_clock(trajectory.chi(index), psi)?.scaled(factor))
}

/// Envariance residual: compensating the clock evolution by the inverse
/// system evolution must leave the projection unchanged for interaction-free
/// eigenstates:
/// `|| U_S(−λ) ⟨U_C(λ) χ_0|Ψ⟩ − ⟨χ_0|Ψ⟩ ||`.
pub fn envariance_check(
    psi: &CVector,
    chi0: &CVector,
    h_system: &CMatrix,
    h_clock: &CMatrix,
    energy: f64,
    lambda: f64,
) -> Result<f64> {
    let chi_l = evolve_clock(chi0, h_clock, energy, lambda)?;
    let projected = project_clock(&chi_l, psi)?;
    let back = expm_hermitian(h_system, -lambda)?.mul_vec(&projected)?;
    let reference = project_clock(chi0, psi)?;
    Ok(back.sub(&reference).norm())
}

/// Pointer-state shortcut: the system operator `⟨χ|V|χ⟩ / ⟨χ|χ⟩`. When
/// `[V, P_χ] = 0` it satisfies `u = W φ`, replacing the full decomposition.
pub fn pointer_shortcut_potential(v: &CMatrix, chi: &CVector) -> Result<CMatrix> {
    let d_c = chi.dim();
    if !v.rows().is_multiple_of(d_c) || v.rows() != v.cols() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "interaction {}x{} incompatible with clock dimension {}",
                v.rows(),
                v.cols(),
                d_c
            ),
        });
    }
    let d_s = v.rows() / d_c;
    let norm_sq = chi.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::Validation("clock state must be nonzero".into()));
    }
    CMatrix::from_fn(d_s, d_s, |s, sp| {
        let mut acc = c64(0.0, 0.0);
        for cc in 0..d_c {
            for cp in 0..d_c {
                acc += chi.get(cc).conj() * v.get(s * d_c + cc, sp * d_c + cp) * chi.get(cp);
            }
        }
        acc / norm_sq
    })
}

/// Spectral norm of the commutator `[V, P_χ]` with
/// `P_χ = 1_S ⊗ |χ̂⟩⟨χ̂|` (normalized clock state). The projector is applied
/// to basis vectors column by column and never materialized.
pub fn pointer_commutator_norm(v: &CMatrix, chi: &CVector) -> Result<f64> {
    let d_c = chi.dim();
    if !v.rows().is_multiple_of(d_c) || v.rows() != v.cols() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "interaction {}x{} incompatible with clock dimension {}",
                v.rows(),
                v.cols(),
                d_c
            ),
        });
    }
    let d = v.rows();
    let d_s = d / d_c;
    let chi_hat = chi.normalized()?;

    // apply P = 1 ⊗ |χ̂⟩⟨χ̂| to a global vector
    let apply_p = |x: &CVector| -> CVector {
        let mut out = vec![c64(0.0, 0.0); d];
        for s in 0..d_s {
            let mut overlap = c64(0.0, 0.0);
            for c in 0..d_c {
                overlap += chi_hat.get(c).conj() * x.get(s * d_c + c);
            }
            for c in 0..d_c {
                out[s * d_c + c] = chi_hat.get(c) * overlap;
            }
        }
        CVector::new(out).expect("finite by construction")
    };

    // commutator columns: C e_j = V (P e_j) − P (V e_j)
    let mut columns = Vec::with_capacity(d);
    for j in 0..d {
        let e_j = CVector::basis(d, j)?;
        let v_col = CVector::new((0..d).map(|i| v.get(i, j)).collect())?;
        let first = v.mul_vec(&apply_p(&e_j))?;
        let second = apply_p(&v_col);
        columns.push(first.sub(&second));
    }
    let comm = CMatrix::from_fn(d, d, |i, j| columns[j].get(i))?;

    // spectral norm via the largest eigenvalue of C†C
    let gram = comm.adjoint().mul_mat(&comm)?;
    let eig = eigh(&gram)?;
    let top = eig.values().iter().cloned().fold(0.0f64, f64::max);
    Ok(top.max(0.0).sqrt())
}

/// Effective-potential provider that re-evolves the clock state and
/// reconditions at arbitrary `λ` (including integrator midpoints).
pub struct ConditionedPotential {
    evolver: ClockEvolver,
    psi: CVector,
    vpsi: CVector,
}

impl ConditionedPotential {
    pub fn new(
        psi: &CVector,
        v: &CMatrix,
        chi0: &CVector,
        h_clock: &CMatrix,
        energy: f64,
    ) -> Result<Self> {
        let vpsi = v.mul_vec(psi)?;
        Ok(Self {
            evolver: ClockEvolver::new(chi0, h_clock, energy)?,
            psi: psi.clone(),
            vpsi,
        })
    }

    pub fn sample_at(&self, lambda: f64) -> Result<EffectivePotentialSample> {
        let chi = self.evolver.state_at(lambda);
        let cond =
            condition_with(&self.psi, &chi, &self.vpsi).map_err(|e| e.with_lambda(lambda))?;
        let inv_n = c64(1.0 / cond.n_raw, 0.0);
        let v_s = CMatrix::outer(&cond.u, &cond.phi)
            .add(&CMatrix::outer(&cond.phi, &cond.u))?
            .scaled(inv_n);
        Ok(EffectivePotentialSample {
            lambda,
            v_s,
            overlap_n: cond.n_hat,
            e_script: cond.e_script(),
        })
    }

    pub fn evolver(&self) -> &ClockEvolver {
        &self.evolver
    }
}

impl PotentialProvider for ConditionedPotential {
    fn potential_at(&self, lambda: f64) -> Result<CMatrix> {
        Ok(self.sample_at(lambda)?.v_s)
    }
}
