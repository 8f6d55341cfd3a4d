//! Bipartite Hamiltonian specifications and builders.
//!
//! A [`HamiltonianSpec`] is the triple `(H_S, H_C, V)` together with the
//! subsystem dimensions. The interaction is stored as a full
//! `(d_s*d_c) x (d_s*d_c)` matrix so it can be fully general; use
//! [`interaction_from_factors`] when it is a single Kronecker product.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hilbert::{c64, eigh, kron, CMatrix, HERMITICITY_TOL, MAX_DIM};

/// The triple `(H_S, H_C, V)` with bipartite dimensions. All parts are
/// validated Hermitian on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    d_s: usize,
    d_c: usize,
    h_system: CMatrix,
    h_clock: CMatrix,
    v_interaction: CMatrix,
}

impl HamiltonianSpec {
    pub fn new(h_system: CMatrix, h_clock: CMatrix, v_interaction: CMatrix) -> Result<Self> {
        let d_s = h_system.rows();
        let d_c = h_clock.rows();
        if h_system.cols() != d_s || h_clock.cols() != d_c {
            return Err(Error::DimensionMismatch {
                context: "system and clock Hamiltonians must be square".into(),
            });
        }
        let d = d_s
            .checked_mul(d_c)
            .ok_or(Error::Capacity { dim: usize::MAX, max: MAX_DIM })?;
        if d > MAX_DIM {
            return Err(Error::Capacity { dim: d, max: MAX_DIM });
        }
        if v_interaction.rows() != d || v_interaction.cols() != d {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "interaction must be {d}x{d} for d_s={d_s}, d_c={d_c}, got {}x{}",
                    v_interaction.rows(),
                    v_interaction.cols()
                ),
            });
        }
        for (name, m) in [
            ("h_system", &h_system),
            ("h_clock", &h_clock),
            ("v_interaction", &v_interaction),
        ] {
            let residual = m.hermiticity_residual();
            if residual > HERMITICITY_TOL {
                return Err(Error::Validation(format!(
                    "{name} is not Hermitian: relative residual {residual:.3e}"
                )));
            }
        }
        Ok(Self {
            d_s,
            d_c,
            h_system,
            h_clock,
            v_interaction,
        })
    }

    /// Spec with zero interaction.
    pub fn non_interacting(h_system: CMatrix, h_clock: CMatrix) -> Result<Self> {
        let d = h_system.rows() * h_clock.rows();
        let zero = CMatrix::zeros(d, d)?;
        Self::new(h_system, h_clock, zero)
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_c(&self) -> usize {
        self.d_c
    }

    pub fn global_dim(&self) -> usize {
        self.d_s * self.d_c
    }

    pub fn h_system(&self) -> &CMatrix {
        &self.h_system
    }

    pub fn h_clock(&self) -> &CMatrix {
        &self.h_clock
    }

    pub fn v_interaction(&self) -> &CMatrix {
        &self.v_interaction
    }
}

/// Assemble the global Hamiltonian
/// `kron(H_S, I_C) + kron(I_S, H_C) + V`.
pub fn assemble_global(spec: &HamiltonianSpec) -> Result<CMatrix> {
    let i_s = CMatrix::identity(spec.d_s)?;
    let i_c = CMatrix::identity(spec.d_c)?;
    let sys = kron(&spec.h_system, &i_c)?;
    let clk = kron(&i_s, &spec.h_clock)?;
    sys.add(&clk)?.add(&spec.v_interaction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// The standard 2x2 Pauli matrix for the given axis.
pub fn pauli(axis: PauliAxis) -> CMatrix {
    let entries = match axis {
        PauliAxis::X => vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)],
        PauliAxis::Y => vec![c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)],
        PauliAxis::Z => vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
    };
    CMatrix::new(2, 2, entries).expect("pauli matrices are valid")
}

/// Interaction given as a Kronecker product of two Hermitian factors.
pub fn interaction_from_factors(system_factor: &CMatrix, clock_factor: &CMatrix) -> Result<CMatrix> {
    for (name, m) in [("system factor", system_factor), ("clock factor", clock_factor)] {
        if !m.is_hermitian(HERMITICITY_TOL) {
            return Err(Error::Validation(format!("{name} is not Hermitian")));
        }
    }
    kron(system_factor, clock_factor)
}

/// The coupled two-level reference model: `H_S = 0`, `H_C = sigma_z`,
/// `V = (sigma_x + sigma_z) ⊗ sigma_x` (all energy scales set to 1).
///
/// Its global Hamiltonian has integer entries and two doubly degenerate
/// energies ±√3, which makes it the canonical end-to-end check for the
/// whole pipeline (see [`crate::scenarios`]).
pub fn coupled_two_level_spec() -> HamiltonianSpec {
    let h_s = CMatrix::zeros(2, 2).expect("valid");
    let h_c = pauli(PauliAxis::Z);
    let sxsz = pauli(PauliAxis::X).add(&pauli(PauliAxis::Z)).expect("valid");
    let v = kron(&sxsz, &pauli(PauliAxis::X)).expect("valid");
    HamiltonianSpec::new(h_s, h_c, v).expect("reference model is valid")
}

/// Deterministic GUE-style random specification.
///
/// Each part is drawn with independent complex Gaussian entries, Hermitized,
/// and normalized to unit spectral norm; the interaction is then scaled by
/// `coupling_strength`. The same seed always yields the same spec.
pub fn random_spec(
    d_s: usize,
    d_c: usize,
    coupling_strength: f64,
    seed: u64,
) -> Result<HamiltonianSpec> {
    if d_s == 0 || d_c == 0 {
        return Err(Error::Validation("dimensions must be >= 1".into()));
    }
    let d = d_s
        .checked_mul(d_c)
        .ok_or(Error::Capacity { dim: usize::MAX, max: MAX_DIM })?;
    if d > MAX_DIM {
        return Err(Error::Capacity { dim: d, max: MAX_DIM });
    }
    if coupling_strength.is_nan() || coupling_strength < 0.0 {
        return Err(Error::Validation(
            "coupling strength must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_system = random_hermitian_unit_norm(d_s, &mut rng)?;
    let h_clock = random_hermitian_unit_norm(d_c, &mut rng)?;
    let v = random_hermitian_unit_norm(d, &mut rng)?.scaled(c64(coupling_strength, 0.0));
    HamiltonianSpec::new(h_system, h_clock, v)
}

fn random_hermitian_unit_norm(n: usize, rng: &mut ChaCha8Rng) -> Result<CMatrix> {
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        entries.push(c64(re, im));
    }
    let raw = CMatrix::new(n, n, entries)?;
    let herm = raw.add(&raw.adjoint())?.scaled(c64(0.5, 0.0));
    // spectral norm of a Hermitian matrix = largest |eigenvalue|
    let eig = eigh(&herm)?;
    let spectral = eig
        .values()
        .iter()
        .map(|w| w.abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    Ok(herm.scaled(c64(1.0 / spectral, 0.0)))
}
