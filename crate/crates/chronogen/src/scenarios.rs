//! Curated end-to-end scenarios: the coupled two-level example with its
//! closed-form reference, the interaction-free degenerate scenario, and the
//! solvable-potential generator/exporter.
//!
//! Scenario runners own their grid policy: the complex phase `S(λ)` is
//! accumulated on an internally refined grid (each requested interval is
//! subdivided [`PHASE_REFINEMENT`] times) and the trajectory is then thinned
//! back to the requested grid, which keeps the trapezoid quadrature error in
//! the conditional-state normalization below ~1e-8 on typical grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    compare, generator_scale, infidelity, integrate_tdse, projected_trajectory, propagate_free,
    tdse_residual, ComparisonReport, SystemTrajectory, TrajectorySource,
};
use crate::error::{Error, Result};
use crate::hilbert::{c64, CMatrix, CVector, C64};
use crate::model::{assemble_global, coupled_two_level_spec, pauli, HamiltonianSpec, PauliAxis};
use crate::relational::{
    accumulate_phase, sample_potentials, ClockTrajectory, ConditionedPotential,
    EffectivePotentialSample,
};
use crate::spectral::{eigenspaces, select_state, GlobalEigenstate};

/// Subdivision factor for the internal phase-accumulation grid.
pub const PHASE_REFINEMENT: usize = 256;

/// Calibration constant for the default export-verification threshold
/// `C * dl^2 * max(1, scale)^3 * ||phi_0||` (second-order finite-difference
/// floor of the residual estimator).
const EXPORT_THRESHOLD_FACTOR: f64 = 50.0;

/// Closed-form reference for the coupled two-level example
/// (`H_S = 0`, `H_C = σ_z`, `V = (σ_x+σ_z) ⊗ σ_x`, global state
/// `Ψ = (1, 0, −1, −a)` at energy `−√3`, clock state `χ_0 ∝ (1, 1)`).
#[derive(Debug, Clone, Copy)]
pub struct TwoLevelReference {
    a: f64,
    energy: f64,
}

impl Default for TwoLevelReference {
    fn default() -> Self {
        Self::new()
    }
}

impl TwoLevelReference {
    pub fn new() -> Self {
        Self {
            a: 1.0 + 3.0f64.sqrt(),
            energy: -(3.0f64.sqrt()),
        }
    }

    /// The constant `a = 1 + √3`.
    pub fn a_const(&self) -> f64 {
        self.a
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// The global eigenstate `(1, 0, −1, −a)`.
    pub fn psi(&self) -> CVector {
        CVector::from_real(&[1.0, 0.0, -1.0, -self.a]).expect("valid")
    }

    /// Initial clock state `(1, 1) / (2√(1+a))`, scaled so the conditional
    /// state at λ = 0 is normalized.
    pub fn chi0(&self) -> CVector {
        let s = self.normalization(0.0);
        CVector::from_real(&[s, s]).expect("valid")
    }

    /// The scalar normalization `1 / (2√(1 + a cos²λ))` carried by the
    /// phased clock state.
    pub fn normalization(&self, lambda: f64) -> f64 {
        1.0 / (2.0 * (1.0 + self.a * lambda.cos().powi(2)).sqrt())
    }

    /// Phased closed-form clock state
    /// `e^{iEλ} (e^{−iλ}, e^{iλ}) / (2√(1 + a cos²λ))`.
    pub fn chi(&self, lambda: f64) -> CVector {
        let n = self.normalization(lambda);
        let global = c64(0.0, self.energy * lambda).exp() * c64(n, 0.0);
        CVector::new(vec![
            global * c64(0.0, -lambda).exp(),
            global * c64(0.0, lambda).exp(),
        ])
        .expect("valid")
    }

    /// x component of the reference potential:
    /// `(cos 2λ + a cos²λ) / (1 + a cos²λ)`.
    pub fn v_sx(&self, lambda: f64) -> f64 {
        let c2 = lambda.cos().powi(2);
        ((2.0 * lambda).cos() + self.a * c2) / (1.0 + self.a * c2)
    }

    /// z component; identical to [`Self::v_sx`] for this model.
    pub fn v_sz(&self, lambda: f64) -> f64 {
        self.v_sx(lambda)
    }

    /// Tabulated y component, `−(a/2) sin 2λ / (1 + a cos²λ)`.
    ///
    /// NOTE: this tabulated form does not generate [`Self::phi`]; the
    /// trajectory-consistent coefficient is `√3` times larger (see
    /// [`Self::v_sy_generating`] and the acceptance suite, which measures
    /// the discrepancy explicitly).
    pub fn v_sy_tabulated(&self, lambda: f64) -> f64 {
        let c2 = lambda.cos().powi(2);
        -(self.a / 2.0) * (2.0 * lambda).sin() / (1.0 + self.a * c2)
    }

    /// y component consistent with [`Self::phi`] and produced by the
    /// symmetrized decomposition: `−(√3 a/2) sin 2λ / (1 + a cos²λ)`.
    pub fn v_sy_generating(&self, lambda: f64) -> f64 {
        3.0f64.sqrt() * self.v_sy_tabulated(lambda)
    }

    /// Closed-form conditional state
    /// `e^{iaλ} (1, −(a e^{−2iλ} + 1)) / (2√(1 + a cos²λ))`; unit norm for
    /// every λ.
    pub fn phi(&self, lambda: f64) -> CVector {
        let n = self.normalization(lambda);
        let lead = c64(0.0, self.a * lambda).exp() * c64(n, 0.0);
        let down = c64(self.a, 0.0) * c64(0.0, -2.0 * lambda).exp() + c64(1.0, 0.0);
        CVector::new(vec![lead, -lead * down]).expect("valid")
    }
}

/// Pauli decomposition `m = v0 I + vx σx + vy σy + vz σz` of a 2x2
/// Hermitian matrix, via half-traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PauliComponents {
    pub v0: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

pub fn pauli_components(m: &CMatrix) -> Result<PauliComponents> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimensionMismatch {
            context: format!("pauli decomposition needs a 2x2 matrix, got {}x{}", m.rows(), m.cols()),
        });
    }
    let half_trace = |p: &CMatrix| -> Result<f64> { Ok(0.5 * m.mul_mat(p)?.trace().re) };
    Ok(PauliComponents {
        v0: 0.5 * m.trace().re,
        vx: half_trace(&pauli(PauliAxis::X))?,
        vy: half_trace(&pauli(PauliAxis::Y))?,
        vz: half_trace(&pauli(PauliAxis::Z))?,
    })
}

/// Largest absolute deviations of the computed potential components from the
/// closed-form reference, over a sample set.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComponentDeviations {
    pub x: f64,
    pub z: f64,
    pub y_generating: f64,
    pub y_tabulated: f64,
}

pub fn component_deviations(
    samples: &[EffectivePotentialSample],
    reference: &TwoLevelReference,
) -> Result<ComponentDeviations> {
    let mut dev = ComponentDeviations {
        x: 0.0,
        z: 0.0,
        y_generating: 0.0,
        y_tabulated: 0.0,
    };
    for s in samples {
        let l = s.lambda();
        let c = pauli_components(s.v_s())?;
        dev.x = dev.x.max((c.vx - reference.v_sx(l)).abs());
        dev.z = dev.z.max((c.vz - reference.v_sz(l)).abs());
        dev.y_generating = dev.y_generating.max((c.vy - reference.v_sy_generating(l)).abs());
        dev.y_tabulated = dev.y_tabulated.max((c.vy - reference.v_sy_tabulated(l)).abs());
    }
    Ok(dev)
}

/// Everything the coupled two-level pipeline produces on one grid.
pub struct ExampleBundle {
    pub spec: HamiltonianSpec,
    pub state: GlobalEigenstate,
    pub chi0: CVector,
    /// Residual of the least-squares match of the reference state onto the
    /// computed degenerate eigenbasis.
    pub eigenbasis_match_residual: f64,
    pub trajectory: ClockTrajectory,
    pub samples: Vec<EffectivePotentialSample>,
    pub projected: SystemTrajectory,
    pub integrated: SystemTrajectory,
    pub closed_form: SystemTrajectory,
    /// integrated vs projected, with the TDSE residual of the projected
    /// trajectory filled in
    pub proj_vs_int: ComparisonReport,
    pub proj_vs_closed: ComparisonReport,
    pub max_phi_norm_error: f64,
    pub reference: TwoLevelReference,
}

/// Run the full pipeline for the coupled two-level example on the given
/// ascending (uniform) grid.
pub fn run_two_level_example(grid: &[f64]) -> Result<ExampleBundle> {
    let reference = TwoLevelReference::new();
    let spec = coupled_two_level_spec();
    let h = assemble_global(&spec)?;

    // match the reference state onto the computed lower eigenspace by least
    // squares instead of assuming a coefficient convention
    let spaces = eigenspaces(&h, None)?;
    let target = reference.psi();
    let lower = &spaces[0];
    let coeffs: Vec<C64> = (0..lower.multiplicity())
        .map(|k| lower.basis_vector(k).inner(&target))
        .collect();
    let matched = select_state(&h, lower, &coeffs)?;
    let eigenbasis_match_residual =
        matched.psi().sub(&target).norm() / target.norm();
    // use the exact integer-entry reference state for bit-comparable output
    let state = GlobalEigenstate::new(&h, target, reference.energy())?;

    let chi0 = reference.chi0();
    let (trajectory, samples, projected) = conditioned_run(
        state.psi(),
        spec.v_interaction(),
        &chi0,
        spec.h_clock(),
        reference.energy(),
        grid,
    )?;

    let provider = ConditionedPotential::new(
        state.psi(),
        spec.v_interaction(),
        &chi0,
        spec.h_clock(),
        reference.energy(),
    )?;
    let phi0 = projected.state(0).clone();
    let integrated = integrate_tdse(spec.h_system(), &provider, &phi0, grid)?;

    let closed_states: Vec<CVector> = grid.iter().map(|&l| reference.phi(l)).collect();
    let closed_form =
        SystemTrajectory::new(grid.to_vec(), closed_states, TrajectorySource::ClosedForm)?;

    let mut proj_vs_int = compare(&projected, &integrated)?;
    proj_vs_int.max_tdse_residual = tdse_residual(spec.h_system(), &samples, &projected)?;
    let proj_vs_closed = compare(&projected, &closed_form)?;

    let max_phi_norm_error = projected
        .states()
        .iter()
        .map(|s| (s.norm() - 1.0).abs())
        .fold(0.0, f64::max);

    Ok(ExampleBundle {
        spec,
        state,
        chi0,
        eigenbasis_match_residual,
        trajectory,
        samples,
        projected,
        integrated,
        closed_form,
        proj_vs_int,
        proj_vs_closed,
        max_phi_norm_error,
        reference,
    })
}

/// Shared pipeline: evolve the clock on a refined grid, evaluate `ℰ`,
/// accumulate `S`, thin back to the requested grid, then sample the
/// potential and project the conditional states.
pub fn conditioned_run(
    psi: &CVector,
    v: &CMatrix,
    chi0: &CVector,
    h_clock: &CMatrix,
    energy: f64,
    grid: &[f64],
) -> Result<(ClockTrajectory, Vec<EffectivePotentialSample>, SystemTrajectory)> {
    conditioned_run_with_refinement(psi, v, chi0, h_clock, energy, grid, PHASE_REFINEMENT)
}

/// [`conditioned_run`] with an explicit refinement factor. Factor 1 skips
/// refinement entirely, which is exact for all phase- and scale-insensitive
/// metrics (infidelity, decomposition residuals) and cheapest for sweeps.
pub fn conditioned_run_with_refinement(
    psi: &CVector,
    v: &CMatrix,
    chi0: &CVector,
    h_clock: &CMatrix,
    energy: f64,
    grid: &[f64],
    refinement: usize,
) -> Result<(ClockTrajectory, Vec<EffectivePotentialSample>, SystemTrajectory)> {
    let refined = refine_grid(grid, refinement)?;
    let clock = ClockTrajectory::evolve(chi0, h_clock, energy, &refined)?
        .with_effective_energies(psi, v)?;
    let clock = accumulate_phase(clock).thin(refinement)?;
    let samples = sample_potentials(psi, &clock, v)?;
    let projected = projected_trajectory(psi, &clock)?;
    Ok((clock, samples, projected))
}

/// Subdivide every interval of `grid` into `factor` equal parts, keeping the
/// original points bit-exact so the result thins back to `grid`.
pub fn refine_grid(grid: &[f64], factor: usize) -> Result<Vec<f64>> {
    if grid.len() < 2 {
        return Err(Error::Validation("grid needs at least 2 points".into()));
    }
    if factor == 0 {
        return Err(Error::Validation("refinement factor must be >= 1".into()));
    }
    let mut out = Vec::with_capacity((grid.len() - 1) * factor + 1);
    for w in grid.windows(2) {
        out.push(w[0]);
        let step = (w[1] - w[0]) / factor as f64;
        for j in 1..factor {
            out.push(w[0] + step * j as f64);
        }
    }
    out.push(grid[grid.len() - 1]);
    Ok(out)
}

/// The interaction-free degenerate scenario and its diagnostics.
pub struct DegenerateFreeBundle {
    pub spec: HamiltonianSpec,
    pub state: GlobalEigenstate,
    pub chi0: CVector,
    pub projected: SystemTrajectory,
    pub free: SystemTrajectory,
    /// max pointwise distance between projection and free evolution
    pub max_free_vs_projected: f64,
    /// max envariance residual over 10 seeded λ in [−10, 10]
    pub max_envariance_residual: f64,
    /// max infidelity of the product-state variant against its own λ = 0
    /// state (trivial dynamics: stays 0)
    pub product_variant_infidelity_drift: f64,
}

/// `H_S = H_C = σ_z`, `V = 0`: the `E = 0` eigenspace spans
/// `{|↑↓⟩, |↓↑⟩}` and the Bell-type combination gives nontrivial conditional
/// dynamics `φ(λ) = (e^{−iλ}, e^{iλ})/2` despite the static global state.
pub fn degenerate_free_scenario() -> Result<DegenerateFreeBundle> {
    let spec = HamiltonianSpec::non_interacting(pauli(PauliAxis::Z), pauli(PauliAxis::Z))?;
    let h = assemble_global(&spec)?;
    let spaces = eigenspaces(&h, None)?;
    // energies are −2, 0 (twice), +2
    let zero_space = spaces
        .iter()
        .find(|s| s.energy().abs() < 1e-12)
        .ok_or_else(|| Error::Validation("expected a zero-energy eigenspace".into()))?;
    let s = 1.0 / 2.0f64.sqrt();
    let bell = CVector::from_real(&[0.0, s, s, 0.0])?;
    let coeffs: Vec<C64> = (0..zero_space.multiplicity())
        .map(|k| zero_space.basis_vector(k).inner(&bell))
        .collect();
    let state = select_state(&h, zero_space, &coeffs)?;

    let chi0 = CVector::from_real(&[s, s])?;
    let grid: Vec<f64> = crate::dynamics::linspace(0.0, 2.0 * std::f64::consts::PI, 201)?;
    let clock = ClockTrajectory::evolve(&chi0, spec.h_clock(), 0.0, &grid)?;
    let projected = projected_trajectory(state.psi(), &clock)?;

    let phi0 = projected.state(0).clone();
    let free_states: Result<Vec<CVector>> = grid
        .iter()
        .map(|&l| propagate_free(spec.h_system(), &phi0, l))
        .collect();
    let free = SystemTrajectory::new(grid.clone(), free_states?, TrajectorySource::Integrated)?;

    let max_free_vs_projected = (0..grid.len())
        .map(|k| projected.state(k).sub(free.state(k)).norm())
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_envariance_residual = 0.0f64;
    for _ in 0..10 {
        let lambda = rng.gen::<f64>() * 20.0 - 10.0;
        let r = crate::relational::envariance_check(
            state.psi(),
            &chi0,
            spec.h_system(),
            spec.h_clock(),
            0.0,
            lambda,
        )?;
        max_envariance_residual = max_envariance_residual.max(r);
    }

    // product-state variant |↑↑⟩: an E = 2 eigenstate with trivial
    // conditional dynamics (pure phase)
    let product = CVector::basis(4, 0)?;
    let clock_prod = ClockTrajectory::evolve(&chi0, spec.h_clock(), 2.0, &grid)?;
    let projected_prod = projected_trajectory(&product, &clock_prod)?;
    let first = projected_prod.state(0).clone();
    let product_variant_infidelity_drift = projected_prod
        .states()
        .iter()
        .map(|sstate| infidelity(sstate, &first))
        .fold(0.0, f64::max);

    Ok(DegenerateFreeBundle {
        spec,
        state,
        chi0,
        projected,
        free,
        max_free_vs_projected,
        max_envariance_residual,
        product_variant_infidelity_drift,
    })
}

/// A verified, exactly solvable time-dependent Hamiltonian/solution pair.
#[derive(Debug, Serialize)]
pub struct SolvableExport {
    pub metadata: ExportMetadata,
    pub records: Vec<ExportRecord>,
}

#[derive(Debug, Serialize)]
pub struct ExportMetadata {
    pub d_s: usize,
    pub d_c: usize,
    pub h_system: Vec<Vec<[f64; 2]>>,
    pub h_clock: Vec<Vec<[f64; 2]>>,
    pub v_interaction: Vec<Vec<[f64; 2]>>,
    pub chi0: Vec<[f64; 2]>,
    pub energy: f64,
    pub grid_start: f64,
    pub grid_stop: f64,
    pub grid_points: usize,
    /// verification stamp: the measured TDSE residual and the threshold it
    /// was held against (exports violating the stamp are never emitted)
    pub max_tdse_residual: f64,
    pub residual_threshold: f64,
    pub generator_scale: f64,
}

#[derive(Debug, Serialize)]
pub struct ExportRecord {
    pub lambda: f64,
    pub v_s: Vec<Vec<[f64; 2]>>,
    pub e_script: [f64; 2],
    pub s_phase: [f64; 2],
    pub phi: Vec<[f64; 2]>,
}

pub(crate) fn matrix_to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
        .collect()
}

pub(crate) fn vector_to_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.entries().iter().map(|z| [z.re, z.im]).collect()
}

/// Run the conditional pipeline for `(spec, psi, chi0)` on a uniform grid
/// and export the potential/solution pair, stamped with its own TDSE
/// residual. Exports whose residual exceeds the threshold are refused.
///
/// `residual_threshold`: optional override; the default scales with the
/// step squared and the generator magnitude (the second-order floor of the
/// central-difference residual estimator).
pub fn generate_solvable(
    spec: &HamiltonianSpec,
    state: &GlobalEigenstate,
    chi0: &CVector,
    grid: &[f64],
    residual_threshold: Option<f64>,
) -> Result<SolvableExport> {
    let (clock, samples, projected) = conditioned_run(
        state.psi(),
        spec.v_interaction(),
        chi0,
        spec.h_clock(),
        state.energy(),
        grid,
    )?;
    build_export(
        spec,
        state,
        chi0,
        grid,
        &clock,
        &samples,
        &projected,
        residual_threshold,
    )
}

/// Assemble and stamp an export from already-computed pipeline parts.
#[allow(clippy::too_many_arguments)]
pub fn build_export(
    spec: &HamiltonianSpec,
    state: &GlobalEigenstate,
    chi0: &CVector,
    grid: &[f64],
    clock: &ClockTrajectory,
    samples: &[EffectivePotentialSample],
    projected: &SystemTrajectory,
    residual_threshold: Option<f64>,
) -> Result<SolvableExport> {
    if grid.len() < 3 {
        return Err(Error::Validation("export grid needs at least 3 points".into()));
    }
    let dl = grid[1] - grid[0];
    if grid
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dl).abs() > 1e-9 * dl.abs())
    {
        return Err(Error::Validation("export grid must be uniform".into()));
    }

    let residual = tdse_residual(spec.h_system(), samples, projected)?;
    let scale = generator_scale(spec.h_system(), samples)?;
    let phi_scale = projected.state(0).norm().max(f64::MIN_POSITIVE);
    let threshold = residual_threshold.unwrap_or_else(|| {
        EXPORT_THRESHOLD_FACTOR * dl * dl * scale.max(1.0).powi(3) * phi_scale
    });
    if residual > threshold {
        return Err(Error::ExportUnverified {
            residual,
            threshold,
        });
    }

    let records: Vec<ExportRecord> = (0..grid.len())
        .map(|k| ExportRecord {
            lambda: grid[k],
            v_s: matrix_to_pairs(samples[k].v_s()),
            e_script: [samples[k].e_script().re, samples[k].e_script().im],
            s_phase: [clock.s_phase(k).re, clock.s_phase(k).im],
            phi: vector_to_pairs(projected.state(k)),
        })
        .collect();

    Ok(SolvableExport {
        metadata: ExportMetadata {
            d_s: spec.d_s(),
            d_c: spec.d_c(),
            h_system: matrix_to_pairs(spec.h_system()),
            h_clock: matrix_to_pairs(spec.h_clock()),
            v_interaction: matrix_to_pairs(spec.v_interaction()),
            chi0: vector_to_pairs(chi0),
            energy: state.energy(),
            grid_start: grid[0],
            grid_stop: grid[grid.len() - 1],
            grid_points: grid.len(),
            max_tdse_residual: residual,
            residual_threshold: threshold,
            generator_scale: scale,
        },
        records,
    })
}
