//! Propagation of the emergent TDSE and interaction-free evolution, plus the
//! trajectory comparison metrics behind the crate's verification runs.
//!
//! The integrator is an exponential midpoint rule (Magnus order 2): every
//! step is exactly unitary because the generator `H_S + V_S(λ_mid)` is
//! Hermitian, which turns norm conservation into a testable invariant.
//! Grids are fixed and uniform in the verification paths; convergence is
//! documented second order in the step (amplitude error ∝ Δλ², hence
//! infidelity ∝ Δλ⁴).

use crate::error::{Error, Result};
use crate::hilbert::{c64, eigh, expm_hermitian, CMatrix, CVector};
use crate::relational::{ClockTrajectory, EffectivePotentialSample};

/// Where a system trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectorySource {
    Projected,
    Integrated,
    ClosedForm,
}

/// Conditional system states `φ(λ)` on a grid.
#[derive(Debug, Clone)]
pub struct SystemTrajectory {
    lambda_grid: Vec<f64>,
    states: Vec<CVector>,
    source: TrajectorySource,
}

impl SystemTrajectory {
    pub fn new(
        lambda_grid: Vec<f64>,
        states: Vec<CVector>,
        source: TrajectorySource,
    ) -> Result<Self> {
        if lambda_grid.len() != states.len() {
            return Err(Error::GridMismatch {
                context: format!(
                    "{} grid points vs {} states",
                    lambda_grid.len(),
                    states.len()
                ),
            });
        }
        if lambda_grid.is_empty() {
            return Err(Error::Validation("trajectory must be nonempty".into()));
        }
        Ok(Self {
            lambda_grid,
            states,
            source,
        })
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

    pub fn state(&self, k: usize) -> &CVector {
        &self.states[k]
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn source(&self) -> TrajectorySource {
        self.source
    }
}

/// Comparison metrics between two trajectories: the largest pointwise
/// infidelity, the largest TDSE residual (filled by pipelines that evaluate
/// the generator; zero otherwise) and the norm drift of the first argument.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ComparisonReport {
    pub max_infidelity: f64,
    pub max_tdse_residual: f64,
    pub max_norm_drift: f64,
}

/// Phase-insensitive distance: `1 − |⟨a|b⟩|² / (‖a‖²‖b‖²)`.
/// Returns 1 when exactly one of the states vanishes, 0 when both do.
pub fn infidelity(a: &CVector, b: &CVector) -> f64 {
    let na = a.norm_squared();
    let nb = b.norm_squared();
    match (na > 0.0, nb > 0.0) {
        (true, true) => (1.0 - a.inner(b).norm_sqr() / (na * nb)).max(0.0),
        (false, false) => 0.0,
        _ => 1.0,
    }
}

/// Uniform linspace including both endpoints.
pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Validation("grid needs at least 2 points".into()));
    }
    if stop <= start || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Validation("grid bounds must be finite with stop > start".into()));
    }
    let n = points - 1;
    Ok((0..points)
        .map(|k| start + (stop - start) * (k as f64) / (n as f64))
        .collect())
}

/// Interaction-free evolution `e^{−iλ H_S} φ_0`.
pub fn propagate_free(h_system: &CMatrix, phi0: &CVector, lambda: f64) -> Result<CVector> {
    expm_hermitian(h_system, lambda)?.mul_vec(phi0)
}

/// Source of the effective potential at arbitrary `λ` (evaluated at step
/// midpoints by the integrator).
pub trait PotentialProvider {
    fn potential_at(&self, lambda: f64) -> Result<CMatrix>;
}

impl<F> PotentialProvider for F
where
    F: Fn(f64) -> Result<CMatrix>,
{
    fn potential_at(&self, lambda: f64) -> Result<CMatrix> {
        self(lambda)
    }
}

/// Integrate `i dφ/dλ = [H_S + V_S(λ)] φ` on an ascending grid with the
/// exponential midpoint rule:
/// `φ_{k+1} = exp(−i Δλ [H_S + V_S(λ_mid)]) φ_k`.
pub fn integrate_tdse(
    h_system: &CMatrix,
    potential: &impl PotentialProvider,
    phi0: &CVector,
    lambda_grid: &[f64],
) -> Result<SystemTrajectory> {
    if lambda_grid.len() < 2 {
        return Err(Error::Validation("integration grid needs at least 2 points".into()));
    }
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("integration grid must be strictly ascending".into()));
    }
    let mut states = Vec::with_capacity(lambda_grid.len());
    states.push(phi0.clone());
    let mut current = phi0.clone();
    for w in lambda_grid.windows(2) {
        let (l0, l1) = (w[0], w[1]);
        let mid = 0.5 * (l0 + l1);
        let v_mid = potential.potential_at(mid)?;
        let generator = h_system.add(&v_mid)?;
        let step = expm_hermitian(&generator, l1 - l0)?;
        current = step.mul_vec(&current)?;
        states.push(current.clone());
    }
    SystemTrajectory::new(lambda_grid.to_vec(), states, TrajectorySource::Integrated)
}

/// Conditional-state trajectory: `φ(λ_k) = e^{−iS_k} ⟨χ_k|Ψ⟩` for every
/// point of the clock trajectory.
pub fn projected_trajectory(psi: &CVector, clock: &ClockTrajectory) -> Result<SystemTrajectory> {
    let states: Result<Vec<CVector>> = (0..clock.len())
        .map(|k| crate::relational::conditional_state(psi, clock, k))
        .collect();
    SystemTrajectory::new(clock.grid().to_vec(), states?, TrajectorySource::Projected)
}

/// Max interior-point residual of the emergent TDSE on a uniform grid,
/// with second-order central differences:
/// `max_k ‖ i (φ_{k+1} − φ_{k−1}) / (2Δλ) − (H_S + V_S(λ_k)) φ_k ‖`.
pub fn tdse_residual(
    h_system: &CMatrix,
    potential_samples: &[EffectivePotentialSample],
    trajectory: &SystemTrajectory,
) -> Result<f64> {
    let n = trajectory.len();
    if potential_samples.len() != n {
        return Err(Error::GridMismatch {
            context: format!("{} samples vs {} trajectory points", potential_samples.len(), n),
        });
    }
    if n < 3 {
        return Err(Error::Validation("residual needs at least 3 grid points".into()));
    }
    for (s, &l) in potential_samples.iter().zip(trajectory.grid()) {
        if (s.lambda() - l).abs() > 1e-12 * l.abs().max(1.0) {
            return Err(Error::GridMismatch {
                context: format!("sample at {} vs trajectory point {}", s.lambda(), l),
            });
        }
    }
    let grid = trajectory.grid();
    let dl = grid[1] - grid[0];
    let uniform_tol = 1e-9 * dl.abs();
    if grid.windows(2).any(|w| ((w[1] - w[0]) - dl).abs() > uniform_tol) {
        return Err(Error::Validation("residual requires a uniform grid".into()));
    }

    let mut worst = 0.0f64;
    for (k, sample) in potential_samples.iter().enumerate().take(n - 1).skip(1) {
        let derivative = trajectory
            .state(k + 1)
            .sub(trajectory.state(k - 1))
            .scaled(c64(0.0, 1.0 / (2.0 * dl)));
        let generator = h_system.add(sample.v_s())?;
        let rhs = generator.mul_vec(trajectory.state(k))?;
        worst = worst.max(derivative.sub(&rhs).norm());
    }
    Ok(worst)
}

/// Compare two trajectories on the same grid. `max_norm_drift` tracks the
/// first argument; `max_tdse_residual` is left at zero (see
/// [`ComparisonReport`]).
pub fn compare(a: &SystemTrajectory, b: &SystemTrajectory) -> Result<ComparisonReport> {
    if a.grid().len() != b.grid().len()
        || a.grid()
            .iter()
            .zip(b.grid())
            .any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0))
    {
        return Err(Error::GridMismatch {
            context: "trajectories do not share a grid".into(),
        });
    }
    let mut max_infidelity = 0.0f64;
    let mut max_norm_drift = 0.0f64;
    let n0 = a.state(0).norm();
    for k in 0..a.len() {
        max_infidelity = max_infidelity.max(infidelity(a.state(k), b.state(k)));
        max_norm_drift = max_norm_drift.max((a.state(k).norm() - n0).abs());
    }
    Ok(ComparisonReport {
        max_infidelity,
        max_tdse_residual: 0.0,
        max_norm_drift,
    })
}

/// Largest magnitude of the generator `H_S + V_S(λ_k)` over a sample set;
/// the natural scale for residual thresholds.
pub fn generator_scale(
    h_system: &CMatrix,
    potential_samples: &[EffectivePotentialSample],
) -> Result<f64> {
    let mut scale = 0.0f64;
    for s in potential_samples {
        let g = h_system.add(s.v_s())?;
        let eig = eigh(&g)?;
        let top = eig.values().iter().map(|w| w.abs()).fold(0.0, f64::max);
        scale = scale.max(top);
    }
    Ok(scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::C64;
    use crate::model::{pauli, PauliAxis};
    use crate::relational::{
        accumulate_phase, conditional_state, ClockTrajectory, ConditionedPotential,
    };

    #[test]
    fn propagate_free_identity_at_zero() {
        let phi0 = CVector::new(vec![c64(0.3, 0.1), c64(0.2, -0.7)]).unwrap();
        let out = propagate_free(&pauli(PauliAxis::Z), &phi0, 0.0).unwrap();
        assert!(out.sub(&phi0).norm() <= 1e-14);
    }

    #[test]
    fn propagate_free_z_rotation() {
        let s = 1.0 / 2.0f64.sqrt();
        let phi0 = CVector::from_real(&[s, s]).unwrap();
        let out = propagate_free(&pauli(PauliAxis::Z), &phi0, std::f64::consts::FRAC_PI_2).unwrap();
        // (e^{-i pi/2}, e^{i pi/2})/sqrt2 = (-i, i)/sqrt2
        assert!((out.get(0) - c64(0.0, -s)).norm() <= 1e-12);
        assert!((out.get(1) - c64(0.0, s)).norm() <= 1e-12);
    }

    #[test]
    fn propagate_free_matches_projection_in_degenerate_scenario() {
        // V = 0, H_S = H_C = sigma_z, Bell-type eigenstate at E = 0
        let h_s = pauli(PauliAxis::Z);
        let h_c = pauli(PauliAxis::Z);
        let s = 1.0 / 2.0f64.sqrt();
        let psi = CVector::from_real(&[0.0, s, s, 0.0]).unwrap();
        let chi0 = CVector::from_real(&[s, s]).unwrap();
        let grid = linspace(0.0, 2.0, 10).unwrap();
        let clock = ClockTrajectory::evolve(&chi0, &h_c, 0.0, &grid).unwrap();
        let phi0 = conditional_state(&psi, &clock, 0).unwrap();
        for (k, &l) in grid.iter().enumerate() {
            let projected = conditional_state(&psi, &clock, k).unwrap();
            let free = propagate_free(&h_s, &phi0, l).unwrap();
            assert!(projected.sub(&free).norm() <= 1e-10);
        }
    }

    #[test]
    fn integrate_with_zero_potential_equals_free() {
        let h_s = pauli(PauliAxis::X).scaled(c64(0.7, 0.0));
        let phi0 = CVector::from_real(&[1.0, 0.0]).unwrap();
        let grid = linspace(0.0, 3.0, 31).unwrap();
        let zero = |_l: f64| CMatrix::zeros(2, 2);
        let traj = integrate_tdse(&h_s, &zero, &phi0, &grid).unwrap();
        for (k, &l) in grid.iter().enumerate() {
            let free = propagate_free(&h_s, &phi0, l).unwrap();
            assert!(traj.state(k).sub(&free).norm() <= 1e-10);
        }
    }

    #[test]
    fn integrator_second_order_convergence_on_example() {
        // amplitude error (√infidelity) drops ~4x per step halving
        let bundle = example_pipeline(401);
        let fine = example_pipeline(801);
        let coarse_err = bundle.sqrt();
        let fine_err = fine.sqrt();
        let ratio = coarse_err / fine_err;
        assert!(
            (3.0..=5.0).contains(&ratio),
            "convergence ratio {ratio} outside [3, 5]"
        );
    }

    /// Run the coupled two-level pipeline at the given resolution and return
    /// the max infidelity between integrated and projected trajectories.
    fn example_pipeline(points: usize) -> f64 {
        use crate::model::coupled_two_level_spec;
        let spec = coupled_two_level_spec();
        let sqrt3 = 3.0f64.sqrt();
        let a = 1.0 + sqrt3;
        let psi = CVector::from_real(&[1.0, 0.0, -1.0, -a]).unwrap();
        let s = 1.0 / (2.0 * (1.0 + a).sqrt());
        let chi0 = CVector::from_real(&[s, s]).unwrap();
        let grid = linspace(0.0, 2.0 * std::f64::consts::PI, points).unwrap();

        let clock = ClockTrajectory::evolve(&chi0, spec.h_clock(), -sqrt3, &grid)
            .unwrap()
            .with_effective_energies(&psi, spec.v_interaction())
            .unwrap();
        let clock = accumulate_phase(clock);
        let projected = projected_trajectory(&psi, &clock).unwrap();

        let provider =
            ConditionedPotential::new(&psi, spec.v_interaction(), &chi0, spec.h_clock(), -sqrt3)
                .unwrap();
        let phi0 = projected.state(0).clone();
        let integrated = integrate_tdse(spec.h_system(), &provider, &phi0, &grid).unwrap();
        compare(&integrated, &projected).unwrap().max_infidelity
    }

    #[test]
    fn residual_of_constant_state_with_zero_generator() {
        let grid = linspace(0.0, 1.0, 11).unwrap();
        let phi = CVector::from_real(&[1.0, 0.0]).unwrap();
        let states = vec![phi; grid.len()];
        let traj = SystemTrajectory::new(grid.clone(), states, TrajectorySource::ClosedForm)
            .unwrap();
        let psi = CVector::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let zero_v = CMatrix::zeros(4, 4).unwrap();
        let chi0 = CVector::from_real(&[1.0, 0.0]).unwrap();
        let clock = ClockTrajectory::evolve(&chi0, &pauli(PauliAxis::Z), 0.0, &grid).unwrap();
        let samples = crate::relational::sample_potentials(&psi, &clock, &zero_v).unwrap();
        let h_s = CMatrix::zeros(2, 2).unwrap();
        assert_eq!(tdse_residual(&h_s, &samples, &traj).unwrap(), 0.0);
    }

    #[test]
    fn residual_rejects_grid_mismatch() {
        let grid = linspace(0.0, 1.0, 5).unwrap();
        let phi = CVector::from_real(&[1.0, 0.0]).unwrap();
        let traj =
            SystemTrajectory::new(grid, vec![phi; 5], TrajectorySource::ClosedForm).unwrap();
        let h_s = CMatrix::zeros(2, 2).unwrap();
        assert!(matches!(
            tdse_residual(&h_s, &[], &traj),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn compare_self_and_global_phase() {
        let grid = linspace(0.0, 1.0, 4).unwrap();
        let states: Vec<CVector> = grid
            .iter()
            .map(|&l| {
                CVector::new(vec![c64(l.cos(), l.sin()), c64(0.4, -l)]).unwrap()
            })
            .collect();
        let t = SystemTrajectory::new(grid.clone(), states.clone(), TrajectorySource::ClosedForm)
            .unwrap();
        let report = compare(&t, &t).unwrap();
        assert_eq!(report.max_infidelity, 0.0);

        let phase: C64 = c64(0.0, 1.23).exp();
        let rotated: Vec<CVector> = states.iter().map(|s| s.scaled(phase)).collect();
        let t2 =
            SystemTrajectory::new(grid, rotated, TrajectorySource::ClosedForm).unwrap();
        let report = compare(&t, &t2).unwrap();
        assert!(report.max_infidelity <= 1e-14);
    }

    #[test]
    fn compare_rejects_different_grids() {
        let t1 = SystemTrajectory::new(
            vec![0.0, 1.0],
            vec![CVector::from_real(&[1.0]).unwrap(); 2],
            TrajectorySource::ClosedForm,
        )
        .unwrap();
        let t2 = SystemTrajectory::new(
            vec![0.0, 2.0],
            vec![CVector::from_real(&[1.0]).unwrap(); 2],
            TrajectorySource::ClosedForm,
        )
        .unwrap();
        assert!(matches!(compare(&t1, &t2), Err(Error::GridMismatch { .. })));
    }
}
