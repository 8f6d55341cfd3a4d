//! Clock-as-instrument utilities: expectation-value curves `⟨A⟩(λ)`,
//! monotone readout inversion, and resolution diagnostics over the clock
//! eigenbasis.

use crate::error::{Error, Result};
use crate::hilbert::{eigh, CMatrix, CVector, C64, HERMITICITY_TOL};
use crate::relational::ClockTrajectory;

/// Tolerance used by the strict-monotonicity check on first differences.
pub const MONOTONE_TOL: f64 = 1e-12;

/// A real expectation-value curve over a λ grid.
#[derive(Debug, Clone)]
pub struct ReadoutCurve {
    lambda_grid: Vec<f64>,
    values: Vec<f64>,
}

impl ReadoutCurve {
    pub fn new(lambda_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lambda_grid.len() != values.len() || lambda_grid.len() < 2 {
            return Err(Error::Validation(
                "readout curve needs matching grid/values with at least 2 points".into(),
            ));
        }
        Ok(Self { lambda_grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Distribution of the clock state over the clock energy eigenbasis and the
/// associated participation ratio `(Σ|a|²)² / Σ|a|⁴ ∈ [1, d_C]`.
#[derive(Debug, Clone)]
pub struct ResolutionSpectrum {
    coefficients: Vec<C64>,
    participation_ratio: f64,
}

impl ResolutionSpectrum {
    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn participation_ratio(&self) -> f64 {
        self.participation_ratio
    }
}

/// Normalized expectation values `⟨χ_λ|A|χ_λ⟩ / ⟨χ_λ|χ_λ⟩` along a clock
/// trajectory. `A` must be Hermitian, so each value is real up to rounding.
pub fn expectation_curve(a_obs: &CMatrix, trajectory: &ClockTrajectory) -> Result<ReadoutCurve> {
    if !a_obs.is_hermitian(HERMITICITY_TOL) {
        return Err(Error::Validation("observable must be Hermitian".into()));
    }
    let mut values = Vec::with_capacity(trajectory.len());
    for k in 0..trajectory.len() {
        let chi = trajectory.chi(k);
        let n = chi.norm_squared();
        if n == 0.0 {
            return Err(Error::Validation("clock state vanished on the grid".into()));
        }
        let expect = chi.inner(&a_obs.mul_vec(chi)?) / crate::hilbert::c64(n, 0.0);
        let scale = a_obs.max_abs().max(1.0);
        if expect.im.abs() > 1e-10 * scale {
            return Err(Error::Validation(format!(
                "expectation value has imaginary residue {:.3e}",
                expect.im
            )));
        }
        values.push(expect.re);
    }
    ReadoutCurve::new(trajectory.grid().to_vec(), values)
}

/// Invert a strictly monotone readout curve by linear interpolation:
/// given an observed value, estimate the λ it was read at.
pub fn invert_readout(curve: &ReadoutCurve, observed_value: f64) -> Result<f64> {
    let v = curve.values();
    let increasing = v.windows(2).all(|w| w[1] - w[0] > MONOTONE_TOL);
    let decreasing = v.windows(2).all(|w| w[0] - w[1] > MONOTONE_TOL);
    if !increasing && !decreasing {
        return Err(Error::NonMonotoneReadout);
    }
    let (lo, hi) = if increasing {
        (v[0], v[v.len() - 1])
    } else {
        (v[v.len() - 1], v[0])
    };
    if observed_value < lo || observed_value > hi {
        return Err(Error::ReadoutOutOfRange {
            value: observed_value,
            lo,
            hi,
        });
    }
    for k in 0..v.len() - 1 {
        let (v0, v1) = (v[k], v[k + 1]);
        let inside = if increasing {
            observed_value >= v0 && observed_value <= v1
        } else {
            observed_value <= v0 && observed_value >= v1
        };
        if inside {
            let t = (observed_value - v0) / (v1 - v0);
            let (l0, l1) = (curve.grid()[k], curve.grid()[k + 1]);
            return Ok(l0 + t * (l1 - l0));
        }
    }
    // monotone + range-checked means a bracket always exists
    unreachable!("bracketing interval exists for in-range values")
}

/// Decompose the clock state over the eigenbasis of `H_C`:
/// `a_k = ⟨E_k|χ_0⟩` with the kernel's deterministic phase fixing.
pub fn resolution_spectrum(chi0: &CVector, h_clock: &CMatrix) -> Result<ResolutionSpectrum> {
    if h_clock.rows() != chi0.dim() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "clock Hamiltonian {}x{} vs state dimension {}",
                h_clock.rows(),
                h_clock.cols(),
                chi0.dim()
            ),
        });
    }
    let eig = eigh(h_clock)?;
    let coefficients: Vec<C64> = (0..eig.dim()).map(|k| eig.vector(k).inner(chi0)).collect();
    let sum_sq: f64 = coefficients.iter().map(|a| a.norm_sqr()).sum();
    let sum_quart: f64 = coefficients.iter().map(|a| a.norm_sqr().powi(2)).sum();
    if sum_quart == 0.0 {
        return Err(Error::Validation("clock state must be nonzero".into()));
    }
    Ok(ResolutionSpectrum {
        coefficients,
        participation_ratio: sum_sq * sum_sq / sum_quart,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::c64;
    use crate::model::{pauli, PauliAxis};
    use crate::relational::ClockTrajectory;

    fn precession_trajectory(chi0: &CVector, points: usize, stop: f64) -> ClockTrajectory {
        let grid: Vec<f64> = (0..points)
            .map(|k| stop * k as f64 / (points - 1) as f64)
            .collect();
        ClockTrajectory::evolve(chi0, &pauli(PauliAxis::Z), 0.0, &grid).unwrap()
    }

    #[test]
    fn identity_observable_is_constant_one() {
        let chi0 = CVector::new(vec![c64(0.6, 0.0), c64(0.0, 0.8)]).unwrap();
        let traj = precession_trajectory(&chi0, 21, 3.0);
        let curve = expectation_curve(&CMatrix::identity(2).unwrap(), &traj).unwrap();
        assert!(curve.values().iter().all(|v| (v - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn two_level_precession_formula() {
        // χ0 = (1,0): ⟨σx⟩ ≡ 0.  χ0 = (1,1)/√2: ⟨σx⟩(λ) = cos(2λ).
        let up = CVector::from_real(&[1.0, 0.0]).unwrap();
        let traj = precession_trajectory(&up, 3, std::f64::consts::FRAC_PI_2);
        let curve = expectation_curve(&pauli(PauliAxis::X), &traj).unwrap();
        assert!(curve.values().iter().all(|v| v.abs() <= 1e-12));

        let s = 1.0 / 2.0f64.sqrt();
        let plus = CVector::from_real(&[s, s]).unwrap();
        let traj = precession_trajectory(&plus, 3, std::f64::consts::FRAC_PI_2);
        let curve = expectation_curve(&pauli(PauliAxis::X), &traj).unwrap();
        let expected = [1.0, 0.0, -1.0];
        for (v, e) in curve.values().iter().zip(expected) {
            assert!((v - e).abs() <= 1e-12, "{v} vs {e}");
        }
    }

    #[test]
    fn curve_shifts_rigidly_with_grid_origin() {
        let s = 1.0 / 2.0f64.sqrt();
        let plus = CVector::from_real(&[s, s]).unwrap();
        let shift = 0.37;
        let grid: Vec<f64> = (0..41).map(|k| k as f64 * 0.05).collect();
        let shifted: Vec<f64> = grid.iter().map(|l| l + shift).collect();
        let t0 = ClockTrajectory::evolve(&plus, &pauli(PauliAxis::Z), 0.0, &grid).unwrap();
        let t1 = ClockTrajectory::evolve(&plus, &pauli(PauliAxis::Z), 0.0, &shifted).unwrap();
        let c0 = expectation_curve(&pauli(PauliAxis::X), &t0).unwrap();
        let c1 = expectation_curve(&pauli(PauliAxis::X), &t1).unwrap();
        // the shifted curve equals the original evaluated at shifted λ
        for (k, v) in c1.values().iter().enumerate() {
            let expected = (2.0 * (grid[k] + shift)).cos();
            assert!((v - expected).abs() <= 1e-12);
        }
        let _ = c0;
    }

    #[test]
    fn invert_linear_curve() {
        let grid: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let values: Vec<f64> = grid.iter().map(|l| 2.0 * l).collect();
        let curve = ReadoutCurve::new(grid, values).unwrap();
        let lambda = invert_readout(&curve, 0.5).unwrap();
        assert!((lambda - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn invert_cosine_curve_on_monotone_branch() {
        let points = 201;
        let grid: Vec<f64> = (0..points)
            .map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / (points - 1) as f64)
            .collect();
        let values: Vec<f64> = grid.iter().map(|l| (2.0 * l).cos()).collect();
        let curve = ReadoutCurve::new(grid.clone(), values).unwrap();
        let lambda = invert_readout(&curve, 0.0).unwrap();
        let cell = grid[1] - grid[0];
        assert!((lambda - std::f64::consts::FRAC_PI_4).abs() <= cell);
    }

    #[test]
    fn invert_rejects_non_monotone_curve() {
        let points = 101;
        let grid: Vec<f64> = (0..points)
            .map(|k| std::f64::consts::PI * k as f64 / (points - 1) as f64)
            .collect();
        let values: Vec<f64> = grid.iter().map(|l| (2.0 * l).cos()).collect();
        let curve = ReadoutCurve::new(grid, values).unwrap();
        assert!(matches!(
            invert_readout(&curve, 0.3),
            Err(Error::NonMonotoneReadout)
        ));
    }

    #[test]
    fn invert_rejects_out_of_range() {
        let curve = ReadoutCurve::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        assert!(matches!(
            invert_readout(&curve, 3.0),
            Err(Error::ReadoutOutOfRange { .. })
        ));
    }

    #[test]
    fn spectrum_single_eigenvector() {
        let chi0 = CVector::from_real(&[1.0, 0.0]).unwrap();
        let spec = resolution_spectrum(&chi0, &pauli(PauliAxis::Z)).unwrap();
        assert!((spec.participation_ratio() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn spectrum_uniform_superposition() {
        let d = 6;
        let h = CMatrix::diagonal(&[0.5, 1.0, 1.5, 2.0, 2.5, 3.0]).unwrap();
        let amp = 1.0 / (d as f64).sqrt();
        let chi0 = CVector::from_real(&vec![amp; d]).unwrap();
        let spec = resolution_spectrum(&chi0, &h).unwrap();
        assert!((spec.participation_ratio() - d as f64).abs() <= 1e-12);
    }

    #[test]
    fn spectrum_reference_clock_state() {
        let s = 1.0 / 2.0f64.sqrt();
        let chi0 = CVector::from_real(&[s, s]).unwrap();
        let spec = resolution_spectrum(&chi0, &pauli(PauliAxis::Z)).unwrap();
        assert!((spec.participation_ratio() - 2.0).abs() <= 1e-12);
        // Parseval
        let total: f64 = spec.coefficients().iter().map(|a| a.norm_sqr()).sum();
        assert!((total - chi0.norm_squared()).abs() <= 1e-10);
    }
}
