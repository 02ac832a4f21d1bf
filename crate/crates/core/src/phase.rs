//! Number basis to Pegg-Barnett phase basis.
//!
//! With `θ_m = θ0 + 2πm/(S+1)` the phase states are
//! `|θ_m> = (S+1)^{-1/2} sum_n e^{i n θ_m} |n>`, so a state's phase
//! amplitudes are `C_m = (S+1)^{-1/2} sum_n e^{-i n θ_m} a_n`. The same grid
//! serves the q-deformed space, whose phase states have identical form.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{QpbError, Result};
use crate::qcore::{neumaier_sum, unit_roots, DeformationParams};
use crate::states::StateVector;

/// Reference phase used by default.
pub const DEFAULT_THETA0: f64 = -PI;

#[derive(Debug, Clone)]
pub struct PhaseDistribution {
    pub theta0: f64,
    pub thetas: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
}

impl PhaseDistribution {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm()).collect()
    }

    pub fn total_probability(&self) -> f64 {
        neumaier_sum(self.probabilities.iter().copied())
    }
}

/// Grid `θ0 + 2πm/(S+1)`, `m = 0..=S`.
pub fn phase_grid(params: &DeformationParams, theta0: f64) -> Vec<f64> {
    let step = 2.0 * PI / params.dim() as f64;
    (0..params.dim())
        .map(|m| theta0 + step * m as f64)
        .collect()
}

/// `|θ>` for an arbitrary angle.
pub fn phase_state(params: &DeformationParams, theta: f64) -> StateVector {
    let amps = (0..params.dim())
        .map(|n| Complex64::from_polar(1.0, n as f64 * theta))
        .collect();
    StateVector::from_amplitudes(*params, amps).expect("phase states are never null")
}

/// Basis state `|θ_m>` of the grid anchored at `theta0`.
pub fn phase_basis_state(params: &DeformationParams, theta0: f64, m: usize) -> Result<StateVector> {
    if m > params.s() {
        return Err(QpbError::Domain(format!(
            "phase index {m} exceeds S = {}",
            params.s()
        )));
    }
    let dim = params.dim();
    let roots = unit_roots(dim);
    let amps = (0..dim)
        .map(|n| Complex64::from_polar(1.0, n as f64 * theta0) * roots[(n * m) % dim])
        .collect();
    StateVector::from_amplitudes(*params, amps)
}

/// Phase amplitudes of `state` by a direct finite Fourier sum.
pub fn phase_amplitudes(state: &StateVector, theta0: f64) -> PhaseDistribution {
    let params = state.params();
    let dim = params.dim();
    let roots = unit_roots(dim);
    let scale = 1.0 / (dim as f64).sqrt();
    let twisted: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, &a)| a * Complex64::from_polar(1.0, -(n as f64) * theta0))
        .collect();
    let amplitudes: Vec<Complex64> = (0..dim)
        .map(|m| {
            let s: Complex64 = twisted
                .iter()
                .enumerate()
                // e^{-2πi nm/(S+1)}
                .map(|(n, &a)| a * roots[(dim - (n * m) % dim) % dim])
                .sum();
            s * scale
        })
        .collect();
    let probabilities = amplitudes.iter().map(|c| c.norm_sqr()).collect();
    PhaseDistribution {
        theta0,
        thetas: phase_grid(params, theta0),
        probabilities,
        amplitudes,
    }
}

/// Inverse of [`phase_amplitudes`]: `a_n = (S+1)^{-1/2} sum_m e^{i n θ_m} C_m`.
pub fn number_amplitudes(
    dist: &PhaseDistribution,
    params: &DeformationParams,
) -> Result<StateVector> {
    let dim = params.dim();
    if dist.len() != dim {
        return Err(QpbError::Domain(format!(
            "distribution has {} points, expected {dim}",
            dist.len()
        )));
    }
    let roots = unit_roots(dim);
    let scale = 1.0 / (dim as f64).sqrt();
    let amps = (0..dim)
        .map(|n| {
            let s: Complex64 = dist
                .amplitudes
                .iter()
                .enumerate()
                .map(|(m, &c)| c * roots[(n * m) % dim])
                .sum();
            s * scale * Complex64::from_polar(1.0, n as f64 * dist.theta0)
        })
        .collect();
    StateVector::from_amplitudes(*params, amps)
}

/// `<φ̃> = sum_m θ_m |C_m|^2`.
pub fn phase_expectation(dist: &PhaseDistribution) -> f64 {
    neumaier_sum(
        dist.thetas
            .iter()
            .zip(&dist.probabilities)
            .map(|(t, p)| t * p),
    )
}

/// Largest change in `|C_m|` when the reference phase moves from `theta0_a`
/// to `theta0_b`, after relabeling `m` by the induced cyclic shift. Both
/// references must lie on a common grid.
pub fn distribution_shift_check(state: &StateVector, theta0_a: f64, theta0_b: f64) -> Result<f64> {
    let dim = state.params().dim();
    let step = 2.0 * PI / dim as f64;
    let shift = theta0_b - theta0_a;
    let steps = shift / step;
    let k = steps.round();
    if (steps - k).abs() > 1e-9 {
        return Err(QpbError::OffGrid { shift, step });
    }
    let k = (k as i64).rem_euclid(dim as i64) as usize;
    let a = phase_amplitudes(state, theta0_a).moduli();
    let b = phase_amplitudes(state, theta0_b).moduli();
    Ok((0..dim)
        .map(|m| (b[m] - a[(m + k) % dim]).abs())
        .fold(0.0, f64::max))
}

/// `sup_m | |C_m| - |C'_m| |` for two distributions on the same grid.
pub fn sup_modulus_distance(a: &PhaseDistribution, b: &PhaseDistribution) -> Result<f64> {
    if a.len() != b.len() || a.theta0 != b.theta0 {
        return Err(QpbError::Domain(
            "distributions must share the same phase grid".into(),
        ));
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x.norm() - y.norm()).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::coherent_pb;

    fn p(s: usize) -> DeformationParams {
        DeformationParams::new(s).unwrap()
    }

    #[test]
    fn number_states_are_uniform_in_phase() {
        let params = p(10);
        for n in [0, 3, 10] {
            let d = phase_amplitudes(&StateVector::number_state(params, n).unwrap(), 0.7);
            let u = 1.0 / 11f64.sqrt();
            assert!(d.moduli().iter().all(|c| (c - u).abs() < 1e-14));
        }
    }

    #[test]
    fn phase_basis_states_are_orthonormal() {
        let params = p(8);
        for j in [0, 4, 8] {
            let s = phase_basis_state(&params, -PI, j).unwrap();
            let d = phase_amplitudes(&s, -PI);
            for (m, c) in d.moduli().iter().enumerate() {
                let e = if m == j { 1.0 } else { 0.0 };
                assert!((c - e).abs() < 1e-13);
            }
            assert!((phase_expectation(&d) - d.thetas[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_expectation_s4() {
        let d = phase_amplitudes(&StateVector::vacuum(p(4)), -PI);
        assert!((phase_expectation(&d) - (-PI + 4.0 * PI / 5.0)).abs() < 1e-14);
        assert!((phase_expectation(&d) + 0.62832).abs() < 1e-5);
    }

    #[test]
    fn grid_spans_one_turn() {
        let g = phase_grid(&p(6), -PI);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[0], -PI);
        assert!(g[6] < PI);
    }

    #[test]
    fn coherent_state_centres_on_zero_phase() {
        let s = coherent_pb(Complex64::new(5.0, 0.0), &p(500));
        let d = phase_amplitudes(&s, DEFAULT_THETA0);
        assert!((d.total_probability() - 1.0).abs() < 1e-12);
        assert!(phase_expectation(&d).abs() < 0.02);
    }

    #[test]
    fn shift_by_grid_steps() {
        let s = coherent_pb(Complex64::new(5.0, 0.0), &p(100));
        let step = 2.0 * PI / 101.0;
        assert_eq!(distribution_shift_check(&s, -PI, -PI).unwrap(), 0.0);
        assert!(distribution_shift_check(&s, -PI, -PI + step).unwrap() < 1e-12);
        assert!(distribution_shift_check(&s, -PI, -PI - 7.0 * step).unwrap() < 1e-12);
        assert!(matches!(
            distribution_shift_check(&s, -PI, -PI + 0.5 * step),
            Err(QpbError::OffGrid { .. })
        ));
        let v = StateVector::vacuum(p(100));
        assert!(distribution_shift_check(&v, 0.0, 3.0 * step).unwrap() < 1e-14);
    }

    #[test]
    fn inverse_transform_round_trips() {
        let params = p(30);
        let s = coherent_pb(Complex64::new(1.5, -2.0), &params);
        let back = number_amplitudes(&phase_amplitudes(&s, 0.3), &params).unwrap();
        let err = s
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
