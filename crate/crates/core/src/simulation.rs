//! Simulating a reward for an arbitrary context from one batch of observed
//! data: `g(x, h_B) = w_Bᵀ r_B + N(0, 1 - ‖w_B‖²)` with `w_B = X_B Z_B⁻¹ x`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::environments::{realize_reward, NoiseModel};
use crate::error::{Error, Result};
use crate::estimators::{min_eigenvalue, Cholesky};
use crate::stats::{ks_two_sample, mean};
use crate::types::{dot, ContextVector};

/// Residual variances in `[-RESIDUAL_TOL, 0)` are clamped to 0.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationWeights {
    w: Vec<f64>,
    residual_var: f64,
}

impl SimulationWeights {
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// `1 - ‖w‖²`, unclamped.
    pub fn residual_var(&self) -> f64 {
        self.residual_var
    }

    pub fn norm(&self) -> f64 {
        dot(&self.w, &self.w).sqrt()
    }
}

/// Stacks batch contexts into the `Y × d` batch context matrix.
pub fn batch_matrix<X: AsRef<[f64]>>(contexts: &[X]) -> Result<DMatrix<f64>> {
    let first = contexts.first().ok_or(Error::EmptyInput("batch contexts"))?;
    let d = first.as_ref().len();
    let mut m = DMatrix::zeros(contexts.len(), d);
    for (i, x) in contexts.iter().enumerate() {
        let x = x.as_ref();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        for (j, v) in x.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

/// `w = X_B Z_B⁻¹ x`, checked against `X_Bᵀ w = x`.
pub fn simulation_weights(batch: &DMatrix<f64>, x: &[f64]) -> Result<SimulationWeights> {
    let d = batch.ncols();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let z = batch.transpose() * batch;
    let lambda_min = min_eigenvalue(&z)?;
    if lambda_min <= 1e-10 {
        return Err(Error::InsufficientDiversity(lambda_min));
    }
    let chol = Cholesky::new(&z, 0.0).ok_or(Error::InsufficientDiversity(lambda_min))?;
    let v = chol.solve(x);
    let w: Vec<f64> = (0..batch.nrows())
        .map(|i| (0..d).map(|j| batch[(i, j)] * v[j]).sum())
        .collect();
    let back: Vec<f64> = (0..d)
        .map(|j| (0..batch.nrows()).map(|i| batch[(i, j)] * w[i]).sum())
        .collect();
    let err = back.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = dot(x, x).sqrt();
    if err > 1e-8 * scale.max(f64::MIN_POSITIVE) && err > 0.0 {
        return Err(Error::InsufficientDiversity(lambda_min));
    }
    let residual_var = 1.0 - dot(&w, &w);
    Ok(SimulationWeights { w, residual_var })
}

/// One simulated reward from the batch rewards `r_B`.
pub fn simulate_reward<R: Rng + ?Sized>(weights: &SimulationWeights, batch_rewards: &[f64], rng: &mut R) -> Result<f64> {
    if batch_rewards.len() != weights.w.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.w.len(),
            got: batch_rewards.len(),
        });
    }
    if weights.residual_var < -RESIDUAL_TOL {
        return Err(Error::RadiusViolation(weights.residual_var));
    }
    let var = weights.residual_var.max(0.0);
    let base = dot(&weights.w, batch_rewards);
    if var == 0.0 {
        return Ok(base);
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(base + var.sqrt() * z)
}

/// Outcome of comparing simulated rewards for one target context against
/// direct reward draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationCheck {
    pub x_norm: f64,
    pub lambda_min: f64,
    pub w_norm: f64,
    pub max_reconstruction_error: f64,
    pub simulated_mean: f64,
    pub true_mean: f64,
    pub ks_statistic: f64,
    pub p_value: f64,
}

/// Draws `samples` simulated rewards (each from a fresh batch of reward
/// realizations on the fixed batch matrix) and `samples` direct draws of
/// `θᵀx + N(0, 1)`, then runs a two-sample KS test.
pub fn check_simulation<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    batch: &DMatrix<f64>,
    theta: &[f64],
    x: &ContextVector,
    samples: usize,
    sim_rng: &mut R1,
    direct_rng: &mut R2,
) -> Result<SimulationCheck> {
    let weights = simulation_weights(batch, x.as_slice())?;
    let y = batch.nrows();
    let means: Vec<f64> = (0..y)
        .map(|i| (0..batch.ncols()).map(|j| batch[(i, j)] * theta[j]).sum())
        .collect();
    let mut rewards = vec![0.0; y];
    let mut simulated = Vec::with_capacity(samples);
    for _ in 0..samples {
        for (r, m) in rewards.iter_mut().zip(&means) {
            *r = m + sim_rng.sample::<f64, _>(StandardNormal);
        }
        simulated.push(simulate_reward(&weights, &rewards, sim_rng)?);
    }
    let direct = (0..samples)
        .map(|_| realize_reward(theta, x.as_slice(), NoiseModel::GaussianUnit, direct_rng))
        .collect::<Result<Vec<_>>>()?;
    let ks = ks_two_sample(&simulated, &direct);
    let z = batch.transpose() * batch;
    let back = batch.transpose() * nalgebra::DVector::from_column_slice(weights.weights());
    let max_err = back
        .iter()
        .zip(x.as_slice())
        .map(|(a, b)| (a - b).abs() / x.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(SimulationCheck {
        x_norm: x.norm(),
        lambda_min: min_eigenvalue(&z)?,
        w_norm: weights.norm(),
        max_reconstruction_error: max_err,
        simulated_mean: mean(&simulated),
        true_mean: dot(theta, x.as_slice()),
        ks_statistic: ks.statistic,
        p_value: ks.p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        batch_matrix(rows).unwrap()
    }

    #[test]
    fn observed_context_is_reproduced() {
        let w = simulation_weights(&m(&[&[1.0, 0.0], &[0.0, 1.0]]), &[1.0, 0.0]).unwrap();
        assert_relative_eq!(w.weights(), &[1.0, 0.0][..], epsilon = 1e-14);
        assert_relative_eq!(w.residual_var(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn unit_norm_target_on_identity_batch() {
        let w = simulation_weights(&m(&[&[1.0, 0.0], &[0.0, 1.0]]), &[0.6, 0.8]).unwrap();
        assert_relative_eq!(w.weights(), &[0.6, 0.8][..], epsilon = 1e-14);
        assert_relative_eq!(w.residual_var(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn scaled_batch() {
        let w = simulation_weights(&m(&[&[2.0, 0.0], &[0.0, 2.0]]), &[1.0, 0.0]).unwrap();
        assert_relative_eq!(w.weights(), &[0.5, 0.0][..], epsilon = 1e-14);
        assert_relative_eq!(w.residual_var(), 0.75, epsilon = 1e-14);
    }

    #[test]
    fn singular_batch_is_rejected() {
        let err = simulation_weights(&m(&[&[1.0, 0.0], &[2.0, 0.0]]), &[1.0, 0.0]);
        assert!(matches!(err, Err(Error::InsufficientDiversity(_))));
    }

    #[test]
    fn zero_residual_returns_weighted_sum() {
        let w = simulation_weights(&m(&[&[1.0, 0.0], &[0.0, 1.0]]), &[1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(simulate_reward(&w, &[3.25, -7.0], &mut rng).unwrap(), 3.25);
    }

    #[test]
    fn radius_violation_is_reported() {
        let w = simulation_weights(&m(&[&[1.0, 0.0], &[0.0, 1.0]]), &[2.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(simulate_reward(&w, &[0.0, 0.0], &mut rng), Err(Error::RadiusViolation(_))));
    }

    #[test]
    fn weight_norm_matches_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let b = batch_matrix(&rows).unwrap();
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w = simulation_weights(&b, &x).unwrap();
            let z = b.transpose() * &b;
            let zi = z.try_inverse().unwrap();
            let xv = nalgebra::DVector::from_vec(x.clone());
            let quad = (xv.transpose() * zi * &xv)[0];
            assert_relative_eq!(w.norm().powi(2), quad, max_relative = 1e-9);
        }
    }
}
