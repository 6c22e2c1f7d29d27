//! Python bindings: policies, estimators, the simulation construction,
//! statistics helpers and the experiment runner.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use linbandit::environments::ThetaVariant;
use linbandit::estimators::{self, GaussianPrior, SufficientStats};
use linbandit::harness::{parse_config, run_experiment, Experiment, ExperimentConfig};
use nalgebra::{DMatrix, DVector};
use linbandit::policies::{self, LinUcbParams, ModelContext, PolicyKind, PolicyState};
use linbandit::rng::{stream, Purpose, Stream};
use linbandit::{simulation, stats, ContextRound, ContextVector, Group};

create_exception!(linbandit_py, LinbanditError, PyException);

fn err(e: linbandit::Error) -> PyErr {
    LinbanditError::new_err(e.to_string())
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(LinbanditError::new_err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn prior(mean: Vec<f64>, cov: &[Vec<f64>]) -> PyResult<GaussianPrior> {
    GaussianPrior::new(DVector::from_vec(mean), matrix(cov)?).map_err(err)
}

fn stats_from(contexts: &[Vec<f64>], rewards: &[f64]) -> PyResult<SufficientStats> {
    if contexts.len() != rewards.len() {
        return Err(LinbanditError::new_err("contexts and rewards differ in length"));
    }
    let dim = contexts.first().map_or(0, Vec::len);
    let entries: Vec<(&[f64], f64)> = contexts.iter().map(Vec::as_slice).zip(rewards.iter().copied()).collect();
    SufficientStats::from_entries(dim, &entries).map_err(err)
}

/// A policy with its own state and random stream.
#[pyclass(module = "linbandit_py")]
struct Policy {
    state: PolicyState,
    prior: Option<GaussianPrior>,
    rng: Stream,
}

impl Policy {
    fn build(kind: PolicyKind, dim: usize, prior: Option<GaussianPrior>, seed: u64) -> PyResult<Self> {
        Ok(Self {
            state: PolicyState::new(kind, dim).map_err(err)?,
            prior,
            rng: stream(seed, Purpose::Policy),
        })
    }
}

#[pymethods]
impl Policy {
    /// LinUCB with explicit width parameters.
    #[staticmethod]
    #[pyo3(signature = (dim, horizon, l=1.0, s=1.0, c0=1.0, ridge=1.0, min_width=0.0, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn linucb(dim: usize, horizon: usize, l: f64, s: f64, c0: f64, ridge: f64, min_width: f64, seed: u64) -> PyResult<Self> {
        let p = LinUcbParams {
            l,
            s,
            c0,
            ridge,
            horizon,
            min_width,
        };
        Self::build(PolicyKind::LinUcb(p), dim, None, seed)
    }

    /// LinUCB configured for the two-bridge instance.
    #[staticmethod]
    #[pyo3(signature = (horizon, seed=0))]
    fn two_bridge_linucb(horizon: usize, seed: u64) -> PyResult<Self> {
        Self::build(PolicyKind::LinUcb(LinUcbParams::two_bridge(horizon)), 2, None, seed)
    }

    #[staticmethod]
    #[pyo3(signature = (batch_size, prior_mean, prior_cov, seed=0))]
    fn batch_bayes_greedy(batch_size: usize, prior_mean: Vec<f64>, prior_cov: Vec<Vec<f64>>, seed: u64) -> PyResult<Self> {
        let dim = prior_mean.len();
        let p = prior(prior_mean, &prior_cov)?;
        Self::build(PolicyKind::BatchBayesGreedy { batch_size }, dim, Some(p), seed)
    }

    /// Frequentist batched greedy; a prior is only used for predictions.
    #[staticmethod]
    #[pyo3(signature = (dim, batch_size, prior_mean=None, prior_cov=None, seed=0))]
    fn batch_freq_greedy(
        dim: usize,
        batch_size: usize,
        prior_mean: Option<Vec<f64>>,
        prior_cov: Option<Vec<Vec<f64>>>,
        seed: u64,
    ) -> PyResult<Self> {
        let p = match (prior_mean, prior_cov) {
            (Some(m), Some(c)) => Some(prior(m, &c)?),
            (None, None) => None,
            _ => return Err(LinbanditError::new_err("give both prior_mean and prior_cov or neither")),
        };
        Self::build(PolicyKind::BatchFreqGreedy { batch_size }, dim, p, seed)
    }

    #[staticmethod]
    #[pyo3(signature = (dim, seed=0))]
    fn uniform_random(dim: usize, seed: u64) -> PyResult<Self> {
        Self::build(PolicyKind::UniformRandom, dim, None, seed)
    }

    #[staticmethod]
    fn oracle(dim: usize) -> PyResult<Self> {
        Self::build(PolicyKind::Oracle, dim, None, 0)
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.state.kind().name()
    }

    #[getter]
    fn observations(&self) -> usize {
        self.state.observations()
    }

    /// Chooses among `contexts` (`None` marks an unavailable action).
    /// Returns `(action, prediction)`. `theta` is only read by the oracle.
    #[pyo3(signature = (contexts, theta=None, minority=false))]
    fn select(&mut self, contexts: Vec<Option<Vec<f64>>>, theta: Option<Vec<f64>>, minority: bool) -> PyResult<(usize, usize)> {
        let ctxs = contexts
            .into_iter()
            .map(|c| c.map(ContextVector::new).transpose())
            .collect::<linbandit::Result<Vec<_>>>()
            .map_err(err)?;
        let group = if minority { Group::Minority } else { Group::Majority };
        let round = ContextRound::new(ctxs, group, None, self.state.observations() + 1).map_err(err)?;
        let theta = theta.unwrap_or_else(|| vec![0.0; round.dim()]);
        let ctx = ModelContext {
            theta: &theta,
            prior: self.prior.as_ref(),
        };
        let d = self.state.select(&round, &ctx, &mut self.rng).map_err(err)?;
        Ok((d.action, d.prediction))
    }

    fn observe(&mut self, x: Vec<f64>, reward: f64) -> PyResult<()> {
        let x = ContextVector::new(x).map_err(err)?;
        self.state.observe(&x, reward).map_err(err)
    }

    /// Empirical covariance `Z` of the observed contexts.
    fn covariance(&self) -> Vec<Vec<f64>> {
        let z = self.state.stats().z();
        (0..z.nrows()).map(|i| z.row(i).iter().copied().collect()).collect()
    }
}

/// Ordinary least squares (minimum-norm) estimate from contexts and rewards.
#[pyfunction]
fn ols_estimate(contexts: Vec<Vec<f64>>, rewards: Vec<f64>) -> PyResult<Vec<f64>> {
    let s = stats_from(&contexts, &rewards)?;
    Ok(estimators::ols_estimate(&s).as_slice().to_vec())
}

/// Posterior mean under a Gaussian prior and unit-variance Gaussian noise.
#[pyfunction]
fn bayes_posterior_mean(
    contexts: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    prior_mean: Vec<f64>,
    prior_cov: Vec<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let s = stats_from(&contexts, &rewards)?;
    let p = prior(prior_mean, &prior_cov)?;
    Ok(p.posterior_mean(&s).map_err(err)?.as_slice().to_vec())
}

#[pyfunction]
fn min_eigenvalue(m: Vec<Vec<f64>>) -> PyResult<f64> {
    estimators::min_eigenvalue(&matrix(&m)?).map_err(err)
}

/// LinUCB width `max(min_width, S + √(d c₀ ln(T + t T L²)))`.
#[pyfunction]
#[pyo3(signature = (t_obs, horizon, d, l=1.0, s=1.0, c0=1.0, min_width=0.0))]
fn interval_width(t_obs: usize, horizon: usize, d: usize, l: f64, s: f64, c0: f64, min_width: f64) -> f64 {
    let p = LinUcbParams {
        l,
        s,
        c0,
        ridge: 1.0,
        horizon,
        min_width,
    };
    policies::interval_width(t_obs, &p, d)
}

#[pyfunction]
fn suggested_batch_size(rho: f64, d: usize, k: usize, horizon: usize, delta: f64) -> u64 {
    policies::suggested_batch_size(rho, d, k, horizon, delta)
}

/// `(w, 1 - ‖w‖²)` with `w = X_B Z_B⁻¹ x` for batch rows `batch`.
#[pyfunction]
fn simulation_weights(batch: Vec<Vec<f64>>, x: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
    let b = simulation::batch_matrix(&batch).map_err(err)?;
    let w = simulation::simulation_weights(&b, &x).map_err(err)?;
    Ok((w.weights().to_vec(), w.residual_var()))
}

/// Two-sample KS statistic and asymptotic p-value.
#[pyfunction]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(LinbanditError::new_err("KS test needs non-empty samples"));
    }
    let r = stats::ks_two_sample(&a, &b);
    Ok((r.statistic, r.p_value))
}

/// Slope and intercept of `ln(regret)` against `ln(T)`.
#[pyfunction]
fn scaling_exponent(horizons: Vec<f64>, regrets: Vec<f64>) -> PyResult<(f64, f64)> {
    let pts: Vec<(f64, f64)> = horizons.into_iter().zip(regrets).collect();
    linbandit::metrics::scaling_exponent(&pts).map_err(err)
}

/// Latent vector of the two-bridge instance (`variant` 0 or 1).
#[pyfunction]
fn two_bridge_theta(horizon: usize, variant: usize) -> PyResult<Vec<f64>> {
    let v = match variant {
        0 => ThetaVariant::Theta0,
        1 => ThetaVariant::Theta1,
        _ => return Err(LinbanditError::new_err("variant must be 0 or 1")),
    };
    let cfg = linbandit::environments::TwoBridgeConfig::new(horizon, v, linbandit::environments::NoiseModel::GaussianUnit);
    Ok(cfg.theta())
}

#[pyfunction]
fn list_experiments() -> Vec<&'static str> {
    Experiment::ALL.iter().map(|e| e.name()).collect()
}

/// Default config text for an experiment.
#[pyfunction]
fn default_config(experiment: &str) -> PyResult<String> {
    let e: Experiment = experiment.parse().map_err(err)?;
    Ok(ExperimentConfig::defaults(e).to_config_text())
}

/// Runs an experiment from config text; returns `(csv, summary_json)`.
#[pyfunction]
#[pyo3(signature = (config, seed=None, replicates=None, workers=None))]
fn run(py: Python<'_>, config: &str, seed: Option<u64>, replicates: Option<usize>, workers: Option<usize>) -> PyResult<(String, String)> {
    let mut cfg = parse_config(config).map_err(err)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    let res = py.detach(|| run_experiment(&cfg)).map_err(err)?;
    Ok((res.csv(), res.summary.to_json()))
}

#[pymodule]
pub fn linbandit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LinbanditError", m.py().get_type::<LinbanditError>())?;
    m.add_class::<Policy>()?;
    m.add_function(wrap_pyfunction!(ols_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_posterior_mean, m)?)?;
    m.add_function(wrap_pyfunction!(min_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(interval_width, m)?)?;
    m.add_function(wrap_pyfunction!(suggested_batch_size, m)?)?;
    m.add_function(wrap_pyfunction!(simulation_weights, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(two_bridge_theta, m)?)?;
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
