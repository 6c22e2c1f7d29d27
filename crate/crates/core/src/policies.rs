//! Action-selection rules: LinUCB, the two batched greedy policies, the
//! oracle, and uniform random choice.

use std::f64::consts::E;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environments::context_radius;
use crate::error::{Error, Result};
use crate::estimators::{ols_estimate, GaussianPrior, SufficientStats, SymSolver, RECOMPUTE_EVERY};
use crate::types::{last_batch_end, ContextRound, ContextVector, History};

/// Parameters of the LinUCB interval width `f(t) = S + √(d c₀ ln(T + t T L²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinUcbParams {
    /// Bound on context norms.
    pub l: f64,
    /// Bound on the latent vector's norm.
    pub s: f64,
    pub c0: f64,
    /// Added to the diagonal of `Z` before inversion.
    pub ridge: f64,
    pub horizon: usize,
    /// Lower bound applied to the width; 0 disables it.
    pub min_width: f64,
}

impl LinUcbParams {
    /// Settings for perturbed instances: `L = 1 + ρ√(2d ln(2T³Kd))`,
    /// `S = ‖θ̄‖ + √(3d ln T)`, `c₀ = 1`, ridge 1. `inflate ≥ 1` scales `L`
    /// and `S` up for when `ρ` or `‖θ̄‖` are only known approximately.
    pub fn perturbed(rho: f64, d: usize, k: usize, horizon: usize, prior_mean_norm: f64, inflate: f64) -> Self {
        let (t, df, kf) = (horizon as f64, d as f64, k as f64);
        let l = 1.0 + rho * (2.0 * df * (2.0 * t.powi(3) * kf * df).ln()).sqrt();
        let s = prior_mean_norm + (3.0 * df * t.ln()).sqrt();
        Self {
            l: l * inflate,
            s: s * inflate,
            c0: 1.0,
            ridge: 1.0,
            horizon,
            min_width: 0.0,
        }
    }

    /// Settings for the two-bridge instance: basis contexts (`L = 1`),
    /// `S = 1`, no ridge, and the width floored at `2√(ln T)`.
    pub fn two_bridge(horizon: usize) -> Self {
        Self {
            l: 1.0,
            s: 1.0,
            c0: 1.0,
            ridge: 0.0,
            horizon,
            min_width: 2.0 * (horizon as f64).ln().sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::config("linucb.l", "must be positive"));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::config("linucb.s", "must be non-negative"));
        }
        if self.s >= self.horizon as f64 {
            return Err(Error::config("linucb.s", "must be smaller than the horizon"));
        }
        if !(self.c0 >= 1.0 && self.c0.is_finite()) {
            return Err(Error::config("linucb.c0", "must be at least 1"));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::config("linucb.ridge", "must be non-negative"));
        }
        if !(self.min_width >= 0.0 && self.min_width.is_finite()) {
            return Err(Error::config("linucb.min_width", "must be non-negative"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizons", "must be positive"));
        }
        Ok(())
    }
}

/// `max(min_width, S + √(d c₀ ln(T + t·T·L²)))`, natural log.
pub fn interval_width(t_obs: usize, p: &LinUcbParams, d: usize) -> f64 {
    let t = p.horizon as f64;
    let f = p.s + (d as f64 * p.c0 * (t + t_obs as f64 * t * p.l * p.l).ln()).sqrt();
    f.max(p.min_width)
}

/// UCB choice with an explicit width. Contexts in the null space of `Z + λI`
/// get an infinite bonus; ties go to the lowest index.
pub fn linucb_select_with_width(round: &ContextRound, s: &SufficientStats, ridge: f64, width: f64) -> usize {
    if round.all_available_identical() {
        return round.first_available();
    }
    let solver = SymSolver::new(s.z(), ridge);
    ucb_argmax(round, s, &solver, width)
}

fn ucb_argmax(round: &ContextRound, s: &SufficientStats, solver: &SymSolver, width: f64) -> usize {
    let theta_hat = solver.solve(s.xr().as_slice());
    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    for (a, x) in round.available() {
        let score = match solver.inv_quad(x.as_slice()) {
            Some(q) => x.dot(&theta_hat) + width * q.max(0.0).sqrt(),
            None => f64::INFINITY,
        };
        if best.is_none() || score > best_score {
            best = Some(a);
            best_score = score;
        }
    }
    best.expect("round has an available action")
}

/// LinUCB: argmax of `xᵀθ̂ + f(n)·√(xᵀ(Z+λI)⁻¹x)` with `θ̂ = (Z+λI)⁻¹ xr`.
pub fn linucb_select(round: &ContextRound, s: &SufficientStats, p: &LinUcbParams) -> usize {
    let width = interval_width(s.n(), p, s.dim());
    linucb_select_with_width(round, s, p.ridge, width)
}

/// Argmax of `xᵀ estimate` over available actions; ties go to the lowest index.
pub fn greedy_select(round: &ContextRound, estimate: &[f64]) -> usize {
    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    for (a, x) in round.available() {
        let score = x.dot(estimate);
        if best.is_none() || score > best_score {
            best = Some(a);
            best_score = score;
        }
    }
    best.expect("round has an available action")
}

fn uniform_select<R: Rng + ?Sized>(round: &ContextRound, rng: &mut R) -> usize {
    let n = round.num_available();
    let pick = rng.random_range(0..n);
    round.available().nth(pick).map(|(a, _)| a).expect("pick < available")
}

/// Smallest batch size for which the batch covariance reaches `R²` with
/// probability `1 - δ`:
/// `(R/ρ)² · 8e²/(e-1)² · (1 + ln(2d/δ)) · ln T + 4e/(e-1) · ln(2/δ)`, rounded up.
pub fn suggested_batch_size_with_radius(radius: f64, rho: f64, d: usize, horizon: usize, delta: f64) -> u64 {
    let c1 = 8.0 * E * E / ((E - 1.0) * (E - 1.0));
    let c2 = 4.0 * E / (E - 1.0);
    let y = (radius / rho).powi(2) * c1 * (1.0 + (2.0 * d as f64 / delta).ln()) * (horizon as f64).ln()
        + c2 * (2.0 / delta).ln();
    y.ceil() as u64
}

/// As [`suggested_batch_size_with_radius`] with `R = 1 + ρ√(2 ln(2TKd/δ_R))·√d`, `δ_R = T⁻²`.
pub fn suggested_batch_size(rho: f64, d: usize, k: usize, horizon: usize, delta: f64) -> u64 {
    suggested_batch_size_with_radius(context_radius(rho, horizon, k, d), rho, d, horizon, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicyKind {
    LinUcb(LinUcbParams),
    BatchBayesGreedy { batch_size: usize },
    BatchFreqGreedy { batch_size: usize },
    Oracle,
    UniformRandom,
}

impl PolicyKind {
    pub fn batch_size(&self) -> Option<usize> {
        match self {
            PolicyKind::BatchBayesGreedy { batch_size } | PolicyKind::BatchFreqGreedy { batch_size } => {
                Some(*batch_size)
            }
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::LinUcb(_) => "linucb",
            PolicyKind::BatchBayesGreedy { .. } => "batch_bayes_greedy",
            PolicyKind::BatchFreqGreedy { .. } => "batch_freq_greedy",
            PolicyKind::Oracle => "oracle",
            PolicyKind::UniformRandom => "uniform_random",
        }
    }
}

/// What a policy may consult besides its own history: the true latent
/// vector (oracle only) and the prior (Bayesian estimates and predictions).
#[derive(Debug, Clone, Copy)]
pub struct ModelContext<'a> {
    pub theta: &'a [f64],
    pub prior: Option<&'a GaussianPrior>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub action: usize,
    /// Bayesian-greedy prediction from the same batch-frozen data; equals
    /// `action` for non-batched policies.
    pub prediction: usize,
}

#[derive(Debug, Clone)]
struct Frozen {
    /// Last round of the previous batch.
    t0: usize,
    /// `None` during the cold-start batch of the frequentist policy.
    action_estimate: Option<Vec<f64>>,
    prediction_estimate: Option<Vec<f64>>,
}

/// `(t₀, action estimate, prediction estimate)` frozen at the last batch boundary.
pub type FrozenEstimates<'a> = (usize, Option<&'a [f64]>, Option<&'a [f64]>);

/// Per-run state of one policy: sufficient statistics over its own
/// observations, its history, and any batch-frozen estimates.
#[derive(Debug, Clone)]
pub struct PolicyState {
    kind: PolicyKind,
    stats: SufficientStats,
    history: History,
    frozen: Option<Frozen>,
    solver: Option<SymSolver>,
    since_recompute: usize,
}

impl PolicyState {
    pub fn new(kind: PolicyKind, dim: usize) -> Result<Self> {
        if let PolicyKind::LinUcb(p) = &kind {
            p.validate()?;
        }
        let batch_size = match kind.batch_size() {
            Some(0) => return Err(Error::config("batch_size", "must be at least 1")),
            Some(y) => y,
            None => 1,
        };
        Ok(Self {
            kind,
            stats: SufficientStats::new(dim),
            history: History::new(batch_size),
            frozen: None,
            solver: None,
            since_recompute: 0,
        })
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Rounds this policy has observed.
    pub fn observations(&self) -> usize {
        self.stats.n()
    }

    /// The batch-frozen `(action estimate, prediction estimate)` and `t₀`, if any.
    pub fn frozen_estimates(&self) -> Option<FrozenEstimates<'_>> {
        self.frozen.as_ref().map(|f| {
            (
                f.t0,
                f.action_estimate.as_deref(),
                f.prediction_estimate.as_deref(),
            )
        })
    }

    fn refresh(&mut self, t0: usize, ctx: &ModelContext) -> Result<()> {
        debug_assert_eq!(self.stats.n(), t0);
        let posterior = match ctx.prior {
            Some(prior) => Some(prior.posterior_mean(&self.stats)?.as_slice().to_vec()),
            None => None,
        };
        let frozen = match self.kind {
            PolicyKind::BatchBayesGreedy { .. } => {
                let est = posterior.ok_or_else(|| {
                    Error::Model("batch Bayesian greedy needs a prior".into())
                })?;
                Frozen {
                    t0,
                    action_estimate: Some(est.clone()),
                    prediction_estimate: Some(est),
                }
            }
            PolicyKind::BatchFreqGreedy { .. } => Frozen {
                t0,
                action_estimate: (t0 > 0).then(|| ols_estimate(&self.stats).as_slice().to_vec()),
                prediction_estimate: posterior,
            },
            _ => unreachable!("only batched policies freeze estimates"),
        };
        self.frozen = Some(frozen);
        Ok(())
    }

    /// Chooses an action (and prediction) for `round`. Call [`observe`](Self::observe)
    /// with the realized reward afterwards.
    pub fn select<R: Rng + ?Sized>(&mut self, round: &ContextRound, ctx: &ModelContext, rng: &mut R) -> Result<Decision> {
        let d = self.stats.dim();
        if round.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: round.dim(),
            });
        }
        let t = self.stats.n() + 1;
        let single = |a| Decision {
            action: a,
            prediction: a,
        };
        match self.kind {
            PolicyKind::Oracle => Ok(single(greedy_select(round, ctx.theta))),
            PolicyKind::UniformRandom => Ok(single(uniform_select(round, rng))),
            PolicyKind::LinUcb(p) => {
                if round.all_available_identical() {
                    return Ok(single(round.first_available()));
                }
                let width = interval_width(self.stats.n(), &p, d);
                let solver = self
                    .solver
                    .get_or_insert_with(|| SymSolver::new(self.stats.z(), p.ridge));
                Ok(single(ucb_argmax(round, &self.stats, solver, width)))
            }
            PolicyKind::BatchBayesGreedy { batch_size } | PolicyKind::BatchFreqGreedy { batch_size } => {
                let t0 = last_batch_end(t, batch_size);
                if self.frozen.as_ref().map(|f| f.t0) != Some(t0) {
                    self.refresh(t0, ctx)?;
                }
                let frozen = self.frozen.as_ref().expect("refreshed above");
                let action = match &frozen.action_estimate {
                    Some(est) => greedy_select(round, est),
                    None => uniform_select(round, rng),
                };
                let prediction = match &frozen.prediction_estimate {
                    Some(est) => greedy_select(round, est),
                    None => action,
                };
                Ok(Decision { action, prediction })
            }
        }
    }

    /// Records the realized reward for the chosen context.
    pub fn observe(&mut self, x: &ContextVector, reward: f64) -> Result<()> {
        self.stats.update(x.as_slice(), reward)?;
        self.history.push(x.clone(), reward);
        self.solver = None;
        self.since_recompute += 1;
        if self.since_recompute >= RECOMPUTE_EVERY {
            self.stats = SufficientStats::from_entries(self.stats.dim(), self.history.entries())?;
            self.since_recompute = 0;
        }
        Ok(())
    }
}

/// One decision step; see [`PolicyState::select`].
pub fn policy_step<R: Rng + ?Sized>(
    state: &mut PolicyState,
    round: &ContextRound,
    ctx: &ModelContext,
    rng: &mut R,
) -> Result<Decision> {
    state.select(round, ctx, rng)
}
