//! Problem instances: the two-bridge instance, perturbed context generation,
//! prior draws of the latent vector, and reward realization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::GaussianPrior;
use crate::types::{dot, ContextRound, ContextVector, Group, RoundKind, BOTTOM, TOP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Mean reward plus `N(0, 1)` noise.
    GaussianUnit,
    /// Reward is 1 with probability equal to the mean reward, else 0.
    Bernoulli,
}

/// Draws a realized reward for context `x`.
pub fn realize_reward<R: Rng + ?Sized>(
    theta: &[f64],
    x: &[f64],
    noise: NoiseModel,
    rng: &mut R,
) -> Result<f64> {
    if theta.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: x.len(),
        });
    }
    let mean = dot(theta, x);
    match noise {
        NoiseModel::GaussianUnit => {
            let eta: f64 = rng.sample(StandardNormal);
            Ok(mean + eta)
        }
        NoiseModel::Bernoulli => {
            if !(0.0..=1.0).contains(&mean) {
                return Err(Error::Model(format!(
                    "Bernoulli reward needs a mean in [0, 1], got {mean}"
                )));
            }
            Ok(if rng.random::<f64>() < mean { 1.0 } else { 0.0 })
        }
    }
}

// ---------------------------------------------------------------------------
// Two-bridge instance
// ---------------------------------------------------------------------------

pub const P_MAJORITY: f64 = 0.95;
pub const P_MINORITY_C: f64 = 0.95;
pub const P_MINORITY_B: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaVariant {
    /// Top bridge is better: `[1/2, 1/2 - ε]`.
    Theta0,
    /// Bottom bridge is better: `[1/2 - ε, 1/2]`.
    Theta1,
}

impl ThetaVariant {
    pub fn index(self) -> usize {
        match self {
            ThetaVariant::Theta0 => 0,
            ThetaVariant::Theta1 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBridgeConfig {
    pub horizon: usize,
    pub variant: ThetaVariant,
    pub noise: NoiseModel,
}

impl TwoBridgeConfig {
    pub fn new(horizon: usize, variant: ThetaVariant, noise: NoiseModel) -> Self {
        assert!(horizon >= 1, "horizon must be positive");
        Self {
            horizon,
            variant,
            noise,
        }
    }

    /// `ε = 1/√T`.
    pub fn epsilon(&self) -> f64 {
        1.0 / (self.horizon as f64).sqrt()
    }

    pub fn theta(&self) -> Vec<f64> {
        let eps = self.epsilon();
        match self.variant {
            ThetaVariant::Theta0 => vec![0.5, 0.5 - eps],
            ThetaVariant::Theta1 => vec![0.5 - eps, 0.5],
        }
    }
}

fn basis(v: [f64; 2]) -> Option<ContextVector> {
    Some(ContextVector::from_vec_unchecked(v.to_vec()))
}

/// Samples round `t`: majority (kind A, both slots top) with probability 0.95;
/// otherwise minority, kind C (both slots bottom) w.p. 0.95 or kind B (slot 0
/// top, slot 1 bottom) w.p. 0.05.
pub fn sample_two_bridge_round<R: Rng + ?Sized>(
    cfg: &TwoBridgeConfig,
    rng: &mut R,
    t: usize,
) -> ContextRound {
    debug_assert!(t >= 1 && t <= cfg.horizon);
    let u: f64 = rng.random();
    if u < P_MAJORITY {
        return ContextRound::new_unchecked(
            vec![basis(TOP), basis(TOP)],
            Group::Majority,
            Some(RoundKind::A),
            t,
        );
    }
    let v: f64 = rng.random();
    if v < P_MINORITY_C {
        ContextRound::new_unchecked(
            vec![basis(BOTTOM), basis(BOTTOM)],
            Group::Minority,
            Some(RoundKind::C),
            t,
        )
    } else {
        ContextRound::new_unchecked(
            vec![basis(TOP), basis(BOTTOM)],
            Group::Minority,
            Some(RoundKind::B),
            t,
        )
    }
}

// ---------------------------------------------------------------------------
// Latent model and perturbed context generation
// ---------------------------------------------------------------------------

/// Gaussian prior over the latent vector, perturbation size and reward noise.
#[derive(Debug, Clone)]
pub struct LatentModel {
    pub prior: GaussianPrior,
    pub perturbation: f64,
    pub noise: NoiseModel,
    prior_factor: DMatrix<f64>,
}

impl LatentModel {
    pub fn new(
        prior_mean: Vec<f64>,
        prior_cov: DMatrix<f64>,
        perturbation: f64,
        noise: NoiseModel,
    ) -> Result<Self> {
        if !(perturbation >= 0.0 && perturbation.is_finite()) {
            return Err(Error::config("rho", "perturbation size must be finite and >= 0"));
        }
        let prior = GaussianPrior::new(DVector::from_vec(prior_mean), prior_cov)?;
        let prior_factor = lower_factor(prior.cov())?;
        Ok(Self {
            prior,
            perturbation,
            noise,
            prior_factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }
}

fn lower_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(cov.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite("prior covariance is not positive definite".into())
    })?;
    Ok(chol.l())
}

/// One draw from the prior `N(θ̄, Σ)` as `θ̄ + L z` with `Σ = L Lᵀ`.
pub fn draw_theta<R: Rng + ?Sized>(model: &LatentModel, rng: &mut R) -> Vec<f64> {
    let d = model.dim();
    let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
    (model.prior.mean() + &model.prior_factor * z).as_slice().to_vec()
}

/// A tuple of mean contexts with a sampling weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTuple {
    pub means: Vec<Option<Vec<f64>>>,
    pub weight: f64,
    pub group: Option<Group>,
}

#[derive(Debug, Clone)]
pub struct PerturbedConfig {
    catalog: Vec<MeanTuple>,
    rho: f64,
    model: LatentModel,
    minority_prob: Option<f64>,
    num_actions: usize,
    all: WeightedIndex<f64>,
    by_group: Option<[(Vec<usize>, WeightedIndex<f64>); 2]>,
}

impl PerturbedConfig {
    /// Validates the catalog. With `minority_prob = Some(p)` every tuple must
    /// carry a group tag; the group is drawn first (minority w.p. `p`) and the
    /// tuple is then drawn from that group's entries.
    pub fn new(catalog: Vec<MeanTuple>, model: LatentModel, minority_prob: Option<f64>) -> Result<Self> {
        if catalog.is_empty() {
            return Err(Error::config("catalog", "catalog has no entries"));
        }
        let d = model.dim();
        let rho = model.perturbation;
        if rho > 1.0 / (d as f64).sqrt() + 1e-12 {
            return Err(Error::config(
                "rho",
                format!("perturbation size {rho} exceeds 1/sqrt(d) = {}", 1.0 / (d as f64).sqrt()),
            ));
        }
        let num_actions = catalog[0].means.len();
        for (i, tuple) in catalog.iter().enumerate() {
            if tuple.means.len() != num_actions {
                return Err(Error::config(
                    "catalog",
                    format!("entry {i} has {} actions, expected {num_actions}", tuple.means.len()),
                ));
            }
            if tuple.means.iter().all(Option::is_none) {
                return Err(Error::config("catalog", format!("entry {i} has no available action")));
            }
            if !(tuple.weight > 0.0 && tuple.weight.is_finite()) {
                return Err(Error::config("catalog", format!("entry {i} has a non-positive weight")));
            }
            for mu in tuple.means.iter().flatten() {
                if mu.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: mu.len(),
                    });
                }
                if mu.iter().any(|c| !c.is_finite()) {
                    return Err(Error::config("catalog", format!("entry {i} has a non-finite mean")));
                }
                let norm = dot(mu, mu).sqrt();
                if norm > 1.0 + 1e-12 {
                    return Err(Error::config(
                        "catalog",
                        format!("entry {i} has a mean context with norm {norm} > 1"),
                    ));
                }
            }
        }
        let all = WeightedIndex::new(catalog.iter().map(|t| t.weight))
            .map_err(|e| Error::config("catalog", e.to_string()))?;
        let by_group = match minority_prob {
            None => None,
            Some(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::config("minority_prob", "must lie in [0, 1]"));
                }
                let mut parts = Vec::new();
                for g in [Group::Majority, Group::Minority] {
                    let idx: Vec<usize> = catalog
                        .iter()
                        .enumerate()
                        .filter(|(_, t)| t.group == Some(g))
                        .map(|(i, _)| i)
                        .collect();
                    if idx.is_empty() {
                        return Err(Error::config(
                            "catalog",
                            format!("group-tagged sampling needs at least one {g:?} entry"),
                        ));
                    }
                    let w = WeightedIndex::new(idx.iter().map(|&i| catalog[i].weight))
                        .map_err(|e| Error::config("catalog", e.to_string()))?;
                    parts.push((idx, w));
                }
                let minority = parts.pop().expect("two groups");
                let majority = parts.pop().expect("two groups");
                Some([majority, minority])
            }
        };
        Ok(Self {
            catalog,
            rho,
            model,
            minority_prob,
            num_actions,
            all,
            by_group,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn model(&self) -> &LatentModel {
        &self.model
    }

    pub fn catalog(&self) -> &[MeanTuple] {
        &self.catalog
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn minority_prob(&self) -> Option<f64> {
        self.minority_prob
    }
}

/// Draws a mean tuple, then adds independent `N(0, ρ²)` noise to every
/// coordinate of every available context. Mean-tuple selection and group
/// draws consume `contexts_rng`; the perturbations consume `noise_rng`.
pub fn sample_perturbed_round<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    cfg: &PerturbedConfig,
    contexts_rng: &mut R1,
    noise_rng: &mut R2,
    t: usize,
) -> ContextRound {
    let (idx, group) = match (&cfg.by_group, cfg.minority_prob) {
        (Some(parts), Some(p)) => {
            let g = if contexts_rng.random::<f64>() < p {
                Group::Minority
            } else {
                Group::Majority
            };
            let (ids, w) = &parts[if g == Group::Minority { 1 } else { 0 }];
            (ids[w.sample(contexts_rng)], g)
        }
        _ => {
            let i = cfg.all.sample(contexts_rng);
            (i, cfg.catalog[i].group.unwrap_or(Group::Majority))
        }
    };
    let rho = cfg.rho;
    let contexts = cfg.catalog[idx]
        .means
        .iter()
        .map(|mu| {
            mu.as_ref().map(|mu| {
                let x = mu
                    .iter()
                    .map(|m| {
                        if rho == 0.0 {
                            *m
                        } else {
                            m + rho * noise_rng.sample::<f64, _>(StandardNormal)
                        }
                    })
                    .collect();
                ContextVector::from_vec_unchecked(x)
            })
        })
        .collect();
    ContextRound::new_unchecked(contexts, group, None, t)
}

/// High-probability bound on every perturbation coordinate: `ρ √(2 ln(2TKd/δ))`.
pub fn perturbation_bound(rho: f64, horizon: usize, k: usize, d: usize, delta: f64) -> f64 {
    rho * (2.0 * (2.0 * horizon as f64 * k as f64 * d as f64 / delta).ln()).sqrt()
}

/// High-probability bound on context norms: `1 + R̂ √d` with `δ = T⁻²`.
pub fn context_radius(rho: f64, horizon: usize, k: usize, d: usize) -> f64 {
    let delta = (horizon as f64).powi(-2);
    1.0 + perturbation_bound(rho, horizon, k, d, delta) * (d as f64).sqrt()
}

fn unit_ball_point<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dot(&v, &v).sqrt().max(f64::MIN_POSITIVE);
    let radius = rng.random::<f64>().powf(1.0 / d as f64);
    v.iter_mut().for_each(|c| *c *= radius / norm);
    v
}

/// A catalog of `size` equally weighted tuples of `k` mean contexts drawn
/// uniformly from the unit ball.
pub fn random_catalog<R: Rng + ?Sized>(d: usize, k: usize, size: usize, group: Option<Group>, rng: &mut R) -> Vec<MeanTuple> {
    (0..size)
        .map(|_| MeanTuple {
            means: (0..k).map(|_| Some(unit_ball_point(d, rng))).collect(),
            weight: 1.0,
            group,
        })
        .collect()
}

/// A vector with uniformly random direction and the given norm.
pub fn random_direction<R: Rng + ?Sized>(d: usize, norm: f64, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = dot(&v, &v).sqrt().max(f64::MIN_POSITIVE);
    v.iter_mut().for_each(|c| *c *= norm / n);
    v
}

/// Parses a mean-tuple catalog. One tuple per line:
///
/// ```text
/// # weight  group     contexts separated by ';', '-' marks an unavailable action
/// 1.0       majority  0.5 0.1 ; -0.2 0.3 ; -
/// 2.0       minority  0.0 0.9 ; 0.4 0.4 ; 0.1 -0.1
/// ```
///
/// The group column is `majority`, `minority` or `any`.
pub fn parse_catalog(text: &str) -> Result<Vec<MeanTuple>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::config("catalog", format!("line {}: {m}", lineno + 1));
        let mut head = line.splitn(3, char::is_whitespace);
        let weight: f64 = head
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| err("bad weight".into()))?;
        let group = match head.next().map(str::trim) {
            Some("majority") => Some(Group::Majority),
            Some("minority") => Some(Group::Minority),
            Some("any") => None,
            other => return Err(err(format!("bad group {other:?}"))),
        };
        let rest = head.next().ok_or_else(|| err("missing contexts".into()))?;
        let means = rest
            .split(';')
            .map(|cell| {
                let cell = cell.trim();
                if cell == "-" {
                    return Ok(None);
                }
                cell.split_whitespace()
                    .map(|c| c.parse::<f64>().map_err(|e| err(format!("{c}: {e}"))))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(MeanTuple {
            means,
            weight,
            group,
        });
    }
    Ok(out)
}
