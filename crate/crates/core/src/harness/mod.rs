//! Experiment harness: configuration, seeded parallel replication of the
//! named experiments, and CSV/JSON output.
//!
//! Every replicate derives its streams from `(master_seed, replicate)` alone
//! and results are sorted before emission, so the output does not depend on
//! the number of workers.

pub mod config;
pub mod csv;
pub mod runner;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::environments::{
    context_radius, draw_theta, parse_catalog, random_catalog, random_direction, LatentModel, NoiseModel, PerturbedConfig, ThetaVariant,
    TwoBridgeConfig,
};
use crate::error::{Error, Result};
use crate::estimators::min_eigenvalue;
use crate::metrics::{bayesian_regret, bootstrap_exponent, scaling_exponent};
use crate::policies::{suggested_batch_size, LinUcbParams, PolicyKind};
use crate::rng::{derive, replicate_seed, stream, Purpose, ReplicateStreams};
use crate::simulation::{batch_matrix, check_simulation, SimulationCheck};
use crate::stats::{mean, median};
use crate::types::{ContextVector, Group};

pub use config::{parse_config, Experiment, ExperimentConfig, ThetaChoice};
pub use csv::{emit_csv, emit_curves, format_g17, parse_csv, CurveRow, ResultRow, CURVE_HEADER, HEADER};
pub use runner::{run_single, Instance, Population, RunOutcome, RunSpec, Tracking};

/// Label for config-level streams (catalog, prior mean); replicate indices
/// never reach it.
const INSTANCE_LABEL: u64 = u64::MAX;
const BOOTSTRAP_LABEL: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Collect regret (and eigenvalue) curves.
    pub curves: bool,
}

/// Mean and standard error of each regret column for one (policy, T).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub policy: String,
    pub horizon: usize,
    pub replicates: usize,
    pub regret_mean: f64,
    pub regret_se: Option<f64>,
    pub minority_mean: f64,
    pub minority_se: Option<f64>,
    pub prediction_mean: f64,
    pub prediction_se: Option<f64>,
    /// Regret restricted to the coin-flip round set.
    pub custom_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub policy: String,
    /// `regret` or `regret_minority`.
    pub metric: String,
    pub exponent: Option<f64>,
    pub intercept: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub note: Option<String>,
}

/// `lhs ≤ factor · comparator + allowance + 3·pooled_se`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub policy: String,
    pub horizon: usize,
    pub metric: String,
    pub lhs_mean: f64,
    pub comparator: String,
    pub comparator_horizon: usize,
    pub comparator_mean: f64,
    pub factor: f64,
    pub allowance: f64,
    pub pooled_se: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceInfo {
    pub prior_mean: Vec<f64>,
    pub prior_mean_norm: f64,
    pub catalog_entries: usize,
    pub num_actions: usize,
    /// `1 + R̂√d` at the largest horizon.
    pub context_radius: f64,
    /// Theoretical batch size at the largest horizon, for reference.
    pub theoretical_batch_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoBridgeReference {
    pub horizon: usize,
    pub epsilon: f64,
    pub sqrt_t: f64,
    /// `e^{-7/2}/12800 · √T`.
    pub lower_bound_constant_floor: f64,
    /// `√T/800`: uniform random choice under either latent vector.
    pub uniform_expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigReplicate {
    pub replicate: usize,
    pub horizon: usize,
    pub checked: usize,
    pub violations: usize,
    pub slope: f64,
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigSummary {
    pub horizon: usize,
    /// Bound is `coef · t` with `coef = ρ²/(32 ln T)`.
    pub coef: f64,
    pub from: usize,
    pub fraction_without_violation: f64,
    pub all_slopes_positive: bool,
    pub radius_sq: f64,
    pub batches: usize,
    pub fraction_batches_diverse: f64,
    pub replicates: Vec<EigReplicate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub horizon: usize,
    pub t: usize,
    /// Median over replicates of `t₀‖θ_bay − θ_freq‖`.
    pub median: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub alpha: f64,
    pub rejections: usize,
    pub max_w_norm: f64,
    pub max_reconstruction_error: f64,
    pub checks: Vec<SimulationCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceInfo>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub two_bridge: Vec<TwoBridgeReference>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<Comparison>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eig: Vec<EigSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub estimate_gaps: Vec<GapSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub master_seed: u64,
    pub replicates: usize,
    pub horizons: Vec<usize>,
    pub groups: Vec<GroupSummary>,
    pub exponents: Vec<ExponentFit>,
    pub diagnostics: Diagnostics,
}

impl Summary {
    pub fn group(&self, policy: &str, horizon: usize) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.policy == policy && g.horizon == horizon)
    }

    pub fn exponent(&self, policy: &str, metric: &str) -> Option<&ExponentFit> {
        self.exponents.iter().find(|e| e.policy == policy && e.metric == metric)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub curves: Vec<CurveRow>,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn csv(&self) -> String {
        emit_csv(&self.rows)
    }
}

/// One (policy, population, horizon) run performed in every replicate.
#[derive(Debug, Clone)]
struct Job {
    label: &'static str,
    policy: PolicyKind,
    population: Population,
    horizon: usize,
    tracking: Tracking,
}

/// Everything a replicate needs that is shared across replicates.
enum Setting {
    TwoBridge { theta: ThetaChoice, noise: NoiseModel },
    Perturbed(Box<PerturbedConfig>),
}

struct JobResult {
    row: ResultRow,
    custom: f64,
    outcome: RunOutcome,
}

fn two_bridge_linucb(cfg: &ExperimentConfig, horizon: usize) -> PolicyKind {
    let mut p = LinUcbParams::two_bridge(horizon);
    p.ridge = cfg.policy.ridge;
    p.c0 = cfg.policy.c0;
    if let Some(w) = cfg.policy.min_width {
        p.min_width = w;
    }
    PolicyKind::LinUcb(p)
}

fn perturbed_linucb(cfg: &ExperimentConfig, inst: &PerturbedConfig, horizon: usize) -> PolicyKind {
    let mut p = LinUcbParams::perturbed(
        inst.rho(),
        inst.dim(),
        inst.num_actions(),
        horizon,
        inst.model().prior.mean().norm(),
        cfg.policy.inflate,
    );
    p.ridge = cfg.policy.ridge;
    p.c0 = cfg.policy.c0;
    p.min_width = cfg.policy.min_width.unwrap_or(0.0);
    PolicyKind::LinUcb(p)
}

fn job(label: &'static str, policy: PolicyKind, population: Population, horizon: usize) -> Job {
    Job {
        label,
        policy,
        population,
        horizon,
        tracking: Tracking::default(),
    }
}

/// Builds the perturbed instance: prior mean direction and catalog come from
/// a config-level stream, so they are fixed for all replicates.
pub fn build_perturbed_instance(cfg: &ExperimentConfig) -> Result<PerturbedConfig> {
    let i = &cfg.instance;
    let mut rng = stream(derive(cfg.master_seed, INSTANCE_LABEL), Purpose::Instance);
    let prior_mean = random_direction(i.d, cfg.prior_mean_norm(), &mut rng);
    let catalog = match &i.catalog {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config("instance.catalog", format!("{}: {e}", path.display())))?;
            parse_catalog(&text)?
        }
        None if i.minority_prob.is_some() => {
            let mut c = random_catalog(i.d, i.k, i.catalog_size, Some(Group::Majority), &mut rng);
            c.extend(random_catalog(i.d, i.k, i.catalog_size, Some(Group::Minority), &mut rng));
            c
        }
        None => random_catalog(i.d, i.k, i.catalog_size, None, &mut rng),
    };
    let cov = DMatrix::identity(i.d, i.d) * i.prior_var;
    let model = LatentModel::new(prior_mean, cov, i.rho, NoiseModel::GaussianUnit)?;
    PerturbedConfig::new(catalog, model, i.minority_prob)
}

fn plan(cfg: &ExperimentConfig, setting: &Setting) -> Vec<Job> {
    let y = cfg.policy.batch_size;
    let bbg = PolicyKind::BatchBayesGreedy { batch_size: y };
    let bfg = PolicyKind::BatchFreqGreedy { batch_size: y };
    let inst = match setting {
        Setting::Perturbed(p) => Some(p.as_ref()),
        Setting::TwoBridge { .. } => None,
    };
    let mut jobs = Vec::new();
    for &t in &cfg.horizons {
        match cfg.experiment {
            Experiment::TwoBridgeLinUcb => {
                let p = two_bridge_linucb(cfg, t);
                jobs.push(job("linucb_full", p, Population::Full, t));
                jobs.push(job("linucb_minority", p, Population::MinorityOnly, t));
            }
            Experiment::TwoBridgeImpossibility => {
                let p = two_bridge_linucb(cfg, t);
                jobs.push(job("linucb_full", p, Population::Full, t));
                jobs.push(job("linucb_minority", p, Population::MinorityOnly, t));
                jobs.push(job("uniform_random", PolicyKind::UniformRandom, Population::Full, t));
                jobs.push(job("batch_freq_greedy", bfg, Population::Full, t));
            }
            Experiment::GreedyVsLinUcb => {
                let inst = inst.expect("perturbed setting");
                let short = t / y;
                jobs.push(job("batch_bayes_greedy", bbg, Population::Full, t));
                jobs.push(job("batch_freq_greedy", bfg, Population::Full, t));
                jobs.push(job("linucb", perturbed_linucb(cfg, inst, short), Population::Full, short));
                jobs.push(job("uniform_random", PolicyKind::UniformRandom, Population::Full, short));
                jobs.push(job("oracle", PolicyKind::Oracle, Population::Full, short));
            }
            Experiment::ScalingFit => {
                let inst = inst.expect("perturbed setting");
                jobs.push(job("linucb", perturbed_linucb(cfg, inst, t), Population::Full, t));
                jobs.push(job("batch_bayes_greedy", bbg, Population::Full, t));
                jobs.push(job("batch_freq_greedy", bfg, Population::Full, t));
            }
            Experiment::ExternalityVanishing => {
                let inst = inst.expect("perturbed setting");
                let short = t / y;
                let lin = perturbed_linucb(cfg, inst, short);
                jobs.push(job("batch_bayes_greedy", bbg, Population::Full, t));
                jobs.push(job("batch_freq_greedy", bfg, Population::Full, t));
                jobs.push(job("linucb_full", lin, Population::Full, short));
                jobs.push(job("linucb_minority", lin, Population::MinorityOnly, short));
            }
            Experiment::EigGrowth => {
                let inst = inst.expect("perturbed setting");
                let coef = inst.rho().powi(2) / (32.0 * (t as f64).ln());
                let mut j = job("batch_freq_greedy", bfg, Population::Full, t);
                j.tracking = Tracking {
                    curve_stride: Some(cfg.diagnostics.curve_stride),
                    eig_bound: Some((cfg.diagnostics.eig_from, coef)),
                    checkpoints: cfg.diagnostics.checkpoints.clone(),
                    batch_diversity: true,
                };
                jobs.push(j);
            }
            Experiment::SimulationVerify => {}
        }
    }
    jobs
}

fn run_replicate(
    cfg: &ExperimentConfig,
    setting: &Setting,
    jobs: &[Job],
    replicate: usize,
    opts: &RunOptions,
) -> Result<Vec<JobResult>> {
    let seed = replicate_seed(cfg.master_seed, replicate);
    let mut theta_rng = stream(seed, Purpose::Theta);
    let (variant, perturbed_theta) = match setting {
        Setting::TwoBridge { theta, .. } => {
            let v = match theta {
                ThetaChoice::Fixed(v) => *v,
                ThetaChoice::Random => {
                    if theta_rng.random::<bool>() {
                        ThetaVariant::Theta1
                    } else {
                        ThetaVariant::Theta0
                    }
                }
            };
            (Some(v), None)
        }
        Setting::Perturbed(p) => (None, Some(draw_theta(p.model(), &mut theta_rng))),
    };
    let mut out = Vec::with_capacity(jobs.len());
    for j in jobs {
        let mut tracking = j.tracking.clone();
        if opts.curves && tracking.curve_stride.is_none() {
            tracking.curve_stride = Some(cfg.diagnostics.curve_stride);
        }
        let (outcome, theta_draw_id) = match setting {
            Setting::TwoBridge { noise, .. } => {
                let v = variant.expect("two-bridge variant");
                let tb = TwoBridgeConfig::new(j.horizon, v, *noise);
                let theta = tb.theta();
                let spec = RunSpec {
                    instance: Instance::TwoBridge(tb),
                    population: j.population,
                    policy: j.policy,
                    theta: &theta,
                    prior: None,
                    horizon: j.horizon,
                    custom_fraction: cfg.metrics.custom_fraction,
                    tracking,
                };
                (run_single(&spec, seed)?, v.index() as u64)
            }
            Setting::Perturbed(p) => {
                let theta = perturbed_theta.as_deref().expect("drawn above");
                let spec = RunSpec {
                    instance: Instance::Perturbed(p),
                    population: j.population,
                    policy: j.policy,
                    theta,
                    prior: Some(&p.model().prior),
                    horizon: j.horizon,
                    custom_fraction: cfg.metrics.custom_fraction,
                    tracking,
                };
                (run_single(&spec, seed)?, replicate as u64)
            }
        };
        let mut outcome = outcome;
        outcome.ledger = Default::default();
        out.push(JobResult {
            row: ResultRow {
                experiment: cfg.experiment.name().to_string(),
                policy: j.label.to_string(),
                horizon: j.horizon,
                replicate,
                seed,
                regret_total: outcome.regret_total,
                regret_minority: outcome.regret_minority,
                regret_prediction: outcome.regret_prediction,
                theta_draw_id,
            },
            custom: outcome.regret_custom,
            outcome,
        });
    }
    Ok(out)
}

/// Maps `f` over replicate indices on `workers` threads (0 = rayon default)
/// and returns results in replicate order. The first failing replicate (in
/// index order) aborts the run.
fn par_replicates<T: Send>(cfg: &ExperimentConfig, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let results: Vec<Result<T>> = pool.install(|| (0..cfg.replicates).into_par_iter().map(&f).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(r, res)| {
            res.map_err(|e| Error::ReplicateFailed {
                seed: replicate_seed(cfg.master_seed, r),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, &RunOptions::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    if cfg.experiment == Experiment::SimulationVerify {
        return run_simulation_verify(cfg);
    }
    let setting = if cfg.experiment.is_two_bridge() {
        Setting::TwoBridge {
            theta: cfg.two_bridge.theta,
            noise: cfg.two_bridge.noise,
        }
    } else {
        Setting::Perturbed(Box::new(build_perturbed_instance(cfg)?))
    };
    let jobs = plan(cfg, &setting);
    let per_rep = par_replicates(cfg, |r| run_replicate(cfg, &setting, &jobs, r, opts))?;
    let mut results: Vec<JobResult> = per_rep.into_iter().flatten().collect();
    results.sort_by(|a, b| a.row.sort_key().cmp(&b.row.sort_key()));

    let mut curves = Vec::new();
    if opts.curves {
        for jr in &results {
            for p in &jr.outcome.curve {
                curves.push(CurveRow {
                    experiment: jr.row.experiment.clone(),
                    policy: jr.row.policy.clone(),
                    horizon: jr.row.horizon,
                    replicate: jr.row.replicate,
                    t: p.t,
                    regret: p.regret,
                    regret_minority: p.regret_minority,
                    lambda_min: p.lambda_min,
                });
            }
        }
    }
    let summary = summarize(cfg, &setting, &results)?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        rows: results.into_iter().map(|r| r.row).collect(),
        curves,
        summary,
    })
}

fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    match bayesian_regret(values) {
        Ok((m, se)) => (m, Some(se)),
        Err(_) => (mean(values), None),
    }
}

type Key = (String, usize);
type Metric = (&'static str, fn(&JobResult) -> f64);

fn summarize(cfg: &ExperimentConfig, setting: &Setting, results: &[JobResult]) -> Result<Summary> {
    let mut by_key: BTreeMap<Key, Vec<&JobResult>> = BTreeMap::new();
    for r in results {
        by_key.entry((r.row.policy.clone(), r.row.horizon)).or_default().push(r);
    }
    let column = |rs: &[&JobResult], f: fn(&JobResult) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let mut groups = Vec::new();
    for ((policy, horizon), rs) in &by_key {
        let (regret_mean, regret_se) = mean_se(&column(rs, |r| r.row.regret_total));
        let (minority_mean, minority_se) = mean_se(&column(rs, |r| r.row.regret_minority));
        let (prediction_mean, prediction_se) = mean_se(&column(rs, |r| r.row.regret_prediction));
        groups.push(GroupSummary {
            policy: policy.clone(),
            horizon: *horizon,
            replicates: rs.len(),
            regret_mean,
            regret_se,
            minority_mean,
            minority_se,
            prediction_mean,
            prediction_se,
            custom_mean: mean(&column(rs, |r| r.custom)),
        });
    }

    let grouped_instance = cfg.experiment.is_two_bridge() || cfg.instance.minority_prob.is_some();
    let mut metrics: Vec<Metric> = vec![("regret", |r| r.row.regret_total)];
    if grouped_instance {
        metrics.push(("regret_minority", |r| r.row.regret_minority));
    }
    let mut boot_rng = stream(derive(cfg.master_seed, BOOTSTRAP_LABEL), Purpose::Auxiliary);
    let mut exponents = Vec::new();
    let policies: Vec<String> = {
        let mut p: Vec<String> = by_key.keys().map(|k| k.0.clone()).collect();
        p.dedup();
        p
    };
    for policy in &policies {
        let horizons: Vec<usize> = by_key.keys().filter(|k| &k.0 == policy).map(|k| k.1).collect();
        if horizons.len() < 3 {
            continue;
        }
        for (metric, f) in &metrics {
            let per_h: Vec<Vec<f64>> = horizons
                .iter()
                .map(|&h| column(&by_key[&(policy.clone(), h)], *f))
                .collect();
            let ts: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
            let pts: Vec<(f64, f64)> = ts.iter().zip(&per_h).map(|(&t, v)| (t, mean(v))).collect();
            let mut fit = ExponentFit {
                policy: policy.clone(),
                metric: metric.to_string(),
                exponent: None,
                intercept: None,
                ci_low: None,
                ci_high: None,
                note: None,
            };
            match scaling_exponent(&pts) {
                Ok((e, c)) => {
                    fit.exponent = Some(e);
                    fit.intercept = Some(c);
                    if let Ok((lo, hi)) = bootstrap_exponent(
                        &ts,
                        &per_h,
                        cfg.metrics.bootstrap_resamples,
                        cfg.metrics.bootstrap_level,
                        &mut boot_rng,
                    ) {
                        fit.ci_low = Some(lo);
                        fit.ci_high = Some(hi);
                    }
                }
                Err(e) => fit.note = Some(e.to_string()),
            }
            exponents.push(fit);
        }
    }

    let mut summary = Summary {
        experiment: cfg.experiment.name().to_string(),
        master_seed: cfg.master_seed,
        replicates: cfg.replicates,
        horizons: cfg.horizons.clone(),
        groups,
        exponents,
        diagnostics: Diagnostics::default(),
    };
    let diag = &mut summary.diagnostics;
    match setting {
        Setting::TwoBridge { .. } => {
            for &t in &cfg.horizons {
                let s = (t as f64).sqrt();
                diag.two_bridge.push(TwoBridgeReference {
                    horizon: t,
                    epsilon: 1.0 / s,
                    sqrt_t: s,
                    lower_bound_constant_floor: (-3.5f64).exp() / 12800.0 * s,
                    uniform_expected: s / 800.0,
                });
            }
        }
        Setting::Perturbed(p) => {
            let t = cfg.max_horizon();
            diag.instance = Some(InstanceInfo {
                prior_mean: p.model().prior.mean().as_slice().to_vec(),
                prior_mean_norm: p.model().prior.mean().norm(),
                catalog_entries: p.catalog().len(),
                num_actions: p.num_actions(),
                context_radius: context_radius(p.rho(), t, p.num_actions(), p.dim()),
                theoretical_batch_size: suggested_batch_size(p.rho(), p.dim(), p.num_actions(), t, cfg.policy.delta),
            });
        }
    }
    let y = cfg.policy.batch_size;
    match cfg.experiment {
        Experiment::GreedyVsLinUcb => {
            for &t in &cfg.horizons {
                let lin = summary.group("linucb", t / y).cloned();
                for greedy in ["batch_bayes_greedy", "batch_freq_greedy"] {
                    let (Some(g), Some(l)) = (summary.group(greedy, t).cloned(), lin.clone()) else {
                        continue;
                    };
                    let allowance = if greedy == "batch_freq_greedy" {
                        frequentist_allowance(&by_key[&(greedy.to_string(), t)])
                    } else {
                        0.0
                    };
                    summary.diagnostics.comparisons.push(compare(
                        &g,
                        "regret",
                        (g.regret_mean, g.regret_se),
                        &l,
                        (l.regret_mean, l.regret_se),
                        y as f64,
                        allowance,
                    ));
                }
            }
        }
        Experiment::ExternalityVanishing => {
            for &t in &cfg.horizons {
                let short = t / y;
                let candidates: Vec<GroupSummary> = ["linucb_minority", "linucb_full"]
                    .iter()
                    .filter_map(|p| summary.group(p, short).cloned())
                    .collect();
                let Some(best) = candidates
                    .iter()
                    .min_by(|a, b| a.minority_mean.total_cmp(&b.minority_mean))
                    .cloned()
                else {
                    continue;
                };
                for greedy in ["batch_bayes_greedy", "batch_freq_greedy"] {
                    if let Some(g) = summary.group(greedy, t).cloned() {
                        summary.diagnostics.comparisons.push(compare(
                            &g,
                            "regret_minority",
                            (g.minority_mean, g.minority_se),
                            &best,
                            (best.minority_mean, best.minority_se),
                            y as f64,
                            0.0,
                        ));
                    }
                }
            }
        }
        Experiment::EigGrowth => {
            let Setting::Perturbed(p) = setting else { unreachable!() };
            for &t in &cfg.horizons {
                let rs = &by_key[&("batch_freq_greedy".to_string(), t)];
                summary.diagnostics.eig.push(eig_summary(cfg, p, t, rs));
                for &c in &cfg.diagnostics.checkpoints {
                    let values: Vec<f64> = rs
                        .iter()
                        .filter_map(|r| r.outcome.estimate_gaps.iter().find(|(n, _)| *n == c).map(|g| g.1))
                        .collect();
                    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
                    if finite.is_empty() {
                        continue;
                    }
                    summary.diagnostics.estimate_gaps.push(GapSummary {
                        horizon: t,
                        t: c,
                        median: median(&finite),
                        values,
                    });
                }
            }
        }
        _ => {}
    }
    Ok(summary)
}

/// Mean over replicates of the extra regret the frequentist action incurred
/// over the Bayesian prediction on the same rounds, floored at 0 per replicate.
fn frequentist_allowance(rs: &[&JobResult]) -> f64 {
    let v: Vec<f64> = rs
        .iter()
        .map(|r| (r.row.regret_total - r.row.regret_prediction).max(0.0))
        .collect();
    mean(&v)
}

fn compare(
    lhs: &GroupSummary,
    metric: &str,
    (lhs_mean, lhs_se): (f64, Option<f64>),
    rhs: &GroupSummary,
    (rhs_mean, rhs_se): (f64, Option<f64>),
    factor: f64,
    allowance: f64,
) -> Comparison {
    let pooled = (lhs_se.unwrap_or(0.0).powi(2) + (factor * rhs_se.unwrap_or(0.0)).powi(2)).sqrt();
    let bound = factor * rhs_mean + allowance + 3.0 * pooled;
    Comparison {
        policy: lhs.policy.clone(),
        horizon: lhs.horizon,
        metric: metric.to_string(),
        lhs_mean,
        comparator: rhs.policy.clone(),
        comparator_horizon: rhs.horizon,
        comparator_mean: rhs_mean,
        factor,
        allowance,
        pooled_se: pooled,
        bound,
        holds: lhs_mean <= bound,
    }
}

fn eig_summary(cfg: &ExperimentConfig, p: &PerturbedConfig, t: usize, rs: &[&JobResult]) -> EigSummary {
    let coef = p.rho().powi(2) / (32.0 * (t as f64).ln());
    let replicates: Vec<EigReplicate> = rs
        .iter()
        .filter_map(|r| {
            r.outcome.eig.as_ref().map(|e| EigReplicate {
                replicate: r.row.replicate,
                horizon: t,
                checked: e.checked,
                violations: e.violations,
                slope: e.slope,
                min_ratio: e.min_ratio,
            })
        })
        .collect();
    let ok = replicates.iter().filter(|e| e.violations == 0).count();
    let radius = context_radius(p.rho(), t, p.num_actions(), p.dim());
    let lambdas: Vec<f64> = rs.iter().flat_map(|r| r.outcome.batch_lambdas.iter().copied()).collect();
    let diverse = lambdas.iter().filter(|&&l| l >= radius * radius).count();
    EigSummary {
        horizon: t,
        coef,
        from: cfg.diagnostics.eig_from,
        fraction_without_violation: ok as f64 / replicates.len().max(1) as f64,
        all_slopes_positive: replicates.iter().all(|e| e.slope > 0.0),
        radius_sq: radius * radius,
        batches: lambdas.len(),
        fraction_batches_diverse: diverse as f64 / lambdas.len().max(1) as f64,
        replicates,
    }
}

/// Picks an available context uniformly at random.
fn random_available<R: Rng + ?Sized>(round: &crate::types::ContextRound, rng: &mut R) -> ContextVector {
    let avail: Vec<&ContextVector> = round.available().map(|(_, x)| x).collect();
    avail[rng.random_range(0..avail.len())].clone()
}

/// One simulation check: a batch of `batch_rows` contexts (a uniformly
/// random available action per perturbed round), a target whose direction
/// comes from a further round and whose norm is uniform on
/// `[0, √λ_min(Z_B)]`, and a KS comparison of simulated against direct
/// rewards.
pub fn simulation_target(cfg: &ExperimentConfig, inst: &PerturbedConfig, target: usize) -> Result<SimulationCheck> {
    let seed = replicate_seed(cfg.master_seed, target);
    let mut s = ReplicateStreams::new(seed);
    let theta = draw_theta(inst.model(), &mut s.theta);
    let n = cfg.simulation.batch_rows;
    let rows: Vec<ContextVector> = (1..=n)
        .map(|t| {
            let round = Instance::Perturbed(inst).sample(t, &mut s);
            random_available(&round, &mut s.policy)
        })
        .collect();
    let batch = batch_matrix(&rows)?;
    let lambda = min_eigenvalue(&(batch.transpose() * &batch))?;
    let round = Instance::Perturbed(inst).sample(n + 1, &mut s);
    let mut x = random_available(&round, &mut s.policy).into_inner();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = s.policy.random::<f64>() * lambda.sqrt();
    x.iter_mut().for_each(|v| *v *= target / norm);
    let x = ContextVector::new(x)?;
    let mut sim_rng = stream(seed, Purpose::Auxiliary);
    check_simulation(&batch, &theta, &x, cfg.simulation.samples, &mut sim_rng, &mut s.rewards)
}

fn run_simulation_verify(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let inst = build_perturbed_instance(cfg)?;
    let n = cfg.simulation.targets;
    let per_target = ExperimentConfig {
        replicates: n,
        ..cfg.clone()
    };
    let checks = par_replicates(&per_target, |i| simulation_target(cfg, &inst, i))?;
    let rejections = checks.iter().filter(|c| c.p_value < cfg.simulation.alpha).count();
    let summary = Summary {
        experiment: cfg.experiment.name().to_string(),
        master_seed: cfg.master_seed,
        replicates: n,
        horizons: cfg.horizons.clone(),
        groups: Vec::new(),
        exponents: Vec::new(),
        diagnostics: Diagnostics {
            simulation: Some(SimulationSummary {
                alpha: cfg.simulation.alpha,
                rejections,
                max_w_norm: checks.iter().map(|c| c.w_norm).fold(0.0, f64::max),
                max_reconstruction_error: checks.iter().map(|c| c.max_reconstruction_error).fold(0.0, f64::max),
                checks,
            }),
            ..Diagnostics::default()
        },
    };
    Ok(ExperimentResult {
        config: cfg.clone(),
        rows: Vec::new(),
        curves: Vec::new(),
        summary,
    })
}
