//! Plain-text experiment configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! experiment = ScalingFit
//! horizons   = 5000, 20000, 80000
//!
//! [instance]
//! rho = 0.3
//! ```
//!
//! A `[section]` header prefixes the keys that follow it. Every key has a
//! unique bare name, so the section may also be omitted (`rho = 0.3` at top
//! level means `instance.rho`). Lists are comma-separated. Keys that are not
//! in [`KEYS`] are rejected, as are values of the wrong type or outside their
//! valid range; the error names the key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::environments::{NoiseModel, ThetaVariant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Experiment {
    TwoBridgeLinUcb,
    TwoBridgeImpossibility,
    GreedyVsLinUcb,
    ScalingFit,
    ExternalityVanishing,
    SimulationVerify,
    EigGrowth,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::TwoBridgeLinUcb,
        Experiment::TwoBridgeImpossibility,
        Experiment::GreedyVsLinUcb,
        Experiment::ScalingFit,
        Experiment::ExternalityVanishing,
        Experiment::SimulationVerify,
        Experiment::EigGrowth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::TwoBridgeLinUcb => "TwoBridgeLinUCB",
            Experiment::TwoBridgeImpossibility => "TwoBridgeImpossibility",
            Experiment::GreedyVsLinUcb => "GreedyVsLinUCB",
            Experiment::ScalingFit => "ScalingFit",
            Experiment::ExternalityVanishing => "ExternalityVanishing",
            Experiment::SimulationVerify => "SimulationVerify",
            Experiment::EigGrowth => "EigGrowth",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::TwoBridgeLinUcb => {
                "LinUCB minority regret on the two-bridge instance, full population vs minority alone"
            }
            Experiment::TwoBridgeImpossibility => {
                "minority regret of several policies on the two-bridge instance with a random latent vector"
            }
            Experiment::GreedyVsLinUcb => {
                "batched greedy at T against comparators (LinUCB, uniform, oracle) at T/Y"
            }
            Experiment::ScalingFit => "log-log regret exponents of LinUCB and both batched greedy policies",
            Experiment::ExternalityVanishing => {
                "minority regret of batched greedy on two groups against LinUCB on the minority or full population"
            }
            Experiment::SimulationVerify => "KS checks of rewards simulated from a batch against direct draws",
            Experiment::EigGrowth => {
                "minimum-eigenvalue growth and Bayes-vs-OLS estimate gap under batched frequentist greedy"
            }
        }
    }

    pub fn is_two_bridge(self) -> bool {
        matches!(self, Experiment::TwoBridgeLinUcb | Experiment::TwoBridgeImpossibility)
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_ascii_lowercase();
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().to_ascii_lowercase() == norm)
            .ok_or_else(|| Error::TypeMismatch {
                key: "experiment".into(),
                expected: "experiment name",
                value: s.into(),
            })
    }
}

/// Latent vector for two-bridge runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThetaChoice {
    Fixed(ThetaVariant),
    /// Uniform over the two variants, drawn per replicate.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoBridgeSettings {
    pub theta: ThetaChoice,
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSettings {
    pub d: usize,
    pub k: usize,
    pub rho: f64,
    /// Mean tuples per group in a generated catalog.
    pub catalog_size: usize,
    /// Catalog file; generated at random when absent.
    pub catalog: Option<PathBuf>,
    /// `‖θ̄‖`; defaults to `1 + √(3 ln T_max)`.
    pub prior_mean_norm: Option<f64>,
    /// Prior covariance is `prior_var · I`.
    pub prior_var: f64,
    /// Probability of a minority round; two-group instances only.
    pub minority_prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySettings {
    pub batch_size: usize,
    pub ridge: f64,
    pub c0: f64,
    /// Multiplier (≥ 1) on LinUCB's `L` and `S`.
    pub inflate: f64,
    /// LinUCB width floor; `None` means `2√(ln T)` on two-bridge runs, 0 otherwise.
    pub min_width: Option<f64>,
    /// Failure probability used for the reported theoretical batch size.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSettings {
    /// Inclusion probability of each round in the coin-flip restriction set.
    pub custom_fraction: f64,
    pub bootstrap_resamples: usize,
    pub bootstrap_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSettings {
    pub targets: usize,
    pub samples: usize,
    pub batch_rows: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticSettings {
    /// First round at which the eigenvalue lower bound is checked.
    pub eig_from: usize,
    /// Rounds at which `t₀‖θ_bay − θ_freq‖` is recorded.
    pub checkpoints: Vec<usize>,
    /// Spacing of curve points and eigenvalue slope samples.
    pub curve_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub horizons: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    /// 0 picks the default worker count.
    pub workers: usize,
    pub two_bridge: TwoBridgeSettings,
    pub instance: InstanceSettings,
    pub policy: PolicySettings,
    pub metrics: MetricSettings,
    pub simulation: SimulationSettings,
    pub diagnostics: DiagnosticSettings,
}

/// Every accepted key, as `(section, name)`; the empty section is top level.
pub const KEYS: &[(&str, &str)] = &[
    ("", "experiment"),
    ("", "horizons"),
    ("", "replicates"),
    ("", "seed"),
    ("", "workers"),
    ("two_bridge", "theta"),
    ("two_bridge", "noise"),
    ("instance", "d"),
    ("instance", "k"),
    ("instance", "rho"),
    ("instance", "catalog_size"),
    ("instance", "catalog"),
    ("instance", "prior_mean_norm"),
    ("instance", "prior_var"),
    ("instance", "minority_prob"),
    ("policy", "batch_size"),
    ("policy", "ridge"),
    ("policy", "c0"),
    ("policy", "inflate"),
    ("policy", "min_width"),
    ("policy", "delta"),
    ("metrics", "custom_fraction"),
    ("metrics", "bootstrap_resamples"),
    ("metrics", "bootstrap_level"),
    ("simulation", "targets"),
    ("simulation", "samples"),
    ("simulation", "batch_rows"),
    ("simulation", "alpha"),
    ("diagnostics", "eig_from"),
    ("diagnostics", "checkpoints"),
    ("diagnostics", "curve_stride"),
];

fn full_key(section: &str, name: &str) -> String {
    if section.is_empty() {
        name.to_string()
    } else {
        format!("{section}.{name}")
    }
}

/// Resolves `name` written under `section` to its canonical full key.
fn resolve(section: &str, name: &str) -> Result<String> {
    let found = if section.is_empty() {
        match name.split_once('.') {
            Some((s, n)) => KEYS.iter().find(|(ks, kn)| *ks == s && *kn == n),
            None => KEYS.iter().find(|(_, kn)| *kn == name),
        }
    } else {
        KEYS.iter().find(|(ks, kn)| *ks == section && *kn == name)
    };
    found
        .map(|(s, n)| full_key(s, n))
        .ok_or_else(|| Error::UnknownKey(full_key(section, name)))
}

fn mismatch(key: &str, expected: &'static str, value: &str) -> Error {
    Error::TypeMismatch {
        key: key.into(),
        expected,
        value: value.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T> {
    value.trim().parse().map_err(|_| mismatch(key, expected, value))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_num(key, value, "number")?;
    if !v.is_finite() {
        return Err(mismatch(key, "finite number", value));
    }
    Ok(v)
}

/// Integers may be written as `20000`, `2e4` or `20_000`.
fn parse_usize(key: &str, value: &str) -> Result<usize> {
    let clean: String = value.trim().chars().filter(|c| *c != '_').collect();
    if let Ok(v) = clean.parse::<usize>() {
        return Ok(v);
    }
    let f: f64 = clean.parse().map_err(|_| mismatch(key, "non-negative integer", value))?;
    if f >= 0.0 && f.fract() == 0.0 && f <= usize::MAX as f64 {
        Ok(f as usize)
    } else {
        Err(mismatch(key, "non-negative integer", value))
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_usize(key, s))
        .collect()
}

fn parse_optional_f64(key: &str, value: &str) -> Result<Option<f64>> {
    match value.trim() {
        "auto" | "none" => Ok(None),
        v => parse_f64(key, v).map(Some),
    }
}

impl ExperimentConfig {
    /// Defaults for `experiment`. Two-bridge experiments use no ridge,
    /// perturbed ones use ridge 1.
    pub fn defaults(experiment: Experiment) -> Self {
        let horizons = match experiment {
            Experiment::TwoBridgeLinUcb => vec![10_000, 40_000, 160_000],
            Experiment::TwoBridgeImpossibility => vec![10_000, 40_000],
            Experiment::GreedyVsLinUcb | Experiment::ExternalityVanishing | Experiment::EigGrowth => vec![20_000],
            Experiment::ScalingFit => vec![5_000, 20_000, 80_000],
            Experiment::SimulationVerify => vec![10_000],
        };
        let two_bridge = TwoBridgeSettings {
            theta: if experiment == Experiment::TwoBridgeImpossibility {
                ThetaChoice::Random
            } else {
                ThetaChoice::Fixed(ThetaVariant::Theta0)
            },
            noise: if experiment == Experiment::TwoBridgeImpossibility {
                NoiseModel::Bernoulli
            } else {
                NoiseModel::GaussianUnit
            },
        };
        Self {
            experiment,
            horizons,
            replicates: 200,
            master_seed: 1,
            workers: 0,
            two_bridge,
            instance: InstanceSettings {
                d: 2,
                k: 5,
                rho: 0.3,
                catalog_size: 64,
                catalog: None,
                prior_mean_norm: None,
                prior_var: 1.0,
                minority_prob: (experiment == Experiment::ExternalityVanishing).then_some(0.2),
            },
            policy: PolicySettings {
                batch_size: 200,
                ridge: if experiment.is_two_bridge() { 0.0 } else { 1.0 },
                c0: 1.0,
                inflate: 1.0,
                min_width: None,
                delta: 0.05,
            },
            metrics: MetricSettings {
                custom_fraction: 0.5,
                bootstrap_resamples: 200,
                bootstrap_level: 0.95,
            },
            simulation: SimulationSettings {
                targets: 20,
                samples: 100_000,
                batch_rows: 100,
                alpha: 0.01,
            },
            diagnostics: DiagnosticSettings {
                eig_from: 2_000,
                checkpoints: vec![1_000, 8_000],
                curve_stride: 100,
            },
        }
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(1)
    }

    /// `‖θ̄‖` actually used: the configured value or `1 + √(3 ln T_max)`.
    pub fn prior_mean_norm(&self) -> f64 {
        self.instance
            .prior_mean_norm
            .unwrap_or_else(|| 1.0 + (3.0 * (self.max_horizon() as f64).ln()).sqrt())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "experiment" => {
                let e: Experiment = v.parse()?;
                if e != self.experiment {
                    return Err(Error::config(key, "given more than once"));
                }
            }
            "horizons" => self.horizons = parse_list(key, v)?,
            "replicates" => self.replicates = parse_usize(key, v)?,
            "seed" => self.master_seed = parse_num(key, v, "64-bit unsigned integer")?,
            "workers" => self.workers = parse_usize(key, v)?,
            "two_bridge.theta" => {
                self.two_bridge.theta = match v {
                    "0" | "theta0" => ThetaChoice::Fixed(ThetaVariant::Theta0),
                    "1" | "theta1" => ThetaChoice::Fixed(ThetaVariant::Theta1),
                    "random" => ThetaChoice::Random,
                    _ => return Err(mismatch(key, "0, 1 or random", v)),
                }
            }
            "two_bridge.noise" => {
                self.two_bridge.noise = match v {
                    "gaussian" => NoiseModel::GaussianUnit,
                    "bernoulli" => NoiseModel::Bernoulli,
                    _ => return Err(mismatch(key, "gaussian or bernoulli", v)),
                }
            }
            "instance.d" => self.instance.d = parse_usize(key, v)?,
            "instance.k" => self.instance.k = parse_usize(key, v)?,
            "instance.rho" => self.instance.rho = parse_f64(key, v)?,
            "instance.catalog_size" => self.instance.catalog_size = parse_usize(key, v)?,
            "instance.catalog" => self.instance.catalog = (!v.is_empty()).then(|| PathBuf::from(v)),
            "instance.prior_mean_norm" => self.instance.prior_mean_norm = parse_optional_f64(key, v)?,
            "instance.prior_var" => self.instance.prior_var = parse_f64(key, v)?,
            "instance.minority_prob" => self.instance.minority_prob = parse_optional_f64(key, v)?,
            "policy.batch_size" => self.policy.batch_size = parse_usize(key, v)?,
            "policy.ridge" => self.policy.ridge = parse_f64(key, v)?,
            "policy.c0" => self.policy.c0 = parse_f64(key, v)?,
            "policy.inflate" => self.policy.inflate = parse_f64(key, v)?,
            "policy.min_width" => self.policy.min_width = parse_optional_f64(key, v)?,
            "policy.delta" => self.policy.delta = parse_f64(key, v)?,
            "metrics.custom_fraction" => self.metrics.custom_fraction = parse_f64(key, v)?,
            "metrics.bootstrap_resamples" => self.metrics.bootstrap_resamples = parse_usize(key, v)?,
            "metrics.bootstrap_level" => self.metrics.bootstrap_level = parse_f64(key, v)?,
            "simulation.targets" => self.simulation.targets = parse_usize(key, v)?,
            "simulation.samples" => self.simulation.samples = parse_usize(key, v)?,
            "simulation.batch_rows" => self.simulation.batch_rows = parse_usize(key, v)?,
            "simulation.alpha" => self.simulation.alpha = parse_f64(key, v)?,
            "diagnostics.eig_from" => self.diagnostics.eig_from = parse_usize(key, v)?,
            "diagnostics.checkpoints" => self.diagnostics.checkpoints = parse_list(key, v)?,
            "diagnostics.curve_stride" => self.diagnostics.curve_stride = parse_usize(key, v)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Checks every invariant; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| Err(Error::config(k, m));
        if self.horizons.is_empty() {
            return bad("horizons", "at least one horizon is required");
        }
        if self.horizons.iter().any(|&t| t < 2) {
            return bad("horizons", "every horizon must be at least 2");
        }
        if self.replicates == 0 {
            return bad("replicates", "must be at least 1");
        }
        let i = &self.instance;
        if i.d == 0 {
            return bad("instance.d", "must be at least 1");
        }
        if i.k == 0 {
            return bad("instance.k", "must be at least 1");
        }
        if !(i.rho > 0.0) {
            return bad("instance.rho", "must be positive");
        }
        if i.rho > 1.0 / (i.d as f64).sqrt() {
            return bad("instance.rho", "must not exceed 1/sqrt(d)");
        }
        if i.catalog_size == 0 {
            return bad("instance.catalog_size", "must be at least 1");
        }
        if let Some(n) = i.prior_mean_norm {
            if n < 0.0 {
                return bad("instance.prior_mean_norm", "must be non-negative");
            }
        }
        if !(i.prior_var > 0.0) {
            return bad("instance.prior_var", "must be positive");
        }
        if let Some(p) = i.minority_prob {
            if !(p > 0.0 && p < 1.0) {
                return bad("instance.minority_prob", "must lie strictly between 0 and 1");
            }
        }
        if self.experiment == Experiment::ExternalityVanishing && i.minority_prob.is_none() {
            return bad("instance.minority_prob", "required for ExternalityVanishing");
        }
        let p = &self.policy;
        if p.batch_size == 0 {
            return bad("policy.batch_size", "must be at least 1");
        }
        if !(p.ridge >= 0.0) {
            return bad("policy.ridge", "must be non-negative");
        }
        if !(p.c0 >= 1.0) {
            return bad("policy.c0", "must be at least 1");
        }
        if !(p.inflate >= 1.0) {
            return bad("policy.inflate", "must be at least 1");
        }
        if let Some(w) = p.min_width {
            if w < 0.0 {
                return bad("policy.min_width", "must be non-negative");
            }
        }
        if !(p.delta > 0.0 && p.delta < 1.0) {
            return bad("policy.delta", "must lie strictly between 0 and 1");
        }
        if matches!(self.experiment, Experiment::GreedyVsLinUcb | Experiment::ExternalityVanishing) {
            if let Some(&t) = self.horizons.iter().find(|&&t| t / p.batch_size < 2) {
                return bad("policy.batch_size", &format!("horizon {t} leaves fewer than 2 rounds for the T/Y comparators"));
            }
        }
        let m = &self.metrics;
        if !(0.0..=1.0).contains(&m.custom_fraction) {
            return bad("metrics.custom_fraction", "must lie in [0, 1]");
        }
        if !(m.bootstrap_level > 0.0 && m.bootstrap_level < 1.0) {
            return bad("metrics.bootstrap_level", "must lie strictly between 0 and 1");
        }
        let s = &self.simulation;
        if s.targets == 0 {
            return bad("simulation.targets", "must be at least 1");
        }
        if s.samples < 2 {
            return bad("simulation.samples", "must be at least 2");
        }
        if s.batch_rows < i.d {
            return bad("simulation.batch_rows", "must be at least d");
        }
        if !(s.alpha > 0.0 && s.alpha < 1.0) {
            return bad("simulation.alpha", "must lie strictly between 0 and 1");
        }
        if self.diagnostics.curve_stride == 0 {
            return bad("diagnostics.curve_stride", "must be at least 1");
        }
        if self.diagnostics.checkpoints.contains(&0) {
            return bad("diagnostics.checkpoints", "rounds are 1-based");
        }
        Ok(())
    }

    /// Renders the config in the text format; `parse_config` of the result
    /// reproduces `self`.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| format!("{x:?}"));
        let _ = writeln!(out, "# {}", self.experiment.description());
        let _ = writeln!(out, "experiment = {}", self.experiment);
        let _ = writeln!(out, "horizons = {}", join(&self.horizons));
        let _ = writeln!(out, "replicates = {}", self.replicates);
        let _ = writeln!(out, "seed = {}", self.master_seed);
        let _ = writeln!(out, "workers = {}", self.workers);
        let _ = writeln!(out, "\n[two_bridge]");
        let theta = match self.two_bridge.theta {
            ThetaChoice::Fixed(ThetaVariant::Theta0) => "0",
            ThetaChoice::Fixed(ThetaVariant::Theta1) => "1",
            ThetaChoice::Random => "random",
        };
        let _ = writeln!(out, "theta = {theta}");
        let noise = match self.two_bridge.noise {
            NoiseModel::GaussianUnit => "gaussian",
            NoiseModel::Bernoulli => "bernoulli",
        };
        let _ = writeln!(out, "noise = {noise}");
        let i = &self.instance;
        let _ = writeln!(out, "\n[instance]");
        let _ = writeln!(out, "d = {}\nk = {}\nrho = {:?}\ncatalog_size = {}", i.d, i.k, i.rho, i.catalog_size);
        if let Some(path) = &i.catalog {
            let _ = writeln!(out, "catalog = {}", path.display());
        }
        let _ = writeln!(out, "prior_mean_norm = {}", opt(i.prior_mean_norm));
        let _ = writeln!(out, "prior_var = {:?}", i.prior_var);
        let _ = writeln!(out, "minority_prob = {}", opt(i.minority_prob));
        let p = &self.policy;
        let _ = writeln!(out, "\n[policy]");
        let _ = writeln!(
            out,
            "batch_size = {}\nridge = {:?}\nc0 = {:?}\ninflate = {:?}\nmin_width = {}\ndelta = {:?}",
            p.batch_size,
            p.ridge,
            p.c0,
            p.inflate,
            opt(p.min_width),
            p.delta
        );
        let m = &self.metrics;
        let _ = writeln!(out, "\n[metrics]");
        let _ = writeln!(
            out,
            "custom_fraction = {:?}\nbootstrap_resamples = {}\nbootstrap_level = {:?}",
            m.custom_fraction, m.bootstrap_resamples, m.bootstrap_level
        );
        let s = &self.simulation;
        let _ = writeln!(out, "\n[simulation]");
        let _ = writeln!(
            out,
            "targets = {}\nsamples = {}\nbatch_rows = {}\nalpha = {:?}",
            s.targets, s.samples, s.batch_rows, s.alpha
        );
        let g = &self.diagnostics;
        let _ = writeln!(out, "\n[diagnostics]");
        let _ = writeln!(
            out,
            "eig_from = {}\ncheckpoints = {}\ncurve_stride = {}",
            g.eig_from,
            join(&g.checkpoints),
            g.curve_stride
        );
        out
    }
}

/// Parses and validates a configuration; see the module docs for the grammar.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut section = String::new();
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {}", idx + 1), "unterminated section header"))?
                .trim();
            if !name.is_empty() && !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(Error::UnknownKey(format!("[{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", idx + 1), "expected `key = value`"))?;
        let key = resolve(&section, k.trim())?;
        if entries.insert(key.clone(), (idx, v.trim().to_string())).is_some() {
            return Err(Error::config(key, "given more than once"));
        }
    }
    let (_, exp) = entries
        .get("experiment")
        .ok_or_else(|| Error::config("experiment", "missing"))?;
    let mut cfg = ExperimentConfig::defaults(exp.parse()?);
    let mut ordered: Vec<_> = entries.into_iter().collect();
    ordered.sort_by_key(|(_, (line, _))| *line);
    for (key, (_, value)) in ordered {
        cfg.set(&key, &value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
