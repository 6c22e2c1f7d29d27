//! Quantitative acceptance checks. Each criterion runs one or more
//! experiments through the harness and reduces the summaries to a verdict.
//!
//! [`Scale::Full`] uses the replicate counts and horizons the checks are
//! specified at; [`Scale::Smoke`] shrinks everything so the plumbing can be
//! exercised quickly. Smoke verdicts carry no statistical meaning.

use std::fmt;
use std::time::Instant;

use linbandit::environments::ThetaVariant;
use linbandit::harness::{run_experiment, Experiment, ExperimentConfig, GroupSummary, Summary, ThetaChoice};
use linbandit::Result;

mod examples;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Full,
    Smoke,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub criterion: u8,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} criterion {}: {}", self.criterion, self.detail)
    }
}

fn verdict(criterion: u8, checks: &[(bool, String)], started: Instant) -> Verdict {
    let mut parts: Vec<String> = checks
        .iter()
        .map(|(ok, s)| format!("{}{s}", if *ok { "" } else { "[x] " }))
        .collect();
    parts.push(format!("{:.1}s", started.elapsed().as_secs_f64()));
    Verdict {
        criterion,
        passed: checks.iter().all(|c| c.0),
        detail: parts.join("; "),
    }
}

/// Defaults for `e` at the requested scale.
pub fn config(e: Experiment, scale: Scale, workers: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(e);
    cfg.workers = workers;
    cfg.master_seed = 20_240_601;
    if scale == Scale::Smoke {
        cfg.replicates = 4;
        cfg.horizons = cfg.horizons.iter().map(|t| (t / 20).max(400)).collect();
        cfg.policy.batch_size = 20;
        cfg.diagnostics.eig_from = 100;
        cfg.diagnostics.checkpoints = vec![50, 400];
        cfg.simulation.targets = 3;
        cfg.simulation.samples = 2000;
    }
    cfg
}

fn replicates(scale: Scale, full: usize) -> usize {
    match scale {
        Scale::Full => full,
        Scale::Smoke => 4,
    }
}

fn group<'a>(s: &'a Summary, policy: &str, t: usize) -> &'a GroupSummary {
    s.group(policy, t)
        .unwrap_or_else(|| panic!("no summary for {policy} at T={t}"))
}

/// Two-bridge LinUCB: bounded minority regret for the population that
/// never sees the misleading majority, `√T` growth for the one that does.
pub fn criterion_1(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let mut checks = Vec::new();
    for variant in [ThetaVariant::Theta0, ThetaVariant::Theta1] {
        let mut cfg = config(Experiment::TwoBridgeLinUcb, scale, workers);
        cfg.replicates = replicates(scale, 500);
        cfg.two_bridge.theta = ThetaChoice::Fixed(variant);
        let (bounded, growing) = match variant {
            ThetaVariant::Theta0 => ("linucb_minority", "linucb_full"),
            ThetaVariant::Theta1 => ("linucb_full", "linucb_minority"),
        };
        let res = run_experiment(&cfg)?;
        let s = &res.summary;
        let (t1, t2) = (cfg.horizons[0], cfg.horizons[1]);
        let (a, b) = (group(s, bounded, t1).minority_mean, group(s, bounded, t2).minority_mean);
        let tag = format!("theta{}", variant.index());
        checks.push((
            b <= 1.3 * a,
            format!("{tag} {bounded} minority regret {a:.3e} at T={t1}, {b:.3e} at T={t2} (limit x1.3)"),
        ));
        let exp = s.exponent(growing, "regret_minority").and_then(|e| e.exponent);
        let ok = exp.is_some_and(|e| (0.35..=0.65).contains(&e));
        let shown = exp.map_or("none".to_string(), |e| format!("{e:.3}"));
        checks.push((ok, format!("{tag} {growing} minority exponent {shown} (want [0.35, 0.65])")));
    }
    Ok(verdict(1, &checks, started))
}

/// Every policy on a random two-bridge variant with Bernoulli rewards should
/// pay at least `0.01 √T`.
pub fn criterion_2(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let mut cfg = config(Experiment::TwoBridgeImpossibility, scale, workers);
    cfg.replicates = replicates(scale, 1000);
    let res = run_experiment(&cfg)?;
    let s = &res.summary;
    let mut checks = Vec::new();
    for &t in &cfg.horizons {
        let sqrt_t = (t as f64).sqrt();
        let floor = (-3.5f64).exp() / 12_800.0 * sqrt_t;
        for policy in ["linucb_full", "linucb_minority", "uniform_random", "batch_freq_greedy"] {
            let g = group(s, policy, t);
            checks.push((
                g.regret_mean >= 0.01 * sqrt_t,
                format!(
                    "{policy} T={t} regret {:.4} vs 0.01*sqrt(T)={:.2} (theoretical floor {floor:.2e}: {})",
                    g.regret_mean,
                    0.01 * sqrt_t,
                    if g.regret_mean >= floor { "met" } else { "missed" }
                ),
            ));
        }
    }
    Ok(verdict(2, &checks, started))
}

/// Simulated rewards are indistinguishable from direct draws.
pub fn criterion_3(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let mut cfg = config(Experiment::SimulationVerify, scale, workers);
    if scale == Scale::Full {
        cfg.simulation.targets = 20;
        cfg.simulation.samples = 100_000;
        cfg.simulation.alpha = 0.01;
    }
    let res = run_experiment(&cfg)?;
    let sim = res
        .summary
        .diagnostics
        .simulation
        .as_ref()
        .expect("simulation experiments carry a simulation summary");
    let radius_ok = sim.checks.iter().all(|c| c.x_norm * c.x_norm <= c.lambda_min * (1.0 + 1e-12));
    let checks = [
        (
            sim.rejections <= 1,
            format!("{} of {} KS tests reject at alpha={}", sim.rejections, sim.checks.len(), sim.alpha),
        ),
        (sim.max_w_norm <= 1.0, format!("max |w| = {:.4}", sim.max_w_norm)),
        (
            sim.max_reconstruction_error <= 1e-8,
            format!("max relative reconstruction error {:.2e}", sim.max_reconstruction_error),
        ),
        (radius_ok, "every target within sqrt(lambda_min(Z_B))".to_string()),
    ];
    Ok(verdict(3, &checks, started))
}

/// `λ_min(Z_t) ≥ ρ² t / (32 ln T)` for the frequentist greedy policy.
pub fn criterion_4(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let mut cfg = config(Experiment::EigGrowth, scale, workers);
    cfg.replicates = replicates(scale, 200);
    let res = run_experiment(&cfg)?;
    let e = &res.summary.diagnostics.eig[0];
    let worst = e.replicates.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
    let checks = [
        (
            e.fraction_without_violation >= 0.95,
            format!(
                "{:.1}% of {} replicates never violate the bound from t={} (worst lambda/bound {worst:.2})",
                100.0 * e.fraction_without_violation,
                e.replicates.len(),
                e.from
            ),
        ),
        (e.all_slopes_positive, format!("slopes positive in every replicate: {}", e.all_slopes_positive)),
    ];
    Ok(verdict(4, &checks, started))
}

fn comparison_checks(s: &Summary, policies: &[&str]) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    for p in policies {
        match s.diagnostics.comparisons.iter().find(|c| c.policy == *p) {
            Some(c) => out.push((
                c.holds,
                format!(
                    "{} {} {:.2} <= {}*{:.3} ({} at T={}) + allowance {:.2} + 3*{:.2} = {:.2}",
                    c.policy,
                    c.metric,
                    c.lhs_mean,
                    c.factor,
                    c.comparator_mean,
                    c.comparator,
                    c.comparator_horizon,
                    c.allowance,
                    c.pooled_se,
                    c.bound
                ),
            )),
            None => out.push((false, format!("no comparison for {p}"))),
        }
    }
    out
}

/// Batched greedy policies against `Y` copies of LinUCB at `T / Y`.
pub fn criterion_5(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let mut cfg = config(Experiment::GreedyVsLinUcb, scale, workers);
    cfg.replicates = replicates(scale, 200);
    let res = run_experiment(&cfg)?;
    let checks = comparison_checks(&res.summary, &["batch_bayes_greedy", "batch_freq_greedy"]);
    Ok(verdict(5, &checks, started))
}

/// Regret exponents over three horizons stay at or below 0.55.
pub fn criterion_6(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let mut cfg = config(Experiment::ScalingFit, scale, workers);
    cfg.replicates = replicates(scale, 200);
    let res = run_experiment(&cfg)?;
    let mut checks = Vec::new();
    for p in ["linucb", "batch_bayes_greedy", "batch_freq_greedy"] {
        let fit = res.summary.exponent(p, "regret");
        let e = fit.and_then(|f| f.exponent);
        let ci = fit
            .and_then(|f| f.ci_low.zip(f.ci_high))
            .map_or(String::new(), |(lo, hi)| format!(" CI [{lo:.3}, {hi:.3}]"));
        checks.push((
            e.is_some_and(|e| e <= 0.55),
            format!("{p} exponent {}{ci}", e.map_or("none".to_string(), |e| format!("{e:.3}"))),
        ));
    }
    Ok(verdict(6, &checks, started))
}

/// Minority regret of the frequentist greedy policy on the full population
/// against the better LinUCB baseline.
pub fn criterion_7(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let mut cfg = config(Experiment::ExternalityVanishing, scale, workers);
    cfg.replicates = replicates(scale, 200);
    let res = run_experiment(&cfg)?;
    let checks = comparison_checks(&res.summary, &["batch_freq_greedy"]);
    Ok(verdict(7, &checks, started))
}

/// `t₀‖θ_bay − θ_freq‖` does not grow by more than 4x from t=1000 to t=8000.
pub fn criterion_8(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let mut cfg = config(Experiment::EigGrowth, scale, workers);
    cfg.replicates = replicates(scale, 100);
    let res = run_experiment(&cfg)?;
    let gaps = &res.summary.diagnostics.estimate_gaps;
    let at = |c: usize| gaps.iter().find(|g| g.t == c).map(|g| g.median);
    let (early, late) = (cfg.diagnostics.checkpoints[0], cfg.diagnostics.checkpoints[1]);
    let checks = match (at(early), at(late)) {
        (Some(a), Some(b)) => vec![(
            b <= 4.0 * a,
            format!("median gap {a:.4} at t={early}, {b:.4} at t={late} (ratio {:.3}, limit 4)", b / a),
        )],
        _ => vec![(false, "estimate gaps missing at a checkpoint".to_string())],
    };
    Ok(verdict(8, &checks, started))
}

/// Operation examples plus byte-identical output across worker counts
/// and repeated runs.
pub fn criterion_9(scale: Scale, workers: usize) -> Result<Verdict> {
    let started = Instant::now();
    let failures = examples::failures();
    let mut checks = vec![(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} operation examples hold", examples::COUNT)
        } else {
            format!("examples failed: {}", failures.join(", "))
        },
    )];
    let mut mismatched = Vec::new();
    for e in Experiment::ALL {
        let mut cfg = config(e, Scale::Smoke, 1);
        if scale == Scale::Full {
            cfg.replicates = 8;
        }
        let serial = run_experiment(&cfg)?;
        cfg.workers = workers.max(2);
        let parallel = run_experiment(&cfg)?;
        let again = run_experiment(&cfg)?;
        let same = serial.csv() == parallel.csv()
            && parallel.csv() == again.csv()
            && serial.summary.to_json() == again.summary.to_json();
        if !same {
            mismatched.push(e.name());
        }
    }
    checks.push((
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!("serial, parallel and repeated runs byte-identical for all {} experiments", Experiment::ALL.len())
        } else {
            format!("output differs for {}", mismatched.join(", "))
        },
    ));
    Ok(verdict(9, &checks, started))
}

type Check = fn(Scale, usize) -> Result<Verdict>;

pub const CRITERIA: [Check; 9] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
];
