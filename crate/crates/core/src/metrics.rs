//! Regret accounting (total, group-restricted, prediction), gap
//! diagnostics, Bayesian-regret aggregation and log-log scaling fits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{linear_fit, mean, quantile, variance};
use crate::types::{ContextRound, Group};

/// Expected reward of the best available action minus that of `chosen`.
pub fn instantaneous_regret(theta: &[f64], round: &ContextRound, chosen: usize) -> Result<f64> {
    let picked = round.context(chosen).ok_or(Error::UnavailableAction(chosen))?;
    if picked.dim() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            got: picked.dim(),
        });
    }
    let best = round
        .available()
        .map(|(_, x)| x.dot(theta))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((best - picked.dot(theta)).max(0.0))
}

/// Best minus second-best expected reward among available actions; `+∞`
/// with fewer than two available actions.
pub fn gap(theta: &[f64], round: &ContextRound) -> f64 {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for (_, x) in round.available() {
        let v = x.dot(theta);
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    if second == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        first - second
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub t: usize,
    pub regret: f64,
    pub prediction_regret: Option<f64>,
    pub group: Group,
    /// Membership in a custom restriction set (e.g. i.i.d. coin flips).
    pub in_custom: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Restriction {
    All,
    MinorityOnly,
    MajorityOnly,
    CustomSet,
}

impl Restriction {
    fn admits(self, r: &RegretRecord) -> bool {
        match self {
            Restriction::All => true,
            Restriction::MinorityOnly => r.group == Group::Minority,
            Restriction::MajorityOnly => r.group == Group::Majority,
            Restriction::CustomSet => r.in_custom,
        }
    }
}

/// Per-round regret records for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    records: Vec<RegretRecord>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            records: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, record: RegretRecord) {
        debug_assert!(record.regret >= 0.0);
        self.records.push(record);
    }

    pub fn records(&self) -> &[RegretRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn cumulative_regret(ledger: &RegretLedger, restriction: Restriction) -> f64 {
    ledger
        .records
        .iter()
        .filter(|r| restriction.admits(r))
        .fold(0.0, |acc, r| acc + r.regret)
}

pub fn prediction_regret(ledger: &RegretLedger, restriction: Restriction) -> Result<f64> {
    ledger
        .records
        .iter()
        .filter(|r| restriction.admits(r))
        .try_fold(0.0, |acc, r| Ok(acc + r.prediction_regret.ok_or(Error::MissingPredictions)?))
}

/// Sample mean and standard error of per-replicate regrets.
pub fn bayesian_regret(regrets: &[f64]) -> Result<(f64, f64)> {
    if regrets.len() < 2 {
        return Err(Error::EmptyInput("need at least two replicate regrets"));
    }
    let se = (variance(regrets) / regrets.len() as f64).sqrt();
    Ok((mean(regrets), se))
}

/// Slope and intercept of `ln(regret)` against `ln(T)`.
pub fn scaling_exponent(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::EmptyInput("need at least three (T, regret) points"));
    }
    if let Some(&(_, bad)) = points.iter().find(|(_, r)| !(*r > 0.0)) {
        return Err(Error::NonPositive(bad));
    }
    let mut ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| w[0] == w[1]) || ts[0] <= 0.0 {
        return Err(Error::EmptyInput("horizons must be distinct and positive"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Ok(linear_fit(&xs, &ys))
}

/// Percentile bootstrap interval for the scaling exponent. `per_horizon[i]`
/// holds replicate regrets at `horizons[i]`; replicates are resampled with
/// replacement independently per horizon.
pub fn bootstrap_exponent<R: Rng + ?Sized>(
    horizons: &[f64],
    per_horizon: &[Vec<f64>],
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut fits = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let pts: Vec<(f64, f64)> = horizons
            .iter()
            .zip(per_horizon)
            .map(|(&t, reps)| {
                let n = reps.len();
                let m = (0..n).map(|_| reps[rng.random_range(0..n)]).sum::<f64>() / n as f64;
                (t, m)
            })
            .collect();
        if let Ok((slope, _)) = scaling_exponent(&pts) {
            fits.push(slope);
        }
    }
    if fits.is_empty() {
        return Err(Error::EmptyInput("no valid bootstrap fits"));
    }
    let tail = (1.0 - level) / 2.0;
    Ok((quantile(&fits, tail), quantile(&fits, 1.0 - tail)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ContextVector, RoundKind, BOTTOM, TOP};
    use approx::assert_relative_eq;

    fn b_round() -> ContextRound {
        let cv = |v: &[f64]| Some(ContextVector::new(v.to_vec()).unwrap());
        ContextRound::new(vec![cv(&TOP), cv(&BOTTOM)], Group::Minority, Some(RoundKind::B), 1).unwrap()
    }

    fn rec(t: usize, regret: f64, group: Group) -> RegretRecord {
        RegretRecord {
            t,
            regret,
            prediction_regret: Some(regret),
            group,
            in_custom: t.is_multiple_of(2),
        }
    }

    #[test]
    fn regret_of_best_action_is_zero() {
        assert_eq!(instantaneous_regret(&[0.5, 0.4], &b_round(), 0).unwrap(), 0.0);
    }

    #[test]
    fn wrong_bridge_costs_epsilon() {
        let eps = 0.1;
        let r = instantaneous_regret(&[0.5, 0.5 - eps], &b_round(), 1).unwrap();
        assert_relative_eq!(r, eps, epsilon = 1e-15);
    }

    #[test]
    fn unavailable_choice_is_an_error() {
        let r = ContextRound::new(
            vec![None, Some(ContextVector::new(vec![1.0, 0.0]).unwrap())],
            Group::Majority,
            None,
            1,
        )
        .unwrap();
        assert!(matches!(instantaneous_regret(&[1.0, 0.0], &r, 0), Err(Error::UnavailableAction(0))));
    }

    #[test]
    fn cumulative_restrictions_partition() {
        let mut l = RegretLedger::new();
        assert_eq!(cumulative_regret(&l, Restriction::All), 0.0);
        for t in 1..=5 {
            l.push(rec(t, 0.1, Group::Minority));
        }
        for t in 6..=9 {
            l.push(rec(t, 0.25, Group::Majority));
        }
        assert_relative_eq!(cumulative_regret(&l, Restriction::MinorityOnly), 0.5, epsilon = 1e-12);
        let all = cumulative_regret(&l, Restriction::All);
        let split = cumulative_regret(&l, Restriction::MinorityOnly) + cumulative_regret(&l, Restriction::MajorityOnly);
        assert_relative_eq!(all, split, epsilon = 1e-12);
        assert!(cumulative_regret(&l, Restriction::CustomSet) <= all);
        assert_relative_eq!(prediction_regret(&l, Restriction::All).unwrap(), all);
    }

    #[test]
    fn prediction_regret_needs_predictions() {
        let mut l = RegretLedger::new();
        l.push(RegretRecord {
            prediction_regret: None,
            ..rec(1, 0.0, Group::Majority)
        });
        assert!(matches!(prediction_regret(&l, Restriction::All), Err(Error::MissingPredictions)));
    }

    #[test]
    fn gap_examples() {
        assert_relative_eq!(gap(&[0.5, 0.4], &b_round()), 0.1, epsilon = 1e-15);
        let cv = |v: &[f64]| Some(ContextVector::new(v.to_vec()).unwrap());
        let same = ContextRound::new(vec![cv(&[0.3, 0.3]), cv(&[0.3, 0.3])], Group::Majority, None, 1).unwrap();
        assert_eq!(gap(&[1.0, 2.0], &same), 0.0);
        let one = ContextRound::new(vec![cv(&[0.3, 0.3]), None], Group::Majority, None, 1).unwrap();
        assert_eq!(gap(&[1.0, 2.0], &one), f64::INFINITY);
    }

    #[test]
    fn bayesian_regret_examples() {
        assert_eq!(bayesian_regret(&[3.0, 3.0, 3.0]).unwrap(), (3.0, 0.0));
        let (m, se) = bayesian_regret(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(m, 1.0);
        assert_relative_eq!(se, 1.0, epsilon = 1e-15);
        assert!(bayesian_regret(&[]).is_err());
    }

    #[test]
    fn scaling_exponent_examples() {
        let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|&t: &f64| (t, 3.0 * t.sqrt())).collect();
        let (e, c) = scaling_exponent(&pts).unwrap();
        assert_relative_eq!(e, 0.5, epsilon = 1e-9);
        assert_relative_eq!(c, 3f64.ln(), epsilon = 1e-9);
        let flat: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|&t| (t, 7.0)).collect();
        assert_relative_eq!(scaling_exponent(&flat).unwrap().0, 0.0, epsilon = 1e-12);
        assert!(matches!(scaling_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(Error::NonPositive(_))));
        assert!(scaling_exponent(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(scaling_exponent(&[(1.0, 1.0), (1.0, 2.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn scaling_exponent_with_log_factor() {
        // slope of ln(T^{1/3} ln T) over three decades, computed independently:
        // 1/3 + (ln ln 1e5 - ln ln 1e3) / (ln 1e5 - ln 1e3) for the end points;
        // the three-point OLS slope of the concave log-log curve is the same
        // value because the points are equally spaced in ln T
        let pts: Vec<(f64, f64)> = [1e3, 1e4, 1e5].iter().map(|&t: &f64| (t, t.cbrt() * t.ln())).collect();
        let (e, _) = scaling_exponent(&pts).unwrap();
        let expect = 1.0 / 3.0 + (1e5f64.ln().ln() - 1e3f64.ln().ln()) / (1e5f64.ln() - 1e3f64.ln());
        assert_relative_eq!(e, expect, epsilon = 1e-12);
        assert!((0.33..=0.45).contains(&e), "{e}");
    }
}
