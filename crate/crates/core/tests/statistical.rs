//! Monte Carlo checks of the samplers and estimators.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use linbandit::environments::{
    draw_theta, realize_reward, sample_perturbed_round, sample_two_bridge_round, LatentModel, MeanTuple, NoiseModel,
    PerturbedConfig, ThetaVariant, TwoBridgeConfig,
};
use linbandit::estimators::{estimate_error, ols_estimate, GaussianPrior, SufficientStats};
use linbandit::harness::{run_single, Instance, Population, RunSpec, Tracking};
use linbandit::metrics::{bayesian_regret, gap, instantaneous_regret};
use linbandit::policies::{linucb_select_with_width, PolicyKind};
use linbandit::rng::{stream, Purpose};
use linbandit::simulation::check_simulation;
use linbandit::stats::{mean, median, variance};
use linbandit::{ContextRound, ContextVector, Group, RoundKind};

fn model(mean: Vec<f64>, var: f64, rho: f64) -> LatentModel {
    let d = mean.len();
    LatentModel::new(mean, DMatrix::identity(d, d) * var, rho, NoiseModel::GaussianUnit).unwrap()
}

fn single_tuple(means: Vec<Vec<f64>>, rho: f64) -> PerturbedConfig {
    let d = means[0].len();
    let catalog = vec![MeanTuple {
        means: means.into_iter().map(Some).collect(),
        weight: 1.0,
        group: None,
    }];
    PerturbedConfig::new(catalog, model(vec![0.0; d], 1.0, rho), None).unwrap()
}

fn random_tuples(k: usize, size: usize, rho: f64, seed: u64) -> PerturbedConfig {
    let mut rng = stream(seed, Purpose::Instance);
    let catalog = linbandit::environments::random_catalog(2, k, size, None, &mut rng);
    PerturbedConfig::new(catalog, model(vec![0.0, 0.0], 1.0, rho), None).unwrap()
}

#[test]
fn two_bridge_b_rounds_have_the_product_probability() {
    let cfg = TwoBridgeConfig::new(100, ThetaVariant::Theta0, NoiseModel::GaussianUnit);
    let mut rng = stream(11, Purpose::Contexts);
    let n = 1_000_000;
    let mut b = 0usize;
    for _ in 0..n {
        let round = sample_two_bridge_round(&cfg, &mut rng, 1);
        match round.kind() {
            Some(RoundKind::B) => b += 1,
            Some(RoundKind::C) => {
                let distinct: Vec<&[f64]> = round.available().map(|(_, x)| x.as_slice()).collect();
                assert!(distinct.iter().all(|x| *x == [0.0, 1.0]));
                assert_eq!(round.group(), Group::Minority);
            }
            _ => {}
        }
    }
    let p = 0.0025;
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    let freq = b as f64 / n as f64;
    assert!((freq - p).abs() <= 3.0 * sd, "freq {freq}");
}

#[test]
fn perturbation_variance_and_independence() {
    let rho = 0.3;
    let cfg = single_tuple(vec![vec![0.5, -0.2], vec![-0.1, 0.3]], rho);
    let (mut c, mut p) = (stream(5, Purpose::Contexts), stream(5, Purpose::Perturbations));
    let n = 100_000;
    let mut devs: [Vec<f64>; 4] = Default::default();
    for t in 1..=n {
        let round = sample_perturbed_round(&cfg, &mut c, &mut p, t);
        let x0 = round.context(0).unwrap().as_slice();
        let x1 = round.context(1).unwrap().as_slice();
        devs[0].push(x0[0] - 0.5);
        devs[1].push(x0[1] + 0.2);
        devs[2].push(x1[0] + 0.1);
        devs[3].push(x1[1] - 0.3);
    }
    for d in &devs {
        let v = variance(d);
        assert!((v / (rho * rho) - 1.0).abs() < 0.05, "variance {v}");
    }
    let se = 1.0 / (n as f64).sqrt();
    for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
        let cov: f64 = devs[i].iter().zip(&devs[j]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        let corr = cov / (variance(&devs[i]) * variance(&devs[j])).sqrt();
        assert!(corr.abs() <= 3.0 * se, "corr {corr}");
    }
}

#[test]
fn prior_draws_match_mean_and_covariance() {
    let n = 100_000;
    let kappa: f64 = 2.0;
    let m = model(vec![1.0, -2.0], kappa * kappa, 0.0);
    let mut rng = stream(3, Purpose::Theta);
    let draws: Vec<Vec<f64>> = (0..n).map(|_| draw_theta(&m, &mut rng)).collect();
    for (j, target) in [1.0, -2.0].iter().enumerate() {
        let col: Vec<f64> = draws.iter().map(|v| v[j]).collect();
        assert!((mean(&col) - target).abs() <= 3.0 * kappa / (n as f64).sqrt());
    }

    let m = model(vec![0.0, 0.0], 1.0, 0.0);
    let draws: Vec<Vec<f64>> = (0..n).map(|_| draw_theta(&m, &mut rng)).collect();
    for a in 0..2 {
        for b in 0..2 {
            let c: f64 = draws.iter().map(|v| v[a] * v[b]).sum::<f64>() / n as f64;
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 0.05, "cov[{a}][{b}] = {c}");
        }
    }
}

#[test]
fn reward_moments() {
    let n = 100_000;
    let theta = [0.7, -0.4];
    let x = [0.5, 1.5];
    let mut rng = stream(9, Purpose::Rewards);
    let r: Vec<f64> = (0..n)
        .map(|_| realize_reward(&theta, &x, NoiseModel::GaussianUnit, &mut rng).unwrap())
        .collect();
    assert!((mean(&r) - (-0.25)).abs() <= 3.0 / (n as f64).sqrt());
    assert!((variance(&r) - 1.0).abs() < 0.05);

    let theta = TwoBridgeConfig::new(10_000, ThetaVariant::Theta0, NoiseModel::Bernoulli).theta();
    let r: Vec<f64> = (0..n)
        .map(|_| realize_reward(&theta, &[1.0, 0.0], NoiseModel::Bernoulli, &mut rng).unwrap())
        .collect();
    let sd = (variance(&r) / n as f64).sqrt();
    assert!((mean(&r) - 0.5).abs() <= 3.0 * sd);
}

#[test]
fn incremental_covariance_matches_recomputation() {
    let mut rng = stream(21, Purpose::Auxiliary);
    let d = 4;
    let mut s = SufficientStats::new(d);
    let mut rows = Vec::new();
    for _ in 0..100 {
        let x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        s.update(&x, rng.random()).unwrap();
        rows.push(x);
    }
    let xm = DMatrix::from_fn(100, d, |i, j| rows[i][j]);
    let direct = xm.transpose() * &xm;
    let rel = (s.z() - &direct).norm() / direct.norm();
    assert!(rel < 1e-9, "relative error {rel}");
}

#[test]
fn least_squares_error_decays() {
    let cfg = random_tuples(5, 64, 0.3, 4);
    let theta = [0.8, -0.6];
    let mut at = (Vec::new(), Vec::new());
    for rep in 0..100u64 {
        let (mut c, mut p) = (stream(rep, Purpose::Contexts), stream(rep, Purpose::Perturbations));
        let (mut pick, mut rw) = (stream(rep, Purpose::Policy), stream(rep, Purpose::Rewards));
        let mut s = SufficientStats::new(2);
        for t in 1..=4000 {
            let round = sample_perturbed_round(&cfg, &mut c, &mut p, t);
            let a = pick.random_range(0..round.num_actions());
            let x = round.context(a).unwrap().as_slice();
            let r = realize_reward(&theta, x, NoiseModel::GaussianUnit, &mut rw).unwrap();
            s.update(x, r).unwrap();
            if t == 1000 {
                at.0.push(estimate_error(&theta, ols_estimate(&s).as_slice()).unwrap());
            }
        }
        at.1.push(estimate_error(&theta, ols_estimate(&s).as_slice()).unwrap());
    }
    let (early, late) = (median(&at.0), median(&at.1));
    assert!(late < 0.5 * early, "median error {early} at 1000, {late} at 4000");
}

fn basis_stats(n1: usize, n2: usize, xr: [f64; 2]) -> SufficientStats {
    let mut entries: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n1 {
        entries.push((vec![1.0, 0.0], if i == 0 { xr[0] } else { 0.0 }));
    }
    for i in 0..n2 {
        entries.push((vec![0.0, 1.0], if i == 0 { xr[1] } else { 0.0 }));
    }
    SufficientStats::from_entries(2, &entries).unwrap()
}

#[test]
fn linucb_matches_diagonal_closed_form_on_two_bridge() {
    let mut rng = stream(8, Purpose::Auxiliary);
    let round = ContextRound::new(
        vec![
            Some(ContextVector::new(vec![1.0, 0.0]).unwrap()),
            Some(ContextVector::new(vec![0.0, 1.0]).unwrap()),
        ],
        Group::Minority,
        Some(RoundKind::B),
        1,
    )
    .unwrap();
    for _ in 0..10_000 {
        let (n1, n2) = (rng.random_range(1..60usize), rng.random_range(1..60usize));
        let xr = [rng.random_range(-10.0..30.0), rng.random_range(-10.0..30.0)];
        let f = rng.random_range(0.0..5.0);
        let s = basis_stats(n1, n2, xr);
        let ucb = |i: usize, n: usize| xr[i] / n as f64 + f / (n as f64).sqrt();
        let (u0, u1) = (ucb(0, n1), ucb(1, n2));
        let chosen = linucb_select_with_width(&round, &s, 0.0, f);
        if (u0 - u1).abs() > 1e-9 {
            assert_eq!(chosen, usize::from(u1 > u0), "n=({n1},{n2}) xr={xr:?} f={f}");
        }
    }
}

#[test]
fn simulated_rewards_match_direct_draws() {
    let cfg = random_tuples(5, 64, 0.3, 12);
    let (mut c, mut p) = (stream(2, Purpose::Contexts), stream(2, Purpose::Perturbations));
    let rows: Vec<Vec<f64>> = (1..=200)
        .map(|t| sample_perturbed_round(&cfg, &mut c, &mut p, t).context(0).unwrap().as_slice().to_vec())
        .collect();
    let batch = linbandit::simulation::batch_matrix(&rows).unwrap();
    let lambda = linbandit::estimators::min_eigenvalue(&(batch.transpose() * &batch)).unwrap();
    let x = ContextVector::new(vec![0.6 * lambda.sqrt(), -0.7 * lambda.sqrt()]).unwrap();
    assert!(x.norm().powi(2) <= lambda);
    let theta = [0.9, 0.3];
    let n = 100_000;
    let check = check_simulation(
        &batch,
        &theta,
        &x,
        n,
        &mut stream(31, Purpose::Auxiliary),
        &mut stream(32, Purpose::Rewards),
    )
    .unwrap();
    assert!(check.p_value >= 0.01, "KS p = {}", check.p_value);
    assert!(check.w_norm <= 1.0);
    assert!((check.simulated_mean - check.true_mean).abs() <= 3.0 / (n as f64).sqrt());
}

#[test]
fn regret_and_gap_match_brute_force() {
    let cfg = random_tuples(5, 64, 0.3, 17);
    let (mut c, mut p) = (stream(6, Purpose::Contexts), stream(6, Purpose::Perturbations));
    let theta = [0.4, -1.1];
    for t in 1..=2000 {
        let round = sample_perturbed_round(&cfg, &mut c, &mut p, t);
        let values: Vec<f64> = round
            .available()
            .map(|(_, x)| x.as_slice()[0] * theta[0] + x.as_slice()[1] * theta[1])
            .collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (a, v) in values.iter().enumerate() {
            let r = instantaneous_regret(&theta, &round, a).unwrap();
            assert!((r - (best - v)).abs() < 1e-12);
        }
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert!((gap(&theta, &round) - (sorted[0] - sorted[1])).abs() < 1e-12);
    }
}

#[test]
fn small_gaps_are_rare() {
    let (k, rho) = (5usize, 0.3);
    let cfg = random_tuples(k, 64, rho, 23);
    let theta = [0.6, 0.8];
    let (mut c, mut p) = (stream(7, Purpose::Contexts), stream(7, Purpose::Perturbations));
    let n = 100_000;
    for gamma in [0.005, 0.02, 0.05] {
        let hits = (1..=n)
            .filter(|&t| gap(&theta, &sample_perturbed_round(&cfg, &mut c, &mut p, t)) <= gamma)
            .count();
        let freq = hits as f64 / n as f64;
        let sd = (freq * (1.0 - freq) / n as f64).sqrt();
        let bound = (k * k) as f64 / 2.0 * gamma / (rho * 1.0 * std::f64::consts::PI.sqrt());
        assert!(freq <= bound + 3.0 * sd, "gamma {gamma}: {freq} > {bound}");
    }
}

#[test]
fn bayes_greedy_prediction_regret_equals_action_regret() {
    let cfg = random_tuples(5, 64, 0.3, 29);
    let prior = GaussianPrior::new(nalgebra::DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
    let theta = draw_theta(cfg.model(), &mut stream(1, Purpose::Theta));
    let spec = RunSpec {
        instance: Instance::Perturbed(&cfg),
        population: Population::Full,
        policy: PolicyKind::BatchBayesGreedy { batch_size: 50 },
        theta: &theta,
        prior: Some(&prior),
        horizon: 3000,
        custom_fraction: 0.5,
        tracking: Tracking::default(),
    };
    let out = run_single(&spec, 99).unwrap();
    assert!(out.regret_total > 0.0);
    assert_eq!(out.regret_prediction, out.regret_total);
}

#[test]
fn bayesian_regret_central_limit() {
    let mut rng = stream(13, Purpose::Auxiliary);
    let xs: Vec<f64> = (0..10_000).map(|_| 5.0 + rng.sample::<f64, _>(StandardNormal)).collect();
    let (m, se) = bayesian_regret(&xs).unwrap();
    assert!((m - 5.0).abs() <= 0.03);
    assert!((se - 0.01).abs() < 0.001);
}
