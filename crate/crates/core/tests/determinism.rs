use linbandit::harness::{parse_config, run_experiment, Experiment, ExperimentConfig, ThetaChoice};

fn small(e: Experiment) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(e);
    cfg.replicates = 6;
    cfg.master_seed = 2024;
    cfg.horizons = match e {
        Experiment::ScalingFit => vec![800, 1600, 3200],
        Experiment::TwoBridgeLinUcb => vec![1000, 2000, 4000],
        _ => vec![2000],
    };
    cfg.policy.batch_size = 20;
    cfg.diagnostics.eig_from = 200;
    cfg.diagnostics.checkpoints = vec![100, 400];
    cfg.simulation.targets = 3;
    cfg.simulation.samples = 2000;
    cfg
}

#[test]
fn serial_and_parallel_runs_emit_identical_bytes() {
    for e in Experiment::ALL {
        let mut cfg = small(e);
        cfg.workers = 1;
        let serial = run_experiment(&cfg).unwrap();
        cfg.workers = 4;
        let parallel = run_experiment(&cfg).unwrap();
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(serial.csv(), parallel.csv(), "{e:?}");
        assert_eq!(parallel.csv(), again.csv(), "{e:?}");
        assert_eq!(serial.summary.to_json(), parallel.summary.to_json(), "{e:?}");
    }
}

#[test]
fn master_seed_changes_the_output() {
    let cfg = small(Experiment::ScalingFit);
    let mut other = cfg.clone();
    other.master_seed += 1;
    assert_ne!(run_experiment(&cfg).unwrap().csv(), run_experiment(&other).unwrap().csv());
}

#[test]
fn replicates_are_prefix_stable() {
    // Adding replicates must not disturb the ones already computed.
    let mut cfg = small(Experiment::GreedyVsLinUcb);
    let few = run_experiment(&cfg).unwrap();
    cfg.replicates = 9;
    let more = run_experiment(&cfg).unwrap();
    for row in &few.rows {
        assert!(more.rows.contains(row), "{row:?}");
    }
}

#[test]
fn config_text_round_trip_preserves_results() {
    let mut cfg = small(Experiment::TwoBridgeImpossibility);
    cfg.two_bridge.theta = ThetaChoice::Random;
    let reparsed = parse_config(&cfg.to_config_text()).unwrap();
    assert_eq!(run_experiment(&cfg).unwrap().csv(), run_experiment(&reparsed).unwrap().csv());
}

#[test]
fn random_theta_draws_are_recorded() {
    let cfg = small(Experiment::TwoBridgeImpossibility);
    let res = run_experiment(&cfg).unwrap();
    let ids: std::collections::BTreeSet<u64> = res.rows.iter().map(|r| r.theta_draw_id).collect();
    assert_eq!(ids, [0, 1].into_iter().collect());
    // Every policy sees the same draw within a replicate.
    for r in &res.rows {
        let first = res.rows.iter().find(|o| o.replicate == r.replicate && o.horizon == r.horizon).unwrap();
        assert_eq!(first.theta_draw_id, r.theta_draw_id);
    }
}
