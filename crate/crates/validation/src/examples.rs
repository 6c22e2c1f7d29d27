//! Worked input/output examples for the core operations, re-checked as part
//! of the determinism criterion.

use nalgebra::{DMatrix, DVector};

use linbandit::estimators::{min_eigenvalue, ols_estimate, GaussianPrior, SufficientStats};
use linbandit::harness::{emit_csv, parse_config, HEADER};
use linbandit::metrics::{bayesian_regret, instantaneous_regret, scaling_exponent};
use linbandit::policies::{interval_width, suggested_batch_size_with_radius, LinUcbParams};
use linbandit::simulation::{batch_matrix, simulation_weights};
use linbandit::types::last_batch_end;
use linbandit::{ContextRound, ContextVector, Group, History, RoundKind};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn stats(rows: &[([f64; 2], f64)]) -> SufficientStats {
    SufficientStats::from_entries(2, rows).expect("2-d rows")
}

fn batch_boundaries() -> bool {
    last_batch_end(150, 100) == 100 && last_batch_end(100, 100) == 0 && last_batch_end(201, 100) == 200
}

fn batch_slices() -> bool {
    let mut h = History::new(2);
    for i in 1..=5 {
        h.push(ContextVector::new(vec![i as f64]).unwrap(), 0.0);
    }
    let firsts = |b: usize| -> Vec<f64> {
        h.batch_slice(b)
            .map(|s| s.iter().map(|e| e.0.as_slice()[0]).collect())
            .unwrap_or_default()
    };
    firsts(2) == [3.0, 4.0] && firsts(3) == [5.0] && h.batch_slice(4).is_err()
}

fn width() -> bool {
    let p = LinUcbParams {
        l: 1.0,
        s: 1.0,
        c0: 1.0,
        ridge: 1.0,
        horizon: 10,
        min_width: 0.0,
    };
    close(interval_width(9, &p, 4), 1.0 + (4.0 * 100f64.ln()).sqrt(), 1e-12) && close(interval_width(9, &p, 4), 5.2919, 1e-4)
}

fn eigenvalues() -> bool {
    let m = |v: [f64; 4]| DMatrix::from_row_slice(2, 2, &v);
    let e = |v| min_eigenvalue(&m(v)).unwrap_or(f64::NAN);
    close(e([2.0, 0.0, 0.0, 5.0]), 2.0, 1e-12) && close(e([2.0, 1.0, 1.0, 2.0]), 1.0, 1e-12) && close(e([1.0, 0.0, 0.0, 0.0]), 0.0, 1e-12)
}

fn least_squares() -> bool {
    let a = ols_estimate(&stats(&[([1.0, 0.0], 0.3), ([0.0, 1.0], 0.7)]));
    let b = ols_estimate(&stats(&[([1.0, 0.0], 1.0), ([1.0, 0.0], 0.0), ([0.0, 1.0], 1.0)]));
    let c = ols_estimate(&stats(&[([1.0, 0.0], 1.0)]));
    let eq = |v: &DVector<f64>, w: [f64; 2]| close(v[0], w[0], 1e-12) && close(v[1], w[1], 1e-12);
    eq(&a, [0.3, 0.7]) && eq(&b, [0.5, 1.0]) && eq(&c, [1.0, 0.0])
}

fn posterior() -> bool {
    let prior = GaussianPrior::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
    let m = prior.posterior_mean(&stats(&[([1.0, 0.0], 1.0)])).unwrap();
    close(m[0], 0.5, 1e-12) && close(m[1], 0.0, 1e-12)
}

fn simulation() -> bool {
    let b = batch_matrix(&[[2.0, 0.0], [0.0, 2.0]]).unwrap();
    let w = simulation_weights(&b, &[1.0, 0.0]).unwrap();
    close(w.weights()[0], 0.5, 1e-12) && close(w.weights()[1], 0.0, 1e-12) && close(w.residual_var(), 0.75, 1e-12)
}

fn batch_size() -> bool {
    let y = suggested_batch_size_with_radius(1.5, 0.1, 2, 1000, 0.01);
    (y as f64 / 217_574.0 - 1.0).abs() < 1e-3
}

fn regret() -> bool {
    let eps = 0.1;
    let theta = [0.5, 0.5 - eps];
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
    instantaneous_regret(&theta, &round, 0).is_ok_and(|r| r == 0.0)
        && instantaneous_regret(&theta, &round, 1).is_ok_and(|r| close(r, eps, 1e-12))
}

fn aggregation() -> bool {
    let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|&t: &f64| (t, 3.0 * t.sqrt())).collect();
    let flat: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|&t| (t, 4.0)).collect();
    scaling_exponent(&pts).is_ok_and(|(e, _)| close(e, 0.5, 1e-9))
        && scaling_exponent(&flat).is_ok_and(|(e, _)| close(e, 0.0, 1e-12))
        && bayesian_regret(&[0.0, 2.0]) == Ok((1.0, 1.0))
        && bayesian_regret(&[3.0; 5]) == Ok((3.0, 0.0))
}

fn tables_and_config() -> bool {
    let header_only = emit_csv(&[]) == format!("{HEADER}\n");
    let defaults = parse_config("experiment = GreedyVsLinUCB\n")
        .is_ok_and(|c| c.replicates == 200 && c.policy.c0 == 1.0 && c.policy.ridge == 1.0);
    let bad = parse_config("experiment = GreedyVsLinUCB\n[instance]\nrho = -0.1\n")
        .is_err_and(|e| e.key().is_some_and(|k| k.contains("rho")));
    header_only && defaults && bad
}

type Example = (&'static str, fn() -> bool);

const EXAMPLES: [Example; 11] = [
    ("batch boundaries", batch_boundaries),
    ("batch slices", batch_slices),
    ("interval width", width),
    ("minimum eigenvalue", eigenvalues),
    ("least squares", least_squares),
    ("posterior mean", posterior),
    ("simulation weights", simulation),
    ("batch size", batch_size),
    ("regret", regret),
    ("aggregation", aggregation),
    ("tables and config", tables_and_config),
];

pub const COUNT: usize = EXAMPLES.len();

/// Names of the examples that do not hold.
pub fn failures() -> Vec<String> {
    EXAMPLES
        .iter()
        .filter(|(_, f)| !f())
        .map(|(name, _)| name.to_string())
        .collect()
}
