use proptest::prelude::*;

use linbandit::estimators::SufficientStats;
use linbandit::harness::{emit_csv, parse_csv, ResultRow};
use linbandit::metrics::{cumulative_regret, instantaneous_regret, RegretLedger, RegretRecord, Restriction};
use linbandit::policies::{greedy_select, interval_width, suggested_batch_size_with_radius, LinUcbParams};
use linbandit::types::last_batch_end;
use linbandit::{ContextRound, ContextVector, Group, History};

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 2)
}

fn round_strategy() -> impl Strategy<Value = ContextRound> {
    prop::collection::vec(prop::option::weighted(0.8, vec2()), 1..6)
        .prop_filter("needs an available action", |v| v.iter().any(Option::is_some))
        .prop_map(|v| {
            let ctxs = v.into_iter().map(|c| c.map(|x| ContextVector::new(x).unwrap())).collect();
            ContextRound::new(ctxs, Group::Majority, None, 1).unwrap()
        })
}

proptest! {
    #[test]
    fn batch_boundary_is_the_previous_multiple(t in 1usize..100_000, y in 1usize..500) {
        let b = last_batch_end(t, y);
        prop_assert_eq!(b % y, 0);
        prop_assert!(b < t);
        prop_assert!(t - b <= y);
    }

    #[test]
    fn batches_concatenate_to_history(n in 0usize..60, y in 1usize..9) {
        let mut h = History::new(y);
        for i in 0..n {
            h.push(ContextVector::new(vec![i as f64, 1.0]).unwrap(), i as f64);
        }
        let mut joined = Vec::new();
        for b in 1..=h.num_batches() {
            let s = h.batch_slice(b).unwrap();
            prop_assert!(!s.is_empty() && s.len() <= y);
            joined.extend_from_slice(s);
        }
        prop_assert_eq!(joined.as_slice(), h.entries());
        prop_assert!(h.batch_slice(h.num_batches() + 1).is_err());
    }

    #[test]
    fn stats_do_not_depend_on_update_order(rows in prop::collection::vec((vec2(), -3.0f64..3.0), 1..40)) {
        let mut fwd = SufficientStats::new(2);
        let mut rev = SufficientStats::new(2);
        for (x, r) in &rows {
            fwd.update(x, *r).unwrap();
        }
        for (x, r) in rows.iter().rev() {
            rev.update(x, *r).unwrap();
        }
        let batch = SufficientStats::from_entries(2, &rows).unwrap();
        prop_assert_eq!(fwd.n(), rows.len());
        let scale = 1.0 + fwd.z().norm();
        prop_assert!((fwd.z() - rev.z()).norm() <= 1e-12 * scale);
        prop_assert!((fwd.z() - batch.z()).norm() <= 1e-12 * scale);
        prop_assert!((fwd.xr() - batch.xr()).norm() <= 1e-12 * (1.0 + fwd.xr().norm()));
    }

    #[test]
    fn regret_is_nonnegative_and_zero_at_the_greedy_choice(round in round_strategy(), theta in vec2()) {
        for (a, _) in round.available() {
            prop_assert!(instantaneous_regret(&theta, &round, a).unwrap() >= 0.0);
        }
        let best = greedy_select(&round, &theta);
        prop_assert_eq!(instantaneous_regret(&theta, &round, best).unwrap(), 0.0);
    }

    #[test]
    fn greedy_ignores_positive_scaling(round in round_strategy(), est in vec2(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = est.iter().map(|v| v * c).collect();
        let a = greedy_select(&round, &est);
        let b = greedy_select(&round, &scaled);
        if a != b {
            // Only a floating-point tie may flip the choice.
            let score = |i: usize| round.context(i).unwrap().dot(&est);
            prop_assert!((score(a) - score(b)).abs() <= 1e-9 * (1.0 + score(a).abs()));
        }
    }

    #[test]
    fn restrictions_partition_the_ledger(
        recs in prop::collection::vec((0.0f64..2.0, any::<bool>(), any::<bool>()), 0..80)
    ) {
        let mut ledger = RegretLedger::new();
        for (i, (r, minority, custom)) in recs.iter().enumerate() {
            ledger.push(RegretRecord {
                t: i + 1,
                regret: *r,
                prediction_regret: None,
                group: if *minority { Group::Minority } else { Group::Majority },
                in_custom: *custom,
            });
        }
        let all = cumulative_regret(&ledger, Restriction::All);
        let split = cumulative_regret(&ledger, Restriction::MinorityOnly) + cumulative_regret(&ledger, Restriction::MajorityOnly);
        prop_assert!((all - split).abs() <= 1e-9 * (1.0 + all));
        prop_assert!(cumulative_regret(&ledger, Restriction::CustomSet) <= all + 1e-9);
        prop_assert!(all >= 0.0);
    }

    #[test]
    fn width_grows_with_observations(t in 0usize..100_000, horizon in 2usize..1_000_000, d in 1usize..10) {
        let p = LinUcbParams { l: 1.3, s: 2.0, c0: 1.0, ridge: 1.0, horizon, min_width: 0.0 };
        prop_assert!(interval_width(t + 1, &p, d) >= interval_width(t, &p, d));
        prop_assert!(interval_width(t, &p, d) >= p.s);
    }

    #[test]
    fn batch_size_monotonicity(rho in 0.01f64..0.7, factor in 1.01f64..3.0, delta in 1e-6f64..0.5) {
        let y = |rho: f64, delta: f64| suggested_batch_size_with_radius(1.5, rho, 2, 10_000, delta);
        prop_assert!(y(rho * factor, delta) <= y(rho, delta));
        prop_assert!(y(rho, delta / factor) >= y(rho, delta));
    }

    #[test]
    fn csv_round_trips_bit_for_bit(
        vals in prop::collection::vec((any::<f64>(), any::<f64>(), any::<f64>(), any::<u64>()), 0..20)
    ) {
        let rows: Vec<ResultRow> = vals
            .iter()
            .enumerate()
            .map(|(i, (a, b, c, seed))| ResultRow {
                experiment: "ScalingFit".into(),
                policy: "linucb".into(),
                horizon: 100 * (i + 1),
                replicate: i,
                seed: *seed,
                regret_total: *a,
                regret_minority: *b,
                regret_prediction: *c,
                theta_draw_id: i as u64,
            })
            .collect();
        let back = parse_csv(&emit_csv(&rows)).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (x, y) in back.iter().zip(&rows) {
            for (u, v) in [(x.regret_total, y.regret_total), (x.regret_minority, y.regret_minority), (x.regret_prediction, y.regret_prediction)] {
                if v.is_nan() {
                    prop_assert!(u.is_nan());
                } else {
                    prop_assert_eq!(u.to_bits(), v.to_bits());
                }
            }
            prop_assert_eq!(x.seed, y.seed);
        }
    }
}
