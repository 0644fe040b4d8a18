use ftform::graph::{build_graph, certificate, unreachable_followers};
use ftform::numerics::{nussbaum, sig};
use ftform::scenario::{compute_metrics, export_csv, paper_5b, read_csv, run, SimTrace, Tolerances};
use proptest::prelude::*;

fn half_second() -> &'static SimTrace {
    static TRACE: std::sync::OnceLock<SimTrace> = std::sync::OnceLock::new();
    TRACE.get_or_init(|| run(&paper_5b().with_t_end(0.5)).unwrap().trace)
}

#[test]
fn csv_round_trip_is_exact() {
    let res = run(&paper_5b().with_t_end(0.02)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    export_csv(&res.trace, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.columns, res.trace.columns);
    assert_eq!(back.times, res.trace.times);
    for (a, b) in back.rows.iter().zip(&res.trace.rows) {
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn sweep_matches_single_runs() {
    let a = paper_5b().with_t_end(0.01);
    let b = paper_5b().with_t_end(0.02);
    let swept = ftform::scenario::sweep(&[a.clone(), b.clone()]);
    assert_eq!(swept[0].as_ref().unwrap().trace, run(&a).unwrap().trace);
    assert_eq!(swept[1].as_ref().unwrap().trace, run(&b).unwrap().trace);
}

#[test]
fn task_trace_carries_expected_channels() {
    let res = run(&paper_5b().with_t_end(0.01)).unwrap();
    for name in ["agent0.xd[0]", "agent3.tau[1]", "agent6.kappa", "agent1.kinematic_residual[0]", "agent2.a_hat[3]"] {
        assert!(res.trace.column_index(name).is_some(), "{name}");
    }
    assert_eq!(res.trace.agents(), (0..=6).collect::<Vec<_>>());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tighter_tolerance_never_settles_earlier(tol in 1e-3f64..1.0, factor in 0.05f64..1.0) {
        let loose = compute_metrics(half_second(), &Tolerances::uniform(tol));
        let tight = compute_metrics(half_second(), &Tolerances::uniform(tol * factor));
        for (l, t) in loose.agents.iter().zip(&tight.agents) {
            for (le, te) in l.tracking.iter().chain(&l.estimator).zip(t.tracking.iter().chain(&t.estimator)) {
                if let Some(ts) = te.settling {
                    prop_assert!(le.settling.is_some_and(|ls| ls <= ts));
                }
            }
        }
    }

    #[test]
    fn short_runs_are_deterministic(t_end in 0.001f64..0.01) {
        let sc = paper_5b().with_t_end(t_end);
        prop_assert_eq!(run(&sc).unwrap().trace, run(&sc).unwrap().trace);
    }

    #[test]
    fn rooted_chains_certify(weights in proptest::collection::vec(0.1f64..3.0, 1..8)) {
        let n = weights.len();
        let edges: Vec<_> = (1..n).map(|i| (i, i + 1, weights[i])).collect();
        let g = build_graph(&edges, &[(1, weights[0])], n).unwrap();
        let c = certificate(&g).unwrap();
        prop_assert!(c.pi.iter().all(|&p| p > 0.0));
        prop_assert!(c.lambda_min_xi > 0.0);
    }

    #[test]
    fn cutting_the_root_link_is_detected(n in 2usize..8, cut in 1usize..8) {
        let cut = cut.min(n);
        // chain 1 -> 2 -> ... -> n with the leader at 1; drop the edge into `cut`
        let edges: Vec<_> = (1..n).filter(|&i| i + 1 != cut).map(|i| (i, i + 1, 1.0)).collect();
        let leader: Vec<_> = if cut == 1 { vec![] } else { vec![(1, 1.0)] };
        let g = build_graph(&edges, &leader, n).unwrap();
        let expected: Vec<usize> = (cut..=n).collect();
        prop_assert_eq!(unreachable_followers(&g), expected);
        prop_assert!(certificate(&g).is_err());
    }

    #[test]
    fn sig_is_odd_and_keeps_sign(x in -1e3f64..1e3, theta in 0.05f64..2.0) {
        prop_assert_eq!(sig(-x, theta), -sig(x, theta));
        prop_assert!(sig(x, theta) * x >= 0.0);
        prop_assert!((sig(x, theta).abs() - x.abs().powf(theta)).abs() <= 1e-12 * x.abs().powf(theta).max(1.0));
    }

    #[test]
    fn nussbaum_is_even(k in -5.0f64..5.0) {
        prop_assert_eq!(nussbaum(k), nussbaum(-k));
    }
}
