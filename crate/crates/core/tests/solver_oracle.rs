//! The sweep solvers held against the independent algebraic routes: policy
//! enumeration with exact linear solves, and the linear evaluation system.

use atbat_mdp::fixtures::{random_episodic_model, random_policy};
use atbat_mdp::mdp::{
    exact_policy_values, policy_evaluation, policy_evaluation_generic, value_iteration,
    value_iteration_generic, SolverConfig,
};

#[test]
fn value_iteration_matches_policy_enumeration() {
    let cfg = SolverConfig::default();
    for seed in 0..60 {
        let model = random_episodic_model(6, 0.1, seed);
        let (_, values) = value_iteration(&model, &cfg).unwrap();
        assert!(values.converged, "seed {seed} did not converge");
        let enumerated = atbat_mdp::mdp::enumerate_policies_oracle(&model).unwrap();
        assert_eq!(enumerated.len(), 1 << 6);
        let best = enumerated
            .iter()
            .map(|(_, root)| *root)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (values.root() - best).abs() <= 1e-10,
            "seed {seed}: sweeps {} vs enumeration {best}",
            values.root()
        );
        // No enumerated policy beats the solved one.
        for (_, root) in &enumerated {
            assert!(values.root() >= root - 1e-10);
        }
    }
}

#[test]
fn policy_evaluation_matches_linear_solve() {
    let cfg = SolverConfig::default();
    for seed in 100..160 {
        let model = random_episodic_model(6, 0.1, seed);
        let policy = random_policy(&model, seed ^ 0xabcd);
        let swept = policy_evaluation(&model, &policy, &cfg).unwrap();
        assert!(swept.converged);

        let mdp = model.to_episodic();
        let index_policy: Vec<Option<usize>> = (0..mdp.n_states())
            .map(|i| {
                if i < 12 {
                    policy.action(i).map(|a| a.index())
                } else {
                    None
                }
            })
            .collect();
        let exact = exact_policy_values(&mdp, &index_policy, 1.0).unwrap();
        for (state, (a, b)) in swept.values.iter().zip(&exact).enumerate() {
            assert!(
                (a - b).abs() <= 1e-10,
                "seed {seed}, state {state}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn reward_scaling_scales_values_and_keeps_the_policy() {
    let cfg = SolverConfig::default();
    for seed in 200..220 {
        let model = random_episodic_model(5, 0.15, seed);
        let base = model.to_episodic();
        let (policy_base, values_base, _) = value_iteration_generic(&base, &cfg).unwrap();

        let factor = 3.75;
        let mut scaled = base.clone();
        for state in 0..12 {
            for action in 0..2 {
                if let Some(row) = base.row(state, action) {
                    let rewards: Vec<f64> = row.rewards.iter().map(|g| g * factor).collect();
                    scaled.set_row(state, action, row.probs.clone(), rewards);
                }
            }
        }
        let (policy_scaled, values_scaled, _) = value_iteration_generic(&scaled, &cfg).unwrap();
        assert_eq!(policy_base, policy_scaled, "seed {seed}: argmax changed");
        for (a, b) in values_base.values.iter().zip(&values_scaled.values) {
            assert!((a * factor - b).abs() <= 1e-9 * factor.max(1.0));
        }
    }
}

#[test]
fn delta_trace_descends_below_epsilon() {
    let cfg = SolverConfig::default();
    for seed in 300..330 {
        let model = random_episodic_model(6, 0.1, seed);
        let (_, values, deltas) = value_iteration_generic(&model.to_episodic(), &cfg).unwrap();
        assert!(values.converged);
        let last = *deltas.last().unwrap();
        assert!(last < cfg.epsilon);
        // Following the largest sweep change, the trace never rises again
        // until it reaches the float quantization floor a few ulps above
        // epsilon, where single-bit wobbles can appear.
        let floor = 1e3 * cfg.epsilon;
        let peak = deltas
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        for window in deltas[peak..].windows(2) {
            if window[0] > floor {
                assert!(
                    window[1] <= window[0],
                    "seed {seed}: delta rose from {} to {}",
                    window[0],
                    window[1]
                );
            }
        }
    }
}

#[test]
fn terminal_values_stay_zero_through_iteration() {
    let cfg = SolverConfig::default();
    let model = random_episodic_model(6, 0.1, 7777);
    let (_, values) = value_iteration(&model, &cfg).unwrap();
    for state in 12..18 {
        assert_eq!(values.values[state], 0.0);
    }
    let policy = random_policy(&model, 1);
    let evaluated = policy_evaluation(&model, &policy, &cfg).unwrap();
    for state in 12..18 {
        assert_eq!(evaluated.values[state], 0.0);
    }
}

#[test]
fn oracle_argmax_agrees_with_value_iteration() {
    let cfg = SolverConfig::default();
    for seed in 400..420 {
        let model = random_episodic_model(6, 0.1, seed);
        let (vi_policy, _) = value_iteration(&model, &cfg).unwrap();
        let enumerated = atbat_mdp::mdp::enumerate_policies_oracle(&model).unwrap();
        let (best_policy, best_root) = enumerated
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        // Values must agree; the action choice itself can only differ on
        // exact ties, which random rows do not produce.
        let runner_up = enumerated
            .iter()
            .map(|(_, r)| *r)
            .filter(|r| (r - best_root).abs() > 1e-12)
            .fold(f64::NEG_INFINITY, f64::max);
        if best_root - runner_up > 1e-9 {
            for state in 0..6 {
                assert_eq!(
                    vi_policy.action(state),
                    best_policy.action(state),
                    "seed {seed}, state {state}"
                );
            }
        }
    }
}
