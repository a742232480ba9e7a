//! Discounted policy evaluation on the 5x5 teleporting grid under the
//! equiprobable random policy, held against the direct linear solve of the
//! evaluation system.

use atbat_mdp::fixtures::{gridworld_random_policy_mdp, GRID_SIDE};
use atbat_mdp::mdp::{exact_policy_values, policy_evaluation_generic, SolverConfig};

#[test]
fn grid_values_match_the_linear_solve() {
    let mdp = gridworld_random_policy_mdp();
    let policy = vec![Some(0usize); GRID_SIDE * GRID_SIDE];
    let cfg = SolverConfig {
        discount: 0.9,
        ..SolverConfig::default()
    };
    let swept = policy_evaluation_generic(&mdp, &policy, &cfg).unwrap();
    assert!(swept.converged, "stopped after {} sweeps", swept.iterations);

    let exact = exact_policy_values(&mdp, &policy, 0.9).unwrap();
    for (state, (a, b)) in swept.values.iter().zip(&exact).enumerate() {
        assert!(
            (a - b).abs() <= 1e-10,
            "state {state}: swept {a} vs solved {b}"
        );
    }

    // The teleport squares behave as expected: the +10 square is worth less
    // than its immediate reward (the landing row bleeds value off the edge),
    // the +5 square more than its own.
    let a_square = swept.values[1];
    let b_square = swept.values[3];
    assert!(a_square < 10.0 && a_square > 5.0);
    assert!(b_square > 5.0);
    // And the +10 square is the best place to stand.
    for (state, v) in swept.values.iter().enumerate() {
        if state != 1 {
            assert!(*v < a_square);
        }
    }
}
