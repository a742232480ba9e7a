//! Property tests over the algebraic invariants.

use atbat_mdp::atbat::{advance_count, AtBatState, BattingAction, Count, ModelKind, PitchResult, TerminalOutcome};
use atbat_mdp::exploit::binomial_tail_pvalue;
use atbat_mdp::ingest::{expand_trajectory, TrajectoryParams};
use atbat_mdp::mdp::Policy;
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = TrajectoryParams> {
    let coord = -150.0..150.0f64;
    (
        [coord.clone(), coord.clone(), coord.clone()],
        [coord.clone(), coord.clone(), coord.clone()],
        [coord.clone(), coord.clone(), coord.clone()],
        0.05..2.0f64,
    )
        .prop_map(|(p0, v0, a, t)| TrajectoryParams {
            start_position: p0,
            initial_velocity: v0,
            acceleration: a,
            flight_time: t,
        })
}

proptest! {
    // Expansion is linear in the parameters when sampled on a common clock.
    #[test]
    fn trajectory_expansion_is_linear(a in params_strategy(), b in params_strategy()) {
        let t = a.flight_time;
        let b = TrajectoryParams { flight_time: t, ..b };
        let sum = TrajectoryParams {
            start_position: [
                a.start_position[0] + b.start_position[0],
                a.start_position[1] + b.start_position[1],
                a.start_position[2] + b.start_position[2],
            ],
            initial_velocity: [
                a.initial_velocity[0] + b.initial_velocity[0],
                a.initial_velocity[1] + b.initial_velocity[1],
                a.initial_velocity[2] + b.initial_velocity[2],
            ],
            acceleration: [
                a.acceleration[0] + b.acceleration[0],
                a.acceleration[1] + b.acceleration[1],
                a.acceleration[2] + b.acceleration[2],
            ],
            flight_time: t,
        };
        let ea = expand_trajectory(&a, 50);
        let eb = expand_trajectory(&b, 50);
        let es = expand_trajectory(&sum, 50);
        for ((x, y), z) in ea.points.iter().zip(&eb.points).zip(&es.points) {
            prop_assert!((x + y - z).abs() <= 1e-9 * (1.0 + z.abs()));
        }
    }

    #[test]
    fn count_advance_stays_legal(start in 0..12usize, results in proptest::collection::vec(0..4usize, 0..12)) {
        let mut state = AtBatState::count_only(Count::from_index(start).unwrap());
        for r in results {
            let count = match state {
                AtBatState::Nonterminal { count, .. } => count,
                AtBatState::Terminal(_) => break,
            };
            let result = match r {
                0 => PitchResult::Ball,
                1 => PitchResult::CalledOrSwingingStrike,
                2 => PitchResult::Foul,
                _ => PitchResult::InPlay(TerminalOutcome::Single),
            };
            state = advance_count(count, result);
            if let AtBatState::Nonterminal { count, .. } = state {
                prop_assert!(count.balls() <= 3 && count.strikes() <= 2);
            }
        }
    }

    #[test]
    fn binomial_tail_complements(n in 1u64..80, m_frac in 0.0..1.0f64, p in 0.01..0.99f64) {
        let m = ((n as f64) * m_frac) as u64;
        let tail = binomial_tail_pvalue(n, m, p);
        prop_assert!((0.0..=1.0).contains(&tail));
        // Complement computed through the same routine at the flipped
        // success probability: P(X > m) + P(Y > n-m-1) with Y ~ B(n, 1-p)
        // covers the whole space when m < n.
        if m < n {
            let complement = binomial_tail_pvalue(n, n - m - 1, 1.0 - p);
            prop_assert!((tail + complement - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn policy_serialization_round_trips(bits in proptest::collection::vec(0..3u8, 48), crlib in any::<bool>()) {
        let kind = if crlib { ModelKind::Crlib } else { ModelKind::Srlib };
        let actions: Vec<Option<BattingAction>> = bits
            .iter()
            .take(kind.nonterminal_states())
            .map(|b| match b {
                0 => Some(BattingAction::Stand),
                1 => Some(BattingAction::Swing),
                _ => None,
            })
            .collect();
        let policy = Policy::from_actions(kind, actions).unwrap();
        let parsed = Policy::from_json(&policy.to_json()).unwrap();
        prop_assert_eq!(parsed, policy);
    }
}
