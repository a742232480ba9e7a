//! Small synthetic models shared by the test suites: randomly generated
//! episodic transition models with guaranteed absorbing mass, and the
//! classic 5x5 teleporting grid used to exercise the discounted solver
//! path against the linear-solve route.

use rand::Rng;

use crate::atbat::{BattingAction, ModelKind, PitchClass, COUNT_ORDER};
use crate::ingest::AtBatRecord;
use crate::mdp::{EpisodicMdp, Policy, TransitionModel, TransitionRow};
use crate::seed;
use crate::synthgen::{
    constant_policy, generate_season, GenerateConfig, OutcomeDist, SyntheticPitcherSpec,
};

/// A random count-space model over the first `n_nonterminal` counts.
///
/// Every (state, action) row distributes mass over those counts and the six
/// terminals, with at least `min_absorbing` probability on terminals so the
/// episode ends almost surely. States beyond `n_nonterminal` stay null.
pub fn random_episodic_model(
    n_nonterminal: usize,
    min_absorbing: f64,
    seed_value: u64,
) -> TransitionModel {
    let kind = ModelKind::Srlib;
    assert!(n_nonterminal <= kind.nonterminal_states());
    let mut rng = seed::rng(seed_value);
    let total = kind.total_states();
    let terminal_base = kind.nonterminal_states();
    let mut model = TransitionModel::new(kind);
    for state in 0..n_nonterminal {
        for action in [BattingAction::Stand, BattingAction::Swing] {
            let mut weights = vec![0.0f64; total];
            for w in weights.iter_mut().take(n_nonterminal) {
                *w = rng.gen::<f64>();
            }
            let mut terminal_weights = [0.0f64; 6];
            for w in &mut terminal_weights {
                *w = rng.gen::<f64>();
            }
            let nonterminal_mass: f64 = weights.iter().sum();
            let terminal_weight_sum: f64 = terminal_weights.iter().sum();
            // Scale so terminals carry between min_absorbing and 1.
            let absorbing = min_absorbing + (1.0 - min_absorbing) * rng.gen::<f64>();
            let probs: Vec<f64> = (0..total)
                .map(|j| {
                    if j < n_nonterminal {
                        weights[j] / nonterminal_mass * (1.0 - absorbing)
                    } else if j >= terminal_base {
                        terminal_weights[j - terminal_base] / terminal_weight_sum * absorbing
                    } else {
                        0.0
                    }
                })
                .collect();
            // Renormalize the float dust so the row passes the sum check.
            let sum: f64 = probs.iter().sum();
            let probs: Vec<f64> = probs.iter().map(|p| p / sum).collect();
            model.set_row(
                state,
                action,
                TransitionRow {
                    probs,
                    support: 1,
                    strikeout_share: 0.0,
                },
            );
        }
    }
    model
}

/// A synthetic pitcher whose optimal actions are decisively separated at
/// every state: three-ball counts get grooved, very hittable pitches (so
/// swinging wins there outright), while at shallower counts only the
/// fastball rewards contact and standing rides the ball count upward.
pub fn recovery_spec(pitcher_id: &str) -> SyntheticPitcherSpec {
    let mut spec = SyntheticPitcherSpec::uniform(
        pitcher_id,
        OutcomeDist::ball_strike(0.5, 0.5),
        OutcomeDist::ZERO,
    );
    spec.set_class_outcomes(
        PitchClass::Fastball,
        OutcomeDist::ball_strike(0.55, 0.45),
        OutcomeDist {
            strike: 0.05,
            foul: 0.15,
            out: 0.30,
            single: 0.25,
            double: 0.10,
            triple: 0.02,
            home_run: 0.13,
            ..OutcomeDist::ZERO
        },
    );
    spec.set_class_outcomes(
        PitchClass::CurveChange,
        OutcomeDist::ball_strike(0.65, 0.35),
        OutcomeDist {
            strike: 0.70,
            foul: 0.10,
            out: 0.17,
            single: 0.03,
            ..OutcomeDist::ZERO
        },
    );
    spec.set_class_outcomes(
        PitchClass::SinkSlide,
        OutcomeDist::ball_strike(0.55, 0.45),
        OutcomeDist {
            strike: 0.35,
            foul: 0.20,
            out: 0.37,
            single: 0.06,
            double: 0.02,
            ..OutcomeDist::ZERO
        },
    );
    spec.set_class_outcomes(
        PitchClass::KnuckleUnknown,
        OutcomeDist::ball_strike(0.60, 0.40),
        OutcomeDist {
            strike: 0.25,
            foul: 0.15,
            out: 0.45,
            single: 0.12,
            double: 0.03,
            ..OutcomeDist::ZERO
        },
    );
    // Grooved pitches once the pitcher falls behind three balls.
    let grooved_stand = OutcomeDist::ball_strike(0.25, 0.75);
    let grooved_swing = OutcomeDist {
        strike: 0.02,
        foul: 0.08,
        out: 0.20,
        single: 0.30,
        double: 0.20,
        triple: 0.05,
        home_run: 0.15,
        ..OutcomeDist::ZERO
    };
    for (balls, strikes) in [(3u8, 0u8), (3, 1), (3, 2)] {
        let count_index = crate::atbat::Count::new(balls, strikes)
            .expect("three-ball counts are legal")
            .index();
        for class_entry in &mut spec.outcomes[count_index] {
            *class_entry = [grooved_stand, grooved_swing];
        }
    }
    spec
}

/// Stand everywhere except one count, where the batter swings. Replicated
/// across the class blocks in the class-bearing space.
pub fn swing_at_one_count_policy(kind: ModelKind, count_index: usize) -> Policy {
    let mut policy = constant_policy(kind, BattingAction::Stand);
    let blocks = kind.nonterminal_states() / COUNT_ORDER.len();
    for block in 0..blocks {
        policy.set(
            block * COUNT_ORDER.len() + count_index,
            Some(BattingAction::Swing),
        );
    }
    policy
}

/// Seasons generated under a stand-everywhere policy plus one
/// swing-at-a-single-count policy per count, concatenated. Every (state,
/// action) pair of the spec gets observations, since each count is
/// reachable through the stand-only prefix of its swing policy.
pub fn coverage_seasons(
    spec: &SyntheticPitcherSpec,
    stand_atbats: usize,
    swing_atbats: usize,
    season: i32,
    seed_value: u64,
) -> Vec<AtBatRecord> {
    let mut all = Vec::new();
    let stand_cfg = GenerateConfig {
        batter_id: "cover-stand".to_string(),
        season,
        seed: seed::derive(seed_value, "coverage", "stand"),
    };
    all.extend(
        generate_season(
            spec,
            stand_atbats,
            &constant_policy(ModelKind::Srlib, BattingAction::Stand),
            &stand_cfg,
        )
        .expect("stand coverage season generates"),
    );
    for count_index in 0..COUNT_ORDER.len() {
        let cfg = GenerateConfig {
            batter_id: format!("cover-swing-{count_index:02}"),
            season,
            seed: seed::derive_indexed(seed_value, "coverage", "swing", count_index as u64),
        };
        all.extend(
            generate_season(
                spec,
                swing_atbats,
                &swing_at_one_count_policy(ModelKind::Srlib, count_index),
                &cfg,
            )
            .expect("swing coverage season generates"),
        );
    }
    all
}

/// Greedy action-value gap at every actionable state of a model: the
/// absolute difference of the two action values under the optimal
/// continuation. Used to check that a scenario's optimal actions are
/// decisively separated.
pub fn action_value_gaps(model: &TransitionModel, values: &[f64]) -> Vec<f64> {
    let mdp = model.to_episodic();
    let mut gaps = Vec::new();
    for state in 0..model.kind().nonterminal_states() {
        let q: Vec<f64> = (0..2)
            .filter_map(|u| {
                mdp.row(state, u).map(|row| {
                    row.probs
                        .iter()
                        .zip(&row.rewards)
                        .zip(values)
                        .map(|((&p, &g), &v)| p * (g + v))
                        .sum::<f64>()
                })
            })
            .collect();
        if q.len() == 2 {
            gaps.push((q[0] - q[1]).abs());
        }
    }
    gaps
}

/// A random deterministic policy over the model's available actions.
pub fn random_policy(model: &TransitionModel, seed_value: u64) -> crate::mdp::Policy {
    let mut rng = seed::rng(seed_value);
    let mut policy = crate::mdp::Policy::new(model.kind());
    for state in 0..model.kind().nonterminal_states() {
        let available: Vec<BattingAction> = [BattingAction::Stand, BattingAction::Swing]
            .into_iter()
            .filter(|&u| model.row(state, u).is_some())
            .collect();
        if !available.is_empty() {
            policy.set(state, Some(available[rng.gen_range(0..available.len())]));
        }
    }
    policy
}

pub const GRID_SIDE: usize = 5;

/// The 5x5 teleporting grid under the equiprobable four-move policy,
/// folded into a single-action MDP (the mixture row of the four moves).
///
/// Square (0,1) pays +10 and teleports to (4,1); square (0,3) pays +5 and
/// teleports to (2,3); moving off the grid pays -1 and stays put; all other
/// moves pay 0. A continuing task: no terminal states, meant to be solved
/// with a discount below 1.
pub fn gridworld_random_policy_mdp() -> EpisodicMdp {
    let n = GRID_SIDE * GRID_SIDE;
    let at = |r: usize, c: usize| r * GRID_SIDE + c;
    let mut mdp = EpisodicMdp::new(n, 1, vec![false; n]);
    for r in 0..GRID_SIDE {
        for c in 0..GRID_SIDE {
            let mut probs = vec![0.0; n];
            let mut rewards = vec![0.0; n];
            if (r, c) == (0, 1) {
                probs[at(4, 1)] = 1.0;
                rewards[at(4, 1)] = 10.0;
            } else if (r, c) == (0, 3) {
                probs[at(2, 3)] = 1.0;
                rewards[at(2, 3)] = 5.0;
            } else {
                let moves: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
                for (dr, dc) in moves {
                    let nr = r as isize + dr;
                    let nc = c as isize + dc;
                    if nr < 0 || nr >= GRID_SIDE as isize || nc < 0 || nc >= GRID_SIDE as isize {
                        probs[at(r, c)] += 0.25;
                        rewards[at(r, c)] = -1.0; // off-grid moves stay and pay -1
                    } else {
                        probs[at(nr as usize, nc as usize)] += 0.25;
                    }
                }
            }
            mdp.set_row(at(r, c), 0, probs, rewards);
        }
    }
    mdp
}
