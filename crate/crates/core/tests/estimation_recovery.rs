//! Estimated transition models held against the analytic ground truth of
//! the synthetic generator: binomial sampling bounds on every well-observed
//! cell, and optimal-policy agreement once every cell is deeply observed.

use atbat_mdp::atbat::{BattingAction, ModelKind};
use atbat_mdp::estimation::{build_general_pool, estimate_transitions};
use atbat_mdp::fixtures::{action_value_gaps, coverage_seasons, recovery_spec};
use atbat_mdp::ingest::PitchClassMap;
use atbat_mdp::mdp::{value_iteration, SolverConfig};
use atbat_mdp::synthgen::{
    constant_policy, generate_season, implied_transition_model, GenerateConfig, OutcomeDist,
    SyntheticPitcherSpec,
};
use std::collections::BTreeMap;

#[test]
fn estimated_cells_sit_inside_their_sampling_bounds() {
    let spec = recovery_spec("recover");
    let season = coverage_seasons(&spec, 2000, 900, 2009, 41);
    let pitch_total: usize = season.iter().map(|ab| ab.pitches.len()).sum();
    assert!(pitch_total >= 50_000, "only {pitch_total} pitches generated");

    let map = PitchClassMap::default();
    let kind = ModelKind::Crlib;
    let implied = implied_transition_model(&spec, kind).unwrap();
    let estimated = estimate_transitions(&season, kind, &map);

    let mut checked = 0usize;
    let mut failures = 0usize;
    let mut checked_cells = 0usize;
    for state in 0..kind.nonterminal_states() {
        for action in [BattingAction::Stand, BattingAction::Swing] {
            let estimate = match estimated.row(state, action) {
                Some(row) if row.support >= 100 => row,
                _ => continue,
            };
            checked_cells += 1;
            let truth = implied.row(state, action).expect("spec covers every cell");
            let n = estimate.support as f64;
            for (p_hat, p) in estimate.probs.iter().zip(&truth.probs) {
                if *p == 0.0 {
                    // Impossible transitions can never be observed.
                    assert_eq!(*p_hat, 0.0);
                    continue;
                }
                checked += 1;
                let bound = 3.0 * (p * (1.0 - p) / n).sqrt();
                if (p_hat - p).abs() > bound {
                    failures += 1;
                }
            }
        }
    }
    assert!(checked_cells >= 40, "too few well-observed cells: {checked_cells}");
    let rate = failures as f64 / checked as f64;
    assert!(
        rate < 0.01,
        "{failures} of {checked} components outside 3 sigma ({rate:.4})"
    );
}

#[test]
fn deeply_observed_estimates_recover_the_optimal_policy() {
    let spec = recovery_spec("policy");
    let kind = ModelKind::Srlib;
    let map = PitchClassMap::default();
    let cfg = SolverConfig::default();

    let implied = implied_transition_model(&spec, kind).unwrap();
    let (implied_policy, implied_values) = value_iteration(&implied, &cfg).unwrap();

    // The scenario's optimal actions must be decisively separated for the
    // comparison to be meaningful.
    let gaps = action_value_gaps(&implied, &implied_values.values);
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min_gap >= 0.05, "scenario gap too small: {min_gap}");

    let season = coverage_seasons(&spec, 5000, 3500, 2009, 17);
    let estimated = estimate_transitions(&season, kind, &map);
    for state in 0..kind.nonterminal_states() {
        for action in [BattingAction::Stand, BattingAction::Swing] {
            assert!(
                estimated.support(state, action) >= 500,
                "cell ({state}, {action:?}) has support {}",
                estimated.support(state, action)
            );
        }
    }

    let (estimated_policy, _) = value_iteration(&estimated, &cfg).unwrap();
    for state in 0..kind.nonterminal_states() {
        assert_eq!(
            estimated_policy.action(state),
            implied_policy.action(state),
            "policies disagree at state {state}"
        );
    }
}

#[test]
fn equal_pitchers_contribute_equal_pool_shares() {
    // 25 pitchers with exactly equal pitch counts (every at-bat a four-pitch
    // walk): each should provide a twenty-fifth of the pool's pitches, give
    // or take one at-bat.
    let mut seasons = BTreeMap::new();
    for i in 0..25 {
        let id = format!("p{i:02}");
        let spec = SyntheticPitcherSpec::uniform(
            &id,
            OutcomeDist::certain(atbat_mdp::atbat::PitchResult::Ball),
            OutcomeDist::certain(atbat_mdp::atbat::PitchResult::Ball),
        );
        let season = generate_season(
            &spec,
            200,
            &constant_policy(ModelKind::Srlib, BattingAction::Stand),
            &GenerateConfig {
                batter_id: "b".into(),
                season: 2009,
                seed: 1000 + i as u64,
            },
        )
        .unwrap();
        seasons.insert(id, season);
    }
    let pool = build_general_pool(&seasons, 5).unwrap();
    let total: u64 = pool.per_pitcher_pitch_counts.values().sum();
    let even_share = total as f64 / 25.0;
    for (pitcher, &pitches) in &pool.per_pitcher_pitch_counts {
        assert!(
            (pitches as f64 - even_share).abs() <= 4.0,
            "{pitcher} contributed {pitches} with even share {even_share}"
        );
    }
}
