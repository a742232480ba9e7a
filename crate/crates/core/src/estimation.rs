//! Transition-model estimation from at-bat data, and construction of the
//! proportionally sampled multi-pitcher pools behind the general batting
//! strategy.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::atbat::{
    advance_count, AtBatState, BattingAction, ModelKind, PitchResult, TerminalOutcome,
    ACTION_COUNT, COUNT_ORDER,
};
use crate::ingest::{apply_missing_type_rule, AtBatRecord, PitchClassMap};
use crate::mdp::{
    policy_evaluation, root_value, value_iteration, SolverConfig, TransitionModel, TransitionRow,
};
use crate::seed;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("no pitchers with pitches in the input")]
    EmptyInput,
    #[error("pool {pool}: {source}")]
    Pool {
        pool: usize,
        source: crate::mdp::SolverError,
    },
}

/// Counts observed (source state, action, successor) triples and normalizes
/// them into per-row distributions.
///
/// In the class-bearing space a pitch is a transition source only when its
/// type classifies; an untyped pitch still advances the count for the
/// pitches after it. A nonterminal successor takes its class from the next
/// pitch thrown, so a typed pitch followed by an untyped one contributes no
/// transition either — its successor state has no class.
pub fn estimate_transitions(
    at_bats: &[AtBatRecord],
    kind: ModelKind,
    map: &PitchClassMap,
) -> TransitionModel {
    let nonterminal = kind.nonterminal_states();
    let total = kind.total_states();
    let mut counts = vec![0u64; nonterminal * ACTION_COUNT * total];
    let mut strikeouts = vec![0u64; nonterminal * ACTION_COUNT];

    for at_bat in at_bats {
        let pitches = apply_missing_type_rule(at_bat, map);
        for (k, pitch) in pitches.iter().enumerate() {
            let source = match kind {
                ModelKind::Srlib => pitch.count.index(),
                ModelKind::Crlib => match pitch.class {
                    Some(class) => class.index() * COUNT_ORDER.len() + pitch.count.index(),
                    None => continue,
                },
            };
            let successor = match advance_count(pitch.count, pitch.result) {
                AtBatState::Terminal(t) => AtBatState::Terminal(t)
                    .index(kind)
                    .expect("terminal in space"),
                AtBatState::Nonterminal { count, .. } => match kind {
                    ModelKind::Srlib => count.index(),
                    ModelKind::Crlib => match pitches.get(k + 1).and_then(|next| next.class) {
                        Some(class) => class.index() * COUNT_ORDER.len() + count.index(),
                        None => continue,
                    },
                },
            };
            let action = pitch.action.index();
            counts[(source * ACTION_COUNT + action) * total + successor] += 1;
            let is_strikeout = matches!(pitch.result, PitchResult::CalledOrSwingingStrike)
                && matches!(
                    advance_count(pitch.count, pitch.result),
                    AtBatState::Terminal(TerminalOutcome::Out)
                );
            if is_strikeout {
                strikeouts[source * ACTION_COUNT + action] += 1;
            }
        }
    }

    let mut model = TransitionModel::new(kind);
    let out_index = AtBatState::Terminal(TerminalOutcome::Out)
        .index(kind)
        .expect("terminal in space");
    for state in 0..nonterminal {
        for action in [BattingAction::Stand, BattingAction::Swing] {
            let base = (state * ACTION_COUNT + action.index()) * total;
            let cell = &counts[base..base + total];
            let support: u64 = cell.iter().sum();
            if support == 0 {
                continue;
            }
            let probs: Vec<f64> = cell.iter().map(|&c| c as f64 / support as f64).collect();
            let out_count = cell[out_index];
            let strikeout_share = if out_count > 0 {
                strikeouts[state * ACTION_COUNT + action.index()] as f64 / out_count as f64
            } else {
                0.0
            };
            model.set_row(
                state,
                action,
                TransitionRow {
                    probs,
                    support,
                    strikeout_share,
                },
            );
        }
    }
    model
}

/// How many pitches one pitcher owes the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerQuota {
    pub pitcher_id: String,
    pub pitcher_pitches: u64,
    pub pool_pitches: u64,
    pub target_pool_size: f64,
    pub quota: u64,
}

/// Ceiling of the pitcher's pitch share times the target pool size. The
/// share is rounded to 5 decimal places before multiplying; pass
/// `full_precision` to skip that rounding.
pub fn compute_quota_with(
    pitcher_pitches: u64,
    pool_pitches: u64,
    target_pool_size: f64,
    full_precision: bool,
) -> u64 {
    assert!(pool_pitches > 0, "pool must contain pitches");
    assert!(target_pool_size > 0.0, "target pool size must be positive");
    let ratio = pitcher_pitches as f64 / pool_pitches as f64;
    let ratio = if full_precision {
        ratio
    } else {
        (ratio * 1e5).round() / 1e5
    };
    (ratio * target_pool_size).ceil() as u64
}

pub fn compute_quota(pitcher_pitches: u64, pool_pitches: u64, target_pool_size: f64) -> u64 {
    compute_quota_with(pitcher_pitches, pool_pitches, target_pool_size, false)
}

/// One sampled multi-pitcher training pool.
#[derive(Debug, Clone)]
pub struct GeneralPool {
    pub seed: u64,
    pub at_bats: Vec<AtBatRecord>,
    pub per_pitcher_pitch_counts: BTreeMap<String, u64>,
}

/// Draws at-bats uniformly without replacement per pitcher until the
/// pitcher's cumulative pitch count reaches its quota.
///
/// The target pool size is the mean season pitch count across pitchers.
/// Each pitcher gets an independent stream derived from the pool seed, so
/// the result is order-independent and fully reproducible.
pub fn build_general_pool(
    seasons: &BTreeMap<String, Vec<AtBatRecord>>,
    seed_value: u64,
) -> Result<GeneralPool, EstimationError> {
    let pitch_counts: BTreeMap<&String, u64> = seasons
        .iter()
        .map(|(id, at_bats)| (id, at_bats.iter().map(|ab| ab.pitches.len() as u64).sum()))
        .collect();
    let pool_pitches: u64 = pitch_counts.values().sum();
    if pool_pitches == 0 {
        return Err(EstimationError::EmptyInput);
    }
    let target_pool_size = pool_pitches as f64 / seasons.len() as f64;

    let mut pool = GeneralPool {
        seed: seed_value,
        at_bats: Vec::new(),
        per_pitcher_pitch_counts: BTreeMap::new(),
    };
    for (pitcher_id, at_bats) in seasons {
        let quota = compute_quota(pitch_counts[pitcher_id], pool_pitches, target_pool_size);
        let mut order: Vec<usize> = (0..at_bats.len()).collect();
        let mut rng = seed::rng(seed::derive(seed_value, "general-pool-pitcher", pitcher_id));
        order.shuffle(&mut rng);
        let mut sampled = 0u64;
        for index in order {
            if sampled >= quota {
                break;
            }
            sampled += at_bats[index].pitches.len() as u64;
            pool.at_bats.push(at_bats[index].clone());
        }
        if sampled < quota {
            log::warn!(
                "pitcher {pitcher_id}: season exhausted at {sampled} of {quota} quota pitches"
            );
        }
        pool.per_pitcher_pitch_counts
            .insert(pitcher_id.clone(), sampled);
    }
    Ok(pool)
}

/// Builds `n` pools with seeds derived from the master seed.
pub fn build_general_pools(
    seasons: &BTreeMap<String, Vec<AtBatRecord>>,
    master_seed: u64,
    n: usize,
) -> Result<Vec<GeneralPool>, EstimationError> {
    (0..n)
        .map(|k| {
            build_general_pool(
                seasons,
                seed::derive_indexed(master_seed, "general-pool", "", k as u64),
            )
        })
        .collect()
}

/// Per-class pitch counts over the classified pitches of a season slice,
/// indexed in canonical class order.
pub fn count_classes(at_bats: &[AtBatRecord], map: &PitchClassMap) -> [u64; 4] {
    let mut counts = [0u64; 4];
    for at_bat in at_bats {
        for pitch in apply_missing_type_rule(at_bat, map) {
            if let Some(class) = pitch.class {
                counts[class.index()] += 1;
            }
        }
    }
    counts
}

/// Mean test-data root value of the optimal policies learned from each pool.
///
/// Each pool is estimated and solved independently; its policy is then
/// evaluated against the test model, with the class-weighted root in the
/// class-bearing space.
pub fn general_strategy_performance(
    pools: &[GeneralPool],
    test_model: &TransitionModel,
    test_class_counts: &[u64; 4],
    map: &PitchClassMap,
    cfg: &SolverConfig,
) -> Result<f64, EstimationError> {
    assert!(!pools.is_empty(), "at least one pool is required");
    let values: Vec<f64> = pools
        .iter()
        .enumerate()
        .map(|(pool_index, pool)| {
            let pool_model = estimate_transitions(&pool.at_bats, test_model.kind(), map);
            let (pool_policy, _) = value_iteration(&pool_model, cfg)
                .map_err(|source| EstimationError::Pool { pool: pool_index, source })?;
            let evaluated = policy_evaluation(test_model, &pool_policy, cfg)
                .map_err(|source| EstimationError::Pool { pool: pool_index, source })?;
            root_value(test_model.kind(), &evaluated, test_class_counts)
                .map_err(|source| EstimationError::Pool { pool: pool_index, source })
        })
        .collect::<Result<_, _>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
