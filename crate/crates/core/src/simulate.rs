//! Monte Carlo at-bat simulation: the classifier's predicted pitch class
//! composed with a batting policy and a test-season transition model,
//! successor sampling by inverse transform, and batting-line accumulation.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::atbat::{AtBatState, ModelKind, TerminalOutcome, COUNT_ORDER};
use crate::ingest::{expand_trajectory, AtBatRecord, TRAJECTORY_SAMPLES};
use crate::mdp::{Policy, TransitionModel, TransitionRow};
use crate::seed;
use crate::spatial::{believed_trajectory, BatterProfile, SpatialClassifier};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation requires the class-bearing model, got {0}")]
    KindMismatch(ModelKind),
    #[error("at-bat {at_bat_id}: pitch {seq} has no trajectory")]
    MissingTrajectory { at_bat_id: String, seq: u32 },
    #[error(transparent)]
    Spatial(#[from] crate::spatial::SpatialError),
}

/// Simulation sizing and noise handling.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub repetitions: u32,
    pub seed: u64,
    /// Redraw the believed-trajectory noise each repetition; when off, the
    /// noise depends only on the pitch position within the at-bat.
    pub redraw_noise: bool,
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        SimConfig {
            repetitions: 100,
            seed,
            redraw_noise: true,
        }
    }
}

/// Why a repetition ended without a terminal outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SkipReason {
    /// The at-bat's recorded pitches ran out before the sampled episode
    /// finished.
    PitchesExhausted,
    /// The policy or the model had no entry for the (count, predicted
    /// class) pair.
    UnseenStatePitchPair,
}

/// One simulated repetition of an at-bat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SimOutcome {
    Completed {
        outcome: TerminalOutcome,
        /// Set only for outs reached through a third strike.
        strikeout: bool,
    },
    Skipped(SkipReason),
}

/// Where an inverse-transform draw landed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledTransition {
    pub state: usize,
    pub strikeout: bool,
}

/// Inverse-transform sampling over a transition row: successor states own
/// consecutive subintervals of [0, 1] in canonical state order, and the
/// leading `strikeout_share` of the Out state's subinterval marks the
/// strikeout outs.
pub fn sample_transition(row: &TransitionRow, kind: ModelKind, u: f64) -> SampledTransition {
    let out_index = AtBatState::Terminal(TerminalOutcome::Out)
        .index(kind)
        .expect("terminal in space");
    let mut cumulative = 0.0f64;
    let mut last_positive: Option<(usize, f64)> = None;
    for (state, &p) in row.probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let start = cumulative;
        cumulative += p;
        last_positive = Some((state, start));
        if u < cumulative {
            return SampledTransition {
                state,
                strikeout: state == out_index && (u - start) < row.strikeout_share * p,
            };
        }
    }
    // Rounding can leave a sliver at the top; it belongs to the last bin.
    let (state, start) = last_positive.expect("row has positive mass");
    SampledTransition {
        state,
        strikeout: state == out_index
            && (u - start) < row.strikeout_share * row.probs[state],
    }
}

/// Simulates one at-bat `cfg.repetitions` times.
///
/// Each repetition starts at 0-0 and walks the recorded pitches in order:
/// the next pitch's trajectory is perturbed at the batter's noise level,
/// classified, and the (current count, predicted class) state picks the
/// policy action; the successor is sampled from the model row with a single
/// uniform variate per transition, drawn from a per-repetition stream.
pub fn simulate_atbat(
    at_bat: &AtBatRecord,
    policy: &Policy,
    model: &TransitionModel,
    classifier: &SpatialClassifier,
    profile: &BatterProfile,
    cfg: &SimConfig,
) -> Result<Vec<SimOutcome>, SimError> {
    if model.kind() != ModelKind::Crlib {
        return Err(SimError::KindMismatch(model.kind()));
    }
    if policy.kind() != ModelKind::Crlib {
        return Err(SimError::KindMismatch(policy.kind()));
    }

    // Expand every trajectory once; repetitions share the clean curves.
    let mut clean = Vec::with_capacity(at_bat.pitches.len());
    for pitch in &at_bat.pitches {
        let params = pitch.trajectory.ok_or_else(|| SimError::MissingTrajectory {
            at_bat_id: at_bat.at_bat_id.clone(),
            seq: pitch.seq,
        })?;
        clean.push(expand_trajectory(&params, TRAJECTORY_SAMPLES));
    }

    let mut outcomes = Vec::with_capacity(cfg.repetitions as usize);
    for repetition in 0..cfg.repetitions {
        let mut transitions = seed::rng(seed::derive_indexed(
            cfg.seed,
            "sim-transition",
            &at_bat.at_bat_id,
            repetition as u64,
        ));
        let noise_index = if cfg.redraw_noise { repetition as u64 } else { 0 };
        let mut noise = seed::rng(seed::derive_indexed(
            cfg.seed,
            "sim-noise",
            &at_bat.at_bat_id,
            noise_index,
        ));

        let mut count_index = 0usize; // 0-0
        let mut cursor = 0usize;
        let outcome = loop {
            if cursor >= clean.len() {
                break SimOutcome::Skipped(SkipReason::PitchesExhausted);
            }
            let believed = believed_trajectory(&clean[cursor], profile.alpha, &mut noise);
            let predicted = classifier.predict(&believed)?;
            let state = predicted.index() * COUNT_ORDER.len() + count_index;
            let action = match policy.action(state) {
                Some(action) => action,
                None => break SimOutcome::Skipped(SkipReason::UnseenStatePitchPair),
            };
            let row = match model.row(state, action) {
                Some(row) => row,
                None => break SimOutcome::Skipped(SkipReason::UnseenStatePitchPair),
            };
            let sampled = sample_transition(row, ModelKind::Crlib, transitions.gen::<f64>());
            match AtBatState::from_index(ModelKind::Crlib, sampled.state)
                .expect("sampled index in space")
            {
                AtBatState::Terminal(outcome) => {
                    break SimOutcome::Completed {
                        outcome,
                        strikeout: sampled.strikeout,
                    };
                }
                AtBatState::Nonterminal { count, .. } => {
                    count_index = count.index();
                    cursor += 1;
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// Accumulated batting statistics with the derived rates.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BattingLine {
    pub at_bats: u64,
    pub hits: u64,
    pub singles: u64,
    pub doubles: u64,
    pub triples: u64,
    pub home_runs: u64,
    pub walks: u64,
    pub strikeouts: u64,
    pub avg: f64,
    pub obp: f64,
    pub slg: f64,
}

/// Folds simulated outcomes into a batting line. Skipped repetitions are
/// excluded from every denominator; walks count toward plate discipline but
/// not at-bats.
pub fn accumulate_stats(outcomes: &[SimOutcome]) -> BattingLine {
    let mut line = BattingLine::default();
    for outcome in outcomes {
        match outcome {
            SimOutcome::Skipped(_) => {}
            SimOutcome::Completed { outcome, strikeout } => match outcome {
                TerminalOutcome::Walk => line.walks += 1,
                TerminalOutcome::Out => {
                    line.at_bats += 1;
                    if *strikeout {
                        line.strikeouts += 1;
                    }
                }
                TerminalOutcome::Single => {
                    line.at_bats += 1;
                    line.singles += 1;
                }
                TerminalOutcome::Double => {
                    line.at_bats += 1;
                    line.doubles += 1;
                }
                TerminalOutcome::Triple => {
                    line.at_bats += 1;
                    line.triples += 1;
                }
                TerminalOutcome::HomeRun => {
                    line.at_bats += 1;
                    line.home_runs += 1;
                }
            },
        }
    }
    line.hits = line.singles + line.doubles + line.triples + line.home_runs;
    if line.at_bats > 0 {
        line.avg = line.hits as f64 / line.at_bats as f64;
        line.slg = (line.singles + 2 * line.doubles + 3 * line.triples + 4 * line.home_runs)
            as f64
            / line.at_bats as f64;
    }
    if line.at_bats + line.walks > 0 {
        line.obp = (line.hits + line.walks) as f64 / (line.at_bats + line.walks) as f64;
    }
    line
}

/// Skip totals for reporting next to the batting line.
pub fn count_skips(outcomes: &[SimOutcome]) -> (u64, u64) {
    let exhausted = outcomes
        .iter()
        .filter(|o| matches!(o, SimOutcome::Skipped(SkipReason::PitchesExhausted)))
        .count() as u64;
    let unseen = outcomes
        .iter()
        .filter(|o| matches!(o, SimOutcome::Skipped(SkipReason::UnseenStatePitchPair)))
        .count() as u64;
    (exhausted, unseen)
}
