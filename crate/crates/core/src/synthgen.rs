//! Synthetic season generation with known ground truth. A pitcher spec fixes
//! per-count pitch-class selection, action-conditional outcome distributions
//! and per-class trajectory templates; seasons drawn from it are emitted in
//! the canonical record form, and the exact transition model the spec
//! implies is available analytically for comparison against estimates.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atbat::{
    advance_count, AtBatState, BattingAction, Count, ModelKind, PitchClass, PitchResult,
    TerminalOutcome, COUNT_ORDER, PITCH_CLASS_ORDER,
};
use crate::ingest::{AtBatRecord, PitchRecord, TrajectoryParams};
use crate::mdp::{Policy, TransitionModel, TransitionRow, ANALYTIC_SUPPORT};
use crate::seed;

const DIST_TOLERANCE: f64 = 1e-12;
const MAX_PITCHES_PER_AT_BAT: usize = 1000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("batter policy has no action for state index {0}")]
    PolicyGap(usize),
    #[error("at-bat {0} did not terminate within {MAX_PITCHES_PER_AT_BAT} pitches")]
    NonTerminating(String),
}

/// Distribution over the eight pitch outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDist {
    pub ball: f64,
    pub strike: f64,
    pub foul: f64,
    pub out: f64,
    pub single: f64,
    pub double: f64,
    pub triple: f64,
    pub home_run: f64,
}

impl OutcomeDist {
    pub const ZERO: OutcomeDist = OutcomeDist {
        ball: 0.0,
        strike: 0.0,
        foul: 0.0,
        out: 0.0,
        single: 0.0,
        double: 0.0,
        triple: 0.0,
        home_run: 0.0,
    };

    /// A stand-style distribution: the pitch is either a ball or a called
    /// strike.
    pub fn ball_strike(ball: f64, strike: f64) -> OutcomeDist {
        OutcomeDist {
            ball,
            strike,
            ..OutcomeDist::ZERO
        }
    }

    /// All mass on one outcome.
    pub fn certain(result: PitchResult) -> OutcomeDist {
        let mut d = OutcomeDist::ZERO;
        match result {
            PitchResult::Ball => d.ball = 1.0,
            PitchResult::CalledOrSwingingStrike => d.strike = 1.0,
            PitchResult::Foul => d.foul = 1.0,
            PitchResult::InPlay(TerminalOutcome::Out) => d.out = 1.0,
            PitchResult::InPlay(TerminalOutcome::Single) => d.single = 1.0,
            PitchResult::InPlay(TerminalOutcome::Double) => d.double = 1.0,
            PitchResult::InPlay(TerminalOutcome::Triple) => d.triple = 1.0,
            PitchResult::InPlay(TerminalOutcome::HomeRun) => d.home_run = 1.0,
            PitchResult::InPlay(TerminalOutcome::Walk) => {
                unreachable!("a walk cannot be put in play")
            }
        }
        d
    }

    pub fn weights(&self) -> [(PitchResult, f64); 8] {
        [
            (PitchResult::Ball, self.ball),
            (PitchResult::CalledOrSwingingStrike, self.strike),
            (PitchResult::Foul, self.foul),
            (PitchResult::InPlay(TerminalOutcome::Out), self.out),
            (PitchResult::InPlay(TerminalOutcome::Single), self.single),
            (PitchResult::InPlay(TerminalOutcome::Double), self.double),
            (PitchResult::InPlay(TerminalOutcome::Triple), self.triple),
            (PitchResult::InPlay(TerminalOutcome::HomeRun), self.home_run),
        ]
    }

    fn sum(&self) -> f64 {
        self.weights().iter().map(|(_, w)| w).sum()
    }

    fn is_valid(&self) -> bool {
        self.weights().iter().all(|&(_, w)| w >= 0.0) && (self.sum() - 1.0).abs() <= DIST_TOLERANCE
    }
}

/// Mean trajectory parameters for one pitch class plus uniform jitter scales
/// applied per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTemplate {
    pub mean: TrajectoryParams,
    pub position_jitter: f64,
    pub velocity_jitter: f64,
    pub acceleration_jitter: f64,
    pub time_jitter: f64,
}

/// Full generative description of a synthetic pitcher.
///
/// `class_selection[count][class]` picks the pitch class thrown at a count;
/// `outcomes[count][class][action]` gives the outcome distribution when the
/// batter takes `action` against that pitch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPitcherSpec {
    pub pitcher_id: String,
    pub class_selection: Vec<Vec<f64>>,
    pub outcomes: Vec<Vec<[OutcomeDist; 2]>>,
    pub templates: Vec<TrajectoryTemplate>,
}

/// Templates with per-class offsets small enough that perception noise on
/// the order of a few tenths of a foot starts to blur the classes, while
/// the within-class jitter stays an order of magnitude below the offsets.
pub fn default_templates() -> Vec<TrajectoryTemplate> {
    (0..4)
        .map(|k| {
            let k = k as f64;
            TrajectoryTemplate {
                mean: TrajectoryParams {
                    start_position: [55.0 + 0.05 * k, -1.0 + 0.05 * k, 5.5 - 0.04 * k],
                    initial_velocity: [-130.0 - 0.10 * k, 3.0 + 0.08 * k, -6.0 - 0.07 * k],
                    acceleration: [16.0 + 0.40 * k, -10.0 - 0.30 * k, -28.0 + 0.45 * k],
                    flight_time: 0.40,
                },
                position_jitter: 0.008,
                velocity_jitter: 0.02,
                acceleration_jitter: 0.06,
                time_jitter: 0.0,
            }
        })
        .collect()
}

impl SyntheticPitcherSpec {
    /// A spec with uniform class selection, the same two outcome
    /// distributions at every (count, class), and the default templates.
    pub fn uniform(pitcher_id: &str, stand: OutcomeDist, swing: OutcomeDist) -> Self {
        SyntheticPitcherSpec {
            pitcher_id: pitcher_id.to_string(),
            class_selection: vec![vec![0.25; 4]; COUNT_ORDER.len()],
            outcomes: vec![vec![[stand, swing]; 4]; COUNT_ORDER.len()],
            templates: default_templates(),
        }
    }

    /// Overrides both outcome distributions for one pitch class at every
    /// count.
    pub fn set_class_outcomes(&mut self, class: PitchClass, stand: OutcomeDist, swing: OutcomeDist) {
        for count in &mut self.outcomes {
            count[class.index()] = [stand, swing];
        }
    }

    pub fn outcome(&self, count: Count, class: PitchClass, action: BattingAction) -> &OutcomeDist {
        &self.outcomes[count.index()][class.index()][action.index()]
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.class_selection.len() != COUNT_ORDER.len()
            || self.outcomes.len() != COUNT_ORDER.len()
        {
            return Err(SynthError::InvalidSpec(
                "class_selection and outcomes must cover all 12 counts".into(),
            ));
        }
        if self.templates.len() != PITCH_CLASS_ORDER.len() {
            return Err(SynthError::InvalidSpec(
                "one trajectory template per pitch class is required".into(),
            ));
        }
        for (ci, row) in self.class_selection.iter().enumerate() {
            if row.len() != PITCH_CLASS_ORDER.len() {
                return Err(SynthError::InvalidSpec(format!(
                    "class selection at count index {ci} must have 4 entries"
                )));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > DIST_TOLERANCE {
                return Err(SynthError::InvalidSpec(format!(
                    "class selection at count index {ci} sums to {sum}"
                )));
            }
        }
        for (ci, per_class) in self.outcomes.iter().enumerate() {
            if per_class.len() != PITCH_CLASS_ORDER.len() {
                return Err(SynthError::InvalidSpec(format!(
                    "outcomes at count index {ci} must have 4 class entries"
                )));
            }
            for (ki, pair) in per_class.iter().enumerate() {
                for dist in pair {
                    if !dist.is_valid() {
                        return Err(SynthError::InvalidSpec(format!(
                            "outcome distribution at count {ci}, class {ki} sums to {}",
                            dist.sum()
                        )));
                    }
                }
            }
        }
        for (ki, template) in self.templates.iter().enumerate() {
            if !template.mean.is_finite()
                || template.position_jitter < 0.0
                || template.velocity_jitter < 0.0
                || template.acceleration_jitter < 0.0
                || template.time_jitter < 0.0
                || template.time_jitter >= template.mean.flight_time
            {
                return Err(SynthError::InvalidSpec(format!(
                    "template for class index {ki} is degenerate"
                )));
            }
        }
        Ok(())
    }
}

/// Identity of the generated season: who bats, which year, which stream.
#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub batter_id: String,
    pub season: i32,
    pub seed: u64,
}

fn draw_categorical<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            cumulative += w;
            if u < cumulative {
                return i;
            }
        }
    }
    // Float dust at the top of the interval falls into the last bin.
    last_positive
}

fn jittered<R: Rng>(template: &TrajectoryTemplate, rng: &mut R) -> TrajectoryParams {
    let mut draw = |scale: f64| rng.gen_range(-1.0..=1.0) * scale;
    let mut p0 = template.mean.start_position;
    let mut v0 = template.mean.initial_velocity;
    let mut a = template.mean.acceleration;
    for axis in 0..3 {
        p0[axis] += draw(template.position_jitter);
    }
    for axis in 0..3 {
        v0[axis] += draw(template.velocity_jitter);
    }
    for axis in 0..3 {
        a[axis] += draw(template.acceleration_jitter);
    }
    let t = template.mean.flight_time + draw(template.time_jitter);
    TrajectoryParams {
        start_position: p0,
        initial_velocity: v0,
        acceleration: a,
        flight_time: t,
    }
}

fn raw_code(class: PitchClass) -> &'static str {
    match class {
        PitchClass::Fastball => "FF",
        PitchClass::CurveChange => "CU",
        PitchClass::SinkSlide => "SL",
        PitchClass::KnuckleUnknown => "KN",
    }
}

fn policy_action(policy: &Policy, count: Count, class: PitchClass) -> Result<BattingAction, SynthError> {
    let index = match policy.kind() {
        ModelKind::Srlib => count.index(),
        ModelKind::Crlib => class.index() * COUNT_ORDER.len() + count.index(),
    };
    policy.action(index).ok_or(SynthError::PolicyGap(index))
}

/// Draws a season of at-bats from the spec under a fixed batting strategy.
/// Fully deterministic given the seed; at-bats get independent derived
/// streams, so the output does not depend on generation order.
pub fn generate_season(
    spec: &SyntheticPitcherSpec,
    n_atbats: usize,
    batter_policy: &Policy,
    cfg: &GenerateConfig,
) -> Result<Vec<AtBatRecord>, SynthError> {
    spec.validate()?;
    let mut season = Vec::with_capacity(n_atbats);
    let stream_label = format!("{}|{}", spec.pitcher_id, cfg.batter_id);
    for ab_index in 0..n_atbats {
        let at_bat_id = format!("{}-{}-{:06}", spec.pitcher_id, cfg.batter_id, ab_index);
        let mut rng = seed::rng(seed::derive_indexed(
            cfg.seed,
            "synthgen-atbat",
            &stream_label,
            ab_index as u64,
        ));
        let mut count = Count::new(0, 0).expect("0-0 is legal");
        let mut pitches = Vec::new();
        let final_outcome = loop {
            if pitches.len() >= MAX_PITCHES_PER_AT_BAT {
                return Err(SynthError::NonTerminating(at_bat_id));
            }
            let class_index =
                draw_categorical(&mut rng, &spec.class_selection[count.index()]);
            let class = PitchClass::from_index(class_index).expect("class index < 4");
            let action = policy_action(batter_policy, count, class)?;
            let weights: Vec<f64> = spec
                .outcome(count, class, action)
                .weights()
                .iter()
                .map(|&(_, w)| w)
                .collect();
            let outcome_index = draw_categorical(&mut rng, &weights);
            let result = spec.outcome(count, class, action).weights()[outcome_index].0;
            let trajectory = jittered(&spec.templates[class_index], &mut rng);
            pitches.push(PitchRecord {
                seq: pitches.len() as u32 + 1,
                count,
                raw_pitch_type: Some(raw_code(class).to_string()),
                action,
                result,
                trajectory: Some(trajectory),
            });
            match advance_count(count, result) {
                AtBatState::Nonterminal { count: next, .. } => count = next,
                AtBatState::Terminal(outcome) => break outcome,
            }
        };
        season.push(AtBatRecord {
            at_bat_id,
            pitcher_id: spec.pitcher_id.clone(),
            batter_id: cfg.batter_id.clone(),
            season: cfg.season,
            pitches,
            final_outcome,
        });
    }
    Ok(season)
}

/// The exact transition model the spec induces, computed analytically.
///
/// In the class-bearing space the successor class of a nonterminal
/// transition is drawn from the next count's class selection, matching how
/// estimation assigns the successor class from the following pitch.
pub fn implied_transition_model(
    spec: &SyntheticPitcherSpec,
    kind: ModelKind,
) -> Result<TransitionModel, SynthError> {
    spec.validate()?;
    let mut model = TransitionModel::new(kind);
    let total = kind.total_states();
    for count in Count::all() {
        for action in [BattingAction::Stand, BattingAction::Swing] {
            match kind {
                ModelKind::Crlib => {
                    for class in PITCH_CLASS_ORDER {
                        let mut probs = vec![0.0; total];
                        let mut strikeout_mass = 0.0;
                        accumulate_outcomes(
                            spec,
                            kind,
                            count,
                            class,
                            action,
                            1.0,
                            &mut probs,
                            &mut strikeout_mass,
                        );
                        let state = AtBatState::with_class(count, class)
                            .index(kind)
                            .expect("state in space");
                        model.set_row(state, action, finish_row(probs, strikeout_mass, kind));
                    }
                }
                ModelKind::Srlib => {
                    let mut probs = vec![0.0; total];
                    let mut strikeout_mass = 0.0;
                    for class in PITCH_CLASS_ORDER {
                        let weight = spec.class_selection[count.index()][class.index()];
                        if weight > 0.0 {
                            accumulate_outcomes(
                                spec,
                                kind,
                                count,
                                class,
                                action,
                                weight,
                                &mut probs,
                                &mut strikeout_mass,
                            );
                        }
                    }
                    let state = count.index();
                    model.set_row(state, action, finish_row(probs, strikeout_mass, kind));
                }
            }
        }
    }
    Ok(model)
}

#[allow(clippy::too_many_arguments)]
fn accumulate_outcomes(
    spec: &SyntheticPitcherSpec,
    kind: ModelKind,
    count: Count,
    class: PitchClass,
    action: BattingAction,
    weight: f64,
    probs: &mut [f64],
    strikeout_mass: &mut f64,
) {
    for (result, q) in spec.outcome(count, class, action).weights() {
        if q <= 0.0 {
            continue;
        }
        let mass = weight * q;
        match advance_count(count, result) {
            AtBatState::Terminal(t) => {
                let idx = AtBatState::Terminal(t).index(kind).expect("terminal in space");
                probs[idx] += mass;
                if t == TerminalOutcome::Out
                    && matches!(result, PitchResult::CalledOrSwingingStrike)
                {
                    *strikeout_mass += mass;
                }
            }
            AtBatState::Nonterminal { count: next, .. } => match kind {
                ModelKind::Srlib => {
                    probs[next.index()] += mass;
                }
                ModelKind::Crlib => {
                    for next_class in PITCH_CLASS_ORDER {
                        let sel = spec.class_selection[next.index()][next_class.index()];
                        if sel > 0.0 {
                            let idx = AtBatState::with_class(next, next_class)
                                .index(kind)
                                .expect("state in space");
                            probs[idx] += mass * sel;
                        }
                    }
                }
            },
        }
    }
}

fn finish_row(probs: Vec<f64>, strikeout_mass: f64, kind: ModelKind) -> TransitionRow {
    let out_index = AtBatState::Terminal(TerminalOutcome::Out)
        .index(kind)
        .expect("terminal in space");
    let out_mass = probs[out_index];
    TransitionRow {
        probs,
        support: ANALYTIC_SUPPORT,
        strikeout_share: if out_mass > 0.0 {
            strikeout_mass / out_mass
        } else {
            0.0
        },
    }
}

/// A policy with the same action at every state of the space.
pub fn constant_policy(kind: ModelKind, action: BattingAction) -> Policy {
    let mut policy = Policy::new(kind);
    for i in 0..kind.nonterminal_states() {
        policy.set(i, Some(action));
    }
    policy
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(seed: u64) -> GenerateConfig {
        GenerateConfig {
            batter_id: "b1".to_string(),
            season: 2009,
            seed,
        }
    }

    #[test]
    fn forced_home_run_spec() {
        let spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::ball_strike(0.5, 0.5),
            OutcomeDist::certain(PitchResult::InPlay(TerminalOutcome::HomeRun)),
        );
        let policy = constant_policy(ModelKind::Srlib, BattingAction::Swing);
        let season = generate_season(&spec, 50, &policy, &config(1)).unwrap();
        assert_eq!(season.len(), 50);
        for ab in &season {
            assert_eq!(ab.pitches.len(), 1);
            assert_eq!(ab.final_outcome, TerminalOutcome::HomeRun);
        }
    }

    #[test]
    fn forced_ball_spec_walks_in_four() {
        let spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::certain(PitchResult::Ball),
            OutcomeDist::certain(PitchResult::Ball),
        );
        let policy = constant_policy(ModelKind::Srlib, BattingAction::Stand);
        let season = generate_season(&spec, 20, &policy, &config(2)).unwrap();
        for ab in &season {
            assert_eq!(ab.pitches.len(), 4);
            assert_eq!(ab.final_outcome, TerminalOutcome::Walk);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::ball_strike(0.6, 0.4),
            OutcomeDist {
                strike: 0.3,
                foul: 0.2,
                out: 0.3,
                single: 0.15,
                home_run: 0.05,
                ..OutcomeDist::ZERO
            },
        );
        let policy = constant_policy(ModelKind::Srlib, BattingAction::Stand);
        let a = generate_season(&spec, 30, &policy, &config(7)).unwrap();
        let b = generate_season(&spec, 30, &policy, &config(7)).unwrap();
        assert_eq!(a, b);
        let c = generate_season(&spec, 30, &policy, &config(8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn implied_model_for_forced_specs() {
        let ball_spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::certain(PitchResult::Ball),
            OutcomeDist::certain(PitchResult::Ball),
        );
        let model = implied_transition_model(&ball_spec, ModelKind::Srlib).unwrap();
        for count in Count::all() {
            for action in [BattingAction::Stand, BattingAction::Swing] {
                let row = model.row(count.index(), action).unwrap();
                let expected = advance_count(count, PitchResult::Ball)
                    .index(ModelKind::Srlib)
                    .unwrap();
                assert_eq!(row.probs[expected], 1.0);
                assert_eq!(row.probs.iter().sum::<f64>(), 1.0);
            }
        }

        let hr_spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::ball_strike(1.0, 0.0),
            OutcomeDist::certain(PitchResult::InPlay(TerminalOutcome::HomeRun)),
        );
        let model = implied_transition_model(&hr_spec, ModelKind::Crlib).unwrap();
        let hr = AtBatState::Terminal(TerminalOutcome::HomeRun)
            .index(ModelKind::Crlib)
            .unwrap();
        for state in 0..ModelKind::Crlib.nonterminal_states() {
            assert_eq!(model.row(state, BattingAction::Swing).unwrap().probs[hr], 1.0);
        }
    }

    #[test]
    fn implied_rows_are_stochastic() {
        let spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::ball_strike(0.55, 0.45),
            OutcomeDist {
                strike: 0.25,
                foul: 0.25,
                out: 0.3,
                single: 0.1,
                double: 0.05,
                triple: 0.01,
                home_run: 0.04,
                ..OutcomeDist::ZERO
            },
        );
        for kind in [ModelKind::Srlib, ModelKind::Crlib] {
            let model = implied_transition_model(&spec, kind).unwrap();
            model.validate().unwrap();
            for state in 0..kind.nonterminal_states() {
                for action in [BattingAction::Stand, BattingAction::Swing] {
                    let sum: f64 = model.row(state, action).unwrap().probs.iter().sum();
                    assert!((sum - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn strikeout_share_reflects_two_strike_strikes() {
        // At two strikes, a strike is a strikeout; an in-play out is not.
        let spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::ball_strike(0.5, 0.5),
            OutcomeDist {
                strike: 0.2,
                out: 0.6,
                single: 0.2,
                ..OutcomeDist::ZERO
            },
        );
        let model = implied_transition_model(&spec, ModelKind::Srlib).unwrap();
        let two_strikes = Count::new(0, 2).unwrap().index();
        let row = model.row(two_strikes, BattingAction::Swing).unwrap();
        // Out mass: 0.2 (strikeout) + 0.6 (in play) = 0.8.
        assert!((row.strikeout_share - 0.25).abs() < 1e-12);
        let no_strikes = Count::new(0, 0).unwrap().index();
        let row = model.row(no_strikes, BattingAction::Swing).unwrap();
        assert_eq!(row.strikeout_share, 0.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::ball_strike(0.5, 0.5),
            OutcomeDist::certain(PitchResult::Foul),
        );
        spec.class_selection[3] = vec![0.5, 0.5, 0.5, 0.5];
        assert!(matches!(
            generate_season(
                &spec,
                1,
                &constant_policy(ModelKind::Srlib, BattingAction::Stand),
                &config(1)
            ),
            Err(SynthError::InvalidSpec(_))
        ));

        // All-foul swings at two strikes never terminate.
        let foul_spec = SyntheticPitcherSpec::uniform(
            "p1",
            OutcomeDist::certain(PitchResult::Foul),
            OutcomeDist::certain(PitchResult::Foul),
        );
        assert!(matches!(
            generate_season(
                &foul_spec,
                1,
                &constant_policy(ModelKind::Srlib, BattingAction::Stand),
                &config(1)
            ),
            Err(SynthError::NonTerminating(_))
        ));
    }
}
