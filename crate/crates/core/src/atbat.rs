//! Domain vocabulary for the at-bat model: counts, terminal outcomes, pitch
//! classes, the two state spaces (count-only and count-with-pitch-class),
//! count-advance semantics, and the reward function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AtBatError {
    #[error("illegal count: {balls} balls, {strikes} strikes")]
    IllegalCount { balls: u8, strikes: u8 },
    #[error("reward is undefined for a terminal source state")]
    TerminalSource,
    #[error("state does not belong to the {0:?} state space")]
    KindMismatch(ModelKind),
}

/// A nonterminal pitch count. Exactly 12 legal values: balls 0..=3,
/// strikes 0..=2. A fourth ball or third strike is a terminal outcome,
/// never a `Count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Count {
    balls: u8,
    strikes: u8,
}

/// Canonical ordering of the 12 counts. Serialized policies, value vectors
/// and transition rows all index nonterminal states in this order.
pub const COUNT_ORDER: [(u8, u8); 12] = [
    (0, 0),
    (1, 0),
    (2, 0),
    (3, 0),
    (0, 1),
    (0, 2),
    (1, 1),
    (1, 2),
    (2, 1),
    (2, 2),
    (3, 1),
    (3, 2),
];

impl Count {
    pub fn new(balls: u8, strikes: u8) -> Result<Self, AtBatError> {
        if balls > 3 || strikes > 2 {
            return Err(AtBatError::IllegalCount { balls, strikes });
        }
        Ok(Count { balls, strikes })
    }

    pub fn balls(self) -> u8 {
        self.balls
    }

    pub fn strikes(self) -> u8 {
        self.strikes
    }

    /// Position of this count in [`COUNT_ORDER`].
    pub fn index(self) -> usize {
        COUNT_ORDER
            .iter()
            .position(|&(b, s)| b == self.balls && s == self.strikes)
            .expect("constructed counts are always in COUNT_ORDER")
    }

    pub fn from_index(index: usize) -> Option<Count> {
        COUNT_ORDER
            .get(index)
            .map(|&(balls, strikes)| Count { balls, strikes })
    }

    pub fn all() -> impl Iterator<Item = Count> {
        COUNT_ORDER
            .iter()
            .map(|&(balls, strikes)| Count { balls, strikes })
    }
}

impl std::fmt::Display for Count {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.balls, self.strikes)
    }
}

/// The six ways an at-bat can end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminalOutcome {
    Out,
    Single,
    Double,
    Triple,
    HomeRun,
    Walk,
}

pub const TERMINAL_ORDER: [TerminalOutcome; 6] = [
    TerminalOutcome::Out,
    TerminalOutcome::Single,
    TerminalOutcome::Double,
    TerminalOutcome::Triple,
    TerminalOutcome::HomeRun,
    TerminalOutcome::Walk,
];

impl TerminalOutcome {
    pub fn index(self) -> usize {
        match self {
            TerminalOutcome::Out => 0,
            TerminalOutcome::Single => 1,
            TerminalOutcome::Double => 2,
            TerminalOutcome::Triple => 3,
            TerminalOutcome::HomeRun => 4,
            TerminalOutcome::Walk => 5,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            TerminalOutcome::Out => "O",
            TerminalOutcome::Single => "S",
            TerminalOutcome::Double => "D",
            TerminalOutcome::Triple => "T",
            TerminalOutcome::HomeRun => "HR",
            TerminalOutcome::Walk => "W",
        }
    }

    pub fn from_code(code: &str) -> Option<TerminalOutcome> {
        TERMINAL_ORDER.iter().copied().find(|t| t.code() == code)
    }
}

/// Generalized pitch-type category. Raw feed vocabularies carry many more
/// codes; they collapse onto these four (see `ingest::PitchClassMap`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PitchClass {
    Fastball,
    CurveChange,
    SinkSlide,
    KnuckleUnknown,
}

pub const PITCH_CLASS_ORDER: [PitchClass; 4] = [
    PitchClass::Fastball,
    PitchClass::CurveChange,
    PitchClass::SinkSlide,
    PitchClass::KnuckleUnknown,
];

impl PitchClass {
    pub fn index(self) -> usize {
        match self {
            PitchClass::Fastball => 0,
            PitchClass::CurveChange => 1,
            PitchClass::SinkSlide => 2,
            PitchClass::KnuckleUnknown => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<PitchClass> {
        PITCH_CLASS_ORDER.get(index).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            PitchClass::Fastball => "F",
            PitchClass::CurveChange => "C",
            PitchClass::SinkSlide => "S",
            PitchClass::KnuckleUnknown => "K",
        }
    }
}

/// Batting action. The numeric encoding (Stand = 0, Swing = 1) is fixed for
/// serialization and is the tie-break order in the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BattingAction {
    Stand,
    Swing,
}

pub const ACTION_COUNT: usize = 2;

impl BattingAction {
    pub fn index(self) -> usize {
        match self {
            BattingAction::Stand => 0,
            BattingAction::Swing => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<BattingAction> {
        match index {
            0 => Some(BattingAction::Stand),
            1 => Some(BattingAction::Swing),
            _ => None,
        }
    }
}

/// What a single pitch did, as recorded in the data. `InPlay` carries the
/// at-bat's final outcome; a walk can never result from contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PitchResult {
    Ball,
    CalledOrSwingingStrike,
    Foul,
    InPlay(TerminalOutcome),
}

/// Which of the two state spaces a model lives in.
///
/// `Srlib` states are the 12 counts plus the 6 terminals. `Crlib` crosses
/// every count with the four pitch classes: 48 nonterminal states plus the
/// same 6 terminals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Srlib,
    Crlib,
}

impl ModelKind {
    pub fn nonterminal_states(self) -> usize {
        match self {
            ModelKind::Srlib => 12,
            ModelKind::Crlib => 48,
        }
    }

    pub fn total_states(self) -> usize {
        self.nonterminal_states() + TERMINAL_ORDER.len()
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Srlib => write!(f, "srlib"),
            ModelKind::Crlib => write!(f, "crlib"),
        }
    }
}

/// One state of the at-bat process: a nonterminal count (with a pitch class
/// in the Crlib space) or a terminal outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtBatState {
    Nonterminal {
        count: Count,
        pitch_class: Option<PitchClass>,
    },
    Terminal(TerminalOutcome),
}

impl AtBatState {
    pub fn count_only(count: Count) -> AtBatState {
        AtBatState::Nonterminal {
            count,
            pitch_class: None,
        }
    }

    pub fn with_class(count: Count, class: PitchClass) -> AtBatState {
        AtBatState::Nonterminal {
            count,
            pitch_class: Some(class),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, AtBatState::Terminal(_))
    }

    /// Index of this state in the canonical enumeration for `kind`.
    ///
    /// Srlib: the 12 counts in `COUNT_ORDER`, then the terminals. Crlib:
    /// counts grouped by pitch class (class-major), then the terminals.
    pub fn index(&self, kind: ModelKind) -> Result<usize, AtBatError> {
        match (kind, self) {
            (
                ModelKind::Srlib,
                AtBatState::Nonterminal {
                    count,
                    pitch_class: None,
                },
            ) => Ok(count.index()),
            (
                ModelKind::Crlib,
                AtBatState::Nonterminal {
                    count,
                    pitch_class: Some(class),
                },
            ) => Ok(class.index() * COUNT_ORDER.len() + count.index()),
            (_, AtBatState::Terminal(t)) => Ok(kind.nonterminal_states() + t.index()),
            _ => Err(AtBatError::KindMismatch(kind)),
        }
    }

    pub fn from_index(kind: ModelKind, index: usize) -> Option<AtBatState> {
        let nonterminal = kind.nonterminal_states();
        if index < nonterminal {
            match kind {
                ModelKind::Srlib => Count::from_index(index).map(AtBatState::count_only),
                ModelKind::Crlib => {
                    let class = PitchClass::from_index(index / COUNT_ORDER.len())?;
                    let count = Count::from_index(index % COUNT_ORDER.len())?;
                    Some(AtBatState::with_class(count, class))
                }
            }
        } else {
            TERMINAL_ORDER
                .get(index - nonterminal)
                .map(|&t| AtBatState::Terminal(t))
        }
    }

    /// Short label for report headers, e.g. `1-2`, `C:3-0`, `HR`.
    pub fn label(&self) -> String {
        match self {
            AtBatState::Nonterminal {
                count,
                pitch_class: None,
            } => count.to_string(),
            AtBatState::Nonterminal {
                count,
                pitch_class: Some(class),
            } => format!("{}:{}", class.code(), count),
            AtBatState::Terminal(t) => t.code().to_string(),
        }
    }
}

/// All states of the given space in canonical index order.
pub fn enumerate_states(kind: ModelKind) -> Vec<AtBatState> {
    (0..kind.total_states())
        .map(|i| AtBatState::from_index(kind, i).expect("index within range"))
        .collect()
}

/// Applies one pitch result to a count.
///
/// A foul with two strikes leaves the count unchanged; every other result
/// either increments the count or ends the at-bat.
pub fn advance_count(count: Count, result: PitchResult) -> AtBatState {
    match result {
        PitchResult::Ball => {
            if count.balls == 3 {
                AtBatState::Terminal(TerminalOutcome::Walk)
            } else {
                AtBatState::count_only(Count {
                    balls: count.balls + 1,
                    strikes: count.strikes,
                })
            }
        }
        PitchResult::CalledOrSwingingStrike => {
            if count.strikes == 2 {
                AtBatState::Terminal(TerminalOutcome::Out)
            } else {
                AtBatState::count_only(Count {
                    balls: count.balls,
                    strikes: count.strikes + 1,
                })
            }
        }
        PitchResult::Foul => {
            if count.strikes == 2 {
                AtBatState::count_only(count)
            } else {
                AtBatState::count_only(Count {
                    balls: count.balls,
                    strikes: count.strikes + 1,
                })
            }
        }
        PitchResult::InPlay(outcome) => AtBatState::Terminal(outcome),
    }
}

/// Reward earned when a terminal outcome is reached with the given action.
/// Transitions into `Out` and combinations the data never produces in clean
/// form (a hit while standing, a walk while swinging) are worth 0.
pub fn terminal_reward(action: BattingAction, outcome: TerminalOutcome) -> u32 {
    match (action, outcome) {
        (BattingAction::Stand, TerminalOutcome::Walk) => 1,
        (BattingAction::Swing, TerminalOutcome::Single) => 2,
        (BattingAction::Swing, TerminalOutcome::Double) => 3,
        (BattingAction::Swing, TerminalOutcome::Triple) => 4,
        (BattingAction::Swing, TerminalOutcome::HomeRun) => 5,
        _ => 0,
    }
}

/// The reward function g(i, u, j) in reward units. Nonterminal successors
/// are always worth 0; the source state must be nonterminal.
pub fn reward(
    source: &AtBatState,
    action: BattingAction,
    successor: &AtBatState,
) -> Result<u32, AtBatError> {
    if source.is_terminal() {
        return Err(AtBatError::TerminalSource);
    }
    Ok(match successor {
        AtBatState::Nonterminal { .. } => 0,
        AtBatState::Terminal(t) => terminal_reward(action, *t),
    })
}
