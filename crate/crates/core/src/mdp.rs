//! Finite episodic MDP solving: value iteration and policy evaluation by
//! in-place sweeps, an exact linear-solve route for the same quantities, and
//! the count-space transition model / policy types built on top of them.
//!
//! The sweep solvers and the linear solve are deliberately independent
//! computational routes; tests hold one against the other.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atbat::{
    enumerate_states, terminal_reward, AtBatState, BattingAction, ModelKind, ACTION_COUNT,
    COUNT_ORDER, PITCH_CLASS_ORDER,
};

/// Tolerance for the row-stochasticity check.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Hard cap for the policy-enumeration oracle: 2^n deterministic policies.
pub const ORACLE_STATE_LIMIT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("row ({state}, action {action}) is not a probability distribution (sum {sum})")]
    NonStochasticModel {
        state: usize,
        action: usize,
        sum: f64,
    },
    #[error("every nonterminal state has only null actions")]
    NoActionableState,
    #[error("model kinds differ: {0} vs {1}")]
    ModelKindMismatch(ModelKind, ModelKind),
    #[error("value vector has {found} states, expected {expected}")]
    WrongStateCount { expected: usize, found: usize },
    #[error("no pitches recorded in the test data")]
    EmptyTestData,
    #[error("{0} states with available actions exceed the enumeration limit of {ORACLE_STATE_LIMIT}")]
    TooManyStates(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("policy is defined for a different state space")]
    PolicyShapeMismatch,
}

/// Stopping and discounting parameters for the sweep solvers.
///
/// The defaults follow the episodic setting: undiscounted, iterate until the
/// largest per-sweep value change falls below machine epsilon.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub discount: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: f64::EPSILON,
            max_iterations: 1_000_000,
            discount: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "discount must be in (0, 1], got {}",
                self.discount
            )));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Converged (or capped) state values. Terminal states are always exactly 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueVector {
    pub values: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl ValueVector {
    /// Value of the first state in canonical order, i.e. the 0-0 count (or
    /// its first class block in the class-bearing space).
    pub fn root(&self) -> f64 {
        self.values[0]
    }
}

// ---------------------------------------------------------------------------
// Generic episodic MDP
// ---------------------------------------------------------------------------

/// One (state, action) row of a generic MDP: successor probabilities and the
/// reward collected on each transition.
#[derive(Debug, Clone)]
pub struct GenericRow {
    pub probs: Vec<f64>,
    pub rewards: Vec<f64>,
}

/// A dense finite MDP with an arbitrary action count and per-transition
/// rewards. `rows` is (state-major, action-minor); terminal states carry no
/// rows. Absent rows mark (state, action) pairs with no data.
#[derive(Debug, Clone)]
pub struct EpisodicMdp {
    n_states: usize,
    n_actions: usize,
    terminal: Vec<bool>,
    rows: Vec<Option<GenericRow>>,
}

impl EpisodicMdp {
    pub fn new(n_states: usize, n_actions: usize, terminal: Vec<bool>) -> Self {
        assert_eq!(terminal.len(), n_states);
        EpisodicMdp {
            n_states,
            n_actions,
            terminal,
            rows: vec![None; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn set_row(&mut self, state: usize, action: usize, probs: Vec<f64>, rewards: Vec<f64>) {
        assert!(!self.terminal[state], "terminal states have no rows");
        assert_eq!(probs.len(), self.n_states);
        assert_eq!(rewards.len(), self.n_states);
        self.rows[state * self.n_actions + action] = Some(GenericRow { probs, rewards });
    }

    pub fn row(&self, state: usize, action: usize) -> Option<&GenericRow> {
        self.rows[state * self.n_actions + action].as_ref()
    }

    fn nonterminal_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states).filter(move |&i| !self.terminal[i])
    }

    /// Row-stochasticity check over all present rows.
    pub fn validate(&self) -> Result<(), SolverError> {
        for state in self.nonterminal_indices() {
            for action in 0..self.n_actions {
                if let Some(row) = self.row(state, action) {
                    let sum: f64 = row.probs.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE || row.probs.iter().any(|&p| p < 0.0)
                    {
                        return Err(SolverError::NonStochasticModel { state, action, sum });
                    }
                }
            }
        }
        Ok(())
    }

    fn has_actionable_state(&self) -> bool {
        self.nonterminal_indices()
            .any(|i| (0..self.n_actions).any(|u| self.row(i, u).is_some()))
    }

    fn expected_update(&self, row: &GenericRow, values: &[f64], discount: f64) -> f64 {
        row.probs
            .iter()
            .zip(row.rewards.iter())
            .zip(values.iter())
            .map(|((&p, &g), &v)| p * (g + discount * v))
            .sum()
    }
}

/// Per-sweep maximum absolute value changes, in sweep order.
pub type SweepDeltas = Vec<f64>;

/// Value iteration by in-place sweeps over the nonterminal states in index
/// order. Returns the greedy deterministic policy (the lowest-index action
/// wins ties), the values, and the per-sweep delta trace.
///
/// States whose actions are all absent keep value 0 and a `None` policy
/// entry.
pub fn value_iteration_generic(
    mdp: &EpisodicMdp,
    cfg: &SolverConfig,
) -> Result<(Vec<Option<usize>>, ValueVector, SweepDeltas), SolverError> {
    cfg.validate()?;
    mdp.validate()?;
    if !mdp.has_actionable_state() {
        return Err(SolverError::NoActionableState);
    }

    let mut values = vec![0.0; mdp.n_states()];
    let mut deltas = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        let mut delta = 0.0f64;
        for i in mdp.nonterminal_indices() {
            let mut best: Option<f64> = None;
            for u in 0..mdp.n_actions() {
                if let Some(row) = mdp.row(i, u) {
                    let q = mdp.expected_update(row, &values, cfg.discount);
                    // Strict improvement only: earlier actions win ties.
                    if best.map_or(true, |b| q > b) {
                        best = Some(q);
                    }
                }
            }
            if let Some(new_value) = best {
                delta = delta.max((values[i] - new_value).abs());
                values[i] = new_value;
            }
        }
        iterations += 1;
        deltas.push(delta);
        if delta < cfg.epsilon {
            converged = true;
            break;
        }
    }

    // Greedy policy extraction against the final values.
    let mut policy = vec![None; mdp.n_states()];
    for i in mdp.nonterminal_indices() {
        let mut best: Option<(usize, f64)> = None;
        for u in 0..mdp.n_actions() {
            if let Some(row) = mdp.row(i, u) {
                let q = mdp.expected_update(row, &values, cfg.discount);
                if best.map_or(true, |(_, b)| q > b) {
                    best = Some((u, q));
                }
            }
        }
        policy[i] = best.map(|(u, _)| u);
    }

    Ok((
        policy,
        ValueVector {
            values,
            converged,
            iterations,
        },
        deltas,
    ))
}

/// Policy evaluation by the same in-place sweep scheme.
///
/// A state whose policy entry is `None`, or whose chosen action has no row,
/// is treated as self-absorbing with value 0; such states are reported
/// through a debug log and skipped in the sweeps.
pub fn policy_evaluation_generic(
    mdp: &EpisodicMdp,
    policy: &[Option<usize>],
    cfg: &SolverConfig,
) -> Result<ValueVector, SolverError> {
    cfg.validate()?;
    mdp.validate()?;
    if policy.len() != mdp.n_states() {
        return Err(SolverError::WrongStateCount {
            expected: mdp.n_states(),
            found: policy.len(),
        });
    }

    let mut active: Vec<(usize, &GenericRow)> = Vec::new();
    for i in mdp.nonterminal_indices() {
        match policy[i].and_then(|u| mdp.row(i, u)) {
            Some(row) => active.push((i, row)),
            None => {
                log::debug!("state {i}: policy or model row is null; value forced to 0");
            }
        }
    }

    let mut values = vec![0.0; mdp.n_states()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        let mut delta = 0.0f64;
        for &(i, row) in &active {
            let new_value = mdp.expected_update(row, &values, cfg.discount);
            delta = delta.max((values[i] - new_value).abs());
            values[i] = new_value;
        }
        iterations += 1;
        if delta < cfg.epsilon {
            converged = true;
            break;
        }
    }

    Ok(ValueVector {
        values,
        converged,
        iterations,
    })
}

/// Exact values of a fixed policy by direct linear solve of the evaluation
/// system on the active states: (I - γ P) v = r.
///
/// This is the algebraic route the sweep solvers are tested against. States
/// with a null policy entry or null row are fixed at 0, matching
/// [`policy_evaluation_generic`].
pub fn exact_policy_values(
    mdp: &EpisodicMdp,
    policy: &[Option<usize>],
    discount: f64,
) -> Result<Vec<f64>, SolverError> {
    if policy.len() != mdp.n_states() {
        return Err(SolverError::WrongStateCount {
            expected: mdp.n_states(),
            found: policy.len(),
        });
    }
    let active: Vec<usize> = mdp
        .nonterminal_indices()
        .filter(|&i| policy[i].and_then(|u| mdp.row(i, u)).is_some())
        .collect();
    let mut values = vec![0.0; mdp.n_states()];
    if active.is_empty() {
        return Ok(values);
    }
    let pos: BTreeMap<usize, usize> = active.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    let n = active.len();
    let mut a = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    for (k, &i) in active.iter().enumerate() {
        let row = mdp.row(i, policy[i].unwrap()).unwrap();
        let mut expected_reward = 0.0;
        for j in 0..mdp.n_states() {
            expected_reward += row.probs[j] * row.rewards[j];
            if let Some(&kj) = pos.get(&j) {
                a[(k, kj)] -= discount * row.probs[j];
            }
            // Successors outside the active set contribute value 0.
        }
        b[k] = expected_reward;
    }
    let solved = a
        .lu()
        .solve(&b)
        .ok_or_else(|| SolverError::InvalidConfig("evaluation system is singular".into()))?;
    for (k, &i) in active.iter().enumerate() {
        values[i] = solved[k];
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// Count-space transition model
// ---------------------------------------------------------------------------

/// One estimated (state, action) row: a distribution over all state indices,
/// the number of observations behind it, and the share of its transitions
/// into Out that were strikeouts (as opposed to balls put in play).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub probs: Vec<f64>,
    pub support: u64,
    pub strikeout_share: f64,
}

/// Support count recorded on analytically-derived rows, which have no finite
/// observation count.
pub const ANALYTIC_SUPPORT: u64 = u64::MAX;

/// Empirical (or analytically implied) transition probabilities per
/// (nonterminal state, batting action). Pairs that were never observed are
/// null: they hold no row at all.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    kind: ModelKind,
    rows: Vec<Option<TransitionRow>>,
}

impl TransitionModel {
    pub fn new(kind: ModelKind) -> Self {
        TransitionModel {
            kind,
            rows: vec![None; kind.nonterminal_states() * ACTION_COUNT],
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn set_row(&mut self, state: usize, action: BattingAction, row: TransitionRow) {
        assert!(state < self.kind.nonterminal_states());
        assert_eq!(row.probs.len(), self.kind.total_states());
        self.rows[state * ACTION_COUNT + action.index()] = Some(row);
    }

    pub fn row(&self, state: usize, action: BattingAction) -> Option<&TransitionRow> {
        if state >= self.kind.nonterminal_states() {
            return None;
        }
        self.rows[state * ACTION_COUNT + action.index()].as_ref()
    }

    pub fn support(&self, state: usize, action: BattingAction) -> u64 {
        self.row(state, action).map_or(0, |r| r.support)
    }

    /// Number of nonterminal states with at least one available action.
    pub fn actionable_states(&self) -> usize {
        (0..self.kind.nonterminal_states())
            .filter(|&i| {
                self.row(i, BattingAction::Stand).is_some()
                    || self.row(i, BattingAction::Swing).is_some()
            })
            .count()
    }

    /// Expands into the generic dense form, attaching the reward function.
    pub fn to_episodic(&self) -> EpisodicMdp {
        let n = self.kind.total_states();
        let nonterminal = self.kind.nonterminal_states();
        let terminal: Vec<bool> = (0..n).map(|i| i >= nonterminal).collect();
        let states = enumerate_states(self.kind);
        let mut mdp = EpisodicMdp::new(n, ACTION_COUNT, terminal);
        for i in 0..nonterminal {
            for action in [BattingAction::Stand, BattingAction::Swing] {
                if let Some(row) = self.row(i, action) {
                    let rewards: Vec<f64> = states
                        .iter()
                        .map(|j| match j {
                            AtBatState::Terminal(t) => terminal_reward(action, *t) as f64,
                            AtBatState::Nonterminal { .. } => 0.0,
                        })
                        .collect();
                    mdp.set_row(i, action.index(), row.probs.clone(), rewards);
                }
            }
        }
        mdp
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.to_episodic().validate()
    }
}

/// Deterministic batting strategy: one action per nonterminal state, with
/// null entries where no action is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    kind: ModelKind,
    actions: Vec<Option<BattingAction>>,
}

impl Policy {
    pub fn new(kind: ModelKind) -> Self {
        Policy {
            kind,
            actions: vec![None; kind.nonterminal_states()],
        }
    }

    pub fn from_actions(kind: ModelKind, actions: Vec<Option<BattingAction>>) -> Option<Self> {
        (actions.len() == kind.nonterminal_states()).then_some(Policy { kind, actions })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn action(&self, state: usize) -> Option<BattingAction> {
        self.actions.get(state).copied().flatten()
    }

    pub fn set(&mut self, state: usize, action: Option<BattingAction>) {
        self.actions[state] = action;
    }

    pub fn actions(&self) -> &[Option<BattingAction>] {
        &self.actions
    }

    fn to_index_vec(&self, n_states: usize) -> Vec<Option<usize>> {
        let mut v: Vec<Option<usize>> = self.actions.iter().map(|a| a.map(|u| u.index())).collect();
        v.resize(n_states, None);
        v
    }
}

/// Finds the deterministic policy and values maximizing the expected reward
/// at every state of the model.
pub fn value_iteration(
    model: &TransitionModel,
    cfg: &SolverConfig,
) -> Result<(Policy, ValueVector), SolverError> {
    let mdp = model.to_episodic();
    let (raw_policy, values, _) = value_iteration_generic(&mdp, cfg)?;
    let actions = raw_policy[..model.kind().nonterminal_states()]
        .iter()
        .map(|u| u.and_then(BattingAction::from_index))
        .collect();
    Ok((
        Policy {
            kind: model.kind(),
            actions,
        },
        values,
    ))
}

/// Expected reward of every state when following a fixed batting strategy.
pub fn policy_evaluation(
    model: &TransitionModel,
    policy: &Policy,
    cfg: &SolverConfig,
) -> Result<ValueVector, SolverError> {
    if policy.kind() != model.kind() {
        return Err(SolverError::ModelKindMismatch(policy.kind(), model.kind()));
    }
    let mdp = model.to_episodic();
    policy_evaluation_generic(&mdp, &policy.to_index_vec(mdp.n_states()), cfg)
}

/// Root value of a class-bearing model: the average of the four 0-0 state
/// values weighted by how often each pitch class appears in the test data.
/// `pitch_counts` is indexed by the canonical pitch-class order.
pub fn crlib_root_value(values: &ValueVector, pitch_counts: &[u64; 4]) -> Result<f64, SolverError> {
    let expected = ModelKind::Crlib.total_states();
    if values.values.len() != expected {
        return Err(SolverError::WrongStateCount {
            expected,
            found: values.values.len(),
        });
    }
    let total: u64 = pitch_counts.iter().sum();
    if total == 0 {
        return Err(SolverError::EmptyTestData);
    }
    let mut acc = 0.0;
    for class in PITCH_CLASS_ORDER {
        let k = pitch_counts[class.index()];
        if k > 0 {
            acc += k as f64 * values.values[class.index() * COUNT_ORDER.len()];
        }
    }
    Ok(acc / total as f64)
}

/// Root value of a model's value vector under its kind: the plain 0-0 value
/// for the count-only space, the weighted 0-0 average otherwise.
pub fn root_value(
    kind: ModelKind,
    values: &ValueVector,
    pitch_counts: &[u64; 4],
) -> Result<f64, SolverError> {
    match kind {
        ModelKind::Srlib => {
            if values.values.len() != kind.total_states() {
                return Err(SolverError::WrongStateCount {
                    expected: kind.total_states(),
                    found: values.values.len(),
                });
            }
            Ok(values.root())
        }
        ModelKind::Crlib => crlib_root_value(values, pitch_counts),
    }
}

/// Every deterministic policy over the model's available actions, paired
/// with its exact linear-solve root value. Guarded against exponential
/// blowup: at most [`ORACLE_STATE_LIMIT`] states may have available actions.
pub fn enumerate_policies_oracle(
    model: &TransitionModel,
) -> Result<Vec<(Policy, f64)>, SolverError> {
    let nonterminal = model.kind().nonterminal_states();
    let choices: Vec<(usize, Vec<BattingAction>)> = (0..nonterminal)
        .filter_map(|i| {
            let available: Vec<BattingAction> = [BattingAction::Stand, BattingAction::Swing]
                .into_iter()
                .filter(|&u| model.row(i, u).is_some())
                .collect();
            (!available.is_empty()).then_some((i, available))
        })
        .collect();
    if choices.len() > ORACLE_STATE_LIMIT {
        return Err(SolverError::TooManyStates(choices.len()));
    }

    let mdp = model.to_episodic();
    let total: usize = choices.iter().map(|(_, a)| a.len()).product();
    let mut out = Vec::with_capacity(total);
    for mut selector in 0..total {
        let mut policy = Policy::new(model.kind());
        for (state, available) in &choices {
            let pick = available[selector % available.len()];
            selector /= available.len();
            policy.set(*state, Some(pick));
        }
        let values = exact_policy_values(&mdp, &policy.to_index_vec(mdp.n_states()), 1.0)?;
        out.push((policy, values[0]));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ModelFile {
    model: ModelKind,
    rows: Vec<ModelFileRow>,
}

#[derive(Serialize, Deserialize)]
struct ModelFileRow {
    state: usize,
    action: u8,
    support: u64,
    strikeout_share: f64,
    p: Vec<f64>,
}

impl TransitionModel {
    pub fn to_json(&self) -> serde_json::Value {
        let mut rows = Vec::new();
        for state in 0..self.kind.nonterminal_states() {
            for action in [BattingAction::Stand, BattingAction::Swing] {
                if let Some(row) = self.row(state, action) {
                    rows.push(ModelFileRow {
                        state,
                        action: action.index() as u8,
                        support: row.support,
                        strikeout_share: row.strikeout_share,
                        p: row.probs.clone(),
                    });
                }
            }
        }
        serde_json::to_value(ModelFile {
            model: self.kind,
            rows,
        })
        .expect("model serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, serde_json::Error> {
        let file: ModelFile = serde_json::from_value(value.clone())?;
        let mut model = TransitionModel::new(file.model);
        for row in file.rows {
            let action = BattingAction::from_index(row.action as usize).ok_or_else(|| {
                serde::de::Error::custom(format!("invalid action index {}", row.action))
            })?;
            if row.state >= file.model.nonterminal_states()
                || row.p.len() != file.model.total_states()
            {
                return Err(serde::de::Error::custom("row shape mismatch"));
            }
            model.set_row(
                row.state,
                action,
                TransitionRow {
                    probs: row.p,
                    support: row.support,
                    strikeout_share: row.strikeout_share,
                },
            );
        }
        Ok(model)
    }

    /// Flat CSV of the non-null rows for inspection; one column per
    /// successor state, labeled in canonical order.
    pub fn to_csv(&self) -> String {
        let states = enumerate_states(self.kind);
        let mut out = String::from("state,action,support,strikeout_share");
        for s in &states {
            out.push(',');
            out.push_str(&s.label());
        }
        out.push('\n');
        for state in 0..self.kind.nonterminal_states() {
            for action in [BattingAction::Stand, BattingAction::Swing] {
                if let Some(row) = self.row(state, action) {
                    out.push_str(&format!(
                        "{},{},{},{}",
                        states[state].label(),
                        action.index(),
                        row.support,
                        row.strikeout_share
                    ));
                    for p in &row.probs {
                        out.push_str(&format!(",{p}"));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    model: ModelKind,
    actions: serde_json::Value,
}

impl Policy {
    /// Serializes to the policy-vector layout: a 12-vector of 0/1/null for
    /// the count-only space, four such rows (one per pitch class, canonical
    /// class order) for the class-bearing space. Nulls are explicit.
    pub fn to_json(&self) -> serde_json::Value {
        let bit = |a: &Option<BattingAction>| -> serde_json::Value {
            match a {
                Some(u) => serde_json::json!(u.index()),
                None => serde_json::Value::Null,
            }
        };
        let actions = match self.kind {
            ModelKind::Srlib => {
                serde_json::Value::Array(self.actions.iter().map(bit).collect())
            }
            ModelKind::Crlib => serde_json::Value::Array(
                (0..PITCH_CLASS_ORDER.len())
                    .map(|class| {
                        serde_json::Value::Array(
                            (0..COUNT_ORDER.len())
                                .map(|c| bit(&self.actions[class * COUNT_ORDER.len() + c]))
                                .collect(),
                        )
                    })
                    .collect(),
            ),
        };
        serde_json::to_value(PolicyFile {
            model: self.kind,
            actions,
        })
        .expect("policy serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, serde_json::Error> {
        use serde::de::Error;
        let file: PolicyFile = serde_json::from_value(value.clone())?;
        let parse_bit = |v: &serde_json::Value| -> Result<Option<BattingAction>, serde_json::Error> {
            match v {
                serde_json::Value::Null => Ok(None),
                serde_json::Value::Number(n) => n
                    .as_u64()
                    .and_then(|u| BattingAction::from_index(u as usize))
                    .map(Some)
                    .ok_or_else(|| Error::custom("action must be 0, 1 or null")),
                _ => Err(Error::custom("action must be 0, 1 or null")),
            }
        };
        let rows: Vec<Vec<serde_json::Value>> = match (file.model, &file.actions) {
            (ModelKind::Srlib, serde_json::Value::Array(row)) => vec![row.clone()],
            (ModelKind::Crlib, serde_json::Value::Array(rows)) => rows
                .iter()
                .map(|r| match r {
                    serde_json::Value::Array(row) => Ok(row.clone()),
                    _ => Err(Error::custom("expected an array per pitch class")),
                })
                .collect::<Result<_, _>>()?,
            _ => return Err(Error::custom("actions must be an array")),
        };
        let expected_rows = match file.model {
            ModelKind::Srlib => 1,
            ModelKind::Crlib => PITCH_CLASS_ORDER.len(),
        };
        if rows.len() != expected_rows || rows.iter().any(|r| r.len() != COUNT_ORDER.len()) {
            return Err(Error::custom("policy layout does not match the model"));
        }
        let mut actions = Vec::with_capacity(file.model.nonterminal_states());
        for row in &rows {
            for v in row {
                actions.push(parse_bit(v)?);
            }
        }
        Ok(Policy {
            kind: file.model,
            actions,
        })
    }
}
