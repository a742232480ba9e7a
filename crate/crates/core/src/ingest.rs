//! Canonical pitch-by-pitch file handling: the JSON-Lines season format,
//! replay validation against the count-advance rules, raw pitch-type
//! classification, the missing-type rule, and expansion of quadratic
//! trajectory parameters into sampled position vectors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atbat::{
    advance_count, AtBatState, BattingAction, Count, PitchClass, PitchResult, TerminalOutcome,
};

/// Number of sampled positions per trajectory; three coordinates each.
pub const TRAJECTORY_SAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: unsupported schema version {version}")]
    UnsupportedVersion { line: usize, version: u32 },
}

/// Quadratic flight parameters for one pitch, in feet and seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub start_position: [f64; 3],
    pub initial_velocity: [f64; 3],
    pub acceleration: [f64; 3],
    pub flight_time: f64,
}

impl TrajectoryParams {
    pub fn is_finite(&self) -> bool {
        self.flight_time > 0.0
            && self.flight_time.is_finite()
            && self
                .start_position
                .iter()
                .chain(&self.initial_velocity)
                .chain(&self.acceleration)
                .all(|v| v.is_finite())
    }
}

/// A sampled trajectory: consecutive (x, y, z) triples in time order,
/// 300 numbers for the default 100 samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.points.len()
    }
}

/// Positions sampled at `m` evenly spaced times over [0, flight_time],
/// endpoints included: position(t) = start + velocity t + acceleration t²/2.
pub fn expand_trajectory(params: &TrajectoryParams, m: usize) -> Trajectory {
    assert!(m >= 2, "need at least the two endpoints");
    let mut points = Vec::with_capacity(3 * m);
    for k in 0..m {
        let t = k as f64 * params.flight_time / (m - 1) as f64;
        for axis in 0..3 {
            points.push(
                params.start_position[axis]
                    + params.initial_velocity[axis] * t
                    + 0.5 * params.acceleration[axis] * t * t,
            );
        }
    }
    Trajectory { points }
}

/// One pitch as recorded: the count before it, what was thrown, what the
/// batter did, and what happened.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchRecord {
    pub seq: u32,
    pub count: Count,
    pub raw_pitch_type: Option<String>,
    pub action: BattingAction,
    pub result: PitchResult,
    pub trajectory: Option<TrajectoryParams>,
}

/// One validated at-bat. Replaying `pitches` through the count-advance
/// rules ends exactly in `final_outcome`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtBatRecord {
    pub at_bat_id: String,
    pub pitcher_id: String,
    pub batter_id: String,
    pub season: i32,
    pub pitches: Vec<PitchRecord>,
    pub final_outcome: TerminalOutcome,
}

/// Why an at-bat was routed to the rejects report instead of the dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RejectReason {
    UnmodeledOutcome(String),
    IllegalCount { seq: u32, balls: u8, strikes: u8 },
    NonIncreasingSeq { seq: u32 },
    UnknownAction(String),
    UnknownResult(String),
    WalkFromContact { seq: u32 },
    BadTrajectory { seq: u32 },
    EmptyPitches,
    ReplayMismatch { detail: String },
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::UnmodeledOutcome(o) => write!(f, "unmodeled outcome {o:?}"),
            RejectReason::IllegalCount { seq, balls, strikes } => {
                write!(f, "pitch {seq}: illegal count {balls}-{strikes}")
            }
            RejectReason::NonIncreasingSeq { seq } => {
                write!(f, "pitch sequence not strictly increasing at {seq}")
            }
            RejectReason::UnknownAction(a) => write!(f, "unknown action {a:?}"),
            RejectReason::UnknownResult(r) => write!(f, "unknown result {r:?}"),
            RejectReason::WalkFromContact { seq } => {
                write!(f, "pitch {seq}: in-play result cannot produce a walk")
            }
            RejectReason::BadTrajectory { seq } => {
                write!(f, "pitch {seq}: non-finite or non-positive trajectory parameters")
            }
            RejectReason::EmptyPitches => write!(f, "at-bat has no pitches"),
            RejectReason::ReplayMismatch { detail } => write!(f, "replay mismatch: {detail}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectedAtBat {
    pub at_bat_id: String,
    pub line: usize,
    pub reason: RejectReason,
}

/// A parsed season: the accepted at-bats plus the rejects report.
#[derive(Debug, Default)]
pub struct Season {
    pub at_bats: Vec<AtBatRecord>,
    pub rejects: Vec<RejectedAtBat>,
}

impl Season {
    pub fn pitch_count(&self) -> usize {
        self.at_bats.iter().map(|ab| ab.pitches.len()).sum()
    }
}

// --- wire format ------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LineTraj {
    p0: [f64; 3],
    v0: [f64; 3],
    a: [f64; 3],
    t: f64,
}

#[derive(Serialize, Deserialize)]
struct LinePitch {
    seq: u32,
    balls: u8,
    strikes: u8,
    #[serde(rename = "type")]
    pitch_type: Option<String>,
    action: String,
    result: String,
    traj: Option<LineTraj>,
}

#[derive(Serialize, Deserialize)]
struct LineAtBat {
    v: u32,
    at_bat_id: String,
    pitcher_id: String,
    batter_id: String,
    season: i32,
    outcome: String,
    pitches: Vec<LinePitch>,
}

fn convert_at_bat(raw: LineAtBat) -> Result<AtBatRecord, RejectReason> {
    let outcome = TerminalOutcome::from_code(&raw.outcome)
        .ok_or_else(|| RejectReason::UnmodeledOutcome(raw.outcome.clone()))?;
    if raw.pitches.is_empty() {
        return Err(RejectReason::EmptyPitches);
    }
    let mut pitches = Vec::with_capacity(raw.pitches.len());
    let mut last_seq = 0u32;
    for p in raw.pitches {
        if p.seq == 0 || (last_seq > 0 && p.seq <= last_seq) {
            return Err(RejectReason::NonIncreasingSeq { seq: p.seq });
        }
        last_seq = p.seq;
        let count = Count::new(p.balls, p.strikes).map_err(|_| RejectReason::IllegalCount {
            seq: p.seq,
            balls: p.balls,
            strikes: p.strikes,
        })?;
        let action = match p.action.as_str() {
            "stand" => BattingAction::Stand,
            "swing" => BattingAction::Swing,
            other => return Err(RejectReason::UnknownAction(other.to_string())),
        };
        let result = match p.result.as_str() {
            "ball" => PitchResult::Ball,
            "strike" => PitchResult::CalledOrSwingingStrike,
            "foul" => PitchResult::Foul,
            "in_play" => {
                if outcome == TerminalOutcome::Walk {
                    return Err(RejectReason::WalkFromContact { seq: p.seq });
                }
                PitchResult::InPlay(outcome)
            }
            other => return Err(RejectReason::UnknownResult(other.to_string())),
        };
        let trajectory = match p.traj {
            Some(t) => {
                let params = TrajectoryParams {
                    start_position: t.p0,
                    initial_velocity: t.v0,
                    acceleration: t.a,
                    flight_time: t.t,
                };
                if !params.is_finite() {
                    return Err(RejectReason::BadTrajectory { seq: p.seq });
                }
                Some(params)
            }
            None => None,
        };
        pitches.push(PitchRecord {
            seq: p.seq,
            count,
            raw_pitch_type: p.pitch_type,
            action,
            result,
            trajectory,
        });
    }
    let record = AtBatRecord {
        at_bat_id: raw.at_bat_id,
        pitcher_id: raw.pitcher_id,
        batter_id: raw.batter_id,
        season: raw.season,
        pitches,
        final_outcome: outcome,
    };
    check_replay(&record)?;
    Ok(record)
}

/// Replays the pitch results from 0-0: every recorded count must match the
/// replayed one, every pitch but the last must leave the at-bat open, and
/// the last must close it with the recorded outcome.
fn check_replay(record: &AtBatRecord) -> Result<(), RejectReason> {
    let mut current = Count::new(0, 0).expect("0-0 is legal");
    let last = record.pitches.len() - 1;
    for (k, pitch) in record.pitches.iter().enumerate() {
        if pitch.count != current {
            return Err(RejectReason::ReplayMismatch {
                detail: format!(
                    "pitch {} recorded at {} but replay gives {}",
                    pitch.seq, pitch.count, current
                ),
            });
        }
        match advance_count(current, pitch.result) {
            AtBatState::Nonterminal { count, .. } => {
                if k == last {
                    return Err(RejectReason::ReplayMismatch {
                        detail: format!("last pitch {} leaves the at-bat open", pitch.seq),
                    });
                }
                current = count;
            }
            AtBatState::Terminal(t) => {
                if k != last {
                    return Err(RejectReason::ReplayMismatch {
                        detail: format!("pitch {} ends the at-bat early", pitch.seq),
                    });
                }
                if t != record.final_outcome {
                    return Err(RejectReason::ReplayMismatch {
                        detail: format!(
                            "replay ends in {} but outcome says {}",
                            t.code(),
                            record.final_outcome.code()
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Parses a JSON-Lines season file. Structurally broken lines are hard
/// errors; at-bats that parse but violate the domain rules land in the
/// rejects report.
pub fn parse_season(path: &Path) -> Result<Season, IngestError> {
    parse_season_reader(File::open(path)?)
}

pub fn parse_season_reader<R: Read>(reader: R) -> Result<Season, IngestError> {
    let mut season = Season::default();
    for (index, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: LineAtBat =
            serde_json::from_str(&line).map_err(|e| IngestError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        if raw.v != 1 {
            return Err(IngestError::UnsupportedVersion {
                line: line_no,
                version: raw.v,
            });
        }
        let at_bat_id = raw.at_bat_id.clone();
        match convert_at_bat(raw) {
            Ok(record) => season.at_bats.push(record),
            Err(reason) => {
                log::debug!("rejecting at-bat {at_bat_id} (line {line_no}): {reason}");
                season.rejects.push(RejectedAtBat {
                    at_bat_id,
                    line: line_no,
                    reason,
                });
            }
        }
    }
    Ok(season)
}

fn to_line(record: &AtBatRecord) -> LineAtBat {
    LineAtBat {
        v: 1,
        at_bat_id: record.at_bat_id.clone(),
        pitcher_id: record.pitcher_id.clone(),
        batter_id: record.batter_id.clone(),
        season: record.season,
        outcome: record.final_outcome.code().to_string(),
        pitches: record
            .pitches
            .iter()
            .map(|p| LinePitch {
                seq: p.seq,
                balls: p.count.balls(),
                strikes: p.count.strikes(),
                pitch_type: p.raw_pitch_type.clone(),
                action: match p.action {
                    BattingAction::Stand => "stand".to_string(),
                    BattingAction::Swing => "swing".to_string(),
                },
                result: match p.result {
                    PitchResult::Ball => "ball".to_string(),
                    PitchResult::CalledOrSwingingStrike => "strike".to_string(),
                    PitchResult::Foul => "foul".to_string(),
                    PitchResult::InPlay(_) => "in_play".to_string(),
                },
                traj: p.trajectory.map(|t| LineTraj {
                    p0: t.start_position,
                    v0: t.initial_velocity,
                    a: t.acceleration,
                    t: t.flight_time,
                }),
            })
            .collect(),
    }
}

/// Writes at-bats in the JSON-Lines format, one per line.
pub fn write_season<W: Write>(mut writer: W, at_bats: &[AtBatRecord]) -> std::io::Result<()> {
    for record in at_bats {
        serde_json::to_writer(&mut writer, &to_line(record))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_season_file(path: &Path, at_bats: &[AtBatRecord]) -> std::io::Result<()> {
    write_season(File::create(path)?, at_bats)
}

// --- pitch classification ----------------------------------------------------

/// Raw pitch-type code to pitch-class mapping. Raw vocabularies drift
/// between seasons, so the table is a config input; unmapped codes
/// classify to nothing.
#[derive(Debug, Clone)]
pub struct PitchClassMap {
    map: HashMap<String, PitchClass>,
}

impl Default for PitchClassMap {
    fn default() -> Self {
        let mut map = HashMap::new();
        for code in ["FA", "FF", "FT", "FC", "FS"] {
            map.insert(code.to_string(), PitchClass::Fastball);
        }
        for code in ["CU", "CH", "EP", "SC", "KC"] {
            map.insert(code.to_string(), PitchClass::CurveChange);
        }
        for code in ["SL", "SI", "ST"] {
            map.insert(code.to_string(), PitchClass::SinkSlide);
        }
        for code in ["KN", "UN", "PO", "IN"] {
            map.insert(code.to_string(), PitchClass::KnuckleUnknown);
        }
        PitchClassMap { map }
    }
}

impl PitchClassMap {
    pub fn from_table(table: HashMap<String, PitchClass>) -> Self {
        PitchClassMap { map: table }
    }

    /// Reads `{"FF": "fastball", ...}` from JSON.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, serde_json::Error> {
        let table: HashMap<String, PitchClass> = serde_json::from_value(value.clone())?;
        Ok(PitchClassMap { map: table })
    }

    pub fn lookup(&self, code: &str) -> Option<PitchClass> {
        self.map.get(code).copied()
    }
}

/// Classifies a raw pitch-type code. Missing and unmapped codes yield
/// nothing; unmapped codes are logged once per call site.
pub fn classify_pitch(raw: Option<&str>, map: &PitchClassMap) -> Option<PitchClass> {
    let code = raw?;
    match map.lookup(code) {
        Some(class) => Some(class),
        None => {
            log::debug!("unmapped pitch-type code {code:?}");
            None
        }
    }
}

// --- effective sequence (missing-type rule) ----------------------------------

/// One pitch of an at-bat with its replayed count and classified type.
///
/// This is the view transition counting consumes: a pitch with no class
/// still advances the count (so later source counts reflect it) but can
/// never be the source of a class-bearing transition.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePitch {
    pub seq: u32,
    pub count: Count,
    pub class: Option<PitchClass>,
    pub action: BattingAction,
    pub result: PitchResult,
    pub trajectory: Option<TrajectoryParams>,
}

/// Applies the missing-type rule to an accepted at-bat, yielding the pitch
/// sequence with replayed counts and classified types.
pub fn apply_missing_type_rule(record: &AtBatRecord, map: &PitchClassMap) -> Vec<EffectivePitch> {
    record
        .pitches
        .iter()
        .map(|p| EffectivePitch {
            seq: p.seq,
            count: p.count,
            class: classify_pitch(p.raw_pitch_type.as_deref(), map),
            action: p.action,
            result: p.result,
            trajectory: p.trajectory,
        })
        .collect()
}
