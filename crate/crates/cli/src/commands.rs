//! The seven subcommands as library functions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use atbat_mdp::atbat::{BattingAction, ModelKind};
use atbat_mdp::estimation::{
    build_general_pools, count_classes, estimate_transitions, GeneralPool,
};
use atbat_mdp::exploit::{
    compare_strategies, intuitive_policy, run_hypothesis_test, ComparisonLabels, ExploitResult,
    HypothesisReport,
};
use atbat_mdp::ingest::{
    parse_season, write_season_file, AtBatRecord, PitchClassMap, RejectedAtBat, Season,
};
use atbat_mdp::mdp::{
    policy_evaluation, root_value, value_iteration, Policy, SolverConfig, TransitionModel,
};
use atbat_mdp::seed;
use atbat_mdp::simulate::{accumulate_stats, count_skips, simulate_atbat, SimConfig, SimOutcome};
use atbat_mdp::spatial::{
    gate_batter, labeled_from_season, train_classifier, BatterProfile, TrainConfig,
};
use atbat_mdp::synthgen::{
    constant_policy, generate_season, GenerateConfig, OutcomeDist, SyntheticPitcherSpec,
};

use crate::report;

/// Default significance level for the exploitability hypothesis report.
pub const DEFAULT_ALPHA: f64 = 0.05;

pub fn load_pitch_map(path: Option<&Path>) -> Result<PitchClassMap> {
    match path {
        None => Ok(PitchClassMap::default()),
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("stage pitch-map: reading {}", path.display()))?;
            let value: serde_json::Value = serde_json::from_str(&raw)
                .with_context(|| format!("stage pitch-map: parsing {}", path.display()))?;
            PitchClassMap::from_json(&value)
                .with_context(|| format!("stage pitch-map: interpreting {}", path.display()))
        }
    }
}

fn parse_stage(path: &Path, stage: &str) -> Result<Season> {
    parse_season(path).with_context(|| format!("stage {stage}: {}", path.display()))
}

fn group_by_pitcher(at_bats: Vec<AtBatRecord>) -> BTreeMap<String, Vec<AtBatRecord>> {
    let mut groups: BTreeMap<String, Vec<AtBatRecord>> = BTreeMap::new();
    for at_bat in at_bats {
        groups.entry(at_bat.pitcher_id.clone()).or_default().push(at_bat);
    }
    groups
}

fn season_label(at_bats: &[AtBatRecord]) -> i32 {
    at_bats.first().map(|ab| ab.season).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct FileSummary {
    pub name: String,
    pub at_bats: usize,
    pub pitches: usize,
    pub rejects: Vec<RejectedAtBat>,
}

#[derive(Debug, Default)]
pub struct IngestSummary {
    pub files: Vec<FileSummary>,
}

impl IngestSummary {
    pub fn total_rejects(&self) -> usize {
        self.files.iter().map(|f| f.rejects.len()).sum()
    }
}

/// Parses each input file and summarizes it; writes a rejects report when
/// an output directory is given.
pub fn cmd_ingest(inputs: &[PathBuf], out: Option<&Path>) -> Result<IngestSummary> {
    let mut summary = IngestSummary::default();
    let mut all_rejects = Vec::new();
    for path in inputs {
        let season = parse_stage(path, "ingest")?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        for r in &season.rejects {
            all_rejects.push((name.clone(), r.clone()));
        }
        summary.files.push(FileSummary {
            name,
            at_bats: season.at_bats.len(),
            pitches: season.pitch_count(),
            rejects: season.rejects,
        });
    }
    if let Some(out) = out {
        report::write_file(
            &out.join("rejects.csv"),
            &report::rejects_report_csv(&all_rejects),
        )?;
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub at_bats: usize,
    pub batter_policy: String,
    pub batter_id: String,
    pub season: i32,
    pub seed: u64,
    pub file_name: String,
}

/// A small demonstration pitcher used when no spec file is supplied.
pub fn demo_spec() -> SyntheticPitcherSpec {
    SyntheticPitcherSpec::uniform(
        "demo-pitcher",
        OutcomeDist::ball_strike(0.55, 0.45),
        OutcomeDist {
            strike: 0.25,
            foul: 0.22,
            out: 0.33,
            single: 0.12,
            double: 0.04,
            triple: 0.01,
            home_run: 0.03,
            ..OutcomeDist::ZERO
        },
    )
}

fn named_policy(name: &str, kind: ModelKind) -> Result<Policy> {
    match name {
        "intuitive" => Ok(intuitive_policy(kind)),
        "always-swing" => Ok(constant_policy(kind, BattingAction::Swing)),
        "always-stand" => Ok(constant_policy(kind, BattingAction::Stand)),
        other => bail!("stage synth: unknown batter policy {other:?} (expected intuitive, always-swing or always-stand)"),
    }
}

/// Generates a synthetic season file and records the spec it came from.
pub fn cmd_synth(spec_path: Option<&Path>, opts: &SynthOptions, out: &Path) -> Result<PathBuf> {
    let spec = match spec_path {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("stage synth: reading {}", path.display()))?;
            serde_json::from_str(&raw)
                .with_context(|| format!("stage synth: parsing {}", path.display()))?
        }
        None => demo_spec(),
    };
    let policy = named_policy(&opts.batter_policy, ModelKind::Srlib)?;
    let season = generate_season(
        &spec,
        opts.at_bats,
        &policy,
        &GenerateConfig {
            batter_id: opts.batter_id.clone(),
            season: opts.season,
            seed: opts.seed,
        },
    )
    .context("stage synth: generating season")?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("stage synth: creating {}", out.display()))?;
    let season_path = out.join(&opts.file_name);
    write_season_file(&season_path, &season)
        .with_context(|| format!("stage synth: writing {}", season_path.display()))?;
    report::write_json(&out.join("synth_spec.json"), &serde_json::to_value(&spec)?)?;
    Ok(season_path)
}

// ---------------------------------------------------------------------------
// estimate / solve / evaluate
// ---------------------------------------------------------------------------

/// Estimates a transition model from a season file and writes it as JSON
/// plus a CSV view.
pub fn cmd_estimate(
    input: &Path,
    kind: ModelKind,
    map: &PitchClassMap,
    out: &Path,
) -> Result<TransitionModel> {
    let season = parse_stage(input, "estimate")?;
    let model = estimate_transitions(&season.at_bats, kind, map);
    report::write_json(&out.join("model.json"), &model.to_json())?;
    report::write_file(&out.join("model.csv"), &model.to_csv())?;
    Ok(model)
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub root_value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates, solves for the optimal batting strategy and writes model,
/// policy and value artifacts.
pub fn cmd_solve(
    input: &Path,
    kind: ModelKind,
    map: &PitchClassMap,
    solver: &SolverConfig,
    out: &Path,
) -> Result<SolveOutcome> {
    let season = parse_stage(input, "solve")?;
    let model = estimate_transitions(&season.at_bats, kind, map);
    let (policy, values) = value_iteration(&model, solver).context("stage solve: value iteration")?;
    let class_counts = count_classes(&season.at_bats, map);
    let root = root_value(kind, &values, &class_counts).context("stage solve: root value")?;
    report::write_json(&out.join("model.json"), &model.to_json())?;
    report::write_json(&out.join("policy.json"), &policy.to_json())?;
    report::write_json(&out.join("values.json"), &serde_json::to_value(&values)?)?;
    Ok(SolveOutcome {
        root_value: root,
        converged: values.converged,
        iterations: values.iterations,
    })
}

/// Evaluates a stored policy against a season file's estimated model.
pub fn cmd_evaluate(
    input: &Path,
    policy_path: &Path,
    map: &PitchClassMap,
    solver: &SolverConfig,
    out: &Path,
) -> Result<SolveOutcome> {
    let season = parse_stage(input, "evaluate")?;
    let raw = std::fs::read_to_string(policy_path)
        .with_context(|| format!("stage evaluate: reading {}", policy_path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .with_context(|| format!("stage evaluate: parsing {}", policy_path.display()))?;
    let policy = Policy::from_json(&value)
        .with_context(|| format!("stage evaluate: interpreting {}", policy_path.display()))?;
    let model = estimate_transitions(&season.at_bats, policy.kind(), map);
    let values =
        policy_evaluation(&model, &policy, solver).context("stage evaluate: policy evaluation")?;
    let class_counts = count_classes(&season.at_bats, map);
    let root =
        root_value(policy.kind(), &values, &class_counts).context("stage evaluate: root value")?;
    report::write_json(&out.join("values.json"), &serde_json::to_value(&values)?)?;
    Ok(SolveOutcome {
        root_value: root,
        converged: values.converged,
        iterations: values.iterations,
    })
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub kind: ModelKind,
    pub seed: u64,
    pub pools: usize,
    pub solver: SolverConfig,
    pub alpha: f64,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub results: Vec<ExploitResult>,
    pub hypothesis: HypothesisReport,
}

/// The full exploitability analysis: pitcher-specific strategies from the
/// training season, the pool-averaged general strategy, evaluation of both
/// on the test season, and the population hypothesis test.
pub fn cmd_pipeline(
    train: &Path,
    test: &Path,
    map: &PitchClassMap,
    opts: &PipelineOptions,
    out: &Path,
) -> Result<PipelineOutcome> {
    let train_season = parse_stage(train, "pipeline-parse-train")?;
    let test_season = parse_stage(test, "pipeline-parse-test")?;
    if test_season.at_bats.is_empty() {
        bail!("stage pipeline-parse-test: no at-bats in {}", test.display());
    }
    let train_by_pitcher = group_by_pitcher(train_season.at_bats);
    let test_by_pitcher = group_by_pitcher(test_season.at_bats);
    let pitchers: Vec<String> = train_by_pitcher
        .keys()
        .filter(|p| test_by_pitcher.contains_key(*p))
        .cloned()
        .collect();
    if pitchers.is_empty() {
        bail!("stage pipeline-pair: no pitcher appears in both seasons");
    }

    let pools: Vec<GeneralPool> =
        build_general_pools(&train_by_pitcher, opts.seed, opts.pools)
            .context("stage pipeline-pools: building general pools")?;
    for (k, pool) in pools.iter().enumerate() {
        let pool_model = estimate_transitions(&pool.at_bats, opts.kind, map);
        let (pool_policy, _) = value_iteration(&pool_model, &opts.solver)
            .with_context(|| format!("stage pipeline-pools: solving pool {k}"))?;
        report::write_json(
            &out.join(format!("pools/pool-{k:02}.model.json")),
            &pool_model.to_json(),
        )?;
        report::write_json(
            &out.join(format!("pools/pool-{k:02}.policy.json")),
            &pool_policy.to_json(),
        )?;
    }

    let mut results = Vec::new();
    for pitcher in &pitchers {
        let train_at_bats = &train_by_pitcher[pitcher];
        let test_at_bats = &test_by_pitcher[pitcher];
        let train_model = estimate_transitions(train_at_bats, opts.kind, map);
        let (specific_policy, train_values) = value_iteration(&train_model, &opts.solver)
            .with_context(|| format!("stage pipeline-solve: pitcher {pitcher}"))?;
        let test_model = estimate_transitions(test_at_bats, opts.kind, map);
        let test_class_counts = count_classes(test_at_bats, map);
        let result = compare_strategies(
            &test_model,
            &specific_policy,
            &pools,
            &test_class_counts,
            map,
            &opts.solver,
            ComparisonLabels {
                pitcher_id: pitcher.clone(),
                train_season: season_label(train_at_bats),
                test_season: season_label(test_at_bats),
            },
        )
        .with_context(|| format!("stage pipeline-evaluate: pitcher {pitcher}"))?;

        report::write_json(
            &out.join(format!("models/{pitcher}-train.model.json")),
            &train_model.to_json(),
        )?;
        report::write_json(
            &out.join(format!("models/{pitcher}-test.model.json")),
            &test_model.to_json(),
        )?;
        report::write_json(
            &out.join(format!("policies/{pitcher}-specific.policy.json")),
            &specific_policy.to_json(),
        )?;
        report::write_json(
            &out.join(format!("values/{pitcher}-train.values.json")),
            &serde_json::to_value(&train_values)?,
        )?;
        results.push(result);
    }

    let hypothesis = run_hypothesis_test(&results, opts.alpha)
        .context("stage pipeline-hypothesis: aggregating results")?;
    report::write_file(&out.join("exploit_report.csv"), &report::exploit_report_csv(&results))?;
    report::write_file(
        &out.join("hypothesis.csv"),
        &report::hypothesis_report_csv(&hypothesis),
    )?;
    Ok(PipelineOutcome { results, hypothesis })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
pub struct ProfileEntry {
    pub batter_id: String,
    pub pitcher_id: String,
    pub strikeouts: u64,
    pub plate_appearances: u64,
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub seed: u64,
    pub repetitions: u32,
    pub redraw_noise: bool,
    pub solver: SolverConfig,
    pub train: TrainConfig,
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub gates: Vec<report::GateRow>,
    pub lines: Vec<report::BattingRow>,
}

struct PitcherContext {
    classifier: atbat_mdp::spatial::SpatialClassifier,
    train_accuracy: f64,
    policy: Policy,
    test_model: TransitionModel,
    test_labeled: Vec<atbat_mdp::spatial::LabeledTrajectory>,
}

/// Trains per-pitcher classifiers and strategies on the training season,
/// gates each profiled batter by believed-trajectory accuracy on the test
/// season, and simulates the admitted batters' test at-bats.
pub fn cmd_simulate(
    train: &Path,
    test: &Path,
    profiles_path: &Path,
    map: &PitchClassMap,
    opts: &SimulateOptions,
    out: &Path,
) -> Result<SimulateOutcome> {
    let train_season = parse_stage(train, "simulate-parse-train")?;
    let test_season = parse_stage(test, "simulate-parse-test")?;
    let raw = std::fs::read_to_string(profiles_path)
        .with_context(|| format!("stage simulate-profiles: reading {}", profiles_path.display()))?;
    let profiles: Vec<ProfileEntry> = serde_json::from_str(&raw)
        .with_context(|| format!("stage simulate-profiles: parsing {}", profiles_path.display()))?;
    if profiles.is_empty() {
        bail!("stage simulate-profiles: no batter profiles given");
    }

    let train_by_pitcher = group_by_pitcher(train_season.at_bats);
    let test_by_pitcher = group_by_pitcher(test_season.at_bats);

    let mut contexts: BTreeMap<String, PitcherContext> = BTreeMap::new();
    for entry in &profiles {
        if contexts.contains_key(&entry.pitcher_id) {
            continue;
        }
        let pitcher = &entry.pitcher_id;
        let train_at_bats = train_by_pitcher
            .get(pitcher)
            .with_context(|| format!("stage simulate-train: pitcher {pitcher} not in training season"))?;
        let test_at_bats = test_by_pitcher
            .get(pitcher)
            .with_context(|| format!("stage simulate-test: pitcher {pitcher} not in test season"))?;
        let train_labeled = labeled_from_season(train_at_bats, map);
        let classifier = train_classifier(&train_labeled, &opts.train)
            .with_context(|| format!("stage simulate-classifier: pitcher {pitcher}"))?;
        let train_accuracy = classifier
            .accuracy(&train_labeled)
            .with_context(|| format!("stage simulate-classifier: pitcher {pitcher}"))?;
        let train_model = estimate_transitions(train_at_bats, ModelKind::Crlib, map);
        let (policy, _) = value_iteration(&train_model, &opts.solver)
            .with_context(|| format!("stage simulate-solve: pitcher {pitcher}"))?;
        let test_model = estimate_transitions(test_at_bats, ModelKind::Crlib, map);
        let test_labeled = labeled_from_season(test_at_bats, map);
        report::write_json(
            &out.join(format!("classifiers/{pitcher}.classifier.json")),
            &serde_json::to_value(&classifier)?,
        )?;
        report::write_json(
            &out.join(format!("policies/{pitcher}-specific.policy.json")),
            &policy.to_json(),
        )?;
        contexts.insert(
            pitcher.clone(),
            PitcherContext {
                classifier,
                train_accuracy,
                policy,
                test_model,
                test_labeled,
            },
        );
    }

    let mut gates = Vec::new();
    let mut lines = Vec::new();
    for entry in &profiles {
        let context = &contexts[&entry.pitcher_id];
        let profile = BatterProfile::new(&entry.batter_id, entry.strikeouts, entry.plate_appearances)
            .with_context(|| format!("stage simulate-gate: batter {}", entry.batter_id))?;
        let pair = format!("{}|{}", entry.batter_id, entry.pitcher_id);
        let mut gate_rng = seed::rng(seed::derive(opts.seed, "gate", &pair));
        let (test_accuracy, admitted) = gate_batter(
            &context.classifier,
            &context.test_labeled,
            &profile,
            &mut gate_rng,
        )
        .with_context(|| format!("stage simulate-gate: batter {}", entry.batter_id))?;
        gates.push(report::GateRow {
            batter_id: entry.batter_id.clone(),
            pitcher_id: entry.pitcher_id.clone(),
            alpha: profile.alpha,
            train_accuracy: context.train_accuracy,
            test_accuracy,
            chance_threshold: context.classifier.chance_threshold(),
            admitted,
        });
        if !admitted {
            continue;
        }

        let at_bats: Vec<&AtBatRecord> = test_by_pitcher[&entry.pitcher_id]
            .iter()
            .filter(|ab| ab.batter_id == entry.batter_id)
            .collect();
        let sim_cfg = SimConfig {
            repetitions: opts.repetitions,
            seed: seed::derive(opts.seed, "simulate", &pair),
            redraw_noise: opts.redraw_noise,
        };
        let mut outcomes: Vec<SimOutcome> = Vec::new();
        for at_bat in &at_bats {
            outcomes.extend(
                simulate_atbat(
                    at_bat,
                    &context.policy,
                    &context.test_model,
                    &context.classifier,
                    &profile,
                    &sim_cfg,
                )
                .with_context(|| {
                    format!("stage simulate-run: at-bat {}", at_bat.at_bat_id)
                })?,
            );
        }
        let line = accumulate_stats(&outcomes);
        let (skipped_exhausted, skipped_unseen) = count_skips(&outcomes);
        lines.push(report::BattingRow {
            batter_id: entry.batter_id.clone(),
            pitcher_id: entry.pitcher_id.clone(),
            line,
            skipped_exhausted,
            skipped_unseen,
        });
    }

    report::write_file(&out.join("gate_report.csv"), &report::gate_report_csv(&gates))?;
    report::write_file(
        &out.join("batting_report.csv"),
        &report::batting_report_csv(&lines),
    )?;
    Ok(SimulateOutcome { gates, lines })
}
