use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use atbat_mdp::atbat::ModelKind;
use atbat_mdp::mdp::SolverConfig;
use atbat_mdp::spatial::TrainConfig;
use atbat_mdp_cli::commands;

/// Fallback master seed when --seed is not given.
const SEED_ENV: &str = "ATBAT_MDP_SEED";

#[derive(Parser)]
#[command(
    name = "atbat-mdp",
    about = "At-bat Markov decision process toolkit: estimate pitcher models, solve and evaluate batting strategies, test exploitability, simulate batters",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModelArg {
    Srlib,
    Crlib,
}

impl From<ModelArg> for ModelKind {
    fn from(value: ModelArg) -> ModelKind {
        match value {
            ModelArg::Srlib => ModelKind::Srlib,
            ModelArg::Crlib => ModelKind::Crlib,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct SolverArgs {
    /// Convergence threshold on the per-sweep value change
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sweep limit before giving up on convergence
    #[arg(long = "max-iter")]
    max_iterations: Option<usize>,
    /// Discount factor in (0, 1]
    #[arg(long)]
    discount: Option<f64>,
}

impl SolverArgs {
    fn build(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(epsilon) = self.epsilon {
            cfg.epsilon = epsilon;
        }
        if let Some(max_iterations) = self.max_iterations {
            cfg.max_iterations = max_iterations;
        }
        if let Some(discount) = self.discount {
            cfg.discount = discount;
        }
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse season files and report at-bat, pitch and reject counts
    Ingest {
        /// JSON-Lines season files
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Directory for the rejects report
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic season from a pitcher spec
    Synth {
        /// Pitcher spec JSON (a built-in demonstration spec when omitted)
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Number of at-bats to generate
        #[arg(long, default_value_t = 1000)]
        atbats: usize,
        /// Batter policy: intuitive, always-swing or always-stand
        #[arg(long, default_value = "intuitive")]
        policy: String,
        #[arg(long, default_value = "batter")]
        batter_id: String,
        #[arg(long, default_value_t = 2009)]
        season: i32,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Season file name inside the output directory
        #[arg(long, default_value = "season.jsonl")]
        file_name: String,
    },
    /// Estimate a transition model from a season file
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long = "pitch-map")]
        pitch_map: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate and solve for the optimal batting strategy
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long = "pitch-map")]
        pitch_map: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a stored policy against a season file
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long = "pitch-map")]
        pitch_map: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full exploitability analysis over a train/test season pair
    Pipeline {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of independently sampled general training pools
        #[arg(long, default_value_t = 10)]
        pools: usize,
        #[arg(long = "pitch-map")]
        pitch_map: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gate and simulate batters against their profiled pitchers
    Simulate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// JSON array of batter profiles
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Repetitions per at-bat
        #[arg(long, default_value_t = 100)]
        reps: u32,
        /// Freeze believed-trajectory noise per pitch instead of redrawing
        /// each repetition
        #[arg(long = "fixed-noise")]
        fixed_noise: bool,
        #[arg(long = "pitch-map")]
        pitch_map: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    if let Some(seed) = seed {
        return Ok(seed);
    }
    if let Ok(value) = std::env::var(SEED_ENV) {
        return value
            .parse()
            .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got {value:?}"));
    }
    anyhow::bail!("a master seed is required: pass --seed or set {SEED_ENV}")
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest { files, out } => {
            let summary = commands::cmd_ingest(&files, out.as_deref())?;
            for file in &summary.files {
                println!(
                    "{}: {} at-bats, {} pitches, {} rejects",
                    file.name,
                    file.at_bats,
                    file.pitches,
                    file.rejects.len()
                );
                for reject in &file.rejects {
                    println!(
                        "  reject {} (line {}): {}",
                        reject.at_bat_id, reject.line, reject.reason
                    );
                }
            }
            Ok(())
        }
        Command::Synth {
            spec,
            atbats,
            policy,
            batter_id,
            season,
            seed,
            out,
            file_name,
        } => {
            let opts = commands::SynthOptions {
                at_bats: atbats,
                batter_policy: policy,
                batter_id,
                season,
                seed: require_seed(seed)?,
                file_name,
            };
            let path = commands::cmd_synth(spec.as_deref(), &opts, &out)?;
            println!("wrote {} at-bats to {}", opts.at_bats, path.display());
            Ok(())
        }
        Command::Estimate {
            input,
            model,
            pitch_map,
            out,
        } => {
            let map = commands::load_pitch_map(pitch_map.as_deref())?;
            let estimated = commands::cmd_estimate(&input, model.into(), &map, &out)?;
            println!(
                "estimated {} model: {} actionable states",
                estimated.kind(),
                estimated.actionable_states()
            );
            Ok(())
        }
        Command::Solve {
            input,
            model,
            pitch_map,
            solver,
            out,
        } => {
            let map = commands::load_pitch_map(pitch_map.as_deref())?;
            let outcome = commands::cmd_solve(&input, model.into(), &map, &solver.build(), &out)?;
            println!(
                "root value {:.6} ({} sweeps, converged: {})",
                outcome.root_value, outcome.iterations, outcome.converged
            );
            Ok(())
        }
        Command::Evaluate {
            input,
            policy,
            pitch_map,
            solver,
            out,
        } => {
            let map = commands::load_pitch_map(pitch_map.as_deref())?;
            let outcome = commands::cmd_evaluate(&input, &policy, &map, &solver.build(), &out)?;
            println!(
                "root value {:.6} ({} sweeps, converged: {})",
                outcome.root_value, outcome.iterations, outcome.converged
            );
            Ok(())
        }
        Command::Pipeline {
            train,
            test,
            model,
            seed,
            pools,
            pitch_map,
            solver,
            out,
        } => {
            let map = commands::load_pitch_map(pitch_map.as_deref())?;
            let opts = commands::PipelineOptions {
                kind: model.into(),
                seed: require_seed(seed)?,
                pools,
                solver: solver.build(),
                alpha: commands::DEFAULT_ALPHA,
            };
            let outcome = commands::cmd_pipeline(&train, &test, &map, &opts, &out)?;
            for result in &outcome.results {
                println!(
                    "{}: general {:.3}, specific {:.3}, exploited: {}",
                    result.pitcher_id,
                    result.j_general,
                    result.j_specific,
                    result.exploited_weak
                );
            }
            let h = &outcome.hypothesis;
            println!(
                "hypothesis: n={}, weak m={} p={:e}, strict m={} p={:e}",
                h.n, h.m_weak, h.p_value_weak, h.m_strict, h.p_value_strict
            );
            Ok(())
        }
        Command::Simulate {
            train,
            test,
            profiles,
            seed,
            reps,
            fixed_noise,
            pitch_map,
            solver,
            out,
        } => {
            let map = commands::load_pitch_map(pitch_map.as_deref())?;
            let opts = commands::SimulateOptions {
                seed: require_seed(seed)?,
                repetitions: reps,
                redraw_noise: !fixed_noise,
                solver: solver.build(),
                train: TrainConfig::default(),
            };
            let outcome = commands::cmd_simulate(&train, &test, &profiles, &map, &opts, &out)?;
            for gate in &outcome.gates {
                println!(
                    "{} vs {}: test accuracy {:.4} (chance {:.4}) admitted: {}",
                    gate.batter_id,
                    gate.pitcher_id,
                    gate.test_accuracy,
                    gate.chance_threshold,
                    gate.admitted
                );
            }
            for row in &outcome.lines {
                println!(
                    "{} vs {}: AB {}, H {}, BB {}, SO {}, AVG {:.3}",
                    row.batter_id,
                    row.pitcher_id,
                    row.line.at_bats,
                    row.line.hits,
                    row.line.walks,
                    row.line.strikeouts,
                    row.line.avg
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
