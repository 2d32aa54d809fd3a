//! Command-line front end: benchmark batches, parameter-sweep ablations,
//! diversity profiling, and the flatland ALife scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dxnn::benchmarks::runner::BenchmarkProblem;
use dxnn::experiments::{
    ablation_csv, diversity_csv, parse_config_file, parse_variant, run_ablation,
    run_diversity_profile, run_experiment, runs_csv, summary_csv, ExperimentConfig, SweepSpec,
};
use dxnn::flatland::{run_scenario, FlatlandConfig, Scenario, Species};

#[derive(Parser)]
#[command(name = "dxnn", about = "Memetic TWEANN evolution engine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Xor,
    DpbVel,
    DpbNovelUndamped,
    DpbNovelDamped,
}

impl VariantArg {
    fn problem(self) -> BenchmarkProblem {
        let tag = match self {
            VariantArg::Xor => "xor",
            VariantArg::DpbVel => "dpb-vel",
            VariantArg::DpbNovelUndamped => "dpb-novel-undamped",
            VariantArg::DpbNovelDamped => "dpb-novel-damped",
        };
        parse_variant(tag).expect("the variant tags are exhaustive")
    }
}

#[derive(Args)]
struct CommonRunArgs {
    /// key=value config file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of independent runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Experiment seed; each run derives its own stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Population limit.
    #[arg(long)]
    population: Option<usize>,
    /// BaseMaxMistakes override for the tuning phase.
    #[arg(long)]
    base_max_mistakes: Option<u32>,
    /// Output directory for the CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepArg {
    BaseMaxMistakes,
    PopSize,
    WeightRim,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Food,
    Poison,
    Predprey,
}

impl ScenarioArg {
    fn scenario(self) -> Scenario {
        match self {
            ScenarioArg::Food => Scenario::Food,
            ScenarioArg::Poison => Scenario::FoodPoison,
            ScenarioArg::Predprey => Scenario::PredatorPrey,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark batch and write per-run and summary CSVs.
    Bench {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Sweep one parameter and write a per-value summary CSV.
    Ablate {
        #[arg(long, value_enum)]
        sweep: SweepArg,
        /// Benchmark to sweep over; defaults to the sweep's usual subject.
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Profile population topological diversity generation by generation.
    Diversity {
        /// Activation function the population is restricted to.
        #[arg(long, default_value = "sigmoid")]
        activation: String,
        #[arg(long, default_value_t = 100)]
        population: usize,
        #[arg(long, default_value_t = 20)]
        generations: u32,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a flatland artificial-life scenario.
    Alife {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        /// Sensor wiring version (odd: Range+Color, even: Range only).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        version: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluation cap; defaults to the scenario's standard budget.
        #[arg(long)]
        evaluations: Option<usize>,
        /// Robots per species.
        #[arg(long)]
        population: Option<usize>,
        /// Also write a replay event log.
        #[arg(long)]
        replay: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn build_experiment_config(
    problem: BenchmarkProblem,
    common: &CommonRunArgs,
) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::new(problem);
    if let Some(path) = &common.config {
        let pairs = parse_config_file(path).map_err(|e| e.to_string())?;
        cfg.apply_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .map_err(|e| e.to_string())?;
    }
    // Flags win over the config file.
    if let Some(runs) = common.runs {
        cfg.runs = runs;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(p) = common.population {
        cfg.population_limit = p;
    }
    if let Some(b) = common.base_max_mistakes {
        cfg.base_max_mistakes = Some(b);
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Bench { variant, common } => {
            let cfg = build_experiment_config(variant.problem(), &common)?;
            let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let runs_path = write_file(&common.out, "runs.csv", &runs_csv(&report.records))?;
            let summary_path =
                write_file(&common.out, "summary.csv", &summary_csv(&report.summary))?;
            println!(
                "solved {}/{} | mean evaluations {:.1} | mean neurons {:.2} | failure rate {:.1}%",
                report.summary.solved,
                report.summary.runs,
                report.summary.mean_evaluations,
                report.summary.mean_neurons,
                report.summary.failure_rate * 100.0
            );
            println!("wrote {} and {}", runs_path.display(), summary_path.display());
        }
        Command::Ablate { sweep, variant, common } => {
            let (spec, default_variant) = match sweep {
                SweepArg::BaseMaxMistakes => {
                    (SweepSpec::default_base_max_mistakes(), VariantArg::DpbNovelDamped)
                }
                SweepArg::PopSize => (SweepSpec::default_pop_size(), VariantArg::Xor),
                SweepArg::WeightRim => {
                    (SweepSpec::default_weight_rim(), VariantArg::DpbNovelDamped)
                }
            };
            let problem = variant.unwrap_or(default_variant).problem();
            let cfg = build_experiment_config(problem, &common)?;
            let rows = run_ablation(&cfg, &spec).map_err(|e| e.to_string())?;
            let path = write_file(&common.out, "ablation.csv", &ablation_csv(&rows))?;
            for row in &rows {
                println!(
                    "value {:>10}: solved {}/{} | mean evaluations {:.1} | mean neurons {:.2}",
                    row.value,
                    row.summary.solved,
                    row.summary.runs,
                    row.summary.mean_evaluations,
                    row.summary.mean_neurons
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Diversity { activation, population, generations, reps, seed, out } => {
            let profile =
                run_diversity_profile(&activation, population, generations, reps, seed)
                    .map_err(|e| e.to_string())?;
            let path = write_file(&out, "diversity.csv", &diversity_csv(&profile))?;
            for (g, d) in profile.average.iter().enumerate() {
                println!("generation {g:>3}: avg diversity {d:.2}");
            }
            println!("wrote {}", path.display());
        }
        Command::Alife { scenario, version, seed, evaluations, population, replay, out } => {
            let mut cfg = FlatlandConfig::new(scenario.scenario(), version, seed);
            if let Some(cap) = evaluations {
                cfg.evaluation_cap = cap;
            }
            if let Some(p) = population {
                cfg.population = p;
            }
            cfg.record_replay = replay;
            let result = run_scenario(&cfg).map_err(|e| e.to_string())?;
            let mut trace = String::from(
                "evaluation,species,avg_fitness,avg_neurons,diversity\n",
            );
            for row in &result.traces {
                trace.push_str(&format!(
                    "{},{},{:.3},{:.3},{}\n",
                    row.evaluation,
                    row.species.tag(),
                    row.avg_fitness,
                    row.avg_neurons,
                    row.diversity
                ));
            }
            let trace_path = write_file(&out, "trace.csv", &trace)?;
            println!(
                "{} evaluations over {} world steps",
                result.evaluations, result.steps
            );
            for s in &result.species {
                let pool_avg = if s.deadpool_fitness.is_empty() {
                    0.0
                } else {
                    s.deadpool_fitness.iter().sum::<f64>() / s.deadpool_fitness.len() as f64
                };
                println!(
                    "{:<9} dead pool avg fitness {:.2} | color sensor wired: {}",
                    s.species.tag(),
                    pool_avg,
                    s.color_connected
                );
            }
            let end = result
                .traces
                .iter()
                .rev()
                .find(|t| t.species == Species::Prey)
                .map(|t| t.avg_fitness)
                .unwrap_or(0.0);
            println!("final prey avg fitness {end:.2}");
            println!("wrote {}", trace_path.display());
            if replay {
                let log = result.replay.join("\n") + "\n";
                let path = write_file(&out, "replay.log", &log)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
