//! The experiment harness: repeated benchmark runs with per-run and summary
//! CSV output, parameter-sweep ablations, and diversity profiling.
//!
//! Repetitions run in parallel but every run draws from its own seed stream
//! derived from (experiment seed, run index), so the CSVs are byte-identical
//! across re-runs and thread counts.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::benchmarks::cartpole::DpbVariant;
use crate::benchmarks::runner::{run_benchmark, BenchmarkProblem, FailureCause, RunConfig};
use crate::benchmarks::xor::xor_fitness;
use crate::diversity::minimum_diversity;
use crate::genotype::{create_seed, IoTemplate, SeedSpec};
use crate::mutation::{mutate_offspring, MutationConfig};
use crate::phenotype::{compile, Registries};
use crate::selection::{competition_select, Scored};
use crate::tuning::{tune, TuningConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Splitmix-style per-run stream: runs never share random state regardless
/// of scheduling.
pub fn run_seed(experiment_seed: u64, run_index: usize) -> u64 {
    let mut z = experiment_seed
        .wrapping_add((run_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: BenchmarkProblem,
    pub runs: usize,
    pub seed: u64,
    pub population_limit: usize,
    /// `None` uses the problem's default tuning depth.
    pub base_max_mistakes: Option<u32>,
    /// Half-range of tuning weight perturbations; `None` uses the default.
    pub perturb_range: Option<f64>,
    pub max_evaluations: usize,
    pub max_generations: u32,
}

impl ExperimentConfig {
    pub fn new(problem: BenchmarkProblem) -> Self {
        let runs = match problem {
            BenchmarkProblem::Xor => 100,
            BenchmarkProblem::Dpb(_) => 50,
        };
        ExperimentConfig {
            problem,
            runs,
            seed: 0,
            population_limit: 10,
            base_max_mistakes: None,
            perturb_range: None,
            max_evaluations: 50_000,
            max_generations: 100,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.runs == 0 {
            return Err(ExperimentError::Config("repetitions must be at least 1".into()));
        }
        if self.population_limit < 2 {
            return Err(ExperimentError::Config("population limit must be at least 2".into()));
        }
        if self.max_evaluations == 0 {
            return Err(ExperimentError::Config("evaluation cap must be positive".into()));
        }
        if let Some(r) = self.perturb_range {
            if !(r > 0.0) || !r.is_finite() {
                return Err(ExperimentError::Config(format!(
                    "perturb range must be positive and finite, got {r}"
                )));
            }
        }
        if self.base_max_mistakes == Some(0) {
            return Err(ExperimentError::Config("base max mistakes must be at least 1".into()));
        }
        Ok(())
    }

    /// Apply `key=value` overrides; later entries win. Unknown keys and
    /// malformed values are rejected before anything runs.
    pub fn apply_pairs<'a>(
        &mut self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<(), ExperimentError> {
        for (key, value) in pairs {
            let bad = |what: &str| {
                ExperimentError::Config(format!("{key}: expected {what}, got {value:?}"))
            };
            match key {
                "variant" => {
                    self.problem = parse_variant(value)
                        .ok_or_else(|| bad("xor|dpb-vel|dpb-novel-undamped|dpb-novel-damped"))?;
                }
                "runs" => self.runs = value.parse().map_err(|_| bad("a positive integer"))?,
                "seed" => self.seed = value.parse().map_err(|_| bad("an integer"))?,
                "population" => {
                    self.population_limit = value.parse().map_err(|_| bad("a positive integer"))?
                }
                "base-max-mistakes" => {
                    self.base_max_mistakes =
                        Some(value.parse().map_err(|_| bad("a positive integer"))?)
                }
                "perturb-range" => {
                    self.perturb_range = Some(value.parse().map_err(|_| bad("a number"))?)
                }
                "max-evaluations" => {
                    self.max_evaluations = value.parse().map_err(|_| bad("a positive integer"))?
                }
                "max-generations" => {
                    self.max_generations = value.parse().map_err(|_| bad("an integer"))?
                }
                other => {
                    return Err(ExperimentError::Config(format!("unknown key {other:?}")));
                }
            }
        }
        self.validate()
    }

    fn run_config(&self, run_index: usize) -> RunConfig {
        let mut rc = RunConfig::new(self.problem, run_seed(self.seed, run_index));
        rc.population_limit = self.population_limit;
        if let Some(b) = self.base_max_mistakes {
            rc.tuning.base_max_mistakes = b;
        }
        if let Some(r) = self.perturb_range {
            rc.tuning.weight_limit = 2.0 * r;
        }
        rc.max_evaluations = self.max_evaluations;
        rc.max_generations = self.max_generations;
        rc
    }
}

pub fn parse_variant(s: &str) -> Option<BenchmarkProblem> {
    match s {
        "xor" => Some(BenchmarkProblem::Xor),
        "dpb-vel" => Some(BenchmarkProblem::Dpb(DpbVariant::WithVelocities)),
        "dpb-novel-undamped" => Some(BenchmarkProblem::Dpb(DpbVariant::NoVelocitiesUndamped)),
        "dpb-novel-damped" => Some(BenchmarkProblem::Dpb(DpbVariant::NoVelocitiesDamped)),
        _ => None,
    }
}

/// Parse a `key=value` config file: one pair per line, `#` comments and
/// blank lines ignored.
pub fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ExperimentError::Config(format!(
                "{}:{}: expected key=value, got {raw:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: usize,
    pub evaluations: usize,
    pub solved: bool,
    pub failure_cause: Option<FailureCause>,
    pub neurons: usize,
}

/// Aggregates over one batch of runs. Evaluation and size means are taken
/// over the successful runs only; the failure rate reports the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub runs: usize,
    pub solved: usize,
    pub mean_evaluations: f64,
    pub mean_neurons: f64,
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

fn summarize(records: &[RunRecord]) -> Summary {
    let solved: Vec<&RunRecord> = records.iter().filter(|r| r.solved).collect();
    let n = solved.len();
    Summary {
        runs: records.len(),
        solved: n,
        mean_evaluations: if n == 0 {
            f64::NAN
        } else {
            solved.iter().map(|r| r.evaluations as f64).sum::<f64>() / n as f64
        },
        mean_neurons: if n == 0 {
            f64::NAN
        } else {
            solved.iter().map(|r| r.neurons as f64).sum::<f64>() / n as f64
        },
        failure_rate: (records.len() - n) as f64 / records.len() as f64,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let mut records: Vec<RunRecord> = (0..config.runs)
        .into_par_iter()
        .map(|i| {
            let r = run_benchmark(&config.run_config(i));
            RunRecord {
                run_index: i,
                evaluations: r.evaluations,
                solved: r.solved,
                failure_cause: r.failure_cause,
                neurons: r.final_size,
            }
        })
        .collect();
    records.sort_by_key(|r| r.run_index);
    let summary = summarize(&records);
    Ok(ExperimentReport { config: config.clone(), records, summary })
}

fn failure_tag(cause: Option<FailureCause>) -> &'static str {
    match cause {
        None => "",
        Some(FailureCause::EvaluationCap) => "eval-cap",
        Some(FailureCause::GenerationCap) => "gen-cap",
    }
}

pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut s = String::from("run_index,evaluations,solved,failure_cause,neurons\n");
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.run_index,
            r.evaluations,
            r.solved,
            failure_tag(r.failure_cause),
            r.neurons
        )
        .unwrap();
    }
    s
}

pub fn summary_csv(summary: &Summary) -> String {
    format!(
        "runs,solved,mean_evaluations,mean_neurons,failure_rate\n{},{},{:.3},{:.3},{:.4}\n",
        summary.runs, summary.solved, summary.mean_evaluations, summary.mean_neurons,
        summary.failure_rate
    )
}

/// Which knob an ablation sweeps, with the values to visit.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    BaseMaxMistakes(Vec<u32>),
    PopSize(Vec<usize>),
    /// Perturbation half-ranges for the tuning random intensity.
    WeightRim(Vec<f64>),
}

impl SweepSpec {
    pub fn default_base_max_mistakes() -> Self {
        SweepSpec::BaseMaxMistakes(vec![1, 5, 10, 20, 30, 100])
    }

    pub fn default_pop_size() -> Self {
        SweepSpec::PopSize(vec![5, 10, 20, 50])
    }

    pub fn default_weight_rim() -> Self {
        SweepSpec::WeightRim(vec![0.1, std::f64::consts::FRAC_PI_2, std::f64::consts::PI])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub value: String,
    pub summary: Summary,
}

pub fn run_ablation(
    base: &ExperimentConfig,
    sweep: &SweepSpec,
) -> Result<Vec<AblationRow>, ExperimentError> {
    base.validate()?;
    let mut rows = Vec::new();
    match sweep {
        SweepSpec::BaseMaxMistakes(values) => {
            for &v in values {
                let mut cfg = base.clone();
                cfg.base_max_mistakes = Some(v);
                let report = run_experiment(&cfg)?;
                rows.push(AblationRow { value: v.to_string(), summary: report.summary });
            }
        }
        SweepSpec::PopSize(values) => {
            for &v in values {
                let mut cfg = base.clone();
                cfg.population_limit = v;
                let report = run_experiment(&cfg)?;
                rows.push(AblationRow { value: v.to_string(), summary: report.summary });
            }
        }
        SweepSpec::WeightRim(values) => {
            for &v in values {
                let mut cfg = base.clone();
                cfg.perturb_range = Some(v);
                let report = run_experiment(&cfg)?;
                rows.push(AblationRow { value: format!("{v:.6}"), summary: report.summary });
            }
        }
    }
    Ok(rows)
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("value,runs,solved,mean_evaluations,mean_neurons,failure_rate\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{:.3},{:.3},{:.4}",
            r.value,
            r.summary.runs,
            r.summary.solved,
            r.summary.mean_evaluations,
            r.summary.mean_neurons,
            r.summary.failure_rate
        )
        .unwrap();
    }
    s
}

/// Topological diversity of an evolving population, generation by
/// generation, averaged over independent repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityProfile {
    /// `per_rep[rep][generation]` = distinct topology signatures.
    pub per_rep: Vec<Vec<usize>>,
    /// Average over repetitions, indexed by generation (0 = seeds).
    pub average: Vec<f64>,
}

/// Run the XOR loop with a restricted activation set and record the
/// population's minimum diversity after every topological mutation phase.
pub fn run_diversity_profile(
    activation: &str,
    population: usize,
    generations: u32,
    reps: usize,
    seed: u64,
) -> Result<DiversityProfile, ExperimentError> {
    if reps == 0 {
        return Err(ExperimentError::Config("repetitions must be at least 1".into()));
    }
    if population < 2 {
        return Err(ExperimentError::Config("population must be at least 2".into()));
    }
    let registries = Registries::standard();
    registries
        .activation(activation)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;

    let per_rep: Vec<Vec<usize>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            use rand::SeedableRng;
            let mut rng =
                rand_chacha::ChaCha8Rng::seed_from_u64(run_seed(seed, rep) ^ 0xD1BE_51FA);
            let spec = SeedSpec {
                activation: activation.to_string(),
                ..SeedSpec::new(
                    vec![IoTemplate::new("pair", 2)],
                    vec![IoTemplate::new("answer", 1)],
                )
            };
            let mut pop = create_seed(&spec, population, population, run_seed(seed, rep))
                .expect("diversity seed spec is valid");
            let mutation = MutationConfig {
                af_tags: vec![activation.to_string()],
                ..MutationConfig::default()
            };
            let tuning = TuningConfig::with_base_max_mistakes(5);
            let mut track = vec![minimum_diversity(&pop)];
            for _ in 0..generations {
                fn evaluate(
                    genotype: &crate::genotype::DxnnGenotype,
                    registries: &Registries,
                ) -> Result<f64, String> {
                    let mut p = compile(genotype, registries).map_err(|e| e.to_string())?;
                    xor_fitness(&mut p).map_err(|e| e.to_string())
                }
                for member in &mut pop.members {
                    let result = tune(
                        member.clone(),
                        &|genotype: &crate::genotype::DxnnGenotype| {
                            evaluate(genotype, &registries)
                        },
                        &tuning,
                        &mut rng,
                    )
                    .expect("xor evaluator is infallible");
                    *member = result.genotype;
                }
                let scored: Vec<Scored> = pop
                    .members
                    .iter()
                    .map(|g| Scored::new(g.dxnn_id, g.fitness.unwrap_or(0.0), g.size()))
                    .collect();
                let outcome = competition_select(&scored, pop.limit, &mut rng)
                    .expect("population has at least 2 members");
                let by_id: std::collections::HashMap<_, _> =
                    pop.members.drain(..).map(|g| (g.dxnn_id, g)).collect();
                let mut next = Vec::with_capacity(pop.limit);
                for (id, nao) in &outcome.survivors {
                    let parent = &by_id[id];
                    next.push(parent.clone());
                    for _ in 1..*nao {
                        next.push(mutate_offspring(parent, &mutation, &mut pop.ids, &mut rng));
                    }
                }
                pop.members = next;
                track.push(minimum_diversity(&pop));
            }
            track
        })
        .collect();

    let gens = generations as usize + 1;
    let mut average = vec![0.0; gens];
    for track in &per_rep {
        for (g, &d) in track.iter().enumerate() {
            average[g] += d as f64 / reps as f64;
        }
    }
    Ok(DiversityProfile { per_rep, average })
}

pub fn diversity_csv(profile: &DiversityProfile) -> String {
    let mut s = String::from("generation,avg_diversity\n");
    for (g, d) in profile.average.iter().enumerate() {
        writeln!(s, "{g},{d:.3}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_repetitions_rejected() {
        let mut cfg = ExperimentConfig::new(BenchmarkProblem::Xor);
        cfg.runs = 0;
        assert!(cfg.validate().is_err());
        assert!(run_experiment(&cfg).is_err());
        assert!(run_diversity_profile("tanh", 10, 1, 0, 0).is_err());
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let mut cfg = ExperimentConfig::new(BenchmarkProblem::Xor);
        assert!(cfg.apply_pairs([("no-such-knob", "3")]).is_err());
        assert!(cfg.apply_pairs([("runs", "many")]).is_err());
        assert!(cfg.apply_pairs([("variant", "tic-tac-toe")]).is_err());
        assert!(cfg.apply_pairs([("perturb-range", "-1.0")]).is_err());
        // Nothing above should have mutated past the failing key's parse.
        assert_eq!(cfg.runs, 100);
    }

    #[test]
    fn overrides_apply_in_order_flags_last() {
        let mut cfg = ExperimentConfig::new(BenchmarkProblem::Xor);
        cfg.apply_pairs([("runs", "7"), ("seed", "5")]).unwrap();
        cfg.apply_pairs([("runs", "9")]).unwrap();
        assert_eq!(cfg.runs, 9);
        assert_eq!(cfg.seed, 5);
    }

    #[test]
    fn config_file_round_trip() {
        let dir = std::env::temp_dir().join("dxnn-exp-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("exp.conf");
        std::fs::write(&path, "# comment\nvariant = xor\nruns=3 # trailing\n\nseed=11\n")
            .unwrap();
        let pairs = parse_config_file(&path).unwrap();
        let mut cfg = ExperimentConfig::new(BenchmarkProblem::Xor);
        cfg.apply_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(cfg.runs, 3);
        assert_eq!(cfg.seed, 11);

        std::fs::write(&path, "runs\n").unwrap();
        assert!(parse_config_file(&path).is_err());
    }

    #[test]
    fn csv_output_is_byte_reproducible() {
        let mut cfg = ExperimentConfig::new(BenchmarkProblem::Xor);
        cfg.runs = 6;
        cfg.seed = 4;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(runs_csv(&a.records), runs_csv(&b.records));
        assert_eq!(summary_csv(&a.summary), summary_csv(&b.summary));
        let indices: Vec<usize> = a.records.iter().map(|r| r.run_index).collect();
        assert_eq!(indices, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn summary_counts_failures() {
        let mut cfg = ExperimentConfig::new(BenchmarkProblem::Xor);
        cfg.runs = 4;
        cfg.max_evaluations = 30;
        cfg.max_generations = 0;
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.summary.runs, 4);
        let failures = report.records.iter().filter(|r| !r.solved).count();
        assert!((report.summary.failure_rate - failures as f64 / 4.0).abs() < 1e-12);
        for r in &report.records {
            assert_eq!(r.solved, r.failure_cause.is_none());
            assert!(r.neurons > 0);
        }
    }

    #[test]
    fn ablation_visits_every_value() {
        let mut cfg = ExperimentConfig::new(BenchmarkProblem::Xor);
        cfg.runs = 2;
        cfg.max_evaluations = 200;
        let rows = run_ablation(&cfg, &SweepSpec::BaseMaxMistakes(vec![1, 5])).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].value, "1");
        assert_eq!(rows[1].value, "5");
        let csv = ablation_csv(&rows);
        assert!(csv.starts_with("value,runs,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn diversity_profile_shapes_and_determinism() {
        let a = run_diversity_profile("sigmoid", 10, 3, 2, 21).unwrap();
        let b = run_diversity_profile("sigmoid", 10, 3, 2, 21).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_rep.len(), 2);
        assert_eq!(a.average.len(), 4);
        for track in &a.per_rep {
            assert_eq!(track.len(), 4);
            for &d in track {
                assert!(d >= 1 && d <= 10);
            }
        }
        assert!(run_diversity_profile("no-such-af", 10, 1, 1, 0).is_err());
    }
}
