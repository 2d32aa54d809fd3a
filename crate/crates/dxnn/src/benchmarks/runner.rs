//! The generational loop over a benchmark problem: tune every new genotype,
//! select by Competition, refill the population with mutants.

use std::cell::Cell;
use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::benchmarks::cartpole::{run_dpb_episode, DpbConfig, DpbVariant};
use crate::benchmarks::xor::xor_eval;
use crate::genotype::{create_seed, DxnnGenotype, IoTemplate, SeedSpec};
use crate::mutation::{mutate_offspring, MutationConfig};
use crate::phenotype::{compile, Registries};
use crate::selection::{competition_select, Scored};
use crate::tuning::{tune_until, TuningConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkProblem {
    Xor,
    Dpb(DpbVariant),
}

impl BenchmarkProblem {
    pub fn seed_spec(&self) -> SeedSpec {
        match self {
            BenchmarkProblem::Xor => SeedSpec::new(
                vec![IoTemplate::new("pair", 2)],
                vec![IoTemplate::new("answer", 1)],
            ),
            BenchmarkProblem::Dpb(variant) => SeedSpec::new(
                vec![IoTemplate::new("state", variant.sensor_length())],
                vec![IoTemplate::new("force", 1)],
            ),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            BenchmarkProblem::Xor => "xor",
            BenchmarkProblem::Dpb(DpbVariant::WithVelocities) => "dpb-vel",
            BenchmarkProblem::Dpb(DpbVariant::NoVelocitiesUndamped) => "dpb-novel-undamped",
            BenchmarkProblem::Dpb(DpbVariant::NoVelocitiesDamped) => "dpb-novel-damped",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: BenchmarkProblem,
    pub population_limit: usize,
    pub tuning: TuningConfig,
    pub mutation: MutationConfig,
    pub dpb: DpbConfig,
    pub max_evaluations: usize,
    pub max_generations: u32,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(problem: BenchmarkProblem, seed: u64) -> Self {
        // XOR gets a much deeper tuning budget than the control problems:
        // with only four patterns an evaluation is nearly free, and long
        // sessions are what let a freshly added hidden neuron's weights
        // catch up with entrenched single-neuron parents.
        let tuning = match problem {
            BenchmarkProblem::Xor => TuningConfig::with_base_max_mistakes(100),
            BenchmarkProblem::Dpb(DpbVariant::WithVelocities) => {
                TuningConfig::with_base_max_mistakes(10)
            }
            BenchmarkProblem::Dpb(_) => TuningConfig::with_base_max_mistakes(20),
        };
        RunConfig {
            problem,
            population_limit: 10,
            tuning,
            mutation: MutationConfig::default(),
            dpb: DpbConfig::default(),
            max_evaluations: 50_000,
            max_generations: 100,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureCause {
    EvaluationCap,
    GenerationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub evaluations: usize,
    pub generations: u32,
    pub solved: bool,
    /// Neuron count of the first solving genotype.
    pub solution_size: Option<usize>,
    /// Solver size on success; size of the fittest surviving member on
    /// failure.
    pub final_size: usize,
    pub best_fitness: f64,
    pub failure_cause: Option<FailureCause>,
}

/// One full evolutionary run. Stops at the first solved individual, the
/// evaluation cap, or the topological-mutation generation cap.
pub fn run_benchmark(config: &RunConfig) -> RunResult {
    let registries = Registries::standard();
    // Initial weights always span the tuning perturbation half-range, so
    // narrowing the hill-climb step narrows every weight draw with it.
    let mut spec = config.problem.seed_spec();
    spec.weight_half_range = config.tuning.perturb_half_range();
    let mut pop = create_seed(
        &spec,
        config.population_limit,
        config.population_limit,
        config.seed,
    )
    .expect("benchmark seed specs are valid");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9E37_79B9_7F4A_7C15);

    let evaluations = Cell::new(0usize);
    let solved = Cell::new(false);
    let solution_size = Cell::new(None::<usize>);
    let problem = config.problem;
    let dpb = config.dpb;

    let evaluate = |genotype: &DxnnGenotype| -> Result<f64, String> {
        let mut phenotype = compile(genotype, &registries).map_err(|e| e.to_string())?;
        let (fitness, is_solved) = match problem {
            BenchmarkProblem::Xor => xor_eval(&mut phenotype).map_err(|e| e.to_string())?,
            BenchmarkProblem::Dpb(variant) => {
                let r = run_dpb_episode(&mut phenotype, &dpb, variant)
                    .map_err(|e| e.to_string())?;
                (r.fitness, r.solved)
            }
        };
        evaluations.set(evaluations.get() + 1);
        if is_solved && !solved.get() {
            solved.set(true);
            solution_size.set(Some(genotype.size()));
        }
        Ok(fitness)
    };

    let mut best_fitness = f64::NEG_INFINITY;
    let mut generations = 0u32;
    'outer: loop {
        // Tuning phase: offspring and surviving parents alike re-enter it
        // every generation.
        for i in 0..pop.members.len() {
            let genotype = pop.members[i].clone();
            let result = tune_until(genotype, &evaluate, &config.tuning, &mut rng, |_| {
                solved.get() || evaluations.get() >= config.max_evaluations
            })
            .expect("benchmark evaluators are infallible");
            best_fitness = best_fitness.max(result.best_fitness);
            pop.members[i] = result.genotype;
            if solved.get() || evaluations.get() >= config.max_evaluations {
                break 'outer;
            }
        }
        if generations >= config.max_generations {
            break;
        }

        // Competition selection over the scored population.
        let scored: Vec<Scored> = pop
            .members
            .iter()
            .map(|g| Scored::new(g.dxnn_id, g.fitness.unwrap_or(0.0), g.size()))
            .collect();
        let outcome = competition_select(&scored, pop.limit, &mut rng)
            .expect("population always has at least 2 members");
        let by_id: HashMap<_, _> =
            pop.members.drain(..).map(|g| (g.dxnn_id, g)).collect();
        let mut next = Vec::with_capacity(pop.limit);
        for (id, nao) in &outcome.survivors {
            let parent = &by_id[id];
            next.push(parent.clone());
            for _ in 1..*nao {
                next.push(mutate_offspring(parent, &config.mutation, &mut pop.ids, &mut rng));
            }
        }
        pop.members = next;
        generations += 1;
    }

    let is_solved = solved.get();
    let final_size = solution_size.get().unwrap_or_else(|| {
        pop.members
            .iter()
            .max_by(|a, b| {
                a.fitness
                    .unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&b.fitness.unwrap_or(f64::NEG_INFINITY))
            })
            .map(|g| g.size())
            .unwrap_or(0)
    });
    RunResult {
        evaluations: evaluations.get(),
        generations,
        solved: is_solved,
        solution_size: solution_size.get(),
        final_size,
        best_fitness,
        failure_cause: if is_solved {
            None
        } else if evaluations.get() >= config.max_evaluations {
            Some(FailureCause::EvaluationCap)
        } else {
            Some(FailureCause::GenerationCap)
        },
    }
}
