//! The flatland scenarios: populations of prey (and predators) living,
//! dying, and evolving in a shared 2D world. Every robot life is one tuning
//! attempt; finished hill climbs feed a per-species dead pool that supplies
//! parents for the next offspring.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::diversity::{signature, TopologySignature};
use crate::flatland::world::{
    cast_obstacles, differential_drive, overlaps, push_apart, ray_angles, Body, Item, ItemKind,
    Obstacle, Species, AGE_CAP, ITEM_RADIUS, PLANT_ENERGY, POISON_PENALTY, RAY_COUNT,
    START_ENERGY,
};
use crate::genotype::{create_seed, DxnnGenotype, ElementId, IdGen, IoTemplate, SeedSpec};
use crate::mutation::{mutate_offspring, MutationConfig};
use crate::phenotype::{compile, Phenotype, Registries};
use crate::selection::DeadPool;
use crate::tuning::{SessionStatus, TuningConfig, TuningSession};

#[derive(Debug, Error)]
pub enum FlatlandError {
    #[error("invalid flatland config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Food,
    FoodPoison,
    PredatorPrey,
}

impl Scenario {
    pub fn default_evaluation_cap(&self) -> usize {
        match self {
            Scenario::Food => 25_000,
            Scenario::FoodPoison => 50_000,
            Scenario::PredatorPrey => 100_000,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Scenario::Food => "food",
            Scenario::FoodPoison => "poison",
            Scenario::PredatorPrey => "predprey",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlatlandConfig {
    pub scenario: Scenario,
    /// Sensor wiring: odd versions start with Range and Color connected,
    /// even versions start with Range only (Color stays available to the
    /// add-sensor mutation).
    pub version: u8,
    /// Robots per species.
    pub population: usize,
    pub plants: usize,
    pub poison: usize,
    pub evaluation_cap: usize,
    pub trace_interval: usize,
    pub base_max_mistakes: u32,
    pub seed: u64,
    pub record_replay: bool,
}

impl FlatlandConfig {
    pub fn new(scenario: Scenario, version: u8, seed: u64) -> Self {
        FlatlandConfig {
            scenario,
            version,
            population: 10,
            plants: 10,
            poison: if scenario == Scenario::Food { 0 } else { 10 },
            evaluation_cap: scenario.default_evaluation_cap(),
            trace_interval: 500,
            base_max_mistakes: 20,
            seed,
            record_replay: false,
        }
    }

    fn validate(&self) -> Result<(), FlatlandError> {
        if !(1..=4).contains(&self.version) {
            return Err(FlatlandError::Config(format!("version {} not in 1..=4", self.version)));
        }
        if self.population < 2 {
            return Err(FlatlandError::Config("population must be at least 2".into()));
        }
        if self.evaluation_cap == 0 {
            return Err(FlatlandError::Config("evaluation cap must be positive".into()));
        }
        if self.trace_interval == 0 {
            return Err(FlatlandError::Config("trace interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub evaluation: usize,
    pub species: Species,
    pub avg_fitness: f64,
    pub avg_neurons: f64,
    pub diversity: usize,
}

#[derive(Debug, Clone)]
pub struct SpeciesSummary {
    pub species: Species,
    /// Fitness of every dead-pool entry at run end.
    pub deadpool_fitness: Vec<f64>,
    /// Whether any genotype (live or pooled) has wired up the Color sensor.
    pub color_connected: bool,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub evaluations: usize,
    pub steps: u64,
    pub traces: Vec<TraceRow>,
    pub species: Vec<SpeciesSummary>,
    pub replay: Vec<String>,
    /// Injected minus dissipated minus live energy: zero when every energy
    /// delta in the run is accounted for.
    pub energy_imbalance: f64,
}

/// Activation functions available to structural mutation in the scenarios.
pub const ALIFE_AF_TAGS: [&str; 7] = ["tanh", "sin", "linear", "gauss", "sqrt", "abs", "log"];

fn alife_mutation_config() -> MutationConfig {
    MutationConfig {
        sensor_tag_probability: 0.10,
        actuator_tag_probability: 0.10,
        af_tags: ALIFE_AF_TAGS.iter().map(|s| s.to_string()).collect(),
        lm_tags: vec!["none".to_string()],
    }
}

fn species_seed_spec(version: u8) -> SeedSpec {
    let range = IoTemplate::new("range", RAY_COUNT);
    let color = IoTemplate::new("color", RAY_COUNT);
    let drive = IoTemplate::new("drive", 2);
    let mut spec = if version % 2 == 1 {
        SeedSpec::new(vec![range, color], vec![drive])
    } else {
        let mut s = SeedSpec::new(vec![range], vec![drive]);
        s.spare_sensors = vec![color];
        s
    };
    spec.activation = "tanh".to_string();
    spec
}

enum Mode {
    Tuning(TuningSession),
    /// A dead-pool veteran living one reassessment life.
    ReEntry { entry: ElementId },
}

struct Brain {
    mode: Mode,
    genotype: DxnnGenotype,
    phenotype: Phenotype,
}

struct Colony {
    species: Species,
    ids: IdGen,
    deadpool: DeadPool,
    /// Fitness of the most recent deaths, for the trace; the window matches
    /// the trace interval so each row averages one interval's worth of lives.
    recent: VecDeque<f64>,
    recent_window: usize,
    tuning: TuningConfig,
    mutation: MutationConfig,
    brains: Vec<Brain>,
}

struct World {
    items: Vec<Item>,
    next_id: u64,
    injected: f64,
    dissipated: f64,
    evaluations: usize,
    steps: u64,
    record: bool,
    replay: Vec<String>,
    traces: Vec<TraceRow>,
}

impl World {
    fn log(&mut self, line: String) {
        if self.record {
            self.replay.push(line);
        }
    }

    fn fresh_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }
}

fn random_point(region: (f64, f64, f64, f64), rng: &mut impl Rng) -> (f64, f64) {
    (rng.random_range(region.0..region.1), rng.random_range(region.2..region.3))
}

fn spawn_item(kind: ItemKind, world: &mut World, rng: &mut impl Rng) -> Item {
    let (x, y) = random_point(Species::Prey.region(), rng);
    let id = world.fresh_id();
    world.log(format!("SPAWN {id} {} {x:.3} {y:.3}", kind.tag()));
    Item { id, kind, x, y, radius: ITEM_RADIUS }
}

fn spawn_body(species: Species, world: &mut World, rng: &mut impl Rng) -> Body {
    let (x, y) = random_point(species.region(), rng);
    let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let id = world.fresh_id();
    world.injected += START_ENERGY;
    world.log(format!("SPAWN {id} {} {x:.3} {y:.3}", species.tag()));
    Body::new(id, species, x, y, heading)
}

fn compile_brain(genotype: DxnnGenotype, registries: &Registries, mode: Mode) -> Brain {
    let phenotype =
        compile(&genotype, registries).expect("evolved genotypes stay compilable");
    Brain { mode, genotype, phenotype }
}

/// Draw the next occupant of a freed slot from the species dead pool.
fn next_from_deadpool(colony: &mut Colony, registries: &Registries, rng: &mut impl Rng) -> Brain {
    let (idx, reenter) = colony
        .deadpool
        .sample_parent(rng)
        .expect("a session just finished, so the pool is non-empty");
    let parent = colony.deadpool.entries()[idx].0.clone();
    if reenter {
        let entry = parent.dxnn_id;
        compile_brain(parent, registries, Mode::ReEntry { entry })
    } else {
        let child = mutate_offspring(&parent, &colony.mutation, &mut colony.ids, rng);
        let session = TuningSession::new(child, &colony.tuning);
        let genotype = session.candidate().clone();
        compile_brain(genotype, registries, Mode::Tuning(session))
    }
}

/// Close out a finished life: record fitness, advance the slot's hill climb
/// or dead-pool state, and respawn a fresh body in the slot.
fn handle_death(
    colony: &mut Colony,
    slot: usize,
    body: &mut Body,
    energy_transferred: bool,
    world: &mut World,
    registries: &Registries,
    rng: &mut impl Rng,
) {
    let fitness = body.fitness();
    world.log(format!("DEATH {} {fitness:.3}", body.id));
    world.evaluations += 1;
    if !energy_transferred {
        world.dissipated += body.energy;
    }
    colony.recent.push_back(fitness);
    if colony.recent.len() > colony.recent_window {
        colony.recent.pop_front();
    }

    enum Next {
        /// The hill climb continues: live the next perturbed candidate.
        Keep(DxnnGenotype),
        /// The slot is free: draw a new occupant from the dead pool.
        Draw,
    }

    let brain = &mut colony.brains[slot];
    let next = match &mut brain.mode {
        Mode::Tuning(session) => match session.report(fitness, rng) {
            SessionStatus::Continue => Next::Keep(session.candidate().clone()),
            SessionStatus::Finished => {
                let placeholder = TuningSession::new(brain.genotype.clone(), &colony.tuning);
                let session = std::mem::replace(session, placeholder);
                let result = session.finish();
                colony.deadpool.insert(result.genotype, result.best_fitness);
                Next::Draw
            }
        },
        Mode::ReEntry { entry } => {
            let entry = *entry;
            if let Some(idx) =
                colony.deadpool.entries().iter().position(|(g, _)| g.dxnn_id == entry)
            {
                colony.deadpool.reassess(idx, fitness);
            }
            Next::Draw
        }
    };
    match next {
        Next::Draw => {
            let fresh = next_from_deadpool(colony, registries, rng);
            colony.brains[slot] = fresh;
        }
        Next::Keep(genotype) => {
            let brain = &mut colony.brains[slot];
            brain.phenotype =
                compile(&genotype, registries).expect("evolved genotypes stay compilable");
            brain.genotype = genotype;
        }
    }

    *body = spawn_body(colony.species, world, rng);
}

fn record_traces(colonies: &[Colony], bodies: &[Vec<Body>], world: &mut World) {
    for colony in colonies {
        let n = colony.brains.len() as f64;
        let avg_fitness = if colony.recent.is_empty() {
            0.0
        } else {
            colony.recent.iter().sum::<f64>() / colony.recent.len() as f64
        };
        let avg_neurons =
            colony.brains.iter().map(|b| b.genotype.size() as f64).sum::<f64>() / n;
        let mut sigs: Vec<TopologySignature> =
            colony.brains.iter().map(|b| signature(&b.genotype)).collect();
        sigs.sort();
        sigs.dedup();
        world.traces.push(TraceRow {
            evaluation: world.evaluations,
            species: colony.species,
            avg_fitness,
            avg_neurons,
            diversity: sigs.len(),
        });
    }
    let live: f64 = bodies.iter().flatten().map(|b| b.energy).sum();
    let imbalance = world.injected - world.dissipated - live;
    debug_assert!(
        imbalance.abs() < 1e-6 * world.injected.max(1.0),
        "energy ledger imbalance {imbalance}"
    );
}

fn two_mut<'a>(
    bodies: &'a mut [Vec<Body>],
    a: (usize, usize),
    b: (usize, usize),
) -> (&'a mut Body, &'a mut Body) {
    assert_ne!(a, b);
    if a.0 == b.0 {
        let row = &mut bodies[a.0];
        if a.1 < b.1 {
            let (l, r) = row.split_at_mut(b.1);
            (&mut l[a.1], &mut r[0])
        } else {
            let (l, r) = row.split_at_mut(a.1);
            (&mut r[0], &mut l[b.1])
        }
    } else if a.0 < b.0 {
        let (l, r) = bodies.split_at_mut(b.0);
        (&mut l[a.0][a.1], &mut r[0][b.1])
    } else {
        let (l, r) = bodies.split_at_mut(a.0);
        (&mut r[0][a.1], &mut l[b.0][b.1])
    }
}

pub fn run_scenario(cfg: &FlatlandConfig) -> Result<ScenarioResult, FlatlandError> {
    cfg.validate()?;
    let registries = Registries::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x51F1_A47A_11FE_11FE);

    let species_list: &[Species] = match cfg.scenario {
        Scenario::PredatorPrey => &[Species::Prey, Species::Predator],
        _ => &[Species::Prey],
    };

    let mut world = World {
        items: Vec::new(),
        next_id: 0,
        injected: 0.0,
        dissipated: 0.0,
        evaluations: 0,
        steps: 0,
        record: cfg.record_replay,
        replay: Vec::new(),
        traces: Vec::new(),
    };

    let tuning = TuningConfig::with_base_max_mistakes(cfg.base_max_mistakes);
    let mut colonies: Vec<Colony> = Vec::new();
    let mut bodies: Vec<Vec<Body>> = Vec::new();
    for (si, &species) in species_list.iter().enumerate() {
        let spec = species_seed_spec(cfg.version);
        let pop = create_seed(&spec, cfg.population, cfg.population, cfg.seed ^ (si as u64 + 1))
            .map_err(|e| FlatlandError::Config(e.to_string()))?;
        let mut colony = Colony {
            species,
            ids: pop.ids,
            deadpool: DeadPool::new(cfg.population),
            recent: VecDeque::new(),
            recent_window: cfg.trace_interval,
            tuning: tuning.clone(),
            mutation: alife_mutation_config(),
            brains: Vec::new(),
        };
        let mut row = Vec::new();
        for member in pop.members {
            let session = TuningSession::new(member, &colony.tuning);
            let genotype = session.candidate().clone();
            colony.brains.push(compile_brain(genotype, &registries, Mode::Tuning(session)));
            row.push(spawn_body(species, &mut world, &mut rng));
        }
        colonies.push(colony);
        bodies.push(row);
    }

    for _ in 0..cfg.plants {
        let item = spawn_item(ItemKind::Plant, &mut world, &mut rng);
        world.items.push(item);
    }
    for _ in 0..cfg.poison {
        let item = spawn_item(ItemKind::Poison, &mut world, &mut rng);
        world.items.push(item);
    }

    // First trace row: the starting population, zero evaluations in.
    record_traces(&colonies, &bodies, &mut world);

    let mut order: Vec<(usize, usize)> = (0..colonies.len())
        .flat_map(|si| (0..cfg.population).map(move |sl| (si, sl)))
        .collect();
    // Reused scratch buffers: the act loop runs tens of millions of times
    // per scenario, so it must not allocate.
    let mut sensor_scratch: Vec<Vec<f64>> = Vec::new();
    let mut obstacles: Vec<Obstacle> = Vec::new();
    let mut range = Vec::with_capacity(RAY_COUNT);
    let mut color = Vec::with_capacity(RAY_COUNT);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut next_trace = cfg.trace_interval;

    'world: while world.evaluations < cfg.evaluation_cap {
        world.steps += 1;
        let step = world.steps;
        world.log(format!("STEP {step}"));
        // A fresh shuffled act order every step.
        order.shuffle(&mut rng);

        for oi in 0..order.len() {
            let (si, sl) = order[oi];

            // Sense: five range rays and five color rays against the scene.
            {
                let me = &bodies[si][sl];
                obstacles.clear();
                obstacles.extend(
                    bodies.iter().flatten().filter(|b| b.id != me.id).map(Obstacle::from),
                );
                obstacles.extend(world.items.iter().map(Obstacle::from));
                range.clear();
                color.clear();
                for angle in ray_angles(me.heading) {
                    let (r, c) = cast_obstacles((me.x, me.y), angle, &obstacles);
                    range.push(r);
                    color.push(c);
                }
                let sensors = &colonies[si].brains[sl].genotype.core.sensors;
                sensor_scratch.resize_with(sensors.len(), Vec::new);
                for (s, buf) in sensors.iter().zip(sensor_scratch.iter_mut()) {
                    match s.tag.as_str() {
                        "range" => buf.clone_from(&range),
                        "color" => buf.clone_from(&color),
                        other => unreachable!("unknown sensor tag {other}"),
                    }
                }
            }
            colonies[si].brains[sl]
                .phenotype
                .step_into(&sensor_scratch, &mut out)
                .expect("live phenotypes accept their own sensor layout");
            let left = out[0].first().copied().unwrap_or(0.0);
            let right = out[0].get(1).copied().unwrap_or(0.0);

            {
                let body = &mut bodies[si][sl];
                let outcome = differential_drive(body, left, right);
                world.dissipated += outcome.cost;
                world.log(format!(
                    "MOVE {} {:.3} {:.3} {:.3}",
                    body.id, body.x, body.y, body.heading
                ));
            }

            // Items: only prey graze and only prey are poisoned.
            if colonies[si].species == Species::Prey {
                for ii in 0..world.items.len() {
                    let body = &bodies[si][sl];
                    let item = &world.items[ii];
                    if !overlaps(body.x, body.y, body.radius, item.x, item.y, item.radius) {
                        continue;
                    }
                    let (kind, old_id) = (item.kind, item.id);
                    let body = &mut bodies[si][sl];
                    world.log(format!("EAT {} {old_id}", body.id));
                    match kind {
                        ItemKind::Plant => {
                            body.energy += PLANT_ENERGY;
                            body.food += 1;
                            world.injected += PLANT_ENERGY;
                        }
                        ItemKind::Poison => {
                            body.energy -= POISON_PENALTY;
                            world.dissipated += POISON_PENALTY;
                        }
                    }
                    let replacement = spawn_item(kind, &mut world, &mut rng);
                    world.items[ii] = replacement;
                }
            }

            // Robot-robot contact: predation across species, pushing within.
            let mut mover_died = false;
            let contacts: Vec<(usize, usize)> = {
                let me = &bodies[si][sl];
                bodies
                    .iter()
                    .enumerate()
                    .flat_map(|(sj, row)| {
                        row.iter().enumerate().filter_map(move |(sk, b)| {
                            (b.id != me.id
                                && overlaps(me.x, me.y, me.radius, b.x, b.y, b.radius))
                            .then_some((sj, sk))
                        })
                    })
                    .collect()
            };
            for (sj, sk) in contacts {
                let (me, other) = two_mut(&mut bodies, (si, sl), (sj, sk));
                if !overlaps(me.x, me.y, me.radius, other.x, other.y, other.radius) {
                    continue;
                }
                if me.species == other.species {
                    // Push: the higher-energy robot's motion is realized.
                    if me.energy > other.energy {
                        let mut p = (other.x, other.y);
                        push_apart((me.x, me.y, me.radius), &mut p, other.radius);
                        (other.x, other.y) = p;
                    } else {
                        let mut p = (me.x, me.y);
                        push_apart((other.x, other.y, other.radius), &mut p, me.radius);
                        (me.x, me.y) = p;
                    }
                } else {
                    let (pred_pos, prey_pos) = if me.species == Species::Predator {
                        ((si, sl), (sj, sk))
                    } else {
                        ((sj, sk), (si, sl))
                    };
                    let (pred, prey) = two_mut(&mut bodies, pred_pos, prey_pos);
                    world.log(format!("EAT {} {}", pred.id, prey.id));
                    pred.energy += prey.energy;
                    prey.energy = 0.0;
                    pred.food += 1;
                    let (psi, psl) = prey_pos;
                    let mut prey_body = std::mem::replace(
                        &mut bodies[psi][psl],
                        Body::new(0, Species::Prey, 0.0, 0.0, 0.0),
                    );
                    handle_death(
                        &mut colonies[psi],
                        psl,
                        &mut prey_body,
                        true,
                        &mut world,
                        &registries,
                        &mut rng,
                    );
                    bodies[psi][psl] = prey_body;
                    if prey_pos == (si, sl) {
                        mover_died = true;
                    }
                    if world.evaluations >= cfg.evaluation_cap {
                        break 'world;
                    }
                }
                if mover_died {
                    break;
                }
            }

            // Natural death: starved or aged out.
            if !mover_died {
                let dead = {
                    let b = &bodies[si][sl];
                    b.energy <= 0.0 || b.age >= AGE_CAP
                };
                if dead {
                    let mut body = std::mem::replace(
                        &mut bodies[si][sl],
                        Body::new(0, Species::Prey, 0.0, 0.0, 0.0),
                    );
                    handle_death(
                        &mut colonies[si],
                        sl,
                        &mut body,
                        false,
                        &mut world,
                        &registries,
                        &mut rng,
                    );
                    bodies[si][sl] = body;
                    if world.evaluations >= cfg.evaluation_cap {
                        break 'world;
                    }
                }
            }

            while next_trace <= world.evaluations {
                record_traces(&colonies, &bodies, &mut world);
                next_trace += cfg.trace_interval;
            }
        }
    }

    // Closing trace row if the cap landed between interval marks.
    if world.traces.last().map(|t| t.evaluation) != Some(world.evaluations) {
        record_traces(&colonies, &bodies, &mut world);
    }

    let live: f64 = bodies.iter().flatten().map(|b| b.energy).sum();
    let energy_imbalance = world.injected - world.dissipated - live;

    let species = colonies
        .iter()
        .map(|colony| {
            let color_connected = colony
                .brains
                .iter()
                .map(|b| &b.genotype)
                .chain(colony.deadpool.entries().iter().map(|(g, _)| g))
                .any(|g| {
                    g.core
                        .sensors
                        .iter()
                        .any(|s| s.tag == "color" && !s.fanout.is_empty())
                });
            SpeciesSummary {
                species: colony.species,
                deadpool_fitness: colony.deadpool.fitnesses().collect(),
                color_connected,
            }
        })
        .collect();

    Ok(ScenarioResult {
        evaluations: world.evaluations,
        steps: world.steps,
        traces: world.traces,
        species,
        replay: world.replay,
        energy_imbalance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(scenario: Scenario, version: u8, seed: u64, cap: usize) -> FlatlandConfig {
        let mut cfg = FlatlandConfig::new(scenario, version, seed);
        cfg.population = 4;
        cfg.plants = 8;
        cfg.evaluation_cap = cap;
        cfg.trace_interval = 10;
        cfg.record_replay = true;
        cfg
    }

    #[test]
    fn config_rejects_bad_versions_and_caps() {
        let mut cfg = FlatlandConfig::new(Scenario::Food, 5, 0);
        assert!(run_scenario(&cfg).is_err());
        cfg.version = 1;
        cfg.evaluation_cap = 0;
        assert!(run_scenario(&cfg).is_err());
        cfg.evaluation_cap = 10;
        cfg.population = 1;
        assert!(run_scenario(&cfg).is_err());
    }

    #[test]
    fn food_run_reaches_cap_and_balances_energy() {
        let r = run_scenario(&tiny(Scenario::Food, 1, 5, 40)).unwrap();
        assert!(r.evaluations >= 40);
        assert!(r.steps > 0);
        assert!(
            r.energy_imbalance.abs() < 1e-6 * (r.evaluations as f64) * START_ENERGY,
            "imbalance {}",
            r.energy_imbalance
        );
        assert_eq!(r.species.len(), 1);
        assert_eq!(r.species[0].species, Species::Prey);
    }

    #[test]
    fn replay_and_traces_are_deterministic() {
        let a = run_scenario(&tiny(Scenario::Food, 2, 9, 30)).unwrap();
        let b = run_scenario(&tiny(Scenario::Food, 2, 9, 30)).unwrap();
        assert_eq!(a.replay, b.replay);
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.steps, b.steps);
        let c = run_scenario(&tiny(Scenario::Food, 2, 10, 30)).unwrap();
        assert_ne!(a.replay, c.replay);
    }

    #[test]
    fn replay_grammar_is_wellformed() {
        let r = run_scenario(&tiny(Scenario::Food, 1, 3, 20)).unwrap();
        assert!(!r.replay.is_empty());
        for line in &r.replay {
            let mut parts = line.split_whitespace();
            let verb = parts.next().unwrap();
            let arity = parts.count();
            match verb {
                "STEP" => assert_eq!(arity, 1, "{line}"),
                "MOVE" => assert_eq!(arity, 4, "{line}"),
                "EAT" => assert_eq!(arity, 2, "{line}"),
                "DEATH" => assert_eq!(arity, 2, "{line}"),
                "SPAWN" => assert_eq!(arity, 4, "{line}"),
                other => panic!("unknown replay verb {other}"),
            }
        }
    }

    #[test]
    fn traces_cover_both_species_in_predator_prey() {
        let r = run_scenario(&tiny(Scenario::PredatorPrey, 1, 7, 25)).unwrap();
        assert_eq!(r.species.len(), 2);
        assert!(r.traces.iter().any(|t| t.species == Species::Prey));
        assert!(r.traces.iter().any(|t| t.species == Species::Predator));
        // Rows come in interval-aligned groups, one per species.
        for pair in r.traces.chunks(2) {
            assert_eq!(pair[0].evaluation, pair[1].evaluation);
        }
    }

    #[test]
    fn version_parity_controls_color_wiring() {
        let wired = species_seed_spec(1);
        assert_eq!(wired.sensors.len(), 2);
        assert!(wired.spare_sensors.is_empty());
        let spare = species_seed_spec(2);
        assert_eq!(spare.sensors.len(), 1);
        assert_eq!(spare.spare_sensors.len(), 1);
        assert_eq!(spare.spare_sensors[0].tag, "color");

        // An even-version run starts with no color connections anywhere;
        // the spare sensor still rides along in every genotype.
        let r = run_scenario(&tiny(Scenario::Food, 2, 1, 12)).unwrap();
        let _ = r.species[0].color_connected;
    }

    #[test]
    fn deadpool_fills_as_sessions_finish() {
        // Base 1 keeps hill climbs short so the pool turns over quickly.
        let mut cfg = tiny(Scenario::Food, 1, 11, 120);
        cfg.base_max_mistakes = 1;
        let r = run_scenario(&cfg).unwrap();
        assert!(!r.species[0].deadpool_fitness.is_empty());
        assert!(r.species[0].deadpool_fitness.len() <= cfg.population);
        for f in &r.species[0].deadpool_fitness {
            assert!(*f >= 0.0);
        }
    }

    #[test]
    fn trace_rows_are_interval_aligned() {
        let r = run_scenario(&tiny(Scenario::Food, 1, 13, 35)).unwrap();
        let marks: Vec<usize> = r.traces.iter().map(|t| t.evaluation).collect();
        assert_eq!(marks[0], 0);
        assert!(marks.windows(2).all(|w| w[0] <= w[1]));
        assert!(marks.iter().any(|&m| m >= 10), "no interval mark reached: {marks:?}");
    }
}
