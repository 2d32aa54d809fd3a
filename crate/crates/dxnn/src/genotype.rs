//! Tuple-encoded DXNN genotypes: element ids, seed-population construction,
//! cloning, and structural validation.
//!
//! A genotype is one supervising core plus a flat list of neurons. All
//! cross-references between elements go through [`ElementId`]s, so a genotype
//! can be traversed, mutated, and persisted without pointer juggling.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenotypeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("genotype {genotype:?} violates invariant: {message}")]
    Invariant { genotype: ElementId, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementKind {
    Core,
    Neuron,
    Sensor,
    Actuator,
    Bias,
}

/// Identifier of one element, unique per population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementId {
    pub kind: ElementKind,
    pub serial: u64,
}

impl std::fmt::Display for ElementId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = match self.kind {
            ElementKind::Core => "core",
            ElementKind::Neuron => "neuron",
            ElementKind::Sensor => "sensor",
            ElementKind::Actuator => "actuator",
            ElementKind::Bias => "bias",
        };
        write!(f, "{k}:{}", self.serial)
    }
}

/// Monotone serial source shared by everything that creates elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdGen {
    next: u64,
}

impl IdGen {
    pub fn new() -> Self {
        IdGen { next: 0 }
    }

    pub fn starting_at(next: u64) -> Self {
        IdGen { next }
    }

    pub fn fresh(&mut self, kind: ElementKind) -> ElementId {
        let id = ElementId { kind, serial: self.next };
        self.next += 1;
        id
    }

    pub fn next_serial(&self) -> u64 {
        self.next
    }
}

impl Default for IdGen {
    fn default() -> Self {
        Self::new()
    }
}

/// How a core routes sensor data into one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkType {
    /// One indexed scalar of the sensor's vector.
    Single(usize),
    /// The sensor's whole vector.
    Block,
    /// Concatenation of every sensor vector in the core's sensor list.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fanout {
    pub neuron: ElementId,
    pub link: LinkType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub id: ElementId,
    pub tag: String,
    pub vector_length: usize,
    pub fanout: Vec<Fanout>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorSpec {
    pub id: ElementId,
    pub tag: String,
    pub vector_length: usize,
    /// Neurons whose scalar outputs form the actuator vector, in slot order.
    /// Empty while the actuator is unused; length == vector_length once wired.
    pub fanin: Vec<ElementId>,
}

impl ActuatorSpec {
    pub fn is_used(&self) -> bool {
        !self.fanin.is_empty()
    }
}

impl SensorSpec {
    pub fn is_used(&self) -> bool {
        !self.fanout.is_empty()
    }
}

/// One incoming connection as the neuron sees it: where from, and how wide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub from: ElementId,
    pub vector_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronElement {
    pub id: ElementId,
    pub input_list: Vec<InputRef>,
    pub output_list: Vec<ElementId>,
    pub activation: String,
    pub learning: String,
    /// One weight per incoming scalar, in input_list order; the bias weight,
    /// when present, is last.
    pub weights: Vec<f64>,
    pub has_bias: bool,
    pub parameters: Vec<(String, String)>,
    pub generation: u32,
}

impl NeuronElement {
    pub fn input_width(&self) -> usize {
        self.input_list.iter().map(|i| i.vector_length).sum()
    }

    pub fn expected_weight_count(&self) -> usize {
        self.input_width() + usize::from(self.has_bias)
    }

    /// Offset and length of the weight slice feeding input entry `idx`.
    pub fn weight_span(&self, idx: usize) -> (usize, usize) {
        let offset = self.input_list[..idx].iter().map(|i| i.vector_length).sum();
        (offset, self.input_list[idx].vector_length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub operator: String,
    pub applied_to: ElementId,
    pub info: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreElement {
    pub id: ElementId,
    pub sensors: Vec<SensorSpec>,
    pub actuators: Vec<ActuatorSpec>,
    pub parameters: Vec<(String, String)>,
    pub supervised_neuron_ids: Vec<ElementId>,
    pub generation: u32,
    pub history: Vec<HistoryEntry>,
}

impl CoreElement {
    /// Width of an `All`-type link: every sensor vector concatenated,
    /// used or not, so the width never changes under mutation.
    pub fn all_link_width(&self) -> usize {
        self.sensors.iter().map(|s| s.vector_length).sum()
    }

    pub fn link_width(&self, sensor_idx: usize, link: LinkType) -> usize {
        match link {
            LinkType::Single(_) => 1,
            LinkType::Block => self.sensors[sensor_idx].vector_length,
            LinkType::All => self.all_link_width(),
        }
    }

    pub fn sensor_index(&self, id: ElementId) -> Option<usize> {
        self.sensors.iter().position(|s| s.id == id)
    }

    pub fn actuator_index(&self, id: ElementId) -> Option<usize> {
        self.actuators.iter().position(|a| a.id == id)
    }

    /// Half-range for every random weight drawn on behalf of this genotype,
    /// stamped at seeding time and inherited by offspring.
    pub fn weight_half_range(&self) -> f64 {
        self.parameters
            .iter()
            .find(|(k, _)| k == "weight_half_range")
            .and_then(|(_, v)| v.parse().ok())
            .unwrap_or(FRAC_PI_2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DxnnGenotype {
    pub dxnn_id: ElementId,
    pub core: CoreElement,
    pub neurons: Vec<NeuronElement>,
    pub fitness: Option<f64>,
}

impl DxnnGenotype {
    pub fn size(&self) -> usize {
        self.neurons.len()
    }

    pub fn neuron(&self, id: ElementId) -> Option<&NeuronElement> {
        self.neurons.iter().find(|n| n.id == id)
    }

    pub fn neuron_mut(&mut self, id: ElementId) -> Option<&mut NeuronElement> {
        self.neurons.iter_mut().find(|n| n.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub population_id: ElementId,
    pub members: Vec<DxnnGenotype>,
    pub limit: usize,
    pub rng_seed: u64,
    pub ids: IdGen,
}

/// Sensor or actuator template used when seeding a population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoTemplate {
    pub tag: String,
    pub vector_length: usize,
}

impl IoTemplate {
    pub fn new(tag: impl Into<String>, vector_length: usize) -> Self {
        IoTemplate { tag: tag.into(), vector_length }
    }
}

/// Everything create_seed needs. `spare_sensors`/`spare_actuators` are placed
/// in the core's lists unused, waiting for an add-tag mutation to wire them.
#[derive(Debug, Clone)]
pub struct SeedSpec {
    pub sensors: Vec<IoTemplate>,
    pub spare_sensors: Vec<IoTemplate>,
    pub actuators: Vec<IoTemplate>,
    pub spare_actuators: Vec<IoTemplate>,
    pub activation: String,
    pub learning: String,
    /// Half-range of the uniform initial-weight draw.
    pub weight_half_range: f64,
}

impl SeedSpec {
    pub fn new(sensors: Vec<IoTemplate>, actuators: Vec<IoTemplate>) -> Self {
        SeedSpec {
            sensors,
            spare_sensors: Vec::new(),
            actuators,
            spare_actuators: Vec::new(),
            activation: "tanh".to_string(),
            learning: "none".to_string(),
            weight_half_range: FRAC_PI_2,
        }
    }
}

/// Initial weights are uniform in (-pi/2, pi/2), the same half-range the
/// tuning phase perturbs with, so one perturbation spans the initial range.
pub fn init_weight(rng: &mut impl Rng) -> f64 {
    init_weight_in(FRAC_PI_2, rng)
}

/// Random weight in (-half_range, half_range). The half-range is the same
/// knob as the tuning perturbation half-range, so narrowing one narrows every
/// source of weight randomness together.
pub fn init_weight_in(half_range: f64, rng: &mut impl Rng) -> f64 {
    rng.random_range(-half_range..half_range)
}

pub fn random_link_type(vector_length: usize, rng: &mut impl Rng) -> LinkType {
    match rng.random_range(0..3) {
        0 => LinkType::Single(rng.random_range(0..vector_length)),
        1 => LinkType::Block,
        _ => LinkType::All,
    }
}

/// Build the minimal seed population. One sensor and one actuator of vector
/// length 1 gives single-neuron genotypes; otherwise two fully interconnected
/// layers: one neuron per sensor, then one neuron per actuator output slot.
pub fn create_seed(
    spec: &SeedSpec,
    count: usize,
    limit: usize,
    rng_seed: u64,
) -> Result<Population, GenotypeError> {
    if count == 0 {
        return Err(GenotypeError::Config("population count must be at least 1".into()));
    }
    if limit == 0 {
        return Err(GenotypeError::Config("population limit must be at least 1".into()));
    }
    if spec.sensors.is_empty() {
        return Err(GenotypeError::Config("at least one sensor template required".into()));
    }
    if spec.actuators.is_empty() {
        return Err(GenotypeError::Config("at least one actuator template required".into()));
    }
    for t in spec.sensors.iter().chain(&spec.spare_sensors) {
        if t.vector_length == 0 {
            return Err(GenotypeError::Config(format!("sensor {} has zero vector length", t.tag)));
        }
    }
    for t in spec.actuators.iter().chain(&spec.spare_actuators) {
        if t.vector_length == 0 {
            return Err(GenotypeError::Config(format!("actuator {} has zero vector length", t.tag)));
        }
    }

    let mut ids = IdGen::new();
    let population_id = ids.fresh(ElementKind::Core);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        members.push(seed_genotype(spec, &mut ids, &mut rng));
    }
    Ok(Population { population_id, members, limit, rng_seed, ids })
}

fn seed_genotype(spec: &SeedSpec, ids: &mut IdGen, rng: &mut impl Rng) -> DxnnGenotype {
    let dxnn_id = ids.fresh(ElementKind::Core);
    let core_id = ids.fresh(ElementKind::Core);

    let mut sensors: Vec<SensorSpec> = spec
        .sensors
        .iter()
        .chain(&spec.spare_sensors)
        .map(|t| SensorSpec {
            id: ids.fresh(ElementKind::Sensor),
            tag: t.tag.clone(),
            vector_length: t.vector_length,
            fanout: Vec::new(),
        })
        .collect();
    let mut actuators: Vec<ActuatorSpec> = spec
        .actuators
        .iter()
        .chain(&spec.spare_actuators)
        .map(|t| ActuatorSpec {
            id: ids.fresh(ElementKind::Actuator),
            tag: t.tag.clone(),
            vector_length: t.vector_length,
            fanin: Vec::new(),
        })
        .collect();

    let wired_sensors = spec.sensors.len();
    let wired_actuators = spec.actuators.len();
    let all_width: usize = sensors.iter().map(|s| s.vector_length).sum();
    let mut neurons: Vec<NeuronElement> = Vec::new();

    let new_neuron = |ids: &mut IdGen| NeuronElement {
        id: ids.fresh(ElementKind::Neuron),
        input_list: Vec::new(),
        output_list: Vec::new(),
        activation: spec.activation.clone(),
        learning: spec.learning.clone(),
        weights: Vec::new(),
        has_bias: false,
        parameters: Vec::new(),
        generation: 0,
    };

    let single_neuron = wired_sensors == 1
        && wired_actuators == 1
        && spec.actuators[0].vector_length == 1;

    if single_neuron {
        let mut n = new_neuron(ids);
        let link = random_link_type(sensors[0].vector_length, rng);
        let width = match link {
            LinkType::Single(_) => 1,
            LinkType::Block => sensors[0].vector_length,
            LinkType::All => all_width,
        };
        sensors[0].fanout.push(Fanout { neuron: n.id, link });
        n.input_list.push(InputRef { from: sensors[0].id, vector_length: width });
        for _ in 0..width {
            n.weights.push(init_weight_in(spec.weight_half_range, rng));
        }
        n.output_list.push(actuators[0].id);
        actuators[0].fanin.push(n.id);
        neurons.push(n);
    } else {
        // First layer: one neuron per wired sensor.
        let mut first = Vec::new();
        for si in 0..wired_sensors {
            let mut n = new_neuron(ids);
            let link = random_link_type(sensors[si].vector_length, rng);
            let width = match link {
                LinkType::Single(_) => 1,
                LinkType::Block => sensors[si].vector_length,
                LinkType::All => all_width,
            };
            sensors[si].fanout.push(Fanout { neuron: n.id, link });
            n.input_list.push(InputRef { from: sensors[si].id, vector_length: width });
            for _ in 0..width {
                n.weights.push(init_weight_in(spec.weight_half_range, rng));
            }
            first.push(n);
        }
        // Second layer: one neuron per actuator output slot, fully
        // interconnected with the first layer.
        let mut second = Vec::new();
        for ai in 0..wired_actuators {
            for _ in 0..actuators[ai].vector_length {
                let mut n = new_neuron(ids);
                for f in &mut first {
                    f.output_list.push(n.id);
                    n.input_list.push(InputRef { from: f.id, vector_length: 1 });
                    n.weights.push(init_weight_in(spec.weight_half_range, rng));
                }
                n.output_list.push(actuators[ai].id);
                actuators[ai].fanin.push(n.id);
                second.push(n);
            }
        }
        neurons.extend(first);
        neurons.extend(second);
    }

    let supervised: Vec<ElementId> = neurons.iter().map(|n| n.id).collect();
    DxnnGenotype {
        dxnn_id,
        core: CoreElement {
            id: core_id,
            sensors,
            actuators,
            parameters: vec![(
                "weight_half_range".to_string(),
                spec.weight_half_range.to_string(),
            )],
            supervised_neuron_ids: supervised,
            generation: 0,
            history: Vec::new(),
        },
        neurons,
        fitness: None,
    }
}

/// Deep-copy a genotype under a fresh contiguous block of ids, remapping every
/// link consistently. History is kept, fitness is cleared.
pub fn clone_with_new_id(parent: &DxnnGenotype, ids: &mut IdGen) -> DxnnGenotype {
    let mut map: HashMap<ElementId, ElementId> = HashMap::new();
    let dxnn_id = ids.fresh(ElementKind::Core);
    let core_id = ids.fresh(ElementKind::Core);
    map.insert(parent.dxnn_id, dxnn_id);
    map.insert(parent.core.id, core_id);
    for s in &parent.core.sensors {
        map.insert(s.id, ids.fresh(ElementKind::Sensor));
    }
    for a in &parent.core.actuators {
        map.insert(a.id, ids.fresh(ElementKind::Actuator));
    }
    for n in &parent.neurons {
        map.insert(n.id, ids.fresh(ElementKind::Neuron));
    }
    let remap = |id: ElementId| *map.get(&id).unwrap_or(&id);

    let core = CoreElement {
        id: core_id,
        sensors: parent
            .core
            .sensors
            .iter()
            .map(|s| SensorSpec {
                id: remap(s.id),
                tag: s.tag.clone(),
                vector_length: s.vector_length,
                fanout: s
                    .fanout
                    .iter()
                    .map(|f| Fanout { neuron: remap(f.neuron), link: f.link })
                    .collect(),
            })
            .collect(),
        actuators: parent
            .core
            .actuators
            .iter()
            .map(|a| ActuatorSpec {
                id: remap(a.id),
                tag: a.tag.clone(),
                vector_length: a.vector_length,
                fanin: a.fanin.iter().copied().map(remap).collect(),
            })
            .collect(),
        parameters: parent.core.parameters.clone(),
        supervised_neuron_ids: parent.core.supervised_neuron_ids.iter().copied().map(remap).collect(),
        generation: parent.core.generation,
        history: parent
            .core
            .history
            .iter()
            .map(|h| HistoryEntry {
                operator: h.operator.clone(),
                applied_to: remap(h.applied_to),
                info: h.info.clone(),
            })
            .collect(),
    };
    let neurons = parent
        .neurons
        .iter()
        .map(|n| NeuronElement {
            id: remap(n.id),
            input_list: n
                .input_list
                .iter()
                .map(|i| InputRef { from: remap(i.from), vector_length: i.vector_length })
                .collect(),
            output_list: n.output_list.iter().copied().map(remap).collect(),
            activation: n.activation.clone(),
            learning: n.learning.clone(),
            weights: n.weights.clone(),
            has_bias: n.has_bias,
            parameters: n.parameters.clone(),
            generation: n.generation,
        })
        .collect();
    DxnnGenotype { dxnn_id, core, neurons, fitness: None }
}

/// Checks every structural invariant; returns the first violation found.
pub fn validate(g: &DxnnGenotype) -> Result<(), GenotypeError> {
    let fail = |message: String| GenotypeError::Invariant { genotype: g.dxnn_id, message };

    let neuron_ids: HashSet<ElementId> = g.neurons.iter().map(|n| n.id).collect();
    if neuron_ids.len() != g.neurons.len() {
        return Err(fail("duplicate neuron ids".into()));
    }
    let supervised: HashSet<ElementId> = g.core.supervised_neuron_ids.iter().copied().collect();
    if supervised != neuron_ids {
        return Err(fail("supervised_neuron_ids does not match the neuron set".into()));
    }

    for n in &g.neurons {
        if n.weights.len() != n.expected_weight_count() {
            return Err(fail(format!(
                "{}: {} weights but input width {} (bias: {})",
                n.id,
                n.weights.len(),
                n.input_width(),
                n.has_bias
            )));
        }
        if n.generation > g.core.generation {
            return Err(fail(format!("{}: generation above core's", n.id)));
        }
        // Inbound mirroring, ordered pairing per source element.
        let mut seen_per_source: HashMap<ElementId, usize> = HashMap::new();
        for i in &n.input_list {
            let nth = seen_per_source.entry(i.from).or_insert(0);
            match i.from.kind {
                ElementKind::Neuron => {
                    if i.vector_length != 1 {
                        return Err(fail(format!("{}: neuron input wider than 1", n.id)));
                    }
                    let src = g
                        .neuron(i.from)
                        .ok_or_else(|| fail(format!("{}: dangling input {}", n.id, i.from)))?;
                    if !src.output_list.contains(&n.id) {
                        return Err(fail(format!("{}: unmirrored link from {}", n.id, i.from)));
                    }
                }
                ElementKind::Sensor => {
                    let si = g
                        .core
                        .sensor_index(i.from)
                        .ok_or_else(|| fail(format!("{}: dangling sensor input {}", n.id, i.from)))?;
                    let entries: Vec<&Fanout> = g.core.sensors[si]
                        .fanout
                        .iter()
                        .filter(|f| f.neuron == n.id)
                        .collect();
                    let Some(entry) = entries.get(*nth) else {
                        return Err(fail(format!("{}: no fanout entry on {} for input", n.id, i.from)));
                    };
                    let width = g.core.link_width(si, entry.link);
                    if width != i.vector_length {
                        return Err(fail(format!(
                            "{}: input width {} but routing entry implies {}",
                            n.id, i.vector_length, width
                        )));
                    }
                    if let LinkType::Single(idx) = entry.link {
                        if idx >= g.core.sensors[si].vector_length {
                            return Err(fail(format!("{}: single link index out of range", n.id)));
                        }
                    }
                }
                _ => return Err(fail(format!("{}: input from non-source {}", n.id, i.from))),
            }
            *nth += 1;
        }
        // Outbound mirroring.
        for out in &n.output_list {
            match out.kind {
                ElementKind::Neuron => {
                    let dst = g
                        .neuron(*out)
                        .ok_or_else(|| fail(format!("{}: dangling output {}", n.id, out)))?;
                    if !dst.input_list.iter().any(|i| i.from == n.id) {
                        return Err(fail(format!("{}: unmirrored link to {}", n.id, out)));
                    }
                }
                ElementKind::Actuator => {
                    let ai = g
                        .core
                        .actuator_index(*out)
                        .ok_or_else(|| fail(format!("{}: dangling actuator output {}", n.id, out)))?;
                    if !g.core.actuators[ai].fanin.contains(&n.id) {
                        return Err(fail(format!("{}: actuator {} has no matching fanin", n.id, out)));
                    }
                }
                _ => return Err(fail(format!("{}: output to non-sink {}", n.id, out))),
            }
        }
    }

    for s in &g.core.sensors {
        for f in &s.fanout {
            if !neuron_ids.contains(&f.neuron) {
                return Err(fail(format!("{}: fanout to unknown neuron {}", s.id, f.neuron)));
            }
        }
    }
    for a in &g.core.actuators {
        if a.is_used() && a.fanin.len() != a.vector_length {
            return Err(fail(format!(
                "{}: fanin length {} != vector length {}",
                a.id,
                a.fanin.len(),
                a.vector_length
            )));
        }
        for id in &a.fanin {
            if !neuron_ids.contains(id) {
                return Err(fail(format!("{}: fanin names unknown neuron {}", a.id, id)));
            }
        }
    }

    // Reachability: every neuron is fed (transitively) from a sensor, or
    // feeds (transitively) an actuator.
    let mut from_sensor: HashSet<ElementId> = HashSet::new();
    let mut queue: VecDeque<ElementId> = VecDeque::new();
    for s in &g.core.sensors {
        for f in &s.fanout {
            if from_sensor.insert(f.neuron) {
                queue.push_back(f.neuron);
            }
        }
    }
    while let Some(id) = queue.pop_front() {
        if let Some(n) = g.neuron(id) {
            for out in &n.output_list {
                if out.kind == ElementKind::Neuron && from_sensor.insert(*out) {
                    queue.push_back(*out);
                }
            }
        }
    }
    let mut to_actuator: HashSet<ElementId> = HashSet::new();
    for a in &g.core.actuators {
        for id in &a.fanin {
            if to_actuator.insert(*id) {
                queue.push_back(*id);
            }
        }
    }
    while let Some(id) = queue.pop_front() {
        if let Some(n) = g.neuron(id) {
            for i in &n.input_list {
                if i.from.kind == ElementKind::Neuron && to_actuator.insert(i.from) {
                    queue.push_back(i.from);
                }
            }
        }
    }
    for n in &g.neurons {
        if !from_sensor.contains(&n.id) && !to_actuator.contains(&n.id) {
            return Err(fail(format!("{}: unreachable neuron", n.id)));
        }
    }

    Ok(())
}

/// Structural equality ignoring element ids: same wiring, weights, tags, and
/// generations under the positional relabeling induced by list order.
pub fn structurally_equal(a: &DxnnGenotype, b: &DxnnGenotype) -> bool {
    canonical(a) == canonical(b)
}

fn canonical(g: &DxnnGenotype) -> DxnnGenotype {
    let mut ids = IdGen::new();
    let mut map: HashMap<ElementId, ElementId> = HashMap::new();
    map.insert(g.dxnn_id, ids.fresh(ElementKind::Core));
    map.insert(g.core.id, ids.fresh(ElementKind::Core));
    for s in &g.core.sensors {
        map.insert(s.id, ids.fresh(ElementKind::Sensor));
    }
    for a in &g.core.actuators {
        map.insert(a.id, ids.fresh(ElementKind::Actuator));
    }
    for n in &g.neurons {
        map.insert(n.id, ids.fresh(ElementKind::Neuron));
    }
    let remap = |id: ElementId| *map.get(&id).unwrap_or(&id);
    let mut out = g.clone();
    out.dxnn_id = remap(out.dxnn_id);
    out.core.id = remap(out.core.id);
    for s in &mut out.core.sensors {
        s.id = remap(s.id);
        for f in &mut s.fanout {
            f.neuron = remap(f.neuron);
        }
    }
    for a in &mut out.core.actuators {
        a.id = remap(a.id);
        for id in &mut a.fanin {
            *id = remap(*id);
        }
    }
    for id in &mut out.core.supervised_neuron_ids {
        *id = remap(*id);
    }
    out.core.supervised_neuron_ids.sort();
    for h in &mut out.core.history {
        h.applied_to = remap(h.applied_to);
    }
    for n in &mut out.neurons {
        n.id = remap(n.id);
        for i in &mut n.input_list {
            i.from = remap(i.from);
        }
        for o in &mut n.output_list {
            *o = remap(*o);
        }
    }
    out.fitness = None;
    out
}
