//! The topological mutation phase: an offspring is a cloned parent with a
//! random-intensity batch of structural mutation operators applied, every
//! application logged in the core's history.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::genotype::{
    clone_with_new_id, init_weight_in, DxnnGenotype, ElementId, ElementKind, Fanout, HistoryEntry,
    IdGen, InputRef, LinkType, NeuronElement,
};

/// Link type drawn when a mutation wires a sensor to a neuron. Weighted
/// toward the wide link types (Block 1/2, All 1/3, Single 1/6): a new hidden
/// neuron that sees the whole sensor vector is far more likely to open a
/// useful region of weight space than one wired to a lone scalar, and the
/// narrow draws mostly produce dead-end offspring that linger in the
/// population.
fn mutation_link_type(vector_length: usize, rng: &mut impl Rng) -> LinkType {
    let x: f64 = rng.random_range(0.0..1.0);
    if x < 0.5 {
        LinkType::Block
    } else if x < 5.0 / 6.0 {
        LinkType::All
    } else {
        LinkType::Single(rng.random_range(0..vector_length))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationOperator {
    AddNeuron,
    AddLink,
    SpliceNeuron,
    ChangeAf,
    ChangeLm,
    AddBias,
    AddSensorTag,
    AddActuatorTag,
}

impl MutationOperator {
    pub fn tag(self) -> &'static str {
        match self {
            MutationOperator::AddNeuron => "add_neuron",
            MutationOperator::AddLink => "add_link",
            MutationOperator::SpliceNeuron => "splice_neuron",
            MutationOperator::ChangeAf => "change_af",
            MutationOperator::ChangeLm => "change_lm",
            MutationOperator::AddBias => "add_bias",
            MutationOperator::AddSensorTag => "add_sensor_tag",
            MutationOperator::AddActuatorTag => "add_actuator_tag",
        }
    }
}

const CORE_OPERATORS: [MutationOperator; 6] = [
    MutationOperator::AddNeuron,
    MutationOperator::AddLink,
    MutationOperator::SpliceNeuron,
    MutationOperator::ChangeAf,
    MutationOperator::ChangeLm,
    MutationOperator::AddBias,
];

/// Bound on operator redraws when a draw has no legal application site;
/// past it the draw is skipped.
const MAX_REDRAWS: usize = 20;

/// Internal bound on random (source, destination) probes in add_link before
/// the graph is treated as saturated.
const LINK_PROBES: usize = 30;

#[derive(Debug, Clone)]
pub struct MutationConfig {
    /// Probability X of substituting add_sensor_tag for a draw.
    pub sensor_tag_probability: f64,
    /// Probability Y of substituting add_actuator_tag for a draw.
    pub actuator_tag_probability: f64,
    pub af_tags: Vec<String>,
    pub lm_tags: Vec<String>,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            sensor_tag_probability: 0.0,
            actuator_tag_probability: 0.0,
            af_tags: vec!["tanh".to_string()],
            lm_tags: vec!["none".to_string()],
        }
    }
}

/// Uniform draw over the six core operators, with the sensor/actuator tag
/// operators substituted first at their configured probabilities.
pub fn draw_operator(config: &MutationConfig, rng: &mut impl Rng) -> MutationOperator {
    if rng.random_bool(config.sensor_tag_probability.clamp(0.0, 1.0)) {
        return MutationOperator::AddSensorTag;
    }
    if rng.random_bool(config.actuator_tag_probability.clamp(0.0, 1.0)) {
        return MutationOperator::AddActuatorTag;
    }
    *CORE_OPERATORS.choose(rng).expect("non-empty operator list")
}

/// Number of operators for one offspring: uniform in 1..=round(sqrt(parent size)).
pub fn draw_operator_count(parent_size: usize, rng: &mut impl Rng) -> usize {
    let hi = (((parent_size as f64).sqrt()).round() as usize).max(1);
    rng.random_range(1..=hi)
}

/// Clone the parent under fresh ids and apply a random-intensity batch of
/// mutation operators. The parent is untouched.
pub fn mutate_offspring(
    parent: &DxnnGenotype,
    config: &MutationConfig,
    ids: &mut IdGen,
    rng: &mut impl Rng,
) -> DxnnGenotype {
    let mut child = clone_with_new_id(parent, ids);
    child.core.generation += 1;
    let m = draw_operator_count(parent.size(), rng);
    for _ in 0..m {
        for _attempt in 0..=MAX_REDRAWS {
            let op = draw_operator(config, rng);
            if let Some(applied) = apply_operator(&mut child, op, config, ids, rng) {
                let generation = child.core.generation;
                for id in &applied.touched {
                    if let Some(n) = child.neuron_mut(*id) {
                        n.generation = generation;
                    }
                }
                child.core.history.push(HistoryEntry {
                    operator: op.tag().to_string(),
                    applied_to: applied.applied_to,
                    info: applied.info,
                });
                break;
            }
        }
    }
    child
}

/// What one successful operator application reports back.
pub struct Applied {
    pub applied_to: ElementId,
    pub info: String,
    pub touched: Vec<ElementId>,
}

pub fn apply_operator(
    genotype: &mut DxnnGenotype,
    op: MutationOperator,
    config: &MutationConfig,
    ids: &mut IdGen,
    rng: &mut impl Rng,
) -> Option<Applied> {
    match op {
        MutationOperator::AddNeuron => add_neuron(genotype, config, ids, rng),
        MutationOperator::AddLink => add_link(genotype, rng),
        MutationOperator::SpliceNeuron => splice_neuron(genotype, config, ids, rng),
        MutationOperator::ChangeAf => change_af(genotype, config, rng),
        MutationOperator::ChangeLm => change_lm(genotype, config, rng),
        MutationOperator::AddBias => add_bias(genotype, rng),
        MutationOperator::AddSensorTag => add_sensor_tag(genotype, rng),
        MutationOperator::AddActuatorTag => add_actuator_tag(genotype, rng),
    }
}

fn used_sensor_indices(genotype: &DxnnGenotype) -> Vec<usize> {
    genotype
        .core
        .sensors
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_used())
        .map(|(i, _)| i)
        .collect()
}

/// Append `count` fresh weights for an input entry just pushed onto
/// `input_list`; the bias weight, when present, stays last. New weights use
/// the genotype's stamped half-range.
fn push_input_weights(
    neuron: &mut NeuronElement,
    count: usize,
    half_range: f64,
    rng: &mut impl Rng,
) {
    let at = neuron.weights.len() - usize::from(neuron.has_bias);
    for i in 0..count {
        neuron.weights.insert(at + i, init_weight_in(half_range, rng));
    }
}

fn connect_neurons(genotype: &mut DxnnGenotype, from: ElementId, to: ElementId, rng: &mut impl Rng) {
    let half = genotype.core.weight_half_range();
    genotype.neuron_mut(from).unwrap().output_list.push(to);
    let dst = genotype.neuron_mut(to).unwrap();
    dst.input_list.push(InputRef { from, vector_length: 1 });
    push_input_weights(dst, 1, half, rng);
}

fn connect_sensor(
    genotype: &mut DxnnGenotype,
    sensor_idx: usize,
    to: ElementId,
    link: LinkType,
    rng: &mut impl Rng,
) {
    let half = genotype.core.weight_half_range();
    let width = genotype.core.link_width(sensor_idx, link);
    let sensor_id = genotype.core.sensors[sensor_idx].id;
    genotype.core.sensors[sensor_idx].fanout.push(Fanout { neuron: to, link });
    let dst = genotype.neuron_mut(to).unwrap();
    dst.input_list.push(InputRef { from: sensor_id, vector_length: width });
    push_input_weights(dst, width, half, rng);
}

/// New neuron with random activation and learning tags, wired in with one
/// random inbound link (neuron or used sensor) and one outbound link.
pub fn add_neuron(
    genotype: &mut DxnnGenotype,
    config: &MutationConfig,
    ids: &mut IdGen,
    rng: &mut impl Rng,
) -> Option<Applied> {
    let neuron_ids: Vec<ElementId> = genotype.neurons.iter().map(|n| n.id).collect();
    if neuron_ids.is_empty() {
        return None;
    }
    let new_id = ids.fresh(ElementKind::Neuron);
    let neuron = NeuronElement {
        id: new_id,
        input_list: Vec::new(),
        output_list: Vec::new(),
        activation: config.af_tags.choose(rng)?.clone(),
        learning: config.lm_tags.choose(rng)?.clone(),
        weights: Vec::new(),
        has_bias: false,
        parameters: Vec::new(),
        generation: genotype.core.generation,
    };
    genotype.neurons.push(neuron);
    genotype.core.supervised_neuron_ids.push(new_id);

    let sensors = used_sensor_indices(genotype);
    let source_slots = neuron_ids.len() + sensors.len();
    let pick = rng.random_range(0..source_slots);
    let source_desc;
    if pick < neuron_ids.len() {
        let src = neuron_ids[pick];
        connect_neurons(genotype, src, new_id, rng);
        source_desc = src.to_string();
    } else {
        let si = sensors[pick - neuron_ids.len()];
        let link = mutation_link_type(genotype.core.sensors[si].vector_length, rng);
        connect_sensor(genotype, si, new_id, link, rng);
        source_desc = genotype.core.sensors[si].id.to_string();
    }

    // Outbound: a random neuron, or an unfilled actuator slot when one
    // exists (active actuators are created full, so this is rare).
    let open_actuators: Vec<usize> = genotype
        .core
        .actuators
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_used() && a.fanin.len() < a.vector_length)
        .map(|(i, _)| i)
        .collect();
    let dest_slots = neuron_ids.len() + open_actuators.len();
    let pick = rng.random_range(0..dest_slots);
    let dest_desc;
    if pick < neuron_ids.len() {
        let dst = neuron_ids[pick];
        connect_neurons(genotype, new_id, dst, rng);
        dest_desc = dst.to_string();
    } else {
        let ai = open_actuators[pick - neuron_ids.len()];
        let actuator_id = genotype.core.actuators[ai].id;
        genotype.core.actuators[ai].fanin.push(new_id);
        genotype.neuron_mut(new_id).unwrap().output_list.push(actuator_id);
        dest_desc = actuator_id.to_string();
    }

    let mut touched = vec![new_id];
    touched.extend(genotype.neuron(new_id).unwrap().input_list.iter().map(|i| i.from));
    touched.extend(genotype.neuron(new_id).unwrap().output_list.iter().copied());
    Some(Applied {
        applied_to: new_id,
        info: format!("from {source_desc} to {dest_desc}"),
        touched,
    })
}

/// New random link, recurrent and self-loops allowed; sensor sources get a
/// random link type. Duplicates of an existing link are never produced.
pub fn add_link(genotype: &mut DxnnGenotype, rng: &mut impl Rng) -> Option<Applied> {
    let neuron_ids: Vec<ElementId> = genotype.neurons.iter().map(|n| n.id).collect();
    let sensors = used_sensor_indices(genotype);
    for _ in 0..LINK_PROBES {
        let dst = *neuron_ids.choose(rng)?;
        let pick = rng.random_range(0..neuron_ids.len() + sensors.len());
        if pick < neuron_ids.len() {
            let src = neuron_ids[pick];
            if genotype.neuron(src).unwrap().output_list.contains(&dst) {
                continue;
            }
            connect_neurons(genotype, src, dst, rng);
            return Some(Applied {
                applied_to: dst,
                info: format!("from {src}"),
                touched: vec![src, dst],
            });
        } else {
            let si = sensors[pick - neuron_ids.len()];
            let link = mutation_link_type(genotype.core.sensors[si].vector_length, rng);
            let duplicate = genotype.core.sensors[si]
                .fanout
                .iter()
                .any(|f| f.neuron == dst && f.link == link);
            if duplicate {
                continue;
            }
            let sid = genotype.core.sensors[si].id;
            connect_sensor(genotype, si, dst, link, rng);
            return Some(Applied {
                applied_to: dst,
                info: format!("from {sid}"),
                touched: vec![dst],
            });
        }
    }
    None
}

/// Disconnect one neuron-to-neuron link and reconnect it through a new neuron.
pub fn splice_neuron(
    genotype: &mut DxnnGenotype,
    config: &MutationConfig,
    ids: &mut IdGen,
    rng: &mut impl Rng,
) -> Option<Applied> {
    let links: Vec<(ElementId, ElementId)> = genotype
        .neurons
        .iter()
        .flat_map(|n| {
            n.output_list
                .iter()
                .filter(|o| o.kind == ElementKind::Neuron)
                .map(move |o| (n.id, *o))
        })
        .collect();
    let (a, b) = *links.choose(rng)?;

    // Remove a -> b (first occurrence on both sides, weights included).
    {
        let src = genotype.neuron_mut(a).unwrap();
        let pos = src.output_list.iter().position(|o| *o == b).unwrap();
        src.output_list.remove(pos);
    }
    {
        let dst = genotype.neuron_mut(b).unwrap();
        let idx = dst.input_list.iter().position(|i| i.from == a).unwrap();
        let (offset, width) = dst.weight_span(idx);
        debug_assert_eq!(width, 1);
        dst.input_list.remove(idx);
        dst.weights.remove(offset);
    }

    let c = ids.fresh(ElementKind::Neuron);
    genotype.neurons.push(NeuronElement {
        id: c,
        input_list: Vec::new(),
        output_list: Vec::new(),
        activation: config.af_tags.choose(rng)?.clone(),
        learning: config.lm_tags.choose(rng)?.clone(),
        weights: Vec::new(),
        has_bias: false,
        parameters: Vec::new(),
        generation: genotype.core.generation,
    });
    genotype.core.supervised_neuron_ids.push(c);
    connect_neurons(genotype, a, c, rng);
    connect_neurons(genotype, c, b, rng);
    Some(Applied {
        applied_to: c,
        info: format!("between {a} and {b}"),
        touched: vec![a, b, c],
    })
}

/// Give a random neuron a different activation function.
pub fn change_af(
    genotype: &mut DxnnGenotype,
    config: &MutationConfig,
    rng: &mut impl Rng,
) -> Option<Applied> {
    let eligible: Vec<ElementId> = genotype
        .neurons
        .iter()
        .filter(|n| config.af_tags.iter().any(|t| *t != n.activation))
        .map(|n| n.id)
        .collect();
    let id = *eligible.choose(rng)?;
    let current = genotype.neuron(id).unwrap().activation.clone();
    let choices: Vec<&String> = config.af_tags.iter().filter(|t| **t != current).collect();
    let new_tag = (*choices.choose(rng)?).clone();
    genotype.neuron_mut(id).unwrap().activation = new_tag.clone();
    Some(Applied { applied_to: id, info: new_tag, touched: vec![id] })
}

/// Give a random neuron a different learning method.
pub fn change_lm(
    genotype: &mut DxnnGenotype,
    config: &MutationConfig,
    rng: &mut impl Rng,
) -> Option<Applied> {
    let eligible: Vec<ElementId> = genotype
        .neurons
        .iter()
        .filter(|n| config.lm_tags.iter().any(|t| *t != n.learning))
        .map(|n| n.id)
        .collect();
    let id = *eligible.choose(rng)?;
    let current = genotype.neuron(id).unwrap().learning.clone();
    let choices: Vec<&String> = config.lm_tags.iter().filter(|t| **t != current).collect();
    let new_tag = (*choices.choose(rng)?).clone();
    genotype.neuron_mut(id).unwrap().learning = new_tag.clone();
    Some(Applied { applied_to: id, info: new_tag, touched: vec![id] })
}

/// Add a bias weight to a neuron that lacks one.
pub fn add_bias(genotype: &mut DxnnGenotype, rng: &mut impl Rng) -> Option<Applied> {
    let eligible: Vec<ElementId> =
        genotype.neurons.iter().filter(|n| !n.has_bias).map(|n| n.id).collect();
    let id = *eligible.choose(rng)?;
    let half = genotype.core.weight_half_range();
    let n = genotype.neuron_mut(id).unwrap();
    n.has_bias = true;
    n.weights.push(init_weight_in(half, rng));
    Some(Applied { applied_to: id, info: String::new(), touched: vec![id] })
}

/// Wire a currently unused sensor to a random neuron with a random link type.
pub fn add_sensor_tag(genotype: &mut DxnnGenotype, rng: &mut impl Rng) -> Option<Applied> {
    let unused: Vec<usize> = genotype
        .core
        .sensors
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_used())
        .map(|(i, _)| i)
        .collect();
    let si = *unused.choose(rng)?;
    let dst = genotype.neurons.choose(rng)?.id;
    let link = mutation_link_type(genotype.core.sensors[si].vector_length, rng);
    let sid = genotype.core.sensors[si].id;
    connect_sensor(genotype, si, dst, link, rng);
    Some(Applied { applied_to: sid, info: format!("to {dst}"), touched: vec![dst] })
}

/// Wire a currently unused actuator: its fanin is filled with distinct random
/// neurons (with replacement only when the network is smaller than the
/// actuator vector).
pub fn add_actuator_tag(genotype: &mut DxnnGenotype, rng: &mut impl Rng) -> Option<Applied> {
    let unused: Vec<usize> = genotype
        .core
        .actuators
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_used())
        .map(|(i, _)| i)
        .collect();
    let ai = *unused.choose(rng)?;
    let need = genotype.core.actuators[ai].vector_length;
    let n = genotype.neurons.len();
    let chosen: Vec<ElementId> = if n >= need {
        rand::seq::index::sample(rng, n, need)
            .into_iter()
            .map(|i| genotype.neurons[i].id)
            .collect()
    } else {
        (0..need).map(|_| genotype.neurons[rng.random_range(0..n)].id).collect()
    };
    let actuator_id = genotype.core.actuators[ai].id;
    for id in &chosen {
        genotype.core.actuators[ai].fanin.push(*id);
        genotype.neuron_mut(*id).unwrap().output_list.push(actuator_id);
    }
    let info = chosen.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
    Some(Applied { applied_to: actuator_id, info, touched: chosen })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::{create_seed, validate, IoTemplate, SeedSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seed_pop(sensors: Vec<IoTemplate>, actuators: Vec<IoTemplate>) -> crate::genotype::Population {
        create_seed(&SeedSpec::new(sensors, actuators), 1, 1, 42).unwrap()
    }

    fn minimal() -> crate::genotype::Population {
        seed_pop(vec![IoTemplate::new("in", 1)], vec![IoTemplate::new("out", 1)])
    }

    #[test]
    fn one_neuron_parent_gets_exactly_one_operator() {
        let mut pop = minimal();
        let parent = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let child = mutate_offspring(&parent, &MutationConfig::default(), &mut pop.ids, &mut rng);
            assert_eq!(child.core.history.len(), 1, "sqrt(1) = 1 operator");
            assert_eq!(child.core.generation, 1);
            validate(&child).unwrap();
        }
    }

    #[test]
    fn parent_is_untouched() {
        let mut pop = minimal();
        let parent = pop.members[0].clone();
        let snapshot = parent.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            mutate_offspring(&parent, &MutationConfig::default(), &mut pop.ids, &mut rng);
        }
        assert_eq!(parent, snapshot);
    }

    #[test]
    fn add_neuron_grows_by_one_with_two_endpoints() {
        let mut pop = minimal();
        let mut g = pop.members[0].clone();
        let links_before: usize = g.neurons.iter().map(|n| n.input_list.len()).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let applied = add_neuron(&mut g, &MutationConfig::default(), &mut pop.ids, &mut rng).unwrap();
        assert_eq!(g.size(), 2);
        let links_after: usize = g.neurons.iter().map(|n| n.input_list.len()).sum();
        assert_eq!(links_after - links_before, 2);
        let new = g.neuron(applied.applied_to).unwrap();
        assert_eq!(new.generation, g.core.generation);
        validate(&g).unwrap();
    }

    #[test]
    fn add_neuron_fifty_times() {
        let mut pop = minimal();
        let mut g = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            add_neuron(&mut g, &MutationConfig::default(), &mut pop.ids, &mut rng).unwrap();
        }
        assert_eq!(g.size(), 51);
        validate(&g).unwrap();
    }

    #[test]
    fn add_link_self_loop_on_single_neuron() {
        let pop = minimal();
        let mut g = pop.members[0].clone();
        let nid = g.neurons[0].id;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Probe until the neuron->neuron self-loop lands (the only
        // neuron-source option on a 1-neuron net).
        loop {
            let before = g.neurons[0].input_list.len();
            add_link(&mut g, &mut rng);
            if g.neurons[0].input_list.iter().any(|i| i.from == nid) {
                break;
            }
            assert!(g.neurons[0].input_list.len() >= before);
        }
        let n = &g.neurons[0];
        assert!(n.input_list.iter().any(|i| i.from == nid && i.vector_length == 1));
        assert!(n.output_list.contains(&nid));
        validate(&g).unwrap();
        // A second self-loop is a duplicate and is never produced.
        for _ in 0..50 {
            add_link(&mut g, &mut rng);
        }
        let self_loops =
            g.neurons[0].input_list.iter().filter(|i| i.from == nid).count();
        assert_eq!(self_loops, 1);
        validate(&g).unwrap();
    }

    #[test]
    fn add_link_single_type_on_wide_sensor() {
        let pop = seed_pop(
            vec![IoTemplate::new("wide", 100), IoTemplate::new("aux", 1)],
            vec![IoTemplate::new("out", 1)],
        );
        let mut g = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let baseline: usize = g.neurons.iter().map(|n| n.weights.len()).sum();
        loop {
            if let Some(applied) = add_link(&mut g, &mut rng) {
                let entry = g.core.sensors[0].fanout.iter().rev().next().unwrap();
                if let LinkType::Single(idx) = entry.link {
                    if g.core.sensors[0].fanout.iter().filter(|f| f.neuron == applied.applied_to).count() > 0 {
                        assert!(idx < 100);
                        break;
                    }
                }
            }
            let total: usize = g.neurons.iter().map(|n| n.weights.len()).sum();
            if total > baseline + 500 {
                panic!("single-type sensor link never drawn");
            }
        }
        validate(&g).unwrap();
    }

    #[test]
    fn splice_inserts_between_endpoints() {
        let mut pop = seed_pop(
            vec![IoTemplate::new("a", 1), IoTemplate::new("b", 1)],
            vec![IoTemplate::new("out", 1)],
        );
        let mut g = pop.members[0].clone();
        let size_before = g.size();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let applied = splice_neuron(&mut g, &MutationConfig::default(), &mut pop.ids, &mut rng)
            .unwrap();
        assert_eq!(g.size(), size_before + 1);
        let c = g.neuron(applied.applied_to).unwrap();
        assert_eq!(c.input_list.len(), 1);
        assert_eq!(c.output_list.len(), 1);
        let a = c.input_list[0].from;
        let b = c.output_list[0];
        // a no longer links b directly.
        assert!(!g.neuron(a).unwrap().output_list.contains(&b) || a == b);
        validate(&g).unwrap();
    }

    #[test]
    fn splice_of_self_loop() {
        let mut pop = minimal();
        let mut g = pop.members[0].clone();
        let nid = g.neurons[0].id;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // Install a self-loop, then splice it (the only neuron->neuron link).
        loop {
            add_link(&mut g, &mut rng);
            if g.neurons[0].input_list.iter().any(|i| i.from == nid) {
                break;
            }
        }
        let applied = splice_neuron(&mut g, &MutationConfig::default(), &mut pop.ids, &mut rng)
            .unwrap();
        let c = g.neuron(applied.applied_to).unwrap();
        assert_eq!(c.input_list[0].from, nid);
        assert_eq!(c.output_list[0], nid);
        assert!(!g.neuron(nid).unwrap().output_list.contains(&nid));
        validate(&g).unwrap();
    }

    #[test]
    fn splice_without_neuron_links_is_inapplicable() {
        let mut pop = minimal();
        let mut g = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(splice_neuron(&mut g, &MutationConfig::default(), &mut pop.ids, &mut rng).is_none());
    }

    #[test]
    fn add_bias_then_saturated() {
        let pop = minimal();
        let mut g = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w = g.neurons[0].weights.len();
        assert!(add_bias(&mut g, &mut rng).is_some());
        assert_eq!(g.neurons[0].weights.len(), w + 1);
        assert!(g.neurons[0].has_bias);
        validate(&g).unwrap();
        // Everything biased now: no legal site.
        assert!(add_bias(&mut g, &mut rng).is_none());
    }

    #[test]
    fn change_af_needs_an_alternative() {
        let pop = minimal();
        let mut g = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let only_tanh = MutationConfig::default();
        assert!(change_af(&mut g, &only_tanh, &mut rng).is_none());
        let cfg = MutationConfig {
            af_tags: vec!["tanh".into(), "sin".into()],
            ..MutationConfig::default()
        };
        let applied = change_af(&mut g, &cfg, &mut rng).unwrap();
        assert_eq!(applied.info, "sin");
        assert_eq!(g.neurons[0].activation, "sin");
    }

    #[test]
    fn change_lm_switches_learning() {
        let pop = minimal();
        let mut g = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cfg = MutationConfig {
            lm_tags: vec!["none".into(), "hebbian".into()],
            ..MutationConfig::default()
        };
        change_lm(&mut g, &cfg, &mut rng).unwrap();
        assert_eq!(g.neurons[0].learning, "hebbian");
    }

    #[test]
    fn add_sensor_tag_wires_an_unused_sensor() {
        let pop = create_seed(
            &SeedSpec {
                spare_sensors: vec![IoTemplate::new("color", 5)],
                ..SeedSpec::new(vec![IoTemplate::new("range", 5)], vec![IoTemplate::new("out", 2)])
            },
            1,
            1,
            13,
        )
        .unwrap();
        let mut g = pop.members[0].clone();
        assert!(!g.core.sensors[1].is_used());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let applied = add_sensor_tag(&mut g, &mut rng).unwrap();
        assert_eq!(applied.applied_to, g.core.sensors[1].id);
        assert!(g.core.sensors[1].is_used());
        validate(&g).unwrap();
        // Every sensor used: inapplicable now.
        assert!(add_sensor_tag(&mut g, &mut rng).is_none());
    }

    #[test]
    fn add_actuator_tag_fills_the_whole_fanin() {
        let pop = create_seed(
            &SeedSpec {
                spare_actuators: vec![IoTemplate::new("extra", 2)],
                ..SeedSpec::new(vec![IoTemplate::new("in", 2)], vec![IoTemplate::new("out", 2)])
            },
            1,
            1,
            14,
        )
        .unwrap();
        let mut g = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let applied = add_actuator_tag(&mut g, &mut rng).unwrap();
        let ai = g.core.actuator_index(applied.applied_to).unwrap();
        assert_eq!(g.core.actuators[ai].fanin.len(), 2);
        validate(&g).unwrap();
        assert!(add_actuator_tag(&mut g, &mut rng).is_none());
    }

    #[test]
    fn inapplicable_operator_is_redrawn() {
        // add_bias the sole neuron, then force every draw through the phase:
        // history must still fill with applicable operators only.
        let mut pop = minimal();
        let mut parent = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        add_bias(&mut parent, &mut rng).unwrap();
        for _ in 0..30 {
            let child = mutate_offspring(&parent, &MutationConfig::default(), &mut pop.ids, &mut rng);
            for h in &child.core.history {
                assert_ne!(h.operator, "add_bias", "no legal add_bias site existed");
            }
            validate(&child).unwrap();
        }
    }

    #[test]
    fn closure_under_random_phases() {
        let mut pop = create_seed(
            &SeedSpec {
                spare_sensors: vec![IoTemplate::new("color", 5)],
                spare_actuators: vec![IoTemplate::new("extra", 2)],
                ..SeedSpec::new(vec![IoTemplate::new("range", 5)], vec![IoTemplate::new("drive", 2)])
            },
            1,
            1,
            16,
        )
        .unwrap();
        let cfg = MutationConfig {
            sensor_tag_probability: 0.1,
            actuator_tag_probability: 0.1,
            af_tags: vec!["tanh".into(), "sin".into(), "gauss".into()],
            lm_tags: vec!["none".into(), "hebbian".into()],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut g = pop.members[0].clone();
        for _ in 0..200 {
            g = mutate_offspring(&g, &cfg, &mut pop.ids, &mut rng);
            validate(&g).unwrap();
        }
        assert!(g.core.history.len() >= 200);
    }

    #[test]
    fn generation_discipline() {
        let mut pop = minimal();
        let parent = pop.members[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let child = mutate_offspring(&parent, &MutationConfig::default(), &mut pop.ids, &mut rng);
        for h in &child.core.history {
            if let Some(n) = child.neuron(h.applied_to) {
                assert_eq!(n.generation, child.core.generation);
            }
        }
    }
}
