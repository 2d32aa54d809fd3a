//! Compiles a genotype into an executable network and runs the
//! sense-think-act cycle: link-type signal routing, deterministic evaluation
//! order with one-cycle-delayed recurrent links, and pluggable activation
//! functions and learning methods.

use std::collections::BinaryHeap;
use std::collections::BTreeMap;
use std::collections::HashMap;

use thiserror::Error;

use crate::genotype::{DxnnGenotype, ElementId, ElementKind, LinkType};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("unknown activation function tag `{0}`")]
    UnknownActivation(String),
    #[error("unknown learning method tag `{0}`")]
    UnknownLearning(String),
    #[error("dangling link {from} -> {to}")]
    DanglingLink { from: ElementId, to: ElementId },
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("sensor `{tag}` expects a vector of length {expected}, got {got}")]
    SensorArity { tag: String, expected: usize, got: usize },
    #[error("expected {expected} sensor vectors, got {got}")]
    SensorCount { expected: usize, got: usize },
}

pub type ActivationFn = fn(f64) -> f64;

/// Weight update applied after each activation. `inputs` carries the constant
/// 1.0 bias input last when the neuron has a bias, matching the weight layout.
pub type LearningFn = fn(weights: &mut [f64], inputs: &[f64], output: f64);

fn af_tanh(x: f64) -> f64 {
    x.tanh()
}
fn af_sin(x: f64) -> f64 {
    x.sin()
}
fn af_linear(x: f64) -> f64 {
    x
}
fn af_gauss(x: f64) -> f64 {
    (-x * x).exp()
}
// Sign-preserving domain guards keep sqrt and log total on the reals.
fn af_sqrt(x: f64) -> f64 {
    x.abs().sqrt().copysign(x)
}
fn af_abs(x: f64) -> f64 {
    x.abs()
}
fn af_log(x: f64) -> f64 {
    (1.0 + x.abs()).ln().copysign(x)
}
fn af_sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn lm_none(_weights: &mut [f64], _inputs: &[f64], _output: f64) {}

/// Plain Hebb rule dw_i = eta * x_i * y with eta = 0.1, weights clamped to
/// [-2pi, 2pi] to keep the update from diverging.
const HEBBIAN_RATE: f64 = 0.1;
const HEBBIAN_CLAMP: f64 = 2.0 * std::f64::consts::PI;

fn lm_hebbian(weights: &mut [f64], inputs: &[f64], output: f64) {
    for (w, x) in weights.iter_mut().zip(inputs) {
        *w = (*w + HEBBIAN_RATE * x * output).clamp(-HEBBIAN_CLAMP, HEBBIAN_CLAMP);
    }
}

/// Activation-function and learning-method registries keyed by string tag.
/// New programs are added at startup by registering their tag.
#[derive(Clone)]
pub struct Registries {
    af: BTreeMap<String, ActivationFn>,
    lm: BTreeMap<String, LearningFn>,
}

impl Registries {
    pub fn empty() -> Self {
        Registries { af: BTreeMap::new(), lm: BTreeMap::new() }
    }

    pub fn standard() -> Self {
        let mut r = Registries::empty();
        r.register_af("tanh", af_tanh);
        r.register_af("sin", af_sin);
        r.register_af("linear", af_linear);
        r.register_af("gauss", af_gauss);
        r.register_af("sqrt", af_sqrt);
        r.register_af("abs", af_abs);
        r.register_af("log", af_log);
        r.register_af("sigmoid", af_sigmoid);
        r.register_lm("none", lm_none);
        r.register_lm("hebbian", lm_hebbian);
        r
    }

    pub fn register_af(&mut self, tag: impl Into<String>, f: ActivationFn) {
        self.af.insert(tag.into(), f);
    }

    pub fn register_lm(&mut self, tag: impl Into<String>, f: LearningFn) {
        self.lm.insert(tag.into(), f);
    }

    pub fn activation(&self, tag: &str) -> Result<ActivationFn, CompileError> {
        self.af.get(tag).copied().ok_or_else(|| CompileError::UnknownActivation(tag.into()))
    }

    pub fn learning(&self, tag: &str) -> Result<LearningFn, CompileError> {
        self.lm.get(tag).copied().ok_or_else(|| CompileError::UnknownLearning(tag.into()))
    }

    pub fn af_tags(&self) -> Vec<String> {
        self.af.keys().cloned().collect()
    }

    pub fn lm_tags(&self) -> Vec<String> {
        self.lm.keys().cloned().collect()
    }
}

/// The standalone learning-method contract: `none` returns the weights
/// untouched, anything else updates them in place.
pub fn apply_learning(
    registries: &Registries,
    lm: &str,
    weights: &mut [f64],
    inputs: &[f64],
    output: f64,
) -> Result<(), CompileError> {
    (registries.learning(lm)?)(weights, inputs, output);
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum InputBinding {
    Sensor { sensor: usize, link: LinkType },
    /// `recurrent` edges read the source's previous-cycle output.
    Neuron { unit: usize, recurrent: bool },
}

struct Unit {
    id: ElementId,
    af: ActivationFn,
    lm: LearningFn,
    needs_input_vector: bool,
    inputs: Vec<InputBinding>,
    weights: Vec<f64>,
    has_bias: bool,
}

struct SensorBinding {
    tag: String,
    vector_length: usize,
}

struct ActuatorBinding {
    fanin_units: Vec<usize>,
}

/// Executable network. `state` holds each neuron's last output; evaluation
/// runs in a fixed feed-forward schedule with recurrent edges reading the
/// previous cycle's value.
pub struct Phenotype {
    units: Vec<Unit>,
    state: Vec<f64>,
    sensors: Vec<SensorBinding>,
    actuators: Vec<ActuatorBinding>,
    scratch: Vec<f64>,
}

pub fn compile(genotype: &DxnnGenotype, registries: &Registries) -> Result<Phenotype, CompileError> {
    let order = eval_order(genotype)?;
    let unit_of: HashMap<ElementId, usize> =
        order.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let mut units = Vec::with_capacity(order.len());
    for (pos, id) in order.iter().enumerate() {
        let n = genotype.neuron(*id).expect("ordered ids come from the genotype");
        let af = registries.activation(&n.activation)?;
        let lm = registries.learning(&n.learning)?;
        let mut inputs = Vec::with_capacity(n.input_list.len());
        for i in &n.input_list {
            match i.from.kind {
                ElementKind::Sensor => {
                    let sensor = genotype
                        .core
                        .sensor_index(i.from)
                        .ok_or(CompileError::DanglingLink { from: i.from, to: *id })?;
                    // Pair input entries with fanout entries in order.
                    let nth = inputs
                        .iter()
                        .filter(|b| matches!(b, InputBinding::Sensor { sensor: s, .. } if *s == sensor))
                        .count();
                    let link = genotype.core.sensors[sensor]
                        .fanout
                        .iter()
                        .filter(|f| f.neuron == *id)
                        .nth(nth)
                        .ok_or(CompileError::DanglingLink { from: i.from, to: *id })?
                        .link;
                    inputs.push(InputBinding::Sensor { sensor, link });
                }
                ElementKind::Neuron => {
                    let unit = *unit_of
                        .get(&i.from)
                        .ok_or(CompileError::DanglingLink { from: i.from, to: *id })?;
                    inputs.push(InputBinding::Neuron { unit, recurrent: unit >= pos });
                }
                _ => return Err(CompileError::DanglingLink { from: i.from, to: *id }),
            }
        }
        units.push(Unit {
            id: *id,
            af,
            lm,
            needs_input_vector: n.learning != "none",
            inputs,
            weights: n.weights.clone(),
            has_bias: n.has_bias,
        });
    }

    let sensors = genotype
        .core
        .sensors
        .iter()
        .map(|s| SensorBinding { tag: s.tag.clone(), vector_length: s.vector_length })
        .collect();
    let mut actuators = Vec::new();
    for a in &genotype.core.actuators {
        let mut fanin_units = Vec::with_capacity(a.fanin.len());
        for id in &a.fanin {
            fanin_units.push(
                *unit_of.get(id).ok_or(CompileError::DanglingLink { from: *id, to: a.id })?,
            );
        }
        actuators.push(ActuatorBinding { fanin_units });
    }

    let state = vec![0.0; units.len()];
    Ok(Phenotype { units, state, sensors, actuators, scratch: Vec::new() })
}

/// Kahn ordering over the acyclic part of the neuron graph, ties broken by
/// element serial. When only cycle members remain, the smallest serial is
/// forced and its unmet in-edges become recurrent.
fn eval_order(genotype: &DxnnGenotype) -> Result<Vec<ElementId>, CompileError> {
    let index: HashMap<ElementId, usize> =
        genotype.neurons.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let n = genotype.neurons.len();
    let mut indegree = vec![0usize; n];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, neuron) in genotype.neurons.iter().enumerate() {
        for out in &neuron.output_list {
            if out.kind == ElementKind::Neuron {
                let j = *index
                    .get(out)
                    .ok_or(CompileError::DanglingLink { from: neuron.id, to: *out })?;
                edges[i].push(j);
                indegree[j] += 1;
            }
        }
    }
    // Min-heap on (serial, index): deterministic given the genotype.
    let mut ready: BinaryHeap<std::cmp::Reverse<(u64, usize)>> = BinaryHeap::new();
    for (i, neuron) in genotype.neurons.iter().enumerate() {
        if indegree[i] == 0 {
            ready.push(std::cmp::Reverse((neuron.id.serial, i)));
        }
    }
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let i = match ready.pop() {
            Some(std::cmp::Reverse((_, i))) if !placed[i] => i,
            Some(_) => continue,
            None => {
                // Cycle: force the unplaced neuron with the smallest serial.
                genotype
                    .neurons
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !placed[*i])
                    .min_by_key(|(_, n)| n.id.serial)
                    .map(|(i, _)| i)
                    .expect("unplaced neuron exists")
            }
        };
        if placed[i] {
            continue;
        }
        placed[i] = true;
        order.push(genotype.neurons[i].id);
        for &j in &edges[i] {
            if !placed[j] {
                indegree[j] = indegree[j].saturating_sub(1);
                if indegree[j] == 0 {
                    ready.push(std::cmp::Reverse((genotype.neurons[j].id.serial, j)));
                }
            }
        }
    }
    Ok(order)
}

impl Phenotype {
    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    /// Zero every recurrent state buffer, as if freshly compiled.
    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    /// Evaluation order as element ids, recurrent-edge count alongside.
    pub fn eval_order_ids(&self) -> Vec<ElementId> {
        self.units.iter().map(|u| u.id).collect()
    }

    pub fn recurrent_edge_count(&self) -> usize {
        self.units
            .iter()
            .map(|u| {
                u.inputs
                    .iter()
                    .filter(|b| matches!(b, InputBinding::Neuron { recurrent: true, .. }))
                    .count()
            })
            .sum()
    }

    /// One sense-think-act cycle: returns per-actuator output vectors in
    /// actuator-list order (empty vectors for unused actuators).
    pub fn step(&mut self, sensor_vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, StepError> {
        let mut out = Vec::new();
        self.step_into(sensor_vectors, &mut out)?;
        Ok(out)
    }

    /// Like [`step`](Phenotype::step), but refills a caller-owned output
    /// buffer so tight simulation loops avoid per-step allocation.
    pub fn step_into(
        &mut self,
        sensor_vectors: &[Vec<f64>],
        out: &mut Vec<Vec<f64>>,
    ) -> Result<(), StepError> {
        if sensor_vectors.len() != self.sensors.len() {
            return Err(StepError::SensorCount {
                expected: self.sensors.len(),
                got: sensor_vectors.len(),
            });
        }
        for (binding, v) in self.sensors.iter().zip(sensor_vectors) {
            if v.len() != binding.vector_length {
                return Err(StepError::SensorArity {
                    tag: binding.tag.clone(),
                    expected: binding.vector_length,
                    got: v.len(),
                });
            }
        }

        for u in 0..self.units.len() {
            let unit = &self.units[u];
            let mut dot = 0.0;
            let mut wi = 0;
            let collect = unit.needs_input_vector;
            let mut scratch = std::mem::take(&mut self.scratch);
            scratch.clear();
            for binding in &unit.inputs {
                match *binding {
                    InputBinding::Sensor { sensor, link } => match link {
                        LinkType::Single(idx) => {
                            let x = sensor_vectors[sensor][idx];
                            dot += unit.weights[wi] * x;
                            wi += 1;
                            if collect {
                                scratch.push(x);
                            }
                        }
                        LinkType::Block => {
                            for &x in &sensor_vectors[sensor] {
                                dot += unit.weights[wi] * x;
                                wi += 1;
                                if collect {
                                    scratch.push(x);
                                }
                            }
                        }
                        LinkType::All => {
                            for v in sensor_vectors {
                                for &x in v {
                                    dot += unit.weights[wi] * x;
                                    wi += 1;
                                    if collect {
                                        scratch.push(x);
                                    }
                                }
                            }
                        }
                    },
                    InputBinding::Neuron { unit: src, recurrent: _ } => {
                        // In-place state update: earlier units already hold
                        // this cycle's value, later (recurrent) ones the
                        // previous cycle's.
                        let x = self.state[src];
                        dot += unit.weights[wi] * x;
                        wi += 1;
                        if collect {
                            scratch.push(x);
                        }
                    }
                }
            }
            if unit.has_bias {
                dot += unit.weights[wi];
                if collect {
                    scratch.push(1.0);
                }
            }
            // Unbounded activations (linear, sqrt, log) on a recurrent loop
            // can overflow to infinity, after which sin(inf) or inf * 0
            // turns the whole network state into NaN. A non-finite output is
            // squashed to zero so every network stays total over the reals
            // no matter what topology evolution produces.
            let mut output = (unit.af)(dot);
            if !output.is_finite() {
                output = 0.0;
            }
            self.state[u] = output;
            if collect {
                let unit = &mut self.units[u];
                (unit.lm)(&mut unit.weights, &scratch, output);
            }
            self.scratch = scratch;
        }

        out.resize_with(self.actuators.len(), Vec::new);
        for (a, buf) in self.actuators.iter().zip(out.iter_mut()) {
            buf.clear();
            buf.extend(a.fanin_units.iter().map(|&u| self.state[u]));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::{
        create_seed, validate, ElementId, Fanout, InputRef, IoTemplate, SeedSpec,
    };

    fn single_neuron(af: &str) -> DxnnGenotype {
        let mut spec = SeedSpec::new(vec![IoTemplate::new("in", 1)], vec![IoTemplate::new("out", 1)]);
        spec.activation = af.to_string();
        create_seed(&spec, 1, 1, 1).unwrap().members.remove(0)
    }

    #[test]
    fn seed_phenotype_has_trivial_schedule() {
        let g = single_neuron("tanh");
        let p = compile(&g, &Registries::standard()).unwrap();
        assert_eq!(p.eval_order_ids(), vec![g.neurons[0].id]);
        assert_eq!(p.recurrent_edge_count(), 0);
    }

    #[test]
    fn zero_weights_give_zero_tanh_output() {
        let mut g = single_neuron("tanh");
        g.neurons[0].weights = vec![0.0];
        let mut p = compile(&g, &Registries::standard()).unwrap();
        let out = p.step(&[vec![5.0]]).unwrap();
        assert_eq!(out[0], vec![0.0]);
    }

    #[test]
    fn linear_affine_identity() {
        let mut g = single_neuron("linear");
        g.neurons[0].weights = vec![2.0, 1.0];
        g.neurons[0].has_bias = true;
        let mut p = compile(&g, &Registries::standard()).unwrap();
        let out = p.step(&[vec![3.0]]).unwrap();
        assert_eq!(out[0], vec![7.0]);
    }

    #[test]
    fn self_recurrent_accumulator() {
        let mut g = single_neuron("linear");
        let nid = g.neurons[0].id;
        g.neurons[0].input_list.push(InputRef { from: nid, vector_length: 1 });
        g.neurons[0].output_list.push(nid);
        g.neurons[0].weights = vec![1.0, 1.0];
        validate(&g).unwrap();
        let mut p = compile(&g, &Registries::standard()).unwrap();
        assert_eq!(p.recurrent_edge_count(), 1);
        let outs: Vec<f64> = (0..3).map(|_| p.step(&[vec![1.0]]).unwrap()[0][0]).collect();
        assert_eq!(outs, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn runaway_recurrent_state_is_squashed_to_zero() {
        // A linear self-loop with weight 2 doubles its state every cycle and
        // would overflow to infinity; the step must squash the non-finite
        // value to zero and keep every later output finite.
        let mut g = single_neuron("linear");
        let nid = g.neurons[0].id;
        g.neurons[0].input_list.push(InputRef { from: nid, vector_length: 1 });
        g.neurons[0].output_list.push(nid);
        g.neurons[0].weights = vec![1.0, 2.0];
        validate(&g).unwrap();
        let mut p = compile(&g, &Registries::standard()).unwrap();
        let mut hit_zero = false;
        for _ in 0..5000 {
            let y = p.step(&[vec![1.0]]).unwrap()[0][0];
            assert!(y.is_finite(), "output {y} not finite");
            hit_zero |= y == 0.0;
        }
        assert!(hit_zero, "state never overflowed and reset");
    }

    #[test]
    fn two_neuron_cycle_has_one_recurrent_edge() {
        let spec = SeedSpec::new(vec![IoTemplate::new("in", 1)], vec![IoTemplate::new("out", 2)]);
        let mut pop = create_seed(&spec, 1, 1, 4).unwrap();
        let mut g = pop.members.remove(0).clone();
        // Seed gives sensor -> n0 -> {n1, n2}; wire n1 <-> n2 into a cycle.
        let (a, b) = (g.neurons[1].id, g.neurons[2].id);
        g.neuron_mut(a).unwrap().output_list.push(b);
        g.neuron_mut(b).unwrap().input_list.push(InputRef { from: a, vector_length: 1 });
        g.neuron_mut(b).unwrap().weights.push(0.1);
        g.neuron_mut(b).unwrap().output_list.push(a);
        g.neuron_mut(a).unwrap().input_list.push(InputRef { from: b, vector_length: 1 });
        g.neuron_mut(a).unwrap().weights.push(0.1);
        validate(&g).unwrap();
        let p = compile(&g, &Registries::standard()).unwrap();
        assert_eq!(p.recurrent_edge_count(), 1);
    }

    #[test]
    fn unknown_activation_tag_rejected() {
        let mut g = single_neuron("tanh");
        g.neurons[0].activation = "mexican_hat".into();
        match compile(&g, &Registries::standard()) {
            Err(CompileError::UnknownActivation(tag)) => assert_eq!(tag, "mexican_hat"),
            other => panic!("expected unknown-tag error, got {:?}", other.err()),
        }
    }

    #[test]
    fn arity_mismatch_rejected_before_state_change() {
        let mut g = single_neuron("linear");
        let nid = g.neurons[0].id;
        g.neurons[0].input_list.push(InputRef { from: nid, vector_length: 1 });
        g.neurons[0].output_list.push(nid);
        g.neurons[0].weights = vec![1.0, 1.0];
        let mut p = compile(&g, &Registries::standard()).unwrap();
        p.step(&[vec![1.0]]).unwrap();
        assert!(p.step(&[vec![1.0, 2.0]]).is_err());
        // Recurrent state untouched by the failed step.
        assert_eq!(p.step(&[vec![1.0]]).unwrap()[0], vec![2.0]);
    }

    #[test]
    fn learning_none_contract() {
        let r = Registries::standard();
        let mut w = vec![0.3, -0.2];
        apply_learning(&r, "none", &mut w, &[1.0, 1.0], 0.4).unwrap();
        assert_eq!(w, vec![0.3, -0.2]);
    }

    #[test]
    fn hebbian_update_by_hand() {
        let r = Registries::standard();
        let mut w = vec![0.0, 0.0];
        apply_learning(&r, "hebbian", &mut w, &[1.0, 2.0], 0.5).unwrap();
        assert!((w[0] - 0.05).abs() < 1e-12);
        assert!((w[1] - 0.10).abs() < 1e-12);
        // Zero input leaves weights alone.
        let mut w2 = vec![0.7, -0.4];
        apply_learning(&r, "hebbian", &mut w2, &[0.0, 0.0], 0.9).unwrap();
        assert_eq!(w2, vec![0.7, -0.4]);
    }

    #[test]
    fn unknown_learning_tag_rejected() {
        let r = Registries::standard();
        let mut w = vec![0.0];
        assert!(apply_learning(&r, "oja", &mut w, &[1.0], 0.5).is_err());
    }

    #[test]
    fn determinism_across_compiles() {
        let spec = SeedSpec::new(
            vec![IoTemplate::new("a", 3), IoTemplate::new("b", 2)],
            vec![IoTemplate::new("out", 2)],
        );
        let g = create_seed(&spec, 1, 1, 17).unwrap().members.remove(0);
        let r = Registries::standard();
        let mut p1 = compile(&g, &r).unwrap();
        let mut p2 = compile(&g, &r).unwrap();
        let input = vec![vec![0.1, -0.7, 0.4], vec![1.0, 0.2]];
        for _ in 0..5 {
            assert_eq!(p1.step(&input).unwrap(), p2.step(&input).unwrap());
        }
    }

    #[test]
    fn activation_outputs_finite() {
        let r = Registries::standard();
        for tag in ["tanh", "sin", "linear", "gauss", "sqrt", "abs", "log", "sigmoid"] {
            let f = r.activation(tag).unwrap();
            for x in [-1e9, -3.7, -1e-12, 0.0, 1e-12, 2.5, 1e9] {
                assert!(f(x).is_finite(), "{tag}({x}) not finite");
            }
        }
    }

    #[test]
    fn sensor_all_link_concatenates_every_sensor() {
        let spec = SeedSpec::new(
            vec![IoTemplate::new("a", 2), IoTemplate::new("b", 3)],
            vec![IoTemplate::new("out", 1)],
        );
        let mut pop = create_seed(&spec, 1, 1, 0).unwrap();
        let mut g = pop.members.remove(0).clone();
        // Replace the output neuron's wiring with one all-type link.
        let out_id = g.core.actuators[0].fanin[0];
        let feeders: Vec<ElementId> = g
            .neuron(out_id)
            .unwrap()
            .input_list
            .iter()
            .map(|i| i.from)
            .collect();
        for f in feeders {
            g.neuron_mut(f).unwrap().output_list.retain(|o| *o != out_id);
        }
        let s0 = g.core.sensors[0].id;
        {
            let n = g.neuron_mut(out_id).unwrap();
            n.input_list = vec![InputRef { from: s0, vector_length: 5 }];
            n.weights = vec![1.0, 1.0, 1.0, 1.0, 1.0];
            n.activation = "linear".into();
        }
        g.core.sensors[0].fanout.push(Fanout {
            neuron: out_id,
            link: LinkType::All,
        });
        // Simplest valid form: keep only the output neuron.
        g.neurons.retain(|n| n.id == out_id);
        g.core.supervised_neuron_ids = vec![out_id];
        g.core.sensors[0].fanout.retain(|f| f.neuron == out_id);
        g.core.sensors[1].fanout.clear();
        validate(&g).unwrap();
        let mut p = compile(&g, &Registries::standard()).unwrap();
        let out = p.step(&[vec![1.0, 2.0], vec![3.0, 4.0, 5.0]]).unwrap();
        assert_eq!(out[0], vec![15.0]);
    }
}
