//! Population diversity: a coarse topology signature per genotype and the
//! count of distinct signatures in a population.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::genotype::{DxnnGenotype, Population};

/// Coarse structural summary of one genotype. Two genotypes with equal
/// signatures are considered topologically equivalent for the purposes of
/// the diversity count, however their weights differ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TopologySignature {
    /// Total inbound scalar connections across all neurons. Bias weights are
    /// internal parameters, not connections, and are not counted.
    pub total_inputs: usize,
    /// Total outbound links (to neurons or actuators) across all neurons.
    pub total_outputs: usize,
    pub neuron_count: usize,
    /// The multiset of activation function tags in use, sorted so that the
    /// signature does not depend on neuron ordering.
    pub activation_functions: Vec<String>,
}

pub fn signature(genotype: &DxnnGenotype) -> TopologySignature {
    let total_inputs = genotype.neurons.iter().map(|n| n.input_width()).sum();
    let total_outputs = genotype.neurons.iter().map(|n| n.output_list.len()).sum();
    let mut activation_functions: Vec<String> =
        genotype.neurons.iter().map(|n| n.activation.clone()).collect();
    activation_functions.sort();
    TopologySignature {
        total_inputs,
        total_outputs,
        neuron_count: genotype.size(),
        activation_functions,
    }
}

/// Lower bound on the number of distinct topologies present: the count of
/// distinct signatures.
pub fn minimum_diversity(population: &Population) -> usize {
    population.members.iter().map(signature).collect::<BTreeSet<_>>().len()
}
