//! Text persistence for populations: one self-describing record per line,
//! mirroring the tuple encoding of the genotype itself.
//!
//! Layout:
//! ```text
//! POP (id:..., limit:..., rng_seed:..., next_serial:...)
//! DXNN (id:..., fitness:...)      -- one per member, followed by its elements
//! CORE (...)
//! NEURON (...)
//! ```
//! The contract is round-trip stability (load . save == identity), not any
//! particular byte layout.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genotype::{CoreElement, DxnnGenotype, ElementId, IdGen, NeuronElement, Population};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: bad {record} record: {message}")]
    Record { line: usize, record: &'static str, message: String },
    #[error("line {line}: unexpected record `{found}`, expected {expected}")]
    Unexpected { line: usize, found: String, expected: &'static str },
    #[error("file ends mid-genotype (last DXNN record is incomplete)")]
    Truncated,
}

#[derive(Serialize, Deserialize)]
struct PopHeader {
    id: ElementId,
    limit: usize,
    rng_seed: u64,
    next_serial: u64,
}

#[derive(Serialize, Deserialize)]
struct DxnnHeader {
    id: ElementId,
    fitness: Option<f64>,
}

pub fn to_string(pop: &Population) -> String {
    let mut out = String::new();
    let header = PopHeader {
        id: pop.population_id,
        limit: pop.limit,
        rng_seed: pop.rng_seed,
        next_serial: pop.ids.next_serial(),
    };
    out.push_str("POP ");
    out.push_str(&ron::to_string(&header).expect("population header serializes"));
    out.push('\n');
    for g in &pop.members {
        let h = DxnnHeader { id: g.dxnn_id, fitness: g.fitness };
        out.push_str("DXNN ");
        out.push_str(&ron::to_string(&h).expect("dxnn header serializes"));
        out.push('\n');
        out.push_str("CORE ");
        out.push_str(&ron::to_string(&g.core).expect("core serializes"));
        out.push('\n');
        for n in &g.neurons {
            out.push_str("NEURON ");
            out.push_str(&ron::to_string(n).expect("neuron serializes"));
            out.push('\n');
        }
    }
    out
}

pub fn save(pop: &Population, path: impl AsRef<Path>) -> Result<(), PersistError> {
    fs::write(path, to_string(pop))?;
    Ok(())
}

pub fn from_string(text: &str) -> Result<Population, PersistError> {
    fn parse<T: for<'de> Deserialize<'de>>(
        line_no: usize,
        record: &'static str,
        body: &str,
    ) -> Result<T, PersistError> {
        ron::from_str(body).map_err(|e| PersistError::Record {
            line: line_no,
            record,
            message: e.to_string(),
        })
    }

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    let (line_no, first) = lines.next().ok_or(PersistError::Truncated)?;
    let Some(body) = first.strip_prefix("POP ") else {
        return Err(PersistError::Unexpected {
            line: line_no,
            found: first.split_whitespace().next().unwrap_or("").to_string(),
            expected: "POP",
        });
    };
    let header: PopHeader = parse(line_no, "POP", body)?;

    let mut members: Vec<DxnnGenotype> = Vec::new();
    while let Some((line_no, line)) = lines.next() {
        let Some(body) = line.strip_prefix("DXNN ") else {
            return Err(PersistError::Unexpected {
                line: line_no,
                found: line.split_whitespace().next().unwrap_or("").to_string(),
                expected: "DXNN",
            });
        };
        let dh: DxnnHeader = parse(line_no, "DXNN", body)?;
        let (core_line, core_text) = lines.next().ok_or(PersistError::Truncated)?;
        let Some(core_body) = core_text.strip_prefix("CORE ") else {
            return Err(PersistError::Unexpected {
                line: core_line,
                found: core_text.split_whitespace().next().unwrap_or("").to_string(),
                expected: "CORE",
            });
        };
        let core: CoreElement = parse(core_line, "CORE", core_body)?;
        let mut neurons: Vec<NeuronElement> = Vec::new();
        while let Some((_, peek)) = lines.peek() {
            if !peek.starts_with("NEURON ") {
                break;
            }
            let (nl, ntext) = lines.next().unwrap();
            let n: NeuronElement = parse(nl, "NEURON", ntext.strip_prefix("NEURON ").unwrap())?;
            neurons.push(n);
        }
        if neurons.len() != core.supervised_neuron_ids.len() {
            return Err(PersistError::Truncated);
        }
        members.push(DxnnGenotype { dxnn_id: dh.id, core, neurons, fitness: dh.fitness });
    }

    Ok(Population {
        population_id: header.id,
        members,
        limit: header.limit,
        rng_seed: header.rng_seed,
        ids: IdGen::starting_at(header.next_serial),
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<Population, PersistError> {
    from_string(&fs::read_to_string(path)?)
}
