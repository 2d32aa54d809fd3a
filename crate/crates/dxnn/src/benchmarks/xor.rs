//! XOR, the classic needs-a-hidden-neuron problem. Inputs are presented as
//! {0, 1} pairs and the network is asked to emit 0.9 for the mixed cases and
//! 0.0 for the matching ones. The 0.9 target sits strictly inside tanh's
//! range, so the optimum is reached at finite weights and the squared-error
//! surface stays smooth all the way in; saturating encodings (targets at the
//! asymptotes) reward unbounded weight growth and trap small populations on
//! symmetric plateaus instead.

use crate::phenotype::{Phenotype, StepError};

pub const XOR_EPSILON: f64 = 1e-6;

pub const XOR_CASES: [([f64; 2], f64); 4] = [
    ([0.0, 0.0], 0.0),
    ([0.0, 1.0], 0.9),
    ([1.0, 0.0], 0.9),
    ([1.0, 1.0], 0.0),
];

/// Fitness 1/(epsilon + sum of squared errors) over the four cases, plus the
/// solved flag: |error| < 0.1 on every case, with sign agreement on the
/// nonzero targets. The phenotype is reset between patterns so recurrent
/// state cannot leak across cases.
pub fn xor_eval(phenotype: &mut Phenotype) -> Result<(f64, bool), StepError> {
    let mut sq_err = 0.0;
    let mut solved = true;
    for (input, target) in XOR_CASES {
        phenotype.reset();
        let out = phenotype.step(&[input.to_vec()])?;
        let y = out.iter().find(|v| !v.is_empty()).map(|v| v[0]).unwrap_or(0.0);
        let err = y - target;
        sq_err += err * err;
        let sign_ok = target == 0.0 || y * target > 0.0;
        if !sign_ok || err.abs() >= 0.1 {
            solved = false;
        }
    }
    Ok((1.0 / (XOR_EPSILON + sq_err), solved))
}

pub fn xor_fitness(phenotype: &mut Phenotype) -> Result<f64, StepError> {
    xor_eval(phenotype).map(|(f, _)| f)
}
