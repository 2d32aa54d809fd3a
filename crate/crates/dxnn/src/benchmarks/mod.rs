//! Benchmark environments and the generational loop that drives them:
//! XOR and the double pole balancing task family.

pub mod cartpole;
pub mod runner;
pub mod xor;

pub use cartpole::{
    derivatives, rk4_step, run_dpb_episode, CartPoleState, DpbConfig, DpbConstants, DpbVariant,
    EpisodeResult, PhysicsError,
};
pub use runner::{run_benchmark, BenchmarkProblem, FailureCause, RunConfig, RunResult};
pub use xor::{xor_eval, xor_fitness, XOR_EPSILON};
