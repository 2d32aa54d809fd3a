//! DXNN: a memetic topology-and-weight evolving neural network engine.
//!
//! The algorithm alternates two phases over a population of tuple-encoded
//! networks: a tuning phase (targeted stochastic hill climbing over the
//! weights of recently modified neurons) and a topological mutation phase
//! (random-intensity structural mutation), glued together by a
//! complexity-priced selection algorithm. The crate ships the pole-balancing
//! benchmark suite and 2D ALife scenarios built on the same engine.

pub mod benchmarks;
pub mod diversity;
pub mod experiments;
pub mod flatland;
pub mod genotype;
pub mod mutation;
pub mod phenotype;
pub mod selection;
pub mod store;
pub mod tuning;
