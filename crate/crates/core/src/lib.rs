pub mod cli;
pub mod error_table;
pub mod falsifier;
pub mod feature_space;
pub mod mtl;
pub mod protocol;
pub mod rng;
pub mod samplers;
pub mod sims;
