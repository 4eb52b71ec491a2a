pub mod baselines;
pub mod bench;
pub mod data_io;
pub mod error;
pub mod evaluators;
pub mod gain;
pub mod loss;
pub mod seed;
pub mod spsa;
pub mod types;
