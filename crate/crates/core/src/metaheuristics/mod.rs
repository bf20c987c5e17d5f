//! Population-based minimizers for hyperparameter search: particle swarm
//! plus genetic, cuckoo, whale and bat variants.

mod optimize;
mod pso;
mod space;
mod variants;

pub use optimize::{optimize, particle_seed, AlgoKind, Algorithm, IterationRecord, OptimizeResult};
pub use pso::{pso_step, pso_step_with, pso_update, PsoConfig, Swarm};
pub use space::{DimKind, Dimension, SearchSpace};
pub use variants::{
    levy_step, variant_step, BatConfig, CsConfig, Evaluate, GaConfig, Population, VariantState, WoaConfig,
};
