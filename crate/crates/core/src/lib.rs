//! Numerics for faithful simulation of distributed quantum measurements.
//!
//! The crate is layered: [`linalg`], [`state`], [`povm`] and [`entropy`] form the
//! operator substrate; [`measurement`] builds classical–quantum states and the
//! faithfulness metric; [`region`] evaluates and manipulates rate regions;
//! [`typicality`] and [`protocol`] realize the random-coding construction at
//! finite blocklength.

pub mod entropy;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod json;
pub mod linalg;
pub mod measurement;
pub mod povm;
pub mod protocol;
pub mod random;
pub mod region;
pub mod state;
pub mod typicality;

pub use entropy::{holevo_information, quantum_mutual_information, von_neumann_entropy};
pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use povm::{complete_sub_povm, Ensemble, Povm, SubPovm};
pub use state::{purify, DensityOperator, PureBipartiteState};
pub use measurement::{
    apply_measurement, auxiliary_states, canonical_ensemble, compose_decomposition,
    faithfulness_distance, stochastic_sigma3, verify_purification_identity, Channel, CqState,
    SeparableDecomposition,
};
pub use region::{
    dist_deterministic_region, dist_stochastic_region, membership, p2p_stochastic_region,
    rd_inner_bound, winter_region, InequalitySystem, RateTriple, RegionReport,
};
pub use protocol::{faithfulness_trial, ProtocolParams, ProtocolSetup, TrialReport};
