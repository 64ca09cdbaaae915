//! Entanglement evolution of two- to four-qubit states under local Pauli
//! channels.
//!
//! The crate evolves pure initial states under one channel per qubit,
//! measures the result with Wootters' concurrence or its SO(d) bipartite
//! generalization, and checks single-sided factorization identities for
//! the many-sided evolution, one sample at a time or in seeded campaigns.
//!
//! With the default `parallel` feature, campaigns and parameter sweeps fan
//! out over rayon; without it the same code runs sequentially and produces
//! bitwise-identical output.

pub mod channels;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod factorization;
pub mod matrix;
pub mod par;
pub mod states;

pub use channels::{
    apply, pauli_channel, sample_channel, single_sided, ChannelAssignment, ChannelFamily,
    ChannelSpec, KrausChannel, PauliParams,
};
pub use entanglement::{
    bipartite_concurrence, concurrence, so_generators, tau3, wootters, Bipartition,
    ConcurrenceBreakdown,
};
pub use error::{Error, Result};
pub use factorization::{
    classify_scenario, evaluate_identity, run_campaign, CampaignConfig, CampaignReport,
    FactorizationIdentity, IdentityKind, IdentityReport,
};
pub use matrix::{
    hermitian_eig, kron, numerical_rank, permute_qubits, psd_sqrt, ComplexMatrix, DensityMatrix,
};
pub use num_complex::Complex64;
pub use states::{bell, ghz, random_pure, w, PureState, StateSpec};
