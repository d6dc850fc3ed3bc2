//! Nonlinear squeezing witnesses for single-mode bosonic states.
//!
//! States and operators live in a truncated Fock basis with ħ = 1,
//! x = (a + a†)/√2 and vacuum variance 1/2. The witness ξ compares the
//! variance of a polynomial cost after an optimized Gaussian unitary with the
//! smallest value any Gaussian state can reach; ξ < 1 certifies a
//! non-Gaussian state.

pub mod cost;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod homodyne;
pub mod optim;
pub mod poly;
pub mod states;
pub mod wigner;
pub mod witness;

pub use cost::{gaussian_threshold, CostFamily, CostFunction, GaussianThreshold};
pub use error::{Error, Result};
pub use fock::{fidelity, DensityMatrix, FockDim, Ket, Operator, C64};
pub use gaussian::{symplectic_of, GaussianUnitaryParams, SymplecticAction};
pub use homodyne::{QuadratureRecord, TomographyConfig};
pub use states::{
    coherent_ket, fock_ket, loss_channel, photon_added_coherent, ChannelSpec, PhotonAddedSpec,
};
pub use wigner::{wigner_evaluate, wigner_minimum, WignerGrid};
pub use witness::{certify, nonlinear_squeezing, CertifyReport, OptimizerBudget, WitnessResult};
