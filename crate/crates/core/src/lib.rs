// NaN must fail the validation checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod literal;
pub mod matcore;
pub mod odeindex;
pub mod path;
pub mod pathgen;
pub mod quadrature;
pub mod reldim;
pub mod sflow;
pub mod spectral;
pub mod verify;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use matcore::{c64, CMatrix, EigenSystem, SubspaceBasis};
pub use path::{Domain, OperatorPath};
pub use reldim::{pair_index, rel_dim, transport, RelDim};
pub use sflow::{sf_crossings, sf_endpoint, sf_partition, spectral_flow, Engine, FlowResult};
pub use spectral::{p_minus, p_plus, riesz_projector, spectral_projector, Contour, Projector, SpectralRegion};
pub use odeindex::{
    check_essentially_splitting, ode_index_formula, ode_index_shooting, sf_asymptotic, verify_final,
    verify_final_block, BlockPath, IndexReport,
};
