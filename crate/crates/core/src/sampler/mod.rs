//! Metropolis-within-Gibbs samplers for both response families.

mod config;
mod gaussian;
mod probit;
mod run;
mod state;

pub use config::{SamplerConfig, SrForm, Structure, Submodel};
pub use gaussian::{
    imputation_conditional, update_beta, update_gamma_gg, update_gamma_sr, update_missing,
    update_phi_gg, update_phi_sr, update_sr,
};
pub use probit::{update_rho_gg, update_theta};
pub use run::{initial_state, run_chain, run_chain_from, run_chain_probit, scan};
pub use state::{gg_innovation, ChainDraw, ChainState, Model, Proposal, ScanFlags, StepOutcome};
