//! Gamma function, the truncated exponential `exp_p`, sharp constants and
//! the Moser-sequence coefficient recursion.

mod coefficients;
mod constants;
mod expp;
mod gamma;

pub use coefficients::{c1m_closed, coefficient_table, CoefficientTable};
pub use constants::{
    beta_0k, c_epsilon, chain_factors, hardy_constant_chain, hardy_constant_first_order, hardy_constant_second_order,
    verify_beta_identities,
};
pub use expp::{exp_p, ln_exp_p};
pub use gamma::{gamma_fn, ln_gamma};
