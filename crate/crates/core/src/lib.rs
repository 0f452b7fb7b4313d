//! Robust and cost-aware resource allocation in bipartite demand-supply
//! networks, with cascading-failure simulation and mitigation.

pub mod baselines;
pub mod cascade;
pub mod cost;
pub mod error;
pub mod experiments;
pub mod io;
pub mod mitigation;
pub mod network;
pub mod par;
pub mod robust;

pub use error::{Error, Result};
pub use network::{AllocationMatrix, Network, Regime, TOL};
