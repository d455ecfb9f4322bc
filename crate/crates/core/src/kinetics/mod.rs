//! Hopping kinetics: energetics, Miller-Abrahams rates, rejection-free KMC
//! and an exact master-equation oracle.
//!
//! # Conventions
//!
//! * Carriers are electrons. A carrier on site `i` has energy
//!   `E_i = -V_i + eps_i - K sum_c 1/r_ic + K sum_{j occupied, j != i} 1/r_ij`
//!   (eV), with `V_i` the external potential, `eps_i` the disorder energy,
//!   `c` running over the counterdopants and `K = e^2/(4 pi eps_0 eps_r)`.
//! * An electron in electrode `k` has energy `-U_k`.
//! * Site-to-site hop `s -> t`: `dE = E_t - E_s - K/r_st`, where `E_t` still
//!   contains the repulsion of the carrier sitting on `s`.
//!   Injection `k -> t`: `dE = E_t + U_k`. Ejection `s -> k`: `dE = -U_k - E_s`.
//! * At most one carrier per site; all pairs are enumerated (no cutoff).
//! * The output current is positive for net electron flow from the device
//!   into the output electrode: ejections into the output count `+1`,
//!   injections from it `-1`. Currents are reported in nA.

mod catalog;
mod engine;
mod oracle;
mod rates;
mod system;
pub mod tiny;
mod trace;

pub use catalog::{build_rate_catalog, Event, RateCatalog};
pub use engine::{kmc_step, run_replica, CurrentEstimate, KmcConfig, Replica, Step};
pub use oracle::{steady_state_oracle, OracleResult, MAX_ORACLE_SITES};
pub use rates::miller_abrahams_rate;
pub use system::{hop_energy_delta, Electrode, Endpoint, HoppingSystem, SystemSpec, SystemState};
pub use trace::dump_trajectory;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KineticsError {
    #[error("absorbing state at step {step}: total rate is {total_rate}")]
    Absorbing { step: u64, total_rate: f64 },
    #[error("illegal hop {0}")]
    IllegalHop(String),
    #[error("no simulated time elapsed")]
    ZeroElapsed,
    #[error("wall-clock budget of {budget_s} s exceeded after {steps} steps")]
    WallClock { budget_s: f64, steps: u64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("oracle supports at most {max} sites, got {sites}")]
    TooManySites { sites: usize, max: usize },
    #[error("singular generator: the Markov chain is not irreducible")]
    SingularGenerator,
    #[error("trajectory dump: {0}")]
    Csv(#[from] csv::Error),
}
