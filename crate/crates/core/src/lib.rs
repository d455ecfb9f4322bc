//! Variable-range hopping transport in disordered dopant networks.
//!
//! The crate covers the whole pipeline from a random dopant geometry to
//! gate statistics:
//!
//! * [`device`]: random dopant/counterdopant placement inside a disc with
//!   eight boundary electrodes, plus the JSON device file.
//! * [`field`]: finite-difference Laplace solves for the per-electrode unit
//!   potentials, superposed for arbitrary electrode voltages.
//! * [`kinetics`]: site energetics with Coulomb interactions, Miller-Abrahams
//!   rates, the rejection-free KMC engine, current measurement and an exact
//!   master-equation oracle for tiny systems.
//! * [`sampling`]: hypercube sampling of control voltages, gate fitness,
//!   abundance curves and hypervolume / gate-count estimates.
//! * [`analysis`]: the `(I_av, M_l, M_r, X)` decomposition, covariance and PCA,
//!   analytic eigenvalues and the nonlinearity indicators.
//!
//! All randomness derives from a master seed through [`seeding`].

// `!(x > 0.0)` is used on purpose so NaN fails the check; index loops read
// better than iterator chains in the small dense matrix code.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod constants;
pub mod device;
pub mod exec;
pub mod field;
pub mod kinetics;
pub mod sampling;
pub mod seeding;

pub use device::{DeviceConfig, DeviceGeometry, ElectrodeArc, ElectrodeRole, MaterialParams};
pub use exec::Execution;
pub use field::{GridSpec, PotentialBasis};
pub use kinetics::{CurrentEstimate, HoppingSystem, KmcConfig, SystemState};
