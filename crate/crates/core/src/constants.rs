//! Physical constants (CODATA 2018) in the unit system used throughout the
//! crate: lengths in nm, energies in eV, potentials in V, time in s.

/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617_333_262e-5;

/// Elementary charge in C.
pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;

/// `e^2 / (4 pi eps_0)` in eV nm. Divide by the relative permittivity to get
/// the Coulomb prefactor of a medium.
pub const COULOMB_EV_NM: f64 = 1.439_964_548;

/// Amperes to nanoamperes.
pub const NANO: f64 = 1e9;

/// Thermal energy `k_B T` in eV.
#[inline]
pub fn thermal_energy(temperature_k: f64) -> f64 {
    BOLTZMANN_EV_PER_K * temperature_k
}

/// Coulomb prefactor `e^2 / (4 pi eps_0 eps_r)` in eV nm.
#[inline]
pub fn coulomb_prefactor(eps_r: f64) -> f64 {
    COULOMB_EV_NM / eps_r
}

/// Converts a net electron count per second into a current in nA.
#[inline]
pub fn hops_per_second_to_na(rate: f64) -> f64 {
    rate * ELEMENTARY_CHARGE_C * NANO
}
