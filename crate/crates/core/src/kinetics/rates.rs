use crate::constants::thermal_energy;

/// Miller-Abrahams hop rate in 1/s.
///
/// `nu0 exp(-2r/a - dE/kT)` for uphill hops (`dE > 0`), `nu0 exp(-2r/a)`
/// otherwise. Lengths in nm, energies in eV, temperature in K.
#[inline]
pub fn miller_abrahams_rate(r_nm: f64, delta_e_ev: f64, a_nm: f64, temperature_k: f64, nu0: f64) -> f64 {
    let tunnelling = -2.0 * r_nm / a_nm;
    if delta_e_ev > 0.0 {
        nu0 * (tunnelling - delta_e_ev / thermal_energy(temperature_k)).exp()
    } else {
        nu0 * tunnelling.exp()
    }
}

/// Boltzmann penalty `exp(-max(dE, 0) / kT)`.
#[inline]
pub(crate) fn uphill_factor(delta_e: f64, inv_kt: f64) -> f64 {
    if delta_e > 0.0 {
        (-delta_e * inv_kt).exp()
    } else {
        1.0
    }
}
