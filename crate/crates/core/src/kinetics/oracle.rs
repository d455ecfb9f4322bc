use nalgebra::{DMatrix, DVector};

use super::rates::miller_abrahams_rate;
use super::system::HoppingSystem;
use super::KineticsError;
use crate::constants::{coulomb_prefactor, hops_per_second_to_na};
use crate::device::dist;

/// Largest network the oracle enumerates (`2^n` occupation states).
pub const MAX_ORACLE_SITES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Exact stationary output current, nA.
    pub current_na: f64,
    /// Stationary probability of every occupation, indexed by the bit mask
    /// with bit `i` set when site `i` is occupied.
    pub distribution: Vec<f64>,
}

impl OracleResult {
    /// Stationary mean number of carriers.
    pub fn mean_carriers(&self) -> f64 {
        self.distribution.iter().enumerate().map(|(m, p)| m.count_ones() as f64 * p).sum()
    }
}

/// Exact stationary output current of the hopping Markov chain.
///
/// Builds the full generator over all occupations (the carrier number
/// changes through electrode exchange) and solves `pi Q = 0` with
/// `sum pi = 1`. Energy changes come from differences of the total
/// electrostatic energy, independently of the per-site bookkeeping used by
/// the KMC engine.
pub fn steady_state_oracle(system: &HoppingSystem, voltages: &[f64]) -> Result<OracleResult, KineticsError> {
    let spec = system.spec();
    let n = spec.sites.len();
    if n > MAX_ORACLE_SITES {
        return Err(KineticsError::TooManySites { sites: n, max: MAX_ORACLE_SITES });
    }
    if voltages.len() != spec.electrodes.len() {
        return Err(KineticsError::InvalidSystem("voltage count differs from electrode count".into()));
    }
    let m = &spec.material;
    let k = coulomb_prefactor(m.relative_permittivity);

    // single-carrier energy without carrier-carrier terms
    let onsite: Vec<f64> = (0..n)
        .map(|i| {
            let v: f64 = spec.basis.iter().zip(voltages).map(|(phi, u)| u * phi[i]).sum();
            let attraction: f64 = spec.counterdopants.iter().map(|c| k / dist(spec.sites[i], *c)).sum();
            -v + spec.disorder_ev[i] - attraction
        })
        .collect();
    let hamiltonian = |mask: usize| -> f64 {
        let mut h = 0.0;
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            h += onsite[i];
            for j in (i + 1..n).filter(|j| mask >> j & 1 == 1) {
                h += k / dist(spec.sites[i], spec.sites[j]);
            }
        }
        h
    };
    let rate =
        |r: f64, de: f64| miller_abrahams_rate(r, de, m.hopping_distance_nm, m.temperature_k, m.attempt_frequency);

    let states = 1usize << n;
    let energy: Vec<f64> = (0..states).map(hamiltonian).collect();
    let mut q = DMatrix::<f64>::zeros(states, states);
    // (from, rate, signed output hops) for output-electrode transitions
    let mut output_flux: Vec<(usize, f64, f64)> = Vec::new();

    for from in 0..states {
        let mut add = |to: usize, g: f64| {
            q[(from, to)] += g;
            q[(from, from)] -= g;
        };
        for s in 0..n {
            let occ_s = from >> s & 1 == 1;
            if occ_s {
                for t in (0..n).filter(|t| from >> t & 1 == 0) {
                    let to = from ^ (1 << s) ^ (1 << t);
                    add(to, rate(dist(spec.sites[s], spec.sites[t]), energy[to] - energy[from]));
                }
            }
            for (e, el) in spec.electrodes.iter().enumerate() {
                let to = from ^ (1 << s);
                let r = dist(el.anchor, spec.sites[s]);
                let reservoir = -voltages[e];
                let (g, sign) = if occ_s {
                    (rate(r, energy[to] + reservoir - energy[from]), 1.0)
                } else {
                    (rate(r, energy[to] - energy[from] - reservoir), -1.0)
                };
                add(to, g);
                if e == spec.output {
                    output_flux.push((from, g, sign));
                }
            }
        }
    }

    // pi Q = 0  <=>  Q^T pi^T = 0; last equation replaced by normalisation
    let mut a = q.transpose();
    a.row_mut(states - 1).fill(1.0);
    let mut b = DVector::<f64>::zeros(states);
    b[states - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(KineticsError::SingularGenerator)?;
    if pi.iter().any(|p| !p.is_finite() || *p < -1e-9) {
        return Err(KineticsError::SingularGenerator);
    }

    let net: f64 = output_flux.iter().map(|&(from, g, sign)| sign * g * pi[from]).sum();
    Ok(OracleResult { current_na: hops_per_second_to_na(net), distribution: pi.iter().copied().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::tiny;

    #[test]
    fn zero_bias_carries_no_current() {
        for n in 1..=4 {
            let sys = tiny::chain(n);
            let res = steady_state_oracle(&sys, &[0.0, 0.0]).unwrap();
            let scale = hops_per_second_to_na(1e11);
            assert!(res.current_na.abs() < 1e-12 * scale, "{n}: {}", res.current_na);
            assert!((res.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_site_birth_death_chain() {
        let sys = tiny::chain(1);
        let spec = sys.spec();
        let m = &spec.material;
        let u = [0.0, 0.1];
        let res = steady_state_oracle(&sys, &u).unwrap();

        // hand-solved two-state chain
        let k = coulomb_prefactor(m.relative_permittivity);
        let site = spec.sites[0];
        let e: f64 = -(spec.basis[1][0] * u[1]) + spec.disorder_ev[0] - k / dist(site, spec.counterdopants[0]);
        let g = |slot: usize, de: f64| {
            let r = dist(spec.electrodes[slot].anchor, site);
            m.attempt_frequency
                * (-2.0 * r / m.hopping_distance_nm).exp()
                * if de > 0.0 { (-de / crate::constants::thermal_energy(m.temperature_k)).exp() } else { 1.0 }
        };
        let inj = [g(0, e + u[0]), g(1, e + u[1])];
        let ej = [g(0, -u[0] - e), g(1, -u[1] - e)];
        let p1 = (inj[0] + inj[1]) / (inj[0] + inj[1] + ej[0] + ej[1]);
        let p0 = 1.0 - p1;
        let expect = hops_per_second_to_na(p1 * ej[1] - p0 * inj[1]);
        assert!((res.distribution[1] - p1).abs() < 1e-12);
        assert!((res.current_na - expect).abs() <= 1e-9 * expect.abs(), "{} vs {expect}", res.current_na);
        // electrons drift toward the higher potential, here the output
        assert!(res.current_na > 0.0);
    }

    #[test]
    fn reversed_bias_on_symmetric_chain_negates_current() {
        let sys = tiny::symmetric_chain(3);
        let fwd = steady_state_oracle(&sys, &[-0.1, 0.0]).unwrap().current_na;
        assert!(fwd > 0.0);
        // mirror image: grounded source, output at -0.1 V
        let back = steady_state_oracle(&sys, &[0.0, -0.1]).unwrap().current_na;
        assert!((fwd + back).abs() < 1e-9 * fwd.abs());
    }

    #[test]
    fn too_many_sites_is_rejected() {
        let sys = crate::kinetics::HoppingSystem::new(crate::kinetics::SystemSpec {
            sites: (0..11).map(|i| [i as f64, 0.0]).collect(),
            counterdopants: vec![],
            disorder_ev: vec![0.0; 11],
            electrodes: vec![crate::kinetics::Electrode { index: 1, anchor: [-1.0, 0.0] }],
            output: 0,
            basis: vec![vec![0.0; 11]],
            material: Default::default(),
        })
        .unwrap();
        assert!(matches!(steady_state_oracle(&sys, &[0.0]), Err(KineticsError::TooManySites { .. })));
    }
}
