use serde::{Deserialize, Serialize};

use super::fitness::{evaluate_fitness, Gate};
use super::ranges::{ControlRange, VoltageRanges};
use super::sweep::{SampleOutcome, Sampler};
use super::SamplingError;
use crate::device::DeviceGeometry;
use crate::exec::Execution;
use crate::field::PotentialBasis;
use crate::kinetics::KmcConfig;

/// `p0` at or below this counts as "much smaller than one".
pub const SMALL_P0: f64 = 0.1;
/// `V_tot / dV` must exceed `N_gates` by at least this factor.
pub const SEPARATION_FACTOR: f64 = 5.0;

/// Axis-aligned control-voltage box around `center` with edge lengths
/// `edges`, both in the order of the global ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCube {
    pub center: Vec<f64>,
    pub edges: Vec<f64>,
}

impl LocalCube {
    /// `dV`, the product of the edge lengths.
    pub fn volume(&self) -> f64 {
        self.edges.iter().product()
    }

    /// The cube as sampling ranges, checked to lie inside `global`.
    pub fn ranges(&self, global: &VoltageRanges) -> Result<VoltageRanges, SamplingError> {
        let d = global.controls.len();
        if self.center.len() != d || self.edges.len() != d {
            return Err(SamplingError::InvalidRanges(format!("local cube needs {d} centre and edge values")));
        }
        let mut controls = Vec::with_capacity(d);
        for ((g, &c), &e) in global.controls.iter().zip(&self.center).zip(&self.edges) {
            if !(e >= 0.0 && c.is_finite()) {
                return Err(SamplingError::InvalidRanges(format!("U{}: centre {c}, edge {e}", g.electrode)));
            }
            let r = ControlRange { electrode: g.electrode, low: c - e / 2.0, high: c + e / 2.0 };
            if r.low < g.low || r.high > g.high {
                return Err(SamplingError::InvalidRanges(format!(
                    "U{}: local [{}, {}] leaves global [{}, {}]",
                    g.electrode, r.low, r.high, g.low, g.high
                )));
            }
            controls.push(r);
        }
        Ok(VoltageRanges { controls, input_low: global.input_low, input_high: global.input_high })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalHypervolume {
    pub gate: Gate,
    pub f_min: f64,
    /// Fraction of valid local samples with `F > F_min`.
    pub p0: f64,
    /// `dV`, V^d.
    pub delta_v: f64,
    /// `V0 = p0 dV`.
    pub v0: f64,
    pub hits: usize,
    pub valid: usize,
    pub flagged: usize,
}

/// Samples `n` control vectors uniformly inside `cube` and reports the
/// fraction that realizes `gate` above `f_min`.
#[allow(clippy::too_many_arguments)]
pub fn local_hypervolume(
    device: &DeviceGeometry,
    basis: &PotentialBasis,
    global: &VoltageRanges,
    cube: &LocalCube,
    gate: Gate,
    f_min: f64,
    k: f64,
    n: u64,
    master_seed: u64,
    kmc: &KmcConfig,
    exec: Execution,
) -> Result<LocalHypervolume, SamplingError> {
    let local = cube.ranges(global)?;
    let sampler = Sampler::new(device, basis, local, *kmc, master_seed)?.for_local_estimate();
    let mut hits = 0;
    let mut valid = 0;
    let mut flagged = 0;
    for o in sampler.run(0..n, exec)? {
        match o {
            SampleOutcome::Record(r) => {
                valid += 1;
                if evaluate_fitness(r.currents, gate, k).fitness > f_min {
                    hits += 1;
                }
            }
            SampleOutcome::Flagged(_) => flagged += 1,
        }
    }
    if valid == 0 {
        return Err(SamplingError::EmptyDataset);
    }
    let p0 = hits as f64 / valid as f64;
    let delta_v = cube.volume();
    Ok(LocalHypervolume { gate, f_min, p0, delta_v, v0: p0 * delta_v, hits, valid, flagged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypervolumeEstimate {
    pub p0: f64,
    pub delta_v: f64,
    pub v0: f64,
    pub p_abundance: f64,
    pub v_tot: f64,
    /// `p_abundance V_tot / (p0 dV)` before rounding.
    pub n_gates_raw: f64,
    /// Nearest integer to the raw estimate.
    pub n_gates: u64,
    /// `p0 <= SMALL_P0`: the local cube reaches beyond the gate region.
    pub p0_small: bool,
    /// `V_tot / dV >= SEPARATION_FACTOR * N_gates`: local cubes of distinct
    /// realizations rarely overlap.
    pub cubes_separated: bool,
}

/// Number of distinct gate realizations: the global volume occupied by the
/// gate divided by the volume of one realization.
pub fn estimate_gate_count(
    p_abundance: f64,
    v_tot: f64,
    p0: f64,
    delta_v: f64,
) -> Result<HypervolumeEstimate, SamplingError> {
    if !(p0 > 0.0) {
        return Err(SamplingError::UndefinedEstimate(format!("p0 = {p0}: no local sample realizes the gate")));
    }
    if !(delta_v > 0.0) || !(v_tot > 0.0) {
        return Err(SamplingError::UndefinedEstimate(format!(
            "volumes must be positive (dV = {delta_v}, V_tot = {v_tot})"
        )));
    }
    if !(0.0..=1.0).contains(&p_abundance) {
        return Err(SamplingError::UndefinedEstimate(format!("abundance {p_abundance} outside [0, 1]")));
    }
    let v0 = p0 * delta_v;
    let raw = p_abundance * v_tot / v0;
    Ok(HypervolumeEstimate {
        p0,
        delta_v,
        v0,
        p_abundance,
        v_tot,
        n_gates_raw: raw,
        n_gates: raw.round() as u64,
        p0_small: p0 <= SMALL_P0,
        cubes_separated: v_tot / delta_v >= SEPARATION_FACTOR * raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Preset;

    #[test]
    fn and_gate_row() {
        let e = estimate_gate_count(0.0015, 32.0, 0.05, 0.18).unwrap();
        assert!((e.n_gates_raw - 5.333_333).abs() < 1e-5);
        assert_eq!(e.n_gates, 5);
        assert!((e.v0 - 0.009).abs() < 1e-15);
        assert!(e.p0_small && e.cubes_separated);
    }

    #[test]
    fn zero_abundance_means_no_gates() {
        let e = estimate_gate_count(0.0, 32.0, 0.05, 0.18).unwrap();
        assert_eq!(e.n_gates_raw, 0.0);
        assert_eq!(e.n_gates, 0);
    }

    #[test]
    fn zero_p0_is_undefined() {
        assert!(matches!(estimate_gate_count(0.001, 32.0, 0.0, 0.1), Err(SamplingError::UndefinedEstimate(_))));
    }

    #[test]
    fn local_cube_must_fit_inside_the_global_ranges() {
        let g = VoltageRanges::preset(Preset::Standard);
        let ok = LocalCube { center: vec![0.0, 0.5, -0.5, 0.2, 0.0], edges: vec![0.5; 5] };
        let r = ok.ranges(&g).unwrap();
        assert_eq!(r.controls[1].low, 0.25);
        assert!((ok.volume() - 0.5f64.powi(5)).abs() < 1e-15);
        let out = LocalCube { center: vec![0.9, 0.0, 0.0, 0.0, 0.0], edges: vec![0.5; 5] };
        assert!(out.ranges(&g).is_err());
        let short = LocalCube { center: vec![0.0; 4], edges: vec![0.1; 4] };
        assert!(short.ranges(&g).is_err());
    }
}
