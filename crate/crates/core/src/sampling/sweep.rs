use std::ops::Range;

use rand::Rng;

use super::dataset::{DatasetMeta, FlaggedSample, SampleDataset, SampleRecord};
use super::ranges::VoltageRanges;
use super::SamplingError;
use crate::device::{DeviceGeometry, ElectrodeRole};
use crate::exec::Execution;
use crate::field::PotentialBasis;
use crate::kinetics::{run_replica, HoppingSystem, KineticsError, KmcConfig};
use crate::seeding::{replica_index, stream, Purpose};

/// `(left, right)` logic levels in measurement order `00, 10, 01, 11`.
pub const INPUT_COMBINATIONS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

/// Result of one sample: a full record, or the reason it was dropped.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutcome {
    Record(SampleRecord),
    Flagged(FlaggedSample),
}

/// Everything needed to measure current vectors on one device.
#[derive(Debug, Clone)]
pub struct Sampler {
    system: HoppingSystem,
    ranges: VoltageRanges,
    kmc: KmcConfig,
    master_seed: u64,
    voltage_stream: Purpose,
    kmc_stream: Purpose,
    control_slots: Vec<usize>,
    left_slot: usize,
    right_slot: usize,
    device_hash: String,
}

impl Sampler {
    pub fn new(
        device: &DeviceGeometry,
        basis: &PotentialBasis,
        ranges: VoltageRanges,
        kmc: KmcConfig,
        master_seed: u64,
    ) -> Result<Self, SamplingError> {
        ranges.validate()?;
        let system = HoppingSystem::from_device(device, basis)?;
        let role_slot = |role| {
            device.slot_of_role(role).ok_or_else(|| SamplingError::Layout(format!("device has no {role} electrode")))
        };
        let left_slot = role_slot(ElectrodeRole::InputLeft)?;
        let right_slot = role_slot(ElectrodeRole::InputRight)?;
        let mut control_slots = Vec::with_capacity(ranges.controls.len());
        for r in &ranges.controls {
            let slot = device
                .electrode_slot(r.electrode)
                .map_err(|_| SamplingError::Layout(format!("no electrode U{}", r.electrode)))?;
            if device.electrodes[slot].role != ElectrodeRole::Control {
                return Err(SamplingError::Layout(format!("U{} is not a control electrode", r.electrode)));
            }
            control_slots.push(slot);
        }
        let mut expected = device.control_indices();
        let mut given = ranges.electrodes();
        expected.sort_unstable();
        given.sort_unstable();
        if expected != given {
            return Err(SamplingError::Layout(format!("ranges cover {given:?}, device controls are {expected:?}")));
        }
        Ok(Self {
            system,
            ranges,
            kmc,
            master_seed,
            voltage_stream: Purpose::ControlVoltages,
            kmc_stream: Purpose::Kmc,
            control_slots,
            left_slot,
            right_slot,
            device_hash: device.content_hash(),
        })
    }

    /// Draws from the streams reserved for local hypervolume estimates
    /// instead of the global sweep.
    pub fn for_local_estimate(mut self) -> Self {
        self.voltage_stream = Purpose::LocalVoltages;
        self.kmc_stream = Purpose::LocalKmc;
        self
    }

    pub fn system(&self) -> &HoppingSystem {
        &self.system
    }

    pub fn ranges(&self) -> &VoltageRanges {
        &self.ranges
    }

    pub fn kmc(&self) -> &KmcConfig {
        &self.kmc
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Dataset metadata for runs of this sampler.
    pub fn meta(&self, requested: u64) -> DatasetMeta {
        let m = self.system.material();
        DatasetMeta {
            device_hash: self.device_hash.clone(),
            ranges: self.ranges.clone(),
            hopping_distance_nm: m.hopping_distance_nm,
            temperature_k: m.temperature_k,
            kmc: self.kmc,
            master_seed: self.master_seed,
            requested,
            flagged: Vec::new(),
            config_hash: None,
        }
    }

    /// Control vector of `sample_index`, uniform in the ranges.
    pub fn control_voltages(&self, sample_index: u64) -> Vec<f64> {
        let mut rng = stream(self.master_seed, self.voltage_stream, sample_index);
        self.ranges
            .controls
            .iter()
            .map(|r| {
                let u: f64 = rng.random();
                (r.low + u * r.width()).min(r.high)
            })
            .collect()
    }

    /// Voltage on every electrode for the given controls and logic inputs;
    /// the output and any unlisted electrode stay at 0 V.
    pub fn electrode_voltages(&self, controls: &[f64], left: bool, right: bool) -> Vec<f64> {
        let mut v = vec![0.0; self.system.electrodes()];
        for (&slot, &u) in self.control_slots.iter().zip(controls) {
            v[slot] = u;
        }
        let level = |on: bool| if on { self.ranges.input_high } else { self.ranges.input_low };
        v[self.left_slot] = level(left);
        v[self.right_slot] = level(right);
        v
    }

    /// Current vector at fixed controls.
    pub fn measure(&self, sample_index: u64, controls: Vec<f64>) -> Result<SampleOutcome, SamplingError> {
        let mut currents = [0.0; 4];
        let mut stderr = [0.0; 4];
        for (input, &(l, r)) in INPUT_COMBINATIONS.iter().enumerate() {
            let v = self.electrode_voltages(&controls, l, r);
            let rng = stream(self.master_seed, self.kmc_stream, replica_index(sample_index, input));
            match run_replica(&self.system, &v, &self.kmc, rng) {
                Ok(est) => {
                    currents[input] = est.mean_na;
                    stderr[input] = est.stderr_na;
                }
                Err(
                    e
                    @ (KineticsError::Absorbing { .. } | KineticsError::WallClock { .. } | KineticsError::ZeroElapsed),
                ) => {
                    return Ok(SampleOutcome::Flagged(FlaggedSample { sample_index, input, reason: e.to_string() }));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(SampleOutcome::Record(SampleRecord { sample_index, controls, currents, stderr }))
    }

    pub fn sample(&self, sample_index: u64) -> Result<SampleOutcome, SamplingError> {
        self.measure(sample_index, self.control_voltages(sample_index))
    }

    /// Samples `indices`, returned in index order whatever the execution
    /// mode.
    pub fn run(&self, indices: Range<u64>, exec: Execution) -> Result<Vec<SampleOutcome>, SamplingError> {
        let start = indices.start;
        let n = indices.end.saturating_sub(start) as usize;
        exec.map_indexed(n, |i| self.sample(start + i as u64)).into_iter().collect()
    }
}

/// Draws `n` control vectors and measures their current vectors. Records
/// whose KMC run stalls are left out and listed in the metadata.
pub fn sample_hypercube(
    device: &DeviceGeometry,
    basis: &PotentialBasis,
    ranges: &VoltageRanges,
    n: u64,
    master_seed: u64,
    kmc: &KmcConfig,
    exec: Execution,
) -> Result<SampleDataset, SamplingError> {
    let sampler = Sampler::new(device, basis, ranges.clone(), *kmc, master_seed)?;
    let mut ds = SampleDataset::new(sampler.meta(n));
    ds.extend(sampler.run(0..n, exec)?);
    Ok(ds)
}
