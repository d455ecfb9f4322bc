//! Built-in few-site systems between two electrodes, small enough for the
//! exact master-equation oracle.
//!
//! Sites sit on the x axis 4 nm apart, centred on the origin, with the
//! source electrode (slot 0) and the grounded output (slot 1) one spacing
//! beyond either end. The external potential is linear between them. One
//! counterdopant sits on the symmetry axis, so a neutral start holds one
//! electron.

use super::system::{Electrode, HoppingSystem, SystemSpec};
use crate::device::MaterialParams;

/// Site spacing, nm.
pub const SPACING_NM: f64 = 4.0;
/// Fixed disorder energies assigned to the sites in order, eV.
const DISORDER_EV: [f64; 5] = [0.012, -0.018, 0.007, -0.004, 0.015];
const COUNTERDOPANT: [f64; 2] = [0.0, 6.0];

/// Chain of `sites` sites (1 to 5) with the built-in disorder.
pub fn chain(sites: usize) -> HoppingSystem {
    build(sites, &DISORDER_EV[..sites])
}

/// Chain without disorder; mirror symmetric under `x -> -x`.
pub fn symmetric_chain(sites: usize) -> HoppingSystem {
    build(sites, &vec![0.0; sites])
}

/// Voltages with `source` on slot 0 and the output grounded.
pub fn bias(system: &HoppingSystem, source: f64) -> Vec<f64> {
    let mut v = vec![0.0; system.electrodes()];
    v[0] = source;
    v
}

fn build(sites: usize, disorder: &[f64]) -> HoppingSystem {
    assert!((1..=DISORDER_EV.len()).contains(&sites), "tiny chains have 1 to 5 sites");
    let half = (sites as f64 + 1.0) * SPACING_NM / 2.0;
    let xs: Vec<f64> = (0..sites).map(|i| -half + (i as f64 + 1.0) * SPACING_NM).collect();
    let left: Vec<f64> = xs.iter().map(|x| (half - x) / (2.0 * half)).collect();
    let right: Vec<f64> = xs.iter().map(|x| (half + x) / (2.0 * half)).collect();
    HoppingSystem::new(SystemSpec {
        sites: xs.iter().map(|&x| [x, 0.0]).collect(),
        counterdopants: vec![COUNTERDOPANT],
        disorder_ev: disorder.to_vec(),
        electrodes: vec![Electrode { index: 1, anchor: [-half, 0.0] }, Electrode { index: 2, anchor: [half, 0.0] }],
        output: 1,
        basis: vec![left, right],
        material: MaterialParams::default(),
    })
    .expect("built-in chain is valid")
}
