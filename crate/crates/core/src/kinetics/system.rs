use rand::Rng;

use super::KineticsError;
use crate::constants::{coulomb_prefactor, thermal_energy};
use crate::device::{anchor_point, dist, DeviceGeometry, ElectrodeRole, MaterialParams, Point};
use crate::field::PotentialBasis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Electrode {
    /// The `U_k` label.
    pub index: u8,
    /// Reference point for electrode-site hop distances.
    pub anchor: Point,
}

/// Everything needed to build a [`HoppingSystem`] by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub sites: Vec<Point>,
    pub counterdopants: Vec<Point>,
    pub disorder_ev: Vec<f64>,
    pub electrodes: Vec<Electrode>,
    /// Slot of the output electrode in `electrodes`.
    pub output: usize,
    /// `basis[k][site]`: potential at `site` per volt on electrode `k`.
    pub basis: Vec<Vec<f64>>,
    pub material: MaterialParams,
}

/// Immutable, precomputed description of a hopping network. Shared read-only
/// by any number of KMC replicas.
#[derive(Debug, Clone)]
pub struct HoppingSystem {
    spec: SystemSpec,
    pub(super) n: usize,
    pub(super) inv_kt: f64,
    /// Disorder plus counterdopant attraction per site, eV.
    pub(super) background: Vec<f64>,
    /// `K / r_ij`, row-major `n x n`, zero diagonal.
    pub(super) pair_coulomb: Vec<f64>,
    /// `nu0 exp(-2 r_ij / a)`, row-major `n x n`, zero diagonal.
    pub(super) pair_prefactor: Vec<f64>,
    /// `nu0 exp(-2 r_ki / a)`, row-major `electrodes x n`.
    pub(super) electrode_prefactor: Vec<f64>,
}

impl HoppingSystem {
    pub fn new(spec: SystemSpec) -> Result<Self, KineticsError> {
        let bad = |m: String| Err(KineticsError::InvalidSystem(m));
        let n = spec.sites.len();
        let ne = spec.electrodes.len();
        if n == 0 {
            return bad("no sites".into());
        }
        if ne == 0 {
            return bad("no electrodes".into());
        }
        if spec.output >= ne {
            return bad(format!("output slot {} but only {ne} electrodes", spec.output));
        }
        if spec.disorder_ev.len() != n {
            return bad(format!("{} disorder energies for {n} sites", spec.disorder_ev.len()));
        }
        if spec.basis.len() != ne || spec.basis.iter().any(|b| b.len() != n) {
            return bad("potential basis does not match sites x electrodes".into());
        }
        let m = &spec.material;
        if !(m.hopping_distance_nm > 0.0
            && m.temperature_k > 0.0
            && m.relative_permittivity > 0.0
            && m.attempt_frequency > 0.0)
        {
            return bad("material parameters must be positive".into());
        }

        let k = coulomb_prefactor(m.relative_permittivity);
        let a = m.hopping_distance_nm;
        let nu0 = m.attempt_frequency;

        let mut background = spec.disorder_ev.clone();
        for (i, b) in background.iter_mut().enumerate() {
            for c in &spec.counterdopants {
                let r = dist(spec.sites[i], *c);
                if r == 0.0 {
                    return bad(format!("site {i} coincides with a counterdopant"));
                }
                *b -= k / r;
            }
        }

        let mut pair_coulomb = vec![0.0; n * n];
        let mut pair_prefactor = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let r = dist(spec.sites[i], spec.sites[j]);
                if r == 0.0 {
                    return bad(format!("sites {i} and {j} coincide"));
                }
                pair_coulomb[i * n + j] = k / r;
                pair_prefactor[i * n + j] = nu0 * (-2.0 * r / a).exp();
            }
        }
        let mut electrode_prefactor = vec![0.0; ne * n];
        for (e, el) in spec.electrodes.iter().enumerate() {
            for i in 0..n {
                let r = dist(el.anchor, spec.sites[i]);
                electrode_prefactor[e * n + i] = nu0 * (-2.0 * r / a).exp();
            }
        }

        Ok(Self {
            n,
            inv_kt: 1.0 / thermal_energy(m.temperature_k),
            background,
            pair_coulomb,
            pair_prefactor,
            electrode_prefactor,
            spec,
        })
    }

    /// Network of a generated device with its sampled potential basis.
    pub fn from_device(geometry: &DeviceGeometry, basis: &PotentialBasis) -> Result<Self, KineticsError> {
        let indices: Vec<u8> = geometry.electrodes.iter().map(|e| e.index).collect();
        if basis.electrode_indices != indices {
            return Err(KineticsError::InvalidSystem("basis electrode order differs from device".into()));
        }
        let output = geometry
            .slot_of_role(ElectrodeRole::Output)
            .ok_or_else(|| KineticsError::InvalidSystem("device has no output electrode".into()))?;
        Self::new(SystemSpec {
            sites: geometry.dopants.clone(),
            counterdopants: geometry.counterdopants.clone(),
            disorder_ev: geometry.disorder_ev.clone(),
            electrodes: geometry
                .electrodes
                .iter()
                .map(|e| Electrode { index: e.index, anchor: anchor_point(geometry.radius_nm, e.center_angle) })
                .collect(),
            output,
            basis: basis.phi.clone(),
            material: geometry.material,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn electrodes(&self) -> usize {
        self.spec.electrodes.len()
    }

    pub fn output(&self) -> usize {
        self.spec.output
    }

    pub fn counterdopants(&self) -> usize {
        self.spec.counterdopants.len()
    }

    pub fn material(&self) -> &MaterialParams {
        &self.spec.material
    }

    #[inline]
    pub(super) fn coulomb(&self, i: usize, j: usize) -> f64 {
        self.pair_coulomb[i * self.n + j]
    }

    /// External potential at every site for the given electrode voltages.
    pub fn site_potentials(&self, voltages: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (phi, &u) in self.spec.basis.iter().zip(voltages) {
            for (o, &p) in v.iter_mut().zip(phi) {
                *o += u * p;
            }
        }
        v
    }
}

/// Carrier configuration of one replica plus cached site energies.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub(super) occupied: Vec<bool>,
    pub(super) carrier_count: usize,
    pub(super) voltages: Vec<f64>,
    pub(super) potentials: Vec<f64>,
    /// Cached `E_i`, maintained incrementally.
    pub(super) energies: Vec<f64>,
    pub(super) time: f64,
    pub(super) net_output_hops: i64,
    pub(super) steps: u64,
}

impl SystemState {
    /// State with an explicit occupation.
    pub fn new(system: &HoppingSystem, voltages: &[f64], occupied: Vec<bool>) -> Result<Self, KineticsError> {
        if voltages.len() != system.electrodes() {
            return Err(KineticsError::InvalidSystem(format!(
                "{} voltages for {} electrodes",
                voltages.len(),
                system.electrodes()
            )));
        }
        if occupied.len() != system.sites() {
            return Err(KineticsError::InvalidSystem("occupation length differs from site count".into()));
        }
        let potentials = system.site_potentials(voltages);
        let mut s = Self {
            carrier_count: occupied.iter().filter(|&&o| o).count(),
            occupied,
            voltages: voltages.to_vec(),
            potentials,
            energies: Vec::new(),
            time: 0.0,
            net_output_hops: 0,
            steps: 0,
        };
        s.energies = s.fresh_energies(system);
        Ok(s)
    }

    /// Neutral start: as many carriers as counterdopants, on distinct sites
    /// drawn uniformly at random.
    pub fn neutral<R: Rng + ?Sized>(
        system: &HoppingSystem,
        voltages: &[f64],
        rng: &mut R,
    ) -> Result<Self, KineticsError> {
        let n = system.sites();
        let carriers = system.counterdopants();
        if carriers > n {
            return Err(KineticsError::InvalidSystem(format!("{carriers} carriers on {n} sites")));
        }
        let mut occupied = vec![false; n];
        for i in rand::seq::index::sample(rng, n, carriers) {
            occupied[i] = true;
        }
        Self::new(system, voltages, occupied)
    }

    /// Site energies recomputed from the occupation.
    pub fn fresh_energies(&self, system: &HoppingSystem) -> Vec<f64> {
        (0..system.sites()).map(|i| self.site_energy(system, i)).collect()
    }

    /// `E_i` evaluated from scratch (independent of the cache).
    pub fn site_energy(&self, system: &HoppingSystem, site: usize) -> f64 {
        let mut e = -self.potentials[site] + system.background[site];
        for (j, &occ) in self.occupied.iter().enumerate() {
            if occ && j != site {
                e += system.coulomb(site, j);
            }
        }
        e
    }

    /// Cached `E_i`.
    pub fn energy(&self, site: usize) -> f64 {
        self.energies[site]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn occupation(&self) -> &[bool] {
        &self.occupied
    }

    pub fn is_occupied(&self, site: usize) -> bool {
        self.occupied[site]
    }

    pub fn carrier_count(&self) -> usize {
        self.carrier_count
    }

    pub fn voltages(&self) -> &[f64] {
        &self.voltages
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    pub fn simulated_time(&self) -> f64 {
        self.time
    }

    pub fn net_output_hops(&self) -> i64 {
        self.net_output_hops
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Zeroes time, step and hop counters.
    pub fn reset_counters(&mut self) {
        self.time = 0.0;
        self.net_output_hops = 0;
        self.steps = 0;
    }

    /// Replaces the cached energies by a fresh evaluation.
    pub fn resync(&mut self, system: &HoppingSystem) {
        self.energies = self.fresh_energies(system);
    }
}

/// One end of a hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Site(usize),
    /// Electrode slot.
    Electrode(usize),
}

/// Energy change of moving one electron from `source` to `target`, eV.
pub fn hop_energy_delta(
    system: &HoppingSystem,
    state: &SystemState,
    source: Endpoint,
    target: Endpoint,
) -> Result<f64, KineticsError> {
    let illegal = |why: &str| Err(KineticsError::IllegalHop(format!("{source:?} -> {target:?}: {why}")));
    let check_site = |i: usize| i < system.sites();
    let check_el = |k: usize| k < system.electrodes();
    match (source, target) {
        (Endpoint::Site(s), Endpoint::Site(t)) => {
            if !check_site(s) || !check_site(t) || s == t {
                return illegal("bad site");
            }
            if !state.occupied[s] || state.occupied[t] {
                return illegal("source must be occupied and target empty");
            }
            Ok(state.energies[t] - state.energies[s] - system.coulomb(s, t))
        }
        (Endpoint::Electrode(k), Endpoint::Site(t)) => {
            if !check_el(k) || !check_site(t) {
                return illegal("bad endpoint");
            }
            if state.occupied[t] {
                return illegal("target occupied");
            }
            Ok(state.energies[t] + state.voltages[k])
        }
        (Endpoint::Site(s), Endpoint::Electrode(k)) => {
            if !check_el(k) || !check_site(s) {
                return illegal("bad endpoint");
            }
            if !state.occupied[s] {
                return illegal("source empty");
            }
            Ok(-state.voltages[k] - state.energies[s])
        }
        (Endpoint::Electrode(_), Endpoint::Electrode(_)) => illegal("electrode to electrode"),
    }
}
