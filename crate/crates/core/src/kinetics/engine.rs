use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{Event, RateCatalog};
use super::system::{HoppingSystem, SystemState};
use super::KineticsError;
use crate::constants::hops_per_second_to_na;

/// Cached energies drift by rounding under incremental updates; they are
/// recomputed from scratch this often.
const RESYNC_INTERVAL: u64 = 1 << 16;
/// Wall-clock checks are amortised over this many steps.
const CLOCK_INTERVAL: u64 = 1 << 12;

/// Outcome of one KMC step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub event: Event,
    /// Waiting time before the event, s.
    pub dwell: f64,
}

/// Performs one rejection-free step: picks an event with probability
/// `rate / R`, advances time by an exponential dwell of mean `1/R`, applies
/// the event and refreshes `catalog` for the new state.
///
/// `catalog` must describe `state` on entry (see [`RateCatalog::refresh`]).
pub fn kmc_step<R: Rng + ?Sized>(
    system: &HoppingSystem,
    state: &mut SystemState,
    catalog: &mut RateCatalog,
    rng: &mut R,
) -> Result<Step, KineticsError> {
    let total = catalog.total();
    if !(total > 0.0 && total.is_finite()) {
        return Err(KineticsError::Absorbing { step: state.steps, total_rate: total });
    }
    let u: f64 = rng.random();
    let pick = catalog.select(u * total);
    let event = catalog.events()[pick];
    let v: f64 = rng.random();
    let dwell = -(1.0 - v).ln() / total;

    apply(system, state, event);
    state.time += dwell;
    state.steps += 1;
    if state.steps.is_multiple_of(RESYNC_INTERVAL) {
        state.resync(system);
    }
    debug_assert_eq!(state.carrier_count, state.occupied.iter().filter(|&&o| o).count());
    catalog.refresh(system, state);
    Ok(Step { event, dwell })
}

/// Applies `event` to the occupation and updates cached energies
/// incrementally.
fn apply(system: &HoppingSystem, state: &mut SystemState, event: Event) {
    let n = system.n;
    match event {
        Event::Hop { from, to } => {
            let (s, t) = (from as usize, to as usize);
            debug_assert!(state.occupied[s] && !state.occupied[t]);
            state.occupied[s] = false;
            state.occupied[t] = true;
            let cs = &system.pair_coulomb[s * n..(s + 1) * n];
            let ct = &system.pair_coulomb[t * n..(t + 1) * n];
            for ((e, &a), &b) in state.energies.iter_mut().zip(ct).zip(cs) {
                *e += a - b;
            }
        }
        Event::Inject { electrode, site } => {
            let t = site as usize;
            debug_assert!(!state.occupied[t]);
            state.occupied[t] = true;
            state.carrier_count += 1;
            for (e, &c) in state.energies.iter_mut().zip(&system.pair_coulomb[t * n..(t + 1) * n]) {
                *e += c;
            }
            if electrode as usize == system.output() {
                state.net_output_hops -= 1;
            }
        }
        Event::Eject { site, electrode } => {
            let s = site as usize;
            debug_assert!(state.occupied[s]);
            state.occupied[s] = false;
            state.carrier_count -= 1;
            for (e, &c) in state.energies.iter_mut().zip(&system.pair_coulomb[s * n..(s + 1) * n]) {
                *e -= c;
            }
            if electrode as usize == system.output() {
                state.net_output_hops += 1;
            }
        }
    }
}

/// Output current with its subinterval error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentEstimate {
    /// nA, positive for electrons flowing into the output electrode.
    pub mean_na: f64,
    /// Sample standard deviation of the subinterval currents over
    /// `sqrt(subintervals)`, nA.
    pub stderr_na: f64,
    pub subintervals: usize,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmcConfig {
    pub equilibration_steps: u64,
    pub measurement_steps: u64,
    pub subintervals: usize,
    /// Per-replica wall-clock limit in seconds.
    pub wall_clock_budget: Option<f64>,
}

impl Default for KmcConfig {
    fn default() -> Self {
        Self { equilibration_steps: 10_000, measurement_steps: 10_000_000, subintervals: 100, wall_clock_budget: None }
    }
}

/// A system, its evolving state, the matching catalog and a private RNG.
#[derive(Debug, Clone)]
pub struct Replica<'a> {
    system: &'a HoppingSystem,
    state: SystemState,
    catalog: RateCatalog,
    rng: ChaCha8Rng,
    deadline: Option<(Instant, f64)>,
}

impl<'a> Replica<'a> {
    pub fn new(system: &'a HoppingSystem, state: SystemState, rng: ChaCha8Rng) -> Self {
        let mut catalog = RateCatalog::default();
        catalog.refresh(system, &state);
        Self { system, state, catalog, rng, deadline: None }
    }

    /// Neutral random start drawn from `rng`.
    pub fn neutral(system: &'a HoppingSystem, voltages: &[f64], mut rng: ChaCha8Rng) -> Result<Self, KineticsError> {
        let state = SystemState::neutral(system, voltages, &mut rng)?;
        Ok(Self::new(system, state, rng))
    }

    /// Aborts later steps with [`KineticsError::WallClock`] once `seconds`
    /// have passed from now.
    pub fn with_budget(mut self, seconds: Option<f64>) -> Self {
        self.deadline = seconds.map(|s| (Instant::now() + Duration::from_secs_f64(s.max(0.0)), s));
        self
    }

    pub fn system(&self) -> &'a HoppingSystem {
        self.system
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn catalog(&self) -> &RateCatalog {
        &self.catalog
    }

    pub fn step(&mut self) -> Result<Step, KineticsError> {
        if let Some((deadline, budget)) = self.deadline {
            if self.state.steps.is_multiple_of(CLOCK_INTERVAL) && Instant::now() >= deadline {
                return Err(KineticsError::WallClock { budget_s: budget, steps: self.state.steps });
            }
        }
        kmc_step(self.system, &mut self.state, &mut self.catalog, &mut self.rng)
    }

    /// Runs `steps` steps and then zeroes time, step and hop counters.
    pub fn equilibrate(&mut self, steps: u64) -> Result<(), KineticsError> {
        for _ in 0..steps {
            self.step()?;
        }
        self.state.reset_counters();
        Ok(())
    }

    /// Measures the output current over `steps` steps split into
    /// `subintervals` blocks of equal step count.
    pub fn measure_current(&mut self, steps: u64, subintervals: usize) -> Result<CurrentEstimate, KineticsError> {
        let subintervals = subintervals.max(1);
        if steps < subintervals as u64 {
            return Err(KineticsError::InvalidSystem(format!("{steps} steps cannot fill {subintervals} subintervals")));
        }
        let t0 = self.state.time;
        let h0 = self.state.net_output_hops;
        let mut block_currents = Vec::with_capacity(subintervals);
        let mut done = 0u64;
        for b in 0..subintervals {
            let end = steps * (b as u64 + 1) / subintervals as u64;
            let (bt, bh) = (self.state.time, self.state.net_output_hops);
            while done < end {
                self.step()?;
                done += 1;
            }
            let dt = self.state.time - bt;
            if dt > 0.0 {
                block_currents.push(hops_per_second_to_na((self.state.net_output_hops - bh) as f64 / dt));
            }
        }
        let elapsed = self.state.time - t0;
        if !(elapsed > 0.0) || block_currents.len() != subintervals {
            return Err(KineticsError::ZeroElapsed);
        }
        let mean_na = hops_per_second_to_na((self.state.net_output_hops - h0) as f64 / elapsed);
        let stderr_na = if subintervals > 1 {
            let m = block_currents.iter().sum::<f64>() / subintervals as f64;
            let var = block_currents.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (subintervals - 1) as f64;
            (var / subintervals as f64).sqrt()
        } else {
            0.0
        };
        Ok(CurrentEstimate { mean_na, stderr_na, subintervals, steps })
    }
}

/// Neutral start, equilibration and measurement at fixed voltages.
pub fn run_replica(
    system: &HoppingSystem,
    voltages: &[f64],
    config: &KmcConfig,
    rng: ChaCha8Rng,
) -> Result<CurrentEstimate, KineticsError> {
    let mut r = Replica::neutral(system, voltages, rng)?.with_budget(config.wall_clock_budget);
    r.equilibrate(config.equilibration_steps)?;
    r.measure_current(config.measurement_steps, config.subintervals)
}
