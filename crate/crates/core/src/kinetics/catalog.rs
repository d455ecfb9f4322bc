use super::rates::uphill_factor;
use super::system::{HoppingSystem, SystemState};

/// A single electron move. Electrodes are referred to by slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    Hop { from: u32, to: u32 },
    Inject { electrode: u32, site: u32 },
    Eject { site: u32, electrode: u32 },
}

/// Every enabled event with its rate and the running sum used for
/// selection.
///
/// Event order is fixed by the occupation: for each occupied site in
/// ascending order its hops to every empty site, then its ejections to
/// every electrode; after that, for each electrode its injections into
/// every empty site.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateCatalog {
    events: Vec<Event>,
    rates: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RateCatalog {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Total rate `R`, 1/s.
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Index of the event selected by `target` in `[0, R)`: the first event
    /// whose running sum exceeds `target`. Zero-rate events are never picked.
    pub fn select(&self, target: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= target);
        // target rounding up to R lands past the end; take the last
        // event with a positive rate
        if i < self.cumulative.len() {
            return i;
        }
        let total = self.total();
        self.cumulative.partition_point(|&c| c < total)
    }

    /// Recomputes all events and rates from the state's cached energies,
    /// reusing the allocations.
    pub fn refresh(&mut self, system: &HoppingSystem, state: &SystemState) {
        self.fill(system, state, &state.energies);
    }

    pub(super) fn fill(&mut self, system: &HoppingSystem, state: &SystemState, energies: &[f64]) {
        self.events.clear();
        self.rates.clear();
        self.cumulative.clear();
        let n = system.n;
        let inv_kt = system.inv_kt;
        let occ = &state.occupied;
        let u = &state.voltages;

        for s in 0..n {
            if !occ[s] {
                continue;
            }
            let es = energies[s];
            let row_c = &system.pair_coulomb[s * n..(s + 1) * n];
            let row_p = &system.pair_prefactor[s * n..(s + 1) * n];
            for t in 0..n {
                if occ[t] {
                    continue;
                }
                let de = energies[t] - es - row_c[t];
                self.events.push(Event::Hop { from: s as u32, to: t as u32 });
                self.rates.push(row_p[t] * uphill_factor(de, inv_kt));
            }
            for (k, &uk) in u.iter().enumerate() {
                let de = -uk - es;
                self.events.push(Event::Eject { site: s as u32, electrode: k as u32 });
                self.rates.push(system.electrode_prefactor[k * n + s] * uphill_factor(de, inv_kt));
            }
        }
        for (k, &uk) in u.iter().enumerate() {
            let row_p = &system.electrode_prefactor[k * n..(k + 1) * n];
            for t in 0..n {
                if occ[t] {
                    continue;
                }
                let de = energies[t] + uk;
                self.events.push(Event::Inject { electrode: k as u32, site: t as u32 });
                self.rates.push(row_p[t] * uphill_factor(de, inv_kt));
            }
        }

        let mut acc = 0.0;
        self.cumulative.extend(self.rates.iter().map(|r| {
            acc += r;
            acc
        }));
    }
}

/// Enumerates every legal event from scratch: site energies are recomputed
/// from the occupation instead of taken from the state's cache.
pub fn build_rate_catalog(system: &HoppingSystem, state: &SystemState) -> RateCatalog {
    let energies = state.fresh_energies(system);
    let mut c = RateCatalog::default();
    c.fill(system, state, &energies);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::MaterialParams;
    use crate::kinetics::miller_abrahams_rate;
    use crate::kinetics::system::{hop_energy_delta, Electrode, Endpoint, SystemSpec};

    fn ring(n: usize, electrodes: usize) -> HoppingSystem {
        let sites = (0..n)
            .map(|i| {
                let t = i as f64 * 2.399963; // golden angle spiral
                let r = 3.0 * (i as f64 + 0.5).sqrt();
                [r * t.cos(), r * t.sin()]
            })
            .collect::<Vec<_>>();
        let rad = 3.0 * (n as f64).sqrt() + 5.0;
        let els = (0..electrodes)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / electrodes as f64;
                Electrode { index: k as u8 + 1, anchor: [rad * a.cos(), rad * a.sin()] }
            })
            .collect::<Vec<_>>();
        let basis = (0..electrodes).map(|k| vec![1.0 / electrodes as f64 + 0.01 * k as f64; n]).collect();
        HoppingSystem::new(SystemSpec {
            disorder_ev: (0..n).map(|i| 0.02 * ((i * 7 % 5) as f64 - 2.0)).collect(),
            sites,
            counterdopants: vec![[0.5, 0.5], [-4.0, 2.0], [3.0, -6.0]],
            electrodes: els,
            output: electrodes - 1,
            basis,
            material: MaterialParams::default(),
        })
        .unwrap()
    }

    fn count(c: &RateCatalog) -> (usize, usize, usize) {
        let mut out = (0, 0, 0);
        for e in c.events() {
            match e {
                Event::Hop { .. } => out.0 += 1,
                Event::Inject { .. } => out.1 += 1,
                Event::Eject { .. } => out.2 += 1,
            }
        }
        out
    }

    #[test]
    fn empty_lattice_has_only_injections() {
        let sys = ring(10, 3);
        let st = SystemState::new(&sys, &[0.1, 0.0, -0.2], vec![false; 10]).unwrap();
        assert_eq!(count(&build_rate_catalog(&sys, &st)), (0, 30, 0));
    }

    #[test]
    fn full_lattice_has_only_ejections() {
        let sys = ring(10, 3);
        let st = SystemState::new(&sys, &[0.1, 0.0, -0.2], vec![true; 10]).unwrap();
        assert_eq!(count(&build_rate_catalog(&sys, &st)), (0, 0, 30));
    }

    #[test]
    fn event_count_matches_combinatorics() {
        let sys = ring(200, 8);
        let mut occ = vec![false; 200];
        for i in [3, 50, 177] {
            occ[i] = true;
        }
        let st = SystemState::new(&sys, &[0.0; 8], occ).unwrap();
        let c = build_rate_catalog(&sys, &st);
        assert_eq!(count(&c), (3 * 197, 8 * 197, 8 * 3));
        assert_eq!(c.len(), 3 * 197 + 8 * 197 + 8 * 3);
    }

    #[test]
    fn rates_follow_miller_abrahams_and_sum_to_total() {
        let sys = ring(12, 4);
        let mut occ = vec![false; 12];
        occ[1] = true;
        occ[6] = true;
        let st = SystemState::new(&sys, &[0.3, -0.2, 0.1, 0.0], occ).unwrap();
        let c = build_rate_catalog(&sys, &st);
        let m = sys.material();
        let spec = sys.spec();
        let mut sum = 0.0;
        for (e, &rate) in c.events().iter().zip(c.rates()) {
            let (src, dst, r) = match *e {
                Event::Hop { from, to } => (
                    Endpoint::Site(from as usize),
                    Endpoint::Site(to as usize),
                    crate::device::dist(spec.sites[from as usize], spec.sites[to as usize]),
                ),
                Event::Inject { electrode, site } => (
                    Endpoint::Electrode(electrode as usize),
                    Endpoint::Site(site as usize),
                    crate::device::dist(spec.electrodes[electrode as usize].anchor, spec.sites[site as usize]),
                ),
                Event::Eject { site, electrode } => (
                    Endpoint::Site(site as usize),
                    Endpoint::Electrode(electrode as usize),
                    crate::device::dist(spec.electrodes[electrode as usize].anchor, spec.sites[site as usize]),
                ),
            };
            let de = hop_energy_delta(&sys, &st, src, dst).unwrap();
            let expect = miller_abrahams_rate(r, de, m.hopping_distance_nm, m.temperature_k, m.attempt_frequency);
            assert!(rate >= 0.0);
            assert!((rate - expect).abs() <= 1e-12 * expect, "{e:?}: {rate} vs {expect}");
            sum += rate;
        }
        assert!((c.total() - sum).abs() <= 1e-12 * sum);
    }

    #[test]
    fn selection_skips_zero_rates() {
        let c = RateCatalog {
            events: vec![Event::Hop { from: 0, to: 1 }; 4],
            rates: vec![1.0, 0.0, 2.0, 0.0],
            cumulative: vec![1.0, 1.0, 3.0, 3.0],
        };
        assert_eq!(c.select(0.0), 0);
        assert_eq!(c.select(0.999), 0);
        assert_eq!(c.select(1.0), 2);
        assert_eq!(c.select(2.9), 2);
        assert_eq!(c.select(3.0), 2);
    }
}
