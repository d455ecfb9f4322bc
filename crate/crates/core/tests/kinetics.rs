use dnpu_core::kinetics::{
    build_rate_catalog, dump_trajectory, kmc_step, steady_state_oracle, tiny, Electrode, Event, HoppingSystem, Replica,
    SystemSpec, SystemState,
};
use dnpu_core::seeding::{stream, Purpose};
use dnpu_core::MaterialParams;
use rand::Rng;

fn rng(i: u64) -> rand_chacha::ChaCha8Rng {
    stream(2024, Purpose::Standalone, i)
}

#[test]
fn selection_follows_rate_proportions() {
    let sys = tiny::chain(3);
    let state = SystemState::new(&sys, &tiny::bias(&sys, -0.2), vec![true, false, false]).unwrap();
    let cat = build_rate_catalog(&sys, &state);
    let mut counts = vec![0u64; cat.len()];
    let mut r = rng(0);
    let draws = 400_000;
    for _ in 0..draws {
        let u: f64 = r.random();
        counts[cat.select(u * cat.total())] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        let p = cat.rates()[k] / cat.total();
        let sd = (draws as f64 * p * (1.0 - p)).sqrt().max(1.0);
        assert!((c as f64 - draws as f64 * p).abs() < 5.0 * sd, "event {k}: {c} vs {}", draws as f64 * p);
    }
}

#[test]
fn two_to_one_rates_give_two_to_one_frequencies() {
    // one empty site with electrodes at distances differing by a ln2 / 2:
    // the tunnelling factor makes the near electrode inject twice as fast
    let material = MaterialParams::default();
    let a = material.hopping_distance_nm;
    let near = 3.0;
    let sys = HoppingSystem::new(SystemSpec {
        sites: vec![[0.0, 0.0]],
        counterdopants: vec![[0.0, 40.0]],
        disorder_ev: vec![0.0],
        electrodes: vec![
            Electrode { index: 1, anchor: [-near, 0.0] },
            Electrode { index: 2, anchor: [near + a * 2f64.ln() / 2.0, 0.0] },
        ],
        output: 1,
        basis: vec![vec![0.0], vec![0.0]],
        material,
    })
    .unwrap();
    let state = SystemState::new(&sys, &[0.0, 0.0], vec![false]).unwrap();
    let cat = build_rate_catalog(&sys, &state);
    assert_eq!(cat.len(), 2);
    assert!((cat.rates()[0] / cat.rates()[1] - 2.0).abs() < 1e-12);

    let mut r = rng(1);
    let draws = 100_000u64;
    let mut first = 0u64;
    for _ in 0..draws {
        let u: f64 = r.random();
        if matches!(cat.events()[cat.select(u * cat.total())], Event::Inject { electrode: 0, .. }) {
            first += 1;
        }
    }
    let frac = first as f64 / draws as f64;
    assert!((frac - 2.0 / 3.0).abs() < 3.0 * (2.0 / 9.0 / draws as f64).sqrt(), "fraction {frac}");
}

#[test]
fn dwell_times_have_mean_inverse_total_rate() {
    // a single site alternates between empty and occupied, so every other
    // step starts from the empty state
    let sys = tiny::chain(1);
    let v = tiny::bias(&sys, -0.05);
    let mut state = SystemState::new(&sys, &v, vec![false]).unwrap();
    let empty_total = build_rate_catalog(&sys, &state).total();
    let mut cat = build_rate_catalog(&sys, &state);
    let mut r = rng(2);
    let (mut sum, mut n) = (0.0, 0u64);
    for i in 0..200_000 {
        let s = kmc_step(&sys, &mut state, &mut cat, &mut r).unwrap();
        if i % 2 == 0 {
            sum += s.dwell;
            n += 1;
        }
    }
    let mean = sum / n as f64;
    let want = 1.0 / empty_total;
    assert!((mean - want).abs() < 5.0 * want / (n as f64).sqrt(), "mean dwell {mean} vs {want}");
}

#[test]
fn zero_bias_gives_zero_current() {
    for sites in [1, 3] {
        let sys = tiny::chain(sites);
        let v = tiny::bias(&sys, 0.0);
        assert!(steady_state_oracle(&sys, &v).unwrap().current_na.abs() < 1e-9);
        let mut r = Replica::neutral(&sys, &v, rng(10 + sites as u64)).unwrap();
        r.equilibrate(5_000).unwrap();
        let est = r.measure_current(300_000, 50).unwrap();
        assert!(est.mean_na.abs() < 4.0 * est.stderr_na, "{sites} sites: {est:?}");
    }
}

#[test]
fn stderr_shrinks_with_the_square_root_of_run_length() {
    let sys = tiny::chain(2);
    let v = tiny::bias(&sys, -0.1);
    let spread = |steps: u64| {
        let mut acc = 0.0;
        for s in 0..4 {
            let mut r = Replica::neutral(&sys, &v, rng(30 + s)).unwrap();
            r.equilibrate(5_000).unwrap();
            acc += r.measure_current(steps, 50).unwrap().stderr_na;
        }
        acc / 4.0
    };
    let ratio = spread(100_000) / spread(400_000);
    assert!((ratio - 2.0).abs() < 0.5, "stderr ratio {ratio}");
}

#[test]
fn mirror_bias_reverses_the_current() {
    let sys = tiny::symmetric_chain(2);
    let forward = tiny::bias(&sys, -0.1);
    // swapping which electrode carries the bias mirrors the chain, so the
    // output now injects what it used to collect
    let mut reverse = vec![0.0; sys.electrodes()];
    reverse[sys.output()] = -0.1;
    let run = |v: &[f64], seed| {
        let mut r = Replica::neutral(&sys, v, rng(seed)).unwrap();
        r.equilibrate(5_000).unwrap();
        r.measure_current(400_000, 50).unwrap()
    };
    let a = run(&forward, 40);
    let b = run(&reverse, 41);
    let exact_a = steady_state_oracle(&sys, &forward).unwrap().current_na;
    let exact_b = steady_state_oracle(&sys, &reverse).unwrap().current_na;
    assert!((exact_a + exact_b).abs() < 1e-9 * exact_a.abs());
    let sd = (a.stderr_na.powi(2) + b.stderr_na.powi(2)).sqrt();
    assert!((a.mean_na + b.mean_na).abs() < 4.0 * sd, "{a:?} vs {b:?}");
}

#[test]
fn trajectory_is_reproducible_from_the_seed() {
    let sys = tiny::chain(3);
    let v = tiny::bias(&sys, -0.1);
    let dump = |seed| {
        let mut r = Replica::neutral(&sys, &v, rng(seed)).unwrap();
        let mut buf = Vec::new();
        dump_trajectory(&mut r, 2_000, &mut buf).unwrap();
        buf
    };
    assert_eq!(dump(50), dump(50));
    assert_ne!(dump(50), dump(51));
}

#[test]
fn carrier_bookkeeping_over_a_long_run() {
    let sys = tiny::chain(4);
    let v = tiny::bias(&sys, -0.15);
    let mut r = Replica::neutral(&sys, &v, rng(60)).unwrap();
    let mut carriers = r.state().carrier_count() as i64;
    let mut time = 0.0;
    for _ in 0..1_000_000 {
        let s = r.step().unwrap();
        match s.event {
            Event::Inject { .. } => carriers += 1,
            Event::Eject { .. } => carriers -= 1,
            Event::Hop { .. } => {}
        }
        assert!(s.dwell > 0.0 && s.dwell.is_finite());
        time += s.dwell;
    }
    let st = r.state();
    assert_eq!(carriers, st.carrier_count() as i64);
    assert_eq!(st.carrier_count(), st.occupation().iter().filter(|&&o| o).count());
    assert_eq!(st.steps(), 1_000_000);
    assert!((st.simulated_time() - time).abs() <= 1e-9 * time);
    let fresh = st.fresh_energies(&sys);
    for (a, b) in st.energies().iter().zip(&fresh) {
        assert!((a - b).abs() < 1e-10);
    }
}
