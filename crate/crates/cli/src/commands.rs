use std::path::{Path, PathBuf};

use serde::Serialize;

use dnpu_core::analysis::analyze as analyze_ensemble;
use dnpu_core::field::solve_unit_potentials_with;
use dnpu_core::kinetics::{steady_state_oracle, tiny, Replica};
use dnpu_core::sampling::{
    abundance_curve, estimate_gate_count, local_hypervolume, Gate, HypervolumeEstimate, LocalCube, LocalHypervolume,
    SampleDataset, Sampler, VoltageRanges,
};
use dnpu_core::seeding::{stream, Purpose};
use dnpu_core::{DeviceGeometry, Execution, GridSpec, PotentialBasis};

use crate::error::CliError;
use crate::output::{csv_comment, hash_of, write_atomic, write_stamped_json};
use crate::{AbundanceArgs, AnalyzeArgs, HypervolumeArgs, OracleArgs, RunArgs, SampleArgs};

const CHECKPOINT_EVERY: u64 = 100;

fn out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))
}

fn sidecar(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn execution(threads: Option<usize>) -> Execution {
    if threads == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads.filter(|&n| n > 1) {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        return Ok(pool.install(f));
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(f())
}

/// Unit potentials from `<out>/basis.json` if it belongs to this device and
/// grid, otherwise solved and cached there.
fn load_or_solve_basis(
    g: &DeviceGeometry,
    grid: GridSpec,
    out: &Path,
    exec: Execution,
) -> Result<PotentialBasis, CliError> {
    let path = out.join("basis.json");
    if let Ok(b) = PotentialBasis::read_file(&path) {
        if b.matches(g, &grid) {
            return Ok(b);
        }
    }
    eprintln!("solving unit potentials on a {}-cell grid", grid.cells);
    let b = solve_unit_potentials_with(g, grid, exec)?;
    b.write_file(&path)?;
    Ok(b)
}

pub fn generate(args: &RunArgs) -> Result<(), CliError> {
    if args.device.is_some() {
        return Err(CliError::Config("generate builds a new device; --device is not accepted".into()));
    }
    let cfg = args.resolve()?;
    let g = cfg.device()?;
    out_dir(&args.out)?;
    let path = args.out.join("device.json");
    write_stamped_json(&path, &cfg.run_hash(&g), &g)?;
    eprintln!("wrote {} ({} dopants, {} counterdopants)", path.display(), g.dopants.len(), g.counterdopants.len());
    Ok(())
}

/// Loads a partial dataset for `--resume`, checking it belongs to this run.
fn resume_dataset(csv: &Path, hash: &str, device_hash: &str) -> Result<SampleDataset, CliError> {
    let (ds, comment) = SampleDataset::read_files(csv, sidecar(csv))?;
    if comment.as_deref() != Some(csv_comment(hash).as_str()) || ds.meta.config_hash.as_deref() != Some(hash) {
        return Err(CliError::Validation(format!("{} was written by a different configuration", csv.display())));
    }
    if ds.meta.device_hash != device_hash {
        return Err(CliError::Validation(format!("{} was sampled on a different device", csv.display())));
    }
    let done = (ds.records.len() + ds.meta.flagged.len()) as u64;
    if ds.last_index().map_or(0, |i| i + 1) != done {
        return Err(CliError::Validation(format!("{} has gaps in its sample indices", csv.display())));
    }
    Ok(ds)
}

pub fn sample(args: &SampleArgs) -> Result<(), CliError> {
    let run = &args.run;
    let cfg = run.resolve()?;
    let exec = execution(run.threads);
    let g = cfg.device()?;
    let hash = cfg.run_hash(&g);
    out_dir(&run.out)?;
    write_stamped_json(&run.out.join("device.json"), &hash, &g)?;
    let basis = with_threads(run.threads, || load_or_solve_basis(&g, cfg.grid, &run.out, exec))??;
    let sampler = Sampler::new(&g, &basis, cfg.ranges(), cfg.kmc, cfg.seed)?;

    let csv = run.out.join("samples.csv");
    let mut ds = if args.resume && csv.exists() {
        resume_dataset(&csv, &hash, &g.content_hash())?
    } else {
        let mut ds = SampleDataset::new(sampler.meta(cfg.samples));
        ds.meta.config_hash = Some(hash.clone());
        ds
    };
    let mut next = (ds.records.len() + ds.meta.flagged.len()) as u64;
    if next > cfg.samples {
        return Err(CliError::Config(format!(
            "dataset already holds {next} samples, more than the {} requested",
            cfg.samples
        )));
    }
    ds.meta.requested = cfg.samples;
    let comment = csv_comment(&hash);
    let save = |ds: &SampleDataset| -> Result<(), CliError> {
        let mut buf = Vec::new();
        ds.write_csv(&mut buf, Some(&comment))?;
        write_atomic(&sidecar(&csv), (serde_json::to_string_pretty(&ds.meta)? + "\n").as_bytes())?;
        write_atomic(&csv, &buf)
    };
    save(&ds)?;

    while next < cfg.samples {
        let end = ((next / CHECKPOINT_EVERY + 1) * CHECKPOINT_EVERY).min(cfg.samples);
        if args.abort_after.is_some_and(|a| end > a) {
            return Err(CliError::Interrupted(next));
        }
        let outcomes = with_threads(run.threads, || sampler.run(next..end, exec))??;
        ds.extend(outcomes);
        save(&ds)?;
        next = end;
        eprintln!("{next}/{} samples ({} flagged)", cfg.samples, ds.meta.flagged.len());
    }
    Ok(())
}

fn read_dataset(csv: &Path) -> Result<(SampleDataset, String), CliError> {
    let (ds, _) = SampleDataset::read_files(csv, sidecar(csv))?;
    let source = ds.meta.config_hash.clone().unwrap_or_default();
    Ok((ds, source))
}

pub fn abundance(args: &AbundanceArgs) -> Result<(), CliError> {
    if args.points < 2 || !(args.f_max > 0.0) {
        return Err(CliError::Config("need at least 2 thresholds and a positive --f-max".into()));
    }
    let (ds, source) = read_dataset(&args.dataset)?;
    let vectors = ds.current_vectors();
    let gates = if args.gates.is_empty() { Gate::ALL.to_vec() } else { args.gates.clone() };
    let thresholds: Vec<f64> = (0..args.points).map(|i| args.f_max * i as f64 / (args.points - 1) as f64).collect();
    out_dir(&args.out)?;
    for gate in gates {
        let hash = hash_of(&(&source, gate, args.k, &thresholds));
        let curve = abundance_curve(&vectors, gate, args.k, &thresholds)?;
        let mut buf = format!("# {}\n", csv_comment(&hash)).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["f_min", "abundance"])?;
            for (t, p) in curve {
                w.write_record([t.to_string(), p.to_string()])?;
            }
            w.flush()?;
        }
        let path = args.out.join(format!("abundance_{gate}_k{}.csv", args.k));
        write_atomic(&path, &buf)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let (ds, source) = read_dataset(&args.dataset)?;
    let report = analyze_ensemble(&ds.current_vectors())?;
    let hash = hash_of(&(&source, "analyze"));
    out_dir(&args.out)?;
    write_stamped_json(&args.out.join("analysis.json"), &hash, &report)?;
    let mut buf = format!("# {}\n", csv_comment(&hash)).into_bytes();
    report.write_eigenvector_csv(&mut buf)?;
    write_atomic(&args.out.join("eigenvectors.csv"), &buf)?;
    let show = |q: Option<f64>| q.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    println!(
        "{} records: Q_l {} Q_r {} Q_lr {}",
        report.samples,
        show(report.q_l),
        show(report.q_r),
        show(report.q_lr)
    );
    Ok(())
}

#[derive(Serialize)]
struct HypervolumeReport {
    cube: LocalCube,
    local_ranges: VoltageRanges,
    local: LocalHypervolume,
    /// Absent when no local sample realized the gate.
    estimate: Option<HypervolumeEstimate>,
}

pub fn hypervolume(args: &HypervolumeArgs) -> Result<(), CliError> {
    let run = &args.run;
    let cfg = run.resolve()?;
    let exec = execution(run.threads);
    let g = cfg.device()?;
    let global = cfg.ranges();
    let p_abundance = match (&args.p_abundance, &args.dataset) {
        (Some(p), _) => *p,
        (None, Some(csv)) => {
            let (ds, _) = read_dataset(csv)?;
            if ds.meta.ranges != global {
                return Err(CliError::Validation("the dataset was sampled over different ranges".into()));
            }
            abundance_curve(&ds.current_vectors(), args.gate, args.k, &[args.f_min])?[0].1
        }
        (None, None) => return Err(CliError::Config("give --p-abundance or --dataset".into())),
    };
    let cube = LocalCube { center: args.center.clone(), edges: args.edges.clone() };
    let local_ranges = cube.ranges(&global)?;
    out_dir(&run.out)?;
    let basis = with_threads(run.threads, || load_or_solve_basis(&g, cfg.grid, &run.out, exec))??;
    let local = with_threads(run.threads, || {
        local_hypervolume(
            &g,
            &basis,
            &global,
            &cube,
            args.gate,
            args.f_min,
            args.k,
            cfg.samples,
            cfg.seed,
            &cfg.kmc,
            exec,
        )
    })??;
    let estimate = estimate_gate_count(p_abundance, global.volume(), local.p0, local.delta_v).ok();
    let hash = hash_of(&(cfg.run_hash(&g), &cube, args.gate, args.f_min, args.k, p_abundance, cfg.samples));
    let report = HypervolumeReport { cube, local_ranges, local, estimate };
    write_stamped_json(&run.out.join("hypervolume.json"), &hash, &report)?;
    let Some(e) = estimate else {
        return Err(CliError::Validation(format!(
            "none of {} local samples realizes {}",
            report.local.valid, args.gate
        )));
    };
    println!("p0 {:.4}  dV {:.4}  N_gates {:.2} -> {}", e.p0, e.delta_v, e.n_gates_raw, e.n_gates);
    if !e.p0_small {
        eprintln!("warning: p0 is not small; the local cube may not reach past the gate region");
    }
    if !e.cubes_separated {
        eprintln!("warning: V_tot / dV is not well above N_gates; local cubes of distinct gates may overlap");
    }
    Ok(())
}

const ORACLE_SEEDS: u64 = 5;
const ORACLE_SIGMAS: f64 = 3.0;

#[derive(Debug, Serialize)]
struct OracleCase {
    sites: usize,
    source_v: f64,
    exact_na: f64,
    kmc_na: Vec<f64>,
    stderr_na: Vec<f64>,
    max_abs_z: f64,
    pass: bool,
}

#[derive(Serialize)]
struct OracleReport<'a> {
    cases: &'a [OracleCase],
}

pub fn oracle_check(args: &OracleArgs) -> Result<(), CliError> {
    let mut cases = Vec::new();
    for sites in 1..=3 {
        let sys = tiny::chain(sites);
        for source_v in [-0.1, 0.0] {
            let v = tiny::bias(&sys, source_v);
            let exact_na = steady_state_oracle(&sys, &v)?.current_na;
            let (mut kmc_na, mut stderr_na) = (Vec::new(), Vec::new());
            let mut max_abs_z = 0.0f64;
            for s in 0..ORACLE_SEEDS {
                let rng = stream(args.seed, Purpose::Standalone, sites as u64 * 16 + s);
                let mut r = Replica::neutral(&sys, &v, rng)?;
                r.equilibrate(10_000)?;
                let est = r.measure_current(args.steps, 100)?;
                max_abs_z = max_abs_z.max((est.mean_na - exact_na).abs() / est.stderr_na);
                kmc_na.push(est.mean_na);
                stderr_na.push(est.stderr_na);
            }
            let pass = max_abs_z <= ORACLE_SIGMAS;
            println!(
                "{sites} site(s), source {source_v:+.2} V: exact {exact_na:.5} nA, worst |z| {max_abs_z:.2}: {}",
                if pass { "PASS" } else { "FAIL" }
            );
            cases.push(OracleCase { sites, source_v, exact_na, kmc_na, stderr_na, max_abs_z, pass });
        }
    }
    if let Some(dir) = &args.out {
        out_dir(dir)?;
        let hash = hash_of(&(args.seed, args.steps));
        write_stamped_json(&dir.join("oracle_check.json"), &hash, &OracleReport { cases: &cases })?;
    }
    let failed = cases.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::Validation(format!(
            "{failed} oracle comparisons outside {ORACLE_SIGMAS} standard errors"
        )));
    }
    Ok(())
}
