//! `zonotube` command-line driver.
//!
//! Exit codes: 0 success, 1 error or failed check, 2 the controller ran in
//! degraded (fallback) mode. Verbosity is read from `ZONOTUBE_LOG`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use zonotube::bench::{benchmark_sequence, benchmark_tube, records_to_csv};
use zonotube::closed_loop::{disturbance_set, spectral_radius, vertex_closed_loops, ClosedLoopFamily};
use zonotube::invariant::{check_rpi, compute_terminal_set, RpiSettings};
use zonotube::mpc::{terminal_set_fits, MpcConfig};
use zonotube::schedule::{GainSchedule, LocalController, TerminalSetRecord, N_VERTICES};
use zonotube::sim::{compute_metrics, reference_envelope, run_scenario, summarize_run_csv, ReferenceSpec, Scenario};
use zonotube::vehicle::{VehicleConfig, NX};
use zonotube::Error;

#[derive(Parser)]
#[command(name = "zonotube", version, about = "Tube-based LPV-MPC with zonotope reachability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario; writes run.csv and metrics.json.
    Simulate(SimulateArgs),
    /// Time zonotope against polytope tube propagation.
    BenchmarkTube(BenchArgs),
    /// Compute the terminal set and store it in the gains file.
    ComputeSets(ComputeSetsArgs),
    /// Check a gains file.
    ValidateGains(ValidateArgs),
    /// Summarize a run CSV.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Gains file; the built-in reference design when omitted.
    #[arg(long)]
    gains: Option<PathBuf>,
    /// Scenario TOML; the default disturbed scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    controller: Option<LocalController>,
    /// Prediction horizon (1..=50).
    #[arg(long)]
    hp: Option<usize>,
    /// MPC period in seconds used by the average rate coupling.
    #[arg(long)]
    ts: Option<f64>,
    /// Seed of the generated reference.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    duration: Option<f64>,
    /// Solve the MPC inline on the simulation thread (the only mode).
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    gains: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    hp: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Polytope repetitions (each takes about a second in 5-D); defaults to
    /// `--reps`.
    #[arg(long)]
    poly_reps: Option<usize>,
    #[arg(long, default_value = "hinf")]
    controller: LocalController,
    /// Directory for tube_timing.csv and benchmark.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComputeSetsArgs {
    #[arg(long)]
    gains: PathBuf,
    #[arg(long, default_value = "hinf")]
    controller: LocalController,
    /// Disturbance half-widths, comma separated (default: the design W).
    #[arg(long, value_delimiter = ',')]
    w: Option<Vec<f64>>,
    /// Write the updated gains here instead of overwriting `--gains`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    gains: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Run CSV written by `simulate`.
    #[arg(long)]
    run: PathBuf,
    /// Write the summary JSON here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_gains(path: Option<&Path>) -> Result<GainSchedule> {
    match path {
        Some(p) => GainSchedule::load(p).with_context(|| format!("loading gains file {}", p.display())),
        None => Ok(GainSchedule::reference()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let gains = load_gains(a.gains.as_deref())?;
    let mut sc = match &a.scenario {
        Some(p) => Scenario::load(p).with_context(|| format!("loading scenario {}", p.display()))?,
        None => Scenario::default(),
    };
    if let Some(c) = a.controller {
        sc.controller = c;
    }
    if let Some(hp) = a.hp {
        sc.mpc.horizon = hp;
    }
    if let Some(ts) = a.ts {
        sc.mpc.model.ts = ts;
    }
    if let Some(d) = a.duration {
        sc.duration = d;
    }
    if let Some(seed) = a.seed {
        match &mut sc.reference {
            ReferenceSpec::Generated { seed: s } => *s = seed,
            _ => warn!("--seed ignored: the scenario reference is not generated"),
        }
    }
    sc.validate()?;
    let _ = a.deterministic;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let log = match run_scenario(&sc, &gains) {
        Ok(log) => log,
        Err(e @ Error::DegradedMode(_)) => {
            eprintln!("degraded: {e}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    let m = compute_metrics(&log)?;
    write(&a.out.join("run.csv"), &log.to_csv())?;
    write(&a.out.join("metrics.json"), &serde_json::to_string_pretty(&m)?)?;
    println!(
        "controller {:?}: rmse_vx {:.16e}  rmse_omega {:.16e}  mean solve {:.16e} ms  degraded ticks {}",
        m.controller, m.rmse_vx, m.rmse_omega, m.mean_solve_time_ms, m.degraded_ticks
    );
    println!("wrote {} and {}", a.out.join("run.csv").display(), a.out.join("metrics.json").display());
    Ok(if m.degraded_ticks > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn benchmark(a: BenchArgs) -> Result<ExitCode> {
    let gains = load_gains(a.gains.as_deref())?;
    if !(1..=50).contains(&a.hp) {
        bail!("--hp must be in 1..=50, got {}", a.hp);
    }
    let cfg = MpcConfig::default();
    let vehicle = VehicleConfig::default();
    let ms = benchmark_sequence(&gains, a.controller, a.hp, &cfg.model, &vehicle.vehicle)?;
    let w = disturbance_set(&cfg.w_bounds)?;
    let (b, records) = benchmark_tube(&ms, &w, &cfg.tube, a.reps, a.poly_reps.unwrap_or(a.reps))?;
    println!("representation  reps  mean_ms  median_ms  p99_ms");
    for (name, s) in [("zonotope", &b.zonotope), ("polytope", &b.polytope)] {
        println!("{name}  {}  {:.16e}  {:.16e}  {:.16e}", s.reps, s.mean_ms, s.median_ms, s.p99_ms);
    }
    println!("speedup {:.16e}", b.speedup);
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("tube_timing.csv"), &records_to_csv(&records))?;
        write(&dir.join("benchmark.json"), &serde_json::to_string_pretty(&b)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn compute_sets(a: ComputeSetsArgs) -> Result<ExitCode> {
    let mut gains = load_gains(Some(&a.gains))?;
    let cfg = MpcConfig::default();
    let vehicle = VehicleConfig::default();
    let w_bounds = a.w.clone().unwrap_or_else(|| cfg.w_bounds.to_vec());
    if w_bounds.len() != NX {
        bail!("--w needs {NX} values, got {}", w_bounds.len());
    }
    let w = disturbance_set(&w_bounds)?;

    let ms = vertex_closed_loops(&gains, a.controller, &cfg.model, &vehicle.vehicle)?;
    let radii: Vec<f64> = ms.iter().map(spectral_radius).collect();
    if radii.iter().any(|r| !(*r < 1.0)) {
        eprintln!("closed loop is not contractive; vertex spectral radii:");
        for (i, r) in radii.iter().enumerate() {
            eprintln!("  vertex {i}: {r:.16e}");
        }
        return Ok(ExitCode::FAILURE);
    }
    let family = ClosedLoopFamily::new(ms, w)?;
    let settings = RpiSettings::default();
    let rep = compute_terminal_set(&family, &settings)?;
    let chi_f = rep.rpi.set.compact();
    let rpi_ok = check_rpi(&family, &chi_f, rep.rpi.epsilon_achieved)?;
    let fits = terminal_set_fits(&chi_f, &cfg.state_box()?, &reference_envelope())?;
    println!("E0: p* = {}", rep.p_star);
    println!("E_k*: {} iterations", rep.ek_iterations);
    println!("chi_f: {} iterations, epsilon achieved {:.16e}", rep.rpi.iterations, rep.rpi.epsilon_achieved);
    println!("chi_f generators: {}", chi_f.num_generators());
    println!("chi_f hull radii: {:?}", chi_f.axis_radius().as_slice());
    println!("chi_f RPI check: {rpi_ok}");
    println!("chi_f within X: {fits}");
    if !(rpi_ok && fits) {
        eprintln!("terminal set rejected; gains file left unchanged");
        return Ok(ExitCode::FAILURE);
    }
    gains.terminal_set = Some(TerminalSetRecord::from_zonotope(&chi_f, rep.rpi.epsilon_achieved, rep.rpi.iterations));
    let dest = a.out.as_ref().unwrap_or(&a.gains);
    gains.save(dest).with_context(|| format!("writing {}", dest.display()))?;
    info!("terminal set written to {}", dest.display());
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.gains).with_context(|| format!("reading {}", a.gains.display()))?;
    let mut failures = Vec::new();
    let gains = match GainSchedule::parse_unvalidated(&text) {
        Ok(g) => {
            println!("schema: ok");
            g
        }
        Err(e) => {
            println!("schema: FAIL ({e})");
            eprintln!("failed checks:\n  schema: {e}");
            return Ok(ExitCode::FAILURE);
        }
    };
    match gains.validate() {
        Ok(()) => println!("P positive definite: ok"),
        Err(e) => {
            println!("P positive definite: FAIL ({e})");
            failures.push(format!("P: {e}"));
        }
    }

    let cfg = MpcConfig::default();
    let vehicle = VehicleConfig::default();
    let hinf = vertex_closed_loops(&gains, LocalController::Hinf, &cfg.model, &vehicle.vehicle)?;
    let lqr = match gains.k_lqr {
        Some(_) => Some(vertex_closed_loops(&gains, LocalController::Lqr, &cfg.model, &vehicle.vehicle)?),
        None => None,
    };
    println!("vertex  v_x  v_y  delta  rho_hinf  rho_lqr  status");
    for i in 0..N_VERTICES {
        let z = gains.bounds.vertex(i);
        let rh = spectral_radius(&hinf[i]);
        let rl = lqr.as_ref().map(|m| spectral_radius(&m[i]));
        let ok = rh < 1.0 && rl.map_or(true, |r| r < 1.0);
        let rl_txt = rl.map_or_else(|| "-".to_string(), |r| format!("{r:.16e}"));
        println!(
            "{i}  {:.16e}  {:.16e}  {:.16e}  {rh:.16e}  {rl_txt}  {}",
            z.v_x,
            z.v_y,
            z.delta,
            if ok { "ok" } else { "FAIL" }
        );
        if !(rh < 1.0) {
            failures.push(format!("vertex {i}: H-infinity closed loop spectral radius {rh:.16e} >= 1"));
        }
        if let Some(r) = rl.filter(|r| !(*r < 1.0)) {
            failures.push(format!("vertex {i}: LQR closed loop spectral radius {r:.16e} >= 1"));
        }
    }

    match gains.terminal_zonotope()? {
        None => println!("chi_f: absent"),
        Some(chi) => {
            let rec = gains.terminal_set.as_ref().expect("present");
            let ok = ClosedLoopFamily::new(hinf, disturbance_set(&cfg.w_bounds)?)
                .and_then(|fam| check_rpi(&fam, &chi, rec.epsilon_achieved))
                .unwrap_or(false);
            println!("chi_f RPI (slack {:.16e}): {}", rec.epsilon_achieved, if ok { "ok" } else { "FAIL" });
            if !ok {
                failures.push("chi_f fails the RPI check".into());
            }
        }
    }

    if failures.is_empty() {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed checks:");
        for f in &failures {
            eprintln!("  {f}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn metrics(a: MetricsArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.run).with_context(|| format!("reading {}", a.run.display()))?;
    let s = summarize_run_csv(&text)?;
    let json = serde_json::to_string_pretty(&s)?;
    println!("{json}");
    if let Some(p) = &a.out {
        write(p, &json)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ZONOTUBE_LOG", "warn")).init();
    // clap exits with 2 on usage errors, which is reserved for degraded mode
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::BenchmarkTube(a) => benchmark(a),
        Command::ComputeSets(a) => compute_sets(a),
        Command::ValidateGains(a) => validate(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
