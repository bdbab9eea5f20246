use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use katolab::experiment::{self, parse_config, ExperimentConfig, RunOptions, Status};
use katolab::Error;

const DEFAULTS: &str = "\
Configuration is TOML. Required: [domain] nx, [basis] n_modes, [sde] nu (scalar or ladder).
Defaults: noise.kind = transport_stratonovich, n_noise = 8, a0 = 0.5, decay = 2;
sde.alpha = 1, dt = 0.005, t_end = 0.5, m_threshold = 10, paths = 64, seed = 0;
initial.modes = 4, energy = 1; euler.dt = 0.0025; diagnostics.c_tilde = [1], panel = 8,
audit_samples = 200, corrector_grid = 512, corrector_ladder = [0.1, 0.05, 0.025, 0.0125],
pairing_fields = 50; output.dir = \"out\", formats = [\"json\", \"csv\"].
Cache directory: $KATOLAB_CACHE, else <out>/cache.
Exit codes: 0 success, 1 run or per-point failure, 2 configuration error.";

#[derive(Parser)]
#[command(name = "katolab", version, about = "Stochastic Navier-Stokes boundary-layer diagnostics", after_help = DEFAULTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the noise assumptions only.
    Audit(Common),
    /// Solve the Euler reference only.
    Euler(Common),
    /// Corrector estimates along the configured ladder.
    Corrector(Common),
    /// Full pipeline: audit, Euler, corrector, sweeps, report.
    Sweep(Common),
    /// Re-derive the report of a finished run and compare digests.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump per-path trajectory records.
    #[arg(long)]
    paths: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Base seed (overrides sde.seed).
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn load(c: &Common) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let mut cfg = parse_config(&c.config)?;
    if let Some(s) = c.seed {
        cfg.sde.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = o.display().to_string();
    }
    cfg.validate()?;
    if let Some(n) = c.threads {
        experiment::init_threads(n)?;
    }
    let out = PathBuf::from(&cfg.output.dir);
    Ok((cfg, out))
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<(), Failure> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new("."))).map_err(|e| Failure::Run(e.to_string()))?;
    Ok(experiment::write_json(path, v)?)
}

fn audit(c: &Common) -> Result<bool, Failure> {
    let (cfg, out) = load(c)?;
    let prep = experiment::Prepared::new(&cfg, &experiment::cache_dir(&out))?;
    let a = prep.audit()?;
    println!("noise {}: {} records, k_sum = {:.4} (fitted {:.4}), held-out violations {}", a.kind, a.records, a.k_sum, a.k_sum_fit, a.held_out_violations);
    if let Some(n) = &a.neutrality {
        for (i, d) in n.iter().enumerate() {
            let ok = *d <= experiment::thresholds::NEUTRALITY;
            println!("neutrality mode {i}: defect {d:.2e} {}", if ok { "PASS" } else { "FAIL" });
        }
    }
    if !a.failed.is_empty() {
        println!("failed: {}", a.failed.join(", "));
    }
    println!("audit {}", if a.passed { "PASS" } else { "FAIL" });
    write_json(&out.join("audit.json"), &a)?;
    Ok(a.passed)
}

fn euler(c: &Common) -> Result<bool, Failure> {
    let (cfg, out) = load(c)?;
    let prep = experiment::Prepared::new(&cfg, &experiment::cache_dir(&out))?;
    let sol = prep.euler()?;
    let s = experiment::EulerSummary::new(&sol, cfg.euler.dt);
    println!(
        "euler nx = {}, T = {}: energy drift {:.2e}, horizon suspect {}, top-quarter energy {:.2e}",
        s.nx, s.t_end, s.max_energy_drift, s.horizon_suspect, s.top_quarter_energy
    );
    if !s.band_limited {
        println!("warning: initial state is not band-limited");
    }
    write_json(&out.join("euler.json"), &s)?;
    Ok(true)
}

fn corrector(c: &Common) -> Result<bool, Failure> {
    use experiment::thresholds::*;
    let (cfg, out) = load(c)?;
    let prep = experiment::Prepared::new(&cfg, &experiment::cache_dir(&out))?;
    let sol = prep.euler()?;
    let l = prep.corrector(&sol)?;
    let line = |name: &str, fit: &katolab::stats::LinearFit, (t, tol): (f64, f64)| {
        let ok = (fit.slope - t).abs() <= tol;
        println!("{name:<12} slope {:+.3} ± {:.3} (target {t:+.1} ± {tol}) {}", fit.slope, fit.ci95, if ok { "PASS" } else { "FAIL" });
        ok
    };
    let a = line("sup ‖v‖", &l.slope_l2, SLOPE_L2);
    let b = line("sup ‖∂_t v‖", &l.slope_dt, SLOPE_DT);
    let w = line("sup ‖v‖_W12", &l.slope_w12, SLOPE_W12);
    let p = l.pairing_spread <= PAIRING_SPREAD;
    println!("pairing ratio max/min across ladder {:.3} {}", l.pairing_spread, if p { "PASS" } else { "FAIL" });
    write_json(&out.join("corrector.json"), &l)?;
    Ok(a && b && w && p)
}

fn sweep(c: &Common) -> Result<bool, Failure> {
    let (cfg, out) = load(c)?;
    let outcome = experiment::run_sweep(&cfg, &experiment::cache_dir(&out), &RunOptions { keep_paths: c.paths })?;
    experiment::write_outputs(&out, &outcome)?;
    for ch in &outcome.report.checks {
        let s = match ch.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        println!("{s:<4} {:<44} {}", ch.name, ch.detail);
    }
    for s in &outcome.report.sweeps {
        for f in &s.failed_points {
            for p in &f.failures {
                eprintln!("point nu = {}, alpha = {}: seed {} failed: {}", f.nu, f.alpha, p.seed, p.reason);
            }
        }
    }
    println!("report digest {}", outcome.manifest.report_digest);
    Ok(!outcome.report.any_point_failed())
}

fn verify(c: &Common) -> Result<bool, Failure> {
    let (_, out) = load(c)?;
    let v = experiment::verify(&out, &experiment::cache_dir(&out))?;
    println!("manifest  {}", v.expected);
    println!("on disk   {}", v.on_disk);
    println!("rederived {} ({})", v.rederived, if v.from_paths { "stored paths" } else { "re-simulated" });
    println!("verify {}", if v.matched() { "PASS" } else { "FAIL" });
    Ok(v.matched())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Audit(c) => audit(c),
        Command::Euler(c) => euler(c),
        Command::Corrector(c) => corrector(c),
        Command::Sweep(c) => sweep(c),
        Command::Verify(c) => verify(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("configuration error:\n{m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
