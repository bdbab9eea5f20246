//! Run orchestration: caches, the sweep pipeline, the report and its
//! manifest, and re-derivation for `verify`.

mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    parse_config, BasisBlock, DebugBlock, DiagnosticsBlock, DomainBlock, EulerBlock, ExperimentConfig, InitialBlock,
    NoiseBlock, OneOrMany, OutputBlock, SdeBlock, STANDARD_LADDER,
};

use crate::error::{Error, Result};
use crate::euler::{corrector_ladder, initial_from_velocity, solve_euler_cached, CorrectorLadder, EulerConfig, EulerSolution};
use crate::grid::Domain;
use crate::kato::{
    derive_point, run_alpha_sweep, run_nu_sweep, simulate_point, sweep_from_points, test_panel, PathFailure,
    PointResult, SweepAxis, SweepResult, SweepSetup,
};
use crate::noise::{audit_assumptions, neutrality_defects, AssumptionAudit, CorrectionForm, GalerkinNoise, NoiseModel};
use crate::sde::TrajectoryRecord;
use crate::spectral::{SpectralBasis, VelocityField};

pub const REPORT_SCHEMA: &str = "1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerances of the pass/fail table.
pub mod thresholds {
    pub const EULER_ENERGY: f64 = 1e-6;
    pub const NEUTRALITY: f64 = 1e-10;
    pub const SLOPE_L2: (f64, f64) = (0.5, 0.1);
    pub const SLOPE_DT: (f64, f64) = (0.5, 0.15);
    pub const SLOPE_W12: (f64, f64) = (-0.5, 0.1);
    pub const PAIRING_SPREAD: f64 = 3.0;
}

/// `KATOLAB_CACHE` if set, else `<out>/cache`.
pub fn cache_dir(out: &Path) -> PathBuf {
    std::env::var_os("KATOLAB_CACHE").map(PathBuf::from).unwrap_or_else(|| out.join("cache"))
}

/// `c_k ∝ 1/k` on the first `modes` eigenfields, scaled to `‖u₀‖² = energy`.
pub fn initial_velocity(basis: &SpectralBasis, cfg: &InitialBlock) -> Result<VelocityField> {
    let mut c = vec![0.0; basis.n_modes()];
    for (k, x) in c.iter_mut().take(cfg.modes).enumerate() {
        *x = 1.0 / (k + 1) as f64;
    }
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = cfg.energy.sqrt() / n;
    c.iter_mut().for_each(|x| *x *= s);
    basis.velocity(c)
}

/// Shared read-only state of one run.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub basis: SpectralBasis,
    pub model: NoiseModel,
    pub u0: VelocityField,
    pub cache: PathBuf,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig, cache: &Path) -> Result<Self> {
        let domain = Domain::new(config.domain.nx)?;
        let basis = SpectralBasis::load_or_build(cache, &domain, config.basis.n_modes)?;
        let model = NoiseModel::new(&basis, &config.noise.to_noise_config())?;
        let u0 = initial_velocity(&basis, &config.initial)?;
        Ok(Prepared { config: config.clone(), basis, model, u0, cache: cache.to_path_buf() })
    }

    pub fn euler(&self) -> Result<EulerSolution> {
        let cfg = EulerConfig { dt: self.config.euler.dt, t_end: self.config.sde.t_end, store_every: 1 };
        solve_euler_cached(&self.cache, self.config.domain.nx, initial_from_velocity(&self.basis, &self.u0), &cfg)
    }

    pub fn audit(&self) -> Result<AuditSummary> {
        let n = self.config.diagnostics.audit_samples;
        let seed = self.config.sde.seed;
        let audit = audit_assumptions(&self.basis, &self.model, n, seed)?;
        let neutrality = neutrality_defects(&self.basis, &self.model, n.min(50), seed)?;
        Ok(AuditSummary::new(audit, neutrality))
    }

    pub fn corrector(&self, euler: &EulerSolution) -> Result<CorrectorLadder> {
        let dg = &self.config.diagnostics;
        corrector_ladder(euler, dg.corrector_grid, dg.c_tilde[0], &dg.corrector_ladder, dg.pairing_fields, self.config.sde.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub kind: String,
    pub passed: bool,
    pub samples: usize,
    pub k_sum: f64,
    pub k_sum_fit: f64,
    pub records: usize,
    pub held_out_violations: usize,
    pub failed: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub neutrality: Option<Vec<f64>>,
}

impl AuditSummary {
    fn new(a: AssumptionAudit, neutrality: Option<Vec<f64>>) -> Self {
        AuditSummary {
            kind: a.kind.clone(),
            passed: a.passed,
            samples: a.samples,
            k_sum: a.k_sum,
            k_sum_fit: a.k_sum_fit,
            records: a.records.len(),
            held_out_violations: a.records.iter().map(|r| r.held_out_violations).sum(),
            failed: a.records.iter().filter(|r| !r.passed).map(|r| format!("{}[{}]", r.id, r.mode)).collect(),
            neutrality,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerSummary {
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
    pub initial_energy: f64,
    pub max_energy_drift: f64,
    pub horizon_suspect: bool,
    pub top_quarter_energy: f64,
    pub band_limited: bool,
    pub digest: String,
}

impl EulerSummary {
    pub fn new(sol: &EulerSolution, dt: f64) -> Self {
        EulerSummary {
            nx: sol.nx,
            dt,
            t_end: *sol.times.last().unwrap(),
            initial_energy: sol.initial_energy,
            max_energy_drift: sol.max_energy_drift,
            horizon_suspect: sol.horizon_suspect,
            top_quarter_energy: sol.top_quarter_energy,
            band_limited: sol.top_quarter_energy <= 1e-8,
            digest: sol.digest.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "SKIP")]
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

fn check(name: &str, ok: bool, detail: String) -> Check {
    Check { name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, detail }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub schema: String,
    pub config_digest: String,
    pub basis_digest: String,
    pub euler_digest: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub audit: Option<AuditSummary>,
    pub euler: EulerSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub corrector: Option<CorrectorLadder>,
    pub sweeps: Vec<SweepResult>,
    pub checks: Vec<Check>,
}

impl DiagnosticsReport {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("report serializes");
        v.push(b'\n');
        v
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn any_point_failed(&self) -> bool {
        self.sweeps.iter().any(|s| !s.failed_points.is_empty())
    }

    /// Long-format table `nu,alpha,c_tilde,quantity,mean,stderr,n_paths,seed_lo,seed_hi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("nu,alpha,c_tilde,quantity,mean,stderr,n_paths,seed_lo,seed_hi\n");
        for s in &self.sweeps {
            for p in &s.points {
                let mut row = |c: Option<f64>, q: &str, m: f64, se: f64| {
                    let c = c.map_or(String::new(), |c| c.to_string());
                    out.push_str(&format!(
                        "{},{},{},{},{:e},{:e},{},{},{}\n",
                        p.nu, p.alpha, c, q, m, se, p.n_paths, p.seed_lo, p.seed_hi
                    ));
                };
                row(None, "item1", p.item1.mean, p.item1.stderr);
                for e in &p.item2 {
                    row(None, &format!("item2:{}", e.id), e.value, e.stderr);
                }
                row(None, "item3", p.item3.mean, p.item3.stderr);
                for e in &p.item4 {
                    row(Some(e.c_tilde), "item4", e.item4.mean, e.item4.stderr);
                    row(Some(e.c_tilde), "scaled", e.scaled.mean, e.scaled.stderr);
                }
                row(None, "kappa", p.kappa.mean, p.kappa.stderr);
                row(None, "sup_excess", p.sup_excess.mean, p.sup_excess.stderr);
                row(None, "terminal_energy", p.terminal_energy.mean, p.terminal_energy.stderr);
            }
        }
        out
    }
}

fn paired_all(s: &SweepResult, quantity: &str, alpha: f64) -> Option<(bool, String)> {
    let tests: Vec<_> = s.paired.iter().filter(|p| p.quantity == quantity && p.alpha == alpha).collect();
    if tests.is_empty() {
        return None;
    }
    let ok = tests.iter().all(|t| t.test.significant);
    let zs: Vec<String> = tests.iter().map(|t| format!("{:.2}", t.test.z)).collect();
    Some((ok, format!("z = [{}]", zs.join(", "))))
}

/// Pass/fail table against the acceptance thresholds, from report content only.
pub fn checks(
    audit: Option<&AuditSummary>,
    euler: &EulerSummary,
    corrector: Option<&CorrectorLadder>,
    sweeps: &[SweepResult],
) -> Vec<Check> {
    use thresholds::*;
    let mut out = Vec::new();
    if let Some(a) = audit {
        out.push(check(
            "assumption_audit",
            a.passed,
            format!("k_sum = {:.4}, held-out violations = {}, failed = {:?}", a.k_sum, a.held_out_violations, a.failed),
        ));
        if let Some(n) = &a.neutrality {
            let m = n.iter().cloned().fold(0.0, f64::max);
            out.push(check("stratonovich_neutrality", m <= NEUTRALITY, format!("max defect {m:.2e}")));
        }
    }
    out.push(check("euler_energy", euler.max_energy_drift <= EULER_ENERGY, format!("drift {:.2e}", euler.max_energy_drift)));
    if let Some(c) = corrector {
        let within = |f: f64, (t, tol): (f64, f64)| (f - t).abs() <= tol;
        out.push(check(
            "corrector_slopes",
            within(c.slope_l2.slope, SLOPE_L2) && within(c.slope_dt.slope, SLOPE_DT) && within(c.slope_w12.slope, SLOPE_W12),
            format!("‖v‖ {:.3}, ‖∂_t v‖ {:.3}, W12 {:.3}", c.slope_l2.slope, c.slope_dt.slope, c.slope_w12.slope),
        ));
        out.push(check(
            "corrector_pairing",
            c.pairing_spread <= PAIRING_SPREAD,
            format!("ladder max/min {:.3}", c.pairing_spread),
        ));
    }
    for s in sweeps {
        let tag = match s.axis {
            SweepAxis::NuLadder => "nu",
            SweepAxis::AlphaLadder => "alpha",
            SweepAxis::CTildeSet => "c_tilde",
        };
        let pts = &s.points;
        out.push(check(
            &format!("{tag}:item4_dominated"),
            pts.iter().all(|p| p.item4_dominated),
            format!("{} points", pts.len()),
        ));
        out.push(check(&format!("{tag}:item4_monotone"), pts.iter().all(|p| p.item4_monotone), String::new()));
        out.push(check(&format!("{tag}:cauchy_schwarz"), pts.iter().all(|p| p.cauchy_schwarz), String::new()));
        out.push(check(
            &format!("{tag}:no_failures"),
            s.failed_points.is_empty(),
            format!("{} failed points", s.failed_points.len()),
        ));
        let mut alphas: Vec<f64> = pts.iter().map(|p| p.alpha).collect();
        alphas.dedup();
        for a in alphas {
            if s.axis == SweepAxis::NuLadder {
                for q in ["kappa", "item3"] {
                    if let Some((ok, d)) = paired_all(s, q, a) {
                        out.push(check(&format!("{tag}:{q}_decreasing"), ok, d));
                    }
                }
            }
            for e in pts.first().map(|p| p.item4.clone()).unwrap_or_default() {
                if let Some((ok, d)) = paired_all(s, &format!("scaled[{}]", e.c_tilde), a) {
                    out.push(check(&format!("{tag}:scaled_decreasing[alpha={a},c={}]", e.c_tilde), ok, d));
                }
            }
        }
    }
    let nu = sweeps.iter().find(|s| s.axis == SweepAxis::NuLadder);
    let alpha = sweeps.iter().find(|s| s.axis == SweepAxis::AlphaLadder);
    if let (Some(n), Some(a)) = (nu, alpha) {
        let ones: Vec<_> = a.points.iter().filter(|p| p.alpha == 1.0).cloned().collect();
        if !ones.is_empty() {
            let same = serde_json::to_vec(&ones).ok() == serde_json::to_vec(&n.points).ok();
            out.push(check("alpha1_reproduces_default", same, format!("{} points", ones.len())));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestPoint {
    pub sweep: SweepAxis,
    pub index: usize,
    pub nu: f64,
    pub alpha: f64,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<PathFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub basis_digest: String,
    pub euler_digest: String,
    pub report_digest: String,
    pub config: ExperimentConfig,
    pub points: Vec<ManifestPoint>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub paths_dir: Option<String>,
    pub started_unix: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stages: Vec<(String, f64)>,
}

impl Timing {
    fn mark(&mut self, name: &str, t: Instant) {
        self.stages.push((name.into(), t.elapsed().as_secs_f64()));
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Write per-path trajectory dumps under `<out>/paths`.
    pub keep_paths: bool,
}

pub struct RunOutcome {
    pub report: DiagnosticsReport,
    pub manifest: RunManifest,
    pub timing: Timing,
    pub trajectories: Vec<(ManifestPoint, Vec<TrajectoryRecord>)>,
}

pub fn path_file(point: &ManifestPoint, seed: u64) -> String {
    let axis = match point.sweep {
        SweepAxis::NuLadder => "nu",
        SweepAxis::AlphaLadder => "alpha",
        SweepAxis::CTildeSet => "ctilde",
    };
    format!("{axis}_{:03}_seed{seed}.bin", point.index)
}

fn setup<'a>(
    prep: &'a Prepared,
    noise: &'a GalerkinNoise,
    euler: &'a EulerSolution,
    keep_paths: bool,
    inject: bool,
) -> Result<SweepSetup<'a>> {
    let cfg = &prep.config;
    let inject_nan = if inject {
        cfg.debug.inject_nan_at_point.map(|p| (p, cfg.debug.inject_nan_at_step.unwrap_or(1)))
    } else {
        None
    };
    Ok(SweepSetup {
        basis: &prep.basis,
        noise,
        u0: &prep.u0,
        euler,
        base: cfg.sde_config(),
        c_tilde: cfg.diagnostics.c_tilde.clone(),
        panel: test_panel(&prep.basis, euler, cfg.diagnostics.panel)?,
        n_paths: cfg.sde.paths,
        keep_paths,
        inject_nan,
    })
}

fn manifest_points(axis: SweepAxis, results: &[PointResult], n_paths: usize, base: u64) -> Vec<ManifestPoint> {
    results
        .iter()
        .enumerate()
        .map(|(i, p)| ManifestPoint {
            sweep: axis,
            index: i,
            nu: p.nu,
            alpha: p.alpha,
            seeds: (0..n_paths as u64).map(|r| base.wrapping_add(r)).collect(),
            failures: p.failures.clone(),
        })
        .collect()
}

fn alpha_sweep_needed(cfg: &ExperimentConfig) -> bool {
    cfg.alphas() != [1.0]
}

/// Full pipeline: audit, Euler, corrector ladder, ν-sweep and (if more than
/// `α = 1` is configured) the α-sweep.
pub fn run_sweep(config: &ExperimentConfig, cache: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    let started_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut timing = Timing::default();
    let t = Instant::now();
    let prep = Prepared::new(config, cache)?;
    timing.mark("basis", t);
    let t = Instant::now();
    let audit = prep.audit()?;
    timing.mark("audit", t);
    let t = Instant::now();
    let euler = prep.euler()?;
    timing.mark("euler", t);
    let t = Instant::now();
    let corrector = prep.corrector(&euler)?;
    timing.mark("corrector", t);
    let noise = GalerkinNoise::new(&prep.basis, &prep.model, config.basis.n_modes, CorrectionForm::Galerkin)?;
    let nus = config.nus();
    let t = Instant::now();
    let s = setup(&prep, &noise, &euler, opts.keep_paths, true)?;
    let (nu_sweep, nu_raw) = run_nu_sweep(&s, &nus)?;
    timing.mark("nu_sweep", t);
    let mut sweeps = vec![nu_sweep];
    let mut points = manifest_points(SweepAxis::NuLadder, &nu_raw, config.sde.paths, config.sde.seed);
    let mut trajectories: Vec<(ManifestPoint, Vec<TrajectoryRecord>)> = Vec::new();
    if opts.keep_paths {
        trajectories.extend(points.iter().cloned().zip(nu_raw.into_iter().map(|p| p.trajectories)));
    }
    if alpha_sweep_needed(config) {
        let t = Instant::now();
        let s = setup(&prep, &noise, &euler, opts.keep_paths, false)?;
        let (a_sweep, a_raw) = run_alpha_sweep(&s, &nus, &config.alphas())?;
        timing.mark("alpha_sweep", t);
        sweeps.push(a_sweep);
        let a_points = manifest_points(SweepAxis::AlphaLadder, &a_raw, config.sde.paths, config.sde.seed);
        if opts.keep_paths {
            trajectories.extend(a_points.iter().cloned().zip(a_raw.into_iter().map(|p| p.trajectories)));
        }
        points.extend(a_points);
    }
    let report = assemble_report(&prep, Some(audit), &euler, Some(corrector), sweeps);
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        config_digest: config.digest(),
        basis_digest: prep.basis.digest().into(),
        euler_digest: euler.digest.clone(),
        report_digest: report.digest(),
        config: config.clone(),
        points,
        paths_dir: opts.keep_paths.then(|| "paths".to_string()),
        started_unix,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome { report, manifest, timing, trajectories })
}

pub fn assemble_report(
    prep: &Prepared,
    audit: Option<AuditSummary>,
    euler: &EulerSolution,
    corrector: Option<CorrectorLadder>,
    sweeps: Vec<SweepResult>,
) -> DiagnosticsReport {
    let es = EulerSummary::new(euler, prep.config.euler.dt);
    let checks = checks(audit.as_ref(), &es, corrector.as_ref(), &sweeps);
    DiagnosticsReport {
        schema: REPORT_SCHEMA.into(),
        config_digest: prep.config.digest(),
        basis_digest: prep.basis.digest().into(),
        euler_digest: euler.digest.clone(),
        audit,
        euler: es,
        corrector,
        sweeps,
        checks,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    std::fs::write(path, v)?;
    Ok(())
}

/// Writes `report.json`, the optional CSV, `manifest.json`, `timing.json`
/// and any trajectory dumps.
pub fn write_outputs(out: &Path, outcome: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.json"), outcome.report.to_bytes())?;
    if outcome.manifest.config.output.formats.iter().any(|f| f == "csv") {
        std::fs::write(out.join("report.csv"), outcome.report.to_csv())?;
    }
    write_json(&out.join("manifest.json"), &outcome.manifest)?;
    write_json(&out.join("timing.json"), &outcome.timing)?;
    if !outcome.trajectories.is_empty() {
        let dir = out.join("paths");
        std::fs::create_dir_all(&dir)?;
        for (point, trajs) in &outcome.trajectories {
            for t in trajs {
                std::fs::write(dir.join(path_file(point, t.seed)), t.to_bytes())?;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyOutcome {
    pub expected: String,
    pub on_disk: String,
    pub rederived: String,
    pub from_paths: bool,
}

impl VerifyOutcome {
    pub fn matched(&self) -> bool {
        self.expected == self.on_disk && self.expected == self.rederived
    }
}

fn load_point(dir: &Path, point: &ManifestPoint) -> Result<Vec<TrajectoryRecord>> {
    let failed: Vec<u64> = point.failures.iter().map(|f| f.seed).collect();
    point
        .seeds
        .iter()
        .filter(|s| !failed.contains(s))
        .map(|&s| {
            let p = dir.join(path_file(point, s));
            let bytes = std::fs::read(&p).map_err(|e| Error::Cache { path: p.display().to_string(), reason: e.to_string() })?;
            TrajectoryRecord::from_bytes(&bytes)
        })
        .collect()
}

/// Rebuilds the report of a finished run directory, from stored paths when
/// they were dumped and by re-simulation otherwise.
pub fn verify(out: &Path, cache: &Path) -> Result<VerifyOutcome> {
    let manifest: RunManifest = serde_json::from_slice(&std::fs::read(out.join("manifest.json"))?)?;
    let on_disk = hex::encode(Sha256::digest(std::fs::read(out.join("report.json"))?));
    let config = manifest.config.clone();
    config.validate()?;
    let prep = Prepared::new(&config, cache)?;
    let audit = prep.audit()?;
    let euler = prep.euler()?;
    let corrector = prep.corrector(&euler)?;
    let noise = GalerkinNoise::new(&prep.basis, &prep.model, config.basis.n_modes, CorrectionForm::Galerkin)?;
    let from_paths = manifest.paths_dir.is_some();
    let mut sweeps = Vec::new();
    for (axis, inject) in [(SweepAxis::NuLadder, true), (SweepAxis::AlphaLadder, false)] {
        let pts: Vec<&ManifestPoint> = manifest.points.iter().filter(|p| p.sweep == axis).collect();
        if pts.is_empty() {
            continue;
        }
        let s = setup(&prep, &noise, &euler, false, inject)?;
        let results = pts
            .iter()
            .map(|p| {
                let (trajs, failures) = match &manifest.paths_dir {
                    Some(d) => (load_point(&out.join(d), p)?, p.failures.clone()),
                    None => simulate_point(&s, p.index, p.nu, p.alpha)?,
                };
                derive_point(&s, p.nu, p.alpha, trajs, failures)
            })
            .collect::<Result<Vec<_>>>()?;
        let alphas = if axis == SweepAxis::NuLadder { vec![1.0] } else { config.alphas() };
        sweeps.push(sweep_from_points(axis, &results, &s, &alphas));
    }
    let report = assemble_report(&prep, Some(audit), &euler, Some(corrector), sweeps);
    Ok(VerifyOutcome { expected: manifest.report_digest, on_disk, rederived: report.digest(), from_paths })
}

/// Sizes the global worker pool; call once before any sweep.
pub fn init_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}
