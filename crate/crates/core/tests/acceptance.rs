//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use katolab::euler::{solve_euler, EulerConfig};
use katolab::experiment::ExperimentConfig;
use katolab::experiment::{self, Prepared, RunOptions};
use katolab::kato::{run_alpha_sweep, run_nu_sweep, scaled_exponent, test_panel, SweepResult, SweepSetup};
use katolab::noise::{audit_assumptions, neutrality_defects, CorrectionForm, GalerkinNoise, NoiseConfig, NoiseKind, NoiseModel};
use katolab::ops::{advect_grid, gradient_energy, GradientMode};
use katolab::sde::{strong_order, stratonovich_consistency, GalerkinSystem, SdeConfig};
use katolab::spectral::{stokes_apply, SpectralBasis, VelocityField};
use katolab::stats::loglog_slope;
use katolab::{Domain, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn cache() -> PathBuf {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cache");
    std::fs::create_dir_all(&p).unwrap();
    p
}

fn random_field(basis: &SpectralBasis, rng: &mut ChaCha20Rng) -> Result<VelocityField> {
    let c: Vec<f64> = (0..basis.n_modes()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    basis.velocity(c.into_iter().map(|x| x / n).collect())
}

const DEFAULT_TOML: &str = r#"
[domain]
nx = 16
[basis]
n_modes = 32
[sde]
nu = [0.1, 0.05, 0.025, 0.0125]
paths = 200
[diagnostics]
c_tilde = [1.0, 0.5, 2.0]
"#;

fn config(extra_noise: &str) -> ExperimentConfig {
    let text = format!("[noise]\n{extra_noise}\n{DEFAULT_TOML}");
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    cfg.validate().unwrap();
    cfg
}

fn spectral_foundations() -> Result<Outcome> {
    let d = Domain::new(32)?;
    let b = SpectralBasis::load_or_build(&cache(), &d, 64)?;
    let n = b.n_modes();
    let mut ortho: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((b.field(i).dot(b.field(j)) - e).abs());
        }
        let r = stokes_apply(b.leray(), b.field(i))?.sub(&b.field(i).scaled(b.eigenvalues()[i]));
        residual = residual.max(r.norm());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let p = b.leray();
    let mut leray: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let lambda_n = b.eigenvalues()[n - 1];
    for _ in 0..100 {
        let mut f = katolab::VectorGridField::zeros(&d);
        let mut g = katolab::VectorGridField::zeros(&d);
        for x in f.u.iter_mut().chain(f.v.iter_mut()).chain(g.u.iter_mut()).chain(g.v.iter_mut()) {
            *x = rng.sample::<f64, _>(StandardNormal);
        }
        f.clear_boundary_normal();
        g.clear_boundary_normal();
        let pf = p.project(&f)?;
        let pg = p.project(&g)?;
        leray = leray
            .max(p.project(&pf)?.sub(&pf).max_abs() / pf.max_abs())
            .max((pf.dot(&g) - f.dot(&pg)).abs() / (f.norm() * g.norm()));
        // random divergence-free field outside the span
        let psi: Vec<f64> = (0..d.n_interior_nodes()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let u = katolab::ops::curl(&d, &psi);
        let rest = u.sub(&b.reconstruct(&b.coefficients(&u, n)));
        let h1 = gradient_energy(&d, &u, GradientMode::NoSlip, None);
        tail = tail.max(rest.norm_sq() * lambda_n / h1);
    }
    outcome(
        ortho <= 1e-10 && residual <= 1e-8 && leray <= 1e-12 && tail <= 1.0,
        format!("orthonormality {ortho:.1e}, Stokes residual {residual:.1e}, Leray {leray:.1e}, tail ratio {tail:.3}"),
    )
}

fn algebraic_identities() -> Result<Outcome> {
    let d = Domain::new(16)?;
    let b = SpectralBasis::load_or_build(&cache(), &d, 32)?;
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let (mut skew, mut anti): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let phi = random_field(&b, &mut rng)?;
        let f = random_field(&b, &mut rng)?;
        let g = random_field(&b, &mut rng)?;
        let af = advect_grid(&d, &phi.grid, &f.grid);
        let ag = advect_grid(&d, &phi.grid, &g.grid);
        skew = skew.max(af.dot(&f.grid).abs());
        anti = anti.max((af.dot(&g.grid) + f.grid.dot(&ag)).abs());
    }
    let model = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::TransportStratonovich, 8, 0.5))?;
    let neutral = neutrality_defects(&b, &model, 50, 2)?.unwrap_or_default().into_iter().fold(0.0, f64::max);
    outcome(
        skew <= 1e-11 && anti <= 1e-11 && neutral <= 1e-10,
        format!("skew {skew:.1e}, antisymmetry {anti:.1e}, neutrality {neutral:.1e}"),
    )
}

fn assumption_audit() -> Result<Outcome> {
    let d = Domain::new(16)?;
    let b = SpectralBasis::load_or_build(&cache(), &d, 32)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [
        NoiseKind::Additive,
        NoiseKind::Multiplicative,
        NoiseKind::TransportIto,
        NoiseKind::TransportStratonovich,
        NoiseKind::Salt,
    ] {
        let model = NoiseModel::new(&b, &NoiseConfig::new(kind, 8, 0.5))?;
        let a = audit_assumptions(&b, &model, 200, 0)?;
        let violations: usize = a.records.iter().map(|r| r.held_out_violations).sum();
        let finite = a.records.iter().all(|r| r.c_declared.is_finite() && r.k_declared.is_finite());
        let ok = a.passed && finite && a.k_sum <= 1.0 && violations == 0;
        pass &= ok;
        parts.push(format!("{} Σk {:.3} held-out {violations}", kind.name(), a.k_sum));
    }
    outcome(pass, parts.join("; "))
}

fn energy_balance() -> Result<Outcome> {
    let d = Domain::new(16)?;
    let b = SpectralBasis::load_or_build(&cache(), &d, 32)?;
    let model = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::TransportStratonovich, 8, 0.5))?;
    let u0 = experiment::initial_velocity(&b, &Default::default())?;
    let mut dts = Vec::new();
    let mut defects = Vec::new();
    let mut dt = 0.02;
    for _ in 0..4 {
        let mut cfg = SdeConfig::new(0.05, 32, dt, 0.4);
        cfg.mu = 0.0;
        let rec = GalerkinSystem::new(&b, &model, cfg)?.simulate(&u0)?;
        let last = rec.energy.last().unwrap();
        let e0 = rec.energy[0].l2_sq;
        defects.push((last.l2_sq + 2.0 * 0.05 * last.dissipation - e0).abs());
        dts.push(dt);
        dt /= 2.0;
    }
    let fit = loglog_slope(&dts, &defects)?;
    outcome(
        fit.slope >= 0.9,
        format!("defects {:?}, slope {:.3}", defects.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>(), fit.slope),
    )
}

fn euler_reference() -> Result<Outcome> {
    let prep = Prepared::new(&config("kind = \"transport_stratonovich\""), &cache())?;
    let sol = prep.euler()?;
    let drift = sol.max_energy_drift;
    let nx = 32;
    let m = nx - 1;
    let mut psi0 = vec![0.0; m * m];
    // modes (k, l) = (1, 2) and (2, 1) share the eigenvalue
    psi0[m] = 0.1;
    psi0[1] = 0.05;
    let steady = solve_euler(nx, psi0.clone(), &EulerConfig { dt: 0.002, t_end: 0.5, store_every: 10 })?;
    let n0 = psi0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dev = steady
        .psi_hat
        .iter()
        .map(|p| p.iter().zip(&psi0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / n0)
        .fold(0.0, f64::max);
    outcome(drift <= 1e-6 && dev <= 1e-6, format!("energy drift {drift:.1e}, steady-state deviation {dev:.1e}"))
}

fn sde_orders() -> Result<Outcome> {
    let d = Domain::new(16)?;
    let b = SpectralBasis::load_or_build(&cache(), &d, 32)?;
    let u0 = experiment::initial_velocity(&b, &Default::default())?;
    let seeds: Vec<u64> = (0..32).collect();
    let additive = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::Additive, 8, 1.0))?;
    let (_, _, p_add) = strong_order(&GalerkinSystem::new(&b, &additive, SdeConfig::new(0.05, 32, 0.02, 0.2))?, &u0, &seeds, 5)?;
    let transport = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::TransportStratonovich, 8, 0.5))?;
    let sys = GalerkinSystem::new(&b, &transport, SdeConfig::new(0.05, 32, 0.02, 0.2))?;
    let (_, _, p_tr) = strong_order(&sys, &u0, &seeds, 5)?;
    let cons = stratonovich_consistency(&sys, &u0, &seeds, 5)?;
    let mono = cons.discrepancy.windows(2).all(|w| w[1] < w[0]);
    let slope = cons.slope.unwrap_or(f64::NAN);
    outcome(
        (p_add - 1.0).abs() <= 0.2 && (p_tr - 0.5).abs() <= 0.15 && mono && slope >= 0.5,
        format!("additive order {p_add:.3}, transport order {p_tr:.3}, Stratonovich discrepancy slope {slope:.3} (monotone {mono})"),
    )
}

struct Sweeps {
    nu: SweepResult,
    alpha: SweepResult,
    alpha_default: SweepResult,
}

fn run_sweeps(prep: &Prepared, alphas: Option<&[f64]>) -> Result<(SweepResult, Option<SweepResult>)> {
    let euler = prep.euler()?;
    let noise = GalerkinNoise::new(&prep.basis, &prep.model, prep.config.basis.n_modes, CorrectionForm::Galerkin)?;
    let setup = SweepSetup {
        basis: &prep.basis,
        noise: &noise,
        u0: &prep.u0,
        euler: &euler,
        base: prep.config.sde_config(),
        c_tilde: prep.config.diagnostics.c_tilde.clone(),
        panel: test_panel(&prep.basis, &euler, prep.config.diagnostics.panel)?,
        n_paths: prep.config.sde.paths,
        keep_paths: false,
        inject_nan: None,
    };
    let nus = prep.config.nus();
    let (nu, _) = run_nu_sweep(&setup, &nus)?;
    let alpha = match alphas {
        Some(a) => Some(run_alpha_sweep(&setup, &nus, a)?.0),
        None => None,
    };
    Ok((nu, alpha))
}

fn paired_ok(s: &SweepResult, quantity: &str, alpha: f64) -> (bool, Vec<f64>) {
    let tests: Vec<_> = s.paired.iter().filter(|p| p.quantity == quantity && p.alpha == alpha).collect();
    (!tests.is_empty() && tests.iter().all(|t| t.test.significant), tests.iter().map(|t| t.test.z).collect())
}

fn fmt_z(z: &[f64]) -> String {
    z.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(", ")
}

fn energy_estimates(s: &SweepResult) -> Result<Outcome> {
    let (k_ok, kz) = paired_ok(s, "kappa", 1.0);
    let (d_ok, dz) = paired_ok(s, "item3", 1.0);
    let finite = s.points.iter().all(|p| p.item3.mean.is_finite() && p.kappa.mean.is_finite());
    let bounded = s.points.iter().all(|p| p.sup_excess.mean <= p.kappa.mean);
    outcome(
        k_ok && d_ok && finite && bounded && s.points.len() == 4,
        format!("κ paired z [{}], ν∫‖u‖₁² paired z [{}]", fmt_z(&kz), fmt_z(&dz)),
    )
}

fn kato_structure(sweeps: &[&SweepResult]) -> Result<Outcome> {
    let pts: Vec<_> = sweeps.iter().flat_map(|s| s.points.iter()).collect();
    let dom = pts.iter().all(|p| p.item4_dominated);
    let mono = pts.iter().all(|p| p.item4_monotone);
    let cs = pts.iter().all(|p| p.cauchy_schwarz);
    let failed: usize = sweeps.iter().map(|s| s.failed_points.len()).sum();
    outcome(
        dom && mono && cs && failed == 0,
        format!("{} points: item4 ≤ item3 {dom}, monotone {mono}, Cauchy–Schwarz {cs}", pts.len()),
    )
}

fn corrector_ladder() -> Result<Outcome> {
    let prep = Prepared::new(&config("kind = \"transport_stratonovich\""), &cache())?;
    let euler = prep.euler()?;
    let c = prep.corrector(&euler)?;
    let (l2, dt, w12) = (c.slope_l2.slope, c.slope_dt.slope, c.slope_w12.slope);
    outcome(
        (l2 - 0.5).abs() <= 0.1 && (dt - 0.5).abs() <= 0.15 && (w12 + 0.5).abs() <= 0.1 && c.pairing_spread <= 3.0,
        format!("slopes ‖v‖ {l2:.3}, ‖∂_t v‖ {dt:.3}, W12 {w12:.3}; pairing max/min {:.3}", c.pairing_spread),
    )
}

fn scaling_sweep(sw: &Sweeps, alphas: &[f64]) -> Result<Outcome> {
    let ones: Vec<_> = sw.alpha.points.iter().filter(|p| p.alpha == 1.0).cloned().collect();
    let identical = serde_json::to_vec(&ones).unwrap() == serde_json::to_vec(&sw.alpha_default.points).unwrap();
    let mut exact = true;
    for p in &sw.alpha.points {
        let e = scaled_exponent(p.alpha);
        exact &= e == 2.0 * (p.alpha - 0.5);
        for s in &p.item4 {
            let ratio = s.scaled.mean / s.item4.mean;
            let want = p.nu.powf(e);
            exact &= s.item4.mean == 0.0 || ((ratio - want) / want).abs() <= 1e-12;
        }
    }
    let mut dec = true;
    let mut zs = Vec::new();
    for &a in alphas.iter().filter(|a| **a != 1.0) {
        for c in &sw.alpha.points[0].item4 {
            let (ok, z) = paired_ok(&sw.alpha, &format!("scaled[{}]", c.c_tilde), a);
            dec &= ok;
            zs.push(z.into_iter().fold(f64::INFINITY, f64::min));
        }
    }
    outcome(
        identical && exact && dec,
        format!("α=1 identical {identical}, exponent exact {exact}, scaled decreasing {dec} (min z {:.1})", zs.into_iter().fold(f64::INFINITY, f64::min)),
    )
}

const SMOKE_TOML: &str = r#"
[domain]
nx = 8
[basis]
n_modes = 12
[noise]
kind = "transport_stratonovich"
n_noise = 4
a0 = 0.3
[sde]
nu = [0.2, 0.1, 0.05, 0.025]
alpha = [1.0, 0.75]
dt = 0.01
t_end = 0.2
paths = 8
[euler]
dt = 0.005
[diagnostics]
c_tilde = [1.0, 2.0]
panel = 4
audit_samples = 20
corrector_grid = 128
corrector_ladder = [0.2, 0.1, 0.05, 0.025]
pairing_fields = 5
"#;

fn reproducibility() -> Result<Outcome> {
    let cfg = ExperimentConfig::from_toml(SMOKE_TOML)?;
    let dir = tempfile::tempdir()?;
    let cache = dir.path().join("cache");
    let a = experiment::run_sweep(&cfg, &cache, &RunOptions { keep_paths: true })?;
    let b = experiment::run_sweep(&cfg, &cache, &RunOptions { keep_paths: false })?;
    let same = a.report.to_bytes() == b.report.to_bytes();
    let stored = dir.path().join("stored");
    let fresh = dir.path().join("fresh");
    experiment::write_outputs(&stored, &a)?;
    experiment::write_outputs(&fresh, &b)?;
    let v1 = experiment::verify(&stored, &cache)?;
    let v2 = experiment::verify(&fresh, &cache)?;
    outcome(
        same && v1.matched() && v1.from_paths && v2.matched() && !v2.from_paths,
        format!("byte-identical {same}, verify from paths {}, verify by re-simulation {}", v1.matched(), v2.matched()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Result<Outcome>| {
        let t = Instant::now();
        let o = f().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        println!("criterion {id:>2} {} {name}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
        results.push((id, name, o));
    };
    run(1, "spectral foundations", &mut spectral_foundations);
    run(2, "algebraic identities", &mut algebraic_identities);
    run(3, "assumption audit", &mut assumption_audit);
    run(4, "deterministic energy balance", &mut energy_balance);
    run(5, "Euler reference", &mut euler_reference);
    run(6, "SDE convergence orders", &mut sde_orders);

    let alphas = [1.0, 0.6, 0.75, 0.9];
    let sweeps = (|| -> Result<Sweeps> {
        let additive = Prepared::new(&config("kind = \"additive\"\na0 = 1.0"), &cache())?;
        let (nu, _) = run_sweeps(&additive, None)?;
        let transport = Prepared::new(&config("kind = \"transport_stratonovich\"\na0 = 0.5"), &cache())?;
        let (alpha_default, alpha) = run_sweeps(&transport, Some(&alphas))?;
        Ok(Sweeps { nu, alpha: alpha.unwrap(), alpha_default })
    })();
    match &sweeps {
        Ok(sw) => {
            run(7, "stochastic energy estimates", &mut || energy_estimates(&sw.nu));
            run(8, "Kato structure", &mut || kato_structure(&[&sw.nu, &sw.alpha_default, &sw.alpha]));
        }
        Err(e) => {
            let msg = format!("sweep error: {e}");
            run(7, "stochastic energy estimates", &mut || outcome(false, msg.clone()));
            run(8, "Kato structure", &mut || outcome(false, msg.clone()));
        }
    }
    run(9, "corrector ladder", &mut corrector_ladder);
    match &sweeps {
        Ok(sw) => run(10, "scaling sweep", &mut || scaling_sweep(sw, &alphas)),
        Err(e) => {
            let msg = format!("sweep error: {e}");
            run(10, "scaling sweep", &mut || outcome(false, msg.clone()))
        }
    }
    run(11, "reproducibility", &mut reproducibility);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
