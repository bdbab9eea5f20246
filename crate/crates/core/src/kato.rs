//! Ensemble estimates of the four boundary-layer criterion quantities and
//! the viscosity / noise-scaling sweeps built on them.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{build_corrector, Cutoff, EulerSolution};
use crate::grid::{BoundaryStrip, Domain, VectorGridField};
use crate::noise::GalerkinNoise;
use crate::ops::{self, GradientMode};
use crate::sde::{GalerkinSystem, SdeConfig, TrajectoryRecord};
use crate::spectral::{SpectralBasis, VelocityField};
use crate::stats::{self, LinearFit, PairedTest};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub id: String,
    /// Unit L² norm.
    pub field: VectorGridField,
}

/// First `n_eigen` Stokes eigenfields plus the normalized corrector of the
/// initial Euler state at strip width `4h`.
pub fn test_panel(basis: &SpectralBasis, euler: &EulerSolution, n_eigen: usize) -> Result<Vec<TestField>> {
    let d = basis.domain();
    if n_eigen > basis.n_modes() {
        return Err(Error::OutOfRange { index: n_eigen, limit: basis.n_modes() });
    }
    let mut out: Vec<TestField> =
        (0..n_eigen).map(|k| TestField { id: format!("eig{}", k + 1), field: basis.field(k).clone() }).collect();
    let cor = build_corrector(euler, d, 4.0 * d.h(), 1.0, Cutoff::Polynomial, &[0])?;
    let v = &cor.v_history[0];
    let n = v.norm();
    if n > 0.0 {
        out.push(TestField { id: "boundary".into(), field: v.scaled(1.0 / n) });
    }
    Ok(out)
}

/// Euler reference sampled on the SDE grid at the SDE times.
#[derive(Clone, Debug)]
pub struct ReferencePath {
    pub times: Vec<f64>,
    pub fields: Vec<VectorGridField>,
}

impl ReferencePath {
    pub fn new(euler: &EulerSolution, domain: &Domain, times: &[f64]) -> Result<Self> {
        let fields =
            times.iter().map(|&t| Ok(euler.velocity_on(&euler.psi_hat_at(t)?, domain))).collect::<Result<Vec<_>>>()?;
        Ok(ReferencePath { times: times.to_vec(), fields })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathQuantities {
    pub seed: u64,
    /// `sup_t ‖u_t - ū_t‖²`.
    pub sup_diff: f64,
    /// `ν ∫ ‖∇u‖²` over the whole domain.
    pub dissipation: f64,
    /// Same integrand restricted to each strip.
    pub strip_dissipation: Vec<f64>,
    /// `⟨u_t - ū_t, φ⟩` per test field, per time.
    pub pairings: Vec<Vec<f64>>,
    pub initial_energy: f64,
    pub sup_energy: f64,
    /// `sup_t (‖u_t‖² + 2ν ∫₀ᵗ ‖∇u‖²)`.
    pub sup_energy_dissipation: f64,
    pub terminal_energy: f64,
}

fn trapezoid(times: &[f64], ys: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 1..ys.len() {
        s += 0.5 * (times[i] - times[i - 1]) * (ys[i - 1] + ys[i]);
    }
    s
}

/// Quantities of one path. `reference` must carry the trajectory's times.
pub fn per_path_quantities(
    basis: &SpectralBasis,
    traj: &TrajectoryRecord,
    reference: &ReferencePath,
    nu: f64,
    strips: &[BoundaryStrip],
    fields: &[TestField],
) -> Result<PathQuantities> {
    let d = basis.domain();
    for s in strips {
        d.check_nx(s.nx)?;
    }
    if traj.times.len() > reference.times.len()
        || traj.times.iter().zip(&reference.times).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::GridMismatch { expected: reference.times.len(), found: traj.times.len() });
    }
    let nt = traj.len();
    let mut sup_diff = 0.0f64;
    let mut grad = Vec::with_capacity(nt);
    let mut strip_grad = vec![Vec::with_capacity(nt); strips.len()];
    let mut pairings = vec![Vec::with_capacity(nt); fields.len()];
    let mut sup_energy = f64::NEG_INFINITY;
    let mut sup_ed = f64::NEG_INFINITY;
    let mut running = 0.0;
    for (k, c) in traj.coeffs.iter().enumerate() {
        let u = basis.reconstruct(c);
        let diff = u.sub(&reference.fields[k]);
        sup_diff = sup_diff.max(diff.norm_sq());
        let e: f64 = c.iter().map(|x| x * x).sum();
        sup_energy = sup_energy.max(e);
        let g = ops::gradient_energy(d, &u, GradientMode::NoSlip, None);
        if k > 0 {
            running += 0.5 * (traj.times[k] - traj.times[k - 1]) * (grad[k - 1] + g);
        }
        sup_ed = sup_ed.max(e + 2.0 * nu * running);
        grad.push(g);
        for (s, strip) in strips.iter().enumerate() {
            strip_grad[s].push(ops::gradient_energy(d, &u, GradientMode::NoSlip, Some(strip)));
        }
        for (f, tf) in fields.iter().enumerate() {
            pairings[f].push(diff.dot(&tf.field));
        }
    }
    let energy = |c: &Vec<f64>| c.iter().map(|x| x * x).sum::<f64>();
    Ok(PathQuantities {
        seed: traj.seed,
        sup_diff,
        dissipation: nu * trapezoid(&traj.times, &grad),
        strip_dissipation: strip_grad.iter().map(|g| nu * trapezoid(&traj.times, g)).collect(),
        pairings,
        initial_energy: energy(&traj.coeffs[0]),
        sup_energy,
        sup_energy_dissipation: sup_ed,
        terminal_energy: energy(traj.coeffs.last().unwrap()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Mean and standard error of `select` over the paths in seed order.
pub fn ensemble_estimate(paths: &[PathQuantities], select: impl Fn(&PathQuantities) -> f64) -> Result<Estimate> {
    if paths.is_empty() {
        return Err(Error::Statistics("empty ensemble".into()));
    }
    let mut xs: Vec<(u64, f64)> = paths.iter().map(|p| (p.seed, select(p))).collect();
    xs.sort_by_key(|x| x.0);
    let v: Vec<f64> = xs.into_iter().map(|x| x.1).collect();
    let (mean, stderr) = stats::mean_stderr(&v)?;
    Ok(Estimate { mean, stderr })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item2Entry {
    pub id: String,
    /// `max_t |E⟨u_t - ū_t, φ⟩|`.
    pub value: f64,
    /// Standard error at the maximizing time.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripEntry {
    pub c_tilde: f64,
    pub effective_width: f64,
    pub item4: Estimate,
    /// `ν^{2(α-1/2)} · E∫‖∇u‖²_Γ`.
    pub scaled: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub seed: u64,
    pub step: Option<usize>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionQuantities {
    pub nu: f64,
    pub alpha: f64,
    pub mu: f64,
    pub n_paths: usize,
    pub seed_lo: u64,
    pub seed_hi: u64,
    pub item1: Estimate,
    pub item2: Vec<Item2Entry>,
    pub item3: Estimate,
    pub item4: Vec<StripEntry>,
    /// `E[sup_t (‖u_t‖² + 2ν∫₀ᵗ‖∇u‖²)] - ‖u₀‖²`, which bounds `E[sup ‖u‖²] - ‖u₀‖²`.
    pub kappa: Estimate,
    /// `E[sup ‖u‖²] - ‖u₀‖²`.
    pub sup_excess: Estimate,
    pub terminal_energy: Estimate,
    pub item4_dominated: bool,
    pub item4_monotone: bool,
    /// `(max_t|E⟨·,φ⟩|)² ≤ item1 + 3 SE` for every panel field.
    pub cauchy_schwarz: bool,
    pub stop_hits: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<PathFailure>,
}

/// Per-point samples kept for paired comparisons; not serialized.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub quantities: Option<CriterionQuantities>,
    pub paths: Vec<PathQuantities>,
    pub trajectories: Vec<TrajectoryRecord>,
    pub failures: Vec<PathFailure>,
    pub nu: f64,
    pub alpha: f64,
}

/// Everything a sweep point needs besides its `(ν, α)`.
pub struct SweepSetup<'a> {
    pub basis: &'a SpectralBasis,
    pub noise: &'a GalerkinNoise,
    pub u0: &'a VelocityField,
    pub euler: &'a EulerSolution,
    pub base: SdeConfig,
    pub c_tilde: Vec<f64>,
    pub panel: Vec<TestField>,
    pub n_paths: usize,
    /// Keep trajectory records for dumping or re-derivation.
    pub keep_paths: bool,
    /// Debug hook: `(point index, step)` poisons the first path of that point.
    pub inject_nan: Option<(usize, usize)>,
}

/// `μ = ν^α`, with `α = 1` mapped to `μ = ν` bit for bit.
pub fn noise_scale(nu: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        nu
    } else {
        nu.powf(alpha)
    }
}

pub fn scaled_exponent(alpha: f64) -> f64 {
    2.0 * (alpha - 0.5)
}

fn point_strips(domain: &Domain, nu: f64, c_tilde: &[f64]) -> Result<Vec<BoundaryStrip>> {
    c_tilde.iter().map(|c| BoundaryStrip::new(domain, c * nu)).collect()
}

/// Aggregates per-path records into the criterion quantities.
pub fn aggregate(
    nu: f64,
    alpha: f64,
    strips: &[BoundaryStrip],
    c_tilde: &[f64],
    panel: &[TestField],
    paths: &[PathQuantities],
    stop_hits: usize,
    failures: Vec<PathFailure>,
) -> Result<CriterionQuantities> {
    let mut sorted = paths.to_vec();
    sorted.sort_by_key(|p| p.seed);
    let paths = &sorted[..];
    let item1 = ensemble_estimate(paths, |p| p.sup_diff)?;
    let item3 = ensemble_estimate(paths, |p| p.dissipation)?;
    let expo = scaled_exponent(alpha);
    let factor = if expo == 1.0 { nu } else { nu.powf(expo) };
    let mut item4 = Vec::new();
    for (s, c) in c_tilde.iter().enumerate() {
        let e = ensemble_estimate(paths, |p| p.strip_dissipation[s])?;
        let scaled = ensemble_estimate(paths, |p| factor * p.strip_dissipation[s])?;
        item4.push(StripEntry { c_tilde: *c, effective_width: strips[s].effective_width, item4: e, scaled });
    }
    let nt = paths[0].pairings.first().map_or(0, |v| v.len());
    let mut item2 = Vec::new();
    for (f, tf) in panel.iter().enumerate() {
        let mut best = Item2Entry { id: tf.id.clone(), value: 0.0, stderr: 0.0 };
        for t in 0..nt {
            let xs: Vec<f64> = paths.iter().map(|p| p.pairings[f].get(t).copied().unwrap_or(0.0)).collect();
            let (m, se) = stats::mean_stderr(&xs)?;
            if m.abs() > best.value {
                best.value = m.abs();
                best.stderr = se;
            }
        }
        item2.push(best);
    }
    let order = |a: &StripEntry, b: &StripEntry| a.c_tilde.total_cmp(&b.c_tilde);
    let mut by_c: Vec<usize> = (0..c_tilde.len()).collect();
    by_c.sort_by(|&a, &b| order(&item4[a], &item4[b]));
    let item4_dominated = paths.iter().all(|p| p.strip_dissipation.iter().all(|s| *s <= p.dissipation))
        && item4.iter().all(|e| e.item4.mean <= item3.mean);
    let item4_monotone = paths.iter().all(|p| by_c.windows(2).all(|w| p.strip_dissipation[w[0]] <= p.strip_dissipation[w[1]]));
    let cauchy_schwarz = item2.iter().all(|e| e.value * e.value <= item1.mean + 3.0 * item1.stderr);
    let seeds: Vec<u64> = paths.iter().map(|p| p.seed).collect();
    Ok(CriterionQuantities {
        nu,
        alpha,
        mu: noise_scale(nu, alpha),
        n_paths: paths.len(),
        seed_lo: *seeds.iter().min().unwrap(),
        seed_hi: *seeds.iter().max().unwrap(),
        item1,
        item2,
        item3,
        item4,
        kappa: ensemble_estimate(paths, |p| p.sup_energy_dissipation - p.initial_energy)?,
        sup_excess: ensemble_estimate(paths, |p| p.sup_energy - p.initial_energy)?,
        terminal_energy: ensemble_estimate(paths, |p| p.terminal_energy)?,
        item4_dominated,
        item4_monotone,
        cauchy_schwarz,
        stop_hits,
        failures,
    })
}

fn point_config(setup: &SweepSetup, nu: f64, alpha: f64) -> Result<SdeConfig> {
    let mut cfg = setup.base.clone();
    cfg.nu = nu;
    cfg.mu = noise_scale(nu, alpha);
    cfg.validate()?;
    Ok(cfg)
}

/// Simulates the paths of one `(ν, α)` point on seeds `base.seed + r`.
/// Path failures are returned alongside the completed records.
pub fn simulate_point(
    setup: &SweepSetup,
    index: usize,
    nu: f64,
    alpha: f64,
) -> Result<(Vec<TrajectoryRecord>, Vec<PathFailure>)> {
    let cfg = point_config(setup, nu, alpha)?;
    let outcomes: Vec<std::result::Result<TrajectoryRecord, PathFailure>> = (0..setup.n_paths)
        .into_par_iter()
        .map(|r| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(r as u64);
            if r == 0 {
                if let Some((p, s)) = setup.inject_nan {
                    if p == index {
                        c.inject_nan_at_step = Some(s);
                    }
                }
            }
            let seed = c.seed;
            let sys = GalerkinSystem::from_parts(setup.basis, setup.noise.clone(), c);
            sys.simulate(setup.u0).map_err(|e| match e {
                Error::Integration { step, reason, .. } => PathFailure { seed, step: Some(step), reason },
                other => PathFailure { seed, step: None, reason: other.to_string() },
            })
        })
        .collect();
    let mut trajs = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(t) => trajs.push(t),
            Err(f) => failures.push(f),
        }
    }
    Ok((trajs, failures))
}

/// Quantities of a point from completed trajectory records.
pub fn derive_point(
    setup: &SweepSetup,
    nu: f64,
    alpha: f64,
    trajs: Vec<TrajectoryRecord>,
    mut failures: Vec<PathFailure>,
) -> Result<PointResult> {
    let d = setup.basis.domain();
    let cfg = point_config(setup, nu, alpha)?;
    let strips = point_strips(d, nu, &setup.c_tilde)?;
    let times: Vec<f64> = (0..=cfg.n_steps()).map(|s| s as f64 * cfg.dt).collect();
    let reference = ReferencePath::new(setup.euler, d, &times)?;
    let outcomes: Vec<std::result::Result<PathQuantities, PathFailure>> = trajs
        .par_iter()
        .map(|t| {
            per_path_quantities(setup.basis, t, &reference, nu, &strips, &setup.panel)
                .map_err(|e| PathFailure { seed: t.seed, step: None, reason: e.to_string() })
        })
        .collect();
    let mut paths = Vec::new();
    for o in outcomes {
        match o {
            Ok(q) => paths.push(q),
            Err(f) => failures.push(f),
        }
    }
    failures.sort_by_key(|f| f.seed);
    let stop_hits = trajs.iter().filter(|t| t.stop_hit.is_some()).count();
    let quantities = if paths.len() >= 2 {
        Some(aggregate(nu, alpha, &strips, &setup.c_tilde, &setup.panel, &paths, stop_hits, failures.clone())?)
    } else {
        None
    };
    let trajectories = if setup.keep_paths { trajs } else { Vec::new() };
    Ok(PointResult { quantities, paths, trajectories, failures, nu, alpha })
}

pub fn run_point(setup: &SweepSetup, index: usize, nu: f64, alpha: f64) -> Result<PointResult> {
    let (trajs, failures) = simulate_point(setup, index, nu, alpha)?;
    derive_point(setup, nu, alpha, trajs, failures)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    NuLadder,
    AlphaLadder,
    CTildeSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub quantity: String,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_tilde: Option<f64>,
    pub fit: LinearFit,
}

/// One-sided paired test that a quantity is larger at the larger ν.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedRecord {
    pub quantity: String,
    pub alpha: f64,
    pub nu_hi: f64,
    pub nu_lo: f64,
    pub test: PairedTest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub nu: f64,
    pub alpha: f64,
    pub failures: Vec<PathFailure>,
    pub aggregated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<CriterionQuantities>,
    pub slopes: Vec<SlopeRecord>,
    pub paired: Vec<PairedRecord>,
    /// Set when a point sits at the critical `α = 1/2`.
    pub critical_alpha: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failed_points: Vec<PointFailure>,
}

pub fn check_ladder(nus: &[f64]) -> Result<()> {
    if nus.is_empty() {
        return Err(Error::config("ν ladder is empty"));
    }
    let bad: Vec<String> =
        nus.windows(2).filter(|w| !(w[0] > w[1])).map(|w| format!("({}, {})", w[0], w[1])).collect();
    if !bad.is_empty() {
        return Err(Error::config(format!("ν ladder must decrease strictly; offending pairs {}", bad.join(", "))));
    }
    Ok(())
}

type Selector = fn(&PathQuantities, usize) -> f64;

fn sweep_statistics(points: &[PointResult], c_tilde: &[f64], alpha: f64) -> (Vec<SlopeRecord>, Vec<PairedRecord>) {
    let good: Vec<&PointResult> = points.iter().filter(|p| p.quantities.is_some()).collect();
    let nus: Vec<f64> = good.iter().map(|p| p.nu).collect();
    let mut slopes = Vec::new();
    let mut push = |name: &str, c: Option<f64>, ys: Vec<f64>| {
        if let Ok(fit) = stats::loglog_slope(&nus, &ys) {
            slopes.push(SlopeRecord { quantity: name.into(), alpha, c_tilde: c, fit });
        }
    };
    push("item1", None, good.iter().map(|p| p.quantities.as_ref().unwrap().item1.mean).collect());
    push("item3", None, good.iter().map(|p| p.quantities.as_ref().unwrap().item3.mean).collect());
    for (s, c) in c_tilde.iter().enumerate() {
        push("item4", Some(*c), good.iter().map(|p| p.quantities.as_ref().unwrap().item4[s].item4.mean).collect());
        push("scaled", Some(*c), good.iter().map(|p| p.quantities.as_ref().unwrap().item4[s].scaled.mean).collect());
    }
    let expo = scaled_exponent(alpha);
    let sel: Vec<(String, Selector, usize)> = {
        let mut v: Vec<(String, Selector, usize)> = vec![
            ("item1".into(), |p, _| p.sup_diff, 0),
            ("item3".into(), |p, _| p.dissipation, 0),
            ("kappa".into(), |p, _| p.sup_energy_dissipation - p.initial_energy, 0),
            ("sup_excess".into(), |p, _| p.sup_energy - p.initial_energy, 0),
            ("terminal_energy".into(), |p, _| p.terminal_energy, 0),
        ];
        for s in 0..c_tilde.len() {
            v.push((format!("item4[{}]", c_tilde[s]), |p, s| p.strip_dissipation[s], s));
        }
        v
    };
    let mut paired = Vec::new();
    for w in good.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        let seeds = |p: &PointResult| p.paths.iter().map(|x| x.seed).collect::<BTreeSet<u64>>();
        let keep: BTreeSet<u64> = seeds(hi).intersection(&seeds(lo)).copied().collect();
        let common = |p: &PointResult| -> Vec<PathQuantities> {
            let mut v: Vec<PathQuantities> = p.paths.iter().filter(|x| keep.contains(&x.seed)).cloned().collect();
            v.sort_by_key(|x| x.seed);
            v
        };
        let (a, b) = (common(hi), common(lo));
        let mut record = |name: String, xa: Vec<f64>, xb: Vec<f64>| {
            if let Ok(test) = stats::paired_greater(&xa, &xb) {
                paired.push(PairedRecord { quantity: name, alpha, nu_hi: hi.nu, nu_lo: lo.nu, test });
            }
        };
        for (name, f, s) in &sel {
            record(name.clone(), a.iter().map(|p| f(p, *s)).collect(), b.iter().map(|p| f(p, *s)).collect());
        }
        for (s, c) in c_tilde.iter().enumerate() {
            let fa = if expo == 1.0 { hi.nu } else { hi.nu.powf(expo) };
            let fb = if expo == 1.0 { lo.nu } else { lo.nu.powf(expo) };
            record(
                format!("scaled[{c}]"),
                a.iter().map(|p| fa * p.strip_dissipation[s]).collect(),
                b.iter().map(|p| fb * p.strip_dissipation[s]).collect(),
            );
        }
    }
    (slopes, paired)
}

/// Slopes and paired tests over already computed points.
pub fn sweep_from_points(axis: SweepAxis, results: &[PointResult], setup: &SweepSetup, alphas: &[f64]) -> SweepResult {
    let mut slopes = Vec::new();
    let mut paired = Vec::new();
    for &a in alphas {
        let pts: Vec<PointResult> = results.iter().filter(|p| p.alpha == a).cloned().collect();
        let (s, p) = sweep_statistics(&pts, &setup.c_tilde, a);
        slopes.extend(s);
        paired.extend(p);
    }
    SweepResult {
        axis,
        points: results.iter().filter_map(|p| p.quantities.clone()).collect(),
        slopes,
        paired,
        critical_alpha: alphas.contains(&0.5),
        failed_points: results
            .iter()
            .filter(|p| !p.failures.is_empty() || p.quantities.is_none())
            .map(|p| PointFailure {
                nu: p.nu,
                alpha: p.alpha,
                failures: p.failures.clone(),
                aggregated: p.quantities.is_some(),
            })
            .collect(),
    }
}

/// Default sweep: `μ = ν` along the ladder.
pub fn run_nu_sweep(setup: &SweepSetup, nus: &[f64]) -> Result<(SweepResult, Vec<PointResult>)> {
    check_ladder(nus)?;
    let results = nus.iter().enumerate().map(|(i, &nu)| run_point(setup, i, nu, 1.0)).collect::<Result<Vec<_>>>()?;
    Ok((sweep_from_points(SweepAxis::NuLadder, &results, setup, &[1.0]), results))
}

/// `μ = ν^α` over the ladder for each α; point indices run ν-major.
pub fn run_alpha_sweep(setup: &SweepSetup, nus: &[f64], alphas: &[f64]) -> Result<(SweepResult, Vec<PointResult>)> {
    check_ladder(nus)?;
    if alphas.is_empty() || alphas.iter().any(|a| !(*a >= 0.5 && *a <= 2.0)) {
        return Err(Error::config("α values must lie in [1/2, 2]"));
    }
    let mut results = Vec::new();
    for (ai, &a) in alphas.iter().enumerate() {
        for (i, &nu) in nus.iter().enumerate() {
            results.push(run_point(setup, ai * nus.len() + i, nu, a)?);
        }
    }
    Ok((sweep_from_points(SweepAxis::AlphaLadder, &results, setup, alphas), results))
}
