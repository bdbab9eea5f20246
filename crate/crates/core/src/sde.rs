//! Projected Galerkin SDE in Stokes-coefficient space.
//!
//! ```text
//! du = (-νAu - P_n P L_u u + (μ/2) Σ Q̃_i² u) dt - μ^{1/2} Σ P_n P G_i u dW_i
//! ```
//!
//! integrated by exponential Euler–Maruyama: the Stokes part is applied
//! exactly as `exp(-νλ_k dt)` after an explicit Itô step.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::noise::{CorrectionForm, GalerkinNoise, NoiseModel};
use crate::ops;
use crate::spectral::{SpectralBasis, VelocityField};
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMode {
    /// Record the hitting time and keep integrating.
    Record,
    /// End the trajectory at the hitting time.
    Truncate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub nu: f64,
    pub mu: f64,
    pub n_galerkin: usize,
    pub dt: f64,
    pub t_end: f64,
    pub m_threshold: f64,
    pub seed: u64,
    pub stop_mode: StopMode,
    /// Switches off `L_u u` (linear test mode).
    pub nonlinear: bool,
    pub correction: CorrectionForm,
    /// Debug hook: poisons the state at this step.
    pub inject_nan_at_step: Option<usize>,
}

impl SdeConfig {
    pub fn new(nu: f64, n_galerkin: usize, dt: f64, t_end: f64) -> Self {
        SdeConfig {
            nu,
            mu: nu,
            n_galerkin,
            dt,
            t_end,
            m_threshold: 10.0,
            seed: 0,
            stop_mode: StopMode::Record,
            nonlinear: true,
            correction: CorrectionForm::Galerkin,
            inject_nan_at_step: None,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.nu > 0.0 && self.nu < 1.0) {
            errs.push(format!("nu must lie in (0, 1) (got {})", self.nu));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            errs.push(format!("mu must be ≥ 0 (got {})", self.mu));
        }
        if !(self.dt > 0.0) {
            errs.push(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.t_end >= 0.0) {
            errs.push(format!("T must be ≥ 0 (got {})", self.t_end));
        } else if self.dt > 0.0 {
            let steps = self.t_end / self.dt;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                errs.push(format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt));
            }
        }
        if !(self.m_threshold > 1.0) {
            errs.push(format!("M must be > 1 (got {})", self.m_threshold));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}

/// Per-step energy functionals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    pub l2_sq: f64,
    pub h1_sq: f64,
    /// Trapezoidal `∫₀ᵗ ‖u‖₁²`.
    pub dissipation: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
    pub energy: Vec<EnergyPoint>,
    /// `(step, time)` of the first crossing of the stopping threshold.
    pub stop_hit: Option<(usize, f64)>,
    pub seed: u64,
    pub brownian_digest: String,
    /// Increments used, row per step.
    pub increments: Vec<Vec<f64>>,
}

const RECORD_MAGIC: &[u8; 8] = b"KLTRAJ1\0";

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sup_energy(&self) -> f64 {
        self.energy.iter().map(|e| e.l2_sq).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_dissipation(&self) -> f64 {
        self.energy.last().map_or(0.0, |e| e.dissipation)
    }

    /// Little-endian binary dump; [`Self::from_bytes`] reads it back bit-exactly.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let put_u = |out: &mut Vec<u8>, v: u64| out.extend_from_slice(&v.to_le_bytes());
        let put_f = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_le_bytes());
        out.extend_from_slice(RECORD_MAGIC);
        put_u(&mut out, self.seed);
        put_u(&mut out, self.times.len() as u64);
        put_u(&mut out, self.coeffs.first().map_or(0, |c| c.len()) as u64);
        put_u(&mut out, self.increments.len() as u64);
        put_u(&mut out, self.increments.first().map_or(0, |c| c.len()) as u64);
        match self.stop_hit {
            Some((s, t)) => {
                put_u(&mut out, s as u64 + 1);
                put_f(&mut out, t);
            }
            None => {
                put_u(&mut out, 0);
                put_f(&mut out, 0.0);
            }
        }
        let dig = self.brownian_digest.as_bytes();
        put_u(&mut out, dig.len() as u64);
        out.extend_from_slice(dig);
        for t in &self.times {
            put_f(&mut out, *t);
        }
        for c in self.coeffs.iter().flatten() {
            put_f(&mut out, *c);
        }
        for e in &self.energy {
            put_f(&mut out, e.l2_sq);
            put_f(&mut out, e.h1_sq);
            put_f(&mut out, e.dissipation);
        }
        for w in self.increments.iter().flatten() {
            put_f(&mut out, *w);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |r: &str| Error::Cache { path: "<trajectory>".into(), reason: r.into() };
        if bytes.len() < 8 || &bytes[..8] != RECORD_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut pos = 8;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
            pos += n;
            Ok(s)
        };
        let mut u = || -> Result<u64> { Ok(u64::from_le_bytes(take(8)?.try_into().unwrap())) };
        let seed = u()?;
        let n_t = u()? as usize;
        let n_c = u()? as usize;
        let n_w = u()? as usize;
        let k_w = u()? as usize;
        let stop_step = u()?;
        let stop_t = f64::from_bits(u()?);
        let dig_len = u()? as usize;
        drop(u);
        let digest = String::from_utf8(take(dig_len)?.to_vec()).map_err(|_| bad("digest"))?;
        let mut f = || -> Result<f64> { Ok(f64::from_le_bytes(take(8)?.try_into().unwrap())) };
        let times = (0..n_t).map(|_| f()).collect::<Result<Vec<_>>>()?;
        let coeffs = (0..n_t).map(|_| (0..n_c).map(|_| f()).collect()).collect::<Result<Vec<Vec<_>>>>()?;
        let energy = (0..n_t)
            .map(|_| Ok(EnergyPoint { l2_sq: f()?, h1_sq: f()?, dissipation: f()? }))
            .collect::<Result<Vec<_>>>()?;
        let increments = (0..n_w).map(|_| (0..k_w).map(|_| f()).collect()).collect::<Result<Vec<Vec<_>>>>()?;
        Ok(TrajectoryRecord {
            times,
            coeffs,
            energy,
            stop_hit: (stop_step > 0).then(|| (stop_step as usize - 1, stop_t)),
            seed,
            brownian_digest: digest,
            increments,
        })
    }
}

/// i.i.d. `N(0, dt)` increments for `k` modes, ChaCha20 seeded from a u64.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    pub dt: f64,
    pub k: usize,
    pub seed: u64,
    pub increments: Vec<Vec<f64>>,
}

impl BrownianPath {
    pub fn generate(seed: u64, k: usize, n_steps: usize, dt: f64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let s = dt.sqrt();
        let increments = (0..n_steps)
            .map(|_| {
                (0..k)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        s * z
                    })
                    .collect()
            })
            .collect();
        BrownianPath { dt, k, seed, increments }
    }

    /// Sums consecutive blocks of `factor` increments (same underlying path at `factor·dt`).
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(factor >= 1 && self.increments.len() % factor == 0);
        let increments = self
            .increments
            .chunks(factor)
            .map(|block| {
                let mut s = vec![0.0; self.k];
                for row in block {
                    for (a, b) in s.iter_mut().zip(row) {
                        *a += b;
                    }
                }
                s
            })
            .collect();
        BrownianPath { dt: self.dt * factor as f64, k: self.k, seed: self.seed, increments }
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for w in self.increments.iter().flatten() {
            h.update(w.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// The n-dimensional system: basis data, Galerkin noise and configuration.
pub struct GalerkinSystem<'a> {
    pub basis: &'a SpectralBasis,
    pub noise: GalerkinNoise,
    pub cfg: SdeConfig,
    decay: Vec<f64>,
}

impl<'a> GalerkinSystem<'a> {
    pub fn new(basis: &'a SpectralBasis, model: &NoiseModel, cfg: SdeConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.n_galerkin == 0 || cfg.n_galerkin > basis.n_modes() {
            return Err(Error::config(format!(
                "n_galerkin = {} must lie in 1..={}",
                cfg.n_galerkin,
                basis.n_modes()
            )));
        }
        let noise = GalerkinNoise::new(basis, model, cfg.n_galerkin, cfg.correction)?;
        Ok(Self::from_parts(basis, noise, cfg))
    }

    pub fn from_parts(basis: &'a SpectralBasis, noise: GalerkinNoise, cfg: SdeConfig) -> Self {
        let decay = basis.eigenvalues()[..cfg.n_galerkin].iter().map(|l| (-cfg.nu * l * cfg.dt).exp()).collect();
        GalerkinSystem { basis, noise, cfg, decay }
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        let mut cfg = self.cfg.clone();
        cfg.dt = dt;
        Self::from_parts(self.basis, self.noise.clone(), cfg)
    }

    pub fn n(&self) -> usize {
        self.cfg.n_galerkin
    }

    /// `-P_n(L_u u)` in coefficients.
    pub fn nonlinear(&self, c: &[f64]) -> Vec<f64> {
        let u = self.basis.reconstruct(c);
        let nl = ops::advect_grid(self.basis.domain(), &u, &u);
        let mut out = self.basis.coefficients(&nl, self.n());
        out.iter_mut().for_each(|x| *x = -*x);
        out
    }

    /// Drift without the Stokes term: `-P_n L_u u + (μ/2) C u`.
    pub fn drift(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = if self.cfg.nonlinear { self.nonlinear(c) } else { vec![0.0; n] };
        if self.noise.kind.has_correction() && self.cfg.mu > 0.0 {
            let mut corr = vec![0.0; n];
            self.noise.apply_correction(c, &mut corr);
            for (o, q) in out.iter_mut().zip(&corr) {
                *o += 0.5 * self.cfg.mu * q;
            }
        }
        out
    }

    /// `-μ^{1/2} Σ_i (P_n P G_i u) ΔW_i`.
    fn noise_increment(&self, c: &[f64], dw: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut acc = vec![0.0; n];
        if self.cfg.mu == 0.0 {
            return acc;
        }
        let s = self.cfg.mu.sqrt();
        let mut g = vec![0.0; n];
        for (i, w) in dw.iter().enumerate().take(self.noise.n_noise()) {
            self.noise.apply(i, c, &mut g);
            for (a, b) in acc.iter_mut().zip(&g) {
                *a -= s * b * w;
            }
        }
        acc
    }

    /// One exponential Euler–Maruyama step.
    pub fn step(&self, c: &[f64], dw: &[f64]) -> Vec<f64> {
        let f = self.drift(c);
        let b = self.noise_increment(c, dw);
        (0..self.n()).map(|k| self.decay[k] * (c[k] + self.cfg.dt * f[k] + b[k])).collect()
    }

    /// One Lawson–Heun step of the Stratonovich form (no correction term).
    pub fn step_stratonovich(&self, c: &[f64], dw: &[f64]) -> Vec<f64> {
        let n = self.n();
        let dt = self.cfg.dt;
        let f0 = if self.cfg.nonlinear { self.nonlinear(c) } else { vec![0.0; n] };
        let b0 = self.noise_increment(c, dw);
        let pred: Vec<f64> = (0..n).map(|k| self.decay[k] * (c[k] + dt * f0[k] + b0[k])).collect();
        let f1 = if self.cfg.nonlinear { self.nonlinear(&pred) } else { vec![0.0; n] };
        let b1 = self.noise_increment(&pred, dw);
        (0..n)
            .map(|k| self.decay[k] * (c[k] + 0.5 * dt * f0[k] + 0.5 * b0[k]) + 0.5 * dt * f1[k] + 0.5 * b1[k])
            .collect()
    }

    fn energy_of(&self, c: &[f64]) -> (f64, f64) {
        let l2 = c.iter().map(|x| x * x).sum();
        (l2, self.basis.h1_sq(c))
    }

    pub fn brownian(&self) -> BrownianPath {
        BrownianPath::generate(self.cfg.seed, self.noise.n_noise(), self.cfg.n_steps(), self.cfg.dt)
    }

    pub fn simulate(&self, u0: &VelocityField) -> Result<TrajectoryRecord> {
        let path = self.brownian();
        self.simulate_with(u0, &path)
    }

    /// Exponential Euler–Maruyama along the given increments.
    pub fn simulate_with(&self, u0: &VelocityField, path: &BrownianPath) -> Result<TrajectoryRecord> {
        self.integrate(u0, path, false)
    }

    pub fn simulate_stratonovich(&self, u0: &VelocityField, path: &BrownianPath) -> Result<TrajectoryRecord> {
        self.integrate(u0, path, true)
    }

    fn integrate(&self, u0: &VelocityField, path: &BrownianPath, heun: bool) -> Result<TrajectoryRecord> {
        let n = self.n();
        let dt = self.cfg.dt;
        let steps = self.cfg.n_steps();
        if path.increments.len() < steps || (steps > 0 && (path.dt - dt).abs() > 1e-12 * dt) {
            return Err(Error::config("Brownian path does not match the time grid"));
        }
        let c0: Vec<f64> = u0.coeffs[..n].to_vec();
        let (e0, h0) = self.energy_of(&c0);
        if dt * h0.sqrt() > 0.5 {
            return Err(Error::config(format!(
                "dt = {dt} violates dt·‖u₀‖₁ ≤ 0.5 (‖u₀‖₁ = {:.4})",
                h0.sqrt()
            )));
        }
        let threshold = self.cfg.m_threshold + e0;
        let mut rec = TrajectoryRecord {
            times: vec![0.0],
            coeffs: vec![c0.clone()],
            energy: vec![EnergyPoint { l2_sq: e0, h1_sq: h0, dissipation: 0.0 }],
            stop_hit: None,
            seed: path.seed,
            brownian_digest: String::new(),
            increments: Vec::with_capacity(steps),
        };
        let mut sup = e0;
        if e0 >= threshold {
            rec.stop_hit = Some((0, 0.0));
        }
        let mut c = c0;
        for s in 0..steps {
            if rec.stop_hit.is_some() && self.cfg.stop_mode == StopMode::Truncate {
                break;
            }
            let dw = &path.increments[s];
            let mut next = if heun { self.step_stratonovich(&c, dw) } else { self.step(&c, dw) };
            if self.cfg.inject_nan_at_step == Some(s + 1) {
                next[0] = f64::NAN;
            }
            rec.increments.push(dw.clone());
            if next.iter().any(|x| !x.is_finite()) {
                rec.brownian_digest = digest_rows(&rec.increments);
                return Err(Error::Integration {
                    step: s + 1,
                    reason: "non-finite state".into(),
                    partial: Box::new(rec),
                });
            }
            let (e, h) = self.energy_of(&next);
            let prev = *rec.energy.last().unwrap();
            let diss = prev.dissipation + 0.5 * dt * (prev.h1_sq + h);
            sup = sup.max(e);
            let t = (s + 1) as f64 * dt;
            rec.times.push(t);
            rec.coeffs.push(next.clone());
            rec.energy.push(EnergyPoint { l2_sq: e, h1_sq: h, dissipation: diss });
            if rec.stop_hit.is_none() && sup + diss >= threshold {
                rec.stop_hit = Some((s + 1, t));
            }
            c = next;
        }
        rec.brownian_digest = digest_rows(&rec.increments);
        Ok(rec)
    }

    /// Defect of the weak identity against `φ` (first `n` coefficients of
    /// `phi`): left-point quadrature of every integral, Itô sum with the
    /// stored increments, correction from the system's own matrix.
    pub fn weak_residual(&self, traj: &TrajectoryRecord, phi: &[f64]) -> Vec<f64> {
        let n = self.n();
        let dt = self.cfg.dt;
        let lam = &self.basis.eigenvalues()[..n];
        let p = &phi[..n.min(phi.len())];
        let dotp = |v: &[f64]| v.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
        let c0 = &traj.coeffs[0];
        let mut integral = 0.0;
        let mut out = vec![0.0];
        let mut g = vec![0.0; n];
        let mut corr = vec![0.0; n];
        for s in 0..traj.coeffs.len() - 1 {
            let c = &traj.coeffs[s];
            let nl = if self.cfg.nonlinear { dotp(&self.nonlinear(c)) } else { 0.0 };
            let visc: f64 = c.iter().zip(p).zip(lam).map(|((a, b), l)| l * a * b).sum();
            let mut inc = dt * (nl - self.cfg.nu * visc);
            if self.noise.kind.has_correction() {
                self.noise.apply_correction(c, &mut corr);
                inc += 0.5 * self.cfg.mu * dt * dotp(&corr);
            }
            let s_mu = self.cfg.mu.sqrt();
            for (i, w) in traj.increments[s].iter().enumerate() {
                self.noise.apply(i, c, &mut g);
                inc -= s_mu * dotp(&g) * w;
            }
            integral += inc;
            let lhs = dotp(&traj.coeffs[s + 1]);
            out.push(lhs - dotp(c0) - integral);
        }
        out
    }
}

fn digest_rows(rows: &[Vec<f64>]) -> String {
    let mut h = Sha256::new();
    for w in rows.iter().flatten() {
        h.update(w.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Terminal mean-square distance between the corrected Itô scheme and the
/// Lawson–Heun Stratonovich scheme on common paths, one entry per `dt`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub dts: Vec<f64>,
    pub discrepancy: Vec<f64>,
    pub stderr: Vec<f64>,
    pub slope: Option<f64>,
}

pub fn stratonovich_consistency(
    system: &GalerkinSystem,
    u0: &VelocityField,
    seeds: &[u64],
    refinements: usize,
) -> Result<ConsistencyReport> {
    if !system.noise.kind.has_correction() {
        return Err(Error::UnsupportedNoise {
            kind: system.noise.kind.name().into(),
            what: "Stratonovich comparison needs Q_i ≠ 0".into(),
        });
    }
    let base_dt = system.cfg.dt;
    let finest = 1usize << (refinements - 1);
    let fine_dt = base_dt / finest as f64;
    let fine_steps = system.cfg.n_steps() * finest;
    let mut per_dt: Vec<Vec<f64>> = vec![Vec::new(); refinements];
    for &seed in seeds {
        let fine = BrownianPath::generate(seed, system.noise.n_noise(), fine_steps, fine_dt);
        for (r, bucket) in per_dt.iter_mut().enumerate() {
            let factor = finest >> r;
            let path = fine.coarsen(factor);
            let sys = system.with_dt(path.dt);
            let a = sys.simulate_with(u0, &path)?;
            let b = sys.simulate_stratonovich(u0, &path)?;
            let d: f64 = a.coeffs.last().unwrap().iter().zip(b.coeffs.last().unwrap()).map(|(x, y)| (x - y).powi(2)).sum();
            bucket.push(d);
        }
    }
    let dts: Vec<f64> = (0..refinements).map(|r| base_dt / (1usize << r) as f64).collect();
    let mut discrepancy = Vec::new();
    let mut stderr = Vec::new();
    for b in &per_dt {
        let (m, s) = stats::mean_stderr(b)?;
        discrepancy.push(m);
        stderr.push(s);
    }
    let slope = if discrepancy.iter().all(|d| *d > 0.0) && refinements >= 2 {
        let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = discrepancy.iter().map(|d| d.ln()).collect();
        Some(stats::ols(&xs, &ys).slope)
    } else {
        None
    };
    Ok(ConsistencyReport { dts, discrepancy, stderr, slope })
}

/// Strong self-convergence: `E‖X_dt(T) - X_{dt/2}(T)‖²`-based order over a
/// dt ladder on common fine paths. Returns the RMS differences between
/// successive levels and the fitted order.
pub fn strong_order(
    system: &GalerkinSystem,
    u0: &VelocityField,
    seeds: &[u64],
    levels: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    assert!(levels >= 3);
    let base_dt = system.cfg.dt;
    let finest = 1usize << (levels - 1);
    let fine_steps = system.cfg.n_steps() * finest;
    let mut terminal: Vec<Vec<Vec<f64>>> = vec![Vec::new(); levels];
    for &seed in seeds {
        let fine = BrownianPath::generate(seed, system.noise.n_noise(), fine_steps, base_dt / finest as f64);
        for (r, bucket) in terminal.iter_mut().enumerate() {
            let path = fine.coarsen(finest >> r);
            let rec = system.with_dt(path.dt).simulate_with(u0, &path)?;
            bucket.push(rec.coeffs.last().unwrap().clone());
        }
    }
    let mut errs = Vec::new();
    let mut dts = Vec::new();
    for r in 0..levels - 1 {
        let ms: f64 = terminal[r]
            .iter()
            .zip(&terminal[r + 1])
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
            .sum::<f64>()
            / seeds.len() as f64;
        errs.push(ms.sqrt());
        dts.push(base_dt / (1usize << r) as f64);
    }
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let order = stats::ols(&xs, &ys).slope;
    Ok((dts, errs, order))
}

/// Heun scheme for the scalar Stratonovich equation `dX = -aX dt + σX∘dW`.
pub fn scalar_heun(x0: f64, a: f64, sigma: f64, dt: f64, increments: &[f64]) -> f64 {
    let mut x = x0;
    for &w in increments {
        let pred = x + (-a * x) * dt + sigma * x * w;
        x += 0.5 * ((-a * x) + (-a * pred)) * dt + 0.5 * sigma * (x + pred) * w;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use crate::noise::{NoiseConfig, NoiseKind};

    fn setup(nx: usize, m: usize) -> SpectralBasis {
        SpectralBasis::build(&Domain::new(nx).unwrap(), m).unwrap()
    }

    fn u0(b: &SpectralBasis) -> VelocityField {
        let mut c: Vec<f64> = (1..=4).map(|k| 1.0 / k as f64).collect();
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= n);
        b.velocity(c).unwrap()
    }

    #[test]
    fn pure_stokes_decay_is_exact() {
        let b = setup(8, 10);
        let model = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::Additive, 2, 0.0)).unwrap();
        let mut cfg = SdeConfig::new(0.1, 10, 0.01, 0.2);
        cfg.nonlinear = false;
        let sys = GalerkinSystem::new(&b, &model, cfg).unwrap();
        let u = u0(&b);
        let rec = sys.simulate(&u).unwrap();
        for (t, c) in rec.times.iter().zip(&rec.coeffs) {
            for k in 0..10 {
                let exact = u.coeffs[k] * (-0.1 * b.eigenvalues()[k] * t).exp();
                assert!((c[k] - exact).abs() <= 1e-14 * exact.abs().max(1e-300) + 1e-16);
            }
        }
    }

    #[test]
    fn nonlinear_drift_is_energy_neutral() {
        let b = setup(12, 20);
        let model = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::Additive, 1, 0.0)).unwrap();
        let sys = GalerkinSystem::new(&b, &model, SdeConfig::new(0.05, 20, 0.01, 0.1)).unwrap();
        let c: Vec<f64> = (0..20).map(|k| ((k * 37 % 13) as f64 - 6.0) / 7.0).collect();
        let d = sys.nonlinear(&c);
        let ip: f64 = d.iter().zip(&c).map(|(a, b)| a * b).sum();
        assert!(ip.abs() < 1e-11, "{ip}");
    }

    #[test]
    fn zero_horizon_and_determinism() {
        let b = setup(8, 10);
        let model = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::TransportStratonovich, 3, 0.5)).unwrap();
        let u = u0(&b);
        let sys = GalerkinSystem::new(&b, &model, SdeConfig::new(0.1, 10, 0.01, 0.0)).unwrap();
        let rec = sys.simulate(&u).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.coeffs[0], u.coeffs[..10].to_vec());
        let mut cfg = SdeConfig::new(0.1, 10, 0.01, 0.2);
        cfg.seed = 42;
        let sys = GalerkinSystem::new(&b, &model, cfg).unwrap();
        let a = sys.simulate(&u).unwrap();
        let c = sys.simulate(&u).unwrap();
        assert_eq!(a.to_bytes(), c.to_bytes());
        assert_eq!(TrajectoryRecord::from_bytes(&a.to_bytes()).unwrap(), a);
        assert!(a.stop_hit.is_none());
    }

    #[test]
    fn nan_injection_reports_step_with_partial_history() {
        let b = setup(8, 6);
        let model = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::Multiplicative, 2, 0.1)).unwrap();
        let mut cfg = SdeConfig::new(0.1, 6, 0.01, 0.1);
        cfg.inject_nan_at_step = Some(4);
        let sys = GalerkinSystem::new(&b, &model, cfg).unwrap();
        match sys.simulate(&u0(&b)) {
            Err(Error::Integration { step, partial, .. }) => {
                assert_eq!(step, 4);
                assert_eq!(partial.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stopping_time_monotone_in_threshold() {
        let b = setup(8, 10);
        let model = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::Additive, 4, 3.0)).unwrap();
        let u = u0(&b);
        let mut prev = 0.0;
        for m in [1.01, 1.1, 1.5, 3.0] {
            let mut cfg = SdeConfig::new(0.5, 10, 0.01, 1.0);
            cfg.mu = 1.0;
            cfg.m_threshold = m;
            cfg.seed = 7;
            let rec = GalerkinSystem::new(&b, &model, cfg).unwrap().simulate(&u).unwrap();
            let t = rec.stop_hit.map_or(f64::INFINITY, |s| s.1);
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn truncate_mode_ends_record() {
        let b = setup(8, 10);
        let model = NoiseModel::new(&b, &NoiseConfig::new(NoiseKind::Additive, 1, 0.0)).unwrap();
        let mut cfg = SdeConfig::new(0.05, 10, 0.01, 1.0);
        cfg.m_threshold = 1.2;
        cfg.stop_mode = StopMode::Truncate;
        let rec = GalerkinSystem::new(&b, &model, cfg).unwrap().simulate(&u0(&b)).unwrap();
        let (s, _) = rec.stop_hit.expect("dissipation crosses the threshold");
        assert_eq!(rec.len(), s + 1);
    }

    #[test]
    fn gbm_closed_form() {
        let (x0, a, sigma, t) = (1.0, 0.5, 0.4, 1.0);
        let n = 4000;
        let dt = t / n as f64;
        let path = BrownianPath::generate(3, 1, n, dt);
        let w: Vec<f64> = path.increments.iter().map(|r| r[0]).collect();
        let wt: f64 = w.iter().sum();
        let exact = x0 * (-a * t + sigma * wt).exp();
        let approx = scalar_heun(x0, a, sigma, dt, &w);
        assert!((approx - exact).abs() < 1e-3, "{approx} vs {exact}");
    }

    #[test]
    fn coarsened_path_preserves_totals() {
        let p = BrownianPath::generate(1, 3, 16, 0.01);
        let c = p.coarsen(4);
        assert_eq!(c.increments.len(), 4);
        for m in 0..3 {
            let a: f64 = p.increments.iter().map(|r| r[m]).sum();
            let b: f64 = c.increments.iter().map(|r| r[m]).sum();
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(p.digest(), BrownianPath::generate(1, 3, 16, 0.01).digest());
    }
}
