//! Incompressible Euler reference in vorticity–stream-function form on the
//! nodes of the staggered grid, plus the boundary-layer corrector built
//! from it.
//!
//! The stream function is a sine series `ψ = Σ ψ̂_kl sin(kπx) sin(lπy)`,
//! `k, l < nx`, so ψ vanishes on the walls. The vorticity uses the symbol of
//! the 5-point Laplacian, `ω̂ = λ^h ψ̂`, which makes `‖curl ψ‖²` on the
//! staggered grid equal to `¼ Σ λ^h ψ̂²`. The Jacobian is evaluated
//! pseudo-spectrally on a 3/2-padded node grid, which removes aliasing
//! exactly; the semi-discrete energy is then conserved exactly and
//! eigen-vorticity states are steady.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{BoundaryStrip, Domain, VectorGridField};
use crate::ops::{self, GradientMode};
use crate::spectral::{SpectralBasis, VelocityField};
use crate::stats::{self, LinearFit};
use crate::transforms::{analyze_sine_2d, synth_2d, Dct1, Dst1};

pub const CFL_LIMIT: f64 = 0.5;
pub const ENERGY_ABORT: f64 = 1e-5;
pub const HORIZON_GROWTH: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `store_every`-th step.
    pub store_every: usize,
}

struct Workspace {
    kmax: usize,
    m: usize,
    lam: Vec<f64>,
    dst: Dst1,
    dct: Dct1,
}

impl Workspace {
    fn new(nx: usize) -> Self {
        let kmax = nx - 1;
        let m = 3 * nx / 2;
        let h = 1.0 / nx as f64;
        let mut lam = vec![0.0; kmax * kmax];
        for l in 0..kmax {
            for k in 0..kmax {
                let sk = ((k + 1) as f64 * PI * h / 2.0).sin();
                let sl = ((l + 1) as f64 * PI * h / 2.0).sin();
                lam[l * kmax + k] = 4.0 / (h * h) * (sk * sk + sl * sl);
            }
        }
        Workspace { kmax, m, lam, dst: Dst1::new(m), dct: Dct1::new(m) }
    }

    fn weighted(&self, c: &[f64], wx: bool, wy: bool, vort: bool) -> Vec<f64> {
        let k = self.kmax;
        let mut out = c.to_vec();
        for l in 0..k {
            for kk in 0..k {
                let mut f = 1.0;
                if wx {
                    f *= (kk + 1) as f64 * PI;
                }
                if wy {
                    f *= (l + 1) as f64 * PI;
                }
                if vort {
                    f *= self.lam[l * k + kk];
                }
                out[l * k + kk] *= f;
            }
        }
        out
    }

    fn synth(&self, c: &[f64], cos_x: bool, cos_y: bool) -> Vec<f64> {
        let s = |a: &[f64], o: &mut [f64]| self.dst.apply(a, o);
        let cc = |a: &[f64], o: &mut [f64]| self.dct.apply(a, o);
        let fx: &dyn Fn(&[f64], &mut [f64]) = if cos_x { &cc } else { &s };
        let fy: &dyn Fn(&[f64], &mut [f64]) = if cos_y { &cc } else { &s };
        synth_2d(c, self.kmax, fx, fy, self.m)
    }

    /// `dψ̂/dt = Ĵ(ψ, ω) / λ^h` and the max padded-grid speed.
    fn rhs(&self, psi: &[f64]) -> (Vec<f64>, f64) {
        let px = self.synth(&self.weighted(psi, true, false, false), true, false);
        let py = self.synth(&self.weighted(psi, false, true, false), false, true);
        let wx = self.synth(&self.weighted(psi, true, false, true), true, false);
        let wy = self.synth(&self.weighted(psi, false, true, true), false, true);
        let mut speed = 0.0f64;
        let jac: Vec<f64> = (0..px.len())
            .map(|i| {
                speed = speed.max(px[i].abs()).max(py[i].abs());
                px[i] * wy[i] - py[i] * wx[i]
            })
            .collect();
        let mut jh = analyze_sine_2d(&jac, &self.dst, self.kmax);
        for (j, l) in jh.iter_mut().zip(&self.lam) {
            *j /= l;
        }
        (jh, speed)
    }

    fn energy(&self, psi: &[f64]) -> f64 {
        0.25 * psi.iter().zip(&self.lam).map(|(p, l)| l * p * p).sum::<f64>()
    }

    /// `max|u| + max|ω|` on the padded nodes.
    fn w1inf(&self, psi: &[f64]) -> f64 {
        let px = self.synth(&self.weighted(psi, true, false, false), true, false);
        let py = self.synth(&self.weighted(psi, false, true, false), false, true);
        let w = self.synth(&self.weighted(psi, false, false, true), false, false);
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        m(&px).max(m(&py)) + m(&w)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EulerSolution {
    pub nx: usize,
    pub times: Vec<f64>,
    /// Sine coefficients, `(nx-1)²` each, row-major `[l][k]`.
    pub psi_hat: Vec<Vec<f64>>,
    pub initial_energy: f64,
    pub energy: Vec<f64>,
    pub max_energy_drift: f64,
    pub w1inf: Vec<f64>,
    pub horizon_suspect: bool,
    /// Share of the initial energy in modes with `max(k,l) > 3(nx-1)/4`.
    pub top_quarter_energy: f64,
    pub digest: String,
}

impl EulerSolution {
    pub fn n_stored(&self) -> usize {
        self.times.len()
    }

    /// Stream function at the interior nodes of an `m × m` grid, `m ≥ nx`.
    pub fn stream_on(&self, psi_hat: &[f64], m: usize) -> Vec<f64> {
        let kmax = self.nx - 1;
        assert!(m >= self.nx);
        let dst = Dst1::new(m);
        let f = |a: &[f64], o: &mut [f64]| dst.apply(a, o);
        synth_2d(psi_hat, kmax, &f, &f, m)
    }

    pub fn velocity_on(&self, psi_hat: &[f64], domain: &Domain) -> VectorGridField {
        ops::curl(domain, &self.stream_on(psi_hat, domain.nx()))
    }

    pub fn velocity(&self, step: usize, domain: &Domain) -> VectorGridField {
        self.velocity_on(&self.psi_hat[step], domain)
    }

    /// Coefficients linearly interpolated between stored snapshots.
    pub fn psi_hat_at(&self, t: f64) -> Result<Vec<f64>> {
        let last = *self.times.last().unwrap();
        if t < -1e-12 || t > last + 1e-9 {
            return Err(Error::Euler(format!("time {t} outside the stored range [0, {last}]")));
        }
        let s = self.times.partition_point(|x| *x < t - 1e-12);
        if s < self.times.len() && (self.times[s] - t).abs() <= 1e-12 {
            return Ok(self.psi_hat[s].clone());
        }
        let s = s.max(1).min(self.times.len() - 1);
        let (t0, t1) = (self.times[s - 1], self.times[s]);
        let a = (t - t0) / (t1 - t0);
        Ok(self.psi_hat[s - 1].iter().zip(&self.psi_hat[s]).map(|(x, y)| (1.0 - a) * x + a * y).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(d) = path.parent() {
            std::fs::create_dir_all(d)?;
        }
        let mut out = Vec::new();
        out.extend_from_slice(b"KLEULER1");
        out.extend_from_slice(&(self.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.times.len() as u64).to_le_bytes());
        for t in &self.times {
            out.extend_from_slice(&t.to_le_bytes());
        }
        for p in self.psi_hat.iter().flatten() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Reads coefficients saved by [`save`](Self::save) and recomputes the
    /// diagnostics from them.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let bad = |r: &str| Error::Cache { path: path.display().to_string(), reason: r.into() };
        if bytes.len() < 24 || &bytes[..8] != b"KLEULER1" {
            return Err(bad("bad magic"));
        }
        let nx = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let nt = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let k2 = (nx - 1) * (nx - 1);
        if bytes.len() != 24 + 8 * (nt + nt * k2) {
            return Err(bad("truncated"));
        }
        let mut it = bytes[24..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let times: Vec<f64> = it.by_ref().take(nt).collect();
        let psi_hat: Vec<Vec<f64>> = (0..nt).map(|_| it.by_ref().take(k2).collect()).collect();
        Ok(finish(nx, times, psi_hat, &bytes))
    }
}

fn finish(nx: usize, times: Vec<f64>, psi_hat: Vec<Vec<f64>>, raw: &[u8]) -> EulerSolution {
    let ws = Workspace::new(nx);
    let energy: Vec<f64> = psi_hat.iter().map(|p| ws.energy(p)).collect();
    let e0 = energy[0];
    let max_energy_drift =
        energy.iter().map(|e| if e0 > 0.0 { (e - e0).abs() / e0 } else { 0.0 }).fold(0.0, f64::max);
    let w1inf: Vec<f64> = psi_hat.iter().map(|p| ws.w1inf(p)).collect();
    let horizon_suspect = w1inf.iter().any(|w| *w > HORIZON_GROWTH * w1inf[0]);
    let kmax = nx - 1;
    let cut = 3 * kmax / 4;
    let top: f64 = (0..kmax)
        .flat_map(|l| (0..kmax).map(move |k| (l, k)))
        .filter(|&(l, k)| l.max(k) + 1 > cut)
        .map(|(l, k)| 0.25 * ws.lam[l * kmax + k] * psi_hat[0][l * kmax + k].powi(2))
        .sum();
    EulerSolution {
        nx,
        times,
        psi_hat,
        initial_energy: e0,
        energy,
        max_energy_drift,
        w1inf,
        horizon_suspect,
        top_quarter_energy: if e0 > 0.0 { top / e0 } else { 0.0 },
        digest: hex::encode(Sha256::digest(raw)),
    }
}

fn serialize_history(nx: usize, times: &[f64], psi: &[Vec<f64>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"KLEULER1");
    out.extend_from_slice(&(nx as u64).to_le_bytes());
    out.extend_from_slice(&(times.len() as u64).to_le_bytes());
    for t in times {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for p in psi.iter().flatten() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

/// Sine coefficients of a stream function given at the interior nodes.
pub fn sine_coefficients(nx: usize, psi_nodes: &[f64]) -> Vec<f64> {
    analyze_sine_2d(psi_nodes, &Dst1::new(nx), nx - 1)
}

/// Initial coefficients from a basis state, so both solvers share `u₀` exactly.
pub fn initial_from_velocity(basis: &SpectralBasis, u0: &VelocityField) -> Vec<f64> {
    let nx = basis.domain().nx();
    sine_coefficients(nx, &basis.reconstruct_stream(&u0.coeffs))
}

/// Classical RK4 from the given sine coefficients.
pub fn solve_euler(nx: usize, psi0: Vec<f64>, cfg: &EulerConfig) -> Result<EulerSolution> {
    Domain::new(nx)?;
    if !(cfg.dt > 0.0) || !(cfg.t_end >= 0.0) || cfg.store_every == 0 {
        return Err(Error::config("euler: dt > 0, T ≥ 0 and store_every ≥ 1 required"));
    }
    let ws = Workspace::new(nx);
    if psi0.len() != ws.kmax * ws.kmax {
        return Err(Error::Euler(format!("expected {} coefficients, got {}", ws.kmax * ws.kmax, psi0.len())));
    }
    let h = 1.0 / nx as f64;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let e0 = ws.energy(&psi0);
    let mut times = vec![0.0];
    let mut hist = vec![psi0.clone()];
    let mut psi = psi0;
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    for s in 0..steps {
        let (k1, speed) = ws.rhs(&psi);
        if speed * cfg.dt / h > CFL_LIMIT {
            return Err(Error::Euler(format!(
                "CFL violated at step {s}: |u|max·dt/h = {:.3} > {CFL_LIMIT}",
                speed * cfg.dt / h
            )));
        }
        let (k2, _) = ws.rhs(&axpy(&psi, 0.5 * cfg.dt, &k1));
        let (k3, _) = ws.rhs(&axpy(&psi, 0.5 * cfg.dt, &k2));
        let (k4, _) = ws.rhs(&axpy(&psi, cfg.dt, &k3));
        for i in 0..psi.len() {
            psi[i] += cfg.dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if psi.iter().any(|x| !x.is_finite()) {
            return Err(Error::Euler(format!("non-finite state at step {}", s + 1)));
        }
        if (s + 1) % cfg.store_every == 0 || s + 1 == steps {
            let e = ws.energy(&psi);
            if e0 > 0.0 && (e - e0).abs() / e0 > ENERGY_ABORT {
                return Err(Error::Euler(format!(
                    "energy drift {:.3e} exceeds {ENERGY_ABORT:e} at t = {:.4}",
                    (e - e0).abs() / e0,
                    (s + 1) as f64 * cfg.dt
                )));
            }
            times.push((s + 1) as f64 * cfg.dt);
            hist.push(psi.clone());
        }
    }
    let raw = serialize_history(nx, &times, &hist);
    let sol = finish(nx, times, hist, &raw);
    if sol.top_quarter_energy > 1e-8 {
        log::warn!("euler: initial state not band-limited (top-quarter energy share {:.2e})", sol.top_quarter_energy);
    }
    Ok(sol)
}

/// Cache-aware wrapper keyed by a digest of `(ψ̂₀, nx, dt, T, store_every)`.
pub fn solve_euler_cached(cache_dir: &Path, nx: usize, psi0: Vec<f64>, cfg: &EulerConfig) -> Result<EulerSolution> {
    let mut h = Sha256::new();
    for p in &psi0 {
        h.update(p.to_le_bytes());
    }
    h.update((nx as u64).to_le_bytes());
    h.update(cfg.dt.to_le_bytes());
    h.update(cfg.t_end.to_le_bytes());
    h.update((cfg.store_every as u64).to_le_bytes());
    let key = hex::encode(h.finalize());
    let path = cache_dir.join(format!("euler_{}.bin", &key[..16]));
    if path.exists() {
        if let Ok(sol) = EulerSolution::load(&path) {
            return Ok(sol);
        }
    }
    let sol = solve_euler(nx, psi0, cfg)?;
    sol.save(&path)?;
    Ok(sol)
}

/// Cutoff profile applied as `θ(d / w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// `θ(s) = (1-s)³(1+3s)` on [0,1], zero beyond.
    Polynomial,
    /// `θ ≡ 1`: the corrector is the Euler field itself.
    Unit,
}

impl Cutoff {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Cutoff::Unit => 1.0,
            Cutoff::Polynomial => {
                if s >= 1.0 {
                    0.0
                } else {
                    let a = 1.0 - s;
                    a * a * a * (1.0 + 3.0 * s)
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Corrector {
    pub nu: f64,
    pub c_tilde: f64,
    pub width: f64,
    pub cutoff: Cutoff,
    pub domain: Domain,
    pub times: Vec<f64>,
    pub v_history: Vec<VectorGridField>,
    /// Central-difference spacing available for `∂_t v`.
    pub dt: f64,
    dv_history: Vec<Option<VectorGridField>>,
}

fn cutoff_stream(domain: &Domain, psi: &[f64], width: f64, cutoff: Cutoff) -> Vec<f64> {
    let n = domain.nx();
    let h = domain.h();
    let mut out = psi.to_vec();
    for j in 1..n {
        for i in 1..n {
            let d = (i.min(n - i).min(j).min(n - j)) as f64 * h;
            out[domain.node_index(i, j)] *= cutoff.eval(d / width);
        }
    }
    out
}

/// `v_t = curl(θ(d/w) ψ̄_t)` on `domain` at the stored steps `steps`;
/// `∂_t v` is available at steps with both neighbours stored.
pub fn build_corrector(
    sol: &EulerSolution,
    domain: &Domain,
    nu: f64,
    c_tilde: f64,
    cutoff: Cutoff,
    steps: &[usize],
) -> Result<Corrector> {
    let w = (c_tilde * nu).max(0.5 * domain.h());
    if cutoff == Cutoff::Polynomial && w < domain.h() {
        return Err(Error::UnderResolved { width: w, h: domain.h() });
    }
    if domain.nx() < sol.nx {
        return Err(Error::GridMismatch { expected: sol.nx, found: domain.nx() });
    }
    let field = |s: usize| -> VectorGridField {
        let psi = sol.stream_on(&sol.psi_hat[s], domain.nx());
        ops::curl(domain, &cutoff_stream(domain, &psi, w, cutoff))
    };
    let mut times = Vec::new();
    let mut v_history = Vec::new();
    let mut dv_history = Vec::new();
    let dt = if sol.times.len() > 1 { sol.times[1] - sol.times[0] } else { 0.0 };
    for &s in steps {
        if s >= sol.n_stored() {
            return Err(Error::OutOfRange { index: s, limit: sol.n_stored() });
        }
        times.push(sol.times[s]);
        v_history.push(field(s));
        dv_history.push(if s >= 1 && s + 1 < sol.n_stored() {
            let mut d = field(s + 1);
            d.axpy(-1.0, &field(s - 1));
            d.scale(1.0 / (sol.times[s + 1] - sol.times[s - 1]));
            Some(d)
        } else {
            None
        });
    }
    Ok(Corrector { nu, c_tilde, width: w, cutoff, domain: domain.clone(), times, v_history, dt, dv_history })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorNorms {
    pub sup_l2: f64,
    pub sup_w12: f64,
    pub sup_dt: f64,
}

impl Corrector {
    pub fn strip(&self) -> Result<BoundaryStrip> {
        BoundaryStrip::new(&self.domain, self.width)
    }

    /// Central-difference `‖∂_t v‖` per stored time (None at the ends).
    pub fn time_derivative_norm(&self) -> Result<Vec<Option<f64>>> {
        if self.v_history.len() < 2 && self.dv_history.iter().all(|d| d.is_none()) {
            return Err(Error::Euler("time derivative needs at least two stored times".into()));
        }
        Ok(self.dv_history.iter().map(|d| d.as_ref().map(|f| f.norm())).collect())
    }

    pub fn norms(&self) -> Result<CorrectorNorms> {
        let sup_l2 = self.v_history.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let sup_w12 = self
            .v_history
            .iter()
            .map(|v| crate::spectral::w12_norm(&self.domain, v, GradientMode::Free))
            .fold(0.0, f64::max);
        let sup_dt = self.time_derivative_norm()?.into_iter().flatten().fold(0.0, f64::max);
        Ok(CorrectorNorms { sup_l2, sup_w12, sup_dt })
    }

    /// `(⟨L_f f, v_k⟩, ν‖∇f‖²_Γ)` at stored index `k`.
    pub fn pairing(&self, k: usize, f: &VectorGridField) -> Result<(f64, f64)> {
        self.domain.check_nx(f.nx)?;
        let strip = self.strip()?;
        let lff = ops::advect_grid(&self.domain, f, f);
        let pairing = lff.dot(&self.v_history[k]);
        let bound = self.nu * ops::gradient_energy(&self.domain, f, GradientMode::NoSlip, Some(&strip));
        Ok((pairing, bound))
    }
}

/// Divergence-free wall eddy of scale `delta` on the bottom wall:
/// `f = curl φ`, `φ = η(y/δ) B(x) Σ_k r_k sin(kπ(x-x₀+s·y)/δ)` with
/// `η(s) = s²(1-s)²` on [0,1] and a smooth bump `B` of width `8δ` at `x₀`.
/// The tilt `s` gives the eddy a nonzero Reynolds stress `⟨f_x f_y⟩`;
/// untilted eddies cancel against a slowly varying corrector.
pub fn wall_eddy(domain: &Domain, delta: f64, x0: f64, tilt: f64, r: &[f64]) -> VectorGridField {
    let n = domain.nx();
    let h = domain.h();
    let mut psi = vec![0.0; domain.n_interior_nodes()];
    let half = 4.0 * delta;
    for j in 1..n {
        let s = j as f64 * h / delta;
        if s >= 1.0 {
            break;
        }
        let eta = s * s * (1.0 - s) * (1.0 - s);
        for i in 1..n {
            let x = i as f64 * h;
            let z = (x - x0) / half;
            if z.abs() >= 1.0 {
                continue;
            }
            let bump = (1.0 - z * z).powi(3);
            let y = j as f64 * h;
            let osc: f64 =
                r.iter().enumerate().map(|(k, rk)| rk * ((k + 1) as f64 * PI * (x - x0 + tilt * y) / delta).sin()).sum();
            psi[domain.node_index(i, j)] = eta * bump * osc;
        }
    }
    ops::curl(domain, &psi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectorLadder {
    pub grid: usize,
    pub c_tilde: f64,
    pub nus: Vec<f64>,
    pub norms: Vec<CorrectorNorms>,
    /// Max pairing ratio over fields and snapshots, per ν.
    pub pairing_max: Vec<f64>,
    pub slope_l2: LinearFit,
    pub slope_dt: LinearFit,
    pub slope_w12: LinearFit,
    /// `max/min` of `pairing_max` across the ladder.
    pub pairing_spread: f64,
}

/// Corrector estimates along a ν-ladder on an `grid × grid` mesh, with
/// `n_fields` random tilted wall eddies of scale `c̃ν` for the pairing.
pub fn corrector_ladder(
    sol: &EulerSolution,
    grid: usize,
    c_tilde: f64,
    nus: &[f64],
    n_fields: usize,
    seed: u64,
) -> Result<CorrectorLadder> {
    use rand::{Rng, SeedableRng};
    let fine = Domain::new(grid)?;
    if sol.n_stored() < 3 {
        return Err(Error::Euler("corrector ladder needs at least three stored Euler times".into()));
    }
    let stride = ((sol.n_stored() - 2) / 5).max(1);
    let steps: Vec<usize> = (1..sol.n_stored() - 1).step_by(stride).collect();
    let mut norms = Vec::new();
    let mut pairing_max = Vec::new();
    for &nu in nus {
        let cor = build_corrector(sol, &fine, nu, c_tilde, Cutoff::Polynomial, &steps)?;
        norms.push(cor.norms()?);
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut best = 0.0f64;
        for _ in 0..n_fields {
            let r: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let x0 = 0.2 + 0.6 * rng.random::<f64>();
            let tilt = 0.5 + rng.random::<f64>();
            let f = wall_eddy(&fine, cor.width, x0, tilt, &r);
            for k in 0..cor.v_history.len() {
                let (p, b) = cor.pairing(k, &f)?;
                if b > 0.0 {
                    best = best.max(p.abs() / b);
                }
            }
        }
        pairing_max.push(best);
    }
    let fit = |ys: Vec<f64>| stats::loglog_slope(nus, &ys);
    let mx = pairing_max.iter().cloned().fold(0.0, f64::max);
    let mn = pairing_max.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CorrectorLadder {
        grid,
        c_tilde,
        nus: nus.to_vec(),
        slope_l2: fit(norms.iter().map(|n| n.sup_l2).collect())?,
        slope_dt: fit(norms.iter().map(|n| n.sup_dt).collect())?,
        slope_w12: fit(norms.iter().map(|n| n.sup_w12).collect())?,
        norms,
        pairing_max,
        pairing_spread: if mn > 0.0 { mx / mn } else { f64::INFINITY },
    })
}
