//! Noise operators `G_i`, their Itô partners `Q_i`, and adjoints.

mod audit;

pub use audit::{audit_assumptions, neutrality_defects, normalize_amplitudes, AssumptionAudit, AssumptionRecord};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, VectorGridField};
use crate::ops::{self, SparseOp};
use crate::spectral::{LerayProjector, SpectralBasis, VelocityField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Additive,
    Multiplicative,
    TransportIto,
    TransportStratonovich,
    Salt,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Additive => "additive",
            NoiseKind::Multiplicative => "multiplicative",
            NoiseKind::TransportIto => "transport_ito",
            NoiseKind::TransportStratonovich => "transport_stratonovich",
            NoiseKind::Salt => "salt",
        }
    }

    /// True iff `Q_i ≠ 0`.
    pub fn has_correction(self) -> bool {
        matches!(self, NoiseKind::TransportStratonovich | NoiseKind::Salt)
    }

    pub fn is_linear(self) -> bool {
        self != NoiseKind::Additive
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default = "default_n_noise")]
    pub n_noise: usize,
    #[serde(default = "default_a0")]
    pub a0: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    /// Seed for the random spatial profiles of additive noise.
    #[serde(default)]
    pub seed: u64,
}

fn default_n_noise() -> usize {
    8
}
fn default_a0() -> f64 {
    0.5
}
fn default_decay() -> f64 {
    2.0
}

impl NoiseConfig {
    pub fn new(kind: NoiseKind, n_noise: usize, a0: f64) -> Self {
        NoiseConfig { kind, n_noise, a0, decay: default_decay(), seed: 0 }
    }
}

/// Number of low modes the additive profiles are drawn from.
const ADDITIVE_MODES: usize = 16;

/// Which Itô correction the Galerkin system carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionForm {
    /// `Σ (P_n P G_i)²`: the Itô form of the projected Stratonovich system.
    Galerkin,
    /// `Σ P_n P Q_i²`: the projection of the full-space correction.
    Full,
}

/// The spatial data ξ_i (transport kinds) and amplitudes σ_i.
#[derive(Clone, Debug)]
pub struct CorrelationFields {
    pub xi: Vec<VelocityField>,
    pub amplitudes: Vec<f64>,
}

impl CorrelationFields {
    /// `Σ_i ‖ξ_i‖²_{W^{2,∞}}` with sup norms of values and first and second
    /// differences on the grid.
    pub fn w2inf_sum(&self, domain: &Domain) -> f64 {
        self.xi.iter().map(|x| w2inf(domain, &x.grid).powi(2)).sum()
    }
}

fn w2inf(domain: &Domain, f: &VectorGridField) -> f64 {
    let n = domain.nx();
    let h = domain.h();
    let mut m = f.max_abs();
    let comp = |vals: &[f64], nxc: usize, nyc: usize| -> f64 {
        let at = |i: usize, j: usize| vals[j * nxc + i];
        let mut d1 = 0.0f64;
        let mut d2 = 0.0f64;
        for j in 0..nyc {
            for i in 0..nxc {
                if i + 1 < nxc {
                    d1 = d1.max((at(i + 1, j) - at(i, j)).abs() / h);
                }
                if j + 1 < nyc {
                    d1 = d1.max((at(i, j + 1) - at(i, j)).abs() / h);
                }
                if i > 0 && i + 1 < nxc {
                    d2 = d2.max((at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)).abs() / (h * h));
                }
                if j > 0 && j + 1 < nyc {
                    d2 = d2.max((at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)).abs() / (h * h));
                }
            }
        }
        d1 + d2
    };
    m += comp(&f.u, n + 1, n).max(comp(&f.v, n, n + 1));
    m
}

/// Parts of `Q_i* f`: support-preserving `𝒜_i f` and bounded `𝒜̂_i f`.
#[derive(Clone, Debug)]
pub struct AdjointParts {
    pub support: VectorGridField,
    pub bounded: VectorGridField,
}

impl AdjointParts {
    pub fn total(&self) -> VectorGridField {
        let mut t = self.support.clone();
        t.axpy(1.0, &self.bounded);
        t
    }
}

#[derive(Clone, Debug)]
pub struct NoiseModel {
    pub config: NoiseConfig,
    domain: Domain,
    leray: LerayProjector,
    pub amplitudes: Vec<f64>,
    correlations: Option<CorrelationFields>,
    additive: Vec<VectorGridField>,
    advect: Vec<SparseOp>,
    stretch: Vec<SparseOp>,
    stretch_t: Vec<SparseOp>,
}

impl NoiseModel {
    pub fn new(basis: &SpectralBasis, config: &NoiseConfig) -> Result<Self> {
        let domain = basis.domain().clone();
        if config.n_noise == 0 {
            return Err(Error::config("noise.n_noise must be ≥ 1"));
        }
        if !(config.a0 >= 0.0) || !config.a0.is_finite() {
            return Err(Error::config(format!("noise.a0 must be finite and ≥ 0 (got {})", config.a0)));
        }
        let amplitudes: Vec<f64> =
            (1..=config.n_noise).map(|i| config.a0 * (i as f64).powf(-config.decay)).collect();
        let mut model = NoiseModel {
            config: config.clone(),
            leray: basis.leray().clone(),
            domain: domain.clone(),
            amplitudes: amplitudes.clone(),
            correlations: None,
            additive: Vec::new(),
            advect: Vec::new(),
            stretch: Vec::new(),
            stretch_t: Vec::new(),
        };
        match config.kind {
            NoiseKind::Additive => {
                let modes = ADDITIVE_MODES.min(basis.n_modes());
                let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
                for _ in 0..config.n_noise {
                    let mut c: Vec<f64> = (0..modes).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                    c.iter_mut().for_each(|x| *x /= norm);
                    model.additive.push(basis.reconstruct(&c));
                }
            }
            NoiseKind::Multiplicative => {}
            NoiseKind::TransportIto | NoiseKind::TransportStratonovich | NoiseKind::Salt => {
                if config.n_noise > basis.n_modes() {
                    return Err(Error::config(format!(
                        "noise.n_noise = {} exceeds n_modes = {}",
                        config.n_noise,
                        basis.n_modes()
                    )));
                }
                let mut xi = Vec::with_capacity(config.n_noise);
                for (i, &s) in amplitudes.iter().enumerate() {
                    let mut c = vec![0.0; i + 1];
                    c[i] = s;
                    let f = basis.velocity(c)?;
                    model.advect.push(ops::advection_matrix(&domain, &f.grid));
                    if config.kind == NoiseKind::Salt {
                        let t = ops::salt_stretch_matrix(&domain, &f.grid);
                        model.stretch_t.push(t.transpose());
                        model.stretch.push(t);
                    }
                    xi.push(f);
                }
                model.correlations = Some(CorrelationFields { xi, amplitudes: amplitudes.clone() });
            }
        }
        Ok(model)
    }

    pub fn kind(&self) -> NoiseKind {
        self.config.kind
    }

    pub fn n_noise(&self) -> usize {
        self.config.n_noise
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn ito_correction_enabled(&self) -> bool {
        self.kind().has_correction()
    }

    pub fn correlations(&self) -> Option<&CorrelationFields> {
        self.correlations.as_ref()
    }

    fn check_mode(&self, i: usize) -> Result<()> {
        if i >= self.n_noise() {
            return Err(Error::OutOfRange { index: i, limit: self.n_noise() });
        }
        Ok(())
    }

    /// The operator entering the assumptions: `P L_ξ` for transport kinds,
    /// the unprojected `B_i` for SALT.
    pub fn g_raw(&self, i: usize, f: &VectorGridField) -> Result<VectorGridField> {
        self.check_mode(i)?;
        let d = &self.domain;
        Ok(match self.kind() {
            NoiseKind::Additive => self.additive[i].scaled(self.amplitudes[i]),
            NoiseKind::Multiplicative => self.leray.project(f)?.scaled(self.amplitudes[i]),
            NoiseKind::TransportIto | NoiseKind::TransportStratonovich => {
                self.leray.project(&self.advect[i].apply_field(d, f))?
            }
            NoiseKind::Salt => {
                let mut b = self.advect[i].apply_field(d, f);
                b.axpy(1.0, &self.stretch[i].apply_field(d, f));
                b
            }
        })
    }

    /// `P G_i f` on the grid.
    pub fn apply_grid(&self, i: usize, f: &VectorGridField) -> Result<VectorGridField> {
        let g = self.g_raw(i, f)?;
        match self.kind() {
            NoiseKind::Salt => self.leray.project(&g),
            _ => Ok(g),
        }
    }

    /// `G_i u` projected into the basis span.
    pub fn apply_noise_mode(&self, basis: &SpectralBasis, i: usize, u: &VelocityField) -> Result<VelocityField> {
        let g = self.apply_grid(i, &u.grid)?;
        basis.project_grid(&g)
    }

    fn unsupported(&self, what: &str) -> Error {
        Error::UnsupportedNoise { kind: self.kind().name().into(), what: what.into() }
    }

    /// `Q_i f`: `P L_ξ f` (Stratonovich transport) or `B_i f` (SALT).
    pub fn apply_q(&self, i: usize, f: &VectorGridField) -> Result<VectorGridField> {
        match self.kind() {
            NoiseKind::TransportStratonovich | NoiseKind::Salt => self.g_raw(i, f),
            _ => Err(self.unsupported("Q_i = 0")),
        }
    }

    /// `Σ_i P Q_i(Q_i u)`.
    pub fn ito_correction(&self, u: &VectorGridField) -> Result<VectorGridField> {
        if !self.ito_correction_enabled() {
            return Err(self.unsupported("Itô correction requires Q_i ≠ 0"));
        }
        let mut acc = VectorGridField::zeros(&self.domain);
        for i in 0..self.n_noise() {
            let q = self.apply_q(i, u)?;
            acc.axpy(1.0, &self.apply_q(i, &q)?);
        }
        self.leray.project(&acc)
    }

    /// `Q_i* f = 𝒜_i f + 𝒜̂_i f`.
    pub fn apply_adjoint(&self, i: usize, f: &VectorGridField) -> Result<AdjointParts> {
        self.check_mode(i)?;
        let d = &self.domain;
        match self.kind() {
            NoiseKind::TransportStratonovich => {
                // (P L)ᵀ = -L P; split -L f and -L (P f - f)
                let support = self.advect[i].apply_field(d, f).scaled(-1.0);
                let pf = self.leray.project(f)?;
                let bounded = self.advect[i].apply_field(d, &pf.sub(f)).scaled(-1.0);
                Ok(AdjointParts { support, bounded })
            }
            NoiseKind::Salt => {
                let support = self.advect[i].apply_field(d, f).scaled(-1.0);
                let bounded = self.stretch_t[i].apply_field(d, f);
                Ok(AdjointParts { support, bounded })
            }
            _ => Err(self.unsupported("no adjoint for Q_i = 0")),
        }
    }
}

/// Noise operators restricted to the first `n` Stokes modes.
#[derive(Clone, Debug)]
pub struct GalerkinNoise {
    pub n: usize,
    pub kind: NoiseKind,
    /// Row-major `n×n` matrices `⟨a_k, P G_i a_l⟩` (linear kinds).
    pub mats: Vec<Vec<f64>>,
    /// `⟨a_k, G_i⟩` for additive noise.
    pub vecs: Vec<Vec<f64>>,
    /// Itô correction matrix (zero when `Q_i = 0`).
    pub correction: Vec<f64>,
    pub form: CorrectionForm,
}

impl GalerkinNoise {
    pub fn new(basis: &SpectralBasis, model: &NoiseModel, n: usize, form: CorrectionForm) -> Result<Self> {
        if n == 0 || n > basis.n_modes() {
            return Err(Error::OutOfRange { index: n, limit: basis.n_modes() });
        }
        basis.domain().check_same(model.domain())?;
        let k = model.n_noise();
        let mut mats = Vec::new();
        let mut vecs = Vec::new();
        if model.kind().is_linear() {
            for i in 0..k {
                let mut m = vec![0.0; n * n];
                for l in 0..n {
                    let g = model.apply_grid(i, basis.field(l))?;
                    for (r, c) in basis.coefficients(&g, n).into_iter().enumerate() {
                        m[r * n + l] = c;
                    }
                }
                mats.push(m);
            }
        } else {
            for i in 0..k {
                let g = model.apply_grid(i, basis.field(0))?;
                vecs.push(basis.coefficients(&g, n));
            }
        }
        let mut correction = vec![0.0; n * n];
        if model.ito_correction_enabled() {
            match form {
                CorrectionForm::Galerkin => {
                    for m in &mats {
                        for r in 0..n {
                            for c in 0..n {
                                let mut s = 0.0;
                                for q in 0..n {
                                    s += m[r * n + q] * m[q * n + c];
                                }
                                correction[r * n + c] += s;
                            }
                        }
                    }
                }
                CorrectionForm::Full => {
                    for l in 0..n {
                        let g = model.ito_correction(basis.field(l))?;
                        for (r, c) in basis.coefficients(&g, n).into_iter().enumerate() {
                            correction[r * n + l] = c;
                        }
                    }
                }
            }
        }
        Ok(GalerkinNoise { n, kind: model.kind(), mats, vecs, correction, form })
    }

    pub fn n_noise(&self) -> usize {
        self.mats.len().max(self.vecs.len())
    }

    /// `(P_n P G_i u)` in coefficients.
    pub fn apply(&self, i: usize, c: &[f64], out: &mut [f64]) {
        let n = self.n;
        if let Some(m) = self.mats.get(i) {
            for r in 0..n {
                let row = &m[r * n..(r + 1) * n];
                out[r] = row.iter().zip(c).map(|(a, b)| a * b).sum();
            }
        } else {
            out[..n].copy_from_slice(&self.vecs[i]);
        }
    }

    pub fn apply_correction(&self, c: &[f64], out: &mut [f64]) {
        let n = self.n;
        for r in 0..n {
            out[r] = self.correction[r * n..(r + 1) * n].iter().zip(c).map(|(a, b)| a * b).sum();
        }
    }
}
