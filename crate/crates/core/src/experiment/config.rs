//! TOML experiment configuration with documented defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::noise::{NoiseConfig, NoiseKind};
use crate::sde::{SdeConfig, StopMode};

/// A scalar or a list in the file; always a list after parsing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub nx: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisBlock {
    pub n_modes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseBlock {
    pub kind: NoiseKind,
    pub n_noise: usize,
    pub a0: f64,
    pub decay: f64,
    /// Seed of the random additive profiles.
    pub profile_seed: u64,
}

impl Default for NoiseBlock {
    fn default() -> Self {
        NoiseBlock { kind: NoiseKind::TransportStratonovich, n_noise: 8, a0: 0.5, decay: 2.0, profile_seed: 0 }
    }
}

impl NoiseBlock {
    pub fn to_noise_config(&self) -> NoiseConfig {
        NoiseConfig { kind: self.kind, n_noise: self.n_noise, a0: self.a0, decay: self.decay, seed: self.profile_seed }
    }
}

fn default_alpha() -> OneOrMany {
    OneOrMany::One(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeBlock {
    pub nu: OneOrMany,
    #[serde(default = "default_alpha")]
    pub alpha: OneOrMany,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default = "d_m")]
    pub m_threshold: f64,
    #[serde(default = "d_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_stop")]
    pub stop_mode: StopMode,
}

fn d_dt() -> f64 {
    0.005
}
fn d_t_end() -> f64 {
    0.5
}
fn d_m() -> f64 {
    10.0
}
fn d_paths() -> usize {
    64
}
fn d_stop() -> StopMode {
    StopMode::Record
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialBlock {
    /// `c_k ∝ 1/k` for `k ≤ modes`.
    pub modes: usize,
    /// `‖u₀‖²`.
    pub energy: f64,
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock { modes: 4, energy: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EulerBlock {
    pub dt: f64,
}

impl Default for EulerBlock {
    fn default() -> Self {
        EulerBlock { dt: 0.0025 }
    }
}

pub const STANDARD_LADDER: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsBlock {
    pub c_tilde: Vec<f64>,
    /// Number of Stokes eigenfields in the item-2 panel.
    pub panel: usize,
    pub audit_samples: usize,
    pub corrector_grid: usize,
    pub corrector_ladder: Vec<f64>,
    pub pairing_fields: usize,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        DiagnosticsBlock {
            c_tilde: vec![1.0],
            panel: 8,
            audit_samples: 200,
            corrector_grid: 512,
            corrector_ladder: STANDARD_LADDER.to_vec(),
            pairing_fields: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: String,
    /// `report.json` is always written; `"csv"` adds `report.csv`.
    pub formats: Vec<String>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: "out".into(), formats: vec!["json".into(), "csv".into()] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DebugBlock {
    /// Poisons the first path of this sweep point (ν-major index).
    pub inject_nan_at_point: Option<usize>,
    pub inject_nan_at_step: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainBlock,
    pub basis: BasisBlock,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    pub sde: SdeBlock,
    #[serde(default)]
    pub euler: EulerBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub debug: DebugBlock,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn nus(&self) -> Vec<f64> {
        self.sde.nu.values()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.sde.alpha.values()
    }

    /// SHA-256 of the canonical JSON form (defaults filled), with
    /// `output.dir` blanked so the run location does not enter the report.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output.dir.clear();
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("config serializes")))
    }

    pub fn sde_config(&self) -> SdeConfig {
        let nu = self.nus()[0];
        let mut c = SdeConfig::new(nu, self.basis.n_modes, self.sde.dt, self.sde.t_end);
        c.m_threshold = self.sde.m_threshold;
        c.seed = self.sde.seed;
        c.stop_mode = self.sde.stop_mode;
        c
    }

    /// Every violated constraint, one per line.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        let nx = self.domain.nx;
        if nx < 8 || nx % 2 != 0 {
            errs.push(format!("domain.nx must be even and ≥ 8 (got {nx})"));
        }
        let dim = nx.saturating_sub(1).pow(2);
        if self.basis.n_modes == 0 || self.basis.n_modes > dim {
            errs.push(format!(
                "basis.n_modes = {} outside 1..={dim} (dimension of the discrete divergence-free subspace)",
                self.basis.n_modes
            ));
        }
        if self.noise.n_noise == 0 {
            errs.push("noise.n_noise must be ≥ 1".into());
        }
        if !(self.noise.a0 >= 0.0) || !self.noise.a0.is_finite() {
            errs.push(format!("noise.a0 must be ≥ 0 (got {})", self.noise.a0));
        }
        if !(self.noise.decay >= 0.0) {
            errs.push(format!("noise.decay must be ≥ 0 (got {})", self.noise.decay));
        }
        if self.initial.modes == 0 || self.initial.modes > self.basis.n_modes {
            errs.push(format!("initial.modes must lie in 1..=basis.n_modes (got {})", self.initial.modes));
        }
        if !(self.initial.energy > 0.0) {
            errs.push(format!("initial.energy must be > 0 (got {})", self.initial.energy));
        }
        let nus = self.nus();
        if nus.is_empty() {
            errs.push("sde.nu ladder is empty".into());
        }
        for nu in &nus {
            if !(*nu > 0.0 && *nu < 1.0) {
                errs.push(format!("sde.nu value {nu} outside (0, 1)"));
            }
        }
        for w in nus.windows(2) {
            if !(w[0] > w[1]) {
                errs.push(format!("sde.nu ladder must decrease strictly: pair ({}, {})", w[0], w[1]));
            }
        }
        let alphas = self.alphas();
        if alphas.is_empty() {
            errs.push("sde.alpha list is empty".into());
        }
        for a in &alphas {
            if !(*a >= 0.5 && *a <= 2.0) {
                errs.push(format!("sde.alpha value {a} outside [0.5, 2]"));
            }
        }
        if self.sde.paths < 2 {
            errs.push(format!("sde.paths must be ≥ 2 (got {})", self.sde.paths));
        }
        let mut probe = self.sde_config();
        probe.nu = 0.5;
        if let Err(Error::Config(m)) = probe.validate() {
            errs.extend(m.split("; ").map(|s| format!("sde: {s}")));
        }
        if !(self.euler.dt > 0.0) {
            errs.push(format!("euler.dt must be > 0 (got {})", self.euler.dt));
        }
        let dg = &self.diagnostics;
        if dg.c_tilde.is_empty() {
            errs.push("diagnostics.c_tilde is empty".into());
        }
        if dg.c_tilde.iter().any(|c| !(*c > 0.0)) {
            errs.push("diagnostics.c_tilde values must be > 0".into());
        }
        if dg.panel > self.basis.n_modes {
            errs.push(format!("diagnostics.panel = {} exceeds basis.n_modes", dg.panel));
        }
        if dg.audit_samples < 10 {
            errs.push(format!("diagnostics.audit_samples must be ≥ 10 (got {})", dg.audit_samples));
        }
        if dg.corrector_grid < nx || dg.corrector_grid % 2 != 0 {
            errs.push(format!("diagnostics.corrector_grid must be even and ≥ domain.nx (got {})", dg.corrector_grid));
        }
        if dg.corrector_ladder.len() < 4 {
            errs.push("diagnostics.corrector_ladder needs ≥ 4 points".into());
        }
        for w in dg.corrector_ladder.windows(2) {
            if !(w[0] > w[1]) {
                errs.push(format!("diagnostics.corrector_ladder must decrease strictly: pair ({}, {})", w[0], w[1]));
            }
        }
        for f in &self.output.formats {
            if f != "json" && f != "csv" {
                errs.push(format!("output.formats: unknown format {f:?} (json, csv)"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("\n")))
        }
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}:\n{m}", path.display())),
        other => other,
    })
}
