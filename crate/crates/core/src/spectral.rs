//! Discrete Leray projector, Stokes eigenbasis and the norm family.

use std::io::{Read, Write};
use std::path::Path;

use log::debug;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{BoundaryStrip, Domain, VectorGridField};
use crate::ops::{self, GradientMode};
use crate::transforms::dct2_matrix;

/// Orthogonal projection onto discretely divergence-free fields with zero
/// normal flux. The Neumann pressure problem is diagonalized exactly by the
/// cell DCT-II.
#[derive(Clone, Debug)]
pub struct LerayProjector {
    domain: Domain,
    q: Vec<f64>,
    eig: Vec<f64>,
}

const POISSON_TOL: f64 = 1e-9;

impl LerayProjector {
    pub fn new(domain: &Domain) -> Self {
        let n = domain.nx();
        let h = domain.h();
        let q = dct2_matrix(n);
        let eig = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
                -4.0 * s * s / (h * h)
            })
            .collect();
        LerayProjector { domain: domain.clone(), q, eig }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Returns `f - ∇p` with `Δp = ∇·f` (Neumann), boundary-normal faces zeroed.
    pub fn project(&self, field: &VectorGridField) -> Result<VectorGridField> {
        self.domain.check_nx(field.nx)?;
        let d = &self.domain;
        let n = d.nx();
        let h = d.h();
        let mut f = field.clone();
        f.clear_boundary_normal();
        let div = f.divergence();
        let scale = div.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return Ok(f);
        }
        // p̂ = Q div Qᵀ / (μ_k + μ_l)
        let q = &self.q;
        let mut tmp = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += q[k * n + i] * div[j * n + i];
                }
                tmp[j * n + k] = s;
            }
        }
        let mut hat = vec![0.0; n * n];
        for l in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += q[l * n + j] * tmp[j * n + k];
                }
                let lam = self.eig[k] + self.eig[l];
                hat[l * n + k] = if k == 0 && l == 0 { 0.0 } else { s / lam };
            }
        }
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += q[l * n + j] * hat[l * n + k];
                }
                tmp[j * n + k] = s;
            }
        }
        let mut p = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += q[k * n + i] * tmp[j * n + k];
                }
                p[j * n + i] = s;
            }
        }
        for j in 0..n {
            for i in 1..n {
                f.u[d.u_index(i, j)] -= (p[j * n + i] - p[j * n + i - 1]) / h;
            }
        }
        for j in 1..n {
            for i in 0..n {
                f.v[d.v_index(i, j)] -= (p[j * n + i] - p[(j - 1) * n + i]) / h;
            }
        }
        let residual = f.max_divergence();
        if residual > POISSON_TOL * scale.max(1.0) {
            return Err(Error::PoissonNonConvergence { residual });
        }
        Ok(f)
    }
}

/// Discrete Stokes operator `A_h f = P(-L_h f)`.
pub fn stokes_apply(leray: &LerayProjector, f: &VectorGridField) -> Result<VectorGridField> {
    let lap = ops::laplacian(leray.domain(), f);
    leray.project(&lap.scaled(-1.0))
}

#[derive(Clone, Debug)]
pub struct SpectralBasis {
    domain: Domain,
    eigenvalues: Vec<f64>,
    fields: Vec<VectorGridField>,
    /// Stream function of each eigenfield at interior nodes.
    streams: Vec<Vec<f64>>,
    leray: LerayProjector,
    digest: String,
}

const CACHE_MAGIC: &[u8; 8] = b"KLBASIS\0";
const CACHE_VERSION: u64 = 1;

impl SpectralBasis {
    /// Dense generalized eigensolve `Cᵀ(-L_h)C y = λ CᵀC y` on stream functions.
    pub fn build(domain: &Domain, n_modes: usize) -> Result<Self> {
        let dim = domain.divergence_free_dim();
        if n_modes == 0 || n_modes > dim {
            return Err(Error::config(format!(
                "n_modes = {n_modes} must lie in 1..={dim} (divergence-free subspace dimension for nx = {})",
                domain.nx()
            )));
        }
        let mut k = DMatrix::<f64>::zeros(dim, dim);
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        for c in 0..dim {
            e[c] = 1.0;
            let f = ops::curl(domain, &e);
            let mcol = ops::curl_adjoint(domain, &f);
            let kcol = ops::curl_adjoint(domain, &ops::laplacian(domain, &f).scaled(-1.0));
            for r in 0..dim {
                m[(r, c)] = mcol[r];
                k[(r, c)] = kcol[r];
            }
            e[c] = 0.0;
        }
        // symmetrize against rounding
        let k = (&k + k.transpose()) * 0.5;
        let m = (&m + m.transpose()) * 0.5;
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Eigensolver("curl Gram matrix not positive definite".into()))?;
        let l = chol.l();
        // S = L⁻¹ K L⁻ᵀ
        let linv_k = l
            .solve_lower_triangular(&k)
            .ok_or_else(|| Error::Eigensolver("triangular solve failed".into()))?;
        let s = l
            .solve_lower_triangular(&linv_k.transpose())
            .ok_or_else(|| Error::Eigensolver("triangular solve failed".into()))?;
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(s, 1e-14, 0)
            .ok_or_else(|| Error::Eigensolver("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let lt = l.transpose();
        let mut eigenvalues = Vec::with_capacity(n_modes);
        let mut fields = Vec::with_capacity(n_modes);
        let mut streams = Vec::with_capacity(n_modes);
        for &idx in order.iter().take(n_modes) {
            let lam = eig.eigenvalues[idx];
            if !(lam > 0.0) {
                return Err(Error::Eigensolver(format!("non-positive eigenvalue {lam}")));
            }
            let z = eig.eigenvectors.column(idx).into_owned();
            let y = lt
                .solve_upper_triangular(&z)
                .ok_or_else(|| Error::Eigensolver("back substitution failed".into()))?;
            let mut psi: Vec<f64> = y.iter().copied().collect();
            let big = psi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let first = psi.iter().find(|x| x.abs() > 1e-8 * big).copied().unwrap_or(1.0);
            if first < 0.0 {
                psi.iter_mut().for_each(|x| *x = -*x);
            }
            let f = ops::curl(domain, &psi);
            let norm = f.norm();
            psi.iter_mut().for_each(|x| *x /= norm);
            eigenvalues.push(lam);
            fields.push(ops::curl(domain, &psi));
            streams.push(psi);
        }
        debug!("basis nx={} n_modes={} λ₁={:.6}", domain.nx(), n_modes, eigenvalues[0]);
        let mut basis = SpectralBasis {
            domain: domain.clone(),
            eigenvalues,
            fields,
            streams,
            leray: LerayProjector::new(domain),
            digest: String::new(),
        };
        basis.digest = hex::encode(Sha256::digest(basis.to_bytes()));
        Ok(basis)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn field(&self, k: usize) -> &VectorGridField {
        &self.fields[k]
    }

    pub fn stream(&self, k: usize) -> &[f64] {
        &self.streams[k]
    }

    pub fn leray(&self) -> &LerayProjector {
        &self.leray
    }

    /// Hex SHA-256 of the cache serialization.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// `⟨a_k, f⟩` for the first `n` modes.
    pub fn coefficients(&self, f: &VectorGridField, n: usize) -> Vec<f64> {
        self.fields[..n].iter().map(|a| a.dot(f)).collect()
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> VectorGridField {
        let mut out = VectorGridField::zeros(&self.domain);
        for (c, a) in coeffs.iter().zip(&self.fields) {
            if *c != 0.0 {
                out.axpy(*c, a);
            }
        }
        out
    }

    /// Stream function Σ c_k ψ_k at interior nodes.
    pub fn reconstruct_stream(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.n_interior_nodes()];
        for (c, s) in coeffs.iter().zip(&self.streams) {
            for (o, x) in out.iter_mut().zip(s) {
                *o += c * x;
            }
        }
        out
    }

    pub fn velocity(&self, coeffs: Vec<f64>) -> Result<VelocityField> {
        VelocityField::new(self, coeffs)
    }

    /// Orthogonal projection of an arbitrary face field onto the span.
    pub fn project_grid(&self, f: &VectorGridField) -> Result<VelocityField> {
        self.domain.check_nx(f.nx)?;
        VelocityField::new(self, self.coefficients(f, self.n_modes()))
    }

    pub fn h1_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().zip(&self.eigenvalues).map(|(c, l)| l * c * c).sum()
    }

    /// `Σ λ_k² c_k²`, the discrete `W^{2,2}`-type seminorm squared.
    pub fn h2_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().zip(&self.eigenvalues).map(|(c, l)| l * l * c * c).sum()
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CACHE_MAGIC);
        for v in [CACHE_VERSION, self.domain.nx() as u64, self.n_modes() as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.eigenvalues {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for s in &self.streams {
            for v in s {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    /// Loads a cache written by [`save`](Self::save); eigenfields are
    /// regenerated from the stored stream functions bit-exactly.
    pub fn load(path: &Path, nx: usize, n_modes: usize) -> Result<Self> {
        let bad = |reason: &str| Error::Cache { path: path.display().to_string(), reason: reason.into() };
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 32 || &bytes[..8] != CACHE_MAGIC {
            return Err(bad("bad magic"));
        }
        let word = |k: usize| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap());
        if word(0) != CACHE_VERSION {
            return Err(bad("format version"));
        }
        if word(1) as usize != nx || word(2) as usize != n_modes {
            return Err(bad("key mismatch"));
        }
        let domain = Domain::new(nx)?;
        let dim = domain.n_interior_nodes();
        if bytes.len() != 32 + 8 * (n_modes + n_modes * dim) {
            return Err(bad("truncated"));
        }
        let mut floats = bytes[32..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let eigenvalues: Vec<f64> = floats.by_ref().take(n_modes).collect();
        let mut streams = Vec::with_capacity(n_modes);
        let mut fields = Vec::with_capacity(n_modes);
        for _ in 0..n_modes {
            let s: Vec<f64> = floats.by_ref().take(dim).collect();
            fields.push(ops::curl(&domain, &s));
            streams.push(s);
        }
        let digest = hex::encode(Sha256::digest(&bytes));
        Ok(SpectralBasis { leray: LerayProjector::new(&domain), domain, eigenvalues, fields, streams, digest })
    }

    /// Cache-aware construction, file name keyed by `(nx, n_modes, version)`.
    pub fn load_or_build(cache_dir: &Path, domain: &Domain, n_modes: usize) -> Result<Self> {
        let path = cache_dir.join(format!("basis_nx{}_m{}_v{}.bin", domain.nx(), n_modes, CACHE_VERSION));
        if path.exists() {
            match Self::load(&path, domain.nx(), n_modes) {
                Ok(b) => return Ok(b),
                Err(e) => log::warn!("ignoring basis cache: {e}"),
            }
        }
        let basis = Self::build(domain, n_modes)?;
        basis.save(&path)?;
        Ok(basis)
    }
}

/// A divergence-free state carried both as Stokes coefficients and on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub coeffs: Vec<f64>,
    pub grid: VectorGridField,
}

impl VelocityField {
    pub fn new(basis: &SpectralBasis, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > basis.n_modes() {
            return Err(Error::OutOfRange { index: coeffs.len(), limit: basis.n_modes() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidField("non-finite coefficient".into()));
        }
        coeffs.resize(basis.n_modes(), 0.0);
        let grid = basis.reconstruct(&coeffs);
        Ok(VelocityField { coeffs, grid })
    }

    pub fn zero(basis: &SpectralBasis) -> Self {
        VelocityField { coeffs: vec![0.0; basis.n_modes()], grid: VectorGridField::zeros(basis.domain()) }
    }

    pub fn l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// `P_n`: keeps the first `n` coefficients.
pub fn project_n(basis: &SpectralBasis, field: &VelocityField, n: usize) -> Result<VelocityField> {
    if n > basis.n_modes() {
        return Err(Error::OutOfRange { index: n, limit: basis.n_modes() });
    }
    let mut c = field.coeffs.clone();
    c[n..].iter_mut().for_each(|x| *x = 0.0);
    VelocityField::new(basis, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub h1: f64,
    pub w12: f64,
    pub strip_grad: f64,
}

pub fn norms(basis: &SpectralBasis, field: &VelocityField, strip: Option<&BoundaryStrip>) -> NormReport {
    let d = basis.domain();
    let l2 = field.l2();
    let h1 = basis.h1_sq(&field.coeffs).sqrt();
    let grad = ops::gradient_energy(d, &field.grid, GradientMode::NoSlip, None);
    let w12 = (field.grid.norm_sq() + grad).sqrt();
    let strip_grad = match strip {
        Some(s) => ops::gradient_energy(d, &field.grid, GradientMode::NoSlip, Some(s)).sqrt(),
        None => grad.sqrt(),
    };
    NormReport { l2, h1, w12, strip_grad }
}

/// `‖f‖_{L⁴}` with the two components averaged to cell centers.
pub fn l4_norm(domain: &Domain, f: &VectorGridField) -> f64 {
    let n = domain.nx();
    let h = domain.h();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            let u = 0.5 * (f.u[domain.u_index(i, j)] + f.u[domain.u_index(i + 1, j)]);
            let v = 0.5 * (f.v[domain.v_index(i, j)] + f.v[domain.v_index(i, j + 1)]);
            let m = u * u + v * v;
            s += m * m;
        }
    }
    (s * h * h).powf(0.25)
}

/// Grid `W^{1,2}` norm of an arbitrary face field.
pub fn w12_norm(domain: &Domain, f: &VectorGridField, mode: GradientMode) -> f64 {
    (f.norm_sq() + ops::gradient_energy(domain, f, mode, None)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_faces(d: &Domain, rng: &mut ChaCha8Rng) -> VectorGridField {
        let mut f = VectorGridField::zeros(d);
        f.u.iter_mut().chain(f.v.iter_mut()).for_each(|x| *x = rng.random::<f64>() - 0.5);
        f.clear_boundary_normal();
        f
    }

    #[test]
    fn leray_projects_and_is_self_adjoint() {
        let d = Domain::new(12).unwrap();
        let p = LerayProjector::new(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_faces(&d, &mut rng);
        let g = random_faces(&d, &mut rng);
        let pf = p.project(&f).unwrap();
        let pg = p.project(&g).unwrap();
        assert!(pf.max_divergence() < 1e-12);
        assert!(p.project(&pf).unwrap().sub(&pf).max_abs() < 1e-12);
        assert!((pf.dot(&g) - f.dot(&pg)).abs() < 1e-12);
    }

    #[test]
    fn leray_kills_gradients() {
        let d = Domain::new(16).unwrap();
        let p = LerayProjector::new(&d);
        let h = d.h();
        let n = d.nx();
        let phi = |i: usize, j: usize| {
            let x = (i as f64 + 0.5) * h;
            let y = (j as f64 + 0.5) * h;
            (3.0 * x).cos() * (y * y)
        };
        let mut g = VectorGridField::zeros(&d);
        for j in 0..n {
            for i in 1..n {
                g.u[d.u_index(i, j)] = (phi(i, j) - phi(i - 1, j)) / h;
            }
        }
        for j in 1..n {
            for i in 0..n {
                g.v[d.v_index(i, j)] = (phi(i, j) - phi(i, j - 1)) / h;
            }
        }
        assert!(p.project(&g).unwrap().norm() < 1e-10);
    }

    #[test]
    fn small_basis_properties() {
        let d = Domain::new(8).unwrap();
        let b = SpectralBasis::build(&d, 12).unwrap();
        for w in b.eigenvalues().windows(2) {
            assert!(w[0] <= w[1]);
        }
        for i in 0..12 {
            for j in 0..12 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((b.field(i).dot(b.field(j)) - e).abs() < 1e-10);
            }
            let r = stokes_apply(b.leray(), b.field(i)).unwrap();
            let res = r.sub(&b.field(i).scaled(b.eigenvalues()[i])).norm();
            assert!(res < 1e-8, "mode {i}: residual {res}");
        }
        assert!(SpectralBasis::build(&d, 50).is_err());
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let d = Domain::new(8).unwrap();
        let b = SpectralBasis::build(&d, 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.bin");
        b.save(&path).unwrap();
        let c = SpectralBasis::load(&path, 8, 6).unwrap();
        assert_eq!(b.eigenvalues(), c.eigenvalues());
        for k in 0..6 {
            assert_eq!(b.field(k), c.field(k));
        }
        assert_eq!(b.digest(), c.digest());
        assert!(SpectralBasis::load(&path, 8, 5).is_err());
    }

    #[test]
    fn norms_of_eigenfield_and_zero() {
        let d = Domain::new(8).unwrap();
        let b = SpectralBasis::build(&d, 4).unwrap();
        let a1 = b.velocity(vec![1.0]).unwrap();
        let r = norms(&b, &a1, None);
        assert!((r.l2 - 1.0).abs() < 1e-12);
        assert!((r.h1 - b.eigenvalues()[0].sqrt()).abs() < 1e-12);
        assert!((r.strip_grad - r.h1).abs() < 1e-9 * r.h1);
        let z = norms(&b, &VelocityField::zero(&b), None);
        assert_eq!((z.l2, z.h1, z.w12, z.strip_grad), (0.0, 0.0, 0.0, 0.0));
    }
}
