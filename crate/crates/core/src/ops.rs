//! Staggered-grid difference operators.
//!
//! Face fields are flattened as `[u..., v...]` when a linear operator is
//! stored as a sparse matrix.

use crate::grid::{BoundaryStrip, Domain, VectorGridField};

/// Stream function at interior nodes to face velocities,
/// `u = ∂_y ψ`, `v = -∂_x ψ`, with ψ = 0 on the boundary nodes.
pub fn curl(domain: &Domain, psi: &[f64]) -> VectorGridField {
    let n = domain.nx();
    let h = domain.h();
    let p = |i: usize, j: usize| -> f64 {
        if i == 0 || j == 0 || i == n || j == n {
            0.0
        } else {
            psi[domain.node_index(i, j)]
        }
    };
    let mut out = VectorGridField::zeros(domain);
    for j in 0..n {
        for i in 1..n {
            out.u[domain.u_index(i, j)] = (p(i, j + 1) - p(i, j)) / h;
        }
    }
    for j in 1..n {
        for i in 0..n {
            out.v[domain.v_index(i, j)] = -(p(i + 1, j) - p(i, j)) / h;
        }
    }
    out
}

/// Adjoint of [`curl`] between the face inner product (weight h²) and the
/// plain Euclidean product on node values.
pub fn curl_adjoint(domain: &Domain, f: &VectorGridField) -> Vec<f64> {
    let n = domain.nx();
    let h = domain.h();
    let mut out = vec![0.0; domain.n_interior_nodes()];
    // ⟨Cψ, f⟩_h = h Σ_u (ψ(i,j+1) - ψ(i,j)) f_u - h Σ_v (ψ(i+1,j) - ψ(i,j)) f_v
    for j in 1..n {
        for i in 1..n {
            let below = f.u[domain.u_index(i, j - 1)];
            let above = f.u[domain.u_index(i, j)];
            let left = f.v[domain.v_index(i - 1, j)];
            let right = f.v[domain.v_index(i, j)];
            out[domain.node_index(i, j)] = h * (below - above - left + right);
        }
    }
    out
}

/// Face Laplacian with no-slip ghost values (`u_{-1} = -u_0` across walls).
/// Boundary-normal faces return zero.
pub fn laplacian(domain: &Domain, f: &VectorGridField) -> VectorGridField {
    let n = domain.nx();
    let h2 = domain.h() * domain.h();
    let mut out = VectorGridField::zeros(domain);
    for j in 0..n {
        for i in 1..n {
            let c = f.u[domain.u_index(i, j)];
            let e = f.u[domain.u_index(i + 1, j)];
            let w = f.u[domain.u_index(i - 1, j)];
            let up = if j + 1 < n { f.u[domain.u_index(i, j + 1)] } else { -c };
            let dn = if j > 0 { f.u[domain.u_index(i, j - 1)] } else { -c };
            out.u[domain.u_index(i, j)] = (e + w + up + dn - 4.0 * c) / h2;
        }
    }
    for j in 1..n {
        for i in 0..n {
            let c = f.v[domain.v_index(i, j)];
            let up = f.v[domain.v_index(i, j + 1)];
            let dn = f.v[domain.v_index(i, j - 1)];
            let e = if i + 1 < n { f.v[domain.v_index(i + 1, j)] } else { -c };
            let w = if i > 0 { f.v[domain.v_index(i - 1, j)] } else { -c };
            out.v[domain.v_index(i, j)] = (e + w + up + dn - 4.0 * c) / h2;
        }
    }
    out
}

/// How velocity gradients are sampled at walls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    /// Tangential velocity vanishes on the wall: adds one-sided wall samples,
    /// so the sum equals `⟨-L_h f, f⟩` exactly.
    NoSlip,
    /// Interior differences only, for fields with nonzero wall trace.
    Free,
}

/// `Σ_s w_s·σ_s·g_s²` over all first-difference samples `g_s` of both
/// components, where `w_s` is the quadrature weight and `σ_s` the strip
/// weight at the sample location (1 when no strip is given).
///
/// Each term is formed as `(w·g²)·σ`, so for strips with weights ≤ 1 the
/// result never exceeds the strip-free value.
pub fn gradient_energy(
    domain: &Domain,
    f: &VectorGridField,
    mode: GradientMode,
    strip: Option<&BoundaryStrip>,
) -> f64 {
    let n = domain.nx();
    let h = domain.h();
    let area = h * h;
    let cell = |i: usize, j: usize| strip.map_or(1.0, |s| s.cell_weights[j * n + i]);
    let node = |i: usize, j: usize| strip.map_or(1.0, |s| s.node_weight(i, j));
    let term = |w: f64, g: f64, s: f64| -> f64 {
        let t = w * g * g;
        if strip.is_some() {
            t * s
        } else {
            t
        }
    };
    let uu = |i: usize, j: usize| f.u[domain.u_index(i, j)];
    let vv = |i: usize, j: usize| f.v[domain.v_index(i, j)];
    let mut sum = 0.0;
    // ∂_x u at cell centers and ∂_y v at cell centers
    for j in 0..n {
        for i in 0..n {
            let gx = (uu(i + 1, j) - uu(i, j)) / h;
            let gy = (vv(i, j + 1) - vv(i, j)) / h;
            sum += term(area, gx, cell(i, j));
            sum += term(area, gy, cell(i, j));
        }
    }
    // ∂_y u at interior nodes
    for j in 0..n - 1 {
        for i in 1..n {
            let g = (uu(i, j + 1) - uu(i, j)) / h;
            sum += term(area, g, node(i, j + 1));
        }
    }
    // ∂_x v at interior nodes
    for j in 1..n {
        for i in 0..n - 1 {
            let g = (vv(i + 1, j) - vv(i, j)) / h;
            sum += term(area, g, node(i + 1, j));
        }
    }
    if mode == GradientMode::NoSlip {
        let half = 0.5 * area;
        for i in 1..n {
            sum += term(half, 2.0 * uu(i, 0) / h, node(i, 0));
            sum += term(half, 2.0 * uu(i, n - 1) / h, node(i, n));
        }
        for j in 1..n {
            sum += term(half, 2.0 * vv(0, j) / h, node(0, j));
            sum += term(half, 2.0 * vv(n - 1, j) / h, node(n, j));
        }
    }
    sum
}

/// Compressed sparse row matrix acting on flattened face vectors.
#[derive(Clone, Debug, Default)]
pub struct SparseOp {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseOp {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseOp { dim, row_ptr, cols, vals }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.dim {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[r] = s;
        }
    }

    pub fn transpose(&self) -> SparseOp {
        let mut rows = vec![Vec::new(); self.dim];
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                rows[self.cols[k]].push((r, self.vals[k]));
            }
        }
        SparseOp::from_rows(self.dim, rows)
    }

    pub fn apply_field(&self, domain: &Domain, f: &VectorGridField) -> VectorGridField {
        let x = flatten(f);
        let mut y = vec![0.0; self.dim];
        self.apply(&x, &mut y);
        unflatten(domain, &y)
    }
}

pub fn flatten(f: &VectorGridField) -> Vec<f64> {
    let mut x = Vec::with_capacity(f.u.len() + f.v.len());
    x.extend_from_slice(&f.u);
    x.extend_from_slice(&f.v);
    x
}

pub fn unflatten(domain: &Domain, x: &[f64]) -> VectorGridField {
    let nu = domain.n_u();
    VectorGridField { nx: domain.nx(), u: x[..nu].to_vec(), v: x[nu..].to_vec() }
}

/// Off-diagonal couplings of the face-centered control-volume flux form of
/// `∇·(φ ⊗ g)`: `(N_φ g)_a = (1/2h) Σ_faces s_f φ_n,f g_nb`. Exactly
/// antisymmetric for any φ, since each face flux enters the two rows it
/// couples with opposite signs.
fn advection_stencil(domain: &Domain, phi: &VectorGridField, mut emit: impl FnMut(usize, usize, f64)) {
    let n = domain.nx();
    let nu = domain.n_u();
    let c = 0.5 / domain.h();
    let pu = |i: usize, j: usize| phi.u[domain.u_index(i, j)];
    let pv = |i: usize, j: usize| phi.v[domain.v_index(i, j)];
    for j in 0..n {
        for i in 1..n {
            let a = domain.u_index(i, j);
            if i + 1 < n {
                emit(a, domain.u_index(i + 1, j), c * 0.5 * (pu(i, j) + pu(i + 1, j)));
            }
            if i > 1 {
                emit(a, domain.u_index(i - 1, j), -c * 0.5 * (pu(i, j) + pu(i - 1, j)));
            }
            if j + 1 < n {
                emit(a, domain.u_index(i, j + 1), c * 0.5 * (pv(i - 1, j + 1) + pv(i, j + 1)));
            }
            if j > 0 {
                emit(a, domain.u_index(i, j - 1), -c * 0.5 * (pv(i - 1, j) + pv(i, j)));
            }
        }
    }
    for j in 1..n {
        for i in 0..n {
            let a = nu + domain.v_index(i, j);
            if j + 1 < n {
                emit(a, nu + domain.v_index(i, j + 1), c * 0.5 * (pv(i, j) + pv(i, j + 1)));
            }
            if j > 1 {
                emit(a, nu + domain.v_index(i, j - 1), -c * 0.5 * (pv(i, j) + pv(i, j - 1)));
            }
            if i + 1 < n {
                emit(a, nu + domain.v_index(i + 1, j), c * 0.5 * (pu(i + 1, j - 1) + pu(i + 1, j)));
            }
            if i > 0 {
                emit(a, nu + domain.v_index(i - 1, j), -c * 0.5 * (pu(i, j - 1) + pu(i, j)));
            }
        }
    }
}

/// Skew-symmetric discrete `L_φ g`.
pub fn advect_grid(domain: &Domain, phi: &VectorGridField, g: &VectorGridField) -> VectorGridField {
    let nu = domain.n_u();
    let mut out = VectorGridField::zeros(domain);
    advection_stencil(domain, phi, |a, b, w| {
        let gb = if b < nu { g.u[b] } else { g.v[b - nu] };
        if a < nu {
            out.u[a] += w * gb;
        } else {
            out.v[a - nu] += w * gb;
        }
    });
    out
}

/// `L_φ` as a sparse matrix, for fixed φ.
pub fn advection_matrix(domain: &Domain, phi: &VectorGridField) -> SparseOp {
    let dim = domain.n_u() + domain.n_v();
    let mut rows = vec![Vec::new(); dim];
    advection_stencil(domain, phi, |a, b, w| rows[a].push((b, w)));
    SparseOp::from_rows(dim, rows)
}

/// `𝒯_ξ f = Σ_j f^j ∇ξ^j` sampled on faces. The cross component of `f` is
/// averaged from the four neighbouring faces; gradients of ξ are centered.
pub fn salt_stretch_matrix(domain: &Domain, xi: &VectorGridField) -> SparseOp {
    let n = domain.nx();
    let h = domain.h();
    let nu = domain.n_u();
    let dim = nu + domain.n_v();
    let xu = |i: usize, j: usize| xi.u[domain.u_index(i, j)];
    let xv = |i: usize, j: usize| xi.v[domain.v_index(i, j)];
    let mut rows = vec![Vec::new(); dim];
    for j in 0..n {
        for i in 1..n {
            let a = domain.u_index(i, j);
            // ∂_x ξ^x at the u-face, ∂_x ξ^y from the averaged v columns
            let dxx = (xu(i + 1, j) - xu(i - 1, j)) / (2.0 * h);
            let dxy = (0.5 * (xv(i, j) + xv(i, j + 1)) - 0.5 * (xv(i - 1, j) + xv(i - 1, j + 1))) / h;
            rows[a].push((a, dxx));
            for (ii, jj) in [(i - 1, j), (i, j), (i - 1, j + 1), (i, j + 1)] {
                if jj > 0 && jj < n {
                    rows[a].push((nu + domain.v_index(ii, jj), 0.25 * dxy));
                }
            }
        }
    }
    for j in 1..n {
        for i in 0..n {
            let a = nu + domain.v_index(i, j);
            let dyy = (xv(i, j + 1) - xv(i, j - 1)) / (2.0 * h);
            let dyx = (0.5 * (xu(i, j) + xu(i + 1, j)) - 0.5 * (xu(i, j - 1) + xu(i + 1, j - 1))) / h;
            rows[a].push((a, dyy));
            for (ii, jj) in [(i, j - 1), (i + 1, j - 1), (i, j), (i + 1, j)] {
                if ii > 0 && ii < n {
                    rows[a].push((domain.u_index(ii, jj), 0.25 * dyx));
                }
            }
        }
    }
    SparseOp::from_rows(dim, rows)
}
