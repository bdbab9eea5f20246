//! Discrete domain: the unit square split into `nx × nx` cells with a
//! staggered (MAC) layout.
//!
//! * cell centers `((i+½)h, (j+½)h)` carry scalars and pressures,
//! * vertical faces `(ih, (j+½)h)` carry the x-velocity `u`,
//! * horizontal faces `((i+½)h, jh)` carry the y-velocity `v`,
//! * nodes `(ih, jh)` carry stream functions and vorticity.
//!
//! Boundary strips use exact geometric area fractions, so integrals over a
//! strip are dominated term-by-term by the full-domain integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The unit square with a uniform square-cell staggered grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    nx: usize,
    h: f64,
    /// Distance to the boundary at cell centers, row-major in `j`.
    cell_distance: Vec<f64>,
}

impl Domain {
    pub fn new(nx: usize) -> Result<Self> {
        if nx < 8 || nx % 2 != 0 {
            return Err(Error::config(format!("nx must be even and ≥ 8 (got {nx})")));
        }
        let h = 1.0 / nx as f64;
        let mut cell_distance = Vec::with_capacity(nx * nx);
        for j in 0..nx {
            for i in 0..nx {
                let x = (i as f64 + 0.5) * h;
                let y = (j as f64 + 0.5) * h;
                cell_distance.push(distance_to_boundary(x, y));
            }
        }
        Ok(Domain { nx, h, cell_distance })
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.nx
    }

    /// Number of u-faces (including the two boundary columns).
    #[inline]
    pub fn n_u(&self) -> usize {
        (self.nx + 1) * self.nx
    }

    #[inline]
    pub fn n_v(&self) -> usize {
        self.nx * (self.nx + 1)
    }

    /// Interior nodes, the unknowns of a stream function vanishing on the boundary.
    #[inline]
    pub fn n_interior_nodes(&self) -> usize {
        (self.nx - 1) * (self.nx - 1)
    }

    /// Dimension of the discretely divergence-free subspace with zero normal flux.
    pub fn divergence_free_dim(&self) -> usize {
        self.n_interior_nodes()
    }

    pub fn cell_distance(&self) -> &[f64] {
        &self.cell_distance
    }

    pub fn check_same(&self, other: &Domain) -> Result<()> {
        if self.nx != other.nx {
            return Err(Error::GridMismatch { expected: self.nx, found: other.nx });
        }
        Ok(())
    }

    pub(crate) fn check_nx(&self, nx: usize) -> Result<()> {
        if self.nx != nx {
            return Err(Error::GridMismatch { expected: self.nx, found: nx });
        }
        Ok(())
    }

    #[inline]
    pub fn u_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn v_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Index of interior node `(i, j)` with `1 ≤ i, j ≤ nx-1`.
    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.nx - 1) + (i - 1)
    }
}

#[inline]
pub fn distance_to_boundary(x: f64, y: f64) -> f64 {
    x.min(1.0 - x).min(y).min(1.0 - y)
}

/// Fraction of the axis-aligned box `[x0,x1]×[y0,y1]` (already inside the
/// unit square) lying within distance `width` of the boundary.
///
/// The complement of the strip is the inner square `[w, 1-w]²`, so the
/// fraction is exact. The expression is monotone non-decreasing in `width`
/// under IEEE rounding.
pub fn box_strip_fraction(x0: f64, x1: f64, y0: f64, y1: f64, width: f64) -> f64 {
    let area = (x1 - x0) * (y1 - y0);
    if width >= 0.5 {
        return 1.0;
    }
    let lo = width;
    let hi = 1.0 - width;
    let ox = (x1.min(hi) - x0.max(lo)).max(0.0);
    let oy = (y1.min(hi) - y0.max(lo)).max(0.0);
    let inner = (ox * oy).min(area);
    1.0 - inner / area
}

/// Γ_c discretized: per-location strip fractions for cells, nodes, and faces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryStrip {
    pub nx: usize,
    pub nominal_width: f64,
    pub effective_width: f64,
    /// Weight in [0,1] per cell, row-major in `j`.
    pub cell_weights: Vec<f64>,
    /// Weight per node `(i,j)`, `0 ≤ i,j ≤ nx`, index `j*(nx+1)+i`; the
    /// node box is clipped to the domain.
    pub node_weights: Vec<f64>,
    pub u_weights: Vec<f64>,
    pub v_weights: Vec<f64>,
}

impl BoundaryStrip {
    pub fn new(domain: &Domain, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::config(format!("strip width must be positive (got {width})")));
        }
        let n = domain.nx();
        let h = domain.h();
        let effective_width = width.max(0.5 * h);
        let w = effective_width;
        let fraction = |cx: f64, cy: f64| {
            let x0 = (cx - 0.5 * h).max(0.0);
            let x1 = (cx + 0.5 * h).min(1.0);
            let y0 = (cy - 0.5 * h).max(0.0);
            let y1 = (cy + 0.5 * h).min(1.0);
            box_strip_fraction(x0, x1, y0, y1, w)
        };
        let mut cell_weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                cell_weights.push(fraction((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            }
        }
        let mut node_weights = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                node_weights.push(fraction(i as f64 * h, j as f64 * h));
            }
        }
        let mut u_weights = Vec::with_capacity(domain.n_u());
        for j in 0..n {
            for i in 0..=n {
                u_weights.push(fraction(i as f64 * h, (j as f64 + 0.5) * h));
            }
        }
        let mut v_weights = Vec::with_capacity(domain.n_v());
        for j in 0..=n {
            for i in 0..n {
                v_weights.push(fraction((i as f64 + 0.5) * h, j as f64 * h));
            }
        }
        Ok(BoundaryStrip {
            nx: n,
            nominal_width: width,
            effective_width,
            cell_weights,
            node_weights,
            u_weights,
            v_weights,
        })
    }

    /// A strip of width ½ (the whole square): every weight is exactly 1.
    pub fn full(domain: &Domain) -> Self {
        Self::new(domain, 0.5).expect("positive width")
    }

    /// Σ cell_weights · h².
    pub fn area(&self) -> f64 {
        let h = 1.0 / self.nx as f64;
        self.cell_weights.iter().sum::<f64>() * h * h
    }

    /// Exact area of the clamped strip `{d < effective_width}`.
    pub fn exact_area(&self) -> f64 {
        let w = self.effective_width.min(0.5);
        1.0 - (1.0 - 2.0 * w).powi(2)
    }

    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        self.node_weights[j * (self.nx + 1) + i]
    }
}

/// Scalar values at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGridField {
    nx: usize,
    values: Vec<f64>,
}

impl ScalarGridField {
    pub fn new(domain: &Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n_cells() {
            return Err(Error::InvalidField(format!(
                "expected {} cell values, got {}",
                domain.n_cells(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at cell {k}")));
        }
        Ok(ScalarGridField { nx: domain.nx(), values })
    }

    pub fn from_fn(domain: &Domain, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = domain.h();
        let n = domain.nx();
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(f((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            }
        }
        Self::new(domain, values)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Midpoint quadrature over the domain, or over a strip when given.
pub fn integrate(field: &ScalarGridField, strip: Option<&BoundaryStrip>) -> Result<f64> {
    let h = 1.0 / field.nx as f64;
    let sum = match strip {
        None => field.values.iter().sum::<f64>(),
        Some(s) => {
            if s.nx != field.nx {
                return Err(Error::GridMismatch { expected: field.nx, found: s.nx });
            }
            field.values.iter().zip(&s.cell_weights).map(|(v, w)| v * w).sum::<f64>()
        }
    };
    Ok(sum * h * h)
}

/// Face-centered velocity components on the staggered grid.
///
/// Boundary-normal faces are stored (always zero for admissible fields)
/// to keep indexing uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorGridField {
    pub nx: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorGridField {
    pub fn zeros(domain: &Domain) -> Self {
        VectorGridField { nx: domain.nx(), u: vec![0.0; domain.n_u()], v: vec![0.0; domain.n_v()] }
    }

    pub fn new(domain: &Domain, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != domain.n_u() || v.len() != domain.n_v() {
            return Err(Error::InvalidField(format!(
                "expected {}+{} face values, got {}+{}",
                domain.n_u(),
                domain.n_v(),
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidField("non-finite face value".into()));
        }
        Ok(VectorGridField { nx: domain.nx(), u, v })
    }

    /// Samples `(fx, fy)` at the face centers. Boundary-normal faces are zeroed.
    pub fn from_fn(domain: &Domain, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let n = domain.nx();
        let h = domain.h();
        let mut out = Self::zeros(domain);
        for j in 0..n {
            for i in 1..n {
                out.u[domain.u_index(i, j)] = f(i as f64 * h, (j as f64 + 0.5) * h).0;
            }
        }
        for j in 1..n {
            for i in 0..n {
                out.v[domain.v_index(i, j)] = f((i as f64 + 0.5) * h, j as f64 * h).1;
            }
        }
        Self::new(domain, out.u, out.v)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.nx as f64
    }

    /// Discrete L² inner product: every face carries area h².
    pub fn dot(&self, other: &VectorGridField) -> f64 {
        debug_assert_eq!(self.nx, other.nx);
        let h = self.h();
        let s: f64 = self.u.iter().zip(&other.u).map(|(a, b)| a * b).sum::<f64>()
            + self.v.iter().zip(&other.v).map(|(a, b)| a * b).sum::<f64>();
        s * h * h
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn axpy(&mut self, a: f64, x: &VectorGridField) {
        for (y, x) in self.u.iter_mut().zip(&x.u) {
            *y += a * x;
        }
        for (y, x) in self.v.iter_mut().zip(&x.v) {
            *y += a * x;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.u.iter_mut().chain(self.v.iter_mut()).for_each(|x| *x *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn sub(&self, other: &VectorGridField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Largest magnitude on boundary-normal faces (zero for admissible fields).
    pub fn boundary_normal_max(&self) -> f64 {
        let n = self.nx;
        let mut m = 0.0f64;
        for j in 0..n {
            m = m.max(self.u[j * (n + 1)].abs()).max(self.u[j * (n + 1) + n].abs());
        }
        for i in 0..n {
            m = m.max(self.v[i].abs()).max(self.v[n * n + i].abs());
        }
        m
    }

    /// Zeroes the boundary-normal faces in place.
    pub fn clear_boundary_normal(&mut self) {
        let n = self.nx;
        for j in 0..n {
            self.u[j * (n + 1)] = 0.0;
            self.u[j * (n + 1) + n] = 0.0;
        }
        for i in 0..n {
            self.v[i] = 0.0;
            self.v[n * n + i] = 0.0;
        }
    }

    /// Per-cell discrete divergence.
    pub fn divergence(&self) -> Vec<f64> {
        let n = self.nx;
        let h = self.h();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let du = self.u[j * (n + 1) + i + 1] - self.u[j * (n + 1) + i];
                let dv = self.v[(j + 1) * n + i] - self.v[j * n + i];
                out.push((du + dv) / h);
            }
        }
        out
    }

    pub fn max_divergence(&self) -> f64 {
        self.divergence().iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }
}
