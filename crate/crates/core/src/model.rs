//! Spatial operator of the regularized problem in conservative flux form,
//!
//! ```text
//! u_t = (x+eps)^-beta * J_xx,   J = -g_eps f(u)^n u_xx + 2 g_eps f(u)^(n-1) u_x^2,
//! ```
//!
//! with `f = f_k` the smooth truncation and `u_x = u_xxx = 0` at both ends.
//! `J` is evaluated at the nodes and differentiated again with the same
//! reflecting flux-form stencil, so the weighted sum `Σ w_i (x_i+eps)^beta u_t,i`
//! telescopes to zero.

use serde::Serialize;

use crate::error::Result;
use crate::grid::Grid;
use crate::params::Params;
use crate::regularization::{cutoff, weight_tables, WeightTables};

/// Smooth nondecreasing clamp with `f(s) = s` on `[1/k, k]` and
/// `1/(2k) <= f <= 2k`. The blends on `[1/(2k), 1/k]` and `[k, 2k]` are quintic
/// Hermite pieces, so `f` is `C^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub k: f64,
}

impl Truncation {
    pub fn new(k: f64) -> Self {
        assert!(k >= 1.0, "truncation level must be >= 1, got {k}");
        Truncation { k }
    }

    pub fn value(&self, s: f64) -> f64 {
        let k = self.k;
        let lo = 0.5 / k;
        let a = 1.0 / k;
        if s <= lo {
            lo
        } else if s < a {
            let t = (s - lo) / (a - lo);
            // q(0)=q'(0)=q''(0)=0, q(1)=1, q'(1)=1, q''(1)=0
            lo + (a - lo) * t * t * t * (6.0 + t * (-8.0 + 3.0 * t))
        } else if s <= k {
            s
        } else if s < 2.0 * k {
            let t = (s - k) / k;
            // q(0)=0, q'(0)=1, q''(0)=0, q(1)=1, q'(1)=q''(1)=0
            k + k * t * (1.0 + t * t * (4.0 + t * (-7.0 + 3.0 * t)))
        } else {
            2.0 * k
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let k = self.k;
        let lo = 0.5 / k;
        let a = 1.0 / k;
        if s <= lo || s >= 2.0 * k {
            0.0
        } else if s < a {
            let t = (s - lo) / (a - lo);
            t * t * (18.0 + t * (-32.0 + 15.0 * t))
        } else if s <= k {
            1.0
        } else {
            let t = (s - k) / k;
            let one_minus = 1.0 - t;
            one_minus * one_minus * (1.0 + t * (2.0 + 15.0 * t))
        }
    }
}

/// Convenience form of [`Truncation::value`].
pub fn f_k(s: f64, k: f64) -> f64 {
    Truncation::new(k).value(s)
}

pub fn f_k_prime(s: f64, k: f64) -> f64 {
    Truncation::new(k).derivative(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxField {
    pub j: Vec<f64>,
    /// `J_x` by differencing the nodal flux.
    pub jx_stencil: Vec<f64>,
    /// `J_x` from the five-term product-rule expansion at the nodes.
    pub jx_expansion: Vec<f64>,
}

/// The discretized right-hand side for one parameter set on one grid.
#[derive(Debug, Clone)]
pub struct Model {
    params: Params,
    grid: Grid,
    tables: WeightTables,
    trunc: Truncation,
}

impl Model {
    pub fn new(params: Params, grid: Grid) -> Result<Model> {
        let profile = cutoff(params.eps, params.length)?;
        let tables = weight_tables(&profile, params.alpha, params.beta, params.gamma, &grid)?;
        Ok(Model {
            trunc: Truncation::new(params.k),
            params,
            grid,
            tables,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tables(&self) -> &WeightTables {
        &self.tables
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    /// Nodal flux at node `i`.
    #[inline]
    fn flux_at(&self, u: &[f64], i: usize) -> f64 {
        let n = self.params.n;
        let f = self.trunc.value(u[i]);
        let fn1 = f.powf(n - 1.0);
        let ux = self.grid.d1_at(u, i);
        let uxx = self.grid.d2_at(u, i);
        self.tables.g[i] * fn1 * (2.0 * ux * ux - f * uxx)
    }

    pub fn flux_into(&self, u: &[f64], j: &mut [f64]) {
        for (i, ji) in j.iter_mut().enumerate() {
            *ji = self.flux_at(u, i);
        }
    }

    /// Time derivative written into `out`; `scratch` holds the flux.
    pub fn rhs_into(&self, u: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.flux_into(u, scratch);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.grid.d2_at(scratch, i) / self.tables.wbeta[i];
        }
    }

    pub fn rhs(&self, u: &[f64]) -> Vec<f64> {
        let m = u.len();
        let mut scratch = vec![0.0; m];
        let mut out = vec![0.0; m];
        self.rhs_into(u, &mut scratch, &mut out);
        out
    }

    /// Flux and both forms of its gradient. The expansion uses `u` itself, so the
    /// two agree only where `f_k` is the identity.
    pub fn flux(&self, u: &[f64]) -> FluxField {
        let m = u.len();
        let mut j = vec![0.0; m];
        self.flux_into(u, &mut j);
        let jx_stencil = self.grid.d1(&j);

        let n = self.params.n;
        let ux = self.grid.d1(u);
        let uxx = self.grid.d2(u);
        let uxxx = self.grid.d1(&uxx);
        let g = &self.tables.g;
        let gx = &self.tables.gx;
        let jx_expansion = (0..m)
            .map(|i| {
                let (v, p, q, r) = (u[i], ux[i], uxx[i], uxxx[i]);
                -g[i] * v.powf(n) * r
                    + (4.0 - n) * g[i] * v.powf(n - 1.0) * p * q
                    + 2.0 * (n - 1.0) * g[i] * v.powf(n - 2.0) * p * p * p
                    - gx[i] * v.powf(n) * q
                    + 2.0 * gx[i] * v.powf(n - 1.0) * p * p
            })
            .collect();
        FluxField {
            j,
            jx_stencil,
            jx_expansion,
        }
    }

    /// Max-norm gap between the two `J_x` forms. Nodes whose stencil touches a
    /// cut-off ramp are skipped: the ramps are far narrower than the mesh.
    pub fn flux_gradient_consistency(&self, u: &[f64]) -> f64 {
        let field = self.flux(u);
        let last = u.len() - 1;
        let zeta = &self.tables.zeta;
        (0..=last)
            .filter(|&i| i == 0 || i == last || (zeta[i - 1] == 1.0 && zeta[i] == 1.0 && zeta[i + 1] == 1.0))
            .map(|i| (field.jx_stencil[i] - field.jx_expansion[i]).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ w_i (x_i+eps)^beta v_i`, the conserved weighted mass.
    pub fn weighted_mass(&self, u: &[f64]) -> f64 {
        self.grid.quad(&self.tables.wbeta, u)
    }
}
