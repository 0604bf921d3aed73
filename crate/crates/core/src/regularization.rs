//! Regularized coefficients: the cut-off `zeta_eps`, its primitive
//! `z_eps = eps + ∫_0^x zeta_eps`, and the degenerate weight `g_eps = z_eps^alpha`.
//!
//! The cut-off is a `C^∞` smooth step built from `exp(-1/s)`. It vanishes on
//! `[0, eps^2/16]`, ramps up on `[eps^2/16, eps^2/8]`, equals one on
//! `[eps^2/8, L - eps^2/8]` and mirrors on the right. Keeping the ramps this
//! close to the boundary keeps `z_eps / (x + eps)` near one, which the lower
//! sandwich `Λ(eps) (x+eps)^alpha <= g_eps` needs for the exponents in use.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::eps0;

/// Ramp start and end as fractions of `eps^2`.
pub const RAMP_START: f64 = 1.0 / 16.0;
pub const RAMP_END: f64 = 1.0 / 8.0;

const SIMPSON_TOL: f64 = 1e-14;
const SIMPSON_MAX_PANELS: usize = 1 << 20;

#[inline]
fn bump(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// `C^∞` step: 0 for `s <= 0`, 1 for `s >= 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = bump(s);
        a / (a + bump(1.0 - s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffProfile {
    pub eps: f64,
    pub length: f64,
    /// Left ramp interval; the right ramp is its mirror image about `L/2`.
    pub ramp: (f64, f64),
}

/// Cut-off profile for `eps ∈ (0, eps0)`.
pub fn cutoff(eps: f64, length: f64) -> Result<CutoffProfile> {
    if !(length > 0.0) {
        return Err(Error::domain(format!("length must be positive, got {length}")));
    }
    let e0 = eps0(length);
    if !(eps > 0.0 && eps < e0) {
        return Err(Error::domain(format!("eps = {eps} outside (0, {e0})")));
    }
    let e2 = eps * eps;
    Ok(CutoffProfile {
        eps,
        length,
        ramp: (RAMP_START * e2, RAMP_END * e2),
    })
}

impl CutoffProfile {
    pub fn zeta(&self, y: f64) -> f64 {
        let (lo, hi) = self.ramp;
        let width = hi - lo;
        let left = smooth_step((y - lo) / width);
        let right = smooth_step(((self.length - lo) - y) / width);
        left.min(right)
    }

    /// Points where `zeta` switches between constant and ramp pieces.
    fn breakpoints(&self) -> [f64; 4] {
        let (lo, hi) = self.ramp;
        [lo, hi, self.length - hi, self.length - lo]
    }

    /// `∫_a^b zeta` for `[a, b]` inside one smooth piece.
    fn integrate_piece(&self, a: f64, b: f64, min_panels: usize) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let mid = self.zeta(0.5 * (a + b));
        let (lo, hi) = self.ramp;
        let constant_piece = b <= lo || a >= self.length - lo || (a >= hi && b <= self.length - hi);
        if constant_piece {
            return Ok(mid * (b - a));
        }
        let mut panels = min_panels.max(8);
        panels += panels % 2;
        let mut prev = simpson(|y| self.zeta(y), a, b, panels);
        while panels < SIMPSON_MAX_PANELS {
            panels *= 2;
            let next = simpson(|y| self.zeta(y), a, b, panels);
            if (next - prev).abs() <= SIMPSON_TOL * (b - a).max(f64::MIN_POSITIVE) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::Internal(format!(
            "cut-off quadrature on [{a}, {b}] did not converge"
        )))
    }

    /// `∫_a^b zeta`, split at the ramp breakpoints.
    pub fn integrate(&self, a: f64, b: f64, min_panels: usize) -> Result<f64> {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|&p| p > a && p < b));
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += self.integrate_piece(w[0], w[1], min_panels)?;
        }
        Ok(total)
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// `Λ(eps) = min{1/(1+eps), 1 - 2 eps^2/(L+eps)}`, the lower sandwich factor.
pub fn lambda_lower(eps: f64, length: f64) -> f64 {
    f64::min(1.0 / (1.0 + eps), 1.0 - 2.0 * eps * eps / (length + eps))
}

/// Nodal coefficient tables for one `(eps, alpha, beta, gamma)` on one grid.
#[derive(Debug, Clone)]
pub struct WeightTables {
    pub eps: f64,
    pub alpha: f64,
    pub zeta: Vec<f64>,
    pub z: Vec<f64>,
    pub g: Vec<f64>,
    pub gx: Vec<f64>,
    pub gx2_over_g: Vec<f64>,
    /// `(x + eps)^beta`
    pub wbeta: Vec<f64>,
    /// `(x + eps)^gamma`
    pub wgamma: Vec<f64>,
    pub lambda: f64,
}

pub fn weight_tables(profile: &CutoffProfile, alpha: f64, beta: f64, gamma: f64, grid: &Grid) -> Result<WeightTables> {
    weight_tables_with(profile, alpha, beta, gamma, grid, 8)
}

/// As [`weight_tables`] with a chosen minimum number of Simpson panels per piece.
pub fn weight_tables_with(
    profile: &CutoffProfile,
    alpha: f64,
    beta: f64,
    gamma: f64,
    grid: &Grid,
    min_panels: usize,
) -> Result<WeightTables> {
    if (grid.length() - profile.length).abs() > 1e-12 * profile.length {
        return Err(Error::domain("grid and cut-off profile disagree on L"));
    }
    let eps = profile.eps;
    let x = grid.nodes();
    let m = x.len();
    let mut z = Vec::with_capacity(m);
    let mut acc = 0.0;
    z.push(eps);
    for w in x.windows(2) {
        acc += profile.integrate(w[0], w[1], min_panels)?;
        z.push(eps + acc);
    }
    let zeta: Vec<f64> = x.iter().map(|&y| profile.zeta(y)).collect();
    let g: Vec<f64> = z.iter().map(|zi| zi.powf(alpha)).collect();
    let gx: Vec<f64> = z
        .iter()
        .zip(&zeta)
        .map(|(zi, ze)| alpha * zi.powf(alpha - 1.0) * ze)
        .collect();
    let gx2_over_g: Vec<f64> = z
        .iter()
        .zip(&zeta)
        .map(|(zi, ze)| alpha * alpha * zi.powf(alpha - 2.0) * ze * ze)
        .collect();
    let wbeta = x.iter().map(|xi| (xi + eps).powf(beta)).collect();
    let wgamma = x.iter().map(|xi| (xi + eps).powf(gamma)).collect();
    Ok(WeightTables {
        eps,
        alpha,
        zeta,
        z,
        g,
        gx,
        gx2_over_g,
        wbeta,
        wgamma,
        lambda: lambda_lower(eps, profile.length),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    /// `min g / (Λ (x+eps)^alpha)`; the lower sandwich holds iff `>= 1`.
    pub lower_ratio_min: f64,
    /// `max g / (x+eps)^alpha`; the upper sandwich holds iff `<= 1`.
    pub upper_ratio_max: f64,
    /// `max g_x / (x+eps)^(alpha-1)`, compared against `c_slope = alpha`.
    pub slope_ratio_max: f64,
    /// `max (g_x^2/g) / (x+eps)^(alpha-2)`, compared against `c_curv = alpha^2 / Λ`.
    pub curvature_ratio_max: f64,
    pub c_slope: f64,
    pub c_curv: f64,
    pub min_slope: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Nodal check of the three pointwise bounds on `g_eps`.
pub fn verify_weight_bounds(tables: &WeightTables, grid: &Grid) -> BoundReport {
    let alpha = tables.alpha;
    let lambda = tables.lambda;
    let c_slope = alpha;
    // (g_x^2 / g) <= c_slope^2 (x+eps)^(2 alpha - 2) / (Λ (x+eps)^alpha)
    let c_curv = alpha * alpha / lambda;
    let mut report = BoundReport {
        lower_ratio_min: f64::INFINITY,
        upper_ratio_max: 0.0,
        slope_ratio_max: 0.0,
        curvature_ratio_max: 0.0,
        c_slope,
        c_curv,
        min_slope: f64::INFINITY,
        violations: 0,
        pass: true,
    };
    for (i, &xi) in grid.nodes().iter().enumerate() {
        let s = xi + tables.eps;
        let pa = s.powf(alpha);
        let lower = tables.g[i] / (lambda * pa);
        let upper = tables.g[i] / pa;
        let slope = tables.gx[i] / s.powf(alpha - 1.0);
        let curv = tables.gx2_over_g[i] / s.powf(alpha - 2.0);
        report.lower_ratio_min = report.lower_ratio_min.min(lower);
        report.upper_ratio_max = report.upper_ratio_max.max(upper);
        report.slope_ratio_max = report.slope_ratio_max.max(slope);
        report.curvature_ratio_max = report.curvature_ratio_max.max(curv);
        report.min_slope = report.min_slope.min(tables.gx[i]);
        let bad = lower < 1.0 || upper > 1.0 || tables.gx[i] < 0.0 || slope > c_slope || curv > c_curv;
        if bad {
            report.violations += 1;
        }
    }
    report.pass = report.violations == 0;
    report
}
