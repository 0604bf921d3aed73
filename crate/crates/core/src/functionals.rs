//! Scalar functionals tracked along a run: conserved mass, the gradient energy
//! `y(t)`, the five dissipation integrals, sup and Hölder bounds, the dead-core
//! functional, physical energy/entropy, and the ODE comparison bound for `y`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::Model;
use crate::params::holder_exponents;

/// Largest cell count accepted by [`holder_modulus`].
pub const HOLDER_MAX_CELLS: usize = 2048;

/// `∫ (x+eps)^beta u`.
pub fn weighted_mass(model: &Model, u: &[f64]) -> f64 {
    model.weighted_mass(u)
}

/// `y = ∫ (x+eps)^gamma u_x^2`.
pub fn grad_energy(model: &Model, u: &[f64]) -> f64 {
    let ux = model.grid().d1(u);
    let sq: Vec<f64> = ux.iter().map(|d| d * d).collect();
    model.grid().quad(&model.tables().wgamma, &sq)
}

fn require_positive(u: &[f64], what: &str) -> Result<()> {
    match u.iter().position(|&v| !(v > 0.0)) {
        Some(i) => Err(Error::domain(format!("{what} needs u > 0, got u[{i}] = {}", u[i]))),
        None => Ok(()),
    }
}

/// The five dissipation integrals, with `w = alpha - beta + gamma`:
///
/// ```text
/// ∫ X^w u^n u_xxx^2,  ∫ X^w u^(n-2) u_x^2 u_xx^2,  ∫ X^w u^(n-4) u_x^6,
/// ∫ X^(w-2) u^n u_xx^2,  ∫ X^(w-2) u^(n-2) u_x^4,         X = x + eps.
/// ```
pub fn dissipation_terms(model: &Model, u: &[f64]) -> Result<[f64; 5]> {
    require_positive(u, "dissipation_terms")?;
    let p = model.params();
    let grid = model.grid();
    let w = p.dissipation_power();
    let ux = grid.d1(u);
    let uxx = grid.d2(u);
    let uxxx = grid.d1(&uxx);
    let mut out = [0.0; 5];
    for (i, (&xi, &wi)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        let s = xi + p.eps;
        let hi = s.powf(w);
        let lo = s.powf(w - 2.0);
        let un = u[i].powf(p.n);
        let un2 = un / (u[i] * u[i]);
        let un4 = un2 / (u[i] * u[i]);
        let (a, b, c) = (ux[i], uxx[i], uxxx[i]);
        let a2 = a * a;
        out[0] += wi * hi * un * c * c;
        out[1] += wi * hi * un2 * a2 * b * b;
        out[2] += wi * hi * un4 * a2 * a2 * a2;
        out[3] += wi * lo * un * b * b;
        out[4] += wi * lo * un2 * a2 * a2;
    }
    Ok(out)
}

/// Constant of the Hölder bound `|u(x2)-u(x1)| <= c y^(1/2) |x2-x1|^theta`,
/// from Cauchy-Schwarz on `∫ u_x`:
/// `c = (1-gamma)^(-1/2)` for `gamma ∈ [0,1)` and `(L+1)^(-gamma/2)` for `gamma < 0`.
pub fn holder_constant(gamma: f64, length: f64) -> Result<f64> {
    holder_exponents(gamma)?;
    Ok(if gamma >= 0.0 {
        1.0 / (1.0 - gamma).sqrt()
    } else {
        (length + 1.0).powf(-gamma / 2.0)
    })
}

/// Constant of `sup|u| <= c (∫ (x+eps)^beta |u| + y^(1/2))`.
///
/// Some `x0 ∈ [L/2, L]` has `|u(x0)| <= c1 ∫(x+eps)^beta |u|` with
/// `c1 = (2/L) max{(L/2)^-beta, (L+1)^-beta}`; the Hölder bound then reaches
/// every other point within distance `L`.
pub fn sup_constant(beta: f64, gamma: f64, length: f64) -> Result<f64> {
    let (theta, _) = holder_exponents(gamma)?;
    let c1 = (2.0 / length) * f64::max((length / 2.0).powf(-beta), (length + 1.0).powf(-beta));
    let c31 = holder_constant(gamma, length)?;
    Ok(c1.max(1.0) * (1.0 + c31 * length.powf(theta).max(1.0)))
}

pub fn sup_estimate(model: &Model, u: &[f64]) -> f64 {
    let p = model.params();
    let c = sup_constant(p.beta, p.gamma, p.length).expect("validated gamma < 1");
    let abs: Vec<f64> = u.iter().map(|v| v.abs()).collect();
    c * (model.grid().quad(&model.tables().wbeta, &abs) + grad_energy(model, u).sqrt())
}

/// `max_{i<j} |u_i - u_j| / |x_i - x_j|^theta` over all node pairs.
pub fn holder_modulus(x: &[f64], u: &[f64], theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(Error::domain(format!("theta must lie in (0, 1/2], got {theta}")));
    }
    if x.len() > HOLDER_MAX_CELLS + 1 {
        return Err(Error::domain(format!(
            "holder_modulus limited to {} cells, got {}",
            HOLDER_MAX_CELLS,
            x.len() - 1
        )));
    }
    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    let mut best = 0.0_f64;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = (x[j] - x[i]).powf(theta);
            // distances only grow with j
            if range / d <= best {
                break;
            }
            best = best.max((u[j] - u[i]).abs() / d);
        }
    }
    Ok(best)
}

/// `max_{a<b} ‖u(t_a) - u(t_b)‖_∞ / |t_a - t_b|^exponent` over snapshot pairs.
pub fn temporal_holder_modulus(times: &[f64], states: &[Vec<f64>], exponent: f64) -> f64 {
    let mut best = 0.0_f64;
    for a in 0..times.len() {
        for b in a + 1..times.len() {
            let dt = (times[b] - times[a]).abs();
            if dt == 0.0 {
                continue;
            }
            let d = sup_distance(&states[a], &states[b]);
            best = best.max(d / dt.powf(exponent));
        }
    }
    best
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// `∫ u^-2`.
pub fn deadcore_functional(grid: &Grid, u: &[f64]) -> Result<f64> {
    require_positive(u, "deadcore_functional")?;
    let inv: Vec<f64> = u.iter().map(|v| 1.0 / (v * v)).collect();
    Ok(grid.integrate(&inv))
}

/// Kinetic energy `∫ x^(3/2) u` and entropy `∫ ((1+u)log(1+u) - u log u) x^(1/2)`,
/// both with `eps`-free weights.
pub fn physical_diagnostics(grid: &Grid, u: &[f64]) -> (f64, f64) {
    let x = grid.nodes();
    let w_e: Vec<f64> = x.iter().map(|v| v.powf(1.5)).collect();
    let w_s: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
    let density: Vec<f64> = u
        .iter()
        .map(|&v| {
            if v <= 0.0 {
                0.0
            } else {
                (1.0 + v) * v.ln_1p() - v * v.ln()
            }
        })
        .collect();
    (grid.quad(&w_e, u), grid.quad(&w_s, &density))
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeBound {
    /// First time `y` reaches `A + 1`, capped at 1.
    pub t0: f64,
    /// Sampled `(t, y)` on `[0, t0]`.
    pub curve: Vec<(f64, f64)>,
}

const ODE_SAMPLES: usize = 1000;

/// Integrates `y' = c5 + c6 y^((n+2)/2)`, `y(0) = A` by RK4 until `y = A + 1` or `t = 1`.
pub fn ode_bound(a: f64, c5: f64, c6: f64, n: f64) -> Result<OdeBound> {
    for (name, v) in [("A", a), ("c5", c5), ("c6", c6)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if !(n > 0.0 && n < 3.0) {
        return Err(Error::domain(format!("n must lie in (0, 3), got {n}")));
    }
    let power = 0.5 * (n + 2.0);
    let f = |y: f64| c5 + c6 * y.powf(power);
    let target = a + 1.0;
    let scale = f64::min(1.0, 1.0 / (c5 + c6 * target.powf(power)));
    let dt = 1e-5 * scale;
    let rk4 = |y: f64, h: f64| {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };

    let total_steps = (1.0 / dt).ceil() as usize;
    let stride = (total_steps / ODE_SAMPLES).max(1);
    let mut curve = vec![(0.0, a)];
    let mut y = a;
    let mut step = 0_usize;
    loop {
        let t = step as f64 * dt;
        if t >= 1.0 {
            curve.push((1.0, y));
            return Ok(OdeBound { t0: 1.0, curve });
        }
        let h = dt.min(1.0 - t);
        let next = rk4(y, h);
        if !next.is_finite() {
            curve.push((t, y));
            return Ok(OdeBound { t0: t, curve });
        }
        if next >= target {
            // bisect on the step length for the crossing
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if rk4(y, mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= f64::EPSILON * t.max(h) {
                    break;
                }
            }
            let t0 = (t + 0.5 * (lo + hi)).min(1.0);
            curve.push((t0, target));
            return Ok(OdeBound { t0, curve });
        }
        y = next;
        step += 1;
        if step.is_multiple_of(stride) {
            curve.push((step as f64 * dt, y));
        }
    }
}

/// Least-squares fit of `dy/dt ≈ c5 + c6 y^((n+2)/2)` with both constants kept `>= 0`.
pub fn fit_ode_constants(times: &[f64], y: &[f64], n: f64) -> (f64, f64) {
    let power = 0.5 * (n + 2.0);
    let mut pts = Vec::new();
    for i in 1..times.len().min(y.len()) {
        let dt = times[i] - times[i - 1];
        if dt > 0.0 {
            let ym = 0.5 * (y[i] + y[i - 1]);
            pts.push((ym.max(0.0).powf(power), (y[i] - y[i - 1]) / dt));
        }
    }
    if pts.is_empty() {
        return (0.0, 0.0);
    }
    let m = pts.len() as f64;
    let (sp, sd) = pts.iter().fold((0.0, 0.0), |(a, b), (p, d)| (a + p, b + d));
    let (mp, md) = (sp / m, sd / m);
    let (mut cov, mut var) = (0.0, 0.0);
    for (p, d) in &pts {
        cov += (p - mp) * (d - md);
        var += (p - mp) * (p - mp);
    }
    let mut c6 = if var > 0.0 { cov / var } else { 0.0 };
    let mut c5 = md - c6 * mp;
    if c6 < 0.0 {
        c6 = 0.0;
        c5 = md;
    }
    if c5 < 0.0 {
        c5 = 0.0;
        let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (p, d)| (a + p * d, b + p * p));
        c6 = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    }
    (c5.max(0.0), c6)
}

/// One row of `diagnostics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_beta: f64,
    pub grad_energy: f64,
    /// NaN when `u` touches zero.
    pub dissipation: [f64; 5],
    pub sup_u: f64,
    pub sup_bound: f64,
    pub holder_c: f64,
    /// Infinite when `u` touches zero.
    pub deadcore: f64,
    pub energy: f64,
    pub entropy: f64,
}

impl DiagnosticsRecord {
    pub fn measure(model: &Model, t: f64, u: &[f64]) -> DiagnosticsRecord {
        let grid = model.grid();
        let (theta, _) = holder_exponents(model.params().gamma).expect("validated gamma < 1");
        let (energy, entropy) = physical_diagnostics(grid, u);
        DiagnosticsRecord {
            t,
            mass_beta: weighted_mass(model, u),
            grad_energy: grad_energy(model, u),
            dissipation: dissipation_terms(model, u).unwrap_or([f64::NAN; 5]),
            sup_u: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            sup_bound: sup_estimate(model, u),
            holder_c: strided_holder(grid.nodes(), u, theta),
            deadcore: deadcore_functional(grid, u).unwrap_or(f64::INFINITY),
            energy,
            entropy,
        }
    }
}

/// Hölder modulus on every `s`-th node, with `s` chosen to respect the cell cap.
fn strided_holder(x: &[f64], u: &[f64], theta: f64) -> f64 {
    let stride = (x.len() - 1).div_ceil(HOLDER_MAX_CELLS).max(1);
    if stride == 1 {
        return holder_modulus(x, u, theta).expect("within cap");
    }
    let xs: Vec<f64> = x.iter().step_by(stride).copied().collect();
    let us: Vec<f64> = u.iter().step_by(stride).copied().collect();
    holder_modulus(&xs, &us, theta).expect("within cap")
}
