//! Weighted interpolation inequalities and the pointwise Hölder/sup bounds,
//! evaluated on cosine test functions with analytic derivatives.
//!
//! Notation (`X = x + eps`, `w = alpha - beta + gamma`):
//!
//! ```text
//! D  = ∫ X^w     u^n     u_xxx^2        A  = ∫ X^(w-2) u^n     u_xx^2
//! E  = ∫ X^w     u^(n-2) u_x^2 u_xx^2   F  = ∫ X^(w-2) u^(n-2) u_x^4
//! G6 = ∫ X^w     u^(n-4) u_x^6          Γ2 = ∫ X^(w-4) u^n     u_x^2
//! B  = ∫ X^(w-6) u^(n+2)
//! ```
//!
//! The constants below replay the integration-by-parts and Young steps of each
//! inequality.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{holder_constant, sup_constant};
use crate::lab::testfn::{random_test_function, TestFunction};
use crate::params::{holder_exponents, Params};

/// Relative slack granted to quadrature error.
pub const TOL_REL: f64 = 1e-6;
pub const QUAD_PANELS: usize = 10_000;
pub const POINTWISE_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bound {
    /// `Γ2 <= η A + C B`
    Gamma2,
    /// `A <= η (D + E) + C B`
    Hessian,
    /// `F <= η (D + E) + C B`
    Quartic,
    /// `G6 <= a E + b F`
    Sextic,
    /// `A + F + Γ2 <= η (D + E) + C B`
    Combined,
    /// Hölder modulus against `c y^(1/2)`.
    Holder,
    /// `sup u` against `c (∫ X^beta u + y^(1/2))`.
    Sup,
}

impl Bound {
    pub const INTERPOLATION: [Bound; 5] = [
        Bound::Gamma2,
        Bound::Hessian,
        Bound::Quartic,
        Bound::Sextic,
        Bound::Combined,
    ];

    pub fn parse(name: &str) -> Option<Bound> {
        match name {
            "Gamma2" => Some(Bound::Gamma2),
            "Hessian" => Some(Bound::Hessian),
            "Quartic" => Some(Bound::Quartic),
            "Sextic" => Some(Bound::Sextic),
            "Combined" => Some(Bound::Combined),
            "Holder" => Some(Bound::Holder),
            "Sup" => Some(Bound::Sup),
            _ => None,
        }
    }
}

/// Exponents used by the lab; `eps = 0` is allowed here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabParams {
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub length: f64,
}

impl LabParams {
    pub fn new(params: &Params, eps: f64) -> Result<LabParams> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::domain(format!("lab eps must lie in [0, 1), got {eps}")));
        }
        Ok(LabParams {
            n: params.n,
            alpha: params.alpha,
            beta: params.beta,
            gamma: params.gamma,
            eps,
            length: params.length,
        })
    }

    pub fn w(&self) -> f64 {
        self.alpha - self.beta + self.gamma
    }
}

/// The integrals entering every interpolation inequality, computed once per function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedIntegrals {
    pub d: f64,
    pub e: f64,
    pub g6: f64,
    pub a: f64,
    pub f: f64,
    pub gamma2: f64,
    pub b: f64,
    /// `∫ X^beta u`
    pub mass: f64,
    /// `∫ X^gamma u_x^2`
    pub y: f64,
}

/// 3-point Gauss-Legendre on `QUAD_PANELS` equal panels; never samples the endpoints,
/// so integrable endpoint singularities at `eps = 0` are harmless.
fn gauss_nodes(length: f64) -> impl Iterator<Item = (f64, f64)> {
    let h = length / QUAD_PANELS as f64;
    let r = (0.6_f64).sqrt() * 0.5 * h;
    (0..QUAD_PANELS).flat_map(move |k| {
        let mid = (k as f64 + 0.5) * h;
        [
            (mid - r, 5.0 / 18.0 * h),
            (mid, 8.0 / 18.0 * h),
            (mid + r, 5.0 / 18.0 * h),
        ]
    })
}

pub fn weighted_integrals(u: &TestFunction, p: &LabParams) -> WeightedIntegrals {
    let w = p.w();
    let n = p.n;
    let mut out = WeightedIntegrals {
        d: 0.0,
        e: 0.0,
        g6: 0.0,
        a: 0.0,
        f: 0.0,
        gamma2: 0.0,
        b: 0.0,
        mass: 0.0,
        y: 0.0,
    };
    for (x, q) in gauss_nodes(u.length) {
        let j = u.jet(x);
        let s = x + p.eps;
        let (ln_s, ln_u) = (s.ln(), j.u.ln());
        let pw = |ws: f64, us: f64| (ws * ln_s + us * ln_u).exp();
        let ux2 = j.ux * j.ux;
        let uxx2 = j.uxx * j.uxx;
        out.d += q * pw(w, n) * j.uxxx * j.uxxx;
        out.e += q * pw(w, n - 2.0) * ux2 * uxx2;
        out.g6 += q * pw(w, n - 4.0) * ux2 * ux2 * ux2;
        out.a += q * pw(w - 2.0, n) * uxx2;
        out.f += q * pw(w - 2.0, n - 2.0) * ux2 * ux2;
        out.gamma2 += q * pw(w - 4.0, n) * ux2;
        out.b += q * pw(w - 6.0, n + 2.0);
        out.mass += q * s.powf(p.beta) * j.u;
        out.y += q * s.powf(p.gamma) * ux2;
    }
    out
}

/// `C2(η) = (1/η + (w-4)^2) / (n+1)^2`.
///
/// Integrating `Γ2` by parts gives `-(1/(n+1)) ∫X^(w-4) u^(n+1) u_xx - ((w-4)/(n+1)) ∫X^(w-5) u^(n+1) u_x`;
/// Young on each term with weights `η/2` and `1/2` and absorbing `Γ2/2`.
pub fn c2(p: &LabParams, eta: f64) -> f64 {
    let w = p.w();
    (1.0 / eta + (w - 4.0).powi(2)) / (p.n + 1.0).powi(2)
}

/// `C3(η) = 2 (c3 + s C2(1/(2s)))` with `c1 = 1/(2η)`, `c2 = n^2/η`,
/// `c3 = (w-2)^2/η`, `s = c1 + c2`.
///
/// After one integration by parts, Young leaves `η/2 D + η/2 E + s Γ2 + c3 B`;
/// the second inequality at `η' = 1/(2s)` turns `s Γ2` into `A/2 + s C2(η') B`.
pub fn c3(p: &LabParams, eta: f64) -> f64 {
    let w = p.w();
    let s = 1.0 / (2.0 * eta) + p.n * p.n / eta;
    let k3 = (w - 2.0).powi(2) / eta;
    2.0 * (k3 + s * c2(p, 1.0 / (2.0 * s)))
}

/// `C4(η) = 2 k1 C3(η/(2k1)) + 2 k2`, `k1 = 9/(n-1)^2`, `k2 = (27/4) (w-2)^4/(n-1)^4`.
///
/// The by-parts identity `F = -3/(n-1) ∫X^(w-2) u^(n-1) u_x^2 u_xx - (w-2)/(n-1) ∫X^(w-3) u^(n-1) u_x^3`
/// gives `F/4 + k1 A` for the first term. The second is `c P^(3/4) Q^(1/4)` with
/// `P` the integrand of `F`, `Q` that of `B`, `c = |w-2|/|n-1|`; Young with
/// exponents `4/3, 4` bounds it by `F/4 + (27/4) c^4 B`.
pub fn c4(p: &LabParams, eta: f64) -> f64 {
    let w = p.w();
    let k1 = 9.0 / (p.n - 1.0).powi(2);
    let k2 = 6.75 * (w - 2.0).powi(4) / (p.n - 1.0).powi(4);
    2.0 * k1 * c3(p, eta / (2.0 * k1)) + 2.0 * k2
}

/// Bounds `A`, `F` each at `η/3` and `Γ2 <= A + C2(1) B` with that `A` again at `η/3`.
pub fn c_inter(p: &LabParams, eta: f64) -> f64 {
    2.0 * c3(p, eta / 3.0) + c4(p, eta / 3.0) + c2(p, 1.0)
}

/// The two explicit coefficients `(25/((1-η)(n-3)^2), w^2/(η(1-η)(n-3)^2))`.
pub fn c6(p: &LabParams, eta: f64) -> (f64, f64) {
    let d = (1.0 - eta) * (p.n - 3.0).powi(2);
    (25.0 / d, p.w().powi(2) / (eta * d))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub bound: Bound,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub params: LabParams,
    pub pass: bool,
}

impl InequalityReport {
    fn new(bound: Bound, eta: Option<f64>, lhs: f64, rhs: f64, params: LabParams) -> Self {
        let margin = rhs - lhs;
        InequalityReport {
            bound,
            seed: None,
            eta,
            lhs,
            rhs,
            margin,
            params,
            pass: margin >= -TOL_REL * rhs.abs() && lhs.is_finite() && rhs.is_finite(),
        }
    }
}

pub fn check_inequality(bound: Bound, u: &TestFunction, p: &LabParams, eta: f64) -> Result<InequalityReport> {
    check_integrals(bound, &weighted_integrals(u, p), p, eta, 1.0)
}

/// As [`check_inequality`] on precomputed integrals; every constant is multiplied
/// by `constant_scale` (1 for the true inequality).
pub fn check_integrals(
    bound: Bound,
    ints: &WeightedIntegrals,
    p: &LabParams,
    eta: f64,
    constant_scale: f64,
) -> Result<InequalityReport> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(format!("eta must lie in (0, 1), got {eta}")));
    }
    let k = constant_scale;
    let (lhs, rhs) = match bound {
        Bound::Gamma2 => (ints.gamma2, eta * ints.a + k * c2(p, eta) * ints.b),
        Bound::Hessian => (ints.a, eta * (ints.d + ints.e) + k * c3(p, eta) * ints.b),
        Bound::Quartic => (ints.f, eta * (ints.d + ints.e) + k * c4(p, eta) * ints.b),
        Bound::Sextic => {
            let (a, b) = c6(p, eta);
            (ints.g6, k * (a * ints.e + b * ints.f))
        }
        Bound::Combined => (
            ints.a + ints.f + ints.gamma2,
            eta * (ints.d + ints.e) + k * c_inter(p, eta) * ints.b,
        ),
        Bound::Holder | Bound::Sup => return Err(Error::domain("pointwise bounds go through check_pointwise_bounds")),
    };
    Ok(InequalityReport::new(bound, Some(eta), lhs, rhs, *p))
}

/// Hölder and sup bounds on `POINTWISE_NODES` uniform nodes.
pub fn check_pointwise_bounds(u: &TestFunction, p: &LabParams) -> Result<[InequalityReport; 2]> {
    let (theta, _) = holder_exponents(p.gamma)?;
    let ints = weighted_integrals(u, p);
    let cells = POINTWISE_NODES - 1;
    let h = u.length / cells as f64;
    let x: Vec<f64> = (0..POINTWISE_NODES).map(|i| i as f64 * h).collect();
    let v = u.sample(&x);
    // uniform nodes: |x_j - x_i|^theta depends only on j - i
    let powers: Vec<f64> = (0..POINTWISE_NODES).map(|d| (d as f64 * h).powf(theta)).collect();
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let mut modulus = 0.0_f64;
    for i in 0..POINTWISE_NODES {
        for j in i + 1..POINTWISE_NODES {
            let d = powers[j - i];
            if (hi - lo) / d <= modulus {
                break;
            }
            modulus = modulus.max((v[j] - v[i]).abs() / d);
        }
    }
    let root_y = ints.y.sqrt();
    let holder = InequalityReport::new(
        Bound::Holder,
        None,
        modulus,
        holder_constant(p.gamma, p.length)? * root_y,
        *p,
    );
    let sup = InequalityReport::new(
        Bound::Sup,
        None,
        hi.max(-lo),
        sup_constant(p.beta, p.gamma, p.length)? * (ints.mass + root_y),
        *p,
    );
    Ok([holder, sup])
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSpec {
    pub size: usize,
    pub seed: u64,
    pub modes: usize,
    pub floor: f64,
    pub etas: Vec<f64>,
    pub bounds: Vec<Bound>,
    pub pointwise: bool,
    pub constant_scale: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            size: 1000,
            seed: 0,
            modes: 16,
            floor: 0.01,
            etas: vec![0.1, 0.5, 0.9],
            bounds: Bound::INTERPOLATION.to_vec(),
            pointwise: true,
            constant_scale: 1.0,
        }
    }
}

/// All reports for the corpus, ordered by function, then bound, then `η`.
pub fn run_corpus(spec: &CorpusSpec, p: &LabParams) -> Result<Vec<InequalityReport>> {
    let per_fn: Vec<Result<Vec<InequalityReport>>> = (0..spec.size as u64)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed.wrapping_add(i);
            let u = random_test_function(seed, spec.modes, spec.floor, p.length)?;
            let ints = weighted_integrals(&u, p);
            let mut out = Vec::new();
            for &bound in &spec.bounds {
                if matches!(bound, Bound::Holder | Bound::Sup) {
                    continue;
                }
                for &eta in &spec.etas {
                    let mut r = check_integrals(bound, &ints, p, eta, spec.constant_scale)?;
                    r.seed = Some(seed);
                    out.push(r);
                }
            }
            if spec.pointwise {
                for mut r in check_pointwise_bounds(&u, p)? {
                    r.seed = Some(seed);
                    out.push(r);
                }
            }
            Ok(out)
        })
        .collect();
    let mut reports = Vec::new();
    for r in per_fn {
        reports.extend(r?);
    }
    Ok(reports)
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpnessProbe {
    pub eta: f64,
    /// Largest `lhs / rhs` over the corpus.
    pub best_ratio: f64,
    pub best_seed: Option<u64>,
    /// Some report has `margin < 0.5 rhs`.
    pub pass: bool,
}

/// Looks for a `G6 <= a E + b F` report at the given `η` with `lhs > rhs / 2`.
pub fn sharpness_probe(reports: &[InequalityReport], eta: f64) -> SharpnessProbe {
    let mut best = (0.0, None);
    for r in reports {
        if r.bound == Bound::Sextic && r.eta == Some(eta) && r.rhs > 0.0 {
            let ratio = r.lhs / r.rhs;
            if ratio > best.0 {
                best = (ratio, r.seed);
            }
        }
    }
    SharpnessProbe {
        eta,
        best_ratio: best.0,
        best_seed: best.1,
        pass: best.0 > 0.5,
    }
}
