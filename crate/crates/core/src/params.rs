//! Model parameters and the admissibility region for local solvability.
//!
//! The exponents enter the equation
//! `u_t = (x+eps)^-beta * (g_eps(x) u^(n+2) (1/u)_xx)_xx`, with `g_eps ~ (x+eps)^alpha`,
//! and `gamma` is the power in the weighted gradient energy `∫ (x+eps)^gamma u_x^2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cubic whose unique positive root is the lower bound on `n`.
pub fn critical_polynomial(n: f64) -> f64 {
    ((n + 5.0) * n + 16.0) * n - 40.0
}

/// Unique positive root of `n^3 + 5n^2 + 16n - 40`, by bisection on `[1, 2]`.
pub fn nstar_root() -> f64 {
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = critical_polynomial(mid);
        if p == 0.0 {
            return mid;
        }
        if p < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if critical_polynomial(lo).abs() <= critical_polynomial(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Spatial and temporal Hölder exponents `(theta, theta / (2 theta + 3))`.
pub fn holder_exponents(gamma: f64) -> Result<(f64, f64)> {
    if !gamma.is_finite() || gamma >= 1.0 {
        return Err(Error::domain(format!("holder exponents need gamma < 1, got {gamma}")));
    }
    let theta = f64::min(0.5, 0.5 * (1.0 - gamma));
    Ok((theta, theta / (2.0 * theta + 3.0)))
}

/// Largest admissible regularization parameter, `min{1, sqrt(L/2)}`.
pub fn eps0(length: f64) -> f64 {
    f64::min(1.0, (0.5 * length).sqrt())
}

/// Unvalidated parameters as they come from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(rename = "L", alias = "length")]
    pub length: f64,
    pub eps: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    /// Cap on `eps` below `eps0`; defaults to `eps0 / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_star: Option<f64>,
}

fn default_k() -> f64 {
    100.0
}

impl RawParams {
    /// The physical exponents `n = 2`, `alpha = 13/2`, `beta = 1/2` with `gamma = 0`.
    pub fn physical(length: f64, eps: f64) -> Self {
        RawParams {
            n: 2.0,
            alpha: 6.5,
            beta: 0.5,
            gamma: 0.0,
            length,
            eps,
            k: default_k(),
            eps_star: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Machine-readable name such as `gamma.lower`.
    pub name: String,
    /// The bound that was crossed.
    pub bound: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn names(&self) -> Vec<&str> {
        self.violations.iter().map(|v| v.name.as_str()).collect()
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters:")?;
        for v in &self.violations {
            write!(f, " {} (value {}, bound {});", v.name, v.value, v.bound)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub nstar: f64,
    pub theta: f64,
    pub theta_time: f64,
    pub eps0: f64,
    pub eps_star: f64,
}

/// Parameters inside the admissibility region. Construct with [`Params::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub length: f64,
    pub eps: f64,
    pub k: f64,
    pub derived: DerivedConstants,
}

impl Params {
    /// Checks every strict inequality and reports all violations at once.
    pub fn validate(raw: &RawParams) -> std::result::Result<Params, ValidationError> {
        let mut violations = Vec::new();
        let mut push = |name: &str, bound: f64, value: f64| {
            violations.push(Violation {
                name: name.to_string(),
                bound,
                value,
            })
        };

        let fields = [
            ("n", raw.n),
            ("alpha", raw.alpha),
            ("beta", raw.beta),
            ("gamma", raw.gamma),
            ("L", raw.length),
            ("eps", raw.eps),
            ("k", raw.k),
        ];
        let mut finite = true;
        for (name, value) in fields {
            if !value.is_finite() {
                push(&format!("{name}.finite"), f64::NAN, value);
                finite = false;
            }
        }
        if let Some(cap) = raw.eps_star {
            if !cap.is_finite() {
                push("eps_star.finite", f64::NAN, cap);
                finite = false;
            }
        }
        if !finite {
            return Err(ValidationError { violations });
        }

        let nstar = nstar_root();
        if raw.n <= nstar {
            push("n.lower", nstar, raw.n);
        }
        if raw.n >= 3.0 {
            push("n.upper", 3.0, raw.n);
        }
        if raw.alpha <= 3.0 {
            push("alpha.lower", 3.0, raw.alpha);
        }
        if raw.beta <= -1.0 {
            push("beta.lower", -1.0, raw.beta);
        }
        if raw.beta >= raw.alpha - 4.0 {
            push("beta.upper", raw.alpha - 4.0, raw.beta);
        }
        let gamma_lower = 5.0 - raw.alpha + raw.beta;
        if raw.gamma <= gamma_lower {
            push("gamma.lower", gamma_lower, raw.gamma);
        }
        if raw.gamma >= 1.0 {
            push("gamma.upper", 1.0, raw.gamma);
        }
        if raw.length <= 0.0 {
            push("L.lower", 0.0, raw.length);
        }
        if raw.k < 1.0 {
            push("k.lower", 1.0, raw.k);
        }
        let e0 = if raw.length > 0.0 { eps0(raw.length) } else { 0.0 };
        if raw.eps <= 0.0 {
            push("eps.lower", 0.0, raw.eps);
        }
        if raw.eps >= e0 {
            push("eps.upper", e0, raw.eps);
        }
        let eps_star = raw.eps_star.unwrap_or(0.5 * e0);
        if raw.eps_star.is_some() && (eps_star <= 0.0 || eps_star > e0) {
            push("eps_star.range", e0, eps_star);
        }
        if raw.eps < e0 && raw.eps >= eps_star {
            push("eps.star", eps_star, raw.eps);
        }

        if !violations.is_empty() {
            return Err(ValidationError { violations });
        }

        // Both follow from the inequalities above.
        let w = raw.alpha - raw.beta + raw.gamma;
        assert!(w > 5.0, "alpha - beta + gamma = {w} must exceed 5");
        assert!(raw.alpha + raw.beta - raw.gamma + 2.0 > 3.0);

        let (theta, theta_time) = holder_exponents(raw.gamma).expect("gamma < 1 was checked above");
        Ok(Params {
            n: raw.n,
            alpha: raw.alpha,
            beta: raw.beta,
            gamma: raw.gamma,
            length: raw.length,
            eps: raw.eps,
            k: raw.k,
            derived: DerivedConstants {
                nstar,
                theta,
                theta_time,
                eps0: e0,
                eps_star,
            },
        })
    }

    pub fn to_raw(&self) -> RawParams {
        RawParams {
            n: self.n,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            length: self.length,
            eps: self.eps,
            k: self.k,
            eps_star: Some(self.derived.eps_star),
        }
    }

    /// Same parameters with a different `eps`, revalidated.
    pub fn with_eps(&self, eps: f64) -> std::result::Result<Params, ValidationError> {
        let mut raw = self.to_raw();
        raw.eps = eps;
        Params::validate(&raw)
    }

    /// `alpha - beta + gamma`, the weight exponent of the dissipation integrals.
    pub fn dissipation_power(&self) -> f64 {
        self.alpha - self.beta + self.gamma
    }
}
