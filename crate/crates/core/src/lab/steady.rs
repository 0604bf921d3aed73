//! Power-law stationary states `u = x^-sigma` of the unregularized equation.
//!
//! With `g = x^alpha` the flux is `F = x^alpha u^(n+2) (1/u)_xx
//! = sigma (sigma - 1) x^e`, `e = alpha - (n+1) sigma - 2`, so `F_xx` vanishes
//! identically exactly when `sigma ∈ {0, 1}` or `e ∈ {0, 1}`.

use serde::Serialize;

use crate::error::{Error, Result};

/// The four exponents with `F_xx ≡ 0`, ascending.
pub fn exceptional_sigmas(alpha: f64, n: f64) -> [f64; 4] {
    let mut s = [0.0, 1.0, (alpha - 3.0) / (n + 1.0), (alpha - 2.0) / (n + 1.0)];
    s.sort_by(f64::total_cmp);
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyReport {
    pub sigma: f64,
    /// `e = alpha - (n+1) sigma - 2`
    pub exponent: f64,
    /// `sigma (sigma-1) e (e-1)`, the coefficient of `x^(e-2)` in `F_xx`.
    pub coefficient: f64,
    pub stationary: bool,
    pub cells: usize,
    pub x_cut: f64,
    /// `max |D2 F_h|` over interior nodes of `[x_cut, L]`.
    pub residual_norm: f64,
    /// `max |D2 F_h - F_xx|` over the same nodes.
    pub closed_form_error: f64,
}

fn d2_interior(x: &[f64], v: &[f64], i: usize) -> f64 {
    let hl = x[i] - x[i - 1];
    let hr = x[i + 1] - x[i];
    ((v[i + 1] - v[i]) / hr - (v[i] - v[i - 1]) / hl) / (0.5 * (hl + hr))
}

/// `(x+h)^s - 2 x^s + (x-h)^s`. For `h/x <= 1/2` it is summed as
/// `2 x^s Σ_j C(s, 2j) (h/x)^(2j)`, which avoids the cancellation of the
/// direct form; exactly zero for `s ∈ {0, 1}` either way.
fn power_second_difference(x: f64, h: f64, s: f64) -> f64 {
    let t = h / x;
    if t > 0.5 {
        return (x + h).powf(s) - 2.0 * x.powf(s) + (x - h).powf(s);
    }
    let t2 = t * t;
    let (mut binom, mut power, mut sum) = (1.0, 1.0, 0.0_f64);
    for k in 1..=400 {
        binom *= (s - (k - 1) as f64) / k as f64;
        if k % 2 == 0 {
            power *= t2;
            let term = binom * power;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
    }
    2.0 * x.powf(s) * sum
}

/// Discrete flux `x^alpha u^(n+2) D2(x^sigma)` on a uniform mesh of `[x_cut, L]`,
/// followed by one more `D2`.
pub fn steady_residual(sigma: f64, alpha: f64, n: f64, length: f64, x_cut: f64, cells: usize) -> Result<SteadyReport> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
    }
    if !(x_cut > 0.0 && x_cut < length) {
        return Err(Error::domain(format!("x_cut must lie in (0, L), got {x_cut}")));
    }
    if cells < 4 {
        return Err(Error::domain("steady residual needs at least 4 cells"));
    }
    let e = alpha - (n + 1.0) * sigma - 2.0;
    let coefficient = sigma * (sigma - 1.0) * e * (e - 1.0);
    let h = (length - x_cut) / cells as f64;
    let x: Vec<f64> = (0..=cells).map(|i| x_cut + i as f64 * h).collect();
    // 1/u = x^sigma; D2(1/u) is the uniform three-point stencil
    let mut flux = vec![0.0; x.len()];
    for i in 1..cells {
        let u = x[i].powf(-sigma);
        flux[i] = x[i].powf(alpha) * u.powf(n + 2.0) * power_second_difference(x[i], h, sigma) / (h * h);
    }
    let mut residual_norm = 0.0_f64;
    let mut closed_form_error = 0.0_f64;
    for i in 2..cells - 1 {
        let r = d2_interior(&x, &flux, i);
        residual_norm = residual_norm.max(r.abs());
        closed_form_error = closed_form_error.max((r - coefficient * x[i].powf(e - 2.0)).abs());
    }
    Ok(SteadyReport {
        sigma,
        exponent: e,
        coefficient,
        stationary: coefficient == 0.0,
        cells,
        x_cut,
        residual_norm,
        closed_form_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn physical_exceptional_set() {
        let s = exceptional_sigmas(6.5, 2.0);
        assert_eq!(s, [0.0, 1.0, 7.0 / 6.0, 1.5]);
    }

    #[test]
    fn trivial_members_are_exact() {
        for sigma in [0.0, 1.0] {
            let r = steady_residual(sigma, 6.5, 2.0, 1.0, 0.1, 256).unwrap();
            assert!(r.stationary);
            assert!(r.residual_norm <= 1e-12, "{}", r.residual_norm);
        }
    }

    #[test]
    fn nontrivial_members_converge_second_order() {
        for sigma in [7.0 / 6.0, 1.5] {
            let a = steady_residual(sigma, 6.5, 2.0, 1.0, 0.1, 256).unwrap();
            let b = steady_residual(sigma, 6.5, 2.0, 1.0, 0.1, 512).unwrap();
            assert!(a.stationary);
            assert!(
                a.residual_norm / b.residual_norm >= 3.5,
                "{sigma}: {} {}",
                a.residual_norm,
                b.residual_norm
            );
        }
    }

    #[test]
    fn second_difference_series_matches_direct_form() {
        for (x, h, s) in [
            (0.5_f64, 0.1_f64, 1.5_f64),
            (1.0, 0.01, 7.0 / 6.0),
            (0.2, 0.09, -2.5),
            (2.0, 0.3, 3.0),
        ] {
            let direct: f64 = (x + h).powf(s) - 2.0 * x.powf(s) + (x - h).powf(s);
            let series = power_second_difference(x, h, s);
            assert!(
                (series - direct).abs() <= 1e-12 * direct.abs(),
                "{x} {h} {s}: {series} {direct}"
            );
        }
        assert_eq!(power_second_difference(0.3, 0.01, 1.0), 0.0);
        assert_eq!(power_second_difference(0.3, 0.01, 0.0), 0.0);
    }

    #[test]
    fn ratio_stays_second_order_on_fine_meshes() {
        let r: Vec<f64> = [1024, 2048, 4096]
            .iter()
            .map(|&n| steady_residual(1.5, 6.5, 2.0, 1.0, 0.1, n).unwrap().residual_norm)
            .collect();
        assert!(r[0] / r[1] >= 3.5 && r[1] / r[2] >= 3.5, "{r:?}");
    }

    #[test]
    fn non_member_matches_closed_form() {
        let a = steady_residual(1.2, 6.5, 2.0, 1.0, 0.1, 256).unwrap();
        let b = steady_residual(1.2, 6.5, 2.0, 1.0, 0.1, 512).unwrap();
        assert!((a.exponent - 0.9).abs() < 1e-12);
        assert!(!a.stationary);
        assert!(a.residual_norm > 1e-3);
        assert!(a.closed_form_error / b.closed_form_error >= 3.5);
    }

    #[test]
    fn bad_arguments() {
        assert!(steady_residual(-1.0, 6.5, 2.0, 1.0, 0.1, 64).is_err());
        assert!(steady_residual(1.0, 6.5, 2.0, 1.0, 1.5, 64).is_err());
    }
}
