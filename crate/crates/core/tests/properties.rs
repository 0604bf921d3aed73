use std::f64::consts::PI;

use condensate_core::functionals::{grad_energy, holder_constant, holder_modulus, ode_bound, sup_estimate};
use condensate_core::model::Truncation;
use condensate_core::params::{eps0, nstar_root};
use condensate_core::{Grid, Model, Params, RawParams};
use proptest::prelude::*;

fn lerp(lo: f64, hi: f64, t: f64) -> f64 {
    lo + (hi - lo) * t
}

/// Valid parameter sets, built from unit fractions so every strict bound holds.
fn raw_params() -> impl Strategy<Value = RawParams> {
    (
        (0.01..0.99_f64, 0.01..0.99_f64, 0.01..0.99_f64, 0.01..0.99_f64),
        (0.2..3.0_f64, 0.01..0.99_f64, 2.0..200.0_f64),
    )
        .prop_map(|((tn, ta, tb, tg), (length, te, k))| {
            let n = lerp(nstar_root(), 3.0, tn);
            let alpha = lerp(3.0, 9.0, ta);
            let beta = lerp(-1.0, alpha - 4.0, tb);
            let gamma = lerp(5.0 - alpha + beta, 1.0, tg);
            let eps = lerp(0.0, 0.5 * eps0(length), te);
            RawParams {
                n,
                alpha,
                beta,
                gamma,
                length,
                eps,
                k,
                eps_star: None,
            }
        })
}

fn smooth_state(grid: &Grid, amps: &[f64]) -> Vec<f64> {
    let c = 1.0 + amps.iter().map(|a| a.abs()).sum::<f64>();
    grid.nodes()
        .iter()
        .map(|&x| {
            c + amps
                .iter()
                .enumerate()
                .map(|(m, a)| a * ((m + 1) as f64 * PI * x / grid.length()).cos())
                .sum::<f64>()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_is_monotone_and_bounded(k in 1.0..500.0_f64, a in 0.0..1.0_f64, b in 0.0..1.0_f64) {
        let f = Truncation::new(k);
        // cover [0, 3k] with extra resolution near the lower blend
        let map = |t: f64| if t < 0.5 { 4.0 * t * t / k } else { 3.0 * k * (t - 0.5) * 2.0 };
        let (s1, s2) = (map(a.min(b)), map(a.max(b)));
        prop_assert!(f.value(s1) <= f.value(s2));
        prop_assert!(f.value(s1) >= 0.5 / k && f.value(s2) <= 2.0 * k);
        prop_assert!(f.derivative(s1) >= 0.0);
        if (1.0 / k..=k).contains(&s1) {
            prop_assert_eq!(f.value(s1), s1);
        }
    }

    #[test]
    fn truncation_derivative_matches_difference(k in 1.0..100.0_f64, t in 0.0..1.0_f64) {
        let f = Truncation::new(k);
        let s = 2.5 * k * t;
        let h = 1e-6 * k.max(1.0);
        let fd = (f.value(s + h) - f.value(s - h)) / (2.0 * h);
        prop_assert!((fd - f.derivative(s)).abs() <= 1e-5, "{} {}", fd, f.derivative(s));
    }

    #[test]
    fn validation_is_idempotent(raw in raw_params()) {
        let p = Params::validate(&raw).unwrap();
        prop_assert_eq!(Params::validate(&p.to_raw()).unwrap(), p);
    }

    #[test]
    fn second_difference_is_linear(
        cells in 16usize..80,
        grading in 1.0..3.0_f64,
        a in -3.0..3.0_f64,
        b in -3.0..3.0_f64,
        seed in 0u64..1000,
    ) {
        let grid = Grid::build(cells, 1.0, grading).unwrap();
        let x = grid.nodes();
        let u: Vec<f64> = x.iter().map(|v| (v * (seed as f64 + 1.0)).sin()).collect();
        let v: Vec<f64> = x.iter().map(|v| (v * v + seed as f64).cos()).collect();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect();
        let (du, dv, dm) = (grid.d2(&u), grid.d2(&v), grid.d2(&mix));
        let scale = du.iter().chain(&dv).fold(1.0_f64, |m, d| m.max(d.abs()));
        for i in 0..x.len() {
            prop_assert!((dm[i] - (a * du[i] + b * dv[i])).abs() <= 1e-11 * scale * (a.abs() + b.abs() + 1.0));
        }
    }

    #[test]
    fn ode_existence_time_is_monotone(
        a in 0.0..5.0_f64,
        c5 in 0.0..5.0_f64,
        c6 in 0.0..5.0_f64,
        bump in 0.01..2.0_f64,
        n in 1.6..2.9_f64,
    ) {
        let t0 = ode_bound(a, c5, c6, n).unwrap().t0;
        let slack = 1e-8;
        prop_assert!(ode_bound(a + bump, c5, c6, n).unwrap().t0 <= t0 + slack);
        prop_assert!(ode_bound(a, c5 + bump, c6, n).unwrap().t0 <= t0 + slack);
        prop_assert!(ode_bound(a, c5, c6 + bump, n).unwrap().t0 <= t0 + slack);
        prop_assert!(t0 > 0.0 && t0 <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flux_form_conserves_weighted_mass(
        raw in raw_params(),
        amps in prop::collection::vec(-0.3..0.3_f64, 4),
        cells in 24usize..96,
        grading in 1.0..2.5_f64,
    ) {
        let p = Params::validate(&raw).unwrap();
        let model = Model::new(p, Grid::build(cells, raw.length, grading).unwrap()).unwrap();
        let u = smooth_state(model.grid(), &amps);
        let rhs = model.rhs(&u);
        let w = model.grid().weights();
        let b = &model.tables().wbeta;
        let (mut sum, mut scale) = (0.0, 0.0);
        for i in 0..u.len() {
            sum += w[i] * b[i] * rhs[i];
            scale += (w[i] * b[i] * rhs[i]).abs();
        }
        prop_assert!(sum.abs() <= 1e-11 * scale.max(f64::MIN_POSITIVE), "{} vs {}", sum, scale);
    }

    #[test]
    fn a_priori_bounds_hold_on_smooth_states(
        raw in raw_params(),
        amps in prop::collection::vec(-0.5..0.5_f64, 4),
    ) {
        let p = Params::validate(&raw).unwrap();
        let model = Model::new(p, Grid::build(512, raw.length, 1.0).unwrap()).unwrap();
        let u = smooth_state(model.grid(), &amps);
        let sup = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(sup <= sup_estimate(&model, &u));
        let (theta, _) = condensate_core::params::holder_exponents(p.gamma).unwrap();
        let modulus = holder_modulus(model.grid().nodes(), &u, theta).unwrap();
        let bound = holder_constant(p.gamma, p.length).unwrap() * grad_energy(&model, &u).sqrt();
        prop_assert!(modulus <= bound * (1.0 + 1e-3), "{} > {}", modulus, bound);
    }
}
