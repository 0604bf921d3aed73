//! Positive cosine series `u(x) = c0 + Σ a_m cos(m π x / L)` with analytic derivatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_MODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub c0: f64,
    /// `a_1 ..= a_M`
    pub coeffs: Vec<f64>,
    pub length: f64,
    /// Guaranteed lower bound `c0 - Σ|a_m|`.
    pub floor: f64,
}

/// `(u, u_x, u_xx, u_xxx)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub u: f64,
    pub ux: f64,
    pub uxx: f64,
    pub uxxx: f64,
}

/// Draws `a_m` uniform in `[-1, 1] / m^2` and sets `c0 = Σ|a_m| + floor`.
pub fn random_test_function(seed: u64, modes: usize, floor: f64, length: f64) -> Result<TestFunction> {
    if modes > MAX_MODES {
        return Err(Error::domain(format!("at most {MAX_MODES} modes, got {modes}")));
    }
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::domain(format!("floor must be positive, got {floor}")));
    }
    if !(length > 0.0) {
        return Err(Error::domain(format!("length must be positive, got {length}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (1..=modes)
        .map(|m| rng.random_range(-1.0..=1.0) / (m * m) as f64)
        .collect();
    Ok(TestFunction::new(coeffs, floor, length))
}

impl TestFunction {
    pub fn new(coeffs: Vec<f64>, floor: f64, length: f64) -> Self {
        let c0 = coeffs.iter().map(|a| a.abs()).sum::<f64>() + floor;
        TestFunction {
            c0,
            coeffs,
            length,
            floor,
        }
    }

    pub fn constant(value: f64, length: f64) -> Self {
        TestFunction::new(Vec::new(), value, length)
    }

    pub fn jet(&self, x: f64) -> Jet {
        let base = std::f64::consts::PI / self.length;
        let (s1, c1) = (base * x).sin_cos();
        // cos(m t), sin(m t) by the three-term recurrence
        let (mut c_prev, mut s_prev) = (1.0, 0.0);
        let (mut c, mut s) = (c1, s1);
        let mut jet = Jet {
            u: self.c0,
            ux: 0.0,
            uxx: 0.0,
            uxxx: 0.0,
        };
        for (idx, &a) in self.coeffs.iter().enumerate() {
            let k = base * (idx + 1) as f64;
            let k2 = k * k;
            jet.u += a * c;
            jet.ux -= a * k * s;
            jet.uxx -= a * k2 * c;
            jet.uxxx += a * k2 * k * s;
            let c_next = 2.0 * c1 * c - c_prev;
            let s_next = 2.0 * c1 * s - s_prev;
            c_prev = c;
            s_prev = s;
            c = c_next;
            s = s_next;
        }
        jet
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).u
    }

    pub fn sample(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.value(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn zero_modes_is_constant() {
        let f = random_test_function(3, 0, 1.0, 1.0).unwrap();
        for i in 0..=10 {
            let j = f.jet(i as f64 / 10.0);
            assert_eq!((j.u, j.ux, j.uxx, j.uxxx), (1.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn boundary_slope_vanishes() {
        for seed in 0..20 {
            let f = random_test_function(seed, 16, 0.1, 2.0).unwrap();
            assert!(f.jet(0.0).ux == 0.0);
            assert!(f.jet(2.0).ux.abs() < 1e-12);
        }
    }

    #[test]
    fn dense_sampling_respects_floor() {
        for seed in 0..10 {
            let f = random_test_function(seed, 16, 0.05, 1.0).unwrap();
            let min = (0..=10_000)
                .map(|i| f.value(i as f64 / 10_000.0))
                .fold(f64::INFINITY, f64::min);
            assert!(min >= 0.05 - 1e-14, "{min}");
        }
    }

    #[test]
    fn recurrence_matches_direct_trig() {
        let f = random_test_function(11, 16, 0.2, 1.5).unwrap();
        for i in 0..50 {
            let x = 1.5 * i as f64 / 49.0;
            let direct: f64 = f.c0
                + f.coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, a)| a * ((m + 1) as f64 * std::f64::consts::PI * x / 1.5).cos())
                    .sum::<f64>();
            assert!((f.value(x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_derivatives_match_stencils() {
        let f = random_test_function(5, 6, 0.3, 1.0).unwrap();
        let err = |cells| {
            let g = Grid::build(cells, 1.0, 1.0).unwrap();
            let u = f.sample(g.nodes());
            let (d1, d2) = (g.d1(&u), g.d2(&u));
            let d3 = g.d1(&d2);
            (1..g.len() - 1)
                .map(|i| {
                    let j = f.jet(g.nodes()[i]);
                    (d1[i] - j.ux)
                        .abs()
                        .max((d2[i] - j.uxx).abs())
                        .max((d3[i] - j.uxxx).abs())
                })
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(256), err(512));
        assert!(a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(random_test_function(0, 17, 1.0, 1.0).is_err());
        assert!(random_test_function(0, 3, 0.0, 1.0).is_err());
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        assert_eq!(
            random_test_function(42, 16, 0.1, 1.0).unwrap(),
            random_test_function(42, 16, 0.1, 1.0).unwrap()
        );
        assert_ne!(
            random_test_function(42, 16, 0.1, 1.0).unwrap(),
            random_test_function(43, 16, 0.1, 1.0).unwrap()
        );
    }
}
