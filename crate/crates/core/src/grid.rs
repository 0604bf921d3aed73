//! One-dimensional mesh on `[0, L]` with reflecting difference stencils.
//!
//! `d2` is the three-point operator written in flux form over trapezoid control
//! volumes, so `Σ w_i (d2 v)_i = 0` for every `v`. Both endpoints use even
//! reflection (`v_{-1} = v_1`), which makes odd derivatives vanish there.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    widths: Vec<f64>,
    weights: Vec<f64>,
    grading: f64,
}

impl Grid {
    /// `cells + 1` nodes at `x_i = L (i / cells)^p`.
    pub fn build(cells: usize, length: f64, grading: f64) -> Result<Grid> {
        if cells < 16 {
            return Err(Error::domain(format!("grid needs at least 16 cells, got {cells}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::domain(format!("grid length must be positive, got {length}")));
        }
        if !(1.0..=3.0).contains(&grading) {
            return Err(Error::domain(format!(
                "grading exponent must lie in [1, 3], got {grading}"
            )));
        }
        let nodes: Vec<f64> = (0..=cells)
            .map(|i| {
                if i == cells {
                    length
                } else {
                    length * (i as f64 / cells as f64).powf(grading)
                }
            })
            .collect();
        Ok(Self::from_nodes(nodes, grading))
    }

    fn from_nodes(nodes: Vec<f64>, grading: f64) -> Grid {
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let m = nodes.len();
        let mut weights = vec![0.0; m];
        for (i, h) in widths.iter().enumerate() {
            weights[i] += 0.5 * h;
            weights[i + 1] += 0.5 * h;
        }
        Grid {
            nodes,
            widths,
            weights,
            grading,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.widths.len()
    }

    pub fn length(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Spacings to the left and right of node `i`, mirrored at the ends.
    #[inline]
    fn spacing(&self, i: usize) -> (f64, f64) {
        let last = self.widths.len();
        let left = if i == 0 { self.widths[0] } else { self.widths[i - 1] };
        let right = if i == last {
            self.widths[last - 1]
        } else {
            self.widths[i]
        };
        (left, right)
    }

    /// First derivative at node `i`; zero at both ends.
    #[inline]
    pub fn d1_at(&self, v: &[f64], i: usize) -> f64 {
        let last = self.widths.len();
        if i == 0 || i == last {
            return 0.0;
        }
        let (hl, hr) = self.spacing(i);
        (hl * hl * (v[i + 1] - v[i]) + hr * hr * (v[i] - v[i - 1])) / (hl * hr * (hl + hr))
    }

    /// Second derivative at node `i` in flux form.
    #[inline]
    pub fn d2_at(&self, v: &[f64], i: usize) -> f64 {
        let last = self.widths.len();
        let right = if i == last {
            0.0
        } else {
            (v[i + 1] - v[i]) / self.widths[i]
        };
        let left = if i == 0 {
            0.0
        } else {
            (v[i] - v[i - 1]) / self.widths[i - 1]
        };
        (right - left) / self.weights[i]
    }

    pub fn d1(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.len());
        (0..self.len()).map(|i| self.d1_at(v, i)).collect()
    }

    pub fn d2(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.len());
        (0..self.len()).map(|i| self.d2_at(v, i)).collect()
    }

    /// Trapezoid rule for `∫ weight(x) f(x) dx`.
    pub fn quad(&self, weight: &[f64], f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(weight)
            .zip(f)
            .map(|((w, a), b)| w * a * b)
            .sum()
    }

    /// Trapezoid rule for `∫ f(x) dx`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, b)| w * b).sum()
    }

    /// Values with two ghost nodes per side by even reflection:
    /// `[v2, v1, v0, .., vN, v(N-1), v(N-2)]`.
    pub fn ghost_extend(&self, v: &[f64]) -> Vec<f64> {
        let m = v.len();
        let mut out = Vec::with_capacity(m + 4);
        out.push(v[2]);
        out.push(v[1]);
        out.extend_from_slice(v);
        out.push(v[m - 2]);
        out.push(v[m - 3]);
        out
    }
}
