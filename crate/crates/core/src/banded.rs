//! Banded storage and LU with partial pivoting.
//!
//! Row `i` keeps columns `i - kl ..= i + kl + ku`; the extra `kl` columns on the
//! right absorb fill-in from row swaps.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// True when `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.kl + self.ku {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place factorization; consumes the matrix.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = kl + self.ku;
        let mut perm = Vec::with_capacity(n);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Internal(format!("singular banded matrix at column {k}")));
            }
            perm.push(p);
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let sr = self.slot(r, k);
                let factor = self.data[sr] / pivot;
                self.data[sr] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let upd = factor * self.data[self.slot(k, j)];
                    let s = self.slot(r, j);
                    self.data[s] -= upd;
                }
            }
        }
        Ok(BandLu { lu: self, perm })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    perm: Vec<usize>,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.lu;
        let n = a.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.perm[k];
            if p != k {
                b.swap(k, p);
            }
            let last_row = (k + a.kl).min(n - 1);
            let bk = b[k];
            for (r, br) in b.iter_mut().enumerate().take(last_row + 1).skip(k + 1) {
                *br -= a.data[a.slot(r, k)] * bk;
            }
        }
        let reach = a.kl + a.ku;
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut s = b[k];
            for (j, bj) in b.iter().enumerate().take(last_col + 1).skip(k + 1) {
                s -= a.data[a.slot(k, j)] * bj;
            }
            b[k] = s / a.data[a.slot(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
