//! Banded LU factorization with partial pivoting.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square matrix stored by rows over the band `[-kl, ku + kl]` around the
/// diagonal; the extra `kl` upper diagonals hold pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix<T: Real> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Adds `v` at `(i, j)`; the entry must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.ku + self.kl {
            return T::zero();
        }
        self.data[self.slot(i, j)]
    }

    /// In-place factorization.
    #[allow(clippy::needless_range_loop)]
    pub fn factor(mut self) -> Result<BandLu<T>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut perm = vec![0usize; n];
        let scale = self.data.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let tiny = scale * T::default_epsilon() * T::from_usize(n.max(1)).unwrap_or_else(T::one);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularSystem("banded Jacobian"));
            }
            perm[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let v = self.data[self.slot(k, j)];
                    let sij = self.slot(i, j);
                    self.data[sij] -= l * v;
                }
            }
        }
        Ok(BandLu { m: self, perm })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu<T: Real> {
    m: BandMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    pub fn solve(&self, rhs: &DVector<T>) -> DVector<T> {
        let m = &self.m;
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        let mut b = rhs.clone();
        for k in 0..n {
            let p = self.perm[k];
            if p != k {
                b.swap_rows(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                b[i] -= m.data[m.slot(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + ku + kl).min(n - 1) {
                acc -= m.data[m.slot(i, j)] * b[j];
            }
            b[i] = acc / m.data[m.slot(i, i)];
        }
        b
    }
}
