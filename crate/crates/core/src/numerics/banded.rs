//! Banded LU factorization with partial pivoting.

use crate::error::{Result, VarqError};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // row-major over the band; row r of storage is diagonal offset r - (kl + ku)
    // with room for kl extra fill-in superdiagonals
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix { n, kl, ku, data: vec![0.0; (2 * kl + ku + 1) * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) * self.n + j
    }

    /// True if (i, j) lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i <= j + self.kl && j <= i + self.kl + self.ku {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Add `v` to entry (i, j). Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
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

    /// Solve `A x = b`, consuming the matrix.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(VarqError::InvalidArgument(format!("rhs has {} entries for {n} rows", b.len())));
        }
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in j + 1..=last {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(VarqError::numerical("singular banded matrix", vec![("column".into(), j as f64)]));
            }
            piv[j] = p;
            let cmax = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=cmax {
                    let a = self.idx(j, c);
                    let bb = self.idx(p, c);
                    self.data.swap(a, bb);
                }
            }
            let d = self.get(j, j);
            for i in j + 1..=last {
                let ii = self.idx(i, j);
                let l = self.data[ii] / d;
                self.data[ii] = l;
                if l != 0.0 {
                    for c in j + 1..=cmax {
                        let u = self.data[self.idx(j, c)];
                        let t = self.idx(i, c);
                        self.data[t] -= l * u;
                    }
                }
            }
        }
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, piv[j]);
            let xj = x[j];
            for i in j + 1..=(j + kl).min(n - 1) {
                x[i] -= self.get(i, j) * xj;
            }
        }
        for i in (0..n).rev() {
            let cmax = (i + kl + ku).min(n - 1);
            let mut s = x[i];
            for c in i + 1..=cmax {
                s -= self.get(i, c) * x[c];
            }
            x[i] = s / self.get(i, i);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_band_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (6, 1, 1), (30, 3, 5), (40, 7, 2)] {
            let mut a = BandedMatrix::zeros(n, kl, ku);
            for i in 0..n {
                for j in 0..n {
                    if a.in_band(i, j) {
                        // weak diagonal forces pivoting
                        let v: f64 = rng.random_range(-1.0..1.0);
                        a.add(i, j, if i == j { 0.01 * v } else { v });
                    }
                }
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = a.mul_vec(&x_true);
            let x = a.clone().solve(&b).unwrap();
            let err = x.iter().zip(&x_true).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "n={n} err={err}");
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = BandedMatrix::zeros(3, 1, 1);
        assert!(a.solve(&[1.0, 2.0, 3.0]).is_err());
    }
}
