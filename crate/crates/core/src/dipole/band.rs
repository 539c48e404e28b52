//! Symmetric positive definite band matrices: lower storage, in-place Cholesky.

#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub size: usize,
    pub bw: usize,
    /// Row k holds entries (k, k - d) at k * (bw + 1) + d.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(size: usize, bw: usize) -> Self {
        BandMatrix {
            size,
            bw,
            data: vec![0.0; size * (bw + 1)],
        }
    }

    /// Adds v to entry (i, j) and, implicitly, (j, i); requires |i - j| ≤ bw.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.bw);
        self.data[r * (self.bw + 1) + (r - c)] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[r * (self.bw + 1) + (r - c)]
        }
    }

    pub fn shift_diagonal(&mut self, mu: f64) {
        for k in 0..self.size {
            self.data[k * (self.bw + 1)] += mu;
        }
    }

    /// Cholesky factor L with A = L Lᵀ, or `None` if A is not positive definite.
    pub fn cholesky(&self) -> Option<BandMatrix> {
        let w = self.bw + 1;
        let mut l = self.clone();
        for k in 0..self.size {
            let lo = k.saturating_sub(self.bw);
            for j in lo..=k {
                let mut s = l.data[k * w + (k - j)];
                let start = lo.max(j.saturating_sub(self.bw));
                for p in start..j {
                    s -= l.data[k * w + (k - p)] * l.data[j * w + (j - p)];
                }
                if j == k {
                    if !(s > 0.0) {
                        return None;
                    }
                    l.data[k * w] = s.sqrt();
                } else {
                    l.data[k * w + (k - j)] = s / l.data[j * w];
                }
            }
        }
        Some(l)
    }

    /// Solves L Lᵀ x = b with `self` holding L.
    pub fn solve_factored(&self, b: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut y = b.to_vec();
        for k in 0..self.size {
            let lo = k.saturating_sub(self.bw);
            let mut s = y[k];
            for p in lo..k {
                s -= self.data[k * w + (k - p)] * y[p];
            }
            y[k] = s / self.data[k * w];
        }
        for k in (0..self.size).rev() {
            let hi = (k + self.bw).min(self.size - 1);
            let mut s = y[k];
            for p in k + 1..=hi {
                s -= self.data[p * w + (p - k)] * y[p];
            }
            y[k] = s / self.data[k * w];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_laplacian() {
        let m = 50;
        let mut a = BandMatrix::zeros(m, 1);
        for k in 0..m {
            a.add(k, k, 2.0);
            if k > 0 {
                a.add(k, k - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..m).map(|k| (k as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..m)
            .map(|k| {
                let mut s = 2.0 * x[k];
                if k > 0 {
                    s -= x[k - 1];
                }
                if k + 1 < m {
                    s -= x[k + 1];
                }
                s
            })
            .collect();
        let sol = a.cholesky().unwrap().solve_factored(&b);
        for (u, v) in sol.iter().zip(&x) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn wide_band_matches_dense() {
        let (m, bw) = (30, 4);
        let mut a = BandMatrix::zeros(m, bw);
        for i in 0..m {
            a.add(i, i, 10.0 + i as f64 * 0.1);
            for d in 1..=bw {
                if i >= d {
                    a.add(i, i - d, 0.5 / d as f64 - 0.3 * ((i * d) % 3) as f64 * 0.1);
                }
            }
        }
        let b: Vec<f64> = (0..m).map(|k| 1.0 + k as f64).collect();
        let x = a.cholesky().unwrap().solve_factored(&b);
        for i in 0..m {
            let ax: f64 = (0..m).map(|j| a.get(i, j) * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = BandMatrix::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_none());
    }
}
