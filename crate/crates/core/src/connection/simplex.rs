//! Dense tableau simplex for max cᵀx subject to Ax ≤ b, x ≥ 0 with b ≥ 0,
//! so the slack basis is feasible from the start. Bland's rule prevents
//! cycling on the heavily degenerate Lipschitz programs used here.

use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
}

pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::LinearProgram("dimension mismatch".into()));
    }
    if b.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::LinearProgram(
            "right-hand side must be nonnegative".into(),
        ));
    }
    let width = n + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = 1.0;
        row[width - 1] = b[i];
    }
    // Objective row holds reduced costs -c; optimal when none is negative.
    for j in 0..n {
        t[m * width + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_pivots = 50 * (n + m).max(10) * (n + m).max(10);
    let mut pivots = 0;
    loop {
        let obj = &t[m * width..(m + 1) * width];
        let Some(enter) = (0..n + m).find(|&j| obj[j] < -TOL) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = t[i * width + enter];
            if aij > TOL {
                let ratio = t[i * width + width - 1] / aij;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - TOL || (ratio <= best + TOL && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Error::LinearProgram("objective is unbounded".into()));
        };
        pivot(&mut t, width, m, r, enter);
        basis[r] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::LinearProgram(format!(
                "no optimum after {pivots} pivots"
            )));
        }
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i * width + width - 1];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { value, x, pivots })
}

fn pivot(t: &mut [f64], width: usize, m: usize, r: usize, col: usize) {
    let p = t[r * width + col];
    for v in &mut t[r * width..(r + 1) * width] {
        *v /= p;
    }
    let prow: Vec<f64> = t[r * width..(r + 1) * width].to_vec();
    for i in 0..=m {
        if i == r {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for (v, pv) in t[i * width..(i + 1) * width].iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            t[i * width + col] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6).
        let sol = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((sol.value - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        let r = maximize(&[1.0, 1.0], &[vec![1.0, -1.0]], &[1.0]);
        assert!(matches!(r, Err(Error::LinearProgram(_))));
    }
}
