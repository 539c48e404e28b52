//! Discrete I and weighted gap on a log-radius grid, minimized over the
//! cone by FISTA with an isotonic projection and an active-set Newton polish.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::variational::g0::ConeConstraint;

pub const MIN_NODES: usize = 64;
pub const MAX_ITERATIONS: usize = 100_000;
const MIN_SEGMENT_CELLS: usize = 8;

/// Log-spaced nodes on [s, 1] with s̃ as node `split`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeGrid {
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub split: usize,
}

pub fn cone_grid(c: &ConeConstraint, nodes: usize) -> Result<ConeGrid> {
    c.validate()?;
    if nodes < MIN_NODES {
        return Err(Error::param(
            "nodes",
            format!("need at least {MIN_NODES}, got {nodes}"),
        ));
    }
    let cells = nodes - 1;
    let (xs, xt) = (c.s.ln(), c.s_tilde.ln());
    let cells1 = if c.s_tilde == 1.0 {
        cells
    } else {
        let frac = (xt - xs) / -xs;
        ((cells as f64 * frac).round() as usize).clamp(MIN_SEGMENT_CELLS, cells - MIN_SEGMENT_CELLS)
    };
    let mut x = Vec::with_capacity(nodes);
    for k in 0..cells1 {
        x.push(xs + (xt - xs) * k as f64 / cells1 as f64);
    }
    x.push(xt);
    let cells2 = cells - cells1;
    for k in 1..=cells2 {
        x.push(if k == cells2 {
            0.0
        } else {
            xt - xt * k as f64 / cells2 as f64
        });
    }
    let mut r: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    r[0] = c.s;
    r[cells1] = c.s_tilde;
    *r.last_mut().unwrap() = 1.0;
    Ok(ConeGrid {
        r,
        x,
        split: cells1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// I(g) = ∫(|g_x| - n g)² dx.
    Unit,
    /// E - A = 4π∫(|g_x| - n g)²/(1 + g²)² dx.
    Conformal,
}

impl Weight {
    fn eval(self, m: f64) -> (f64, f64, f64) {
        match self {
            Weight::Unit => (1.0, 0.0, 0.0),
            Weight::Conformal => {
                let p = 1.0 + m * m;
                let c = 4.0 * PI;
                (
                    c / (p * p),
                    -4.0 * c * m / (p * p * p),
                    c * (-4.0 / (p * p * p) + 24.0 * m * m / (p * p * p * p)),
                )
            }
        }
    }
}

/// One monotone stretch of the cone: nodes `x`, direction `sigma` (+1 increasing).
#[derive(Debug, Clone, Copy)]
struct Segment<'a> {
    x: &'a [f64],
    sigma: f64,
    n: f64,
    weight: Weight,
}

struct Cell {
    f: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

impl<'a> Segment<'a> {
    fn cell(&self, k: usize, g0: f64, g1: f64) -> Cell {
        let dx = self.x[k + 1] - self.x[k];
        let m = 0.5 * (g0 + g1);
        let q = self.sigma * (g1 - g0) / dx - self.n * m;
        let dq = [
            -self.sigma / dx - 0.5 * self.n,
            self.sigma / dx - 0.5 * self.n,
        ];
        let (w, w1, w2) = self.weight.eval(m);
        let mut hess = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                hess[i][j] =
                    dx * (0.25 * w2 * q * q + w1 * q * (dq[i] + dq[j]) + 2.0 * w * dq[i] * dq[j]);
            }
        }
        Cell {
            f: dx * w * q * q,
            grad: [
                dx * (0.5 * w1 * q * q + 2.0 * w * q * dq[0]),
                dx * (0.5 * w1 * q * q + 2.0 * w * q * dq[1]),
            ],
            hess,
        }
    }

    fn value(&self, g: &[f64]) -> f64 {
        (0..g.len() - 1)
            .map(|k| self.cell(k, g[k], g[k + 1]).f)
            .sum()
    }

    fn gradient(&self, g: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..g.len() - 1 {
            let c = self.cell(k, g[k], g[k + 1]);
            out[k] += c.grad[0];
            out[k + 1] += c.grad[1];
        }
    }

    /// Σ of |per-cell gradient contributions|; does not cancel at a stationary point.
    fn gross_gradient(&self, g: &[f64]) -> f64 {
        (0..g.len() - 1)
            .map(|k| {
                let c = self.cell(k, g[k], g[k + 1]);
                c.grad[0].abs() + c.grad[1].abs()
            })
            .sum::<f64>()
            + f64::MIN_POSITIVE
    }

    /// Tridiagonal Hessian: (diagonal, superdiagonal).
    fn hessian(&self, g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut d = vec![0.0; g.len()];
        let mut o = vec![0.0; g.len() - 1];
        for k in 0..g.len() - 1 {
            let c = self.cell(k, g[k], g[k + 1]);
            d[k] += c.hess[0][0];
            d[k + 1] += c.hess[1][1];
            o[k] = c.hess[0][1];
        }
        (d, o)
    }

    /// Euclidean projection of the interior onto the monotone set between the pins.
    fn project(&self, g: &mut [f64]) {
        let last = g.len() - 1;
        let (lo, hi) = (self.sigma * g[0], self.sigma * g[last]);
        let mut y: Vec<f64> = g[1..last].iter().map(|v| self.sigma * v).collect();
        pava(&mut y);
        for (dst, v) in g[1..last].iter_mut().zip(y) {
            *dst = self.sigma * v.clamp(lo, hi);
        }
    }
}

/// Pool-adjacent-violators: in-place least-squares nondecreasing fit.
pub fn pava(y: &mut [f64]) {
    let mut vals: Vec<f64> = Vec::with_capacity(y.len());
    let mut counts: Vec<usize> = Vec::with_capacity(y.len());
    for &v in y.iter() {
        vals.push(v);
        counts.push(1);
        while vals.len() > 1 && vals[vals.len() - 2] > vals[vals.len() - 1] {
            let (v2, c2) = (vals.pop().unwrap(), counts.pop().unwrap());
            let (v1, c1) = (vals.pop().unwrap(), counts.pop().unwrap());
            vals.push((v1 * c1 as f64 + v2 * c2 as f64) / (c1 + c2) as f64);
            counts.push(c1 + c2);
        }
    }
    let mut i = 0;
    for (v, c) in vals.into_iter().zip(counts) {
        y[i..i + c].iter_mut().for_each(|t| *t = v);
        i += c;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves a symmetric tridiagonal system; `None` unless positive definite.
fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = diag.len();
    let mut d = diag.to_vec();
    let mut y = rhs.to_vec();
    for i in 1..m {
        if !(d[i - 1] > 0.0) {
            return None;
        }
        let l = off[i - 1] / d[i - 1];
        d[i] -= l * off[i - 1];
        y[i] -= l * y[i - 1];
    }
    if m > 0 && !(d[m - 1] > 0.0) {
        return None;
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let next = if i + 1 < m { off[i] * x[i + 1] } else { 0.0 };
        x[i] = (y[i] - next) / d[i];
    }
    Some(x)
}

struct SegmentOutcome {
    iterations: usize,
    residual: f64,
    polished: bool,
}

impl<'a> Segment<'a> {
    /// Newton on the tie pattern of `g`, followed by a KKT check.
    fn polish(&self, g: &[f64]) -> Option<Vec<f64>> {
        let len = g.len();
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for k in 0..len - 1 {
            if g[k + 1] != g[k] {
                blocks.push((start, k));
                start = k + 1;
            }
        }
        blocks.push((start, len - 1));
        let nb = blocks.len();
        if nb < 2 {
            return Some(g.to_vec());
        }
        let mut cur = g.to_vec();
        let mut fcur = self.value(&cur);
        let mut grad = vec![0.0; len];
        let free = 1..nb - 1;
        for _ in 0..30 {
            if free.is_empty() {
                break;
            }
            self.gradient(&cur, &mut grad);
            let (hd, ho) = self.hessian(&cur);
            let m = nb - 2;
            let mut bd = vec![0.0; m];
            let mut bo = vec![0.0; m.saturating_sub(1)];
            let mut bg = vec![0.0; m];
            for (j, b) in free.clone().enumerate() {
                let (p, q) = blocks[b];
                bg[j] = -grad[p..=q].iter().sum::<f64>();
                bd[j] = hd[p..=q].iter().sum::<f64>() + 2.0 * ho[p..q].iter().sum::<f64>();
                if j + 1 < m {
                    bo[j] = ho[q];
                }
            }
            let step = solve_spd_tridiagonal(&bd, &bo, &bg)?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let mut trial = cur.clone();
                for (j, b) in free.clone().enumerate() {
                    let (p, q) = blocks[b];
                    trial[p..=q].iter_mut().for_each(|v| *v += lambda * step[j]);
                }
                let ft = self.value(&trial);
                if ft <= fcur {
                    let gain = fcur - ft;
                    cur = trial;
                    fcur = ft;
                    accepted = true;
                    if gain <= 1e-15 * fcur.abs() {
                        lambda = 0.0;
                    }
                    break;
                }
                lambda *= 0.5;
            }
            let size = step.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !accepted || lambda == 0.0 || size <= 1e-15 {
                break;
            }
        }
        // Feasibility between blocks.
        for w in blocks.windows(2) {
            if self.sigma * (cur[w[1].0] - cur[w[0].1]) < 0.0 {
                return None;
            }
        }
        self.gradient(&cur, &mut grad);
        let tol = 1e-9 * self.gross_gradient(&cur);
        for (b, &(p, q)) in blocks.iter().enumerate() {
            if b == 0 {
                let mut acc = 0.0;
                for k in (1..=q).rev() {
                    acc += grad[k];
                    if self.sigma * acc < -tol {
                        return None;
                    }
                }
            } else {
                let mut acc = 0.0;
                for k in p..q {
                    acc += grad[k];
                    if -self.sigma * acc < -tol {
                        return None;
                    }
                }
                if b < nb - 1 {
                    let total: f64 = grad[p..=q].iter().sum();
                    if total.abs() > tol {
                        return None;
                    }
                }
            }
        }
        Some(cur)
    }

    fn solve(&self, g: &mut [f64]) -> Result<SegmentOutcome> {
        let len = g.len();
        self.project(g);
        if len <= 2 {
            return Ok(SegmentOutcome {
                iterations: 0,
                residual: 0.0,
                polished: true,
            });
        }
        let dx_min = self
            .x
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let wmax = match self.weight {
            Weight::Unit => 1.0,
            Weight::Conformal => 4.0 * PI,
        };
        let mut lip = 0.25 * wmax * (2.0 / dx_min + self.n).powi(2) * dx_min;
        let mut y = g.to_vec();
        let mut fx = self.value(g);
        let mut t = 1.0f64;
        let mut grad = vec![0.0; len];
        let mut z = vec![0.0; len];
        let mut residual = f64::INFINITY;
        for it in 1..=MAX_ITERATIONS {
            self.gradient(&y, &mut grad);
            let fy = self.value(&y);
            loop {
                for i in 0..len {
                    z[i] = y[i] - grad[i] / lip;
                }
                z[0] = y[0];
                z[len - 1] = y[len - 1];
                self.project(&mut z);
                let diff: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
                let model = fy + dot(&grad, &diff) + 0.5 * lip * dot(&diff, &diff);
                if self.value(&z) <= model + 1e-14 * fy.abs() {
                    residual = lip * dot(&diff, &diff).sqrt();
                    break;
                }
                lip *= 2.0;
            }
            let fz = self.value(&z);
            if fz > fx {
                // Function-value restart.
                t = 1.0;
                y.copy_from_slice(g);
                continue;
            }
            let t1 = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t1;
            for i in 0..len {
                y[i] = z[i] + beta * (z[i] - g[i]);
            }
            g.copy_from_slice(&z);
            fx = fz;
            t = t1;
            if it % 20 == 0 {
                if let Some(p) = self.polish(g) {
                    if self.value(&p) <= fx {
                        g.copy_from_slice(&p);
                        return Ok(SegmentOutcome {
                            iterations: it,
                            residual: 0.0,
                            polished: true,
                        });
                    }
                }
            }
            let gscale: f64 = grad.iter().map(|v| v.abs()).sum::<f64>() + f64::MIN_POSITIVE;
            if residual <= 1e-12 * gscale {
                let polished = match self.polish(g) {
                    Some(p) if self.value(&p) <= fx => {
                        g.copy_from_slice(&p);
                        true
                    }
                    _ => false,
                };
                return Ok(SegmentOutcome {
                    iterations: it,
                    residual,
                    polished,
                });
            }
        }
        Err(Error::NotConverged {
            iterations: MAX_ITERATIONS,
            residual,
        })
    }
}

/// Objective on a full cone grid; the sign of g_x is taken from the cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeObjective {
    pub grid: ConeGrid,
    pub n: u32,
    pub weight: Weight,
}

impl ConeObjective {
    pub fn new(grid: ConeGrid, n: u32, weight: Weight) -> Self {
        ConeObjective { grid, n, weight }
    }

    fn segments(&self) -> [Segment<'_>; 2] {
        let s = self.grid.split;
        let n = self.n as f64;
        [
            Segment {
                x: &self.grid.x[..=s],
                sigma: -1.0,
                n,
                weight: self.weight,
            },
            Segment {
                x: &self.grid.x[s..],
                sigma: 1.0,
                n,
                weight: self.weight,
            },
        ]
    }

    pub fn value(&self, g: &[f64]) -> f64 {
        let s = self.grid.split;
        let [a, b] = self.segments();
        a.value(&g[..=s]) + if b.x.len() > 1 { b.value(&g[s..]) } else { 0.0 }
    }

    pub fn gradient(&self, g: &[f64]) -> Vec<f64> {
        let s = self.grid.split;
        let [a, b] = self.segments();
        let mut out = vec![0.0; g.len()];
        let mut tmp = vec![0.0; s + 1];
        a.gradient(&g[..=s], &mut tmp);
        out[..=s].copy_from_slice(&tmp);
        if b.x.len() > 1 {
            let mut tmp = vec![0.0; g.len() - s];
            b.gradient(&g[s..], &mut tmp);
            for (o, v) in out[s..].iter_mut().zip(tmp) {
                *o += v;
            }
        }
        out
    }
}

/// I with the true |g_x|, for arbitrary samples on a log grid.
pub fn discrete_i(x: &[f64], g: &[f64], n: u32) -> f64 {
    let n = n as f64;
    (0..g.len() - 1)
        .map(|k| {
            let dx = x[k + 1] - x[k];
            let q = ((g[k + 1] - g[k]) / dx).abs() - 0.5 * n * (g[k] + g[k + 1]);
            q * q * dx
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeMinimizer {
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Both segments finished with an exact active-set solve and a KKT check.
    pub polished: bool,
}

/// Linear-in-log-radius interpolation of the three pinned values.
fn initial_guess(c: &ConeConstraint, grid: &ConeGrid) -> Vec<f64> {
    let s = grid.split;
    let (x0, xt) = (grid.x[0], grid.x[s]);
    let mut g: Vec<f64> = grid
        .x
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            if k <= s {
                c.b + (c.a - c.b) * (x - x0) / (xt - x0)
            } else {
                c.a + (c.alpha - c.a) * (x - xt) / (0.0 - xt)
            }
        })
        .collect();
    g[0] = c.b;
    g[s] = c.a;
    *g.last_mut().unwrap() = c.alpha;
    g
}

fn minimize(obj: &ConeObjective, mut g: Vec<f64>) -> Result<ConeMinimizer> {
    let s = obj.grid.split;
    let segs = obj.segments();
    let mut iterations = 0;
    let mut residual = 0.0f64;
    let mut polished = true;
    let first = segs[0].solve(&mut g[..=s])?;
    iterations += first.iterations;
    residual = residual.max(first.residual);
    polished &= first.polished;
    if segs[1].x.len() > 1 {
        let second = segs[1].solve(&mut g[s..])?;
        iterations += second.iterations;
        residual = residual.max(second.residual);
        polished &= second.polished;
    }
    Ok(ConeMinimizer {
        r: obj.grid.r.clone(),
        objective: obj.value(&g),
        g,
        iterations,
        residual,
        polished,
    })
}

/// Minimizes the discrete I over the cone, starting from a log-linear guess.
pub fn minimize_i_numerical(c: &ConeConstraint, n: u32, nodes: usize) -> Result<ConeMinimizer> {
    if n == 0 {
        return Err(Error::param("n", "winding number must be >= 1"));
    }
    let grid = cone_grid(c, nodes)?;
    let g = initial_guess(c, &grid);
    minimize(&ConeObjective::new(grid, n, Weight::Unit), g)
}

/// Minimizes 4π∫(|g_x| - n g)²/(1 + g²)² dx over the cone, warm-started from
/// the I minimizer. The value is the least E - A over the cone.
pub fn minimize_weighted_gap(c: &ConeConstraint, n: u32, nodes: usize) -> Result<ConeMinimizer> {
    let warm = minimize_i_numerical(c, n, nodes)?;
    let grid = cone_grid(c, nodes)?;
    minimize(&ConeObjective::new(grid, n, Weight::Conformal), warm.g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pava_pools_violators() {
        let mut y = vec![1.0, 3.0, 2.0, 0.0, 5.0];
        pava(&mut y);
        assert_eq!(y, vec![1.0, 5.0 / 3.0, 5.0 / 3.0, 5.0 / 3.0, 5.0]);
        let mut z = vec![0.1, 0.2, 0.3];
        pava(&mut z);
        assert_eq!(z, vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn grid_pins_s_tilde() {
        let c = ConeConstraint::new(0.01, 0.1, 0.05, 0.25).unwrap();
        let g = cone_grid(&c, 200).unwrap();
        assert_eq!(g.r.len(), 200);
        assert_eq!(g.r[g.split], 0.1);
        assert_eq!(g.r[0], 0.01);
        assert_eq!(*g.r.last().unwrap(), 1.0);
        assert!(g.x.windows(2).all(|w| w[1] > w[0]));
        assert!(cone_grid(&c, 63).is_err());
        let c1 = ConeConstraint::new(0.01, 1.0, 0.2, 0.2).unwrap();
        assert_eq!(cone_grid(&c1, 64).unwrap().split, 63);
    }

    #[test]
    fn projection_is_feasible_and_idempotent() {
        let x: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let seg = Segment {
            x: &x,
            sigma: -1.0,
            n: 2.0,
            weight: Weight::Unit,
        };
        let mut g = vec![0.5, 0.6, 0.1, 0.3, 0.7, 0.0, 0.2, 0.2, 0.1, 0.05];
        seg.project(&mut g);
        assert!(g.windows(2).all(|w| w[1] <= w[0]));
        assert!(g.iter().all(|&v| (0.05..=0.5).contains(&v)));
        let again = {
            let mut h = g.clone();
            seg.project(&mut h);
            h
        };
        assert_eq!(again, g);
    }

    #[test]
    fn polish_solves_quadratic_exactly() {
        let c = ConeConstraint::new(0.05, 0.2, 0.05, 0.25).unwrap();
        let m = minimize_i_numerical(&c, 2, 256).unwrap();
        assert!(m.polished);
        assert!(m
            .g
            .windows(2)
            .take(m.r.iter().position(|&r| r == 0.2).unwrap())
            .all(|w| w[1] <= w[0]));
    }
}
