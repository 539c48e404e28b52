//! Dipole replacement experiment: remove the axis defect on |z| < δ inside a
//! box of radius r_box around u₀, relax the meridian field, and compare the
//! added Dirichlet energy with the saved defect mass.

mod band;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use band::BandMatrix;

/// Ratio r_min / r_box of the log grid's inner edge.
pub const AXIS_RATIO: f64 = 1e-4;
pub const MAX_NEWTON: usize = 200;
/// Converged once the Newton decrement on a positive definite Hessian is
/// below this multiple of 1 + |E|; smaller values sit under round-off.
pub const NEWTON_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleConfig {
    pub n: u32,
    pub alpha: f64,
    pub delta: f64,
    pub r_box: f64,
    /// Nodes in ln r.
    pub nx: usize,
    /// Nodes in z.
    pub nz: usize,
    pub seed: u64,
}

impl DipoleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "winding number must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("{} must be > 0", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::param(
                "delta",
                format!("{} outside (0, 0.5]", self.delta),
            ));
        }
        if !(self.r_box > 0.0 && self.r_box <= 1.0) {
            return Err(Error::param(
                "r_box",
                format!("{} outside (0, 1]", self.r_box),
            ));
        }
        if self.nx < 16 || self.nz < 8 {
            return Err(Error::param("nodes", "need nx >= 16 and nz >= 8"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonReport {
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Newton decrement -gᵀp at the last step.
    pub decrement: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipoleResult {
    pub n: u32,
    pub alpha: f64,
    pub delta: f64,
    pub r_box: f64,
    pub e_ref: f64,
    pub e_new: f64,
    /// Defect mass removed, with the per-length mass calibrated on the same x grid.
    pub mass_saving: f64,
    /// mass_saving - (e_new - e_ref); positive means the dipole lowers the energy.
    pub net: f64,
    /// Same with the continuum mass 4πn per unit length.
    pub net_uncalibrated: f64,
    /// Radius where the mid-height slice crosses the equator.
    pub bubble_radius: f64,
    pub reference: NewtonReport,
    pub relaxed: NewtonReport,
}

impl DipoleResult {
    pub fn converged(&self) -> bool {
        self.reference.converged && self.relaxed.converged
    }
}

/// Meridian energy π∬(φ_x² + n² sin²φ + r² φ_z²) dx dz on a (ln r, z) grid,
/// with the boundary ring fixed and the interior free. Unknowns are ordered
/// with z fastest so the Hessian has half-bandwidth nz - 2.
struct Meridian {
    n: f64,
    x: Vec<f64>,
    r: Vec<f64>,
    dx: f64,
    dz: f64,
    nx: usize,
    nz: usize,
}

impl Meridian {
    fn new(cfg: &DipoleConfig) -> Self {
        let x0 = (cfg.r_box * AXIS_RATIO).ln();
        let x1 = cfg.r_box.ln();
        let dx = (x1 - x0) / (cfg.nx - 1) as f64;
        let x: Vec<f64> = (0..cfg.nx).map(|i| x0 + dx * i as f64).collect();
        let r = x.iter().map(|v| v.exp()).collect();
        Meridian {
            n: cfg.n as f64,
            x,
            r,
            dx,
            dz: 2.0 * cfg.delta / (cfg.nz - 1) as f64,
            nx: cfg.nx,
            nz: cfg.nz,
        }
    }

    fn at(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    fn unknown(&self, i: usize, j: usize) -> Option<usize> {
        (i > 0 && i + 1 < self.nx && j > 0 && j + 1 < self.nz)
            .then(|| (i - 1) * (self.nz - 2) + (j - 1))
    }

    fn row_weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.nz {
            0.5 * self.dz
        } else {
            self.dz
        }
    }

    fn col_weight(&self, i: usize) -> f64 {
        let w = if i == 0 || i + 1 == self.nx {
            0.5 * self.dx
        } else {
            self.dx
        };
        w * self.r[i] * self.r[i] / self.dz
    }

    fn energy(&self, phi: &[f64]) -> f64 {
        let n2 = self.n * self.n;
        let mut e = 0.0;
        for i in 0..self.nx {
            for j in 0..self.nz {
                let v = phi[self.at(i, j)];
                if i + 1 < self.nx {
                    let w = phi[self.at(i + 1, j)];
                    let m = 0.5 * (v + w);
                    e += self.row_weight(j)
                        * ((w - v).powi(2) / self.dx + n2 * self.dx * m.sin().powi(2));
                }
                if j + 1 < self.nz {
                    let w = phi[self.at(i, j + 1)];
                    e += self.col_weight(i) * (w - v).powi(2);
                }
            }
        }
        PI * e
    }

    fn size(&self) -> usize {
        (self.nx - 2) * (self.nz - 2)
    }

    /// Gradient and band Hessian with respect to the interior unknowns.
    fn derivatives(&self, phi: &[f64]) -> (Vec<f64>, BandMatrix) {
        let n2 = self.n * self.n;
        let mut g = vec![0.0; self.size()];
        let mut h = BandMatrix::zeros(self.size(), self.nz - 2);
        let mut edge =
            |a: (usize, usize), b: (usize, usize), grad: [f64; 2], hess: [[f64; 2]; 2]| {
                let ka = self.unknown(a.0, a.1);
                let kb = self.unknown(b.0, b.1);
                if let Some(p) = ka {
                    g[p] += PI * grad[0];
                    h.add(p, p, PI * hess[0][0]);
                }
                if let Some(q) = kb {
                    g[q] += PI * grad[1];
                    h.add(q, q, PI * hess[1][1]);
                }
                if let (Some(p), Some(q)) = (ka, kb) {
                    h.add(p, q, PI * hess[0][1]);
                }
            };
        for i in 0..self.nx {
            for j in 0..self.nz {
                let v = phi[self.at(i, j)];
                if i + 1 < self.nx {
                    let w = phi[self.at(i + 1, j)];
                    let c = self.row_weight(j);
                    let (s2, c2) = (v + w).sin_cos();
                    let d = 2.0 * (w - v) / self.dx;
                    let t = 0.5 * n2 * self.dx * s2;
                    let k = 2.0 / self.dx;
                    let q = 0.5 * n2 * self.dx * c2;
                    edge(
                        (i, j),
                        (i + 1, j),
                        [c * (-d + t), c * (d + t)],
                        [[c * (k + q), c * (-k + q)], [c * (-k + q), c * (k + q)]],
                    );
                }
                if j + 1 < self.nz {
                    let w = phi[self.at(i, j + 1)];
                    let c = self.col_weight(i);
                    let d = 2.0 * c * (w - v);
                    edge(
                        (i, j),
                        (i, j + 1),
                        [-d, d],
                        [[2.0 * c, -2.0 * c], [-2.0 * c, 2.0 * c]],
                    );
                }
            }
        }
        (g, h)
    }

    fn apply(&self, phi: &mut [f64], step: &[f64], t: f64) {
        for i in 1..self.nx - 1 {
            for j in 1..self.nz - 1 {
                let k = self.unknown(i, j).unwrap();
                phi[self.at(i, j)] += t * step[k];
            }
        }
    }

    /// Damped Newton with a diagonal shift on indefinite Hessians and Armijo backtracking.
    fn minimize(&self, phi: &mut [f64]) -> NewtonReport {
        let mut f = self.energy(phi);
        let mut mu = 0.0f64;
        let mut report = NewtonReport {
            energy: f,
            iterations: 0,
            grad_norm: f64::INFINITY,
            decrement: f64::INFINITY,
            converged: false,
        };
        for it in 1..=MAX_NEWTON {
            let (g, h) = self.derivatives(phi);
            let gnorm = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            report.grad_norm = gnorm;
            report.iterations = it - 1;
            let diag_scale = (0..h.size).fold(0.0f64, |a, k| a.max(h.get(k, k)));
            let mut shifted;
            let factor = loop {
                shifted = h.clone();
                shifted.shift_diagonal(mu);
                if let Some(l) = shifted.cholesky() {
                    break l;
                }
                mu = if mu == 0.0 {
                    1e-10 * diag_scale
                } else {
                    mu * 4.0
                };
            };
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let p = factor.solve_factored(&rhs);
            let dec: f64 = -g.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>();
            report.decrement = dec;
            if mu == 0.0 && dec <= NEWTON_TOL * (1.0 + f.abs()) {
                report.converged = true;
                report.energy = f;
                return report;
            }
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial = phi.to_vec();
                self.apply(&mut trial, &p, t);
                let ft = self.energy(&trial);
                if ft <= f - 1e-4 * t * dec {
                    phi.copy_from_slice(&trial);
                    f = ft;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                mu = if mu == 0.0 {
                    1e-6 * diag_scale
                } else {
                    mu * 4.0
                };
                continue;
            }
            mu = if t == 1.0 { mu * 0.1 } else { mu };
            if mu < 1e-14 * diag_scale {
                mu = 0.0;
            }
        }
        report.energy = f;
        report
    }
}

fn u0_colatitude(alpha: f64, n: u32, r: f64) -> f64 {
    2.0 * (alpha * r.powi(n as i32)).atan()
}

/// Discrete minimum of π Σ((Δφ)²/Δx + n²Δx sin²φ_mid) with pinned ends, by Newton.
fn slice_minimum(n: f64, dx: f64, nx: usize, left: f64, right: f64) -> f64 {
    let mut phi: Vec<f64> = (0..nx)
        .map(|i| left + (right - left) * i as f64 / (nx - 1) as f64)
        .collect();
    let energy = |p: &[f64]| -> f64 {
        PI * p
            .windows(2)
            .map(|w| (w[1] - w[0]).powi(2) / dx + n * n * dx * (0.5 * (w[0] + w[1])).sin().powi(2))
            .sum::<f64>()
    };
    // Start from the exact (anti)conformal profile through the end values.
    let sign = if left > right { -1.0 } else { 1.0 };
    let t0 = (0.5 * left).tan().max(1e-300);
    for (i, v) in phi.iter_mut().enumerate() {
        let f = t0 * (sign * n * dx * i as f64).exp();
        *v = 2.0 * f.atan();
    }
    if left >= PI - 1e-15 {
        let tb = (0.5 * right).tan();
        for (i, v) in phi.iter_mut().enumerate() {
            let f = tb * (n * dx * ((nx - 1 - i) as f64)).exp();
            *v = 2.0 * f.atan();
        }
    }
    phi[0] = left;
    phi[nx - 1] = right;
    let m = nx - 2;
    let mut f = energy(&phi);
    for _ in 0..100 {
        let mut g = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut o = vec![0.0; m.saturating_sub(1)];
        for k in 0..nx - 1 {
            let (a, b) = (phi[k], phi[k + 1]);
            let (s2, c2) = (a + b).sin_cos();
            let dd = 2.0 * (b - a) / dx;
            let t = 0.5 * n * n * dx * s2;
            let kk = 2.0 / dx;
            let q = 0.5 * n * n * dx * c2;
            if k >= 1 {
                g[k - 1] += PI * (-dd + t);
                d[k - 1] += PI * (kk + q);
            }
            if k + 1 <= m {
                g[k] += PI * (dd + t);
                d[k] += PI * (kk + q);
            }
            if k >= 1 && k + 1 <= m {
                o[k - 1] = PI * (-kk + q);
            }
        }
        let mut band = BandMatrix::zeros(m, 1);
        for k in 0..m {
            band.add(k, k, d[k]);
            if k + 1 < m {
                band.add(k + 1, k, o[k]);
            }
        }
        let Some(l) = band.cholesky() else { break };
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let p = l.solve_factored(&rhs);
        let dec: f64 = -g.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>();
        if dec <= 1e-24 * (1.0 + f) {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let mut trial = phi.clone();
            for k in 0..m {
                trial[k + 1] += t * p[k];
            }
            let ft = energy(&trial);
            if ft <= f - 1e-4 * t * dec {
                phi = trial;
                f = ft;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    f
}

/// Runs the reference and dipole relaxations for one box.
pub fn dipole_tradeoff(cfg: &DipoleConfig) -> Result<DipoleResult> {
    cfg.validate()?;
    let mer = Meridian::new(cfg);
    let (nx, nz) = (cfg.nx, cfg.nz);
    let phi0: Vec<f64> = mer
        .r
        .iter()
        .map(|&r| u0_colatitude(cfg.alpha, cfg.n, r))
        .collect();

    let mut reference = vec![0.0; nx * nz];
    for i in 0..nx {
        for j in 0..nz {
            reference[mer.at(i, j)] = phi0[i];
        }
    }
    let mut relaxed = reference.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rho0 = cfg.r_box * 0.1 * (1.0 + 0.2 * rng.gen_range(-1.0..1.0));
    let nf = cfg.n as i32;
    for j in 1..nz - 1 {
        let z = -cfg.delta + mer.dz * j as f64;
        let rho = rho0 * (1.0 - (z / cfg.delta).powi(2)).max(0.0);
        for i in 1..nx - 1 {
            let r = mer.r[i];
            let f = (rho / r).powi(nf) + cfg.alpha * r.powi(nf);
            relaxed[mer.at(i, j)] = 2.0 * f.atan();
        }
        relaxed[mer.at(0, j)] = PI;
    }

    let ref_report = mer.minimize(&mut reference);
    let new_report = mer.minimize(&mut relaxed);

    let mid = nz / 2;
    let bubble_radius = (0..nx - 1)
        .find(|&i| relaxed[mer.at(i, mid)] >= 0.5 * PI && relaxed[mer.at(i + 1, mid)] < 0.5 * PI)
        .map(|i| {
            let (a, b) = (relaxed[mer.at(i, mid)], relaxed[mer.at(i + 1, mid)]);
            let t = (a - 0.5 * PI) / (a - b);
            (mer.x[i] + t * mer.dx).exp()
        })
        .unwrap_or(0.0);

    let n = cfg.n as f64;
    let (left_d, right) = (phi0[0], phi0[nx - 1]);
    let exact_nd = 2.0 * PI * n * (1.0 + right.cos());
    let exact_d = 2.0 * PI * n * (left_d.cos() - right.cos());
    let disc_nd = slice_minimum(n, mer.dx, nx, PI, right);
    let disc_d = slice_minimum(n, mer.dx, nx, left_d, right);
    let mass = 4.0 * PI * n + (disc_nd - exact_nd) - (disc_d - exact_d);
    let removed = 2.0 * cfg.delta - mer.dz;
    let added = new_report.energy - ref_report.energy;

    Ok(DipoleResult {
        n: cfg.n,
        alpha: cfg.alpha,
        delta: cfg.delta,
        r_box: cfg.r_box,
        e_ref: ref_report.energy,
        e_new: new_report.energy,
        mass_saving: mass * removed,
        net: mass * removed - added,
        net_uncalibrated: 4.0 * PI * n * removed - added,
        bubble_radius,
        reference: ref_report,
        relaxed: new_report,
    })
}
