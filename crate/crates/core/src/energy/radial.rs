//! Energy, area and conformality defect of radial profiles.
//!
//! All integrals are taken in x = ln r, where
//! E = π∫(φ_x² + n² sin²φ) dx, A = 2πn∫ sinφ |φ_x| dx and
//! E - A = π∫(|φ_x| - n sinφ)² dx.
//!
//! Sampled profiles are interpolated by a shape-preserving cubic in x, so
//! every grid cell is monotone and its area contribution is exactly
//! 2πn |cos φᵢ - cos φᵢ₊₁|.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{ChartProfile, ChartValue, RadialProfile};
use crate::quadrature::GaussLegendre;

const CELL_ORDER: usize = 6;
const PANEL_ORDER: usize = 12;
const PANEL_WIDTH: f64 = 0.25;

/// Lower radius used when an analytic profile is integrated from r = 0.
pub const ANALYTIC_R_LO: f64 = 1e-14;

/// Monotone piecewise-cubic Hermite interpolant of φ(x).
struct Hermite<'a> {
    x: Vec<f64>,
    phi: &'a [f64],
    slope: Vec<f64>,
}

impl<'a> Hermite<'a> {
    fn new(profile: &'a RadialProfile) -> Self {
        let x: Vec<f64> = profile.grid().iter().map(|r| r.ln()).collect();
        let phi = profile.phi();
        let m = x.len();
        let mut slope: Vec<f64> = (0..m).map(|k| lagrange_slope(&x, phi, k)).collect();
        // Fritsch–Carlson limiter.
        for k in 0..m - 1 {
            let delta = (phi[k + 1] - phi[k]) / (x[k + 1] - x[k]);
            if delta == 0.0 {
                slope[k] = 0.0;
                slope[k + 1] = 0.0;
                continue;
            }
            if slope[k] * delta < 0.0 {
                slope[k] = 0.0;
            }
            if slope[k + 1] * delta < 0.0 {
                slope[k + 1] = 0.0;
            }
            let a = slope[k] / delta;
            let b = slope[k + 1] / delta;
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                slope[k] = t * a * delta;
                slope[k + 1] = t * b * delta;
            }
        }
        // A node between cells of opposite trend is an extremum.
        for k in 1..m - 1 {
            if (phi[k] - phi[k - 1]) * (phi[k + 1] - phi[k]) <= 0.0 {
                slope[k] = 0.0;
            }
        }
        Hermite { x, phi, slope }
    }

    /// (φ, φ_x) at x inside cell k.
    fn eval(&self, k: usize, x: f64) -> (f64, f64) {
        let h = self.x[k + 1] - self.x[k];
        let t = (x - self.x[k]) / h;
        let (p0, p1) = (self.phi[k], self.phi[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1;
        let d = (6.0 * t2 - 6.0 * t) * p0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * p1
            + (3.0 * t2 - 2.0 * t) * m1;
        (v, d / h)
    }

    /// Sub-cells [x_lo, x_hi] ∩ cell k covering the interval.
    fn pieces(&self, x_lo: f64, x_hi: f64) -> Vec<(usize, f64, f64)> {
        let m = self.x.len();
        let mut out = Vec::new();
        let first = match self.x.partition_point(|&v| v <= x_lo) {
            0 => 0,
            p => (p - 1).min(m - 2),
        };
        for k in first..m - 1 {
            let a = self.x[k].max(x_lo);
            let b = self.x[k + 1].min(x_hi);
            if a >= x_hi {
                break;
            }
            if b > a {
                out.push((k, a, b));
            }
        }
        out
    }
}

/// Derivative at node k of the polynomial through the (up to) five nearest nodes.
fn lagrange_slope(x: &[f64], y: &[f64], k: usize) -> f64 {
    let m = x.len();
    let w = 5.min(m);
    let start = k.saturating_sub(w / 2).min(m - w);
    let idx = start..start + w;
    let xk = x[k];
    let mut d = 0.0;
    for j in idx.clone() {
        let c = if j == k {
            idx.clone()
                .filter(|&i| i != k)
                .map(|i| 1.0 / (xk - x[i]))
                .sum()
        } else {
            let mut c = 1.0 / (x[j] - xk);
            for i in idx.clone() {
                if i != j && i != k {
                    c *= (xk - x[i]) / (x[j] - x[i]);
                }
            }
            c
        };
        d += c * y[j];
    }
    d
}

/// Resolves an interval against the grid. A lower end of 0 stands for the
/// innermost node.
fn resolve(p: &RadialProfile, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let (rmin, rmax) = (p.r_min(), p.r_max());
    let slack = 1e-12;
    let lo_eff = if lo == 0.0 { rmin } else { lo };
    if !(lo_eff <= hi)
        || lo_eff < rmin * (1.0 - slack)
        || hi > rmax * (1.0 + slack)
        || !hi.is_finite()
    {
        return Err(Error::IntervalOutsideGrid {
            lo,
            hi,
            min: rmin,
            max: rmax,
        });
    }
    Ok((lo_eff.max(rmin).ln(), hi.min(rmax).ln()))
}

fn integrate_sampled<F>(p: &RadialProfile, lo: f64, hi: f64, mut density: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> f64,
{
    let (x_lo, x_hi) = resolve(p, lo, hi)?;
    let herm = Hermite::new(p);
    let gl = GaussLegendre::new(CELL_ORDER);
    let mut total = 0.0;
    for (k, a, b) in herm.pieces(x_lo, x_hi) {
        total += gl.integrate(a, b, |x| {
            let (v, d) = herm.eval(k, x);
            density(v, d)
        });
    }
    Ok(total)
}

/// E = π∫(φ′² + n² sin²φ / r²) r dr over [lo, hi].
pub fn dirichlet_energy_radial(p: &RadialProfile, lo: f64, hi: f64) -> Result<f64> {
    let n2 = (p.winding() as f64).powi(2);
    let v = integrate_sampled(p, lo, hi, |phi, d| {
        let s = phi.sin();
        d * d + n2 * s * s
    })?;
    Ok(PI * v)
}

/// A = 2πn∫ sinφ |φ′| dr over [lo, hi].
pub fn area_radial(p: &RadialProfile, lo: f64, hi: f64) -> Result<f64> {
    let (x_lo, x_hi) = resolve(p, lo, hi)?;
    let herm = Hermite::new(p);
    let mut total = 0.0;
    for (k, a, b) in herm.pieces(x_lo, x_hi) {
        let ca = if a == herm.x[k] {
            herm.phi[k]
        } else {
            herm.eval(k, a).0
        };
        let cb = if b == herm.x[k + 1] {
            herm.phi[k + 1]
        } else {
            herm.eval(k, b).0
        };
        total += (ca.cos() - cb.cos()).abs();
    }
    Ok(2.0 * PI * p.winding() as f64 * total)
}

/// E - A as the single integral π∫(|φ′| - n sinφ / r)² r dr.
pub fn conformality_gap(p: &RadialProfile, lo: f64, hi: f64) -> Result<f64> {
    let n = p.winding() as f64;
    let v = integrate_sampled(p, lo, hi, |phi, d| {
        let g = d.abs() - n * phi.sin();
        g * g
    })?;
    Ok(PI * v)
}

/// 4πn |b²/(1+b²) - a²/(1+a²)|, the area of a monotone profile from a to b.
pub fn monotone_area_bound(a: ChartValue, b: ChartValue, n: u32) -> f64 {
    4.0 * PI * n as f64 * (b.area_fraction() - a.area_fraction()).abs()
}

/// Slice quantities of an analytic profile on [lo, hi], integrated by
/// composite Gauss–Legendre in ln r with panels split at the profile's
/// breakpoints. A lower end of 0 is replaced by [`ANALYTIC_R_LO`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSlice {
    pub energy: f64,
    pub area: f64,
    pub gap: f64,
}

pub fn analytic_slice<P: ChartProfile + ?Sized>(p: &P, lo: f64, hi: f64) -> Result<AnalyticSlice> {
    let lo = if lo == 0.0 { ANALYTIC_R_LO } else { lo };
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::param(
            "interval",
            format!("[{lo}, {hi}] is not a valid radial interval"),
        ));
    }
    let n = p.winding() as f64;
    let breaks: Vec<f64> = p
        .breakpoints()
        .iter()
        .filter(|&&b| b > 0.0)
        .map(|b| b.ln())
        .collect();
    let gl = GaussLegendre::new(PANEL_ORDER);
    let mut acc = [0.0; 3];
    for slot in 0..3 {
        acc[slot] = gl.composite(lo.ln(), hi.ln(), &breaks, PANEL_WIDTH, |x| {
            let r = x.exp();
            let d = p.colatitude_log_slope(r);
            let s = p.chart(r).sin_colatitude();
            match slot {
                0 => d * d + n * n * s * s,
                1 => 2.0 * n * s * d.abs(),
                _ => {
                    let g = d.abs() - n * s;
                    g * g
                }
            }
        });
    }
    Ok(AnalyticSlice {
        energy: PI * acc[0],
        area: PI * acc[1],
        gap: PI * acc[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{log_grid, u0_profile, u_eps_profile, PowerLaw, RegularizedProfile};
    use proptest::prelude::*;

    fn conformal_energy(alpha: f64, n: u32) -> f64 {
        4.0 * PI * n as f64 * alpha * alpha / (1.0 + alpha * alpha)
    }

    #[test]
    fn constant_profile_has_zero_energy_and_area() {
        let grid = log_grid(1e-3, 1.0, 50).unwrap();
        let p = RadialProfile::new(grid, vec![0.0; 50], 2).unwrap();
        assert_eq!(dirichlet_energy_radial(&p, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(area_radial(&p, 0.0, 1.0).unwrap(), 0.0);
        let q = RadialProfile::new(p.grid().to_vec(), vec![1.0; 50], 2).unwrap();
        assert_eq!(area_radial(&q, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn conformal_slice_energy() {
        let p = u0_profile(0.25, 2, log_grid(1e-6, 1.0, 2048).unwrap()).unwrap();
        let exact = conformal_energy(0.25, 2);
        assert!((exact - 1.478397).abs() < 1e-6);
        let e = dirichlet_energy_radial(&p, 0.0, 1.0).unwrap();
        let a = area_radial(&p, 0.0, 1.0).unwrap();
        assert!(((e - exact) / exact).abs() < 1e-6, "E = {e}");
        assert!(((a - exact) / exact).abs() < 1e-6, "A = {a}");
        assert!(conformality_gap(&p, 0.0, 1.0).unwrap() < 1e-9);
    }

    #[test]
    fn full_covering_area() {
        // φ from 0 to π monotonically: n copies of the sphere.
        let grid = log_grid(1e-4, 1.0, 400).unwrap();
        let m = grid.len();
        let phi: Vec<f64> = (0..m).map(|i| PI * i as f64 / (m - 1) as f64).collect();
        let p = RadialProfile::new(grid, phi, 3).unwrap();
        let a = area_radial(&p, 0.0, 1.0).unwrap();
        assert!((a - 12.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn monotone_bound_examples() {
        use ChartValue::*;
        assert_eq!(monotone_area_bound(Finite(0.3), Finite(0.3), 2), 0.0);
        assert!((monotone_area_bound(Finite(0.0), Infinity, 2) - 8.0 * PI).abs() < 1e-14);
        let v = monotone_area_bound(Finite(0.1), Finite(0.5), 2);
        let expected = 8.0 * PI * (0.2 - 0.01 / 1.01);
        assert!((v - expected).abs() < 1e-13);
        assert!((v - 4.77771).abs() < 1e-5);
        assert_eq!(v, monotone_area_bound(Finite(0.5), Finite(0.1), 2));
    }

    #[test]
    fn monotone_profile_area_matches_bound() {
        // f from 0.1 to 0.5, monotone in r.
        let grid = log_grid(0.2, 1.0, 300).unwrap();
        let phi: Vec<f64> = grid
            .iter()
            .map(|&r| 2.0 * (0.1 + 0.4 * ((r - 0.2) / 0.8).powf(0.7)).atan())
            .collect();
        let p = RadialProfile::new(grid, phi, 2).unwrap();
        let a = area_radial(&p, 0.2, 1.0).unwrap();
        let bound = monotone_area_bound(ChartValue::Finite(0.1), ChartValue::Finite(0.5), 2);
        assert!(((a - bound) / bound).abs() < 1e-12);
    }

    #[test]
    fn anticonformal_branch_has_zero_gap() {
        let pl = PowerLaw {
            coeff: 0.3,
            exponent: -2,
            n: 2,
        };
        let p = RadialProfile::sample(&pl, log_grid(0.05, 1.0, 2048).unwrap()).unwrap();
        let gap = conformality_gap(&p, 0.0, 1.0).unwrap();
        let e = dirichlet_energy_radial(&p, 0.0, 1.0).unwrap();
        assert!(gap < 1e-9 * e, "gap {gap}");
        let sl = analytic_slice(&pl, 0.05, 1.0).unwrap();
        assert!(sl.gap < 1e-14);
        assert!(((sl.energy - e) / e).abs() < 1e-9);
    }

    #[test]
    fn constant_segment_gap() {
        // f ≡ a on [t, τ]: gap = 4πn²a²/(1+a²)² log(τ/t) exactly.
        let (a, n) = (0.05f64, 2u32);
        let (t, tau) = (0.1, 0.3);
        let phi0 = 2.0 * a.atan();
        let grid = log_grid(t, tau, 200).unwrap();
        let p = RadialProfile::new(grid.clone(), vec![phi0; grid.len()], n).unwrap();
        let gap = conformality_gap(&p, t, tau).unwrap();
        let exact = 4.0 * PI * (n * n) as f64 * a * a / (1.0 + a * a).powi(2) * (tau / t).ln();
        assert!(((gap - exact) / exact).abs() < 1e-12);
        let leading = 4.0 * PI * (n * n) as f64 * a * a * (tau / t).ln();
        assert!(((gap - leading) / leading).abs() < 1e-2);
    }

    #[test]
    fn interval_outside_grid_is_rejected() {
        let p = u0_profile(0.25, 2, log_grid(1e-3, 1.0, 100).unwrap()).unwrap();
        assert!(matches!(
            dirichlet_energy_radial(&p, 1e-4, 1.0),
            Err(Error::IntervalOutsideGrid { .. })
        ));
        assert!(area_radial(&p, 0.0, 2.0).is_err());
        assert!(conformality_gap(&p, 0.5, 0.4).is_err());
    }

    #[test]
    fn partial_cells_are_consistent() {
        let p = u0_profile(0.25, 2, log_grid(1e-3, 1.0, 513).unwrap()).unwrap();
        let whole = dirichlet_energy_radial(&p, 0.0, 1.0).unwrap();
        let split = dirichlet_energy_radial(&p, 0.0, 0.3333).unwrap()
            + dirichlet_energy_radial(&p, 0.3333, 1.0).unwrap();
        assert!((whole - split).abs() < 1e-13);
        let wa = area_radial(&p, 0.0, 1.0).unwrap();
        let sa = area_radial(&p, 0.0, 0.3333).unwrap() + area_radial(&p, 0.3333, 1.0).unwrap();
        assert!((wa - sa).abs() < 1e-13);
    }

    #[test]
    fn analytic_relaxation_energy() {
        let (alpha, n) = (0.25, 2u32);
        let eps = 0.1f64;
        let u = RegularizedProfile::new(alpha, n, eps).unwrap();
        let sl = analytic_slice(&u, 0.0, 1.0).unwrap();
        let c = conformal_energy(alpha, n);
        let ae = alpha * eps.powi(2 * n as i32);
        let exact = 4.0 * PI * n as f64 + c - 8.0 * PI * n as f64 * alpha * ae / (1.0 + alpha * ae);
        assert!(
            ((sl.energy - exact) / exact).abs() < 1e-13,
            "{} vs {exact}",
            sl.energy
        );
        assert!(sl.gap < 1e-12);
        // The sampled route agrees to grid accuracy.
        let p = u_eps_profile(alpha, n, eps, log_grid(1e-6, 1.0, 4096).unwrap()).unwrap();
        let e = dirichlet_energy_radial(&p, 0.0, 1.0).unwrap();
        assert!(((e - exact) / exact).abs() < 1e-5, "{e} vs {exact}");
    }

    fn random_profile(coeffs: &[f64], r_min: f64, nodes: usize, n: u32) -> RadialProfile {
        let grid = log_grid(r_min, 1.0, nodes).unwrap();
        let phi = grid
            .iter()
            .map(|&r| {
                let x = r.ln();
                let v: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64 * x * 0.7).sin())
                    .sum();
                PI / 2.0 + (PI / 2.0 - 1e-3) * v.tanh()
            })
            .collect();
        RadialProfile::new(grid, phi, n).unwrap()
    }

    proptest! {
        #[test]
        fn energy_dominates_area(
            coeffs in prop::collection::vec(-2.0..2.0f64, 1..5),
            n in 1u32..4,
        ) {
            let p = random_profile(&coeffs, 1e-3, 400, n);
            let e = dirichlet_energy_radial(&p, 0.0, 1.0).unwrap();
            let a = area_radial(&p, 0.0, 1.0).unwrap();
            prop_assert!(e - a >= -1e-10);
        }

        #[test]
        fn gap_matches_energy_minus_area(
            coeffs in prop::collection::vec(-2.0..2.0f64, 1..5),
            n in 1u32..4,
        ) {
            let p = random_profile(&coeffs, 1e-3, 800, n);
            let e = dirichlet_energy_radial(&p, 0.0, 1.0).unwrap();
            let a = area_radial(&p, 0.0, 1.0).unwrap();
            let g = conformality_gap(&p, 0.0, 1.0).unwrap();
            prop_assert!(((e - a) - g).abs() <= 1e-8 * e.max(1e-300), "{} vs {}", e - a, g);
        }

        #[test]
        fn energy_is_dilation_invariant(
            coeffs in prop::collection::vec(-2.0..2.0f64, 1..5),
            lambda in 0.1..10.0f64,
        ) {
            let p = random_profile(&coeffs, 1e-3, 300, 2);
            let q = p.dilate(lambda).unwrap();
            let e = dirichlet_energy_radial(&p, 0.0, 1.0).unwrap();
            let eq = dirichlet_energy_radial(&q, 0.0, lambda).unwrap();
            prop_assert!(((e - eq) / e).abs() <= 1e-9);
        }

        #[test]
        fn conformal_families_have_zero_gap(c in 0.01..5.0f64, n in 1u32..4, sign in prop::bool::ANY) {
            let exponent = if sign { n as i32 } else { -(n as i32) };
            let pl = PowerLaw { coeff: c, exponent, n };
            let sl = analytic_slice(&pl, 0.05, 1.0).unwrap();
            prop_assert!(sl.gap <= 1e-8 * sl.energy.max(1e-12));
            prop_assert!((sl.energy - sl.area).abs() <= 1e-8 * sl.energy.max(1e-12));
        }
    }
}
