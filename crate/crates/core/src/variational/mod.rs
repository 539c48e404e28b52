//! The one-dimensional obstacle problem behind the vortex-escape threshold:
//! closed-form minimizer, discrete minimizers and the logarithmic lower bound.

pub mod closed_form;
pub mod discrete;
pub mod g0;

use std::f64::consts::PI;

pub use closed_form::{
    compute_t0, compute_tau0, eta_profile, t0_roots, tau0_roots, zeta_profile, ClosedFormProfile,
};
pub use discrete::{
    cone_grid, discrete_i, minimize_i_numerical, minimize_weighted_gap, pava, ConeGrid,
    ConeMinimizer, ConeObjective, Weight, MAX_ITERATIONS, MIN_NODES,
};
pub use g0::{g0_construct, ConeConstraint, G0Profile, Piece, DEFAULT_B};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBound {
    /// π n² a² log(τ₀/t₀), or 0 when vacuous.
    pub value: f64,
    pub t0: f64,
    pub tau0: f64,
    pub vacuous: bool,
    /// (t₀/τ₀) / (α a^{n-2})^{1/n}.
    pub c_eff: f64,
}

/// Lower bound for E - A over the cone from the constant stretch of g₀.
pub fn gap_lower_bound(c: &ConeConstraint, n: u32) -> Result<GapBound> {
    c.validate()?;
    let t0 = compute_t0(c.s, c.a, c.b, n)?;
    let tau0 = compute_tau0(c.a, c.alpha, n)?;
    let nf = n as f64;
    let vacuous = t0 >= tau0;
    let value = if vacuous {
        0.0
    } else {
        PI * nf * nf * c.a * c.a * (tau0 / t0).ln()
    };
    let c_eff = (t0 / tau0) / (c.alpha * c.a.powi(n as i32 - 2)).powf(1.0 / nf);
    Ok(GapBound {
        value,
        t0,
        tau0,
        vacuous,
        c_eff,
    })
}

/// 8πn a²/(1 + a²): what E - A on the annulus must beat for escape to lose.
pub fn escape_threshold(a: f64, n: u32) -> f64 {
    8.0 * PI * n as f64 * a * a / (1.0 + a * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::analytic_slice;

    #[test]
    fn bound_below_gap_of_g0() {
        for &(s, st, a, alpha) in &[
            (0.001, 0.01, 0.005, 0.05),
            (1e-4, 0.1, 0.01, 0.02),
            (0.01, 0.1, 0.05, 0.25),
        ] {
            let c = ConeConstraint::new(s, st, a, alpha).unwrap();
            for n in 1..4 {
                let b = gap_lower_bound(&c, n).unwrap();
                let g = g0_construct(&c, n).unwrap();
                let gap = analytic_slice(&g, s, 1.0).unwrap().gap;
                assert_eq!(b.vacuous, g.t0 >= g.tau0);
                assert!(PI * g.i_closed() >= b.value - 1e-12);
                assert!(
                    gap >= PI * g.i_closed() - 1e-8,
                    "{gap} vs {}",
                    PI * g.i_closed()
                );
            }
        }
    }

    #[test]
    fn vacuous_flag() {
        let c = ConeConstraint::new(0.6, 1.0, 0.25, 0.25).unwrap();
        let b = gap_lower_bound(&c, 2).unwrap();
        assert!(b.vacuous);
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn threshold_value() {
        assert!((escape_threshold(0.05, 2) - 16.0 * PI * 0.0025 / 1.0025).abs() < 1e-15);
    }
}
