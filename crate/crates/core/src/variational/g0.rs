//! The explicit minimizer g₀ of I over the cone 𝒞.

use crate::error::{Error, Result};
use crate::geometry::{ChartProfile, ChartValue};
use crate::variational::closed_form::{
    compute_t0, compute_tau0, eta_profile, zeta_profile, ClosedFormProfile,
};

pub const DEFAULT_B: f64 = 0.5;

/// 𝒞: g(s) = b, g(s̃) = a, g(1) = α, g decreasing on [s, s̃] and increasing on [s̃, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeConstraint {
    pub s: f64,
    pub s_tilde: f64,
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
}

impl ConeConstraint {
    pub fn new(s: f64, s_tilde: f64, a: f64, alpha: f64) -> Result<Self> {
        Self::with_b(s, s_tilde, a, alpha, DEFAULT_B)
    }

    pub fn with_b(s: f64, s_tilde: f64, a: f64, alpha: f64, b: f64) -> Result<Self> {
        let c = ConeConstraint {
            s,
            s_tilde,
            a,
            alpha,
            b,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let ConeConstraint {
            s,
            s_tilde,
            a,
            alpha,
            b,
        } = *self;
        if !(s > 0.0 && s < s_tilde && s_tilde <= 1.0) {
            return Err(Error::Constraint(format!(
                "need 0 < s < s_tilde <= 1, got s = {s}, s_tilde = {s_tilde}"
            )));
        }
        if !(a > 0.0 && a <= alpha && alpha <= 0.25) {
            return Err(Error::Constraint(format!(
                "need 0 < a <= alpha <= 1/4, got a = {a}, alpha = {alpha}"
            )));
        }
        if !(b >= a && b.is_finite()) {
            return Err(Error::Constraint(format!("need b >= a, got b = {b}")));
        }
        if s_tilde == 1.0 && a != alpha {
            return Err(Error::Constraint("s_tilde = 1 forces a = alpha".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    /// Decreasing η piece.
    Eta(ClosedFormProfile),
    Constant(f64),
    /// Increasing ζ piece.
    Zeta(ClosedFormProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct G0Profile {
    pub constraint: ConeConstraint,
    pub n: u32,
    pub t0: f64,
    pub tau0: f64,
    /// (lo, hi, piece), contiguous from s to 1.
    pub pieces: Vec<(f64, f64, Piece)>,
}

/// Builds g₀ piecewise from η, the constant a and ζ, with the boundary
/// cases t₀ ≥ s̃ (η_{s̃}), τ₀ ≤ s̃ (ζ_{s̃}) and τ₀ = 1 (constant α).
pub fn g0_construct(c: &ConeConstraint, n: u32) -> Result<G0Profile> {
    c.validate()?;
    let ConeConstraint {
        s,
        s_tilde,
        a,
        alpha,
        b,
    } = *c;
    let t0 = compute_t0(s, a, b, n)?;
    let tau0 = compute_tau0(a, alpha, n)?;
    let mut pieces = Vec::new();
    if t0 >= s_tilde {
        pieces.push((s, s_tilde, Piece::Eta(eta_profile(s_tilde, s, a, b, n)?)));
    } else {
        if t0 > s {
            pieces.push((s, t0, Piece::Eta(eta_profile(t0, s, a, b, n)?)));
        }
        pieces.push((t0.max(s), s_tilde, Piece::Constant(a)));
    }
    if s_tilde < 1.0 {
        if tau0 <= s_tilde {
            pieces.push((
                s_tilde,
                1.0,
                Piece::Zeta(zeta_profile(s_tilde, a, alpha, n)?),
            ));
        } else if tau0 < 1.0 {
            pieces.push((s_tilde, tau0, Piece::Constant(a)));
            pieces.push((tau0, 1.0, Piece::Zeta(zeta_profile(tau0, a, alpha, n)?)));
        } else {
            pieces.push((s_tilde, 1.0, Piece::Constant(a)));
        }
    }
    // Merge neighbouring constant pieces.
    let mut merged: Vec<(f64, f64, Piece)> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let (Some(last), Piece::Constant(v)) = (merged.last_mut(), p.2) {
            if last.2 == Piece::Constant(v) {
                last.1 = p.1;
                continue;
            }
        }
        merged.push(p);
    }
    Ok(G0Profile {
        constraint: *c,
        n,
        t0,
        tau0,
        pieces: merged,
    })
}

impl G0Profile {
    fn piece_at(&self, r: f64) -> (f64, f64, Piece) {
        let idx = self
            .pieces
            .iter()
            .position(|p| r <= p.1)
            .unwrap_or(self.pieces.len() - 1);
        self.pieces[idx]
    }

    pub fn value(&self, r: f64) -> f64 {
        match self.piece_at(r).2 {
            Piece::Eta(p) | Piece::Zeta(p) => p.value(r),
            Piece::Constant(v) => v,
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self.piece_at(r).2 {
            Piece::Eta(p) | Piece::Zeta(p) => p.derivative(r),
            Piece::Constant(_) => 0.0,
        }
    }

    /// I(g₀) = ∫(|g'| - n g/r)² r dr over [s, 1], summed in closed form.
    pub fn i_closed(&self) -> f64 {
        let n = self.n as f64;
        let k = 2 * self.n as i32;
        self.pieces
            .iter()
            .map(|&(lo, hi, p)| match p {
                Piece::Eta(e) => 2.0 * n * e.c_plus * e.c_plus * (hi.powi(k) - lo.powi(k)),
                Piece::Zeta(z) => 2.0 * n * z.c_minus * z.c_minus * (lo.powi(-k) - hi.powi(-k)),
                Piece::Constant(v) => n * n * v * v * (hi / lo).ln(),
            })
            .sum()
    }

    /// Length of the constant stretch [t₀, τ₀], or `None` when t₀ ≥ τ₀.
    pub fn constant_span(&self) -> Option<(f64, f64)> {
        (self.t0 < self.tau0).then_some((self.t0, self.tau0))
    }
}

impl ChartProfile for G0Profile {
    fn winding(&self) -> u32 {
        self.n
    }

    fn chart(&self, r: f64) -> ChartValue {
        ChartValue::Finite(self.value(r))
    }

    fn log_derivative(&self, r: f64) -> f64 {
        r * self.derivative(r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.1).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    fn quad_i(g: &G0Profile) -> f64 {
        let gl = GaussLegendre::new(12);
        let n = g.n as f64;
        let s = g.constraint.s;
        let breaks: Vec<f64> = g.breakpoints().iter().map(|b| b.ln()).collect();
        gl.composite(s.ln(), 0.0, &breaks, 0.05, |x| {
            let r = x.exp();
            let d = g.derivative(r).abs() * r - n * g.value(r);
            d * d
        })
    }

    #[test]
    fn generic_case_has_three_pieces() {
        let c = ConeConstraint::new(0.01, 0.1, 0.05, 0.25).unwrap();
        let g = g0_construct(&c, 2).unwrap();
        assert!(g.t0 < c.s_tilde && c.s_tilde < g.tau0);
        assert_eq!(g.pieces.len(), 3);
        assert!(g.derivative(g.t0 * (1.0 - 1e-12)).abs() < 1e-8);
        assert!(g.derivative(g.tau0 * (1.0 + 1e-12)).abs() < 1e-8);
        assert!((g.value(c.s) - 0.5).abs() < 1e-12);
        assert!((g.value(c.s_tilde) - 0.05).abs() < 1e-12);
        assert!((g.value(1.0) - 0.25).abs() < 1e-12);
        let iq = quad_i(&g);
        assert!(((g.i_closed() - iq) / iq).abs() < 1e-10);
        let (lo, hi) = g.constant_span().unwrap();
        assert!(g.i_closed() >= 4.0 * 0.0025 * (hi / lo).ln());
    }

    #[test]
    fn s_tilde_one_gives_eta_then_alpha() {
        let c = ConeConstraint::new(0.01, 1.0, 0.2, 0.2).unwrap();
        let g = g0_construct(&c, 2).unwrap();
        assert_eq!(g.tau0, 1.0);
        assert_eq!(g.pieces.len(), 2);
        assert!(matches!(g.pieces[0].2, Piece::Eta(_)));
        assert_eq!(g.pieces[1], (g.t0, 1.0, Piece::Constant(0.2)));
        assert!(ConeConstraint::new(0.01, 1.0, 0.1, 0.2).is_err());
    }

    #[test]
    fn boundary_cases() {
        // t₀ ≥ s̃: a single η piece on [s, s̃].
        let c = ConeConstraint::new(0.1, 0.15, 0.05, 0.25).unwrap();
        let g = g0_construct(&c, 2).unwrap();
        assert!(g.t0 >= c.s_tilde);
        assert!(matches!(g.pieces[0].2, Piece::Eta(_)));
        assert_eq!(g.pieces[0].1, c.s_tilde);
        // τ₀ ≤ s̃: ζ on [s̃, 1].
        let c = ConeConstraint::new(0.001, 0.5, 0.05, 0.25).unwrap();
        let g = g0_construct(&c, 2).unwrap();
        assert!(g.tau0 <= c.s_tilde);
        assert!(matches!(g.pieces.last().unwrap().2, Piece::Zeta(_)));
        for w in g.pieces.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-15);
        }
    }

    #[test]
    fn monotone_on_each_side() {
        for &(s, st, a, alpha) in &[
            (0.01, 0.1, 0.05, 0.25),
            (0.1, 0.15, 0.05, 0.25),
            (0.001, 0.5, 0.05, 0.25),
            (0.02, 0.04, 0.01, 0.02),
        ] {
            let c = ConeConstraint::new(s, st, a, alpha).unwrap();
            let g = g0_construct(&c, 3).unwrap();
            let m = 400;
            for k in 0..m {
                let r0 = s * (1.0 / s).powf(k as f64 / m as f64);
                let r1 = s * (1.0 / s).powf((k + 1) as f64 / m as f64);
                let (v0, v1) = (g.value(r0), g.value(r1));
                if r1 <= st {
                    assert!(v1 <= v0 + 1e-14);
                } else if r0 >= st {
                    assert!(v1 >= v0 - 1e-14);
                }
            }
        }
    }
}
