//! The two-parameter family c₊rⁿ + c₋r⁻ⁿ and the stationary points t₀, τ₀.

use crate::error::{Error, Result};

/// g(r) = c_plus·rⁿ + c_minus·r⁻ⁿ on [r_a, r_b]; solves -(r g')' + (n²/r) g = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormProfile {
    pub c_plus: f64,
    pub c_minus: f64,
    pub r_a: f64,
    pub r_b: f64,
    pub n: u32,
}

impl ClosedFormProfile {
    pub fn value(&self, r: f64) -> f64 {
        let rn = r.powi(self.n as i32);
        self.c_plus * rn + self.c_minus / rn
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let n = self.n as f64;
        let rn = r.powi(self.n as i32);
        n * (self.c_plus * rn - self.c_minus / rn) / r
    }

    /// r·g'(r).
    pub fn log_derivative(&self, r: f64) -> f64 {
        let rn = r.powi(self.n as i32);
        self.n as f64 * (self.c_plus * rn - self.c_minus / rn)
    }

    /// -(r g')' + (n²/r) g, with (r g')' from a five-point difference.
    pub fn el_residual(&self, r: f64) -> f64 {
        let h = 1e-3 * r;
        let q = |t: f64| self.log_derivative(t);
        let d = (q(r - 2.0 * h) - 8.0 * q(r - h) + 8.0 * q(r + h) - q(r + 2.0 * h)) / (12.0 * h);
        let n = self.n as f64;
        -d + n * n * self.value(r) / r
    }
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "winding number must be >= 1"));
    }
    Ok(())
}

/// η_t with η_t(s) = b and η_t(t) = a.
pub fn eta_profile(t: f64, s: f64, a: f64, b: f64, n: u32) -> Result<ClosedFormProfile> {
    check_n(n)?;
    if !(s > 0.0 && a > 0.0 && b > 0.0) {
        return Err(Error::param("s, a, b", "must be positive"));
    }
    if t == s {
        return Err(Error::Degenerate("eta_t needs t != s".into()));
    }
    if !(t > s) {
        return Err(Error::param("t", format!("{t} must exceed s = {s}")));
    }
    let k = n as i32;
    let (tn, sn) = (t.powi(k), s.powi(k));
    let den = tn * tn - sn * sn;
    Ok(ClosedFormProfile {
        c_plus: (a * tn - b * sn) / den,
        c_minus: sn * tn * (b * tn - a * sn) / den,
        r_a: s,
        r_b: t,
        n,
    })
}

/// ζ_τ with ζ_τ(τ) = a and ζ_τ(1) = α.
pub fn zeta_profile(tau: f64, a: f64, alpha: f64, n: u32) -> Result<ClosedFormProfile> {
    check_n(n)?;
    if tau == 1.0 {
        return Err(Error::Degenerate("zeta_tau needs tau != 1".into()));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::param("tau", format!("{tau} outside (0, 1)")));
    }
    let tn = tau.powi(n as i32);
    let den = 1.0 - tn * tn;
    Ok(ClosedFormProfile {
        c_plus: (alpha - a * tn) / den,
        c_minus: tn * (a - alpha * tn) / den,
        r_a: tau,
        r_b: 1.0,
        n,
    })
}

fn check_ratio(name: &'static str, a: f64, top: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::param("a", format!("{a} must be > 0")));
    }
    if a > top {
        return Err(Error::param(
            name,
            format!("a = {a} exceeds {name} = {top}"),
        ));
    }
    Ok(())
}

/// Both roots (t₀₋, t₀₊) of a t²ⁿ - 2b sⁿ tⁿ + a s²ⁿ = 0.
pub fn t0_roots(s: f64, a: f64, b: f64, n: u32) -> Result<(f64, f64)> {
    check_n(n)?;
    check_ratio("b", a, b)?;
    if !(s > 0.0) {
        return Err(Error::param("s", "must be > 0"));
    }
    let q = (1.0 - (a / b).powi(2)).max(0.0).sqrt();
    let inv = 1.0 / n as f64;
    let plus = s * ((b / a) * (1.0 + q)).powf(inv);
    let minus = s * ((a / b) / (1.0 + q)).powf(inv);
    Ok((minus, plus))
}

/// t₀ > s with η'_{t₀}(t₀) = 0.
pub fn compute_t0(s: f64, a: f64, b: f64, n: u32) -> Result<f64> {
    Ok(t0_roots(s, a, b, n)?.1)
}

/// Both roots (τ₀₋, τ₀₊) of ζ'_τ(τ) = 0.
pub fn tau0_roots(a: f64, alpha: f64, n: u32) -> Result<(f64, f64)> {
    check_n(n)?;
    check_ratio("alpha", a, alpha)?;
    let q = (1.0 - (a / alpha).powi(2)).max(0.0).sqrt();
    let inv = 1.0 / n as f64;
    let minus = ((a / alpha) / (1.0 + q)).powf(inv);
    let plus = ((alpha / a) * (1.0 + q)).powf(inv);
    Ok((minus, plus))
}

/// τ₀ ≤ 1 with ζ'_{τ₀}(τ₀) = 0; equal to 1 iff a = α.
pub fn compute_tau0(a: f64, alpha: f64, n: u32) -> Result<f64> {
    Ok(tau0_roots(a, alpha, n)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_endpoints_and_el() {
        let e = eta_profile(0.3, 0.1, 0.1, 0.5, 2).unwrap();
        assert!((e.value(0.1) - 0.5).abs() < 1e-12);
        assert!((e.value(0.3) - 0.1).abs() < 1e-12);
        for k in 1..=100 {
            let r = 0.1 + 0.2 * k as f64 / 101.0;
            let scale = 4.0 * e.value(r) / r;
            assert!(e.el_residual(r).abs() < 1e-8 * scale.max(1.0), "r = {r}");
        }
        assert!(matches!(
            eta_profile(0.1, 0.1, 0.1, 0.5, 2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn eta_with_equal_ends_dips_between() {
        let e = eta_profile(0.4, 0.1, 0.2, 0.2, 2).unwrap();
        assert!(e.derivative(0.1) < 0.0 && e.derivative(0.4) > 0.0);
        assert!(e.value(0.2) < 0.2);
    }

    #[test]
    fn zeta_endpoints_and_limit() {
        let z = zeta_profile(0.5, 0.05, 0.25, 2).unwrap();
        assert!((z.value(0.5) - 0.05).abs() < 1e-12);
        assert!((z.value(1.0) - 0.25).abs() < 1e-12);
        for k in 1..100 {
            let r = 0.5 + 0.5 * k as f64 / 100.0;
            assert!(z.el_residual(r).abs() < 1e-8 * (4.0 * z.value(r) / r).max(1.0));
        }
        let near = zeta_profile(1.0 - 1e-6, 0.2, 0.2, 2).unwrap();
        for r in [0.999999, 0.9999995, 1.0] {
            assert!((near.value(r) - 0.2).abs() < 1e-6);
        }
        assert!(matches!(
            zeta_profile(1.0, 0.1, 0.2, 2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn t0_example() {
        let t0 = compute_t0(0.1, 0.1, 0.5, 2).unwrap();
        // Independent root of a·u² - 2b·sⁿ·u + a·s²ⁿ = 0 in u = tⁿ by bisection.
        let f = |u: f64| 0.1 * u * u - 2.0 * 0.5 * 0.01 * u + 0.1 * 1e-4;
        let (mut lo, mut hi) = (0.05, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((t0 * t0 - lo).abs() < 1e-14);
        assert!((t0 * t0 - 0.0989898).abs() < 1e-7);
        assert!((t0 - 0.314626).abs() < 1e-6);
        let e = eta_profile(t0, 0.1, 0.1, 0.5, 2).unwrap();
        assert!(e.derivative(t0).abs() < 1e-9);
        assert_eq!(compute_t0(0.2, 0.3, 0.3, 3).unwrap(), 0.2);
        assert!(compute_t0(0.1, 0.6, 0.5, 2).is_err());
        assert!(compute_t0(0.1, 0.0, 0.5, 2).is_err());
    }

    #[test]
    fn t0_small_a_asymptotics() {
        let (s, b, n) = (0.1, 0.5, 3u32);
        for a in [1e-3, 1e-4, 1e-5] {
            let t0n = compute_t0(s, a, b, n).unwrap().powi(n as i32);
            let first = 2.0 * b / a * s.powi(n as i32);
            let second = (b / a) * (2.0 - 0.5 * (a / b).powi(2)) * s.powi(n as i32);
            assert!(((t0n - first) / first).abs() < (a / b).powi(2));
            assert!(((t0n - second) / second).abs() < (a / b).powi(4).max(1e-13));
        }
    }

    #[test]
    fn tau0_example() {
        let tau0 = compute_tau0(0.05, 0.25, 2).unwrap();
        let tn = 5.0 * (1.0 - 0.96f64.sqrt());
        assert!((tau0 * tau0 - tn).abs() < 1e-14);
        assert!((tn - 0.10102).abs() < 1e-5);
        assert!((tau0 - 0.31784).abs() < 1e-5);
        let z = zeta_profile(tau0, 0.05, 0.25, 2).unwrap();
        assert!(z.derivative(tau0).abs() < 1e-9);
        assert_eq!(compute_tau0(0.2, 0.2, 2).unwrap(), 1.0);
        assert!(compute_tau0(0.3, 0.2, 2).is_err());
    }

    #[test]
    fn tau0_lower_bound() {
        // τ₀ⁿ ≥ (a/α)/2 with equality only in the limit a/α → 0.
        for &(a, alpha) in &[(1e-6, 0.25), (0.01, 0.05), (0.2, 0.2), (0.1, 0.25)] {
            for n in 1..5 {
                let t = compute_tau0(a, alpha, n).unwrap().powi(n as i32);
                assert!(t >= 0.5 * a / alpha * (1.0 - 1e-15));
                assert!(t <= 1.0);
            }
        }
    }
}
