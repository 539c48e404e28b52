//! Axially symmetric maps on the ball B₂ and their degree around points of the axis.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::chart::{axial_point, ChartValue, SpherePoint};
use crate::quadrature::simpson;

pub const DEFAULT_FLUX_PANELS: usize = 1024;

/// A map given in cylindrical coordinates (r, θ, z).
pub trait AxialMap {
    fn value(&self, r: f64, theta: f64, z: f64) -> Result<SpherePoint>;
}

/// The map u₀ = Π⁻¹(α rⁿ (cos nθ, sin nθ)), independent of z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalMap {
    pub alpha: f64,
    pub n: u32,
}

impl AxialMap for ConformalMap {
    fn value(&self, r: f64, theta: f64, _z: f64) -> Result<SpherePoint> {
        let f = ChartValue::Finite(self.alpha * r.powi(self.n as i32));
        Ok(axial_point(f, self.n, theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantMap(pub SpherePoint);

impl AxialMap for ConstantMap {
    fn value(&self, _r: f64, _theta: f64, _z: f64) -> Result<SpherePoint> {
        Ok(self.0)
    }
}

/// ũ₀: u₀ outside the cones C± = {±z > 1, r < ±z - 1}, with
/// f = α (|z| - 1)²ⁿ r⁻ⁿ inside them. Singular at (0, 0, ±1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeDipoleMap {
    alpha: f64,
    n: u32,
}

impl ConeDipoleMap {
    pub fn new(alpha: f64, n: u32) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 0.25) {
            return Err(Error::param("alpha", format!("{alpha} outside (0, 1/4]")));
        }
        if n == 0 {
            return Err(Error::param("n", "winding number must be >= 1"));
        }
        Ok(ConeDipoleMap { alpha, n })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn winding(&self) -> u32 {
        self.n
    }

    /// Whether (r, z) lies in the open cone C⁺ ∪ C⁻.
    pub fn in_cones(r: f64, z: f64) -> bool {
        let h = z.abs() - 1.0;
        h > 0.0 && r < h
    }

    pub fn chart(&self, r: f64, z: f64) -> Result<ChartValue> {
        if !(r >= 0.0) || !z.is_finite() || r * r + z * z > 4.0 * (1.0 + 1e-12) {
            return Err(Error::OutsideDomain { r, z });
        }
        if r == 0.0 && z.abs() == 1.0 {
            return Err(Error::SingularPoint { r, z });
        }
        let n = self.n as i32;
        if Self::in_cones(r, z) {
            if r == 0.0 {
                return Ok(ChartValue::Infinity);
            }
            let h = z.abs() - 1.0;
            // α h²ⁿ r⁻ⁿ = α hⁿ (h/r)ⁿ
            let f = self.alpha * h.powi(n) * (h / r).powi(n);
            return Ok(if f.is_finite() {
                ChartValue::Finite(f)
            } else {
                ChartValue::Infinity
            });
        }
        Ok(ChartValue::Finite(self.alpha * r.powi(n)))
    }
}

impl AxialMap for ConeDipoleMap {
    fn value(&self, r: f64, theta: f64, z: f64) -> Result<SpherePoint> {
        Ok(axial_point(self.chart(r, z)?, self.n, theta))
    }
}

/// ũ₀ at cylindrical coordinates (r, θ, z).
pub fn tilde_u0_value(map: &ConeDipoleMap, r: f64, theta: f64, z: f64) -> Result<SpherePoint> {
    map.value(r, theta, z)
}

/// Result of a flux-based degree computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeReport {
    pub degree: i64,
    /// (1/4π) times the computed flux, before rounding.
    pub raw: f64,
    pub residual: f64,
}

const FD_STEP: f64 = 1e-6;

/// Degree of `map` restricted to the sphere of `radius` about `center`, from
/// the flux of D(u) through it. The center must lie on the symmetry axis.
pub fn degree_from_flux(map: &dyn AxialMap, center: [f64; 3], radius: f64) -> Result<DegreeReport> {
    degree_from_flux_with(map, center, radius, DEFAULT_FLUX_PANELS)
}

pub fn degree_from_flux_with(
    map: &dyn AxialMap,
    center: [f64; 3],
    radius: f64,
    panels: usize,
) -> Result<DegreeReport> {
    if center[0] != 0.0 || center[1] != 0.0 {
        return Err(Error::param("center", "must lie on the z-axis"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", "must be positive"));
    }
    let zc = center[2];
    // The sphere is parametrized by polar angle ϑ and azimuth θ; by symmetry the
    // integrand u·(∂_ϑu × ∂_θu) does not depend on θ.
    let eval = |vt: f64, theta: f64| -> Result<[f64; 3]> {
        let r = radius * vt.sin().max(0.0);
        let z = zc + radius * vt.cos();
        Ok(map.value(r, theta, z)?.as_array())
    };

    let mut failure: Option<Error> = None;
    let integrand = |vt: f64| -> f64 {
        let inner = || -> Result<f64> {
            let u = eval(vt, 0.0)?;
            let lo = (vt - FD_STEP).max(0.0);
            let hi = (vt + FD_STEP).min(PI);
            let (ul, uh) = (eval(lo, 0.0)?, eval(hi, 0.0)?);
            let du_dvt = sub_scale(&uh, &ul, 1.0 / (hi - lo));
            let (tl, th) = (eval(vt, -FD_STEP)?, eval(vt, FD_STEP)?);
            let du_dth = sub_scale(&th, &tl, 0.5 / FD_STEP);
            Ok(dot(&u, &cross(&du_dvt, &du_dth)))
        };
        match inner() {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let integral = simpson(0.0, PI, panels, integrand);
    if let Some(e) = failure {
        return Err(e);
    }
    let raw = 2.0 * PI * integral / (4.0 * PI);
    let degree = raw.round();
    let residual = (raw - degree).abs();
    if residual > 0.1 {
        return Err(Error::UnderResolved { raw, residual });
    }
    Ok(DegreeReport {
        degree: degree as i64,
        raw,
        residual,
    })
}

fn sub_scale(a: &[f64; 3], b: &[f64; 3], k: f64) -> [f64; 3] {
    [(a[0] - b[0]) * k, (a[1] - b[1]) * k, (a[2] - b[2]) * k]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
