//! Stereographic chart of the unit sphere and the colatitude parametrization.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SPHERE_TOL: f64 = 1e-12;

/// A point of the unit sphere S² ⊂ R³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpherePoint {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm2 = x * x + y * y + z * z;
        if !norm2.is_finite() || (norm2 - 1.0).abs() > SPHERE_TOL {
            return Err(Error::NotOnSphere { x, y, z });
        }
        Ok(SpherePoint { x, y, z })
    }

    pub const NORTH: SpherePoint = SpherePoint {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub const SOUTH: SpherePoint = SpherePoint {
        x: 0.0,
        y: 0.0,
        z: -1.0,
    };

    /// The point with colatitude `phi` and longitude `lon`.
    pub fn from_angles(phi: f64, lon: f64) -> Self {
        let (s, c) = phi.sin_cos();
        SpherePoint {
            x: lon.cos() * s,
            y: lon.sin() * s,
            z: c,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dist(&self, other: &SpherePoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// A point of the extended plane R² ∪ {∞}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanarPoint {
    Finite { x: f64, y: f64 },
    Infinity,
}

/// Stereographic projection from the south pole: (x, y, z) ↦ (x, y)/(1 + z).
pub fn stereo_project(p: &SpherePoint) -> PlanarPoint {
    if p.z >= 0.0 {
        return PlanarPoint::Finite {
            x: p.x / (1.0 + p.z),
            y: p.y / (1.0 + p.z),
        };
    }
    // On the southern hemisphere use (x, y)(1 - z)/(x² + y²), which equals
    // (x, y)/(1 + z) on the sphere and does not cancel near z = -1.
    let rho2 = p.x * p.x + p.y * p.y;
    if rho2 == 0.0 {
        return PlanarPoint::Infinity;
    }
    let k = (1.0 - p.z) / rho2;
    PlanarPoint::Finite {
        x: p.x * k,
        y: p.y * k,
    }
}

/// Inverse stereographic projection; ∞ maps to the south pole.
pub fn stereo_inverse(w: &PlanarPoint) -> SpherePoint {
    match *w {
        PlanarPoint::Infinity => SpherePoint::SOUTH,
        PlanarPoint::Finite { x, y } => {
            let m = x.hypot(y);
            if m == 0.0 {
                return SpherePoint::NORTH;
            }
            // (2w, 1 - |w|²)/(1 + |w|²), in a form that stays accurate for large |w|.
            let cv = ChartValue::Finite(m);
            let (s, c) = (cv.sin_colatitude(), cv.cos_colatitude());
            SpherePoint {
                x: s * x / m,
                y: s * y / m,
                z: c,
            }
        }
    }
}

/// Radial magnitude of a planar chart point, with +∞ standing for the south pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartValue {
    Finite(f64),
    Infinity,
}

impl ChartValue {
    pub fn new(f: f64) -> Result<Self> {
        if f.is_nan() || f < 0.0 {
            return Err(Error::NegativeChartValue(f));
        }
        if f.is_infinite() {
            return Ok(ChartValue::Infinity);
        }
        Ok(ChartValue::Finite(f))
    }

    /// `f` as an `f64`, with `f64::INFINITY` for the pole.
    pub fn value(&self) -> f64 {
        match *self {
            ChartValue::Finite(f) => f,
            ChartValue::Infinity => f64::INFINITY,
        }
    }

    /// sin φ = 2f/(1 + f²).
    pub fn sin_colatitude(&self) -> f64 {
        match *self {
            ChartValue::Infinity => 0.0,
            ChartValue::Finite(f) if f <= 1.0 => 2.0 * f / (1.0 + f * f),
            ChartValue::Finite(f) => 2.0 / (f + 1.0 / f),
        }
    }

    /// cos φ = (1 - f²)/(1 + f²).
    pub fn cos_colatitude(&self) -> f64 {
        match *self {
            ChartValue::Infinity => -1.0,
            ChartValue::Finite(f) if f <= 1.0 => (1.0 - f * f) / (1.0 + f * f),
            ChartValue::Finite(f) => {
                let g = 1.0 / f;
                (g * g - 1.0) / (g * g + 1.0)
            }
        }
    }

    /// f²/(1 + f²), equal to 1 at the pole.
    pub fn area_fraction(&self) -> f64 {
        match *self {
            ChartValue::Infinity => 1.0,
            ChartValue::Finite(f) if f <= 1.0 => f * f / (1.0 + f * f),
            ChartValue::Finite(f) => 1.0 / (1.0 + 1.0 / (f * f)),
        }
    }
}

/// φ = 2 arctan f.
pub fn chart_to_colatitude(f: ChartValue) -> f64 {
    match f {
        ChartValue::Infinity => PI,
        ChartValue::Finite(v) => 2.0 * v.atan(),
    }
}

/// f = tan(φ/2); φ = π gives the pole marker.
pub fn colatitude_to_chart(phi: f64) -> Result<ChartValue> {
    if !(0.0..=PI).contains(&phi) {
        return Err(Error::param("phi", format!("{phi} outside [0, pi]")));
    }
    if phi == PI {
        return Ok(ChartValue::Infinity);
    }
    Ok(ChartValue::Finite((0.5 * phi).tan()))
}

/// Π⁻¹(f·(cos nθ, sin nθ)), the value of an n-axially symmetric map.
pub fn axial_point(f: ChartValue, n: u32, theta: f64) -> SpherePoint {
    let lon = n as f64 * theta;
    match f {
        ChartValue::Infinity => SpherePoint::SOUTH,
        ChartValue::Finite(_) => {
            let s = f.sin_colatitude();
            SpherePoint {
                x: lon.cos() * s,
                y: lon.sin() * s,
                z: f.cos_colatitude(),
            }
        }
    }
}
