//! Radial profiles of n-axially symmetric maps on a disc.
//!
//! A map u(r, θ) = Π⁻¹(f(r)(cos nθ, sin nθ)) is stored through its colatitude
//! φ = 2 arctan f, which stays bounded where f blows up on the axis.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::chart::{chart_to_colatitude, ChartValue};

pub const DEFAULT_R_MIN: f64 = 1e-6;
pub const DEFAULT_NODES: usize = 2048;
pub const DEFAULT_ALPHA: f64 = 0.25;

/// Geometric grid with `nodes` radii from `r_min` to `r_max`.
pub fn log_grid(r_min: f64, r_max: f64, nodes: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "need 0 < r_min < r_max, got {r_min}, {r_max}"
        )));
    }
    if nodes < 2 {
        return Err(Error::InvalidGrid("need at least 2 nodes".into()));
    }
    let (lo, hi) = (r_min.ln(), r_max.ln());
    let step = (hi - lo) / (nodes - 1) as f64;
    let mut g: Vec<f64> = (0..nodes).map(|i| (lo + step * i as f64).exp()).collect();
    g[0] = r_min;
    g[nodes - 1] = r_max;
    Ok(g)
}

/// Uniform grid with `nodes` points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, nodes: usize) -> Result<Vec<f64>> {
    if !(b > a) || nodes < 2 {
        return Err(Error::InvalidGrid(format!(
            "need a < b and >= 2 nodes, got [{a}, {b}] with {nodes}"
        )));
    }
    let h = (b - a) / (nodes - 1) as f64;
    let mut g: Vec<f64> = (0..nodes).map(|i| a + h * i as f64).collect();
    g[nodes - 1] = b;
    Ok(g)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("need at least 2 nodes".into()));
    }
    if grid[0] <= 0.0 || !grid.iter().all(|r| r.is_finite()) {
        return Err(Error::InvalidGrid(
            "radii must be positive and finite".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "radii must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Sampled colatitude profile φ(r) on a strictly increasing radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Vec<f64>,
    phi: Vec<f64>,
    n: u32,
}

impl RadialProfile {
    pub fn new(grid: Vec<f64>, phi: Vec<f64>, n: u32) -> Result<Self> {
        check_grid(&grid)?;
        if phi.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} radii but {} colatitudes",
                grid.len(),
                phi.len()
            )));
        }
        if let Some(i) = phi
            .iter()
            .position(|p| !(0.0..=std::f64::consts::PI).contains(p))
        {
            return Err(Error::param(
                "phi",
                format!("phi[{i}] = {} outside [0, pi]", phi[i]),
            ));
        }
        if n == 0 {
            return Err(Error::param("n", "winding number must be positive"));
        }
        Ok(RadialProfile { grid, phi, n })
    }

    /// Samples an analytic profile on `grid`.
    pub fn sample<P: ChartProfile + ?Sized>(profile: &P, grid: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        let phi = grid.iter().map(|&r| profile.colatitude(r)).collect();
        RadialProfile::new(grid, phi, profile.winding())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn winding(&self) -> u32 {
        self.n
    }

    pub fn r_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn r_max(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Chart values tan(φ/2) at the nodes.
    pub fn chart_values(&self) -> Vec<ChartValue> {
        self.phi
            .iter()
            .map(|&p| {
                crate::geometry::chart::colatitude_to_chart(p).unwrap_or(ChartValue::Infinity)
            })
            .collect()
    }

    /// Same profile with every radius multiplied by `lambda`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", "dilation factor must be positive"));
        }
        RadialProfile::new(
            self.grid.iter().map(|r| r * lambda).collect(),
            self.phi.clone(),
            self.n,
        )
    }

    /// Writes `r,phi` rows with 16 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "phi"])?;
        for (r, p) in self.grid.iter().zip(&self.phi) {
            w.write_record([format!("{r:.15e}"), format!("{p:.15e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, n: u32) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["r", "phi"] {
            return Err(Error::Input(format!(
                "expected header `r,phi`, got {headers:?}"
            )));
        }
        let mut grid = Vec::new();
        let mut phi = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Input(format!("bad number {s:?}: {e}")))
            };
            grid.push(parse(&rec[0])?);
            phi.push(parse(&rec[1])?);
        }
        RadialProfile::new(grid, phi, n)
    }
}

/// A radial profile known in closed form through its chart value f(r).
pub trait ChartProfile {
    fn winding(&self) -> u32;

    fn chart(&self, r: f64) -> ChartValue;

    /// r·f'(r) at a radius where f is finite.
    fn log_derivative(&self, r: f64) -> f64;

    /// Radii where the profile is not smooth or changes monotonicity.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn colatitude(&self, r: f64) -> f64 {
        chart_to_colatitude(self.chart(r))
    }

    /// dφ/d(log r) = 2 r f'/(1 + f²).
    fn colatitude_log_slope(&self, r: f64) -> f64 {
        match self.chart(r) {
            ChartValue::Infinity => 0.0,
            ChartValue::Finite(f) => {
                let rf = self.log_derivative(r);
                if f <= 1.0 {
                    2.0 * rf / (1.0 + f * f)
                } else {
                    // rf is O(f) on the profiles used here; divide first.
                    2.0 * (rf / f) / (f + 1.0 / f)
                }
            }
        }
    }
}

/// f(r) = c·r^k on the whole half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub coeff: f64,
    pub exponent: i32,
    pub n: u32,
}

impl ChartProfile for PowerLaw {
    fn winding(&self) -> u32 {
        self.n
    }

    fn chart(&self, r: f64) -> ChartValue {
        if self.coeff == 0.0 {
            return ChartValue::Finite(0.0);
        }
        let f = self.coeff * r.powi(self.exponent);
        if f.is_finite() {
            ChartValue::Finite(f)
        } else {
            ChartValue::Infinity
        }
    }

    fn log_derivative(&self, r: f64) -> f64 {
        self.exponent as f64 * self.chart(r).value()
    }
}

/// The regularized maps u_ε: f = α rⁿ for r ≥ ε and f = α ε²ⁿ r⁻ⁿ for r ≤ ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedProfile {
    pub alpha: f64,
    pub n: u32,
    pub eps: f64,
}

impl RegularizedProfile {
    pub fn new(alpha: f64, n: u32, eps: f64) -> Result<Self> {
        check_alpha_n(alpha, n)?;
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::param("eps", format!("{eps} outside (0, 1]")));
        }
        Ok(RegularizedProfile { alpha, n, eps })
    }
}

impl ChartProfile for RegularizedProfile {
    fn winding(&self) -> u32 {
        self.n
    }

    fn chart(&self, r: f64) -> ChartValue {
        let n = self.n as i32;
        if r >= self.eps {
            return ChartValue::Finite(self.alpha * r.powi(n));
        }
        if r <= 0.0 {
            return if self.alpha == 0.0 {
                ChartValue::Finite(0.0)
            } else {
                ChartValue::Infinity
            };
        }
        // α ε²ⁿ r⁻ⁿ = α εⁿ (ε/r)ⁿ
        let f = self.alpha * self.eps.powi(n) * (self.eps / r).powi(n);
        if f.is_finite() {
            ChartValue::Finite(f)
        } else {
            ChartValue::Infinity
        }
    }

    fn log_derivative(&self, r: f64) -> f64 {
        let k = if r >= self.eps {
            self.n as f64
        } else {
            -(self.n as f64)
        };
        k * self.chart(r).value()
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.eps]
    }
}

fn check_alpha_n(alpha: f64, n: u32) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("{alpha} must be >= 0")));
    }
    if n == 0 {
        return Err(Error::param("n", "winding number must be >= 1"));
    }
    Ok(())
}

/// The profile of u₀: f(r) = α rⁿ.
pub fn u0_profile(alpha: f64, n: u32, grid: Vec<f64>) -> Result<RadialProfile> {
    check_alpha_n(alpha, n)?;
    RadialProfile::sample(
        &PowerLaw {
            coeff: alpha,
            exponent: n as i32,
            n,
        },
        grid,
    )
}

/// The profile of u_ε.
pub fn u_eps_profile(alpha: f64, n: u32, eps: f64, grid: Vec<f64>) -> Result<RadialProfile> {
    RadialProfile::sample(&RegularizedProfile::new(alpha, n, eps)?, grid)
}
