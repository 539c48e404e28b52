//! Axially symmetric fields φ(r, z) on a cylinder, together with the vertical
//! defect set on the axis.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::energy::radial::{area_radial, dirichlet_energy_radial};
use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::geometry::profile::check_grid;
use crate::geometry::{ChartProfile, RadialProfile};

/// A z-interval of the axis carrying multiplicity n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectInterval {
    pub lo: f64,
    pub hi: f64,
}

impl DefectInterval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    fn contains_strictly(&self, z: f64) -> bool {
        z > self.lo && z < self.hi
    }

    fn contains(&self, z: f64) -> bool {
        z >= self.lo && z <= self.hi
    }
}

#[derive(Serialize, Deserialize)]
struct DefectFile {
    n: u32,
    defects: Vec<DefectInterval>,
}

/// φ sampled on r_grid × z_grid, stored row-major by z.
///
/// Consistency with the defect set: at the innermost radius φ tends to 0
/// (f → 0) on z-levels inside a defect interval and to π (f → ∞) elsewhere,
/// with π/2 as the separator. Levels whose outer value is a pole carry no
/// winding and are exempt.
#[derive(Debug, Clone, PartialEq)]
pub struct MeridianField {
    r_grid: Vec<f64>,
    z_grid: Vec<f64>,
    phi: Vec<f64>,
    n: u32,
    defects: Vec<DefectInterval>,
}

impl MeridianField {
    pub fn new(
        r_grid: Vec<f64>,
        z_grid: Vec<f64>,
        phi: Vec<f64>,
        n: u32,
        mut defects: Vec<DefectInterval>,
    ) -> Result<Self> {
        check_grid(&r_grid)?;
        if z_grid.len() < 2
            || !z_grid.iter().all(|z| z.is_finite())
            || z_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidGrid(
                "z levels must be finite and strictly increasing, at least 2".into(),
            ));
        }
        if n == 0 {
            return Err(Error::param("n", "winding number must be >= 1"));
        }
        if phi.len() != r_grid.len() * z_grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}x{} grid",
                phi.len(),
                r_grid.len(),
                z_grid.len()
            )));
        }
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(v) = phi.iter().find(|v| !(0.0..=PI).contains(*v)) {
            return Err(Error::InconsistentField(format!(
                "phi = {v} outside [0, pi]"
            )));
        }
        defects.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let (z0, z1) = (z_grid[0], z_grid[z_grid.len() - 1]);
        for d in &defects {
            if !(d.lo < d.hi) || d.lo < z0 || d.hi > z1 {
                return Err(Error::InconsistentField(format!(
                    "defect [{}, {}] is empty or outside [{z0}, {z1}]",
                    d.lo, d.hi
                )));
            }
        }
        for w in defects.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::InconsistentField("defect intervals overlap".into()));
            }
        }
        let nr = r_grid.len();
        for (j, &z) in z_grid.iter().enumerate() {
            let outer = phi[(j + 1) * nr - 1];
            if outer == 0.0 || outer == PI {
                // The boundary circle sits at a pole and carries no winding.
                continue;
            }
            let inner = phi[j * nr];
            if defects.iter().any(|d| d.contains_strictly(z)) && inner >= FRAC_PI_2 {
                return Err(Error::InconsistentField(format!(
                    "z = {z} lies on the defect but phi(r_min) = {inner}"
                )));
            }
            if !defects.iter().any(|d| d.contains(z)) && inner <= FRAC_PI_2 {
                return Err(Error::InconsistentField(format!(
                    "z = {z} is off the defect but phi(r_min) = {inner}"
                )));
            }
        }
        Ok(MeridianField {
            r_grid,
            z_grid,
            phi,
            n,
            defects,
        })
    }

    /// A field built from a pointwise colatitude.
    pub fn from_fn<F: FnMut(f64, f64) -> f64>(
        r_grid: Vec<f64>,
        z_grid: Vec<f64>,
        n: u32,
        defects: Vec<DefectInterval>,
        mut phi: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(r_grid.len() * z_grid.len());
        for &z in &z_grid {
            for &r in &r_grid {
                values.push(phi(r, z));
            }
        }
        MeridianField::new(r_grid, z_grid, values, n, defects)
    }

    /// The z-independent extension of a radial profile.
    pub fn extruded<P: ChartProfile + ?Sized>(
        profile: &P,
        r_grid: Vec<f64>,
        z_grid: Vec<f64>,
        defects: Vec<DefectInterval>,
    ) -> Result<Self> {
        let n = profile.winding();
        MeridianField::from_fn(r_grid, z_grid, n, defects, |r, _| profile.colatitude(r))
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn z_grid(&self) -> &[f64] {
        &self.z_grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn winding(&self) -> u32 {
        self.n
    }

    pub fn defects(&self) -> &[DefectInterval] {
        &self.defects
    }

    pub fn defect_length(&self) -> f64 {
        self.defects.iter().map(DefectInterval::length).sum()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nr = self.r_grid.len();
        &self.phi[j * nr..(j + 1) * nr]
    }

    /// The radial profile at the z-level `j`.
    pub fn slice(&self, j: usize) -> Result<RadialProfile> {
        RadialProfile::new(self.r_grid.clone(), self.row(j).to_vec(), self.n)
    }

    /// Index of the grid line at `z`, within 1e-12.
    pub fn level_index(&self, z: f64) -> Result<usize> {
        self.z_grid
            .iter()
            .position(|&g| (g - z).abs() <= 1e-12)
            .ok_or(Error::OffGrid(z))
    }

    /// Slice energies E(z_j) over the full radial range.
    pub fn slice_energies(&self) -> Result<Vec<f64>> {
        let (lo, hi) = (self.r_grid[0], self.r_grid[self.r_grid.len() - 1]);
        (0..self.z_grid.len())
            .map(|j| dirichlet_energy_radial(&self.slice(j)?, lo, hi))
            .collect()
    }

    pub fn slice_areas(&self) -> Result<Vec<f64>> {
        let (lo, hi) = (self.r_grid[0], self.r_grid[self.r_grid.len() - 1]);
        (0..self.z_grid.len())
            .map(|j| area_radial(&self.slice(j)?, lo, hi))
            .collect()
    }

    /// π∬ φ_z² r dr dz, with cell differences in z and the trapezoid rule in r.
    pub fn vertical_energy(&self) -> f64 {
        let nr = self.r_grid.len();
        let rw = trapezoid_weights(&self.r_grid);
        let mut total = 0.0;
        for j in 0..self.z_grid.len() - 1 {
            let dz = self.z_grid[j + 1] - self.z_grid[j];
            let (a, b) = (self.row(j), self.row(j + 1));
            let mut cell = 0.0;
            for i in 0..nr {
                let d = (b[i] - a[i]) / dz;
                cell += rw[i] * self.r_grid[i] * d * d;
            }
            total += cell * dz;
        }
        PI * total
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "z", "phi"])?;
        let nr = self.r_grid.len();
        for (j, &z) in self.z_grid.iter().enumerate() {
            for (i, &r) in self.r_grid.iter().enumerate() {
                w.write_record([
                    format!("{r:.15e}"),
                    format!("{z:.15e}"),
                    format!("{:.15e}", self.phi[j * nr + i]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// The sidecar listing the winding number and defect intervals.
    pub fn write_defects_json<W: Write>(&self, out: W) -> Result<()> {
        let file = DefectFile {
            n: self.n,
            defects: self.defects.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    /// Reads a field written by [`write_csv`](Self::write_csv) and its sidecar.
    /// Rows must be ordered by z, then r.
    pub fn read<R1: Read, R2: Read>(csv_in: R1, defects_in: R2) -> Result<Self> {
        let file: DefectFile = serde_json::from_reader(defects_in)?;
        let mut rdr = csv::Reader::from_reader(csv_in);
        if rdr.headers()?.iter().collect::<Vec<_>>() != ["r", "z", "phi"] {
            return Err(Error::Input("expected header r,z,phi".into()));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut vals = [0.0; 3];
            for (k, v) in vals.iter_mut().enumerate() {
                let s = rec.get(k).ok_or_else(|| Error::Input("short row".into()))?;
                *v = s
                    .trim()
                    .parse()
                    .map_err(|e| Error::Input(format!("bad number {s:?}: {e}")))?;
            }
            rows.push(vals);
        }
        let first_z = rows
            .first()
            .ok_or_else(|| Error::Input("empty field".into()))?[1];
        let nr = rows.iter().take_while(|v| v[1] == first_z).count();
        if rows.len() % nr != 0 {
            return Err(Error::Input("rows do not form a tensor grid".into()));
        }
        let r_grid: Vec<f64> = rows[..nr].iter().map(|v| v[0]).collect();
        let z_grid: Vec<f64> = rows.iter().step_by(nr).map(|v| v[1]).collect();
        for (k, v) in rows.iter().enumerate() {
            if v[0] != r_grid[k % nr] || v[1] != z_grid[k / nr] {
                return Err(Error::Input(format!("row {k} is out of grid order")));
            }
        }
        let phi = rows.iter().map(|v| v[2]).collect();
        MeridianField::new(r_grid, z_grid, phi, file.n, file.defects)
    }
}

pub(crate) fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let m = grid.len();
    let mut w = vec![0.0; m];
    for k in 0..m - 1 {
        let h = 0.5 * (grid[k + 1] - grid[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

fn integrate_levels(z: &[f64], values: &[f64]) -> f64 {
    trapezoid_weights(z)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Energy of the configuration: Dirichlet energy of the field plus 4π times
/// the mass n·|defect| of the vertical part.
pub fn energy_3d(field: &MeridianField) -> Result<EnergyReport> {
    let z = field.z_grid();
    let e = integrate_levels(z, &field.slice_energies()?) + field.vertical_energy();
    let a = integrate_levels(z, &field.slice_areas()?);
    let mass_term = 4.0 * PI * field.winding() as f64 * field.defect_length();
    Ok(EnergyReport::new(e, a, mass_term))
}

/// ψ(z) = 4πn + 4πnα²/(1+α²) - E(slice at z).
pub fn psi_gain(field: &MeridianField, z: f64, alpha: f64) -> Result<f64> {
    let j = field.level_index(z)?;
    let r = field.r_grid();
    let e = dirichlet_energy_radial(&field.slice(j)?, r[0], r[r.len() - 1])?;
    let n = field.winding() as f64;
    Ok(4.0 * PI * n + 4.0 * PI * n * alpha * alpha / (1.0 + alpha * alpha) - e)
}
