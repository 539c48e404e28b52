//! Dirichlet energy, area with multiplicity and the energy of axially
//! symmetric configurations with a vertical defect.

pub mod meridian;
pub mod radial;

use serde::{Deserialize, Serialize};

pub use meridian::{energy_3d, psi_gain, DefectInterval, MeridianField};
pub use radial::{
    analytic_slice, area_radial, conformality_gap, dirichlet_energy_radial, monotone_area_bound,
    AnalyticSlice, ANALYTIC_R_LO,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub gap: f64,
    pub mass_term: f64,
    pub total: f64,
}

impl EnergyReport {
    pub fn new(e: f64, a: f64, mass_term: f64) -> Self {
        EnergyReport {
            e,
            a,
            gap: e - a,
            mass_term,
            total: e + mass_term,
        }
    }
}
