//! Sphere geometry: the stereographic chart, radial profiles, and the explicit
//! maps u₀, u_ε and ũ₀.

pub mod chart;
pub mod maps;
pub mod profile;

pub use chart::{
    axial_point, chart_to_colatitude, colatitude_to_chart, stereo_inverse, stereo_project,
    ChartValue, PlanarPoint, SpherePoint,
};
pub use maps::{
    degree_from_flux, degree_from_flux_with, tilde_u0_value, AxialMap, ConeDipoleMap, ConformalMap,
    ConstantMap, DegreeReport, DEFAULT_FLUX_PANELS,
};
pub use profile::{
    log_grid, u0_profile, u_eps_profile, uniform_grid, ChartProfile, PowerLaw, RadialProfile,
    RegularizedProfile, DEFAULT_ALPHA, DEFAULT_NODES, DEFAULT_R_MIN,
};
