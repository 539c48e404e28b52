use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::Settings;
use crate::connection::{
    kantorovich_dual, min_connection_assignment, min_connection_bruteforce, SingularityConfig,
};
use crate::dipole::{dipole_tradeoff, DipoleConfig};
use crate::energy::{analytic_slice, energy_3d, DefectInterval, MeridianField};
use crate::error::{Error, Result};
use crate::geometry::{log_grid, uniform_grid, PowerLaw, RegularizedProfile};
use crate::variational::{
    compute_t0, compute_tau0, escape_threshold, eta_profile, g0_construct, gap_lower_bound,
    minimize_i_numerical, minimize_weighted_gap, zeta_profile, ConeConstraint,
};

const T0_R_MIN: f64 = 1e-6;
const T0_Z_LEVELS: usize = 5;
/// Allowed distance of the fitted deficit exponent from 2n.
const EXPONENT_TOL: f64 = 0.2;
/// Brute force is cross-checked in `sigma` up to this many pairs.
const SIGMA_BRUTE_MAX: usize = 8;

pub const DIPOLE_NOTE: &str =
    "exploratory evidence from a discretized relaxation; not a proof of minimality";

fn conformal_slice(n: u32, alpha: f64) -> f64 {
    4.0 * PI * n as f64 * alpha * alpha / (1.0 + alpha * alpha)
}

/// 4πn + 4πnα²/(1+α²): slice energy of T₀ including the disc the defect wraps.
pub fn slice_target(n: u32, alpha: f64) -> f64 {
    4.0 * PI * n as f64 + conformal_slice(n, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct T0EnergyRow {
    pub n: u32,
    pub alpha: f64,
    pub nodes: usize,
    pub slice_energy_closed: f64,
    /// E per unit height from the quadrature.
    pub slice_energy: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub mass_term: f64,
    pub total: f64,
    pub total_closed: f64,
    pub rel_err: f64,
    /// |𝒟(2·nodes) - 𝒟(nodes)| / 𝒟(nodes).
    pub refinement_change: f64,
}

fn t0_total(n: u32, alpha: f64, nodes: usize) -> Result<crate::energy::EnergyReport> {
    let u0 = PowerLaw {
        coeff: alpha,
        exponent: n as i32,
        n,
    };
    let field = MeridianField::extruded(
        &u0,
        log_grid(T0_R_MIN, 1.0, nodes)?,
        uniform_grid(-1.0, 1.0, T0_Z_LEVELS)?,
        vec![DefectInterval { lo: -1.0, hi: 1.0 }],
    )?;
    energy_3d(&field)
}

/// Energy accounting of T₀ on the cylinder of height 2.
pub fn cmd_t0_energy(n: u32, alpha: f64, nodes: usize) -> Result<T0EnergyRow> {
    let rep = t0_total(n, alpha, nodes)?;
    let fine = t0_total(n, alpha, 2 * nodes)?;
    let slice = conformal_slice(n, alpha);
    let total_closed = 2.0 * (slice + 4.0 * PI * n as f64);
    Ok(T0EnergyRow {
        n,
        alpha,
        nodes,
        slice_energy_closed: slice,
        slice_energy: rep.e / 2.0,
        e: rep.e,
        a: rep.a,
        mass_term: rep.mass_term,
        total: rep.total,
        total_closed,
        rel_err: ((rep.total - total_closed) / total_closed).abs(),
        refinement_change: ((fine.total - rep.total) / rep.total).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationRow {
    pub n: u32,
    pub alpha: f64,
    pub eps: f64,
    pub energy: f64,
    pub area: f64,
    pub limit: f64,
    pub deficit: f64,
    /// 8πn α²ε²ⁿ / (1 + α²ε²ⁿ), from the monotone area of both branches.
    pub deficit_closed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub n: u32,
    pub alpha: f64,
    /// Least-squares slope of ln(deficit) against ln(ε).
    pub exponent: f64,
    pub expected: f64,
    pub within_tolerance: bool,
    /// Deficits positive and shrinking with ε.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationTable {
    pub rows: Vec<RelaxationRow>,
    pub fit: ExponentFit,
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slice energies of u_ε against the limit 4πn + 4πnα²/(1+α²).
pub fn cmd_relaxation_check(n: u32, alpha: f64, eps: &[f64]) -> Result<RelaxationTable> {
    let limit = slice_target(n, alpha);
    let nf = n as f64;
    let rows = eps
        .iter()
        .map(|&e| {
            let s = analytic_slice(&RegularizedProfile::new(alpha, n, e)?, 0.0, 1.0)?;
            let q = alpha * alpha * e.powi(2 * n as i32);
            Ok(RelaxationRow {
                n,
                alpha,
                eps: e,
                energy: s.energy,
                area: s.area,
                limit,
                deficit: limit - s.energy,
                deficit_closed: 8.0 * PI * nf * q / (1.0 + q),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_eps: Vec<&RelaxationRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let monotone = by_eps.iter().all(|r| r.deficit > 0.0)
        && by_eps
            .windows(2)
            .all(|w| w[1].eps == w[0].eps || w[1].deficit < w[0].deficit);
    let exponent = if rows.len() >= 2 && rows.iter().all(|r| r.deficit > 0.0) {
        let lx: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|r| r.deficit.ln()).collect();
        slope(&lx, &ly)
    } else {
        f64::NAN
    };
    let expected = 2.0 * nf;
    Ok(RelaxationTable {
        rows,
        fit: ExponentFit {
            n,
            alpha,
            exponent,
            expected,
            within_tolerance: (exponent - expected).abs() <= EXPONENT_TOL,
            monotone,
        },
    })
}

/// Lower bound on the slice energy when the profile reaches f = 1 inside the
/// annulus: the disc part plus the areas from b up to 1 and from 1 down to α.
pub fn escape_lower_bound(n: u32, alpha: f64, b: f64) -> f64 {
    let nf = n as f64;
    let frac = |v: f64| v * v / (1.0 + v * v);
    let disc = 4.0 * PI * nf * (1.0 - frac(b));
    disc + 4.0 * PI * nf * (0.5 - frac(b)) + 4.0 * PI * nf * (0.5 - frac(alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub alpha: f64,
    pub a: f64,
    pub c0: f64,
    pub s: f64,
    pub s_tilde: f64,
    pub t0: f64,
    pub tau0: f64,
    /// max of |η'_{t₀}(t₀)| and |ζ'_{τ₀}(τ₀)| over the pieces that exist.
    pub stationarity: f64,
    pub i_closed: f64,
    pub i_numeric: f64,
    /// π n² a² ln(τ₀/t₀), 0 when t₀ ≥ τ₀.
    pub bound: f64,
    /// E - A of g₀ on the annulus.
    pub gap_g0: f64,
    /// Least E - A over the cone, discrete.
    pub gap_min: f64,
    pub pi_i: f64,
    pub threshold: f64,
    /// Slice-energy lower bound: disc part, annulus area, least gap.
    pub slice_min: f64,
    pub target: f64,
    pub holds: bool,
    /// The logarithmic bound alone beats the threshold.
    pub fast_path: bool,
    /// g₀ itself has gap ≤ threshold, so the inequality fails for this cone.
    pub certified_fail: bool,
    pub escape_bound: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alpha0 {
    pub n: u32,
    pub c0: f64,
    /// Largest swept α such that the inequality holds at every swept point
    /// with α' ≤ α; `None` when it already fails at the smallest α.
    pub alpha0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub alpha0: Vec<Alpha0>,
    /// Points with s ≥ s̃, s̃ > 1 or s̃ = 1 with a < α.
    pub skipped: usize,
    /// Every fast-path row also holds on the full numerical path.
    pub fast_path_agrees: bool,
}

/// The s̃ choices {2s, (s+1)/2, 1} that give an admissible cone.
fn s_tilde_choices(s: f64, a: f64, alpha: f64) -> (Vec<f64>, usize) {
    let mut out: Vec<f64> = Vec::new();
    let mut skipped = 0;
    for st in [2.0 * s, 0.5 * (s + 1.0), 1.0] {
        if out.contains(&st) {
            continue;
        }
        if !(s < st && st <= 1.0) || (st == 1.0 && a != alpha) {
            skipped += 1;
        } else {
            out.push(st);
        }
    }
    (out, skipped)
}

fn sweep_point(
    n: u32,
    alpha: f64,
    a: f64,
    c0: f64,
    st: f64,
    b: f64,
    nodes: usize,
) -> Result<SweepRow> {
    let s = c0 * a;
    let c = ConeConstraint::with_b(s, st, a, alpha, b)?;
    let g0 = g0_construct(&c, n)?;
    let bound = gap_lower_bound(&c, n)?;
    let t0 = compute_t0(s, a, b, n)?;
    let tau0 = compute_tau0(a, alpha, n)?;
    let mut stationarity = 0.0f64;
    if t0 > s {
        stationarity = stationarity.max(eta_profile(t0, s, a, b, n)?.derivative(t0).abs());
    }
    if tau0 < 1.0 {
        stationarity = stationarity.max(zeta_profile(tau0, a, alpha, n)?.derivative(tau0).abs());
    }
    let i_closed = g0.i_closed();
    let gap_g0 = analytic_slice(&g0, s, 1.0)?.gap;
    let numeric = minimize_i_numerical(&c, n, nodes)
        .and_then(|i| Ok((i.objective, minimize_weighted_gap(&c, n, nodes)?.objective)));
    let (i_numeric, gap_min, converged) = match numeric {
        Ok((i, g)) => (i, g, true),
        Err(Error::NotConverged { .. }) => (f64::NAN, f64::NAN, false),
        Err(e) => return Err(e),
    };
    let threshold = escape_threshold(a, n);
    let nf = n as f64;
    let frac = |v: f64| v * v / (1.0 + v * v);
    let disc = 4.0 * PI * nf * (1.0 - frac(b));
    let annulus_area = 4.0 * PI * nf * ((frac(b) - frac(a)) + (frac(alpha) - frac(a)));
    Ok(SweepRow {
        n,
        alpha,
        a,
        c0,
        s,
        s_tilde: st,
        t0,
        tau0,
        stationarity,
        i_closed,
        i_numeric,
        bound: bound.value,
        gap_g0,
        gap_min,
        pi_i: PI * i_closed,
        threshold,
        slice_min: disc + annulus_area + gap_min,
        target: slice_target(n, alpha),
        holds: converged && gap_min > threshold,
        fast_path: bound.value > threshold,
        certified_fail: gap_g0 <= threshold,
        escape_bound: escape_lower_bound(n, alpha, b),
        converged,
    })
}

/// Sweeps s = C₀a over the swept (n, α, a/α, C₀, s̃) grid.
pub fn cmd_proposition_sweep(settings: &Settings) -> Result<SweepTable> {
    let mut points = Vec::new();
    let mut skipped = 0;
    for &n in &settings.n {
        for &c0 in &settings.c0 {
            for &alpha in &settings.alpha {
                for &frac in &settings.a_fractions {
                    let a = alpha * frac;
                    let s = c0 * a;
                    let (choices, skip) = s_tilde_choices(s, a, alpha);
                    skipped += skip;
                    for st in choices {
                        points.push((n, alpha, a, c0, st));
                    }
                }
            }
        }
    }
    let (b, nodes) = (settings.b, settings.nodes);
    let rows = settings.pool()?.install(|| {
        points
            .par_iter()
            .map(|&(n, alpha, a, c0, st)| sweep_point(n, alpha, a, c0, st, b, nodes))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut alpha0 = Vec::new();
    for &n in &settings.n {
        for &c0 in &settings.c0 {
            let mut alphas: Vec<f64> = settings.alpha.clone();
            alphas.sort_by(f64::total_cmp);
            alphas.dedup();
            let mut best = None;
            for al in alphas {
                let mut pts = rows
                    .iter()
                    .filter(|r| r.n == n && r.c0 == c0 && r.alpha == al);
                let mut any = false;
                if !pts.all(|r| {
                    any = true;
                    r.holds
                }) {
                    break;
                }
                if any {
                    best = Some(al);
                }
            }
            alpha0.push(Alpha0 {
                n,
                c0,
                alpha0: best,
            });
        }
    }
    let fast_path_agrees = rows.iter().all(|r| !r.fast_path || r.holds);
    Ok(SweepTable {
        rows,
        alpha0,
        skipped,
        fast_path_agrees,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipoleRow {
    pub n: u32,
    pub alpha: f64,
    pub delta: f64,
    pub r_box: f64,
    pub nx: usize,
    pub nz: usize,
    pub seed: u64,
    pub e_ref: f64,
    pub e_new: f64,
    pub added: f64,
    pub mass_saving: f64,
    pub net: f64,
    pub net_uncalibrated: f64,
    pub bubble_radius: f64,
    pub ref_iterations: usize,
    pub new_iterations: usize,
    pub ref_decrement: f64,
    pub new_decrement: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DipoleSummary {
    pub n: u32,
    pub alpha: f64,
    pub max_net: f64,
    pub positive: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DipoleTable {
    pub rows: Vec<DipoleRow>,
    pub summary: Vec<DipoleSummary>,
    pub note: &'static str,
}

/// Relaxes the dipole replacement over the (n, α, δ, r_box) grid.
pub fn cmd_dipole_tradeoff(settings: &Settings) -> Result<DipoleTable> {
    let nx = settings.nodes;
    let nz = (nx / 4).max(8);
    let mut cfgs = Vec::new();
    for &n in &settings.n {
        for &alpha in &settings.alpha {
            for &delta in &settings.delta {
                let mut boxes: Vec<f64> = Vec::new();
                for &f in &settings.box_factors {
                    let rb = (f * delta).min(1.0);
                    if !boxes.contains(&rb) {
                        boxes.push(rb);
                    }
                }
                for r_box in boxes {
                    cfgs.push(DipoleConfig {
                        n,
                        alpha,
                        delta,
                        r_box,
                        nx,
                        nz,
                        seed: settings.seed.wrapping_add(cfgs.len() as u64),
                    });
                }
            }
        }
    }
    let results = settings.pool()?.install(|| {
        cfgs.par_iter()
            .map(dipole_tradeoff)
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<DipoleRow> = cfgs
        .iter()
        .zip(&results)
        .map(|(c, r)| DipoleRow {
            n: c.n,
            alpha: c.alpha,
            delta: c.delta,
            r_box: c.r_box,
            nx,
            nz,
            seed: c.seed,
            e_ref: r.e_ref,
            e_new: r.e_new,
            added: r.e_new - r.e_ref,
            mass_saving: r.mass_saving,
            net: r.net,
            net_uncalibrated: r.net_uncalibrated,
            bubble_radius: r.bubble_radius,
            ref_iterations: r.reference.iterations,
            new_iterations: r.relaxed.iterations,
            ref_decrement: r.reference.decrement,
            new_decrement: r.relaxed.decrement,
            converged: r.converged(),
        })
        .collect();
    let mut summary = Vec::new();
    for &n in &settings.n {
        for &alpha in &settings.alpha {
            let sel: Vec<&DipoleRow> = rows
                .iter()
                .filter(|r| r.n == n && r.alpha == alpha)
                .collect();
            let max_net = sel.iter().map(|r| r.net).fold(f64::NEG_INFINITY, f64::max);
            summary.push(DipoleSummary {
                n,
                alpha,
                max_net,
                positive: max_net > 0.0,
                converged: sel.iter().all(|r| r.converged),
            });
        }
    }
    Ok(DipoleTable {
        rows,
        summary,
        note: DIPOLE_NOTE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaReport {
    pub multiplicity: u32,
    pub pairs: usize,
    pub length: f64,
    pub mass: f64,
    pub matching: Vec<usize>,
    pub primal: f64,
    pub dual: f64,
    /// Exhaustive search value, for small configurations.
    pub bruteforce: Option<f64>,
}

/// Minimal connection of a JSON charge configuration.
pub fn cmd_sigma(text: &str) -> Result<SigmaReport> {
    let cfg = SingularityConfig::from_json(text)?;
    let conn = min_connection_assignment(&cfg)?;
    let dual = if cfg.is_empty() {
        0.0
    } else {
        kantorovich_dual(&cfg)?.value
    };
    let bruteforce = if cfg.len() <= SIGMA_BRUTE_MAX {
        Some(min_connection_bruteforce(&cfg)?.length)
    } else {
        None
    };
    Ok(SigmaReport {
        multiplicity: cfg.multiplicity,
        pairs: cfg.len(),
        length: conn.length,
        mass: conn.mass,
        primal: conn.length,
        matching: conn.matching,
        dual,
        bruteforce,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_tilde_choices_skip_inadmissible() {
        let (v, k) = s_tilde_choices(0.25, 0.05, 0.05);
        assert_eq!(v, vec![0.5, 0.625, 1.0]);
        assert_eq!(k, 0);
        let (v, k) = s_tilde_choices(0.25, 0.025, 0.05);
        assert_eq!(v, vec![0.5, 0.625]);
        assert_eq!(k, 1);
        // 2s = 1 coincides with the last choice.
        let (v, _) = s_tilde_choices(0.5, 0.025, 0.05);
        assert_eq!(v, vec![0.75]);
        let (v, k) = s_tilde_choices(1.0, 0.05, 0.05);
        assert!(v.is_empty());
        assert_eq!(k, 3);
    }

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = [0.2f64, 0.1, 0.05].iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = [0.2f64, 0.1, 0.05]
            .iter()
            .map(|e| 3.0 * e.powi(4))
            .map(f64::ln)
            .collect();
        assert!((slope(&x, &y) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn escape_bound_exceeds_target() {
        for n in 1..4 {
            for alpha in [0.01, 0.1, 0.25] {
                assert!(escape_lower_bound(n, alpha, 0.5) > slice_target(n, alpha));
            }
        }
    }
}
