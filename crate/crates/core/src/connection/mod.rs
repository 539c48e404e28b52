//! Minimal connections between signed point singularities.

mod assignment;
mod simplex;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assignment::hungarian;
pub use simplex::{maximize, LpSolution};

pub const BRUTE_FORCE_MAX: usize = 9;

pub type Point = [f64; 3];

/// Positive and negative charges, each of degree ±`multiplicity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityConfig {
    pub multiplicity: u32,
    pub positives: Vec<Point>,
    pub negatives: Vec<Point>,
}

impl SingularityConfig {
    pub fn new(multiplicity: u32, positives: Vec<Point>, negatives: Vec<Point>) -> Result<Self> {
        let cfg = SingularityConfig {
            multiplicity,
            positives,
            negatives,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn empty() -> Self {
        SingularityConfig {
            multiplicity: 1,
            positives: Vec::new(),
            negatives: Vec::new(),
        }
    }

    /// Parses `{"multiplicity", "positives", "negatives"}`; blank input is the
    /// empty configuration.
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::empty());
        }
        let cfg: SingularityConfig =
            serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn len(&self) -> usize {
        self.positives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    /// Balanced charges, finite coordinates, no repeated point within a sign.
    /// A positive and a negative charge may coincide.
    pub fn validate(&self) -> Result<()> {
        if self.multiplicity == 0 {
            return Err(Error::param("multiplicity", "must be >= 1"));
        }
        if self.positives.len() != self.negatives.len() {
            return Err(Error::Unbalanced {
                positives: self.positives.len(),
                negatives: self.negatives.len(),
            });
        }
        for set in [&self.positives, &self.negatives] {
            for (i, p) in set.iter().enumerate() {
                if p.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Input(format!("non-finite point {p:?}")));
                }
                if set[..i].contains(p) {
                    return Err(Error::DuplicatePoint(*p));
                }
            }
        }
        Ok(())
    }

    fn cost_matrix(&self) -> Vec<Vec<f64>> {
        self.positives
            .iter()
            .map(|p| self.negatives.iter().map(|q| dist(p, q)).collect())
            .collect()
    }

    fn result(&self, matching: Vec<usize>) -> ConnectionResult {
        let length = self
            .positives
            .iter()
            .zip(&matching)
            .map(|(p, &j)| dist(p, &self.negatives[j]))
            .fold(0.0, |acc, d| acc + d);
        ConnectionResult {
            length,
            mass: self.multiplicity as f64 * length,
            matching,
        }
    }
}

/// A minimal connection: `matching[i]` is the negative joined to positive `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionResult {
    pub length: f64,
    pub mass: f64,
    pub matching: Vec<usize>,
}

pub fn dist(p: &Point, q: &Point) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Exhaustive search over permutations in lexicographic order; the first
/// optimum found wins ties.
pub fn min_connection_bruteforce(cfg: &SingularityConfig) -> Result<ConnectionResult> {
    cfg.validate()?;
    let k = cfg.len();
    if k > BRUTE_FORCE_MAX {
        return Err(Error::TooManyPoints {
            k,
            max: BRUTE_FORCE_MAX,
        });
    }
    let cost = cfg.cost_matrix();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_len = f64::INFINITY;
    loop {
        let len: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        if len < best_len {
            best_len = len;
            best.clone_from(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(cfg.result(best))
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let Some(i) = (0..p.len() - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i]).unwrap();
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Optimal matching by the Hungarian method, O(k³).
pub fn min_connection_assignment(cfg: &SingularityConfig) -> Result<ConnectionResult> {
    cfg.validate()?;
    Ok(cfg.result(hungarian(&cfg.cost_matrix())))
}

/// Optimal Kantorovich potentials on the charges.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// max Σ ξ(Pᵢ) - Σ ξ(Nᵢ) over 1-Lipschitz ξ on the charges.
    pub value: f64,
    pub positive_potentials: Vec<f64>,
    pub negative_potentials: Vec<f64>,
}

/// The Kantorovich–Rubinstein dual: a linear program with one potential per
/// charge and a Lipschitz constraint for every ordered pair of charges.
pub fn kantorovich_dual(cfg: &SingularityConfig) -> Result<DualSolution> {
    cfg.validate()?;
    let k = cfg.len();
    let points: Vec<Point> = cfg
        .positives
        .iter()
        .chain(&cfg.negatives)
        .copied()
        .collect();
    let m = points.len();
    let c: Vec<f64> = (0..m).map(|i| if i < k { 1.0 } else { -1.0 }).collect();
    let mut rows = Vec::with_capacity(m * m.saturating_sub(1));
    let mut rhs = Vec::with_capacity(rows.capacity());
    for a in 0..m {
        for b in 0..m {
            if a != b {
                let mut row = vec![0.0; m];
                row[a] = 1.0;
                row[b] = -1.0;
                rows.push(row);
                rhs.push(dist(&points[a], &points[b]));
            }
        }
    }
    // The objective is invariant under ξ ↦ ξ + const, so ξ ≥ 0 loses nothing.
    let sol = maximize(&c, &rows, &rhs)?;
    Ok(DualSolution {
        value: sol.value,
        positive_potentials: sol.x[..k].to_vec(),
        negative_potentials: sol.x[k..].to_vec(),
    })
}

/// F = E + 4π·mass, with mass = multiplicity × minimal length.
pub fn relaxed_energy(e_dirichlet: f64, cfg: &SingularityConfig) -> Result<f64> {
    if !(e_dirichlet >= 0.0) {
        return Err(Error::param("E", "Dirichlet energy must be >= 0"));
    }
    let conn = min_connection_assignment(cfg)?;
    Ok(e_dirichlet + 4.0 * PI * conn.mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: u32, p: &[Point], n: &[Point]) -> SingularityConfig {
        SingularityConfig::new(m, p.to_vec(), n.to_vec()).unwrap()
    }

    fn square() -> SingularityConfig {
        cfg(
            1,
            &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            &[[0.0, 1.0, 0.0], [1.0, 1.0, 0.0]],
        )
    }

    #[test]
    fn single_pair() {
        let c = cfg(2, &[[0.0, 0.0, 1.0]], &[[0.0, 0.0, -1.0]]);
        for r in [
            min_connection_bruteforce(&c).unwrap(),
            min_connection_assignment(&c).unwrap(),
        ] {
            assert_eq!(r.length, 2.0);
            assert_eq!(r.mass, 4.0);
        }
        assert!((kantorovich_dual(&c).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn square_example() {
        let c = square();
        let b = min_connection_bruteforce(&c).unwrap();
        assert_eq!(b.length, 2.0);
        assert_eq!(b.matching, vec![0, 1]);
        let swapped = cfg(1, &c.positives, &[c.negatives[1], c.negatives[0]]);
        assert_eq!(
            min_connection_bruteforce(&swapped).unwrap().matching,
            vec![1, 0]
        );
        assert_eq!(min_connection_assignment(&c).unwrap().length, 2.0);
        assert!((kantorovich_dual(&c).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn translated_charges() {
        let v = [0.3, -0.2, 0.1];
        let p = [
            [0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [0.0, 3.0, 1.0],
            [5.0, 5.0, 5.0],
        ];
        let n: Vec<Point> = p
            .iter()
            .map(|q| [q[0] + v[0], q[1] + v[1], q[2] + v[2]])
            .collect();
        let c = cfg(1, &p, &n);
        let expect = 4.0 * dist(&[0.0; 3], &v);
        assert!((min_connection_bruteforce(&c).unwrap().length - expect).abs() < 1e-12);
        assert!((min_connection_assignment(&c).unwrap().length - expect).abs() < 1e-12);
        assert!((kantorovich_dual(&c).unwrap().value - expect).abs() < 1e-9);
    }

    #[test]
    fn collinear_charges() {
        let c = cfg(
            1,
            &[[0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 0.0, 3.0]],
            &[[0.0, 0.0, 1.5], [0.0, 0.0, 2.5], [0.0, 0.0, 3.5]],
        );
        assert!((min_connection_bruteforce(&c).unwrap().length - 1.5).abs() < 1e-12);
        assert!((min_connection_assignment(&c).unwrap().length - 1.5).abs() < 1e-12);
    }

    #[test]
    fn coincident_charges_cost_nothing() {
        let p = [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]];
        let c = cfg(3, &p, &[p[1], p[0]]);
        assert_eq!(min_connection_assignment(&c).unwrap().length, 0.0);
        assert!(kantorovich_dual(&c).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(matches!(
            SingularityConfig::new(1, vec![[0.0; 3]], vec![]),
            Err(Error::Unbalanced { .. })
        ));
        assert!(matches!(
            SingularityConfig::new(1, vec![[0.0; 3], [0.0; 3]], vec![[1.0; 3], [2.0; 3]]),
            Err(Error::DuplicatePoint(_))
        ));
        let ten: Vec<Point> = (0..10).map(|i| [i as f64, 0.0, 0.0]).collect();
        let far: Vec<Point> = (0..10).map(|i| [i as f64, 1.0, 0.0]).collect();
        let c = cfg(1, &ten, &far);
        assert!(matches!(
            min_connection_bruteforce(&c),
            Err(Error::TooManyPoints { .. })
        ));
        assert!((min_connection_assignment(&c).unwrap().length - 10.0).abs() < 1e-12);
    }

    #[test]
    fn json_ingest() {
        let c = SingularityConfig::from_json(
            r#"{"multiplicity": 2, "positives": [[0,0,-1]], "negatives": [[0,0,1]]}"#,
        )
        .unwrap();
        assert_eq!(c.multiplicity, 2);
        assert_eq!(min_connection_assignment(&c).unwrap().mass, 4.0);
        assert!(SingularityConfig::from_json("  \n").unwrap().is_empty());
        assert!(SingularityConfig::from_json("{").is_err());
    }

    #[test]
    fn empty_configuration() {
        let c = SingularityConfig::empty();
        assert_eq!(min_connection_bruteforce(&c).unwrap().length, 0.0);
        assert_eq!(min_connection_assignment(&c).unwrap().length, 0.0);
        assert_eq!(kantorovich_dual(&c).unwrap().value, 0.0);
        assert_eq!(relaxed_energy(3.5, &c).unwrap(), 3.5);
    }

    #[test]
    fn relaxed_energy_mass_term() {
        let c = cfg(2, &[[0.0, 0.0, -1.0]], &[[0.0, 0.0, 1.0]]);
        assert!((relaxed_energy(0.0, &c).unwrap() - 16.0 * PI).abs() < 1e-12);
        let d = cfg(4, &c.positives, &c.negatives);
        assert!((relaxed_energy(0.0, &d).unwrap() - 32.0 * PI).abs() < 1e-12);
        assert!(relaxed_energy(-1.0, &c).is_err());
    }

    #[test]
    fn dual_potentials_are_lipschitz_and_optimal() {
        let c = cfg(
            1,
            &[[0.1, 0.2, 0.3], [1.0, -0.5, 0.0], [0.0, 0.0, 2.0]],
            &[[0.5, 0.5, 0.5], [-1.0, 0.0, 0.0], [0.3, 0.3, -0.3]],
        );
        let d = kantorovich_dual(&c).unwrap();
        let pts: Vec<(Point, f64)> = c
            .positives
            .iter()
            .copied()
            .zip(d.positive_potentials.iter().copied())
            .chain(
                c.negatives
                    .iter()
                    .copied()
                    .zip(d.negative_potentials.iter().copied()),
            )
            .collect();
        for (p, a) in &pts {
            for (q, b) in &pts {
                assert!(a - b <= dist(p, q) + 1e-12);
            }
        }
        let obj: f64 =
            d.positive_potentials.iter().sum::<f64>() - d.negative_potentials.iter().sum::<f64>();
        assert!((obj - d.value).abs() < 1e-12);
        assert!((d.value - min_connection_assignment(&c).unwrap().length).abs() < 1e-9);
    }
}
