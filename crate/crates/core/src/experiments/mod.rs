//! Experiment drivers: parameter resolution, concurrent sweeps and
//! CSV/JSON reporting.

mod commands;

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::variational::{DEFAULT_B, MIN_NODES};

pub use commands::{
    cmd_dipole_tradeoff, cmd_proposition_sweep, cmd_relaxation_check, cmd_sigma, cmd_t0_energy,
    escape_lower_bound, slice_target, Alpha0, DipoleRow, DipoleSummary, DipoleTable, ExponentFit,
    RelaxationRow, RelaxationTable, SigmaReport, SweepRow, SweepTable, T0EnergyRow, DIPOLE_NOTE,
};

/// Significant digits of floats in CSV output.
pub const CSV_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    T0Energy,
    RelaxationCheck,
    PropositionSweep,
    DipoleTradeoff,
    Sigma,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::T0Energy => "t0-energy",
            Command::RelaxationCheck => "relaxation-check",
            Command::PropositionSweep => "proposition-sweep",
            Command::DipoleTradeoff => "dipole-tradeoff",
            Command::Sigma => "sigma",
        }
    }
}

/// Experiment parameters as read from a JSON spec file or the command line.
/// Unset fields take per-command defaults in [`ExperimentSpec::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Option<Command>,
    pub n: Option<Vec<u32>>,
    pub alpha: Option<Vec<f64>>,
    /// a / α ratios for the proposition sweep.
    pub a_fractions: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    /// r_box / δ ratios for the dipole sweep.
    pub box_factors: Option<Vec<f64>>,
    pub c0: Option<Vec<f64>>,
    pub nodes: Option<usize>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub b: Option<f64>,
    /// Charge file for `sigma`.
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Fully resolved parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: Command,
    pub n: Vec<u32>,
    pub alpha: Vec<f64>,
    pub a_fractions: Vec<f64>,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub box_factors: Vec<f64>,
    pub c0: Vec<f64>,
    pub nodes: usize,
    pub workers: usize,
    pub seed: u64,
    pub b: f64,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("spec: {e}")))
    }

    /// Fields set in `top` replace those of `self`.
    pub fn overlay(self, top: ExperimentSpec) -> Self {
        ExperimentSpec {
            command: top.command.or(self.command),
            n: top.n.or(self.n),
            alpha: top.alpha.or(self.alpha),
            a_fractions: top.a_fractions.or(self.a_fractions),
            eps: top.eps.or(self.eps),
            delta: top.delta.or(self.delta),
            box_factors: top.box_factors.or(self.box_factors),
            c0: top.c0.or(self.c0),
            nodes: top.nodes.or(self.nodes),
            workers: top.workers.or(self.workers),
            seed: top.seed.or(self.seed),
            b: top.b.or(self.b),
            config: top.config.or(self.config),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
        }
    }

    pub fn resolve(&self, command: Command) -> Result<Settings> {
        if let Some(c) = self.command {
            if c != command {
                return Err(Error::Input(format!(
                    "spec is for `{}`, not `{}`",
                    c.name(),
                    command.name()
                )));
            }
        }
        let (n, alpha, nodes) = match command {
            Command::T0Energy => (vec![2], vec![0.25], 2048),
            Command::RelaxationCheck => (vec![1, 2, 3], vec![0.25], 0),
            Command::PropositionSweep => (vec![2], vec![0.25, 0.1, 0.05, 0.02], 1024),
            Command::DipoleTradeoff => (vec![1, 2], vec![0.25, 0.05], 128),
            Command::Sigma => (vec![1], vec![0.25], 0),
        };
        let workers = std::thread::available_parallelism().map_or(1, |w| w.get());
        let s = Settings {
            command,
            n: self.n.clone().unwrap_or(n),
            alpha: self.alpha.clone().unwrap_or(alpha),
            a_fractions: self
                .a_fractions
                .clone()
                .unwrap_or_else(|| vec![1.0, 0.5, 0.1]),
            eps: self
                .eps
                .clone()
                .unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]),
            delta: self
                .delta
                .clone()
                .unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.4]),
            box_factors: self
                .box_factors
                .clone()
                .unwrap_or_else(|| vec![1.0, 2.0, 4.0]),
            c0: self.c0.clone().unwrap_or_else(|| vec![1.0, 5.0, 20.0]),
            nodes: self.nodes.unwrap_or(nodes),
            workers: self.workers.unwrap_or(workers),
            seed: self.seed.unwrap_or(0),
            b: self.b.unwrap_or(DEFAULT_B),
            config: self.config.clone(),
            out: self.out.clone(),
            format: self.format.unwrap_or_default(),
        };
        s.validate()?;
        Ok(s)
    }
}

fn nonempty<T>(name: &'static str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::param(name, "range is empty"));
    }
    Ok(())
}

fn all_in(name: &'static str, v: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    nonempty(name, v)?;
    match v.iter().find(|&&x| !ok(x)) {
        Some(x) => Err(Error::param(name, format!("{x} outside {what}"))),
        None => Ok(()),
    }
}

impl Settings {
    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::param("workers", "must be >= 1"));
        }
        if self.command == Command::Sigma {
            if self.config.is_none() {
                return Err(Error::Input("sigma needs a charge file".into()));
            }
            return Ok(());
        }
        nonempty("n", &self.n)?;
        if self.n.contains(&0) {
            return Err(Error::param("n", "winding number must be >= 1"));
        }
        // α = 0 is the pure-mass case of the T₀ accounting.
        let lo_ok = |a: f64| a > 0.0 || (self.command == Command::T0Energy && a == 0.0);
        all_in("alpha", &self.alpha, |a| lo_ok(a) && a <= 0.25, "(0, 1/4]")?;
        match self.command {
            Command::T0Energy => {
                if self.nodes < 16 {
                    return Err(Error::param("nodes", "need at least 16"));
                }
            }
            Command::RelaxationCheck => {
                all_in("eps", &self.eps, |e| e > 0.0 && e <= 1.0, "(0, 1]")?;
            }
            Command::PropositionSweep => {
                all_in(
                    "a_fractions",
                    &self.a_fractions,
                    |f| f > 0.0 && f <= 1.0,
                    "(0, 1]",
                )?;
                all_in("c0", &self.c0, |c| c > 0.0 && c.is_finite(), "(0, inf)")?;
                if self.nodes < MIN_NODES {
                    return Err(Error::param("nodes", format!("need at least {MIN_NODES}")));
                }
                if !(self.b > 0.0 && self.b <= 1.0) {
                    return Err(Error::param("b", format!("{} outside (0, 1]", self.b)));
                }
            }
            Command::DipoleTradeoff => {
                all_in("delta", &self.delta, |d| d > 0.0 && d <= 0.5, "(0, 0.5]")?;
                all_in(
                    "box_factors",
                    &self.box_factors,
                    |f| f > 0.0 && f.is_finite(),
                    "(0, inf)",
                )?;
                if self.nodes < 32 {
                    return Err(Error::param("nodes", "need at least 32"));
                }
            }
            Command::Sigma => unreachable!(),
        }
        Ok(())
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))
    }
}

/// Runs the resolved experiment. Independent points execute on a pool of
/// `workers` threads; rows keep the sweep order.
pub fn run(settings: &Settings) -> Result<Report> {
    use rayon::prelude::*;
    let cmd = settings.command;
    match cmd {
        Command::T0Energy => {
            let pts: Vec<(u32, f64)> = settings
                .n
                .iter()
                .flat_map(|&n| settings.alpha.iter().map(move |&a| (n, a)))
                .collect();
            let rows = settings.pool()?.install(|| {
                pts.par_iter()
                    .map(|&(n, a)| cmd_t0_energy(n, a, settings.nodes))
                    .collect::<Result<Vec<_>>>()
            })?;
            let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
            Report::new(
                cmd,
                &rows,
                &serde_json::json!({ "max_rel_err": worst }),
                true,
            )
        }
        Command::RelaxationCheck => {
            let mut rows = Vec::new();
            let mut fits = Vec::new();
            for &n in &settings.n {
                for &a in &settings.alpha {
                    let t = cmd_relaxation_check(n, a, &settings.eps)?;
                    rows.extend(t.rows);
                    fits.push(t.fit);
                }
            }
            Report::new(cmd, &rows, &fits, true)
        }
        Command::PropositionSweep => {
            let t = cmd_proposition_sweep(settings)?;
            let summary = serde_json::json!({
                "alpha0": t.alpha0,
                "skipped": t.skipped,
                "fast_path_agrees": t.fast_path_agrees,
            });
            let ok = t.rows.iter().all(|r| r.converged);
            Report::new(cmd, &t.rows, &summary, ok)
        }
        Command::DipoleTradeoff => {
            let t = cmd_dipole_tradeoff(settings)?;
            let summary = serde_json::json!({ "note": t.note, "cases": t.summary });
            let ok = t.rows.iter().all(|r| r.converged);
            Report::new(cmd, &t.rows, &summary, ok)
        }
        Command::Sigma => {
            let path = settings.config.as_ref().expect("validated");
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
            let rep = cmd_sigma(&text)?;
            Report::new(cmd, std::slice::from_ref(&rep), &(), true)
        }
    }
}

/// Rows plus a summary, ready to be written in either format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub rows: Vec<Value>,
    pub summary: Value,
    /// False when some optimizer run did not converge.
    pub converged: bool,
}

impl Report {
    pub fn new<R: Serialize, S: Serialize>(
        command: Command,
        rows: &[R],
        summary: &S,
        converged: bool,
    ) -> Result<Self> {
        Ok(Report {
            command: command.name(),
            rows: rows
                .iter()
                .map(serde_json::to_value)
                .collect::<std::result::Result<_, _>>()?,
            summary: serde_json::to_value(summary)?,
            converged,
        })
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)?;
                Ok(())
            }
        }
    }

    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let Some(Value::Object(first)) = self.rows.first() else {
            w.flush()?;
            return Ok(());
        };
        w.write_record(first.keys())?;
        for row in &self.rows {
            let Value::Object(map) = row else {
                return Err(Error::Input("report rows must be objects".into()));
            };
            w.write_record(first.keys().map(|k| csv_field(map, k)))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_field(map: &Map<String, Value>, key: &str) -> String {
    match map.get(key) {
        None | Some(Value::Null) => String::new(),
        Some(Value::Number(x)) if x.is_f64() => format_float(x.as_f64().unwrap()),
        Some(Value::Number(x)) => x.to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Bool(b)) => b.to_string(),
        Some(v) => v.to_string(),
    }
}

/// A float with [`CSV_DIGITS`] significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{:.*e}", CSV_DIGITS - 1, x)
    } else {
        x.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_float(1.478397111), "1.47839711100e0");
        assert_eq!(format_float(-2.5e-9), "-2.50000000000e-9");
        let back: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert!((back - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn spec_overlay_and_defaults() {
        let file =
            ExperimentSpec::from_json(r#"{"n": [3], "alpha": [0.1], "nodes": 256}"#).unwrap();
        let cli = ExperimentSpec {
            nodes: Some(512),
            ..Default::default()
        };
        let s = file
            .overlay(cli)
            .resolve(Command::PropositionSweep)
            .unwrap();
        assert_eq!(s.n, vec![3]);
        assert_eq!(s.alpha, vec![0.1]);
        assert_eq!(s.nodes, 512);
        assert_eq!(s.c0, vec![1.0, 5.0, 20.0]);
        assert_eq!(s.b, 0.5);
    }

    #[test]
    fn invalid_specs() {
        assert!(ExperimentSpec::from_json(r#"{"bogus": 1}"#).is_err());
        let bad = |spec: &str, cmd| {
            ExperimentSpec::from_json(spec)
                .unwrap()
                .resolve(cmd)
                .is_err()
        };
        assert!(bad(r#"{"n": [0]}"#, Command::T0Energy));
        assert!(bad(r#"{"alpha": [0.3]}"#, Command::T0Energy));
        assert!(bad(r#"{"alpha": []}"#, Command::RelaxationCheck));
        assert!(bad(r#"{"alpha": [0.0]}"#, Command::RelaxationCheck));
        assert!(bad(r#"{"eps": [0.0]}"#, Command::RelaxationCheck));
        assert!(bad(r#"{"delta": [0.6]}"#, Command::DipoleTradeoff));
        assert!(bad(r#"{"workers": 0}"#, Command::DipoleTradeoff));
        assert!(bad(r#"{"command": "sigma"}"#, Command::T0Energy));
        assert!(bad("{}", Command::Sigma));
        let ok = ExperimentSpec::from_json(r#"{"alpha": [0.0]}"#).unwrap();
        assert!(ok.resolve(Command::T0Energy).is_ok());
    }

    #[test]
    fn csv_keeps_field_order() {
        #[derive(Serialize)]
        struct Row {
            z: u32,
            a: f64,
            ok: bool,
        }
        let rows = [
            Row {
                z: 1,
                a: 0.5,
                ok: true,
            },
            Row {
                z: 2,
                a: -1.0,
                ok: false,
            },
        ];
        let rep = Report::new(Command::T0Energy, &rows, &(), true).unwrap();
        let mut buf = Vec::new();
        rep.write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "z,a,ok\n1,5.00000000000e-1,true\n2,-1.00000000000e0,false\n"
        );
    }
}
