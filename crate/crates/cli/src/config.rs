//! Declarative experiment configs (TOML).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use condensate_core::lab::Bound;
use condensate_core::stepper::StepControl;
use condensate_core::{Grid, Params, RawParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: RawParams,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub control: StepControl,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub steady: SteadyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_t_end() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub cells: usize,
    /// Grading exponent `p`; nodes `x_i = L (i/N)^p`.
    pub grading: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            cells: 256,
            grading: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        value: f64,
    },
    /// `mean + amplitude cos(mode π x / L)`
    Cosine {
        #[serde(default = "one")]
        mean: f64,
        amplitude: f64,
        #[serde(default = "one_mode")]
        mode: u32,
    },
    /// `x^-sigma` clipped to `[1/k, k]`.
    PowerLaw {
        sigma: f64,
    },
    /// CSV with a `u` column (and optionally `x`), one row per node.
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn one_mode() -> u32 {
    1
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Constant { value: 1.0 }
    }
}

impl InitialCondition {
    pub fn sample(&self, grid: &Grid, params: &Params) -> Result<Vec<f64>, CliError> {
        let x = grid.nodes();
        let u = match self {
            InitialCondition::Constant { value } => vec![*value; x.len()],
            InitialCondition::Cosine { mean, amplitude, mode } => {
                let wave = f64::from(*mode) * PI / grid.length();
                x.iter().map(|&xi| mean + amplitude * (wave * xi).cos()).collect()
            }
            InitialCondition::PowerLaw { sigma } => {
                let k = params.k;
                x.iter().map(|&xi| xi.powf(-sigma).clamp(1.0 / k, k)).collect()
            }
            InitialCondition::File { path } => read_profile(path, x)?,
        };
        if let Some(bad) = u.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CliError::Config(format!(
                "initial condition must be finite and positive; node {bad} has {}",
                u[bad]
            )));
        }
        Ok(u)
    }
}

fn read_profile(path: &Path, nodes: &[f64]) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let u_col = col("u").ok_or_else(|| CliError::Config(format!("{}: missing column u", path.display())))?;
    let x_col = col("x");
    let mut u = Vec::with_capacity(nodes.len());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let parse = |c: usize| -> Result<f64, CliError> {
            record
                .get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("{}: bad number in row {row}", path.display())))
        };
        if let Some(c) = x_col {
            let xv = parse(c)?;
            if let Some(&xn) = nodes.get(row) {
                if (xv - xn).abs() > 1e-9 * (1.0 + xn.abs()) {
                    return Err(CliError::Config(format!(
                        "{}: row {row} has x = {xv}, grid node is {xn}",
                        path.display()
                    )));
                }
            }
        }
        u.push(parse(u_col)?);
    }
    if u.len() != nodes.len() {
        return Err(CliError::Config(format!(
            "{}: {} rows, grid has {} nodes",
            path.display(),
            u.len(),
            nodes.len()
        )));
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Every `snapshot_stride`-th snapshot goes to `snapshots.csv`; the last always does.
    pub snapshot_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            snapshot_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub size: usize,
    pub seed: u64,
    pub modes: usize,
    pub floor: f64,
    pub etas: Vec<f64>,
    pub bounds: Vec<Bound>,
    pub pointwise: bool,
    /// Regularization used by the lab; `params.eps` when unset.
    pub eps: Option<f64>,
    /// Multiplies every proof constant. Anything but 1 is a mutation check.
    pub constant_scale: f64,
    /// `η` for the sharpness probe of `G6 <= a E + b F`.
    pub sharpness_eta: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let spec = condensate_core::lab::CorpusSpec::default();
        VerifyConfig {
            size: spec.size,
            seed: spec.seed,
            modes: spec.modes,
            floor: spec.floor,
            etas: spec.etas,
            bounds: spec.bounds,
            pointwise: spec.pointwise,
            eps: None,
            constant_scale: spec.constant_scale,
            sharpness_eta: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyConfig {
    /// Exceptional set for `(alpha, n)` when unset.
    pub sigmas: Option<Vec<f64>>,
    pub cells: Vec<usize>,
    /// `L / 10` when unset.
    pub x_cut: Option<f64>,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        SteadyConfig {
            sigmas: None,
            cells: vec![256, 512, 1024, 2048],
            x_cut: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub workers: usize,
    /// Axis name to values; cells are the cartesian product in key order.
    pub axes: BTreeMap<String, Vec<f64>>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            workers: 4,
            axes: BTreeMap::new(),
        }
    }
}

pub const SWEEP_AXES: [&str; 10] = [
    "n", "alpha", "beta", "gamma", "L", "eps", "k", "cells", "grading", "t_end",
];

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`; a relative initial-condition file is resolved against the config's directory.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = RunConfig::parse(&text)?;
        if let InitialCondition::File { path: ic } = &mut cfg.initial {
            if ic.is_relative() {
                if let Some(base) = path.parent() {
                    *ic = base.join(&*ic);
                }
            }
        }
        Ok(cfg)
    }

    pub fn resolve_params(&self) -> Result<Params, CliError> {
        Ok(Params::validate(&self.params)?)
    }

    pub fn build_grid(&self) -> Result<Grid, CliError> {
        Grid::build(self.grid.cells, self.params.length, self.grid.grading).map_err(CliError::setup)
    }

    pub fn check_run(&self) -> Result<(), CliError> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(CliError::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.output.snapshot_stride == 0 {
            return Err(CliError::Config("output.snapshot_stride must be >= 1".into()));
        }
        self.control.check(self.params.k).map_err(CliError::setup)
    }

    /// Copy with one sweep axis set to `value`.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<RunConfig, CliError> {
        let mut c = self.clone();
        let p = &mut c.params;
        match axis {
            "n" => p.n = value,
            "alpha" => p.alpha = value,
            "beta" => p.beta = value,
            "gamma" => p.gamma = value,
            "L" => p.length = value,
            "eps" => p.eps = value,
            "k" => p.k = value,
            "cells" => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(CliError::Config(format!(
                        "sweep axis cells needs whole numbers, got {value}"
                    )));
                }
                c.grid.cells = value as usize;
            }
            "grading" => c.grid.grading = value,
            "t_end" => c.t_end = value,
            other => {
                return Err(CliError::Config(format!(
                    "unknown sweep axis {other}; expected one of {}",
                    SWEEP_AXES.join(", ")
                )))
            }
        }
        Ok(c)
    }

    /// Output directory: the override, else `output.dir`, else `./out`.
    pub fn out_dir(&self, overridden: Option<&Path>) -> PathBuf {
        overridden
            .map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [params]
        n = 2.0
        alpha = 6.5
        beta = 0.5
        gamma = 0.0
        L = 1.0
        eps = 0.1
    "#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.control, StepControl::default());
        assert_eq!(c.initial, InitialCondition::Constant { value: 1.0 });
        assert_eq!(c.params.k, 100.0);
        assert_eq!(c.verify.size, 1000);
        c.resolve_params().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[grid]\ncells = 32\nnodes = 4\n");
        assert!(matches!(RunConfig::parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn initial_condition_kinds() {
        let text = format!("{MINIMAL}\n[initial]\nkind = \"cosine\"\namplitude = 0.5\n");
        let c = RunConfig::parse(&text).unwrap();
        let p = c.resolve_params().unwrap();
        let g = Grid::build(16, 1.0, 1.0).unwrap();
        let u = c.initial.sample(&g, &p).unwrap();
        assert_eq!(u[0], 1.5);
        assert!((u[16] - 0.5).abs() < 1e-15);

        let pl = InitialCondition::PowerLaw { sigma: 1.5 }.sample(&g, &p).unwrap();
        assert_eq!(pl[0], 100.0);
        assert_eq!(pl[16], 1.0);

        assert!(InitialCondition::Constant { value: 0.0 }.sample(&g, &p).is_err());
    }

    #[test]
    fn profile_file_must_match_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u0.csv");
        let g = Grid::build(16, 1.0, 1.0).unwrap();
        let mut body = String::from("x,u\n");
        for x in g.nodes() {
            body.push_str(&format!("{x},{}\n", 1.0 + x));
        }
        std::fs::write(&path, &body).unwrap();
        let p = RunConfig::parse(MINIMAL).unwrap().resolve_params().unwrap();
        let u = InitialCondition::File { path: path.clone() }.sample(&g, &p).unwrap();
        assert_eq!(u[16], 2.0);
        let coarse = Grid::build(17, 1.0, 1.0).unwrap();
        assert!(InitialCondition::File { path }.sample(&coarse, &p).is_err());
    }

    #[test]
    fn sweep_axes() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.with_axis("cells", 64.0).unwrap().grid.cells, 64);
        assert_eq!(c.with_axis("L", 2.0).unwrap().params.length, 2.0);
        assert!(c.with_axis("cells", 10.5).is_err());
        assert!(c.with_axis("dt", 1.0).is_err());
    }
}
