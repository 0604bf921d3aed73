//! Subcommand bodies. Each returns the process exit code.

use std::path::Path;
use std::time::Instant;

use condensate_core::lab::testfn::MAX_MODES;
use condensate_core::lab::{
    exceptional_sigmas, run_corpus, sharpness_probe, steady_residual, Bound, CorpusSpec, LabParams, SteadyReport,
};
use condensate_core::params::DerivedConstants;
use condensate_core::stepper::{self, ContinuationReport, RunStats, StopEvent, StopKind, Trajectory};
use condensate_core::Model;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, SweepConfig};
use crate::error::{CliError, EXIT_EXPERIMENT, EXIT_OK};
use crate::output::{float, write_diagnostics, write_snapshots, OutDir, RunLog};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

fn event_exit(kind: StopKind) -> i32 {
    match kind {
        StopKind::StepFailure => EXIT_EXPERIMENT,
        _ => EXIT_OK,
    }
}

fn mass_drift(tr: &Trajectory) -> f64 {
    let m0 = tr.diagnostics[0].mass_beta;
    tr.diagnostics
        .iter()
        .map(|d| ((d.mass_beta - m0) / m0).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'static str,
    code_version: &'static str,
    config: &'a RunConfig,
    derived: DerivedConstants,
    event: &'a StopEvent,
    stats: &'a RunStats,
    snapshots: usize,
    mass_drift: f64,
}

/// Runs one trajectory into `out` and returns its stop event.
fn run_into(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<(StopEvent, RunStats), CliError> {
    let params = cfg.resolve_params()?;
    let grid = cfg.build_grid()?;
    cfg.check_run()?;
    let u0 = cfg.initial.sample(&grid, &params)?;
    let model = Model::new(params, grid).map_err(CliError::setup)?;

    let start = Instant::now();
    let tr = stepper::run(&model, &u0, &cfg.control, cfg.t_end).map_err(CliError::running)?;
    log.line(format!(
        "run: {:?} at t = {:e} after {} accepted / {} rejected steps, {:.3} s",
        tr.event.kind,
        tr.event.t_event,
        tr.stats.accepted,
        tr.stats.rejected,
        start.elapsed().as_secs_f64()
    ));

    write_snapshots(
        out,
        model.grid().nodes(),
        &tr.times,
        &tr.states,
        cfg.output.snapshot_stride,
    )?;
    write_diagnostics(out, &tr.diagnostics)?;
    out.write_json(
        "summary.json",
        &RunSummary {
            command: "run",
            code_version: CODE_VERSION,
            config: cfg,
            derived: model.params().derived,
            event: &tr.event,
            stats: &tr.stats,
            snapshots: tr.times.len(),
            mass_drift: mass_drift(&tr),
        },
    )?;
    Ok((tr.event, tr.stats))
}

pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    // validate before touching the filesystem
    cfg.resolve_params()?;
    cfg.build_grid()?;
    cfg.check_run()?;
    let out = OutDir::create(out)?;
    let mut log = RunLog::new(&out);
    let result = run_into(cfg, &out, &mut log);
    if let Err(e) = &result {
        log.line(format!("error: {e}"));
    }
    log.save()?;
    let (event, _) = result?;
    Ok(event_exit(event.kind))
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    command: &'static str,
    code_version: &'static str,
    config: &'a RunConfig,
    lab: LabParams,
    reports: usize,
    failures: usize,
    failures_by_bound: Vec<(Bound, usize)>,
    sharpness: Option<condensate_core::lab::SharpnessProbe>,
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let v = &cfg.verify;
    let params = cfg.resolve_params()?;
    let lab = LabParams::new(&params, v.eps.unwrap_or(params.eps)).map_err(CliError::setup)?;
    if let Some(eta) = v.etas.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(CliError::Config(format!("verify.etas must lie in (0, 1), got {eta}")));
    }
    if !(1..=MAX_MODES).contains(&v.modes) {
        return Err(CliError::Config(format!(
            "verify.modes must lie in 1..={MAX_MODES}, got {}",
            v.modes
        )));
    }
    if !(v.floor > 0.0 && v.floor.is_finite()) {
        return Err(CliError::Config(format!(
            "verify.floor must be positive, got {}",
            v.floor
        )));
    }
    if !(v.constant_scale > 0.0 && v.constant_scale.is_finite()) {
        return Err(CliError::Config(format!(
            "verify.constant_scale must be positive, got {}",
            v.constant_scale
        )));
    }
    let spec = CorpusSpec {
        size: v.size,
        seed: v.seed,
        modes: v.modes,
        floor: v.floor,
        etas: v.etas.clone(),
        bounds: v.bounds.clone(),
        pointwise: v.pointwise,
        constant_scale: v.constant_scale,
    };
    let out = OutDir::create(out)?;
    let mut log = RunLog::new(&out);
    let start = Instant::now();
    let reports = run_corpus(&spec, &lab).map_err(CliError::running)?;
    out.write_jsonl("inequalities.jsonl", &reports)?;

    let failures = reports.iter().filter(|r| !r.pass).count();
    let mut by_bound: Vec<(Bound, usize)> = Vec::new();
    for r in reports.iter().filter(|r| !r.pass) {
        match by_bound.iter_mut().find(|(l, _)| *l == r.bound) {
            Some((_, c)) => *c += 1,
            None => by_bound.push((r.bound, 1)),
        }
    }
    let sharpness = (v.bounds.contains(&Bound::Sextic) && v.etas.contains(&v.sharpness_eta) && !reports.is_empty())
        .then(|| sharpness_probe(&reports, v.sharpness_eta));
    log.line(format!(
        "verify: {} reports, {failures} failures, {:.3} s",
        reports.len(),
        start.elapsed().as_secs_f64()
    ));
    if let Some(s) = &sharpness {
        log.line(format!(
            "sharpness at eta = {}: best lhs/rhs = {:e}",
            s.eta, s.best_ratio
        ));
    }
    out.write_json(
        "summary.json",
        &VerifySummary {
            command: "verify",
            code_version: CODE_VERSION,
            config: cfg,
            lab,
            reports: reports.len(),
            failures,
            failures_by_bound: by_bound,
            sharpness,
        },
    )?;
    log.save()?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_EXPERIMENT })
}

#[derive(Serialize)]
struct ContinuationSummary<'a> {
    command: &'static str,
    code_version: &'static str,
    config: &'a RunConfig,
    report: &'a ContinuationReport,
}

pub fn cmd_continuation(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let params = cfg.resolve_params()?;
    let grid = cfg.build_grid()?;
    cfg.check_run()?;
    let eps_list = &cfg.continuation.eps;
    if eps_list.is_empty() {
        return Err(CliError::Config("continuation.eps is empty".into()));
    }
    if eps_list.windows(2).any(|w| w[1] > w[0]) {
        return Err(CliError::Config("continuation.eps must be nonincreasing".into()));
    }
    for &eps in eps_list {
        params.with_eps(eps)?;
    }
    let u0 = cfg.initial.sample(&grid, &params)?;
    let out = OutDir::create(out)?;
    let mut log = RunLog::new(&out);
    let start = Instant::now();
    let (report, runs) =
        stepper::continuation(&params, &grid, &u0, eps_list, &cfg.control, cfg.t_end).map_err(CliError::running)?;
    log.line(format!(
        "continuation: {} members, cauchy = {}, {:.3} s",
        runs.len(),
        report.cauchy,
        start.elapsed().as_secs_f64()
    ));

    let mut index = out.csv("index.csv")?;
    index.row([
        "member",
        "eps",
        "kind",
        "t_event",
        "mass_drift",
        "spatial_holder",
        "temporal_holder",
        "distance_next",
    ])?;
    for (j, (member, tr)) in report.members.iter().zip(&runs).enumerate() {
        let next = report.distances.get(j).map(|d| float(*d)).unwrap_or_default();
        index.row([
            j.to_string(),
            float(member.eps),
            format!("{:?}", member.event.kind),
            float(member.event.t_event),
            float(member.mass_drift),
            float(member.spatial_holder),
            float(member.temporal_holder),
            next,
        ])?;
        let dir = out.subdir(&format!("member_{j}"))?;
        write_snapshots(&dir, grid.nodes(), &tr.times, &tr.states, cfg.output.snapshot_stride)?;
        write_diagnostics(&dir, &tr.diagnostics)?;
    }
    index.finish()?;
    out.write_json(
        "summary.json",
        &ContinuationSummary {
            command: "continuation",
            code_version: CODE_VERSION,
            config: cfg,
            report: &report,
        },
    )?;
    log.save()?;
    let failed = report.members.iter().any(|m| m.event.kind == StopKind::StepFailure);
    Ok(if failed { EXIT_EXPERIMENT } else { EXIT_OK })
}

#[derive(Serialize)]
struct SteadyRatios {
    sigma: f64,
    /// `residual(N) / residual(2N)` along `steady.cells`.
    ratios: Vec<f64>,
}

#[derive(Serialize)]
struct SteadySummary<'a> {
    command: &'static str,
    code_version: &'static str,
    config: &'a RunConfig,
    exceptional: [f64; 4],
    ratios: Vec<SteadyRatios>,
}

pub fn cmd_steady(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let p = &cfg.params;
    let exceptional = exceptional_sigmas(p.alpha, p.n);
    let sigmas = cfg.steady.sigmas.clone().unwrap_or_else(|| exceptional.to_vec());
    let x_cut = cfg.steady.x_cut.unwrap_or(p.length / 10.0);
    if cfg.steady.cells.is_empty() {
        return Err(CliError::Config("steady.cells is empty".into()));
    }
    // surface bad sigma, x_cut or cells as config errors before any output
    for &sigma in &sigmas {
        steady_residual(sigma, p.alpha, p.n, p.length, x_cut, cfg.steady.cells[0]).map_err(CliError::setup)?;
    }
    for &cells in &cfg.steady.cells {
        steady_residual(0.0, p.alpha, p.n, p.length, x_cut, cells).map_err(CliError::setup)?;
    }
    let out = OutDir::create(out)?;
    let mut log = RunLog::new(&out);
    let start = Instant::now();

    let mut rows: Vec<SteadyReport> = Vec::new();
    let mut ratios = Vec::new();
    for &sigma in &sigmas {
        let reports: Vec<SteadyReport> = cfg
            .steady
            .cells
            .iter()
            .map(|&cells| steady_residual(sigma, p.alpha, p.n, p.length, x_cut, cells))
            .collect::<Result<_, _>>()
            .map_err(CliError::running)?;
        ratios.push(SteadyRatios {
            sigma,
            ratios: reports
                .windows(2)
                .map(|w| w[0].residual_norm / w[1].residual_norm)
                .collect(),
        });
        rows.extend(reports);
    }

    let mut w = out.csv("steady.csv")?;
    w.row([
        "sigma",
        "exponent",
        "coefficient",
        "stationary",
        "cells",
        "x_cut",
        "residual_norm",
        "closed_form_error",
    ])?;
    for r in &rows {
        w.row([
            float(r.sigma),
            float(r.exponent),
            float(r.coefficient),
            r.stationary.to_string(),
            r.cells.to_string(),
            float(r.x_cut),
            float(r.residual_norm),
            float(r.closed_form_error),
        ])?;
    }
    w.finish()?;
    out.write_json(
        "summary.json",
        &SteadySummary {
            command: "steady",
            code_version: CODE_VERSION,
            config: cfg,
            exceptional,
            ratios,
        },
    )?;
    log.line(format!(
        "steady: {} rows, {:.3} s",
        rows.len(),
        start.elapsed().as_secs_f64()
    ));
    log.save()?;
    Ok(EXIT_OK)
}

struct CellResult {
    values: Vec<f64>,
    outcome: Result<(StopEvent, RunStats), CliError>,
}

fn cartesian(axes: &[(&String, &Vec<f64>)]) -> Vec<Vec<f64>> {
    let mut cells = vec![Vec::new()];
    for (_, values) in axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut c = prefix.clone();
                    c.push(v);
                    c
                })
            })
            .collect();
    }
    cells
}

fn sweep_cell(
    base: &RunConfig,
    names: &[&String],
    values: &[f64],
    out: &OutDir,
    index: usize,
) -> Result<(StopEvent, RunStats), CliError> {
    let mut cfg = base.clone();
    for (name, &v) in names.iter().zip(values) {
        cfg = cfg.with_axis(name, v)?;
    }
    cfg.sweep = SweepConfig::default();
    cfg.resolve_params()?;
    cfg.build_grid()?;
    cfg.check_run()?;
    let dir = out.subdir(&format!("cell_{index:04}"))?;
    let mut log = RunLog::new(&dir);
    let result = run_into(&cfg, &dir, &mut log);
    if let Err(e) = &result {
        log.line(format!("error: {e}"));
    }
    log.save()?;
    result
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let sweep = &cfg.sweep;
    if sweep.workers == 0 {
        return Err(CliError::Config("sweep.workers must be >= 1".into()));
    }
    let axes: Vec<(&String, &Vec<f64>)> = sweep.axes.iter().collect();
    for (name, values) in &axes {
        if values.is_empty() {
            return Err(CliError::Config(format!("sweep axis {name} has no values")));
        }
        cfg.with_axis(name, values[0])?;
    }
    let names: Vec<&String> = axes.iter().map(|(n, _)| *n).collect();
    let grid = cartesian(&axes);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.workers)
        .build()
        .map_err(|e| CliError::Experiment(e.to_string()))?;
    let out = OutDir::create(out)?;
    let start = Instant::now();
    let results: Vec<CellResult> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, values)| CellResult {
                values: values.clone(),
                outcome: sweep_cell(cfg, &names, values, &out, i),
            })
            .collect()
    });

    let mut index = out.csv("index.csv")?;
    let mut header = vec!["cell".to_string(), "dir".to_string()];
    header.extend(names.iter().map(|n| n.to_string()));
    header.extend(["status", "kind", "t_event", "accepted", "exit_code", "error"].map(String::from));
    index.row(&header)?;
    let mut worst = EXIT_OK;
    for (i, cell) in results.iter().enumerate() {
        let mut row = vec![i.to_string(), format!("cell_{i:04}")];
        row.extend(cell.values.iter().map(|v| float(*v)));
        match &cell.outcome {
            Ok((event, stats)) => {
                let code = event_exit(event.kind);
                worst = worst.max(code);
                row.extend([
                    "ok".to_string(),
                    format!("{:?}", event.kind),
                    float(event.t_event),
                    stats.accepted.to_string(),
                    code.to_string(),
                    String::new(),
                ]);
            }
            Err(e) => {
                worst = EXIT_EXPERIMENT;
                row.extend([
                    "error".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.exit_code().to_string(),
                    e.to_string(),
                ]);
            }
        }
        index.row(&row)?;
    }
    index.finish()?;
    let mut log = RunLog::new(&out);
    log.line(format!(
        "sweep: {} cells on {} workers, {:.3} s",
        results.len(),
        sweep.workers,
        start.elapsed().as_secs_f64()
    ));
    log.save()?;
    Ok(worst)
}
