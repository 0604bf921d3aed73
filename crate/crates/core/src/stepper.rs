//! Implicit Euler for the regularized system.
//!
//! Each step solves `v = u + dt rhs(v)` by damped Newton. The Jacobian of `rhs`
//! has stencil radius 2, so it is pentadiagonal and five colored finite
//! differences assemble all of it. Every column of that Jacobian has zero
//! `(x+eps)^beta`-weighted sum, hence each full Newton update restores the
//! weighted mass of `u` exactly up to roundoff.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::functionals::{sup_distance, temporal_holder_modulus, DiagnosticsRecord};
use crate::grid::Grid;
use crate::model::Model;
use crate::params::Params;

/// Stencil radius of `rhs` in `u`.
pub const STENCIL_RADIUS: usize = 2;
const COLORS: usize = 2 * STENCIL_RADIUS + 1;
/// Accepted states may dip this far below zero before being clipped.
pub const NEGATIVE_CLIP: f64 = 1e-12;
const BLOWUP_WINDOW: usize = 10;
const GROW_AFTER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Growth factor after three consecutive accepted steps.
    pub safety: f64,
    /// Dead-core threshold; `1/(2k)` when unset.
    pub u_floor: Option<f64>,
    /// Blow-up threshold; `k` when unset.
    pub u_ceil: Option<f64>,
    pub snapshot_dt: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            dt_init: 1e-6,
            dt_min: 1e-14,
            dt_max: 1e-2,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            safety: 1.5,
            u_floor: None,
            u_ceil: None,
            snapshot_dt: 1e-3,
            max_steps: 2_000_000,
        }
    }
}

impl StepControl {
    pub fn floor(&self, k: f64) -> f64 {
        self.u_floor.unwrap_or(0.5 / k)
    }

    pub fn ceil(&self, k: f64) -> f64 {
        self.u_ceil.unwrap_or(k)
    }

    pub fn check(&self, k: f64) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            bad.push("0 < dt_min <= dt_init <= dt_max".to_string());
        }
        if !(self.newton_tol > 0.0) {
            bad.push("newton_tol > 0".into());
        }
        if self.newton_max_iter == 0 {
            bad.push("newton_max_iter >= 1".into());
        }
        if !(self.safety > 1.0 && self.safety <= 1.5) {
            bad.push("safety in (1, 1.5]".into());
        }
        if !(self.floor(k) < self.ceil(k)) {
            bad.push("u_floor < u_ceil".into());
        }
        if !(self.snapshot_dt > 0.0) {
            bad.push("snapshot_dt > 0".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid step control: {}", bad.join(", "))))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepReject {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("line search could not reduce the residual {residual:e}")]
    LineSearch { residual: f64 },
    #[error("negative value {min:e} in Newton solution")]
    Negative { min: f64 },
    #[error("non-finite Newton iterate")]
    NonFinite,
    #[error("singular Newton matrix")]
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn perturbation(v: f64) -> f64 {
    f64::EPSILON.sqrt() * (1.0 + v.abs())
}

/// Finite-difference Jacobian of `rhs` at `v` in banded form, from five
/// evaluations with columns `j ≡ c (mod 5)` perturbed together.
pub fn colored_jacobian(model: &Model, v: &[f64], rhs_v: &[f64]) -> BandMatrix {
    let m = v.len();
    let r = STENCIL_RADIUS;
    let mut jac = BandMatrix::zeros(m, r, r);
    let mut shifted = v.to_vec();
    let mut scratch = vec![0.0; m];
    let mut out = vec![0.0; m];
    for color in 0..COLORS {
        for j in (color..m).step_by(COLORS) {
            shifted[j] = v[j] + perturbation(v[j]);
        }
        model.rhs_into(&shifted, &mut scratch, &mut out);
        for j in (color..m).step_by(COLORS) {
            let h = shifted[j] - v[j];
            for i in j.saturating_sub(r)..=(j + r).min(m - 1) {
                jac.set(i, j, (out[i] - rhs_v[i]) / h);
            }
            shifted[j] = v[j];
        }
    }
    jac
}

/// Column-by-column finite-difference Jacobian; the reference for [`colored_jacobian`].
pub fn dense_jacobian(model: &Model, v: &[f64], rhs_v: &[f64]) -> Vec<Vec<f64>> {
    let m = v.len();
    let mut jac = vec![vec![0.0; m]; m];
    let mut shifted = v.to_vec();
    for j in 0..m {
        shifted[j] = v[j] + perturbation(v[j]);
        let h = shifted[j] - v[j];
        let out = model.rhs(&shifted);
        for (i, row) in jac.iter_mut().enumerate() {
            row[j] = (out[i] - rhs_v[i]) / h;
        }
        shifted[j] = v[j];
    }
    jac
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn residual_into(model: &Model, u: &[f64], v: &[f64], dt: f64, scratch: &mut [f64], res: &mut [f64]) {
    model.rhs_into(v, scratch, res);
    for i in 0..v.len() {
        res[i] = v[i] - u[i] - dt * res[i];
    }
}

/// One implicit Euler step of length `dt` from `u`. Converged once the residual
/// or a full Newton correction falls below `newton_tol (1 + ‖u‖_∞)`.
pub fn step_implicit(
    model: &Model,
    u: &[f64],
    dt: f64,
    control: &StepControl,
) -> std::result::Result<StepOutcome, StepReject> {
    let m = u.len();
    let tol = control.newton_tol * (1.0 + sup_norm(u));
    let mut v = u.to_vec();
    let mut scratch = vec![0.0; m];
    let mut res = vec![0.0; m];
    let mut rhs_v = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut trial_res = vec![0.0; m];
    residual_into(model, u, &v, dt, &mut scratch, &mut res);
    let mut norm = sup_norm(&res);
    let mut iterations = 0;
    let mut full_step = true;
    while norm > tol || !full_step {
        if iterations == control.newton_max_iter {
            return Err(StepReject::NewtonDiverged {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        model.rhs_into(&v, &mut scratch, &mut rhs_v);
        let mut jac = colored_jacobian(model, &v, &rhs_v);
        for i in 0..m {
            for j in i.saturating_sub(STENCIL_RADIUS)..=(i + STENCIL_RADIUS).min(m - 1) {
                let a = -dt * jac.get(i, j);
                jac.set(i, j, a + if i == j { 1.0 } else { 0.0 });
            }
        }
        let lu = jac.factor().map_err(|_| StepReject::Singular)?;
        let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
        lu.solve_in_place(&mut delta);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(StepReject::NonFinite);
        }

        // the raw residual carries a roundoff floor ~ dt eps_mach g / h^4 on fine
        // meshes; a full correction below tolerance is accepted as converged
        if sup_norm(&delta) <= tol {
            for i in 0..m {
                v[i] += delta[i];
            }
            residual_into(model, u, &v, dt, &mut scratch, &mut res);
            norm = sup_norm(&res);
            break;
        }
        let mut lambda = 1.0;
        loop {
            for i in 0..m {
                trial[i] = v[i] + lambda * delta[i];
            }
            residual_into(model, u, &trial, dt, &mut scratch, &mut trial_res);
            let trial_norm = sup_norm(&trial_res);
            if trial_norm.is_finite() && (trial_norm < norm || trial_norm <= tol) {
                full_step = lambda == 1.0;
                std::mem::swap(&mut v, &mut trial);
                std::mem::swap(&mut res, &mut trial_res);
                norm = trial_norm;
                break;
            }
            lambda *= 0.5;
            if lambda < 1.0 / 64.0 {
                return Err(StepReject::LineSearch { residual: norm });
            }
        }
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(StepReject::NonFinite);
    }
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_CLIP {
        return Err(StepReject::Negative { min });
    }
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    Ok(StepOutcome {
        u: v,
        iterations,
        residual: norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopKind {
    Completed,
    Blowup,
    DeadCore,
    StepFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StopEvent {
    pub kind: StopKind,
    pub t_event: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
    pub newton_iterations: usize,
    pub dt_last: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub event: StopEvent,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn extremes(u: &[f64]) -> (f64, f64) {
    u.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn threshold_event(u: &[f64], t: f64, floor: f64, ceil: f64) -> Option<StopEvent> {
    let (lo, hi) = extremes(u);
    if hi > ceil {
        Some(StopEvent {
            kind: StopKind::Blowup,
            t_event: t,
            detail: format!("max u = {hi:e} exceeds u_ceil = {ceil:e}"),
        })
    } else if lo < floor {
        Some(StopEvent {
            kind: StopKind::DeadCore,
            t_event: t,
            detail: format!("min u = {lo:e} below u_floor = {floor:e}"),
        })
    } else {
        None
    }
}

struct Recorder<'a> {
    model: &'a Model,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    diagnostics: Vec<DiagnosticsRecord>,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, u: &[f64]) {
        if self.times.last() == Some(&t) {
            return;
        }
        self.times.push(t);
        self.states.push(u.to_vec());
        self.diagnostics.push(DiagnosticsRecord::measure(self.model, t, u));
    }
}

/// Adaptive implicit Euler from `u0` until `t_end` or a stop event.
///
/// Snapshots land exactly on multiples of `snapshot_dt`, on `t_end`, and on the
/// event time.
pub fn run(model: &Model, u0: &[f64], control: &StepControl, t_end: f64) -> Result<Trajectory> {
    let k = model.params().k;
    control.check(k)?;
    if u0.len() != model.grid().len() {
        return Err(Error::domain(format!(
            "initial state has {} values, grid has {} nodes",
            u0.len(),
            model.grid().len()
        )));
    }
    if u0.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("initial state is not finite"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::domain(format!("t_end must be positive, got {t_end}")));
    }
    let (floor, ceil) = (control.floor(k), control.ceil(k));
    let mut rec = Recorder {
        model,
        times: Vec::new(),
        states: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut stats = RunStats::default();
    let mut u = u0.to_vec();
    let mut t = 0.0;
    rec.push(t, &u);

    let finish = |rec: Recorder, event: StopEvent, mut stats: RunStats, dt: f64| {
        stats.dt_last = dt;
        Trajectory {
            times: rec.times,
            states: rec.states,
            diagnostics: rec.diagnostics,
            event,
            stats,
        }
    };

    if let Some(event) = threshold_event(&u, t, floor, ceil) {
        return Ok(finish(rec, event, stats, control.dt_init));
    }

    let mut dt = control.dt_init;
    let mut snap_index = 1_u64;
    let mut streak = 0;
    let mut sup_history: VecDeque<f64> = VecDeque::with_capacity(BLOWUP_WINDOW + 1);
    loop {
        let target = (snap_index as f64 * control.snapshot_dt).min(t_end);
        let remaining = target - t;
        let lands = remaining <= dt * 1.01;
        let h = if lands { remaining } else { dt };
        match step_implicit(model, &u, h, control) {
            Ok(step) => {
                stats.accepted += 1;
                stats.newton_iterations += step.iterations;
                u = step.u;
                t = if lands { target } else { t + h };
                sup_history.push_back(extremes(&u).1);
                if sup_history.len() > BLOWUP_WINDOW {
                    sup_history.pop_front();
                }
                if let Some(event) = threshold_event(&u, t, floor, ceil) {
                    rec.push(t, &u);
                    return Ok(finish(rec, event, stats, h));
                }
                if lands {
                    rec.push(t, &u);
                    if target >= t_end {
                        let event = StopEvent {
                            kind: StopKind::Completed,
                            t_event: t,
                            detail: String::new(),
                        };
                        return Ok(finish(rec, event, stats, h));
                    }
                    snap_index += 1;
                }
                streak += 1;
                if streak >= GROW_AFTER {
                    dt = (dt * control.safety).min(control.dt_max);
                    streak = 0;
                }
            }
            Err(reject) => {
                stats.rejected += 1;
                streak = 0;
                dt = 0.5 * h;
                if dt < control.dt_min {
                    let growing = sup_history.len() == BLOWUP_WINDOW
                        && sup_history.iter().zip(sup_history.iter().skip(1)).all(|(a, b)| b > a);
                    let kind = if growing {
                        StopKind::Blowup
                    } else {
                        StopKind::StepFailure
                    };
                    rec.push(t, &u);
                    let event = StopEvent {
                        kind,
                        t_event: t,
                        detail: format!("dt below dt_min after rejection: {reject}"),
                    };
                    return Ok(finish(rec, event, stats, dt));
                }
            }
        }
        if stats.accepted + stats.rejected >= control.max_steps {
            rec.push(t, &u);
            let event = StopEvent {
                kind: StopKind::StepFailure,
                t_event: t,
                detail: format!("step budget of {} exhausted", control.max_steps),
            };
            return Ok(finish(rec, event, stats, dt));
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationMember {
    pub eps: f64,
    pub event: StopEvent,
    pub mass_drift: f64,
    /// Largest spatial Hölder modulus over the snapshots.
    pub spatial_holder: f64,
    pub temporal_holder: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub members: Vec<ContinuationMember>,
    /// `d_j = max_t ‖u_(eps_j) - u_(eps_(j+1))‖_∞` over common snapshot times.
    pub distances: Vec<f64>,
    pub common_snapshots: usize,
    /// `d_j` strictly decreasing.
    pub cauchy: bool,
}

/// Runs every `eps` in `eps_list` (nonincreasing) on the same grid from the
/// same `u0`, in parallel.
pub fn continuation(
    params: &Params,
    grid: &Grid,
    u0: &[f64],
    eps_list: &[f64],
    control: &StepControl,
    t_end: f64,
) -> Result<(ContinuationReport, Vec<Trajectory>)> {
    if eps_list.is_empty() {
        return Err(Error::domain("empty eps list"));
    }
    if eps_list.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::domain("eps list must be nonincreasing"));
    }
    let theta_time = params.derived.theta_time;
    let runs: Vec<Result<Trajectory>> = eps_list
        .par_iter()
        .map(|&eps| {
            let p = params.with_eps(eps)?;
            let model = Model::new(p, grid.clone())?;
            run(&model, u0, control, t_end)
        })
        .collect();
    let runs: Vec<Trajectory> = runs.into_iter().collect::<Result<_>>()?;

    let members = eps_list
        .iter()
        .zip(&runs)
        .map(|(&eps, tr)| {
            let m0 = tr.diagnostics[0].mass_beta;
            let drift = tr
                .diagnostics
                .iter()
                .map(|d| ((d.mass_beta - m0) / m0).abs())
                .fold(0.0, f64::max);
            ContinuationMember {
                eps,
                event: tr.event.clone(),
                mass_drift: drift,
                spatial_holder: tr.diagnostics.iter().map(|d| d.holder_c).fold(0.0, f64::max),
                temporal_holder: temporal_holder_modulus(&tr.times, &tr.states, theta_time),
            }
        })
        .collect();

    let common = runs.iter().map(|r| r.times.len()).min().unwrap_or(0);
    let distances: Vec<f64> = runs
        .windows(2)
        .map(|pair| {
            (0..common)
                .map(|s| sup_distance(&pair[0].states[s], &pair[1].states[s]))
                .fold(0.0, f64::max)
        })
        .collect();
    let cauchy = distances.windows(2).all(|w| w[1] < w[0]);
    Ok((
        ContinuationReport {
            members,
            distances,
            common_snapshots: common,
            cauchy,
        },
        runs,
    ))
}
