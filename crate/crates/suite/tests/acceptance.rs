//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;

use condensate_cli::commands::{cmd_continuation, cmd_run, cmd_steady, cmd_sweep, cmd_verify};
use condensate_cli::RunConfig;
use condensate_core::functionals::ode_bound;
use condensate_core::lab::{
    exceptional_sigmas, run_corpus, sharpness_probe, steady_residual, Bound, CorpusSpec, InequalityReport, LabParams,
};
use condensate_core::params::{critical_polynomial, holder_exponents, nstar_root};
use condensate_core::regularization::{cutoff, verify_weight_bounds, weight_tables};
use condensate_core::stepper::{colored_jacobian, continuation, dense_jacobian, step_implicit, StepControl};
use condensate_core::{Grid, Model, Params, RawParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Verdict;
type Subcommand = fn(&RunConfig, &Path) -> Result<i32, condensate_cli::CliError>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn physical(eps: f64) -> Params {
    Params::validate(&RawParams::physical(1.0, eps)).unwrap()
}

fn cosine(grid: &Grid, amp: f64) -> Vec<f64> {
    grid.nodes().iter().map(|x| 1.0 + amp * (PI * x).cos()).collect()
}

fn critical_exponent() -> Verdict {
    let n = nstar_root();
    let p = critical_polynomial(n);
    verdict(
        (n - 1.5361).abs() <= 5e-4 && p.abs() <= 1e-12,
        format!("n* = {n:.10}, |P(n*)| = {:.1e}", p.abs()),
    )
}

fn weight_sandwich() -> Verdict {
    let grid = Grid::build(512, 1.0, 1.0).unwrap();
    let mut violations = 0;
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper: f64 = 0.0;
    for eps in [0.2, 0.1, 0.05, 0.01] {
        for alpha in [1.0, 4.0, 6.5] {
            let profile = cutoff(eps, 1.0).unwrap();
            let tables = weight_tables(&profile, alpha, 0.5, 0.0, &grid).unwrap();
            let r = verify_weight_bounds(&tables, &grid);
            let s = tables.lambda;
            for (i, &x) in grid.nodes().iter().enumerate() {
                let pa = (x + eps).powf(alpha);
                if tables.g[i] < s * pa || tables.g[i] > pa {
                    violations += 1;
                }
            }
            worst_lower = worst_lower.min(r.lower_ratio_min);
            worst_upper = worst_upper.max(r.upper_ratio_max);
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations; min g/(Λ X^α) = {worst_lower:.6}, max g/X^α = {worst_upper:.6}"),
    )
}

fn mass_conservation() -> Verdict {
    let grid = Grid::build(128, 1.0, 1.0).unwrap();
    let model = Model::new(physical(0.1), grid).unwrap();
    let control = StepControl::default();
    let mut u = cosine(model.grid(), 0.2);
    let m0 = model.weighted_mass(&u);
    let mut drift: f64 = 0.0;
    for _ in 0..1000 {
        u = step_implicit(&model, &u, 1e-5, &control).expect("step accepted").u;
        drift = drift.max(((model.weighted_mass(&u) - m0) / m0).abs());
    }
    verdict(
        drift <= 1e-8,
        format!("max relative drift over 1000 steps = {drift:.2e}"),
    )
}

fn steady_family() -> Verdict {
    let sigmas = exceptional_sigmas(6.5, 2.0);
    let exact = sigmas == [0.0, 1.0, 7.0 / 6.0, 1.5];
    let cells = [256, 512, 1024, 2048];
    let mut ratios = Vec::new();
    let mut ok = exact;
    for sigma in [7.0 / 6.0, 1.5] {
        let res: Vec<f64> = cells
            .iter()
            .map(|&n| steady_residual(sigma, 6.5, 2.0, 1.0, 0.1, n).unwrap().residual_norm)
            .collect();
        for w in res.windows(2) {
            let r = w[0] / w[1];
            ok &= r >= 3.5;
            ratios.push(r);
        }
    }
    let mut trivial: f64 = 0.0;
    for sigma in [0.0, 1.0] {
        for &n in &cells {
            trivial = trivial.max(steady_residual(sigma, 6.5, 2.0, 1.0, 0.1, n).unwrap().residual_norm);
        }
    }
    ok &= trivial <= 1e-12;
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    verdict(
        ok,
        format!(
            "sigmas = {sigmas:?}, doubling ratios (7/6 then 3/2) = [{}], max residual sigma in {{0,1}} = {trivial:.1e}",
            shown.join(", ")
        ),
    )
}

fn corpus() -> &'static Vec<InequalityReport> {
    static REPORTS: OnceLock<Vec<InequalityReport>> = OnceLock::new();
    REPORTS.get_or_init(|| {
        let lab = LabParams::new(&physical(0.1), 0.0).unwrap();
        run_corpus(&CorpusSpec::default(), &lab).unwrap()
    })
}

fn inequality_corpus() -> Verdict {
    let reports = corpus();
    let checked: Vec<_> = reports
        .iter()
        .filter(|r| Bound::INTERPOLATION.contains(&r.bound))
        .collect();
    let failures = checked.iter().filter(|r| !r.pass).count();
    verdict(
        failures == 0 && checked.len() == 1000 * 5 * 3,
        format!("{} reports, {failures} failures", checked.len()),
    )
}

fn pointwise_suite() -> Verdict {
    let reports = corpus();
    let checked: Vec<_> = reports
        .iter()
        .filter(|r| matches!(r.bound, Bound::Holder | Bound::Sup))
        .collect();
    let failures = checked.iter().filter(|r| !r.pass).count();
    verdict(
        failures == 0 && checked.len() == 2000,
        format!("{} reports, {failures} failures", checked.len()),
    )
}

fn sharpness() -> Verdict {
    let probe = sharpness_probe(corpus(), 0.5);
    verdict(
        probe.pass,
        format!(
            "best lhs/rhs at eta = 0.5 is {:.4} (seed {:?}); needs > 0.5",
            probe.best_ratio, probe.best_seed
        ),
    )
}

fn ode_oracles() -> Verdict {
    let mut err: f64 = 0.0;
    for (a, c5) in [(3.0, 4.0), (0.0, 2.5), (1.0, 1.5), (2.0, 0.5)] {
        let t0 = ode_bound(a, c5, 0.0, 2.0).unwrap().t0;
        err = err.max((t0 - f64::min(1.0 / c5, 1.0)).abs());
    }
    for (a, c6) in [(1.0, 1.0), (0.5, 3.0), (2.0, 0.25)] {
        let t0 = ode_bound(a, 0.0, c6, 2.0).unwrap().t0;
        let exact = f64::min(1.0 / (c6 * a) - 1.0 / (c6 * (a + 1.0)), 1.0);
        err = err.max((t0 - exact).abs());
    }
    verdict(err <= 1e-8, format!("max |T0 - closed form| = {err:.2e}"))
}

fn holder() -> Verdict {
    let exps = holder_exponents(0.0).unwrap();
    let reports: Vec<_> = corpus().iter().filter(|r| r.bound == Bound::Holder).collect();
    let failures = reports.iter().filter(|r| !r.pass).count();
    let worst = reports.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    verdict(
        exps == (0.5, 0.125) && failures == 0 && !reports.is_empty(),
        format!(
            "exponents {exps:?}; modulus <= c sqrt(y) on {} functions, {failures} failures, max ratio {worst:.4}",
            reports.len()
        ),
    )
}

fn jacobian() -> Verdict {
    let grid = Grid::build(32, 1.0, 1.0).unwrap();
    let model = Model::new(physical(0.1), grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut err: f64 = 0.0;
    for _ in 0..10 {
        let u: Vec<f64> = (0..33).map(|_| rng.random_range(0.5..1.5)).collect();
        let r = model.rhs(&u);
        let band = colored_jacobian(&model, &u, &r);
        let dense = dense_jacobian(&model, &u, &r);
        let scale = dense.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (i, row) in dense.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                err = err.max((band.get(i, j) - d).abs() / scale);
            }
        }
    }
    verdict(
        err <= 1e-6,
        format!("max relative entry error over 10 states = {err:.2e}"),
    )
}

fn continuation_trend() -> Verdict {
    let grid = Grid::build(256, 1.0, 1.0).unwrap();
    let u0 = cosine(&grid, 0.2);
    let control = StepControl {
        snapshot_dt: 1e-3,
        ..StepControl::default()
    };
    let (report, _) = continuation(&physical(0.2), &grid, &u0, &[0.2, 0.1, 0.05, 0.025], &control, 1e-2).unwrap();
    let completed = report
        .members
        .iter()
        .all(|m| m.event.kind == condensate_core::stepper::StopKind::Completed);
    verdict(
        report.cauchy && completed,
        format!(
            "d_j = {:?} over {} snapshots, all members completed: {completed}",
            report.distances, report.common_snapshots
        ),
    )
}

const BASE: &str = r#"
t_end = 2e-3
[params]
n = 2.0
alpha = 6.5
beta = 0.5
gamma = 0.0
L = 1.0
eps = 0.1
[grid]
cells = 64
grading = 2.0
[initial]
kind = "cosine"
amplitude = 0.2
[control]
snapshot_dt = 5e-4
[verify]
size = 40
[continuation]
eps = [0.2, 0.1, 0.05]
[steady]
cells = [32, 64]
[sweep]
workers = 2
[sweep.axes]
eps = [0.1, 0.05]
"#;

fn artifacts(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if matches!(
                path.extension().and_then(|e| e.to_str()),
                Some("csv" | "json" | "jsonl")
            ) {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Verdict {
    let cfg = RunConfig::parse(BASE).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let commands: [(&str, Subcommand); 5] = [
        ("run", cmd_run),
        ("verify", cmd_verify),
        ("continuation", cmd_continuation),
        ("steady", cmd_steady),
        ("sweep", cmd_sweep),
    ];
    let mut files = 0;
    let mut differing = Vec::new();
    for (name, cmd) in commands {
        let a = tmp.path().join(format!("{name}_a"));
        let b = tmp.path().join(format!("{name}_b"));
        assert_eq!(cmd(&cfg, &a).unwrap(), 0, "{name} exit code");
        assert_eq!(cmd(&cfg, &b).unwrap(), 0, "{name} exit code");
        let (fa, fb) = (artifacts(&a), artifacts(&b));
        files += fa.len();
        if fa != fb {
            differing.push(name);
        }
    }
    verdict(
        differing.is_empty() && files > 0,
        format!("{files} CSV/JSON artifacts over 5 subcommands; differing: {differing:?}"),
    )
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("critical exponent", critical_exponent),
        ("weight sandwich", weight_sandwich),
        ("discrete mass conservation", mass_conservation),
        ("steady-state family", steady_family),
        ("inequality corpus", inequality_corpus),
        ("pointwise bounds", pointwise_suite),
        ("sharpness probe", sharpness),
        ("ODE comparison oracle", ode_oracles),
        ("Holder exponents and modulus", holder),
        ("Jacobian correctness", jacobian),
        ("continuation trend", continuation_trend),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = std::time::Instant::now();
        match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(v) => {
                let tag = if v.pass { "PASS" } else { "FAIL" };
                println!("{tag} {name}: {} [{:.1} s]", v.detail, start.elapsed().as_secs_f64());
                if !v.pass {
                    failed.push(name);
                }
            }
            Err(_) => {
                println!("FAIL {name}: panicked");
                failed.push(name);
            }
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
