//! The experiments behind each verb, as library calls returning their
//! results, plus `cmd_*` wrappers that write the output files.

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use super::config::{ExperimentConfig, ProblemSection, RegulariserSection, TrainSection};
use super::phantom::{make_phantom, PhantomKind, MINI_SHEPP};
use crate::error::{Error, Result};
use crate::fidelity::ConjugateFidelity;
use crate::fixtures::{deconvolution_operator, scaled_noise, spike_signal, NORM_ITERS, NORM_TOL};
use crate::functionals::{
    abs_plus_cos, critical_point_bound, geometric_kinks, mcp, scan_critical_points_1d, CosineBump, Functional, L1Norm,
    Quadratic, SplitRegulariser, ZeroFunctional,
};
use crate::io::{fmt_f64, json_number, read_csv, read_json, write_array, write_json, write_pgm, Table};
use crate::learn::{
    distance_alignment, log_table, read_checkpoint, spiral_fixture, train_awcr, write_checkpoint, Alignment,
    Architecture, Awcr, NetFunctional, SpiralData, TrainSchedule, Trained,
};
use crate::metrics::{psnr, ssim, DEFAULT_PEAK};
use crate::operators::{make_radon, scale, Operator};
use crate::pdhgm::{
    descent_certificate, min_residual_certificate, run_pdhgm, subgradient_solve, suggest_steps, PdConfig, Problem,
    RunOptions, SolverTrace,
};
use crate::regpath::{
    alpha_rule_audit, run_regpath, stationary_start_control, AlphaAudit, RegPathConfig, RegPathReport, SolverKind,
};
use crate::report::Certificate;
use crate::rng::{stream, Stream};
use crate::tensor::{dot, DenseArray, ProductPoint};

/// A seeded problem instance with its ground truth.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub problem: Problem,
    pub truth: DenseArray,
    pub y_clean: DenseArray,
    /// Side length of image problems.
    pub image_side: Option<usize>,
}

/// Forward model and ground truth. The CT operator is rescaled to unit norm.
pub fn build_forward(p: &ProblemSection, seed: u64) -> Result<(Operator, DenseArray, Option<usize>)> {
    match p.kind.as_str() {
        "deconvolution" => {
            if p.n < 8 {
                return Err(Error::config(format!("problem.n must be at least 8, got {}", p.n)));
            }
            if p.stride == 0 {
                return Err(Error::config("problem.stride must be positive"));
            }
            Ok((
                deconvolution_operator(p.n, p.stride, seed)?,
                spike_signal(p.n, seed),
                None,
            ))
        }
        "ct" => {
            let kind: PhantomKind = p.phantom.parse()?;
            let truth = make_phantom(kind, p.n)?.image;
            let angles: Vec<f64> = (0..p.angles)
                .map(|i| std::f64::consts::PI * i as f64 / p.angles as f64)
                .collect();
            let radon = make_radon(p.n, &angles, p.detectors)?.with_norm_estimate(NORM_ITERS, NORM_TOL, seed)?;
            let op = scale(&radon, 1.0 / radon.certified_norm()?);
            Ok((op, truth, Some(p.n)))
        }
        other => Err(Error::config(format!(
            "problem.kind: unknown kind {other:?} (expected deconvolution or ct)"
        ))),
    }
}

pub fn build_regulariser(r: &RegulariserSection, dim: usize) -> Result<Arc<dyn Functional>> {
    Ok(match r.kind.as_str() {
        "mcp" => Arc::new(mcp(r.lambda, r.a)?),
        "l1" => Arc::new(L1Norm::new(r.weight)),
        "quadratic" => Arc::new(Quadratic::new(r.weight)),
        "zero" => Arc::new(ZeroFunctional),
        "awcr" => {
            let path = r
                .checkpoint
                .as_ref()
                .ok_or_else(|| Error::config("regulariser.checkpoint is required for awcr"))?;
            let (net, _) = read_checkpoint(path)?;
            if net.input_dim() != dim {
                return Err(Error::config(format!(
                    "checkpoint expects inputs of size {}, problem has {dim}",
                    net.input_dim()
                )));
            }
            Arc::new(NetFunctional::new(net, true, 0.0))
        }
        other => Err(Error::config(format!(
            "regulariser.kind: unknown kind {other:?} (expected mcp, l1, quadratic, zero or awcr)"
        )))?,
    })
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<BuiltProblem> {
    let (op, truth, image_side) = build_forward(&cfg.problem, cfg.seed)?;
    let y_clean = op.apply(&truth)?;
    if !(cfg.problem.noise >= 0.0) {
        return Err(Error::config(format!(
            "problem.noise must be >= 0, got {}",
            cfg.problem.noise
        )));
    }
    let noise = scaled_noise(op.range_len(), cfg.problem.noise * y_clean.norm(), cfg.seed, 0);
    let mut y = y_clean.clone();
    y.axpy(1.0, &DenseArray::new(y_clean.shape().to_vec(), noise)?)?;
    let reg = build_regulariser(&cfg.regulariser, op.domain_len())?;
    let problem = Problem::new(op, reg, ConjugateFidelity::new(cfg.solver.alpha, y)?)?;
    Ok(BuiltProblem {
        problem,
        truth,
        y_clean,
        image_side,
    })
}

/// Step sizes from the config, or `suggest_steps` when neither is given.
pub fn solver_config(cfg: &ExperimentConfig, problem: &Problem, override_constraints: bool) -> Result<PdConfig> {
    let s = &cfg.solver;
    let (tau, sigma) = match (s.tau, s.sigma) {
        (Some(t), Some(g)) => (t, g),
        (None, None) => suggest_steps(problem.rho(), problem.mu(), problem.op.certified_norm()?, s.margin)?,
        _ => return Err(Error::config("solver.tau and solver.sigma must be given together")),
    };
    let mut pd = PdConfig::new(tau, sigma)
        .with_max_iters(s.max_iters)
        .with_tol(s.tol)
        .with_theta(s.theta)
        .with_override(override_constraints);
    pd.inner_tol = s.inner_tol;
    pd.seed = cfg.seed;
    Ok(pd)
}

/// `s A^* y` with the scalar `s` minimising `||s A A^* y - y||`.
pub fn adjoint_baseline(op: &Operator, y: &DenseArray) -> Result<DenseArray> {
    let back = op.adjoint(y)?;
    let fwd = op.apply(&back)?;
    let den = fwd.norm_sq();
    let s = if den > 0.0 {
        dot(fwd.data(), y.data()) / den
    } else {
        0.0
    };
    Ok(back.scaled(s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageQuality {
    pub psnr: f64,
    pub ssim: f64,
    pub baseline_psnr: f64,
    pub baseline_ssim: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub built: BuiltProblem,
    /// Absent for the subgradient solver.
    pub trace: Option<SolverTrace>,
    /// Objective per iteration of the subgradient solver.
    pub objective: Vec<f64>,
    pub x: DenseArray,
    pub baseline: Option<DenseArray>,
    pub certificates: Vec<Certificate>,
    /// Certificates that could not be evaluated, with the reason.
    pub skipped: Vec<(String, String)>,
    pub rel_error: f64,
    pub image: Option<ImageQuality>,
    pub override_constraints: bool,
}

impl SolveOutcome {
    pub fn certificates_pass(&self) -> bool {
        self.certificates.iter().all(|c| c.pass)
    }
}

pub fn solve(cfg: &ExperimentConfig, override_constraints: bool) -> Result<SolveOutcome> {
    let built = build_problem(cfg)?;
    let problem = &built.problem;
    let mut certificates = Vec::new();
    let mut skipped = Vec::new();
    let (trace, objective, x) = match cfg.solver.kind.as_str() {
        "pdhgm" => {
            let pd = solver_config(cfg, problem, override_constraints)?;
            let trace = run_pdhgm(problem, &pd, &ProductPoint::zeros(&problem.op), &RunOptions::default())?;
            match descent_certificate(&trace) {
                Ok(c) => certificates.push(c),
                Err(e) => skipped.push(("descent".to_string(), e.to_string())),
            }
            match min_residual_certificate(&trace) {
                Ok(c) => certificates.push(c.to_certificate()),
                Err(e) => skipped.push(("min_residual".to_string(), e.to_string())),
            }
            let x = trace.final_point.x.clone();
            (Some(trace), Vec::new(), x)
        }
        "subgradient" => {
            let t = subgradient_solve(
                problem,
                &DenseArray::zeros(problem.op.domain_shape()),
                cfg.solver.step,
                cfg.solver.max_iters,
            )?;
            (None, t.objective, t.best_x)
        }
        other => {
            return Err(Error::config(format!(
                "solver.kind: unknown solver {other:?} (expected pdhgm or subgradient)"
            )))
        }
    };
    let rel_error = x.sub(&built.truth)?.norm() / built.truth.norm().max(f64::MIN_POSITIVE);
    let (baseline, image) = match built.image_side {
        Some(_) => {
            let b = adjoint_baseline(&problem.op, &problem.fid.y_delta)?;
            let q = ImageQuality {
                psnr: psnr(&built.truth, &x, DEFAULT_PEAK)?,
                ssim: ssim(&built.truth, &x, DEFAULT_PEAK)?,
                baseline_psnr: psnr(&built.truth, &b, DEFAULT_PEAK)?,
                baseline_ssim: ssim(&built.truth, &b, DEFAULT_PEAK)?,
            };
            (Some(b), Some(q))
        }
        None => (None, None),
    };
    Ok(SolveOutcome {
        built,
        trace,
        objective,
        x,
        baseline,
        certificates,
        skipped,
        rel_error,
        image,
        override_constraints,
    })
}

fn vector_table(x: &DenseArray, truth: &DenseArray) -> Table {
    let mut t = Table::new(&["index", "value", "truth"]);
    for (i, (v, w)) in x.data().iter().zip(truth.data()).enumerate() {
        t.push(vec![i.to_string(), fmt_f64(*v), fmt_f64(*w)]);
    }
    t
}

fn problem_json(cfg: &ExperimentConfig, built: &BuiltProblem) -> Result<Value> {
    Ok(json!({
        "kind": cfg.problem.kind,
        "domain": built.problem.op.domain_shape(),
        "range": built.problem.op.range_shape(),
        "operator_norm": json_number(built.problem.op.certified_norm()?),
        "regulariser": built.problem.reg.name(),
        "alpha": json_number(built.problem.fid.alpha),
        "seed": cfg.seed,
    }))
}

/// Writes `trace.csv`, `summary.json` and the reconstruction. Fails with a
/// certificate error after writing when a certificate fails on a run that
/// respects the step-size constraints.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path, override_constraints: bool) -> Result<()> {
    let o = solve(cfg, override_constraints)?;
    let mut summary = match &o.trace {
        Some(t) => {
            t.to_table().write(&out.join("trace.csv"))?;
            t.summary_json(&o.certificates)
        }
        None => {
            let mut t = Table::new(&["k", "objective"]);
            for (k, v) in o.objective.iter().enumerate() {
                t.push(vec![k.to_string(), fmt_f64(*v)]);
            }
            t.write(&out.join("trace.csv"))?;
            json!({ "certificates": [], "iterations": o.objective.len().saturating_sub(1) })
        }
    };
    summary["command"] = json!("solve");
    summary["solver"] = json!(cfg.solver.kind);
    summary["regime"] = json!(o.override_constraints);
    summary["problem"] = problem_json(cfg, &o.built)?;
    summary["skipped_certificates"] = o
        .skipped
        .iter()
        .map(|(n, r)| json!({ "name": n, "reason": r }))
        .collect();
    summary["relative_error"] = json_number(o.rel_error);
    if let Some(q) = o.image {
        summary["image"] = json!({
            "psnr": json_number(q.psnr),
            "ssim": json_number(q.ssim),
            "baseline_psnr": json_number(q.baseline_psnr),
            "baseline_ssim": json_number(q.baseline_ssim),
            "psnr_gain": json_number(q.psnr - q.baseline_psnr),
        });
    }
    write_json(&out.join("summary.json"), &summary)?;
    match &o.baseline {
        Some(b) => {
            write_pgm(&out.join("reconstruction.pgm"), &o.x, 0.0, 1.0)?;
            write_pgm(&out.join("baseline.pgm"), b, 0.0, 1.0)?;
        }
        None => vector_table(&o.x, &o.built.truth).write(&out.join("reconstruction.csv"))?,
    }
    if !o.override_constraints {
        let failed: Vec<&str> = o
            .certificates
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        if !failed.is_empty() {
            return Err(Error::Certificate(format!("failed: {}", failed.join(", "))));
        }
    }
    Ok(())
}

pub fn regpath_config(cfg: &ExperimentConfig) -> Result<RegPathConfig> {
    let r = &cfg.regpath;
    Ok(RegPathConfig {
        delta0: r.delta0,
        decay: r.decay,
        levels: r.levels,
        alpha_rule: r.alpha_rule()?,
        noise_seed: cfg.seed,
        solver: match cfg.solver.kind.as_str() {
            "pdhgm" => SolverKind::Pdhgm,
            "subgradient" => SolverKind::Subgradient,
            other => return Err(Error::config(format!("solver.kind: unknown solver {other:?}"))),
        },
        noiseless: r.noiseless,
        max_iters: r.max_iters,
        tol: r.tol,
        step_margin: cfg.solver.margin,
        subgradient_step: cfg.solver.step,
    })
}

#[derive(Debug, Clone)]
pub struct RegPathOutcome {
    pub audit: AlphaAudit,
    pub report: RegPathReport,
    pub truth: DenseArray,
}

/// Audits the parameter rule (refusing to solve when it fails), then runs
/// the path on clean data `A x_true`.
pub fn regpath(cfg: &ExperimentConfig) -> Result<RegPathOutcome> {
    if cfg.problem.kind != "deconvolution" {
        return Err(Error::config("regpath supports problem.kind = \"deconvolution\" only"));
    }
    let rc = regpath_config(cfg)?;
    let audit = alpha_rule_audit(rc.alpha_rule, 2.0, rc.delta0, rc.decay, rc.levels)?;
    if !audit.pass {
        return Err(Error::config(format!(
            "regpath.rule fails the parameter audit: alpha ratio {:e}, noise ratio {:e} over {} levels",
            audit.alpha_ratio, audit.noise_ratio, audit.horizon
        )));
    }
    let (op, truth, _) = build_forward(&cfg.problem, cfg.seed)?;
    let y0 = op.apply(&truth)?;
    let reg = build_regulariser(&cfg.regulariser, op.domain_len())?;
    let report = run_regpath(&op, reg, &y0, &rc)?;
    Ok(RegPathOutcome { audit, report, truth })
}

/// Writes `regpath.csv`, `summary.json` and `reconstruction.csv` (last level).
pub fn cmd_regpath(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let o = regpath(cfg)?;
    o.report.to_table().write(&out.join("regpath.csv"))?;
    let last = o.report.levels.last();
    let summary = json!({
        "command": "regpath",
        "seed": cfg.seed,
        "audit": {
            "pass": o.audit.pass,
            "alpha_ratio": json_number(o.audit.alpha_ratio),
            "noise_ratio": json_number(o.audit.noise_ratio),
            "horizon": o.audit.horizon,
        },
        "levels": o.report.levels.len(),
        "diverged_levels": o.report.levels.iter().filter(|l| l.diverged).map(|l| l.level).collect::<Vec<_>>(),
        "residual_monotone": o.report.residual_monotone(0.1),
        "final_data_residual": json_number(last.map_or(f64::NAN, |l| l.data_residual)),
        "final_tangential": json_number(last.map_or(f64::NAN, |l| l.tangential)),
    });
    write_json(&out.join("summary.json"), &summary)?;
    let x = o.report.final_x.clone().unwrap_or_else(|| o.truth.zeros_like());
    vector_table(&x, &o.truth).write(&out.join("reconstruction.csv"))?;
    if o.report.levels.iter().any(|l| l.diverged) {
        return Err(Error::Divergence {
            iteration: cfg.regpath.max_iters,
            norm: f64::NAN,
        });
    }
    Ok(())
}

pub fn train_schedule(t: &TrainSection, seed: u64) -> TrainSchedule {
    TrainSchedule {
        epochs: t.epochs,
        phase1_epochs: t.phase1_epochs,
        lambda_start: t.lambda_start,
        lambda_end: t.lambda_end,
        lr: t.lr,
        batch_size: t.batch_size,
        seed,
    }
}

pub fn train_architecture(t: &TrainSection) -> Architecture {
    Architecture {
        smooth: t.smooth.clone(),
        icnn_hidden: t.icnn_hidden.clone(),
        slope: t.slope,
        ..Architecture::standard(2)
    }
}

#[derive(Debug, Clone)]
pub struct ToyOutcome {
    pub data: SpiralData,
    pub trained: Trained,
    pub alignment: Alignment,
    /// Convex-only network of matched size, when requested.
    pub baseline: Option<(Awcr, Alignment)>,
}

fn align(net: &Awcr, data: &SpiralData, t: &TrainSection) -> Alignment {
    distance_alignment(|p| net.eval(p), &data.oracle, t.box_lo, t.box_hi, t.grid)
}

/// Trains on the seeded spiral and aligns the result with the distance to
/// the spiral. Divergence returns the partial state.
pub fn train_toy(cfg: &ExperimentConfig) -> std::result::Result<ToyOutcome, (Error, Option<Trained>)> {
    let t = &cfg.train;
    if t.grid < 16 || !(t.box_hi > t.box_lo) {
        return Err((Error::config("train.grid must be >= 16 and box_lo < box_hi"), None));
    }
    let data = spiral_fixture(t.per_arm, t.noise_sigma, cfg.seed);
    let sched = train_schedule(t, cfg.seed);
    let init = Awcr::new(&train_architecture(t), &mut stream(cfg.seed, Stream::Init));
    let trained = train_awcr(init, &data.real, &data.noisy, &sched).map_err(|d| {
        let partial = Trained {
            net: d.last,
            log: d.log,
        };
        (d.error, Some(partial))
    })?;
    let alignment = align(&trained.net, &data, t);
    let baseline = if t.baseline_hidden > 0 {
        let init = Awcr::new(
            &Architecture::icnn_only(2, vec![t.baseline_hidden]),
            &mut stream(cfg.seed, Stream::Init),
        );
        let b = train_awcr(init, &data.real, &data.noisy, &sched).map_err(|d| (d.error, None))?;
        let al = align(&b.net, &data, t);
        Some((b.net, al))
    } else {
        None
    };
    Ok(ToyOutcome {
        data,
        trained,
        alignment,
        baseline,
    })
}

fn alignment_json(a: &Alignment) -> Value {
    json!({
        "correlation": json_number(a.correlation),
        "sup_error": json_number(a.sup_error),
        "a": json_number(a.a),
        "b": json_number(a.b),
    })
}

/// Writes `awcr.ckpt`, `train_log.csv` and `metrics.json`.
pub fn cmd_train_toy(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    match train_toy(cfg) {
        Ok(o) => {
            write_checkpoint(&out.join("awcr.ckpt"), &o.trained.net, cfg.seed)?;
            log_table(&o.trained.log).write(&out.join("train_log.csv"))?;
            let (rho, lip, beta) = o.trained.net.declared_modulus();
            let mut metrics = json!({
                "command": "train-toy",
                "seed": cfg.seed,
                "epochs": o.trained.log.len(),
                "params": o.trained.net.param_count(),
                "alignment": alignment_json(&o.alignment),
                "modulus": {
                    "rho_hat": json_number(rho),
                    "lipschitz_icnn": json_number(lip),
                    "beta_smooth": json_number(beta),
                },
            });
            if let Some((net, al)) = &o.baseline {
                metrics["baseline"] = json!({ "params": net.param_count(), "alignment": alignment_json(al) });
            }
            write_json(&out.join("metrics.json"), &metrics)
        }
        Err((e, partial)) => {
            if let Some(p) = partial {
                write_checkpoint(&out.join("awcr.ckpt"), &p.net, cfg.seed)?;
                log_table(&p.log).write(&out.join("train_log.csv"))?;
            }
            Err(e)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthScan {
    pub gamma: f64,
    pub ratio: f64,
    /// `m^n` for `n = 0..=levels`.
    pub expected: Vec<f64>,
    pub found: Vec<f64>,
    /// Largest relative distance from an expected point to the nearest found one.
    pub max_rel_error: f64,
    /// Whether either a priori radius applies; it never does here.
    pub bounded: bool,
    pub pass: bool,
}

/// Critical points of `x^2/2 + R` for the piecewise quadratic `R` with
/// modulus `gamma`, scanned on `[1, m^levels]`.
pub fn growth_scan(gamma: f64, levels: u32, step: f64) -> Result<GrowthScan> {
    let r = geometric_kinks(gamma)?;
    let m = r.ratio();
    let f = SplitRegulariser::new(Arc::new(r), Arc::new(Quadratic::new(1.0)), gamma, 1.0)?;
    let top = m.powi(levels as i32);
    let found = scan_critical_points_1d(&f, 1.0, top * (1.0 + 1e-12), step);
    let expected: Vec<f64> = (0..=levels as i32).map(|n| m.powi(n)).collect();
    let max_rel_error = expected
        .iter()
        .map(|&e| found.iter().map(|&p| (p - e).abs() / e).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let bounded = f.admissible(1);
    let pass = found.len() == expected.len() && max_rel_error <= 1e-6 && !bounded;
    Ok(GrowthScan {
        gamma,
        ratio: m,
        expected,
        found,
        max_rel_error,
        bounded,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundScan {
    pub name: String,
    pub radius: f64,
    pub points: Vec<f64>,
    pub pass: bool,
}

/// Scanned critical points of two split regularisers on `[-range, range]`
/// against their a priori radius around zero.
pub fn bound_scans(range: f64, step: f64) -> Result<Vec<BoundScan>> {
    let fixtures = [
        SplitRegulariser::new(Arc::new(abs_plus_cos()), Arc::new(Quadratic::new(1.0)), 1.0, 1.0)?,
        SplitRegulariser::new(
            Arc::new(CosineBump::new(1.5, 1.0, 0.5)),
            Arc::new(Quadratic::centered(1.0, 3.0)),
            1.5,
            1.0,
        )?,
    ];
    fixtures
        .iter()
        .map(|reg| {
            let b = critical_point_bound(reg, &DenseArray::zeros(&[1]))?;
            let points = scan_critical_points_1d(reg, -range, range, step);
            let pass = !points.is_empty() && points.iter().all(|p| p.abs() <= b.radius);
            Ok(BoundScan {
                name: reg.name(),
                radius: b.radius,
                points,
                pass,
            })
        })
        .collect()
}

/// Writes `critical_points.csv`, `bounds.csv`, `stability_control.csv` and
/// `summary.json`. Fails with a certificate error when a scan disagrees with
/// its prediction.
pub fn cmd_counterexample(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let c = &cfg.counterexample;
    if !(c.step > 0.0) || !(c.bound_range > 0.0) {
        return Err(Error::config("counterexample.step and bound_range must be positive"));
    }
    let scans: Vec<GrowthScan> = c
        .gammas
        .iter()
        .map(|&g| growth_scan(g, c.levels, c.step))
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["gamma", "n", "expected", "found", "rel_error"]);
    for s in &scans {
        for (n, &e) in s.expected.iter().enumerate() {
            let nearest = s
                .found
                .iter()
                .copied()
                .min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()))
                .unwrap_or(f64::NAN);
            t.push(vec![
                fmt_f64(s.gamma),
                n.to_string(),
                fmt_f64(e),
                fmt_f64(nearest),
                fmt_f64((nearest - e).abs() / e),
            ]);
        }
    }
    t.write(&out.join("critical_points.csv"))?;

    let bounds = bound_scans(c.bound_range, c.step)?;
    let mut bt = Table::new(&["functional", "point", "radius", "inside"]);
    for b in &bounds {
        for p in &b.points {
            bt.push(vec![
                b.name.clone(),
                fmt_f64(*p),
                fmt_f64(b.radius),
                (p.abs() <= b.radius).to_string(),
            ]);
        }
    }
    bt.write(&out.join("bounds.csv"))?;

    let sizes = [1.0, 0.5, 0.25, 0.125, 0.0625];
    let control = stationary_start_control(&sizes)?;
    let mut ct = Table::new(&["size", "deviation"]);
    for r in &control {
        ct.push_f64(&[r.size, r.deviation]);
    }
    ct.write(&out.join("stability_control.csv"))?;

    let summary = json!({
        "command": "counterexample",
        "growth": scans.iter().map(|s| json!({
            "gamma": json_number(s.gamma),
            "ratio": json_number(s.ratio),
            "expected": s.expected.len(),
            "found": s.found.len(),
            "max_rel_error": json_number(s.max_rel_error),
            "radius_available": s.bounded,
            "pass": s.pass,
        })).collect::<Vec<_>>(),
        "bounds": bounds.iter().map(|b| json!({
            "functional": b.name,
            "radius": json_number(b.radius),
            "points": b.points.len(),
            "max_abs": json_number(b.points.iter().fold(0.0, |a, p| a.max(p.abs()))),
            "pass": b.pass,
        })).collect::<Vec<_>>(),
    });
    write_json(&out.join("summary.json"), &summary)?;
    let failed = scans.iter().filter(|s| !s.pass).count() + bounds.iter().filter(|b| !b.pass).count();
    if failed > 0 {
        return Err(Error::Certificate(format!(
            "{failed} scan(s) disagree with the prediction"
        )));
    }
    Ok(())
}

/// Recomputes the certificates of a `solve` output directory.
pub fn diagnose(trace_dir: &Path) -> Result<Vec<Certificate>> {
    let table = read_csv(&trace_dir.join("trace.csv"))?;
    let summary = read_json(&trace_dir.join("summary.json"))?;
    let config = summary
        .get("config")
        .ok_or_else(|| Error::config(format!("{} has no solver configuration", trace_dir.display())))?;
    let trace = SolverTrace::from_files(&table, config)?;
    Ok(vec![
        descent_certificate(&trace)?,
        min_residual_certificate(&trace)?.to_certificate(),
    ])
}

/// Writes `diagnosis.json`; fails with a certificate error if any fails.
pub fn cmd_diagnose(trace_dir: &Path, out: &Path) -> Result<()> {
    let certs = diagnose(trace_dir)?;
    let all = certs.iter().all(|c| c.pass);
    write_json(
        &out.join("diagnosis.json"),
        &json!({
            "command": "diagnose",
            "certificates": certs.iter().map(Certificate::to_json).collect::<Vec<_>>(),
            "pass": all,
        }),
    )?;
    if !all {
        return Err(Error::Certificate("trace fails its certificates".into()));
    }
    Ok(())
}

/// Writes `phantom.pgm`, `phantom.bin` and `phantom.json`.
pub fn cmd_phantom(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let kind: PhantomKind = cfg.phantom.kind.parse()?;
    let p = make_phantom(kind, cfg.phantom.n)?;
    write_pgm(&out.join("phantom.pgm"), &p.image, 0.0, 1.0)?;
    write_array(&out.join("phantom.bin"), &p.image)?;
    let (lo, hi) = p
        .image
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut meta = json!({
        "command": "phantom",
        "kind": kind.name(),
        "n": cfg.phantom.n,
        "description": p.description,
        "min": json_number(lo),
        "max": json_number(hi),
    });
    if kind == PhantomKind::MiniShepp {
        meta["ellipses"] = MINI_SHEPP
            .iter()
            .map(|r| r.iter().map(|&v| json_number(v)).collect::<Vec<_>>())
            .collect();
    }
    write_json(&out.join("phantom.json"), &meta)
}
