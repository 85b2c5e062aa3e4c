use std::sync::Arc;

use wcreg::fidelity::ConjugateFidelity;
use wcreg::fixtures::mcp_deconvolution;
use wcreg::functionals::{abs_plus_cos, Quadratic};
use wcreg::operators::{identity, MatrixOp, Operator};
use wcreg::pdhgm::{descent_certificate, lagrangian, run_pdhgm, suggest_steps, PdConfig, Problem, RunOptions};
use wcreg::{DenseArray, Error, ProductPoint};

fn scalar_problem(a: f64, alpha: f64, y: f64) -> Problem {
    let op = Operator::new(MatrixOp::new(1, 1, vec![a]).unwrap()).with_known_norm(a.abs());
    Problem::new(
        op,
        Arc::new(abs_plus_cos()),
        ConjugateFidelity::new(alpha, DenseArray::from_vec(vec![y])).unwrap(),
    )
    .unwrap()
}

#[test]
fn lagrangian_supremum_over_y_recovers_the_objective() {
    let p = scalar_problem(2.0, 0.5, 0.3);
    for x in [-1.7, -0.2, 0.0, 0.4, 2.5] {
        let xa = DenseArray::from_vec(vec![x]);
        let mut best = f64::NEG_INFINITY;
        let mut y = -20.0;
        while y <= 20.0 {
            best = best.max(lagrangian(&p, &xa, &DenseArray::from_vec(vec![y])).unwrap());
            y += 1e-4;
        }
        let want = x.abs() + x.cos() + (2.0 * x - 0.3f64).powi(2) / (2.0 * 0.5);
        assert!((best - want).abs() <= 1e-3, "x {x}: {best} vs {want}");
        assert!((p.objective(&xa).unwrap() - want).abs() <= 1e-12);
    }
}

#[test]
fn conjugate_prox_minimises_its_objective() {
    let fid = ConjugateFidelity::new(0.3, DenseArray::from_vec(vec![0.7])).unwrap();
    let sigma = 2.0;
    for v in [-3.0, 0.0, 1.1] {
        let got = fid.conj_prox(sigma, &DenseArray::from_vec(vec![v])).unwrap().data()[0];
        let mut best = (f64::INFINITY, 0.0);
        let mut w = -10.0;
        while w <= 10.0 {
            let val = fid.conj_eval(&DenseArray::from_vec(vec![w])).unwrap() + (w - v) * (w - v) / (2.0 * sigma);
            if val < best.0 {
                best = (val, w);
            }
            w += 1e-5;
        }
        assert!((got - best.1).abs() <= 1e-4, "{got} vs {}", best.1);
    }
}

#[test]
fn identity_denoising_reaches_the_closed_form() {
    // argmin c/2 |x|^2 + |x - y|^2 / (2 alpha) = y / (1 + alpha c)
    let (c, alpha) = (0.8, 0.25);
    let y = DenseArray::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    let p = Problem::new(
        identity(&[4]).with_known_norm(1.0),
        Arc::new(Quadratic::new(c)),
        ConjugateFidelity::new(alpha, y.clone()).unwrap(),
    )
    .unwrap();
    let (tau, sigma) = suggest_steps(p.rho(), p.mu(), 1.0, 0.9).unwrap();
    let cfg = PdConfig::new(tau, sigma).with_max_iters(20_000).with_tol(1e-14);
    let t = run_pdhgm(&p, &cfg, &ProductPoint::zeros(&p.op), &RunOptions::default()).unwrap();
    for (got, yi) in t.final_point.x.data().iter().zip(y.data()) {
        assert!((got - yi / (1.0 + alpha * c)).abs() < 1e-10);
    }
}

#[test]
fn descent_certificate_requires_unit_relaxation() {
    let fx = mcp_deconvolution(32, 0).unwrap();
    let (tau, sigma) = suggest_steps(
        fx.problem.rho(),
        fx.problem.mu(),
        fx.problem.op.certified_norm().unwrap(),
        0.9,
    )
    .unwrap();
    let cfg = PdConfig::new(tau, sigma).with_max_iters(50).with_theta(0.5);
    let t = run_pdhgm(
        &fx.problem,
        &cfg,
        &ProductPoint::zeros(&fx.problem.op),
        &RunOptions::default(),
    )
    .unwrap();
    assert!(descent_certificate(&t).is_err());
}

#[test]
fn missing_norm_estimate_is_refused() {
    let op = Operator::new(MatrixOp::new(1, 1, vec![2.0]).unwrap());
    let p = Problem::new(
        op,
        Arc::new(abs_plus_cos()),
        ConjugateFidelity::new(0.5, DenseArray::from_vec(vec![0.0])).unwrap(),
    )
    .unwrap();
    let e = run_pdhgm(
        &p,
        &PdConfig::new(0.1, 10.0),
        &ProductPoint::zeros(&p.op),
        &RunOptions::default(),
    );
    assert!(e.is_err());
}

#[test]
fn huge_steps_diverge_under_override() {
    let p = scalar_problem(2.0, 0.5, 0.3);
    let cfg = PdConfig::new(0.9, 50.0).with_max_iters(1000).with_override(true);
    let z0 = ProductPoint::new(DenseArray::from_vec(vec![1.0]), DenseArray::from_vec(vec![0.0]));
    let e = run_pdhgm(&p, &cfg, &z0, &RunOptions::default()).unwrap_err();
    assert!(matches!(e, Error::Divergence { .. }), "{e}");
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_the_iterates() {
    let fx = mcp_deconvolution(64, 0).unwrap();
    let (tau, sigma) = suggest_steps(
        fx.problem.rho(),
        fx.problem.mu(),
        fx.problem.op.certified_norm().unwrap(),
        0.9,
    )
    .unwrap();
    let cfg = PdConfig::new(tau, sigma).with_max_iters(300);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            run_pdhgm(
                &fx.problem,
                &cfg,
                &ProductPoint::zeros(&fx.problem.op),
                &RunOptions::default(),
            )
            .unwrap()
            .final_point
        })
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.x.data(), b.x.data());
    assert_eq!(a.y.data(), b.y.data());
}
