//! Closed-form equivalence properties: dual-vs-penalty exactness across the
//! composed families, penalty homogeneity, the single-piece reduction, and
//! the subgradient fitter's contracts.

mod common;

use common::{composed_instance, piecewise_instance, rng, uniform, COMPOSED_CASES};
use rand::Rng;
use wdro::{
    exactness_report, fit_regularized, norm_penalty_value, piecewise_penalty_value,
    worst_case_dual, Composition, FitConfig, FitProblem, Loss, Norm, Order, Piece,
    UnivariateLoss,
};

#[test]
fn dual_matches_closed_form_on_fifty_instances_per_case() {
    let mut r = rng(0x51);
    for case in COMPOSED_CASES {
        for i in 0..50 {
            let (loss, dist) = composed_instance(case, &mut r);
            for (norm, tag) in common::norms() {
                for alpha in [0.0, 0.1, 1.0] {
                    let rep = exactness_report(&loss, &dist, alpha, &norm).unwrap();
                    let tol = 1e-5 * (1.0 + rep.closed_form_value.abs());
                    assert!(
                        rep.absolute_gap <= tol,
                        "{case:?} #{i} {tag} alpha={alpha}: gap {} (dual {}, closed {})",
                        rep.absolute_gap,
                        rep.dual_value,
                        rep.closed_form_value
                    );
                    if alpha == 0.0 {
                        assert_eq!(rep.absolute_gap, 0.0, "zero-radius gap must vanish");
                    }
                }
            }
        }
    }
}

#[test]
fn dual_matches_closed_form_on_piecewise_instances() {
    let mut r = rng(0x52);
    for i in 0..30 {
        let (loss, dist) = piecewise_instance(&mut r);
        for (norm, tag) in common::norms() {
            for alpha in [0.0, 0.1, 1.0] {
                let rep = exactness_report(&loss, &dist, alpha, &norm).unwrap();
                let tol = 1e-5 * (1.0 + rep.closed_form_value.abs());
                assert!(
                    rep.absolute_gap <= tol,
                    "piecewise #{i} {tag} alpha={alpha}: gap {}",
                    rep.absolute_gap
                );
            }
        }
    }
}

#[test]
fn penalty_is_positively_homogeneous_in_beta() {
    let mut r = rng(0x53);
    let norm = Norm::l2();
    for _ in 0..20 {
        let d = r.gen_range(1..=4usize);
        let beta = common::rand_beta(&mut r, d);
        let pts = common::rand_points(&mut r, 8, d);
        let alpha = 0.4;
        for c in [-2.0, 0.5, 3.0] {
            let scaled: Vec<f64> = beta.iter().map(|b| c * b).collect();
            let base = Loss::unsupervised(UnivariateLoss::Abs, beta.clone()).unwrap();
            let big = Loss::unsupervised(UnivariateLoss::Abs, scaled).unwrap();
            let dist = uniform(pts.clone());
            let erm_base = common::erm(&base, &dist);
            let erm_big = common::erm(&big, &dist);
            let pen_base = norm_penalty_value(&base, &dist, alpha, &norm).unwrap() - erm_base;
            let pen_big = norm_penalty_value(&big, &dist, alpha, &norm).unwrap() - erm_big;
            assert!(
                (pen_big - c.abs() * pen_base).abs() <= 1e-12 * (1.0 + pen_big.abs()),
                "c={c}: {pen_big} vs {}",
                c.abs() * pen_base
            );
        }
    }
}

#[test]
fn single_identity_piece_reduces_to_the_linear_closed_form() {
    let mut r = rng(0x54);
    for _ in 0..20 {
        let d = r.gen_range(1..=4usize);
        let beta = common::rand_beta(&mut r, d);
        let dist = uniform(common::rand_points(&mut r, 6, d));
        let pw = Loss::piecewise_max(vec![Piece {
            uni: UnivariateLoss::Identity,
            beta: beta.clone(),
        }])
        .unwrap();
        let lin = Loss::linear(beta).unwrap();
        for (norm, _) in common::norms() {
            let a = piecewise_penalty_value(&pw, &dist, 0.3, &norm).unwrap();
            let b = norm_penalty_value(&lin, &dist, 0.3, &norm).unwrap();
            assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn dual_certifies_the_piecewise_value_at_order_one() {
    // One fixed instance, checked against the multiplier route end to end.
    let pieces = vec![
        Piece { uni: UnivariateLoss::Identity, beta: vec![1.0, 0.0] },
        Piece { uni: UnivariateLoss::Abs, beta: vec![0.0, 3.0] },
    ];
    let loss = Loss::piecewise_max(pieces).unwrap();
    let dist = uniform(vec![vec![0.5, 0.1], vec![-1.0, 0.4]]);
    let norm = Norm::l2();
    let closed = piecewise_penalty_value(&loss, &dist, 0.25, &norm).unwrap();
    let dual = worst_case_dual(&loss, &dist, Order::finite(1.0).unwrap(), 0.25, &norm)
        .unwrap()
        .dual_value;
    assert!((closed - dual).abs() <= 1e-6 * (1.0 + closed.abs()), "{closed} vs {dual}");
}

#[test]
fn fitter_best_curve_is_nonincreasing() {
    let mut r = rng(0x55);
    for _ in 0..5 {
        let pts = common::labeled_points(&mut r, 12, 2);
        let data = uniform(pts);
        let problem =
            FitProblem { composition: Composition::Classification, uni: UnivariateLoss::Hinge };
        let cfg = FitConfig { max_iters: 800, seed: r.gen(), ..FitConfig::default() };
        let fit = fit_regularized(&problem, &data, 0.2, &Norm::l2(), &cfg).unwrap();
        for w in fit.best_curve.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(fit.best_curve.len(), 800);
        assert_eq!(*fit.best_curve.last().unwrap(), fit.objective);
    }
}

#[test]
fn fitter_matches_a_parameter_grid_on_a_small_instance() {
    let mut r = rng(0x56);
    let data = uniform(common::labeled_points(&mut r, 5, 2));
    let problem =
        FitProblem { composition: Composition::Classification, uni: UnivariateLoss::Hinge };
    let alpha = 0.3;
    let norm = Norm::l2();
    let fit = fit_regularized(&problem, &data, alpha, &norm, &FitConfig::default()).unwrap();

    // Exhaustive β grid over [-3,3]² at resolution 1e-2, same objective.
    let objective = |beta: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..data.len() {
            let z = data.point(i);
            let u = z[2] * (beta[0] * z[0] + beta[1] * z[1]);
            acc += data.weight(i) * UnivariateLoss::Hinge.eval(u);
        }
        acc + alpha * norm.dual_eval(beta)
    };
    let mut grid_best = f64::INFINITY;
    let steps = 601;
    for a in 0..steps {
        for b in 0..steps {
            let beta = [-3.0 + 0.01 * a as f64, -3.0 + 0.01 * b as f64];
            grid_best = grid_best.min(objective(&beta));
        }
    }
    assert!(
        (fit.objective - grid_best).abs() <= 0.05,
        "fit {} vs grid {grid_best}",
        fit.objective
    );
}
