//! Exact-transport properties: metric axioms on random triples, monotonicity
//! in the order, and bitwise agreement with a permutation brute force on
//! small equal-weight instances.

mod common;

use common::{permutations, rand_points, rng, uniform};
use wdro::{wasserstein_p, Data, Norm, Order};

fn w(a: &Data, b: &Data, p: Order, n: &Norm) -> f64 {
    wasserstein_p(a, b, p, n).unwrap().0
}

#[test]
fn metric_axioms_on_random_triples() {
    let mut r = rng(0x31);
    let n2 = Norm::l2();
    for p in [Order::finite(1.0).unwrap(), Order::finite(2.0).unwrap()] {
        for trial in 0..200 {
            let d = 1 + (trial % 3);
            let na = 1 + (trial % 4);
            let nb = 1 + ((trial / 2) % 4);
            let nc = 1 + ((trial / 3) % 4);
            let a = uniform(rand_points(&mut r, na, d));
            let b = uniform(rand_points(&mut r, nb, d));
            let c = uniform(rand_points(&mut r, nc, d));

            let ab = w(&a, &b, p, &n2);
            let ba = w(&b, &a, p, &n2);
            let ac = w(&a, &c, p, &n2);
            let bc = w(&b, &c, p, &n2);

            assert!(ab >= 0.0 && ac >= 0.0 && bc >= 0.0);
            assert!((ab - ba).abs() <= 1e-8 * (1.0 + ab), "symmetry: {ab} vs {ba}");
            assert!(
                ac <= ab + bc + 1e-8 * (1.0 + ab + bc),
                "triangle: {ac} > {ab} + {bc}"
            );
            assert_eq!(w(&a, &a, p, &n2), 0.0, "identity");
        }
    }
}

#[test]
fn distinct_supports_have_positive_distance() {
    let mut r = rng(0x32);
    for _ in 0..50 {
        let a = uniform(rand_points(&mut r, 3, 2));
        // Shift so the supports cannot overlap.
        let shifted: Vec<Vec<f64>> =
            a.points().iter().map(|z| vec![z[0] + 5.0, z[1]]).collect();
        let b = uniform(shifted);
        assert!(w(&a, &b, Order::finite(1.0).unwrap(), &Norm::l2()) > 1.0);
    }
}

#[test]
fn monotone_in_order() {
    let mut r = rng(0x33);
    for trial in 0..60 {
        let n = 2 + (trial % 5);
        let d = 1 + (trial % 3);
        let a = uniform(rand_points(&mut r, n, d));
        let b = uniform(rand_points(&mut r, n, d));
        let norm = Norm::l2();
        let w1 = w(&a, &b, Order::finite(1.0).unwrap(), &norm);
        let w2 = w(&a, &b, Order::finite(2.0).unwrap(), &norm);
        let wi = w(&a, &b, Order::infinity(), &norm);
        assert!(w1 <= w2 + 1e-9 * (1.0 + w2), "{w1} > {w2}");
        assert!(w2 <= wi + 1e-9 * (1.0 + wi), "{w2} > {wi}");
    }
}

#[test]
fn small_instances_match_permutation_brute_force_exactly() {
    let mut r = rng(0x34);
    for trial in 0..40 {
        let n = 2 + (trial % 5); // up to 6
        let d = 1 + (trial % 3);
        let a = uniform(rand_points(&mut r, n, d));
        let b = uniform(rand_points(&mut r, n, d));
        for (norm, _) in common::norms() {
            for pv in [1.0, 2.0] {
                let p = Order::finite(pv).unwrap();
                let (value, plan) = wasserstein_p(&a, &b, p, &norm).unwrap();
                // Same cost entries as the solver; equally-optimal couplings
                // (Birkhoff ties, split flows) may reorder the accumulation,
                // so values coincide at machine precision, not bitwise.
                let cost: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let diff: Vec<f64> = a
                                    .point(i)
                                    .iter()
                                    .zip(b.point(j))
                                    .map(|(x, y)| x - y)
                                    .collect();
                                norm.eval(&diff).powf(pv)
                            })
                            .collect()
                    })
                    .collect();
                let mut best = f64::INFINITY;
                for perm in permutations(n) {
                    let mut tot = 0.0;
                    for (i, &j) in perm.iter().enumerate() {
                        tot += a.weight(i) * cost[i][j];
                    }
                    if tot < best {
                        best = tot;
                    }
                }
                let tol = 1e-14 * (1.0 + best.abs());
                assert!((plan.cost - best).abs() <= tol, "n={n} p={pv}: {} vs {best}", plan.cost);
                let v_best = best.powf(pv.recip());
                assert!((value - v_best).abs() <= tol, "n={n} p={pv}: {value} vs {v_best}");
            }

            // Bottleneck order: compare against the permutation minimax.
            let (vinf, _) = wasserstein_p(&a, &b, Order::infinity(), &norm).unwrap();
            let mut best = f64::INFINITY;
            for perm in permutations(n) {
                let mut hi = 0.0f64;
                for (i, &j) in perm.iter().enumerate() {
                    let diff: Vec<f64> =
                        a.point(i).iter().zip(b.point(j)).map(|(x, y)| x - y).collect();
                    hi = hi.max(norm.eval(&diff));
                }
                best = best.min(hi);
            }
            let tol = 1e-14 * (1.0 + best.abs());
            assert!((vinf - best).abs() <= tol, "n={n} p=inf: {vinf} vs {best}");
        }
    }
}
