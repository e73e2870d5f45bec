//! Shared helpers for the integration suites.
#![allow(dead_code)] // each test binary uses a subset

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wdro::{Composition, Data, Loss, Norm, Piece, UnivariateLoss};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(r: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| r.gen_range(lo..hi)).collect()
}

/// Random parameter vector bounded away from zero.
pub fn rand_beta(r: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let b = rand_vec(r, d, -2.0, 2.0);
        if b.iter().any(|x| x.abs() > 0.1) {
            return b;
        }
    }
}

pub fn rand_points(r: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| rand_vec(r, d, -2.0, 2.0)).collect()
}

/// Feature rows with a trailing ±1 label column.
pub fn labeled_points(r: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut z = rand_vec(r, d, -2.0, 2.0);
            z.push(if r.gen_bool(0.5) { 1.0 } else { -1.0 });
            z
        })
        .collect()
}

pub fn uniform(points: Vec<Vec<f64>>) -> Data {
    Data::uniform(points).unwrap()
}

pub fn norms() -> Vec<(Norm, &'static str)> {
    vec![(Norm::l1(), "l1"), (Norm::l2(), "l2"), (Norm::linf(), "linf")]
}

/// The four composed instance families of the exactness suite.
#[derive(Clone, Copy, Debug)]
pub enum ComposedCase {
    UnsupAbs,
    RegAbs,
    ClassHinge,
    ClassLogistic,
}

pub const COMPOSED_CASES: [ComposedCase; 4] = [
    ComposedCase::UnsupAbs,
    ComposedCase::RegAbs,
    ComposedCase::ClassHinge,
    ComposedCase::ClassLogistic,
];

pub fn composed_instance(case: ComposedCase, r: &mut ChaCha8Rng) -> (Loss, Data) {
    let d = r.gen_range(1..=5usize);
    let n = r.gen_range(1..=20usize);
    let beta = rand_beta(r, d);
    match case {
        ComposedCase::UnsupAbs => (
            Loss::unsupervised(UnivariateLoss::Abs, beta).unwrap(),
            uniform(rand_points(r, n, d)),
        ),
        ComposedCase::RegAbs => (
            Loss::regression(UnivariateLoss::Abs, beta).unwrap(),
            uniform(rand_points(r, n, d + 1)),
        ),
        ComposedCase::ClassHinge => (
            Loss::classification(UnivariateLoss::Hinge, beta).unwrap(),
            uniform(labeled_points(r, n, d)),
        ),
        ComposedCase::ClassLogistic => (
            Loss::classification(UnivariateLoss::Logistic, beta).unwrap(),
            uniform(labeled_points(r, n, d)),
        ),
    }
}

/// Random piecewise maximum with at most four Lipschitz pieces.
pub fn piecewise_instance(r: &mut ChaCha8Rng) -> (Loss, Data) {
    let d = r.gen_range(1..=4usize);
    let m = r.gen_range(1..=4usize);
    let n = r.gen_range(1..=15usize);
    let pieces: Vec<Piece<f64>> = (0..m)
        .map(|_| {
            let uni = match r.gen_range(0..3) {
                0 => UnivariateLoss::Identity,
                1 => UnivariateLoss::Abs,
                _ => UnivariateLoss::Hinge,
            };
            Piece { uni, beta: rand_beta(r, d) }
        })
        .collect();
    (Loss::piecewise_max(pieces).unwrap(), uniform(rand_points(r, n, d)))
}

pub fn quadratic_instance(r: &mut ChaCha8Rng) -> (Loss, Data) {
    let d = r.gen_range(1..=3usize);
    let n = r.gen_range(2..=15usize);
    (Loss::smooth_quadratic(rand_beta(r, d)).unwrap(), uniform(rand_points(r, n, d)))
}

/// Central finite differences with step 1e−6·(1+‖z‖₂).
pub fn fd_grad(f: &dyn Fn(&[f64]) -> f64, z: &[f64]) -> Vec<f64> {
    let nz = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let h = 1e-6 * (1.0 + nz);
    (0..z.len())
        .map(|k| {
            let mut zp = z.to_vec();
            zp[k] += h;
            let mut zm = z.to_vec();
            zm[k] -= h;
            (f(&zp) - f(&zm)) / (2.0 * h)
        })
        .collect()
}

/// All permutations of 0..n, for the brute-force transport oracle.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let n = used.len();
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                cur.push(k);
                go(cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Whether a point sits clear of every declared kink of the family, so the
/// gradient is classically defined there.
pub fn away_from_kinks(loss: &Loss, z: &[f64]) -> bool {
    loss.grad_z(z).is_ok()
}

pub fn erm(loss: &Loss, dist: &Data) -> f64 {
    dist.try_expectation(|z| loss.eval(z)).unwrap()
}

/// Composition tag of a composed loss, if any.
pub fn composition_of(loss: &Loss) -> Option<Composition> {
    loss.composition()
}
