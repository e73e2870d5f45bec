//! Small derivative-free numeric kernels shared across modules: golden
//! section search, ray maximization with divergence detection, bisection,
//! and stable log-sum-exp.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// (√5 - 1)/2, the golden-section shrink ratio.
fn invphi<T: Real>() -> T {
    real(0.618_033_988_749_894_9)
}

/// Golden-section minimization on [a, b]. The objective may return +∞ on a
/// left subinterval (ties shrink from the left), which is exactly the shape
/// of dual objectives below their finiteness threshold.
///
/// Returns (argmin, min, iterations).
pub fn golden_section_min<T: Real, F: FnMut(T) -> T>(
    mut a: T,
    mut b: T,
    tol: T,
    max_iter: usize,
    mut f: F,
) -> (T, T, usize) {
    let r = invphi::<T>();
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0usize;
    while (b - a) > tol && iters < max_iter {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
        iters += 1;
    }
    if f1 < f2 {
        (x1, f1, iters)
    } else {
        (x2, f2, iters)
    }
}

/// Golden-section maximization on [a, b].
pub fn golden_section_max<T: Real, F: FnMut(T) -> T>(
    a: T,
    b: T,
    tol: T,
    max_iter: usize,
    mut f: F,
) -> (T, T, usize) {
    let (x, v, it) = golden_section_min(a, b, tol, max_iter, |t| -f(t));
    (x, -v, it)
}

/// Outcome of a one-sided ray maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayMax<T> {
    Attained { t: T, value: T },
    Diverging,
}

/// Maximizes g over t ≥ 0 by a doubling ladder from `scale` up to `cap`,
/// followed by golden-section polish around the best ladder rung. Reports
/// `Diverging` when g is still climbing at the cap, which callers treat as
/// an unbounded supremum.
///
/// The ladder (rather than a single bracketing pass) matters because the
/// objectives here — convex loss minus λ·tᵖ — can have a local maximum at
/// zero and a second, global one past a kink.
pub fn maximize_ray<T: Real, F: FnMut(T) -> T>(scale: T, cap: T, mut g: F) -> RayMax<T> {
    let g0 = g(T::zero());
    let mut ts: Vec<T> = Vec::with_capacity(80);
    let mut vs: Vec<T> = Vec::with_capacity(80);
    ts.push(T::zero());
    vs.push(g0);
    let mut t = scale.max(T::min_positive_value());
    while t <= cap {
        ts.push(t);
        vs.push(g(t));
        t *= real(2.0);
    }
    let m = vs.len();
    let mut best = 0usize;
    for k in 1..m {
        if vs[k] > vs[best] {
            best = k;
        }
    }
    // Climbing into the cap: treat as divergent.
    if best == m - 1 && m >= 2 && vs[m - 1] > vs[m - 2] && vs[m - 1] > g0 {
        return RayMax::Diverging;
    }
    let lo = if best == 0 { T::zero() } else { ts[best - 1] };
    let hi = if best + 1 < m { ts[best + 1] } else { ts[best] };
    let tol = real::<T>(1e-12) * (T::one() + hi);
    let (t_star, v_star, _) = golden_section_max(lo, hi, tol, 200, &mut g);
    if v_star >= vs[best] {
        RayMax::Attained { t: t_star, value: v_star }
    } else {
        RayMax::Attained { t: ts[best], value: vs[best] }
    }
}

/// Bisection for a root of a nondecreasing function with f(lo) ≤ 0 ≤ f(hi).
/// Stops when |f| ≤ ftol or the bracket width drops below machine scale.
pub fn bisect_increasing<T: Real, F: FnMut(T) -> T>(
    mut lo: T,
    mut hi: T,
    ftol: T,
    max_iter: usize,
    mut f: F,
) -> T {
    let mut mid = (lo + hi) / real(2.0);
    for _ in 0..max_iter {
        mid = (lo + hi) / real(2.0);
        let v = f(mid);
        if v.abs() <= ftol {
            return mid;
        }
        if v > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= real::<T>(f64::EPSILON) * (T::one() + lo.abs() + hi.abs()) {
            break;
        }
    }
    mid
}

/// Expands a bracket around `start` for a nondecreasing function until the
/// sign changes, doubling the step at most `max_doublings` times per side.
pub fn expand_bracket_increasing<T: Real, F: FnMut(T) -> T>(
    start: T,
    step0: T,
    max_doublings: usize,
    mut f: F,
) -> Result<(T, T)> {
    let v0 = f(start);
    if v0 == T::zero() {
        return Ok((start, start));
    }
    let mut step = step0;
    if v0 > T::zero() {
        let hi = start;
        let mut lo = start - step;
        for _ in 0..max_doublings {
            if f(lo) <= T::zero() {
                return Ok((lo, hi));
            }
            step *= real(2.0);
            lo -= step;
        }
    } else {
        let lo = start;
        let mut hi = start + step;
        for _ in 0..max_doublings {
            if f(hi) >= T::zero() {
                return Ok((lo, hi));
            }
            step *= real(2.0);
            hi += step;
        }
    }
    Err(Error::NoRoot(format!(
        "no sign change within {max_doublings} doublings from {start}"
    )))
}

/// log Σ exp(x_i) with max subtraction; empty input gives -∞.
pub fn logsumexp<T: Real>(xs: &[T]) -> T {
    let m = xs
        .iter()
        .fold(T::neg_infinity(), |m, x| if *x > m { *x } else { m });
    if !m.is_finite() {
        return m;
    }
    let s: T = xs.iter().map(|x| (*x - m).exp()).sum();
    m + s.ln()
}

/// ln(1 + e^x) without overflow for large |x|.
pub fn ln_1p_exp<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex<T: Real>(v: &mut [T]) {
    let n = v.len();
    if n == 0 {
        return;
    }
    let mut sorted: Vec<T> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (k, s) in sorted.iter().enumerate() {
        cum += *s;
        let kk = real::<T>((k + 1) as f64);
        let t = (cum - T::one()) / kk;
        if *s - t > T::zero() {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(T::zero());
    }
}
