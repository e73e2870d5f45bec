//! ℓ_q ground norms on R^d, their duals, and empirical (power-mean) norms.
//!
//! Exponents live in [1, ∞]. Infinity is a distinguished enum variant, never
//! a large float, so `q = ∞` round-trips exactly through duality and
//! serialization. The Hölder conjugate follows the usual conventions
//! 1* = ∞, ∞* = 1, and q* = q/(q-1) otherwise.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Norm or moment exponent in [1, ∞].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent<T> {
    Finite(T),
    Infinity,
}

impl<T: Real> Exponent<T> {
    /// Finite exponent; rejects q < 1 and non-finite values.
    pub fn finite(q: T) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::Domain(format!(
                "exponent must be finite, got {q}; use Exponent::infinity() for q = inf"
            )));
        }
        if q < T::one() {
            return Err(Error::Domain(format!("exponent must satisfy q >= 1, got {q}")));
        }
        Ok(Exponent::Finite(q))
    }

    pub fn infinity() -> Self {
        Exponent::Infinity
    }

    /// Parses a float, mapping `f64::INFINITY` onto the infinity variant.
    pub fn from_value(q: T) -> Result<Self> {
        if q.is_infinite() && q > T::zero() {
            Ok(Exponent::Infinity)
        } else {
            Self::finite(q)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Exponent::Finite(_))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Exponent::Finite(q) if *q == T::one())
    }

    /// Numeric value with ∞ mapped to `T::infinity()`.
    pub fn value(&self) -> T {
        match self {
            Exponent::Finite(q) => *q,
            Exponent::Infinity => T::infinity(),
        }
    }

    /// Hölder conjugate: 1 ↔ ∞, q ↦ q/(q-1).
    pub fn dual(&self) -> Exponent<T> {
        match self {
            Exponent::Infinity => Exponent::Finite(T::one()),
            Exponent::Finite(q) => {
                if *q == T::one() {
                    Exponent::Infinity
                } else {
                    Exponent::Finite(*q / (*q - T::one()))
                }
            }
        }
    }

    /// `true` when the exponent is at least `x` (∞ passes every bound).
    pub fn at_least(&self, x: T) -> bool {
        match self {
            Exponent::Infinity => true,
            Exponent::Finite(q) => *q >= x,
        }
    }

    /// `true` when the exponent is strictly greater than `x`.
    pub fn above(&self, x: T) -> bool {
        match self {
            Exponent::Infinity => true,
            Exponent::Finite(q) => *q > x,
        }
    }
}

impl<T: Real> std::fmt::Display for Exponent<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// Hölder conjugate of an exponent.
pub fn dual_exponent<T: Real>(q: Exponent<T>) -> Exponent<T> {
    q.dual()
}

/// An ℓ_q norm on R^d together with its dual-side operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec<T> {
    q: Exponent<T>,
}

impl<T: Real> NormSpec<T> {
    pub fn new(q: Exponent<T>) -> Self {
        NormSpec { q }
    }

    pub fn l1() -> Self {
        NormSpec { q: Exponent::Finite(T::one()) }
    }

    pub fn l2() -> Self {
        NormSpec { q: Exponent::Finite(real(2.0)) }
    }

    pub fn linf() -> Self {
        NormSpec { q: Exponent::Infinity }
    }

    pub fn exponent(&self) -> Exponent<T> {
        self.q
    }

    pub fn dual(&self) -> NormSpec<T> {
        NormSpec { q: self.q.dual() }
    }

    /// ‖v‖_q. Scales by the max entry before exponentiating so large inputs
    /// and large q do not overflow.
    pub fn eval(&self, v: &[T]) -> T {
        match self.q {
            Exponent::Infinity => v.iter().fold(T::zero(), |m, x| m.max(x.abs())),
            Exponent::Finite(q) if q == T::one() => v.iter().map(|x| x.abs()).sum(),
            Exponent::Finite(q) if q == real(2.0) => {
                v.iter().map(|x| *x * *x).sum::<T>().sqrt()
            }
            Exponent::Finite(q) => {
                let m = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
                if m == T::zero() {
                    return T::zero();
                }
                let s: T = v.iter().map(|x| (x.abs() / m).powf(q)).sum();
                m * s.powf(q.recip())
            }
        }
    }

    /// ‖v‖_{q*}, the dual norm.
    pub fn dual_eval(&self, v: &[T]) -> T {
        self.dual().eval(v)
    }

    /// A maximizer of `g·u` over the unit ball ‖u‖_q ≤ 1, so that
    /// `g·argmax = ‖g‖_{q*}`. Returns the zero vector when g = 0.
    ///
    /// q = 1 picks a signed coordinate vertex, q = ∞ the sign pattern, and
    /// finite q > 1 the analytic power-law direction.
    pub fn dual_argmax(&self, g: &[T]) -> Vec<T> {
        let mut u = vec![T::zero(); g.len()];
        match self.q {
            Exponent::Finite(q) if q == T::one() => {
                let mut best = 0usize;
                let mut best_abs = T::zero();
                for (k, x) in g.iter().enumerate() {
                    if x.abs() > best_abs {
                        best_abs = x.abs();
                        best = k;
                    }
                }
                if best_abs > T::zero() {
                    u[best] = g[best].signum();
                }
            }
            Exponent::Infinity => {
                for (uk, x) in u.iter_mut().zip(g) {
                    if *x != T::zero() {
                        *uk = x.signum();
                    }
                }
            }
            Exponent::Finite(q) => {
                let qd = self.dual_eval(g);
                if qd == T::zero() {
                    return u;
                }
                // u_i = sign(g_i) (|g_i|/‖g‖_{q*})^{q*-1}; then ‖u‖_q = 1.
                let qs = q / (q - T::one());
                for (uk, x) in u.iter_mut().zip(g) {
                    if *x != T::zero() {
                        *uk = x.signum() * (x.abs() / qd).powf(qs - T::one());
                    }
                }
            }
        }
        u
    }

    /// Minimal-ℓ₂-norm subgradient of β ↦ ‖β‖_{q*}.
    ///
    /// Smooth away from ties and the origin; at an ℓ_∞ tie it returns the
    /// centroid of the active signed vertices (the least-norm element of the
    /// subdifferential), and 0 at β = 0.
    pub fn dual_norm_subgradient(&self, beta: &[T]) -> Vec<T> {
        let qd = self.q.dual();
        let mut g = vec![T::zero(); beta.len()];
        match qd {
            Exponent::Finite(q) if q == T::one() => {
                for (gk, b) in g.iter_mut().zip(beta) {
                    if *b != T::zero() {
                        *gk = b.signum();
                    }
                }
            }
            Exponent::Infinity => {
                let m = beta.iter().fold(T::zero(), |m, x| m.max(x.abs()));
                if m == T::zero() {
                    return g;
                }
                let tol = m * real(1e-12);
                let tied: Vec<usize> = (0..beta.len())
                    .filter(|&k| beta[k].abs() >= m - tol)
                    .collect();
                let w = T::one() / real(tied.len() as f64);
                for k in tied {
                    g[k] = beta[k].signum() * w;
                }
            }
            Exponent::Finite(q) => {
                let norm = NormSpec::new(qd).eval(beta);
                if norm == T::zero() {
                    return g;
                }
                for (gk, b) in g.iter_mut().zip(beta) {
                    if *b != T::zero() {
                        *gk = b.signum() * (b.abs() / norm).powf(q - T::one());
                    }
                }
            }
        }
        g
    }
}

impl<T: Real> std::fmt::Display for NormSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.q {
            Exponent::Infinity => write!(f, "linf"),
            Exponent::Finite(q) => write!(f, "l{q}"),
        }
    }
}

/// Power mean ((1/n) Σ v_i^p)^{1/p} of nonnegative values, with p = ∞ the
/// maximum. This is the empirical moment norm used for gradient penalties
/// and smoothness terms; it is nondecreasing in p.
pub fn empirical_p_mean<T: Real>(values: &[T], p: Exponent<T>) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Domain("empirical norm of an empty sample".into()));
    }
    if let Some(v) = values.iter().find(|v| **v < T::zero() || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "empirical norm requires finite nonnegative values, got {v}"
        )));
    }
    match p {
        Exponent::Infinity => Ok(values.iter().fold(T::zero(), |m, v| m.max(*v))),
        Exponent::Finite(p) if p == T::one() => {
            let n = real(values.len() as f64);
            Ok(values.iter().copied().sum::<T>() / n)
        }
        Exponent::Finite(p) => {
            let m = values.iter().fold(T::zero(), |m, v| m.max(*v));
            if m == T::zero() {
                return Ok(T::zero());
            }
            let n = real(values.len() as f64);
            let s: T = values.iter().map(|v| (*v / m).powf(p)).sum();
            Ok(m * (s / n).powf(p.recip()))
        }
    }
}

/// Empirical norm of vector-valued samples: the p-power mean of ‖h_i‖.
pub fn empirical_norm<T: Real>(
    vectors: &[Vec<T>],
    norm: &NormSpec<T>,
    p: Exponent<T>,
) -> Result<T> {
    let norms: Vec<T> = vectors.iter().map(|v| norm.eval(v)).collect();
    empirical_p_mean(&norms, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_exponents() {
        let two = Exponent::finite(2.0f64).unwrap();
        assert_eq!(two.dual(), Exponent::Finite(2.0));
        assert_eq!(Exponent::finite(1.0f64).unwrap().dual(), Exponent::<f64>::Infinity);
        assert_eq!(Exponent::<f64>::infinity().dual(), Exponent::Finite(1.0));
        let four = Exponent::finite(4.0f64).unwrap();
        match four.dual() {
            Exponent::Finite(q) => assert!((q - 4.0 / 3.0).abs() < 1e-15),
            _ => panic!("expected finite dual"),
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(Exponent::finite(0.5f64).is_err());
        assert!(Exponent::finite(f64::NAN).is_err());
        assert!(Exponent::from_value(f64::INFINITY).unwrap() == Exponent::Infinity);
    }

    #[test]
    fn norm_values() {
        let v = [3.0f64, -4.0];
        assert_eq!(NormSpec::l1().eval(&v), 7.0);
        assert_eq!(NormSpec::l2().eval(&v), 5.0);
        assert_eq!(NormSpec::linf().eval(&v), 4.0);
        // dual of l1 is linf and vice versa
        assert_eq!(NormSpec::l1().dual_eval(&v), 4.0);
        assert_eq!(NormSpec::linf().dual_eval(&v), 7.0);
    }

    #[test]
    fn dual_argmax_attains_dual_norm() {
        let g = [1.0f64, -2.0, 0.5];
        for q in [1.0, 1.5, 2.0, 4.0] {
            let n = NormSpec::new(Exponent::finite(q).unwrap());
            let u = n.dual_argmax(&g);
            let attained: f64 = u.iter().zip(&g).map(|(a, b)| a * b).sum();
            assert!((n.eval(&u) - 1.0).abs() < 1e-12, "unit ball violated at q={q}");
            assert!((attained - n.dual_eval(&g)).abs() < 1e-12, "q={q}");
        }
        let n = NormSpec::linf();
        let u = n.dual_argmax(&g);
        let attained: f64 = u.iter().zip(&g).map(|(a, b)| a * b).sum();
        assert!((attained - n.dual_eval(&g)).abs() < 1e-12);
        assert!(n.dual_argmax(&[0.0, 0.0]).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn empirical_means() {
        let vals = [3.0f64, 4.0];
        let p2 = empirical_p_mean(&vals, Exponent::finite(2.0).unwrap()).unwrap();
        assert!((p2 - 12.5f64.sqrt()).abs() < 1e-15);
        let pinf = empirical_p_mean(&vals, Exponent::infinity()).unwrap();
        assert_eq!(pinf, 4.0);
        let p1 = empirical_p_mean(&vals, Exponent::finite(1.0).unwrap()).unwrap();
        assert_eq!(p1, 3.5);
        assert!(empirical_p_mean::<f64>(&[], Exponent::infinity()).is_err());
        assert!(empirical_p_mean(&[-1.0f64], Exponent::infinity()).is_err());
    }

    #[test]
    fn f32_instantiation_works() {
        let v = [3.0f32, -4.0];
        assert_eq!(NormSpec::<f32>::l2().eval(&v), 5.0);
    }
}
