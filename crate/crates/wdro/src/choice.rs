//! Discrete-choice probabilities from the robust representative-agent
//! problem. A convex distance generator D and scale η > 0 induce choice
//! probabilities β⁰ = η·∇D(z̄ + α⁰𝟏), where α⁰ solves the normalization
//! Σ_k η·∇_kD(z̄ + α⁰𝟏) = 1. Shipped generators recover the multinomial
//! logit, nested logit, and generalized extreme value families, each with an
//! independent closed form for cross-checking the root-find route.
//!
//! Every exp-family quantity is evaluated in log domain with max
//! subtraction; probabilities are exponentiated last, so mean-utility
//! entries of magnitude ~700 stay finite end to end.

use crate::error::{Error, Result};
use crate::loss::{EvalFn, GradFn};
use crate::numeric::{bisect_increasing, expand_bracket_increasing, logsumexp};
use crate::scalar::{real, Real};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SIMPLEX_TOL: f64 = 1e-9;
/// Coordinates with zero target weight are pinned this far down; exp(·) is a
/// hard zero there and they drop out of the conjugate.
const LOG_FLOOR: f64 = -800.0;

#[derive(Clone)]
enum ChoiceFamily<T> {
    Mnl {
        dim: usize,
    },
    NestedLogit {
        dim: usize,
        nests: Vec<Vec<usize>>,
        taus: Vec<T>,
        /// nest index of each product
        nest_of: Vec<usize>,
    },
    GevCustom {
        dim: usize,
        degree: T,
        d0: EvalFn<T>,
        grad0: GradFn<T>,
    },
}

/// Distance generator plus scale. Construct through the family constructors,
/// which validate parameters (hard errors) and spot-check the convexity and
/// evenness assumptions for custom generators (warnings only).
#[derive(Clone)]
pub struct ChoiceGenerator<T> {
    family: ChoiceFamily<T>,
    eta: T,
    warnings: Vec<String>,
}

impl<T: Real> ChoiceGenerator<T> {
    /// D(u) = Σ_k exp(u_k).
    pub fn mnl(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("choice model needs at least one product".into()));
        }
        Ok(ChoiceGenerator { family: ChoiceFamily::Mnl { dim }, eta: T::one(), warnings: vec![] })
    }

    /// D(u) = Σ_g (Σ_{k∈g} exp(u_k/τ_g))^{τ_g}. The nests must partition
    /// {0..d-1}; dimension is inferred from the partition.
    pub fn nested_logit(nests: Vec<Vec<usize>>, taus: Vec<T>) -> Result<Self> {
        if nests.is_empty() {
            return Err(Error::Domain("nested logit needs at least one nest".into()));
        }
        if nests.len() != taus.len() {
            return Err(Error::Domain(format!(
                "{} nests but {} nest parameters",
                nests.len(),
                taus.len()
            )));
        }
        for t in &taus {
            if !(*t > T::zero()) || !t.is_finite() {
                return Err(Error::Domain(format!("nest parameters must be positive, got {t}")));
            }
        }
        let dim: usize = nests.iter().map(Vec::len).sum();
        let mut nest_of = vec![usize::MAX; dim];
        for (g, nest) in nests.iter().enumerate() {
            if nest.is_empty() {
                return Err(Error::Domain(format!("nest {} is empty", g + 1)));
            }
            for &k in nest {
                if k >= dim {
                    return Err(Error::Domain(format!(
                        "nest {} references product {k}, outside 0..{dim}",
                        g + 1
                    )));
                }
                if nest_of[k] != usize::MAX {
                    return Err(Error::Domain(format!("product {k} appears in two nests")));
                }
                nest_of[k] = g;
            }
        }
        Ok(ChoiceGenerator {
            family: ChoiceFamily::NestedLogit { dim, nests, taus, nest_of },
            eta: T::one(),
            warnings: vec![],
        })
    }

    /// D(u) = D₀(exp(u₁),…,exp(u_d)) for a user-supplied D₀, positively
    /// homogeneous of the stated degree with gradient `grad0`. Homogeneity is
    /// validated numerically at 10 random points (hard error); convexity of
    /// the composed generator and evenness of D₀ are spot-checked and
    /// reported as warnings.
    pub fn gev_custom(dim: usize, degree: T, d0: EvalFn<T>, grad0: GradFn<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("choice model needs at least one product".into()));
        }
        if !(degree > T::zero()) || !degree.is_finite() {
            return Err(Error::Domain(format!(
                "homogeneity degree must be positive, got {degree}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xD0);
        for _ in 0..10 {
            let y: Vec<T> = (0..dim).map(|_| real::<T>(rng.gen_range(0.5..1.5))).collect();
            let t: T = real(rng.gen_range(0.5..2.0));
            let scaled: Vec<T> = y.iter().map(|v| *v * t).collect();
            let lhs = d0(&scaled);
            let rhs = t.powf(degree) * d0(&y);
            if (lhs - rhs).abs() > real::<T>(1e-8) * (T::one() + rhs.abs()) {
                return Err(Error::Domain(format!(
                    "base function is not homogeneous of degree {degree}: \
                     D0(t·Y) = {lhs} but t^s·D0(Y) = {rhs}"
                )));
            }
        }
        let mut warnings = Vec::new();
        for trial in 0..5 {
            let y: Vec<T> = (0..dim).map(|_| real::<T>(rng.gen_range(0.25..2.0))).collect();
            let neg: Vec<T> = y.iter().map(|v| -*v).collect();
            let (a, b) = (d0(&y), d0(&neg));
            if (a - b).abs() > real::<T>(1e-8) * (T::one() + a.abs()) {
                warnings.push(format!(
                    "evenness spot check {} failed: D0(Y) = {a}, D0(-Y) = {b}",
                    trial + 1
                ));
                break;
            }
        }
        let mut gen = ChoiceGenerator {
            family: ChoiceFamily::GevCustom { dim, degree, d0, grad0 },
            eta: T::one(),
            warnings,
        };
        for trial in 0..5 {
            let u: Vec<T> = (0..dim).map(|_| real::<T>(rng.gen_range(-1.0..1.0))).collect();
            let v: Vec<T> = (0..dim).map(|_| real::<T>(rng.gen_range(-1.0..1.0))).collect();
            let mid: Vec<T> =
                u.iter().zip(&v).map(|(a, b)| (*a + *b) / real::<T>(2.0)).collect();
            let lhs = gen.value(&mid);
            let rhs = (gen.value(&u) + gen.value(&v)) / real::<T>(2.0);
            if lhs > rhs + real::<T>(1e-8) * (T::one() + rhs.abs()) {
                gen.warnings.push(format!(
                    "midpoint convexity spot check {} failed: D(mid) = {lhs} > {rhs}",
                    trial + 1
                ));
                break;
            }
        }
        Ok(gen)
    }

    /// Replaces the scale η (default 1).
    pub fn with_eta(mut self, eta: T) -> Result<Self> {
        if !(eta > T::zero()) || !eta.is_finite() {
            return Err(Error::Domain(format!("scale must be positive, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            ChoiceFamily::Mnl { dim }
            | ChoiceFamily::NestedLogit { dim, .. }
            | ChoiceFamily::GevCustom { dim, .. } => *dim,
        }
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// Assumption spot-check failures recorded at construction, if any.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            ChoiceFamily::Mnl { .. } => "mnl",
            ChoiceFamily::NestedLogit { .. } => "nested-logit",
            ChoiceFamily::GevCustom { .. } => "gev-custom",
        }
    }

    fn check_input(&self, u: &[T]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::Domain(format!(
                "input has dimension {}, generator expects {}",
                u.len(),
                self.dim()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("input must be finite".into()));
        }
        Ok(())
    }

    /// log ∇_k D(u), exactly representable even when exp(u) overflows. For
    /// the custom family the gradient is evaluated at exp(u − max u) and
    /// rescaled through homogeneity of degree s−1.
    pub fn log_grad(&self, u: &[T]) -> Result<Vec<T>> {
        self.check_input(u)?;
        match &self.family {
            ChoiceFamily::Mnl { .. } => Ok(u.to_vec()),
            ChoiceFamily::NestedLogit { nests, taus, nest_of, .. } => {
                let mut lse = vec![T::zero(); nests.len()];
                for (g, nest) in nests.iter().enumerate() {
                    let scaled: Vec<T> = nest.iter().map(|&k| u[k] / taus[g]).collect();
                    lse[g] = logsumexp(&scaled);
                }
                Ok((0..u.len())
                    .map(|k| {
                        let g = nest_of[k];
                        u[k] / taus[g] + (taus[g] - T::one()) * lse[g]
                    })
                    .collect())
            }
            ChoiceFamily::GevCustom { degree, grad0, .. } => {
                let m = u.iter().copied().fold(T::neg_infinity(), T::max);
                let e: Vec<T> = u.iter().map(|x| (*x - m).exp()).collect();
                let g0 = grad0(&e);
                if g0.len() != u.len() {
                    return Err(Error::Domain(format!(
                        "gradient returned {} components for dimension {}",
                        g0.len(),
                        u.len()
                    )));
                }
                let mut out = Vec::with_capacity(u.len());
                for (k, g) in g0.iter().enumerate() {
                    if *g < T::zero() || !g.is_finite() {
                        return Err(Error::Domain(format!(
                            "gradient component {} is {g}; must be finite and nonnegative",
                            k + 1
                        )));
                    }
                    out.push(u[k] + (*degree - T::one()) * m + g.ln());
                }
                Ok(out)
            }
        }
    }

    /// ∇D(u), componentwise nonnegative.
    pub fn generator_grad(&self, u: &[T]) -> Result<Vec<T>> {
        Ok(self.log_grad(u)?.iter().map(|lg| lg.exp()).collect())
    }

    /// D(u) itself; +∞ when exp overflows.
    fn value(&self, u: &[T]) -> T {
        match &self.family {
            ChoiceFamily::Mnl { .. } => logsumexp(u).exp(),
            ChoiceFamily::NestedLogit { nests, taus, .. } => {
                let mut acc = T::zero();
                for (g, nest) in nests.iter().enumerate() {
                    let scaled: Vec<T> = nest.iter().map(|&k| u[k] / taus[g]).collect();
                    acc += (taus[g] * logsumexp(&scaled)).exp();
                }
                acc
            }
            ChoiceFamily::GevCustom { degree, d0, .. } => {
                let m = u.iter().copied().fold(T::neg_infinity(), T::max);
                let e: Vec<T> = u.iter().map(|x| (*x - m).exp()).collect();
                (*degree * m).exp() * d0(&e)
            }
        }
    }
}

/// Root α⁰ of Σ_k η·∇_kD(z̄ + α𝟏) = 1, found by bisection on an expanding
/// bracket of the log-domain residual ln η + ln Σ∇D. The sum is strictly
/// increasing along 𝟏 for the shipped families; if no sign change appears
/// within 200 bracket doublings the generator is flagged as invalid.
pub fn solve_alpha0<T: Real>(gen: &ChoiceGenerator<T>, zbar: &[T]) -> Result<T> {
    gen.check_input(zbar)?;
    let fail = std::cell::RefCell::new(None::<Error>);
    let root = {
        let mut f = |alpha: T| -> T {
            let shifted: Vec<T> = zbar.iter().map(|z| *z + alpha).collect();
            match gen.log_grad(&shifted) {
                Ok(lg) => gen.eta.ln() + logsumexp(&lg),
                Err(e) => {
                    *fail.borrow_mut() = Some(e);
                    T::nan()
                }
            }
        };
        match expand_bracket_increasing(T::zero(), T::one(), 200, &mut f) {
            Ok((lo, hi)) => Some(bisect_increasing(lo, hi, real(1e-13), 300, &mut f)),
            Err(_) => None,
        }
    };
    if let Some(e) = fail.into_inner() {
        return Err(e);
    }
    root.ok_or_else(|| {
        Error::NoRoot(format!(
            "no normalization root for the {} generator within 200 bracket doublings; \
             its gradient sum does not appear to increase along the all-ones direction",
            gen.family_name()
        ))
    })
}

/// β⁰ = η·∇D(z̄ + α⁰𝟏). No final normalization is applied: summing to one
/// (within 1e−10) is evidence the root-find landed, not an assumption.
pub fn choice_probabilities<T: Real>(gen: &ChoiceGenerator<T>, zbar: &[T]) -> Result<Vec<T>> {
    let alpha0 = solve_alpha0(gen, zbar)?;
    let shifted: Vec<T> = zbar.iter().map(|z| *z + alpha0).collect();
    let lg = gen.log_grad(&shifted)?;
    Ok(lg.iter().map(|v| gen.eta * v.exp()).collect())
}

/// softmax(z̄).
pub fn mnl_closed_form<T: Real>(zbar: &[T]) -> Result<Vec<T>> {
    if zbar.is_empty() || zbar.iter().any(|z| !z.is_finite()) {
        return Err(Error::Domain("mean utilities must be a nonempty finite vector".into()));
    }
    let lse = logsumexp(zbar);
    Ok(zbar.iter().map(|z| (*z - lse).exp()).collect())
}

/// Normalized exp(z̄_k/τ_g)·(Σ_{k′∈g} exp(z̄_{k′}/τ_g))^{τ_g−1} over the
/// product's nest g.
pub fn nested_logit_closed_form<T: Real>(
    zbar: &[T],
    nests: &[Vec<usize>],
    taus: &[T],
) -> Result<Vec<T>> {
    let gen = ChoiceGenerator::nested_logit(nests.to_vec(), taus.to_vec())?;
    gen.check_input(zbar)?;
    let w = gen.log_grad(zbar)?;
    let lse = logsumexp(&w);
    Ok(w.iter().map(|v| (*v - lse).exp()).collect())
}

/// Normalized exp(z̄_k)·∂_kD₀(exp(z̄)); the gradient is evaluated at
/// exp(z̄ − max z̄), which leaves the normalized result unchanged for
/// homogeneous D₀.
pub fn gev_closed_form<T: Real>(zbar: &[T], grad0: &GradFn<T>) -> Result<Vec<T>> {
    if zbar.is_empty() || zbar.iter().any(|z| !z.is_finite()) {
        return Err(Error::Domain("mean utilities must be a nonempty finite vector".into()));
    }
    let m = zbar.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = zbar.iter().map(|z| (*z - m).exp()).collect();
    let g0 = grad0(&e);
    if g0.len() != zbar.len() {
        return Err(Error::Domain(format!(
            "gradient returned {} components for dimension {}",
            g0.len(),
            zbar.len()
        )));
    }
    let mut w = Vec::with_capacity(zbar.len());
    for (k, g) in g0.iter().enumerate() {
        if *g < T::zero() || !g.is_finite() {
            return Err(Error::Domain(format!(
                "gradient component {} is {g}; must be finite and nonnegative",
                k + 1
            )));
        }
        w.push(if *g == T::zero() { T::neg_infinity() } else { zbar[k] + g.ln() });
    }
    let lse = logsumexp(&w);
    if !lse.is_finite() {
        return Err(Error::Domain("gradient vanished at the utility vector".into()));
    }
    Ok(w.iter().map(|v| (*v - lse).exp()).collect())
}

/// β⊤z̄ − η·D*(β/η), the representative-agent objective at β. The conjugate
/// D* is closed-form for the MNL generator (Σ y(ln y − 1), with 0·ln 0 = 0)
/// and computed by coordinate ascent on u ↦ u⊤y − D(u) otherwise.
pub fn representative_agent_value<T: Real>(
    beta: &[T],
    zbar: &[T],
    gen: &ChoiceGenerator<T>,
) -> Result<T> {
    gen.check_input(zbar)?;
    if beta.len() != gen.dim() {
        return Err(Error::Domain(format!(
            "probability vector has dimension {}, generator expects {}",
            beta.len(),
            gen.dim()
        )));
    }
    let mut sum = T::zero();
    for b in beta {
        if *b < -real::<T>(SIMPLEX_TOL) || !b.is_finite() {
            return Err(Error::Domain(format!("probabilities must be nonnegative, got {b}")));
        }
        sum += *b;
    }
    if (sum - T::one()).abs() > real(SIMPLEX_TOL) {
        return Err(Error::Domain(format!("probabilities must sum to 1, got {sum}")));
    }
    let y: Vec<T> = beta.iter().map(|b| b.max(T::zero()) / gen.eta).collect();
    let conj = match &gen.family {
        ChoiceFamily::Mnl { .. } => {
            let mut acc = T::zero();
            for v in &y {
                if *v > T::zero() {
                    acc += *v * (v.ln() - T::one());
                }
            }
            acc
        }
        _ => numeric_conjugate(gen, &y),
    };
    let inner: T = beta.iter().zip(zbar).map(|(b, z)| *b * *z).sum();
    Ok(inner - gen.eta * conj)
}

/// sup_u { u⊤y − D(u) } by cyclic coordinate ascent. Each coordinate update
/// solves log ∇_kD(u) = ln y_k by bisection (the left side is increasing in
/// u_k for a convex generator). Zero-weight coordinates are pinned at the
/// log floor and contribute nothing.
fn numeric_conjugate<T: Real>(gen: &ChoiceGenerator<T>, y: &[T]) -> T {
    let floor = real::<T>(LOG_FLOOR);
    let mut u: Vec<T> = y.iter().map(|v| if *v > T::zero() { v.ln() } else { floor }).collect();
    let objective = |u: &[T]| -> T {
        let inner: T = u.iter().zip(y).map(|(a, b)| *a * *b).sum();
        inner - gen.value(u)
    };
    let mut val = objective(&u);
    for _ in 0..200 {
        for k in 0..u.len() {
            if y[k] <= T::zero() {
                continue;
            }
            let target = y[k].ln();
            let mut h = |t: T| -> T {
                let mut probe = u.clone();
                probe[k] = t;
                gen.log_grad(&probe).map(|lg| lg[k]).unwrap_or(T::nan()) - target
            };
            // Bracket the root around the current coordinate.
            let (mut lo, mut hi) = (u[k], u[k]);
            let v0 = h(u[k]);
            if !v0.is_finite() {
                continue;
            }
            let mut step = T::one();
            if v0 < T::zero() {
                while h(hi) < T::zero() && hi < -floor {
                    hi = (hi + step).min(-floor);
                    step += step;
                }
            } else {
                while h(lo) > T::zero() && lo > floor {
                    lo = (lo - step).max(floor);
                    step += step;
                }
            }
            u[k] = bisect_increasing(lo, hi, real(1e-13), 200, &mut h);
        }
        let next = objective(&u);
        if (next - val).abs() <= real::<T>(1e-10) * (T::one() + val.abs()) {
            return next.max(val);
        }
        val = next;
    }
    val
}
