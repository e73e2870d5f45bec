//! Loss specifications and the ground geometry they induce on sample space.
//!
//! Most supported losses are a scalar convex function composed with a linear
//! score:
//!
//! ```text
//!   direct          z ∈ R^d,      score = β·z
//!   regression      z = (x, y),   score = β·x − y
//!   classification  z = (x, y),   score = y · β·x     (y ∈ {−1, +1})
//! ```
//!
//! The composition determines the transport geometry, not just the loss
//! value. Regression perturbs features and response, and the ground metric
//! is ‖Δx‖ + |Δy|, whose dual evaluates to max(‖β‖_*, 1) on the score
//! gradient. Classification treats the label as immutable: transport may
//! move x freely but never flips y, which is encoded here as an infinite
//! ground distance between differently labeled points.
//!
//! Nondifferentiable scalar losses carry their kink sets explicitly, and
//! gradient queries at a kink return an error instead of picking a side.

use crate::error::{Error, Result};
use crate::norm::NormSpec;
use crate::numeric::ln_1p_exp;
use crate::scalar::{real, Real};
use std::fmt;
use std::sync::Arc;

/// Relative tolerance for detecting kink hits and piecewise-max ties.
pub const KINK_TOL: f64 = 1e-12;

/// Tolerance on classification labels (must be ±1).
const LABEL_TOL: f64 = 1e-9;

/// Scalar loss applied to a linear score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnivariateLoss<T> {
    /// t
    Identity,
    /// |t|, kink at 0
    Abs,
    /// max(1 − t, 0), kink at 1
    Hinge,
    /// ln(1 + e^{−t})
    Logistic,
    /// t²; not Lipschitz, quadratic growth
    Square,
    /// slope·t + intercept
    Affine { slope: T, intercept: T },
}

impl<T: Real> UnivariateLoss<T> {
    pub fn eval(&self, t: T) -> T {
        match self {
            UnivariateLoss::Identity => t,
            UnivariateLoss::Abs => t.abs(),
            UnivariateLoss::Hinge => (T::one() - t).max(T::zero()),
            UnivariateLoss::Logistic => ln_1p_exp(-t),
            UnivariateLoss::Square => t * t,
            UnivariateLoss::Affine { slope, intercept } => *slope * t + *intercept,
        }
    }

    /// Scores where the derivative does not exist.
    pub fn kinks(&self) -> &'static [f64] {
        match self {
            UnivariateLoss::Abs => &[0.0],
            UnivariateLoss::Hinge => &[1.0],
            _ => &[],
        }
    }

    fn kink_hit(&self, t: T) -> Option<T> {
        let tol = real::<T>(KINK_TOL) * (T::one() + t.abs());
        self.kinks()
            .iter()
            .map(|k| real::<T>(*k))
            .find(|k| (t - *k).abs() <= tol)
    }

    /// Derivative; errors at a kink.
    pub fn derivative(&self, t: T) -> Result<T> {
        if let Some(k) = self.kink_hit(t) {
            return Err(Error::Kink(format!(
                "{self} is not differentiable at score {k}"
            )));
        }
        Ok(self.one_sided_derivative(t))
    }

    /// A valid subgradient everywhere; at kinks it picks the minimal-norm
    /// element (0 for both |t| at 0 and the hinge at 1).
    pub fn subderivative(&self, t: T) -> T {
        if self.kink_hit(t).is_some() {
            return T::zero();
        }
        self.one_sided_derivative(t)
    }

    fn one_sided_derivative(&self, t: T) -> T {
        match self {
            UnivariateLoss::Identity => T::one(),
            UnivariateLoss::Abs => t.signum(),
            UnivariateLoss::Hinge => {
                if t < T::one() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
            UnivariateLoss::Logistic => -T::one() / (T::one() + t.exp()),
            UnivariateLoss::Square => real::<T>(2.0) * t,
            UnivariateLoss::Affine { slope, .. } => *slope,
        }
    }

    /// Global Lipschitz constant, when one exists.
    pub fn lipschitz(&self) -> Option<T> {
        match self {
            UnivariateLoss::Identity | UnivariateLoss::Abs | UnivariateLoss::Hinge => {
                Some(T::one())
            }
            UnivariateLoss::Logistic => Some(T::one()),
            UnivariateLoss::Square => None,
            UnivariateLoss::Affine { slope, .. } => Some(slope.abs()),
        }
    }

    /// Whether the loss actually grows at its Lipschitz rate in some
    /// direction, i.e. |ℓ'(t)| → L along t → +∞ or t → −∞. True for every
    /// Lipschitz loss shipped here (the hinge and logistic attain it on the
    /// negative side), and what makes the norm-penalty identity exact.
    pub fn asymptotic_slope_attained(&self) -> bool {
        !matches!(self, UnivariateLoss::Square)
    }

    /// Polynomial growth order of the loss (1 for Lipschitz, 2 for square).
    pub fn growth_order(&self) -> T {
        match self {
            UnivariateLoss::Square => real(2.0),
            _ => T::one(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.kinks().is_empty()
    }

    /// Upper bound on |ℓ''| for smooth losses.
    pub fn curvature_bound(&self) -> Option<T> {
        match self {
            UnivariateLoss::Identity | UnivariateLoss::Affine { .. } => Some(T::zero()),
            UnivariateLoss::Logistic => Some(real(0.25)),
            UnivariateLoss::Square => Some(real(2.0)),
            UnivariateLoss::Abs | UnivariateLoss::Hinge => None,
        }
    }

    /// Width of the (sub)derivative range over the line, sup ℓ' − inf ℓ',
    /// when bounded. Caps the gradient variation of kinked losses across any
    /// step, i.e. a Hölder-exponent-0 certificate.
    pub fn slope_span(&self) -> Option<T> {
        match self {
            UnivariateLoss::Identity | UnivariateLoss::Affine { .. } => Some(T::zero()),
            UnivariateLoss::Abs => Some(real(2.0)),
            UnivariateLoss::Hinge | UnivariateLoss::Logistic => Some(T::one()),
            UnivariateLoss::Square => None,
        }
    }
}

impl<T: Real> fmt::Display for UnivariateLoss<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnivariateLoss::Identity => write!(f, "identity"),
            UnivariateLoss::Abs => write!(f, "abs"),
            UnivariateLoss::Hinge => write!(f, "hinge"),
            UnivariateLoss::Logistic => write!(f, "logistic"),
            UnivariateLoss::Square => write!(f, "square"),
            UnivariateLoss::Affine { slope, intercept } => {
                write!(f, "affine({slope},{intercept})")
            }
        }
    }
}

/// How the linear score is wired to the sample vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composition {
    /// z ∈ R^d, score = β·z
    Direct,
    /// z = (x, y), score = β·x − y, metric ‖Δx‖ + |Δy|
    Regression,
    /// z = (x, y) with y ∈ {−1, +1} immutable, score = y·β·x
    Classification,
}

/// One branch of a piecewise-max loss: ℓ_m(β_m · z).
#[derive(Debug, Clone)]
pub struct Piece<T> {
    pub uni: UnivariateLoss<T>,
    pub beta: Vec<T>,
}

pub type EvalFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type GradFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// User-supplied smooth loss with callable value and gradient.
#[derive(Clone)]
pub struct CustomLoss<T> {
    pub dim: usize,
    pub eval: EvalFn<T>,
    pub grad: GradFn<T>,
    /// Declared growth envelope; required before dual evaluation can certify
    /// a finite worst case.
    pub growth: Option<GrowthBound<T>>,
}

impl<T: fmt::Debug> fmt::Debug for CustomLoss<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLoss")
            .field("dim", &self.dim)
            .field("growth", &self.growth)
            .finish_non_exhaustive()
    }
}

/// Declared growth envelope loss(z) ≤ c·(‖z − anchor‖ + 1)^order.
#[derive(Debug, Clone)]
pub struct GrowthBound<T> {
    pub c: T,
    pub order: T,
    pub anchor: Vec<T>,
}

#[derive(Debug, Clone)]
enum Family<T> {
    Composed {
        comp: Composition,
        uni: UnivariateLoss<T>,
        beta: Vec<T>,
    },
    PiecewiseMax(Vec<Piece<T>>),
    SmoothCustom(CustomLoss<T>),
}

/// A loss family instance: what to evaluate, where it is differentiable,
/// and which transport geometry its samples live in.
#[derive(Debug, Clone)]
pub struct LossSpec<T> {
    family: Family<T>,
}

fn check_beta<T: Real>(beta: &[T]) -> Result<()> {
    if beta.is_empty() {
        return Err(Error::Domain("empty parameter vector".into()));
    }
    if let Some(b) = beta.iter().find(|b| !b.is_finite()) {
        return Err(Error::Domain(format!("non-finite parameter entry {b}")));
    }
    Ok(())
}

impl<T: Real> LossSpec<T> {
    /// β·z.
    pub fn linear(beta: Vec<T>) -> Result<Self> {
        Self::composed(Composition::Direct, UnivariateLoss::Identity, beta)
    }

    /// ℓ(β·z) on unlabeled data.
    pub fn unsupervised(uni: UnivariateLoss<T>, beta: Vec<T>) -> Result<Self> {
        Self::composed(Composition::Direct, uni, beta)
    }

    /// ℓ(β·x − y).
    pub fn regression(uni: UnivariateLoss<T>, beta: Vec<T>) -> Result<Self> {
        Self::composed(Composition::Regression, uni, beta)
    }

    /// ℓ(y·β·x) with immutable labels.
    pub fn classification(uni: UnivariateLoss<T>, beta: Vec<T>) -> Result<Self> {
        Self::composed(Composition::Classification, uni, beta)
    }

    /// (β·z)², the canonical smooth non-Lipschitz family.
    pub fn smooth_quadratic(beta: Vec<T>) -> Result<Self> {
        Self::composed(Composition::Direct, UnivariateLoss::Square, beta)
    }

    pub fn composed(comp: Composition, uni: UnivariateLoss<T>, beta: Vec<T>) -> Result<Self> {
        check_beta(&beta)?;
        Ok(LossSpec { family: Family::Composed { comp, uni, beta } })
    }

    /// max_m ℓ_m(β_m · z). Every piece must be Lipschitz.
    pub fn piecewise_max(pieces: Vec<Piece<T>>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Domain("piecewise-max needs at least one piece".into()));
        }
        let d = pieces[0].beta.len();
        for (m, p) in pieces.iter().enumerate() {
            check_beta(&p.beta)?;
            if p.beta.len() != d {
                return Err(Error::Domain(format!(
                    "piece {m} has dimension {}, expected {d}",
                    p.beta.len()
                )));
            }
            if p.uni.lipschitz().is_none() {
                return Err(Error::Domain(format!(
                    "piece {m} ({}) is not Lipschitz",
                    p.uni
                )));
            }
        }
        Ok(LossSpec { family: Family::PiecewiseMax(pieces) })
    }

    pub fn smooth_custom(
        dim: usize,
        eval: EvalFn<T>,
        grad: GradFn<T>,
        growth: Option<GrowthBound<T>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("custom loss needs dimension >= 1".into()));
        }
        Ok(LossSpec { family: Family::SmoothCustom(CustomLoss { dim, eval, grad, growth }) })
    }

    /// Expected length of sample vectors for this family.
    pub fn dim_z(&self) -> usize {
        match &self.family {
            Family::Composed { comp: Composition::Direct, beta, .. } => beta.len(),
            Family::Composed { beta, .. } => beta.len() + 1,
            Family::PiecewiseMax(pieces) => pieces[0].beta.len(),
            Family::SmoothCustom(c) => c.dim,
        }
    }

    pub fn composition(&self) -> Option<Composition> {
        match &self.family {
            Family::Composed { comp, .. } => Some(*comp),
            _ => None,
        }
    }

    pub fn univariate(&self) -> Option<&UnivariateLoss<T>> {
        match &self.family {
            Family::Composed { uni, .. } => Some(uni),
            _ => None,
        }
    }

    pub fn beta(&self) -> Option<&[T]> {
        match &self.family {
            Family::Composed { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn pieces(&self) -> Option<&[Piece<T>]> {
        match &self.family {
            Family::PiecewiseMax(p) => Some(p),
            _ => None,
        }
    }

    pub fn custom(&self) -> Option<&CustomLoss<T>> {
        match &self.family {
            Family::SmoothCustom(c) => Some(c),
            _ => None,
        }
    }

    fn check_dim(&self, z: &[T]) -> Result<()> {
        if z.len() != self.dim_z() {
            return Err(Error::Domain(format!(
                "sample has dimension {}, loss expects {}",
                z.len(),
                self.dim_z()
            )));
        }
        Ok(())
    }

    /// Linear score of a composed family at z.
    pub fn score(&self, z: &[T]) -> Result<T> {
        self.check_dim(z)?;
        match &self.family {
            Family::Composed { comp, beta, .. } => {
                let d = beta.len();
                match comp {
                    Composition::Direct => Ok(dot(beta, z)),
                    Composition::Regression => Ok(dot(beta, &z[..d]) - z[d]),
                    Composition::Classification => {
                        let y = check_label(z[d])?;
                        Ok(y * dot(beta, &z[..d]))
                    }
                }
            }
            _ => Err(Error::Domain("score is defined for composed families only".into())),
        }
    }

    pub fn eval(&self, z: &[T]) -> Result<T> {
        self.check_dim(z)?;
        match &self.family {
            Family::Composed { uni, .. } => Ok(uni.eval(self.score(z)?)),
            Family::PiecewiseMax(pieces) => Ok(pieces
                .iter()
                .map(|p| p.uni.eval(dot(&p.beta, z)))
                .fold(T::neg_infinity(), T::max)),
            Family::SmoothCustom(c) => Ok((c.eval)(z)),
        }
    }

    /// Gradient with respect to the sample. For classification the label
    /// coordinate is reported as 0: it is immutable under the ground metric,
    /// so no transport direction ever uses it.
    pub fn grad_z(&self, z: &[T]) -> Result<Vec<T>> {
        self.check_dim(z)?;
        match &self.family {
            Family::Composed { comp, uni, beta } => {
                let u = self.score(z)?;
                let du = uni.derivative(u)?;
                let d = beta.len();
                match comp {
                    Composition::Direct => Ok(beta.iter().map(|b| du * *b).collect()),
                    Composition::Regression => {
                        let mut g: Vec<T> = beta.iter().map(|b| du * *b).collect();
                        g.push(-du);
                        Ok(g)
                    }
                    Composition::Classification => {
                        let y = check_label(z[d])?;
                        let mut g: Vec<T> = beta.iter().map(|b| du * y * *b).collect();
                        g.push(T::zero());
                        Ok(g)
                    }
                }
            }
            Family::PiecewiseMax(pieces) => {
                let (m, tied) = argmax_piece(pieces, z);
                if tied {
                    return Err(Error::Kink(
                        "piecewise-max gradient at a tie between pieces".into(),
                    ));
                }
                let p = &pieces[m];
                let du = p.uni.derivative(dot(&p.beta, z))?;
                Ok(p.beta.iter().map(|b| du * *b).collect())
            }
            Family::SmoothCustom(c) => Ok((c.grad)(z)),
        }
    }

    /// Dual-norm gain of the score per unit ground distance: how fast the
    /// score can move when the sample moves one unit.
    pub fn gain_rate(&self, norm: &NormSpec<T>) -> Option<T> {
        match &self.family {
            Family::Composed { comp, beta, .. } => {
                let b = norm.dual_eval(beta);
                Some(match comp {
                    Composition::Direct | Composition::Classification => b,
                    Composition::Regression => b.max(T::one()),
                })
            }
            _ => None,
        }
    }

    /// Lipschitz constant of z ↦ loss(z) under the family's ground metric.
    pub fn lipschitz_wrt(&self, norm: &NormSpec<T>) -> Option<T> {
        match &self.family {
            Family::Composed { uni, .. } => {
                Some(uni.lipschitz()? * self.gain_rate(norm).expect("composed"))
            }
            Family::PiecewiseMax(pieces) => Some(
                pieces
                    .iter()
                    .map(|p| p.uni.lipschitz().expect("validated") * norm.dual_eval(&p.beta))
                    .fold(T::zero(), T::max),
            ),
            Family::SmoothCustom(_) => None,
        }
    }

    /// Whether the Lipschitz rate is asymptotically attained, i.e. the
    /// worst-case-equals-penalty identity is exact for this family.
    pub fn asymptotic_slope_attained(&self) -> bool {
        match &self.family {
            Family::Composed { uni, .. } => {
                uni.lipschitz().is_some() && uni.asymptotic_slope_attained()
            }
            Family::PiecewiseMax(_) => true,
            Family::SmoothCustom(_) => false,
        }
    }

    /// Polynomial growth order of the loss, when known.
    pub fn growth_order(&self) -> Option<T> {
        match &self.family {
            Family::Composed { uni, .. } => Some(uni.growth_order()),
            Family::PiecewiseMax(_) => Some(T::one()),
            Family::SmoothCustom(c) => c.growth.as_ref().map(|g| g.order),
        }
    }

    /// Ground distance between two samples under this family's geometry.
    /// Infinite for classification points with different labels.
    pub fn ground_distance(&self, norm: &NormSpec<T>, a: &[T], b: &[T]) -> T {
        match self.composition() {
            Some(Composition::Regression) => {
                let d = a.len() - 1;
                let dx: Vec<T> = (0..d).map(|k| a[k] - b[k]).collect();
                norm.eval(&dx) + (a[d] - b[d]).abs()
            }
            Some(Composition::Classification) => {
                let d = a.len() - 1;
                if (a[d] - b[d]).abs() > real(LABEL_TOL) {
                    return T::infinity();
                }
                let dx: Vec<T> = (0..d).map(|k| a[k] - b[k]).collect();
                norm.eval(&dx)
            }
            _ => {
                let dz: Vec<T> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
                norm.eval(&dz)
            }
        }
    }

    /// Dual ground norm of a sample-space gradient.
    pub fn grad_dual_norm(&self, norm: &NormSpec<T>, g: &[T]) -> T {
        match self.composition() {
            Some(Composition::Regression) => {
                let d = g.len() - 1;
                norm.dual_eval(&g[..d]).max(g[d].abs())
            }
            Some(Composition::Classification) => {
                let d = g.len() - 1;
                norm.dual_eval(&g[..d])
            }
            _ => norm.dual_eval(g),
        }
    }

    /// Dual ground norm of the gradient at z; errors at kinks.
    pub fn grad_norm_at(&self, norm: &NormSpec<T>, z: &[T]) -> Result<T> {
        let g = self.grad_z(z)?;
        Ok(self.grad_dual_norm(norm, &g))
    }

    /// Unit-ground-norm directions worth probing when displacing a sample.
    /// For composed families these are exactly the steepest score movers;
    /// for custom losses the anchor-gradient direction with a coordinate
    /// fallback.
    pub fn displacement_directions(&self, norm: &NormSpec<T>, anchor: &[T]) -> Vec<Vec<T>> {
        fn push_signed<T: Real>(dirs: &mut Vec<Vec<T>>, v: Vec<T>) {
            if v.iter().any(|x| *x != T::zero()) {
                let neg: Vec<T> = v.iter().map(|x| -*x).collect();
                dirs.push(v);
                dirs.push(neg);
            }
        }
        let mut dirs: Vec<Vec<T>> = Vec::new();
        match &self.family {
            Family::Composed { comp, beta, .. } => match comp {
                Composition::Direct => push_signed(&mut dirs, norm.dual_argmax(beta)),
                Composition::Regression => {
                    let mut dx = norm.dual_argmax(beta);
                    dx.push(T::zero());
                    push_signed(&mut dirs, dx);
                    let mut dy = vec![T::zero(); beta.len() + 1];
                    dy[beta.len()] = T::one();
                    push_signed(&mut dirs, dy);
                }
                Composition::Classification => {
                    let mut dx = norm.dual_argmax(beta);
                    dx.push(T::zero());
                    push_signed(&mut dirs, dx);
                }
            },
            Family::PiecewiseMax(pieces) => {
                for p in pieces {
                    push_signed(&mut dirs, norm.dual_argmax(&p.beta));
                }
            }
            Family::SmoothCustom(c) => {
                let g = (c.grad)(anchor);
                push_signed(&mut dirs, norm.dual_argmax(&g));
                if dirs.is_empty() {
                    for k in 0..c.dim {
                        let mut e = vec![T::zero(); c.dim];
                        e[k] = T::one();
                        push_signed(&mut dirs, e);
                    }
                }
            }
        }
        dirs
    }

    /// The cheapest point whose score is `score(anchor) + s`, for composed
    /// families. Its ground distance from the anchor is |s| / gain_rate.
    pub fn score_displacement(&self, norm: &NormSpec<T>, anchor: &[T], s: T) -> Vec<T> {
        let Family::Composed { comp, beta, .. } = &self.family else {
            return anchor.to_vec();
        };
        let mut z = anchor.to_vec();
        if s == T::zero() {
            return z;
        }
        let bstar = norm.dual_eval(beta);
        match comp {
            Composition::Direct => {
                if bstar > T::zero() {
                    let u = norm.dual_argmax(beta);
                    let c = s / bstar;
                    for (zk, uk) in z.iter_mut().zip(&u) {
                        *zk += c * *uk;
                    }
                }
            }
            Composition::Regression => {
                let d = beta.len();
                if bstar >= T::one() && bstar > T::zero() {
                    let u = norm.dual_argmax(beta);
                    let c = s / bstar;
                    for k in 0..d {
                        z[k] += c * u[k];
                    }
                } else {
                    z[d] -= s;
                }
            }
            Composition::Classification => {
                let d = beta.len();
                if bstar > T::zero() {
                    let y = anchor[d].signum();
                    let u = norm.dual_argmax(beta);
                    let c = y * s / bstar;
                    for k in 0..d {
                        z[k] += c * u[k];
                    }
                }
            }
        }
        z
    }

    /// Gradient-variation certificate for the family. Smooth compositions
    /// get the Hölder-1 form ‖∇loss(z) − ∇loss(z′)‖_* ≤ sup|ℓ''|·gain²·‖z−z′‖.
    /// Kinked compositions and piecewise maxima get the Hölder-0 fallback:
    /// subgradients live in a dual-norm ball, so their variation is capped by
    /// its diameter regardless of step size.
    pub fn certificate(&self, norm: &NormSpec<T>) -> Option<SmoothnessCertificate<T>> {
        match &self.family {
            Family::Composed { uni, .. } => {
                let gain = self.gain_rate(norm).expect("composed");
                if let Some(b) = uni.curvature_bound() {
                    Some(SmoothnessCertificate {
                        kappa: T::one(),
                        h: HolderBound::Const(b * gain * gain),
                        c: T::zero(),
                        q: real(2.0),
                    })
                } else {
                    let span = uni.slope_span()?;
                    Some(SmoothnessCertificate {
                        kappa: T::zero(),
                        h: HolderBound::Const(span * gain),
                        c: T::zero(),
                        q: real(2.0),
                    })
                }
            }
            Family::PiecewiseMax(_) => {
                let rate = self.lipschitz_wrt(norm)?;
                Some(SmoothnessCertificate {
                    kappa: T::zero(),
                    h: HolderBound::Const(real::<T>(2.0) * rate),
                    c: T::zero(),
                    q: real(2.0),
                })
            }
            Family::SmoothCustom(_) => None,
        }
    }

    /// Short human-readable family tag for reports.
    pub fn family_name(&self) -> String {
        match &self.family {
            Family::Composed { comp, uni, .. } => match (comp, uni) {
                (Composition::Direct, UnivariateLoss::Identity) => "linear".into(),
                (Composition::Direct, UnivariateLoss::Square) => "quadratic".into(),
                (Composition::Direct, u) => format!("{u}-unsupervised"),
                (Composition::Regression, u) => format!("{u}-regression"),
                (Composition::Classification, u) => format!("{u}-classification"),
            },
            Family::PiecewiseMax(_) => "piecewise-max".into(),
            Family::SmoothCustom(_) => "smooth-custom".into(),
        }
    }

    pub fn describe(&self) -> String {
        format!("{}(dim={})", self.family_name(), self.dim_z())
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn check_label<T: Real>(y: T) -> Result<T> {
    if (y - T::one()).abs() <= real(LABEL_TOL) {
        Ok(T::one())
    } else if (y + T::one()).abs() <= real(LABEL_TOL) {
        Ok(-T::one())
    } else {
        Err(Error::Domain(format!("classification label must be +/-1, got {y}")))
    }
}

/// Index of the maximal piece and whether the top two are tied.
fn argmax_piece<T: Real>(pieces: &[Piece<T>], z: &[T]) -> (usize, bool) {
    let mut best = 0usize;
    let mut best_v = T::neg_infinity();
    let mut second = T::neg_infinity();
    for (m, p) in pieces.iter().enumerate() {
        let v = p.uni.eval(dot(&p.beta, z));
        if v > best_v {
            second = best_v;
            best_v = v;
            best = m;
        } else if v > second {
            second = v;
        }
    }
    let tol = real::<T>(KINK_TOL) * (T::one() + best_v.abs());
    (best, pieces.len() > 1 && (best_v - second) <= tol)
}

/// How fast a gradient may vary: ‖∇ℓ(z) − ∇ℓ(z′)‖_* ≤ h(z′)·‖z−z′‖^κ + c·‖z−z′‖^q.
#[derive(Clone)]
pub struct SmoothnessCertificate<T> {
    /// Hölder exponent in [0, 1]. κ = 0 is accepted only by the lower bound.
    pub kappa: T,
    pub h: HolderBound<T>,
    pub c: T,
    pub q: T,
}

#[derive(Clone)]
pub enum HolderBound<T> {
    Const(T),
    Fn(EvalFn<T>),
}

impl<T: Real> SmoothnessCertificate<T> {
    pub fn constant(kappa: T, h: T, c: T, q: T) -> Result<Self> {
        let cert = SmoothnessCertificate { kappa, h: HolderBound::Const(h), c, q };
        cert.validate()?;
        Ok(cert)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= T::zero() && self.kappa <= T::one()) {
            return Err(Error::Domain(format!(
                "Hölder exponent must lie in [0, 1], got {}",
                self.kappa
            )));
        }
        if self.c < T::zero() {
            return Err(Error::Domain(format!("growth constant must be >= 0, got {}", self.c)));
        }
        if !(self.q > T::one()) {
            return Err(Error::Domain(format!("growth exponent must exceed 1, got {}", self.q)));
        }
        Ok(())
    }

    pub fn h_at(&self, z: &[T]) -> T {
        match &self.h {
            HolderBound::Const(h) => *h,
            HolderBound::Fn(f) => f(z),
        }
    }

    /// Spot check of the gradient-variation bound on given point pairs.
    /// Kinked points are skipped; returns the worst violation found.
    pub fn max_violation(
        &self,
        loss: &LossSpec<T>,
        norm: &NormSpec<T>,
        pairs: &[(Vec<T>, Vec<T>)],
    ) -> T {
        let mut worst = T::zero();
        for (a, b) in pairs {
            let (Ok(ga), Ok(gb)) = (loss.grad_z(a), loss.grad_z(b)) else {
                continue;
            };
            let diff: Vec<T> = ga.iter().zip(&gb).map(|(x, y)| *x - *y).collect();
            let lhs = loss.grad_dual_norm(norm, &diff);
            let dist = loss.ground_distance(norm, a, b);
            if !dist.is_finite() {
                continue;
            }
            let rhs = self.h_at(b) * dist.powf(self.kappa) + self.c * dist.powf(self.q);
            worst = worst.max(lhs - rhs);
        }
        worst
    }
}

impl<T: Real> fmt::Debug for SmoothnessCertificate<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = match &self.h {
            HolderBound::Const(h) => format!("{h}"),
            HolderBound::Fn(_) => "<fn>".into(),
        };
        write!(
            f,
            "SmoothnessCertificate {{ kappa: {}, h: {h}, c: {}, q: {} }}",
            self.kappa, self.c, self.q
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_eval_and_grad() {
        let l = LossSpec::linear(vec![1.0, 2.0]).unwrap();
        assert_eq!(l.eval(&[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(l.grad_z(&[3.0, 4.0]).unwrap(), vec![1.0, 2.0]);
        assert!(l.eval(&[1.0]).is_err());
    }

    #[test]
    fn regression_layout() {
        // |β·x − y| at β=(1,0), x=(2,0), y=5 → |2−5| = 3
        let l = LossSpec::regression(UnivariateLoss::Abs, vec![1.0, 0.0]).unwrap();
        let z = [2.0, 0.0, 5.0];
        assert_eq!(l.eval(&z).unwrap(), 3.0);
        let g = l.grad_z(&z).unwrap();
        assert_eq!(g, vec![-1.0, -0.0, 1.0]);
    }

    #[test]
    fn classification_label_rules() {
        let l: LossSpec<f64> = LossSpec::classification(UnivariateLoss::Hinge, vec![2.0]).unwrap();
        assert_eq!(l.eval(&[0.25, -1.0]).unwrap(), 1.5);
        assert!(l.eval(&[0.25, 0.5]).is_err());
        let g = l.grad_z(&[0.25, -1.0]).unwrap();
        // ℓ'(−0.5) = −1, y = −1: ∂x = (−1)(−1)(2) = 2; label coord immutable
        assert_eq!(g, vec![2.0, 0.0]);
        // differing labels are infinitely far apart
        let n = NormSpec::l2();
        assert!(l.ground_distance(&n, &[0.0, 1.0], &[0.0, -1.0]).is_infinite());
        assert_eq!(l.ground_distance(&n, &[3.0, 1.0], &[0.0, 1.0]), 3.0);
    }

    #[test]
    fn kink_errors() {
        let l = LossSpec::unsupervised(UnivariateLoss::Abs, vec![2.0]).unwrap();
        match l.grad_z(&[0.0]) {
            Err(Error::Kink(_)) => {}
            other => panic!("expected kink error, got {other:?}"),
        }
        assert_eq!(l.grad_z(&[1.0]).unwrap(), vec![2.0]);
        let h = LossSpec::classification(UnivariateLoss::Hinge, vec![1.0]).unwrap();
        assert!(matches!(h.grad_z(&[1.0, 1.0]), Err(Error::Kink(_))));
    }

    #[test]
    fn quadratic_gradient() {
        let l = LossSpec::smooth_quadratic(vec![1.0, 0.0]).unwrap();
        assert_eq!(l.eval(&[2.0, 7.0]).unwrap(), 4.0);
        assert_eq!(l.grad_z(&[2.0, 7.0]).unwrap(), vec![4.0, 0.0]);
    }

    #[test]
    fn piecewise_max_and_ties() {
        // |2z| as max(2z, −2z)
        let pieces = vec![
            Piece { uni: UnivariateLoss::Identity, beta: vec![2.0] },
            Piece { uni: UnivariateLoss::Identity, beta: vec![-2.0] },
        ];
        let l = LossSpec::piecewise_max(pieces).unwrap();
        assert_eq!(l.eval(&[-1.5]).unwrap(), 3.0);
        assert_eq!(l.grad_z(&[-1.5]).unwrap(), vec![-2.0]);
        assert!(matches!(l.grad_z(&[0.0]), Err(Error::Kink(_))));
        let sq = vec![Piece { uni: UnivariateLoss::Square, beta: vec![1.0] }];
        assert!(LossSpec::piecewise_max(sq).is_err());
    }

    #[test]
    fn gain_rates() {
        let n = NormSpec::l2();
        let reg = LossSpec::regression(UnivariateLoss::Abs, vec![0.5]).unwrap();
        assert_eq!(reg.gain_rate(&n).unwrap(), 1.0); // max(‖β‖, 1)
        let reg2 = LossSpec::regression(UnivariateLoss::Abs, vec![3.0, 4.0]).unwrap();
        assert_eq!(reg2.gain_rate(&n).unwrap(), 5.0);
        let cls = LossSpec::classification(UnivariateLoss::Hinge, vec![3.0, 4.0]).unwrap();
        assert_eq!(cls.lipschitz_wrt(&n).unwrap(), 5.0);
    }

    #[test]
    fn certificate_spot_check() {
        let l = LossSpec::smooth_quadratic(vec![1.0, -2.0]).unwrap();
        let n = NormSpec::l2();
        let cert = l.certificate(&n).unwrap();
        let pairs = vec![
            (vec![0.0, 0.0], vec![1.0, 1.0]),
            (vec![-3.0, 2.0], vec![0.5, 0.5]),
            (vec![10.0, -4.0], vec![-2.0, 8.0]),
        ];
        let v = cert.max_violation(&l, &n, &pairs);
        assert!(v <= 1e-8, "violation {v}");
    }

    #[test]
    fn score_displacement_reaches_target_score() {
        let n = NormSpec::l2();
        for loss in [
            LossSpec::unsupervised(UnivariateLoss::Abs, vec![1.0, -2.0]).unwrap(),
            LossSpec::regression(UnivariateLoss::Abs, vec![0.25, 0.1]).unwrap(),
            LossSpec::regression(UnivariateLoss::Abs, vec![3.0, -1.0]).unwrap(),
            LossSpec::classification(UnivariateLoss::Logistic, vec![1.0, 1.0]).unwrap(),
        ] {
            let anchor: Vec<f64> = (0..loss.dim_z())
                .map(|k| if k == loss.dim_z() - 1 { 1.0 } else { 0.3 * (k as f64 + 1.0) })
                .collect();
            let u0 = loss.score(&anchor).unwrap();
            let gain = loss.gain_rate(&n).unwrap();
            for s in [-1.7, 0.4, 2.5] {
                let z = loss.score_displacement(&n, &anchor, s);
                let u1 = loss.score(&z).unwrap();
                assert!((u1 - (u0 + s)).abs() < 1e-12, "score moved to {u1}");
                let cost = loss.ground_distance(&n, &z, &anchor);
                assert!((cost - s.abs() / gain).abs() < 1e-12, "cost {cost}");
            }
        }
    }
}
