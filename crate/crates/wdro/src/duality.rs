//! Worst-case expected loss over a Wasserstein ball, computed through its
//! one-dimensional dual: for finite transport order p the worst case equals
//!
//!   min_{λ ≥ 0}  λ·α^p + Σ_i w_i · sup_z [loss(z) − λ·d(z, ẑ_i)^p],
//!
//! a convex function of λ minimized here by derivative-free golden section
//! (the objective is kinked where inner suprema change branch). The order-∞
//! worst case decouples into independent per-sample ball maximizations.
//!
//! For score-composed and piecewise families the inner supremum reduces
//! exactly to one-dimensional ray problems: moving a sample changes the
//! score at most at the family's gain rate per unit ground distance, and a
//! cheapest point achieving any score change exists in closed form. Custom
//! losses fall back to a directional search plus coordinate polish and are
//! flagged when the polish moves the value materially (nonconvex inner
//! landscape ⇒ the reported supremum is a lower bound).

use crate::distribution::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::loss::{LossSpec, UnivariateLoss};
use crate::norm::{Exponent, NormSpec};
use crate::numeric::{bisect_increasing, golden_section_max, golden_section_min, maximize_ray, RayMax};
use crate::scalar::{real, Real};

/// First rung of the inner-sup doubling ladder.
const LADDER_SCALE: f64 = 1e-8;
/// Displacements past this are treated as divergent suprema.
const LADDER_CAP: f64 = 1e12;
/// Polish movements above this mark a sample as nonconvex-suspect.
const POLISH_WARN: f64 = 1e-6;

/// One per-sample inner supremum, reported as the excess over the anchor
/// loss: sup_z [loss(z) − λ·d(z, ẑ)^p] − loss(ẑ). The excess is 0 exactly
/// when staying put is optimal.
#[derive(Debug, Clone, PartialEq)]
pub enum SupOutcome<T> {
    Attained {
        value: T,
        maximizer: Vec<T>,
        /// How much local polish moved the value past the directional
        /// search (exactly 0 for families solved by the exact reduction).
        polish_shift: T,
    },
    /// The supremum is +∞ at this multiplier.
    Unbounded,
}

impl<T: Real> SupOutcome<T> {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, SupOutcome::Unbounded)
    }
}

/// Optimality record for a dual solve.
#[derive(Debug, Clone)]
pub struct SampleSup<T> {
    /// Full supremum value sup_z [loss(z) − λ*·d(z, ẑ_i)^p].
    pub value: T,
    /// Attaining point; `None` marks a supremum only approached at infinity.
    pub maximizer: Option<Vec<T>>,
    pub polish_shift: T,
}

#[derive(Debug, Clone)]
pub struct DualCertificate<T> {
    pub lambda_star: T,
    pub dual_value: T,
    pub per_sample_sup: Vec<SampleSup<T>>,
    /// λ bracket handed to the final golden-section stage.
    pub bracket: (T, T),
    pub iterations: usize,
    /// Growth-premise record: the loss's polynomial growth order (`None`
    /// when unknown for a custom loss) against the transport order used.
    pub growth_order: Option<T>,
    pub transport_order: T,
    /// Samples whose inner search needed a local polish larger than 1e-6.
    pub polish_warnings: usize,
}

impl<T: Real> DualCertificate<T> {
    /// λ*·α^p + Σ w_i·sup_i recomputed from the stored pieces.
    pub fn reassemble(&self, alpha: T, weights: &[T]) -> T {
        let mut acc = self.lambda_star * alpha.powf(self.transport_order);
        for (s, w) in self.per_sample_sup.iter().zip(weights) {
            acc += *w * s.value;
        }
        acc
    }
}

fn require_finite_order<T: Real>(p: Exponent<T>) -> Result<T> {
    match p {
        Exponent::Finite(pv) => Ok(pv),
        Exponent::Infinity => Err(Error::Domain(
            "order-infinity worst case decouples per sample; use the ball path instead of the multiplier dual".into(),
        )),
    }
}

fn check_growth_premise<T: Real>(loss: &LossSpec<T>, pv: T) -> Result<Option<T>> {
    let order = loss.growth_order();
    if let Some(q) = order {
        if pv < q {
            return Err(Error::Unbounded(format!(
                "worst-case loss is infinite: transport order {pv} cannot control a growth-order-{q} loss"
            )));
        }
    }
    Ok(order)
}

/// sup_z [loss(z) − λ·d(z, anchor)^p] − loss(anchor).
///
/// Exact (via the univariate score reduction) for composed and piecewise
/// families; directional search + coordinate polish for custom losses. A
/// supremum of +∞ is reported as `SupOutcome::Unbounded`, never as a large
/// number. Requesting an order below the loss's growth order is an error:
/// no multiplier makes such a supremum finite.
pub fn inner_sup<T: Real>(
    loss: &LossSpec<T>,
    anchor: &[T],
    lambda: T,
    p: Exponent<T>,
    norm: &NormSpec<T>,
) -> Result<SupOutcome<T>> {
    if lambda < T::zero() || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "multiplier must be finite and nonnegative, got {lambda}"
        )));
    }
    if anchor.len() != loss.dim_z() {
        return Err(Error::Domain(format!(
            "anchor has dimension {}, loss expects {}",
            anchor.len(),
            loss.dim_z()
        )));
    }
    let pv = require_finite_order(p)?;
    check_growth_premise(loss, pv)?;
    let base = loss.eval(anchor)?;

    if loss.composition().is_some() {
        let uni = *loss.univariate().expect("composed");
        let gain = loss.gain_rate(norm).expect("composed");
        let u0 = loss.score(anchor)?;
        if gain == T::zero() {
            // score is immovable; the loss is constant under displacement
            return Ok(SupOutcome::Attained {
                value: T::zero(),
                maximizer: anchor.to_vec(),
                polish_shift: T::zero(),
            });
        }
        let Some((plain, t, sigma)) = score_ray_sup(uni, u0, gain, lambda, pv) else {
            return Ok(SupOutcome::Unbounded);
        };
        let maximizer = loss.score_displacement(norm, anchor, sigma * t * gain);
        return Ok(SupOutcome::Attained {
            value: (plain - base).max(T::zero()),
            maximizer,
            polish_shift: T::zero(),
        });
    }

    if let Some(pieces) = loss.pieces() {
        let mut best: Option<(T, usize, T, T)> = None; // (plain, piece, t, sigma)
        for (m, piece) in pieces.iter().enumerate() {
            let gain = norm.dual_eval(&piece.beta);
            let u0 = dot(&piece.beta, anchor);
            if gain == T::zero() {
                let v = piece.uni.eval(u0);
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, m, T::zero(), T::one()));
                }
                continue;
            }
            let Some((plain, t, sigma)) = score_ray_sup(piece.uni, u0, gain, lambda, pv) else {
                return Ok(SupOutcome::Unbounded);
            };
            if best.as_ref().is_none_or(|b| plain > b.0) {
                best = Some((plain, m, t, sigma));
            }
        }
        let (plain, m, t, sigma) = best.expect("piecewise families are nonempty");
        let dir = norm.dual_argmax(&pieces[m].beta);
        let maximizer: Vec<T> = anchor
            .iter()
            .zip(dir.iter().chain(std::iter::repeat(&T::zero())))
            .map(|(a, d)| *a + sigma * t * *d)
            .collect();
        return Ok(SupOutcome::Attained {
            value: (plain - base).max(T::zero()),
            maximizer,
            polish_shift: T::zero(),
        });
    }

    custom_inner_sup(loss, anchor, lambda, pv, norm, base)
}

/// sup over one score ray pair: max over σ ∈ {±1}, t ≥ 0 of
/// uni(u0 + σ·t·gain) − λ·t^p. Returns None on divergence.
///
/// Solved by structure rather than by ladder search — a geometric ladder
/// can drop a maximum whose positive window falls between two rungs. At
/// order 1 the ray objective is convex in t, so its supremum is the anchor
/// value unless a terminal score slope outruns the multiplier. At higher
/// orders, piecewise-linear scores enumerate kink crossings plus one
/// stationary point per linear piece (the objective is concave between
/// kinks), the squared score solves its stationary condition directly, and
/// the logistic score scans its bounded stationary region, polishing every
/// crest.
fn score_ray_sup<T: Real>(
    uni: UnivariateLoss<T>,
    u0: T,
    gain: T,
    lambda: T,
    pv: T,
) -> Option<(T, T, T)> {
    let mut best = (uni.eval(u0), T::zero(), T::one());

    if pv == T::one() {
        let (lo, hi) = terminal_slopes(&uni);
        if gain * hi > lambda || -(gain * lo) > lambda {
            return None;
        }
        return Some(best);
    }

    for sigma in [T::one(), -T::one()] {
        let cands = match uni {
            UnivariateLoss::Logistic => logistic_ray_candidates(u0, gain, lambda, pv, sigma)?,
            UnivariateLoss::Square => square_ray_candidates(u0, gain, lambda, pv, sigma)?,
            _ => linear_ray_candidates(&uni, u0, gain, lambda, pv, sigma)?,
        };
        for t in cands {
            let v = uni.eval(u0 + sigma * t * gain) - lambda * t.powf(pv);
            if v > best.0 {
                best = (v, t, sigma);
            }
        }
    }
    Some(best)
}

/// Terminal derivative of the score loss toward −∞ and +∞.
fn terminal_slopes<T: Real>(uni: &UnivariateLoss<T>) -> (T, T) {
    match uni {
        UnivariateLoss::Identity => (T::one(), T::one()),
        UnivariateLoss::Abs => (-T::one(), T::one()),
        UnivariateLoss::Hinge | UnivariateLoss::Logistic => (-T::one(), T::zero()),
        UnivariateLoss::Square => (T::neg_infinity(), T::infinity()),
        UnivariateLoss::Affine { slope, .. } => (*slope, *slope),
    }
}

/// Breakpoints (ascending) and per-piece slopes of a piecewise-linear
/// score loss.
fn linear_pieces<T: Real>(uni: &UnivariateLoss<T>) -> (Vec<T>, Vec<T>) {
    match uni {
        UnivariateLoss::Identity => (vec![], vec![T::one()]),
        UnivariateLoss::Affine { slope, .. } => (vec![], vec![*slope]),
        UnivariateLoss::Abs => (vec![T::zero()], vec![-T::one(), T::one()]),
        UnivariateLoss::Hinge => (vec![T::one()], vec![-T::one(), T::zero()]),
        _ => unreachable!("not piecewise linear"),
    }
}

/// Candidate maximizers of uni(u0 + σtg) − λt^p for a piecewise-linear uni
/// at p > 1: t = 0, every kink crossing, and each piece's interior
/// stationary point. Exact: between kinks the objective is concave.
fn linear_ray_candidates<T: Real>(
    uni: &UnivariateLoss<T>,
    u0: T,
    gain: T,
    lambda: T,
    pv: T,
    sigma: T,
) -> Option<Vec<T>> {
    let (breaks, _) = linear_pieces(uni);
    let mut bounds = vec![T::zero()];
    for b in breaks {
        let t = (b - u0) / (sigma * gain);
        if t > T::zero() && t.is_finite() {
            bounds.push(t);
        }
    }
    bounds.sort_by(|a, b| a.partial_cmp(b).expect("finite kink times"));
    let mut cands = bounds.clone();
    for (k, lo) in bounds.iter().enumerate() {
        let hi = bounds.get(k + 1).copied();
        let probe = match hi {
            Some(h) => (*lo + h) / real(2.0),
            None => *lo + T::one(),
        };
        let r = sigma * gain * uni.subderivative(u0 + sigma * probe * gain);
        if r <= T::zero() {
            continue;
        }
        if lambda == T::zero() {
            hi?;
            continue; // interior rise peaks at the next kink, already listed
        }
        let t_hat = (r / (lambda * pv)).powf((pv - T::one()).recip());
        if t_hat > *lo && hi.is_none_or(|h| t_hat < h) {
            cands.push(t_hat);
        }
    }
    Some(cands)
}

/// Candidate maximizers for the squared score at p ≥ 2 (the growth premise
/// rejects smaller orders upstream).
fn square_ray_candidates<T: Real>(
    u0: T,
    gain: T,
    lambda: T,
    pv: T,
    sigma: T,
) -> Option<Vec<T>> {
    let two = real::<T>(2.0);
    if lambda == T::zero() || pv < two {
        return None;
    }
    if pv == two {
        let a = gain * gain - lambda;
        if a > T::zero() {
            return None;
        }
        if a == T::zero() {
            // Penalty and loss curvature cancel; only the linear term is left.
            return if sigma * u0 > T::zero() { None } else { Some(vec![T::zero()]) };
        }
        let t_hat = sigma * gain * u0 / (lambda - gain * gain);
        let mut cands = vec![T::zero()];
        if t_hat > T::zero() {
            cands.push(t_hat);
        }
        return Some(cands);
    }
    // Above order 2 the derivative 2g²t + 2σg·u0 − λp·t^{p−1} rises to a
    // single crest and then falls; the down-crossing past the crest is the
    // only interior maximum.
    let phi =
        |t: T| two * gain * gain * t + two * sigma * gain * u0 - lambda * pv * t.powf(pv - T::one());
    let t_m = (two * gain * gain / (lambda * pv * (pv - T::one()))).powf((pv - two).recip());
    if !(phi(t_m) > T::zero()) {
        return Some(vec![T::zero()]);
    }
    let mut hi = t_m.max(T::min_positive_value());
    for _ in 0..200 {
        hi *= two;
        if phi(hi) < T::zero() {
            break;
        }
    }
    let root = bisect_increasing(t_m, hi, T::zero(), 200, |t| -phi(t));
    Some(vec![T::zero(), root])
}

/// Rungs of the dense scan used for the logistic score.
const RAY_SCAN_RUNGS: usize = 256;

/// Candidate maximizers for the logistic score at p > 1. The increasing
/// direction only lowers the loss; along the decreasing direction every
/// stationary point lies in [0, (g/(λp))^{1/(p−1)}] — past it the penalty
/// slope exceeds the score slope bound g — so that interval is scanned on
/// mixed geometric/linear rungs with a golden polish around every crest.
fn logistic_ray_candidates<T: Real>(
    u0: T,
    gain: T,
    lambda: T,
    pv: T,
    sigma: T,
) -> Option<Vec<T>> {
    if sigma > T::zero() {
        return Some(vec![T::zero()]);
    }
    if lambda == T::zero() {
        return None;
    }
    let t_stop = (gain / (lambda * pv)).powf((pv - T::one()).recip());
    let f = |t: T| UnivariateLoss::Logistic.eval(u0 + sigma * t * gain) - lambda * t.powf(pv);
    let mut ts: Vec<T> = vec![T::zero()];
    let mut rung = real::<T>(LADDER_SCALE);
    while rung < t_stop {
        ts.push(rung);
        rung *= real(2.0);
    }
    let step = t_stop / real(RAY_SCAN_RUNGS as f64);
    for k in 1..=RAY_SCAN_RUNGS {
        ts.push(step * real(k as f64));
    }
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite rungs"));
    ts.dedup();
    let vs: Vec<T> = ts.iter().map(|t| f(*t)).collect();
    let m = ts.len();
    let mut cands = vec![T::zero()];
    for k in 0..m {
        let crest = (k == 0 || vs[k] >= vs[k - 1]) && (k + 1 == m || vs[k] >= vs[k + 1]);
        if !crest {
            continue;
        }
        let lo = if k == 0 { T::zero() } else { ts[k - 1] };
        let hi = if k + 1 < m { ts[k + 1] } else { t_stop };
        let tol = real::<T>(1e-12) * (T::one() + hi);
        let (t_star, _, _) = golden_section_max(lo, hi, tol, 200, &f);
        cands.push(ts[k]);
        cands.push(t_star);
    }
    Some(cands)
}

fn custom_inner_sup<T: Real>(
    loss: &LossSpec<T>,
    anchor: &[T],
    lambda: T,
    pv: T,
    norm: &NormSpec<T>,
    base: T,
) -> Result<SupOutcome<T>> {
    let scale = real::<T>(LADDER_SCALE);
    let cap = real::<T>(LADDER_CAP);
    let mut best_v = base;
    let mut best_z = anchor.to_vec();
    for dir in loss.displacement_directions(norm, anchor) {
        let ray = |t: T| {
            let z: Vec<T> = anchor.iter().zip(&dir).map(|(a, d)| *a + t * *d).collect();
            loss.eval(&z).unwrap_or(T::neg_infinity()) - lambda * t.powf(pv)
        };
        match maximize_ray(scale, cap, ray) {
            RayMax::Diverging => return Ok(SupOutcome::Unbounded),
            RayMax::Attained { t, value } => {
                if !value.is_finite() && value > T::zero() {
                    return Ok(SupOutcome::Unbounded);
                }
                if value > best_v {
                    best_v = value;
                    best_z = anchor.iter().zip(&dir).map(|(a, d)| *a + t * *d).collect();
                }
            }
        }
    }
    let ray_value = best_v;

    // Coordinate polish around the directional winner.
    let objective = |z: &[T]| -> T {
        let d: Vec<T> = z.iter().zip(anchor).map(|(a, b)| *a - *b).collect();
        loss.eval(z).unwrap_or(T::neg_infinity()) - lambda * norm.eval(&d).powf(pv)
    };
    for _ in 0..20 {
        let before = best_v;
        for k in 0..best_z.len() {
            let radius = {
                let d: Vec<T> = best_z.iter().zip(anchor).map(|(a, b)| *a - *b).collect();
                norm.eval(&d)
            };
            let w = (T::one() + radius) * real(2.0);
            let zk = best_z[k];
            let mut probe = best_z.clone();
            let (xk, vk, _) = golden_section_max(zk - w, zk + w, real::<T>(1e-10) * w, 200, |x| {
                probe[k] = x;
                objective(&probe)
            });
            if vk > best_v {
                best_v = vk;
                best_z[k] = xk;
            }
        }
        if best_v - before <= real::<T>(1e-12) * (T::one() + best_v.abs()) {
            break;
        }
    }
    Ok(SupOutcome::Attained {
        value: (best_v - base).max(T::zero()),
        maximizer: best_z,
        polish_shift: best_v - ray_value,
    })
}

/// The dual objective λ ↦ λ·α^p + Σ w_i·sup_i at a fixed multiplier,
/// returning +∞ when some sample's supremum is unbounded there. Convex in λ.
pub fn dual_objective<T: Real>(
    loss: &LossSpec<T>,
    dist: &EmpiricalDistribution<T>,
    p: Exponent<T>,
    alpha: T,
    norm: &NormSpec<T>,
    lambda: T,
) -> Result<T> {
    let pv = require_finite_order(p)?;
    let mut acc = lambda * alpha.powf(pv);
    for i in 0..dist.len() {
        let z = dist.point(i);
        match inner_sup(loss, z, lambda, p, norm)? {
            SupOutcome::Unbounded => return Ok(T::infinity()),
            SupOutcome::Attained { value, .. } => {
                acc += dist.weight(i) * (value + loss.eval(z)?);
            }
        }
    }
    Ok(acc)
}

/// Smallest multiplier at which every inner supremum is finite: the
/// Lipschitz rate for order-1 transport, the score-squared coefficient for
/// quadratic losses at order 2, zero once the order strictly dominates the
/// growth.
pub fn finiteness_threshold<T: Real>(loss: &LossSpec<T>, pv: T, norm: &NormSpec<T>) -> T {
    if let Some(q) = loss.growth_order() {
        if pv > q {
            return T::zero();
        }
    }
    if pv == T::one() {
        if let Some(l) = loss.lipschitz_wrt(norm) {
            return l;
        }
    }
    if let (Some(UnivariateLoss::Square), Some(gain)) =
        (loss.univariate().copied(), loss.gain_rate(norm))
    {
        if pv == real(2.0) {
            return gain * gain;
        }
    }
    T::zero()
}

fn check_instance<T: Real>(
    loss: &LossSpec<T>,
    dist: &EmpiricalDistribution<T>,
    alpha: T,
) -> Result<()> {
    if dist.dim() != loss.dim_z() {
        return Err(Error::Domain(format!(
            "distribution dimension {} does not match loss dimension {}",
            dist.dim(),
            loss.dim_z()
        )));
    }
    if alpha < T::zero() || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "ball radius must be finite and nonnegative, got {alpha}"
        )));
    }
    Ok(())
}

fn erm<T: Real>(loss: &LossSpec<T>, dist: &EmpiricalDistribution<T>) -> Result<T> {
    dist.try_expectation(|z| loss.eval(z))
}

/// Exact worst-case expected loss over the radius-α, order-p ball (p < ∞),
/// with the optimal multiplier and per-sample maximizers as certificate.
pub fn worst_case_dual<T: Real>(
    loss: &LossSpec<T>,
    dist: &EmpiricalDistribution<T>,
    p: Exponent<T>,
    alpha: T,
    norm: &NormSpec<T>,
) -> Result<DualCertificate<T>> {
    let pv = require_finite_order(p)?;
    check_instance(loss, dist, alpha)?;
    let growth = check_growth_premise(loss, pv)?;
    let threshold = finiteness_threshold(loss, pv, norm);

    // Zero radius: the ball is {P_n}; any multiplier at or above the
    // finiteness threshold is optimal, and the value is the plain ERM.
    if alpha == T::zero() {
        let mut sups = Vec::with_capacity(dist.len());
        for i in 0..dist.len() {
            sups.push(SampleSup {
                value: loss.eval(dist.point(i))?,
                maximizer: Some(dist.point(i).to_vec()),
                polish_shift: T::zero(),
            });
        }
        return Ok(DualCertificate {
            lambda_star: threshold,
            dual_value: erm(loss, dist)?,
            per_sample_sup: sups,
            bracket: (threshold, threshold),
            iterations: 0,
            growth_order: growth,
            transport_order: pv,
            polish_warnings: 0,
        });
    }

    let objective = |lam: T| -> Result<T> { dual_objective(loss, dist, p, alpha, norm, lam) };

    // Bracket the minimizer. Lipschitz losses at order 1 are finite exactly
    // above their rate, so [0, 2·rate] brackets the optimum. Otherwise walk
    // up to a finite multiplier, then double until the objective rises.
    let lipschitz_unit = pv == T::one() && loss.lipschitz_wrt(norm).is_some();
    let hi = if lipschitz_unit {
        threshold * real(2.0)
    } else {
        let mut probe = if threshold > T::zero() {
            threshold * real(2.0)
        } else {
            T::one()
        };
        let mut v = objective(probe)?;
        let mut tries = 0;
        while !v.is_finite() {
            tries += 1;
            if tries > 80 {
                return Err(Error::Unbounded(
                    "dual objective is infinite at every multiplier tried".into(),
                ));
            }
            probe *= real(2.0);
            v = objective(probe)?;
        }
        let mut hi = probe;
        let mut v_hi = v;
        for _ in 0..80 {
            let next = hi * real(2.0);
            let v_next = objective(next)?;
            if v_next >= v_hi {
                break;
            }
            hi = next;
            v_hi = v_next;
        }
        hi * real(2.0)
    };

    if hi == T::zero() {
        // Constant loss (zero gain everywhere): the dual is flat in λ.
        let value = erm(loss, dist)?;
        let sups = collect_sups(loss, dist, T::zero(), p, norm)?;
        return Ok(DualCertificate {
            lambda_star: T::zero(),
            dual_value: value,
            per_sample_sup: sups.0,
            bracket: (T::zero(), T::zero()),
            iterations: 0,
            growth_order: growth,
            transport_order: pv,
            polish_warnings: sups.1,
        });
    }

    let tol = real::<T>(1e-12) * (T::one() + hi);
    let mut err: Option<Error> = None;
    let (lambda_star, _, iterations) = golden_section_min(T::zero(), hi, tol, 300, |lam| {
        match dual_objective(loss, dist, p, alpha, norm, lam) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                T::infinity()
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }

    let (per_sample_sup, polish_warnings) = collect_sups(loss, dist, lambda_star, p, norm)?;
    let mut dual_value = lambda_star * alpha.powf(pv);
    for (s, i) in per_sample_sup.iter().zip(0..) {
        dual_value += dist.weight(i) * s.value;
    }
    if !dual_value.is_finite() {
        return Err(Error::Unbounded(
            "dual objective is infinite at the selected multiplier".into(),
        ));
    }
    Ok(DualCertificate {
        lambda_star,
        dual_value,
        per_sample_sup,
        bracket: (T::zero(), hi),
        iterations,
        growth_order: growth,
        transport_order: pv,
        polish_warnings,
    })
}

fn collect_sups<T: Real>(
    loss: &LossSpec<T>,
    dist: &EmpiricalDistribution<T>,
    lambda: T,
    p: Exponent<T>,
    norm: &NormSpec<T>,
) -> Result<(Vec<SampleSup<T>>, usize)> {
    let mut sups = Vec::with_capacity(dist.len());
    let mut warnings = 0usize;
    for i in 0..dist.len() {
        let z = dist.point(i);
        match inner_sup(loss, z, lambda, p, norm)? {
            SupOutcome::Unbounded => sups.push(SampleSup {
                value: T::infinity(),
                maximizer: None,
                polish_shift: T::zero(),
            }),
            SupOutcome::Attained { value, maximizer, polish_shift } => {
                if polish_shift > real(POLISH_WARN) {
                    warnings += 1;
                }
                sups.push(SampleSup {
                    value: value + loss.eval(z)?,
                    maximizer: Some(maximizer),
                    polish_shift,
                });
            }
        }
    }
    Ok((sups, warnings))
}

/// Worst case at transport order ∞: every sample roams its own closed
/// α-ball, so the value is the weighted mean of per-ball maxima. Exact for
/// composed and piecewise families (convex univariate pieces peak at the
/// score interval's endpoints); directional search + polish, hence a lower
/// bound, for custom losses.
pub fn worst_case_inf<T: Real>(
    loss: &LossSpec<T>,
    dist: &EmpiricalDistribution<T>,
    alpha: T,
    norm: &NormSpec<T>,
) -> Result<(T, Vec<Vec<T>>)> {
    check_instance(loss, dist, alpha)?;
    let mut total = T::zero();
    let mut maximizers = Vec::with_capacity(dist.len());
    for i in 0..dist.len() {
        let z = dist.point(i);
        let (v, zstar) = ball_max(loss, z, alpha, norm)?;
        total += dist.weight(i) * v;
        maximizers.push(zstar);
    }
    Ok((total, maximizers))
}

fn ball_max<T: Real>(
    loss: &LossSpec<T>,
    anchor: &[T],
    alpha: T,
    norm: &NormSpec<T>,
) -> Result<(T, Vec<T>)> {
    if alpha == T::zero() {
        return Ok((loss.eval(anchor)?, anchor.to_vec()));
    }
    if loss.composition().is_some() {
        let uni = loss.univariate().expect("composed");
        let gain = loss.gain_rate(norm).expect("composed");
        let u0 = loss.score(anchor)?;
        let mut best = (uni.eval(u0), T::zero());
        for sigma in [T::one(), -T::one()] {
            let v = uni.eval(u0 + sigma * alpha * gain);
            if v > best.0 {
                best = (v, sigma);
            }
        }
        let z = loss.score_displacement(norm, anchor, best.1 * alpha * gain);
        return Ok((best.0, z));
    }
    if let Some(pieces) = loss.pieces() {
        let mut best_v = loss.eval(anchor)?;
        let mut best_z = anchor.to_vec();
        for piece in pieces {
            let gain = norm.dual_eval(&piece.beta);
            let u0 = dot(&piece.beta, anchor);
            for sigma in [T::one(), -T::one()] {
                let v = piece.uni.eval(u0 + sigma * alpha * gain);
                if v > best_v {
                    best_v = v;
                    let dir = norm.dual_argmax(&piece.beta);
                    best_z = anchor.iter().zip(&dir).map(|(a, d)| *a + sigma * alpha * *d).collect();
                }
            }
        }
        return Ok((best_v, best_z));
    }

    // Custom: directional ray capped at the radius, then coordinate polish
    // projected back into the ball. A lower bound for nonconcave losses.
    let mut best_v = loss.eval(anchor)?;
    let mut best_z = anchor.to_vec();
    for dir in loss.displacement_directions(norm, anchor) {
        let at = |t: T| -> Vec<T> {
            anchor.iter().zip(&dir).map(|(a, d)| *a + t * *d).collect()
        };
        let (t, v, _) = golden_section_max(T::zero(), alpha, real::<T>(1e-12) * (T::one() + alpha), 200, |t| {
            loss.eval(&at(t)).unwrap_or(T::neg_infinity())
        });
        let v_end = loss.eval(&at(alpha)).unwrap_or(T::neg_infinity());
        let (v, t) = if v_end > v { (v_end, alpha) } else { (v, t) };
        if v > best_v {
            best_v = v;
            best_z = at(t);
        }
    }
    for _ in 0..20 {
        let before = best_v;
        for k in 0..best_z.len() {
            let w = (T::one() + alpha) * real(2.0);
            let zk = best_z[k];
            let mut probe = best_z.clone();
            let (xk, _, _) = golden_section_max(zk - w, zk + w, real::<T>(1e-10) * w, 200, |x| {
                probe[k] = x;
                let clamped = clamp_to_ball(&probe, anchor, alpha, norm);
                loss.eval(&clamped).unwrap_or(T::neg_infinity())
            });
            probe[k] = xk;
            let cand = clamp_to_ball(&probe, anchor, alpha, norm);
            let v = loss.eval(&cand).unwrap_or(T::neg_infinity());
            if v > best_v {
                best_v = v;
                best_z = cand;
            }
        }
        if best_v - before <= real::<T>(1e-12) * (T::one() + best_v.abs()) {
            break;
        }
    }
    Ok((best_v, best_z))
}

fn clamp_to_ball<T: Real>(z: &[T], anchor: &[T], alpha: T, norm: &NormSpec<T>) -> Vec<T> {
    let d: Vec<T> = z.iter().zip(anchor).map(|(a, b)| *a - *b).collect();
    let r = norm.eval(&d);
    if r <= alpha {
        return z.to_vec();
    }
    let s = alpha / r;
    anchor.iter().zip(&d).map(|(a, dk)| *a + s * *dk).collect()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}
