//! Primal lower-bound search: displace the n support points within a shared
//! transport budget and report the best mean loss found.
//!
//! The searched class keeps one point per sample (same weights), so any
//! candidate is feasible for the ball and its mean loss is a certified
//! lower bound on the worst case — the counterpart the dual value is
//! sandwiched against. The search is deliberately evaluation-only: it never
//! reuses the dual module's analytic reductions.
//!
//! Finite orders share the budget Σ w_i·‖z_i − ẑ_i‖^p ≤ α^p across samples;
//! the allocator quantizes that budget into `levels` units, builds
//! per-sample best-loss-at-budget frontiers along candidate directions, runs
//! a jump-greedy allocation (jumps, not single steps, so flat-then-kinked
//! losses are not trapped), and finishes with one pairwise reallocation
//! round. Order ∞ decouples: each sample searches its own α-ball.

use crate::distribution::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::norm::{Exponent, NormSpec};
use crate::numeric::golden_section_max;
use crate::scalar::{real, Real};

/// Budget slack: candidates must use at most α + this.
pub const BUDGET_TOL: f64 = 1e-9;

/// How the per-sample displacement candidates are generated.
#[derive(Debug, Clone)]
pub enum SearchMode<T> {
    /// Line search along the family's steepest score directions.
    Directional,
    /// Exhaustive coordinate grid, only for ≤ 2 movable dimensions.
    ExhaustiveGrid { resolution: T, halfwidth: T },
}

#[derive(Debug, Clone)]
pub struct SearchSpec<T> {
    /// Number of budget quanta shared across samples.
    pub levels: usize,
    pub mode: SearchMode<T>,
}

impl<T: Real> Default for SearchSpec<T> {
    fn default() -> Self {
        SearchSpec { levels: 64, mode: SearchMode::Directional }
    }
}

/// A feasible displaced configuration and its achieved mean loss.
#[derive(Debug, Clone)]
pub struct DisplacementCandidate<T> {
    pub points: Vec<Vec<T>>,
    /// (Σ w_i·‖z_i − ẑ_i‖^p)^{1/p}, or the max displacement for order ∞.
    pub budget_usage: T,
    pub mean_loss: T,
}

/// Best mean loss over the searched displacement class. Always a lower
/// bound on the true worst case; exact only where the class is (linear
/// losses, order ∞ with directional optima on the ball boundary).
pub fn oracle_worst_case<T: Real>(
    loss: &LossSpec<T>,
    dist: &EmpiricalDistribution<T>,
    p: Exponent<T>,
    alpha: T,
    norm: &NormSpec<T>,
    search: &SearchSpec<T>,
) -> Result<(T, DisplacementCandidate<T>)> {
    if alpha < T::zero() || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "ball radius must be finite and nonnegative, got {alpha}"
        )));
    }
    if dist.dim() != loss.dim_z() {
        return Err(Error::Domain(format!(
            "distribution dimension {} does not match loss dimension {}",
            dist.dim(),
            loss.dim_z()
        )));
    }
    if search.levels == 0 {
        return Err(Error::Config("search needs at least one budget level".into()));
    }
    if let SearchMode::ExhaustiveGrid { resolution, halfwidth } = &search.mode {
        if *resolution <= T::zero() || *halfwidth <= T::zero() {
            return Err(Error::Config(
                "grid search needs positive resolution and halfwidth".into(),
            ));
        }
        if movable_dims(loss) > 2 {
            return Err(Error::Config(format!(
                "exhaustive grid supports at most 2 movable dimensions, instance has {}",
                movable_dims(loss)
            )));
        }
    }

    let n = dist.len();
    if alpha == T::zero() {
        let points: Vec<Vec<T>> = (0..n).map(|i| dist.point(i).to_vec()).collect();
        let mean_loss = dist.try_expectation(|z| loss.eval(z))?;
        return Ok((
            mean_loss,
            DisplacementCandidate { points, budget_usage: T::zero(), mean_loss },
        ));
    }

    let points = match p {
        Exponent::Infinity => independent_ball_search(loss, dist, alpha, norm, search)?,
        Exponent::Finite(pv) => shared_budget_search(loss, dist, pv, alpha, norm, search)?,
    };

    let mean_loss = {
        let mut acc = T::zero();
        for (i, z) in points.iter().enumerate() {
            acc += dist.weight(i) * loss.eval(z)?;
        }
        acc
    };
    let budget_usage = match p {
        Exponent::Infinity => (0..n)
            .map(|i| loss.ground_distance(norm, &points[i], dist.point(i)))
            .fold(T::zero(), T::max),
        Exponent::Finite(pv) => {
            let mut acc = T::zero();
            for (i, z) in points.iter().enumerate() {
                acc += dist.weight(i) * loss.ground_distance(norm, z, dist.point(i)).powf(pv);
            }
            acc.powf(pv.recip())
        }
    };
    if budget_usage > alpha + real(BUDGET_TOL) {
        return Err(Error::Domain(format!(
            "internal search overspent the budget: {budget_usage} > {alpha}"
        )));
    }
    Ok((mean_loss, DisplacementCandidate { points, budget_usage, mean_loss }))
}

fn movable_dims<T: Real>(loss: &LossSpec<T>) -> usize {
    match loss.composition() {
        Some(crate::loss::Composition::Classification) => loss.dim_z() - 1,
        _ => loss.dim_z(),
    }
}

/// Order-∞ search: each sample independently scans radii within its α-ball
/// along the candidate directions, with a golden polish around the best rung.
fn independent_ball_search<T: Real>(
    loss: &LossSpec<T>,
    dist: &EmpiricalDistribution<T>,
    alpha: T,
    norm: &NormSpec<T>,
    search: &SearchSpec<T>,
) -> Result<Vec<Vec<T>>> {
    let mut out = Vec::with_capacity(dist.len());
    for i in 0..dist.len() {
        let anchor = dist.point(i);
        let mut best_v = loss.eval(anchor)?;
        let mut best_z = anchor.to_vec();
        match &search.mode {
            SearchMode::Directional => {
                for dir in loss.displacement_directions(norm, anchor) {
                    let at = |t: T| -> Vec<T> {
                        anchor.iter().zip(&dir).map(|(a, d)| *a + t * *d).collect()
                    };
                    let mut rung_best = (T::neg_infinity(), T::zero());
                    for j in 0..=search.levels {
                        let t = alpha * real::<T>(j as f64) / real(search.levels as f64);
                        let v = loss.eval(&at(t))?;
                        if v > rung_best.0 {
                            rung_best = (v, t);
                        }
                    }
                    let step = alpha / real(search.levels as f64);
                    let lo = (rung_best.1 - step).max(T::zero());
                    let hi = (rung_best.1 + step).min(alpha);
                    let (t, v, _) =
                        golden_section_max(lo, hi, real::<T>(1e-12) * (T::one() + alpha), 200, |t| {
                            loss.eval(&at(t)).unwrap_or(T::neg_infinity())
                        });
                    let (v, t) = if rung_best.0 > v { rung_best } else { (v, t) };
                    if v > best_v {
                        best_v = v;
                        best_z = at(t);
                    }
                }
            }
            SearchMode::ExhaustiveGrid { resolution, halfwidth } => {
                for delta in grid_offsets(loss, *resolution, *halfwidth) {
                    let z: Vec<T> = anchor.iter().zip(&delta).map(|(a, d)| *a + *d).collect();
                    if loss.ground_distance(norm, &z, anchor) > alpha + real(BUDGET_TOL) {
                        continue;
                    }
                    let v = loss.eval(&z)?;
                    if v > best_v {
                        best_v = v;
                        best_z = z;
                    }
                }
            }
        }
        out.push(best_z);
    }
    Ok(out)
}

/// A per-sample frontier: entry j holds the best found loss using at most
/// j budget quanta, together with the displaced point achieving it.
struct Frontier<T> {
    value: Vec<T>,
    point: Vec<Vec<T>>,
}

fn shared_budget_search<T: Real>(
    loss: &LossSpec<T>,
    dist: &EmpiricalDistribution<T>,
    pv: T,
    alpha: T,
    norm: &NormSpec<T>,
    search: &SearchSpec<T>,
) -> Result<Vec<Vec<T>>> {
    let n = dist.len();
    let levels = search.levels;
    let unit = alpha.powf(pv) / real(levels as f64);

    let mut frontiers: Vec<Frontier<T>> = Vec::with_capacity(n);
    for i in 0..n {
        let anchor = dist.point(i);
        let w = dist.weight(i);
        let mut value = vec![loss.eval(anchor)?; levels + 1];
        let mut point = vec![anchor.to_vec(); levels + 1];
        if w > T::zero() {
            match &search.mode {
                SearchMode::Directional => {
                    for j in 1..=levels {
                        // radius affordable with j quanta of the shared budget
                        let r = (unit * real::<T>(j as f64) / w).powf(pv.recip());
                        for dir in loss.displacement_directions(norm, anchor) {
                            let z: Vec<T> =
                                anchor.iter().zip(&dir).map(|(a, d)| *a + r * *d).collect();
                            let v = loss.eval(&z)?;
                            if v > value[j] {
                                value[j] = v;
                                point[j] = z;
                            }
                        }
                    }
                }
                SearchMode::ExhaustiveGrid { resolution, halfwidth } => {
                    for delta in grid_offsets(loss, *resolution, *halfwidth) {
                        let z: Vec<T> = anchor.iter().zip(&delta).map(|(a, d)| *a + *d).collect();
                        let cost = w * loss.ground_distance(norm, &z, anchor).powf(pv);
                        let j = (cost / unit).ceil().to_f64_lossy() as usize;
                        if j > levels {
                            continue;
                        }
                        let v = loss.eval(&z)?;
                        if v > value[j] {
                            value[j] = v;
                            point[j] = z;
                        }
                    }
                }
            }
        }
        // Monotone envelope: spending less of the quantum is always allowed.
        for j in 1..=levels {
            if value[j] < value[j - 1] {
                value[j] = value[j - 1];
                point[j] = point[j - 1].clone();
            }
        }
        frontiers.push(Frontier { value, point });
    }

    // Jump-greedy: repeatedly take the level jump with the best mean-loss
    // gain per quantum anywhere; jumps cross flat stretches in one move.
    let mut level = vec![0usize; n];
    let mut left = levels;
    loop {
        let mut best: Option<(T, usize, usize)> = None; // (rate, sample, to-level)
        for i in 0..n {
            let w = dist.weight(i);
            let base = frontiers[i].value[level[i]];
            let top = (level[i] + left).min(levels);
            for j in (level[i] + 1)..=top {
                let gain = w * (frontiers[i].value[j] - base);
                if gain <= T::zero() {
                    continue;
                }
                let rate = gain / real::<T>((j - level[i]) as f64);
                if best.as_ref().is_none_or(|b| rate > b.0) {
                    best = Some((rate, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        left -= j - level[i];
        level[i] = j;
        if left == 0 {
            break;
        }
    }

    // One pairwise reallocation round: shifting quanta between two samples
    // can beat the greedy split when gains are non-concave.
    for i in 0..n {
        for k in 0..n {
            if i == k || level[i] == 0 {
                continue;
            }
            let wi = dist.weight(i);
            let wk = dist.weight(k);
            let mut best: Option<(T, usize)> = None;
            for u in 1..=level[i] {
                let give = wi * (frontiers[i].value[level[i]] - frontiers[i].value[level[i] - u]);
                let take_to = (level[k] + u + left).min(levels);
                let take = wk * (frontiers[k].value[take_to] - frontiers[k].value[level[k]]);
                let delta = take - give;
                if delta > T::zero() && best.as_ref().is_none_or(|b| delta > b.0) {
                    best = Some((delta, u));
                }
            }
            if let Some((_, u)) = best {
                let take_to = (level[k] + u + left).min(levels);
                left = left + u - (take_to - level[k]);
                level[i] -= u;
                level[k] = take_to;
            }
        }
    }

    Ok((0..n).map(|i| frontiers[i].point[level[i]].clone()).collect())
}

/// All coordinate-grid offsets over the movable dimensions (zero-padded on
/// an immutable label coordinate).
fn grid_offsets<T: Real>(loss: &LossSpec<T>, resolution: T, halfwidth: T) -> Vec<Vec<T>> {
    let dims = movable_dims(loss);
    let total = loss.dim_z();
    let steps = (halfwidth / resolution).to_f64_lossy().floor() as i64;
    let axis: Vec<T> = (-steps..=steps).map(|k| resolution * real::<T>(k as f64)).collect();
    let mut out = Vec::new();
    match dims {
        0 => {}
        1 => {
            for a in &axis {
                let mut d = vec![T::zero(); total];
                d[0] = *a;
                out.push(d);
            }
        }
        _ => {
            for a in &axis {
                for b in &axis {
                    let mut d = vec![T::zero(); total];
                    d[0] = *a;
                    d[1] = *b;
                    out.push(d);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::UnivariateLoss;

    fn uni(points: Vec<Vec<f64>>) -> EmpiricalDistribution<f64> {
        EmpiricalDistribution::uniform(points).unwrap()
    }

    #[test]
    fn zero_radius_returns_erm() {
        let loss = LossSpec::linear(vec![1.0, 2.0]).unwrap();
        let dist = uni(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let spec = SearchSpec::default();
        let (v, w) = oracle_worst_case(
            &loss,
            &dist,
            Exponent::finite(1.0).unwrap(),
            0.0,
            &NormSpec::l2(),
            &spec,
        )
        .unwrap();
        assert_eq!(v, 1.5);
        assert_eq!(w.budget_usage, 0.0);
        assert_eq!(w.points, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn linear_ball_moves_every_point_fully() {
        let loss = LossSpec::linear(vec![3.0, 4.0]).unwrap();
        let dist = uni(vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
        let spec = SearchSpec::default();
        let (v, w) =
            oracle_worst_case(&loss, &dist, Exponent::infinity(), 0.5, &NormSpec::l2(), &spec)
                .unwrap();
        // mean + α·‖β‖₂ = 3.5 + 2.5
        assert!((v - 6.0).abs() < 1e-9, "v = {v}");
        assert!(w.budget_usage <= 0.5 + 1e-9);
    }

    #[test]
    fn abs_shared_budget_matches_hand_value() {
        // mean|2z| on {1,-1}, α = 1/2, order 1: spend everything pushing one
        // sample outward: (|2·2| + |−2|)/2 = 3.
        let loss = LossSpec::unsupervised(UnivariateLoss::Abs, vec![2.0]).unwrap();
        let dist = uni(vec![vec![1.0], vec![-1.0]]);
        let spec = SearchSpec::default();
        let (v, w) = oracle_worst_case(
            &loss,
            &dist,
            Exponent::finite(1.0).unwrap(),
            0.5,
            &NormSpec::l2(),
            &spec,
        )
        .unwrap();
        assert!((v - 3.0).abs() < 1e-9, "v = {v}");
        assert!(w.budget_usage <= 0.5 + 1e-9);
    }

    #[test]
    fn grid_mode_matches_directional_on_small_instance() {
        let loss = LossSpec::unsupervised(UnivariateLoss::Abs, vec![2.0]).unwrap();
        let dist = uni(vec![vec![1.0], vec![-1.0]]);
        let p1 = Exponent::finite(1.0).unwrap();
        let grid = SearchSpec {
            levels: 64,
            mode: SearchMode::ExhaustiveGrid { resolution: 0.05, halfwidth: 2.5 },
        };
        let (v, _) = oracle_worst_case(&loss, &dist, p1, 0.5, &NormSpec::l2(), &grid).unwrap();
        assert!((v - 3.0).abs() < 0.2, "grid v = {v}");
    }

    #[test]
    fn rejects_bad_search_specs() {
        let loss = LossSpec::linear(vec![1.0, 1.0, 1.0]).unwrap();
        let dist = uni(vec![vec![0.0, 0.0, 0.0]]);
        let p1 = Exponent::finite(1.0).unwrap();
        let n = NormSpec::l2();
        let zero = SearchSpec { levels: 0, mode: SearchMode::<f64>::Directional };
        assert!(matches!(
            oracle_worst_case(&loss, &dist, p1, 0.5, &n, &zero),
            Err(Error::Config(_))
        ));
        let bad_grid = SearchSpec {
            levels: 8,
            mode: SearchMode::ExhaustiveGrid { resolution: 0.0, halfwidth: 1.0 },
        };
        assert!(matches!(
            oracle_worst_case(&loss, &dist, p1, 0.5, &n, &bad_grid),
            Err(Error::Config(_))
        ));
        let wide = SearchSpec {
            levels: 8,
            mode: SearchMode::ExhaustiveGrid { resolution: 0.5, halfwidth: 1.0 },
        };
        assert!(matches!(
            oracle_worst_case(&loss, &dist, p1, 0.5, &n, &wide),
            Err(Error::Config(_))
        ));
    }
}
