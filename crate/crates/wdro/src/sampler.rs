//! Synthetic data sources for the shrinking-radius experiments. Sampling is
//! deterministic given the seed.

use crate::distribution::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub enum Sampler<T> {
    /// Standard normal in each coordinate.
    Gaussian { dim: usize },
    /// Uniform on the axis-aligned box [lo, hi].
    UniformBox { lo: Vec<T>, hi: Vec<T> },
    /// Uniform over a fixed finite set of atoms. Not a continuous
    /// distribution — the order-1 curve runner refuses it.
    Discrete { points: Vec<Vec<T>> },
}

impl<T: Real> Sampler<T> {
    pub fn gaussian(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("sampler dimension must be positive".into()));
        }
        Ok(Sampler::Gaussian { dim })
    }

    pub fn uniform_box(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Config(format!(
                "box bounds need matching nonzero dimensions, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && *l < *h) {
                return Err(Error::Config(format!(
                    "box bounds must be finite with lo < hi, got [{l}, {h}]"
                )));
            }
        }
        Ok(Sampler::UniformBox { lo, hi })
    }

    pub fn discrete(points: Vec<Vec<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("discrete sampler needs at least one atom".into()));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::Config("discrete sampler atoms must be nonempty".into()));
        }
        for p in &points {
            if p.len() != d {
                return Err(Error::Config("discrete sampler atoms must share a dimension".into()));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("discrete sampler atoms must be finite".into()));
            }
        }
        Ok(Sampler::Discrete { points })
    }

    pub fn dim(&self) -> usize {
        match self {
            Sampler::Gaussian { dim } => *dim,
            Sampler::UniformBox { lo, .. } => lo.len(),
            Sampler::Discrete { points } => points[0].len(),
        }
    }

    /// Whether the law has a density (no atoms).
    pub fn is_continuous(&self) -> bool {
        !matches!(self, Sampler::Discrete { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            Sampler::Gaussian { dim } => format!("gaussian(dim={dim})"),
            Sampler::UniformBox { lo, .. } => format!("uniform-box(dim={})", lo.len()),
            Sampler::Discrete { points } => {
                format!("discrete({} atoms, dim={})", points.len(), points[0].len())
            }
        }
    }

    /// Draws n points with uniform weights. Same seed, same sample.
    pub fn sample(&self, n: usize, seed: u64) -> Result<EmpiricalDistribution<T>> {
        if n == 0 {
            return Err(Error::Domain("sample size must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<T>> = match self {
            Sampler::Gaussian { dim } => (0..n)
                .map(|_| (0..*dim).map(|_| real::<T>(rng.sample(StandardNormal))).collect())
                .collect(),
            Sampler::UniformBox { lo, hi } => (0..n)
                .map(|_| {
                    lo.iter()
                        .zip(hi)
                        .map(|(l, h)| real::<T>(rng.gen_range(l.to_f64_lossy()..h.to_f64_lossy())))
                        .collect()
                })
                .collect(),
            Sampler::Discrete { points } => {
                (0..n).map(|_| points[rng.gen_range(0..points.len())].clone()).collect()
            }
        };
        EmpiricalDistribution::uniform(points)
    }
}
