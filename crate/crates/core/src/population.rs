//! Risk types, population profiles and the i.i.d. renewal process.

use rand::Rng;

use crate::error::{Error, Result};

/// Ordered risk types `omega` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeSet {
    omegas: Vec<f64>,
}

impl TypeSet {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::validation("type set is empty"));
        }
        if omegas.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::validation("risk types must lie in [0, 1]"));
        }
        if omegas.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::validation("risk types must be strictly increasing"));
        }
        Ok(TypeSet { omegas })
    }

    /// `count` evenly spaced types from 0 to 1 inclusive.
    pub fn uniform(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::validation("a uniform type set needs at least 2 types"));
        }
        let last = (count - 1) as f64;
        Self::new((0..count).map(|k| k as f64 / last).collect())
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Share of the population per risk type.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationProfile {
    weights: Vec<f64>,
}

impl PopulationProfile {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::validation("profile weights must be nonnegative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!("profile weights sum to {sum}")));
        }
        Ok(PopulationProfile { weights })
    }

    pub fn uniform(count: usize) -> Self {
        PopulationProfile {
            weights: vec![1.0 / count as f64; count],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// How the population profile is redrawn each period.
#[derive(Debug, Clone, PartialEq)]
pub enum RenewalProcess {
    /// First `type_count - 1` weights drawn from `U(1/K - eps, 1/K + eps)`,
    /// the remainder to the last type; vectors with a negative remainder
    /// are redrawn whole.
    UniformPerturbation { type_count: usize, eps: f64 },
    /// Profile `k` with probability `d_k`.
    FiniteSupport { profiles: Vec<(PopulationProfile, f64)> },
}

impl RenewalProcess {
    pub fn uniform_perturbation(type_count: usize, eps: f64) -> Result<Self> {
        if type_count < 1 {
            return Err(Error::validation("need at least one type"));
        }
        let base = 1.0 / type_count as f64;
        if !(0.0..=base).contains(&eps) {
            return Err(Error::validation(format!(
                "eps must lie in [0, {base}] for {type_count} types, got {eps}"
            )));
        }
        Ok(RenewalProcess::UniformPerturbation { type_count, eps })
    }

    pub fn finite_support(profiles: Vec<(PopulationProfile, f64)>) -> Result<Self> {
        let Some(width) = profiles.first().map(|(p, _)| p.len()) else {
            return Err(Error::validation("finite support needs at least one profile"));
        };
        if profiles.iter().any(|(p, _)| p.len() != width) {
            return Err(Error::validation("profiles have differing widths"));
        }
        if profiles.iter().any(|&(_, d)| !(d > 0.0 && d <= 1.0)) {
            return Err(Error::validation("support probabilities must lie in (0, 1]"));
        }
        let sum: f64 = profiles.iter().map(|&(_, d)| d).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!("support probabilities sum to {sum}")));
        }
        Ok(RenewalProcess::FiniteSupport { profiles })
    }

    /// Number of types each sampled profile covers.
    pub fn type_count(&self) -> usize {
        match self {
            RenewalProcess::UniformPerturbation { type_count, .. } => *type_count,
            RenewalProcess::FiniteSupport { profiles } => profiles[0].0.len(),
        }
    }

    /// Draws the profile for one period.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PopulationProfile {
        match self {
            RenewalProcess::UniformPerturbation { type_count, eps } => {
                sample_perturbed(*type_count, *eps, rng)
            }
            RenewalProcess::FiniteSupport { profiles } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (profile, d) in profiles {
                    acc += d;
                    if u < acc {
                        return profile.clone();
                    }
                }
                profiles[profiles.len() - 1].0.clone()
            }
        }
    }
}

fn sample_perturbed<R: Rng + ?Sized>(k: usize, eps: f64, rng: &mut R) -> PopulationProfile {
    let base = 1.0 / k as f64;
    if eps == 0.0 {
        return PopulationProfile::uniform(k);
    }
    loop {
        let mut weights: Vec<f64> = (0..k - 1)
            .map(|_| rng.gen_range(base - eps..base + eps))
            .collect();
        let rest = 1.0 - weights.iter().sum::<f64>();
        if rest >= 0.0 {
            weights.push(rest);
            return PopulationProfile { weights };
        }
    }
}
