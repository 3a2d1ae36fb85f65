//! Synthetic log-expression matrices with additive and non-additive sample effects.
//!
//! Model: `y_ij = μ_j + θ_i + γ_ij + ε_ij` with
//!
//! * `μ_j ~ N(m_μ, s_μ²)` per feature,
//! * `θ_i ~ N(m_θ(batch of i), s_θ²)` per sample,
//! * `γ_ij = λ (θ_i − θ̄)(μ_j − μ̄)`,
//! * `ε_ij ~ N(0, σ_j²)` with precision `1/σ_j² ~ Gamma(shape α, rate β)`.
//!
//! # Reproducibility
//!
//! All draws come from ChaCha20 (`rand_chacha`) seeded with
//! `ChaCha20Rng::seed_from_u64(seed)`. Normal variates use `rand_distr`'s
//! `StandardNormal`, gamma variates `rand_distr::Gamma`. Draw order:
//!
//! 1. stream 0: `μ_1..μ_n`, then `θ_1..θ_m` in sample order, then the
//!    precisions `1/σ_1²..1/σ_n²` (skipped under a variance override);
//! 2. stream `j + 1` (0-based feature index `j`): `ε_1j..ε_mj` in sample order.
//!
//! Per-column noise streams let columns be generated in parallel with output
//! independent of the thread schedule.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{default_ids, ExpressionMatrix};
use crate::par;

/// A contiguous block of samples sharing the mean sample effect `m_theta`.
/// `start` and `end` are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub label: String,
    pub start: usize,
    pub end: usize,
    pub m_theta: f64,
}

impl Batch {
    pub fn new(label: impl Into<String>, start: usize, end: usize, m_theta: f64) -> Self {
        Batch {
            label: label.into(),
            start,
            end,
            m_theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_samples: usize,
    pub n_features: usize,
    /// Mean of the feature means.
    pub m_mu: f64,
    /// Variance of the feature means.
    pub s_mu2: f64,
    pub batches: Vec<Batch>,
    /// Variance of the sample effects around their batch mean.
    pub s_theta2: f64,
    pub lambda: f64,
    /// Shape of the gamma-distributed noise precision.
    pub alpha: f64,
    /// Rate of the gamma-distributed noise precision.
    pub beta: f64,
    pub seed: u64,
    /// Fixed noise variance for every feature instead of gamma draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_override: Option<f64>,
}

impl SimulationConfig {
    /// One of the four preset scenarios (m = 30, n = 10 000, m_μ = 5,
    /// s_μ² = s_θ² = 0.5, α = 10, β = 1, seed 0):
    ///
    /// 1. additive effects only;
    /// 2. additive effects in two batches (m_θ = 2 for samples 26–30);
    /// 3. additive and non-additive effects (λ = 1);
    /// 4. additive and non-additive effects in two batches.
    pub fn scenario(id: u8) -> Result<Self> {
        let (two_batches, lambda) = match id {
            1 => (false, 0.0),
            2 => (true, 0.0),
            3 => (false, 1.0),
            4 => (true, 1.0),
            _ => return Err(Error::UnknownScenario(id)),
        };
        let batches = if two_batches {
            vec![Batch::new("batch1", 1, 25, 0.0), Batch::new("batch2", 26, 30, 2.0)]
        } else {
            vec![Batch::new("batch1", 1, 30, 0.0)]
        };
        Ok(SimulationConfig {
            n_samples: 30,
            n_features: 10_000,
            m_mu: 5.0,
            s_mu2: 0.5,
            batches,
            s_theta2: 0.5,
            lambda,
            alpha: 10.0,
            beta: 1.0,
            seed: 0,
            variance_override: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Expected noise variance `β / (α − 1)` of the inverse-gamma draws.
    pub fn expected_noise_variance(&self) -> f64 {
        self.beta / (self.alpha - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_samples == 0 || self.n_features == 0 {
            return bad("need at least one sample and one feature".into());
        }
        for (name, v) in [
            ("m_mu", self.m_mu),
            ("s_mu2", self.s_mu2),
            ("s_theta2", self.s_theta2),
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.s_mu2 < 0.0 || self.s_theta2 < 0.0 {
            return bad("variances must be >= 0".into());
        }
        if self.alpha <= 1.0 {
            return bad(format!("alpha must be > 1, got {}", self.alpha));
        }
        if self.beta <= 0.0 {
            return bad(format!("beta must be > 0, got {}", self.beta));
        }
        if let Some(v) = self.variance_override {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("variance override must be >= 0, got {v}"));
            }
        }
        let mut batches: Vec<&Batch> = self.batches.iter().collect();
        batches.sort_by_key(|b| b.start);
        let mut next = 1;
        for b in batches {
            if !b.m_theta.is_finite() {
                return bad(format!("batch {:?} has non-finite m_theta", b.label));
            }
            if b.start != next || b.end < b.start {
                return bad(format!(
                    "batches must partition samples 1..={} without gaps or overlap (batch {:?} is {}..={})",
                    self.n_samples, b.label, b.start, b.end
                ));
            }
            next = b.end + 1;
        }
        if next != self.n_samples + 1 {
            return bad(format!("batches cover 1..={}, expected 1..={}", next - 1, self.n_samples));
        }
        if self.variance_override.is_none() && self.expected_noise_variance() >= self.s_mu2 {
            log::warn!(
                "expected noise variance {:.4} is not below the feature-mean variance {}",
                self.expected_noise_variance(),
                self.s_mu2
            );
        }
        Ok(())
    }

    fn batch_of(&self, sample: usize) -> &Batch {
        let i = sample + 1;
        self.batches
            .iter()
            .find(|b| (b.start..=b.end).contains(&i))
            .expect("validated partition")
    }
}

/// A simulated matrix together with every draw that produced it.
#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub matrix: ExpressionMatrix,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub noise: Array2<f64>,
    pub config: SimulationConfig,
}

/// Ground truth written next to a simulated matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub lambda: f64,
    pub batches: Vec<Batch>,
    pub config: SimulationConfig,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: Vec<f64>,
}

impl SimulatedDataset {
    pub fn gamma(&self) -> Array2<f64> {
        interaction_term(&self.theta, &self.mu, self.config.lambda)
    }

    pub fn truth(&self) -> Truth {
        Truth {
            seed: self.config.seed,
            lambda: self.config.lambda,
            batches: self.config.batches.clone(),
            config: self.config.clone(),
            mu: self.mu.clone(),
            theta: self.theta.clone(),
            sigma2: self.sigma2.clone(),
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `γ_ij = λ (θ_i − θ̄)(μ_j − μ̄)`.
pub fn interaction_term(theta: &[f64], mu: &[f64], lambda: f64) -> Array2<f64> {
    let theta_bar = mean(theta);
    let mu_bar = mean(mu);
    Array2::from_shape_fn((theta.len(), mu.len()), |(i, j)| {
        lambda * (theta[i] - theta_bar) * (mu[j] - mu_bar)
    })
}

fn normal(rng: &mut ChaCha20Rng, mean: f64, var: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + var.sqrt() * z
}

pub fn simulate(config: &SimulationConfig) -> Result<SimulatedDataset> {
    config.validate()?;
    let (m, n) = (config.n_samples, config.n_features);
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    let mu: Vec<f64> = (0..n).map(|_| normal(&mut rng, config.m_mu, config.s_mu2)).collect();
    let theta: Vec<f64> = (0..m)
        .map(|i| normal(&mut rng, config.batch_of(i).m_theta, config.s_theta2))
        .collect();
    let sigma2: Vec<f64> = match config.variance_override {
        Some(v) => vec![v; n],
        None => {
            let precision = Gamma::new(config.alpha, 1.0 / config.beta)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            (0..n).map(|_| 1.0 / rng.sample(precision)).collect()
        }
    };

    let columns: Vec<Vec<f64>> = par::map_indices(n, |j| {
        let mut col_rng = ChaCha20Rng::seed_from_u64(config.seed);
        col_rng.set_stream(j as u64 + 1);
        (0..m).map(|_| normal(&mut col_rng, 0.0, sigma2[j])).collect()
    });
    let noise = Array2::from_shape_fn((m, n), |(i, j)| columns[j][i]);

    let gamma = interaction_term(&theta, &mu, config.lambda);
    let values = Array2::from_shape_fn((m, n), |(i, j)| mu[j] + theta[i] + gamma[[i, j]] + noise[[i, j]]);
    let groups = (0..m).map(|i| config.batch_of(i).label.clone()).collect();
    let matrix = ExpressionMatrix::new(values, default_ids("S", m), default_ids("G", n), Some(groups))?;

    Ok(SimulatedDataset {
        matrix,
        mu,
        theta,
        sigma2,
        noise,
        config: config.clone(),
    })
}
