#![allow(dead_code)]

use rle_core::decompose::{self, DecomposeOptions};
use rle_core::rle::{self, BoxplotOptions, BoxplotStats};
use rle_core::simulate::{simulate, SimulatedDataset, SimulationConfig};

/// Seeds every acceptance-level statistical check runs at.
pub const ACCEPTANCE_SEEDS: std::ops::RangeInclusive<u64> = 1..=20;
/// Seeds of the threshold calibration run, disjoint from the acceptance seeds.
pub const CALIBRATION_SEEDS: std::ops::RangeInclusive<u64> = 1001..=1200;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn scenario(id: u8, seed: u64) -> SimulatedDataset {
    simulate(&SimulationConfig::scenario(id).unwrap().with_seed(seed)).unwrap()
}

pub fn rle_of(ds: &SimulatedDataset) -> Vec<BoxplotStats> {
    rle::rle_summary(&ds.matrix, &BoxplotOptions::default()).unwrap()
}

pub fn iqrs(s: &[BoxplotStats]) -> Vec<f64> {
    s.iter().map(BoxplotStats::iqr).collect()
}

pub fn medians(s: &[BoxplotStats]) -> Vec<f64> {
    s.iter().map(|b| b.median).collect()
}

pub fn abs_centered_theta(ds: &SimulatedDataset) -> Vec<f64> {
    let m = mean(&ds.theta);
    ds.theta.iter().map(|t| (t - m).abs()).collect()
}

/// Scenario 1: largest over smallest per-sample RLE IQR.
pub fn width_ratio(ds: &SimulatedDataset) -> f64 {
    let w = iqrs(&rle_of(ds));
    w.iter().copied().fold(f64::MIN, f64::max) / w.iter().copied().fold(f64::MAX, f64::min)
}

/// Correlation of per-sample RLE IQR with |θ_i − θ̄|.
pub fn width_correlation(ds: &SimulatedDataset) -> f64 {
    pearson(&iqrs(&rle_of(ds)), &abs_centered_theta(ds))
}

/// Same correlation after removing the additive effect and the first `p` components.
pub fn width_correlation_after(ds: &SimulatedDataset, p: usize) -> f64 {
    let res = decompose::decompose(&ds.matrix, &DecomposeOptions::default()).unwrap();
    let corrected = ds.matrix.with_values(res.corrected(p).unwrap()).unwrap();
    let s = rle::rle_summary(&corrected, &BoxplotOptions::default()).unwrap();
    pearson(&iqrs(&s), &abs_centered_theta(ds))
}

/// Scenario 2: mean RLE median of samples 26–30 minus that of samples 1–25.
pub fn batch_shift(ds: &SimulatedDataset) -> f64 {
    let med = medians(&rle_of(ds));
    mean(&med[25..]) - mean(&med[..25])
}

pub fn median_theta_correlation(ds: &SimulatedDataset) -> f64 {
    pearson(&medians(&rle_of(ds)), &ds.theta)
}

/// Distance of mean σ² from β/(α−1) in standard errors.
pub fn sigma2_z(ds: &SimulatedDataset) -> f64 {
    let target = ds.config.expected_noise_variance();
    let se = sd(&ds.sigma2) / (ds.sigma2.len() as f64).sqrt();
    (mean(&ds.sigma2) - target) / se
}
