//! Additive and multiplicative sample effects.
//!
//! `Y′` removes the additive sample effect (row means). The two-way residual
//! `D′ = y_ij + y_·· − y_i· − y_·j` is the non-additive part of the matrix;
//! its SVD writes it as a sum of rank-1 terms `M_k = σ_k u_k v_kᵀ`, each a
//! product of a sample factor and a feature factor. Subtracting the first `p`
//! terms from `Y′` gives the corrected series `Y′_p`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::matrix::ExpressionMatrix;
use crate::par;
use crate::rle::{self, BoxplotOptions, BoxplotStats};
use crate::svd;

/// How the additive sample effect is removed to form `Y′`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdditiveRemoval {
    /// `y_ij − y_i·`: subtract each sample's mean over features.
    #[default]
    SampleMean,
    /// `y_ij − y_·j`: subtract each feature's mean over samples. RLE
    /// deviations are invariant to this, so it is kept only for comparison.
    FeatureMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Components with `σ_k ≤ rank_tol · σ_1` are discarded.
    pub rank_tol: f64,
    pub additive: AdditiveRemoval,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            rank_tol: defaults::RANK_TOL,
            additive: AdditiveRemoval::SampleMean,
        }
    }
}

/// Rank-1 components of a residual matrix, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub singular_values: Vec<f64>,
    /// m × r; column k is the sample factor of component k.
    pub left_vectors: Array2<f64>,
    /// n × r; column k is the feature factor of component k.
    pub right_vectors: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub y_prime: Array2<f64>,
    pub d_prime: Array2<f64>,
    pub components: Components,
}

fn check_shape(values: ArrayView2<f64>) -> Result<()> {
    let (m, n) = values.dim();
    if m < 2 || n < 2 {
        return Err(Error::Shape(format!(
            "decomposition needs at least 2 samples and 2 features, got {m}×{n}"
        )));
    }
    Ok(())
}

fn row_means(values: ArrayView2<f64>) -> Array1<f64> {
    values.mean_axis(Axis(1)).expect("non-empty")
}

fn col_means(values: ArrayView2<f64>) -> Array1<f64> {
    values.mean_axis(Axis(0)).expect("non-empty")
}

/// `Y′` with every row centred on zero.
pub fn remove_additive_sample_effect(values: ArrayView2<f64>) -> Result<Array2<f64>> {
    remove_additive(values, AdditiveRemoval::SampleMean)
}

pub fn remove_additive(values: ArrayView2<f64>, how: AdditiveRemoval) -> Result<Array2<f64>> {
    check_shape(values)?;
    Ok(match how {
        AdditiveRemoval::SampleMean => &values - &row_means(values).insert_axis(Axis(1)),
        AdditiveRemoval::FeatureMean => &values - &col_means(values),
    })
}

/// Double-centred residual `D′`.
pub fn twoway_residual(values: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_shape(values)?;
    let rows = row_means(values);
    let cols = col_means(values);
    let grand = rows.mean().expect("non-empty");
    Ok(Array2::from_shape_fn(values.dim(), |(i, j)| {
        values[[i, j]] + grand - rows[i] - cols[j]
    }))
}

fn max_abs(values: ArrayView2<f64>) -> f64 {
    values.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Largest absolute row or column mean.
pub fn centering_error(values: ArrayView2<f64>) -> f64 {
    row_means(values)
        .iter()
        .chain(col_means(values).iter())
        .fold(0.0, |a, v| a.max(v.abs()))
}

/// SVD of `D′` truncated at `rank_tol · σ_1`.
pub fn svd_partition(d_prime: ArrayView2<f64>, rank_tol: f64) -> Result<Components> {
    partition(d_prime, rank_tol, 0.0)
}

/// Singular values at or below this are rounding residue of double-centring
/// a matrix whose entries are at most `max|Y|` in magnitude.
fn noise_floor(values: ArrayView2<f64>) -> f64 {
    let (m, n) = values.dim();
    f64::EPSILON * m.max(n) as f64 * max_abs(values)
}

fn partition(d_prime: ArrayView2<f64>, rank_tol: f64, floor: f64) -> Result<Components> {
    if !rank_tol.is_finite() || rank_tol < 0.0 {
        return Err(Error::InvalidConfig(format!("rank tolerance must be >= 0, got {rank_tol}")));
    }
    let (m, n) = d_prime.dim();
    let scale = max_abs(d_prime);
    if centering_error(d_prime) > 1e-8 * scale.max(1.0) {
        log::warn!("SVD input is not double-centred; components will include additive structure");
    }
    let full = svd::thin_svd(d_prime)?;
    let sigma1 = full.s.first().copied().unwrap_or(0.0);
    let rank = if sigma1 > 0.0 {
        let cut = (rank_tol * sigma1).max(floor);
        full.s.iter().take_while(|&&s| s > cut).count()
    } else {
        0
    };
    Ok(Components {
        singular_values: full.s[..rank].to_vec(),
        left_vectors: full.u.slice(ndarray::s![0..m, 0..rank]).to_owned(),
        right_vectors: full.v.slice(ndarray::s![0..n, 0..rank]).to_owned(),
    })
}

impl Components {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `M_k = σ_k u_k v_kᵀ` for the 0-based component index `k`.
    pub fn component(&self, k: usize) -> Result<Array2<f64>> {
        if k >= self.rank() {
            return Err(Error::ComponentOutOfRange {
                p: k + 1,
                rank: self.rank(),
            });
        }
        let s = self.singular_values[k];
        let u = self.left_vectors.column(k);
        let v = self.right_vectors.column(k);
        Ok(Array2::from_shape_fn((u.len(), v.len()), |(i, j)| s * u[i] * v[j]))
    }

    /// `Σ_{k<p} M_k`.
    pub fn partial_sum(&self, p: usize) -> Result<Array2<f64>> {
        if p > self.rank() {
            return Err(Error::ComponentOutOfRange { p, rank: self.rank() });
        }
        let (m, n) = (self.left_vectors.nrows(), self.right_vectors.nrows());
        let rows = par::map_indices(m, |i| {
            let mut row = vec![0.0; n];
            for k in 0..p {
                let a = self.singular_values[k] * self.left_vectors[[i, k]];
                for (r, v) in row.iter_mut().zip(self.right_vectors.column(k)) {
                    *r += a * v;
                }
            }
            row
        });
        Ok(Array2::from_shape_fn((m, n), |(i, j)| rows[i][j]))
    }
}

impl DecompositionResult {
    pub fn rank(&self) -> usize {
        self.components.rank()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.components.singular_values
    }

    pub fn component(&self, k: usize) -> Result<Array2<f64>> {
        self.components.component(k)
    }

    /// `Y′_p = Y′ − Σ_{k=1}^{p} M_k`.
    pub fn corrected(&self, p: usize) -> Result<Array2<f64>> {
        Ok(&self.y_prime - &self.components.partial_sum(p)?)
    }
}

pub fn decompose(matrix: &ExpressionMatrix, opts: &DecomposeOptions) -> Result<DecompositionResult> {
    let values = matrix.values();
    let y_prime = remove_additive(values, opts.additive)?;
    let d_prime = twoway_residual(values)?;
    let components = partition(d_prime.view(), opts.rank_tol, noise_floor(values))?;
    Ok(DecompositionResult {
        y_prime,
        d_prime,
        components,
    })
}

/// `Y′_p` for an explicit `Y′`.
pub fn remove_nonadditive(y_prime: ArrayView2<f64>, decomposition: &DecompositionResult, p: usize) -> Result<Array2<f64>> {
    if y_prime.dim() != decomposition.d_prime.dim() {
        return Err(Error::Shape(format!(
            "Y′ is {:?} but the decomposition is {:?}",
            y_prime.dim(),
            decomposition.d_prime.dim()
        )));
    }
    Ok(&y_prime - &decomposition.components.partial_sum(p)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStep {
    pub label: String,
    pub p: usize,
    pub summaries: Vec<BoxplotStats>,
}

/// RLE summaries of `Y′_p` for `p = 0..=p_max`.
pub fn rle_series(
    matrix: &ExpressionMatrix,
    p_max: usize,
    opts: &DecomposeOptions,
    box_opts: &BoxplotOptions,
) -> Result<(DecompositionResult, Vec<SeriesStep>)> {
    let result = decompose(matrix, opts)?;
    if p_max > result.rank() {
        return Err(Error::ComponentOutOfRange {
            p: p_max,
            rank: result.rank(),
        });
    }
    let steps = (0..=p_max)
        .map(|p| {
            let corrected = matrix.with_values(result.corrected(p)?)?;
            Ok(SeriesStep {
                label: format!("p = {p}"),
                p,
                summaries: rle::rle_summary(&corrected, box_opts)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((result, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn additive_removal_examples() {
        let y = array![[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]];
        assert_eq!(
            remove_additive_sample_effect(y.view()).unwrap(),
            array![[-1.0, 0.0, 1.0], [0.0, 0.0, 0.0]]
        );
        let c = Array2::from_elem((3, 4), 7.5);
        assert!(remove_additive_sample_effect(c.view()).unwrap().iter().all(|&v| v == 0.0));
        let by_feature = remove_additive(y.view(), AdditiveRemoval::FeatureMean).unwrap();
        assert_eq!(by_feature, array![[-2.0, -1.5, -1.0], [2.0, 1.5, 1.0]]);
    }

    #[test]
    fn additive_model_loses_sample_effect() {
        let a = [0.3, -1.0, 2.0];
        let b = [1.0, 4.0, -2.0, 0.5];
        let y = Array2::from_shape_fn((3, 4), |(i, j)| a[i] + b[j]);
        let yp = remove_additive_sample_effect(y.view()).unwrap();
        let b_bar = b.iter().sum::<f64>() / 4.0;
        for row in yp.rows() {
            for (v, bj) in row.iter().zip(b) {
                assert!((v - (bj - b_bar)).abs() < 1e-12);
            }
        }
        assert!(twoway_residual(y.view()).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn residual_hand_example() {
        let d = twoway_residual(array![[1.0, 2.0], [3.0, 5.0]].view()).unwrap();
        assert_eq!(d, array![[0.25, -0.25], [-0.25, 0.25]]);
    }

    #[test]
    fn centred_outer_product_is_unchanged() {
        let u = [1.0, -2.0, 1.0];
        let v = [0.5, -0.5, 2.0, -2.0];
        let y = Array2::from_shape_fn((3, 4), |(i, j)| u[i] * v[j]);
        let d = twoway_residual(y.view()).unwrap();
        assert!((&d - &y).iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn needs_two_by_two() {
        assert!(matches!(twoway_residual(array![[1.0, 2.0]].view()), Err(Error::Shape(_))));
        assert!(remove_additive_sample_effect(array![[1.0], [2.0]].view()).is_err());
    }

    #[test]
    fn zero_matrix_has_no_components() {
        let c = svd_partition(Array2::<f64>::zeros((4, 6)).view(), 1e-12).unwrap();
        assert_eq!(c.rank(), 0);
        assert!(c.component(0).is_err());
        assert_eq!(c.partial_sum(0).unwrap(), Array2::<f64>::zeros((4, 6)));
    }

    #[test]
    fn rank_one_construction() {
        let e = [1.0, -1.0, 0.0].map(|x: f64| x / 2f64.sqrt());
        let f = [1.0, 1.0, -1.0, -1.0].map(|x| x / 2.0);
        let d = Array2::from_shape_fn((3, 4), |(i, j)| 3.0 * e[i] * f[j]);
        let c = svd_partition(d.view(), 1e-12).unwrap();
        assert_eq!(c.rank(), 1);
        assert!((c.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((c.component(0).unwrap() - &d).iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn series_p_zero_and_out_of_range() {
        let a = [0.3, -1.0, 2.0];
        let b = [1.0, 4.0, -2.0, 0.5];
        let y = Array2::from_shape_fn((3, 4), |(i, j)| a[i] + b[j]);
        let m = ExpressionMatrix::from_values(y).unwrap();
        let (res, steps) = rle_series(&m, 0, &DecomposeOptions::default(), &BoxplotOptions::default()).unwrap();
        assert_eq!(res.rank(), 0);
        assert_eq!(steps.len(), 1);
        for s in &steps[0].summaries {
            assert!(s.median.abs() < 1e-12 && s.iqr().abs() < 1e-12);
        }
        assert!(matches!(
            rle_series(&m, 1, &DecomposeOptions::default(), &BoxplotOptions::default()),
            Err(Error::ComponentOutOfRange { p: 1, rank: 0 })
        ));
        assert_eq!(res.corrected(0).unwrap(), res.y_prime);
        assert!(res.corrected(1).is_err());
    }
}
