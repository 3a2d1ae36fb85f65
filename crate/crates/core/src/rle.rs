//! Relative log expression statistics.
//!
//! An RLE summary is built in two steps: subtract each feature's median across
//! samples, then summarise every sample's deviations as a boxplot. Skipping the
//! first step gives ordinary per-sample boxplots of the raw values.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{Error, Result};
use crate::matrix::ExpressionMatrix;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileMethod {
    /// Linear interpolation between order statistics (R's type 7).
    #[default]
    Linear,
    /// Tukey's hinges: medians of the lower and upper halves, each half
    /// including the overall median when the count is odd.
    TukeyHinges,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxplotOptions {
    pub method: QuantileMethod,
    /// Fences sit at `q1 - coef * IQR` and `q3 + coef * IQR`.
    pub whisker_coef: f64,
}

impl Default for BoxplotOptions {
    fn default() -> Self {
        BoxplotOptions {
            method: QuantileMethod::Linear,
            whisker_coef: defaults::WHISKER_COEF,
        }
    }
}

impl BoxplotOptions {
    pub fn validate(&self) -> Result<()> {
        if self.whisker_coef > 0.0 && self.whisker_coef.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "whisker coefficient must be > 0, got {}",
                self.whisker_coef
            )))
        }
    }
}

/// Five-number summary plus outliers for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    #[serde(rename = "sample")]
    pub sample_id: String,
    pub group: Option<String>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

impl BoxplotStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    pub fn with_label(mut self, sample_id: impl Into<String>, group: Option<String>) -> Self {
        self.sample_id = sample_id.into();
        self.group = group;
        self
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        let finite = [self.median, self.q1, self.q3, self.whisker_low, self.whisker_high]
            .iter()
            .chain(&self.outliers)
            .all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::NonFiniteSummary(self.sample_id.clone()))
        }
    }
}

/// `y_ij − Med(y_∗j)` with the source matrix's ids and groups.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationMatrix(ExpressionMatrix);

impl DeviationMatrix {
    pub fn deviations(&self) -> ndarray::ArrayView2<'_, f64> {
        self.0.values()
    }

    pub fn as_matrix(&self) -> &ExpressionMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ExpressionMatrix {
        self.0
    }
}

fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Median of sorted data; even counts average the two middle values.
fn median_sorted(x: &[f64]) -> f64 {
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        (x[n / 2 - 1] + x[n / 2]) / 2.0
    }
}

pub fn median(values: ArrayView1<f64>) -> f64 {
    median_sorted(&sorted(values.iter().copied()))
}

/// Type-7 quantile of sorted data at probability `p`.
fn linear_quantile_sorted(x: &[f64], p: f64) -> f64 {
    let h = (x.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= x.len() || frac == 0.0 {
        x[lo]
    } else {
        x[lo] + frac * (x[lo + 1] - x[lo])
    }
}

fn quartiles_sorted(x: &[f64], method: QuantileMethod) -> (f64, f64) {
    match method {
        QuantileMethod::Linear => (linear_quantile_sorted(x, 0.25), linear_quantile_sorted(x, 0.75)),
        QuantileMethod::TukeyHinges => {
            let half = x.len().div_ceil(2);
            (median_sorted(&x[..half]), median_sorted(&x[x.len() - half..]))
        }
    }
}

/// Boxplot summary of a value set. The returned stats carry an empty sample id.
pub fn boxplot_stats(values: &[f64], opts: &BoxplotOptions) -> Result<BoxplotStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("boxplot of zero values"));
    }
    opts.validate()?;
    Ok(boxplot_sorted(&sorted(values.iter().copied()), opts))
}

fn boxplot_sorted(x: &[f64], opts: &BoxplotOptions) -> BoxplotStats {
    let median = median_sorted(x);
    let (q1, q3) = quartiles_sorted(x, opts.method);
    let reach = opts.whisker_coef * (q3 - q1);
    let (fence_low, fence_high) = (q1 - reach, q3 + reach);

    let first_in = x.partition_point(|&v| v < fence_low);
    let end_in = x.partition_point(|&v| v <= fence_high);
    // With a small coefficient the fences may hold no datum beyond a quartile;
    // the whisker then collapses onto the box edge.
    let whisker_low = x.get(first_in).copied().filter(|&v| v <= q1).unwrap_or(q1);
    let whisker_high = end_in
        .checked_sub(1)
        .map(|k| x[k])
        .filter(|&v| v >= q3)
        .unwrap_or(q3);
    let outliers = x[..first_in].iter().chain(&x[end_in..]).copied().collect();
    BoxplotStats {
        sample_id: String::new(),
        group: None,
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers,
    }
}

/// Median of every feature column across samples.
pub fn gene_medians(matrix: &ExpressionMatrix) -> Array1<f64> {
    let values = matrix.values();
    Array1::from(par::map_indices(matrix.n_features(), |j| median(values.column(j))))
}

/// Deviations of each value from its feature's median.
pub fn rle_deviations(matrix: &ExpressionMatrix) -> DeviationMatrix {
    if matrix.n_samples() < 2 {
        log::warn!("RLE deviations of a single sample are identically zero");
    }
    let medians = gene_medians(matrix);
    let dev: Array2<f64> = &matrix.values() - &medians;
    DeviationMatrix(
        matrix
            .with_values(dev)
            .expect("finite input minus finite medians is finite"),
    )
}

/// One RLE boxplot per sample, in sample order.
///
/// Deviations are computed one sample at a time; the full deviation matrix is
/// never materialised.
pub fn rle_summary(matrix: &ExpressionMatrix, opts: &BoxplotOptions) -> Result<Vec<BoxplotStats>> {
    if matrix.n_samples() < 2 {
        log::warn!("RLE summary of a single sample is identically zero");
    }
    let medians = gene_medians(matrix);
    summarise_rows(matrix, opts, |i| {
        sorted(matrix.sample(i).iter().zip(&medians).map(|(y, med)| y - med))
    })
}

/// One boxplot of raw values per sample.
pub fn standard_boxplot_summary(matrix: &ExpressionMatrix, opts: &BoxplotOptions) -> Result<Vec<BoxplotStats>> {
    summarise_rows(matrix, opts, |i| sorted(matrix.sample(i).iter().copied()))
}

fn summarise_rows<F>(matrix: &ExpressionMatrix, opts: &BoxplotOptions, row: F) -> Result<Vec<BoxplotStats>>
where
    F: Fn(usize) -> Vec<f64> + Sync + Send,
{
    opts.validate()?;
    Ok(par::map_indices(matrix.n_samples(), |i| {
        boxplot_sorted(&row(i), opts).with_label(
            matrix.sample_ids()[i].clone(),
            matrix.group(i).map(str::to_string),
        )
    }))
}

pub fn summaries_to_json(summaries: &[BoxplotStats]) -> Result<String> {
    Ok(serde_json::to_string_pretty(summaries)?)
}

pub fn summaries_from_json(text: &str) -> Result<Vec<BoxplotStats>> {
    Ok(serde_json::from_str(text)?)
}

/// CSV form: one row per sample, outliers joined with `;` in the last field.
pub fn summaries_to_csv(summaries: &[BoxplotStats]) -> String {
    let mut out = String::from("sample,group,median,q1,q3,whisker_low,whisker_high,outliers\n");
    for s in summaries {
        let outliers: Vec<String> = s.outliers.iter().map(f64::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            csv_field(&s.sample_id),
            csv_field(s.group.as_deref().unwrap_or("")),
            s.median,
            s.q1,
            s.q3,
            s.whisker_low,
            s.whisker_high,
            outliers.join(";")
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
