//! The sample × feature matrix model.

use std::collections::{HashMap, HashSet};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Log-scale values with samples as rows and features as columns.
///
/// Construction checks that every value is finite, that the id lists match the
/// matrix shape and that ids are unique. The type is immutable afterwards;
/// every transformation returns a new matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    values: Array2<f64>,
    sample_ids: Vec<String>,
    feature_ids: Vec<String>,
    groups: Option<Vec<String>>,
}

impl ExpressionMatrix {
    pub fn new(
        values: Array2<f64>,
        sample_ids: Vec<String>,
        feature_ids: Vec<String>,
        groups: Option<Vec<String>>,
    ) -> Result<Self> {
        let (m, n) = values.dim();
        if m == 0 || n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if sample_ids.len() != m {
            return Err(Error::Shape(format!(
                "{} sample ids for {m} rows",
                sample_ids.len()
            )));
        }
        if feature_ids.len() != n {
            return Err(Error::Shape(format!(
                "{} feature ids for {n} columns",
                feature_ids.len()
            )));
        }
        if let Some(g) = &groups {
            if g.len() != m {
                return Err(Error::Shape(format!("{} group labels for {m} samples", g.len())));
            }
        }
        check_unique("sample", &sample_ids)?;
        check_unique("feature", &feature_ids)?;
        check_finite(values.view())?;
        Ok(ExpressionMatrix {
            values,
            sample_ids,
            feature_ids,
            groups,
        })
    }

    /// Builds a matrix with generated ids `S1..Sm` and `G1..Gn`.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let (m, n) = values.dim();
        Self::new(values, default_ids("S", m), default_ids("G", n), None)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn sample(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn feature(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn groups(&self) -> Option<&[String]> {
        self.groups.as_deref()
    }

    pub fn group(&self, i: usize) -> Option<&str> {
        self.groups.as_ref().map(|g| g[i].as_str())
    }

    /// Same ids and groups, new values of the same shape.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        if values.dim() != self.values.dim() {
            return Err(Error::Shape(format!(
                "replacement values are {:?}, expected {:?}",
                values.dim(),
                self.values.dim()
            )));
        }
        check_finite(values.view())?;
        Ok(ExpressionMatrix {
            values,
            sample_ids: self.sample_ids.clone(),
            feature_ids: self.feature_ids.clone(),
            groups: self.groups.clone(),
        })
    }

    pub fn with_groups(mut self, groups: Vec<String>) -> Result<Self> {
        if groups.len() != self.n_samples() {
            return Err(Error::Shape(format!(
                "{} group labels for {} samples",
                groups.len(),
                self.n_samples()
            )));
        }
        self.groups = Some(groups);
        Ok(self)
    }

    /// Transposed values; ids swap roles and groups are dropped.
    pub fn transpose(&self) -> Result<Self> {
        Self::new(
            self.values.t().to_owned(),
            self.feature_ids.clone(),
            self.sample_ids.clone(),
            None,
        )
    }

    /// Keeps the listed feature columns, in the given order.
    pub fn select_features(&self, keep: &[usize]) -> Result<Self> {
        Self::new(
            self.values.select(Axis(1), keep),
            self.sample_ids.clone(),
            keep.iter().map(|&j| self.feature_ids[j].clone()).collect(),
            self.groups.clone(),
        )
    }

    /// Replaces every value by `log_base(value + offset)`.
    pub fn log_transform(&self, base: f64, offset: f64) -> Result<Self> {
        if !base.is_finite() || base <= 1.0 {
            return Err(Error::InvalidConfig(format!("log base must be > 1, got {base}")));
        }
        if !offset.is_finite() || offset < 0.0 {
            return Err(Error::InvalidConfig(format!("log offset must be >= 0, got {offset}")));
        }
        if let Some(((i, j), &v)) = self.values.indexed_iter().find(|(_, &v)| v + offset <= 0.0) {
            return Err(Error::LogDomain {
                sample: self.sample_ids[i].clone(),
                feature: self.feature_ids[j].clone(),
                value: v,
            });
        }
        let ln_base = base.ln();
        // log2 is exact on powers of two, so route base 2 through it.
        let values = if base == 2.0 {
            self.values.mapv(|v| (v + offset).log2())
        } else {
            self.values.mapv(|v| (v + offset).ln() / ln_base)
        };
        self.with_values(values)
    }

    /// Populates group labels from a sample id → group map.
    ///
    /// Every key must name a sample of this matrix. Samples missing from the
    /// map get `default` or cause an error when no default is given.
    pub fn attach_groups(&self, labels: &HashMap<String, String>, default: Option<&str>) -> Result<Self> {
        let known: HashSet<&str> = self.sample_ids.iter().map(String::as_str).collect();
        let mut unknown: Vec<&String> = labels.keys().filter(|k| !known.contains(k.as_str())).collect();
        unknown.sort();
        if let Some(k) = unknown.first() {
            return Err(Error::UnknownSample((*k).clone()));
        }
        let groups = self
            .sample_ids
            .iter()
            .map(|s| match (labels.get(s), default) {
                (Some(g), _) => Ok(g.clone()),
                (None, Some(d)) => Ok(d.to_string()),
                (None, None) => Err(Error::MissingGroup(s.clone())),
            })
            .collect::<Result<Vec<_>>>()?;
        self.clone().with_groups(groups)
    }
}

pub(crate) fn default_ids(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

fn check_unique(kind: &'static str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

fn check_finite(values: ArrayView2<f64>) -> Result<()> {
    match values.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((sample, feature), _)) => Err(Error::NonFinite { sample, feature }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small() -> ExpressionMatrix {
        ExpressionMatrix::from_values(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap()
    }

    #[test]
    fn default_ids_are_generated() {
        let m = small();
        assert_eq!(m.sample_ids(), ["S1", "S2", "S3"]);
        assert_eq!(m.feature_ids(), ["G1", "G2"]);
    }

    #[test]
    fn rejects_nan_and_duplicates() {
        let err = ExpressionMatrix::from_values(array![[1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { sample: 0, feature: 1 }));
        let err = ExpressionMatrix::new(
            array![[1.0], [2.0]],
            vec!["a".into(), "a".into()],
            vec!["g".into()],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId { kind: "sample", .. }));
    }

    #[test]
    fn log_transform_examples() {
        let m = ExpressionMatrix::from_values(array![[8.0, 1.0, 0.0]]).unwrap();
        let err = m.log_transform(2.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::LogDomain { ref feature, .. } if feature == "G3"));

        let l = m.log_transform(2.0, 1.0).unwrap();
        assert_eq!(l.values()[[0, 2]], 0.0);
        let l = ExpressionMatrix::from_values(array![[8.0, 1.0]])
            .unwrap()
            .log_transform(2.0, 0.0)
            .unwrap();
        assert_eq!(l.values()[[0, 0]], 3.0);
        assert_eq!(l.values()[[0, 1]], 0.0);
        let l10 = ExpressionMatrix::from_values(array![[1.0, 1000.0]])
            .unwrap()
            .log_transform(10.0, 0.0)
            .unwrap();
        assert_eq!(l10.values()[[0, 0]], 0.0);
        assert!((l10.values()[[0, 1]] - 3.0).abs() < 1e-12);
        assert_eq!(l10.sample_ids(), ["S1"]);
    }

    #[test]
    fn attach_groups_examples() {
        let m = small();
        let mut map: HashMap<String, String> =
            [("S1", "A"), ("S2", "A"), ("S3", "B")].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        assert_eq!(m.attach_groups(&map, None).unwrap().groups().unwrap(), ["A", "A", "B"]);

        map.remove("S3");
        assert_eq!(
            m.attach_groups(&map, Some("other")).unwrap().groups().unwrap(),
            ["A", "A", "other"]
        );
        assert!(matches!(m.attach_groups(&map, None), Err(Error::MissingGroup(s)) if s == "S3"));

        map.insert("S9".into(), "A".into());
        assert!(matches!(m.attach_groups(&map, Some("x")), Err(Error::UnknownSample(s)) if s == "S9"));
    }

    #[test]
    fn select_and_transpose() {
        let m = small();
        let s = m.select_features(&[1]).unwrap();
        assert_eq!(s.feature_ids(), ["G2"]);
        assert_eq!(s.values().column(0).to_vec(), vec![2.0, 4.0, 6.0]);
        let t = m.transpose().unwrap();
        assert_eq!(t.values()[[1, 2]], 6.0);
        assert_eq!(t.sample_ids(), ["G1", "G2"]);
    }
}
