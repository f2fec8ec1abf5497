//! Feature ranking by principal-component contribution indices.
//!
//! Each feature column is projected onto the leading principal directions of
//! the data matrix; the summed absolute projections are min-max normalised
//! into a contribution index, and features are ranked by it.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Which covariance the decomposition is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// `n × n` covariance between samples, treating each feature column as
    /// one observation. Eigenvectors live in sample space, so feature columns
    /// project onto them directly.
    Sample,
    /// Conventional `d × d` covariance between features.
    Feature,
}

/// Per-column preprocessing applied before the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    None,
    /// Subtract each column's mean.
    Center,
    /// Subtract the mean and divide by the standard deviation; constant
    /// columns become zero.
    Standardize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankingConfig {
    pub axis: Axis,
    pub scaling: Scaling,
    /// Subtract the mean over the observation axis when forming the
    /// covariance. With column-centred input and `Axis::Sample`, leaving this
    /// off makes both axes produce identical indices.
    pub center: bool,
    /// Number of components; `None` picks the smallest count reaching
    /// `energy` of the total eigenvalue mass.
    pub components: Option<usize>,
    pub energy: f64,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            axis: Axis::Sample,
            scaling: Scaling::Center,
            center: false,
            components: None,
            energy: 0.9,
        }
    }
}

/// Eigendecomposition of a covariance matrix, eigenvalues descending.
///
/// For [`Axis::Sample`] only the non-null spectrum is kept (at most `d`
/// pairs, found through the `d × d` Gram matrix); the covariance itself is
/// `n × n` and is built on demand by [`PcaResult::covariance`].
#[derive(Debug, Clone)]
pub struct PcaResult {
    pub axis: Axis,
    pub eigenvalues: Vec<f64>,
    /// One unit-norm eigenvector per column, paired with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    /// Numerical rank of the covariance.
    pub rank: usize,
    pub warning: Option<String>,
    centered: DMatrix<f64>,
    denom: f64,
}

impl PcaResult {
    /// The covariance matrix the eigenpairs belong to.
    pub fn covariance(&self) -> DMatrix<f64> {
        let a = &self.centered;
        match self.axis {
            Axis::Feature => a.transpose() * a / self.denom,
            Axis::Sample => a * a.transpose() / self.denom,
        }
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map(Vec::len).unwrap_or(0);
    if n < 2 || d == 0 {
        return Err(Error::param(format!("PCA needs at least 2 rows and 1 column, got {n}x{d}")));
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::param("ragged data matrix"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("data matrix contains non-finite values"));
    }
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Flips each column so that its largest-magnitude entry is positive.
fn fix_signs(v: &mut DMatrix<f64>) {
    for mut col in v.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

fn numerical_rank(values: &[f64], scale: f64) -> usize {
    let tol = scale.max(f64::MIN_POSITIVE) * 1e-10;
    values.iter().filter(|&&l| l > tol).count()
}

pub fn pca(data: &[Vec<f64>], axis: Axis, center: bool) -> Result<PcaResult> {
    let mut a = to_matrix(data)?;
    let (n, d) = a.shape();
    match axis {
        Axis::Feature => {
            if center {
                for mut col in a.column_iter_mut() {
                    let mean = col.mean();
                    col.add_scalar_mut(-mean);
                }
            }
            let denom = (n - 1) as f64;
            let (values, mut vectors) = sorted_eigen(a.transpose() * &a / denom);
            fix_signs(&mut vectors);
            let trace: f64 = values.iter().map(|v| v.abs()).sum();
            let rank = numerical_rank(&values, trace);
            Ok(PcaResult {
                axis,
                warning: (rank == 0).then(|| "covariance is zero: all rows identical".to_string()),
                eigenvalues: values,
                eigenvectors: vectors,
                rank,
                centered: a,
                denom,
            })
        }
        Axis::Sample => {
            if center {
                if d < 2 {
                    return Err(Error::param("sample-axis centring needs at least 2 columns"));
                }
                for mut row in a.row_iter_mut() {
                    let mean = row.mean();
                    row.add_scalar_mut(-mean);
                }
            }
            let denom = if center { (d - 1) as f64 } else { d as f64 };
            // A Aᵀ v = λ v and Aᵀ A u = λ u share their non-zero spectrum, with
            // v = A u / ‖A u‖; the small side is d × d.
            let (gram_values, gram_vectors) = sorted_eigen(a.transpose() * &a / denom);
            let trace: f64 = gram_values.iter().map(|v| v.abs()).sum();
            let rank = numerical_rank(&gram_values, trace);
            let mut vectors = DMatrix::zeros(n, rank);
            for i in 0..rank {
                let mut v = &a * gram_vectors.column(i);
                let norm = v.norm();
                v /= norm;
                vectors.set_column(i, &v);
            }
            fix_signs(&mut vectors);
            Ok(PcaResult {
                axis,
                warning: (rank == 0).then(|| "covariance is zero: all rows identical".to_string()),
                eigenvalues: gram_values[..rank].to_vec(),
                eigenvectors: vectors,
                rank,
                centered: a,
                denom,
            })
        }
    }
}

/// Smallest number of leading eigenvalues whose sum reaches `energy` of the
/// total.
pub fn components_for_energy(eigenvalues: &[f64], energy: f64) -> usize {
    let positive: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = positive.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for (i, l) in positive.iter().enumerate() {
        acc += l;
        if acc >= energy * total * (1.0 - 1e-12) {
            return i + 1;
        }
    }
    positive.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionReport {
    pub feature_names: Vec<String>,
    pub raw_indices: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Feature names by normalised index, highest first; ties keep column order.
    pub ranking: Vec<String>,
    pub p_used: usize,
    pub eigenvalues: Vec<f64>,
    pub config: RankingConfig,
}

fn preprocess(data: &[Vec<f64>], scaling: Scaling) -> Vec<Vec<f64>> {
    let n = data.len() as f64;
    let d = data.first().map(Vec::len).unwrap_or(0);
    if scaling == Scaling::None {
        return data.to_vec();
    }
    let mean: Vec<f64> = (0..d).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| (data.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    data.iter()
        .map(|r| {
            (0..d)
                .map(|j| {
                    let c = r[j] - mean[j];
                    match scaling {
                        Scaling::Standardize if sd[j] > 0.0 => c / sd[j],
                        Scaling::Standardize => 0.0,
                        _ => c,
                    }
                })
                .collect()
        })
        .collect()
}

/// Contribution index of every column of `data`: the sum over the first `p`
/// principal directions of the absolute projection of the (preprocessed)
/// feature column, min-max normalised to `[0, 1]`.
///
/// Absolute values make the index independent of eigenvector sign. In
/// feature-axis mode the projection is taken onto the unit score vector of
/// each component, which has the same length as a feature column.
pub fn contribution_indices(
    data: &[Vec<f64>],
    feature_names: &[String],
    config: &RankingConfig,
) -> Result<ContributionReport> {
    let d = data.first().map(Vec::len).unwrap_or(0);
    if feature_names.len() != d {
        return Err(Error::param(format!("{} names for {d} columns", feature_names.len())));
    }
    if !(config.energy > 0.0 && config.energy <= 1.0) {
        return Err(Error::param(format!("energy fraction must be in (0, 1], got {}", config.energy)));
    }
    let prepared = preprocess(data, config.scaling);
    let result = pca(&prepared, config.axis, config.center)?;
    if result.rank == 0 {
        return Err(Error::Undefined(
            result.warning.unwrap_or_else(|| "covariance has rank 0".into()),
        ));
    }
    let p = match config.components {
        Some(p) if p == 0 || p > result.rank => {
            return Err(Error::param(format!(
                "component count must be in 1..={}, got {p}",
                result.rank
            )))
        }
        Some(p) => p,
        None => components_for_energy(&result.eigenvalues[..result.rank], config.energy),
    };

    let a = DMatrix::from_fn(prepared.len(), d, |i, j| prepared[i][j]);
    let mut raw = vec![0.0; d];
    for i in 0..p {
        let x = result.eigenvectors.column(i);
        match config.axis {
            Axis::Sample => {
                for (j, c) in raw.iter_mut().enumerate() {
                    *c += a.column(j).dot(&x).abs();
                }
            }
            Axis::Feature => {
                let norm = (&result.centered * x).norm();
                for (j, c) in raw.iter_mut().enumerate() {
                    *c += (norm * x[j]).abs();
                }
            }
        }
    }
    let normalized = min_max(&raw);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| normalized[b].total_cmp(&normalized[a]));
    Ok(ContributionReport {
        feature_names: feature_names.to_vec(),
        ranking: order.iter().map(|&j| feature_names[j].clone()).collect(),
        raw_indices: raw,
        normalized,
        p_used: p,
        eigenvalues: result.eigenvalues,
        config: *config,
    })
}

/// Maps the smallest value to 0 and the largest to 1. A constant input maps
/// to all zeros.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

pub fn rank_dataset(dataset: &Dataset, config: &RankingConfig) -> Result<ContributionReport> {
    contribution_indices(&dataset.features(), &dataset.feature_names, config)
}

impl ContributionReport {
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.ranking.iter().position(|f| f == feature).map(|r| r + 1)
    }

    pub fn top(&self, m: usize) -> &[String] {
        &self.ranking[..m.min(self.ranking.len())]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,raw_index,normalized_index,rank\n");
        for name in &self.ranking {
            let j = self.feature_names.iter().position(|f| f == name).unwrap_or(0);
            let _ = writeln!(
                out,
                "{name},{},{},{}",
                self.raw_indices[j],
                self.normalized[j],
                self.rank_of(name).unwrap_or(0)
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<4} {:<8} {:>14} {:>10}\n",
            "rank", "feature", "raw index", "normalized"
        );
        for (r, name) in self.ranking.iter().enumerate() {
            let j = self.feature_names.iter().position(|f| f == name).unwrap_or(0);
            let _ = writeln!(
                out,
                "{:<4} {:<8} {:>14.6} {:>10.4}",
                r + 1,
                name,
                self.raw_indices[j],
                self.normalized[j]
            );
        }
        let _ = writeln!(
            out,
            "components used: {} (indices sum absolute projections; eigenvector signs do not matter)",
            self.p_used
        );
        out
    }
}

/// Keeps the first `m` ranked features, in ranking order.
pub fn select_features(dataset: &Dataset, ranking: &[String], m: usize) -> Result<Dataset> {
    if m == 0 || m > ranking.len() || m > dataset.dim() {
        return Err(Error::param(format!(
            "selected feature count must be in 1..={}, got {m}",
            ranking.len().min(dataset.dim())
        )));
    }
    let columns: Vec<usize> = ranking[..m]
        .iter()
        .map(|name| {
            dataset
                .column_index(name)
                .ok_or_else(|| Error::param(format!("dataset has no feature column {name:?}")))
        })
        .collect::<Result<_>>()?;
    let mut out = dataset.clone();
    out.feature_names = ranking[..m].to_vec();
    for s in &mut out.samples {
        s.features = columns.iter().map(|&c| s.features[c]).collect();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    fn random_matrix(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::rng_from_seed(seed);
        (0..n)
            .map(|_| (0..d).map(|j| rng.random::<f64>() * (j + 1) as f64).collect())
            .collect()
    }

    #[test]
    fn identity_has_equal_eigenvalues() {
        let d = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let r = pca(&d, Axis::Feature, false).unwrap();
        assert!((r.eigenvalues[0] - r.eigenvalues[1]).abs() < 1e-12);
    }

    #[test]
    fn doubled_column_is_rank_deficient() {
        let d: Vec<Vec<f64>> = random_matrix(20, 2, 4).into_iter().map(|r| vec![r[0], 2.0 * r[0], r[1]]).collect();
        let r = pca(&d, Axis::Feature, true).unwrap();
        assert!(r.eigenvalues[2].abs() < 1e-12);
        assert_eq!(r.rank, 2);
    }

    #[test]
    fn identical_rows_warn() {
        let d = vec![vec![1.0, 2.0]; 5];
        let r = pca(&d, Axis::Feature, true).unwrap();
        assert_eq!(r.rank, 0);
        assert!(r.warning.is_some());
        assert!(contribution_indices(&d, &names(2), &RankingConfig::default()).is_err());
    }

    #[test]
    fn gram_route_matches_full_eigen() {
        let d = random_matrix(12, 4, 9);
        for center in [false, true] {
            let r = pca(&d, Axis::Sample, center).unwrap();
            let (full_values, full_vectors) = sorted_eigen(r.covariance());
            for i in 0..r.rank {
                assert!((r.eigenvalues[i] - full_values[i]).abs() < 1e-10);
                let dot = r.eigenvectors.column(i).dot(&full_vectors.column(i));
                assert!((dot.abs() - 1.0).abs() < 1e-8);
            }
            for l in &full_values[r.rank..] {
                assert!(l.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn axes_agree_on_centred_data() {
        let d = random_matrix(40, 6, 2);
        let base = RankingConfig {
            components: Some(3),
            ..RankingConfig::default()
        };
        let s = contribution_indices(&d, &names(6), &base).unwrap();
        let f = contribution_indices(
            &d,
            &names(6),
            &RankingConfig {
                axis: Axis::Feature,
                ..base
            },
        )
        .unwrap();
        for (a, b) in s.raw_indices.iter().zip(&f.raw_indices) {
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_and_duplicate_columns() {
        let d: Vec<Vec<f64>> = random_matrix(30, 3, 5).into_iter().map(|r| vec![r[0], r[1], 0.0, r[1], r[2]]).collect();
        let rep = contribution_indices(&d, &names(5), &RankingConfig { components: Some(2), ..Default::default() }).unwrap();
        assert_eq!(rep.raw_indices[2], 0.0);
        assert_eq!(rep.normalized[2], 0.0);
        assert!((rep.raw_indices[1] - rep.raw_indices[3]).abs() < 1e-10);
        assert_eq!(rep.ranking.last().unwrap(), "f2");
        let max = rep.normalized.iter().copied().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn component_count_bounds() {
        let d = random_matrix(30, 3, 6);
        for p in [0, 4] {
            let cfg = RankingConfig {
                components: Some(p),
                ..Default::default()
            };
            assert!(contribution_indices(&d, &names(3), &cfg).is_err());
        }
    }

    #[test]
    fn energy_rule() {
        assert_eq!(components_for_energy(&[9.0, 0.5, 0.5], 0.9), 1);
        assert_eq!(components_for_energy(&[5.0, 4.0, 1.0], 0.9), 2);
        assert_eq!(components_for_energy(&[1.0, 1.0, 1.0], 1.0), 3);
    }
}
