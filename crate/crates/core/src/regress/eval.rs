use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, ModelSpec};
use crate::dataset::{kfold_plan, Dataset};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mse: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub mse: f64,
    pub r2: f64,
    pub per_fold: Vec<Score>,
}

/// Mean squared error and coefficient of determination.
pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<Score> {
    if y_true.len() != y_pred.len() {
        return Err(Error::param(format!(
            "{} targets but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.len() < 2 {
        return Err(Error::param("evaluation needs at least two points"));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum();
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Undefined("R^2 of a constant target".into()));
    }
    Ok(Score {
        mse: ss_res / n,
        r2: 1.0 - ss_res / ss_tot,
    })
}

/// k-fold cross-validation: each fold is scored by a model trained on the
/// other `k - 1` folds, then the model is dropped. Folds train in parallel;
/// per-fold seeds derive from `seed`, so the report is reproducible.
pub fn cross_validate(dataset: &Dataset, spec: &ModelSpec, k: usize, seed: u64) -> Result<AccuracyReport> {
    let plan = kfold_plan(dataset, k, seed)?;
    let per_fold: Vec<Score> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let wrap = |e: Error| Error::Fold {
                fold,
                source: Box::new(e),
            };
            let train_set = dataset.subset(&plan.train_indices(fold));
            let test_set = dataset.subset(&plan.test_indices(fold));
            let model = train(&train_set, spec, derive_seed(seed, &[fold as u64])).map_err(wrap)?;
            let pred = model.predict_dataset(&test_set).map_err(wrap)?;
            evaluate(&test_set.labels(), &pred).map_err(wrap)
        })
        .collect::<Result<_>>()?;
    let kf = k as f64;
    Ok(AccuracyReport {
        mse: per_fold.iter().map(|s| s.mse).sum::<f64>() / kf,
        r2: per_fold.iter().map(|s| s.r2).sum::<f64>() / kf,
        per_fold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        let y = [1.0, 2.0, 3.0];
        let s = evaluate(&y, &y).unwrap();
        assert_eq!((s.mse, s.r2), (0.0, 1.0));

        let s = evaluate(&y, &[2.0, 2.0, 2.0]).unwrap();
        assert!((s.mse - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.r2, 0.0);

        let s = evaluate(&y, &[1.0, 2.0, 4.0]).unwrap();
        assert!((s.mse - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.r2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn evaluate_errors() {
        assert!(matches!(evaluate(&[2.0, 2.0], &[2.0, 2.0]), Err(Error::Undefined(_))));
        assert!(evaluate(&[1.0], &[1.0]).is_err());
        assert!(evaluate(&[1.0, 2.0], &[1.0]).is_err());
    }
}
