//! Weighted four-feature score, top-K selection and the OLS weight fit.

use crate::embed::{similarity, Embedder};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureVector {
    /// Reference code vs. subject code.
    pub x_raw: f64,
    /// Reference code summary vs. subject code summary.
    pub x_summary: f64,
    /// Reference property vs. generated property.
    pub y_raw: f64,
    /// Their summaries.
    pub y_summary: f64,
}

impl FeatureVector {
    pub fn new(x_raw: f64, x_summary: f64, y_raw: f64, y_summary: f64) -> Self {
        FeatureVector {
            x_raw,
            x_summary,
            y_raw,
            y_summary,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x_raw, self.x_summary, self.y_raw, self.y_summary]
    }
}

/// Code and property texts of one side of a comparison, with summaries.
#[derive(Clone, Copy, Debug)]
pub struct Texts<'a> {
    pub code: &'a str,
    pub code_summary: &'a str,
    pub property: &'a str,
    pub property_summary: &'a str,
}

/// Features of a generated property (`subject`) against the reference it
/// was generated from.
pub fn features(e: &dyn Embedder, reference: Texts, subject: Texts) -> Result<FeatureVector> {
    Ok(FeatureVector {
        x_raw: similarity(e, reference.code, subject.code)?,
        x_summary: similarity(e, reference.code_summary, subject.code_summary)?,
        y_raw: similarity(e, subject.property, reference.property)?,
        y_summary: similarity(e, subject.property_summary, reference.property_summary)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl Weights {
    /// Published fit; the components sum to 0.999.
    pub const PUBLISHED: Weights = Weights {
        alpha: 0.134,
        beta: 0.556,
        gamma: 0.141,
        eta: 0.168,
    };

    pub fn from_array(a: [f64; 4]) -> Self {
        Weights {
            alpha: a[0],
            beta: a[1],
            gamma: a[2],
            eta: a[3],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.eta]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Divide by the sum so the components add to one.
    pub fn normalized(&self) -> Weights {
        let s = self.sum();
        Weights::from_array(self.as_array().map(|w| w / s))
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::PUBLISHED.normalized()
    }
}

pub fn score(fv: &FeatureVector, w: &Weights) -> Result<f64> {
    if fv.as_array().iter().chain(w.as_array().iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(w.alpha * fv.x_raw + w.beta * fv.x_summary + w.gamma * fv.y_raw + w.eta * fv.y_summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ranked<T> {
    pub item: T,
    pub score: f64,
}

/// Order by score, highest first, ties by id ascending, and keep `k`.
pub fn rank_all<T>(items: Vec<(T, FeatureVector)>, id: impl Fn(&T) -> &str, w: &Weights) -> Result<Vec<Ranked<T>>> {
    let mut out = items
        .into_iter()
        .map(|(item, fv)| {
            Ok(Ranked {
                score: score(&fv, w)?,
                item,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| id(&a.item).cmp(id(&b.item))));
    Ok(out)
}

pub fn rank_topk<T>(
    items: Vec<(T, FeatureVector)>,
    id: impl Fn(&T) -> &str,
    w: &Weights,
    k: usize,
) -> Result<Vec<Ranked<T>>> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let mut out = rank_all(items, id, w)?;
    out.truncate(k);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    #[serde(flatten)]
    pub features: FeatureVector,
    pub actual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    /// Percent, over records with a nonzero actual value.
    pub mape: f64,
    /// Mean of actual minus predicted.
    pub mde: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub raw: Weights,
    pub normalized: Weights,
    pub metrics: Metrics,
}

pub fn metrics(actual: &[f64], predicted: &[f64]) -> Metrics {
    let n = actual.len() as f64;
    let err: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| a - p).collect();
    let mae = err.iter().map(|e| e.abs()).sum::<f64>() / n;
    let mse = err.iter().map(|e| e * e).sum::<f64>() / n;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    let ss_res: f64 = err.iter().map(|e| e * e).sum();
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    let pct: Vec<f64> = actual
        .iter()
        .zip(&err)
        .filter(|(a, _)| **a != 0.0)
        .map(|(a, e)| (e / a).abs())
        .collect();
    let mape = if pct.is_empty() {
        0.0
    } else {
        100.0 * pct.iter().sum::<f64>() / pct.len() as f64
    };
    Metrics {
        mae,
        mse,
        rmse: mse.sqrt(),
        r2,
        mape,
        mde: err.iter().sum::<f64>() / n,
    }
}

/// Least squares without intercept, solved through the normal equations.
pub fn fit_weights(records: &[TrainingRecord]) -> Result<Fit> {
    if records.len() < 4 {
        return Err(Error::TooFewRecords(records.len()));
    }
    let n = records.len();
    let x = DMatrix::from_fn(n, 4, |i, j| records[i].features.as_array()[j]);
    let y = DVector::from_iterator(n, records.iter().map(|r| r.actual));
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let xtx = x.transpose() * &x;
    let scale = xtx.amax().max(1.0);
    if xtx.clone().svd(false, false).rank(1e-12 * scale) < 4 {
        return Err(Error::RankDeficient);
    }
    let chol = xtx.cholesky().ok_or(Error::RankDeficient)?;
    let w = chol.solve(&(x.transpose() * &y));
    let raw = Weights::from_array([w[0], w[1], w[2], w[3]]);
    let predicted: Vec<f64> = (x * w).iter().copied().collect();
    let actual: Vec<f64> = y.iter().copied().collect();
    Ok(Fit {
        raw,
        normalized: raw.normalized(),
        metrics: metrics(&actual, &predicted),
    })
}

pub fn read_training(path: &std::path::Path) -> Result<Vec<TrainingRecord>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
