//! Gestalt-gated late fusion.
//!
//! Each video takes exactly one pathway: `with_audio` when its gestalt score
//! is at or above the threshold, `without_audio` otherwise (including videos
//! with no gestalt score). The fused prediction is the pathway's convex
//! weighted sum of component predictions.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{format_real, ComponentWeights, Dataset, FusionConfig, WEIGHT_SUM_TOL};
use crate::exec::Exec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("video `{video}`: missing `{component}` prediction")]
    MissingPrediction { video: String, component: String },
    #[error("no `{0}` column in predictions")]
    MissingColumn(String),
    #[error("invalid weights: {0}")]
    Weights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pathway {
    WithAudio,
    WithoutAudio,
}

impl Pathway {
    pub fn as_str(self) -> &'static str {
        match self {
            Pathway::WithAudio => "with_audio",
            Pathway::WithoutAudio => "without_audio",
        }
    }
}

impl fmt::Display for Pathway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gate rule; equality opens the gate.
pub fn route(gestalt: f64, threshold: f64) -> Pathway {
    if gestalt >= threshold {
        Pathway::WithAudio
    } else {
        Pathway::WithoutAudio
    }
}

fn route_opt(gestalt: Option<f64>, threshold: f64) -> Pathway {
    gestalt.map_or(Pathway::WithoutAudio, |g| route(g, threshold))
}

fn check_weights(weights: &ComponentWeights) -> Result<(), FusionError> {
    if weights.0.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
        return Err(FusionError::Weights(format!("{:?} has a negative entry", weights.0)));
    }
    let sum: f64 = weights.0.values().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(FusionError::Weights(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// Σ wᵢ·predᵢ over the named weights.
pub fn fuse_weighted<S: AsRef<str>>(preds: &[(S, f64)], weights: &ComponentWeights) -> Result<f64, FusionError> {
    check_weights(weights)?;
    weights.iter().try_fold(0.0, |acc, (name, w)| {
        let p = preds
            .iter()
            .find(|(n, _)| n.as_ref() == name)
            .map(|(_, p)| *p)
            .ok_or_else(|| FusionError::MissingPrediction { video: String::new(), component: name.to_string() })?;
        Ok(acc + w * p)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathwayDecision {
    pub video: String,
    pub gestalt: Option<f64>,
    pub pathway: Pathway,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusedRow {
    pub video_id: String,
    pub gestalt: Option<f64>,
    pub pathway: Pathway,
    pub fused_score: f64,
}

type Terms<'a> = Vec<(&'a str, &'a [Option<f64>], f64)>;

/// Config resolved against a dataset's columns: one list of (column, weight)
/// per pathway. A pathway whose columns are absent only fails for videos
/// routed to it.
pub struct FusionPlan<'a> {
    data: &'a Dataset,
    threshold: f64,
    without: Result<Terms<'a>, FusionError>,
    with: Result<Terms<'a>, FusionError>,
}

fn resolve<'a>(
    data: &'a Dataset,
    weights: &ComponentWeights,
    column_for: impl Fn(&str) -> String,
) -> Result<Terms<'a>, FusionError> {
    weights
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(name, w)| {
            let col = column_for(name);
            let key = data.column_names().find(|c| *c == col).ok_or(FusionError::MissingColumn(col))?;
            Ok((key, data.column(key).expect("listed column"), w))
        })
        .collect()
}

impl<'a> FusionPlan<'a> {
    pub fn new(data: &'a Dataset, cfg: &FusionConfig) -> Result<Self, FusionError> {
        check_weights(&cfg.without_audio)?;
        check_weights(&cfg.with_audio)?;
        let plan = Self {
            data,
            threshold: cfg.gestalt_threshold,
            without: resolve(data, &cfg.without_audio, str::to_string),
            with: resolve(data, &cfg.with_audio, |n| cfg.with_audio_column(n).to_string()),
        };
        for (terms, pathway) in [(&plan.without, Pathway::WithoutAudio), (&plan.with, Pathway::WithAudio)] {
            if let Err(e) = terms {
                if data.gestalt.iter().any(|g| route_opt(*g, plan.threshold) == pathway) {
                    return Err(e.clone());
                }
            }
        }
        Ok(plan)
    }

    /// Fuses video `i` as if its gestalt score were `gestalt`.
    pub fn fuse_with_gestalt(&self, i: usize, gestalt: Option<f64>) -> Result<(Pathway, f64), FusionError> {
        let pathway = route_opt(gestalt, self.threshold);
        let terms = match pathway {
            Pathway::WithAudio => &self.with,
            Pathway::WithoutAudio => &self.without,
        };
        let terms = terms.as_ref().map_err(Clone::clone)?;
        let mut acc = 0.0;
        for (name, values, w) in terms {
            let v = values[i].ok_or_else(|| FusionError::MissingPrediction {
                video: self.data.ids[i].clone(),
                component: name.to_string(),
            })?;
            acc += w * v;
        }
        Ok((pathway, acc))
    }

    pub fn fuse(&self, i: usize) -> Result<(Pathway, f64), FusionError> {
        self.fuse_with_gestalt(i, self.data.gestalt[i])
    }
}

/// Fused scores only, in dataset order.
pub fn fused_scores(data: &Dataset, cfg: &FusionConfig) -> Result<Vec<f64>, FusionError> {
    let plan = FusionPlan::new(data, cfg)?;
    (0..data.len()).map(|i| plan.fuse(i).map(|(_, v)| v)).collect()
}

/// Fused scores and pathway decisions for every video, in dataset order
/// regardless of `exec`.
pub fn predict_all(data: &Dataset, cfg: &FusionConfig, exec: Exec) -> Result<Vec<FusedRow>, FusionError> {
    let plan = FusionPlan::new(data, cfg)?;
    exec.map_range(data.len(), |i| {
        plan.fuse(i).map(|(pathway, fused_score)| FusedRow {
            video_id: data.ids[i].clone(),
            gestalt: data.gestalt[i],
            pathway,
            fused_score,
        })
    })
    .into_iter()
    .collect()
}

pub fn decisions(rows: &[FusedRow]) -> Vec<PathwayDecision> {
    rows.iter()
        .map(|r| PathwayDecision { video: r.video_id.clone(), gestalt: r.gestalt, pathway: r.pathway })
        .collect()
}

/// CSV `video_id,gestalt,pathway,fused_score`.
pub fn fused_csv(rows: &[FusedRow]) -> String {
    let mut out = String::from("video_id,gestalt,pathway,fused_score\n");
    for r in rows {
        let g = r.gestalt.map(format_real).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.video_id, g, r.pathway, format_real(r.fused_score)));
    }
    out
}
