//! Audio gestalt: the four proxy features, their normalization, the weighted
//! score, and histogram reports of their distributions.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{
    format_real, io_err, parse_predictions, DataError, GestaltFeatures, TagSet, WEIGHT_SUM_TOL,
};
use crate::exec::Exec;

#[derive(Debug, Error, PartialEq)]
pub enum GestaltError {
    #[error("gestalt score requires normalized features")]
    NotNormalized,
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("distribution report needs at least one score")]
    EmptyScores,
    #[error("distribution report needs at least one bin")]
    NoBins,
    #[error("cannot compute normalization statistics from zero videos")]
    NoVideos,
}

pub const FEATURE_NAMES: [&str; 4] = ["imageability", "hcu", "arousal", "familiarity"];

/// Labels treated as music when no extras are configured (AudioSet root).
pub const DEFAULT_MUSIC_LABELS: [&str; 1] = ["Music"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestaltWeights {
    pub imageability: f64,
    pub hcu: f64,
    pub arousal: f64,
    pub familiarity: f64,
}

impl GestaltWeights {
    pub fn new(imageability: f64, hcu: f64, arousal: f64, familiarity: f64) -> Result<Self, GestaltError> {
        let w = Self { imageability, hcu, arousal, familiarity };
        w.validate().map_err(GestaltError::Weights)?;
        Ok(w)
    }

    /// (0.2, 0.2, 0.2, 0.4): familiarity carries the largest weight.
    pub fn paper() -> Self {
        Self { imageability: 0.2, hcu: 0.2, arousal: 0.2, familiarity: 0.4 }
    }

    pub fn from_array(v: [f64; 4]) -> Result<Self, GestaltError> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.imageability, self.hcu, self.arousal, self.familiarity]
    }

    pub fn validate(&self) -> Result<(), String> {
        let a = self.as_array();
        if a.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(format!("gestalt weights {a:?} must be finite and non-negative"));
        }
        let sum: f64 = a.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(format!("gestalt weights sum to {sum}, expected 1"));
        }
        Ok(())
    }
}

/// How the "top 75%" music-tag rule is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MusicRule {
    /// Confidence at least 0.75 of the top tag's confidence.
    #[default]
    Relative,
    /// Confidence at least 0.75 outright.
    Absolute,
}

impl std::str::FromStr for MusicRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relative" => Ok(MusicRule::Relative),
            "absolute" => Ok(MusicRule::Absolute),
            other => Err(format!("unknown music rule `{other}`")),
        }
    }
}

/// Direction of the musicality → imageability mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageabilityMapping {
    /// Music means low imageability.
    #[default]
    Inverse,
    /// Music scores 1.0 on imageability itself.
    Direct,
}

impl std::str::FromStr for ImageabilityMapping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inverse" => Ok(ImageabilityMapping::Inverse),
            "direct" => Ok(ImageabilityMapping::Direct),
            other => Err(format!("unknown imageability mapping `{other}`")),
        }
    }
}

pub const MUSIC_FRACTION: f64 = 0.75;

pub fn musicality<S: AsRef<str>>(tags: &TagSet, music_labels: &[S], rule: MusicRule) -> f64 {
    let Some(top) = tags.max_confidence() else {
        return 0.0;
    };
    let cutoff = match rule {
        MusicRule::Relative => MUSIC_FRACTION * top,
        MusicRule::Absolute => MUSIC_FRACTION,
    };
    let is_music = tags
        .tags()
        .iter()
        .take_while(|t| t.confidence >= cutoff)
        .any(|t| music_labels.iter().any(|m| m.as_ref() == t.label));
    if is_music {
        1.0
    } else {
        0.0
    }
}

pub fn imageability(musicality_score: f64, mapping: ImageabilityMapping) -> f64 {
    match mapping {
        ImageabilityMapping::Inverse => 1.0 - musicality_score,
        ImageabilityMapping::Direct => musicality_score,
    }
}

/// Top tag confidence; 0 for an empty tag set.
pub fn familiarity(tags: &TagSet) -> f64 {
    tags.max_confidence().unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

/// Per-feature bounds used for min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub ranges: [Range; 4],
    pub source: String,
}

impl NormalizationStats {
    pub fn from_features(features: &[GestaltFeatures], source: impl Into<String>) -> Result<Self, GestaltError> {
        if features.is_empty() {
            return Err(GestaltError::NoVideos);
        }
        let mut ranges = [Range { min: f64::INFINITY, max: f64::NEG_INFINITY }; 4];
        for f in features {
            for (r, v) in ranges.iter_mut().zip(f.as_array()) {
                r.min = r.min.min(v);
                r.max = r.max.max(v);
            }
        }
        Ok(Self { ranges, source: source.into() })
    }

    pub fn scale(&self, f: &GestaltFeatures) -> GestaltFeatures {
        let mut out = [0.0; 4];
        for ((o, r), v) in out.iter_mut().zip(&self.ranges).zip(f.as_array()) {
            *o = if r.max == r.min { 0.5 } else { ((v - r.min) / (r.max - r.min)).clamp(0.0, 1.0) };
        }
        GestaltFeatures::from_array(out, true)
    }
}

pub fn normalize_features(raw: &[GestaltFeatures], stats: &NormalizationStats, exec: Exec) -> Vec<GestaltFeatures> {
    exec.map(raw, |f| stats.scale(f))
}

pub fn gestalt_score(f: &GestaltFeatures, w: &GestaltWeights) -> Result<f64, GestaltError> {
    if !f.normalized {
        return Err(GestaltError::NotNormalized);
    }
    Ok(dot4(&f.as_array(), &w.as_array()))
}

pub(crate) fn dot4(f: &[f64; 4], w: &[f64; 4]) -> f64 {
    f.iter().zip(w).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub median: f64,
    pub n: usize,
}

/// Equal-width histogram over [0, 1]; values outside land in the edge bins.
pub fn distribution_report(scores: &[f64], n_bins: usize) -> Result<Histogram, GestaltError> {
    if n_bins == 0 {
        return Err(GestaltError::NoBins);
    }
    if scores.is_empty() {
        return Err(GestaltError::EmptyScores);
    }
    let edges: Vec<f64> = (0..=n_bins).map(|i| i as f64 / n_bins as f64).collect();
    let mut counts = vec![0usize; n_bins];
    for &s in scores {
        let bin = ((s * n_bins as f64).floor().max(0.0) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 { (sorted[mid - 1] + sorted[mid]) / 2.0 } else { sorted[mid] };
    Ok(Histogram { edges, counts, mean, median, n: scores.len() })
}

/// Report of every normalized feature plus the combined score.
pub fn feature_report(
    features: &[GestaltFeatures],
    scores: &[f64],
    n_bins: usize,
) -> Result<BTreeMap<String, Histogram>, GestaltError> {
    let mut out = BTreeMap::new();
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        let column: Vec<f64> = features.iter().map(|f| f.as_array()[k]).collect();
        out.insert(name.to_string(), distribution_report(&column, n_bins)?);
    }
    out.insert("gestalt".to_string(), distribution_report(scores, n_bins)?);
    Ok(out)
}

/// Row of a gestalt feature CSV; imageability and familiarity may be left
/// empty for derivation from tags.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub imageability: Option<f64>,
    pub hcu: Option<f64>,
    pub arousal: Option<f64>,
    pub familiarity: Option<f64>,
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let table = parse_predictions(&text)?;
    for name in ["hcu", "arousal"] {
        if !table.has_component(name) {
            return Err(DataError::Config(format!("feature file lacks `{name}` column")));
        }
    }
    Ok(table
        .ids()
        .iter()
        .map(|id| FeatureRow {
            id: id.clone(),
            imageability: table.get(id, "imageability"),
            hcu: table.get(id, "hcu"),
            arousal: table.get(id, "arousal"),
            familiarity: table.get(id, "familiarity"),
        })
        .collect())
}

/// CSV `video_id,imageability,hcu,arousal,familiarity,gestalt`.
pub fn gestalt_csv(ids: &[String], features: &[GestaltFeatures], scores: &[f64]) -> String {
    let mut out = String::from("video_id,imageability,hcu,arousal,familiarity,gestalt\n");
    for ((id, f), s) in ids.iter().zip(features).zip(scores) {
        let mut fields = vec![id.clone()];
        fields.extend(f.as_array().iter().map(|v| format_real(*v)));
        fields.push(format_real(*s));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(pairs: &[(&str, f64)]) -> TagSet {
        TagSet::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn musicality_table() {
        let m = DEFAULT_MUSIC_LABELS;
        assert_eq!(musicality(&tags(&[("Music", 0.9), ("Speech", 0.4)]), &m, MusicRule::Relative), 1.0);
        assert_eq!(musicality(&tags(&[("Speech", 0.9), ("Music", 0.7)]), &m, MusicRule::Relative), 1.0);
        assert_eq!(musicality(&tags(&[("Speech", 0.9), ("Music", 0.5)]), &m, MusicRule::Relative), 0.0);
        assert_eq!(musicality(&TagSet::default(), &m, MusicRule::Relative), 0.0);
        assert_eq!(musicality(&tags(&[("Speech", 0.9), ("Music", 0.7)]), &m, MusicRule::Absolute), 0.0);
        assert_eq!(musicality(&tags(&[("Speech", 0.9), ("Music", 0.76)]), &m, MusicRule::Absolute), 1.0);
    }

    #[test]
    fn extra_music_labels() {
        let labels = ["Music", "Guitar"];
        assert_eq!(musicality(&tags(&[("Guitar", 0.5), ("Speech", 0.2)]), &labels, MusicRule::Relative), 1.0);
    }

    #[test]
    fn imageability_mapping() {
        assert_eq!(imageability(1.0, ImageabilityMapping::Inverse), 0.0);
        assert_eq!(imageability(0.0, ImageabilityMapping::Inverse), 1.0);
        assert_eq!(imageability(1.0, ImageabilityMapping::Direct), 1.0);
    }

    #[test]
    fn familiarity_table() {
        assert_eq!(familiarity(&tags(&[("Dog", 0.8), ("Bark", 0.6)])), 0.8);
        assert_eq!(familiarity(&TagSet::default()), 0.0);
        assert_eq!(familiarity(&tags(&[("Rain", 0.33)])), 0.33);
    }

    fn raw_hcu(values: &[f64]) -> Vec<GestaltFeatures> {
        values.iter().map(|&v| GestaltFeatures::raw(0.0, v, 0.0, 0.0)).collect()
    }

    #[test]
    fn normalize_examples() {
        let raw = raw_hcu(&[2.0, 4.0, 6.0]);
        let stats = NormalizationStats::from_features(&raw, "train").unwrap();
        let n = normalize_features(&raw, &stats, Exec::Sequential);
        assert_eq!(n.iter().map(|f| f.hcu).collect::<Vec<_>>(), [0.0, 0.5, 1.0]);
        assert!(n.iter().all(|f| f.normalized));
        // imageability column is constant zero here
        assert!(n.iter().all(|f| f.imageability == 0.5));

        let below = stats.scale(&GestaltFeatures::raw(0.0, -3.0, 0.0, 0.0));
        assert_eq!(below.hcu, 0.0);
        assert_eq!(stats.scale(&GestaltFeatures::raw(0.0, 60.0, 0.0, 0.0)).hcu, 1.0);
        assert_eq!(NormalizationStats::from_features(&[], "x"), Err(GestaltError::NoVideos));
    }

    #[test]
    fn score_examples() {
        let w = GestaltWeights::paper();
        let f = |a: [f64; 4]| GestaltFeatures::from_array(a, true);
        assert!((gestalt_score(&f([1.0; 4]), &GestaltWeights::new(0.1, 0.3, 0.5, 0.1).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert!((gestalt_score(&f([1.0, 0.0, 0.0, 1.0]), &w).unwrap() - 0.6).abs() < 1e-15);
        assert!((gestalt_score(&f([0.5, 0.5, 0.5, 1.0]), &w).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(gestalt_score(&GestaltFeatures::raw(1.0, 1.0, 1.0, 1.0), &w), Err(GestaltError::NotNormalized));
        assert!(GestaltWeights::new(0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn histogram_examples() {
        let h = distribution_report(&[0.0; 10], 10).unwrap();
        assert_eq!(h.counts[0], 10);
        let spread: Vec<f64> = (0..10).map(|i| 0.05 + 0.1 * i as f64).collect();
        assert_eq!(distribution_report(&spread, 10).unwrap().counts, vec![1; 10]);
        assert_eq!(distribution_report(&[1.0], 4).unwrap().counts, vec![0, 0, 0, 1]);
        assert_eq!(distribution_report(&[], 4), Err(GestaltError::EmptyScores));
        assert_eq!(distribution_report(&[0.5], 0), Err(GestaltError::NoBins));
    }

    fn unit4() -> impl Strategy<Value = [f64; 4]> {
        [0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0]
    }

    fn weights() -> impl Strategy<Value = GestaltWeights> {
        [0u32..=20, 0u32..=20, 0u32..=20].prop_filter_map("sum ≤ 20", |a| {
            let s = a[0] + a[1] + a[2];
            (s <= 20).then(|| {
                GestaltWeights::new(a[0] as f64 / 20.0, a[1] as f64 / 20.0, a[2] as f64 / 20.0, (20 - s) as f64 / 20.0)
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn score_bounded_and_monotone(f in unit4(), w in weights(), k in 0usize..4, bump in 0.0f64..=1.0) {
            let s = gestalt_score(&GestaltFeatures::from_array(f, true), &w).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
            let mut g = f;
            g[k] = (g[k] + bump).min(1.0);
            let s2 = gestalt_score(&GestaltFeatures::from_array(g, true), &w).unwrap();
            prop_assert!(s2 >= s - 1e-15);
        }

        #[test]
        fn normalize_idempotent(rows in prop::collection::vec(unit4(), 2..30)) {
            let raw: Vec<_> = rows.iter().map(|a| GestaltFeatures::from_array(*a, false)).collect();
            let stats = NormalizationStats::from_features(&raw, "train").unwrap();
            let once = normalize_features(&raw, &stats, Exec::Sequential);
            let stats2 = NormalizationStats::from_features(&once, "train").unwrap();
            let twice = normalize_features(&once, &stats2, Exec::Sequential);
            for k in 0..4 {
                if stats.ranges[k].min == stats.ranges[k].max {
                    continue;
                }
                for (a, b) in once.iter().zip(&twice) {
                    prop_assert!((a.as_array()[k] - b.as_array()[k]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn musicality_scale_invariant(conf in prop::collection::vec(0.01f64..=1.0, 1..8), music_idx in 0usize..8, scale in 0.05f64..=1.0) {
            let pairs: Vec<(String, f64)> = conf.iter().enumerate()
                .map(|(i, c)| (if i == music_idx % conf.len() { "Music".to_string() } else { format!("t{i}") }, *c))
                .collect();
            let a = TagSet::from_pairs(pairs.clone()).unwrap();
            let b = TagSet::from_pairs(pairs.into_iter().map(|(l, c)| (l, c * scale))).unwrap();
            prop_assert_eq!(musicality(&a, &DEFAULT_MUSIC_LABELS, MusicRule::Relative), musicality(&b, &DEFAULT_MUSIC_LABELS, MusicRule::Relative));
        }

        #[test]
        fn histogram_counts_sum(scores in prop::collection::vec(-0.2f64..1.2, 1..200), bins in 1usize..30) {
            let h = distribution_report(&scores, bins).unwrap();
            prop_assert_eq!(h.counts.iter().sum::<usize>(), scores.len());
            prop_assert_eq!(h.edges.len(), bins + 1);
        }
    }
}
