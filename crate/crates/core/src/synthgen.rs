//! Synthetic datasets with planted structure.
//!
//! Two generators share one spec:
//!
//! * [`SynthMode::Noisy`]: every component observes the ground truth through
//!   its own Gaussian noise, except that audio components carry no signal
//!   for videos whose gestalt score is below `gestalt_split`.
//! * [`SynthMode::Planted`]: components are independent uniforms and the
//!   ground truth is the planted weighted sum (without-audio weights below
//!   the split, with-audio weights at or above it).
//!
//! Predictions are clamped to [-0.5, 1.5].

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{
    format_real, io_err, write_manifest, write_predictions, ComponentWeights, DataError, Dataset, PredictionTable,
    Split, VideoRecord, AUDIO_SLOT, AUG_CAPTION, CAPTION, FRAME,
};

pub const CLAMP_LO: f64 = -0.5;
pub const CLAMP_HI: f64 = 1.5;

/// Columns every synthetic prediction table carries, in order.
pub const COMPONENTS: [&str; 5] = [FRAME, CAPTION, AUG_CAPTION, "spectrogram", "bayesian_ridge"];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    #[default]
    Noisy,
    Planted,
}

impl std::str::FromStr for SynthMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noisy" => Ok(SynthMode::Noisy),
            "planted" => Ok(SynthMode::Planted),
            other => Err(format!("unknown synth mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevels {
    pub frame: f64,
    pub caption: f64,
    pub audio: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self { frame: 0.25, caption: 0.20, audio: 0.35 }
    }
}

impl NoiseLevels {
    pub fn zero() -> Self {
        Self { frame: 0.0, caption: 0.0, audio: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_videos: usize,
    pub seed: u64,
    pub mode: SynthMode,
    pub without_weights: ComponentWeights,
    pub with_weights: ComponentWeights,
    pub gestalt_split: f64,
    pub noise: NoiseLevels,
    /// Leading fraction of videos put in the train split; the rest are validation.
    pub train_fraction: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_videos: 1000,
            seed: 0,
            mode: SynthMode::Noisy,
            without_weights: ComponentWeights::from_pairs([(FRAME, 0.38), (CAPTION, 0.62)]),
            with_weights: ComponentWeights::from_pairs([(FRAME, 0.4), (AUG_CAPTION, 0.47), (AUDIO_SLOT, 0.13)]),
            gestalt_split: 0.8,
            noise: NoiseLevels::default(),
            train_fraction: 0.8,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::Spec(m));
        if self.n_videos < 20 {
            return fail(format!("n_videos {} < 20", self.n_videos));
        }
        if !(0.0..=1.0).contains(&self.gestalt_split) {
            return fail(format!("gestalt_split {} outside [0, 1]", self.gestalt_split));
        }
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return fail(format!("train_fraction {} outside [0, 1]", self.train_fraction));
        }
        let n = self.noise;
        if [n.frame, n.caption, n.audio].iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return fail(format!("noise levels {n:?} must be non-negative"));
        }
        self.without_weights.validate("without_weights")?;
        self.with_weights.validate("with_weights")?;
        for (name, _) in self.without_weights.iter().chain(self.with_weights.iter()) {
            let col = if name == AUDIO_SLOT { "spectrogram" } else { name };
            if !COMPONENTS.contains(&col) {
                return fail(format!("unknown planted component `{name}`"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub records: Vec<VideoRecord>,
    pub predictions: PredictionTable,
    /// One score per record, same order.
    pub gestalt: Vec<f64>,
    /// Number of prediction cells that hit a clamp bound.
    pub clamped_cells: usize,
}

impl SynthData {
    pub fn dataset(&self) -> Dataset {
        self.dataset_for(None)
    }

    pub fn dataset_for(&self, split: Option<Split>) -> Dataset {
        let keep: Vec<usize> =
            (0..self.records.len()).filter(|&i| split.map_or(true, |s| self.records[i].split == s)).collect();
        let recs: Vec<VideoRecord> = keep.iter().map(|&i| self.records[i].clone()).collect();
        let g: HashMap<String, f64> =
            keep.iter().map(|&i| (self.records[i].id.clone(), self.gestalt[i])).collect();
        Dataset::join(&recs, &self.predictions, Some(&g)).expect("generated data joins").dataset
    }

    pub fn gestalt_csv(&self) -> String {
        let mut out = String::from("video_id,gestalt\n");
        for (r, g) in self.records.iter().zip(&self.gestalt) {
            out.push_str(&format!("{},{}\n", r.id, format_real(*g)));
        }
        out
    }

    /// Writes `manifest.jsonl`, `predictions.csv` and `gestalt.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_manifest(dir.join("manifest.jsonl"), &self.records)?;
        write_predictions(dir.join("predictions.csv"), &self.predictions)?;
        let g = dir.join("gestalt.csv");
        std::fs::write(&g, self.gestalt_csv()).map_err(io_err(&g))?;
        Ok(())
    }
}

fn weighted(weights: &ComponentWeights, cols: &HashMap<&str, f64>) -> f64 {
    weights
        .iter()
        .map(|(name, w)| {
            let col = if name == AUDIO_SLOT { "spectrogram" } else { name };
            w * cols[col]
        })
        .sum()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = |sigma: f64| Normal::new(0.0, sigma).expect("validated sigma");
    let (nf, nc, na) = (normal(spec.noise.frame), normal(spec.noise.caption), normal(spec.noise.audio));
    let n_train = (spec.n_videos as f64 * spec.train_fraction).round() as usize;

    let mut records = Vec::with_capacity(spec.n_videos);
    let mut table = PredictionTable::new(COMPONENTS.iter().map(|s| s.to_string()).collect())?;
    let mut gestalt = Vec::with_capacity(spec.n_videos);
    let mut clamped = 0;

    for i in 0..spec.n_videos {
        let g: f64 = rng.gen();
        let helpful = g >= spec.gestalt_split;
        let (gt, raw) = match spec.mode {
            SynthMode::Noisy => {
                let gt: f64 = rng.gen();
                let audio_base = if helpful { gt } else { rng.gen() };
                let raw = [
                    gt + nf.sample(&mut rng),
                    gt + nc.sample(&mut rng),
                    gt + nc.sample(&mut rng),
                    audio_base + na.sample(&mut rng),
                    audio_base + na.sample(&mut rng),
                ];
                (gt, raw)
            }
            SynthMode::Planted => {
                let raw: [f64; 5] = std::array::from_fn(|_| rng.gen());
                let cols: HashMap<&str, f64> = COMPONENTS.iter().copied().zip(raw).collect();
                let w = if helpful { &spec.with_weights } else { &spec.without_weights };
                (weighted(w, &cols).clamp(0.0, 1.0), raw)
            }
        };
        let row: Vec<Option<f64>> = raw
            .iter()
            .map(|&v| {
                let c = v.clamp(CLAMP_LO, CLAMP_HI);
                if c != v {
                    clamped += 1;
                }
                Some(c)
            })
            .collect();
        let id = format!("syn{i:05}");
        table.push_row(id.clone(), row)?;
        records.push(VideoRecord {
            id,
            split: if i < n_train { Split::Train } else { Split::Validation },
            mem_score: gt,
            audio_path: None,
            tag_path: None,
            embedding_path: None,
        });
        gestalt.push(g);
    }
    Ok(SynthData { records, predictions: table, gestalt, clamped_cells: clamped })
}

/// Column-major view of the generated predictions, mostly for tests.
pub fn columns(data: &SynthData) -> BTreeMap<String, Vec<f64>> {
    COMPONENTS
        .iter()
        .map(|c| {
            let v = data.records.iter().map(|r| data.predictions.get(&r.id, c).expect("dense")).collect();
            (c.to_string(), v)
        })
        .collect()
}
