//! Shared domain types and loaders for the dataset manifest, prediction
//! tables, tag files, and fusion configurations.
//!
//! Loaded structures are immutable once built. File references inside a
//! manifest are validated lazily: a missing tag or embedding file is only an
//! error once something needs to read it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gestalt::GestaltWeights;

/// Tolerance on weight-vector sums.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: field `{field}`: {message}")]
    Field { line: usize, field: &'static str, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty or missing header")]
    EmptyHeader,
    #[error("header must start with `video_id`, found `{0}`")]
    BadHeader(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    BadCell { row: usize, column: String, value: String },
    #[error("row {row}: duplicate video_id `{id}`")]
    DuplicateRow { row: usize, id: String },
    #[error("tag file {path}: {message}")]
    Tags { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("video `{id}`: gestalt score {value} outside [0, 1]")]
    GestaltRange { id: String, value: f64 },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub id: String,
    pub split: Split,
    pub mem_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Directory that relative file references resolve against.
    pub base_dir: PathBuf,
    pub records: Vec<VideoRecord>,
}

impl Manifest {
    pub fn resolve(&self, reference: &str) -> PathBuf {
        let p = Path::new(reference);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn records_in(&self, split: Option<Split>) -> Vec<VideoRecord> {
        self.records
            .iter()
            .filter(|r| split.map_or(true, |s| r.split == s))
            .cloned()
            .collect()
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    split: Option<String>,
    mem_score: Option<f64>,
    audio_path: Option<String>,
    tag_path: Option<String>,
    embedding_path: Option<String>,
}

pub fn parse_manifest(text: &str) -> Result<Vec<VideoRecord>, DataError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(raw_line)
            .map_err(|e| DataError::Malformed { line, message: e.to_string() })?;
        let id = raw
            .id
            .filter(|s| !s.is_empty())
            .ok_or(DataError::Field { line, field: "id", message: "missing or empty".into() })?;
        let split = raw
            .split
            .ok_or(DataError::Field { line, field: "split", message: "missing".into() })?
            .parse::<Split>()
            .map_err(|message| DataError::Field { line, field: "split", message })?;
        let mem_score = raw
            .mem_score
            .ok_or(DataError::Field { line, field: "mem_score", message: "missing".into() })?;
        if !mem_score.is_finite() || !(0.0..=1.0).contains(&mem_score) {
            return Err(DataError::Field {
                line,
                field: "mem_score",
                message: format!("{mem_score} outside [0, 1]"),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateId { line, id });
        }
        records.push(VideoRecord {
            id,
            split,
            mem_score,
            audio_path: raw.audio_path,
            tag_path: raw.tag_path,
            embedding_path: raw.embedding_path,
        });
    }
    Ok(records)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let records = parse_manifest(&text)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { base_dir, records })
}

pub fn write_manifest(path: impl AsRef<Path>, records: &[VideoRecord]) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Per-video component predictions. Absent cells stay absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionTable {
    components: Vec<String>,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    cells: Vec<Vec<Option<f64>>>,
}

impl PredictionTable {
    pub fn new(components: Vec<String>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for c in &components {
            if !seen.insert(c.as_str()) {
                return Err(DataError::DuplicateColumn(c.clone()));
            }
        }
        Ok(Self { components, ..Default::default() })
    }

    pub fn push_row(&mut self, id: impl Into<String>, row: Vec<Option<f64>>) -> Result<(), DataError> {
        let id = id.into();
        assert_eq!(row.len(), self.components.len(), "row width must match column count");
        if let Some((j, v)) = row.iter().enumerate().find_map(|(j, c)| c.filter(|v| !v.is_finite()).map(|v| (j, v))) {
            return Err(DataError::BadCell {
                row: self.ids.len() + 1,
                column: self.components[j].clone(),
                value: v.to_string(),
            });
        }
        if self.index.contains_key(&id) {
            return Err(DataError::DuplicateRow { row: self.ids.len() + 1, id });
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.cells.push(row);
        Ok(())
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn has_component(&self, name: &str) -> bool {
        self.components.iter().any(|c| c == name)
    }

    pub fn get(&self, id: &str, component: &str) -> Option<f64> {
        let row = *self.index.get(id)?;
        let col = self.components.iter().position(|c| c == component)?;
        self.cells[row][col]
    }

    pub fn row(&self, id: &str) -> Option<&[Option<f64>]> {
        self.index.get(id).map(|&r| self.cells[r].as_slice())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Number of cells carrying a value.
    pub fn present_cells(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }

    /// Column-wise union of two tables; a column may only come from one side.
    pub fn merge(&self, other: &PredictionTable) -> Result<PredictionTable, DataError> {
        let mut components = self.components.clone();
        for c in &other.components {
            if components.contains(c) {
                return Err(DataError::DuplicateColumn(c.clone()));
            }
            components.push(c.clone());
        }
        let mut merged = PredictionTable::new(components)?;
        let mut ids: Vec<&String> = self.ids.iter().collect();
        ids.extend(other.ids.iter().filter(|id| !self.contains(id)));
        for id in ids {
            let mut row: Vec<Option<f64>> =
                self.row(id).map(<[_]>::to_vec).unwrap_or_else(|| vec![None; self.components.len()]);
            row.extend(other.row(id).map(<[_]>::to_vec).unwrap_or_else(|| vec![None; other.components.len()]));
            merged.push_row(id.clone(), row)?;
        }
        Ok(merged)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("video_id");
        for c in &self.components {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.cells) {
            out.push_str(id);
            for cell in row {
                out.push(',');
                if let Some(v) = cell {
                    out.push_str(&format_real(*v));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Shortest representation that parses back to the identical f64.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn parse_predictions(text: &str) -> Result<PredictionTable, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let first = headers.get(0).ok_or(DataError::EmptyHeader)?;
    if headers.len() == 1 && first.is_empty() {
        return Err(DataError::EmptyHeader);
    }
    if first != "video_id" {
        return Err(DataError::BadHeader(first.to_string()));
    }
    let components: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if components.iter().any(String::is_empty) {
        return Err(DataError::EmptyHeader);
    }
    let mut table = PredictionTable::new(components)?;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row_no = i + 1;
        let id = rec.get(0).unwrap_or_default().to_string();
        let mut row = Vec::with_capacity(table.components.len());
        for (j, column) in table.components.iter().enumerate() {
            let raw = rec.get(j + 1).unwrap_or_default();
            if raw.is_empty() {
                row.push(None);
                continue;
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(Some(v)),
                _ => {
                    return Err(DataError::BadCell { row: row_no, column: column.clone(), value: raw.to_string() })
                }
            }
        }
        if table.contains(&id) {
            return Err(DataError::DuplicateRow { row: row_no, id });
        }
        table.push_row(id, row)?;
    }
    Ok(table)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionTable, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_predictions(&text)
}

pub fn write_predictions(path: impl AsRef<Path>, table: &PredictionTable) -> Result<(), DataError> {
    let path = path.as_ref();
    fs::write(path, table.to_csv()).map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tag {
    pub label: String,
    pub confidence: f64,
}

/// Audio tags sorted by confidence, highest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagSet(Vec<Tag>);

impl TagSet {
    pub fn new(mut tags: Vec<Tag>) -> Result<Self, String> {
        if let Some(t) = tags.iter().find(|t| !t.confidence.is_finite() || !(0.0..=1.0).contains(&t.confidence)) {
            return Err(format!("confidence {} for `{}` outside [0, 1]", t.confidence, t.label));
        }
        tags.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        Ok(Self(tags))
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self, String> {
        Self::new(pairs.into_iter().map(|(l, c)| Tag { label: l.into(), confidence: c }).collect())
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_confidence(&self) -> Option<f64> {
        self.0.first().map(|t| t.confidence)
    }
}

pub fn load_tags(path: impl AsRef<Path>) -> Result<TagSet, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let tags: Vec<Tag> = serde_json::from_str(&text)
        .map_err(|e| DataError::Tags { path: path.to_path_buf(), message: e.to_string() })?;
    TagSet::new(tags).map_err(|message| DataError::Tags { path: path.to_path_buf(), message })
}

/// The four gestalt proxies for one video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestaltFeatures {
    pub imageability: f64,
    pub hcu: f64,
    pub arousal: f64,
    pub familiarity: f64,
    pub normalized: bool,
}

impl GestaltFeatures {
    pub fn raw(imageability: f64, hcu: f64, arousal: f64, familiarity: f64) -> Self {
        Self { imageability, hcu, arousal, familiarity, normalized: false }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.imageability, self.hcu, self.arousal, self.familiarity]
    }

    pub fn from_array(v: [f64; 4], normalized: bool) -> Self {
        Self { imageability: v[0], hcu: v[1], arousal: v[2], familiarity: v[3], normalized }
    }
}

/// Which audio-model column feeds the with-audio pathway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioComponent {
    #[default]
    Spectrogram,
    BayesianRidge,
}

impl AudioComponent {
    pub fn column(self) -> &'static str {
        match self {
            AudioComponent::Spectrogram => "spectrogram",
            AudioComponent::BayesianRidge => "bayesian_ridge",
        }
    }
}

impl std::str::FromStr for AudioComponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spectrogram" => Ok(AudioComponent::Spectrogram),
            "bayesian_ridge" | "ridge" => Ok(AudioComponent::BayesianRidge),
            other => Err(format!("unknown audio component `{other}`")),
        }
    }
}

/// Placeholder weight name resolved to [`AudioComponent::column`].
pub const AUDIO_SLOT: &str = "audio";
pub const AUG_CAPTION: &str = "aug_caption";
pub const CAPTION: &str = "caption";
pub const FRAME: &str = "frame";

/// Named, ordered non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct ComponentWeights(pub IndexMap<String, f64>);

impl ComponentWeights {
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Self {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn validate(&self, what: &str) -> Result<(), DataError> {
        if self.0.is_empty() {
            return Err(DataError::Config(format!("{what}: no components")));
        }
        if let Some((k, v)) = self.0.iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(DataError::Config(format!("{what}: weight {k} = {v} is negative or non-finite")));
        }
        let sum: f64 = self.0.values().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(DataError::Config(format!("{what}: weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// Gestalt weights, gate threshold, and both pathways' component weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub gestalt_weights: GestaltWeights,
    pub gestalt_threshold: f64,
    pub without_audio: ComponentWeights,
    pub with_audio: ComponentWeights,
    #[serde(default)]
    pub audio_component: AudioComponent,
    /// Use `caption` instead of `aug_caption` on the with-audio pathway.
    #[serde(default)]
    pub plain_captions: bool,
}

impl FusionConfig {
    /// The published operating point.
    pub fn paper() -> Self {
        Self {
            gestalt_weights: GestaltWeights::paper(),
            gestalt_threshold: 0.8,
            without_audio: ComponentWeights::from_pairs([(FRAME, 0.38), (CAPTION, 0.62)]),
            with_audio: ComponentWeights::from_pairs([(FRAME, 0.4), (AUG_CAPTION, 0.47), (AUDIO_SLOT, 0.13)]),
            audio_component: AudioComponent::Spectrogram,
            plain_captions: false,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        self.gestalt_weights.validate().map_err(DataError::Config)?;
        if !(0.0..=1.0).contains(&self.gestalt_threshold) {
            return Err(DataError::Config(format!("threshold {} outside [0, 1]", self.gestalt_threshold)));
        }
        self.without_audio.validate("without_audio")?;
        self.with_audio.validate("with_audio")
    }

    /// Maps a weight name to the prediction column it reads on the with-audio pathway.
    pub fn with_audio_column<'a>(&self, name: &'a str) -> &'a str {
        match name {
            AUDIO_SLOT => self.audio_component.column(),
            AUG_CAPTION if self.plain_captions => CAPTION,
            other => other,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: FusionConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(io_err(path))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n").map_err(io_err(path))
    }
}

/// Manifest records joined with predictions and gestalt scores, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub ground_truth: Vec<f64>,
    /// `None` for videos with no gestalt score; those always take the without-audio pathway.
    pub gestalt: Vec<Option<f64>>,
    columns: BTreeMap<String, Vec<Option<f64>>>,
}

#[derive(Debug, Clone)]
pub struct JoinReport {
    pub dataset: Dataset,
    /// Prediction rows with no manifest counterpart (kept in the table, not joined).
    pub unmatched_prediction_rows: usize,
}

impl Dataset {
    pub fn from_columns(
        ids: Vec<String>,
        ground_truth: Vec<f64>,
        gestalt: Vec<Option<f64>>,
        columns: BTreeMap<String, Vec<Option<f64>>>,
    ) -> Self {
        let n = ids.len();
        assert_eq!(ground_truth.len(), n);
        assert_eq!(gestalt.len(), n);
        assert!(columns.values().all(|c| c.len() == n));
        Self { ids, ground_truth, gestalt, columns }
    }

    /// Joins `records` against `predictions` and an optional gestalt lookup.
    pub fn join(
        records: &[VideoRecord],
        predictions: &PredictionTable,
        gestalt: Option<&HashMap<String, f64>>,
    ) -> Result<JoinReport, DataError> {
        let mut columns: BTreeMap<String, Vec<Option<f64>>> =
            predictions.components().iter().map(|c| (c.clone(), Vec::with_capacity(records.len()))).collect();
        let mut ids = Vec::with_capacity(records.len());
        let mut gt = Vec::with_capacity(records.len());
        let mut gs = Vec::with_capacity(records.len());
        for r in records {
            let row = predictions.row(&r.id);
            for (j, c) in predictions.components().iter().enumerate() {
                columns.get_mut(c).expect("column").push(row.and_then(|row| row[j]));
            }
            let g = gestalt.and_then(|m| m.get(&r.id).copied());
            if let Some(v) = g {
                if !(0.0..=1.0).contains(&v) {
                    return Err(DataError::GestaltRange { id: r.id.clone(), value: v });
                }
            }
            ids.push(r.id.clone());
            gt.push(r.mem_score);
            gs.push(g);
        }
        let known: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
        let unmatched = predictions.ids().iter().filter(|id| !known.contains(id.as_str())).count();
        Ok(JoinReport { dataset: Dataset { ids, ground_truth: gt, gestalt: gs, columns }, unmatched_prediction_rows: unmatched })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn with_gestalt(&self, gestalt: Vec<Option<f64>>) -> Dataset {
        assert_eq!(gestalt.len(), self.len());
        Dataset { gestalt, ..self.clone() }
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            ground_truth: indices.iter().map(|&i| self.ground_truth[i]).collect(),
            gestalt: indices.iter().map(|&i| self.gestalt[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|(k, v)| (k.clone(), indices.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }

    /// Back to a prediction table (gestalt and ground truth excluded).
    pub fn to_table(&self) -> PredictionTable {
        let names: Vec<String> = self.columns.keys().cloned().collect();
        let mut t = PredictionTable::new(names).expect("unique keys");
        for (i, id) in self.ids.iter().enumerate() {
            let row = self.columns.values().map(|c| c[i]).collect();
            t.push_row(id.clone(), row).expect("valid dataset row");
        }
        t
    }
}

/// Reads the `gestalt` column of a gestalt-score CSV into a lookup.
pub fn load_gestalt_scores(path: impl AsRef<Path>) -> Result<HashMap<String, f64>, DataError> {
    let table = load_predictions(path)?;
    gestalt_lookup(&table)
}

pub fn gestalt_lookup(table: &PredictionTable) -> Result<HashMap<String, f64>, DataError> {
    if !table.has_component("gestalt") {
        return Err(DataError::Config("gestalt file has no `gestalt` column".into()));
    }
    Ok(table.ids().iter().filter_map(|id| table.get(id, "gestalt").map(|g| (id.clone(), g))).collect())
}
