//! Randomized search cross-validation over simplex weight grids and the
//! gestalt threshold, and the threshold sweep.
//!
//! Weights live on a grid of `units` steps (100 for a 0.01 step, 20 for
//! 0.05). Candidates are integer compositions of `units`, so grid membership
//! and the unit sum are exact; they become reals only when fused.
//!
//! All candidates are drawn up front from a single seeded stream and scored
//! independently, so the result does not depend on the execution strategy,
//! and a longer search extends a shorter one with the same seed.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{ComponentWeights, Dataset, FusionConfig, GestaltFeatures};
use crate::exec::Exec;
use crate::fusion::{FusionError, FusionPlan};
use crate::gestalt::{dot4, GestaltWeights};
use crate::metrics::{spearman, MetricsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("step {0} does not divide 1 into a whole number of units")]
    BadStep(f64),
    #[error("need at least one component")]
    NoComponents,
    #[error("{videos} videos cannot fill {folds} folds of at least 2")]
    InsufficientVideos { videos: usize, folds: usize },
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("need at least one iteration")]
    NoIterations,
    #[error("ground truth is constant within fold {0}")]
    ConstantFold(usize),
    #[error("features must be normalized")]
    NotNormalized,
    #[error("{features} feature rows for {videos} videos")]
    FeatureCount { features: usize, videos: usize },
    #[error("thresholds must be finite and sorted ascending")]
    BadThresholds,
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Metric(#[from] MetricsError),
}

/// A weight grid of `units` equal steps over [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub units: u32,
}

impl Grid {
    pub fn from_step(step: f64) -> Result<Self, SearchError> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(SearchError::BadStep(step));
        }
        let units = (1.0 / step).round();
        if (units * step - 1.0).abs() > 1e-9 {
            return Err(SearchError::BadStep(step));
        }
        Ok(Self { units: units as u32 })
    }

    pub fn value(&self, u: u32) -> f64 {
        u as f64 / self.units as f64
    }
}

/// Uniform draw from all compositions of `grid.units` into `k` non-negative
/// parts (stars and bars).
pub fn sample_composition<R: Rng + ?Sized>(k: usize, grid: Grid, rng: &mut R) -> Vec<u32> {
    assert!(k >= 1);
    let m = grid.units as usize;
    if k == 1 {
        return vec![grid.units];
    }
    let mut bars = sample(rng, m + k - 1, k - 1).into_vec();
    bars.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev: isize = -1;
    for &b in &bars {
        parts.push((b as isize - prev - 1) as u32);
        prev = b as isize;
    }
    parts.push((m + k - 1) as u32 - (prev + 1) as u32);
    parts
}

pub fn simplex_grid_sample<R: Rng + ?Sized>(k: usize, step: f64, rng: &mut R) -> Result<Vec<f64>, SearchError> {
    if k == 0 {
        return Err(SearchError::NoComponents);
    }
    let grid = Grid::from_step(step)?;
    Ok(sample_composition(k, grid, rng).into_iter().map(|u| grid.value(u)).collect())
}

/// Size of the simplex grid: C(units + k − 1, k − 1).
pub fn composition_count(k: usize, units: u32) -> u128 {
    let n = units as u128 + k as u128 - 1;
    let r = (k as u128 - 1).min(units as u128);
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Shuffled k-fold partition; fold `f` holds the indices it holds out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Folds {
    pub held_out: Vec<Vec<usize>>,
}

impl Folds {
    pub fn shuffled(n: usize, k: usize, seed: u64) -> Result<Self, SearchError> {
        if k < 2 {
            return Err(SearchError::TooFewFolds(k));
        }
        if n < 2 * k {
            return Err(SearchError::InsufficientVideos { videos: n, folds: k });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut held_out = vec![Vec::with_capacity(n / k + 1); k];
        for (pos, idx) in order.into_iter().enumerate() {
            held_out[pos % k].push(idx);
        }
        for fold in &mut held_out {
            fold.sort_unstable();
        }
        Ok(Self { held_out })
    }

    fn check_ground_truth(&self, gt: &[f64]) -> Result<(), SearchError> {
        for (f, fold) in self.held_out.iter().enumerate() {
            let first = gt[fold[0]];
            if fold.iter().all(|&i| gt[i] == first) {
                return Err(SearchError::ConstantFold(f));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub weight_step: f64,
    pub threshold_step: f64,
    pub without_components: Vec<String>,
    pub with_components: Vec<String>,
    pub n_iterations: usize,
    pub n_folds: usize,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            weight_step: 0.01,
            threshold_step: 0.01,
            without_components: vec!["frame".into(), "caption".into()],
            with_components: vec!["frame".into(), "aug_caption".into(), "audio".into()],
            n_iterations: 500,
            n_folds: 5,
            seed: 0,
        }
    }
}

impl SearchSpace {
    /// Defaults for the gestalt-weight search (0.05 grid).
    pub fn gestalt() -> Self {
        Self { weight_step: 0.05, ..Self::default() }
    }

    fn check(&self) -> Result<(), SearchError> {
        if self.n_iterations == 0 {
            return Err(SearchError::NoIterations);
        }
        if self.n_folds < 2 {
            return Err(SearchError::TooFewFolds(self.n_folds));
        }
        Ok(())
    }

    fn candidate_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

/// Mean held-out Spearman of `fused` against ground truth, plus each fold's value.
/// Constant predictions in a fold score 0.
pub fn cv_score(fused: &[f64], gt: &[f64], folds: &Folds) -> Result<(f64, Vec<f64>), SearchError> {
    let mut scores = Vec::with_capacity(folds.held_out.len());
    for fold in &folds.held_out {
        let p: Vec<f64> = fold.iter().map(|&i| fused[i]).collect();
        let g: Vec<f64> = fold.iter().map(|&i| gt[i]).collect();
        let rho = match spearman(&p, &g) {
            Ok(r) => r,
            Err(MetricsError::Constant) if p.iter().all(|&v| v == p[0]) => 0.0,
            Err(e) => return Err(e.into()),
        };
        scores.push(rho);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok((mean, scores))
}

/// Cross-validated score of a fixed config on `folds`.
pub fn evaluate_cv(data: &Dataset, cfg: &FusionConfig, folds: &Folds) -> Result<(f64, Vec<f64>), SearchError> {
    let plan = FusionPlan::new(data, cfg)?;
    let fused = (0..data.len()).map(|i| plan.fuse(i).map(|(_, v)| v)).collect::<Result<Vec<_>, _>>()?;
    cv_score(&fused, &data.ground_truth, folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: FusionConfig,
    pub best_score: f64,
    pub fold_scores: Vec<f64>,
    pub evaluations: usize,
    pub best_iteration: usize,
    pub folds: Folds,
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    without: Vec<u32>,
    with: Vec<u32>,
    threshold: u32,
}

fn weights_from(names: &[String], units: &[u32], grid: Grid) -> ComponentWeights {
    ComponentWeights::from_pairs(names.iter().cloned().zip(units.iter().map(|&u| grid.value(u))))
}

fn argmax_first(scored: Vec<Result<(f64, Vec<f64>), SearchError>>) -> Result<(usize, f64, Vec<f64>), SearchError> {
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for (i, s) in scored.into_iter().enumerate() {
        let (score, folds) = s?;
        if best.as_ref().map_or(true, |(_, b, _)| score > *b) {
            best = Some((i, score, folds));
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Joint search over both pathways' weights and the gate threshold.
/// Structural choices (audio component, caption variant, gestalt weights)
/// come from `base`.
pub fn rscv(data: &Dataset, base: &FusionConfig, space: &SearchSpace, exec: Exec) -> Result<SearchResult, SearchError> {
    space.check()?;
    if space.without_components.is_empty() || space.with_components.is_empty() {
        return Err(SearchError::NoComponents);
    }
    let grid = Grid::from_step(space.weight_step)?;
    let tgrid = Grid::from_step(space.threshold_step)?;
    let folds = Folds::shuffled(data.len(), space.n_folds, space.seed)?;
    folds.check_ground_truth(&data.ground_truth)?;

    let mut rng = space.candidate_rng();
    let candidates: Vec<Candidate> = (0..space.n_iterations)
        .map(|_| Candidate {
            without: sample_composition(space.without_components.len(), grid, &mut rng),
            with: sample_composition(space.with_components.len(), grid, &mut rng),
            threshold: rng.gen_range(0..=tgrid.units),
        })
        .collect();

    let config_for = |c: &Candidate| FusionConfig {
        without_audio: weights_from(&space.without_components, &c.without, grid),
        with_audio: weights_from(&space.with_components, &c.with, grid),
        gestalt_threshold: tgrid.value(c.threshold),
        ..base.clone()
    };
    let scored = exec.map(&candidates, |c| evaluate_cv(data, &config_for(c), &folds));
    let (best_iteration, best_score, fold_scores) = argmax_first(scored)?;
    Ok(SearchResult {
        best: config_for(&candidates[best_iteration]),
        best_score,
        fold_scores,
        evaluations: candidates.len(),
        best_iteration,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSearchResult {
    pub weights: ComponentWeights,
    pub best_score: f64,
    pub fold_scores: Vec<f64>,
    pub evaluations: usize,
    pub best_iteration: usize,
}

/// Ungated weighted-sum search over `components`.
pub fn rscv_weights(
    data: &Dataset,
    components: &[String],
    space: &SearchSpace,
    exec: Exec,
) -> Result<WeightSearchResult, SearchError> {
    space.check()?;
    if components.is_empty() {
        return Err(SearchError::NoComponents);
    }
    let grid = Grid::from_step(space.weight_step)?;
    let folds = Folds::shuffled(data.len(), space.n_folds, space.seed)?;
    folds.check_ground_truth(&data.ground_truth)?;
    let mut rng = space.candidate_rng();
    let candidates: Vec<Vec<u32>> =
        (0..space.n_iterations).map(|_| sample_composition(components.len(), grid, &mut rng)).collect();
    let config_for = |units: &[u32]| {
        let w = weights_from(components, units, grid);
        FusionConfig {
            without_audio: w.clone(),
            with_audio: w,
            gestalt_threshold: 1.0,
            plain_captions: true,
            ..FusionConfig::paper()
        }
    };
    // gestalt is irrelevant with identical pathways; route everything one way
    let ungated = data.with_gestalt(vec![None; data.len()]);
    let scored = exec.map(&candidates, |c| evaluate_cv(&ungated, &config_for(c), &folds));
    let (best_iteration, best_score, fold_scores) = argmax_first(scored)?;
    Ok(WeightSearchResult {
        weights: weights_from(components, &candidates[best_iteration], grid),
        best_score,
        fold_scores,
        evaluations: candidates.len(),
        best_iteration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestaltSearchResult {
    pub weights: GestaltWeights,
    pub best_score: f64,
    pub fold_scores: Vec<f64>,
    pub evaluations: usize,
    pub best_iteration: usize,
}

/// Searches the 4-simplex of gestalt weights; each candidate recomputes every
/// video's gestalt score and is scored by the gated fusion of `cfg`.
pub fn rscv_gestalt_weights(
    features: &[GestaltFeatures],
    data: &Dataset,
    cfg: &FusionConfig,
    space: &SearchSpace,
    exec: Exec,
) -> Result<GestaltSearchResult, SearchError> {
    space.check()?;
    if features.len() != data.len() {
        return Err(SearchError::FeatureCount { features: features.len(), videos: data.len() });
    }
    if features.iter().any(|f| !f.normalized) {
        return Err(SearchError::NotNormalized);
    }
    let grid = Grid::from_step(space.weight_step)?;
    let folds = Folds::shuffled(data.len(), space.n_folds, space.seed)?;
    folds.check_ground_truth(&data.ground_truth)?;
    let mut rng = space.candidate_rng();
    let candidates: Vec<Vec<u32>> = (0..space.n_iterations).map(|_| sample_composition(4, grid, &mut rng)).collect();
    let feats: Vec<[f64; 4]> = features.iter().map(GestaltFeatures::as_array).collect();
    let plan = FusionPlan::new(data, cfg)?;
    let to_array = |u: &[u32]| [grid.value(u[0]), grid.value(u[1]), grid.value(u[2]), grid.value(u[3])];
    let scored = exec.map(&candidates, |units| {
        let w = to_array(units);
        let fused = feats
            .iter()
            .enumerate()
            .map(|(i, f)| plan.fuse_with_gestalt(i, Some(dot4(f, &w))).map(|(_, v)| v))
            .collect::<Result<Vec<_>, _>>()?;
        cv_score(&fused, &data.ground_truth, &folds)
    });
    let (best_iteration, best_score, fold_scores) = argmax_first(scored)?;
    let w = to_array(&candidates[best_iteration]);
    Ok(GestaltSearchResult {
        weights: GestaltWeights { imageability: w[0], hcu: w[1], arousal: w[2], familiarity: w[3] },
        best_score,
        fold_scores,
        evaluations: candidates.len(),
        best_iteration,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub spearman: f64,
}

/// Whole-set Spearman of gated predictions at each threshold. Thresholds
/// above 1 are allowed and close the gate for every video.
pub fn threshold_sweep(
    data: &Dataset,
    cfg: &FusionConfig,
    thresholds: &[f64],
    exec: Exec,
) -> Result<Vec<SweepPoint>, SearchError> {
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(SearchError::BadThresholds);
    }
    exec.map(thresholds, |&t| {
        let c = FusionConfig { gestalt_threshold: t, ..cfg.clone() };
        let plan = FusionPlan::new(data, &c)?;
        let fused = (0..data.len()).map(|i| plan.fuse(i).map(|(_, v)| v)).collect::<Result<Vec<_>, _>>()?;
        Ok(SweepPoint { threshold: t, spearman: spearman(&fused, &data.ground_truth)? })
    })
    .into_iter()
    .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("threshold,spearman\n");
    for p in points {
        out.push_str(&format!("{:?},{:?}\n", p.threshold, p.spearman));
    }
    out
}
