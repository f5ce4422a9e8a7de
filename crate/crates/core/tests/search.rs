use audiogestalt::datamodel::{ComponentWeights, GestaltFeatures, Split};
use audiogestalt::fusion::fused_scores;
use audiogestalt::optimizer::{
    evaluate_cv, rscv, rscv_gestalt_weights, rscv_weights, threshold_sweep, SearchSpace,
};
use audiogestalt::synthgen::{generate, NoiseLevels, SynthMode, SynthSpec};
use audiogestalt::{spearman, Exec, FusionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy(seed: u64, n: usize) -> audiogestalt::synthgen::SynthData {
    generate(&SynthSpec { n_videos: n, seed, ..SynthSpec::default() }).unwrap()
}

fn planted_without_audio(seed: u64) -> audiogestalt::Dataset {
    // split 1.0 routes every video through the (0.38, 0.62) plant
    let spec = SynthSpec { n_videos: 400, seed, mode: SynthMode::Planted, gestalt_split: 1.0, ..SynthSpec::default() };
    generate(&spec).unwrap().dataset_for(Some(Split::Train))
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn planted_weights_recovered() {
    let data = planted_without_audio(1);
    let space = SearchSpace { seed: 1, ..SearchSpace::default() };
    let r = rscv_weights(&data, &names(&["frame", "caption"]), &space, Exec::Parallel).unwrap();
    let w = &r.weights;
    assert!((w.get("frame").unwrap() - 0.38).abs() <= 0.01 + 1e-12, "{w:?}");
    assert!((w.get("caption").unwrap() - 0.62).abs() <= 0.01 + 1e-12, "{w:?}");
    assert!(r.best_score > 0.999);
}

#[test]
fn single_iteration_returns_the_single_candidate() {
    let synth = noisy(2, 300);
    let data = synth.dataset();
    let space = SearchSpace { n_iterations: 1, seed: 5, ..SearchSpace::default() };
    let r = rscv(&data, &FusionConfig::paper(), &space, Exec::Sequential).unwrap();
    assert_eq!((r.evaluations, r.best_iteration), (1, 0));
    let (score, folds) = evaluate_cv(&data, &r.best, &r.folds).unwrap();
    assert_eq!(score, r.best_score);
    assert_eq!(folds, r.fold_scores);
}

#[test]
fn search_is_deterministic_and_execution_independent() {
    let data = noisy(3, 300).dataset();
    let space = SearchSpace { n_iterations: 60, seed: 9, ..SearchSpace::default() };
    let a = rscv(&data, &FusionConfig::paper(), &space, Exec::Parallel).unwrap();
    let b = rscv(&data, &FusionConfig::paper(), &space, Exec::Sequential).unwrap();
    assert_eq!(a, b);
    let other = rscv(&data, &FusionConfig::paper(), &SearchSpace { seed: 10, ..space }, Exec::Parallel).unwrap();
    assert_ne!(a.best, other.best);
}

#[test]
fn best_score_reproduces_bit_for_bit() {
    let data = noisy(4, 400).dataset();
    let space = SearchSpace { n_iterations: 80, seed: 2, ..SearchSpace::default() };
    let r = rscv(&data, &FusionConfig::paper(), &space, Exec::Parallel).unwrap();
    let (score, folds) = evaluate_cv(&data, &r.best, &r.folds).unwrap();
    assert_eq!(score.to_bits(), r.best_score.to_bits());
    assert_eq!(folds, r.fold_scores);
}

#[test]
fn more_iterations_extend_the_same_candidates() {
    let data = noisy(5, 300).dataset();
    let short = SearchSpace { n_iterations: 40, seed: 6, ..SearchSpace::default() };
    let long = SearchSpace { n_iterations: 160, ..short.clone() };
    let a = rscv(&data, &FusionConfig::paper(), &short, Exec::Parallel).unwrap();
    let b = rscv(&data, &FusionConfig::paper(), &long, Exec::Parallel).unwrap();
    assert!(b.best_score >= a.best_score);
    if b.best_iteration < 40 {
        assert_eq!(a.best, b.best);
    }
    let c = rscv_weights(&data, &names(&["frame", "caption"]), &short, Exec::Parallel).unwrap();
    let d = rscv_weights(&data, &names(&["frame", "caption"]), &long, Exec::Parallel).unwrap();
    assert!(d.best_score >= c.best_score);
}

#[test]
fn too_few_videos_for_folds_is_an_error() {
    let data = noisy(6, 20).dataset().subset(&(0..9).collect::<Vec<_>>());
    let err = rscv(&data, &FusionConfig::paper(), &SearchSpace::default(), Exec::Parallel).unwrap_err();
    assert!(err.to_string().contains("folds"), "{err}");
}

#[test]
fn familiarity_dominates_when_it_alone_marks_helpful_audio() {
    let synth = noisy(7, 800);
    let data = synth.dataset();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let features: Vec<GestaltFeatures> = synth
        .gestalt
        .iter()
        .map(|&g| GestaltFeatures::from_array([rng.gen(), rng.gen(), rng.gen(), g], true))
        .collect();
    let space = SearchSpace { n_iterations: 300, seed: 3, ..SearchSpace::gestalt() };
    let r = rscv_gestalt_weights(&features, &data, &FusionConfig::paper(), &space, Exec::Parallel).unwrap();
    let w = r.weights.as_array();
    assert!(w[3] > w[0] && w[3] > w[1] && w[3] > w[2], "{:?}", r.weights);
    let again = rscv_gestalt_weights(&features, &data, &FusionConfig::paper(), &space, Exec::Sequential).unwrap();
    assert_eq!(r, again);
}

fn always_and_never(data: &audiogestalt::Dataset, cfg: &FusionConfig) -> (f64, f64) {
    let always = FusionConfig { gestalt_threshold: 0.0, ..cfg.clone() };
    let never = FusionConfig { gestalt_threshold: 1.0 + 1e-9, ..cfg.clone() };
    (
        spearman(&fused_scores(data, &always).unwrap(), &data.ground_truth).unwrap(),
        spearman(&fused_scores(data, &never).unwrap(), &data.ground_truth).unwrap(),
    )
}

#[test]
fn sweep_endpoints_and_steps() {
    let data = noisy(8, 200).dataset();
    let cfg = FusionConfig::paper();
    let thresholds: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).chain([1.0 + 1e-9]).collect();
    let pts = threshold_sweep(&data, &cfg, &thresholds, Exec::Parallel).unwrap();
    let (always, never) = always_and_never(&data, &cfg);
    assert_eq!(pts[0].spearman, always);
    assert_eq!(pts.last().unwrap().spearman, never);
    let gestalt: Vec<f64> = data.gestalt.iter().map(|g| g.unwrap()).collect();
    for w in pts.windows(2) {
        let crosses = gestalt.iter().any(|&g| g >= w[0].threshold && g < w[1].threshold);
        if !crosses {
            assert_eq!(w[0].spearman, w[1].spearman, "{:?}", w);
        }
    }
}

#[test]
fn identical_pathways_make_the_gate_irrelevant() {
    let data = noisy(9, 200).dataset();
    let w = ComponentWeights::from_pairs([("frame", 0.3), ("caption", 0.7)]);
    let cfg = FusionConfig { without_audio: w.clone(), with_audio: w, plain_captions: true, ..FusionConfig::paper() };
    let pts = threshold_sweep(&data, &cfg, &[0.0, 0.3, 0.8, 1.01], Exec::Sequential).unwrap();
    assert!(pts.iter().all(|p| p.spearman == pts[0].spearman));
}

#[test]
fn noiseless_plant_is_perfect_under_any_fusion() {
    let spec = SynthSpec { n_videos: 100, seed: 1, gestalt_split: 0.0, noise: NoiseLevels::zero(), ..SynthSpec::default() };
    let data = generate(&spec).unwrap().dataset();
    for t in [0.0, 0.5, 1.0] {
        let cfg = FusionConfig { gestalt_threshold: t, ..FusionConfig::paper() };
        let rho = spearman(&fused_scores(&data, &cfg).unwrap(), &data.ground_truth).unwrap();
        assert!((rho - 1.0).abs() < 1e-12);
    }
}
