//! Audio-gestalt gated late fusion for video memorability prediction.
//!
//! Per-video component predictions (frame, caption, augmented caption and
//! audio models) are fused by one of two weighted pathways. An audio gestalt
//! score built from four tag- and model-derived proxies decides which one
//! each video takes. Fusion weights, the gate threshold and the gestalt
//! weights are tuned by randomized search cross-validation and scored by
//! Spearman rank correlation.
//!
//! Modules, bottom-up:
//!
//! * [`metrics`]: average-tie ranks, Spearman.
//! * [`datamodel`]: manifest, prediction tables, tags, configs.
//! * [`dsp`]: WAV decoding, log-mel, MFCC, deltas, tensor files.
//! * [`gestalt`]: proxy features, normalization, gestalt score, histograms.
//! * [`regression`]: Bayesian ridge on audio embeddings.
//! * [`fusion`]: gating and weighted fusion.
//! * [`optimizer`]: RSCV and threshold sweeps.
//! * [`synthgen`]: planted synthetic datasets.
//! * [`cli`]: the `audiogestalt` command line.

pub mod cli;
pub mod datamodel;
pub mod dsp;
pub mod exec;
pub mod fusion;
pub mod gestalt;
pub mod metrics;
pub mod optimizer;
pub mod regression;
pub mod synthgen;

pub use datamodel::{Dataset, FusionConfig, PredictionTable, VideoRecord};
pub use exec::Exec;
pub use fusion::{predict_all, route, Pathway};
pub use metrics::spearman;
