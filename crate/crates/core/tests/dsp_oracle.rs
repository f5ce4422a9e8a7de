mod common;

use audiogestalt::dsp::{self, delta, extract_tensor, mel_band_centers, mel_spectrogram, mfcc, DspParams, FeatureMatrix};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nested(m: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

#[test]
fn filterbank_matches_reference() {
    let params = DspParams::default();
    let got = dsp::mel_filterbank(&params);
    let want = reference_filterbank(&DspConv::default());
    assert!(max_abs_err(got.as_slice(), &flatten(&want)) < 1e-12);
}

#[test]
fn white_noise_mel_and_mfcc_match_reference() {
    let conv = DspConv::default();
    let samples = seeded_noise(7, 22050);
    let params = DspParams::default();
    let mel = mel_spectrogram(&samples, &params).unwrap();
    let want = reference_mel(&samples, &conv);
    assert_eq!(mel.rows(), 128);
    assert_eq!(mel.cols(), want[0].len());
    let rel = max_rel_err(mel.as_slice(), &flatten(&want));
    assert!(rel < 1e-4, "mel relative error {rel}");

    let coeffs = mfcc(&mel, 20).unwrap();
    let want_c = reference_dct(&want, 20);
    let abs = max_abs_err(coeffs.as_slice(), &flatten(&want_c));
    assert!(abs < 1e-6, "mfcc abs error {abs}");

    let d = delta(&coeffs, 9).unwrap();
    let want_d = reference_delta(&nested(&coeffs), 9);
    assert!(max_abs_err(d.as_slice(), &flatten(&want_d)) < 1e-9);
}

#[test]
fn delta_matches_least_squares_on_random_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m2 = FeatureMatrix::from_vec(20, 50, (0..1000).map(|_| rng.gen_range(-5.0..5.0)).collect());
    for width in [3, 5, 9] {
        let got = delta(&m2, width).unwrap();
        let want = reference_delta(&nested(&m2), width);
        assert!(max_abs_err(got.as_slice(), &flatten(&want)) < 1e-9, "width {width}");
    }
}

#[test]
fn sine_peaks_in_nearest_band() {
    let params = DspParams::default();
    let sr = params.sample_rate as f64;
    let samples: Vec<f64> = (0..22050).map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / sr).sin() * 0.5).collect();
    let centers = mel_band_centers(&params);
    let nearest = (0..centers.len())
        .min_by(|&a, &b| (centers[a] - 440.0).abs().total_cmp(&(centers[b] - 440.0).abs()))
        .unwrap();
    let mel = mel_spectrogram(&samples, &params).unwrap();
    for t in 0..mel.cols() {
        let col = mel.column(t);
        let arg = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
        assert_eq!(arg, nearest, "frame {t}");
    }
}

#[test]
fn silence_full_chain() {
    let params = DspParams::default();
    let samples = vec![0.0; 22050];
    let mel = mel_spectrogram(&samples, &params).unwrap();
    let floor = params.log_floor.ln();
    assert!(mel.as_slice().iter().all(|&v| v == floor));
    let t = extract_tensor(&samples, &params).unwrap();
    assert!(t.channel(1).iter().all(|&v| v == 0.0));
    assert!(t.channel(2).iter().all(|&v| v == 0.0));
    let c0 = t.channel(0);
    for r in 0..t.rows() {
        let row = &c0[r * t.cols()..(r + 1) * t.cols()];
        assert!(row.iter().all(|&v| v == row[0]));
    }
    // first coefficient of a constant column is c * sqrt(bands)
    let coeffs = mfcc(&mel, 20).unwrap();
    assert!((coeffs.get(0, 0) - floor * 128f64.sqrt()).abs() < 1e-9);
    assert!((1..20).all(|k| coeffs.get(k, 0).abs() < 1e-9));
}

#[test]
fn mel_is_monotone_in_gain() {
    let params = DspParams::default();
    let samples = seeded_noise(11, 8192);
    let base = mel_spectrogram(&samples, &params).unwrap();
    for g in [1.5, 2.0, 10.0] {
        let louder: Vec<f64> = samples.iter().map(|s| s * g).collect();
        let m = mel_spectrogram(&louder, &params).unwrap();
        assert!(m.as_slice().iter().zip(base.as_slice()).all(|(a, b)| a >= b), "gain {g}");
    }
}

#[test]
fn wav_file_to_tensor_file() {
    let dir = tempfile::tempdir().unwrap();
    let pcm: Vec<i16> = seeded_noise(5, 4096).iter().map(|v| (v * 32768.0) as i16).collect();
    let wav = dir.path().join("clip.wav");
    std::fs::write(&wav, dsp::encode_wav_pcm16(&pcm, 1, 22050)).unwrap();
    let (samples, sr) = dsp::load_wav(&wav).unwrap();
    assert_eq!(sr, 22050);
    assert_eq!(samples, seeded_noise(5, 4096));
    let t = extract_tensor(&samples, &DspParams::default()).unwrap();
    let out = dir.path().join("clip.mft");
    dsp::write_tensor(&t, &out).unwrap();
    assert_eq!(dsp::read_tensor(&out).unwrap(), t);
    assert_eq!(std::fs::metadata(&out).unwrap().len() as usize, 16 + 4 * 3 * t.rows() * t.cols());
}
