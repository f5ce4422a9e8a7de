//! Reference implementations written independently of the library, used as
//! oracles by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- ranks

/// Average ranks by counting: 1 + #smaller + (#equal - 1) / 2.
pub fn ranks_by_counting(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let smaller = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn pearson_loops(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn spearman_oracle(a: &[f64], b: &[f64]) -> f64 {
    pearson_loops(&ranks_by_counting(a), &ranks_by_counting(b))
}

/// 1 − 6Σd²/(n(n²−1)); valid without ties only.
pub fn spearman_d2(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks_by_counting(a), ranks_by_counting(b));
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
    let n = a.len() as f64;
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// A random pair of length `n`; with `ties`, values come from a small integer set.
pub fn random_pair(rng: &mut ChaCha8Rng, n: usize, ties: bool) -> (Vec<f64>, Vec<f64>) {
    let mut draw = || -> Vec<f64> {
        (0..n).map(|_| if ties { rng.gen_range(0..8) as f64 } else { rng.gen::<f64>() * 100.0 - 50.0 }).collect()
    };
    let a = draw();
    let b = draw();
    (a, b)
}

// ---------------------------------------------------------------- dsp

pub struct DspConv {
    pub sample_rate: f64,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub delta_width: usize,
    pub floor: f64,
}

impl Default for DspConv {
    fn default() -> Self {
        Self { sample_rate: 22050.0, n_fft: 2048, hop: 256, n_mels: 128, n_mfcc: 20, delta_width: 9, floor: 1e-10 }
    }
}

pub fn seeded_noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // quantized through 16-bit PCM like a decoded file
    (0..n).map(|_| (rng.gen_range(-32768i32..32768) as f64) / 32768.0).collect()
}

/// Power spectrum of one frame by direct summation of the DFT.
fn naive_power(frame: &[f64], cos_t: &[f64], sin_t: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            let mut idx = 0usize;
            for &x in frame {
                re += x * cos_t[idx];
                im -= x * sin_t[idx];
                idx += k;
                if idx >= n {
                    idx -= n;
                }
            }
            re * re + im * im
        })
        .collect()
}

fn htk_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn htk_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Unit-peak triangles between mel-spaced edge frequencies from 0 Hz to Nyquist,
/// rows are bands, columns FFT bins.
pub fn reference_filterbank(c: &DspConv) -> Vec<Vec<f64>> {
    let top = htk_mel(c.sample_rate / 2.0);
    let step = top / (c.n_mels + 1) as f64;
    let edges: Vec<f64> = (0..c.n_mels + 2).map(|i| htk_hz(step * i as f64)).collect();
    let n_bins = c.n_fft / 2 + 1;
    (0..c.n_mels)
        .map(|m| {
            let (lo, centre, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * c.sample_rate / c.n_fft as f64;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= centre {
                        (f - lo) / (centre - lo)
                    } else {
                        (hi - f) / (hi - centre)
                    }
                })
                .collect()
        })
        .collect()
}

/// Log mel energies, `[band][frame]`.
pub fn reference_mel(samples: &[f64], c: &DspConv) -> Vec<Vec<f64>> {
    let n = c.n_fft;
    let window: Vec<f64> = (0..n).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos())).collect();
    let cos_t: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
    let sin_t: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
    let fb = reference_filterbank(c);
    let n_frames = (samples.len() - n) / c.hop + 1;
    let mut out = vec![vec![0.0; n_frames]; c.n_mels];
    for t in 0..n_frames {
        let frame: Vec<f64> = (0..n).map(|i| samples[t * c.hop + i] * window[i]).collect();
        let p = naive_power(&frame, &cos_t, &sin_t);
        for (m, tri) in fb.iter().enumerate() {
            let e: f64 = tri.iter().zip(&p).map(|(w, x)| w * x).sum();
            out[m][t] = (e + c.floor).ln();
        }
    }
    out
}

/// Orthonormal DCT-II of each frame column, `[coef][frame]`.
pub fn reference_dct(mel: &[Vec<f64>], n_coef: usize) -> Vec<Vec<f64>> {
    let n = mel.len();
    let frames = mel[0].len();
    (0..n_coef)
        .map(|k| {
            (0..frames)
                .map(|t| {
                    let s: f64 = (0..n).map(|i| mel[i][t] * (PI / n as f64 * (i as f64 + 0.5) * k as f64).cos()).sum();
                    let norm = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                    norm * s
                })
                .collect()
        })
        .collect()
}

/// Slope of the ordinary least-squares line through the `width` frames centred on
/// each cell (edges replicated), by solving the 2×2 normal equations.
pub fn reference_delta(m: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    let h = (width / 2) as isize;
    m.iter()
        .map(|row| {
            let last = row.len() as isize - 1;
            (0..row.len() as isize)
                .map(|t| {
                    let xs: Vec<f64> = (-h..=h).map(|k| k as f64).collect();
                    let ys: Vec<f64> = (-h..=h).map(|k| row[(t + k).clamp(0, last) as usize]).collect();
                    let n = xs.len() as f64;
                    let sx: f64 = xs.iter().sum();
                    let sxx: f64 = xs.iter().map(|x| x * x).sum();
                    let sy: f64 = ys.iter().sum();
                    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
                    (n * sxy - sx * sy) / (n * sxx - sx * sx)
                })
                .collect()
        })
        .collect()
}

pub fn max_rel_err(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(g, w)| (g - w).abs() / w.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}

pub fn max_abs_err(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max)
}

pub fn flatten(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

// ---------------------------------------------------------------- ridge

/// Closed-form ridge posterior mean on centred data via a dense LU solve:
/// (λI + αXᵀX) w = αXᵀy. Returns (w, intercept).
pub fn ridge_closed_form(rows: &[Vec<f64>], y: &[f64], alpha: f64, lambda: f64) -> (Vec<f64>, f64) {
    use nalgebra::{DMatrix, DVector};
    let n = rows.len();
    let d = rows[0].len();
    let xm: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let ym = y.iter().sum::<f64>() / n as f64;
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - xm[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - ym);
    let a = DMatrix::identity(d, d) * lambda + (x.transpose() * &x) * alpha;
    let b = (x.transpose() * yc) * alpha;
    let w = a.lu().solve(&b).expect("nonsingular");
    let w: Vec<f64> = w.iter().copied().collect();
    let intercept = ym - w.iter().zip(&xm).map(|(a, b)| a * b).sum::<f64>();
    (w, intercept)
}
