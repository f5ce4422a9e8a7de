//! Spectrogram features: PCM WAV decoding, log-mel spectrogram, MFCC,
//! delta coefficients and the three-channel tensor export.
//!
//! Conventions: periodic Hann window, no centre padding (frame `t` starts at
//! sample `t * hop_length`), power spectrum, HTK mel scale with peak-1
//! triangular filters spanning 0 Hz to Nyquist, natural log with an additive
//! floor, orthonormal DCT-II.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a RIFF/WAVE file")]
    NotWave,
    #[error("unsupported encoding: format tag {format_tag}, {bits} bits per sample (16-bit PCM required)")]
    UnsupportedEncoding { format_tag: u16, bits: u16 },
    #[error("truncated {0}")]
    Truncated(&'static str),
    #[error("missing `{0}` chunk")]
    MissingChunk(&'static str),
    #[error("audio has zero samples")]
    Empty,
    #[error("audio has {samples} samples, shorter than one {n_fft}-sample frame")]
    TooShort { samples: usize, n_fft: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("bad tensor file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DspParams {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop_length: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub delta_width: usize,
    pub log_floor: f64,
}

impl DspParams {
    pub fn new(sample_rate: u32) -> Self {
        Self { sample_rate, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DspError> {
        let fail = |m: String| Err(DspError::Params(m));
        if self.sample_rate == 0 {
            return fail("sample_rate must be positive".into());
        }
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return fail(format!("n_fft {} is not a power of two", self.n_fft));
        }
        if self.hop_length == 0 || self.hop_length > self.n_fft {
            return fail(format!("hop_length {} outside 1..={}", self.hop_length, self.n_fft));
        }
        if self.n_mels == 0 || self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return fail(format!("need 0 < n_mfcc ({}) <= n_mels ({})", self.n_mfcc, self.n_mels));
        }
        check_delta_width(self.delta_width)?;
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return fail("log_floor must be positive".into());
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        frame_count(n_samples, self.n_fft, self.hop_length)
    }
}

impl Default for DspParams {
    fn default() -> Self {
        Self { sample_rate: 22050, n_fft: 2048, hop_length: 256, n_mels: 128, n_mfcc: 20, delta_width: 9, log_floor: 1e-10 }
    }
}

/// Frames available without padding; 0 when the signal is shorter than one frame.
pub fn frame_count(n_samples: usize, n_fft: usize, hop: usize) -> usize {
    if n_samples < n_fft {
        0
    } else {
        1 + (n_samples - n_fft) / hop
    }
}

/// Dense row-major matrix: rows are bands/coefficients, columns are frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows * cols");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Three equally-shaped channels (MFCC, delta, delta-delta), stored as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Tensor3 {
    pub const CHANNELS: usize = 3;

    pub fn from_channels(channels: [&FeatureMatrix; 3]) -> Self {
        let (rows, cols) = (channels[0].rows, channels[0].cols);
        assert!(channels.iter().all(|m| m.rows == rows && m.cols == cols), "channel shapes differ");
        let data = channels.iter().flat_map(|m| m.data.iter().map(|&v| v as f32)).collect();
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), Self::CHANNELS * rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channel(&self, ch: usize) -> &[f32] {
        let n = self.rows * self.cols;
        &self.data[ch * n..(ch + 1) * n]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

fn u16_le(b: &[u8]) -> u16 {
    u16::from_le_bytes([b[0], b[1]])
}

fn u32_le(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

const WAVE_FORMAT_PCM: u16 = 1;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Decodes 16-bit PCM WAV bytes into mono samples in [-1, 1).
pub fn decode_wav(bytes: &[u8]) -> Result<(Vec<f64>, u32), DspError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(DspError::NotWave);
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_le(&bytes[pos + 4..pos + 8]) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + size > bytes.len() {
                    return Err(DspError::Truncated("fmt chunk"));
                }
                let b = &bytes[body..body + size];
                let mut tag = u16_le(&b[0..2]);
                let channels = u16_le(&b[2..4]);
                let rate = u32_le(&b[4..8]);
                let bits = u16_le(&b[14..16]);
                if tag == WAVE_FORMAT_EXTENSIBLE && size >= 26 {
                    tag = u16_le(&b[24..26]);
                }
                if tag != WAVE_FORMAT_PCM || bits != 16 {
                    return Err(DspError::UnsupportedEncoding { format_tag: tag, bits });
                }
                if channels == 0 {
                    return Err(DspError::Params("zero channels".into()));
                }
                fmt = Some((channels, rate, bits));
            }
            b"data" => {
                let (channels, rate, _) = fmt.ok_or(DspError::MissingChunk("fmt "))?;
                if body + size > bytes.len() {
                    return Err(DspError::Truncated("data chunk"));
                }
                let frame_bytes = 2 * channels as usize;
                if size % frame_bytes != 0 {
                    return Err(DspError::Truncated("sample frame"));
                }
                if size == 0 {
                    return Err(DspError::Empty);
                }
                let data = &bytes[body..body + size];
                let samples = data
                    .chunks_exact(frame_bytes)
                    .map(|frame| {
                        let sum: f64 =
                            frame.chunks_exact(2).map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0).sum();
                        sum / channels as f64
                    })
                    .collect();
                return Ok((samples, rate));
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
    Err(if fmt.is_some() { DspError::MissingChunk("data") } else { DspError::MissingChunk("fmt ") })
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32), DspError> {
    decode_wav(&fs::read(path)?)
}

/// Encodes interleaved 16-bit PCM as a canonical WAV file.
pub fn encode_wav_pcm16(samples: &[i16], channels: u16, sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * channels as u32 * 2).to_le_bytes());
    out.extend_from_slice(&(channels * 2).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// `n_mels + 2` filter edge frequencies, equally spaced on the mel scale.
fn mel_edges(params: &DspParams) -> Vec<f64> {
    let top = hz_to_mel(params.sample_rate as f64 / 2.0);
    (0..params.n_mels + 2).map(|i| mel_to_hz(top * i as f64 / (params.n_mels + 1) as f64)).collect()
}

/// Centre frequency (Hz) of each mel band.
pub fn mel_band_centers(params: &DspParams) -> Vec<f64> {
    let edges = mel_edges(params);
    edges[1..=params.n_mels].to_vec()
}

/// `n_mels × (n_fft/2 + 1)` triangular filterbank with unit peaks.
pub fn mel_filterbank(params: &DspParams) -> FeatureMatrix {
    let edges = mel_edges(params);
    let bin_hz = params.sample_rate as f64 / params.n_fft as f64;
    FeatureMatrix::from_fn(params.n_mels, params.n_bins(), |m, k| {
        let f = k as f64 * bin_hz;
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let rising = (f - lo) / (mid - lo);
        let falling = (hi - f) / (hi - mid);
        rising.min(falling).max(0.0)
    })
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Reusable spectrogram extractor holding the FFT plan, window and filterbank.
pub struct MelExtractor {
    params: DspParams,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    filters: FeatureMatrix,
    // sparse support of each filter
    support: Vec<(usize, usize)>,
}

impl MelExtractor {
    pub fn new(params: DspParams) -> Result<Self, DspError> {
        params.validate()?;
        let fft = FftPlanner::new().plan_fft_forward(params.n_fft);
        let window = hann(params.n_fft);
        let filters = mel_filterbank(&params);
        let support = (0..filters.rows())
            .map(|m| {
                let row = filters.row(m);
                let first = row.iter().position(|&w| w > 0.0).unwrap_or(0);
                let last = row.iter().rposition(|&w| w > 0.0).map_or(0, |l| l + 1);
                (first, last.max(first))
            })
            .collect();
        Ok(Self { params, fft, window, filters, support })
    }

    pub fn params(&self) -> &DspParams {
        &self.params
    }

    /// Power spectrum of every frame, `n_bins × n_frames`.
    pub fn power_spectrogram(&self, samples: &[f64]) -> Result<FeatureMatrix, DspError> {
        let p = &self.params;
        let frames = p.n_frames(samples.len());
        if frames == 0 {
            return Err(DspError::TooShort { samples: samples.len(), n_fft: p.n_fft });
        }
        let mut power = FeatureMatrix::zeros(p.n_bins(), frames);
        let mut buf = vec![Complex::new(0.0, 0.0); p.n_fft];
        for t in 0..frames {
            let start = t * p.hop_length;
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = Complex::new(samples[start + i] * self.window[i], 0.0);
            }
            self.fft.process(&mut buf);
            for k in 0..p.n_bins() {
                power.set(k, t, buf[k].norm_sqr());
            }
        }
        Ok(power)
    }

    pub fn mel_spectrogram(&self, samples: &[f64]) -> Result<FeatureMatrix, DspError> {
        let power = self.power_spectrogram(samples)?;
        let frames = power.cols();
        let mut mel = FeatureMatrix::zeros(self.params.n_mels, frames);
        for (m, &(first, last)) in self.support.iter().enumerate() {
            let weights = self.filters.row(m);
            for t in 0..frames {
                let energy: f64 = (first..last).map(|k| weights[k] * power.get(k, t)).sum();
                mel.set(m, t, (energy + self.params.log_floor).ln());
            }
        }
        Ok(mel)
    }
}

pub fn mel_spectrogram(samples: &[f64], params: &DspParams) -> Result<FeatureMatrix, DspError> {
    MelExtractor::new(params.clone())?.mel_spectrogram(samples)
}

/// Orthonormal DCT-II over the band axis, keeping the first `n_mfcc` coefficients.
pub fn mfcc(mel: &FeatureMatrix, n_mfcc: usize) -> Result<FeatureMatrix, DspError> {
    let n = mel.rows();
    if n_mfcc == 0 || n_mfcc > n {
        return Err(DspError::Params(format!("n_mfcc {n_mfcc} must be in 1..={n}")));
    }
    let basis = FeatureMatrix::from_fn(n_mfcc, n, |k, i| {
        let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
    });
    Ok(FeatureMatrix::from_fn(n_mfcc, mel.cols(), |k, t| {
        basis.row(k).iter().enumerate().map(|(i, b)| b * mel.get(i, t)).sum()
    }))
}

fn check_delta_width(width: usize) -> Result<(), DspError> {
    if width < 3 || width % 2 == 0 {
        return Err(DspError::Params(format!("delta width {width} must be odd and >= 3")));
    }
    Ok(())
}

/// Least-squares slope over a centred `width`-frame window, edges replicated.
pub fn delta(m: &FeatureMatrix, width: usize) -> Result<FeatureMatrix, DspError> {
    check_delta_width(width)?;
    let half = (width / 2) as isize;
    let denom: f64 = (1..=half).map(|k| (k * k) as f64).sum::<f64>() * 2.0;
    let last = m.cols() as isize - 1;
    Ok(FeatureMatrix::from_fn(m.rows(), m.cols(), |r, t| {
        let row = m.row(r);
        let at = |i: isize| row[i.clamp(0, last) as usize];
        let t = t as isize;
        (1..=half).map(|k| k as f64 * (at(t + k) - at(t - k))).sum::<f64>() / denom
    }))
}

pub fn stack3(mfcc: &FeatureMatrix, params: &DspParams) -> Result<Tensor3, DspError> {
    let d1 = delta(mfcc, params.delta_width)?;
    let d2 = delta(&d1, params.delta_width)?;
    Ok(Tensor3::from_channels([mfcc, &d1, &d2]))
}

/// Full chain from samples to the three-channel tensor.
pub fn extract_tensor(samples: &[f64], params: &DspParams) -> Result<Tensor3, DspError> {
    let mel = mel_spectrogram(samples, params)?;
    let coeffs = mfcc(&mel, params.n_mfcc)?;
    stack3(&coeffs, params)
}

pub const TENSOR_MAGIC: &[u8; 4] = b"MFT1";

pub fn encode_tensor(t: &Tensor3) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * t.data.len());
    out.extend_from_slice(TENSOR_MAGIC);
    for d in [Tensor3::CHANNELS, t.rows, t.cols] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor3, DspError> {
    if bytes.len() < 16 {
        return Err(DspError::Format("header shorter than 16 bytes".into()));
    }
    if &bytes[0..4] != TENSOR_MAGIC {
        return Err(DspError::Format(format!("magic {:?} != MFT1", &bytes[0..4])));
    }
    let channels = u32_le(&bytes[4..8]) as usize;
    let rows = u32_le(&bytes[8..12]) as usize;
    let cols = u32_le(&bytes[12..16]) as usize;
    if channels != Tensor3::CHANNELS {
        return Err(DspError::Format(format!("expected 3 channels, found {channels}")));
    }
    let n = channels * rows * cols;
    if bytes.len() != 16 + 4 * n {
        return Err(DspError::Format(format!("payload is {} bytes, expected {}", bytes.len() - 16, 4 * n)));
    }
    let data = bytes[16..].chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
    Ok(Tensor3 { rows, cols, data })
}

pub fn write_tensor(t: &Tensor3, path: impl AsRef<Path>) -> Result<(), DspError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_tensor(t))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor3, DspError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_tensor(&bytes)
}
