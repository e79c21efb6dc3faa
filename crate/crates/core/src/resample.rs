//! High-rate impulse train to target-rate filter.
//!
//! The chain is: rational resampling from `r_h * fs` down to `r_l * fs`, a
//! forward second-order high-pass at 80 Hz, then integer decimation by
//! `r_l` to `fs`. Both resampling stages are zero-phase windowed-sinc
//! polyphase filters, so an impulse at high-rate index `q` lands at target
//! index `q / r_h` and no group-delay trimming is needed downstream.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};
use crate::fram::{HighRateTrain, SparseTrain};
use crate::geometry::SourcePlacement;
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateFactors {
    /// Upsampling factor of the impulse train.
    pub high: u32,
    /// Factor of the intermediate rate the high-pass runs at.
    pub low: u32,
    pub sample_rate: u32,
}

impl RateFactors {
    /// `r_h = floor(1e6 / fs)`, `r_l = floor(sqrt(r_h))`.
    pub fn for_rate(sample_rate: u32) -> Result<Self> {
        ensure(sample_rate > 0, || "sample rate must be positive".into())?;
        let high = 1_000_000 / sample_rate;
        let low = (high as f64).sqrt().floor() as u32;
        if !(1 < low && low < high) {
            return Err(invalid(format!(
                "sample rate {sample_rate} Hz gives r_h={high}, r_l={low}; need 1 < r_l < r_h"
            )));
        }
        Ok(Self {
            high,
            low,
            sample_rate,
        })
    }

    pub fn high_rate(&self) -> f64 {
        self.high as f64 * self.sample_rate as f64
    }

    pub fn mid_rate(&self) -> f64 {
        self.low as f64 * self.sample_rate as f64
    }

    /// Target-rate sample an impulse at high-rate index `q` maps to.
    pub fn map_index(&self, q: usize) -> usize {
        ((q as f64) / self.high as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// High-pass cutoff in Hz.
    pub highpass_hz: f64,
    /// Half-width of the anti-aliasing filters, in zero crossings of the
    /// output-rate sinc.
    pub zero_crossings: usize,
    /// Kaiser window shape. 6.2 gives about 65 dB stop-band attenuation.
    pub kaiser_beta: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            highpass_hz: 80.0,
            zero_crossings: 16,
            kaiser_beta: 6.2,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.highpass_hz.is_finite() && self.highpass_hz > 0.0,
            || {
                format!(
                    "high-pass cutoff must be positive, got {}",
                    self.highpass_hz
                )
            },
        )?;
        ensure(self.zero_crossings > 0, || {
            "zero_crossings must be positive".into()
        })?;
        ensure(
            self.kaiser_beta.is_finite() && self.kaiser_beta >= 0.0,
            || "kaiser_beta must be non-negative".into(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Full,
    Early,
}

impl FilterKind {
    pub fn code(self) -> u8 {
        match self {
            FilterKind::Full => 0,
            FilterKind::Early => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Full => "full",
            FilterKind::Early => "early",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fram,
    Ism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirMeta {
    pub method: Method,
    pub params: SimParams,
    pub scene_hash: u64,
    pub source_index: usize,
    pub placement: Option<SourcePlacement>,
    pub reflection_coefficient: f64,
    pub max_reflections: Option<f64>,
    pub factors: RateFactors,
    /// Direct-path index per channel at the high rate.
    pub high_rate_direct_index: Vec<usize>,
}

/// Multi-channel impulse response at the target rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RirFilter {
    pub sample_rate: u32,
    pub kind: FilterKind,
    pub channels: Vec<Vec<f64>>,
    pub direct_path_sample: Vec<usize>,
    pub meta: Option<RirMeta>,
}

impl RirFilter {
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().flatten().all(|v| v.is_finite())
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Zero-phase rational resampler by `up / down`.
///
/// Output sample `k` sits at input time `k * down / up`; the prototype
/// low-pass is centred so no delay is introduced. Input samples equal to
/// zero are skipped, which makes sparse impulse trains cheap.
#[derive(Debug, Clone)]
pub struct PolyphaseResampler {
    up: usize,
    down: usize,
    half_len: usize,
    taps: Vec<f64>,
    reversed: Vec<f64>,
}

impl PolyphaseResampler {
    pub fn new(up: usize, down: usize, zero_crossings: usize, kaiser_beta: f64) -> Self {
        assert!(up > 0 && down > 0, "resampling factors must be positive");
        let g = gcd(up, down);
        let (up, down) = (up / g, down / g);
        let max = up.max(down);
        let half_len = zero_crossings * max;
        let n = 2 * half_len + 1;
        let i0_beta = bessel_i0(kaiser_beta);
        let mut taps: Vec<f64> = (0..n)
            .map(|j| {
                let t = j as f64 - half_len as f64;
                let ratio = t / half_len as f64;
                let w = bessel_i0(kaiser_beta * (1.0 - ratio * ratio).max(0.0).sqrt()) / i0_beta;
                sinc(t / max as f64) * w
            })
            .collect();
        // DC gain `up` on the zero-stuffed grid, i.e. unity overall
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t *= up as f64 / sum;
        }
        let reversed = taps.iter().rev().copied().collect();
        Self {
            up,
            down,
            half_len,
            taps,
            reversed,
        }
    }

    pub fn up(&self) -> usize {
        self.up
    }

    pub fn down(&self) -> usize {
        self.down
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        (input_len * self.up).div_ceil(self.down)
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        self.process_sparse(input.len(), input.iter().copied().enumerate())
    }

    /// Resamples a signal of `len` samples given as `(index, value)` pairs
    /// in increasing index order; absent samples are zero.
    pub fn process_sparse(
        &self,
        len: usize,
        input: impl IntoIterator<Item = (usize, f64)>,
    ) -> Vec<f64> {
        let out_len = self.output_len(len);
        let mut out = vec![0.0; out_len];
        if out_len == 0 {
            return out;
        }
        let (up, down, half) = (self.up as i64, self.down as i64, self.half_len as i64);
        for (n, x) in input {
            if x == 0.0 {
                continue;
            }
            let p = n as i64 * up;
            let k_lo = (p - half).div_euclid(down) + i64::from((p - half).rem_euclid(down) != 0);
            let k_lo = k_lo.max(0);
            let k_hi = ((p + half).div_euclid(down)).min(out_len as i64 - 1);
            let mut k = k_lo;
            while k <= k_hi {
                let j = (k * down - p + half) as usize;
                out[k as usize] += x * self.taps[j];
                k += 1;
            }
        }
        out
    }

    /// Same result as [`process`](Self::process) for `up == 1`, computed as
    /// one dot product per output. Faster on dense input.
    pub fn decimate(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(self.up, 1, "decimate needs an integer factor");
        let out_len = self.output_len(input.len());
        let (half, n_taps) = (self.half_len as i64, self.taps.len() as i64);
        let len = input.len() as i64;
        (0..out_len as i64)
            .map(|k| {
                // output k gathers input k*down - half + j with reversed tap j
                let start = k * self.down as i64 - half;
                let j_lo = (-start).max(0);
                let j_hi = (len - start).min(n_taps);
                if j_lo >= j_hi {
                    return 0.0;
                }
                let x = &input[(start + j_lo) as usize..(start + j_hi) as usize];
                let t = &self.reversed[j_lo as usize..j_hi as usize];
                dot(x, t)
            })
            .collect()
    }
}

/// Dot product with four independent partial sums so it vectorizes.
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc
        .remainder()
        .iter()
        .zip(yc.remainder())
        .map(|(a, b)| a * b)
        .sum();
    for (a, b) in xc.zip(yc) {
        for i in 0..4 {
            acc[i] += a[i] * b[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Second-order section, transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Butterworth high-pass (Q = 1/sqrt 2).
    pub fn highpass(cutoff_hz: f64, sample_rate: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 + c) / 2.0 / a0;
        Self {
            b: [b0, -(1.0 + c) / a0, b0],
            a: [-2.0 * c / a0, (1.0 - alpha) / a0],
        }
    }

    pub fn process_in_place(&self, x: &mut [f64]) {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + z1;
            z1 = self.b[1] * input - self.a[0] * y + z2;
            z2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }

    /// Magnitude response at `freq` Hz.
    pub fn magnitude(&self, freq: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq / sample_rate;
        let z1 = num_complex::Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b[0] + self.b[1] * z1 + self.b[2] * z2;
        let den = 1.0 + self.a[0] * z1 + self.a[1] * z2;
        (num / den).norm()
    }
}

/// Prepared resampling chain for one target rate.
#[derive(Debug, Clone)]
pub struct Chain {
    factors: RateFactors,
    first: PolyphaseResampler,
    highpass: Biquad,
    second: PolyphaseResampler,
}

impl Chain {
    pub fn new(factors: RateFactors, cfg: &ChainConfig) -> Self {
        let first = PolyphaseResampler::new(
            factors.low as usize,
            factors.high as usize,
            cfg.zero_crossings,
            cfg.kaiser_beta,
        );
        let second =
            PolyphaseResampler::new(1, factors.low as usize, cfg.zero_crossings, cfg.kaiser_beta);
        let highpass = Biquad::highpass(cfg.highpass_hz, factors.mid_rate());
        Self {
            factors,
            first,
            highpass,
            second,
        }
    }

    pub fn factors(&self) -> RateFactors {
        self.factors
    }

    pub fn highpass(&self) -> &Biquad {
        &self.highpass
    }

    /// Runs one channel through the chain.
    pub fn process_channel(&self, high_rate: &SparseTrain) -> Vec<f64> {
        let mut mid = self
            .first
            .process_sparse(high_rate.len, high_rate.taps.iter().copied());
        self.highpass.process_in_place(&mut mid);
        self.second.decimate(&mid)
    }

    pub fn process(&self, train: &HighRateTrain, kind: FilterKind) -> Result<RirFilter> {
        if train.channels.is_empty() || train.is_empty() {
            return Err(invalid("empty impulse train"));
        }
        let channels = train
            .channels
            .iter()
            .map(|c| self.process_channel(c))
            .collect();
        Ok(RirFilter {
            sample_rate: self.factors.sample_rate,
            kind,
            channels,
            direct_path_sample: train
                .direct_index
                .iter()
                .map(|&q| self.factors.map_index(q))
                .collect(),
            meta: None,
        })
    }
}

/// Decimate, high-pass and decimate a high-rate train.
pub fn downsample_highpass_downsample(
    train: &HighRateTrain,
    factors: RateFactors,
    cfg: &ChainConfig,
    kind: FilterKind,
) -> Result<RirFilter> {
    Chain::new(factors, cfg).process(train, kind)
}
