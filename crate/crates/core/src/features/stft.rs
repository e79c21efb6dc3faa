use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Periodic Hann.
    Hann,
    /// Square root of the periodic Hann window.
    SqrtHann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let hann = 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos();
                match self {
                    Window::Hann => hann,
                    Window::SqrtHann => hann.sqrt(),
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftSpec {
    /// Samples per frame; also the FFT size.
    pub frame: usize,
    pub hop: usize,
    pub window: Window,
}

impl StftSpec {
    pub fn new(frame: usize, hop: usize, window: Window) -> Result<Self> {
        let s = Self { frame, hop, window };
        s.validate()?;
        Ok(s)
    }

    /// 32 ms frames with an 8 ms hop.
    pub fn speech(sample_rate: u32) -> Self {
        let frame = (sample_rate as usize * 32) / 1000;
        let hop = (sample_rate as usize * 8) / 1000;
        Self {
            frame,
            hop,
            window: Window::Hann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.hop > 0 && self.frame > self.hop, || {
            format!(
                "need frame > hop > 0, got frame={} hop={}",
                self.frame, self.hop
            )
        })
    }

    pub fn bins(&self) -> usize {
        self.frame / 2 + 1
    }

    pub fn frames_for(&self, len: usize) -> usize {
        if len < self.frame {
            0
        } else {
            1 + (len - self.frame) / self.hop
        }
    }

    /// Centre frequency of bin `f` in Hz.
    pub fn bin_hz(&self, f: usize, sample_rate: f64) -> f64 {
        f as f64 * sample_rate / self.frame as f64
    }
}

/// One channel of STFT coefficients, `frames x bins`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self {
            frames,
            bins,
            data: vec![Complex64::new(0.0, 0.0); frames * bins],
        }
    }

    #[inline]
    pub fn at(&self, t: usize, f: usize) -> Complex64 {
        self.data[t * self.bins + f]
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }
}

/// Analysis/synthesis pair for one spec.
pub struct Stft {
    spec: StftSpec,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Stft {
    pub fn new(spec: StftSpec) -> Result<Self> {
        spec.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            spec,
            window: spec.window.coefficients(spec.frame),
            forward: planner.plan_fft_forward(spec.frame),
            inverse: planner.plan_fft_inverse(spec.frame),
        })
    }

    pub fn spec(&self) -> &StftSpec {
        &self.spec
    }

    pub fn analyze(&self, x: &[f64]) -> Result<Spectrogram> {
        let frames = self.spec.frames_for(x.len());
        if frames == 0 {
            return Err(invalid(format!(
                "signal of {} samples is shorter than one {}-sample frame",
                x.len(),
                self.spec.frame
            )));
        }
        let bins = self.spec.bins();
        let mut out = Spectrogram::zeros(frames, bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.spec.frame];
        for t in 0..frames {
            let start = t * self.spec.hop;
            for (n, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(x[start + n] * self.window[n], 0.0);
            }
            self.forward.process(&mut buf);
            out.data[t * bins..(t + 1) * bins].copy_from_slice(&buf[..bins]);
        }
        Ok(out)
    }

    /// Weighted overlap-add inverse. Returns the signal and the per-sample
    /// sum of squared windows; samples where that sum is tiny are not
    /// reliably reconstructed.
    pub fn synthesize(&self, s: &Spectrogram) -> (Vec<f64>, Vec<f64>) {
        let n = self.spec.frame;
        let len = if s.frames == 0 {
            0
        } else {
            (s.frames - 1) * self.spec.hop + n
        };
        let mut out = vec![0.0; len];
        let mut norm = vec![0.0; len];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for t in 0..s.frames {
            let row = s.frame(t);
            buf[..s.bins].copy_from_slice(row);
            // Hermitian mirror
            for k in s.bins..n {
                buf[k] = row[n - k].conj();
            }
            self.inverse.process(&mut buf);
            let start = t * self.spec.hop;
            for i in 0..n {
                let w = self.window[i];
                out[start + i] += buf[i].re / n as f64 * w;
                norm[start + i] += w * w;
            }
        }
        for (o, w) in out.iter_mut().zip(&norm) {
            if *w > 1e-8 {
                *o /= w;
            }
        }
        (out, norm)
    }
}

/// Per-channel STFT of a multi-channel signal.
pub fn stft(signals: &[Vec<f64>], spec: &StftSpec) -> Result<Vec<Spectrogram>> {
    let engine = Stft::new(*spec)?;
    signals.iter().map(|x| engine.analyze(x)).collect()
}
