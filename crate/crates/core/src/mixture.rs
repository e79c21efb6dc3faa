//! On-the-fly multi-channel mixture generation.
//!
//! Each item draws a room, T60, source placements, SIR, SNR and overlap,
//! simulates one filter pair per source, and returns the mixture with
//! reverberant and early-reverberation references. Items are seeded from
//! `(master seed, epoch, item index)` so a batch is identical no matter how
//! many workers produce it.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};
use crate::fram::{Simulator, SourceRir};
use crate::geometry::{eval_array, Scene, SourcePlacement, Vec3};
use crate::params::SimParams;
use crate::resample::RirFilter;
use crate::rng::derive_seed;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span(pub f64, pub f64);

impl Span {
    pub fn lo(&self) -> f64 {
        self.0
    }
    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.0 == self.1 {
            self.0
        } else {
            self.0 + (self.1 - self.0) * rng.random::<f64>()
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        ensure(
            self.0.is_finite() && self.1.is_finite() && self.0 <= self.1,
            || format!("{name} range [{}, {}] is empty", self.0, self.1),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSpec {
    pub n_speakers: usize,
    pub sir_db: Span,
    pub snr_db: Span,
    pub min_overlap_ratio: f64,
    /// Metres from the array reference point; also used for the noise source.
    pub speaker_distance: Span,
    pub azimuth: Span,
    pub elevation: Span,
    /// Seconds; replaced by the curriculum range when one is active.
    pub t60: Span,
    pub room_min: [f64; 3],
    pub room_max: [f64; 3],
    /// Microphone offsets from the array reference point.
    pub mics: Vec<Vec3>,
    /// Length each dry source is cut to, in seconds.
    pub utterance_seconds: f64,
    pub sir_region: SirRegion,
    /// Base simulation parameters; T60 and seed are drawn per item.
    pub sim: SimParams,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self {
            n_speakers: 2,
            sir_db: Span(-6.0, 6.0),
            snr_db: Span(10.0, 20.0),
            min_overlap_ratio: 0.5,
            speaker_distance: Span(0.3, 6.0),
            azimuth: Span(0.0, 2.0 * PI),
            elevation: Span(-0.2, 0.2),
            t60: Span(0.1, 0.7),
            room_min: [3.0, 3.0, 2.5],
            room_max: [10.0, 10.0, 4.0],
            mics: eval_array(),
            utterance_seconds: 4.0,
            sir_region: SirRegion::Full,
            sim: SimParams::default(),
        }
    }
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.n_speakers >= 1, || "need at least one speaker".into())?;
        self.sir_db.check("SIR")?;
        self.snr_db.check("SNR")?;
        self.speaker_distance.check("speaker distance")?;
        self.azimuth.check("azimuth")?;
        self.elevation.check("elevation")?;
        self.t60.check("T60")?;
        ensure(self.speaker_distance.lo() > 0.0, || {
            "speaker distance must be positive".into()
        })?;
        ensure(self.t60.lo() > 0.0, || "T60 must be positive".into())?;
        ensure((0.0..=1.0).contains(&self.min_overlap_ratio), || {
            format!(
                "minimum overlap ratio {} is outside [0, 1]",
                self.min_overlap_ratio
            )
        })?;
        for a in 0..3 {
            Span(self.room_min[a], self.room_max[a]).check("room dimension")?;
            ensure(self.room_min[a] > 0.0, || {
                "room dimensions must be positive".into()
            })?;
        }
        ensure(!self.mics.is_empty(), || "no microphones".into())?;
        ensure(self.utterance_seconds > 0.0, || {
            "utterance length must be positive".into()
        })?;
        self.sim.validate()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sim.sample_rate
    }

    pub fn utterance_len(&self) -> usize {
        (self.utterance_seconds * self.sample_rate() as f64).round() as usize
    }
}

/// T60 schedule: the upper bound starts at 100 ms and grows by a fixed step
/// per epoch until it reaches the maximum; the lower bound stays at 50 ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumState {
    pub epoch: u32,
    pub lower_ms: f64,
    pub current_upper_ms: f64,
    pub step_ms: f64,
    pub max_ms: f64,
}

impl Default for CurriculumState {
    fn default() -> Self {
        Self {
            epoch: 0,
            lower_ms: 50.0,
            current_upper_ms: 100.0,
            step_ms: 50.0,
            max_ms: 700.0,
        }
    }
}

impl CurriculumState {
    /// State after `epoch` steps from the default start.
    pub fn at_epoch(epoch: u32) -> Self {
        (0..epoch).fold(Self::default(), |s, _| curriculum_step(&s))
    }

    pub fn t60_range(&self) -> Span {
        Span(self.lower_ms / 1000.0, self.current_upper_ms / 1000.0)
    }
}

pub fn curriculum_step(state: &CurriculumState) -> CurriculumState {
    CurriculumState {
        epoch: state.epoch + 1,
        current_upper_ms: (state.current_upper_ms + state.step_ms).min(state.max_ms),
        ..*state
    }
}

/// Everything drawn for one utterance before any audio is touched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDraw {
    /// Speakers first, then the noise source.
    pub scene: Scene,
    pub params: SimParams,
    pub sir_db: f64,
    pub snr_db: f64,
}

pub fn sample_scene(
    spec: &MixtureSpec,
    curriculum: Option<&CurriculumState>,
    rng: &mut impl Rng,
) -> Result<SceneDraw> {
    spec.validate()?;
    let mut dims = [0.0; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        *d = Span(spec.room_min[a], spec.room_max[a]).sample(rng);
    }
    let t60_span = curriculum.map_or(spec.t60, CurriculumState::t60_range);
    t60_span.check("T60")?;
    let t60 = t60_span.sample(rng);
    let mut sources = Vec::with_capacity(spec.n_speakers + 1);
    for _ in 0..spec.n_speakers + 1 {
        sources.push(SourcePlacement::new(
            spec.speaker_distance.sample(rng),
            spec.azimuth.sample(rng),
            spec.elevation.sample(rng),
        ));
    }
    let sir_db = spec.sir_db.sample(rng);
    let snr_db = spec.snr_db.sample(rng);
    let seed = rng.random::<u64>();
    let params = SimParams {
        t60,
        seed,
        ..spec.sim.clone()
    };
    Ok(SceneDraw {
        scene: Scene::new(dims, spec.mics.clone(), sources),
        params,
        sir_db,
        snr_db,
    })
}

/// `overlap / union` of two segments on a timeline.
pub fn overlap_ratio(start_a: i64, len_a: usize, start_b: i64, len_b: usize) -> f64 {
    let (ea, eb) = (start_a + len_a as i64, start_b + len_b as i64);
    let overlap = (ea.min(eb) - start_a.max(start_b)).max(0) as f64;
    let union = (ea.max(eb) - start_a.min(start_b)) as f64;
    if union > 0.0 {
        overlap / union
    } else {
        0.0
    }
}

/// Start offsets per speaker such that every speaker overlaps the first by
/// at least `min_ratio` (overlap over union of the two).
pub fn plan_offsets(lengths: &[usize], min_ratio: f64, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let first = *lengths
        .first()
        .ok_or_else(|| invalid("no sources to place"))?;
    if lengths.contains(&0) {
        return Err(invalid("empty source signal"));
    }
    let mut starts = vec![0i64];
    for &len in &lengths[1..] {
        let feasible = |s: i64| overlap_ratio(0, first, s, len) >= min_ratio;
        let lo = -(len as i64) + 1;
        let hi = first as i64 - 1;
        let start = (lo..=hi).find(|&s| feasible(s));
        let end = (lo..=hi).rev().find(|&s| feasible(s));
        let (Some(a), Some(b)) = (start, end) else {
            return Err(invalid(format!(
                "sources of {first} and {len} samples cannot reach overlap ratio {min_ratio}"
            )));
        };
        starts.push(rng.random_range(a..=b));
    }
    let min = *starts.iter().min().unwrap();
    Ok(starts.into_iter().map(|s| (s - min) as usize).collect())
}

fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// FFT convolution of one dry signal with many filters, truncated to the
/// dry length.
struct Convolver {
    n: usize,
    fft_len: usize,
    spectrum: Vec<num_complex::Complex64>,
    fwd: Arc<dyn rustfft::Fft<f64>>,
    inv: Arc<dyn rustfft::Fft<f64>>,
}

impl Convolver {
    fn new(dry: &[f64], max_filter: usize) -> Self {
        let fft_len = (dry.len() + max_filter).next_power_of_two();
        let mut planner = rustfft::FftPlanner::new();
        let fwd = planner.plan_fft_forward(fft_len);
        let inv = planner.plan_fft_inverse(fft_len);
        let mut spectrum = vec![num_complex::Complex64::new(0.0, 0.0); fft_len];
        for (s, x) in spectrum.iter_mut().zip(dry) {
            s.re = *x;
        }
        fwd.process(&mut spectrum);
        Self {
            n: dry.len(),
            fft_len,
            spectrum,
            fwd,
            inv,
        }
    }

    fn apply(&self, h: &[f64]) -> Vec<f64> {
        let mut buf = vec![num_complex::Complex64::new(0.0, 0.0); self.fft_len];
        for (b, x) in buf.iter_mut().zip(h) {
            b.re = *x;
        }
        self.fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.fft_len as f64;
        buf[..self.n].iter().map(|c| c.re * scale).collect()
    }
}

/// Each filter's channels applied to `dry`, truncated to `dry.len()`.
pub fn spatialize(dry: &[f64], filters: &[&RirFilter]) -> Vec<Vec<Vec<f64>>> {
    let max = filters.iter().map(|f| f.len()).max().unwrap_or(1);
    let conv = Convolver::new(dry, max);
    filters
        .iter()
        .map(|f| f.channels.iter().map(|h| conv.apply(h)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPlan {
    pub offsets: Vec<usize>,
    pub sir_db: f64,
    pub snr_db: f64,
    /// Reference channel for SIR and SNR scaling.
    pub reference: usize,
    pub sir_region: SirRegion,
}

/// Span over which speaker powers are compared for SIR scaling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SirRegion {
    /// Each speaker over its own full extent.
    #[default]
    Full,
    /// Both speakers over the samples where they overlap.
    Overlap,
}

/// Multi-channel mixture with per-speaker references, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: Vec<Vec<f64>>,
    /// Reverberant image of each speaker as it appears in the mixture.
    pub reverberant: Vec<Vec<Vec<f64>>>,
    /// Early-reverberation image of each speaker, same scaling.
    pub early: Vec<Vec<Vec<f64>>>,
    pub noise: Vec<Vec<f64>>,
    pub speaker_gains: Vec<f64>,
    pub noise_gain: f64,
}

/// Convolves, offsets and scales the speakers, then adds noise.
///
/// Interferers are scaled so each has `sir_db` less power than speaker 0 on
/// the reference channel, and the noise so the speech sum sits `snr_db`
/// above it. Both powers are taken over each signal's full extent.
pub fn spatialize_and_mix(
    speakers: &[Vec<f64>],
    noise: &[f64],
    speaker_rirs: &[SourceRir],
    noise_rir: &RirFilter,
    plan: &MixPlan,
) -> Result<Mixture> {
    if speakers.is_empty()
        || speakers.len() != speaker_rirs.len()
        || plan.offsets.len() != speakers.len()
    {
        return Err(invalid("need one filter pair and one offset per speaker"));
    }
    let channels = noise_rir.num_channels();
    if speaker_rirs
        .iter()
        .any(|r| r.full.num_channels() != channels || r.early.num_channels() != channels)
    {
        return Err(invalid("filters disagree on channel count"));
    }
    if plan.reference >= channels {
        return Err(invalid("reference channel out of range"));
    }
    let total = speakers
        .iter()
        .zip(&plan.offsets)
        .map(|(s, o)| s.len() + o)
        .max()
        .unwrap_or(0);
    let mut reverberant = Vec::with_capacity(speakers.len());
    let mut early = Vec::with_capacity(speakers.len());
    for ((dry, rir), &offset) in speakers.iter().zip(speaker_rirs).zip(&plan.offsets) {
        let mut images = spatialize(dry, &[&rir.full, &rir.early]).into_iter();
        let place = |chs: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            chs.into_iter()
                .map(|c| {
                    let mut out = vec![0.0; total];
                    out[offset..offset + c.len()].copy_from_slice(&c);
                    out
                })
                .collect()
        };
        reverberant.push(place(images.next().unwrap()));
        early.push(place(images.next().unwrap()));
    }
    let extent = |k: usize| (plan.offsets[k], plan.offsets[k] + speakers[k].len());
    let mut gains = vec![1.0];
    for k in 1..speakers.len() {
        let (a, b) = match plan.sir_region {
            SirRegion::Full => (extent(0), extent(k)),
            SirRegion::Overlap => {
                let lo = extent(0).0.max(extent(k).0);
                let hi = extent(0).1.min(extent(k).1);
                if lo >= hi {
                    return Err(invalid("speakers do not overlap"));
                }
                ((lo, hi), (lo, hi))
            }
        };
        let p0 = power(&reverberant[0][plan.reference][a.0..a.1]);
        let pk = power(&reverberant[k][plan.reference][b.0..b.1]);
        if p0 <= 0.0 || pk <= 0.0 {
            return Err(invalid("a speaker is silent on the reference channel"));
        }
        gains.push((p0 / (pk * 10f64.powf(plan.sir_db / 10.0))).sqrt());
    }
    for (k, g) in gains.iter().enumerate() {
        for c in reverberant[k].iter_mut().chain(early[k].iter_mut()) {
            c.iter_mut().for_each(|v| *v *= g);
        }
    }
    let mut mixture = vec![vec![0.0; total]; channels];
    for r in &reverberant {
        for (m, c) in r.iter().enumerate() {
            for (o, v) in mixture[m].iter_mut().zip(c) {
                *o += v;
            }
        }
    }
    if noise.is_empty() {
        return Err(invalid("empty noise signal"));
    }
    let tiled: Vec<f64> = noise.iter().cycle().take(total).cloned().collect();
    let mut noise_img = spatialize(&tiled, &[noise_rir]).pop().unwrap();
    let noise_power = power(&noise_img[plan.reference]);
    if noise_power <= 0.0 {
        return Err(invalid("noise is silent on the reference channel"));
    }
    let speech_power = power(&mixture[plan.reference]);
    let noise_gain = (speech_power / (noise_power * 10f64.powf(plan.snr_db / 10.0))).sqrt();
    for (m, c) in noise_img.iter_mut().enumerate() {
        for (o, v) in mixture[m].iter_mut().zip(c.iter_mut()) {
            *v *= noise_gain;
            *o += *v;
        }
    }
    Ok(Mixture {
        mixture,
        reverberant,
        early,
        noise: noise_img,
        speaker_gains: gains,
        noise_gain,
    })
}

/// Where dry speech and noise come from.
pub trait SignalPool: Send + Sync {
    /// A speech segment of at most `len` samples.
    fn speech(&self, rng: &mut ChaCha8Rng, len: usize) -> Result<Vec<f64>>;
    /// A noise segment; it is tiled to the mixture length.
    fn noise(&self, rng: &mut ChaCha8Rng, len: usize) -> Result<Vec<f64>>;
}

/// Speech-like harmonic bursts and white noise, for tests and benchmarks
/// without a corpus.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticPool {
    pub sample_rate: u32,
}

impl SyntheticPool {
    pub fn new(sample_rate: u32) -> Self {
        Self { sample_rate }
    }
}

impl SignalPool for SyntheticPool {
    fn speech(&self, rng: &mut ChaCha8Rng, len: usize) -> Result<Vec<f64>> {
        let fs = self.sample_rate as f64;
        let f0 = 90.0 + 150.0 * rng.random::<f64>();
        let syllable = 3.0 + 3.0 * rng.random::<f64>();
        let phase: f64 = 2.0 * PI * rng.random::<f64>();
        let harmonics = ((3500.0 / f0) as usize).max(1);
        let amps: Vec<f64> = (1..=harmonics)
            .map(|h| (0.5 + rng.random::<f64>()) / h as f64)
            .collect();
        let mut out = Vec::with_capacity(len);
        for n in 0..len {
            let t = n as f64 / fs;
            // 3 % vibrato at 4 Hz, integrated into the phase
            let warped = t + 0.03 / (2.0 * PI * 4.0) * (1.0 - (2.0 * PI * 4.0 * t).cos());
            let env = (0.5 - 0.5 * (2.0 * PI * syllable * t + phase).cos()).powi(2);
            let mut s = 0.0;
            for (h, a) in amps.iter().enumerate() {
                s += a * (2.0 * PI * f0 * (h + 1) as f64 * warped).sin();
            }
            let breath: f64 = StandardNormal.sample(rng);
            out.push(0.1 * env * (s + 0.05 * breath));
        }
        Ok(out)
    }

    fn noise(&self, rng: &mut ChaCha8Rng, len: usize) -> Result<Vec<f64>> {
        Ok((0..len)
            .map(|_| 0.05 * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect())
    }
}

/// Mono WAV files from user-supplied directories.
#[derive(Debug, Clone)]
pub struct WavPool {
    pub speech: Vec<PathBuf>,
    pub noise: Vec<PathBuf>,
    pub sample_rate: u32,
}

impl WavPool {
    /// Every `.wav` directly inside the two directories.
    pub fn from_dirs(speech_dir: &Path, noise_dir: &Path, sample_rate: u32) -> Result<Self> {
        let list = |d: &Path| -> Result<Vec<PathBuf>> {
            let mut v: Vec<PathBuf> = std::fs::read_dir(d)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
                .collect();
            v.sort();
            if v.is_empty() {
                return Err(invalid(format!("no WAV files in {}", d.display())));
            }
            Ok(v)
        };
        Ok(Self {
            speech: list(speech_dir)?,
            noise: list(noise_dir)?,
            sample_rate,
        })
    }

    fn segment(&self, files: &[PathBuf], rng: &mut ChaCha8Rng, len: usize) -> Result<Vec<f64>> {
        let path = &files[rng.random_range(0..files.len())];
        let (fs, channels) = crate::io::read_wav(path)?;
        if fs != self.sample_rate {
            return Err(invalid(format!(
                "{} is at {fs} Hz, expected {} Hz",
                path.display(),
                self.sample_rate
            )));
        }
        let x: Vec<f64> = channels
            .into_iter()
            .next()
            .ok_or_else(|| invalid(format!("{} has no audio", path.display())))?;
        if x.len() <= len {
            return Ok(x);
        }
        let start = rng.random_range(0..=x.len() - len);
        Ok(x[start..start + len].to_vec())
    }
}

impl SignalPool for WavPool {
    fn speech(&self, rng: &mut ChaCha8Rng, len: usize) -> Result<Vec<f64>> {
        self.segment(&self.speech, rng, len)
    }

    fn noise(&self, rng: &mut ChaCha8Rng, len: usize) -> Result<Vec<f64>> {
        self.segment(&self.noise, rng, len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub seed: u64,
    pub epoch: u32,
    pub index: u64,
    pub sample_rate: u32,
    pub room_dims: [f64; 3],
    pub t60: f64,
    pub sir_db: f64,
    pub snr_db: f64,
    pub reflection_coefficient: f64,
    /// (distance, azimuth, elevation) per speaker, radians.
    pub speakers: Vec<SourcePlacement>,
    pub noise: SourcePlacement,
    pub offsets: Vec<usize>,
    pub overlap_ratio: Option<f64>,
    pub sim_seed: u64,
}

/// One generated utterance in `f32`, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub mixture: Vec<Vec<f32>>,
    pub targets: Vec<Vec<Vec<f32>>>,
    pub early_targets: Vec<Vec<Vec<f32>>>,
    pub meta: ItemMeta,
}

fn to_f32(x: &[Vec<f64>]) -> Vec<Vec<f32>> {
    x.iter()
        .map(|c| c.iter().map(|v| *v as f32).collect())
        .collect()
}

/// Generates one item from its seed.
pub fn generate_item(
    spec: &MixtureSpec,
    curriculum: Option<&CurriculumState>,
    pool: &dyn SignalPool,
    seed: u64,
    index: u64,
) -> Result<BatchItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = sample_scene(spec, curriculum, &mut rng)?;
    let sim = Simulator::new(draw.params.clone())?;
    let rirs = sim.simulate(&draw.scene)?;
    let len = spec.utterance_len();
    let speakers = (0..spec.n_speakers)
        .map(|_| pool.speech(&mut rng, len))
        .collect::<Result<Vec<_>>>()?;
    let noise = pool.noise(&mut rng, len)?;
    let lengths: Vec<usize> = speakers.iter().map(Vec::len).collect();
    let offsets = plan_offsets(&lengths, spec.min_overlap_ratio, &mut rng)?;
    let plan = MixPlan {
        offsets: offsets.clone(),
        sir_db: draw.sir_db,
        snr_db: draw.snr_db,
        reference: 0,
        sir_region: spec.sir_region,
    };
    let (speaker_rirs, noise_rir) = rirs.split_at(spec.n_speakers);
    let mix = spatialize_and_mix(&speakers, &noise, speaker_rirs, &noise_rir[0].full, &plan)?;
    let overlap = (spec.n_speakers >= 2)
        .then(|| overlap_ratio(offsets[0] as i64, lengths[0], offsets[1] as i64, lengths[1]));
    let r = rirs[0]
        .full
        .meta
        .as_ref()
        .map_or(0.0, |m| m.reflection_coefficient);
    Ok(BatchItem {
        mixture: to_f32(&mix.mixture),
        targets: mix.reverberant.iter().map(|r| to_f32(r)).collect(),
        early_targets: mix.early.iter().map(|r| to_f32(r)).collect(),
        meta: ItemMeta {
            seed,
            epoch: curriculum.map_or(0, |c| c.epoch),
            index,
            sample_rate: spec.sample_rate(),
            room_dims: draw.scene.room_dims,
            t60: draw.params.t60,
            sir_db: draw.sir_db,
            snr_db: draw.snr_db,
            reflection_coefficient: r,
            speakers: draw.scene.sources[..spec.n_speakers].to_vec(),
            noise: draw.scene.sources[spec.n_speakers],
            offsets,
            overlap_ratio: overlap,
            sim_seed: draw.params.seed,
        },
    })
}

/// Batch producer with its own worker pool.
pub struct BatchGenerator {
    spec: MixtureSpec,
    pool: Arc<dyn SignalPool>,
    workers: rayon::ThreadPool,
    master_seed: u64,
}

impl BatchGenerator {
    pub fn new(
        spec: MixtureSpec,
        pool: Arc<dyn SignalPool>,
        master_seed: u64,
        workers: usize,
    ) -> Result<Self> {
        spec.validate()?;
        let workers = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            spec,
            pool,
            workers,
            master_seed,
        })
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }

    pub fn item_seed(&self, epoch: u32, index: u64) -> u64 {
        derive_seed(self.master_seed, epoch as u64, index)
    }

    /// Items `first .. first + batch_size` of the epoch.
    pub fn batch(
        &self,
        curriculum: Option<&CurriculumState>,
        first: u64,
        batch_size: usize,
    ) -> Result<Vec<BatchItem>> {
        let epoch = curriculum.map_or(0, |c| c.epoch);
        self.workers.install(|| {
            (0..batch_size as u64)
                .into_par_iter()
                .map(|i| {
                    let index = first + i;
                    generate_item(
                        &self.spec,
                        curriculum,
                        self.pool.as_ref(),
                        self.item_seed(epoch, index),
                        index,
                    )
                })
                .collect()
        })
    }
}

/// Convenience wrapper around [`BatchGenerator`].
pub fn generate_batch(
    batch_size: usize,
    spec: &MixtureSpec,
    curriculum: Option<&CurriculumState>,
    master_seed: u64,
    workers: usize,
    pool: Arc<dyn SignalPool>,
) -> Result<Vec<BatchItem>> {
    BatchGenerator::new(spec.clone(), pool, master_seed, workers)?.batch(curriculum, 0, batch_size)
}

/// Produces `n_batches` batches on a background thread into a bounded
/// queue of `capacity` batches.
pub fn spawn_batches(
    generator: Arc<BatchGenerator>,
    curriculum: Option<CurriculumState>,
    n_batches: usize,
    batch_size: usize,
    capacity: usize,
) -> Receiver<Result<Vec<BatchItem>>> {
    let (tx, rx) = sync_channel(capacity.max(1));
    std::thread::spawn(move || {
        for b in 0..n_batches {
            let batch = generator.batch(curriculum.as_ref(), (b * batch_size) as u64, batch_size);
            if tx.send(batch).is_err() {
                break;
            }
        }
    });
    rx
}
