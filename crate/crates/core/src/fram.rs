//! Randomised virtual-source RIR generation.
//!
//! Instead of enumerating mirror images, every virtual source gets a random
//! direction on a sphere around the array, a random distance drawn through
//! a quadratic distance-ratio density, and a (possibly fractional)
//! reflection count that grows with the square of its distance. Per-mic
//! arrival times are computed from exact geometry, so inter-channel time
//! differences are preserved for every image.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Scene, Vec3};
use crate::params::SimParams;
use crate::resample::{Chain, FilterKind, Method, RateFactors, RirFilter, RirMeta};
use crate::rng::{image_stream, image_stream_at, PERTURBATION_WORD};

/// Early part of the filter, in milliseconds around the direct path.
pub const EARLY_BEFORE_MS: f64 = 6.0;
pub const EARLY_AFTER_MS: f64 = 50.0;

/// Wall reflection coefficient from room geometry and T60 (Eyring).
pub fn reflection_coefficient(room_dims: [f64; 3], t60: f64) -> Result<f64> {
    if !room_dims.iter().all(|d| d.is_finite() && *d > 0.0) {
        return Err(invalid(format!(
            "room dimensions must be positive, got {room_dims:?}"
        )));
    }
    if !(t60.is_finite() && t60 > 0.0) {
        return Err(invalid(format!("t60 must be positive, got {t60}")));
    }
    let ratio = crate::geometry::volume_to_surface(room_dims);
    let absorbed = 1.0 - (-0.16 * ratio / t60).exp();
    Ok((1.0 - absorbed * absorbed).sqrt())
}

/// Reflection count at which the farthest virtual source (at distance
/// `c0 * t60`) has decayed 60 dB below the direct path.
///
/// Returns the raw value; callers that need at least one reflection clamp.
pub fn max_reflections(t60: f64, d0: f64, r: f64, c0: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(format!(
            "reflection coefficient must be in (0, 1), got {r}"
        )));
    }
    if !(d0 > 0.0 && c0 * t60 > d0) {
        return Err(Error::InvalidConfiguration(format!(
            "direct distance {d0} m must be shorter than c0*T60 = {} m",
            c0 * t60
        )));
    }
    Ok(((c0 * t60).log10() - d0.log10() - 3.0) / r.log10())
}

/// Inverse CDF of `P(x) = 3x^2 / (beta^3 - alpha^3)` on `(alpha, beta]`.
/// `u` in `(0, 1]` maps onto the support.
pub fn distance_ratio_quantile(u: f64, alpha: f64, beta: f64) -> f64 {
    let (a3, b3) = (alpha.powi(3), beta.powi(3));
    (a3 + u * (b3 - a3)).cbrt()
}

/// CDF of the quadratic distance-ratio density.
pub fn distance_ratio_cdf(x: f64, alpha: f64, beta: f64) -> f64 {
    if x <= alpha {
        0.0
    } else if x >= beta {
        1.0
    } else {
        (x.powi(3) - alpha.powi(3)) / (beta.powi(3) - alpha.powi(3))
    }
}

/// Linear map of a sampled ratio from `[alpha, beta]` onto `[1, max_ratio]`.
pub fn rescale_distance_ratio(ratio_hat: f64, alpha: f64, beta: f64, max_ratio: f64) -> f64 {
    1.0 + alpha / (beta - alpha) * (ratio_hat / alpha - 1.0) * (max_ratio - 1.0)
}

/// Reflection count for one image, clamped to `[1, rr_max]`.
pub fn reflection_count(
    distance: f64,
    ratio: f64,
    perturbation: f64,
    max_distance: f64,
    rr_max: f64,
    tau: f64,
) -> f64 {
    let rel = distance / max_distance;
    let g = 1.0 + rel * rel * (rr_max - 1.0) + perturbation * ratio.powf(tau);
    g.min(rr_max).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    /// Distance to the sphere centre.
    pub distance: f64,
    pub azimuth: f64,
    pub elevation: f64,
    /// Sample from the quadratic density, before rescaling.
    pub ratio_hat: f64,
    /// `distance / d0`.
    pub ratio: f64,
    /// Fractional reflection count; zero until reflection counts are sampled.
    pub reflections: f64,
    pub perturbation: f64,
    /// Absolute position in the room frame.
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub source_index: usize,
    /// Source distance to the array reference point.
    pub direct_distance: f64,
    /// Direct-path distance to each mic.
    pub direct_mic_distances: Vec<f64>,
    pub center: Vec3,
    pub max_distance: f64,
    pub images: Vec<Image>,
    /// Image-to-mic distances, `images.len() x num_mics`, row-major.
    pub mic_distances: Vec<f64>,
    pub num_mics: usize,
}

impl ImageSet {
    pub fn mic_distance(&self, image: usize, mic: usize) -> f64 {
        self.mic_distances[image * self.num_mics + mic]
    }
}

/// Samples directions, distances and per-mic distances of all images of
/// one source. Deterministic in `params.seed`.
pub fn sample_image_geometry(
    params: &SimParams,
    scene: &Scene,
    source_index: usize,
) -> Result<ImageSet> {
    params.validate()?;
    scene.validate()?;
    if source_index >= scene.sources.len() {
        return Err(invalid(format!(
            "source index {source_index} out of range ({} sources)",
            scene.sources.len()
        )));
    }
    if params.alpha == 0.0 {
        return Err(invalid(
            "alpha must be positive for the distance-ratio rescaling",
        ));
    }
    let d0 = scene.sources[source_index].distance;
    let max_distance = params.max_distance();
    if max_distance <= d0 {
        return Err(Error::InvalidConfiguration(format!(
            "source distance {d0} m leaves no room for reflections within c0*T60 = {max_distance} m"
        )));
    }
    let max_ratio = max_distance / d0;
    let mics = scene.mic_positions();
    let src = scene.source_position(source_index);
    let center = scene.sphere_center(params.sphere_center);

    let direct_mic_distances = mics.iter().map(|m| src.distance(m)).collect();
    let mut images = Vec::with_capacity(params.num_images);
    let mut mic_distances = Vec::with_capacity(params.num_images * mics.len());
    for i in 0..params.num_images {
        let mut rng = image_stream(params.seed, source_index, i);
        let azimuth = 2.0 * PI * rng.random::<f64>();
        let elevation = PI * rng.random::<f64>() - PI / 2.0;
        let u = 1.0 - rng.random::<f64>();
        let ratio_hat = distance_ratio_quantile(u, params.alpha, params.beta);
        let ratio = rescale_distance_ratio(ratio_hat, params.alpha, params.beta, max_ratio);
        let distance = d0 * ratio;
        let position = center + Vec3::from_spherical(distance, azimuth, elevation);
        mic_distances.extend(mics.iter().map(|m| position.distance(m)));
        images.push(Image {
            distance,
            azimuth,
            elevation,
            ratio_hat,
            ratio,
            reflections: 0.0,
            perturbation: 0.0,
            position,
        });
    }
    Ok(ImageSet {
        source_index,
        direct_distance: d0,
        direct_mic_distances,
        center,
        max_distance,
        images,
        mic_distances,
        num_mics: mics.len(),
    })
}

/// Fills in the reflection count of every image.
pub fn sample_reflection_counts(images: &mut ImageSet, params: &SimParams, rr_max: f64) {
    let max_distance = images.max_distance;
    let source = images.source_index;
    for (i, img) in images.images.iter_mut().enumerate() {
        let mut rng = image_stream_at(params.seed, source, i, PERTURBATION_WORD);
        let u: f64 = rng.random();
        let p = params.perturb_a + (params.perturb_b - params.perturb_a) * u;
        img.perturbation = p;
        img.reflections =
            reflection_count(img.distance, img.ratio, p, max_distance, rr_max, params.tau);
    }
}

/// One channel of an impulse train: `(index, amplitude)` pairs sorted by
/// index, at most one per index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseTrain {
    pub len: usize,
    pub taps: Vec<(usize, f64)>,
}

impl SparseTrain {
    /// Sums impulses landing on the same index in the order given.
    pub fn from_impulses(len: usize, mut impulses: Vec<(usize, f64)>) -> Self {
        assert!(
            impulses.iter().all(|&(n, _)| n < len),
            "impulse beyond train end"
        );
        // stable, so equal indices keep their insertion order
        impulses.sort_by_key(|&(n, _)| n);
        let mut taps: Vec<(usize, f64)> = Vec::with_capacity(impulses.len());
        for (n, v) in impulses {
            match taps.last_mut() {
                Some(last) if last.0 == n => last.1 += v,
                _ => taps.push((n, v)),
            }
        }
        Self { len, taps }
    }

    pub fn from_dense(h: &[f64]) -> Self {
        Self {
            len: h.len(),
            taps: h
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(n, v)| (n, *v))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.len];
        for &(n, v) in &self.taps {
            h[n] = v;
        }
        h
    }

    pub fn get(&self, n: usize) -> f64 {
        self.taps
            .binary_search_by_key(&n, |&(i, _)| i)
            .map_or(0.0, |i| self.taps[i].1)
    }

    /// Indices holding a nonzero amplitude.
    pub fn support(&self) -> Vec<usize> {
        self.taps
            .iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(n, _)| *n)
            .collect()
    }

    /// Keeps only impulses with index in `lo..=hi`.
    pub fn window(&self, lo: usize, hi: usize) -> Self {
        Self {
            len: self.len,
            taps: self
                .taps
                .iter()
                .filter(|(n, _)| (lo..=hi).contains(n))
                .copied()
                .collect(),
        }
    }
}

/// Multi-channel impulse train at `r_h * fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct HighRateTrain {
    /// Hz.
    pub rate: f64,
    pub channels: Vec<SparseTrain>,
    pub direct_index: Vec<usize>,
}

impl HighRateTrain {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Train length `ceil(T60 * r_h * fs)`.
pub fn train_length(t60: f64, factors: RateFactors) -> usize {
    (t60 * factors.high_rate()).ceil() as usize
}

/// Arrival index of a path of length `distance` at `rate`, clamped to the train.
pub fn arrival_index(distance: f64, sound_speed: f64, rate: f64, len: usize) -> usize {
    ((distance / sound_speed * rate).ceil() as usize).min(len - 1)
}

/// Sums the direct path and every image into per-mic impulse trains.
pub fn build_impulse_train(images: &ImageSet, params: &SimParams, r: f64) -> Result<HighRateTrain> {
    let factors = RateFactors::for_rate(params.sample_rate)?;
    let rate = factors.high_rate();
    let len = train_length(params.t60, factors).max(1);
    let c = params.sound_speed;
    let mut channels = Vec::with_capacity(images.num_mics);
    let mut direct_index = Vec::with_capacity(images.num_mics);
    // per-image gain is shared by all mics
    let gains: Vec<f64> = images
        .images
        .iter()
        .map(|img| r.powf(img.reflections))
        .collect();
    for m in 0..images.num_mics {
        let mut h = Vec::with_capacity(gains.len() + 1);
        let d = images.direct_mic_distances[m];
        let q0 = arrival_index(d, c, rate, len);
        h.push((q0, 1.0 / d));
        direct_index.push(q0);
        for (i, gain) in gains.iter().enumerate() {
            let dim = images.mic_distance(i, m);
            h.push((arrival_index(dim, c, rate, len), gain / dim));
        }
        channels.push(SparseTrain::from_impulses(len, h));
    }
    Ok(HighRateTrain {
        rate,
        channels,
        direct_index,
    })
}

/// Sample bounds of the early window around the direct path, at `rate`.
pub fn early_window(rate: f64) -> (usize, usize) {
    (
        (EARLY_BEFORE_MS * rate / 1000.0).ceil() as usize,
        (EARLY_AFTER_MS * rate / 1000.0).ceil() as usize,
    )
}

/// Copy of `train` with everything outside [-6, +50] ms of each channel's
/// direct path zeroed.
pub fn early_reverb_train(train: &HighRateTrain) -> HighRateTrain {
    let (before, after) = early_window(train.rate);
    let channels = train
        .channels
        .iter()
        .zip(&train.direct_index)
        .map(|(h, &q0)| h.window(q0.saturating_sub(before), q0 + after))
        .collect();
    HighRateTrain {
        rate: train.rate,
        channels,
        direct_index: train.direct_index.clone(),
    }
}

/// Filters for one source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRir {
    pub full: RirFilter,
    pub early: RirFilter,
}

/// Reusable simulator for one parameter set; keeps the resampling chain.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: SimParams,
    chain: Chain,
}

impl Simulator {
    pub fn new(params: SimParams) -> Result<Self> {
        params.validate()?;
        let factors = RateFactors::for_rate(params.sample_rate)?;
        let chain = Chain::new(factors, &params.chain);
        Ok(Self { params, chain })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    /// High-rate trains (full, early) for one source, plus the sampled images.
    pub fn source_trains(
        &self,
        scene: &Scene,
        k: usize,
    ) -> Result<(ImageSet, HighRateTrain, f64, f64)> {
        let p = &self.params;
        let src = *scene
            .sources
            .get(k)
            .ok_or_else(|| invalid(format!("source index {k} out of range")))?;
        if src.distance > scene.diagonal() {
            log::warn!(
                "source {k} at {} m is farther than the room diagonal {} m",
                src.distance,
                scene.diagonal()
            );
        }
        let r = reflection_coefficient(scene.room_dims, p.t60)?;
        let mut images = sample_image_geometry(p, scene, k)?;
        let rr_max = max_reflections(p.t60, images.direct_distance, r, p.sound_speed)?.max(1.0);
        sample_reflection_counts(&mut images, p, rr_max);
        let train = build_impulse_train(&images, p, r)?;
        Ok((images, train, r, rr_max))
    }

    pub fn simulate_source(&self, scene: &Scene, k: usize) -> Result<SourceRir> {
        let (_, train, r, rr_max) = self.source_trains(scene, k)?;
        let early = early_reverb_train(&train);
        let meta = RirMeta {
            method: Method::Fram,
            params: self.params.clone(),
            scene_hash: scene.content_hash(),
            source_index: k,
            placement: Some(scene.sources[k]),
            reflection_coefficient: r,
            max_reflections: Some(rr_max),
            factors: self.chain.factors(),
            high_rate_direct_index: train.direct_index.clone(),
        };
        let mut full = self.chain.process(&train, FilterKind::Full)?;
        let mut early = self.chain.process(&early, FilterKind::Early)?;
        full.meta = Some(meta.clone());
        early.meta = Some(meta);
        Ok(SourceRir { full, early })
    }

    pub fn simulate(&self, scene: &Scene) -> Result<Vec<SourceRir>> {
        scene.validate()?;
        (0..scene.sources.len())
            .map(|k| self.simulate_source(scene, k))
            .collect()
    }
}

/// One full and one early filter per source in `scene`.
pub fn simulate_rir(params: &SimParams, scene: &Scene) -> Result<Vec<SourceRir>> {
    Simulator::new(params.clone())?.simulate(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{eval_array, SourcePlacement};

    fn scene(d0: f64) -> Scene {
        Scene::new(
            [5.0, 4.0, 3.0],
            eval_array(),
            vec![SourcePlacement::new(d0, 1.0, 0.1)],
        )
    }

    #[test]
    fn reflection_coefficient_example() {
        let r = reflection_coefficient([5.0, 4.0, 3.0], 0.5).unwrap();
        assert!((r - 0.98279).abs() < 5e-6, "{r}");
        assert!(reflection_coefficient([5.0, 4.0, 3.0], 1e-6).unwrap() < 1e-6);
        assert!(reflection_coefficient([5.0, 4.0, 3.0], 1e9).unwrap() > 1.0 - 1e-9);
        assert!(reflection_coefficient([5.0, 0.0, 3.0], 0.5).is_err());
        assert!(reflection_coefficient([5.0, 4.0, 3.0], -0.5).is_err());
    }

    #[test]
    fn max_reflections_example() {
        let rr = max_reflections(0.5, 1.5, 0.98279, 343.0).unwrap();
        assert!((rr - 124.9).abs() < 0.05, "{rr}");
        assert!(max_reflections(0.5, 1.5, 1.0, 343.0).is_err());
        assert!(max_reflections(0.5, 1.5, 0.0, 343.0).is_err());
        assert!(matches!(
            max_reflections(0.001, 1.5, 0.9, 343.0),
            Err(Error::InvalidConfiguration(_))
        ));
        let near_one = max_reflections(0.5, 1.5, 1.0 - 1e-12, 343.0).unwrap();
        assert!(near_one > 1e9);
    }

    #[test]
    fn rescale_examples() {
        let (a, b) = (0.1, 1.0);
        let max_ratio = 343.0 * 0.5 / 1.5;
        assert_eq!(rescale_distance_ratio(a, a, b, max_ratio), 1.0);
        let top = rescale_distance_ratio(b, a, b, max_ratio);
        assert!((top - max_ratio).abs() < 1e-12 * max_ratio);
        let mid = rescale_distance_ratio(0.5, a, b, max_ratio);
        assert!((mid - 51.37).abs() < 5e-3, "{mid}");
    }

    #[test]
    fn reflection_count_examples() {
        let dmax = 343.0 * 0.5;
        assert_eq!(reflection_count(dmax, 114.0, 0.0, dmax, 124.9, 0.25), 124.9);
        let g = reflection_count(dmax / 2.0, 57.0, 0.0, dmax, 124.9, 0.25);
        assert!((g - 31.975).abs() < 1e-12, "{g}");
        assert_eq!(reflection_count(10.0, 5.0, 1e9, dmax, 124.9, 0.25), 124.9);
        assert_eq!(reflection_count(10.0, 5.0, -1e9, dmax, 124.9, 0.25), 1.0);
    }

    #[test]
    fn geometry_errors() {
        let p = SimParams {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            sample_image_geometry(&p, &scene(1.5), 0),
            Err(Error::InvalidArgument(_))
        ));
        let p = SimParams::default().with_t60(0.004);
        assert!(matches!(
            sample_image_geometry(&p, &scene(1.5), 0),
            Err(Error::InvalidConfiguration(_))
        ));
        assert!(sample_image_geometry(&SimParams::default(), &scene(1.5), 3).is_err());
    }

    #[test]
    fn sampled_images_satisfy_invariants() {
        let p = SimParams::default().with_seed(11);
        let s = scene(1.5);
        let mut set = sample_image_geometry(&p, &s, 0).unwrap();
        let r = reflection_coefficient(s.room_dims, p.t60).unwrap();
        let rr = max_reflections(p.t60, 1.5, r, p.sound_speed).unwrap();
        sample_reflection_counts(&mut set, &p, rr);
        assert_eq!(set.images.len(), p.num_images);
        for img in &set.images {
            assert!(img.ratio > 1.0 && img.distance > set.direct_distance);
            assert!(img.distance <= p.max_distance() * (1.0 + 1e-12));
            assert!(img.reflections >= 1.0 && img.reflections <= rr);
            assert!((0.0..=2.0 * PI).contains(&img.azimuth));
            assert!((-PI / 2.0..=PI / 2.0).contains(&img.elevation));
            assert!((img.position.distance(&set.center) - img.distance).abs() < 1e-9);
        }
    }

    #[test]
    fn sparse_train_sums_in_order() {
        let t = SparseTrain::from_impulses(10, vec![(3, 0.1), (1, 1.0), (3, 0.2), (3, 0.3)]);
        assert_eq!(t.taps, vec![(1, 1.0), (3, 0.1 + 0.2 + 0.3)]);
        assert_eq!(t.get(3), 0.1 + 0.2 + 0.3);
        assert_eq!(t.get(2), 0.0);
        assert_eq!(SparseTrain::from_dense(&t.to_dense()), t);
    }

    #[test]
    fn index_arithmetic_example() {
        let f = RateFactors::for_rate(16_000).unwrap();
        assert_eq!(arrival_index(3.43, 343.0, f.high_rate(), 1 << 20), 9920);
        assert_eq!(early_window(f.high_rate()), (5952, 49600));
    }

    #[test]
    fn no_images_gives_direct_path_only() {
        let p = SimParams::default().with_images(0);
        let s = scene(1.5);
        let set = sample_image_geometry(&p, &s, 0).unwrap();
        let train = build_impulse_train(&set, &p, 0.9).unwrap();
        for (h, &q0) in train.channels.iter().zip(&train.direct_index) {
            assert_eq!(h.support(), vec![q0]);
        }
    }

    #[test]
    fn endfire_direct_path_tdoa() {
        // mics 0 and 2 of the eval array are 8 cm apart
        let p = SimParams::default().with_images(0);
        let mics = crate::geometry::linear_array(&[0.08]);
        let s = Scene::new(
            [5.0, 4.0, 3.0],
            mics,
            vec![SourcePlacement::new(1.5, 0.0, 0.0)],
        );
        let set = sample_image_geometry(&p, &s, 0).unwrap();
        let train = build_impulse_train(&set, &p, 0.9).unwrap();
        let diff = train.direct_index[0] as i64 - train.direct_index[1] as i64;
        // 0.08 / 343 * 992000 = 231.37
        assert!((231..=232).contains(&diff), "{diff}");
    }

    #[test]
    fn early_window_keeps_direct_and_drops_late() {
        let f = RateFactors::for_rate(16_000).unwrap();
        let rate = f.high_rate();
        let mut h = vec![0.0; 700_000];
        let q0 = 10_000;
        h[q0] = 1.0;
        h[q0 + (0.060 * rate) as usize] = 0.5;
        h[q0 + 49_600] = 0.25;
        h[q0 - 5952] = 0.125;
        h[q0 - 5953] = 0.0625;
        let train = HighRateTrain {
            rate,
            channels: vec![SparseTrain::from_dense(&h)],
            direct_index: vec![q0],
        };
        let e = early_reverb_train(&train);
        let kept: Vec<f64> = e.channels[0]
            .to_dense()
            .into_iter()
            .filter(|v| *v != 0.0)
            .collect();
        assert_eq!(kept, vec![0.125, 1.0, 0.25]);
    }

    #[test]
    fn simulate_is_deterministic() {
        let p = SimParams::default().with_seed(3).with_t60(0.3);
        let s = scene(2.0);
        let a = simulate_rir(&p, &s).unwrap();
        let b = simulate_rir(&p, &s).unwrap();
        assert_eq!(a, b);
        assert!(a[0].full.is_finite());
        assert_eq!(a[0].full.num_channels(), 4);
    }
}
