//! Shoebox image-source method, used as a reference for the randomised
//! simulator. Images are enumerated per axis up to `max_order`, all six
//! walls share one reflection coefficient, and the resulting high-rate
//! train goes through the same resampling chain.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fram::{reflection_coefficient, train_length, HighRateTrain, SparseTrain};
use crate::geometry::{Scene, Vec3};
use crate::params::{SimParams, SPEED_OF_SOUND};
use crate::resample::{Chain, ChainConfig, FilterKind, Method, RateFactors, RirFilter, RirMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsmConfig {
    pub room_dims: [f64; 3],
    /// Absolute room coordinates.
    pub source_position: Vec3,
    pub mic_positions: Vec<Vec3>,
    /// Reflections per axis; `None` picks an order whose images reach past c0*T60.
    pub max_order: Option<usize>,
    pub t60: f64,
    pub sample_rate: u32,
    pub sound_speed: f64,
    pub chain: ChainConfig,
}

impl IsmConfig {
    /// Oracle configuration matching source `k` of `scene` under `params`.
    pub fn from_scene(
        scene: &Scene,
        k: usize,
        params: &SimParams,
        max_order: Option<usize>,
    ) -> Self {
        Self {
            room_dims: scene.room_dims,
            source_position: scene.source_position(k),
            mic_positions: scene.mic_positions(),
            max_order,
            t60: params.t60,
            sample_rate: params.sample_rate,
            sound_speed: params.sound_speed,
            chain: params.chain,
        }
    }

    pub fn new(
        room_dims: [f64; 3],
        source: Vec3,
        mics: Vec<Vec3>,
        t60: f64,
        sample_rate: u32,
    ) -> Self {
        Self {
            room_dims,
            source_position: source,
            mic_positions: mics,
            max_order: None,
            t60,
            sample_rate,
            sound_speed: SPEED_OF_SOUND,
            chain: ChainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.room_dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            return Err(invalid(format!(
                "room dimensions must be positive, got {:?}",
                self.room_dims
            )));
        }
        let inside = |p: &Vec3| (0..3).all(|a| p.0[a] > 0.0 && p.0[a] < self.room_dims[a]);
        if !inside(&self.source_position) {
            return Err(invalid(format!(
                "source {:?} is outside the room",
                self.source_position.0
            )));
        }
        if self.mic_positions.is_empty() {
            return Err(invalid("no microphones"));
        }
        if let Some(m) = self.mic_positions.iter().find(|m| !inside(m)) {
            return Err(invalid(format!("microphone {:?} is outside the room", m.0)));
        }
        if !(self.t60.is_finite() && self.t60 > 0.0) {
            return Err(invalid(format!("t60 must be positive, got {}", self.t60)));
        }
        self.chain.validate()
    }

    /// Smallest per-axis order whose outermost images lie beyond c0*T60.
    pub fn auto_order(&self) -> usize {
        let min_dim = self.room_dims.iter().cloned().fold(f64::INFINITY, f64::min);
        (self.sound_speed * self.t60 / min_dim).ceil() as usize + 1
    }

    pub fn order(&self) -> usize {
        self.max_order.unwrap_or_else(|| self.auto_order())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorImage {
    pub position: Vec3,
    pub reflections: u32,
}

/// Coordinate of image `k` of a point at `s` on an axis of length `len`.
/// Odd images are mirrored: image 1 is `2 len - s`, image -1 is `-s`.
fn axis_image(k: i64, s: f64, len: f64) -> f64 {
    if k % 2 == 0 {
        k as f64 * len + s
    } else {
        k as f64 * len + (len - s)
    }
}

/// All `(2 N + 1)^3` images for per-axis order `N`.
pub fn enumerate_images(cfg: &IsmConfig) -> Result<Vec<MirrorImage>> {
    cfg.validate()?;
    let n = cfg.order() as i64;
    let per_axis: Vec<Vec<(f64, u32)>> = (0..3)
        .map(|a| {
            (-n..=n)
                .map(|k| {
                    (
                        axis_image(k, cfg.source_position.0[a], cfg.room_dims[a]),
                        k.unsigned_abs() as u32,
                    )
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(per_axis[0].len().pow(3));
    for &(x, gx) in &per_axis[0] {
        for &(y, gy) in &per_axis[1] {
            for &(z, gz) in &per_axis[2] {
                out.push(MirrorImage {
                    position: Vec3::new(x, y, z),
                    reflections: gx + gy + gz,
                });
            }
        }
    }
    Ok(out)
}

/// Builds the high-rate train of the enumerated images. Images arriving
/// after the train ends are dropped; the direct path is clamped into it.
pub fn ism_train(cfg: &IsmConfig) -> Result<(HighRateTrain, f64)> {
    let images = enumerate_images(cfg)?;
    let factors = RateFactors::for_rate(cfg.sample_rate)?;
    let rate = factors.high_rate();
    let len = train_length(cfg.t60, factors).max(1);
    let r = reflection_coefficient(cfg.room_dims, cfg.t60)?;
    let c = cfg.sound_speed;
    let gains: Vec<f64> = images
        .iter()
        .map(|img| r.powi(img.reflections as i32))
        .collect();
    let mut channels = Vec::with_capacity(cfg.mic_positions.len());
    let mut direct_index = Vec::with_capacity(cfg.mic_positions.len());
    for mic in &cfg.mic_positions {
        let mut h = Vec::with_capacity(images.len());
        let d0 = cfg.source_position.distance(mic);
        direct_index.push(((d0 / c * rate).ceil() as usize).min(len - 1));
        for (img, gain) in images.iter().zip(&gains) {
            let d = img.position.distance(mic);
            let q = (d / c * rate).ceil() as usize;
            if img.reflections == 0 {
                h.push((q.min(len - 1), 1.0 / d));
            } else if q < len {
                h.push((q, gain / d));
            }
        }
        channels.push(SparseTrain::from_impulses(len, h));
    }
    Ok((
        HighRateTrain {
            rate,
            channels,
            direct_index,
        },
        r,
    ))
}

/// Image-source RIR for every microphone, through the shared chain.
pub fn ism_rir(cfg: &IsmConfig) -> Result<RirFilter> {
    let (train, r) = ism_train(cfg)?;
    let factors = RateFactors::for_rate(cfg.sample_rate)?;
    let mut out = Chain::new(factors, &cfg.chain).process(&train, FilterKind::Full)?;
    let params = SimParams {
        t60: cfg.t60,
        sample_rate: cfg.sample_rate,
        sound_speed: cfg.sound_speed,
        chain: cfg.chain,
        num_images: (2 * cfg.order() + 1).pow(3),
        ..SimParams::default()
    };
    out.meta = Some(RirMeta {
        method: Method::Ism,
        params,
        scene_hash: 0,
        source_index: 0,
        placement: None,
        reflection_coefficient: r,
        max_reflections: None,
        factors,
        high_rate_direct_index: train.direct_index.clone(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(order: usize) -> IsmConfig {
        let mut c = IsmConfig::new(
            [4.0, 4.0, 4.0],
            Vec3::new(2.0, 2.0, 2.0),
            vec![Vec3::new(1.0, 1.5, 1.2), Vec3::new(1.08, 1.5, 1.2)],
            0.3,
            16_000,
        );
        c.max_order = Some(order);
        c
    }

    #[test]
    fn image_counts() {
        let imgs = enumerate_images(&cfg(0)).unwrap();
        assert_eq!(imgs.len(), 1);
        assert_eq!(imgs[0].reflections, 0);
        assert_eq!(imgs[0].position, Vec3::new(2.0, 2.0, 2.0));
        assert_eq!(enumerate_images(&cfg(1)).unwrap().len(), 27);
        assert_eq!(enumerate_images(&cfg(3)).unwrap().len(), 343);
    }

    #[test]
    fn first_order_mirror() {
        let mut c = cfg(1);
        c.source_position = Vec3::new(1.0, 2.0, 2.0);
        let imgs = enumerate_images(&c).unwrap();
        let wall_x = imgs
            .iter()
            .find(|i| i.reflections == 1 && i.position.x() > 4.0)
            .unwrap();
        assert_eq!(wall_x.position.x(), 2.0 * 4.0 - 1.0);
        let wall_0 = imgs
            .iter()
            .find(|i| i.reflections == 1 && i.position.x() < 0.0)
            .unwrap();
        assert_eq!(wall_0.position.x(), -1.0);
        // six first-order images
        assert_eq!(imgs.iter().filter(|i| i.reflections == 1).count(), 6);
    }

    #[test]
    fn outside_source_rejected() {
        let mut c = cfg(1);
        c.source_position = Vec3::new(5.0, 2.0, 2.0);
        assert!(enumerate_images(&c).is_err());
        let mut c = cfg(1);
        c.mic_positions.push(Vec3::new(1.0, -0.1, 1.0));
        assert!(ism_rir(&c).is_err());
    }

    #[test]
    fn direct_path_tdoa_is_ceil_difference() {
        let c = cfg(0);
        let (train, _) = ism_train(&c).unwrap();
        let rate = 992_000.0;
        let expect: Vec<usize> = c
            .mic_positions
            .iter()
            .map(|m| (c.source_position.distance(m) / 343.0 * rate).ceil() as usize)
            .collect();
        assert_eq!(train.direct_index, expect);
    }

    #[test]
    fn repeated_runs_identical() {
        let c = cfg(4);
        assert_eq!(ism_rir(&c).unwrap(), ism_rir(&c).unwrap());
    }

    #[test]
    fn auto_order_reaches_max_distance() {
        let c = cfg(0);
        let n = c.auto_order();
        assert!(n as f64 * 4.0 > 343.0 * 0.3);
    }
}
