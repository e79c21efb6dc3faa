//! Room, array and source geometry.
//!
//! Azimuth is measured in the horizontal (x, y) plane from the +x axis,
//! which is also the axis linear arrays are laid out on. So azimuth 0 is
//! endfire and azimuth pi/2 is broadside. Elevation is measured from the
//! horizontal plane towards +z.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        (*self - *other).norm()
    }

    /// Unit vector pointing towards `(azimuth, elevation)`.
    pub fn from_angles(azimuth: f64, elevation: f64) -> Self {
        let (sa, ca) = azimuth.sin_cos();
        let (se, ce) = elevation.sin_cos();
        Vec3([ce * ca, ce * sa, se])
    }

    pub fn from_spherical(radius: f64, azimuth: f64, elevation: f64) -> Self {
        Self::from_angles(azimuth, elevation) * radius
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// A source placed relative to the array reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePlacement {
    /// Metres.
    pub distance: f64,
    /// Radians.
    pub azimuth: f64,
    /// Radians.
    pub elevation: f64,
}

impl SourcePlacement {
    pub fn new(distance: f64, azimuth: f64, elevation: f64) -> Self {
        Self {
            distance,
            azimuth,
            elevation,
        }
    }

    /// Offset of the source from the array reference point.
    pub fn offset(&self) -> Vec3 {
        Vec3::from_spherical(self.distance, self.azimuth, self.elevation)
    }
}

/// Microphones laid out on the x axis with the given inter-mic spacings,
/// centred on the origin.
pub fn linear_array(spacings: &[f64]) -> Vec<Vec3> {
    let mut xs = Vec::with_capacity(spacings.len() + 1);
    let mut x = 0.0;
    xs.push(x);
    for s in spacings {
        x += s;
        xs.push(x);
    }
    let mid = x / 2.0;
    xs.into_iter()
        .map(|x| Vec3::new(x - mid, 0.0, 0.0))
        .collect()
}

/// The 4-mic linear array with 4-8-4 cm spacings.
pub fn eval_array() -> Vec<Vec3> {
    linear_array(&[0.04, 0.08, 0.04])
}

/// `n` microphones evenly spaced on a horizontal circle.
pub fn circular_array(n: usize, radius: f64) -> Vec<Vec3> {
    (0..n)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
        })
        .collect()
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    if points.is_empty() {
        return Vec3::ZERO;
    }
    let sum = points.iter().fold(Vec3::ZERO, |acc, p| acc + *p);
    sum * (1.0 / points.len() as f64)
}

/// Largest pairwise distance between microphones.
pub fn aperture(mics: &[Vec3]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in mics.iter().enumerate() {
        for b in &mics[i + 1..] {
            best = best.max(a.distance(b));
        }
    }
    best
}

/// Point the image sphere is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereCenter {
    #[default]
    Centroid,
    Mic(usize),
    /// Offset from the array reference point.
    Point(Vec3),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    /// (length, width, height) in metres.
    pub room_dims: [f64; 3],
    /// Where the array reference point sits in the room. Only the
    /// image-source oracle needs absolute positions.
    pub array_origin: Vec3,
    /// Microphone offsets from the array reference point.
    pub mics: Vec<Vec3>,
    pub sources: Vec<SourcePlacement>,
}

impl Scene {
    /// Scene with the array reference point at the room centre.
    pub fn new(room_dims: [f64; 3], mics: Vec<Vec3>, sources: Vec<SourcePlacement>) -> Self {
        let array_origin = Vec3(room_dims) * 0.5;
        Self {
            room_dims,
            array_origin,
            mics,
            sources,
        }
    }

    pub fn with_origin(mut self, origin: Vec3) -> Self {
        self.array_origin = origin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.mics.is_empty(), || "scene has no microphones".into())?;
        ensure(!self.sources.is_empty(), || "scene has no sources".into())?;
        ensure(
            self.room_dims.iter().all(|d| d.is_finite() && *d > 0.0),
            || format!("room dimensions must be positive, got {:?}", self.room_dims),
        )?;
        let min_dim = self.room_dims.iter().cloned().fold(f64::INFINITY, f64::min);
        let ap = aperture(&self.mics);
        ensure(ap < min_dim, || {
            format!(
                "array aperture {ap} m is not smaller than the smallest room dimension {min_dim} m"
            )
        })?;
        for (k, s) in self.sources.iter().enumerate() {
            ensure(s.distance.is_finite() && s.distance > 0.0, || {
                format!("source {k} has non-positive distance {}", s.distance)
            })?;
            ensure(s.azimuth.is_finite() && s.elevation.is_finite(), || {
                format!("source {k} has non-finite angles")
            })?;
        }
        Ok(())
    }

    pub fn mic_positions(&self) -> Vec<Vec3> {
        self.mics.iter().map(|m| self.array_origin + *m).collect()
    }

    pub fn source_position(&self, k: usize) -> Vec3 {
        self.array_origin + self.sources[k].offset()
    }

    pub fn sphere_center(&self, center: SphereCenter) -> Vec3 {
        match center {
            SphereCenter::Centroid => self.array_origin + centroid(&self.mics),
            SphereCenter::Mic(m) => self.array_origin + self.mics[m.min(self.mics.len() - 1)],
            SphereCenter::Point(p) => self.array_origin + p,
        }
    }

    /// Volume over total surface area.
    pub fn volume_to_surface(&self) -> f64 {
        volume_to_surface(self.room_dims)
    }

    pub fn diagonal(&self) -> f64 {
        Vec3(self.room_dims).norm()
    }

    /// Stable content hash, used to tag generated filters.
    pub fn content_hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("scene serialises");
        let digest = Sha256::digest(&bytes);
        let mut out = [0u8; 8];
        out.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(out)
    }
}

pub fn volume_to_surface(dims: [f64; 3]) -> f64 {
    let [l, w, h] = dims;
    l * w * h / (2.0 * (l * w + l * h + w * h))
}
