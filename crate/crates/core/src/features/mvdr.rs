//! Mask-based MVDR beamforming and its beampattern.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::features::directional::{mvdr_weights, steering_vector, ArrayContext, TfMap};
use crate::features::stft::{stft, Spectrogram};

/// Relative diagonal loading added to the noise covariance.
pub const DEFAULT_LOADING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Steering {
    /// Exact far-field steering towards an azimuth.
    PlaneWave { azimuth: f64 },
    /// Principal eigenvector of the target covariance, phase-referenced to mic 0.
    PrincipalComponent,
}

/// Ideal ratio masks `|S_k| / (|S_k| + |N_k|)` on the reference channel,
/// where `N_k` is the sum of all other sources.
pub fn ideal_ratio_masks(sources: &[Vec<Spectrogram>], reference: usize) -> Result<Vec<TfMap>> {
    let first = sources.first().ok_or_else(|| invalid("no sources"))?;
    let r = first
        .get(reference)
        .ok_or_else(|| invalid("no reference channel"))?;
    let (frames, bins) = (r.frames, r.bins);
    let mut masks = Vec::with_capacity(sources.len());
    for k in 0..sources.len() {
        masks.push(TfMap::from_fn(frames, bins, |t, f| {
            let s = sources[k][reference].at(t, f);
            let mut n = Complex64::new(0.0, 0.0);
            for (j, other) in sources.iter().enumerate() {
                if j != k {
                    n += other[reference].at(t, f);
                }
            }
            let denom = s.norm() + n.norm();
            if denom > 0.0 {
                s.norm() / denom
            } else {
                0.0
            }
        }));
    }
    Ok(masks)
}

/// Mask-weighted spatial covariance per bin.
pub fn masked_covariance(y: &[Spectrogram], mask: &TfMap) -> Result<Vec<DMatrix<Complex64>>> {
    let m = y.len();
    let first = y.first().ok_or_else(|| invalid("no channels"))?;
    if mask.frames != first.frames || mask.bins != first.bins {
        return Err(invalid("mask shape does not match the spectrogram"));
    }
    let mut out = Vec::with_capacity(first.bins);
    for f in 0..first.bins {
        let mut cov = DMatrix::<Complex64>::zeros(m, m);
        let mut weight = 0.0;
        for t in 0..first.frames {
            let w = mask.at(t, f);
            if w == 0.0 {
                continue;
            }
            weight += w;
            for i in 0..m {
                let yi = y[i].at(t, f);
                for j in 0..m {
                    cov[(i, j)] += yi * y[j].at(t, f).conj() * w;
                }
            }
        }
        if weight > 0.0 {
            cov /= Complex64::new(weight, 0.0);
        }
        out.push(cov);
    }
    Ok(out)
}

fn load(cov: &DMatrix<Complex64>, rel: f64) -> DMatrix<Complex64> {
    let m = cov.nrows();
    let trace: f64 = (0..m).map(|i| cov[(i, i)].re).sum::<f64>() / m as f64;
    let eps = if trace > 0.0 {
        rel * trace
    } else {
        rel.max(1e-12)
    };
    let mut out = cov.clone();
    for i in 0..m {
        out[(i, i)] += eps;
    }
    out
}

fn principal_vector(cov: &DMatrix<Complex64>) -> DVector<Complex64> {
    let m = cov.nrows();
    let eig = cov.clone().symmetric_eigen();
    let best = (0..m)
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap_or(0);
    let mut v: DVector<Complex64> = eig.eigenvectors.column(best).into_owned();
    let r = v[0];
    if r.norm() > 1e-12 {
        v /= r;
    } else {
        let n = v.norm();
        if n > 0.0 {
            v /= Complex64::new(n, 0.0);
        } else {
            v = DVector::from_element(m, Complex64::new(1.0, 0.0));
        }
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct Beampattern {
    pub azimuths: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    /// `magnitude[doa][bin]`.
    pub magnitude: Vec<Vec<f64>>,
}

impl Beampattern {
    pub fn response(&self, doa: usize, bin: usize) -> f64 {
        self.magnitude[doa][bin]
    }
}

/// MVDR weights per bin from a target mask: the noise covariance uses
/// `1 - mask`, the steering vector comes from `steering`.
pub fn mvdr_from_mask(
    y: &[Spectrogram],
    target_mask: &TfMap,
    ctx: &ArrayContext,
    steering: Steering,
    loading: f64,
) -> Result<Vec<DVector<Complex64>>> {
    let noise_mask = TfMap {
        frames: target_mask.frames,
        bins: target_mask.bins,
        data: target_mask.data.iter().map(|m| 1.0 - m).collect(),
    };
    let noise_cov = masked_covariance(y, &noise_mask)?;
    let target_cov = match steering {
        Steering::PrincipalComponent => Some(masked_covariance(y, target_mask)?),
        Steering::PlaneWave { .. } => None,
    };
    (0..noise_cov.len())
        .map(|f| {
            let d = match steering {
                Steering::PlaneWave { azimuth } => {
                    steering_vector(&ctx.mics, azimuth, ctx.bin_hz(f), ctx.sound_speed)
                }
                Steering::PrincipalComponent => principal_vector(&target_cov.as_ref().unwrap()[f]),
            };
            mvdr_weights(&load(&noise_cov[f], loading), &d)
        })
        .collect()
}

/// `|w(f)^H a(theta, f)|` over `scan` azimuths, phase-referenced to mic 0.
pub fn beampattern(
    weights: &[DVector<Complex64>],
    ctx: &ArrayContext,
    scan: &[f64],
) -> Beampattern {
    let freqs_hz: Vec<f64> = (0..weights.len()).map(|f| ctx.bin_hz(f)).collect();
    let magnitude = scan
        .iter()
        .map(|&az| {
            weights
                .iter()
                .zip(&freqs_hz)
                .map(|(w, &hz)| {
                    let mut a = steering_vector(&ctx.mics, az, hz, ctx.sound_speed);
                    let r = a[0];
                    a /= r;
                    w.dotc(&a).norm()
                })
                .collect()
        })
        .collect();
    Beampattern {
        azimuths: scan.to_vec(),
        freqs_hz,
        magnitude,
    }
}

/// Beampattern of an MVDR beamformer estimated from a multi-channel
/// mixture and an oracle target mask.
pub fn mvdr_beampattern(
    mixture: &[Vec<f64>],
    target_mask: &TfMap,
    ctx: &ArrayContext,
    steering: Steering,
    scan: &[f64],
) -> Result<Beampattern> {
    if mixture.len() != ctx.mics.len() {
        return Err(invalid(format!(
            "mixture has {} channels but the array has {} mics",
            mixture.len(),
            ctx.mics.len()
        )));
    }
    if target_mask.data.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(invalid("masks must lie in [0, 1]"));
    }
    let y = stft(mixture, &ctx.spec)?;
    let w = mvdr_from_mask(&y, target_mask, ctx, steering, DEFAULT_LOADING)?;
    Ok(beampattern(&w, ctx, scan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::stft::StftSpec;
    use crate::geometry::Vec3;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_mic_pattern_is_flat() {
        let ctx = ArrayContext::new(vec![Vec3::ZERO], StftSpec::speech(16_000), 16_000.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..8000).map(|_| rng.random::<f64>() - 0.5).collect();
        let y = stft(std::slice::from_ref(&x), &ctx.spec).unwrap();
        let mask = TfMap::from_fn(
            y[0].frames,
            y[0].bins,
            |t, _| if t % 2 == 0 { 0.8 } else { 0.2 },
        );
        let scan: Vec<f64> = (0..8).map(|k| k as f64 * 0.7).collect();
        for steering in [
            Steering::PrincipalComponent,
            Steering::PlaneWave { azimuth: 1.0 },
        ] {
            let bp =
                mvdr_beampattern(std::slice::from_ref(&x), &mask, &ctx, steering, &scan).unwrap();
            for row in &bp.magnitude {
                for v in row {
                    assert!((v - 1.0).abs() < 1e-9, "{v}");
                }
            }
        }
    }

    #[test]
    fn silent_input_does_not_crash() {
        let ctx = ArrayContext::new(
            crate::geometry::eval_array(),
            StftSpec::speech(16_000),
            16_000.0,
        );
        let x = vec![vec![0.0; 4000]; 4];
        let mask = TfMap::from_fn(28, 257, |_, _| 0.5);
        let bp =
            mvdr_beampattern(&x, &mask, &ctx, Steering::PrincipalComponent, &[0.0, 1.0]).unwrap();
        assert!(bp.magnitude.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn masks_out_of_range_rejected() {
        let ctx = ArrayContext::new(vec![Vec3::ZERO], StftSpec::speech(16_000), 16_000.0);
        let mask = TfMap::from_fn(28, 257, |_, _| 1.5);
        assert!(mvdr_beampattern(
            &[vec![0.0; 4000]],
            &mask,
            &ctx,
            Steering::PrincipalComponent,
            &[0.0]
        )
        .is_err());
    }

    #[test]
    fn irm_partitions_unity_for_two_sources() {
        let spec = StftSpec::speech(16_000);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..4000).map(|_| rng.random::<f64>() - 0.5).collect();
        let b: Vec<f64> = (0..4000).map(|_| rng.random::<f64>() - 0.5).collect();
        let sa = stft(&[a], &spec).unwrap();
        let sb = stft(&[b], &spec).unwrap();
        let masks = ideal_ratio_masks(&[sa, sb], 0).unwrap();
        for (x, y) in masks[0].data.iter().zip(&masks[1].data) {
            assert!((0.0..=1.0).contains(x));
            assert!((x + y - 1.0).abs() < 1e-12);
        }
    }
}
