//! Spectral and directional features: log power, inter-channel phase
//! differences, angle features and directional power ratios.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::features::stft::{Spectrogram, StftSpec};
use crate::geometry::Vec3;

/// Real-valued time-frequency map, `frames x bins`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TfMap {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl TfMap {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self {
            frames,
            bins,
            data: vec![0.0; frames * bins],
        }
    }

    pub fn from_fn(frames: usize, bins: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(frames * bins);
        for t in 0..frames {
            for b in 0..bins {
                data.push(f(t, b));
            }
        }
        Self { frames, bins, data }
    }

    #[inline]
    pub fn at(&self, t: usize, f: usize) -> f64 {
        self.data[t * self.bins + f]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Mean over bins where `keep(t, f)` holds.
    pub fn masked_mean(&self, mut keep: impl FnMut(usize, usize) -> bool) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for t in 0..self.frames {
            for f in 0..self.bins {
                if keep(t, f) {
                    sum += self.at(t, f);
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

fn check_same_shape(y: &[Spectrogram]) -> Result<(usize, usize)> {
    let first = y.first().ok_or_else(|| invalid("no channels"))?;
    if y.iter()
        .any(|s| s.frames != first.frames || s.bins != first.bins)
    {
        return Err(invalid("channel spectrograms differ in shape"));
    }
    Ok((first.frames, first.bins))
}

fn wrap_phase(x: f64) -> f64 {
    let w = x.sin().atan2(x.cos());
    if w <= -PI {
        PI
    } else {
        w
    }
}

/// `ln(|Y|^2 + eps)` of one channel.
pub fn log_power(y: &Spectrogram) -> TfMap {
    TfMap::from_fn(y.frames, y.bins, |t, f| {
        (y.at(t, f).norm_sqr() + 1e-10).ln()
    })
}

/// Phase of channel `m1` minus phase of channel `m2`, wrapped to (-pi, pi].
pub fn ipd(y: &[Spectrogram], pair: (usize, usize)) -> Result<TfMap> {
    let (frames, bins) = check_same_shape(y)?;
    let (a, b) = (
        y.get(pair.0)
            .ok_or_else(|| invalid(format!("no channel {}", pair.0)))?,
        y.get(pair.1)
            .ok_or_else(|| invalid(format!("no channel {}", pair.1)))?,
    );
    Ok(TfMap::from_fn(frames, bins, |t, f| {
        let cross = a.at(t, f) * b.at(t, f).conj();
        let p = cross.im.atan2(cross.re);
        if p <= -PI {
            PI
        } else {
            p
        }
    }))
}

pub fn cos_ipd(y: &[Spectrogram], pair: (usize, usize)) -> Result<TfMap> {
    let mut m = ipd(y, pair)?;
    m.data.iter_mut().for_each(|v| *v = v.cos());
    Ok(m)
}

/// Far-field delay of channel `p2` relative to `p1` for a source at
/// `azimuth` in the horizontal plane, in samples.
pub fn pair_delay_samples(
    mics: &[Vec3],
    pair: (usize, usize),
    azimuth: f64,
    sample_rate: f64,
    c: f64,
) -> f64 {
    let u = Vec3::from_angles(azimuth, 0.0);
    u.dot(&(mics[pair.0] - mics[pair.1])) / c * sample_rate
}

/// Target phase difference per bin, `2 pi f / (2 (F - 1)) * tau`, with
/// bins indexed from 0.
pub fn tpd(
    azimuth: f64,
    pair: (usize, usize),
    mics: &[Vec3],
    spec: &StftSpec,
    sample_rate: f64,
    c: f64,
) -> Vec<f64> {
    let tau = pair_delay_samples(mics, pair, azimuth, sample_rate, c);
    let bins = spec.bins();
    let denom = 2.0 * (bins as f64 - 1.0);
    (0..bins)
        .map(|f| 2.0 * PI * f as f64 / denom * tau)
        .collect()
}

/// Every unordered microphone pair.
pub fn all_pairs(num_mics: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..num_mics {
        for b in a + 1..num_mics {
            out.push((a, b));
        }
    }
    out
}

/// Array description shared by the feature extractors.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayContext {
    pub mics: Vec<Vec3>,
    pub spec: StftSpec,
    pub sample_rate: f64,
    pub sound_speed: f64,
}

impl ArrayContext {
    pub fn new(mics: Vec<Vec3>, spec: StftSpec, sample_rate: f64) -> Self {
        Self {
            mics,
            spec,
            sample_rate,
            sound_speed: crate::params::SPEED_OF_SOUND,
        }
    }

    pub fn bin_hz(&self, f: usize) -> f64 {
        self.spec.bin_hz(f, self.sample_rate)
    }
}

/// `sum over pairs of cos(TPD - IPD)`.
pub fn angle_feature(
    y: &[Spectrogram],
    azimuth: f64,
    ctx: &ArrayContext,
    pairs: &[(usize, usize)],
) -> Result<TfMap> {
    let (frames, bins) = check_same_shape(y)?;
    if pairs.is_empty() {
        return Err(invalid("angle feature needs at least one microphone pair"));
    }
    if bins != ctx.spec.bins() {
        return Err(invalid("spectrogram does not match the STFT spec"));
    }
    let mut out = TfMap::zeros(frames, bins);
    for &pair in pairs {
        let target = tpd(
            azimuth,
            pair,
            &ctx.mics,
            &ctx.spec,
            ctx.sample_rate,
            ctx.sound_speed,
        );
        let observed = ipd(y, pair)?;
        for t in 0..frames {
            for (f, phase) in target.iter().enumerate() {
                out.data[t * bins + f] += wrap_phase(phase - observed.at(t, f)).cos();
            }
        }
    }
    Ok(out)
}

/// Free-field plane-wave steering vector for a horizontal direction.
pub fn steering_vector(mics: &[Vec3], azimuth: f64, freq_hz: f64, c: f64) -> DVector<Complex64> {
    let u = Vec3::from_angles(azimuth, 0.0);
    let w = 2.0 * PI * freq_hz / c;
    DVector::from_iterator(
        mics.len(),
        mics.iter()
            .map(|m| Complex64::from_polar(1.0, w * u.dot(m))),
    )
}

/// Diffuse-field coherence `sin(k d) / (k d)` between all mic pairs.
pub fn diffuse_coherence(mics: &[Vec3], freq_hz: f64, c: f64) -> DMatrix<Complex64> {
    let k = 2.0 * PI * freq_hz / c;
    DMatrix::from_fn(mics.len(), mics.len(), |i, j| {
        let x = k * mics[i].distance(&mics[j]);
        let v = if x == 0.0 { 1.0 } else { x.sin() / x };
        Complex64::new(v, 0.0)
    })
}

/// `R^-1 d / (d^H R^-1 d)`.
pub fn mvdr_weights(
    cov: &DMatrix<Complex64>,
    steer: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let solved = cov
        .clone()
        .lu()
        .solve(steer)
        .ok_or_else(|| invalid("singular covariance"))?;
    let denom = steer.dotc(&solved);
    if denom.norm() == 0.0 || !denom.re.is_finite() {
        return Err(invalid("degenerate beamformer normalisation"));
    }
    Ok(solved / denom)
}

/// Fixed super-directive beams on a grid of azimuths.
#[derive(Debug, Clone)]
pub struct BeamGrid {
    pub azimuths: Vec<f64>,
    /// `weights[v][f]`, one M-vector per beam and bin.
    pub weights: Vec<Vec<DVector<Complex64>>>,
}

impl BeamGrid {
    /// 36 beams at 10 degree steps.
    pub fn default_azimuths() -> Vec<f64> {
        (0..36).map(|k| (k as f64 * 10.0).to_radians()).collect()
    }

    pub fn superdirective(ctx: &ArrayContext, azimuths: Vec<f64>, loading: f64) -> Result<Self> {
        let bins = ctx.spec.bins();
        let mut weights = Vec::with_capacity(azimuths.len());
        let coherence: Vec<DMatrix<Complex64>> = (0..bins)
            .map(|f| {
                let mut g = diffuse_coherence(&ctx.mics, ctx.bin_hz(f), ctx.sound_speed);
                for i in 0..ctx.mics.len() {
                    g[(i, i)] += loading;
                }
                g
            })
            .collect();
        for &az in &azimuths {
            let per_bin = (0..bins)
                .map(|f| {
                    let d = steering_vector(&ctx.mics, az, ctx.bin_hz(f), ctx.sound_speed);
                    mvdr_weights(&coherence[f], &d)
                })
                .collect::<Result<Vec<_>>>()?;
            weights.push(per_bin);
        }
        Ok(Self { azimuths, weights })
    }

    pub fn len(&self) -> usize {
        self.azimuths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.azimuths.is_empty()
    }

    /// Beam closest to `azimuth`.
    pub fn nearest(&self, azimuth: f64) -> usize {
        let dist = |a: f64| wrap_phase(a - azimuth).abs();
        (0..self.len())
            .min_by(|&a, &b| dist(self.azimuths[a]).total_cmp(&dist(self.azimuths[b])))
            .unwrap_or(0)
    }

    /// `|w_v^H Y(t, f)|^2` for every beam.
    pub fn beam_powers(&self, y: &[Spectrogram]) -> Result<Vec<TfMap>> {
        let (frames, bins) = check_same_shape(y)?;
        if self.weights.first().map_or(0, Vec::len) != bins {
            return Err(invalid("beam grid does not match the spectrogram"));
        }
        Ok(self
            .weights
            .iter()
            .map(|w| {
                TfMap::from_fn(frames, bins, |t, f| {
                    let wf = &w[f];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (m, ch) in y.iter().enumerate() {
                        acc += wf[m].conj() * ch.at(t, f);
                    }
                    acc.norm_sqr()
                })
            })
            .collect())
    }
}

/// Power of beam `target` over the summed power of all beams. Bins where
/// every beam is silent get `1 / V`.
pub fn directional_power_ratio(y: &[Spectrogram], target: usize, grid: &BeamGrid) -> Result<TfMap> {
    if target >= grid.len() {
        return Err(invalid(format!(
            "beam index {target} out of range ({} beams)",
            grid.len()
        )));
    }
    let powers = grid.beam_powers(y)?;
    Ok(power_ratio(&powers, target))
}

pub(crate) fn power_ratio(powers: &[TfMap], target: usize) -> TfMap {
    let (frames, bins) = (powers[0].frames, powers[0].bins);
    let v = powers.len() as f64;
    TfMap::from_fn(frames, bins, |t, f| {
        let total: f64 = powers.iter().map(|p| p.at(t, f)).sum();
        if total > 0.0 {
            powers[target].at(t, f) / total
        } else {
            1.0 / v
        }
    })
}

/// DPR maps for every beam of the grid.
pub fn directional_power_ratios(y: &[Spectrogram], grid: &BeamGrid) -> Result<Vec<TfMap>> {
    let powers = grid.beam_powers(y)?;
    Ok((0..powers.len()).map(|v| power_ratio(&powers, v)).collect())
}

/// The spectral and spatial features of one multi-channel signal.
#[derive(Debug, Clone, Serialize)]
pub struct FeatureMaps {
    pub lps: TfMap,
    pub cos_ipd: Vec<((usize, usize), TfMap)>,
    pub af: Option<TfMap>,
    pub dpr: Option<TfMap>,
}

impl FeatureMaps {
    /// LPS of the reference channel and cosIPD of every pair; AF and DPR
    /// when a steering azimuth is given.
    pub fn compute(
        y: &[Spectrogram],
        ctx: &ArrayContext,
        azimuth: Option<f64>,
        grid: Option<&BeamGrid>,
    ) -> Result<Self> {
        check_same_shape(y)?;
        let pairs = all_pairs(y.len());
        let cos_ipd = pairs
            .iter()
            .map(|&p| cos_ipd(y, p).map(|m| (p, m)))
            .collect::<Result<Vec<_>>>()?;
        let af = match azimuth {
            Some(az) if !pairs.is_empty() => Some(angle_feature(y, az, ctx, &pairs)?),
            _ => None,
        };
        let dpr = match (azimuth, grid) {
            (Some(az), Some(g)) => Some(directional_power_ratio(y, g.nearest(az), g)?),
            _ => None,
        };
        Ok(Self {
            lps: log_power(&y[0]),
            cos_ipd,
            af,
            dpr,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::stft::{stft, StftSpec};
    use crate::geometry::{eval_array, linear_array};
    use rand::{Rng, SeedableRng};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    }

    #[test]
    fn ipd_of_identical_channels_is_zero() {
        let x = noise(4000, 1);
        let y = stft(&[x.clone(), x], &StftSpec::speech(16_000)).unwrap();
        let m = ipd(&y, (0, 1)).unwrap();
        assert!(m.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ipd_swap_negates() {
        let y = stft(&[noise(4000, 1), noise(4000, 2)], &StftSpec::speech(16_000)).unwrap();
        let a = ipd(&y, (0, 1)).unwrap();
        let b = ipd(&y, (1, 0)).unwrap();
        for (x, z) in a.data.iter().zip(&b.data) {
            assert!(*x > -PI && *x <= PI);
            if x.abs() < PI - 1e-9 {
                assert!((x + z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ipd_of_integer_delay() {
        // channel 1 lags channel 0 by 3 samples: phase(0) - phase(1) = +w d
        let d = 3usize;
        let x = noise(8000, 3);
        let mut lagged = vec![0.0; d];
        lagged.extend_from_slice(&x[..x.len() - d]);
        let spec = StftSpec::speech(16_000);
        let y = stft(&[x, lagged], &spec).unwrap();
        let m = ipd(&y, (0, 1)).unwrap();
        let mut worst = 0.0f64;
        for f in 1..spec.bins() {
            let expect = 2.0 * PI * f as f64 * d as f64 / spec.frame as f64;
            for t in 0..m.frames {
                if y[0].at(t, f).norm() > 1.0 {
                    worst = worst.max(wrap_phase(m.at(t, f) - expect).abs());
                }
            }
        }
        assert!(worst < 0.35, "{worst}");
    }

    #[test]
    fn tpd_examples() {
        let spec = StftSpec::speech(16_000);
        let mics = linear_array(&[0.08]);
        let broadside = tpd(PI / 2.0, (0, 1), &mics, &spec, 16_000.0, 343.0);
        assert!(broadside.iter().all(|v| v.abs() < 1e-12));
        let endfire = tpd(0.0, (1, 0), &mics, &spec, 16_000.0, 343.0);
        assert_eq!(endfire[0], 0.0);
        let tau = 0.08 / 343.0 * 16_000.0;
        assert!((endfire[spec.bins() - 1] - PI * tau).abs() < 1e-12);
        // linear in bin index
        for f in 1..spec.bins() {
            assert!((endfire[f] - endfire[1] * f as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_spacing_pair_contributes_one() {
        let x = noise(4000, 9);
        let mics = vec![Vec3::ZERO, Vec3::ZERO];
        let ctx = ArrayContext::new(mics, StftSpec::speech(16_000), 16_000.0);
        let y = stft(&[x.clone(), x], &ctx.spec).unwrap();
        let af = angle_feature(&y, 0.7, &ctx, &[(0, 1)]).unwrap();
        assert!(af.data.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_beam_dpr_is_one() {
        let ctx = ArrayContext::new(eval_array(), StftSpec::speech(16_000), 16_000.0);
        let grid = BeamGrid::superdirective(&ctx, vec![0.3], 1e-3).unwrap();
        let sig: Vec<Vec<f64>> = (0..4).map(|s| noise(3000, s)).collect();
        let y = stft(&sig, &ctx.spec).unwrap();
        let dpr = directional_power_ratio(&y, 0, &grid).unwrap();
        assert!(dpr.data.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn silent_bins_get_uniform_dpr() {
        let ctx = ArrayContext::new(eval_array(), StftSpec::speech(16_000), 16_000.0);
        let grid = BeamGrid::superdirective(&ctx, BeamGrid::default_azimuths(), 1e-3).unwrap();
        let y = stft(&vec![vec![0.0; 1000]; 4], &ctx.spec).unwrap();
        let dpr = directional_power_ratio(&y, 5, &grid).unwrap();
        assert!(dpr.data.iter().all(|v| (v - 1.0 / 36.0).abs() < 1e-15));
    }

    #[test]
    fn superdirective_is_distortionless() {
        let ctx = ArrayContext::new(eval_array(), StftSpec::speech(16_000), 16_000.0);
        let grid = BeamGrid::superdirective(&ctx, BeamGrid::default_azimuths(), 1e-3).unwrap();
        for (v, az) in grid.azimuths.iter().enumerate() {
            for f in [1, 50, 200] {
                let d = steering_vector(&ctx.mics, *az, ctx.bin_hz(f), 343.0);
                let resp = grid.weights[v][f].dotc(&d);
                assert!((resp - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            }
        }
    }
}
