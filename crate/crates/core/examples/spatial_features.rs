//! Spectral and directional features of a reverberant single talker,
//! steered at the true direction and at a wrong one.

use fram_rir::features::{stft, ArrayContext, BeamGrid, FeatureMaps, StftSpec};
use fram_rir::mixture::{spatialize, SignalPool, SyntheticPool};
use fram_rir::{simulate_rir, Scene, SimParams, SourcePlacement};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn main() -> fram_rir::Result<()> {
    let doa = 50f64.to_radians();
    let mics = fram_rir::geometry::eval_array();
    let scene = Scene::new(
        [6.0, 5.0, 3.0],
        mics.clone(),
        vec![SourcePlacement::new(1.5, doa, 0.0)],
    );
    let rir = &simulate_rir(&SimParams::default().with_t60(0.3).with_seed(3), &scene)?[0];
    let dry = SyntheticPool::new(16_000).speech(&mut ChaCha8Rng::seed_from_u64(9), 32_000)?;
    let wet = spatialize(&dry, &[&rir.full]).remove(0);

    let spec = StftSpec::speech(16_000);
    let ctx = ArrayContext::new(mics, spec, 16_000.0);
    let grid = BeamGrid::superdirective(&ctx, BeamGrid::default_azimuths(), 1e-3)?;
    let y = stft(&wet, &spec)?;
    for (label, az) in [
        ("true DOA", doa),
        ("DOA + 90", doa + std::f64::consts::FRAC_PI_2),
    ] {
        let maps = FeatureMaps::compute(&y, &ctx, Some(az), Some(&grid))?;
        println!(
            "{label:<9} mean AF {:+.3}  mean DPR {:.3}",
            maps.af.as_ref().unwrap().mean(),
            maps.dpr.as_ref().unwrap().mean()
        );
    }
    let maps = FeatureMaps::compute(&y, &ctx, None, None)?;
    println!(
        "{} frames x {} bins, mean LPS {:.2}, {} cos IPD pairs",
        maps.lps.frames,
        maps.lps.bins,
        maps.lps.mean(),
        maps.cos_ipd.len()
    );
    Ok(())
}
