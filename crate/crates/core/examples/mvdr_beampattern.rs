//! Oracle-mask MVDR beampattern for two sources in an anechoic room,
//! written as CSV (rows are directions, columns frequencies).

use fram_rir::features::mvdr::{ideal_ratio_masks, mvdr_beampattern, Steering};
use fram_rir::features::{stft, ArrayContext, StftSpec};
use fram_rir::io::write_beampattern_csv;
use fram_rir::mixture::spatialize;
use fram_rir::{simulate_rir, Scene, SimParams, SourcePlacement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Noise that switches on and off every 125 ms, so the sources take turns.
fn bursts(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut on = false;
    (0..48_000)
        .map(|n| {
            if n % 2_000 == 0 {
                on = rng.random_bool(0.5);
            }
            if on {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn main() -> fram_rir::Result<()> {
    let out = std::env::var_os("FRAMRIR_OUT")
        .map(Into::into)
        .unwrap_or_else(|| {
            std::env::temp_dir()
                .join("framrir-examples")
                .join("mvdr_beampattern")
        });
    std::fs::create_dir_all(&out)?;

    let (target, interferer) = (40f64.to_radians(), 120f64.to_radians());
    let mics = fram_rir::geometry::eval_array();
    let scene = Scene::new(
        [8.0, 7.0, 3.0],
        mics.clone(),
        vec![
            SourcePlacement::new(3.0, target, 0.0),
            SourcePlacement::new(3.0, interferer, 0.0),
        ],
    );
    let rirs = simulate_rir(&SimParams::default().with_t60(0.2).with_images(0), &scene)?;
    let images: Vec<Vec<Vec<f64>>> = rirs
        .iter()
        .enumerate()
        .map(|(k, r)| spatialize(&bursts(k as u64), &[&r.full]).remove(0))
        .collect();
    let mixture: Vec<Vec<f64>> = (0..mics.len())
        .map(|m| {
            images[0][m]
                .iter()
                .zip(&images[1][m])
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect();

    let spec = StftSpec::speech(16_000);
    let ctx = ArrayContext::new(mics, spec, 16_000.0);
    let per_source = images
        .iter()
        .map(|s| stft(s, &spec))
        .collect::<fram_rir::Result<Vec<_>>>()?;
    let masks = ideal_ratio_masks(&per_source, 0)?;
    let scan: Vec<f64> = (0..=36).map(|k| (5.0 * k as f64).to_radians()).collect();
    let bp = mvdr_beampattern(
        &mixture,
        &masks[0],
        &ctx,
        Steering::PrincipalComponent,
        &scan,
    )?;

    let bin = 64; // 2 kHz
    for (i, az) in scan.iter().enumerate().step_by(4) {
        println!(
            "{:>5.0} deg  {:+6.1} dB",
            az.to_degrees(),
            20.0 * bp.response(i, bin).log10()
        );
    }
    let path = out.join("beampattern.csv");
    write_beampattern_csv(std::io::BufWriter::new(std::fs::File::create(&path)?), &bp)?;
    println!("wrote {}", path.display());
    Ok(())
}
