//! Schroeder-integrated T20 of simulated filters against the requested T60.

use fram_rir::analysis::{reverberation_time, DecayRange};
use fram_rir::ism::{ism_rir, IsmConfig};
use fram_rir::{simulate_rir, Scene, SimParams, SourcePlacement};

pub fn main() -> fram_rir::Result<()> {
    let scene = Scene::new(
        [6.0, 5.0, 3.0],
        fram_rir::geometry::eval_array(),
        vec![SourcePlacement::new(1.5, 0.4, 0.0)],
    );
    println!("target   FRAM     ISM");
    for t60 in [0.2, 0.4, 0.6] {
        let seeds = 8;
        let mut fram = 0.0;
        for seed in 0..seeds {
            let rir =
                &simulate_rir(&SimParams::default().with_t60(t60).with_seed(seed), &scene)?[0];
            fram += reverberation_time(&rir.full.channels[0], 16_000.0, DecayRange::T20)
                .unwrap_or(f64::NAN);
        }
        let params = SimParams::default().with_t60(t60);
        let ism = ism_rir(&IsmConfig::from_scene(&scene, 0, &params, None))?;
        let ism_t =
            reverberation_time(&ism.channels[0], 16_000.0, DecayRange::T20).unwrap_or(f64::NAN);
        println!("{t60:.2} s  {:.3} s  {ism_t:.3} s", fram / seeds as f64);
    }
    Ok(())
}
