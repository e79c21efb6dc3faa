//! The image-source reference next to FRAM: identical direct paths, and
//! the cost of enumerating every mirror image.

use std::time::Instant;

use fram_rir::ism::{enumerate_images, ism_rir, IsmConfig};
use fram_rir::{simulate_rir, Scene, SimParams, SourcePlacement};

pub fn main() -> fram_rir::Result<()> {
    let scene = Scene::new(
        [5.0, 4.0, 3.0],
        fram_rir::geometry::eval_array(),
        vec![SourcePlacement::new(1.5, 0.7, 0.0)],
    );

    let direct = SimParams::default().with_t60(0.3).with_images(0);
    let fram = simulate_rir(&direct, &scene)?;
    let ism = ism_rir(&IsmConfig::from_scene(&scene, 0, &direct, Some(0)))?;
    println!(
        "direct path only, FRAM == ISM: {}",
        fram[0].full.channels == ism.channels
    );

    let params = SimParams::default().with_t60(0.3);
    let cfg = IsmConfig::from_scene(&scene, 0, &params, None);
    let t = Instant::now();
    let full = ism_rir(&cfg)?;
    println!(
        "ISM order {}: {} images, {:.1} ms, {} samples",
        cfg.order(),
        enumerate_images(&cfg)?.len(),
        t.elapsed().as_secs_f64() * 1e3,
        full.len()
    );
    let t = Instant::now();
    simulate_rir(&params, &scene)?;
    println!(
        "FRAM {} images: {:.1} ms",
        params.num_images,
        t.elapsed().as_secs_f64() * 1e3
    );
    Ok(())
}
