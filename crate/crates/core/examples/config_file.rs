//! Describe a scene and a mixture recipe in one JSON file, validated on load.

use fram_rir::config::ConfigFile;
use fram_rir::simulate_rir;

const CONFIG: &str = r#"{
    "sim": {"t60": 0.4, "seed": 17, "num_images": 1024},
    "scene": {
        "room_dims": [7.0, 5.5, 3.0],
        "array_origin": [2.0, 2.0, 1.2],
        "mics": [[-0.05, 0, 0], [0.05, 0, 0]],
        "sources": [{"distance": 1.5, "azimuth": 1.2, "elevation": 0.0}]
    },
    "mixture": {"n_speakers": 2, "sir_db": [-3, 3], "t60": [0.2, 0.5]},
    "output": {"format": "frir", "early": true}
}"#;

pub fn main() -> fram_rir::Result<()> {
    let cfg = ConfigFile::from_json(CONFIG)?;
    let scene = cfg.scene.as_ref().expect("scene given").to_scene();
    let rirs = simulate_rir(&cfg.sim, &scene)?;
    println!(
        "{} mics, {} samples, mixture T60 range {:?}, output {:?}",
        rirs[0].full.num_channels(),
        rirs[0].full.len(),
        cfg.mixture.as_ref().map(|m| m.t60),
        cfg.output.format
    );

    let typo = CONFIG.replace("\"sir_db\"", "\"sir\"");
    match ConfigFile::from_json(&typo) {
        Err(e) => println!("misspelt key rejected: {e}"),
        Ok(_) => unreachable!("unknown keys are rejected"),
    }
    Ok(())
}
