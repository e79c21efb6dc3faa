//! Simulate filters for two talkers in a shoebox room and save them as WAV.
//!
//! Output goes to `$FRAMRIR_OUT` or a folder under the system temp dir.

use fram_rir::{io, simulate_rir, Scene, SimParams, SourcePlacement};

pub fn main() -> fram_rir::Result<()> {
    let out = std::env::var_os("FRAMRIR_OUT")
        .map(Into::into)
        .unwrap_or_else(|| {
            std::env::temp_dir()
                .join("framrir-examples")
                .join("simulate_rir")
        });
    std::fs::create_dir_all(&out)?;

    let scene = Scene::new(
        [6.0, 4.5, 2.8],
        fram_rir::geometry::eval_array(),
        vec![
            SourcePlacement::new(1.2, 30f64.to_radians(), 0.0),
            SourcePlacement::new(2.5, 140f64.to_radians(), 0.1),
        ],
    );
    let params = SimParams::default().with_t60(0.45).with_seed(2024);
    for (k, rir) in simulate_rir(&params, &scene)?.iter().enumerate() {
        let meta = rir
            .full
            .meta
            .as_ref()
            .expect("simulated filters carry metadata");
        println!(
            "source {k}: {} ch x {} samples, direct path at {:?}, r = {:.4}",
            rir.full.num_channels(),
            rir.full.len(),
            rir.full.direct_path_sample,
            meta.reflection_coefficient
        );
        io::write_wav_f64(
            &out.join(format!("src{k}.wav")),
            rir.full.sample_rate,
            &rir.full.channels,
        )?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
