//! The flat-array interface meant for foreign-language loaders: JSON in,
//! contiguous `f32` buffers plus shapes and metadata out.

use fram_rir::binding::{error_code, generate_batch_flat, simulate_flat};

pub fn main() -> fram_rir::Result<()> {
    let request = r#"{
        "params": {"t60": 0.35, "seed": 12},
        "scene": {"room_dims": [6, 4, 3],
                  "sources": [{"distance": 1.2, "azimuth": 0.5, "elevation": 0.0}]}
    }"#;
    let rirs = simulate_flat(request)?;
    println!(
        "filters: shape {:?}, {} floats",
        rirs.shape,
        rirs.data.len()
    );
    println!("metadata: {}", rirs.metadata);

    let batch = generate_batch_flat(r#"{"spec": {"utterance_seconds": 1.0}}"#, 3, 5, 3, None)?;
    println!(
        "batch: mixture [{}, {}, {}], targets [{}, {}, {}, {}], lengths {:?}",
        batch.batch_size,
        batch.channels,
        batch.samples,
        batch.batch_size,
        batch.speakers,
        batch.channels,
        batch.samples,
        batch.lengths
    );

    let err = simulate_flat(
        r#"{"params": {"t60": -1}, "scene": {"room_dims": [6, 4, 3], "sources": []}}"#,
    )
    .unwrap_err();
    println!("rejected request: code {} ({err})", error_code(&err));
    Ok(())
}
