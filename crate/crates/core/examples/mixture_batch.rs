//! A batch of two-talker reverberant mixtures with diffuse-ish noise,
//! generated in parallel and reproducible from one seed.

use std::sync::Arc;

use fram_rir::mixture::{SignalPool, SyntheticPool};
use fram_rir::{generate_batch, io, MixtureSpec};

pub fn main() -> fram_rir::Result<()> {
    let out = std::env::var_os("FRAMRIR_OUT")
        .map(Into::into)
        .unwrap_or_else(|| {
            std::env::temp_dir()
                .join("framrir-examples")
                .join("mixture_batch")
        });
    std::fs::create_dir_all(&out)?;

    let spec = MixtureSpec {
        utterance_seconds: 2.0,
        ..Default::default()
    };
    let pool: Arc<dyn SignalPool> = Arc::new(SyntheticPool::new(spec.sample_rate()));
    let batch = generate_batch(4, &spec, None, 7, 4, pool)?;
    for item in &batch {
        let m = &item.meta;
        println!(
            "item {}: room {:.1?} m, T60 {:.2} s, SIR {:+.1} dB, SNR {:.1} dB, overlap {:.2}",
            m.index,
            m.room_dims,
            m.t60,
            m.sir_db,
            m.snr_db,
            m.overlap_ratio.unwrap_or(1.0)
        );
        io::write_wav(
            &out.join(format!("mix{}.wav", m.index)),
            m.sample_rate,
            &item.mixture,
        )?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
