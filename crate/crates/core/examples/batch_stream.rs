//! Batches produced on a background thread while the consumer trains,
//! with the T60 range widening each epoch.

use std::sync::Arc;

use fram_rir::mixture::{
    curriculum_step, spawn_batches, BatchGenerator, CurriculumState, SyntheticPool,
};
use fram_rir::MixtureSpec;

pub fn main() -> fram_rir::Result<()> {
    let spec = MixtureSpec {
        utterance_seconds: 1.0,
        ..Default::default()
    };
    let pool = Arc::new(SyntheticPool::new(spec.sample_rate()));
    let mut curriculum = CurriculumState::default();
    for epoch in 0..3 {
        let generator = Arc::new(BatchGenerator::new(
            spec.clone(),
            pool.clone(),
            11 + epoch,
            2,
        )?);
        let range = curriculum.t60_range();
        let rx = spawn_batches(generator, Some(curriculum), 3, 4, 2);
        let mut worst = 0.0f64;
        for batch in rx {
            for item in batch? {
                worst = worst.max(item.meta.t60);
            }
        }
        println!(
            "epoch {epoch}: T60 range [{:.2}, {:.2}] s, longest drawn {worst:.3} s",
            range.lo(),
            range.hi()
        );
        curriculum = curriculum_step(&curriculum);
    }
    Ok(())
}
