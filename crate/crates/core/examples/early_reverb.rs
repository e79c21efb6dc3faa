//! Compare the full filter with its early part (direct path plus the first
//! 50 ms) through the clarity index C50.

use fram_rir::{simulate_rir, Scene, SimParams, SourcePlacement};

fn energy(h: &[f64]) -> f64 {
    h.iter().map(|v| v * v).sum()
}

pub fn main() -> fram_rir::Result<()> {
    let scene = Scene::new(
        [7.0, 5.0, 3.0],
        fram_rir::geometry::eval_array(),
        vec![SourcePlacement::new(2.0, 1.0, 0.0)],
    );
    for t60 in [0.2, 0.4, 0.8] {
        let rir = &simulate_rir(&SimParams::default().with_t60(t60).with_seed(5), &scene)?[0];
        let (full, early) = (&rir.full.channels[0], &rir.early.channels[0]);
        let late = energy(full) - energy(early);
        println!(
            "T60 {t60:.1} s: early part holds {:.0}% of the energy, C50 {:+.1} dB",
            100.0 * energy(early) / energy(full),
            10.0 * (energy(early) / late.max(1e-30)).log10()
        );
    }
    Ok(())
}
