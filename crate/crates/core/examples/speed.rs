//! Single-thread timing of FRAM against the image-source reference.
//!
//! Run with `cargo run --release --example speed`.

use fram_rir::bench::{bench_rir, ism_order_for_images, Method, RirWorkload};
use fram_rir::SimParams;

pub fn main() -> fram_rir::Result<()> {
    let params = SimParams::default().with_t60(0.5);
    let workload = RirWorkload::random(1, 3, params.clone(), 42);
    let matched = ism_order_for_images(params.num_images);
    for method in [
        Method::Fram,
        Method::Ism {
            max_order: Some(matched),
        },
        Method::Ism { max_order: None },
    ] {
        let r = bench_rir(&workload, method, 1, 1, 5)?;
        println!(
            "{:<12} {:>8.1} ms per call ({} filters, cv {:.2})",
            r.method,
            r.total_seconds * 1e3,
            r.n_rirs,
            r.coefficient_of_variation()
        );
    }
    Ok(())
}
