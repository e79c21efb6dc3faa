//! Store full and early filters in one binary container and read them back.

use fram_rir::io::{load_frir, save_frir, FrirRecord};
use fram_rir::{simulate_rir, Scene, SimParams, SourcePlacement};

pub fn main() -> fram_rir::Result<()> {
    let out = std::env::var_os("FRAMRIR_OUT")
        .map(Into::into)
        .unwrap_or_else(|| {
            std::env::temp_dir()
                .join("framrir-examples")
                .join("frir_container")
        });
    std::fs::create_dir_all(&out)?;

    let scene = Scene::new(
        [5.0, 5.0, 3.0],
        fram_rir::geometry::eval_array(),
        vec![
            SourcePlacement::new(1.0, 0.0, 0.0),
            SourcePlacement::new(2.0, 2.0, 0.0),
        ],
    );
    let seed = 99;
    let rirs = simulate_rir(&SimParams::default().with_t60(0.3).with_seed(seed), &scene)?;
    let records: Vec<FrirRecord> = rirs
        .iter()
        .flat_map(|r| {
            [
                FrirRecord::from_filter(&r.full, seed),
                FrirRecord::from_filter(&r.early, seed),
            ]
        })
        .collect();
    let path = out.join("filters.frir");
    save_frir(&path, &records)?;

    let back = load_frir(&path)?;
    println!(
        "{} records, {} bytes on disk",
        back.len(),
        std::fs::metadata(&path)?.len()
    );
    for r in &back {
        println!(
            "  kind {} at {} Hz: {} x {}",
            r.kind,
            r.sample_rate,
            r.channels.len(),
            r.channels[0].len()
        );
    }
    assert_eq!(back, records);
    Ok(())
}
