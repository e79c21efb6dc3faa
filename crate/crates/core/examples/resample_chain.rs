//! Rate factors and the magnitude response of the down-sampling chain,
//! measured by passing a single high-rate impulse through it.

use fram_rir::fram::SparseTrain;
use fram_rir::resample::{Chain, ChainConfig, RateFactors};

fn dtft(h: &[f64], f: f64, fs: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f / fs;
    let (re, im) = h.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, v)| {
        (re + v * (w * n as f64).cos(), im - v * (w * n as f64).sin())
    });
    re.hypot(im)
}

pub fn main() -> fram_rir::Result<()> {
    for fs in [8_000, 16_000, 44_100] {
        let f = RateFactors::for_rate(fs)?;
        println!(
            "{fs} Hz: high {}x ({} Hz), low {}x",
            f.high,
            f.high_rate(),
            f.low
        );
    }
    let factors = RateFactors::for_rate(16_000)?;
    let chain = Chain::new(factors, &ChainConfig::default());
    let len = 200_000;
    let h = chain.process_channel(&SparseTrain::from_impulses(len, vec![(len / 4, 1.0)]));
    let reference = dtft(&h, 1_000.0, 16_000.0);
    for f in [20.0, 50.0, 80.0, 160.0, 1_000.0, 4_000.0, 7_000.0] {
        println!(
            "{f:>6} Hz  {:+6.1} dB",
            20.0 * (dtft(&h, f, 16_000.0) / reference).log10()
        );
    }
    Ok(())
}
