//! Decay analysis of impulse responses.

/// Schroeder backward-integrated energy decay curve in dB, normalised so
/// the first sample is 0 dB. Samples past the last nonzero value are
/// `-inf`.
pub fn schroeder_edc_db(h: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut edc = vec![0.0; h.len()];
    for (n, v) in h.iter().enumerate().rev() {
        acc += v * v;
        edc[n] = acc;
    }
    let total = edc.first().copied().unwrap_or(0.0);
    if total <= 0.0 {
        return vec![f64::NEG_INFINITY; h.len()];
    }
    edc.iter().map(|e| 10.0 * (e / total).log10()).collect()
}

/// Evaluation range on the decay curve, in dB below the start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRange {
    pub start_db: f64,
    pub end_db: f64,
}

impl DecayRange {
    /// -5 to -25 dB, extrapolated to 60 dB.
    pub const T20: DecayRange = DecayRange {
        start_db: -5.0,
        end_db: -25.0,
    };
    pub const T30: DecayRange = DecayRange {
        start_db: -5.0,
        end_db: -35.0,
    };
}

/// Reverberation time from a least-squares line through the decay curve
/// between `range.start_db` and `range.end_db`. `None` if the curve never
/// reaches the end of the range or the slope is not negative.
pub fn reverberation_time(h: &[f64], sample_rate: f64, range: DecayRange) -> Option<f64> {
    let edc = schroeder_edc_db(h);
    let first = edc.iter().position(|&e| e <= range.start_db)?;
    let last = edc.iter().position(|&e| e <= range.end_db)?;
    if last <= first + 1 {
        return None;
    }
    let n = (last - first) as f64;
    let (mut st, mut se, mut stt, mut ste) = (0.0, 0.0, 0.0, 0.0);
    for (i, &e) in edc[first..last].iter().enumerate() {
        let t = (first + i) as f64 / sample_rate;
        st += t;
        se += e;
        stt += t * t;
        ste += t * e;
    }
    let slope = (n * ste - st * se) / (n * stt - st * st);
    (slope < 0.0).then(|| -60.0 / slope)
}

/// Energy of consecutive non-overlapping blocks of `block` samples starting
/// at `start`.
pub fn block_energies(h: &[f64], start: usize, block: usize) -> Vec<f64> {
    h[start.min(h.len())..]
        .chunks(block.max(1))
        .filter(|c| c.len() == block.max(1))
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect()
}
