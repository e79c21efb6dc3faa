//! Spectral and directional features for checking simulated filters.

pub mod directional;
pub mod mvdr;
pub mod stft;

pub use directional::{
    all_pairs, angle_feature, cos_ipd, directional_power_ratio, directional_power_ratios, ipd,
    log_power, tpd, ArrayContext, BeamGrid, FeatureMaps, TfMap,
};
pub use mvdr::{ideal_ratio_masks, mvdr_beampattern, Beampattern, Steering};
pub use stft::{stft, Spectrogram, Stft, StftSpec, Window};
