//! Flat `f32` arrays plus JSON metadata, the shape a foreign-language
//! loader wants. Requests arrive as JSON text and go through the same
//! validation as configuration files, so errors match the command line.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::SceneConfig;
use crate::error::{Error, Result};
use crate::fram::Simulator;
use crate::mixture::{
    BatchGenerator, BatchItem, CurriculumState, ItemMeta, MixtureSpec, SignalPool, SyntheticPool,
};
use crate::params::SimParams;

/// Stable numeric codes for [`Error`] variants.
pub fn error_code(e: &Error) -> u32 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::InvalidConfiguration(_) => 2,
        Error::Format(_) => 3,
        Error::Io(_) => 4,
        Error::Wav(_) => 5,
        Error::Json(_) => 6,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    #[serde(default)]
    pub params: SimParams,
    pub scene: SceneConfig,
}

/// Filters of every source, `[sources, 2 (full, early), channels, samples]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatRirs {
    pub shape: [usize; 4],
    pub data: Vec<f32>,
    pub metadata: Value,
}

pub fn simulate_flat(request_json: &str) -> Result<FlatRirs> {
    let req: SimulateRequest = serde_json::from_str(request_json)?;
    let scene = req.scene.to_scene();
    let rirs = Simulator::new(req.params.clone())?.simulate(&scene)?;
    let channels = scene.mics.len();
    let samples = rirs.first().map_or(0, |r| r.full.len());
    let mut data = Vec::with_capacity(rirs.len() * 2 * channels * samples);
    let mut sources = Vec::new();
    for (k, r) in rirs.iter().enumerate() {
        for f in [&r.full, &r.early] {
            data.extend(f.channels.iter().flatten().map(|v| *v as f32));
        }
        let p = scene.sources[k];
        sources.push(json!({
            "distance": p.distance,
            "azimuth": p.azimuth,
            "elevation": p.elevation,
            "direct_path_sample": r.full.direct_path_sample,
            "reflection_coefficient": r.full.meta.as_ref().map(|m| m.reflection_coefficient),
        }));
    }
    Ok(FlatRirs {
        shape: [rirs.len(), 2, channels, samples],
        data,
        metadata: json!({
            "sample_rate": req.params.sample_rate,
            "t60": req.params.t60,
            "seed": req.params.seed,
            "sources": sources,
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchRequest {
    pub spec: MixtureSpec,
    pub curriculum: Option<CurriculumState>,
}

/// A batch padded with zeros to its longest item.
///
/// `mixture` is `[batch, channels, samples]`; `targets` and
/// `early_targets` are `[batch, speakers, channels, samples]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatBatch {
    pub batch_size: usize,
    pub speakers: usize,
    pub channels: usize,
    pub samples: usize,
    /// Unpadded length of each item.
    pub lengths: Vec<usize>,
    pub mixture: Vec<f32>,
    pub targets: Vec<f32>,
    pub early_targets: Vec<f32>,
    pub metadata: Vec<ItemMeta>,
}

fn push_padded(out: &mut Vec<f32>, chans: &[Vec<f32>], samples: usize) {
    for c in chans {
        out.extend_from_slice(c);
        out.resize(out.len() + samples - c.len(), 0.0);
    }
}

pub fn flatten_batch(items: &[BatchItem], speakers: usize, channels: usize) -> FlatBatch {
    let samples = items.iter().map(|i| i.mixture[0].len()).max().unwrap_or(0);
    let mut b = FlatBatch {
        batch_size: items.len(),
        speakers,
        channels,
        samples,
        lengths: items.iter().map(|i| i.mixture[0].len()).collect(),
        mixture: Vec::with_capacity(items.len() * channels * samples),
        targets: Vec::with_capacity(items.len() * speakers * channels * samples),
        early_targets: Vec::with_capacity(items.len() * speakers * channels * samples),
        metadata: items.iter().map(|i| i.meta.clone()).collect(),
    };
    for item in items {
        push_padded(&mut b.mixture, &item.mixture, samples);
        for (t, e) in item.targets.iter().zip(&item.early_targets) {
            push_padded(&mut b.targets, t, samples);
            push_padded(&mut b.early_targets, e, samples);
        }
    }
    b
}

/// Generates `batch_size` items with synthetic dry signals unless `pool`
/// is given. `batch_size == 0` returns an empty batch.
pub fn generate_batch_flat(
    request_json: &str,
    batch_size: usize,
    seed: u64,
    workers: usize,
    pool: Option<Arc<dyn SignalPool>>,
) -> Result<FlatBatch> {
    let req: BatchRequest = serde_json::from_str(request_json)?;
    let pool = pool.unwrap_or_else(|| Arc::new(SyntheticPool::new(req.spec.sample_rate())));
    let generator = BatchGenerator::new(req.spec.clone(), pool, seed, workers)?;
    let items = generator.batch(req.curriculum.as_ref(), 0, batch_size)?;
    Ok(flatten_batch(
        &items,
        req.spec.n_speakers,
        req.spec.mics.len(),
    ))
}
