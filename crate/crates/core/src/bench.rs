//! Wall-clock benchmarks for filter simulation and batch generation.
//!
//! Warm-up runs are discarded and the median of the timed runs is reported.
//! Timings cover computation only; nothing is written to disk.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};
use crate::fram::Simulator;
use crate::geometry::{eval_array, Scene, SourcePlacement};
use crate::ism::{ism_rir, IsmConfig};
use crate::mixture::{BatchGenerator, MixtureSpec, SignalPool};
use crate::params::SimParams;

/// Bumped whenever a field of [`BenchReport`] changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub logical_cores: usize,
}

impl HostInfo {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub method: String,
    pub threads: usize,
    /// Filters produced per timed run (rooms x sources).
    pub n_rirs: usize,
    /// Median wall clock of one run.
    pub total_seconds: f64,
    pub seconds_per_rir: f64,
    /// Set for batch benchmarks only.
    pub batch_size: Option<usize>,
    pub seconds_per_batch: Option<f64>,
    /// Every timed run, in order.
    pub runs: Vec<f64>,
    pub host: HostInfo,
}

impl BenchReport {
    pub fn coefficient_of_variation(&self) -> f64 {
        coefficient_of_variation(&self.runs)
    }
}

/// Several reports under one schema version, as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSuite {
    pub schema_version: u32,
    pub entries: Vec<BenchReport>,
}

impl BenchSuite {
    pub fn new(entries: Vec<BenchReport>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            entries,
        }
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fram,
    /// Image-source reference; `None` enumerates every image that arrives
    /// within T60.
    Ism {
        max_order: Option<usize>,
    },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Fram => "fram".into(),
            Method::Ism { max_order: None } => "ism".into(),
            Method::Ism { max_order: Some(n) } => format!("ism_order{n}"),
        }
    }
}

/// Smallest image-source order whose `(2N+1)^3` images reach `images`.
pub fn ism_order_for_images(images: usize) -> usize {
    let mut n = 0usize;
    while (2 * n + 1).pow(3) < images {
        n += 1;
    }
    n
}

/// Rooms with several sources each, all sharing one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirWorkload {
    pub scenes: Vec<Scene>,
    pub params: SimParams,
}

impl RirWorkload {
    /// `rooms` random rooms with `sources` sources each on the 4-mic array.
    pub fn random(rooms: usize, sources: usize, params: SimParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenes = (0..rooms)
            .map(|_| {
                let dims: [f64; 3] = [
                    rng.random_range(3.0..10.0),
                    rng.random_range(3.0..10.0),
                    rng.random_range(2.5..4.0),
                ];
                let reach = 0.45 * dims[0].min(dims[1]).min(dims[2]);
                let srcs = (0..sources)
                    .map(|_| {
                        SourcePlacement::new(
                            rng.random_range(0.3..reach.max(0.31)),
                            rng.random_range(0.0..std::f64::consts::TAU),
                            rng.random_range(-0.3..0.3),
                        )
                    })
                    .collect();
                Scene::new(dims, eval_array(), srcs)
            })
            .collect();
        Self { scenes, params }
    }

    pub fn n_rirs(&self) -> usize {
        self.scenes.iter().map(|s| s.sources.len()).sum()
    }

    /// Simulates every filter once; returns the number produced.
    pub fn run(&self, method: Method) -> Result<usize> {
        let counts = self
            .scenes
            .par_iter()
            .map(|scene| -> Result<usize> {
                match method {
                    Method::Fram => Ok(Simulator::new(self.params.clone())?.simulate(scene)?.len()),
                    Method::Ism { max_order } => {
                        for k in 0..scene.sources.len() {
                            ism_rir(&IsmConfig::from_scene(scene, k, &self.params, max_order))?;
                        }
                        Ok(scene.sources.len())
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(counts.iter().sum())
    }
}

fn worker_pool(threads: usize) -> Result<rayon::ThreadPool> {
    ensure(threads >= 1, || "need at least one thread".into())?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))
}

fn time_runs(
    warmup: usize,
    repetitions: usize,
    mut f: impl FnMut() -> Result<()>,
) -> Result<Vec<f64>> {
    ensure(repetitions >= 1, || {
        "need at least one timed repetition".into()
    })?;
    for _ in 0..warmup {
        f()?;
    }
    (0..repetitions)
        .map(|_| {
            let t = Instant::now();
            f()?;
            Ok(t.elapsed().as_secs_f64().max(1e-9))
        })
        .collect()
}

/// Times simulating the whole workload on `threads` threads.
pub fn bench_rir(
    workload: &RirWorkload,
    method: Method,
    threads: usize,
    warmup: usize,
    repetitions: usize,
) -> Result<BenchReport> {
    let pool = worker_pool(threads)?;
    let n = workload.n_rirs();
    let runs = pool.install(|| {
        time_runs(warmup, repetitions, || {
            let produced = workload.run(method)?;
            ensure(produced == n, || {
                format!("expected {n} filters, produced {produced}")
            })
        })
    })?;
    let total = median(&runs);
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        method: method.label(),
        threads,
        n_rirs: n,
        total_seconds: total,
        seconds_per_rir: total / n.max(1) as f64,
        batch_size: None,
        seconds_per_batch: None,
        runs,
        host: HostInfo::current(),
    })
}

/// Times generating one batch of mixtures with `workers` workers.
pub fn bench_batch(
    spec: &MixtureSpec,
    pool: Arc<dyn SignalPool>,
    workers: usize,
    batch_size: usize,
    warmup: usize,
    repetitions: usize,
) -> Result<BenchReport> {
    let generator = BatchGenerator::new(spec.clone(), pool, 0, workers)?;
    let mut next = 0u64;
    let runs = time_runs(warmup, repetitions, || {
        let items = generator.batch(None, next, batch_size)?;
        next += batch_size as u64;
        ensure(items.len() == batch_size, || "short batch".into())
    })?;
    let total = median(&runs);
    let n = batch_size * (spec.n_speakers + 1);
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        method: "fram_batch".into(),
        threads: workers,
        n_rirs: n,
        total_seconds: total,
        seconds_per_rir: total / n.max(1) as f64,
        batch_size: Some(batch_size),
        seconds_per_batch: Some(total),
        runs,
        host: HostInfo::current(),
    })
}

/// [`bench_batch`] for each worker count in turn.
pub fn bench_batch_scaling(
    spec: &MixtureSpec,
    pool: Arc<dyn SignalPool>,
    workers: &[usize],
    batch_size: usize,
    warmup: usize,
    repetitions: usize,
) -> Result<Vec<BenchReport>> {
    workers
        .iter()
        .map(|&w| bench_batch(spec, pool.clone(), w, batch_size, warmup, repetitions))
        .collect()
}
