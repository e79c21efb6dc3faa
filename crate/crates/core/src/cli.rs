//! Command-line front end: `simulate`, `mix`, `features` and `bench`.
//!
//! Exit codes: 0 on success, 2 for usage errors, 1 for runtime errors.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::json;

use crate::bench::{
    bench_batch_scaling, bench_rir, ism_order_for_images, BenchSuite, Method, RirWorkload,
};
use crate::config::{ConfigFile, OutputFormat};
use crate::error::{Error, Result};
use crate::features::{
    angle_feature, cos_ipd, directional_power_ratio, ideal_ratio_masks, log_power,
    mvdr_beampattern, stft, ArrayContext, BeamGrid, Steering, StftSpec, TfMap,
};
use crate::fram::Simulator;
use crate::geometry::{linear_array, Scene, SourcePlacement};
use crate::io::{self, kind, FrirRecord};
use crate::mixture::{
    BatchGenerator, CurriculumState, MixtureSpec, SignalPool, SyntheticPool, WavPool,
};
use crate::rng::entropy_seed;

#[derive(Debug, Parser)]
#[command(
    name = "framrir",
    version,
    about = "Fast randomised multi-channel RIR simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate filters for one scene.
    Simulate(SimulateArgs),
    /// Generate reverberant multi-speaker mixtures.
    Mix(MixArgs),
    /// Compute spatial features of a multi-channel WAV file.
    Features(FeaturesArgs),
    /// Time filter simulation or batch generation.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON configuration; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reverberation time in seconds.
    #[arg(
        long,
        required_unless_present = "config",
        allow_negative_numbers = true
    )]
    pub t60: Option<f64>,
    /// Number of microphones on a linear array.
    #[arg(long)]
    pub mics: Option<usize>,
    /// Inter-microphone spacings in metres.
    #[arg(long, value_delimiter = ',')]
    pub spacing: Option<Vec<f64>>,
    /// Room length, width and height in metres.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub room: Option<Vec<f64>>,
    /// Source as `distance,azimuth_deg,elevation_deg`; repeat for more.
    #[arg(long = "source")]
    pub sources: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Virtual sources per source.
    #[arg(long)]
    pub images: Option<usize>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    /// Also write early-reverberation filters.
    #[arg(long)]
    pub early: bool,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output directory for WAV, file path for FRIR.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of mixtures.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Curriculum epoch; draws T60 from the epoch's range.
    #[arg(long)]
    pub epoch: Option<u32>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Multi-channel WAV input.
    pub input: PathBuf,
    /// Angle feature towards `--doa`.
    #[arg(long)]
    pub af: bool,
    /// Directional power ratio of the beam nearest `--doa`.
    #[arg(long)]
    pub dpr: bool,
    /// Log power spectrum of channel 0.
    #[arg(long)]
    pub lps: bool,
    /// cos IPD of microphones 0 and 1.
    #[arg(long)]
    pub cos_ipd: bool,
    /// MVDR beampattern; needs `--target`.
    #[arg(long)]
    pub beampattern: bool,
    /// Reverberant target image used to build oracle masks.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Target azimuth in degrees.
    #[arg(long)]
    pub doa: Option<f64>,
    /// Inter-microphone spacings of the linear array, metres.
    #[arg(long, value_delimiter = ',', default_value = "0.04,0.08,0.04")]
    pub spacing: Vec<f64>,
    /// Output directory; standard output when a single grid is requested.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write each grid as a raw f32 tensor.
    #[arg(long)]
    pub tensor: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Thread (or worker) counts to measure.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub threads: Vec<usize>,
    /// fram, ism (complete tail) or ism-matched (same image count as fram).
    #[arg(long, value_delimiter = ',', default_value = "fram")]
    pub method: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub rooms: usize,
    #[arg(long, default_value_t = 3)]
    pub sources: usize,
    #[arg(long, default_value_t = 0.5)]
    pub t60: f64,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Benchmark mixture batches instead of filters.
    #[arg(long)]
    pub batch: bool,
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(clap::Error),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(Cli::command().error(clap::error::ErrorKind::ValueValidation, msg))
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Mix(a) => mix(a),
        Command::Features(a) => features(a),
        Command::Bench(a) => bench(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn parse_source(s: &str) -> CliResult<SourcePlacement> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| {
            usage(format!(
                "bad --source '{s}', expected distance,azimuth_deg[,elevation_deg]"
            ))
        })?;
    match v.as_slice() {
        [d, az] => Ok(SourcePlacement::new(*d, az.to_radians(), 0.0)),
        [d, az, el] => Ok(SourcePlacement::new(*d, az.to_radians(), el.to_radians())),
        _ => Err(usage(format!("bad --source '{s}', expected 2 or 3 values"))),
    }
}

fn array_from_flags(
    mics: Option<usize>,
    spacing: Option<&[f64]>,
) -> CliResult<Option<Vec<crate::geometry::Vec3>>> {
    match (mics, spacing) {
        (None, None) => Ok(None),
        (Some(m), None) => Ok(Some(linear_array(&vec![0.04; m.saturating_sub(1)]))),
        (m, Some(s)) => {
            if let Some(m) = m {
                if m != s.len() + 1 {
                    return Err(usage(format!(
                        "--mics {m} needs {} spacings, got {}",
                        m - 1,
                        s.len()
                    )));
                }
            }
            Ok(Some(linear_array(s)))
        }
    }
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let cfg = load_config(a.config.as_deref())?;
    let mut params = cfg.sim.clone();
    if let Some(t) = a.t60 {
        params.t60 = t;
    }
    if let Some(n) = a.images {
        params.num_images = n;
    }
    if let Some(fs) = a.sample_rate {
        params.sample_rate = fs;
    }
    params.seed = a.seed.unwrap_or_else(|| {
        if a.config.is_some() {
            cfg.sim.seed
        } else {
            entropy_seed()
        }
    });

    let mut scene = cfg
        .scene
        .as_ref()
        .map(|s| s.to_scene())
        .unwrap_or_else(|| Scene::new([6.0, 5.0, 3.0], crate::geometry::eval_array(), vec![]));
    if let Some(r) = &a.room {
        let origin_default = scene.array_origin == crate::geometry::Vec3(scene.room_dims) * 0.5;
        scene.room_dims = [r[0], r[1], r[2]];
        if origin_default {
            scene.array_origin = crate::geometry::Vec3(scene.room_dims) * 0.5;
        }
    }
    if let Some(mics) = array_from_flags(a.mics, a.spacing.as_deref())? {
        scene.mics = mics;
    }
    if !a.sources.is_empty() {
        scene.sources = a
            .sources
            .iter()
            .map(|s| parse_source(s))
            .collect::<CliResult<_>>()?;
    }
    if scene.sources.is_empty() {
        scene
            .sources
            .push(SourcePlacement::new(1.5, 60f64.to_radians(), 0.0));
    }
    let early = a.early || cfg.output.early;
    let format = a.format.unwrap_or(cfg.output.format);

    let rirs = Simulator::new(params.clone())?.simulate(&scene)?;
    let mut stdout = std::io::stdout().lock();
    let mut records = Vec::new();
    if format == OutputFormat::Wav {
        fs::create_dir_all(&a.out)?;
    }
    for (k, r) in rirs.iter().enumerate() {
        let filters = if early {
            vec![&r.full, &r.early]
        } else {
            vec![&r.full]
        };
        for f in filters {
            let file = match format {
                OutputFormat::Wav => {
                    let p = a.out.join(format!("src{k}_{}.wav", f.kind.label()));
                    io::write_wav_f64(&p, f.sample_rate, &f.channels)?;
                    p
                }
                OutputFormat::Frir => {
                    records.push(FrirRecord::from_filter(f, params.seed));
                    a.out.clone()
                }
            };
            let s = scene.sources[k];
            io::write_json_line(
                &mut stdout,
                &json!({
                    "source": k,
                    "kind": f.kind.label(),
                    "doa_deg": s.azimuth.to_degrees(),
                    "elevation_deg": s.elevation.to_degrees(),
                    "distance": s.distance,
                    "t60": params.t60,
                    "seed": params.seed,
                    "sample_rate": f.sample_rate,
                    "channels": f.num_channels(),
                    "samples": f.len(),
                    "direct_path_sample": f.direct_path_sample,
                    "file": file,
                }),
            )?;
        }
    }
    if format == OutputFormat::Frir {
        if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        io::save_frir(&a.out, &records)?;
    }
    Ok(())
}

fn signal_pool(cfg: &ConfigFile, spec: &MixtureSpec) -> Result<Arc<dyn SignalPool>> {
    Ok(match (&cfg.speech_dir, &cfg.noise_dir) {
        (Some(s), Some(n)) => Arc::new(WavPool::from_dirs(s, n, spec.sample_rate())?),
        (None, None) => Arc::new(SyntheticPool::new(spec.sample_rate())),
        _ => {
            return Err(Error::InvalidArgument(
                "speech_dir and noise_dir must be given together".into(),
            ))
        }
    })
}

fn mix(a: MixArgs) -> CliResult<()> {
    let cfg = load_config(a.config.as_deref())?;
    let spec = cfg.mixture.clone().unwrap_or_default();
    let seed = a.seed.unwrap_or_else(entropy_seed);
    let curriculum = match (a.epoch, cfg.curriculum) {
        (Some(e), Some(c)) => {
            Some((0..e.saturating_sub(c.epoch)).fold(c, |s, _| crate::mixture::curriculum_step(&s)))
        }
        (Some(e), None) => Some(CurriculumState::at_epoch(e)),
        (None, c) => c,
    };
    let format = a.format.unwrap_or(cfg.output.format);
    let generator = BatchGenerator::new(spec.clone(), signal_pool(&cfg, &spec)?, seed, a.workers)?;
    fs::create_dir_all(&a.out)?;
    let mut meta = BufWriter::new(File::create(a.out.join("metadata.jsonl"))?);
    let mut records = Vec::new();
    let chunk = a.workers.max(1) * 4;
    let mut first = 0;
    while first < a.n {
        let size = chunk.min(a.n - first);
        for item in generator.batch(curriculum.as_ref(), first as u64, size)? {
            let i = item.meta.index;
            let fs_ = item.meta.sample_rate;
            match format {
                OutputFormat::Wav => {
                    io::write_wav(&a.out.join(format!("mix{i:05}.wav")), fs_, &item.mixture)?;
                    for (k, (t, e)) in item.targets.iter().zip(&item.early_targets).enumerate() {
                        io::write_wav(&a.out.join(format!("mix{i:05}_s{k}.wav")), fs_, t)?;
                        io::write_wav(&a.out.join(format!("mix{i:05}_s{k}_early.wav")), fs_, e)?;
                    }
                    let sidecar = File::create(a.out.join(format!("mix{i:05}.json")))?;
                    serde_json::to_writer_pretty(sidecar, &item.meta).map_err(Error::from)?;
                }
                OutputFormat::Frir => {
                    let rec = |kind, channels: &Vec<Vec<f32>>| FrirRecord {
                        sample_rate: fs_,
                        kind,
                        seed: item.meta.seed,
                        channels: channels.clone(),
                    };
                    records.push(rec(kind::MIXTURE, &item.mixture));
                    for (t, e) in item.targets.iter().zip(&item.early_targets) {
                        records.push(rec(kind::TARGET, t));
                        records.push(rec(kind::EARLY_TARGET, e));
                    }
                }
            }
            io::write_json_line(&mut meta, &item.meta)?;
        }
        first += size;
    }
    meta.flush()?;
    if format == OutputFormat::Frir {
        io::save_frir(&a.out.join("batch.frir"), &records)?;
    }
    eprintln!(
        "wrote {} mixtures to {} (seed {seed})",
        a.n,
        a.out.display()
    );
    Ok(())
}

fn features(a: FeaturesArgs) -> CliResult<()> {
    let wanted = [a.af, a.dpr, a.lps, a.cos_ipd, a.beampattern];
    let count = wanted.iter().filter(|w| **w).count();
    if count == 0 {
        return Err(usage(
            "choose at least one of --af, --dpr, --lps, --cos-ipd, --beampattern",
        ));
    }
    if (a.af || a.dpr) && a.doa.is_none() {
        return Err(usage("--af and --dpr need --doa"));
    }
    if a.beampattern && a.target.is_none() {
        return Err(usage("--beampattern needs --target"));
    }
    if a.out.is_none() && (count > 1 || a.tensor) {
        return Err(usage("several outputs need --out DIR"));
    }
    let (fs_, x) = io::read_wav(&a.input)?;
    let mics = linear_array(&a.spacing);
    if mics.len() != x.len() {
        return Err(Error::InvalidArgument(format!(
            "{} has {} channels but the array has {} microphones",
            a.input.display(),
            x.len(),
            mics.len()
        ))
        .into());
    }
    let spec = StftSpec::speech(fs_);
    let ctx = ArrayContext::new(mics, spec, fs_ as f64);
    let y = stft(&x, &spec)?;
    let doa = a.doa.map(f64::to_radians);

    let mut grids: Vec<(&str, TfMap)> = Vec::new();
    if a.lps {
        grids.push(("lps", log_power(&y[0])));
    }
    if a.cos_ipd {
        if y.len() < 2 {
            return Err(Error::InvalidArgument("cos IPD needs two channels".into()).into());
        }
        grids.push(("cos_ipd", cos_ipd(&y, (0, 1))?));
    }
    if a.af {
        let pairs = crate::features::all_pairs(y.len());
        grids.push(("af", angle_feature(&y, doa.unwrap(), &ctx, &pairs)?));
    }
    if a.dpr {
        let grid = BeamGrid::superdirective(&ctx, BeamGrid::default_azimuths(), 1e-3)?;
        let v = grid.nearest(doa.unwrap());
        grids.push(("dpr", directional_power_ratio(&y, v, &grid)?));
    }
    match &a.out {
        None => {
            if let Some((_, map)) = grids.first() {
                io::write_tf_csv(std::io::stdout().lock(), map)?;
            }
        }
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, map) in &grids {
                io::write_tf_csv(
                    BufWriter::new(File::create(dir.join(format!("{name}.csv")))?),
                    map,
                )?;
                if a.tensor {
                    let data: Vec<f32> = map.data.iter().map(|v| *v as f32).collect();
                    io::write_raw_tensor(
                        BufWriter::new(File::create(dir.join(format!("{name}.f32")))?),
                        &[map.frames, map.bins],
                        &data,
                    )?;
                }
            }
        }
    }
    if a.beampattern {
        let (tfs, target) = io::read_wav(a.target.as_ref().unwrap())?;
        if tfs != fs_ || target.len() != x.len() {
            return Err(Error::InvalidArgument(
                "target must match the input's rate and channel count".into(),
            )
            .into());
        }
        let n = x[0].len().min(target[0].len());
        let rest: Vec<f64> = (0..n).map(|i| x[0][i] - target[0][i]).collect();
        let s_t = stft(&[target[0][..n].to_vec()], &spec)?;
        let s_r = stft(&[rest], &spec)?;
        let masks = ideal_ratio_masks(&[s_t, s_r], 0)?;
        let mixture: Vec<Vec<f64>> = x.iter().map(|c| c[..n].to_vec()).collect();
        let scan: Vec<f64> = (0..=72).map(|k| (k as f64 * 5.0).to_radians()).collect();
        let bp = mvdr_beampattern(
            &mixture,
            &masks[0],
            &ctx,
            Steering::PrincipalComponent,
            &scan,
        )?;
        match &a.out {
            None => io::write_beampattern_csv(std::io::stdout().lock(), &bp)?,
            Some(dir) => io::write_beampattern_csv(
                BufWriter::new(File::create(dir.join("beampattern.csv"))?),
                &bp,
            )?,
        }
    }
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult<()> {
    if a.threads.contains(&0) {
        return Err(usage("thread counts must be positive"));
    }
    let params = crate::params::SimParams::default().with_t60(a.t60);
    let mut entries = Vec::new();
    if a.batch {
        let spec = MixtureSpec::default();
        let pool: Arc<dyn SignalPool> = Arc::new(SyntheticPool::new(spec.sample_rate()));
        entries = bench_batch_scaling(&spec, pool, &a.threads, a.batch_size, a.warmup, a.reps)?;
    } else {
        let workload = RirWorkload::random(a.rooms, a.sources, params.clone(), 0);
        for m in &a.method {
            let method = match m.as_str() {
                "fram" => Method::Fram,
                "ism" => Method::Ism { max_order: None },
                "ism-matched" => Method::Ism {
                    max_order: Some(ism_order_for_images(params.num_images)),
                },
                other => return Err(usage(format!("unknown method '{other}'"))),
            };
            for &t in &a.threads {
                entries.push(bench_rir(&workload, method, t, a.warmup, a.reps)?);
            }
        }
    }
    let suite = BenchSuite::new(entries);
    match &a.out {
        Some(p) => serde_json::to_writer_pretty(BufWriter::new(File::create(p)?), &suite)
            .map_err(Error::from)?,
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &suite).map_err(Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
