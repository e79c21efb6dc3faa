//! File formats: WAV, the `FRIR` filter container, CSV grids, raw tensors
//! and JSON-lines metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{Beampattern, TfMap};
use crate::resample::RirFilter;

/// Writes channel-major samples as 32-bit float WAV.
pub fn write_wav(path: &Path, sample_rate: u32, channels: &[Vec<f32>]) -> Result<()> {
    let n = channels.first().map_or(0, Vec::len);
    if channels.is_empty() || channels.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument(
            "WAV channels must be non-empty and equal length".into(),
        ));
    }
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for i in 0..n {
        for c in channels {
            w.write_sample(c[i])?;
        }
    }
    w.finalize()?;
    Ok(())
}

pub fn write_wav_f64(path: &Path, sample_rate: u32, channels: &[Vec<f64>]) -> Result<()> {
    let c: Vec<Vec<f32>> = channels
        .iter()
        .map(|c| c.iter().map(|v| *v as f32).collect())
        .collect();
    write_wav(path, sample_rate, &c)
}

/// Reads any PCM or float WAV; integer samples are scaled to `[-1, 1]`.
/// Returns the sample rate and channel-major samples.
pub fn read_wav(path: &Path) -> Result<(u32, Vec<Vec<f64>>)> {
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    let m = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    let mut out = vec![Vec::with_capacity(interleaved.len() / m.max(1)); m];
    for (i, v) in interleaved.into_iter().enumerate() {
        out[i % m].push(v);
    }
    Ok((spec.sample_rate, out))
}

pub const FRIR_MAGIC: &[u8; 4] = b"FRIR";
pub const FRIR_VERSION: u16 = 1;

/// Record kinds stored in the container.
pub mod kind {
    pub const FULL: u8 = 0;
    pub const EARLY: u8 = 1;
    pub const MIXTURE: u8 = 2;
    pub const TARGET: u8 = 3;
    pub const EARLY_TARGET: u8 = 4;
}

/// One multi-channel record of the container.
#[derive(Debug, Clone, PartialEq)]
pub struct FrirRecord {
    pub sample_rate: u32,
    pub kind: u8,
    pub seed: u64,
    /// Channel-major samples; all channels have equal length.
    pub channels: Vec<Vec<f32>>,
}

impl FrirRecord {
    pub fn from_filter(f: &RirFilter, seed: u64) -> Self {
        Self {
            sample_rate: f.sample_rate,
            kind: f.kind.code(),
            seed,
            channels: f
                .channels
                .iter()
                .map(|c| c.iter().map(|v| *v as f32).collect())
                .collect(),
        }
    }
}

pub fn write_frir<W: Write>(mut w: W, records: &[FrirRecord]) -> Result<()> {
    w.write_all(FRIR_MAGIC)?;
    w.write_all(&FRIR_VERSION.to_le_bytes())?;
    w.write_all(
        &u32::try_from(records.len())
            .map_err(|_| fmt("too many records"))?
            .to_le_bytes(),
    )?;
    for r in records {
        let n = r.channels.first().map_or(0, Vec::len);
        if r.channels.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument(
                "record channels differ in length".into(),
            ));
        }
        let m = u16::try_from(r.channels.len()).map_err(|_| fmt("too many channels"))?;
        let n32 = u32::try_from(n).map_err(|_| fmt("record too long"))?;
        w.write_all(&m.to_le_bytes())?;
        w.write_all(&n32.to_le_bytes())?;
        w.write_all(&r.sample_rate.to_le_bytes())?;
        w.write_all(&[r.kind])?;
        w.write_all(&r.seed.to_le_bytes())?;
        let mut buf = Vec::with_capacity(n * 4);
        for c in &r.channels {
            buf.clear();
            for v in c {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn fmt(msg: &str) -> Error {
    Error::Format(msg.to_string())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => fmt("truncated container"),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

pub fn read_frir<R: Read>(mut r: R) -> Result<Vec<FrirRecord>> {
    if &read_exact::<_, 4>(&mut r)? != FRIR_MAGIC {
        return Err(fmt("bad magic, not an FRIR container"));
    }
    let version = u16::from_le_bytes(read_exact(&mut r)?);
    if version != FRIR_VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version}"
        )));
    }
    let count = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let m = u16::from_le_bytes(read_exact(&mut r)?) as usize;
        let n = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let sample_rate = u32::from_le_bytes(read_exact(&mut r)?);
        let [kind] = read_exact::<_, 1>(&mut r)?;
        let seed = u64::from_le_bytes(read_exact(&mut r)?);
        let mut channels = Vec::with_capacity(m);
        let mut bytes = vec![0u8; n * 4];
        for _ in 0..m {
            r.read_exact(&mut bytes)
                .map_err(|_| fmt("payload shorter than declared"))?;
            channels.push(
                bytes
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect(),
            );
        }
        out.push(FrirRecord {
            sample_rate,
            kind,
            seed,
            channels,
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(fmt("trailing bytes after the declared records"));
    }
    Ok(out)
}

pub fn save_frir(path: &Path, records: &[FrirRecord]) -> Result<()> {
    write_frir(BufWriter::new(File::create(path)?), records)
}

pub fn load_frir(path: &Path) -> Result<Vec<FrirRecord>> {
    read_frir(BufReader::new(File::open(path)?))
}

/// A frames x bins map as CSV: one row per frame, one column per bin.
pub fn write_tf_csv<W: Write>(mut w: W, map: &TfMap) -> Result<()> {
    let header: Vec<String> = (0..map.bins).map(|f| format!("bin{f}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for t in 0..map.frames {
        let row: Vec<String> = map.row(t).iter().map(|v| format!("{v:.6e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are scan directions in degrees, columns are frequencies in Hz.
pub fn write_beampattern_csv<W: Write>(mut w: W, bp: &Beampattern) -> Result<()> {
    let mut header = vec!["doa_deg".to_string()];
    header.extend(bp.freqs_hz.iter().map(|f| format!("{f:.1}")));
    writeln!(w, "{}", header.join(","))?;
    for (az, row) in bp.azimuths.iter().zip(&bp.magnitude) {
        let mut cells = vec![format!("{:.3}", az.to_degrees())];
        cells.extend(row.iter().map(|v| format!("{v:.6e}")));
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Little-endian `f32` tensor with a small header: `u32` rank, `u32` per
/// dimension, then the row-major data.
pub fn write_raw_tensor<W: Write>(mut w: W, shape: &[usize], data: &[f32]) -> Result<()> {
    if shape.iter().product::<usize>() != data.len() {
        return Err(Error::InvalidArgument(
            "tensor shape does not match data length".into(),
        ));
    }
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for d in shape {
        w.write_all(&(*d as u32).to_le_bytes())?;
    }
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_tensor<R: Read>(mut r: R) -> Result<(Vec<usize>, Vec<f32>)> {
    let rank = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    let shape = (0..rank)
        .map(|_| Ok(u32::from_le_bytes(read_exact(&mut r)?) as usize))
        .collect::<Result<Vec<_>>>()?;
    let len: usize = shape.iter().product();
    let mut bytes = vec![0u8; len * 4];
    r.read_exact(&mut bytes)
        .map_err(|_| fmt("tensor payload shorter than declared"))?;
    Ok((
        shape,
        bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect(),
    ))
}

/// Serializes `value` as one compact JSON line.
pub fn write_json_line<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_records() -> Vec<FrirRecord> {
        vec![
            FrirRecord {
                sample_rate: 16_000,
                kind: kind::FULL,
                seed: 7,
                channels: vec![vec![1.0, -0.5, f32::MIN_POSITIVE, 3.25e-7]; 3],
            },
            FrirRecord {
                sample_rate: 8_000,
                kind: kind::EARLY,
                seed: u64::MAX,
                channels: vec![vec![]; 2],
            },
        ]
    }

    #[test]
    fn container_round_trip_is_bit_exact() {
        let mut buf = Vec::new();
        write_frir(&mut buf, &sample_records()).unwrap();
        let back = read_frir(buf.as_slice()).unwrap();
        assert_eq!(back, sample_records());
    }

    #[test]
    fn container_rejects_corruption() {
        let mut buf = Vec::new();
        write_frir(&mut buf, &sample_records()).unwrap();
        let mut bad_version = buf.clone();
        bad_version[4] = 9;
        assert!(matches!(
            read_frir(bad_version.as_slice()),
            Err(Error::Format(_))
        ));
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(read_frir(bad_magic.as_slice()).is_err());
        assert!(read_frir(&buf[..buf.len() - 3]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_frir(extra.as_slice()).is_err());
    }

    #[test]
    fn wav_float_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        let ch = vec![vec![0.25f32, -1.0, 0.5], vec![0.0, 0.125, -0.75]];
        write_wav(&p, 16_000, &ch).unwrap();
        let (fs, back) = read_wav(&p).unwrap();
        assert_eq!(fs, 16_000);
        for (a, b) in ch.iter().zip(&back) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(*x as f64, *y);
            }
        }
    }

    #[test]
    fn integer_pcm_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for v in [i16::MIN, 0, 16384] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let (_, x) = read_wav(&p).unwrap();
        assert_eq!(x[0], vec![-1.0, 0.0, 0.5]);
    }

    #[test]
    fn tensor_round_trip() {
        let mut buf = Vec::new();
        let data: Vec<f32> = (0..6).map(|v| v as f32 * 0.5).collect();
        write_raw_tensor(&mut buf, &[2, 3], &data).unwrap();
        assert_eq!(read_raw_tensor(buf.as_slice()).unwrap(), (vec![2, 3], data));
        assert!(write_raw_tensor(Vec::new(), &[4], &[1.0]).is_err());
    }

    #[test]
    fn tf_csv_has_one_row_per_frame() {
        let map = TfMap::from_fn(5, 3, |t, f| (t * f) as f64);
        let mut buf = Vec::new();
        write_tf_csv(&mut buf, &map).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 3));
    }
}
