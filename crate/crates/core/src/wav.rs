//! WAV reading and 32-bit float writing.

use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

pub use hound::Error as WavError;

/// Decoded audio, one vector per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub fs: u32,
    pub channels: Vec<Vec<f64>>,
}

fn float_spec(channels: usize, fs: u32) -> WavSpec {
    WavSpec {
        channels: channels as u16,
        sample_rate: fs,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    }
}

/// Writes interleaved 32-bit float little-endian samples.
pub fn write_wav_to<W: Write + Seek>(writer: W, channels: &[&[f64]], fs: u32) -> Result<(), WavError> {
    let len = channels.first().map_or(0, |c| c.len());
    assert!(channels.iter().all(|c| c.len() == len), "channels must have equal length");
    let mut w = WavWriter::new(writer, float_spec(channels.len(), fs))?;
    for n in 0..len {
        for c in channels {
            w.write_sample(c[n] as f32)?;
        }
    }
    w.finalize()
}

pub fn write_wav(path: impl AsRef<Path>, channels: &[&[f64]], fs: u32) -> Result<(), WavError> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_wav_to(file, channels, fs)
}

/// Reads float or integer PCM; integers are scaled to [-1, 1).
pub fn read_wav_from<R: Read>(reader: R) -> Result<WavData, WavError> {
    let mut r = WavReader::new(reader)?;
    let spec = r.spec();
    let n_ch = usize::from(spec.channels);
    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        SampleFormat::Int => {
            let scale = 1.0 / f64::from(1u32 << (spec.bits_per_sample - 1));
            r.samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<Result<_, _>>()?
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n_ch.max(1)); n_ch];
    for frame in interleaved.chunks_exact(n_ch) {
        for (c, &v) in channels.iter_mut().zip(frame) {
            c.push(v);
        }
    }
    Ok(WavData {
        fs: spec.sample_rate,
        channels,
    })
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavData, WavError> {
    read_wav_from(std::io::BufReader::new(std::fs::File::open(path)?))
}
