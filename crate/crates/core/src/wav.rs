//! WAV I/O for speech-driven scenarios.
//!
//! Only the format the experiments use is accepted: 16-bit signed PCM, one
//! channel. Samples are normalized to [−1, 1] on read; the writer exists so
//! tests and users can synthesize fixture signals without an external tool.

use std::path::Path;

use crate::error::{Error, Result};

fn map_hound_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Reads a 16-bit PCM mono WAV file and normalizes samples by 2¹⁵.
pub fn read_pcm16_mono(path: &Path) -> Result<Vec<f64>> {
    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound_error(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("expected mono audio, got {} channels", spec.channels),
        });
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "expected 16-bit signed PCM, got {}-bit {:?}",
                spec.bits_per_sample, spec.sample_format
            ),
        });
    }
    reader
        .samples::<i16>()
        .map(|s| {
            s.map(|v| f64::from(v) / 32768.0)
                .map_err(|e| map_hound_error(path, e))
        })
        .collect()
}

/// Writes samples as 16-bit PCM mono, clamping to [−1, 1].
pub fn write_pcm16_mono(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound_error(path, e))?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(|e| map_hound_error(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound_error(path, e))
}
