use std::path::Path;

use rubato::{
    Resampler, SincFixedIn, SincInterpolationParameters, SincInterpolationType, WindowFunction,
};

use crate::error::{Error, Result};

pub const STANDARD_SAMPLE_RATE: u32 = 44_100;

/// Decoded mono audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub clip_id: String,
    /// Mono samples in [-1, 1].
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(clip_id: impl Into<String>, samples: Vec<f64>, sample_rate: u32) -> Self {
        AudioClip {
            clip_id: clip_id.into(),
            samples,
            sample_rate,
        }
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Reads a WAV file, averages channels to mono and resamples to `target_rate`.
pub fn decode_audio(path: &Path, target_rate: u32) -> Result<AudioClip> {
    let decode_err = |msg: String| Error::Decode {
        path: path.to_path_buf(),
        msg,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| decode_err(e.to_string()))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || spec.sample_rate == 0 {
        return Err(decode_err("zero channels or sample rate".into()));
    }

    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        hound::SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| decode_err(e.to_string()))?;

    let mono: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if mono.iter().any(|s| !s.is_finite()) {
        return Err(decode_err("non-finite sample".into()));
    }

    let clip_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let samples = resample(&mono, spec.sample_rate, target_rate).map_err(decode_err)?;
    Ok(AudioClip::new(clip_id, samples, target_rate))
}

/// Band-limited windowed-sinc resampling. Output length is
/// `round(len * to / from)` with the filter delay removed.
pub(crate) fn resample(input: &[f64], from: u32, to: u32) -> std::result::Result<Vec<f64>, String> {
    if from == to || input.is_empty() {
        return Ok(input.to_vec());
    }
    let ratio = to as f64 / from as f64;
    let expected = (input.len() as f64 * ratio).round() as usize;
    let params = SincInterpolationParameters {
        sinc_len: 256,
        f_cutoff: 0.95,
        interpolation: SincInterpolationType::Cubic,
        oversampling_factor: 256,
        window: WindowFunction::BlackmanHarris2,
    };
    let chunk = 4096;
    let mut rs = SincFixedIn::<f64>::new(ratio, 1.0, params, chunk, 1).map_err(|e| e.to_string())?;
    let delay = rs.output_delay();
    let mut out = Vec::with_capacity(expected + delay + chunk);

    let mut pos = 0;
    while input.len() - pos >= rs.input_frames_next() {
        let n = rs.input_frames_next();
        let block = rs
            .process(&[&input[pos..pos + n]], None)
            .map_err(|e| e.to_string())?;
        out.extend_from_slice(&block[0]);
        pos += n;
    }
    if pos < input.len() {
        let block = rs
            .process_partial(Some(&[&input[pos..]]), None)
            .map_err(|e| e.to_string())?;
        out.extend_from_slice(&block[0]);
    }
    while out.len() < delay + expected {
        let block = rs
            .process_partial::<&[f64]>(None, None)
            .map_err(|e| e.to_string())?;
        if block[0].is_empty() {
            break;
        }
        out.extend_from_slice(&block[0]);
    }
    let mut samples: Vec<f64> = out.into_iter().skip(delay).take(expected).collect();
    samples.resize(expected, 0.0);
    Ok(samples)
}

/// Writes mono 32-bit float WAV.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let to_io = |e: hound::Error| Error::Io(std::io::Error::other(e.to_string()));
    let mut w = hound::WavWriter::create(path, spec).map_err(to_io)?;
    for &s in samples {
        w.write_sample(s as f32).map_err(to_io)?;
    }
    w.finalize().map_err(to_io)?;
    Ok(())
}
