//! Sampled three-channel vibration records, window segmentation and the
//! frequency-domain tools built on top of them.

mod fft;
mod filter;

pub use fft::{dft_magnitude, fft_in_place, ifft_in_place, Spectrum};
pub use filter::{bandpass, BandSpec};

use crate::error::{Error, Result};

/// Number of sensor channels on the spoke.
pub const CHANNELS: usize = 3;

/// A three-channel vibration record.
///
/// Channel `k` holds the samples of spoke position `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sample_rate_hz: f64,
    channels: [Vec<f64>; CHANNELS],
    label: Option<String>,
}

impl TimeSeries {
    pub fn new(
        sample_rate_hz: f64,
        channels: [Vec<f64>; CHANNELS],
        label: Option<String>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        let len = channels[0].len();
        if len == 0 {
            return Err(Error::EmptyInput("time series has no samples".into()));
        }
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != len {
                return Err(Error::InvalidInput(format!(
                    "channel {} has {} samples, channel 1 has {len}",
                    c + 1,
                    ch.len()
                )));
            }
            if let Some(i) = ch.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("channel {} sample {i}", c + 1)));
            }
        }
        Ok(Self {
            sample_rate_hz,
            channels,
            label,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channels(&self) -> &[Vec<f64>; CHANNELS] {
        &self.channels
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    /// Samples of one channel restricted to a window.
    pub fn window_slice(&self, channel: usize, window: Window) -> &[f64] {
        &self.channels[channel][window.start..window.end()]
    }
}

/// A contiguous run of samples inside a [`TimeSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    /// Checks the window against a series length.
    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.len < 2 {
            return Err(Error::InvalidInput(format!(
                "window length {} is below the minimum of 2",
                self.len
            )));
        }
        if self.end() > series_len {
            return Err(Error::InvalidInput(format!(
                "window [{}, {}) exceeds series length {series_len}",
                self.start,
                self.end()
            )));
        }
        Ok(())
    }
}

/// Number of samples covered by `window_seconds` at `sample_rate_hz`.
///
/// Rounds to the nearest sample so that e.g. 1.5 s at 720 Hz is exactly 1080.
pub fn window_length(window_seconds: f64, sample_rate_hz: f64) -> usize {
    (window_seconds * sample_rate_hz).round() as usize
}

/// Tiles `series_len` samples with fixed-length windows.
///
/// The stride is `len * (1 - overlap)` rounded down (at least one sample);
/// a trailing partial window is dropped.
pub fn segment_len(series_len: usize, window_len: usize, overlap: f64) -> Result<Vec<Window>> {
    if window_len < 2 {
        return Err(Error::InvalidInput(format!(
            "window covers {window_len} sample(s); at least 2 required"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidInput(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }
    if series_len < window_len {
        return Err(Error::EmptyInput(format!(
            "series of {series_len} samples is shorter than one {window_len}-sample window"
        )));
    }
    let stride = ((window_len as f64 * (1.0 - overlap)).floor() as usize).max(1);
    let count = (series_len - window_len) / stride + 1;
    Ok((0..count)
        .map(|i| Window {
            start: i * stride,
            len: window_len,
        })
        .collect())
}

/// Segments a series into windows of `window_seconds` with fractional overlap.
pub fn segment_windows(
    series: &TimeSeries,
    window_seconds: f64,
    overlap: f64,
) -> Result<Vec<Window>> {
    if !(window_seconds.is_finite() && window_seconds > 0.0) {
        return Err(Error::InvalidInput(format!(
            "window length must be positive, got {window_seconds} s"
        )));
    }
    segment_len(
        series.len(),
        window_length(window_seconds, series.sample_rate_hz()),
        overlap,
    )
}

/// Subtracts the arithmetic mean.
pub fn remove_mean(samples: &[f64]) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    samples.iter().map(|x| x - mean).collect()
}
