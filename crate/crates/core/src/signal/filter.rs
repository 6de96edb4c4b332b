use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::{fft_in_place, ifft_in_place};
use crate::error::{Error, Result};

/// A closed frequency band `[low_hz, high_hz]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandSpec {
    pub const fn new(low_hz: f64, high_hz: f64) -> Self {
        Self { low_hz, high_hz }
    }

    /// Shape check independent of any sample rate.
    pub fn check_shape(&self) -> Result<()> {
        if !(self.low_hz.is_finite() && self.high_hz.is_finite()) {
            return Err(Error::InvalidInput(format!("band {self} is not finite")));
        }
        if self.low_hz < 0.0 || self.low_hz >= self.high_hz {
            return Err(Error::InvalidInput(format!(
                "band {self} must satisfy 0 <= low < high"
            )));
        }
        Ok(())
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        self.check_shape()?;
        let nyquist = sample_rate_hz / 2.0;
        if self.high_hz > nyquist {
            return Err(Error::InvalidInput(format!(
                "band {self} exceeds the Nyquist frequency {nyquist} Hz"
            )));
        }
        Ok(())
    }

    pub fn contains(&self, hz: f64) -> bool {
        hz >= self.low_hz && hz <= self.high_hz
    }

    pub fn width_hz(&self) -> f64 {
        self.high_hz - self.low_hz
    }
}

impl std::fmt::Display for BandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.low_hz, self.high_hz)
    }
}

impl std::str::FromStr for BandSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("band `{s}` is not `low:high`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("band `{s}`: `{v}` is not a number")))
        };
        let band = BandSpec::new(parse(lo)?, parse(hi)?);
        band.check_shape()?;
        Ok(band)
    }
}

/// Zero-phase brick-wall band-pass.
///
/// Transforms the whole record, zeroes every bin whose frequency lies outside
/// `band` and transforms back. The mask is symmetric in frequency so the
/// output stays real; it is an orthogonal projection, hence linear and
/// idempotent. The DC bin survives only when `band.low_hz == 0`.
pub fn bandpass(samples: &[f64], sample_rate_hz: f64, band: BandSpec) -> Result<Vec<f64>> {
    band.validate(sample_rate_hz)?;
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("band-pass input sample {i}")));
    }
    let n = samples.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_in_place(&mut buf);
    let resolution = sample_rate_hz / n as f64;
    for (k, bin) in buf.iter_mut().enumerate() {
        let hz = k.min(n - k) as f64 * resolution;
        if !band.contains(hz) {
            *bin = Complex64::new(0.0, 0.0);
        }
    }
    ifft_in_place(&mut buf);
    Ok(buf.into_iter().map(|c| c.re).collect())
}
