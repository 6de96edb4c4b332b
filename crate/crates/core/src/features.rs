//! Per-window statistics on band-limited channels.
//!
//! Every window yields a fixed-layout vector. For channel `c` with its
//! assigned band (channel 1 low, channel 2 mid, channel 3 high) the layout
//! holds six values in this order:
//!
//! | offset | name       | definition                                   |
//! |--------|------------|----------------------------------------------|
//! | 0      | `rms`      | `sqrt(mean(x^2))`                            |
//! | 1      | `std`      | population standard deviation                |
//! | 2      | `kurtosis` | excess kurtosis `m4 / m2^2 - 3`              |
//! | 3      | `skewness` | `m3 / m2^(3/2)`                              |
//! | 4      | `energy`   | `sum(x^2)`                                   |
//! | 5      | `entropy`  | Shannon entropy (bits) of the amplitude histogram |
//!
//! giving 18 values. With position extras enabled four more follow:
//! the autocorrelation peak value and amplitude smoothness of the mid-band
//! channel 2, the standard deviation of the high-band channel 3, and the
//! excess kurtosis of the unfiltered (mean-removed) channel 3.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{bandpass, fft_in_place, ifft_in_place, remove_mean, BandSpec, TimeSeries, Window};

/// Amplitude histogram resolution.
pub const DEFAULT_ENTROPY_BINS: usize = 16;
/// Sub-window of the moving-RMS envelope used by [`amplitude_smoothness`].
pub const SMOOTHNESS_WINDOW: usize = 32;
/// Guard added to the envelope mean in [`amplitude_smoothness`].
pub const SMOOTHNESS_EPSILON: f64 = 1e-12;

pub const STAT_NAMES: [&str; 6] = ["rms", "std", "kurtosis", "skewness", "energy", "entropy"];
pub const BAND_NAMES: [&str; 3] = ["low", "mid", "high"];
pub const EXTRA_NAMES: [&str; 4] = [
    "ch2_mid_autocorr_peak",
    "ch2_mid_smoothness",
    "ch3_high_hf_std",
    "ch3_spike_kurtosis",
];

const LAYOUT_PREFIX: &str = "spokesense-features/v1";

/// Default bands: 1-50 Hz, 100-400 Hz, 400-700 Hz.
pub const DEFAULT_BANDS: [BandSpec; 3] = [
    BandSpec::new(1.0, 50.0),
    BandSpec::new(100.0, 400.0),
    BandSpec::new(400.0, 700.0),
];

fn require_len(x: &[f64], min: usize, what: &str) -> Result<()> {
    if x.len() < min {
        let err = format!("{what} needs at least {min} samples, got {}", x.len());
        return Err(if x.is_empty() {
            Error::EmptyInput(err)
        } else {
            Error::InvalidInput(err)
        });
    }
    Ok(())
}

pub fn rms(x: &[f64]) -> Result<f64> {
    require_len(x, 1, "rms")?;
    Ok((signal_energy(x) / x.len() as f64).sqrt())
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> Result<f64> {
    require_len(x, 2, "standard deviation")?;
    Ok(Moments::of(x).m2.sqrt())
}

/// Excess kurtosis `m4 / m2^2 - 3`.
pub fn kurtosis(x: &[f64]) -> Result<f64> {
    require_len(x, 4, "kurtosis")?;
    let m = Moments::of(x);
    if m.is_degenerate() {
        return Err(Error::Degenerate("kurtosis of a zero-variance signal".into()));
    }
    Ok(m.m4 / (m.m2 * m.m2) - 3.0)
}

pub fn skewness(x: &[f64]) -> Result<f64> {
    require_len(x, 3, "skewness")?;
    let m = Moments::of(x);
    if m.is_degenerate() {
        return Err(Error::Degenerate("skewness of a zero-variance signal".into()));
    }
    Ok(m.m3 / m.m2.powf(1.5))
}

/// `sum(x^2)`.
pub fn signal_energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Shannon entropy in bits of the amplitude histogram.
///
/// `bins` equal-width cells span `[min(x), max(x)]`; the maximum lands in the
/// last cell. A constant signal occupies one cell and has zero entropy.
pub fn shannon_entropy(x: &[f64], bins: usize) -> Result<f64> {
    require_len(x, 1, "entropy")?;
    if bins < 2 {
        return Err(Error::InvalidInput(format!(
            "entropy needs at least 2 bins, got {bins}"
        )));
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let width = hi - lo;
    if !(width > 0.0) {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; bins];
    for &v in x {
        let cell = ((v - lo) / width * bins as f64) as usize;
        counts[cell.min(bins - 1)] += 1;
    }
    let n = x.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

/// First local maximum of the normalised autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrPeak {
    pub lag: usize,
    pub value: f64,
    /// `false` when no local maximum exists; `lag` is then 0 and `value` 1.
    pub found: bool,
}

/// Normalised autocorrelation `r(tau)` of the mean-removed signal for
/// `tau = 0..=max_lag`, with `r(0) = 1`.
///
/// Uses the biased estimator (`sum_t x[t] x[t + tau] / sum_t x[t]^2`),
/// evaluated through a zero-padded FFT.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    require_len(x, 2, "autocorrelation")?;
    let centred = remove_mean(x);
    let n = centred.len();
    let size = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, &v) in buf.iter_mut().zip(&centred) {
        b.re = v;
    }
    fft_in_place(&mut buf);
    for b in buf.iter_mut() {
        *b = Complex64::new(b.norm_sqr(), 0.0);
    }
    ifft_in_place(&mut buf);
    let r0 = buf[0].re;
    if !(r0 > 0.0) || Moments::of(x).is_degenerate() {
        return Err(Error::Degenerate(
            "autocorrelation of a zero-variance signal".into(),
        ));
    }
    let max_lag = max_lag.min(n - 1);
    let mut r: Vec<f64> = buf[..=max_lag].iter().map(|c| c.re / r0).collect();
    r[0] = 1.0;
    Ok(r)
}

/// First local maximum of `r(tau)` for `tau >= min_lag`, searched up to `n/2`.
pub fn autocorrelation_peak(x: &[f64], min_lag: usize) -> Result<AutocorrPeak> {
    require_len(x, 8, "autocorrelation peak")?;
    let max_lag = x.len() / 2;
    let r = autocorrelation(x, max_lag)?;
    let start = min_lag.max(1);
    for tau in start..r.len().saturating_sub(1) {
        if r[tau] > r[tau - 1] && r[tau] >= r[tau + 1] {
            return Ok(AutocorrPeak {
                lag: tau,
                value: r[tau].clamp(-1.0, 1.0),
                found: true,
            });
        }
    }
    Ok(AutocorrPeak {
        lag: 0,
        value: 1.0,
        found: false,
    })
}

/// Smoothness of the amplitude envelope, in `(0, 1]`.
///
/// The envelope is the moving RMS over [`SMOOTHNESS_WINDOW`] samples
/// (shortened to `n/2` for short inputs) at stride 1;
/// the result is `1 / (1 + mean|e[t+1] - e[t]| / (mean(e) + eps))`.
pub fn amplitude_smoothness(x: &[f64]) -> Result<f64> {
    require_len(x, 4, "amplitude smoothness")?;
    let w = SMOOTHNESS_WINDOW.min(x.len() / 2);
    let envelope: Vec<f64> = x
        .windows(w)
        .map(|s| (signal_energy(s) / w as f64).sqrt())
        .collect();
    let mean_env = envelope.iter().sum::<f64>() / envelope.len() as f64;
    let roughness = envelope
        .windows(2)
        .map(|p| (p[1] - p[0]).abs())
        .sum::<f64>()
        / (envelope.len() - 1) as f64;
    Ok(1.0 / (1.0 + roughness / (mean_env + SMOOTHNESS_EPSILON)))
}

/// Population central moments.
struct Moments {
    m2: f64,
    m3: f64,
    m4: f64,
    max_abs: f64,
}

impl Moments {
    fn of(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        let mut max_abs = 0.0f64;
        for &v in x {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
            max_abs = max_abs.max(v.abs());
        }
        Self {
            m2: m2 / n,
            m3: m3 / n,
            m4: m4 / n,
            max_abs,
        }
    }

    /// Variance indistinguishable from rounding noise of the samples.
    fn is_degenerate(&self) -> bool {
        let floor = 1e-12 * self.max_abs;
        self.m2 <= floor * floor
    }
}

/// What to extract from each window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Bands for channels 1, 2 and 3.
    pub bands: [BandSpec; 3],
    pub entropy_bins: usize,
    pub include_extras: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            bands: DEFAULT_BANDS,
            entropy_bins: DEFAULT_ENTROPY_BINS,
            include_extras: false,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        for band in &self.bands {
            band.check_shape()?;
        }
        if self.entropy_bins < 2 {
            return Err(Error::InvalidInput(format!(
                "entropy bins must be at least 2, got {}",
                self.entropy_bins
            )));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        if self.include_extras {
            22
        } else {
            18
        }
    }

    /// Column names in layout order.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dimension());
        for (c, band) in BAND_NAMES.iter().enumerate() {
            for stat in STAT_NAMES {
                names.push(format!("ch{}_{band}_{stat}", c + 1));
            }
        }
        if self.include_extras {
            names.extend(EXTRA_NAMES.iter().map(|s| s.to_string()));
        }
        names
    }

    /// Identifier that pins the layout and every parameter that shapes it.
    ///
    /// Round-trips through [`FeatureConfig::from_layout_id`].
    pub fn layout_id(&self) -> String {
        let mut id = String::from(LAYOUT_PREFIX);
        let bands: Vec<String> = self.bands.iter().map(|b| b.to_string()).collect();
        let _ = write!(
            id,
            ";bands={};entropy_bins={};extras={}",
            bands.join(","),
            self.entropy_bins,
            u8::from(self.include_extras)
        );
        id
    }

    pub fn from_layout_id(id: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidInput(format!("feature layout id `{id}`: {why}"));
        let mut parts = id.split(';');
        if parts.next() != Some(LAYOUT_PREFIX) {
            return Err(bad("unknown layout family"));
        }
        let (mut bands, mut bins, mut extras) = (None, None, None);
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| bad("malformed field"))?;
            match key {
                "bands" => {
                    let parsed = value
                        .split(',')
                        .map(str::parse::<BandSpec>)
                        .collect::<Result<Vec<_>>>()?;
                    let arr: [BandSpec; 3] =
                        parsed.try_into().map_err(|_| bad("expected three bands"))?;
                    bands = Some(arr);
                }
                "entropy_bins" => {
                    bins = Some(value.parse().map_err(|_| bad("bad entropy_bins"))?);
                }
                "extras" => {
                    extras = Some(match value {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad("bad extras flag")),
                    });
                }
                _ => return Err(bad("unknown field")),
            }
        }
        let cfg = Self {
            bands: bands.ok_or_else(|| bad("missing bands"))?,
            entropy_bins: bins.ok_or_else(|| bad("missing entropy_bins"))?,
            include_extras: extras.ok_or_else(|| bad("missing extras"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One window's features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Set when some band had zero variance; its kurtosis and skewness were
    /// reported as 0.
    pub degenerate: bool,
}

/// The six per-band statistics of one band-limited, mean-removed signal.
/// Returns the values and whether the signal was degenerate.
fn band_stats(x: &[f64], bins: usize) -> Result<([f64; 6], bool)> {
    let m = Moments::of(x);
    let degenerate = m.is_degenerate();
    let (kurt, skew) = if degenerate {
        (0.0, 0.0)
    } else {
        (m.m4 / (m.m2 * m.m2) - 3.0, m.m3 / m.m2.powf(1.5))
    };
    Ok((
        [
            rms(x)?,
            m.m2.sqrt(),
            kurt,
            skew,
            signal_energy(x),
            shannon_entropy(x, bins)?,
        ],
        degenerate,
    ))
}

/// Extracts the feature vector of one window.
pub fn extract_features(
    series: &TimeSeries,
    window: Window,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    cfg.validate()?;
    window.validate(series.len())?;
    let fs = series.sample_rate_hz();
    let mut values = Vec::with_capacity(cfg.dimension());
    let mut degenerate = false;
    let mut filtered: Vec<Vec<f64>> = Vec::with_capacity(3);
    for (c, band) in cfg.bands.iter().enumerate() {
        let raw = series.window_slice(c, window);
        let x = remove_mean(&bandpass(raw, fs, *band)?);
        let (stats, flag) = band_stats(&x, cfg.entropy_bins)?;
        values.extend_from_slice(&stats);
        degenerate |= flag;
        filtered.push(x);
    }
    if cfg.include_extras {
        let mid = &filtered[1];
        let peak = if mid.len() >= 8 {
            match autocorrelation_peak(mid, 1) {
                Ok(p) => p.value,
                Err(Error::Degenerate(_)) => {
                    degenerate = true;
                    0.0
                }
                Err(e) => return Err(e),
            }
        } else {
            0.0
        };
        let smooth = if mid.len() >= 4 {
            amplitude_smoothness(mid)?
        } else {
            1.0
        };
        let hf_std = Moments::of(&filtered[2]).m2.sqrt();
        let raw3 = remove_mean(series.window_slice(2, window));
        let m = Moments::of(&raw3);
        let spike = if m.is_degenerate() {
            degenerate = true;
            0.0
        } else {
            m.m4 / (m.m2 * m.m2) - 3.0
        };
        values.extend_from_slice(&[peak, smooth, hf_std, spike]);
    }
    debug_assert_eq!(values.len(), cfg.dimension());
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("feature {i}")));
    }
    Ok(FeatureVector { values, degenerate })
}

/// Feature rows of many windows of one series, in window order.
pub fn extract_all(series: &TimeSeries, windows: &[Window], cfg: &FeatureConfig) -> Result<Vec<Vec<f64>>> {
    windows
        .par_iter()
        .map(|w| extract_features(series, *w, cfg).map(|f| f.values))
        .collect()
}
