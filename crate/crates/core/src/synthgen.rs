//! Seeded synthetic vibration records for the builtin terrains.
//!
//! A record is the sum of four parts, mixed into the three spoke channels:
//!
//! 1. band-shaped noise: for every band a unit-RMS band-passed Gaussian
//!    realisation (drawn at the next power-of-two length, then truncated), scaled by the profile's `band_rms` and by
//!    `channel_band_gains[channel][band]`. Each channel combines a component
//!    shared by all channels (fraction [`CHANNEL_COUPLING`] of the variance)
//!    with its own independent component;
//! 2. tonal lines `amplitude * gain_c * sin(2 pi f t + phase)`;
//! 3. stone strikes: Poisson-timed, positive, exponentially decaying spikes
//!    with time constant [`IMPULSE_DECAY_S`], amplitude uniform in
//!    `[0.5, 1.5) * impulse_amplitude`, scaled per channel by the mean of its
//!    gain row;
//! 4. a white noise floor of `noise_floor_rms` on every channel.
//!
//! Random draws happen in a fixed order from a [`Xoshiro256`] seeded with the
//! record seed: band noise (band-major; shared realisation, then channels 1-3),
//! floor (channel-major), tonal phases, then strike times and amplitudes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::classifier::LabeledSet;
use crate::features::{extract_all, FeatureConfig, DEFAULT_BANDS};
use crate::rng::Xoshiro256;
use crate::signal::{bandpass, segment_len, window_length, BandSpec, TimeSeries, Window, CHANNELS};

/// Share of band-noise variance common to all three channels.
pub const CHANNEL_COUPLING: f64 = 0.5;
/// Decay constant of a stone strike.
pub const IMPULSE_DECAY_S: f64 = 0.010;
/// Strikes are truncated after this many decay constants.
const IMPULSE_SPAN: f64 = 10.0;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1440.0;

/// Position sensitivity shared by the builtin profiles (rows: channels, columns: bands).
pub const SPOKE_GAINS: [[f64; 3]; 3] = [
    [1.0, 0.30, 0.10],
    [0.30, 1.0, 0.30],
    [0.10, 0.30, 1.0],
];

/// A sinusoidal line with per-channel gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TonalComponent {
    pub freq_hz: f64,
    pub amplitude: f64,
    pub channel_gains: [f64; 3],
}

/// Spectral recipe of one terrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainProfile {
    pub name: String,
    /// Target RMS of the low, mid and high band noise (volts).
    pub band_rms: [f64; 3],
    pub tonal_components: Vec<TonalComponent>,
    pub impulse_rate_hz: f64,
    pub impulse_amplitude: f64,
    pub noise_floor_rms: f64,
    /// Rows: channels 1-3; columns: low, mid, high band.
    pub channel_band_gains: [[f64; 3]; 3],
}

impl TerrainProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidInput(format!("profile `{}`: {what}", self.name)));
        if self.name.is_empty() {
            return Err(Error::InvalidInput("profile name is empty".into()));
        }
        let scalars = self
            .band_rms
            .iter()
            .chain(self.channel_band_gains.iter().flatten())
            .chain([&self.impulse_rate_hz, &self.impulse_amplitude, &self.noise_floor_rms]);
        for v in scalars {
            if !(v.is_finite() && *v >= 0.0) {
                return bad(format!("amplitudes, gains and rates must be finite and >= 0, got {v}"));
            }
        }
        for t in &self.tonal_components {
            if !(t.freq_hz.is_finite() && t.freq_hz > 0.0) {
                return bad(format!("tonal frequency {} must be positive", t.freq_hz));
            }
            if !(t.amplitude.is_finite() && t.amplitude >= 0.0)
                || t.channel_gains.iter().any(|g| !(g.is_finite() && *g >= 0.0))
            {
                return bad("tonal amplitude and gains must be finite and >= 0".into());
            }
        }
        Ok(())
    }

    /// Parameter-wise average of two recipes; tonal lines of both are kept at half amplitude.
    pub fn blend(a: &TerrainProfile, b: &TerrainProfile, name: &str) -> TerrainProfile {
        let avg = |x: f64, y: f64| (x + y) / 2.0;
        let tonal_components = a
            .tonal_components
            .iter()
            .chain(&b.tonal_components)
            .map(|t| TonalComponent {
                amplitude: t.amplitude / 2.0,
                ..t.clone()
            })
            .collect();
        TerrainProfile {
            name: name.to_string(),
            band_rms: std::array::from_fn(|i| avg(a.band_rms[i], b.band_rms[i])),
            tonal_components,
            impulse_rate_hz: avg(a.impulse_rate_hz, b.impulse_rate_hz),
            impulse_amplitude: avg(a.impulse_amplitude, b.impulse_amplitude),
            noise_floor_rms: avg(a.noise_floor_rms, b.noise_floor_rms),
            channel_band_gains: std::array::from_fn(|i| {
                std::array::from_fn(|j| avg(a.channel_band_gains[i][j], b.channel_band_gains[i][j]))
            }),
        }
    }
}

/// Names of the builtin profiles, in order.
pub const BUILTIN_NAMES: [&str; 6] = [
    "flat",
    "fine_sand",
    "small_stone",
    "small_pebble",
    "large_stone",
    "mixture",
];

/// The five known terrains used for training.
pub const KNOWN_TERRAINS: [&str; 5] = ["flat", "fine_sand", "small_stone", "small_pebble", "large_stone"];

fn profile(
    name: &str,
    band_rms: [f64; 3],
    tonal_components: Vec<TonalComponent>,
    impulse_rate_hz: f64,
    impulse_amplitude: f64,
) -> TerrainProfile {
    TerrainProfile {
        name: name.to_string(),
        band_rms,
        tonal_components,
        impulse_rate_hz,
        impulse_amplitude,
        noise_floor_rms: 0.01,
        channel_band_gains: SPOKE_GAINS,
    }
}

fn tone(freq_hz: f64, amplitude: f64, channel_gains: [f64; 3]) -> TonalComponent {
    TonalComponent {
        freq_hz,
        amplitude,
        channel_gains,
    }
}

/// The six builtin terrains.
///
/// * `flat`: band noise below the floor, nothing else;
/// * `fine_sand`: dominated by the high band, no strikes;
/// * `small_stone`: strong low and mid bands, a 200 Hz line on channel 2, frequent light strikes;
/// * `small_pebble`: low band, a 90 Hz line, fewer and heavier strikes;
/// * `large_stone`: heavy low band with rare large strikes and a raised high band from wheel slip;
/// * `mixture`: [`TerrainProfile::blend`] of `fine_sand` and `small_stone`.
pub fn builtin_profiles() -> Vec<TerrainProfile> {
    let flat = profile("flat", [0.004, 0.004, 0.004], vec![], 0.0, 0.0);
    let sand = profile("fine_sand", [0.04, 0.07, 0.30], vec![], 0.0, 0.0);
    let stone = profile(
        "small_stone",
        [0.30, 0.20, 0.05],
        vec![tone(200.0, 0.15, [0.2, 1.0, 0.3])],
        4.0,
        0.6,
    );
    let pebble = profile(
        "small_pebble",
        [0.40, 0.06, 0.05],
        vec![tone(90.0, 0.12, [0.6, 1.0, 0.2])],
        2.0,
        1.0,
    );
    let large = profile(
        "large_stone",
        [0.50, 0.12, 0.15],
        vec![tone(90.0, 0.08, [0.6, 1.0, 0.2])],
        1.0,
        1.6,
    );
    let mixture = TerrainProfile::blend(&sand, &stone, "mixture");
    vec![flat, sand, stone, pebble, large, mixture]
}

pub fn builtin_profile(name: &str) -> Result<TerrainProfile> {
    builtin_profiles()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownProfile {
            name: name.to_string(),
            available: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
        })
}

/// Everything that determines one synthetic record.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub profile: TerrainProfile,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub seed: u64,
    /// Bands of the shaped noise; the feature defaults unless overridden.
    pub bands: [BandSpec; 3],
}

impl GenSpec {
    pub fn new(profile: TerrainProfile, duration_s: f64, sample_rate_hz: f64, seed: u64) -> Self {
        Self {
            profile,
            duration_s,
            sample_rate_hz,
            seed,
            bands: DEFAULT_BANDS,
        }
    }

    pub fn samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.samples() < 2 {
            return Err(Error::InvalidInput(
                "duration covers fewer than 2 samples".into(),
            ));
        }
        let nyquist = self.sample_rate_hz / 2.0;
        for t in &self.profile.tonal_components {
            if t.freq_hz >= nyquist {
                return Err(Error::InvalidInput(format!(
                    "tonal line at {} Hz is not below the Nyquist frequency {nyquist} Hz",
                    t.freq_hz
                )));
            }
        }
        for band in &self.bands {
            band.validate(self.sample_rate_hz)?;
        }
        Ok(())
    }
}

/// Band-passed white noise scaled to unit RMS. The realisation is drawn at the
/// next power-of-two length, which keeps the transform radix-2, and truncated.
fn unit_band_noise(rng: &mut Xoshiro256, n: usize, fs: f64, band: BandSpec) -> Result<Vec<f64>> {
    let white: Vec<f64> = (0..n.next_power_of_two()).map(|_| rng.normal()).collect();
    let mut shaped = bandpass(&white, fs, band)?;
    shaped.truncate(n);
    let rms = (shaped.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        shaped.iter_mut().for_each(|v| *v /= rms);
    }
    Ok(shaped)
}

/// Synthesises one labeled record.
pub fn generate(spec: &GenSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let n = spec.samples();
    let fs = spec.sample_rate_hz;
    let p = &spec.profile;
    let mut rng = Xoshiro256::new(spec.seed);
    let mut channels: [Vec<f64>; CHANNELS] = std::array::from_fn(|_| vec![0.0; n]);

    let shared_w = CHANNEL_COUPLING.sqrt();
    let own_w = (1.0 - CHANNEL_COUPLING).sqrt();
    for (b, band) in spec.bands.iter().enumerate() {
        let shared = unit_band_noise(&mut rng, n, fs, *band)?;
        for (c, ch) in channels.iter_mut().enumerate() {
            let own = unit_band_noise(&mut rng, n, fs, *band)?;
            let scale = p.band_rms[b] * p.channel_band_gains[c][b];
            for ((out, s), o) in ch.iter_mut().zip(&shared).zip(&own) {
                *out += scale * (shared_w * s + own_w * o);
            }
        }
    }

    for ch in channels.iter_mut() {
        for v in ch.iter_mut() {
            *v += p.noise_floor_rms * rng.normal();
        }
    }

    for t in &p.tonal_components {
        let phase = 2.0 * PI * rng.next_f64();
        let omega = 2.0 * PI * t.freq_hz / fs;
        for (ch, gain) in channels.iter_mut().zip(t.channel_gains) {
            let a = t.amplitude * gain;
            if a == 0.0 {
                continue;
            }
            for (i, v) in ch.iter_mut().enumerate() {
                *v += a * libm::sin(omega * i as f64 + phase);
            }
        }
    }

    if p.impulse_rate_hz > 0.0 && p.impulse_amplitude > 0.0 {
        let row_gain: [f64; 3] =
            std::array::from_fn(|c| p.channel_band_gains[c].iter().sum::<f64>() / 3.0);
        let decay_samples = IMPULSE_DECAY_S * fs;
        let span = (IMPULSE_SPAN * decay_samples).ceil() as usize;
        let mut t = rng.exponential(p.impulse_rate_hz);
        while t < spec.duration_s {
            let amplitude = p.impulse_amplitude * (0.5 + rng.next_f64());
            let start = (t * fs).round() as usize;
            for k in 0..span {
                let i = start + k;
                if i >= n {
                    break;
                }
                let shape = amplitude * libm::exp(-(k as f64) / decay_samples);
                for (ch, g) in channels.iter_mut().zip(row_gain) {
                    ch[i] += g * shape;
                }
            }
            t += rng.exponential(p.impulse_rate_hz);
        }
    }

    TimeSeries::new(fs, channels, Some(p.name.clone()))
}

/// A generated record together with its analysis windows.
#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub series: TimeSeries,
    pub windows: Vec<Window>,
}

/// Windowing and rate shared by every record of a generated dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub windows_per_class: usize,
    pub window_seconds: f64,
    pub overlap: f64,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            windows_per_class: 80,
            window_seconds: 1.5,
            overlap: 0.5,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            seed: 42,
        }
    }
}

/// Sub-seed of class `index`: the dataset seed xor the class index.
pub fn class_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// One continuous record per profile, just long enough for exactly
/// `windows_per_class` windows.
pub fn generate_dataset(profiles: &[TerrainProfile], spec: &DatasetSpec) -> Result<Vec<DatasetRecord>> {
    if spec.windows_per_class < 2 {
        return Err(Error::InvalidInput(format!(
            "at least 2 windows per class required, got {}",
            spec.windows_per_class
        )));
    }
    let len = window_length(spec.window_seconds, spec.sample_rate_hz);
    if len < 2 {
        return Err(Error::InvalidInput("window shorter than 2 samples".into()));
    }
    if !(0.0..1.0).contains(&spec.overlap) {
        return Err(Error::InvalidInput(format!(
            "overlap must lie in [0, 1), got {}",
            spec.overlap
        )));
    }
    let stride = ((len as f64 * (1.0 - spec.overlap)).floor() as usize).max(1);
    let samples = len + (spec.windows_per_class - 1) * stride;
    profiles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let gen = GenSpec::new(
                p.clone(),
                samples as f64 / spec.sample_rate_hz,
                spec.sample_rate_hz,
                class_seed(spec.seed, i),
            );
            let series = generate(&gen)?;
            let windows = segment_len(series.len(), len, spec.overlap)?;
            debug_assert_eq!(windows.len(), spec.windows_per_class);
            Ok(DatasetRecord { series, windows })
        })
        .collect()
}

/// Extracts every window of every record into a labeled feature set.
pub fn dataset_features(records: &[DatasetRecord], cfg: &FeatureConfig) -> Result<LabeledSet> {
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for r in records {
        let label = r
            .series
            .label()
            .ok_or_else(|| Error::InvalidInput("dataset record without a label".into()))?;
        let block = extract_all(&r.series, &r.windows, cfg)?;
        names.extend(std::iter::repeat(label.to_string()).take(block.len()));
        rows.extend(block);
    }
    LabeledSet::from_names(rows, &names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::dft_magnitude;

    fn band_rms(x: &[f64], fs: f64, band: BandSpec) -> f64 {
        let y = bandpass(x, fs, band).unwrap();
        (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt()
    }

    #[test]
    fn builtins_are_valid_and_named() {
        let ps = builtin_profiles();
        assert_eq!(ps.len(), 6);
        for (p, name) in ps.iter().zip(BUILTIN_NAMES) {
            assert_eq!(p.name, name);
            p.validate().unwrap();
        }
        let flat = &ps[0];
        assert!(flat.band_rms.iter().all(|&b| b <= flat.noise_floor_rms));
        assert!(ps[2].tonal_components.iter().any(|t| t.freq_hz == 200.0));
        assert!(ps[1].band_rms[2] > ps[1].band_rms[0]);
        assert!(matches!(builtin_profile("nosuch"), Err(Error::UnknownProfile { .. })));
    }

    #[test]
    fn recipe_position_sensitivity() {
        // Each channel is most sensitive to its own band.
        for p in builtin_profiles() {
            let share = |c: usize, b: usize| p.channel_band_gains[c][b] * p.band_rms[b];
            assert!(share(0, 0) >= share(0, 2), "{}", p.name);
            assert!(share(2, 2) >= share(2, 0), "{}", p.name);
            for (c, row) in p.channel_band_gains.iter().enumerate() {
                let best = (0..3).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
                assert_eq!(best, c, "{}", p.name);
            }
        }
    }

    #[test]
    fn same_spec_same_bits() {
        let spec = GenSpec::new(builtin_profile("small_stone").unwrap(), 2.0, 1440.0, 9);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        for c in 0..3 {
            assert!(a.channel(c).iter().zip(b.channel(c)).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let other = generate(&GenSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a.channel(0), other.channel(0));
    }

    #[test]
    fn nyquist_violations_rejected() {
        let spec = GenSpec::new(builtin_profile("small_stone").unwrap(), 1.0, 300.0, 1);
        assert!(generate(&spec).is_err());
        let mut bands = GenSpec::new(builtin_profile("flat").unwrap(), 1.0, 720.0, 1);
        assert!(generate(&bands).is_err());
        bands.bands = [BandSpec::new(1.0, 50.0), BandSpec::new(100.0, 200.0), BandSpec::new(200.0, 350.0)];
        assert!(generate(&bands).is_ok());
    }

    #[test]
    fn small_stone_has_200hz_line_on_channel_2() {
        let s = generate(&GenSpec::new(builtin_profile("small_stone").unwrap(), 10.0, 1440.0, 3)).unwrap();
        let spec = dft_magnitude(s.channel(1), 1440.0).unwrap();
        let mut sorted = spec.magnitudes.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        assert!(spec.magnitudes[spec.nearest_bin(200.0)] >= 10.0 * median);
    }

    #[test]
    fn band_noise_matches_targets() {
        // Strip tonals, strikes and floor so only shaped noise remains.
        let mut p = builtin_profile("fine_sand").unwrap();
        p.noise_floor_rms = 0.0;
        let s = generate(&GenSpec::new(p.clone(), 10.0, 1440.0, 4)).unwrap();
        for c in 0..3 {
            for (b, band) in DEFAULT_BANDS.iter().enumerate() {
                let target = p.band_rms[b] * p.channel_band_gains[c][b];
                let measured = band_rms(s.channel(c), 1440.0, *band);
                assert!((measured / target - 1.0).abs() < 0.10, "ch{} band{b}", c + 1);
            }
        }
    }

    #[test]
    fn dataset_shape_and_seeds() {
        let ps: Vec<TerrainProfile> = builtin_profiles().into_iter().take(5).collect();
        let spec = DatasetSpec {
            windows_per_class: 6,
            ..DatasetSpec::default()
        };
        let records = generate_dataset(&ps, &spec).unwrap();
        assert_eq!(records.len(), 5);
        assert!(records.iter().all(|r| r.windows.len() == 6));
        assert_eq!(records.iter().map(|r| r.windows.len()).sum::<usize>(), 30);
        assert_eq!(records[3].series.label(), Some("small_pebble"));
        assert_eq!(class_seed(42, 3), 41);
        assert!(generate_dataset(&ps, &DatasetSpec { windows_per_class: 1, ..spec }).is_err());
    }
}
