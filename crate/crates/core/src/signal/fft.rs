//! Discrete Fourier transform.
//!
//! Power-of-two lengths use an iterative radix-2 decimation-in-time transform
//! with bit-reversal permutation. Other lengths are mapped onto a power-of-two
//! circular convolution with Bluestein's chirp-z identity, so every length gets
//! the exact length-`n` DFT in `O(n log n)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Per-thread tables are dropped wholesale once this many lengths are cached.
const PLAN_CACHE_LIMIT: usize = 64;

struct BluesteinPlan {
    m: usize,
    chirp: Vec<Complex64>,
    /// Transform of the conjugate chirp kernel, length `m`.
    kernel: Vec<Complex64>,
}

thread_local! {
    static TWIDDLES: RefCell<HashMap<usize, Rc<Vec<Complex64>>>> = RefCell::new(HashMap::new());
    static PLANS: RefCell<HashMap<usize, Rc<BluesteinPlan>>> = RefCell::new(HashMap::new());
}

fn cached<T>(
    cache: &'static std::thread::LocalKey<RefCell<HashMap<usize, Rc<T>>>>,
    n: usize,
    build: impl FnOnce(usize) -> T,
) -> Rc<T> {
    if let Some(hit) = cache.with(|c| c.borrow().get(&n).cloned()) {
        return hit;
    }
    let value = Rc::new(build(n));
    cache.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= PLAN_CACHE_LIMIT {
            c.clear();
        }
        c.insert(n, Rc::clone(&value));
    });
    value
}

/// `exp(i theta)` through `libm`, so tables are identical on every platform.
fn unit(theta: f64) -> Complex64 {
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n / 2)
        .map(|k| unit(-2.0 * PI * k as f64 / n as f64))
        .collect()
}

fn radix2(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let table = cached(&TWIDDLES, n, twiddles);
    let mut half = 1;
    while half < n {
        let step = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let w = table[k * step];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        half *= 2;
    }
}

fn bluestein_plan(n: usize) -> BluesteinPlan {
    let m = (2 * n - 1).next_power_of_two();
    // exp(-i pi k^2 / n); k^2 is reduced mod 2n first so the angle stays small.
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
            unit(-PI * k2 / n as f64)
        })
        .collect();
    let mut kernel = vec![Complex64::new(0.0, 0.0); m];
    kernel[0] = chirp[0].conj();
    for k in 1..n {
        kernel[k] = chirp[k].conj();
        kernel[m - k] = chirp[k].conj();
    }
    radix2(&mut kernel);
    BluesteinPlan { m, chirp, kernel }
}

fn bluestein(buf: &mut [Complex64]) {
    let n = buf.len();
    let plan = cached(&PLANS, n, bluestein_plan);
    let mut a = vec![Complex64::new(0.0, 0.0); plan.m];
    for k in 0..n {
        a[k] = buf[k] * plan.chirp[k];
    }
    radix2(&mut a);
    for (x, y) in a.iter_mut().zip(&plan.kernel) {
        *x *= y;
    }
    inverse_radix2(&mut a);
    for k in 0..n {
        buf[k] = a[k] * plan.chirp[k];
    }
}

fn inverse_radix2(buf: &mut [Complex64]) {
    for v in buf.iter_mut() {
        *v = v.conj();
    }
    radix2(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v = v.conj() * scale;
    }
}

/// Forward DFT, `X[k] = sum_t x[t] exp(-2 pi i k t / n)`, for any length.
pub fn fft_in_place(buf: &mut [Complex64]) {
    match buf.len() {
        0 | 1 => {}
        n if n.is_power_of_two() => radix2(buf),
        _ => bluestein(buf),
    }
}

/// Inverse DFT including the `1/n` normalisation.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    for v in buf.iter_mut() {
        *v = v.conj();
    }
    fft_in_place(buf);
    let scale = 1.0 / buf.len().max(1) as f64;
    for v in buf.iter_mut() {
        *v = v.conj() * scale;
    }
}

/// One-sided magnitude spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Hz per bin, `sample_rate / n`.
    pub bin_resolution_hz: f64,
    /// `|X[k]|` for `k = 0..=n/2`.
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_resolution_hz
    }

    /// Bin whose centre frequency is closest to `hz`.
    pub fn nearest_bin(&self, hz: f64) -> usize {
        let bin = (hz / self.bin_resolution_hz).round().max(0.0) as usize;
        bin.min(self.magnitudes.len() - 1)
    }
}

/// Magnitude spectrum of a real signal.
pub fn dft_magnitude(samples: &[f64], sample_rate_hz: f64) -> Result<Spectrum> {
    if samples.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "spectrum needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("spectrum input sample {i}")));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_in_place(&mut buf);
    Ok(Spectrum {
        bin_resolution_hz: sample_rate_hz / n as f64,
        magnitudes: buf[..=n / 2].iter().map(|c| c.norm()).collect(),
    })
}
