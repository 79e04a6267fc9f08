//! Closed-form discrete-time two-user channel.
//!
//! Receiver `k` runs a bank of frequency-shifted matched filters, indexed by
//! integer normalized frequency `f`. At time `j` filter `f` of receiver 1
//! outputs
//!
//! ```text
//! Y1f[j] = X1[j] exp(i h11 |X1[j]|^2 + i h12 sum_{r=1..M} |X2[j-r]|^2) U(V1[j], f) + Z
//! V1[j]  = h12 (|X2[j]|^2 - |X2[j-M]|^2) / 2pi
//! ```
//!
//! and receiver 2 mirrors this with look-ahead indices, since the second
//! field walks off behind the first. `U(v, f)` is the leakage of a linear
//! phase ramp of `v` turns into the `f`-th matched filter.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::focusing::FrequencySet;
use crate::params::Coefficients;
use crate::rng::stream_rng;
use crate::{Error, Result, User};

/// Below this `|v - f|` the leakage factor is evaluated by series expansion.
pub const SERIES_THRESHOLD: f64 = 1e-8;

/// Finite complex symbol sequence, zero outside `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    symbols: Vec<Complex64>,
    user: User,
}

impl SymbolBlock {
    pub fn new(symbols: Vec<Complex64>, user: User) -> Self {
        SymbolBlock { symbols, user }
    }

    pub fn zeros(len: usize, user: User) -> Self {
        SymbolBlock::new(vec![Complex64::new(0.0, 0.0); len], user)
    }

    pub fn user(&self) -> User {
        self.user
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    /// Symbol at a signed index; zero outside the block.
    pub fn get(&self, i: i64) -> Complex64 {
        if i < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.symbols
            .get(i as usize)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn power(&self, i: i64) -> f64 {
        self.get(i).norm_sqr()
    }

    /// Shift right by `s` symbols, zero-filling the front.
    pub fn delayed(&self, s: usize) -> SymbolBlock {
        let mut symbols = vec![Complex64::new(0.0, 0.0); s];
        symbols.extend_from_slice(&self.symbols);
        SymbolBlock::new(symbols, self.user)
    }
}

/// Which time index carries receiver 2's self-phase term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelVariant {
    /// SPM on `X2[j+M]`, the symbol at receiver 2's sampling instant.
    Shifted,
    /// SPM on the signal's own symbol `X2[j]`.
    #[default]
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Signal scaled by `Es`, filter noise variance `N * Es`.
    #[default]
    Physical,
    /// `Es` divided out: unit-gain signal, noise variance `N / Es`.
    Normalized,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Physical => "physical",
            Normalization::Normalized => "normalized",
        }
    }
}

impl ModelVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::Shifted => "shifted",
            ModelVariant::Symmetric => "symmetric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelOptions {
    pub variant: ModelVariant,
    pub normalization: Normalization,
    /// Use the offset `h21 (|X1[j+2M]|^2 - |X2[j+M]|^2) / 2pi` for
    /// receiver 2 instead of the X1-only difference. Debugging aid only.
    pub mixed_v2: bool,
}

/// Filter-bank samples of one receiver, keyed by `(j, f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    receiver: User,
    freq_set: FrequencySet,
    normalization: Normalization,
    len: usize,
    // row-major: j then frequency position
    values: Vec<Complex64>,
}

impl ReceiverOutput {
    pub fn from_fn(
        receiver: User,
        freq_set: FrequencySet,
        normalization: Normalization,
        len: usize,
        mut value: impl FnMut(usize, i64) -> Complex64,
    ) -> Self {
        let mut values = Vec::with_capacity(len * freq_set.len());
        for j in 0..len {
            for &f in freq_set.as_slice() {
                values.push(value(j, f));
            }
        }
        ReceiverOutput {
            receiver,
            freq_set,
            normalization,
            len,
            values,
        }
    }

    pub fn receiver(&self) -> User {
        self.receiver
    }

    pub fn freq_set(&self) -> &FrequencySet {
        &self.freq_set
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Number of time indices.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, j: usize, f: i64) -> Option<Complex64> {
        if j >= self.len {
            return None;
        }
        let pos = self.freq_set.position(f)?;
        Some(self.values[j * self.freq_set.len() + pos])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        let width = self.freq_set.len();
        self.values.iter().enumerate().map(move |(k, &v)| {
            let j = k / width;
            (j, self.freq_set.as_slice()[k % width], v)
        })
    }

    /// Whether both outputs are keyed identically.
    pub fn same_keys(&self, other: &ReceiverOutput) -> bool {
        self.receiver == other.receiver
            && self.len == other.len
            && self.freq_set == other.freq_set
            && self.normalization == other.normalization
    }

    /// CSV with header `j,f,re,im,receiver,normalization`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "f", "re", "im", "receiver", "normalization"])?;
        for (j, f, v) in self.iter() {
            w.write_record([
                j.to_string(),
                f.to_string(),
                fmt_float(v.re),
                fmt_float(v.im),
                self.receiver.to_string(),
                self.normalization.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Floats in output files carry 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Frequency offset of receiver 1 at time `j`, in filter-spacing units.
pub fn v1(j: i64, x2: &SymbolBlock, h12: f64, memory: usize) -> f64 {
    h12 * (x2.power(j) - x2.power(j - memory as i64)) / TAU
}

/// Frequency offset of receiver 2 at time `j`: the first field's power
/// difference across the look-ahead window.
pub fn v2(j: i64, x1: &SymbolBlock, h21: f64, memory: usize) -> f64 {
    let m = memory as i64;
    h21 * (x1.power(j + 2 * m) - x1.power(j + m)) / TAU
}

/// Receiver-2 offset from the user-mixing difference `|X1[j+2M]|^2 - |X2[j+M]|^2`.
pub fn v2_mixed(j: i64, x1: &SymbolBlock, x2: &SymbolBlock, h21: f64, memory: usize) -> f64 {
    let m = memory as i64;
    h21 * (x1.power(j + 2 * m) - x2.power(j + m)) / TAU
}

/// Matched-filter leakage `(exp(i 2pi (v-f)) - 1) / (i 2pi (v-f))`, and 1
/// at `v = f`.
pub fn u_factor(v: f64, f: i64) -> Complex64 {
    let delta = v - f as f64;
    if delta == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let theta = TAU * delta;
    if delta.abs() < SERIES_THRESHOLD {
        // 1 + i theta/2 - theta^2/6
        return Complex64::new(1.0 - theta * theta / 6.0, theta / 2.0);
    }
    // exp(i r) - 1 = 2i sin(r/2) exp(i r/2), with r reduced to the nearest
    // whole turn so that integer offsets give an exact zero
    let reduced = TAU * (delta - delta.round());
    Complex64::from_polar(2.0 * (reduced / 2.0).sin() / theta, reduced / 2.0)
}

fn scale(coeffs: &Coefficients, norm: Normalization) -> f64 {
    match norm {
        Normalization::Physical => coeffs.es,
        Normalization::Normalized => 1.0,
    }
}

pub fn rx1_noiseless(
    j: usize,
    f: i64,
    x1: &SymbolBlock,
    x2: &SymbolBlock,
    coeffs: &Coefficients,
    norm: Normalization,
) -> Complex64 {
    let j = j as i64;
    let x = x1.get(j);
    if x == Complex64::new(0.0, 0.0) {
        return x;
    }
    let m = coeffs.memory as i64;
    let xpm: f64 = (1..=m).map(|r| x2.power(j - r)).sum();
    let phase = coeffs.h11 * x.norm_sqr() + coeffs.h12 * xpm;
    let u = u_factor(v1(j, x2, coeffs.h12, coeffs.memory), f);
    x * scale(coeffs, norm) * Complex64::from_polar(1.0, phase) * u
}

pub fn rx2_noiseless(
    j: usize,
    f: i64,
    x1: &SymbolBlock,
    x2: &SymbolBlock,
    coeffs: &Coefficients,
    opts: &ModelOptions,
) -> Complex64 {
    let j = j as i64;
    let x = x2.get(j);
    if x == Complex64::new(0.0, 0.0) {
        return x;
    }
    let m = coeffs.memory as i64;
    let xpm: f64 = (1..=m).map(|r| x1.power(j + 2 * m - r)).sum();
    let spm = match opts.variant {
        ModelVariant::Shifted => x2.power(j + m),
        ModelVariant::Symmetric => x.norm_sqr(),
    };
    let phase = coeffs.h21 * xpm + coeffs.h22 * spm;
    let v = if opts.mixed_v2 {
        v2_mixed(j, x1, x2, coeffs.h21, coeffs.memory)
    } else {
        v2(j, x1, coeffs.h21, coeffs.memory)
    };
    x * scale(coeffs, opts.normalization) * Complex64::from_polar(1.0, phase) * u_factor(v, f)
}

/// Variance of one filter-output noise sample.
pub fn noise_variance(coeffs: &Coefficients, norm: Normalization) -> f64 {
    match norm {
        Normalization::Physical => coeffs.noise * coeffs.es,
        Normalization::Normalized => coeffs.noise / coeffs.es,
    }
}

/// Run both receivers over the blocks.
///
/// Noise samples are independent circularly-symmetric Gaussians, drawn from
/// a stream keyed by `(seed, receiver, j)`, so the result depends only on
/// the seed.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    x1: &SymbolBlock,
    x2: &SymbolBlock,
    f1: &FrequencySet,
    f2: &FrequencySet,
    coeffs: &Coefficients,
    opts: &ModelOptions,
    noise_on: bool,
    seed: u64,
) -> Result<(ReceiverOutput, ReceiverOutput)> {
    if x1.user() != User::One || x2.user() != User::Two {
        return Err(Error::param("blocks", "expected blocks of user 1 and user 2 in order"));
    }
    let norm = opts.normalization;
    let sigma = (noise_variance(coeffs, norm) / 2.0).sqrt();
    let noisy = noise_on && sigma > 0.0;

    let run = |receiver: User, freqs: &FrequencySet, len: usize| {
        let mut out = ReceiverOutput::from_fn(receiver, freqs.clone(), norm, len, |j, f| match receiver {
            User::One => rx1_noiseless(j, f, x1, x2, coeffs, norm),
            User::Two => rx2_noiseless(j, f, x1, x2, coeffs, opts),
        });
        if noisy {
            let width = freqs.len();
            for (j, row) in out.values.chunks_mut(width).enumerate() {
                let mut rng = stream_rng(seed, (u64::from(receiver.index()) << 48) | j as u64);
                for v in row {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *v += Complex64::new(re, im) * sigma;
                }
            }
        }
        out
    };

    Ok((run(User::One, f1, x1.len()), run(User::Two, f2, x2.len())))
}
