//! Continuous-time waveform simulation on an oversampled grid.
//!
//! Square pulses are aligned with the grid (`os` samples per symbol), so
//! pulse shaping and the walk-off delay are exact. The nonlinear phases are
//! window integrals of a piecewise-constant intensity and are also exact at
//! grid points. The only approximation is the left-endpoint Riemann sum used
//! for the matched-filter convolution, which is first order in `1/os`.
//!
//! None of this goes through the closed-form discrete model; it is the
//! reference the model is checked against.
//!
//! Grid samples are addressed by an absolute index `s`, with time `s * dt`
//! and `dt = Ts / os`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::dt_model::{ModelVariant, Normalization, ReceiverOutput, SymbolBlock};
use crate::focusing::FrequencySet;
use crate::params::{Coefficients, PhysicalParams};
use crate::rng::stream_rng;
use crate::{Error, Result, User};

pub const MIN_OVERSAMPLING: usize = 8;

/// Complex field samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    start: i64,
    samples: Vec<Complex64>,
    os: usize,
    ts: f64,
    es: f64,
}

impl Waveform {
    /// Absolute index of the first sample.
    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn t0(&self) -> f64 {
        self.start as f64 * self.dt()
    }

    pub fn dt(&self) -> f64 {
        self.ts / self.os as f64
    }

    pub fn oversampling(&self) -> usize {
        self.os
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample at an absolute index, zero off the grid.
    pub fn at(&self, s: i64) -> Complex64 {
        let k = s - self.start;
        if k < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.samples
            .get(k as usize)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Riemann energy `sum |A|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dt()
    }

    fn pulse_height(&self) -> f64 {
        (self.es / self.ts).sqrt()
    }

    fn aligned_with(&self, other: &Waveform) -> bool {
        self.start == other.start
            && self.samples.len() == other.samples.len()
            && self.os == other.os
            && self.ts == other.ts
    }

    /// Add white noise of spectral density `noise` (variance `noise / dt`
    /// per sample).
    pub fn with_white_noise(&self, noise: f64, seed: u64) -> Waveform {
        let sigma = (noise / self.dt() / 2.0).sqrt();
        let mut rng = stream_rng(seed, 0);
        let samples = self
            .samples
            .iter()
            .map(|&a| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                a + Complex64::new(re, im) * sigma
            })
            .collect();
        Waveform {
            samples,
            ..self.clone()
        }
    }
}

/// Zero padding around a block, in symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpan {
    pub lead: usize,
    pub trail: usize,
}

impl GridSpan {
    /// Padding that keeps every phase window and both receivers' sampling
    /// windows on the grid for memory depth `m`.
    pub fn for_memory(m: usize) -> Self {
        GridSpan {
            lead: m,
            trail: 2 * m + 1,
        }
    }
}

/// Square-pulse waveform `sum_m x[m] p(t - m Ts)`, `p = sqrt(Es/Ts)` on
/// `[0, Ts)`.
pub fn build_waveform(x: &SymbolBlock, ts: f64, es: f64, os: usize, span: GridSpan) -> Result<Waveform> {
    if os < MIN_OVERSAMPLING {
        return Err(Error::param(
            "os",
            format!("oversampling must be at least {MIN_OVERSAMPLING}, got {os}"),
        ));
    }
    if !(ts > 0.0) || !(es > 0.0) {
        return Err(Error::param("ts/es", "symbol duration and energy must be positive"));
    }
    let height = (es / ts).sqrt();
    let symbols = span.lead + x.len() + span.trail;
    let start = -((span.lead * os) as i64);
    let samples = (0..symbols * os)
        .map(|k| {
            let s = start + k as i64;
            x.get(s.div_euclid(os as i64)) * height
        })
        .collect();
    Ok(Waveform {
        start,
        samples,
        os,
        ts,
        es,
    })
}

/// The `m`-th pulse's contribution to the normalized cross-phase window
/// integral, `(1/Ts) int_{t-M Ts}^{t} |p(l - m Ts)|^2 dl`.
pub fn psi12m(t: f64, m: i64, memory: usize, es: f64, ts: f64) -> f64 {
    let m = m as f64;
    let mm = memory as f64;
    let scale = es / (ts * ts);
    let v = if t >= m * ts && t < (m + 1.0) * ts {
        t - m * ts
    } else if t >= (m + 1.0) * ts && t < (m + mm) * ts {
        ts
    } else if t >= (m + mm) * ts && t < (m + mm + 1.0) * ts {
        (m + mm + 1.0) * ts - t
    } else {
        0.0
    };
    scale * v
}

/// Phase gains of the zero-dispersion exact solution.
///
/// `phi1(t) = spm1 |A1(t)|^2 + xpm1 int_{t-Ld}^{t} |A2|^2`, and
/// `phi2(t) = spm2 |A2(.)|^2 + xpm2 int_{t}^{t+Ld} |A1|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGains {
    pub spm1: f64,
    pub xpm1: f64,
    pub spm2: f64,
    pub xpm2: f64,
    pub memory: usize,
}

impl PhaseGains {
    /// `spm_k = gamma_k L`, `xpm_k = 2 gamma_k / d`.
    pub fn from_physical(p: &PhysicalParams) -> Result<Self> {
        let c = crate::params::derive_coefficients(p)?;
        Ok(PhaseGains {
            spm1: p.gamma1 * p.length,
            xpm1: 2.0 * p.gamma1 / p.gvm,
            spm2: p.gamma2 * p.length,
            xpm2: 2.0 * p.gamma2 / p.gvm,
            memory: c.memory,
        })
    }

    /// Any coefficient set, including synthetic ones, has a continuous-time
    /// realization with these gains.
    pub fn from_coefficients(c: &Coefficients) -> Self {
        PhaseGains {
            spm1: c.h11 * c.ts / c.es,
            xpm1: c.h12 / c.es,
            spm2: c.h22 * c.ts / c.es,
            xpm2: c.h21 / c.es,
            memory: c.memory,
        }
    }
}

/// Phase values on a contiguous run of grid indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub start: i64,
    pub values: Vec<f64>,
}

fn prefix_energy(w: &Waveform) -> Vec<f64> {
    let mut acc = Vec::with_capacity(w.len() + 1);
    // compensated so that long windows keep full precision
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    acc.push(0.0);
    for a in &w.samples {
        let y = a.norm_sqr() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        acc.push(sum);
    }
    acc
}

fn check_aligned(w1: &Waveform, w2: &Waveform) -> Result<()> {
    if w1.aligned_with(w2) {
        Ok(())
    } else {
        Err(Error::param("waveforms", "fields must share one grid"))
    }
}

fn window(gains: &PhaseGains, w: &Waveform) -> usize {
    gains.memory * w.os
}

/// `phi1` wherever its look-back window lies on the grid.
pub fn phi1_grid(w1: &Waveform, w2: &Waveform, gains: &PhaseGains) -> Result<PhaseTrace> {
    check_aligned(w1, w2)?;
    let win = window(gains, w1);
    let len = w1.len();
    if win >= len {
        return Err(Error::GridTooShort(format!(
            "look-back window of {win} samples does not fit a {len}-sample grid"
        )));
    }
    let dt = w1.dt();
    let cum = prefix_energy(w2);
    let values = (win..len)
        .map(|k| gains.spm1 * w1.samples[k].norm_sqr() + gains.xpm1 * dt * (cum[k] - cum[k - win]))
        .collect();
    Ok(PhaseTrace {
        start: w1.start + win as i64,
        values,
    })
}

/// `phi2` wherever its look-ahead window (and, for the symmetric variant,
/// the delayed self-phase argument) lies on the grid.
pub fn phi2_grid(w1: &Waveform, w2: &Waveform, gains: &PhaseGains, variant: ModelVariant) -> Result<PhaseTrace> {
    check_aligned(w1, w2)?;
    let win = window(gains, w1);
    let len = w1.len();
    if 2 * win >= len {
        return Err(Error::GridTooShort(format!(
            "look-ahead window of {win} samples plus equal delay does not fit a {len}-sample grid"
        )));
    }
    let dt = w1.dt();
    let cum = prefix_energy(w1);
    let values = (win..=len - win)
        .map(|k| {
            let own = match variant {
                ModelVariant::Shifted => w2.samples[k].norm_sqr(),
                ModelVariant::Symmetric => w2.samples[k - win].norm_sqr(),
            };
            gains.spm2 * own + gains.xpm2 * dt * (cum[k + win] - cum[k])
        })
        .collect();
    Ok(PhaseTrace {
        start: w1.start + win as i64,
        values,
    })
}

/// Fields at the end of the span: field 1 is phase rotated in place, field 2
/// is delayed by `M` symbols and then rotated. Outputs cover only the grid
/// indices where their phases are defined.
pub fn propagate(
    w1: &Waveform,
    w2: &Waveform,
    gains: &PhaseGains,
    variant: ModelVariant,
) -> Result<(Waveform, Waveform)> {
    let phi1 = phi1_grid(w1, w2, gains)?;
    let phi2 = phi2_grid(w1, w2, gains, variant)?;
    let delay = window(gains, w1) as i64;

    let out1 = phi1
        .values
        .iter()
        .enumerate()
        .map(|(k, &ph)| w1.at(phi1.start + k as i64) * Complex64::from_polar(1.0, ph))
        .collect();
    let out2 = phi2
        .values
        .iter()
        .enumerate()
        .map(|(k, &ph)| w2.at(phi2.start + k as i64 - delay) * Complex64::from_polar(1.0, ph))
        .collect();

    Ok((
        Waveform {
            start: phi1.start,
            samples: out1,
            ..w1.clone()
        },
        Waveform {
            start: phi2.start,
            samples: out2,
            ..w2.clone()
        },
    ))
}

/// Filter bank `h_f(t) = p*(-t) exp(i 2pi f t/Ts)` sampled at `T_j`.
///
/// Receiver 1 samples at `T_j = j Ts`; receiver 2 at `T_j = (j + M) Ts`,
/// the instant its own symbol `j` arrives after the walk-off delay.
pub fn filter_and_sample(
    r: &Waveform,
    freqs: &FrequencySet,
    receiver: User,
    n: usize,
    memory: usize,
) -> Result<ReceiverOutput> {
    let os = r.os;
    let offset = match receiver {
        User::One => 0,
        User::Two => memory,
    };
    let first = (offset * os) as i64 - r.start;
    let last_end = ((offset + n) * os) as i64 - r.start;
    if n > 0 && (first < 0 || last_end > r.len() as i64) {
        return Err(Error::GridTooShort(format!(
            "receiver {receiver} sampling windows need grid indices [{}, {}) but the received \
             waveform covers [{}, {}); pad the input grid with at least M lead and 2M+1 trail symbols",
            first + r.start,
            last_end + r.start,
            r.start,
            r.start + r.len() as i64
        )));
    }
    let roots: Vec<Complex64> = (0..os)
        .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / os as f64))
        .collect();
    let weight = r.pulse_height() * r.dt();
    Ok(ReceiverOutput::from_fn(
        receiver,
        freqs.clone(),
        Normalization::Physical,
        n,
        |j, f| {
            let base = (first + (j * os) as i64) as usize;
            let window = &r.samples[base..base + os];
            let step = f.rem_euclid(os as i64) as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut idx = 0usize;
            for &s in window {
                acc += s * roots[idx];
                idx += step;
                if idx >= os {
                    idx -= os;
                }
            }
            acc * weight
        },
    ))
}

/// Full continuous-time pipeline for one pair of blocks.
#[allow(clippy::too_many_arguments)]
pub fn oracle_receive(
    x1: &SymbolBlock,
    x2: &SymbolBlock,
    coeffs: &Coefficients,
    f1: &FrequencySet,
    f2: &FrequencySet,
    variant: ModelVariant,
    os: usize,
) -> Result<(ReceiverOutput, ReceiverOutput)> {
    let gains = PhaseGains::from_coefficients(coeffs);
    let n = x1.len().max(x2.len());
    let pad = |x: &SymbolBlock| {
        let mut s = x.symbols().to_vec();
        s.resize(n, Complex64::new(0.0, 0.0));
        SymbolBlock::new(s, x.user())
    };
    let span = GridSpan::for_memory(coeffs.memory);
    let w1 = build_waveform(&pad(x1), coeffs.ts, coeffs.es, os, span)?;
    let w2 = build_waveform(&pad(x2), coeffs.ts, coeffs.es, os, span)?;
    let (r1, r2) = propagate(&w1, &w2, &gains, variant)?;
    Ok((
        filter_and_sample(&r1, f1, User::One, x1.len(), coeffs.memory)?,
        filter_and_sample(&r2, f2, User::Two, x2.len(), coeffs.memory)?,
    ))
}

/// Per-key relative errors `|a - b| / (scale max(|x[j]|, 1e-12))`, where
/// `scale` is `Es` for physical outputs and 1 otherwise.
pub fn compare_detail(
    oracle: &ReceiverOutput,
    model: &ReceiverOutput,
    reference: &SymbolBlock,
    es: f64,
) -> Result<Vec<(usize, i64, f64)>> {
    if !oracle.same_keys(model) {
        return Err(Error::KeyMismatch(format!(
            "receiver {}/{}, {}/{} time indices, {} vs {} frequencies",
            oracle.receiver(),
            model.receiver(),
            oracle.len(),
            model.len(),
            oracle.freq_set().len(),
            model.freq_set().len()
        )));
    }
    if reference.len() != oracle.len() {
        return Err(Error::KeyMismatch(format!(
            "reference block has {} symbols, outputs have {}",
            reference.len(),
            oracle.len()
        )));
    }
    let scale = match oracle.normalization() {
        Normalization::Physical => es,
        Normalization::Normalized => 1.0,
    };
    Ok(oracle
        .iter()
        .zip(model.iter())
        .map(|((j, f, a), (_, _, b))| {
            let denom = scale * reference.get(j as i64).norm().max(1e-12);
            (j, f, (a - b).norm() / denom)
        })
        .collect())
}

/// Largest relative error over all keys.
pub fn compare(oracle: &ReceiverOutput, model: &ReceiverOutput, reference: &SymbolBlock, es: f64) -> Result<f64> {
    Ok(compare_detail(oracle, model, reference, es)?
        .into_iter()
        .fold(0.0, |m, (_, _, e)| m.max(e)))
}
