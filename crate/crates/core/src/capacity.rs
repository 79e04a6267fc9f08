//! Mutual information of the focused scalar channel and pre-log sweeps.
//!
//! Under interference focusing the active filter of receiver `k` carries
//! `Y = X exp(i h_kk |X|^2) + Z` with `Z ~ CN(0, N)`. Its mutual information
//! lower-bounds the rate of user `k`. The conditional density is known
//! exactly, so the plug-in estimate
//!
//! ```text
//! I ~ mean_s log2( p(y_s|x_s) / (1/|C|) sum_{x'} p(y_s|x') )
//! ```
//!
//! is unbiased up to Monte-Carlo error. For large ring constellations only
//! the points within reach of `y` contribute; the pruning bound keeps the
//! dropped mass below `|C| e^-60` of the kept mass.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dt_model::fmt_float;
use crate::focusing::{build_constellation, default_phases, select_rings, RingConstellation, RingStrategy};
use crate::params::Coefficients;
use crate::rng::{mix_seed, stream_rng};
use crate::{Error, Result, User};

pub const MIN_SAMPLES: usize = 1000;
const CHUNK: usize = 4096;
/// Points whose exponent is this much below the true point's are dropped.
const PRUNE_EXPONENT: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub bits: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Natural-log density of `y` given `x` for the self-rotated AWGN channel.
pub fn log_density(y: Complex64, x: Complex64, h_self: f64, n_eff: f64) -> f64 {
    let mean = x * Complex64::from_polar(1.0, h_self * x.norm_sqr());
    -(PI * n_eff).ln() - (y - mean).norm_sqr() / n_eff
}

struct RingView {
    amps: Vec<f64>,
    // rotation of each ring from self-phase modulation, in [0, 2pi)
    rot: Vec<f64>,
    phases: usize,
}

impl RingView {
    fn new(c: &RingConstellation, h_self: f64) -> Self {
        RingView {
            amps: c.amplitudes().collect(),
            rot: c.ring_powers().iter().map(|p| (h_self * p).rem_euclid(TAU)).collect(),
            phases: c.phases_per_ring(),
        }
    }

    fn point(&self, ring: usize, q: usize) -> Complex64 {
        Complex64::from_polar(self.amps[ring], TAU * q as f64 / self.phases as f64 + self.rot[ring])
    }

    /// `sum_{x'} exp(-(|y - x'|^2 - base) / n)` over every point that can
    /// matter, where `base = |y - x|^2` for the transmitted `x`.
    fn neighbour_sum(&self, y: Complex64, base: f64, n: f64) -> f64 {
        let reach2 = base + PRUNE_EXPONENT * n;
        let reach = reach2.sqrt();
        let r = y.norm();
        let lo = self.amps.partition_point(|&a| a < r - reach);
        let hi = self.amps.partition_point(|&a| a <= r + reach);
        let q = self.phases;
        let step = TAU / q as f64;
        let arg = y.arg();
        let mut total = 0.0;
        for ring in lo..hi {
            let a = self.amps[ring];
            let cos_max = (r * r + a * a - reach2) / (2.0 * r * a);
            let span = if !(cos_max > -1.0) || !cos_max.is_finite() {
                q
            } else {
                let half = cos_max.min(1.0).acos();
                2 * ((half / step).ceil() as usize + 1) + 1
            };
            if span >= q {
                for k in 0..q {
                    total += (-((y - self.point(ring, k)).norm_sqr() - base) / n).exp();
                }
            } else {
                let rel = (arg - self.rot[ring]).rem_euclid(TAU);
                let centre = (rel / step).round() as i64;
                let half = (span / 2) as i64;
                for d in -half..=half {
                    let k = (centre + d).rem_euclid(q as i64) as usize;
                    total += (-((y - self.point(ring, k)).norm_sqr() - base) / n).exp();
                }
            }
        }
        total
    }
}

/// Plug-in Monte-Carlo estimate of `I(X; X e^{i h|X|^2} + Z)` for a uniform
/// input over the constellation.
///
/// Samples are drawn in fixed chunks, each from its own stream, so the
/// estimate does not depend on how rayon schedules them.
pub fn mi_monte_carlo(c: &RingConstellation, h_self: f64, n_eff: f64, samples: usize, seed: u64) -> Result<MiEstimate> {
    if c.is_empty() {
        return Err(Error::DegenerateConstellation);
    }
    if samples < MIN_SAMPLES {
        return Err(Error::param(
            "samples",
            format!("need at least {MIN_SAMPLES}, got {samples}"),
        ));
    }
    if !(n_eff > 0.0) || !n_eff.is_finite() {
        return Err(Error::param(
            "n_eff",
            format!("noise variance must be positive, got {n_eff}"),
        ));
    }
    let view = RingView::new(c, h_self);
    let log2_size = (c.len() as f64).log2();
    let sigma = (n_eff / 2.0).sqrt();
    let rings = view.amps.len();
    let chunks = samples.div_ceil(CHUNK);

    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk as u64);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let (mut sum, mut sum2) = (0.0, 0.0);
            for _ in 0..count {
                let ring = rng.random_range(0..rings);
                let q = rng.random_range(0..view.phases);
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let x = view.point(ring, q);
                let y = x + Complex64::new(re, im) * sigma;
                // same arithmetic as the neighbour sum, so the transmitted
                // point contributes exactly 1
                let base = (y - x).norm_sqr();
                let s = view.neighbour_sum(y, base, n_eff);
                let ratio = log2_size - s.max(1.0).log2();
                sum += ratio;
                sum2 += ratio * ratio;
            }
            (sum, sum2)
        })
        .collect();

    let (sum, sum2) = partial.iter().fold((0.0, 0.0), |(a, b), &(s, s2)| (a + s, b + s2));
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MiEstimate {
        bits: mean,
        std_err: (var / n).sqrt(),
        samples,
    })
}

/// Same rings, one phase per ring: amplitude-only signalling.
pub fn amplitude_only_mi(
    c: &RingConstellation,
    h_self: f64,
    n_eff: f64,
    samples: usize,
    seed: u64,
) -> Result<MiEstimate> {
    if c.is_empty() {
        return Err(Error::DegenerateConstellation);
    }
    mi_monte_carlo(&c.with_phases(1)?, h_self, n_eff, samples, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepMode {
    /// Fixed noise, growing power; user 2's power is `P1^beta`.
    HighPower { p1_grid: Vec<f64>, beta: f64, noise: f64 },
    /// Fixed powers, shrinking noise.
    LowNoise { p1: f64, p2: f64, noise_grid: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub user: User,
    pub strategy: RingStrategy,
    /// Phases per ring; `None` picks [`default_phases`] at each point.
    pub phases: Option<usize>,
    pub amplitude_only: bool,
    pub samples: usize,
    pub seed: u64,
}

pub const MIN_GRID_POINTS: usize = 4;

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let grid = match &self.mode {
            SweepMode::HighPower { p1_grid, noise, .. } => {
                if !(*noise > 0.0) {
                    return Err(Error::param("noise", "sweep noise must be positive"));
                }
                p1_grid
            }
            SweepMode::LowNoise { p1, p2, noise_grid } => {
                if !(*p1 > 0.0 && *p2 > 0.0) {
                    return Err(Error::param("p1/p2", "sweep powers must be positive"));
                }
                noise_grid
            }
        };
        if grid.len() < MIN_GRID_POINTS {
            return Err(Error::GridDegenerate(format!(
                "{} grid points; at least {MIN_GRID_POINTS} are needed to fit a slope",
                grid.len()
            )));
        }
        if grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::param("grid", "grid values must be finite and positive"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            if grid.windows(2).all(|w| w[0] == w[1]) {
                return Err(Error::GridDegenerate("all grid points are equal".into()));
            }
            return Err(Error::param("grid", "grid must be strictly increasing"));
        }
        if self.samples < MIN_SAMPLES {
            return Err(Error::param("samples", format!("need at least {MIN_SAMPLES}")));
        }
        Ok(())
    }

    /// `(P_k, N)` for every grid point, for this config's user.
    pub fn operating_points(&self) -> Vec<(f64, f64)> {
        match &self.mode {
            SweepMode::HighPower { p1_grid, beta, noise } => p1_grid
                .iter()
                .map(|&p1| {
                    let p = match self.user {
                        User::One => p1,
                        User::Two => p1.powf(*beta),
                    };
                    (p, *noise)
                })
                .collect(),
            SweepMode::LowNoise { p1, p2, noise_grid } => {
                let p = match self.user {
                    User::One => *p1,
                    User::Two => *p2,
                };
                noise_grid.iter().map(|&n| (p, n)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub power: f64,
    pub noise: f64,
    pub size: usize,
    pub rings: usize,
    pub phases: usize,
    pub mi: MiEstimate,
}

impl SweepRow {
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.power / self.noise).log10()
    }

    pub fn log2_snr(&self) -> f64 {
        (self.power / self.noise).log2()
    }
}

/// Least-squares slope of bits against `log2(P/N)` with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrelogFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub user: User,
    pub amplitude_only: bool,
    pub rows: Vec<SweepRow>,
    pub fit: PrelogFit,
}

impl SweepResult {
    /// Header `snr_db,P,N,K,Q,bits,std_err`, one row per grid point, then a
    /// footer row `#slope,<slope>,<ci_low>,<ci_high>,<points>,,`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["snr_db", "P", "N", "K", "Q", "bits", "std_err"])?;
        for r in &self.rows {
            w.write_record([
                fmt_float(r.snr_db()),
                fmt_float(r.power),
                fmt_float(r.noise),
                r.rings.to_string(),
                r.phases.to_string(),
                fmt_float(r.mi.bits),
                fmt_float(r.mi.std_err),
            ])?;
        }
        w.write_record([
            "#slope".to_string(),
            fmt_float(self.fit.slope),
            fmt_float(self.fit.ci_low),
            fmt_float(self.fit.ci_high),
            self.fit.points.to_string(),
            String::new(),
            String::new(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Ordinary least squares over the rows.
pub fn prelog_fit(rows: &[SweepRow]) -> Result<PrelogFit> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.log2_snr(), r.mi.bits)).collect();
    fit_line(&pts)
}

pub(crate) fn fit_line(pts: &[(f64, f64)]) -> Result<PrelogFit> {
    if pts.len() < MIN_GRID_POINTS {
        return Err(Error::GridDegenerate(format!(
            "{} points; at least {MIN_GRID_POINTS} are needed",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 1e-12 * mx.abs().max(1.0).powi(2)) {
        return Err(Error::GridDegenerate("abscissae are not distinct".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = n - 2.0;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(f64::INFINITY);
    Ok(PrelogFit {
        slope,
        intercept,
        ci_low: slope - t * se,
        ci_high: slope + t * se,
        points: pts.len(),
    })
}

/// Rows used for the asymptotic slope: the upper half of the grid, but never
/// fewer than four.
pub fn fit_window(rows: &[SweepRow]) -> &[SweepRow] {
    let keep = rows.len().div_ceil(2).max(MIN_GRID_POINTS).min(rows.len());
    &rows[rows.len() - keep..]
}

/// Estimate the focused rate of one user over a power or noise grid.
pub fn sweep(cfg: &SweepConfig, coeffs: &Coefficients) -> Result<SweepResult> {
    cfg.validate()?;
    let h_cross = coeffs.focusing_coupling(cfg.user);
    let h_self = coeffs.self_phase(cfg.user);
    let rows = cfg
        .operating_points()
        .into_par_iter()
        .enumerate()
        .map(|(i, (power, noise))| {
            let set = select_rings(power, h_cross, &cfg.strategy, cfg.user)?;
            let phases = if cfg.amplitude_only {
                1
            } else {
                cfg.phases.unwrap_or_else(|| default_phases(power, noise))
            };
            let constellation = build_constellation(&set, h_cross, phases)?;
            let mi = mi_monte_carlo(&constellation, h_self, noise, cfg.samples, mix_seed(cfg.seed, i as u64))?;
            Ok(SweepRow {
                power,
                noise,
                size: constellation.len(),
                rings: set.len(),
                phases,
                mi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = prelog_fit(fit_window(&rows))?;
    Ok(SweepResult {
        user: cfg.user,
        amplitude_only: cfg.amplitude_only,
        rows,
        fit,
    })
}
