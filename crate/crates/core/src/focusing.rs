//! Interference-focusing ring constellations.
//!
//! If every power level of user `k` makes the cross-phase rotation it
//! induces at the other receiver a whole multiple of `2*pi`, the XPM term
//! disappears from the other user's signal. The allowed powers are
//! `2*pi*n/h` for positive integers `n`. The difference set of the ring
//! indices is the set of frequency offsets the other receiver's filter bank
//! has to cover.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::{Error, Result, User};

/// Relative tolerance used when checking the focusing congruence.
pub const CONGRUENCE_TOLERANCE: f64 = 1e-9;

/// Selected ring indices of one user, strictly increasing and positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingIndexSet {
    indices: Vec<u64>,
    owner: User,
}

impl RingIndexSet {
    pub fn new(indices: Vec<u64>, owner: User) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidRingSet("ring set is empty".into()));
        }
        if indices[0] == 0 {
            return Err(Error::InvalidRingSet("ring indices must be at least 1".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidRingSet(format!(
                "ring indices must be strictly increasing, got {indices:?}"
            )));
        }
        Ok(RingIndexSet { indices, owner })
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn owner(&self) -> User {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Average power under a uniform distribution over the rings.
    pub fn mean_power(&self, h_cross: f64) -> f64 {
        let mean = self.indices.iter().map(|&n| n as f64).sum::<f64>() / self.len() as f64;
        TAU * mean / h_cross
    }
}

/// Normalized filter-bank frequencies, symmetric about zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrequencySet(Vec<i64>);

impl FrequencySet {
    /// Build from arbitrary integers; rejects sets that are not symmetric
    /// or that do not contain zero.
    pub fn new(frequencies: impl IntoIterator<Item = i64>) -> Result<Self> {
        let set: BTreeSet<i64> = frequencies.into_iter().collect();
        if !set.contains(&0) {
            return Err(Error::param("frequencies", "frequency set must contain 0"));
        }
        if set.iter().any(|f| !set.contains(&-f)) {
            return Err(Error::param("frequencies", "frequency set must be symmetric about 0"));
        }
        Ok(FrequencySet(set.into_iter().collect()))
    }

    /// The contiguous set `-width..=width`.
    pub fn contiguous(width: u64) -> Self {
        let w = width as i64;
        FrequencySet((-w..=w).collect())
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, f: i64) -> bool {
        self.0.binary_search(&f).is_ok()
    }

    pub fn position(&self, f: i64) -> Option<usize> {
        self.0.binary_search(&f).ok()
    }
}

/// How a user's rings are picked under its power budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RingStrategy {
    Explicit(Vec<u64>),
    /// Indices `c * k^2` for `k = 1..=K` with `K` as large as the power
    /// budget allows; the ring amplitudes are then equally spaced.
    Quadratic {
        c: u64,
    },
}

/// Allowed ring powers `2*pi*n/h_cross`, in the order of `n_set`.
pub fn ring_powers(n_set: &RingIndexSet, h_cross: f64) -> Result<Vec<f64>> {
    check_coupling(h_cross)?;
    Ok(n_set.indices.iter().map(|&n| TAU * n as f64 / h_cross).collect())
}

/// Select a ring set whose uniform average power does not exceed `power`.
pub fn select_rings(power: f64, h_cross: f64, strategy: &RingStrategy, owner: User) -> Result<RingIndexSet> {
    if !(power > 0.0) {
        return Err(Error::param("power", format!("must be positive, got {power}")));
    }
    check_coupling(h_cross)?;
    // absorbs rounding when the budget is met with equality
    let budget = power * (1.0 + 1e-12);
    match strategy {
        RingStrategy::Explicit(indices) => {
            let set =
                RingIndexSet::new(indices.clone(), owner).map_err(|e| Error::InvalidExplicitSet(e.to_string()))?;
            let mean = set.mean_power(h_cross);
            if mean > budget {
                return Err(Error::InvalidExplicitSet(format!(
                    "average power {mean} of rings {indices:?} exceeds budget {power}"
                )));
            }
            Ok(set)
        }
        RingStrategy::Quadratic { c } => {
            if *c == 0 {
                return Err(Error::param("c", "quadratic ring spacing must be at least 1"));
            }
            let unit = TAU * *c as f64 / h_cross;
            // mean of k^2 over k = 1..=K
            let mean_power = |k: u64| unit * ((k + 1) * (2 * k + 1)) as f64 / 6.0;
            if mean_power(1) > budget {
                return Err(Error::InfeasiblePower {
                    power,
                    required: mean_power(1),
                });
            }
            let mut k = 1;
            while mean_power(k + 1) <= budget {
                k += 1;
            }
            RingIndexSet::new((1..=k).map(|i| c * i * i).collect(), owner)
        }
    }
}

/// All pairwise differences of the ring indices, sorted and deduplicated.
pub fn difference_set(n_set: &RingIndexSet) -> FrequencySet {
    let idx = &n_set.indices;
    let set: BTreeSet<i64> = idx
        .iter()
        .flat_map(|&a| idx.iter().map(move |&b| a as i64 - b as i64))
        .collect();
    FrequencySet(set.into_iter().collect())
}

/// Default phase count per ring, `max(4, round(pi * sqrt(P/N)))`.
///
/// Phase resolution then grows at the same rate as amplitude resolution.
/// Without noise there is nothing to scale against and 4 is returned.
pub fn default_phases(power: f64, noise: f64) -> usize {
    if !(noise > 0.0) || !(power > 0.0) {
        return 4;
    }
    let q = (std::f64::consts::PI * (power / noise).sqrt()).round();
    (q as usize).max(4)
}

/// Ring constellation with `phases` equally spaced points on each ring.
#[derive(Debug, Clone, PartialEq)]
pub struct RingConstellation {
    ring_indices: Vec<u64>,
    ring_powers: Vec<f64>,
    h_cross: f64,
    phases: usize,
    points: Vec<Complex64>,
}

impl RingConstellation {
    pub fn ring_indices(&self) -> &[u64] {
        &self.ring_indices
    }

    pub fn ring_powers(&self) -> &[f64] {
        &self.ring_powers
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.ring_powers.iter().map(|p| p.sqrt())
    }

    pub fn h_cross(&self) -> f64 {
        self.h_cross
    }

    pub fn phases_per_ring(&self) -> usize {
        self.phases
    }

    /// Points in ring-major order: ring `k`, phase `q` is at `k * Q + q`.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_rings(&self) -> usize {
        self.ring_powers.len()
    }

    pub fn mean_power(&self) -> f64 {
        self.ring_powers.iter().sum::<f64>() / self.num_rings() as f64
    }

    /// Same rings, a different number of phases.
    pub fn with_phases(&self, phases: usize) -> Result<Self> {
        build_from_parts(self.ring_indices.clone(), self.h_cross, phases)
    }

    /// Whether `h_cross * |x|^2` is a whole multiple of `2*pi`.
    pub fn satisfies_congruence(&self, x: Complex64) -> bool {
        is_focused(x, self.h_cross)
    }
}

/// `h_cross * |x|^2` is within relative tolerance of a multiple of `2*pi`.
pub fn is_focused(x: Complex64, h_cross: f64) -> bool {
    let turns = h_cross * x.norm_sqr() / TAU;
    (turns - turns.round()).abs() <= CONGRUENCE_TOLERANCE * turns.max(1.0)
}

pub fn build_constellation(n_set: &RingIndexSet, h_cross: f64, phases: usize) -> Result<RingConstellation> {
    build_from_parts(n_set.indices.clone(), h_cross, phases)
}

fn build_from_parts(ring_indices: Vec<u64>, h_cross: f64, phases: usize) -> Result<RingConstellation> {
    check_coupling(h_cross)?;
    if phases < 1 {
        return Err(Error::param("phases", "need at least one phase per ring"));
    }
    let ring_powers: Vec<f64> = ring_indices.iter().map(|&n| TAU * n as f64 / h_cross).collect();
    let unit: Vec<Complex64> = (0..phases)
        .map(|q| Complex64::from_polar(1.0, TAU * q as f64 / phases as f64))
        .collect();
    let points = ring_powers
        .iter()
        .flat_map(|p| {
            let a = p.sqrt();
            unit.iter().map(move |u| u * a)
        })
        .collect();
    Ok(RingConstellation {
        ring_indices,
        ring_powers,
        h_cross,
        phases,
        points,
    })
}

fn check_coupling(h_cross: f64) -> Result<()> {
    if h_cross == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    if !(h_cross.is_finite() && h_cross > 0.0) {
        return Err(Error::param("h_cross", format!("must be positive, got {h_cross}")));
    }
    Ok(())
}
