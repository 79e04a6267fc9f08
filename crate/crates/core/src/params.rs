//! Fiber parameters and the discrete-model channel coefficients.
//!
//! Second-order dispersion is taken to be zero, so the only parameters are
//! the Kerr coefficients, the span length and the group-velocity mismatch
//! `d`. With square pulses of duration `Ts`, the walk-off over the span must
//! be a whole number of symbols, `L * d = M * Ts`.

use crate::{Error, Result};

/// Relative tolerance on `L*d/Ts` being an integer.
pub const MEMORY_TOLERANCE: f64 = 1e-9;

/// One of the two transmitter/receiver pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum User {
    One,
    Two,
}

impl User {
    pub fn index(self) -> u8 {
        match self {
            User::One => 1,
            User::Two => 2,
        }
    }

    pub fn from_index(k: u8) -> Option<User> {
        match k {
            1 => Some(User::One),
            2 => Some(User::Two),
            _ => None,
        }
    }

    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }
}

impl std::fmt::Display for User {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Physical fiber and signalling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Span length.
    pub length: f64,
    /// Group-velocity mismatch `beta_12 - beta_11`.
    pub gvm: f64,
    /// Symbol duration.
    pub ts: f64,
    /// Pulse energy scale.
    pub es: f64,
    /// White-noise spectral density at each receiver.
    pub noise: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        check_nonneg("gamma1", self.gamma1)?;
        check_nonneg("gamma2", self.gamma2)?;
        check_pos("length", self.length)?;
        check_pos("ts", self.ts)?;
        check_pos("es", self.es)?;
        check_nonneg("noise", self.noise)?;
        if !(self.gvm > 0.0) {
            return Err(Error::NonPositiveGvm(self.gvm));
        }
        Ok(())
    }

    pub fn walk_off_distance(&self) -> f64 {
        self.ts / self.gvm
    }
}

/// Phase-rotation coefficients of the discrete-time model.
///
/// `h11`/`h22` are the self-phase terms and `h12`/`h21` the cross-phase
/// terms seen by receiver 1 and receiver 2 respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub h11: f64,
    pub h12: f64,
    pub h21: f64,
    pub h22: f64,
    /// Memory depth in symbols.
    pub memory: usize,
    /// Walk-off distance `Ts/d`; `None` for synthetic coefficients.
    pub walk_off: Option<f64>,
    pub es: f64,
    pub noise: f64,
    pub ts: f64,
}

impl Coefficients {
    /// Self-phase coefficient of `user`.
    pub fn self_phase(&self, user: User) -> f64 {
        match user {
            User::One => self.h11,
            User::Two => self.h22,
        }
    }

    /// Cross-phase coefficient that `user`'s transmitted power induces at
    /// the other receiver; this is the coefficient that sets `user`'s
    /// focusing ring grid.
    pub fn focusing_coupling(&self, user: User) -> f64 {
        match user {
            User::One => self.h21,
            User::Two => self.h12,
        }
    }

    pub fn is_synthetic(&self) -> bool {
        self.walk_off.is_none()
    }
}

/// Derive the channel coefficients from physical parameters.
pub fn derive_coefficients(p: &PhysicalParams) -> Result<Coefficients> {
    p.validate()?;
    let ratio = p.length * p.gvm / p.ts;
    let memory = ratio.round();
    if memory < 1.0 || (ratio - memory).abs() > MEMORY_TOLERANCE * memory {
        return Err(Error::NonIntegerMemory { ratio });
    }
    let lw = p.walk_off_distance();
    let power = p.es / p.ts;
    Ok(Coefficients {
        h11: p.gamma1 * p.length * power,
        h12: 2.0 * p.gamma1 * lw * power,
        h21: 2.0 * p.gamma2 * lw * power,
        h22: p.gamma2 * p.length * power,
        memory: memory as usize,
        walk_off: Some(lw),
        es: p.es,
        noise: p.noise,
        ts: p.ts,
    })
}

/// Construct coefficients directly, without a physical realization.
#[allow(clippy::too_many_arguments)]
pub fn direct_coefficients(
    h11: f64,
    h12: f64,
    h21: f64,
    h22: f64,
    memory: usize,
    es: f64,
    noise: f64,
    ts: f64,
) -> Result<Coefficients> {
    check_nonneg("h11", h11)?;
    check_nonneg("h12", h12)?;
    check_nonneg("h21", h21)?;
    check_nonneg("h22", h22)?;
    if memory < 1 {
        return Err(Error::param("memory", "memory depth must be at least 1"));
    }
    check_pos("es", es)?;
    check_nonneg("noise", noise)?;
    check_pos("ts", ts)?;
    Ok(Coefficients {
        h11,
        h12,
        h21,
        h22,
        memory,
        walk_off: None,
        es,
        noise,
        ts,
    })
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and non-negative, got {v}")))
    }
}

fn check_pos(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and positive, got {v}")))
    }
}
