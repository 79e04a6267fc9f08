//! Python bindings for the `kerrfocus` simulator.

use kerrfocus::capacity::{self, MiEstimate, SweepConfig, SweepMode, SweepRow};
use kerrfocus::ct_oracle;
use kerrfocus::dt_model::{self, ModelOptions, ModelVariant, Normalization, SymbolBlock};
use kerrfocus::focusing::{self, FrequencySet, RingIndexSet, RingStrategy};
use kerrfocus::params::{self, PhysicalParams};
use kerrfocus::{Error, User};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::GridDegenerate(_) | Error::GridTooShort(_) | Error::KeyMismatch(_) | Error::DegenerateConstellation => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn user(k: u8) -> PyResult<User> {
    User::from_index(k).ok_or_else(|| PyValueError::new_err(format!("user must be 1 or 2, got {k}")))
}

fn variant(s: &str) -> PyResult<ModelVariant> {
    match s {
        "symmetric" => Ok(ModelVariant::Symmetric),
        "shifted" => Ok(ModelVariant::Shifted),
        _ => Err(PyValueError::new_err(format!("unknown variant {s:?}"))),
    }
}

fn normalization(s: &str) -> PyResult<Normalization> {
    match s {
        "physical" => Ok(Normalization::Physical),
        "normalized" => Ok(Normalization::Normalized),
        _ => Err(PyValueError::new_err(format!("unknown normalization {s:?}"))),
    }
}

fn strategy(name: &str, rings: Option<Vec<u64>>, c: u64) -> PyResult<RingStrategy> {
    match (name, rings) {
        ("explicit", Some(r)) => Ok(RingStrategy::Explicit(r)),
        ("explicit", None) => Err(PyValueError::new_err("explicit strategy needs `rings`")),
        ("quadratic", _) => Ok(RingStrategy::Quadratic { c }),
        _ => Err(PyValueError::new_err(format!("unknown strategy {name:?}"))),
    }
}

fn freq_set(f: Vec<i64>) -> PyResult<FrequencySet> {
    FrequencySet::new(f).map_err(to_py)
}

#[pyclass(name = "Coefficients", frozen, from_py_object)]
#[derive(Clone)]
struct PyCoefficients(params::Coefficients);

#[pymethods]
impl PyCoefficients {
    #[getter]
    fn h11(&self) -> f64 {
        self.0.h11
    }
    #[getter]
    fn h12(&self) -> f64 {
        self.0.h12
    }
    #[getter]
    fn h21(&self) -> f64 {
        self.0.h21
    }
    #[getter]
    fn h22(&self) -> f64 {
        self.0.h22
    }
    #[getter]
    fn memory(&self) -> usize {
        self.0.memory
    }
    #[getter]
    fn es(&self) -> f64 {
        self.0.es
    }
    #[getter]
    fn noise(&self) -> f64 {
        self.0.noise
    }
    #[getter]
    fn ts(&self) -> f64 {
        self.0.ts
    }
    #[getter]
    fn walk_off(&self) -> Option<f64> {
        self.0.walk_off
    }

    fn __repr__(&self) -> String {
        let c = &self.0;
        format!(
            "Coefficients(h11={}, h12={}, h21={}, h22={}, memory={}, es={}, noise={}, ts={})",
            c.h11, c.h12, c.h21, c.h22, c.memory, c.es, c.noise, c.ts
        )
    }
}

#[pyfunction]
#[pyo3(signature = (gamma1, gamma2, length, gvm, ts, es=1.0, noise=0.0))]
fn derive_coefficients(
    gamma1: f64,
    gamma2: f64,
    length: f64,
    gvm: f64,
    ts: f64,
    es: f64,
    noise: f64,
) -> PyResult<PyCoefficients> {
    let p = PhysicalParams {
        gamma1,
        gamma2,
        length,
        gvm,
        ts,
        es,
        noise,
    };
    params::derive_coefficients(&p).map(PyCoefficients).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (h11, h12, h21, h22, memory, es=1.0, noise=0.0, ts=1.0))]
#[allow(clippy::too_many_arguments)]
fn direct_coefficients(
    h11: f64,
    h12: f64,
    h21: f64,
    h22: f64,
    memory: usize,
    es: f64,
    noise: f64,
    ts: f64,
) -> PyResult<PyCoefficients> {
    params::direct_coefficients(h11, h12, h21, h22, memory, es, noise, ts)
        .map(PyCoefficients)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rings, h_cross, user=1))]
fn ring_powers(rings: Vec<u64>, h_cross: f64, user: u8) -> PyResult<Vec<f64>> {
    let set = RingIndexSet::new(rings, self::user(user)?).map_err(to_py)?;
    focusing::ring_powers(&set, h_cross).map_err(to_py)
}

/// Ring indices for a power budget; `strategy` is "explicit" or "quadratic".
#[pyfunction]
#[pyo3(signature = (power, h_cross, strategy="quadratic", rings=None, c=1, user=1))]
fn select_rings(
    power: f64,
    h_cross: f64,
    strategy: &str,
    rings: Option<Vec<u64>>,
    c: u64,
    user: u8,
) -> PyResult<Vec<u64>> {
    let s = self::strategy(strategy, rings, c)?;
    focusing::select_rings(power, h_cross, &s, self::user(user)?)
        .map(|set| set.indices().to_vec())
        .map_err(to_py)
}

#[pyfunction]
fn difference_set(rings: Vec<u64>) -> PyResult<Vec<i64>> {
    let set = RingIndexSet::new(rings, User::One).map_err(to_py)?;
    Ok(focusing::difference_set(&set).as_slice().to_vec())
}

#[pyfunction]
fn default_phases(power: f64, noise: f64) -> usize {
    focusing::default_phases(power, noise)
}

#[pyclass(name = "RingConstellation", frozen, from_py_object)]
#[derive(Clone)]
struct PyConstellation(focusing::RingConstellation);

#[pymethods]
impl PyConstellation {
    #[getter]
    fn points(&self) -> Vec<Complex64> {
        self.0.points().to_vec()
    }
    #[getter]
    fn ring_indices(&self) -> Vec<u64> {
        self.0.ring_indices().to_vec()
    }
    #[getter]
    fn ring_powers(&self) -> Vec<f64> {
        self.0.ring_powers().to_vec()
    }
    #[getter]
    fn phases_per_ring(&self) -> usize {
        self.0.phases_per_ring()
    }
    #[getter]
    fn h_cross(&self) -> f64 {
        self.0.h_cross()
    }
    fn mean_power(&self) -> f64 {
        self.0.mean_power()
    }
    fn with_phases(&self, phases: usize) -> PyResult<Self> {
        self.0.with_phases(phases).map(Self).map_err(to_py)
    }
    fn __len__(&self) -> usize {
        self.0.len()
    }
    fn __repr__(&self) -> String {
        format!(
            "RingConstellation(rings={:?}, phases={}, h_cross={})",
            self.0.ring_indices(),
            self.0.phases_per_ring(),
            self.0.h_cross()
        )
    }
}

#[pyfunction]
fn build_constellation(rings: Vec<u64>, h_cross: f64, phases: usize) -> PyResult<PyConstellation> {
    let set = RingIndexSet::new(rings, User::One).map_err(to_py)?;
    focusing::build_constellation(&set, h_cross, phases)
        .map(PyConstellation)
        .map_err(to_py)
}

#[pyfunction]
fn u_factor(v: f64, f: i64) -> Complex64 {
    dt_model::u_factor(v, f)
}

type Samples = Vec<(usize, i64, Complex64)>;

fn blocks(x1: Vec<Complex64>, x2: Vec<Complex64>) -> (SymbolBlock, SymbolBlock) {
    (SymbolBlock::new(x1, User::One), SymbolBlock::new(x2, User::Two))
}

/// Both receivers' filter outputs as lists of `(j, f, value)`.
#[pyfunction]
#[pyo3(signature = (x1, x2, f1, f2, coeffs, variant="symmetric", normalization="physical", noise=false, seed=0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    x1: Vec<Complex64>,
    x2: Vec<Complex64>,
    f1: Vec<i64>,
    f2: Vec<i64>,
    coeffs: &PyCoefficients,
    variant: &str,
    normalization: &str,
    noise: bool,
    seed: u64,
) -> PyResult<(Samples, Samples)> {
    let (x1, x2) = blocks(x1, x2);
    let opts = ModelOptions {
        variant: self::variant(variant)?,
        normalization: self::normalization(normalization)?,
        mixed_v2: false,
    };
    let (y1, y2) =
        dt_model::simulate(&x1, &x2, &freq_set(f1)?, &freq_set(f2)?, &coeffs.0, &opts, noise, seed).map_err(to_py)?;
    Ok((y1.iter().collect(), y2.iter().collect()))
}

/// Largest relative model-vs-waveform error at each receiver.
#[pyfunction]
#[pyo3(signature = (x1, x2, f1, f2, coeffs, variant="symmetric", os=1024))]
#[allow(clippy::too_many_arguments)]
fn oracle_compare(
    x1: Vec<Complex64>,
    x2: Vec<Complex64>,
    f1: Vec<i64>,
    f2: Vec<i64>,
    coeffs: &PyCoefficients,
    variant: &str,
    os: usize,
) -> PyResult<(f64, f64)> {
    let (x1, x2) = blocks(x1, x2);
    let (f1, f2) = (freq_set(f1)?, freq_set(f2)?);
    let v = self::variant(variant)?;
    let opts = ModelOptions {
        variant: v,
        ..Default::default()
    };
    let c = &coeffs.0;
    let (m1, m2) = dt_model::simulate(&x1, &x2, &f1, &f2, c, &opts, false, 0).map_err(to_py)?;
    let (o1, o2) = ct_oracle::oracle_receive(&x1, &x2, c, &f1, &f2, v, os).map_err(to_py)?;
    Ok((
        ct_oracle::compare(&o1, &m1, &x1, c.es).map_err(to_py)?,
        ct_oracle::compare(&o2, &m2, &x2, c.es).map_err(to_py)?,
    ))
}

fn estimate(m: MiEstimate) -> (f64, f64) {
    (m.bits, m.std_err)
}

/// `(bits, std_err)` for a uniform input over the constellation.
#[pyfunction]
#[pyo3(signature = (constellation, h_self, noise, samples=100_000, seed=0))]
fn mi_monte_carlo(
    py: Python<'_>,
    constellation: &PyConstellation,
    h_self: f64,
    noise: f64,
    samples: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let c = constellation.0.clone();
    py.detach(move || capacity::mi_monte_carlo(&c, h_self, noise, samples, seed))
        .map(estimate)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (constellation, h_self, noise, samples=100_000, seed=0))]
fn amplitude_only_mi(
    py: Python<'_>,
    constellation: &PyConstellation,
    h_self: f64,
    noise: f64,
    samples: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let c = constellation.0.clone();
    py.detach(move || capacity::amplitude_only_mi(&c, h_self, noise, samples, seed))
        .map(estimate)
        .map_err(to_py)
}

#[pyclass(name = "SweepResult", frozen, get_all)]
struct PySweepResult {
    user: u8,
    amplitude_only: bool,
    /// `(snr_db, P, N, K, Q, bits, std_err)` per grid point.
    rows: Vec<(f64, f64, f64, usize, usize, f64, f64)>,
    slope: f64,
    intercept: f64,
    ci_low: f64,
    ci_high: f64,
    fit_points: usize,
}

/// High-power sweep: `grid` holds P1 values at fixed `noise`.
/// Low-noise sweep: `grid` holds noise values at fixed `p1`, `p2`.
#[pyfunction]
#[pyo3(signature = (
    coeffs, grid, mode="high_power", user=1, noise=1.0, beta=1.0, p1=None, p2=None,
    strategy="quadratic", rings=None, c=1, phases=None, amplitude_only=false, samples=20_000, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    coeffs: &PyCoefficients,
    grid: Vec<f64>,
    mode: &str,
    user: u8,
    noise: f64,
    beta: f64,
    p1: Option<f64>,
    p2: Option<f64>,
    strategy: &str,
    rings: Option<Vec<u64>>,
    c: u64,
    phases: Option<usize>,
    amplitude_only: bool,
    samples: usize,
    seed: u64,
) -> PyResult<PySweepResult> {
    let mode = match mode {
        "high_power" => SweepMode::HighPower {
            p1_grid: grid,
            beta,
            noise,
        },
        "low_noise" => match (p1, p2) {
            (Some(p1), Some(p2)) => SweepMode::LowNoise {
                p1,
                p2,
                noise_grid: grid,
            },
            _ => return Err(PyValueError::new_err("low_noise mode needs p1 and p2")),
        },
        other => return Err(PyValueError::new_err(format!("unknown sweep mode {other:?}"))),
    };
    let cfg = SweepConfig {
        mode,
        user: self::user(user)?,
        strategy: self::strategy(strategy, rings, c)?,
        phases,
        amplitude_only,
        samples,
        seed,
    };
    let co = coeffs.0;
    let res = py.detach(move || capacity::sweep(&cfg, &co)).map_err(to_py)?;
    Ok(PySweepResult {
        user: res.user.index(),
        amplitude_only: res.amplitude_only,
        rows: res
            .rows
            .iter()
            .map(|r| (r.snr_db(), r.power, r.noise, r.rings, r.phases, r.mi.bits, r.mi.std_err))
            .collect(),
        slope: res.fit.slope,
        intercept: res.fit.intercept,
        ci_low: res.fit.ci_low,
        ci_high: res.fit.ci_high,
        fit_points: res.fit.points,
    })
}

/// `(slope, ci_low, ci_high)` of bits against `log2(P/N)` over all points given.
#[pyfunction]
fn prelog_fit(powers: Vec<f64>, noises: Vec<f64>, bits: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if powers.len() != noises.len() || powers.len() != bits.len() {
        return Err(PyValueError::new_err("powers, noises and bits must have equal length"));
    }
    let rows: Vec<SweepRow> = powers
        .iter()
        .zip(&noises)
        .zip(&bits)
        .map(|((&power, &noise), &b)| SweepRow {
            power,
            noise,
            size: 0,
            rings: 0,
            phases: 0,
            mi: MiEstimate {
                bits: b,
                std_err: 0.0,
                samples: 0,
            },
        })
        .collect();
    let fit = capacity::prelog_fit(&rows).map_err(to_py)?;
    Ok((fit.slope, fit.ci_low, fit.ci_high))
}

#[pymodule]
#[pyo3(name = "kerrfocus")]
fn kerrfocus_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCoefficients>()?;
    m.add_class::<PyConstellation>()?;
    m.add_class::<PySweepResult>()?;
    m.add_function(wrap_pyfunction!(derive_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(direct_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(ring_powers, m)?)?;
    m.add_function(wrap_pyfunction!(select_rings, m)?)?;
    m.add_function(wrap_pyfunction!(difference_set, m)?)?;
    m.add_function(wrap_pyfunction!(default_phases, m)?)?;
    m.add_function(wrap_pyfunction!(build_constellation, m)?)?;
    m.add_function(wrap_pyfunction!(u_factor, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_compare, m)?)?;
    m.add_function(wrap_pyfunction!(mi_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude_only_mi, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(prelog_fit, m)?)?;
    Ok(())
}
