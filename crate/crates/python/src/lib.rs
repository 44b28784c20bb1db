use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use speiser::cli::{self, ModelKind, RunConfig};
use speiser::counting::{counting_sample, estimate_order, log_radii};
use speiser::elliptic;
use speiser::mcmullen::{self, NestedCoverSpec};
use speiser::models::ModelFunction;
use speiser::orbits::{self, Classification, Schedule};
use speiser::selftest::{run as run_selftest, SelftestOptions};
use speiser::sphere::{ExtendedComplex, PlanarRegion};

fn err(e: speiser::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Finite values as `complex`, infinity as `None`.
fn extended(w: ExtendedComplex) -> Option<Complex64> {
    match w {
        ExtendedComplex::Finite(z) => Some(z),
        ExtendedComplex::Infinity => None,
    }
}

/// `"exp"` (the default), `"inf"`, a constant radius or a list of radii.
fn schedule(spec: Option<&Bound<'_, PyAny>>) -> PyResult<Schedule> {
    let Some(spec) = spec else {
        return Ok(Schedule::Exponential);
    };
    if let Ok(s) = spec.extract::<String>() {
        return match s.as_str() {
            "exp" => Ok(Schedule::Exponential),
            "inf" => Ok(Schedule::Infinite),
            _ => Err(PyValueError::new_err(format!("unknown schedule '{s}'"))),
        };
    }
    if let Ok(r) = spec.extract::<f64>() {
        return Ok(Schedule::Constant(r));
    }
    Ok(Schedule::Explicit(spec.extract::<Vec<f64>>()?))
}

fn classification(c: &Classification) -> (&'static str, usize) {
    match *c {
        Classification::Escaping { depth } => ("escaping", depth),
        Classification::Prepole { step } => ("prepole", step),
        Classification::Bounded => ("bounded", 0),
        Classification::Undetermined { depth } => ("undetermined", depth),
    }
}

/// A period lattice `omega1 Z + omega2 Z`.
#[pyclass]
struct Lattice {
    inner: elliptic::Lattice,
}

#[pymethods]
impl Lattice {
    #[new]
    #[pyo3(signature = (omega1=Complex64::new(1.0, 0.0), omega2=Complex64::new(0.0, 1.0)))]
    fn new(omega1: Complex64, omega2: Complex64) -> PyResult<Self> {
        Ok(Self { inner: elliptic::Lattice::new(omega1, omega2).map_err(err)? })
    }

    #[getter]
    fn omega1(&self) -> Complex64 {
        self.inner.omega1()
    }

    #[getter]
    fn omega2(&self) -> Complex64 {
        self.inner.omega2()
    }

    #[getter]
    fn tau(&self) -> Complex64 {
        self.inner.tau()
    }

    #[getter]
    fn g2(&self) -> Complex64 {
        self.inner.g2()
    }

    #[getter]
    fn g3(&self) -> Complex64 {
        self.inner.g3()
    }

    #[getter]
    fn cell_area(&self) -> f64 {
        self.inner.cell_area()
    }

    /// `(lattice point, remainder)` with the remainder in the base cell.
    fn reduce(&self, z: Complex64) -> (Complex64, Complex64) {
        self.inner.reduce(z)
    }

    fn points_in_disk(&self, center: Complex64, r: f64) -> Vec<Complex64> {
        self.inner.points_in_disk(center, r)
    }

    fn __repr__(&self) -> String {
        format!("Lattice({}, {})", self.inner.omega1(), self.inner.omega2())
    }
}

/// The Weierstrass function of a lattice.
#[pyclass]
struct Weierstrass {
    inner: elliptic::EllipticFunction,
}

#[pymethods]
impl Weierstrass {
    #[new]
    #[pyo3(signature = (lattice, truncation=None, pole_epsilon=None))]
    fn new(lattice: &Lattice, truncation: Option<usize>, pole_epsilon: Option<f64>) -> PyResult<Self> {
        let default = elliptic::EllipticFunction::new(lattice.inner.clone());
        let inner = elliptic::EllipticFunction::with_parameters(
            lattice.inner.clone(),
            truncation.unwrap_or(default.truncation()),
            pole_epsilon.unwrap_or(default.pole_epsilon()),
        )
        .map_err(err)?;
        Ok(Self { inner })
    }

    /// `wp(z)`, or `None` at a pole.
    fn wp(&self, z: Complex64) -> Option<Complex64> {
        extended(self.inner.wp(z))
    }

    fn wp_prime(&self, z: Complex64) -> Option<Complex64> {
        extended(self.inner.wp_prime(z))
    }

    /// `wp` at the half-periods `omega1/2`, `(omega1+omega2)/2`, `omega2/2`.
    fn critical_values(&self) -> (Complex64, Complex64, Complex64) {
        let [a, b, c] = self.inner.critical_values().values;
        (a, b, c)
    }
}

/// A model function built from `key = value` configuration text.
#[pyclass]
struct Model {
    inner: ModelFunction,
}

fn build(cfg: &RunConfig) -> PyResult<Model> {
    Ok(Model { inner: cfg.build_model().map_err(err)? })
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (config=""))]
    fn new(config: &str) -> PyResult<Self> {
        build(&RunConfig::parse(config).map_err(err)?)
    }

    #[staticmethod]
    #[pyo3(signature = (omega1=Complex64::new(1.0, 0.0), omega2=Complex64::new(0.0, 1.0)))]
    fn plain(omega1: Complex64, omega2: Complex64) -> PyResult<Self> {
        build(&RunConfig { model: ModelKind::Plain, omega1, omega2, ..RunConfig::default() })
    }

    #[staticmethod]
    #[pyo3(signature = (omega1=Complex64::new(1.0, 0.0), omega2=Complex64::new(0.0, 1.0), offset=None))]
    fn wpexp(omega1: Complex64, omega2: Complex64, offset: Option<Complex64>) -> PyResult<Self> {
        build(&RunConfig { model: ModelKind::WpExp, omega1, omega2, offset, ..RunConfig::default() })
    }

    #[staticmethod]
    #[pyo3(signature = (rho, omega1=Complex64::new(1.0, 0.0), omega2=Complex64::new(0.0, 1.0), offset=None))]
    fn power(rho: f64, omega1: Complex64, omega2: Complex64, offset: Option<Complex64>) -> PyResult<Self> {
        build(&RunConfig { model: ModelKind::Power, rho, omega1, omega2, offset, ..RunConfig::default() })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    /// `f(z)`, or `None` at a pole.
    fn eval(&self, z: Complex64) -> PyResult<Option<Complex64>> {
        Ok(extended(self.inner.eval(z).map_err(err)?))
    }

    /// `(location, multiplicity, coefficient)` for every pole with `|a| <= radius`.
    fn poles_in_disk(&self, radius: f64) -> PyResult<Vec<(Complex64, u32, f64)>> {
        let poles = self.inner.poles_in_disk(radius).map_err(err)?;
        Ok(poles.iter().map(|p| (p.location, p.multiplicity, p.coefficient)).collect())
    }

    /// `(classification, depth, trajectory)`; `None` entries are infinity.
    #[pyo3(signature = (z, cap, schedule=None))]
    fn iterate(
        &self,
        z: Complex64,
        cap: usize,
        schedule: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<(&'static str, usize, Vec<Option<Complex64>>)> {
        let rec = orbits::iterate(&self.inner, z, &self::schedule(schedule)?, cap).map_err(err)?;
        let (kind, depth) = classification(&rec.classification);
        Ok((kind, depth, rec.trajectory.into_iter().map(extended).collect()))
    }

    /// Row-major classification names at the cell centres, bottom row first.
    #[pyo3(signature = (x_min, x_max, y_min, y_max, width, height, cap, schedule=None))]
    #[allow(clippy::too_many_arguments)]
    fn escape_field(
        &self,
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        width: usize,
        height: usize,
        cap: usize,
        schedule: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Vec<&'static str>> {
        let region = PlanarRegion::rect(x_min, x_max, y_min, y_max)
            .and_then(|r| r.with_resolution(width, height))
            .map_err(err)?;
        let field = orbits::render_escape_field(&self.inner, &region, &self::schedule(schedule)?, cap).map_err(err)?;
        Ok(field.pixels.iter().map(|p| classification(&p.classification).0).collect())
    }

    /// Slope of `log n(r)` against `log r` over `[r_min, r_max]`.
    #[pyo3(signature = (r_min, r_max, per_decade=10, quadrature=64))]
    fn order_estimate(&self, r_min: f64, r_max: f64, per_decade: usize, quadrature: usize) -> PyResult<f64> {
        let radii = log_radii(r_min, r_max, per_decade).map_err(err)?;
        let cs = counting_sample(&self.inner, &radii, quadrature).map_err(err)?;
        Ok(estimate_order(&cs, r_min, r_max).map_err(err)?.slope)
    }
}

/// `2 rho / (1 + rho)`.
#[pyfunction]
fn dimension_formula(rho: f64) -> PyResult<f64> {
    mcmullen::dimension_formula(rho).map_err(err)
}

#[pyfunction]
fn order_from_dimension(d: f64) -> PyResult<f64> {
    mcmullen::order_from_dimension(d).map_err(err)
}

/// `(bounds, limit)` for a nested cover with per-level densities and diameters.
#[pyfunction]
fn mcmullen_bound(deltas: Vec<f64>, diams: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
    let spec = NestedCoverSpec::from_values(&deltas, &diams).map_err(err)?;
    let b = mcmullen::mcmullen_bound(&spec);
    Ok((b.values, b.limit))
}

/// Runs `counting`, `dim-bound` or `render` on configuration text and
/// returns the summary line and `{path: bytes}` without writing files.
#[pyfunction]
fn run(command: &str, config: &str) -> PyResult<(String, Vec<(String, Vec<u8>)>)> {
    let cfg = RunConfig::parse(config).map_err(err)?;
    let out = match command {
        "counting" => cli::cmd_counting(&cfg),
        "dim-bound" => cli::cmd_dim_bound(&cfg),
        "render" => cli::cmd_render(&cfg),
        _ => return Err(PyValueError::new_err(format!("unknown command '{command}'"))),
    }
    .map_err(err)?;
    let files = out.files.into_iter().map(|(p, b)| (p.display().to_string(), b)).collect();
    Ok((out.summary, files))
}

/// `(suite, check, passed, detail)` for every self-test check.
#[pyfunction]
#[pyo3(signature = (suite=None))]
fn selftest(suite: Option<&str>) -> PyResult<Vec<(String, String, bool, String)>> {
    let reports = run_selftest(suite, &SelftestOptions::default()).map_err(err)?;
    Ok(reports
        .iter()
        .flat_map(|r| r.checks.iter().map(|c| (r.suite.to_owned(), c.name.to_owned(), c.passed, c.detail.clone())))
        .collect())
}

#[pymodule]
fn speiser_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Lattice>()?;
    m.add_class::<Weierstrass>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(dimension_formula, m)?)?;
    m.add_function(wrap_pyfunction!(order_from_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(mcmullen_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
