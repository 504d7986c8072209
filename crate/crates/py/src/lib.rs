//! Python bindings: the default construction, single steps of the four maps,
//! Lyapunov spectra, the expansion integral, the accessibility drift and the
//! band layout of the assembled map.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nuhyp_core::access::accessibility_drift;
use nuhyp_core::assembly::band_interval as core_band_interval;
use nuhyp_core::cocycle::{expansion_integral, lyapunov_spectrum};
use nuhyp_core::hyperbolic::{surface_group, ClosedOrbit, GroupElement, SurfacePoint};
use nuhyp_core::lab::config::LabConfig;
use nuhyp_core::perturb::{MapKind, System as CoreSystem};
use nuhyp_core::product::ProductPoint;

fn py_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn map_kind(name: &str) -> PyResult<MapKind> {
    name.parse::<MapKind>().map_err(py_err)
}

/// A point of the product: a frame of the surface and an interval coordinate.
#[pyclass(name = "Point", frozen, skip_from_py_object, module = "nuhyp")]
#[derive(Clone, Copy)]
struct Point {
    inner: ProductPoint,
}

#[pymethods]
impl Point {
    /// Builds a point from a unimodular matrix `(a, b, c, d)` and `z`.
    #[new]
    fn new(matrix: (f64, f64, f64, f64), z: f64) -> PyResult<Self> {
        let (a, b, c, d) = matrix;
        let g = GroupElement::try_new(a, b, c, d).map_err(py_err)?;
        let surf = SurfacePoint::from_lift(&g).map_err(py_err)?;
        Ok(Point { inner: ProductPoint::new(surf, z) })
    }

    /// A volume-uniform random point.
    #[staticmethod]
    fn random(seed: u64) -> Self {
        Point { inner: ProductPoint::random(&mut ChaCha8Rng::seed_from_u64(seed)) }
    }

    #[getter]
    fn z(&self) -> f64 {
        self.inner.z
    }

    /// The reduced frame as `(a, b, c, d)`.
    #[getter]
    fn matrix(&self) -> (f64, f64, f64, f64) {
        let g = self.inner.surf.rep();
        (g.a, g.b, g.c, g.d)
    }

    fn distance(&self, other: &Point) -> f64 {
        self.inner.distance(&other.inner)
    }

    fn __repr__(&self) -> String {
        let (a, b, c, d) = self.matrix();
        format!("Point(({a}, {b}, {c}, {d}), z={})", self.inner.z)
    }
}

/// The perturbed construction built from a lab configuration.
#[pyclass(name = "System", frozen, module = "nuhyp")]
struct System {
    inner: CoreSystem,
}

#[pymethods]
impl System {
    /// `config` is the text of a lab TOML file; `None` uses the defaults.
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(py: Python<'_>, config: Option<&str>) -> PyResult<Self> {
        let cfg = match config {
            Some(text) => LabConfig::from_toml(text).map_err(py_err)?,
            None => LabConfig::default(),
        };
        let inner = py.detach(|| CoreSystem::build(&cfg.construction)).map_err(py_err)?;
        Ok(System { inner })
    }

    /// Time step of the geodesic flow.
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    /// One step of `S`, `R`, `Q` or `P`.
    fn step(&self, map: &str, w: &Point) -> PyResult<Point> {
        let inner = self.inner.step(map_kind(map)?, &w.inner).map_err(py_err)?;
        Ok(Point { inner })
    }

    fn step_inverse(&self, map: &str, w: &Point) -> PyResult<Point> {
        let inner = self.inner.step_inverse(map_kind(map)?, &w.inner).map_err(py_err)?;
        Ok(Point { inner })
    }

    /// Body-frame Jacobian of one step, rows and columns ordered `(u, s, c, n)`.
    fn jacobian(&self, map: &str, w: &Point) -> PyResult<Vec<Vec<f64>>> {
        let j = self.inner.step_jacobian(map_kind(map)?, &w.inner).map_err(py_err)?;
        Ok(j.iter().map(|r| r.to_vec()).collect())
    }

    /// Exponents and standard errors `(exponents, std_errors)`, both in
    /// frame order `(u, s, c, n)`.
    #[pyo3(signature = (map, start, n_iters, qr_every=10, seed=1))]
    fn lyapunov(
        &self,
        py: Python<'_>,
        map: &str,
        start: &Point,
        n_iters: usize,
        qr_every: usize,
        seed: u64,
    ) -> PyResult<([f64; 4], [f64; 4])> {
        let kind = map_kind(map)?;
        let w0 = start.inner;
        let rep = py
            .detach(|| lyapunov_spectrum(&self.inner, kind, &w0, n_iters, qr_every, seed))
            .map_err(py_err)?;
        Ok((rep.exponents, rep.std_errors))
    }

    /// Expansion integral `(value, std_error, excluded_fraction)` of the
    /// twisted map at strength `alpha`.
    fn expansion(&self, py: Python<'_>, alpha: f64, n_samples: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
        let est = py
            .detach(|| expansion_integral(&self.inner, alpha, n_samples, seed))
            .map_err(py_err)?;
        Ok((est.value, est.std_error, est.excluded_fraction))
    }

    /// Interval coordinates `z0, ..., z5` along the accessibility loop.
    fn drift(&self, py: Python<'_>, map: &str, z0: f64) -> PyResult<[f64; 6]> {
        let kind = map_kind(map)?;
        let rep = py.detach(|| accessibility_drift(&self.inner, kind, z0)).map_err(py_err)?;
        Ok(rep.z)
    }
}

/// Largest entry of the octagon relation product minus the identity.
#[pyfunction]
fn relation_error() -> f64 {
    let r = surface_group().relation_product();
    let s = r.a.signum();
    [(r.a - s).abs(), r.b.abs(), r.c.abs(), (r.d - s).abs()].into_iter().fold(0.0, f64::max)
}

/// Length of the closed geodesic of a word in the generators `0..8`.
#[pyfunction]
fn orbit_length(word: Vec<usize>) -> PyResult<f64> {
    if word.iter().any(|&k| k >= 8) {
        return Err(PyValueError::new_err("generator indices lie in 0..8"));
    }
    Ok(ClosedOrbit::from_word(&word).map_err(py_err)?.length())
}

/// The interval `I_n` carrying band `n` of the assembled map.
#[pyfunction]
fn band_interval(n: i64) -> PyResult<(f64, f64)> {
    core_band_interval(n).map_err(py_err)
}

#[pymodule]
fn nuhyp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Point>()?;
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(relation_error, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_length, m)?)?;
    m.add_function(wrap_pyfunction!(band_interval, m)?)?;
    Ok(())
}
