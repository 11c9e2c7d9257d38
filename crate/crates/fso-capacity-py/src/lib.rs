//! Python module `fso_capacity`: link parameters, channel PDF, the four
//! capacity paths, sweeps and the beam-width optimizer.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fso_capacity::capacity::{dbm_to_watts, evaluate};
use fso_capacity::channel::{derive_constants, ChannelPdf, LinkParameters};
use fso_capacity::config::Scenario;
use fso_capacity::sweep::{
    argmax_1d, grid_sweep, path_bits, CapacityPath, SweepSpec, SweptParameter,
};

fn err(e: fso_capacity::error::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Geometry and statistics of one link.
#[pyclass(name = "LinkParameters", skip_from_py_object)]
#[derive(Clone)]
struct PyLinkParameters {
    inner: LinkParameters,
}

fn apply_kwargs(p: &mut LinkParameters, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<()> {
    if let Some(kwargs) = kwargs {
        for (key, value) in kwargs.iter() {
            let key: String = key.extract()?;
            match key.as_str() {
                "wavelength" => p.wavelength = value.extract()?,
                "aperture_radius" => p.aperture_radius = value.extract()?,
                "beam_width" => p.beam_width = value.extract()?,
                "link_length" => p.link_length = value.extract()?,
                "attenuation" => p.attenuation = value.extract()?,
                "log_irradiance_variance" => p.log_irradiance_variance = value.extract()?,
                "position_sd" => p.position_sd = value.extract()?,
                "orientation_sd" => p.orientation_sd = value.extract()?,
                "fov_angle" => p.fov_angle = value.extract()?,
                "series_order" => p.series_order = value.extract()?,
                other => {
                    return Err(PyValueError::new_err(format!(
                        "unknown link parameter `{other}`"
                    )))
                }
            }
        }
    }
    Ok(())
}

#[pymethods]
impl PyLinkParameters {
    /// Reference operating point; any keyword overrides one field.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = LinkParameters::baseline();
        apply_kwargs(&mut p, kwargs)?;
        p.validate().map_err(err)?;
        Ok(Self { inner: p })
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.inner.wavelength
    }

    #[getter]
    fn aperture_radius(&self) -> f64 {
        self.inner.aperture_radius
    }

    #[getter]
    fn beam_width(&self) -> f64 {
        self.inner.beam_width
    }

    #[getter]
    fn link_length(&self) -> f64 {
        self.inner.link_length
    }

    #[getter]
    fn attenuation(&self) -> f64 {
        self.inner.attenuation
    }

    #[getter]
    fn log_irradiance_variance(&self) -> f64 {
        self.inner.log_irradiance_variance
    }

    #[getter]
    fn position_sd(&self) -> f64 {
        self.inner.position_sd
    }

    #[getter]
    fn orientation_sd(&self) -> f64 {
        self.inner.orientation_sd
    }

    #[getter]
    fn fov_angle(&self) -> f64 {
        self.inner.fov_angle
    }

    #[getter]
    fn series_order(&self) -> u32 {
        self.inner.series_order
    }

    /// Copy with some fields replaced (same keywords as the constructor).
    #[pyo3(signature = (**kwargs))]
    fn replace(&self, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut out = Self {
            inner: self.inner.clone(),
        };
        apply_kwargs(&mut out.inner, kwargs)?;
        out.inner.validate().map_err(err)?;
        Ok(out)
    }

    /// Quantities derived from the geometry, as a dict (including the
    /// angle-of-arrival outage weights).
    fn derived<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = derive_constants(&self.inner).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("nu", c.nu)?;
        d.set_item("a0", c.a0)?;
        d.set_item("w_z_eq_sq", c.w_z_eq_sq)?;
        d.set_item("gamma_sq", c.gamma_sq)?;
        d.set_item("ln_c_a", c.ln_c_a)?;
        d.set_item("c_b", c.c_b)?;
        d.set_item("c_c", c.c_c)?;
        d.set_item("fov_ratio", c.fov_ratio)?;
        d.set_item("outage_weights", c.h_weights.clone())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Composite intensity density of the channel.
#[pyclass(name = "ChannelDensity")]
struct PyChannelDensity {
    inner: ChannelPdf,
}

#[pymethods]
impl PyChannelDensity {
    #[new]
    fn new(link: &PyLinkParameters) -> PyResult<Self> {
        Ok(Self {
            inner: ChannelPdf::new(&link.inner).map_err(err)?,
        })
    }

    /// Probability mass of the zero-intensity outage atom.
    #[getter]
    fn outage_mass(&self) -> f64 {
        self.inner.outage_mass
    }

    /// Continuous density at intensity h > 0.
    fn pdf(&self, h: f64) -> PyResult<f64> {
        self.inner.pdf_continuous(h).map_err(err)
    }

    /// outage mass + integrated continuous density (should be ~1).
    fn normalization(&self) -> PyResult<f64> {
        self.inner.normalization().map_err(err)
    }
}

fn scenario(link: &PyLinkParameters, transmit_power: f64) -> Scenario {
    let mut s = Scenario::baseline(transmit_power);
    s.link = link.inner.clone();
    s
}

/// Capacity in bits per channel use along one path
/// ("exact", "oracle", "closed" or "largefov").
#[pyfunction]
fn capacity_bits(link: &PyLinkParameters, transmit_power: f64, path: &str) -> PyResult<f64> {
    let path = CapacityPath::from_name(path).map_err(err)?;
    Ok(path_bits(&scenario(link, transmit_power), path)
        .map_err(err)?
        .0)
}

/// All four capacity paths plus their pairwise relative gaps, as a dict.
#[pyfunction]
fn capacity_report<'py>(
    py: Python<'py>,
    link: &PyLinkParameters,
    transmit_power: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = scenario(link, transmit_power);
    let n = s.noise_model().map_err(err)?;
    let r = evaluate(&s.link, &n).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("exact_bits", r.exact_bits)?;
    d.set_item("oracle_bits", r.highsnr_oracle_bits)?;
    d.set_item("closed_bits", r.closed_form_bits)?;
    d.set_item("largefov_bits", r.large_fov_bits)?;
    d.set_item("i11", r.i_terms.i11)?;
    d.set_item("i12", r.i_terms.i12)?;
    d.set_item("i21", r.i_terms.i21)?;
    d.set_item("i22", r.i_terms.i22)?;
    d.set_item("delta_closed_vs_exact", r.delta_closed_vs_exact)?;
    d.set_item("delta_closed_vs_oracle", r.delta_closed_vs_oracle)?;
    d.set_item("delta_oracle_vs_exact", r.delta_oracle_vs_exact)?;
    d.set_item("delta_largefov_vs_closed", r.delta_largefov_vs_closed)?;
    d.set_item("guard_warning", r.guard_warning.clone())?;
    Ok(d)
}

/// Sweep one parameter ("w_z", "theta_fov", "P_t" or "sigma_theta") over a
/// uniform grid; returns a list of (value, {path: bits-or-None}) pairs.
#[pyfunction]
#[pyo3(signature = (link, transmit_power, parameter, lo, hi, count, paths=vec!["closed".into()]))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    link: &PyLinkParameters,
    transmit_power: f64,
    parameter: &str,
    lo: f64,
    hi: f64,
    count: usize,
    paths: Vec<String>,
) -> PyResult<Vec<(f64, Bound<'py, PyDict>)>> {
    let spec = SweepSpec {
        parameter: SweptParameter::from_key(parameter).map_err(err)?,
        lo,
        hi,
        count,
        scenario: scenario(link, transmit_power),
        paths: paths
            .iter()
            .map(|p| CapacityPath::from_name(p).map_err(err))
            .collect::<PyResult<_>>()?,
    };
    let result = grid_sweep(&spec).map_err(err)?;
    let mut out = Vec::with_capacity(result.rows.len());
    for row in &result.rows {
        let d = PyDict::new(py);
        for r in &row.results {
            d.set_item(r.path.name(), r.bits)?;
        }
        out.push((row.value, d));
    }
    Ok(out)
}

/// Capacity-maximizing parameter value over [lo, hi]: returns
/// (optimum, bits, on_boundary).
#[pyfunction]
#[pyo3(signature = (link, transmit_power, parameter, lo, hi, count=24, path="closed", refine=true))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    link: &PyLinkParameters,
    transmit_power: f64,
    parameter: &str,
    lo: f64,
    hi: f64,
    count: usize,
    path: &str,
    refine: bool,
) -> PyResult<(f64, f64, bool)> {
    let spec = SweepSpec {
        parameter: SweptParameter::from_key(parameter).map_err(err)?,
        lo,
        hi,
        count,
        scenario: scenario(link, transmit_power),
        paths: vec![CapacityPath::from_name(path).map_err(err)?],
    };
    let r = argmax_1d(&spec, refine).map_err(err)?;
    Ok((r.parameter, r.bits, r.boundary))
}

/// dBm to watts.
#[pyfunction(name = "dbm_to_watts")]
fn py_dbm_to_watts(dbm: f64) -> f64 {
    dbm_to_watts(dbm)
}

#[pymodule(name = "fso_capacity")]
fn fso_capacity_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLinkParameters>()?;
    m.add_class::<PyChannelDensity>()?;
    m.add_function(wrap_pyfunction!(capacity_bits, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_report, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(py_dbm_to_watts, m)?)?;
    Ok(())
}
