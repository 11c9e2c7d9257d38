//! Parameter sweeps and 1-D optimization over the tunable link parameters:
//! beam width, FOV angle, transmit power and orientation jitter.

use crate::capacity::{
    build_kernel, capacity_closed_form, capacity_exact, capacity_highsnr_oracle,
    capacity_large_fov,
};
use crate::channel::derive_constants;
use crate::config::Scenario;
use crate::error::{Error, Result};
use rayon::prelude::*;

const LN_2: f64 = std::f64::consts::LN_2;

/// Which link parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweptParameter {
    BeamWidth,
    FovAngle,
    TransmitPower,
    OrientationSd,
}

impl SweptParameter {
    /// Configuration key of the parameter.
    pub fn key(self) -> &'static str {
        match self {
            Self::BeamWidth => "w_z",
            Self::FovAngle => "theta_fov",
            Self::TransmitPower => "P_t",
            Self::OrientationSd => "sigma_theta",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        match key {
            "w_z" => Ok(Self::BeamWidth),
            "theta_fov" => Ok(Self::FovAngle),
            "P_t" => Ok(Self::TransmitPower),
            "sigma_theta" => Ok(Self::OrientationSd),
            other => Err(Error::Config(format!(
                "unknown sweep parameter `{other}`; expected one of w_z, theta_fov, P_t, sigma_theta"
            ))),
        }
    }
}

/// One of the four capacity computation paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CapacityPath {
    Exact,
    Oracle,
    ClosedForm,
    LargeFov,
}

impl CapacityPath {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Oracle => "oracle",
            Self::ClosedForm => "closed",
            Self::LargeFov => "largefov",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "exact" => Ok(Self::Exact),
            "oracle" => Ok(Self::Oracle),
            "closed" => Ok(Self::ClosedForm),
            "largefov" => Ok(Self::LargeFov),
            other => Err(Error::Config(format!(
                "unknown capacity path `{other}`; expected exact, oracle, closed or largefov"
            ))),
        }
    }
}

/// Capacity in bits per channel use along one path at one scenario.
pub fn path_bits(scenario: &Scenario, path: CapacityPath) -> Result<(f64, Option<String>)> {
    let p = &scenario.link;
    let n = scenario.noise_model()?;
    match path {
        CapacityPath::Exact => Ok((capacity_exact(p, &n)? / LN_2, None)),
        CapacityPath::Oracle => {
            let o = capacity_highsnr_oracle(p, &n, false)?;
            Ok((o.nats / LN_2, o.guard_warning))
        }
        CapacityPath::ClosedForm => {
            let c = derive_constants(p)?;
            let k = build_kernel(&c, p, &n)?;
            Ok((capacity_closed_form(&k, &c, p)?.nats / LN_2, None))
        }
        CapacityPath::LargeFov => {
            let c = derive_constants(p)?;
            let k = build_kernel(&c, p, &n)?;
            Ok((capacity_large_fov(&k, &c, p)? / LN_2, None))
        }
    }
}

/// A sweep: one varied parameter on a uniform grid, the remaining scenario
/// fixed, evaluated along a chosen set of capacity paths.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: SweptParameter,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub scenario: Scenario,
    pub paths: Vec<CapacityPath>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::Config(format!(
                "invalid sweep range [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.lo <= 0.0 {
            return Err(Error::Config(format!(
                "sweep values must be strictly positive, got lower bound {}",
                self.lo
            )));
        }
        if self.count == 0 {
            return Err(Error::Config("sweep needs at least one grid point".into()));
        }
        if self.lo == self.hi && self.count > 1 {
            return Err(Error::Config(
                "degenerate range lo = hi admits only a single grid point".into(),
            ));
        }
        if self.paths.is_empty() {
            return Err(Error::Config("sweep needs at least one capacity path".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count)
            .map(|j| self.lo + (self.hi - self.lo) * j as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Outcome of one path at one grid point; failures are recorded, not fatal.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub path: CapacityPath,
    pub bits: Option<f64>,
    pub error: Option<String>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub results: Vec<PathResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweptParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Best row (parameter value, bits) along one path; `None` when every
    /// point failed.
    pub fn argmax(&self, path: CapacityPath) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for row in &self.rows {
            let Some(bits) = row
                .results
                .iter()
                .find(|r| r.path == path)
                .and_then(|r| r.bits)
            else {
                continue;
            };
            // strict inequality breaks ties toward the smaller parameter value
            if best.is_none_or(|(_, b)| bits > b) {
                best = Some((row.value, bits));
            }
        }
        best
    }
}

/// Evaluate every grid point along every requested path. Points are
/// independent; evaluation is parallel but the row order is the grid order,
/// so the result is deterministic.
pub fn grid_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows: Vec<SweepRow> = spec
        .grid()
        .par_iter()
        .map(|&value| {
            let scenario = spec.scenario.with(spec.parameter, value);
            let results = spec
                .paths
                .iter()
                .map(|&path| match path_bits(&scenario, path) {
                    Ok((bits, warning)) => PathResult {
                        path,
                        bits: Some(bits),
                        error: None,
                        warning,
                    },
                    Err(e) => PathResult {
                        path,
                        bits: None,
                        error: Some(e.to_string()),
                        warning: None,
                    },
                })
                .collect();
            SweepRow { value, results }
        })
        .collect();
    Ok(SweepResult {
        parameter: spec.parameter,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgmaxResult {
    pub parameter: f64,
    pub bits: f64,
    /// The coarse-grid maximum sat on a range boundary: no interior optimum
    /// was bracketed and the refinement stage was skipped.
    pub boundary: bool,
}

/// Coarse-grid argmax over a closure, with optional golden-section refinement
/// of the bracketing interval (assumes local unimodality). Ties break toward
/// the smaller parameter value.
fn argmax_objective(
    f: &dyn Fn(f64) -> Result<f64>,
    grid: &[f64],
    refine: bool,
) -> Result<ArgmaxResult> {
    let mut best_idx = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut coarse = Vec::with_capacity(grid.len());
    for (idx, &x) in grid.iter().enumerate() {
        let v = f(x)?;
        coarse.push(v);
        if v > best_val {
            best_val = v;
            best_idx = idx;
        }
    }
    let boundary = grid.len() > 1 && (best_idx == 0 || best_idx == grid.len() - 1);
    if !refine || boundary || grid.len() < 3 {
        return Ok(ArgmaxResult {
            parameter: grid[best_idx],
            bits: best_val,
            boundary,
        });
    }
    let (mut a, mut b) = (grid[best_idx - 1], grid[best_idx + 1]);
    let invphi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - invphi * (b - a);
    let mut x2 = a + invphi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let tol = 1e-7 * (1.0 + a.abs() + b.abs());
    let mut refined = (grid[best_idx], best_val);
    while b - a > tol {
        // <= keeps the left interval on ties: smaller parameter wins
        if f2 <= f1 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2)?;
        }
        let (xc, fc) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if fc > refined.1 {
            refined = (xc, fc);
        }
    }
    // refinement never reports less than the best coarse row
    if refined.1 < best_val {
        refined = (grid[best_idx], best_val);
    }
    Ok(ArgmaxResult {
        parameter: refined.0,
        bits: refined.1,
        boundary: false,
    })
}

/// Capacity-maximizing value of the swept parameter, using the first path of
/// the spec as the objective.
pub fn argmax_1d(spec: &SweepSpec, refine: bool) -> Result<ArgmaxResult> {
    spec.validate()?;
    let path = spec.paths[0];
    let objective = |value: f64| -> Result<f64> {
        let scenario = spec.scenario.with(spec.parameter, value);
        Ok(path_bits(&scenario, path)?.0)
    };
    argmax_objective(&objective, &spec.grid(), refine)
}

/// Robustness of a beam width chosen for the worst-case orientation jitter:
/// find w* under `sigma_theta_worst`, then evaluate that beam width and the
/// true optimum under `sigma_theta_actual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyReport {
    pub w_worst_optimal: f64,
    /// Capacity (bits) under the actual jitter with the worst-case w*.
    pub bits_at_worst_design: f64,
    pub w_actual_optimal: f64,
    pub max_bits: f64,
    /// max_bits - bits_at_worst_design, >= 0 by definition of the maximum.
    pub gap_bits: f64,
}

pub fn penalty_of_worst_case_design(
    sigma_theta_worst: f64,
    sigma_theta_actual: f64,
    scenario: &Scenario,
    path: CapacityPath,
) -> Result<PenaltyReport> {
    let beam_spec = |sigma_theta: f64| SweepSpec {
        parameter: SweptParameter::BeamWidth,
        lo: 0.2,
        hi: 6.0,
        count: 24,
        scenario: scenario.with(SweptParameter::OrientationSd, sigma_theta),
        paths: vec![path],
    };
    let worst = argmax_1d(&beam_spec(sigma_theta_worst), true)?;
    let actual_spec = beam_spec(sigma_theta_actual);
    let best = argmax_1d(&actual_spec, true)?;
    let at_worst_design = path_bits(
        &actual_spec.scenario.with(SweptParameter::BeamWidth, worst.parameter),
        path,
    )?
    .0;
    let gap = best.bits - at_worst_design;
    if gap < -1e-9 {
        return Err(Error::KernelViolation(format!(
            "negative design penalty {gap}: optimizer returned a non-maximal point"
        )));
    }
    Ok(PenaltyReport {
        w_worst_optimal: worst.parameter,
        bits_at_worst_design: at_worst_design,
        w_actual_optimal: best.parameter,
        max_bits: best.bits,
        gap_bits: gap.max(0.0),
    })
}
