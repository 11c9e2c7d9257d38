//! Scalar special functions used by the channel PDF and the closed-form
//! capacity: error function family, Gaussian Q-function and its 3-term
//! exponential approximation, (incomplete) gamma and the Whittaker W function.
//!
//! Everything here is a pure deterministic scalar map.

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use statrs::function::{erf as serf, gamma as sgamma};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.5066282746310002;

fn require_finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("non-finite value {x}"),
        })
    }
}

/// Error function.
pub fn erf(x: f64) -> Result<f64> {
    require_finite("x", x)?;
    Ok(serf::erf(x))
}

/// Complementary error function.
pub fn erfc(x: f64) -> Result<f64> {
    require_finite("x", x)?;
    Ok(serf::erfc(x))
}

/// Gaussian tail probability Q(x) = erfc(x/sqrt(2))/2.
pub fn q_function(x: f64) -> Result<f64> {
    require_finite("x", x)?;
    Ok(0.5 * serf::erfc(x / SQRT_2))
}

/// ln Q(x), stable for arbitrarily large positive arguments where Q itself
/// underflows. Used by the channel PDF, whose integrand combines this with
/// growing exponential factors before a single exponentiation.
pub fn ln_q(x: f64) -> f64 {
    if x < 26.0 {
        (0.5 * serf::erfc(x / SQRT_2)).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - (x * SQRT_2PI).ln()
            + (-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)
                + 105.0 / (x2 * x2 * x2 * x2))
                .ln_1p()
    }
}

/// Weights and exponents of the 3-term exponential Q-function fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QApproxCoefficients {
    pub a: [f64; 3],
    pub a_prime: [f64; 3],
}

impl QApproxCoefficients {
    pub const STANDARD: Self = Self {
        a: [5.0 / 24.0, 4.0 / 24.0, 1.0 / 24.0],
        a_prime: [2.0, 11.0 / 20.0, 0.5],
    };
}

/// 3-term exponential approximation of Q(x) for x >= 0.
///
/// The fit is one-sided; negative arguments are a caller bug and rejected.
pub fn q_approx(x: f64) -> Result<f64> {
    require_finite("x", x)?;
    if x < 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: format!("q_approx is defined for x >= 0, got {x}"),
        });
    }
    Ok(q_approx_unchecked(x))
}

/// ln of the even extension of the Q-fit, stable for large |x| where every
/// exponential underflows: log-sum-exp over the three terms.
pub fn ln_q_approx_even(x: f64) -> f64 {
    let c = QApproxCoefficients::STANDARD;
    let x2 = x * x;
    let logs = [
        c.a[0].ln() - c.a_prime[0] * x2,
        c.a[1].ln() - c.a_prime[1] * x2,
        c.a[2].ln() - c.a_prime[2] * x2,
    ];
    let peak = logs[0].max(logs[1]).max(logs[2]);
    peak + logs.iter().map(|l| (l - peak).exp()).sum::<f64>().ln()
}

/// The raw even extension sum(a_i * exp(-a'_i x^2)) without the domain guard.
/// The high-SNR capacity algebra applies the fit to arguments of either sign.
pub fn q_approx_unchecked(x: f64) -> f64 {
    let c = QApproxCoefficients::STANDARD;
    let x2 = x * x;
    c.a[0] * (-c.a_prime[0] * x2).exp()
        + c.a[1] * (-c.a_prime[1] * x2).exp()
        + c.a[2] * (-c.a_prime[2] * x2).exp()
}

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    sgamma::gamma(x)
}

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    sgamma::ln_gamma(x)
}

/// Upper incomplete gamma function Gamma(s, x) for s > 0, x >= 0.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    require_finite("s", s)?;
    require_finite("x", x)?;
    if s <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("shape must be positive, got {s}"),
        });
    }
    if x < 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: format!("lower limit must be non-negative, got {x}"),
        });
    }
    if x == 0.0 {
        return Ok(sgamma::gamma(s));
    }
    Ok(sgamma::gamma_ui(s, x))
}

/// ln Gamma(s, x), stable for large x where Gamma(s, x) ~ x^(s-1) e^-x
/// underflows. The capacity closed form multiplies this tail by an e^x factor,
/// so the logarithm is the quantity actually needed.
pub fn ln_upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    if x < 500.0 {
        return Ok(upper_incomplete_gamma(s, x)?.ln());
    }
    // asymptotic expansion; terms decay like (s-1)!/(s-1-k)!/x^k
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..8 {
        term *= (s - 1.0 - k as f64) / x;
        sum += term;
    }
    Ok((s - 1.0) * x.ln() - x + sum.ln())
}

/// Whittaker function W_{a,b}(z) for z > 0.
pub fn whittaker_w(a: f64, b: f64, z: f64) -> Result<f64> {
    ln_whittaker_w(a, b, z).map(f64::exp)
}

/// ln W_{a,b}(z), stable where W itself over- or underflows.
///
/// W is even in b; with mu = |b| the evaluation requires mu - a + 1/2 > 0,
/// which covers every index family generated by the capacity closed forms
/// (and any b once reflected). Two routes:
///  - mu - a = 1/2 (and moderate z): the incomplete-gamma identity
///    Gamma(s, z) = z^{(s-1)/2} e^{-z/2} W_{(s-1)/2, s/2}(z) with s = 2a + 1;
///  - otherwise the integral representation
///    W_{a,mu}(z) = e^{-z/2} z^a / Gamma(mu - a + 1/2)
///                  * int_0^inf t^{mu-a-1/2} (1 + t/z)^{mu+a-1/2} e^{-t} dt.
pub fn ln_whittaker_w(a: f64, b: f64, z: f64) -> Result<f64> {
    require_finite("a", a)?;
    require_finite("b", b)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Whittaker {
            a,
            b,
            z,
            reason: format!("z must be positive and finite, got {z}"),
        });
    }
    let mu = b.abs();
    let p = mu - a + 0.5;
    if p <= 0.0 {
        return Err(Error::Whittaker {
            a,
            b,
            z,
            reason: format!("|b| - a + 1/2 = {p} <= 0 is outside the supported family"),
        });
    }
    let s = 2.0 * a + 1.0;
    if (mu - a - 0.5).abs() < 1e-12 && s > 0.0 && z <= 300.0 {
        let g = sgamma::gamma_ui(s, z);
        return Ok(g.ln() - a * z.ln() + 0.5 * z);
    }
    let q = mu + a - 0.5;
    // truncation point of the exponentially damped integrand
    let t_max = (p - 1.0).max(0.0) + 50.0 + 12.0 * p.max(1.0).sqrt() + 5.0 * q.max(0.0);
    let opts = QuadOptions::with_rel_tol(1e-11);
    let integral = if p < 1.0 {
        // t = u^2 removes the endpoint singularity of t^{p-1}
        let g = |u: f64| 2.0 * u.powf(2.0 * p - 1.0) * (1.0 + u * u / z).powf(q) * (-u * u).exp();
        quad::adaptive_gk(&g, 0.0, t_max.sqrt(), opts)
    } else {
        let g = |t: f64| t.powf(p - 1.0) * (1.0 + t / z).powf(q) * (-t).exp();
        quad::adaptive_gk(&g, 0.0, t_max, opts)
    }
    .map_err(|e| Error::Whittaker {
        a,
        b,
        z,
        reason: e.to_string(),
    })?;
    if !(integral.value > 0.0) {
        return Err(Error::Whittaker {
            a,
            b,
            z,
            reason: format!("integral representation returned {}", integral.value),
        });
    }
    Ok(-0.5 * z + a * z.ln() + integral.value.ln() - ln_gamma(p))
}
