//! Scenario configuration: the link parameters plus the receiver/noise
//! quantities, parsed from `key = value unit` files and `--set key=value`
//! overrides. Units (mrad, cm, nm, dBm, GHz, ...) are resolved here; the rest
//! of the crate sees strict SI (and the deliberate cm^2/um noise convention).

use crate::capacity::NoiseModel;
use crate::channel::LinkParameters;
use crate::error::{Error, Result};
use crate::sweep::SweptParameter;

/// A fully specified operating point: link + receiver + transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub link: LinkParameters,
    /// Photodetector responsivity R (A/W).
    pub responsivity: f64,
    /// Photodetector electrical bandwidth B_e (Hz).
    pub pd_bandwidth: f64,
    /// Optical filter bandwidth B_o (um).
    pub optical_bandwidth: f64,
    /// Background spectral radiance N_b (W/(cm^2 um sr)).
    pub spectral_radiance: f64,
    /// Transmit power P_t (W).
    pub transmit_power: f64,
}

impl Scenario {
    /// Reference scenario with an explicit transmit power (watts); every
    /// other quantity takes its default.
    pub fn baseline(transmit_power: f64) -> Self {
        Self {
            link: LinkParameters::baseline(),
            responsivity: 0.6,
            pd_bandwidth: 1e9,
            optical_bandwidth: 0.01,
            spectral_radiance: 1e-3,
            transmit_power,
        }
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(
            self.responsivity,
            self.transmit_power,
            self.pd_bandwidth,
            self.optical_bandwidth,
            self.spectral_radiance,
            &self.link,
        )
    }

    /// Copy with one swept parameter replaced.
    pub fn with(&self, parameter: SweptParameter, value: f64) -> Self {
        let mut s = self.clone();
        match parameter {
            SweptParameter::BeamWidth => s.link.beam_width = value,
            SweptParameter::FovAngle => s.link.fov_angle = value,
            SweptParameter::TransmitPower => s.transmit_power = value,
            SweptParameter::OrientationSd => s.link.orientation_sd = value,
        }
        s
    }

    /// Canonical `key = value` echo of the configuration in SI units, used
    /// for reproducible output headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let fmt = |v: f64| format!("{v:.8e}");
        vec![
            ("lambda".into(), fmt(self.link.wavelength)),
            ("r_a".into(), fmt(self.link.aperture_radius)),
            ("w_z".into(), fmt(self.link.beam_width)),
            ("Z".into(), fmt(self.link.link_length)),
            ("h_l".into(), fmt(self.link.attenuation)),
            ("sigma2_lnha".into(), fmt(self.link.log_irradiance_variance)),
            ("sigma_p".into(), fmt(self.link.position_sd)),
            ("sigma_theta".into(), fmt(self.link.orientation_sd)),
            ("theta_fov".into(), fmt(self.link.fov_angle)),
            ("M".into(), self.link.series_order.to_string()),
            ("R".into(), fmt(self.responsivity)),
            ("B_e".into(), fmt(self.pd_bandwidth)),
            // B_o echoed in metres, matching the input convention
            ("B_o".into(), fmt(self.optical_bandwidth * 1e-6)),
            ("N_b".into(), fmt(self.spectral_radiance)),
            ("P_t".into(), fmt(self.transmit_power)),
        ]
    }
}

/// Dimension class of a configuration key, fixing its admissible units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Angle,
    Power,
    Frequency,
    Plain,
    Integer,
}

fn key_dimension(key: &str) -> Result<Dimension> {
    Ok(match key {
        "lambda" | "r_a" | "w_z" | "Z" | "sigma_p" | "B_o" => Dimension::Length,
        "sigma_theta" | "theta_fov" => Dimension::Angle,
        "P_t" => Dimension::Power,
        "B_e" => Dimension::Frequency,
        "h_l" | "sigma2_lnha" | "R" | "N_b" => Dimension::Plain,
        "M" => Dimension::Integer,
        other => {
            return Err(Error::Config(format!(
                "unknown configuration key `{other}`"
            )))
        }
    })
}

/// Split `10dBm` / `5e-3` / `25 mrad` into a number and an optional unit.
fn split_value(raw: &str) -> Result<(f64, Option<&str>)> {
    let raw = raw.trim();
    let boundary = raw
        .char_indices()
        .find(|&(i, ch)| {
            if ch.is_ascii_digit() || ch == '.' || ch == '+' || ch == '-' {
                return false;
            }
            // an exponent 'e'/'E' must be followed by a digit or sign
            if (ch == 'e' || ch == 'E')
                && raw[i + 1..]
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_digit() || c == '+' || c == '-')
            {
                return false;
            }
            true
        })
        .map(|(i, _)| i)
        .unwrap_or(raw.len());
    let (num, unit) = raw.split_at(boundary);
    let value: f64 = num.trim().parse().map_err(|_| {
        Error::Config(format!("cannot parse numeric value from `{raw}`"))
    })?;
    let unit = unit.trim();
    Ok((value, (!unit.is_empty()).then_some(unit)))
}

/// Value of `raw` in the internal unit of `key`; also used for the
/// unit-bearing bounds of `--sweep key=lo:hi:n`.
pub fn parse_in_unit(key: &str, raw: &str) -> Result<f64> {
    let dim = key_dimension(key)?;
    let (value, unit) = split_value(raw)?;
    let si = convert(value, unit, dim)
        .ok_or_else(|| {
            Error::Config(format!(
                "unit `{}` is not valid for key `{key}`",
                unit.unwrap_or("")
            ))
        })?;
    // B_o is carried in micrometres to match the radiance units
    Ok(if key == "B_o" { si * 1e6 } else { si })
}

fn convert(value: f64, unit: Option<&str>, dim: Dimension) -> Option<f64> {
    match dim {
        Dimension::Length => match unit {
            None | Some("m") => Some(value),
            Some("cm") => Some(value * 1e-2),
            Some("mm") => Some(value * 1e-3),
            Some("um") => Some(value * 1e-6),
            Some("nm") => Some(value * 1e-9),
            _ => None,
        },
        Dimension::Angle => match unit {
            None | Some("rad") => Some(value),
            Some("mrad") => Some(value * 1e-3),
            _ => None,
        },
        Dimension::Power => match unit {
            None | Some("W") => Some(value),
            Some("mW") => Some(value * 1e-3),
            Some("dBm") => Some(10f64.powf((value - 30.0) / 10.0)),
            _ => None,
        },
        Dimension::Frequency => match unit {
            None | Some("Hz") => Some(value),
            Some("kHz") => Some(value * 1e3),
            Some("MHz") => Some(value * 1e6),
            Some("GHz") => Some(value * 1e9),
            _ => None,
        },
        Dimension::Plain => unit.is_none().then_some(value),
        Dimension::Integer => unit.is_none().then_some(value),
    }
}

/// Accumulates configuration from defaults, an optional file and `--set`
/// overrides; `build` demands the one quantity with no default, P_t.
#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    scenario: Scenario,
    transmit_power: Option<f64>,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self {
            scenario: Scenario::baseline(f64::NAN),
            transmit_power: None,
        }
    }

    /// Apply one `key = value unit` assignment.
    pub fn set(&mut self, key: &str, raw_value: &str) -> Result<()> {
        if key == "M" {
            let raw = raw_value.trim();
            let m: u32 = raw.parse().map_err(|_| {
                Error::Config(format!("series order M must be a nonnegative integer, got `{raw}`"))
            })?;
            self.scenario.link.series_order = m;
            return Ok(());
        }
        let v = parse_in_unit(key, raw_value)?;
        let link = &mut self.scenario.link;
        match key {
            "lambda" => link.wavelength = v,
            "r_a" => link.aperture_radius = v,
            "w_z" => link.beam_width = v,
            "Z" => link.link_length = v,
            "h_l" => link.attenuation = v,
            "sigma2_lnha" => link.log_irradiance_variance = v,
            "sigma_p" => link.position_sd = v,
            "sigma_theta" => link.orientation_sd = v,
            "theta_fov" => link.fov_angle = v,
            "R" => self.scenario.responsivity = v,
            "B_e" => self.scenario.pd_bandwidth = v,
            "B_o" => self.scenario.optical_bandwidth = v,
            "N_b" => self.scenario.spectral_radiance = v,
            "P_t" => self.transmit_power = Some(v),
            _ => unreachable!("key validated by key_dimension"),
        }
        Ok(())
    }

    /// Parse a configuration file body: `key = value unit` lines, blank
    /// lines and `#` comments.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    idx + 1
                )));
            };
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", idx + 1)))?;
        }
        Ok(())
    }

    /// Apply a `--set key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(Error::Config(format!(
                "expected key=value in `--set {assignment}`"
            )));
        };
        self.set(key.trim(), value.trim())
    }

    pub fn build(&self) -> Result<Scenario> {
        let Some(p_t) = self.transmit_power else {
            return Err(Error::Config(
                "transmit power P_t is required and has no default; set it in \
                 the config file or with --set P_t=..."
                    .into(),
            ));
        };
        let mut s = self.scenario.clone();
        s.transmit_power = p_t;
        s.link.validate()?;
        s.noise_model()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_plus_power() {
        let mut b = ConfigBuilder::new();
        b.apply_override("P_t=10dBm").unwrap();
        let s = b.build().unwrap();
        assert_eq!(s.link, LinkParameters::baseline());
        assert_relative_eq!(s.transmit_power, 0.01, max_relative = 1e-12);
        assert_relative_eq!(s.responsivity, 0.6, max_relative = 1e-15);
        assert_relative_eq!(s.optical_bandwidth, 0.01, max_relative = 1e-12);
    }

    #[test]
    fn missing_power_is_an_error() {
        let b = ConfigBuilder::new();
        let e = b.build().unwrap_err().to_string();
        assert!(e.contains("P_t"), "{e}");
    }

    #[test]
    fn file_units_round_trip() {
        let mut b = ConfigBuilder::new();
        b.apply_file(
            "# reference point\n\
             sigma_theta = 5 mrad\n\
             theta_fov = 25mrad\n\
             r_a = 5 cm\n\
             B_o = 10 nm\n\
             B_e = 1 GHz\n\
             P_t = 10 mW  # = 10 dBm\n",
        )
        .unwrap();
        let s = b.build().unwrap();
        assert_relative_eq!(s.link.orientation_sd, 5e-3, max_relative = 1e-12);
        assert_relative_eq!(s.link.fov_angle, 25e-3, max_relative = 1e-12);
        assert_relative_eq!(s.link.aperture_radius, 0.05, max_relative = 1e-12);
        assert_relative_eq!(s.optical_bandwidth, 0.01, max_relative = 1e-12);
        assert_relative_eq!(s.pd_bandwidth, 1e9, max_relative = 1e-12);
        assert_relative_eq!(s.transmit_power, 0.01, max_relative = 1e-12);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_units() {
        let mut b = ConfigBuilder::new();
        let e = b.set("w_x", "2").unwrap_err().to_string();
        assert!(e.contains("w_x"), "{e}");
        let e = b.set("sigma_theta", "5 cm").unwrap_err().to_string();
        assert!(e.contains("cm"), "{e}");
        assert!(b.set("M", "3.5").is_err());
        assert!(b.set("P_t", "").is_err());
        let e = b.apply_file("w_z 2\n").unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
    }

    #[test]
    fn scientific_notation_and_bare_si() {
        let mut b = ConfigBuilder::new();
        b.set("lambda", "1.55e-6").unwrap();
        b.set("sigma_theta", "5e-3 rad").unwrap();
        b.set("P_t", "1e-2").unwrap();
        let s = b.build().unwrap();
        assert_relative_eq!(s.link.wavelength, 1.55e-6, max_relative = 1e-12);
        assert_relative_eq!(s.link.orientation_sd, 5e-3, max_relative = 1e-12);
        assert_relative_eq!(s.transmit_power, 0.01, max_relative = 1e-12);
    }

    #[test]
    fn echo_is_stable() {
        let s = Scenario::baseline(0.01);
        let a = s.echo();
        let b = s.echo();
        assert_eq!(a, b);
        assert!(a.iter().any(|(k, _)| k == "P_t"));
    }
}
