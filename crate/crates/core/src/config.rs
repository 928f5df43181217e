//! Flat `key = value` configuration shared by every node and CLI command.
//!
//! Lengths are millimeters, angles degrees, rates degrees per second, time
//! seconds. Blank lines and `#` comments are ignored; missing keys keep their
//! defaults.
//!
//! ```text
//! a1 = 63
//! theta5_max = 90
//! base_radius = 40
//! delta_min = 0.5
//! command_port = 7400
//! ```

use std::path::Path;

use thiserror::Error;

use crate::kinematics::{Angle, LinkLengths};
use crate::workspace::{JointLimits, Scene};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key {key:?} on line {line}")]
    UnknownKey { line: usize, key: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub links: LinkLengths,
    pub limits: JointLimits,
    pub scene: Scene,
    /// Smallest joint change that triggers a new frame.
    pub delta_min: Angle,
    /// Servo slew rate, radians per second.
    pub max_rate: Angle,
    /// Simulation tick, seconds.
    pub dt: f64,
    pub host: String,
    pub command_port: u16,
    pub telemetry_port: u16,
    pub bridge_port: u16,
}

impl Default for Config {
    fn default() -> Self {
        let links = LinkLengths::default();
        Config {
            links,
            limits: JointLimits::default(),
            scene: Scene::for_links(&links),
            delta_min: Angle::from_degrees(0.5),
            max_rate: Angle::from_degrees(300.0),
            dt: 0.01,
            host: "127.0.0.1".to_string(),
            command_port: 7400,
            telemetry_port: 7401,
            bridge_port: 7402,
        }
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let defaults = Config::default();
        let mut a = defaults.links.as_array();
        let mut limits: [(f64, f64); 5] = defaults
            .limits
            .ranges()
            .map(|(lo, hi)| (lo.degrees(), hi.degrees()));
        let mut floor_z = defaults.scene.floor_z();
        let mut base_radius = defaults.scene.base_radius();
        let mut base_height = None;
        let mut cfg = defaults;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let number = || -> Result<f64, ConfigError> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        message: format!("{key}: not a number: {value:?}"),
                    })
            };
            let port = || -> Result<u16, ConfigError> {
                value.parse::<u16>().map_err(|_| ConfigError::Syntax {
                    line: line_no,
                    message: format!("{key}: not a port: {value:?}"),
                })
            };

            match key {
                "a1" => a[0] = number()?,
                "a2" => a[1] = number()?,
                "a3" => a[2] = number()?,
                "a4" => a[3] = number()?,
                "floor_z" => floor_z = number()?,
                "base_radius" => base_radius = number()?,
                "base_height" => base_height = Some(number()?),
                "delta_min" => cfg.delta_min = Angle::from_degrees(number()?),
                "max_rate" => cfg.max_rate = Angle::from_degrees(number()?),
                "dt" => cfg.dt = number()?,
                "host" => cfg.host = value.to_string(),
                "command_port" => cfg.command_port = port()?,
                "telemetry_port" => cfg.telemetry_port = port()?,
                "bridge_port" => cfg.bridge_port = port()?,
                _ => {
                    let joint_key = key
                        .strip_prefix("theta")
                        .and_then(|rest| rest.split_once('_'))
                        .and_then(|(j, bound)| Some((j.parse::<usize>().ok()?, bound)));
                    match joint_key {
                        Some((j @ 1..=5, "min")) => limits[j - 1].0 = number()?,
                        Some((j @ 1..=5, "max")) => limits[j - 1].1 = number()?,
                        _ => {
                            return Err(ConfigError::UnknownKey {
                                line: line_no,
                                key: key.to_string(),
                            })
                        }
                    }
                }
            }
        }

        cfg.links = LinkLengths::new(a[0], a[1], a[2], a[3])
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.limits =
            JointLimits::from_degrees(limits).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        // The base column defaults to the height of the first link.
        cfg.scene = Scene::new(floor_z, base_radius, base_height.unwrap_or(cfg.links.a1()))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if cfg.delta_min.radians() <= 0.0 {
            return Err(ConfigError::Invalid("delta_min must be positive".into()));
        }
        if cfg.max_rate.radians() <= 0.0 {
            return Err(ConfigError::Invalid("max_rate must be positive".into()));
        }
        if cfg.dt <= 0.0 {
            return Err(ConfigError::Invalid("dt must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn command_addr(&self) -> String {
        format!("{}:{}", self.host, self.command_port)
    }

    pub fn telemetry_addr(&self) -> String {
        format!("{}:{}", self.host, self.telemetry_port)
    }

    pub fn bridge_addr(&self) -> String {
        format!("{}:{}", self.host, self.bridge_port)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
        assert_eq!(Config::parse("# nothing\n\n").unwrap(), Config::default());
    }

    #[test]
    fn overrides_and_derived_base_height() {
        let cfg = Config::parse("a1 = 80\nbase_radius=30 # narrower\ntheta2_max = 45\ncommand_port = 9000\n").unwrap();
        assert_eq!(cfg.links.a1(), 80.0);
        assert_eq!(cfg.scene.base_height(), 80.0);
        assert_eq!(cfg.scene.base_radius(), 30.0);
        assert!((cfg.limits.range(2).1.degrees() - 45.0).abs() < 1e-12);
        assert_eq!(cfg.command_port, 9000);
        assert_eq!(cfg.command_addr(), "127.0.0.1:9000");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Config::parse("a1 63"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(Config::parse("\nwat = 1"), Err(ConfigError::UnknownKey { line: 2, .. })));
        assert!(matches!(Config::parse("theta9_min = 1"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(Config::parse("a2 = -5"), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::parse("theta1_min = 10\ntheta1_max = 5"), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::parse("delta_min = 0"), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::parse("command_port = 70000"), Err(ConfigError::Syntax { .. })));
    }
}
