//! Built-in input functions and multiplier expressions.

use std::path::Path;

use czo_core::{GridFunction, GridGeometry};

use crate::config::ConfigError;

fn bump_profile(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// A named input function with support `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputFunction {
    Indicator { lo: f64, hi: f64 },
    /// `exp(1 - 1/(1-t²))`, peak 1 at the centre.
    Bump { lo: f64, hi: f64 },
    /// `t · bump(t)`, odd about the centre.
    OddBump { lo: f64, hi: f64 },
    Csv(String),
}

impl InputFunction {
    pub fn parse(name: &str, support: (f64, f64)) -> Result<Self, ConfigError> {
        let (lo, hi) = support;
        match name {
            "indicator" => Ok(InputFunction::Indicator { lo, hi }),
            "bump" => Ok(InputFunction::Bump { lo, hi }),
            "odd-bump" => Ok(InputFunction::OddBump { lo, hi }),
            other => match other.strip_prefix("csv:") {
                Some(path) if !path.is_empty() => Ok(InputFunction::Csv(path.to_string())),
                _ => Err(ConfigError::BadValue {
                    key: "function".into(),
                    value: other.into(),
                    reason: "expected indicator, bump, odd-bump or csv:<path>".into(),
                }),
            },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InputFunction::Indicator { lo, hi } => {
                if (lo..hi).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            InputFunction::Bump { lo, hi } => {
                let (c, r) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
                bump_profile((x - c) / r)
            }
            InputFunction::OddBump { lo, hi } => {
                let (c, r) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
                let t = (x - c) / r;
                t * bump_profile(t)
            }
            InputFunction::Csv(_) => 0.0,
        }
    }

    /// Samples at cell midpoints; a CSV grid is interpolated when its grid
    /// differs from `geometry`.
    pub fn sample(&self, geometry: GridGeometry<1>) -> Result<GridFunction<1>, String> {
        if let InputFunction::Csv(path) = self {
            let g = crate::output::read_grid::<1>(Path::new(path)).map_err(|e| format!("{path}: {e}"))?;
            if g.geometry == geometry {
                return Ok(g);
            }
            return GridFunction::from_fn(geometry, |p| g.interpolate(p)).map_err(|e| e.to_string());
        }
        GridFunction::from_fn(geometry, |p| self.eval(p[0])).map_err(|e| e.to_string())
    }
}

/// Five indicators and five bumps supported in `[-4, 4]`, with endpoints on
/// multiples of 1/4.
pub fn standard_family() -> Vec<InputFunction> {
    use InputFunction::*;
    vec![
        Indicator { lo: 0.0, hi: 1.0 },
        Indicator { lo: -1.0, hi: 1.0 },
        Indicator { lo: -2.0, hi: 0.5 },
        Indicator { lo: 0.25, hi: 0.75 },
        Indicator { lo: -3.0, hi: 2.0 },
        Bump { lo: -1.0, hi: 1.0 },
        Bump { lo: 0.0, hi: 2.0 },
        Bump { lo: -4.0, hi: 0.0 },
        Bump { lo: 1.5, hi: 1.75 },
        Bump { lo: -0.5, hi: 3.5 },
    ]
}

/// `standard`, or a list of function names sharing one support.
pub fn family(spec: &[String], support: (f64, f64)) -> Result<Vec<InputFunction>, ConfigError> {
    if spec.len() == 1 && spec[0] == "standard" {
        return Ok(standard_family());
    }
    if spec.is_empty() {
        return Err(ConfigError::Invalid("the function family is empty".into()));
    }
    spec.iter().map(|s| InputFunction::parse(s, support)).collect()
}

/// A multiplier expression in `x`: a number, `x`, `x^2`, `sin`, `cos` or `exp`.
pub fn multiplier(expr: &str) -> Result<fn(f64) -> f64, ConfigError> {
    let f: fn(f64) -> f64 = match expr {
        "x" => |x| x,
        "x^2" => |x| x * x,
        "sin" => f64::sin,
        "cos" => f64::cos,
        "exp" => f64::exp,
        _ => {
            return Err(ConfigError::BadValue {
                key: "b".into(),
                value: expr.into(),
                reason: "expected a number, x, x^2, sin, cos or exp".into(),
            })
        }
    };
    Ok(f)
}

/// A multiplier that is either a constant or a named function.
#[derive(Debug, Clone, Copy)]
pub enum Multiplier {
    Constant(f64),
    Named(fn(f64) -> f64),
}

impl Multiplier {
    pub fn parse(expr: &str) -> Result<Self, ConfigError> {
        match expr.parse::<f64>() {
            Ok(c) if c.is_finite() => Ok(Multiplier::Constant(c)),
            _ => multiplier(expr).map(Multiplier::Named),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Multiplier::Constant(c) => *c,
            Multiplier::Named(f) => f(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use czo_core::Aabb;

    #[test]
    fn shapes() {
        let b = InputFunction::parse("bump", (-1.0, 1.0)).unwrap();
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(1.0), 0.0);
        let o = InputFunction::parse("odd-bump", (-1.0, 1.0)).unwrap();
        assert_eq!(o.eval(0.3), -o.eval(-0.3));
        let i = InputFunction::parse("indicator", (0.0, 1.0)).unwrap();
        assert_eq!((i.eval(0.0), i.eval(1.0)), (1.0, 0.0));
        assert!(InputFunction::parse("wave", (0.0, 1.0)).is_err());
        assert!(InputFunction::parse("csv:", (0.0, 1.0)).is_err());
        assert_eq!(standard_family().len(), 10);
    }

    #[test]
    fn multipliers() {
        assert_eq!(Multiplier::parse("2.5").unwrap().eval(7.0), 2.5);
        assert_eq!(Multiplier::parse("x^2").unwrap().eval(3.0), 9.0);
        assert!(Multiplier::parse("tan").is_err());
    }

    #[test]
    fn csv_input_is_resampled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.grid");
        let geo = GridGeometry::new(Aabb::new([-1.0], [1.0]), 8).unwrap();
        let f = GridFunction::from_fn(geo, |p| p[0]).unwrap();
        crate::output::write_grid(&path, &f).unwrap();
        let spec = InputFunction::parse(&format!("csv:{}", path.display()), (0.0, 1.0)).unwrap();
        assert_eq!(spec.sample(geo).unwrap(), f);
        let fine = GridGeometry::new(Aabb::new([-1.0], [1.0]), 16).unwrap();
        let g = spec.sample(fine).unwrap();
        assert!((g.values[8] - fine.midpoint(8)[0]).abs() < 1e-12);
    }
}
