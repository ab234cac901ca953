//! Unit-tagged quantities used by the scene file.
//!
//! Scalars are written as `"<number> <unit>"` strings, vectors and point
//! lists as `{"unit": "<unit>", "value": ...}` objects. Everything is
//! converted to SI on the way in and written back in the canonical file
//! units (mm, g, N, deg, s).

use serde::{Deserialize, Serialize};

use super::SceneError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Mass,
    Force,
    Angle,
    Time,
    Acceleration,
    Inertia,
    /// Length per radian, used by the rotation weight of the pose metric.
    LengthPerAngle,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Mass => "mass",
            Dimension::Force => "force",
            Dimension::Angle => "angle",
            Dimension::Time => "time",
            Dimension::Acceleration => "acceleration",
            Dimension::Inertia => "inertia",
            Dimension::LengthPerAngle => "length per angle",
        }
    }

    /// Factor converting a value in `unit` to SI, if the unit belongs to this dimension.
    fn factor(self, unit: &str) -> Option<f64> {
        let f = match (self, unit) {
            (Dimension::Length, "mm") => 1e-3,
            (Dimension::Length, "cm") => 1e-2,
            (Dimension::Length, "m") => 1.0,
            (Dimension::Mass, "g") => 1e-3,
            (Dimension::Mass, "kg") => 1.0,
            (Dimension::Force, "N") => 1.0,
            (Dimension::Angle, "deg") => std::f64::consts::PI / 180.0,
            (Dimension::Angle, "rad") => 1.0,
            (Dimension::Time, "s") => 1.0,
            (Dimension::Time, "ms") => 1e-3,
            (Dimension::Acceleration, "m/s^2") => 1.0,
            (Dimension::Acceleration, "mm/s^2") => 1e-3,
            (Dimension::Inertia, "g*mm^2") => 1e-9,
            (Dimension::Inertia, "kg*m^2") => 1.0,
            (Dimension::LengthPerAngle, "mm/rad") => 1e-3,
            (Dimension::LengthPerAngle, "m/rad") => 1.0,
            _ => return None,
        };
        Some(f)
    }

    /// The unit used when writing scene files.
    pub fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::Length => "mm",
            Dimension::Mass => "g",
            Dimension::Force => "N",
            Dimension::Angle => "deg",
            Dimension::Time => "s",
            Dimension::Acceleration => "m/s^2",
            Dimension::Inertia => "g*mm^2",
            Dimension::LengthPerAngle => "mm/rad",
        }
    }

    pub fn to_si(self, value: f64, unit: &str, field: &str) -> Result<f64, SceneError> {
        let factor = self.factor(unit).ok_or_else(|| SceneError::Unit {
            field: field.to_string(),
            message: format!("unknown {} unit '{unit}'", self.name()),
        })?;
        Ok(value * factor)
    }

    pub fn from_si(self, value: f64) -> f64 {
        let f = self
            .factor(self.canonical_unit())
            .expect("canonical unit is known");
        value / f
    }
}

/// Parses `"<number> <unit>"` into SI.
pub fn parse_scalar(text: &str, dim: Dimension, field: &str) -> Result<f64, SceneError> {
    let mut parts = text.split_whitespace();
    let number = parts.next().ok_or_else(|| SceneError::Unit {
        field: field.to_string(),
        message: "empty quantity".into(),
    })?;
    let value: f64 = number.parse().map_err(|_| SceneError::Unit {
        field: field.to_string(),
        message: format!("'{number}' is not a number"),
    })?;
    let unit = parts.next().ok_or_else(|| SceneError::Unit {
        field: field.to_string(),
        message: format!("missing {} unit in '{text}'", dim.name()),
    })?;
    if parts.next().is_some() {
        return Err(SceneError::Unit {
            field: field.to_string(),
            message: format!("trailing text in '{text}'"),
        });
    }
    dim.to_si(value, unit, field)
}

/// Formats an SI value in the canonical file unit.
pub fn format_scalar(si: f64, dim: Dimension) -> String {
    format!("{} {}", dim.from_si(si), dim.canonical_unit())
}

/// `{"unit": ..., "value": ...}` as it appears in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tagged<T> {
    pub unit: String,
    pub value: T,
}

impl Tagged<[f64; 2]> {
    pub fn to_si(&self, dim: Dimension, field: &str) -> Result<[f64; 2], SceneError> {
        Ok([
            dim.to_si(self.value[0], &self.unit, field)?,
            dim.to_si(self.value[1], &self.unit, field)?,
        ])
    }

    pub fn from_si(v: [f64; 2], dim: Dimension) -> Self {
        Self {
            unit: dim.canonical_unit().into(),
            value: [dim.from_si(v[0]), dim.from_si(v[1])],
        }
    }
}

impl Tagged<Vec<[f64; 2]>> {
    pub fn to_si(&self, dim: Dimension, field: &str) -> Result<Vec<[f64; 2]>, SceneError> {
        self.value
            .iter()
            .map(|p| {
                Ok([
                    dim.to_si(p[0], &self.unit, field)?,
                    dim.to_si(p[1], &self.unit, field)?,
                ])
            })
            .collect()
    }

    pub fn from_si(v: &[[f64; 2]], dim: Dimension) -> Self {
        Self {
            unit: dim.canonical_unit().into(),
            value: v
                .iter()
                .map(|p| [dim.from_si(p[0]), dim.from_si(p[1])])
                .collect(),
        }
    }
}
