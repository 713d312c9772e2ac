use serde::{Deserialize, Serialize};

use super::topology::Position;
use super::SimError;

/// Axis-aligned indoor area; everything outside every zone is outdoor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndoorZone {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl IndoorZone {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// Two buildings covering a quarter of a `width × height` field.
    pub fn default_layout(width: f64, height: f64) -> Vec<IndoorZone> {
        vec![
            IndoorZone::new(0.10 * width, 0.65 * height, 0.60 * width, 0.90 * height),
            IndoorZone::new(0.65 * width, 0.10 * height, 0.90 * width, 0.60 * height),
        ]
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.x_min < self.x_max && self.y_min < self.y_max {
            Ok(())
        } else {
            Err(SimError::Config(format!(
                "indoor zone [{}, {}] x [{}, {}] is empty",
                self.x_min, self.x_max, self.y_min, self.y_max
            )))
        }
    }

    pub fn contains(&self, p: Position) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Environment {
    Indoor,
    Outdoor,
}

/// Ground-truth indoor/outdoor labels plus the decision channel's error rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentField {
    pub zones: Vec<IndoorZone>,
    pub pc: f64,
}

impl EnvironmentField {
    pub fn new(zones: Vec<IndoorZone>, pc: f64) -> Self {
        Self { zones, pc }
    }

    pub fn label(&self, p: Position) -> Environment {
        if self.zones.iter().any(|z| z.contains(p)) {
            Environment::Indoor
        } else {
            Environment::Outdoor
        }
    }
}
