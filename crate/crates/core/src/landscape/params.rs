use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::E;
use std::path::Path;

/// Constants defining one octopus instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeParams {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub gamma: f64,
    pub tau: f64,
}

impl LandscapeParams {
    pub fn new(d: usize, l: f64, gamma: f64, tau: f64) -> Self {
        Self { d, l, gamma, tau }
    }

    /// `d` saddles with the default region scale `τ = e`.
    pub fn with_defaults(d: usize, l: f64, gamma: f64) -> Self {
        Self::new(d, l, gamma, E)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Parameter(format!("d must be at least 2, got {}", self.d)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Parameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.l >= self.gamma && self.l.is_finite()) {
            return Err(Error::Parameter(format!(
                "L must satisfy L >= gamma, got L = {}, gamma = {}",
                self.l, self.gamma
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.tau_below_escape_regime() {
            log::warn!("tau = {} is below e; the non-escape bound assumes tau >= e", self.tau);
        }
        Ok(())
    }

    /// True when `τ < e`, outside the regime the non-escape bound covers.
    pub fn tau_below_escape_regime(&self) -> bool {
        self.tau < E
    }

    /// Per-saddle growth factor `(L + γ)/γ`.
    pub fn escape_factor(&self) -> f64 {
        (self.l + self.gamma) / self.gamma
    }
}

/// What evaluation does outside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OobPolicy {
    #[default]
    Error,
    /// Evaluate at the nearest in-domain point and flag the sample.
    #[serde(rename = "freeze")]
    FreezeGradient,
}

/// JSON document form: `{"d", "L", "gamma", "tau", "oob_policy"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeDocument {
    #[serde(flatten)]
    pub params: LandscapeParams,
    #[serde(default)]
    pub oob_policy: OobPolicy,
}

impl LandscapeDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_document_round_trip() {
        let text = r#"{"d": 4, "L": 2.5, "gamma": 1.0, "tau": 2.718281828459045, "oob_policy": "freeze"}"#;
        let doc = LandscapeDocument::from_json(text).unwrap();
        assert_eq!(doc.params, LandscapeParams::new(4, 2.5, 1.0, E));
        assert_eq!(doc.oob_policy, OobPolicy::FreezeGradient);
        let back = LandscapeDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        let json: serde_json::Value = serde_json::from_str(&doc.to_json().unwrap()).unwrap();
        assert_eq!(json["oob_policy"], "freeze");
        assert_eq!(json["L"], 2.5);
    }

    #[test]
    fn policy_defaults_to_error() {
        let doc = LandscapeDocument::from_json(r#"{"d": 2, "L": 1, "gamma": 1, "tau": 3}"#).unwrap();
        assert_eq!(doc.oob_policy, OobPolicy::Error);
    }

    #[test]
    fn validation() {
        assert!(LandscapeParams::new(1, 2.0, 1.0, E).validate().is_err());
        assert!(LandscapeParams::new(3, 0.5, 1.0, E).validate().is_err());
        assert!(LandscapeParams::new(3, 1.0, 1.0, -1.0).validate().is_err());
        let small = LandscapeParams::new(3, 1.0, 1.0, 1.0);
        assert!(small.validate().is_ok());
        assert!(small.tau_below_escape_regime());
    }
}
