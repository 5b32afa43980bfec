//! Flat run configuration, read from TOML.
//!
//! ```toml
//! alpha = 0.5                 # scalar, or one value per group
//! gamma = "auto"              # "auto" (1/d_j), a scalar, or one list per variable
//! pr_h1 = 0.5
//! h_bar = 10
//! nu_concentration = "auto"   # "auto" (1/h_bar) or a positive number
//! seed = 1
//! n_iter = 5000
//! burn_in = 1000
//! thin = 1
//! ```
//!
//! Every key is optional. Unknown keys are rejected. Values given on the
//! command line are layered on top with [`RunConfig::overlay`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::Schedule;
use crate::model::CategorySpace;
use crate::prior::PriorConfig;

pub const DEFAULT_H_BAR: usize = 10;
pub const DEFAULT_SEED: u64 = 1;

/// A scalar broadcast to every coordinate, or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Concentration {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Auto(AutoKeyword),
    Scalar(f64),
    PerVariable(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NuSetting {
    Auto(AutoKeyword),
    Value(f64),
}

/// The literal string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Concentration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pr_h1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_bar: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_concentration: Option<NuSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|m| Error::format(path, m))
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        RunConfig {
            alpha: top.alpha.or(self.alpha),
            gamma: top.gamma.or(self.gamma),
            pr_h1: top.pr_h1.or(self.pr_h1),
            h_bar: top.h_bar.or(self.h_bar),
            nu_concentration: top.nu_concentration.or(self.nu_concentration),
            seed: top.seed.or(self.seed),
            n_iter: top.n_iter.or(self.n_iter),
            burn_in: top.burn_in.or(self.burn_in),
            thin: top.thin.or(self.thin),
        }
    }

    pub fn h_bar(&self) -> usize {
        self.h_bar.unwrap_or(DEFAULT_H_BAR)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        let d = Schedule::default();
        let s = Schedule {
            n_iter: self.n_iter.unwrap_or(d.n_iter),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            thin: self.thin.unwrap_or(d.thin),
        };
        s.validate()?;
        Ok(s)
    }

    /// Resolves defaults against the data dimensions and validates the result.
    /// `space` supplies the levels and groups; its truncation level is ignored.
    pub fn prior(&self, space: &CategorySpace) -> Result<PriorConfig> {
        let h_bar = self.h_bar();
        if h_bar == 0 {
            return Err(Error::Argument("h_bar must be positive".into()));
        }
        let k = space.groups();
        let alpha = match &self.alpha {
            None => vec![0.5; k],
            Some(Concentration::Scalar(a)) => vec![*a; k],
            Some(Concentration::Vector(v)) => v.clone(),
        };
        let gamma = match &self.gamma {
            None | Some(GammaSetting::Auto(_)) => space
                .levels()
                .iter()
                .map(|&d| vec![1.0 / d as f64; d])
                .collect(),
            Some(GammaSetting::Scalar(g)) => space.levels().iter().map(|&d| vec![*g; d]).collect(),
            Some(GammaSetting::PerVariable(v)) => v.clone(),
        };
        let nu_concentration = match self.nu_concentration {
            None | Some(NuSetting::Auto(_)) => 1.0 / h_bar as f64,
            Some(NuSetting::Value(a)) => a,
        };
        let config = PriorConfig {
            alpha,
            gamma,
            pr_h1: self.pr_h1.unwrap_or(0.5),
            h_bar,
            nu_concentration,
        };
        config.validate(&space.with_components(h_bar)?)?;
        Ok(config)
    }
}
