// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON configuration: ions, optical hardware, cavity.
//!
//! Frequencies are in Hz and times in seconds; conversion to angular units
//! happens here. The layout is described by `schema/config.schema.json`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expsim::HardwareSpec;
use crate::ion_model::{presets, radiative_rate, CavitySpec, IonSpec, SpinCoherence, Transition, TWO_PI};

pub const SCHEMA_VERSION: u32 = 1;

/// One emitter in lab units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonConfig {
    pub label: String,
    pub f_a_hz: f64,
    pub f_b_hz: f64,
    /// Effective optical FWHM.
    pub linewidth_hz: f64,
    /// Radiative decay rate in 1/s; derived from the Purcell factor when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radiative_rate_per_s: Option<f64>,
    pub cyclicity: f64,
    pub purcell: f64,
    pub t1_s: f64,
    pub t2_star_s: f64,
    pub t2_xy8_s: f64,
    #[serde(default = "default_mw_rabi")]
    pub mw_rabi_hz: f64,
    #[serde(default = "default_readout")]
    pub readout_transition: Transition,
    #[serde(default = "one")]
    pub optical_coupling: f64,
}

fn default_mw_rabi() -> f64 {
    5e6
}

fn default_readout() -> Transition {
    Transition::B
}

fn one() -> f64 {
    1.0
}

impl IonConfig {
    pub fn to_spec(&self) -> Result<IonSpec> {
        let spec = IonSpec {
            label: self.label.clone(),
            f_a: self.f_a_hz,
            f_b: self.f_b_hz,
            gamma_eff: TWO_PI * self.linewidth_hz,
            gamma_rad: self.radiative_rate_per_s.unwrap_or_else(|| radiative_rate(self.purcell)),
            cyclicity: self.cyclicity,
            purcell: self.purcell,
            spin: SpinCoherence { t1: self.t1_s, t2_star: self.t2_star_s, t2_xy8: self.t2_xy8_s },
            mw_rabi: TWO_PI * self.mw_rabi_hz,
            readout_transition: self.readout_transition,
            optical_coupling: self.optical_coupling,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(s: &IonSpec) -> Self {
        Self {
            label: s.label.clone(),
            f_a_hz: s.f_a,
            f_b_hz: s.f_b,
            linewidth_hz: s.gamma_eff / TWO_PI,
            radiative_rate_per_s: Some(s.gamma_rad),
            cyclicity: s.cyclicity,
            purcell: s.purcell,
            t1_s: s.spin.t1,
            t2_star_s: s.spin.t2_star,
            t2_xy8_s: s.spin.t2_xy8,
            mw_rabi_hz: s.mw_rabi / TWO_PI,
            readout_transition: s.readout_transition,
            optical_coupling: s.optical_coupling,
        }
    }
}

/// A preset name or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IonsConfig {
    Preset(String),
    List(Vec<IonConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HardwareConfig {
    Preset(String),
    Explicit(HardwareSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub f_cav_hz: f64,
    pub q_factor: f64,
}

/// Top-level file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default = "all_ions")]
    pub ions: IonsConfig,
    #[serde(default = "typical")]
    pub hardware: HardwareConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityConfig>,
}

fn all_ions() -> IonsConfig {
    IonsConfig::Preset("all".into())
}

fn typical() -> HardwareConfig {
    HardwareConfig::Preset("typical".into())
}

impl Default for Config {
    fn default() -> Self {
        Self { schema_version: SCHEMA_VERSION, ions: all_ions(), hardware: typical(), cavity: None }
    }
}

/// Validated configuration in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub ions: Vec<IonSpec>,
    pub hardware: HardwareSpec,
    pub cavity: CavitySpec,
    /// Canonical JSON of the source config.
    pub echo: serde_json::Value,
    /// SHA-256 of the canonical JSON, hex.
    pub sha256: String,
}

impl Resolved {
    /// Looks ions up by label.
    pub fn select(&self, labels: &[String]) -> Result<Vec<IonSpec>> {
        labels
            .iter()
            .map(|l| {
                self.ions
                    .iter()
                    .find(|i| &i.label == l)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("no ion labelled '{l}' in the configuration")))
            })
            .collect()
    }
}

fn preset_ions(name: &str) -> Result<Vec<IonSpec>> {
    match name {
        "all" => Ok(presets::pair().into_iter().chain(presets::register()).collect()),
        "pair" => Ok(presets::pair()),
        "register" => Ok(presets::register()),
        other => Err(Error::Config(format!("unknown ion preset '{other}' (all, pair, register)"))),
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let ions = match &self.ions {
            IonsConfig::Preset(p) => preset_ions(p)?,
            IonsConfig::List(list) => list.iter().map(IonConfig::to_spec).collect::<Result<_>>()?,
        };
        if ions.is_empty() {
            return Err(Error::Config("at least one ion is required".into()));
        }
        for (i, a) in ions.iter().enumerate() {
            if ions[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::Config(format!("duplicate ion label '{}'", a.label)));
            }
        }
        let hardware = match &self.hardware {
            HardwareConfig::Preset(p) if p == "typical" => HardwareSpec::typical(),
            HardwareConfig::Preset(p) if p == "ideal" => HardwareSpec::ideal(),
            HardwareConfig::Preset(p) => return Err(Error::Config(format!("unknown hardware preset '{p}' (typical, ideal)"))),
            HardwareConfig::Explicit(h) => *h,
        };
        hardware.validate()?;
        let cavity = match self.cavity {
            Some(c) => CavitySpec { f_cav: c.f_cav_hz, q_factor: c.q_factor },
            None => presets::cavity(),
        };
        cavity.validate()?;
        let echo = serde_json::to_value(self)?;
        let sha256 = Sha256::digest(serde_json::to_string(&echo)?.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Ok(Resolved { ions, hardware, cavity, echo, sha256 })
    }
}
