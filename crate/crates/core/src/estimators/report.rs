// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON-serializable fit summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BimodalFit, DecayFit, FringeFit, InfidelityExtrapolation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub parameters: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

impl FitReport {
    fn new(model: &str) -> Self {
        Self {
            model: model.into(),
            parameters: BTreeMap::new(),
            stderr: BTreeMap::new(),
            log_likelihood: None,
            diagnostics: BTreeMap::new(),
        }
    }

    fn param(mut self, name: &str, value: f64, err: f64) -> Self {
        self.parameters.insert(name.into(), value);
        self.stderr.insert(name.into(), err);
        self
    }

    fn diag(mut self, name: &str, v: impl Into<serde_json::Value>) -> Self {
        self.diagnostics.insert(name.into(), v.into());
        self
    }
}

// serde_json renders non-finite floats as null, which is what we want for
// unbounded decay times.

impl From<&BimodalFit> for FitReport {
    fn from(f: &BimodalFit) -> Self {
        let c = &f.covariance;
        FitReport::new("bimodal_poisson")
            .param("a_d", f.a_d, c[0][0].max(0.0).sqrt())
            .param("a_b", f.a_b, c[1][1].max(0.0).sqrt())
            .param("mu_d", f.mu_d, c[2][2].max(0.0).sqrt())
            .param("mu_b", f.mu_b, c[3][3].max(0.0).sqrt())
            .param("wrong_state_prob", f.wrong_state_prob, f.wrong_state_stderr)
            .diag("iterations", f.iterations)
            .diag("gradient_norm", f.gradient_norm)
            .diag("shots", f.shots)
            .with_ll(f.log_likelihood)
    }
}

impl FitReport {
    fn with_ll(mut self, ll: f64) -> Self {
        self.log_likelihood = Some(ll);
        self
    }
}

impl From<&InfidelityExtrapolation> for FitReport {
    fn from(f: &InfidelityExtrapolation) -> Self {
        FitReport::new("linear_extrapolation")
            .param("intercept", f.intercept, f.intercept_stderr)
            .param("slope", f.slope, f.slope_stderr)
            .diag("chi2", f.chi2)
            .diag("negative_slope", f.negative_slope)
    }
}

impl FitReport {
    pub fn decay(model: &str, f: &DecayFit) -> Self {
        FitReport::new(model)
            .param("time", f.time, f.time_stderr)
            .param("amplitude", f.amplitude, f.amplitude_stderr)
            .param("offset", f.offset, f.offset_stderr)
            .diag("rss", f.rss)
            .diag("unbounded", f.unbounded)
    }
}

impl From<&FringeFit> for FitReport {
    fn from(f: &FringeFit) -> Self {
        let mut r = FitReport::new("fringe")
            .param("visibility", f.visibility, f.visibility_stderr)
            .param("offset", f.offset, 0.0)
            .diag("phase_defined", f.phase.is_some());
        if let Some(p) = f.phase {
            r = r.param("phase", p, f.phase_stderr);
        }
        r
    }
}
