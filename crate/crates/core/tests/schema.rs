// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! The shipped JSON schemas list exactly the fields the loaders accept.

use std::collections::BTreeSet;

use ionmux::cli::config::{IonConfig, SCHEMA_VERSION};
use ionmux::cli::{Config, Experiment, Scenario, ScenarioFile};
use ionmux::expsim::HardwareSpec;
use ionmux::ion_model::presets;
use serde_json::Value;

fn schema(name: &str) -> Value {
    let path = format!("{}/schema/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn props(v: &Value) -> BTreeSet<String> {
    v["properties"].as_object().unwrap().keys().cloned().collect()
}

fn keys(v: Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn config_schema_matches_types() {
    let s = schema("config.schema.json");
    assert_eq!(s["properties"]["schema_version"]["const"], SCHEMA_VERSION);
    let full = Config {
        cavity: Some(ionmux::cli::config::CavityConfig { f_cav_hz: 1.0, q_factor: 1.0 }),
        ..Config::default()
    };
    assert_eq!(props(&s), keys(serde_json::to_value(full).unwrap()));
    let ion = IonConfig::from_spec(&presets::ion1());
    assert_eq!(props(&s["$defs"]["ion"]), keys(serde_json::to_value(ion).unwrap()));
    assert_eq!(props(&s["$defs"]["hardware"]), keys(serde_json::to_value(HardwareSpec::typical()).unwrap()));
    let required: BTreeSet<String> =
        s["$defs"]["ion"]["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    // dropping any required key must be rejected, dropping an optional one accepted
    let full_ion = serde_json::to_value(IonConfig::from_spec(&presets::ion1())).unwrap();
    for k in props(&s["$defs"]["ion"]) {
        let mut ion = full_ion.clone();
        ion.as_object_mut().unwrap().remove(&k);
        let text = serde_json::json!({ "schema_version": 1, "ions": [ion] }).to_string();
        assert_eq!(Config::from_json(&text).is_err(), required.contains(&k), "{k}");
    }
}

#[test]
fn scenario_schema_matches_types() {
    let s = schema("scenarios.schema.json");
    let item = &s["properties"]["scenarios"]["items"];
    let sc = Scenario { seed: Some(1), output_dir: Some("x".into()), ..Scenario::new("n", Experiment::TonePlan) };
    assert_eq!(props(item), keys(serde_json::to_value(sc).unwrap()));
    let names: Vec<&str> = item["properties"]["experiment"]["enum"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(names, Experiment::ALL.iter().map(|e| e.name()).collect::<Vec<_>>());
    assert!(ScenarioFile::from_json(r#"{"schema_version": 1}"#).is_ok());
}
