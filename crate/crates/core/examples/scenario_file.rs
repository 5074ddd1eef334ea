// Copyright 2026 The ionmux Authors
// SPDX-License-Identifier: Apache-2.0

//! Drives the scenario runner from code: the same path the `ionmux run-all`
//! command takes. Artifacts land in a temporary directory.

use ionmux::cli::{run_all, Config, ScenarioFile};

const SCENARIOS: &str = r#"{
  "schema_version": 1,
  "scenarios": [
    {"name": "sweep", "experiment": "stark_sweep", "parameters": {"points": 101}},
    {"name": "gates", "experiment": "rotation_synthesis", "seed": 1, "parameters": {"unitaries": 200}}
  ]
}"#;

fn main() -> ionmux::Result<()> {
    let file = ScenarioFile::from_json(SCENARIOS)?;
    let cfg = Config::default().resolve()?;
    let out = std::env::temp_dir().join("ionmux-scenario-example");
    for r in run_all(&file.scenarios, &cfg, &out, 2) {
        for f in r?.files {
            println!("{}", f.display());
        }
    }
    Ok(())
}
