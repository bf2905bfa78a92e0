//! Bundled recorded experiments: the floor-2 waypoint runs and the floor-3
//! elevator runs.

use crate::error::{CliError, CliResult};
use crate::scenario::{parse_scenario, Scenario};

const EXPERIMENTS: [(&str, &str); 6] = [
    ("floor2-238", include_str!("../scenarios/replay/floor2-238.json")),
    ("floor2-236", include_str!("../scenarios/replay/floor2-236.json")),
    ("floor2-234", include_str!("../scenarios/replay/floor2-234.json")),
    ("floor2-230", include_str!("../scenarios/replay/floor2-230.json")),
    ("floor3-320", include_str!("../scenarios/replay/floor3-320.json")),
    ("floor3-315", include_str!("../scenarios/replay/floor3-315.json")),
];

pub fn experiment_ids() -> impl Iterator<Item = &'static str> {
    EXPERIMENTS.iter().map(|(id, _)| *id)
}

/// The committed scenario for a recorded experiment.
pub fn experiment(id: &str) -> CliResult<Scenario> {
    let (_, text) = EXPERIMENTS.iter().find(|(k, _)| *k == id).ok_or_else(|| {
        CliError::input(format!(
            "unknown experiment {id:?}; expected one of {}",
            experiment_ids().collect::<Vec<_>>().join(", ")
        ))
    })?;
    parse_scenario(text)
}
