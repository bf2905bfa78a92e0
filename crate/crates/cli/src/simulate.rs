use std::path::Path;

use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::metrics::{MetricsReport, MissionRecord};
use crate::scenario::Prepared;

/// Runs every seed of a prepared scenario. Rows come back in seed-list order
/// whatever order the workers finish in.
pub fn simulate(prepared: &Prepared) -> CliResult<(MetricsReport, Vec<hotelnav_core::mission::MissionRun>)> {
    let runs: Vec<_> = prepared.seeds.par_iter().map(|&seed| prepared.run(seed).map(|r| (seed, r))).collect();
    let runs = runs.into_iter().collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(runs.len());
    let mut records = Vec::with_capacity(runs.len());
    for (seed, run) in &runs {
        let rec = MissionRecord::new(*seed, run);
        rows.push(rec.row(run));
        records.push(rec);
    }
    let name = if prepared.scenario.name.is_empty() { "scenario".to_string() } else { prepared.scenario.name.clone() };
    let mut report = MetricsReport::new(name, rows, records);
    report.reference_mean_s = prepared.reference_means()?;
    Ok((report, runs.into_iter().map(|(_, r)| r).collect()))
}

/// Writes `metrics.csv`, `summary.json` and optionally one trajectory CSV per
/// seed into `dir`.
pub fn write_outputs(
    dir: &Path,
    report: &MetricsReport,
    runs: &[hotelnav_core::mission::MissionRun],
    trajectories: bool,
) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    std::fs::write(dir.join("metrics.csv"), report.to_csv())?;
    std::fs::write(dir.join("summary.json"), report.to_json())?;
    if trajectories {
        for (row, run) in report.rows.iter().zip(runs) {
            for (i, leg) in run.legs.iter().enumerate() {
                std::fs::write(dir.join(format!("trajectory_seed{}_leg{}.csv", row.seed, i)), leg.to_csv())?;
            }
        }
    }
    Ok(())
}
