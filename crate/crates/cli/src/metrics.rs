//! Per-seed rows and their aggregates.

use std::collections::BTreeMap;
use std::fmt::Write;

use hotelnav_core::mission::{DeliveryPhase, MissionRun, Outcome};
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "seed,outcome,elapsed_s,final_err_m,expansions,replans";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub outcome: Outcome,
    pub elapsed_s: f64,
    pub final_err_m: f64,
    pub expansions: usize,
    pub replans: usize,
}

/// The JSON record kept for each mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionRecord {
    pub seed: u64,
    pub outcome: Outcome,
    pub elapsed_s: f64,
    pub waypoint_count: usize,
    pub final_err_m: f64,
    pub goal_err_m: f64,
    pub transits: usize,
    pub delivery_trace: Vec<DeliveryPhase>,
}

impl MissionRecord {
    pub fn new(seed: u64, run: &MissionRun) -> Self {
        MissionRecord {
            seed,
            outcome: run.outcome,
            elapsed_s: round(run.elapsed, 3),
            waypoint_count: run.waypoint_count,
            final_err_m: round(run.final_err_m, 4),
            goal_err_m: round(run.goal_err_m, 4),
            transits: run.transits.len(),
            delivery_trace: run.delivery_trace.clone(),
        }
    }

    pub fn row(&self, run: &MissionRun) -> MetricsRow {
        MetricsRow {
            seed: self.seed,
            outcome: self.outcome,
            elapsed_s: self.elapsed_s,
            final_err_m: self.final_err_m,
            expansions: run.expansions,
            replans: run.replans,
        }
    }
}

/// Rounds to `digits` decimals so that CSV and JSON carry the same value.
fn round(v: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (v * f).round() / f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub runs: usize,
    pub reached: usize,
    pub success_rate: f64,
    pub mean_elapsed_s: f64,
    /// Sample standard deviation; zero for a single run.
    pub std_elapsed_s: f64,
    pub mean_final_err_m: f64,
    pub outcomes: BTreeMap<String, usize>,
}

impl Aggregates {
    pub fn from_rows(rows: &[MetricsRow]) -> Self {
        let n = rows.len();
        let reached = rows.iter().filter(|r| r.outcome == Outcome::Reached).count();
        let mean = |f: fn(&MetricsRow) -> f64| if n == 0 { 0.0 } else { rows.iter().map(f).sum::<f64>() / n as f64 };
        let mean_elapsed = mean(|r| r.elapsed_s);
        let var = if n < 2 {
            0.0
        } else {
            rows.iter().map(|r| (r.elapsed_s - mean_elapsed).powi(2)).sum::<f64>() / (n - 1) as f64
        };
        let mut outcomes = BTreeMap::new();
        for r in rows {
            *outcomes.entry(r.outcome.as_str().to_string()).or_insert(0) += 1;
        }
        Aggregates {
            runs: n,
            reached,
            success_rate: if n == 0 { 0.0 } else { reached as f64 / n as f64 },
            mean_elapsed_s: mean_elapsed,
            std_elapsed_s: var.sqrt(),
            mean_final_err_m: mean(|r| r.final_err_m),
            outcomes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub rows: Vec<MetricsRow>,
    pub aggregates: Aggregates,
    pub missions: Vec<MissionRecord>,
    /// Recorded reference times per route variant, when the scenario has them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_mean_s: Vec<f64>,
}

impl MetricsReport {
    pub fn new(scenario: String, rows: Vec<MetricsRow>, missions: Vec<MissionRecord>) -> Self {
        let aggregates = Aggregates::from_rows(&rows);
        MetricsReport { scenario, rows, aggregates, missions, reference_mean_s: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.3},{:.4},{},{}",
                r.seed,
                r.outcome.as_str(),
                r.elapsed_s,
                r.final_err_m,
                r.expansions,
                r.replans
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Aggregates plus the per-mission records.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            scenario: &'a str,
            #[serde(flatten)]
            aggregates: &'a Aggregates,
            #[serde(skip_serializing_if = "<[f64]>::is_empty")]
            reference_mean_s: &'a [f64],
            missions: &'a [MissionRecord],
        }
        let s = Summary {
            scenario: &self.scenario,
            aggregates: &self.aggregates,
            reference_mean_s: &self.reference_mean_s,
            missions: &self.missions,
        };
        serde_json::to_string_pretty(&s).expect("summary serializes") + "\n"
    }

    pub fn to_markdown(&self) -> String {
        let a = &self.aggregates;
        let mut out = format!("### {}\n\n", self.scenario);
        writeln!(out, "| runs | reached | success rate | mean elapsed (s) | std elapsed (s) | mean final err (m) |").unwrap();
        writeln!(out, "|---:|---:|---:|---:|---:|---:|").unwrap();
        writeln!(
            out,
            "| {} | {} | {:.3} | {:.1} | {:.1} | {:.3} |",
            a.runs, a.reached, a.success_rate, a.mean_elapsed_s, a.std_elapsed_s, a.mean_final_err_m
        )
        .unwrap();
        if !self.reference_mean_s.is_empty() {
            let refs: Vec<String> = self.reference_mean_s.iter().map(|t| format!("{t:.1}")).collect();
            writeln!(out, "\nRecorded mean time per variant (s): {}", refs.join(", ")).unwrap();
        }
        out
    }
}
