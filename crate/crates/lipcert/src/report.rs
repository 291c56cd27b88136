//! The machine-readable run report emitted by the command-line front end.

use serde::{Deserialize, Serialize};

use crate::bab::{BabResult, BabStatus};
use crate::norm::NormKind;
use crate::subproblem::Mode;

/// JSON report for one run. Field names and layout are part of the wire
/// format; a report round-trips losslessly through serde.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Path of the network file as given on the command line.
    pub network: String,
    /// `"local"` or `"global"`.
    pub mode: String,
    /// `"1"`, `"2"`, `"inf"`, or `"fro"`.
    pub p: String,
    pub k: f64,
    pub gub: f64,
    pub glb: f64,
    /// `"exact"`, `"k_approx"`, `"iter_limit"`, or `"time_limit"`.
    pub status: String,
    pub iterations: u64,
    pub subproblems_created: u64,
    pub subproblems_remaining: u64,
    /// `[lo, hi]` per output in local mode, `null` in global mode.
    pub output_bounds: Option<Vec<[f64; 2]>>,
    pub eps_strict: f64,
    pub elapsed_s: f64,
    /// `[iteration, gub, glb, queue]` rows when tracing was requested.
    pub trace: Option<Vec<(u64, f64, f64, u64)>>,
}

impl Report {
    pub fn from_result(
        result: &BabResult,
        network: impl Into<String>,
        mode: Mode,
        norm: NormKind,
        k: f64,
        eps_strict: f64,
    ) -> Report {
        Report {
            network: network.into(),
            mode: match mode {
                Mode::Local => "local",
                Mode::Global => "global",
            }
            .to_string(),
            p: norm.to_string(),
            k,
            gub: result.gub,
            glb: result.glb,
            status: match result.status {
                BabStatus::Exact => "exact",
                BabStatus::KApprox => "k_approx",
                BabStatus::IterLimit => "iter_limit",
                BabStatus::TimeLimit => "time_limit",
            }
            .to_string(),
            iterations: result.iterations,
            subproblems_created: result.subproblems_created,
            subproblems_remaining: result.subproblems_remaining as u64,
            output_bounds: result
                .output_bounds
                .as_ref()
                .map(|bounds| bounds.iter().map(|iv| [iv.lo(), iv.hi()]).collect()),
            eps_strict,
            elapsed_s: result.elapsed.as_secs_f64(),
            trace: result.trace.as_ref().map(|rows| {
                rows.iter()
                    .map(|r| (r.iteration, r.gub, r.glb, r.queue_len as u64))
                    .collect()
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_losslessly() {
        let report = Report {
            network: "net.json".into(),
            mode: "local".into(),
            p: "2".into(),
            k: 1.5,
            gub: 3.25,
            glb: 3.0,
            status: "k_approx".into(),
            iterations: 7,
            subproblems_created: 11,
            subproblems_remaining: 4,
            output_bounds: Some(vec![[0.0, 1.0], [-2.5, 0.5]]),
            eps_strict: 1e-7,
            elapsed_s: 0.125,
            trace: Some(vec![(1, 4.0, 0.0, 0), (2, 3.25, 3.0, 1)]),
        };
        let json = report.to_json();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn nulls_for_global_mode() {
        let report = Report {
            network: "n".into(),
            mode: "global".into(),
            p: "inf".into(),
            k: 1.0,
            gub: 1.0,
            glb: 1.0,
            status: "exact".into(),
            iterations: 1,
            subproblems_created: 1,
            subproblems_remaining: 0,
            output_bounds: None,
            eps_strict: 1e-7,
            elapsed_s: 0.0,
            trace: None,
        };
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(value["output_bounds"].is_null());
        assert!(value["trace"].is_null());
    }
}
