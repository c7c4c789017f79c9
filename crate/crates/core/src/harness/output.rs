//! Per-trial CSV and per-grid-point JSON summaries.
//!
//! CSV columns: `estimator,distribution,n,d,alpha,delta,eta,trial,error,wall_time`.
//! `error` is `inf` for a failed trial; `wall_time` is empty unless timing was
//! requested. Floats use the shortest decimal form that round-trips.

use serde::Serialize;

use super::{ScalingFit, TrialReport};
use crate::error::{Error, Result};
use crate::json;

pub const CSV_HEADER: [&str; 10] = ["estimator", "distribution", "n", "d", "alpha", "delta", "eta", "trial", "error", "wall_time"];

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn reports_csv(reports: &[TrialReport]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        let p = &r.point;
        for (t, &e) in r.errors.iter().enumerate() {
            let wall = r.wall_times.as_ref().map_or(String::new(), |w| num(w[t]));
            w.write_record([
                r.estimator.name().to_string(),
                r.distribution.clone(),
                p.n.to_string(),
                p.d.to_string(),
                num(p.alpha),
                num(p.delta),
                num(p.eta),
                t.to_string(),
                num(e),
                wall,
            ])
            .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkSummary<'a> {
    pub seed: u64,
    pub reports: &'a [TrialReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<&'a ScalingFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimax: Option<&'a TrialReport>,
}

pub fn reports_json(summary: &BenchmarkSummary<'_>) -> String {
    json::to_string(summary)
}
