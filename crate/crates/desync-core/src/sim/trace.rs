use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// State at the close of one firing round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub round: usize,
    pub sim_time_s: f64,
    /// Per-channel offsets, Sync first, re-anchored on channel 0's Sync node.
    pub offsets: Vec<Vec<f64>>,
    pub objective: f64,
    pub occupancy: Vec<usize>,
    /// Cumulative count of rounds in which some channel's cyclic firing order changed.
    pub order_changes: usize,
    pub converged: bool,
}

/// Header: `round,sim_time_s,objective,occupancy_1,...,occupancy_C,converged`.
pub fn trace_header(channels: usize) -> Vec<String> {
    let mut h = vec!["round".into(), "sim_time_s".into(), "objective".into()];
    h.extend((1..=channels).map(|c| format!("occupancy_{c}")));
    h.push("converged".into());
    h
}

pub fn write_trace_csv<W: Write>(out: W, channels: usize, records: &[TraceRecord]) -> Result<()> {
    let err = |e: csv::Error| Error::Io {
        path: "<trace>".into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(channels)).map_err(err)?;
    for r in records {
        let mut row = vec![
            r.round.to_string(),
            format!("{}", r.sim_time_s),
            format!("{:e}", r.objective),
        ];
        row.extend(r.occupancy.iter().map(|c| c.to_string()));
        row.push(u8::from(r.converged).to_string());
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<trace>".into(),
        message: e.to_string(),
    })
}
