//! Re-run the estimator over a logged trace.
//!
//! A trace file fixes the measured states, the applied inputs, and the
//! trigger instants. Replaying feeds exactly those windows back through
//! the set-membership update, which checks that the logged run and the
//! estimator agree: no faults, the logged true parameter inside every
//! recomputed set, and the recomputed bounds matching the logged ones
//! up to the serialization precision.

use nalgebra::{DVector, dvector};

use crate::error::{Error, Result};
use crate::estimator::update_efss;
use crate::set::MEMBERSHIP_TOL;
use crate::sim::config::{SimConfig, setup};
use crate::sim::export::TRACE_HEADER;
use crate::sim::run::TraceRecord;
use crate::uncertainty::Efss;

/// Outcome of replaying one trace through the estimator.
#[derive(Clone, Debug)]
pub struct ReplayReport {
    pub triggers: usize,
    /// Windows replayed (one less than the trigger count, plus one when
    /// the trace extends past the last trigger).
    pub updates: usize,
    pub faults: usize,
    /// Recomputed sets that missed the logged true parameter.
    pub containment_failures: usize,
    /// Largest absolute gap between recomputed and logged set bounds.
    pub max_hull_mismatch: f64,
    pub final_width: f64,
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Io(e.to_string()))?
        .clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::InvalidConfig(format!(
            "unexpected trace header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Io(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad float '{}' in trace", field(i))))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            let s = field(i);
            if s.is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        out.push(TraceRecord {
            t: field(0)
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad index '{}' in trace", field(0))))?,
            x: dvector![num(1)?, num(2)?],
            u: dvector![num(3)?],
            v_true: num(4)?,
            d_true: num(5)?,
            is_trigger: field(6) == "1",
            h_star: match field(7) {
                "" => None,
                s => Some(s.parse().map_err(|_| {
                    Error::InvalidConfig(format!("bad H_star '{s}' in trace"))
                })?),
            },
            beta: opt(8)?,
            value: opt(9)?,
            efss_lo: opt(10)?,
            efss_hi: opt(11)?,
        });
    }
    Ok(out)
}

pub fn replay_estimation(trace: &[TraceRecord], cfg: &SimConfig) -> Result<ReplayReport> {
    let s = setup(cfg)?;
    let trigger_rows: Vec<usize> = trace
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_trigger)
        .map(|(i, _)| i)
        .collect();
    if trigger_rows.is_empty() {
        return Err(Error::InvalidConfig("trace has no trigger rows".into()));
    }

    let mut efss = Efss::initial(&s.model);
    let mut faults = 0usize;
    let mut containment_failures = 0usize;
    let mut max_hull_mismatch = 0.0f64;
    let mut updates = 0usize;

    for pair in trigger_rows.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let inputs: Vec<DVector<f64>> = trace[start..end].iter().map(|r| r.u.clone()).collect();
        let update = update_efss(
            &efss,
            &trace[start].x,
            &trace[end].x,
            &inputs,
            &s.model,
            &s.plant,
        )?;
        updates += 1;
        faults += update.fault as usize;
        if !update
            .efss
            .set
            .contains_point(&dvector![trace[end].v_true], MEMBERSHIP_TOL)
        {
            containment_failures += 1;
        }
        let hull = update.efss.set.hull_intersection()?;
        if let Some((lo, hi)) = trace[end].efss_lo.zip(trace[end].efss_hi) {
            max_hull_mismatch = max_hull_mismatch
                .max((hull.lower()[0] - lo).abs())
                .max((hull.upper()[0] - hi).abs());
        }
        efss = update.efss;
    }

    Ok(ReplayReport {
        triggers: trigger_rows.len(),
        updates,
        faults,
        containment_failures,
        max_hull_mismatch,
        final_width: efss.set.diameter()?,
    })
}
