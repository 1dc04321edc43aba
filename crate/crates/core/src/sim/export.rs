//! Trace and metrics serialization.
//!
//! Output is byte stable: the same run always serializes to the same
//! bytes, so reruns can be compared with a plain file diff. All floats
//! use nine significant digits in scientific notation, trigger-only
//! columns are empty on rows without a solve, and records end with a
//! bare newline.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::run::{Metrics, RunResult, TraceRecord};

pub const TRACE_HEADER: &[&str] = &[
    "t", "x1", "x2", "u", "v_true", "d_true", "trigger", "H_star", "beta", "V_value", "efss_lo",
    "efss_hi",
];

fn fmt(v: f64) -> String {
    format!("{v:.8e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Render the trace as CSV text.
pub fn trace_to_csv(trace: &[TraceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in trace {
        if r.x.len() != 2 || r.u.len() != 1 {
            return Err(Error::DimensionMismatch {
                context: "trace_to_csv row",
                expected: 2,
                got: r.x.len(),
            });
        }
        w.write_record(&[
            r.t.to_string(),
            fmt(r.x[0]),
            fmt(r.x[1]),
            fmt(r.u[0]),
            fmt(r.v_true),
            fmt(r.d_true),
            if r.is_trigger { "1" } else { "0" }.to_string(),
            r.h_star.map(|h| h.to_string()).unwrap_or_default(),
            fmt_opt(r.beta),
            fmt_opt(r.value),
            fmt_opt(r.efss_lo),
            fmt_opt(r.efss_hi),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Render the metrics as `key=value` lines, one per metric, fixed order.
pub fn metrics_to_text(m: &Metrics) -> String {
    let mut out = String::new();
    out.push_str(&format!("j_p={}\n", fmt(m.j_p)));
    out.push_str(&format!(
        "average_sampling_time={}\n",
        fmt(m.average_sampling_time)
    ));
    out.push_str(&format!(
        "constraint_violations={}\n",
        m.constraint_violations
    ));
    out.push_str(&format!("trigger_count={}\n", m.trigger_count));
    out.push_str(&format!("efss_final_width={}\n", fmt(m.efss_final_width)));
    out.push_str(&format!("estimation_faults={}\n", m.estimation_faults));
    out.push_str(&format!(
        "containment_failures={}\n",
        m.containment_failures
    ));
    out.push_str(&format!("tube_failures={}\n", m.tube_failures));
    out.push_str(&format!("v_rate_clips={}\n", m.v_rate_clips));
    out.push_str(&format!("d_magnitude_clips={}\n", m.d_magnitude_clips));
    out
}

/// Write `trace.csv` and `metrics.txt` into `dir`; on a fault also
/// write `fault.txt` with the diagnostic so the partial trace can be
/// inspected.
pub fn write_run(dir: &Path, result: &RunResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("trace.csv"), trace_to_csv(&result.trace)?)?;
    std::fs::write(dir.join("metrics.txt"), metrics_to_text(&result.metrics))?;
    if let Some(msg) = &result.fault {
        std::fs::write(dir.join("fault.txt"), format!("{msg}\n"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn sample_trace() -> Vec<TraceRecord> {
        vec![
            TraceRecord {
                t: 0,
                x: dvector![1.0, 1.0],
                u: dvector![-2.5],
                v_true: 0.0,
                d_true: 0.0,
                is_trigger: true,
                h_star: Some(2),
                beta: Some(1.1),
                value: Some(12.25),
                efss_lo: Some(-0.15),
                efss_hi: Some(0.15),
            },
            TraceRecord {
                t: 1,
                x: dvector![0.5, -0.25],
                u: dvector![0.125],
                v_true: 0.008,
                d_true: 0.05,
                is_trigger: false,
                h_star: None,
                beta: None,
                value: None,
                efss_lo: None,
                efss_hi: None,
            },
        ]
    }

    #[test]
    fn header_and_empty_fields() {
        let text = trace_to_csv(&sample_trace()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x1,x2,u,v_true,d_true,trigger,H_star,beta,V_value,efss_lo,efss_hi"
        );
        let row0 = lines.next().unwrap();
        assert!(row0.starts_with("0,1.00000000e0,1.00000000e0,-2.50000000e0,"));
        assert!(row0.contains(",1,2,1.10000000e0,"));
        let row1 = lines.next().unwrap();
        // Five empty trigger-only fields at the end.
        assert!(row1.ends_with(",0,,,,,"));
        assert!(lines.next().is_none());
    }

    #[test]
    fn serialization_is_byte_stable() {
        let trace = sample_trace();
        assert_eq!(
            trace_to_csv(&trace).unwrap(),
            trace_to_csv(&trace).unwrap()
        );
    }

    #[test]
    fn floats_round_trip_through_the_format() {
        for v in [0.0, 1.4, -0.132, 0.5114399137653696, 1e-9, -2.0] {
            let parsed: f64 = fmt(v).parse().unwrap();
            assert!((parsed - v).abs() <= 1e-8 * v.abs().max(1.0));
        }
    }

    #[test]
    fn metrics_text_is_fixed_order_key_value() {
        let m = Metrics {
            j_p: 13.41,
            average_sampling_time: 2.63,
            constraint_violations: 0,
            trigger_count: 23,
            efss_final_width: 0.05,
            estimation_faults: 0,
            containment_failures: 0,
            tube_failures: 0,
            v_rate_clips: 12,
            d_magnitude_clips: 20,
        };
        let text = metrics_to_text(&m);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("j_p={}", fmt(13.41)));
        assert_eq!(lines[3], "trigger_count=23");
        assert_eq!(lines.len(), 10);
        assert!(lines.iter().all(|l| l.contains('=')));
    }

    #[test]
    fn write_run_creates_files_and_fault_dump() {
        let dir = tempfile::tempdir().unwrap();
        let result = RunResult {
            trace: sample_trace(),
            triggers: Vec::new(),
            metrics: Metrics {
                j_p: 1.0,
                average_sampling_time: 1.0,
                constraint_violations: 0,
                trigger_count: 1,
                efss_final_width: 0.3,
                estimation_faults: 0,
                containment_failures: 0,
                tube_failures: 0,
                v_rate_clips: 0,
                d_magnitude_clips: 0,
            },
            fault: Some("no feasible input at t = 2".into()),
        };
        write_run(dir.path(), &result).unwrap();
        assert!(dir.path().join("trace.csv").exists());
        assert!(dir.path().join("metrics.txt").exists());
        let fault = std::fs::read_to_string(dir.path().join("fault.txt")).unwrap();
        assert!(fault.contains("t = 2"));
    }
}
