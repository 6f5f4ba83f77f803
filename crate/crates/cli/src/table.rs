//! Trajectory CSV output.

use std::fmt::Write as _;
use std::path::Path;

use evodyn_core::Trajectory64;

use crate::error::{CliError, Result};

/// 17 significant digits: enough for every `f64` to parse back exactly.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn csv_header(n: usize) -> String {
    let mut h = String::from("step,time");
    for i in 1..=n {
        let _ = write!(h, ",x{i}");
    }
    h.push_str(",kl,euclidean");
    h
}

/// Renders the trajectory as CSV. An empty trajectory has no dimension, so
/// its header lists no state columns.
pub fn trajectory_csv(t: &Trajectory64) -> String {
    let mut out = csv_header(t.dim().unwrap_or(0));
    out.push('\n');
    for r in &t.records {
        let _ = write!(out, "{},{}", r.step, fmt_real(r.time));
        for x in r.state.coords() {
            out.push(',');
            out.push_str(&fmt_real(*x));
        }
        for v in [r.kl, r.euclidean] {
            out.push(',');
            if let Some(v) = v {
                out.push_str(&fmt_real(v));
            }
        }
        out.push('\n');
    }
    let _ = writeln!(out, "# status={}", t.status.label());
    out
}

pub fn write_trajectory_csv(t: &Trajectory64, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &trajectory_csv(t))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use evodyn_core::{SimplexPoint, Status, StepRecord, Trajectory};

    #[test]
    fn empty_trajectory_is_header_and_status() {
        let t = Trajectory {
            records: vec![],
            status: Status::MaxStepsReached,
        };
        assert_eq!(trajectory_csv(&t), "step,time,kl,euclidean\n# status=MaxStepsReached\n");
    }

    #[test]
    fn barycenter_row_has_zero_divergences() {
        let t = Trajectory {
            records: vec![StepRecord {
                step: 0,
                time: 0.0,
                state: SimplexPoint::barycenter(3),
                kl: Some(0.0),
                euclidean: Some(0.0),
            }],
            status: Status::Converged,
        };
        let csv = trajectory_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,time,x1,x2,x3,kl,euclidean");
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[5].parse::<f64>().unwrap(), 0.0);
        assert_eq!(fields[6].parse::<f64>().unwrap(), 0.0);
        assert_eq!(lines[2], "# status=Converged");
    }

    #[test]
    fn absent_lyapunov_values_are_empty_fields() {
        let t = Trajectory {
            records: vec![StepRecord {
                step: 3,
                time: 0.015,
                state: SimplexPoint::new(vec![0.5, 0.5]).unwrap(),
                kl: None,
                euclidean: None,
            }],
            status: Status::MaxStepsReached,
        };
        let csv = trajectory_csv(&t);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn reals_keep_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -2.5e-10] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }
}
