//! CSV output with fixed headers. Numbers use Rust's shortest round-trip
//! formatting, so parsing a written value gives back the same `f64`.

use std::fmt::Write;

use crate::error::Error;
use crate::fullsim::{SnapshotKind, Trajectory};
use crate::stats::{FitResult, Observable, SweepPoint};

pub const SWEEP_HEADER: &str = "covariate,mean,var,std,stderr,std_stderr,n,divergences";
pub const FIT_HEADER: &str = "slope,intercept,residual_rms,x_min,x_max,points";

fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (k, v) in values.into_iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        write!(s, "{v}").expect("writing to a String cannot fail");
    }
    s
}

/// `t,a` followed by `c1..cM` (modes) or `x1..xn` (grid) when snapshots
/// were kept.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let width = traj.snapshots.first().map_or(0, Vec::len);
    let prefix = match traj.snapshot_kind {
        SnapshotKind::Modes => "c",
        SnapshotKind::Grid => "x",
    };
    let mut out = String::from("t,a");
    for k in 1..=width {
        write!(out, ",{prefix}{k}").expect("string write");
    }
    out.push('\n');
    for (k, (&t, &a)) in traj.times.iter().zip(&traj.amplitude).enumerate() {
        let snap = traj.snapshots.get(k).map(|s| s.as_slice()).unwrap_or(&[]);
        out.push_str(&join([t, a].into_iter().chain(snap.iter().copied())));
        out.push('\n');
    }
    out
}

/// One row per sweep point. Failed points keep their covariate, report
/// `NaN` statistics and the divergence count when known.
pub fn sweep_csv(points: &[SweepPoint], observable: Observable) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for p in points {
        match &p.result {
            Ok(summary) => {
                let s = summary.get(observable);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    p.covariate,
                    s.mean,
                    s.variance,
                    s.std(),
                    s.stderr,
                    s.std_stderr,
                    s.n,
                    s.diverged
                )
            }
            Err(Error::EnsembleFailure { diverged, total }) => writeln!(
                out,
                "{},NaN,NaN,NaN,NaN,NaN,{},{}",
                p.covariate,
                total - diverged,
                diverged
            ),
            Err(_) => writeln!(out, "{},NaN,NaN,NaN,NaN,NaN,0,0", p.covariate),
        }
        .expect("string write");
    }
    out
}

pub fn fit_csv(fit: &FitResult) -> String {
    format!(
        "{FIT_HEADER}\n{},{},{},{},{},{}\n",
        fit.slope, fit.intercept, fit.residual_rms, fit.x_min, fit.x_max, fit.points
    )
}

/// Generic numeric table with a caller-supplied header.
pub fn rows_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&join(r.iter().copied()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{EnsembleStats, EnsembleSummary};

    #[test]
    fn trajectory_columns() {
        let mut t = Trajectory::new(SnapshotKind::Modes);
        t.push(0.0, 0.1, Some(vec![0.1, 0.2]));
        t.push(0.5, 1.0 / 3.0, Some(vec![1.0 / 3.0, -0.0]));
        let csv = trajectory_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,a,c1,c2");
        assert_eq!(lines[1], "0,0.1,0.1,0.2");
        let back: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
        let mut g = Trajectory::new(SnapshotKind::Grid);
        g.push(0.0, 0.0, None);
        assert_eq!(trajectory_csv(&g), "t,a\n0,0\n");
    }

    #[test]
    fn sweep_rows_including_failures() {
        let s = EnsembleStats {
            n: 4,
            diverged: 0,
            burn_in: 0.5,
            mean: 0.25,
            variance: 0.25,
            stderr: 0.125,
            std_stderr: 0.0625,
            effective_samples: 32.0,
        };
        let pts = vec![
            SweepPoint {
                covariate: 0.2,
                result: Ok(EnsembleSummary {
                    amplitude: s,
                    squared: s,
                }),
            },
            SweepPoint {
                covariate: 0.4,
                result: Err(Error::EnsembleFailure {
                    diverged: 3,
                    total: 4,
                }),
            },
        ];
        let csv = sweep_csv(&pts, Observable::Amplitude);
        assert_eq!(
            csv,
            "covariate,mean,var,std,stderr,std_stderr,n,divergences\n0.2,0.25,0.25,0.5,0.125,0.0625,4,0\n0.4,NaN,NaN,NaN,NaN,NaN,1,3\n"
        );
    }
}
