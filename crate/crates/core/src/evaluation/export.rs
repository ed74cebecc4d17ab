use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::kde::DensityGrid;
use super::sim::TrajectoryPoint;
use super::studies::{Dispersion, StudyResult};
use crate::error::Error;

pub const TRAJECTORY_HEADER: [&str; 7] = ["time_s", "vehicle_id", "n_m", "e_m", "heading_rad", "speed_mps", "sigma"];

pub fn write_trajectory_csv(path: &Path, points: &[TrajectoryPoint]) -> Result<(), Error> {
    let ctx = || format!("writing {}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(ctx(), e.into()))?;
    w.write_record(TRAJECTORY_HEADER).map_err(|e| Error::io(ctx(), e.into()))?;
    for p in points {
        w.write_record(&[
            p.time.to_string(),
            p.vehicle_id.to_string(),
            p.n.to_string(),
            p.e.to_string(),
            p.heading.to_string(),
            p.speed.to_string(),
            p.sigma.to_string(),
        ])
        .map_err(|e| Error::io(ctx(), e.into()))?;
    }
    w.flush().map_err(|e| Error::io(ctx(), e))
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryPoint>, Error> {
    let ctx = || format!("reading {}", path.display());
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(ctx(), e.into()))?;
    let headers = r.headers().map_err(|e| Error::io(ctx(), e.into()))?.clone();
    if headers.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::io(ctx(), std::io::Error::new(std::io::ErrorKind::InvalidData, format!("unexpected header {headers:?}"))));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::io(ctx(), e.into()))?;
        let bad = || Error::io(ctx(), std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad row {}", line + 2)));
        let f = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(bad);
        out.push(TrajectoryPoint {
            time: f(0)?,
            vehicle_id: rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            n: f(2)?,
            e: f(3)?,
            heading: f(4)?,
            speed: f(5)?,
            sigma: f(6)?,
        });
    }
    Ok(out)
}

pub fn study_json(result: &StudyResult) -> String {
    serde_json::to_string_pretty(result).expect("study results serialize") + "\n"
}

fn cell(d: &Option<Dispersion>) -> String {
    match d {
        Some(d) => format!("{:.1} ± {:.1}", d.mean, d.std),
        None => "-".into(),
    }
}

/// Human-readable table of a study.
pub fn study_table(result: &StudyResult) -> String {
    let header = ["N", "runs", "accidents", "incidents", "false entr.", "time to signal (s)", "entrance time (s)", "airspace time (s)", "min dist (m)", "timed out"];
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.runs.to_string(),
                r.accidents.to_string(),
                r.incidents.to_string(),
                r.false_entrances.to_string(),
                cell(&r.time_to_signal),
                cell(&r.entrance_time),
                cell(&r.airspace_time),
                r.min_distance.map_or("-".into(), |d| format!("{d:.1}")),
                r.timed_out_runs.to_string(),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len()).map(|i| rows.iter().map(|r| r[i].chars().count()).chain([header[i].len()]).max().unwrap_or(0)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "entrance check: {}, position noise: {} m, reps: {}, seed: {}", if result.entrance_check { "on" } else { "off" }, result.noise_sigma, result.reps, result.seed);
    let line = |cells: Vec<String>| cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}", w = *w)).collect::<Vec<_>>().join("  ");
    let _ = writeln!(out, "{}", line(header.iter().map(|s| s.to_string()).collect()));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
    out
}

/// Density matrix (rows north, columns east) and the two axis vectors.
pub fn write_kde_csv(dir: &Path, stem: &str, grid: &DensityGrid) -> Result<(), Error> {
    let mut m = String::new();
    for i in 0..grid.spec.cells {
        let row: Vec<String> = (0..grid.spec.cells).map(|j| format!("{:e}", grid.at(i, j))).collect();
        m.push_str(&row.join(","));
        m.push('\n');
    }
    let mut axes = String::from("index,n_m,e_m\n");
    for (k, (n, e)) in grid.n_axis.iter().zip(&grid.e_axis).enumerate() {
        let _ = writeln!(axes, "{k},{n},{e}");
    }
    for (name, body) in [(format!("{stem}_density.csv"), m), (format!("{stem}_axes.csv"), axes)] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(())
}
