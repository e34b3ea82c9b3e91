//! Trajectory CSV files and the versioned JSON report envelope.
//!
//! CSV columns are `k` (or `t`), `theta_0 … theta_{p-1}`, `F`, `grad_norm`,
//! `theta_norm`, `lmin`, `lmax`. Floats carry 17 significant digits in
//! scientific notation; lines end with `\n`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use sgdlab::engine::{FlowTrajectory, Trajectory};

/// Value of the `schema` field of every JSON report.
pub const SCHEMA_ID: &str = "sgdlab-report/v1";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    report: &'a str,
    data: &'a T,
}

/// Pretty JSON `{"schema", "report", "data"}` with a trailing newline.
pub fn report_json<T: Serialize>(report: &str, data: &T) -> String {
    let env = Envelope {
        schema: SCHEMA_ID,
        report,
        data,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report types serialize");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(first: &str, dim: usize) -> String {
    let mut cols = vec![first.to_string()];
    cols.extend((0..dim).map(|i| format!("theta_{i}")));
    cols.extend(["F", "grad_norm", "theta_norm", "lmin", "lmax"].map(String::from));
    cols.join(",")
}

pub fn write_trajectory_csv(w: &mut dyn Write, traj: &Trajectory) -> io::Result<()> {
    let dim = traj.final_theta.len();
    writeln!(w, "{}", header("k", dim))?;
    for r in &traj.records {
        let mut line = r.k.to_string();
        for x in r
            .theta
            .iter()
            .chain([&r.f, &r.grad_norm, &r.theta_norm, &r.lmin, &r.lmax])
        {
            line.push(',');
            line.push_str(&num(*x));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Flow rows use the nominal step `h` for both eigenvalue columns.
pub fn write_flow_csv(w: &mut dyn Write, flow: &FlowTrajectory) -> io::Result<()> {
    let dim = flow.points.first().map_or(0, |p| p.theta.len());
    writeln!(w, "{}", header("t", dim))?;
    for p in &flow.points {
        let mut line = num(p.t);
        for x in p
            .theta
            .iter()
            .chain([&p.f, &p.grad_norm, &p.theta_norm, &flow.h, &flow.h])
        {
            line.push(',');
            line.push_str(&num(*x));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn trajectory_csv(traj: &Trajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, traj).expect("writing to memory");
    buf
}

pub fn flow_csv(flow: &FlowTrajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    write_flow_csv(&mut buf, flow).expect("writing to memory");
    buf
}

pub fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, bytes)
}
