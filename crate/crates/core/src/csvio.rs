//! Trajectory and report CSV files.
//!
//! A trajectory file starts with `# soliton-trajectory v1`, followed by
//! `# key=value` metadata lines and a CSV table with the columns of
//! [`trajectory_columns`]. Vector quantities take one column per axis
//! (`q_0`, `q_1`, ...). Newton columns are empty when no reference was run.
//! Numbers are written in shortest round-trip form, so reading a file back
//! reproduces the records bit for bit.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::diagnostics::TrajectoryRecord;
use crate::error::{Error, Result};

pub const TRAJECTORY_TAG: &str = "# soliton-trajectory v1";
pub const REPORT_TAG: &str = "# soliton-report v1";

const VECTORS: [&str; 6] = ["q", "qdot", "qddot", "H", "H_shift", "H_spread"];

/// Column names for a `dim`-dimensional run.
pub fn trajectory_columns(dim: usize) -> Vec<String> {
    let v = |name: &str| (0..dim).map(|a| format!("{name}_{a}")).collect::<Vec<_>>();
    let mut c = vec!["t".to_string()];
    for name in VECTORS {
        c.extend(v(name));
    }
    c.extend(["charge", "E_h", "J_h", "G"].map(String::from));
    c.extend(v("q_hat"));
    c.extend(["conc_fraction", "boundary_mass", "V_moment", "V_moment_alpha", "V_moment_gamma"].map(String::from));
    c.extend(v("newton_q"));
    c.extend(v("newton_p"));
    c.push("newton_energy".into());
    c
}

fn record_row(r: &TrajectoryRecord) -> Vec<String> {
    let s = |x: &f64| x.to_string();
    let mut row = vec![s(&r.t)];
    for v in [&r.q, &r.qdot, &r.qddot, &r.h_res, &r.h_shift, &r.h_spread] {
        row.extend(v.iter().map(s));
    }
    row.extend([r.charge, r.energy, r.internal, r.dynamical].iter().map(s));
    row.extend(r.q_hat.iter().map(s));
    row.extend(
        [r.conc_fraction, r.boundary_mass, r.potential_moment, r.potential_moment_alpha, r.potential_moment_gamma]
            .iter()
            .map(s),
    );
    let d = r.q.len();
    let opt = |v: &Option<Vec<f64>>| match v {
        Some(v) => v.iter().map(s).collect::<Vec<_>>(),
        None => vec![String::new(); d],
    };
    row.extend(opt(&r.newton_q));
    row.extend(opt(&r.newton_p));
    row.push(r.newton_energy.map(|e| e.to_string()).unwrap_or_default());
    row
}

fn parse(field: &str) -> Result<f64> {
    field.parse().map_err(|_| Error::Io(format!("bad number {field:?} in trajectory")))
}

fn row_record(row: &csv::StringRecord, dim: usize) -> Result<TrajectoryRecord> {
    let f: Vec<&str> = row.iter().collect();
    if f.len() != trajectory_columns(dim).len() {
        return Err(Error::Io(format!("trajectory row has {} fields", f.len())));
    }
    let mut at = 0;
    let mut next = |n: usize| {
        let s = &f[at..at + n];
        at += n;
        s.to_vec()
    };
    let nums = |s: Vec<&str>| s.into_iter().map(parse).collect::<Result<Vec<f64>>>();
    let one = |s: Vec<&str>| parse(s[0]);
    let opt = |s: Vec<&str>| -> Result<Option<Vec<f64>>> {
        if s.iter().all(|x| x.is_empty()) {
            Ok(None)
        } else {
            nums(s).map(Some)
        }
    };
    let t = one(next(1))?;
    let q = nums(next(dim))?;
    let qdot = nums(next(dim))?;
    let qddot = nums(next(dim))?;
    let h_res = nums(next(dim))?;
    let h_shift = nums(next(dim))?;
    let h_spread = nums(next(dim))?;
    let scalars = nums(next(4))?;
    let q_hat = nums(next(dim))?;
    let more = nums(next(5))?;
    let newton_q = opt(next(dim))?;
    let newton_p = opt(next(dim))?;
    let e = next(1);
    let newton_energy = if e[0].is_empty() { None } else { Some(parse(e[0])?) };
    Ok(TrajectoryRecord {
        t,
        q,
        qdot,
        qddot,
        h_res,
        h_shift,
        h_spread,
        charge: scalars[0],
        energy: scalars[1],
        internal: scalars[2],
        dynamical: scalars[3],
        q_hat,
        conc_fraction: more[0],
        boundary_mass: more[1],
        potential_moment: more[2],
        potential_moment_alpha: more[3],
        potential_moment_gamma: more[4],
        newton_q,
        newton_p,
        newton_energy,
    })
}

/// `# key=value` metadata carried alongside a table.
pub type Metadata = BTreeMap<String, String>;

fn write_tagged(path: &Path, tag: &str, meta: &Metadata) -> Result<std::fs::File> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{tag}")?;
    for (k, v) in meta {
        writeln!(file, "# {k}={v}")?;
    }
    Ok(file)
}

fn read_tagged(path: &Path, tag: &str) -> Result<Metadata> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    if first.trim_end() != tag {
        return Err(Error::Io(format!("{}: expected header {tag:?}", path.display())));
    }
    let mut meta = Metadata::new();
    for line in lines {
        let line = line?;
        let Some(rest) = line.strip_prefix("# ") else { break };
        if let Some((k, v)) = rest.split_once('=') {
            meta.insert(k.to_string(), v.to_string());
        }
    }
    Ok(meta)
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?)
}

pub fn write_trajectory(path: &Path, meta: &Metadata, dim: usize, records: &[TrajectoryRecord]) -> Result<()> {
    let file = write_tagged(path, TRAJECTORY_TAG, meta)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(trajectory_columns(dim))?;
    for r in records {
        w.write_record(record_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<(Metadata, Vec<TrajectoryRecord>)> {
    let meta = read_tagged(path, TRAJECTORY_TAG)?;
    let mut r = reader(path)?;
    let header = r.headers()?.clone();
    let dim = header.iter().filter(|c| c.starts_with("q_") && !c.starts_with("q_hat")).count();
    let want = trajectory_columns(dim);
    if header.iter().ne(want.iter().map(String::as_str)) {
        return Err(Error::Io(format!("{}: unexpected trajectory columns", path.display())));
    }
    let records = r.records().map(|row| row_record(&row?, dim)).collect::<Result<_>>()?;
    Ok((meta, records))
}

/// Serde-backed table with metadata, used for sweep reports.
pub fn write_table<T: serde::Serialize>(path: &Path, tag: &str, meta: &Metadata, rows: &[T]) -> Result<()> {
    let file = write_tagged(path, tag, meta)?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<T: serde::de::DeserializeOwned>(path: &Path, tag: &str) -> Result<(Metadata, Vec<T>)> {
    let meta = read_tagged(path, tag)?;
    let rows = reader(path)?.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok((meta, rows))
}
