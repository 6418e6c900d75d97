//! CSV and JSON file formats.
//!
//! * observations: header `y,z` (pairs) or `x1,x2,v3` (raw triples);
//! * curves: header `t,value`, `t` strictly increasing;
//! * step functions: a `#` comment line stating the right-continuity
//!   convention, then header `breakpoint,level`;
//! * reports: pretty-printed JSON.
//!
//! Numbers are written with 17 significant digits, so every finite double
//! survives a round trip unchanged.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lcm::StepFunction;
use crate::samples::ObservationSet;

pub const PAIRS_HEADER: [&str; 2] = ["y", "z"];
pub const TRIPLES_HEADER: [&str; 3] = ["x1", "x2", "v3"];
pub const CURVE_HEADER: [&str; 2] = ["t", "value"];
pub const STEP_HEADER: [&str; 2] = ["breakpoint", "level"];
pub const STEP_COMMENT: &str = "# right-continuous: each level holds on [breakpoint, next breakpoint); \
the first level extends to -inf and the last to +inf";

/// Which observation layout a file used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationFormat {
    Pairs,
    Triples,
}

/// Formats a double with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_rows<'a>(
    path: &Path,
    preamble: &[&str],
    rows: impl Iterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for line in preamble {
        writeln!(w, "{line}").map_err(io)?;
    }
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parsed numeric table: header names and rows with their 1-based line
/// numbers.
struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => parse_err(line, format!("{other:?}")),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        match &header {
            None => {
                let names: Vec<String> = record.iter().map(str::to_owned).collect();
                if names.iter().all(|s| s.parse::<f64>().is_ok()) {
                    return Err(parse_err(line, "missing header row".into()));
                }
                header = Some(names);
            }
            Some(h) => {
                if record.len() != h.len() {
                    return Err(parse_err(
                        line,
                        format!("expected {} fields, found {}", h.len(), record.len()),
                    ));
                }
                let values = record
                    .iter()
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| parse_err(line, format!("not a number: {s:?}")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                rows.push((line, values));
            }
        }
    }
    let header = header.ok_or_else(|| parse_err(1, "file is empty".into()))?;
    Ok(Table { header, rows })
}

fn expect_header(path: &Path, table: &Table, expected: &[&str]) -> Result<()> {
    if table.header.iter().map(String::as_str).eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("expected header {:?}, found {:?}", expected.join(","), table.header.join(",")),
        })
    }
}

/// Converts a row-indexed sample error into one carrying the file line.
fn locate(path: &Path, table: &Table, err: Error) -> Error {
    let line_of = |row: usize| table.rows.get(row).map_or(0, |r| r.0);
    match err {
        Error::NonFinite { row } => Error::Parse {
            path: path.to_path_buf(),
            line: line_of(row),
            reason: "non-finite value".into(),
        },
        Error::Negative { row, field, value } => Error::Parse {
            path: path.to_path_buf(),
            line: line_of(row),
            reason: format!("negative {field} ({value})"),
        },
        other => other,
    }
}

/// Reads observations, detecting pairs or triples from the header.
pub fn read_observations(path: impl AsRef<Path>) -> Result<(ObservationSet, ObservationFormat)> {
    let path = path.as_ref();
    let table = read_table(path)?;
    match table.header.len() {
        2 => {
            expect_header(path, &table, &PAIRS_HEADER)?;
            let set = ObservationSet::from_pairs(table.rows.iter().map(|(_, r)| (r[0], r[1])))
                .map_err(|e| locate(path, &table, e))?;
            Ok((set, ObservationFormat::Pairs))
        }
        3 => {
            expect_header(path, &table, &TRIPLES_HEADER)?;
            let set = ObservationSet::from_raw_triples(
                table.rows.iter().map(|(_, r)| (r[0], r[1], r[2])),
            )
            .map_err(|e| locate(path, &table, e))?;
            Ok((set, ObservationFormat::Triples))
        }
        k => Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("header has {k} fields; expected \"y,z\" or \"x1,x2,v3\""),
        }),
    }
}

pub fn write_pairs(path: impl AsRef<Path>, set: &ObservationSet) -> Result<()> {
    let rows: Vec<[f64; 2]> = set.observations().iter().map(|o| [o.y, o.z]).collect();
    write_rows(path.as_ref(), &[&PAIRS_HEADER.join(",")], rows.iter().map(|r| &r[..]))
}

pub fn write_triples(path: impl AsRef<Path>, triples: &[(f64, f64, f64)]) -> Result<()> {
    let rows: Vec<[f64; 3]> = triples.iter().map(|&(a, b, c)| [a, b, c]).collect();
    write_rows(path.as_ref(), &[&TRIPLES_HEADER.join(",")], rows.iter().map(|r| &r[..]))
}

/// Writes `(t, value)` rows; `ts` must be strictly increasing.
pub fn write_curve(path: impl AsRef<Path>, ts: &[f64], values: &[f64]) -> Result<()> {
    if ts.len() != values.len() {
        return Err(Error::invalid("values", "length differs from the grid"));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    let rows: Vec<[f64; 2]> = ts.iter().zip(values).map(|(&t, &v)| [t, v]).collect();
    write_rows(path.as_ref(), &[&CURVE_HEADER.join(",")], rows.iter().map(|r| &r[..]))
}

pub fn read_curve(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let path = path.as_ref();
    let table = read_table(path)?;
    expect_header(path, &table, &CURVE_HEADER)?;
    let mut ts = Vec::with_capacity(table.rows.len());
    let mut vs = Vec::with_capacity(table.rows.len());
    for (line, r) in &table.rows {
        if ts.last().is_some_and(|&prev| r[0] <= prev) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: *line,
                reason: "t is not strictly increasing".into(),
            });
        }
        ts.push(r[0]);
        vs.push(r[1]);
    }
    Ok((ts, vs))
}

pub fn write_steps(path: impl AsRef<Path>, steps: &StepFunction) -> Result<()> {
    let rows: Vec<[f64; 2]> = steps
        .breakpoints()
        .iter()
        .zip(steps.levels())
        .map(|(&b, &l)| [b, l])
        .collect();
    write_rows(
        path.as_ref(),
        &[STEP_COMMENT, &STEP_HEADER.join(",")],
        rows.iter().map(|r| &r[..]),
    )
}

pub fn read_steps(path: impl AsRef<Path>) -> Result<StepFunction> {
    let path = path.as_ref();
    let table = read_table(path)?;
    expect_header(path, &table, &STEP_HEADER)?;
    let (b, l) = table.rows.iter().map(|(_, r)| (r[0], r[1])).unzip();
    StepFunction::new(b, l).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        reason: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::fs;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn pairs_round_trip_bit_for_bit() {
        let dir = tmp();
        let p = dir.path().join("obs.csv");
        let set = ObservationSet::from_pairs([(0.1, 1.0 / 3.0), (2.5e-300, 7.0), (1e10, 0.0)]).unwrap();
        write_pairs(&p, &set).unwrap();
        let (back, fmt) = read_observations(&p).unwrap();
        assert_eq!(fmt, ObservationFormat::Pairs);
        assert_eq!(back, set);
    }

    #[test]
    fn triples_are_detected() {
        let dir = tmp();
        let p = dir.path().join("raw.csv");
        fs::write(&p, "x1,x2,v3\n3,4,2\n1,0,1\n").unwrap();
        let (set, fmt) = read_observations(&p).unwrap();
        assert_eq!(fmt, ObservationFormat::Triples);
        let ys: Vec<f64> = set.ys().collect();
        assert_eq!(ys, vec![1.0, 25.0]);
    }

    #[test]
    fn headerless_and_malformed_files_are_rejected_with_lines() {
        let dir = tmp();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "1,2\n3,4\n").unwrap();
        assert!(matches!(read_observations(&p), Err(Error::Parse { line: 1, .. })));
        fs::write(&p, "y,z\n1,2\n3,oops\n").unwrap();
        assert!(matches!(read_observations(&p), Err(Error::Parse { line: 3, .. })));
        fs::write(&p, "y,z\n1,2\n-3,4\n").unwrap();
        assert!(matches!(read_observations(&p), Err(Error::Parse { line: 3, .. })));
        fs::write(&p, "y,z\n1,2\n3\n").unwrap();
        assert!(matches!(read_observations(&p), Err(Error::Parse { line: 3, .. })));
        fs::write(&p, "a,b,c,d\n1,2,3,4\n").unwrap();
        assert!(matches!(read_observations(&p), Err(Error::Parse { line: 1, .. })));
        fs::write(&p, "y,z\n").unwrap();
        assert!(matches!(read_observations(&p), Err(Error::EmptyInput)));
        assert!(matches!(
            read_observations(dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn curve_and_steps_round_trip() {
        let dir = tmp();
        let c = dir.path().join("c.csv");
        let ts = [0.0, 0.1, 0.7, 3.0];
        let vs = [1.0 / 7.0, -2.0, 0.0, 1e-17];
        write_curve(&c, &ts, &vs).unwrap();
        assert_eq!(read_curve(&c).unwrap(), (ts.to_vec(), vs.to_vec()));
        assert!(write_curve(&c, &[1.0, 1.0], &[0.0, 0.0]).is_err());

        let s = dir.path().join("s.csv");
        let steps = StepFunction::new(vec![0.0, 1.0, 4.0], vec![1.5359, 1.1547, 0.0]).unwrap();
        write_steps(&s, &steps).unwrap();
        let text = fs::read_to_string(&s).unwrap();
        assert!(text.starts_with("# right-continuous"));
        assert_eq!(read_steps(&s).unwrap(), steps);
    }

    #[test]
    fn json_round_trip() {
        let dir = tmp();
        let p = dir.path().join("r.json");
        let v = serde_json::json!({"slope": -1.0, "per_n": [{"n": 10}]});
        write_json(&p, &v).unwrap();
        let back: serde_json::Value = read_json(&p).unwrap();
        assert_eq!(back, v);
    }

    proptest! {
        #[test]
        fn any_finite_double_survives(vals in prop::collection::vec(0.0f64..1e300, 1..20)) {
            let dir = tmp();
            let p = dir.path().join("o.csv");
            let set = ObservationSet::from_pairs(vals.iter().map(|&v| (v, v / 3.0))).unwrap();
            write_pairs(&p, &set).unwrap();
            prop_assert_eq!(read_observations(&p).unwrap().0, set);
        }
    }
}
