//! Snapshot files, quantized-output files, result CSVs and metadata sidecars.
//!
//! Snapshot files start with a header line `# field=complex p=<p>` (or
//! `field=real`), optionally followed by more `key=value` tokens, then one
//! snapshot per row: `2p` numbers alternating real and imaginary part for
//! complex data, `p` numbers for real data. Files written by the quantizer
//! carry `scheme=<label> lambda=<L>` in the header; rectangular output stores
//! `q_k` and `q_dot_k` on consecutive rows (`layout=pairs`).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::quantize::{QuantizedBatch, QuantizedPair, QuantizerSpec, Scheme};
use crate::snapshots::{Field, SnapshotBatch};

use super::config::parse_quantizer;
use super::table::{Metadata, ResultRow, ResultTable, RESULT_HEADER};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: u64, column: u64, message: String },
    #[error("header: {0}")]
    HeaderMismatch(String),
    #[error("csv: {0}")]
    Csv(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.display().to_string(), source }
}

/// Parsed header of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub field: Field,
    pub p: usize,
    /// Present on quantizer output.
    pub scheme: Option<QuantizerSpec>,
    pub pairs: bool,
}

impl SnapshotHeader {
    pub fn render(&self) -> String {
        let mut s = format!("# field={} p={}", self.field.as_str(), self.p);
        if let Some(spec) = &self.scheme {
            s.push_str(&format!(" scheme={} lambda={}", spec.label(), spec.lambda()));
        }
        if self.pairs {
            s.push_str(" layout=pairs");
        }
        s
    }
}

pub fn parse_header(line: &str) -> Result<SnapshotHeader, IoError> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| IoError::HeaderMismatch(format!("expected `# field=<real|complex> p=<p>`, found `{line}`")))?;
    let mut kv = BTreeMap::new();
    for token in body.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| IoError::HeaderMismatch(format!("token `{token}` is not key=value")))?;
        kv.insert(k, v);
    }
    let field: Field = kv
        .get("field")
        .ok_or_else(|| IoError::HeaderMismatch("missing `field=`".into()))?
        .parse()
        .map_err(|_| IoError::HeaderMismatch(format!("unknown field `{}`", kv["field"])))?;
    let p: usize = kv
        .get("p")
        .ok_or_else(|| IoError::HeaderMismatch("missing `p=`".into()))?
        .parse()
        .ok()
        .filter(|&p| p > 0)
        .ok_or_else(|| IoError::HeaderMismatch(format!("`p={}` is not a positive integer", kv["p"])))?;
    let scheme = match kv.get("scheme") {
        None => None,
        Some(label) => {
            let lambda: f64 = kv
                .get("lambda")
                .ok_or_else(|| IoError::HeaderMismatch("`scheme=` needs `lambda=`".into()))?
                .parse()
                .map_err(|_| IoError::HeaderMismatch(format!("bad `lambda={}`", kv["lambda"])))?;
            Some(parse_quantizer(label, lambda, field).map_err(|e| IoError::HeaderMismatch(e.to_string()))?)
        }
    };
    let pairs = match kv.get("layout") {
        None => false,
        Some(&"pairs") => true,
        Some(other) => return Err(IoError::HeaderMismatch(format!("unknown layout `{other}`"))),
    };
    if pairs != matches!(scheme.map(|s| s.scheme()), Some(Scheme::Rectangular { .. })) {
        return Err(IoError::HeaderMismatch("`layout=pairs` goes with `scheme=rect` and only with it".into()));
    }
    Ok(SnapshotHeader { field, p, scheme, pairs })
}

/// Header plus the snapshot rows of a file.
fn read_rows(path: &Path) -> Result<(SnapshotHeader, Vec<Vec<Complex64>>), IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let header = parse_header(first)?;
    let width = header.p * header.field.c_f() as usize;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(rest.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Csv(e.to_string()))?;
        // Line numbers count the header line.
        let line = record.position().map_or(0, |p| p.line()) + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(IoError::Parse {
                line,
                column: record.len().min(width) as u64 + 1,
                message: format!("row {} has {} values, expected {width}", rows.len() + 1, record.len()),
            });
        }
        let mut values = Vec::with_capacity(width);
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| IoError::Parse {
                line,
                column: c as u64 + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(IoError::Parse { line, column: c as u64 + 1, message: format!("`{cell}` is not finite") });
            }
            values.push(v);
        }
        rows.push(match header.field {
            Field::Real => values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            Field::Complex => values.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect(),
        });
    }
    Ok((header, rows))
}

/// Reads an analog snapshot file (a file without `scheme=`).
pub fn ingest_snapshots(path: &Path) -> Result<SnapshotBatch, IoError> {
    match ingest_any(path)? {
        Ingested::Analog(b) => Ok(b),
        Ingested::Quantized(_) => Err(IoError::HeaderMismatch("file holds quantized data".into())),
    }
}

/// Contents of a snapshot file of either kind.
#[derive(Debug, Clone)]
pub enum Ingested {
    Analog(SnapshotBatch),
    Quantized(QuantizedBatch),
}

pub fn ingest_any(path: &Path) -> Result<Ingested, IoError> {
    let (header, rows) = read_rows(path)?;
    let to_batch = |rows: &[Vec<Complex64>]| {
        SnapshotBatch::from_snapshots(header.field, rows)
            .or_else(|_| SnapshotBatch::new(header.field, header.p, Vec::new()))
            .map_err(|e| IoError::HeaderMismatch(e.to_string()))
    };
    match header.scheme {
        None => Ok(Ingested::Analog(to_batch(&rows)?)),
        Some(spec) if header.pairs => {
            if rows.len() % 2 != 0 {
                return Err(IoError::Parse {
                    line: rows.len() as u64 + 1,
                    column: 1,
                    message: "rectangular output needs an even number of rows (q, q_dot)".into(),
                });
            }
            let pairs = rows
                .chunks_exact(2)
                .map(|c| QuantizedPair { q: c[0].clone(), q_dot: c[1].clone() })
                .collect();
            Ok(Ingested::Quantized(QuantizedBatch::Rectangular { spec, p: header.p, pairs }))
        }
        Some(spec) => Ok(Ingested::Quantized(QuantizedBatch::Levels(to_batch(&rows)?.with_scheme(spec)))),
    }
}

fn push_row(out: &mut String, field: Field, row: &[Complex64]) {
    let mut first = true;
    for z in row {
        let parts: &[f64] = match field {
            Field::Real => &[z.re],
            Field::Complex => &[z.re, z.im],
        };
        for v in parts {
            if !first {
                out.push(',');
            }
            first = false;
            // `+ 0.0` turns -0 into 0; `Display` is the shortest exact form.
            out.push_str(&(v + 0.0).to_string());
        }
    }
    out.push('\n');
}

pub fn snapshots_to_string(batch: &SnapshotBatch) -> String {
    let header = SnapshotHeader { field: batch.field(), p: batch.p(), scheme: batch.scheme, pairs: false };
    let mut out = header.render();
    out.push('\n');
    for y in batch.iter() {
        push_row(&mut out, batch.field(), y);
    }
    out
}

pub fn write_snapshots(batch: &SnapshotBatch, path: &Path) -> Result<(), IoError> {
    fs::write(path, snapshots_to_string(batch)).map_err(io_err(path))
}

pub fn quantized_to_string(batch: &QuantizedBatch) -> String {
    match batch {
        QuantizedBatch::Levels(b) => snapshots_to_string(b),
        QuantizedBatch::Rectangular { spec, p, pairs } => {
            let header = SnapshotHeader { field: spec.field(), p: *p, scheme: Some(*spec), pairs: true };
            let mut out = header.render();
            out.push('\n');
            for pr in pairs {
                push_row(&mut out, spec.field(), &pr.q);
                push_row(&mut out, spec.field(), &pr.q_dot);
            }
            out
        }
    }
}

pub fn write_quantized(batch: &QuantizedBatch, path: &Path) -> Result<(), IoError> {
    fs::write(path, quantized_to_string(batch)).map_err(io_err(path))
}

fn csv_err(e: csv::Error) -> IoError {
    IoError::Csv(e.to_string())
}

/// Writes the results CSV with the fixed header, rows in table order.
pub fn emit_results(table: &ResultTable, path: &Path) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(RESULT_HEADER).map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.experiment.clone(),
            r.quantizer.clone(),
            r.n.to_string(),
            r.bits.to_string(),
            r.median.to_string(),
            r.quantile25.to_string(),
            r.quantile75.to_string(),
            r.success_frac.to_string(),
            r.failures.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != RESULT_HEADER {
        return Err(IoError::HeaderMismatch(format!("unexpected results header {header:?}")));
    }
    r.deserialize().collect::<Result<Vec<ResultRow>, _>>().map_err(csv_err)
}

pub fn write_metadata(meta: &Metadata, path: &Path) -> Result<(), IoError> {
    let text = toml::to_string(meta).map_err(|e| IoError::Csv(e.to_string()))?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_metadata(path: &Path) -> Result<Metadata, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    toml::from_str(&text).map_err(|e| IoError::HeaderMismatch(e.to_string()))
}

/// Writes `<experiment>.csv`, `<experiment>.meta.toml` and one
/// `<experiment>_<name>.csv` per auxiliary table into `dir`; returns the paths.
pub fn write_all(table: &ResultTable, dir: &Path) -> Result<Vec<std::path::PathBuf>, IoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let stem = &table.metadata.experiment;
    let mut paths = vec![dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.meta.toml"))];
    emit_results(table, &paths[0])?;
    write_metadata(&table.metadata, &paths[1])?;
    for aux in &table.auxiliary {
        let path = dir.join(format!("{stem}_{}.csv", aux.name));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(&aux.header).map_err(csv_err)?;
        for row in &aux.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randsrc::RngStream;
    use crate::harness::table::version_string;

    fn tmp(name: &str, body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        (dir, path)
    }

    #[test]
    fn complex_example() {
        let (_d, path) = tmp("s.csv", "# field=complex p=2\n1,0,0,1\n");
        let b = ingest_snapshots(&path).unwrap();
        assert_eq!(b.snapshot(0), &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
    }

    #[test]
    fn malformed_row_names_the_row() {
        let (_d, path) = tmp("s.csv", "# field=real p=3\n1,2,3\n4,5\n");
        match ingest_snapshots(&path) {
            Err(IoError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("row 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let (_d, path) = tmp("s.csv", "# field=real p=2\n1,x\n");
        assert!(matches!(ingest_snapshots(&path), Err(IoError::Parse { line: 2, column: 2, .. })));
    }

    #[test]
    fn header_errors() {
        for body in ["field=real p=2\n1,2\n", "# field=quaternion p=2\n", "# field=real\n", "# field=real p=0\n"] {
            let (_d, path) = tmp("s.csv", body);
            assert!(matches!(ingest_snapshots(&path), Err(IoError::HeaderMismatch(_))), "{body}");
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let mut rng = RngStream::new(8, 0);
        for field in [Field::Real, Field::Complex] {
            let data: Vec<Complex64> = (0..7 * 3)
                .map(|_| {
                    let z = rng.complex_normal() * 1e-3;
                    if field == Field::Real { Complex64::new(z.re, 0.0) } else { z }
                })
                .collect();
            let b = SnapshotBatch::new(field, 3, data).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("x.csv");
            write_snapshots(&b, &path).unwrap();
            let back = ingest_snapshots(&path).unwrap();
            assert_eq!(back.as_slice(), b.as_slice());
            assert_eq!(back.field(), field);
        }
    }

    fn meta() -> Metadata {
        Metadata {
            experiment: "x".into(),
            preset: "custom".into(),
            seed: u64::MAX.to_string(),
            version: version_string(),
            timestamp_unix: 0,
            trials: 1,
            deviations: vec![],
            notes: vec![],
            summary: BTreeMap::from([("slope".to_string(), -0.5)]),
            config: Default::default(),
        }
    }

    #[test]
    fn results_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut table = ResultTable { rows: vec![], metadata: meta(), auxiliary: vec![] };
        emit_results(&table, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().trim_end(), RESULT_HEADER.join(","));
        table.rows.push(ResultRow {
            experiment: "x".into(),
            quantizer: "rect;beta=0.5".into(),
            n: 10,
            bits: 640,
            median: 0.1 + 0.2,
            quantile25: 1.0 / 3.0,
            quantile75: 2.5e-300,
            success_frac: 1.0,
            failures: 0,
            seed: u64::MAX,
        });
        emit_results(&table, &path).unwrap();
        assert_eq!(read_results(&path).unwrap(), table.rows);
        let first = fs::read(&path).unwrap();
        emit_results(&table, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
        let mpath = dir.path().join("m.toml");
        write_metadata(&table.metadata, &mpath).unwrap();
        assert_eq!(read_metadata(&mpath).unwrap(), table.metadata);
    }
}
