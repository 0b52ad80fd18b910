//! Dataset files. CSV files open with a `#` metadata line carrying the plan
//! hash and seed, followed by a fixed header and one row per record.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row types with a fixed column order.
pub trait Record: Serialize + DeserializeOwned {
    const COLUMNS: &'static [&'static str];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config(format!("unknown format {s:?}"))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub plan_hash: String,
    pub seed: u64,
}

impl Metadata {
    fn line(&self) -> String {
        format!("# plan_hash={} seed={}\n", self.plan_hash, self.seed)
    }

    fn parse_line(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# ")?;
        let mut hash = None;
        let mut seed = None;
        for part in rest.split_whitespace() {
            if let Some(v) = part.strip_prefix("plan_hash=") {
                hash = Some(v.to_string());
            } else if let Some(v) = part.strip_prefix("seed=") {
                seed = v.parse().ok();
            }
        }
        Some(Metadata { plan_hash: hash?, seed: seed? })
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

pub fn csv_string<T: Record>(meta: &Metadata, rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(T::COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    let mut out = meta.line();
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Format(e.to_string()))?);
    Ok(out)
}

pub fn parse_csv<T: Record>(text: &str) -> Result<(Metadata, Vec<T>)> {
    let first = text.lines().next().unwrap_or_default();
    let meta = Metadata::parse_line(first).ok_or_else(|| Error::Format("missing metadata line".into()))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != T::COLUMNS {
        return Err(Error::Format(format!("unexpected columns {header:?}")));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok((meta, rows))
}

#[derive(Serialize, Deserialize)]
struct JsonDoc<T> {
    plan_hash: String,
    seed: u64,
    columns: Vec<String>,
    rows: Vec<T>,
}

pub fn json_string<T: Record>(meta: &Metadata, rows: &[T]) -> Result<String> {
    let doc = JsonDoc { plan_hash: meta.plan_hash.clone(), seed: meta.seed, columns: T::COLUMNS.iter().map(|c| c.to_string()).collect(), rows: rows.iter().collect::<Vec<&T>>() };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn parse_json<T: Record>(text: &str) -> Result<(Metadata, Vec<T>)> {
    let doc: JsonDoc<T> = serde_json::from_str(text)?;
    Ok((Metadata { plan_hash: doc.plan_hash, seed: doc.seed }, doc.rows))
}

pub fn emit<T: Record>(meta: &Metadata, rows: &[T], format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => csv_string(meta, rows)?,
        Format::Json => json_string(meta, rows)?,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn load<T: Record>(path: &Path) -> Result<(Metadata, Vec<T>)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_json(&text)
    } else {
        parse_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    struct Row {
        name: String,
        x: f64,
        n: usize,
        flag: bool,
    }

    impl Record for Row {
        const COLUMNS: &'static [&'static str] = &["name", "x", "n", "flag"];
    }

    fn meta() -> Metadata {
        Metadata { plan_hash: "abc123".into(), seed: 42 }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let rows = vec![
            Row { name: "a,b".into(), x: 0.1 + 0.2, n: 3, flag: true },
            Row { name: "q\"uote".into(), x: -1e-300, n: 0, flag: false },
            Row { name: "".into(), x: std::f64::consts::PI, n: usize::MAX, flag: true },
        ];
        let text = csv_string(&meta(), &rows).unwrap();
        let (m, back) = parse_csv::<Row>(&text).unwrap();
        assert_eq!(m, meta());
        assert_eq!(back, rows);
        let (_, jback) = parse_json::<Row>(&json_string(&meta(), &rows).unwrap()).unwrap();
        assert_eq!(jback, rows);
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let text = csv_string::<Row>(&meta(), &[]).unwrap();
        assert_eq!(text, "# plan_hash=abc123 seed=42\nname,x,n,flag\n");
        assert!(parse_csv::<Row>(&text).unwrap().1.is_empty());
    }

    #[test]
    fn files_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        let rows = vec![Row { name: "z".into(), x: 2.5, n: 1, flag: false }];
        emit(&meta(), &rows, Format::Csv, &p).unwrap();
        assert_eq!(load::<Row>(&p).unwrap().1, rows);
        let missing = dir.path().join("nope.csv");
        match load::<Row>(&missing) {
            Err(Error::Io { path, .. }) => assert!(path.contains("nope.csv")),
            other => panic!("{other:?}"),
        }
        assert!(parse_csv::<Row>("name,x\n").is_err());
    }
}
