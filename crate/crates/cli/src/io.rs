use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use codesense::gf2::MatrixFile;
use codesense::sensing::SensingFile;
use codesense::{BinaryMatrix, CompactSensingMatrix};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::{usage, Format};

/// Tabular form of a report for `--format csv`.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Report {
    body: Map<String, Value>,
    table: Option<Table>,
}

impl Report {
    pub fn new(body: impl Serialize) -> anyhow::Result<Self> {
        match serde_json::to_value(body)? {
            Value::Object(body) => Ok(Self { body, table: None }),
            _ => anyhow::bail!("report body must be a JSON object"),
        }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn render(self, format: Format, config: Value) -> anyhow::Result<String> {
        match format {
            Format::Json => {
                let mut out = Map::new();
                out.insert("version".into(), codesense::report::VERSION.into());
                out.insert("config".into(), config);
                out.extend(self.body);
                let mut text = serde_json::to_string_pretty(&Value::Object(out))?;
                text.push('\n');
                Ok(text)
            }
            Format::Csv => {
                let table = self
                    .table
                    .ok_or_else(|| usage("this command has no CSV form"))?;
                let mut text = format!(
                    "# {}\n# config: {}\n",
                    codesense::report::VERSION,
                    serde_json::to_string(&config)?
                );
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.header)?;
                for row in &table.rows {
                    w.write_record(row)?;
                }
                text.push_str(std::str::from_utf8(&w.into_inner()?)?);
                Ok(text)
            }
        }
    }
}

pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// A gf2-matrix/v1 file, or any report carrying one under `"matrix"`.
pub fn load_parity_check(path: &Path) -> anyhow::Result<BinaryMatrix> {
    let mut v = read_json(path)?;
    if let Some(inner) = v.get_mut("matrix") {
        v = inner.take();
    }
    let file: MatrixFile = serde_json::from_value(v)
        .with_context(|| format!("{} is not a gf2-matrix/v1 document", path.display()))?;
    Ok(BinaryMatrix::try_from(file)?)
}

/// A CSM1 binary file, a codesense/v1 JSON file, or a `build` report.
pub fn load_sensing(path: &Path) -> anyhow::Result<CompactSensingMatrix> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(b"CSM1") {
        return Ok(CompactSensingMatrix::from_bytes(&bytes)?);
    }
    let mut v: Value =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(inner) = v.get_mut("sensing") {
        v = inner.take();
    }
    let file: SensingFile = serde_json::from_value(v)
        .with_context(|| format!("{} is not a codesense/v1 document", path.display()))?;
    Ok(CompactSensingMatrix::from_file(file)?)
}
