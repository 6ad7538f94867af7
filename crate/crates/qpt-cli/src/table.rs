//! Tabular result files and their metadata sidecars.
//!
//! Tables are plain CSV with one header row; every float is written with 17
//! significant digits in scientific notation so re-running a configuration
//! reproduces files byte for byte. Run-level context (configuration echo,
//! policy hash, wall time) lives in a `.meta` sidecar next to the table —
//! wall time deliberately stays out of the CSV to keep it reproducible.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits, scientific; `nan` for undefined entries.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_bool(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new(header: &[&str]) -> Self {
        ResultTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let header: Vec<String> = reader
            .headers()?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            rows.push(record.iter().map(|s| s.to_string()).collect());
        }
        Ok(ResultTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Metadata written next to every result table.
#[derive(Debug, Clone)]
pub struct Sidecar {
    pub schema_version: u32,
    pub kind: String,
    pub label: String,
    pub policy_hash: String,
    pub config_hash: String,
    /// Leading columns that uniquely identify a grid point.
    pub echo_columns: usize,
    pub rows: usize,
    pub workers: usize,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
    pub config_toml: String,
}

const CONFIG_MARKER: &str = "---- config ----";

impl Sidecar {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        text.push_str(&format!("schema_version = {}\n", self.schema_version));
        text.push_str(&format!("kind = {}\n", self.kind));
        text.push_str(&format!("label = {}\n", self.label));
        text.push_str(&format!("policy_hash = {}\n", self.policy_hash));
        text.push_str(&format!("config_hash = {}\n", self.config_hash));
        text.push_str(&format!("echo_columns = {}\n", self.echo_columns));
        text.push_str(&format!("rows = {}\n", self.rows));
        text.push_str(&format!("workers = {}\n", self.workers));
        text.push_str(&format!("wall_time_s = {:.3}\n", self.wall_time_s));
        for note in &self.notes {
            text.push_str(&format!("note = {note}\n"));
        }
        text.push_str(CONFIG_MARKER);
        text.push('\n');
        text.push_str(&self.config_toml);
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let (head, config_toml) = match text.split_once(CONFIG_MARKER) {
            Some((h, c)) => (h.to_string(), c.trim_start().to_string()),
            None => (text, String::new()),
        };
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        let mut notes = Vec::new();
        for line in head.lines() {
            if let Some((k, v)) = line.split_once('=') {
                let (k, v) = (k.trim().to_string(), v.trim().to_string());
                if k == "note" {
                    notes.push(v);
                } else {
                    fields.insert(k, v);
                }
            }
        }
        let get = |k: &str| -> Result<String> {
            fields
                .get(k)
                .cloned()
                .with_context(|| format!("{}: missing {k}", path.display()))
        };
        Ok(Sidecar {
            schema_version: get("schema_version")?.parse()?,
            kind: get("kind")?,
            label: get("label")?,
            policy_hash: get("policy_hash")?,
            config_hash: get("config_hash")?,
            echo_columns: get("echo_columns")?.parse()?,
            rows: get("rows")?.parse()?,
            workers: get("workers")?.parse()?,
            wall_time_s: get("wall_time_s")?.parse()?,
            notes,
            config_toml,
        })
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

/// Merge result tables produced under the same numerical policy:
/// concatenate, drop duplicate grid points, fail on conflicting duplicates,
/// and sort by the grid-point key.
pub fn merge(inputs: &[PathBuf]) -> Result<(ResultTable, Sidecar)> {
    if inputs.is_empty() {
        bail!("merge needs at least one input table");
    }
    let mut tables = Vec::new();
    let mut sidecars = Vec::new();
    for path in inputs {
        tables.push(ResultTable::read_csv(path)?);
        sidecars.push(Sidecar::read(&sidecar_path(path))?);
    }

    let first = &sidecars[0];
    for (path, sc) in inputs.iter().zip(&sidecars) {
        if sc.schema_version != first.schema_version {
            bail!(
                "{}: schema version {} does not match {}",
                path.display(),
                sc.schema_version,
                first.schema_version
            );
        }
        if sc.policy_hash != first.policy_hash {
            bail!(
                "{}: numerical-policy hash {} does not match {}; refusing to merge",
                path.display(),
                sc.policy_hash,
                first.policy_hash
            );
        }
    }
    let header = tables[0].header.clone();
    for (path, t) in inputs.iter().zip(&tables) {
        if t.header != header {
            bail!("{}: column set differs from the first input", path.display());
        }
    }

    let echo = first.echo_columns.min(header.len());
    let mut seen: BTreeMap<Vec<String>, Vec<String>> = BTreeMap::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for t in &tables {
        for row in &t.rows {
            let key: Vec<String> = row[..echo].to_vec();
            match seen.get(&key) {
                None => {
                    seen.insert(key, row.clone());
                    rows.push(row.clone());
                }
                Some(existing) if existing == row => {} // exact duplicate
                Some(_) => bail!(
                    "conflicting duplicate outputs for grid point ({})",
                    key.join(", ")
                ),
            }
        }
    }

    // stable grid order: numeric-aware comparison on the key columns
    rows.sort_by(|a, b| {
        for k in 0..echo {
            let ord = match (a[k].parse::<f64>(), b[k].parse::<f64>()) {
                (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal),
                _ => a[k].cmp(&b[k]),
            };
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });

    let merged = ResultTable { header, rows };
    let sidecar = Sidecar {
        schema_version: first.schema_version,
        kind: first.kind.clone(),
        label: format!("{}-merged", first.label),
        policy_hash: first.policy_hash.clone(),
        config_hash: first.config_hash.clone(),
        echo_columns: echo,
        rows: merged.rows.len(),
        workers: 0,
        wall_time_s: 0.0,
        notes: inputs
            .iter()
            .map(|p| format!("merged from {}", p.display()))
            .collect(),
        config_toml: first.config_toml.clone(),
    };
    Ok((merged, sidecar))
}
