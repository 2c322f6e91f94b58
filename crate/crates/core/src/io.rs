//! Text serialization of conversion and count tables.
//!
//! CSV is long-format `input_label,output_label,value`, one row per cell, in
//! table order. Probabilities are written with 6 significant digits, so a CSV
//! read-back equals the original only to that precision; writing it again
//! reproduces the same bytes. JSON carries exact `f64` values and a schema tag.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::ConversionTable;
use crate::photonsim::{CountTable, SourceSpec};

pub const SCHEMA: &str = "oamsim/1";

/// Row-sum tolerance for tables read back from 6-digit CSV.
pub const CSV_ROW_TOL: f64 = 1e-5;

const HEADER: [&str; 3] = ["input_label", "output_label", "value"];

/// `v` with 6 significant digits in positional notation.
pub fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.5}", v.abs());
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci[sci.find('e').map_or(sci.len(), |i| i + 1)..].parse().unwrap_or(0);
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

fn write_csv<'a>(cells: impl Iterator<Item = (&'a str, &'a str, String)>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(HEADER)?;
    for (i, o, v) in cells {
        w.write_record([i, o, v.as_str()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::MalformedTable(e.to_string()))
}

pub fn conversion_table_to_csv(table: &ConversionTable) -> Result<String> {
    write_csv(table.inputs.iter().enumerate().flat_map(|(i, input)| {
        table
            .outputs
            .iter()
            .enumerate()
            .map(move |(j, output)| (input.as_str(), output.as_str(), format_value(table.probabilities[i][j])))
    }))
}

pub fn count_table_to_csv(table: &CountTable) -> Result<String> {
    write_csv(table.inputs.iter().enumerate().flat_map(|(i, input)| {
        table
            .analyzers
            .iter()
            .enumerate()
            .map(move |(j, a)| (input.as_str(), a.as_str(), table.counts[i][j].to_string()))
    }))
}

/// Labels in first-seen order plus a dense value grid.
struct Grid {
    inputs: Vec<String>,
    outputs: Vec<String>,
    values: Vec<Vec<String>>,
}

fn read_grid(text: &str) -> Result<Grid> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::MalformedTable(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut out_index: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<(usize, usize, String)> = Vec::new();
    for record in r.records() {
        let record = record?;
        let (input, output, value) = (&record[0], &record[1], &record[2]);
        if inputs.last().map(String::as_str) != Some(input) {
            if inputs.iter().any(|s| s == input) {
                return Err(Error::MalformedTable(format!("rows for input {input} are not contiguous")));
            }
            inputs.push(input.to_string());
        }
        let j = *out_index.entry(output.to_string()).or_insert_with(|| {
            outputs.push(output.to_string());
            outputs.len() - 1
        });
        cells.push((inputs.len() - 1, j, value.to_string()));
    }
    let mut values = vec![vec![None; outputs.len()]; inputs.len()];
    for (i, j, v) in cells {
        if values[i][j].replace(v).is_some() {
            return Err(Error::MalformedTable(format!("duplicate cell ({}, {})", inputs[i], outputs[j])));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(j, v)| {
                    v.ok_or_else(|| Error::MalformedTable(format!("missing cell ({}, {})", inputs[i], outputs[j])))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Grid {
        inputs,
        outputs,
        values,
    })
}

fn parse_cells<T: std::str::FromStr>(values: Vec<Vec<String>>) -> Result<Vec<Vec<T>>> {
    values
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| v.parse().map_err(|_| Error::MalformedTable(format!("bad value {v:?}"))))
                .collect()
        })
        .collect()
}

pub fn conversion_table_from_csv(text: &str) -> Result<ConversionTable> {
    let g = read_grid(text)?;
    ConversionTable::new_with_tolerance(g.inputs, g.outputs, parse_cells(g.values)?, CSV_ROW_TOL)
}

/// CSV holds only the cells; provenance comes from the run manifest.
pub fn count_table_from_csv(text: &str, name: &str, seed: u64, source: SourceSpec) -> Result<CountTable> {
    let g = read_grid(text)?;
    Ok(CountTable {
        name: name.to_string(),
        inputs: g.inputs,
        analyzers: g.outputs,
        counts: parse_cells(g.values)?,
        seed,
        source,
    })
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema: String,
    kind: String,
    #[serde(flatten)]
    body: T,
}

fn to_json<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let env = Envelope {
        schema: SCHEMA.to_string(),
        kind: kind.to_string(),
        body,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

fn from_json<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text)?;
    if env.schema != SCHEMA {
        return Err(Error::MalformedTable(format!("schema {:?}, expected {SCHEMA:?}", env.schema)));
    }
    if env.kind != kind {
        return Err(Error::MalformedTable(format!("kind {:?}, expected {kind:?}", env.kind)));
    }
    Ok(env.body)
}

pub fn conversion_table_to_json(table: &ConversionTable) -> Result<String> {
    to_json("conversion_table", table)
}

/// Re-validates the table after parsing.
pub fn conversion_table_from_json(text: &str) -> Result<ConversionTable> {
    let t: ConversionTable = from_json("conversion_table", text)?;
    ConversionTable::new(t.inputs, t.outputs, t.probabilities)
}

pub fn count_table_to_json(table: &CountTable) -> Result<String> {
    to_json("count_table", table)
}

pub fn count_table_from_json(text: &str) -> Result<CountTable> {
    let t: CountTable = from_json("count_table", text)?;
    if t.counts.len() != t.inputs.len() || t.counts.iter().any(|r| r.len() != t.analyzers.len()) {
        return Err(Error::MalformedTable("count grid does not match labels".into()));
    }
    Ok(t)
}

/// Parses a seed given as decimal or `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => t.replace('_', "").parse(),
    };
    parsed.map_err(|_| Error::InvalidParameter(format!("seed {text:?} is not a decimal or 0x-hex u64")))
}

/// Table as aligned text with 4 decimals, for terminal output.
pub fn render_table(table: &ConversionTable) -> String {
    let width = table.outputs.iter().map(String::len).max().unwrap_or(0).max(6);
    let label = table.inputs.iter().map(String::len).max().unwrap_or(0);
    let mut s = format!("{:label$}", "");
    for o in &table.outputs {
        let _ = write!(s, "  {o:>width$}");
    }
    s.push('\n');
    for (input, row) in table.inputs.iter().zip(&table.probabilities) {
        let _ = write!(s, "{input:label$}");
        for p in row {
            let _ = write!(s, "  {p:>width$.4}");
        }
        s.push('\n');
    }
    s
}
