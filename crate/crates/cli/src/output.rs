//! Plain tables and their CSV / JSON encodings.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Number, Value as Json};

/// Bumped whenever columns are added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Nine significant digits, fixed notation for moderate exponents and
/// scientific otherwise, trailing zeros removed.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_float(*v),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
    }
}

fn json_cell(c: &Cell) -> Json {
    match c {
        Cell::Int(v) => json!(v),
        Cell::Float(v) => Number::from_f64(*v).map_or(Json::Null, Json::Number),
        Cell::Bool(b) => json!(b),
        Cell::Text(s) => json!(s),
    }
}

pub fn to_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(csv_field).collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// `{meta: {...}, rows: [...]}` plus any extra top-level entries.
pub fn to_json(table: &Table, command: &str, seed: Option<u64>, extra: Map<String, Json>) -> String {
    let rows: Vec<Json> = table
        .rows
        .iter()
        .map(|r| {
            let obj: Map<String, Json> = table
                .columns
                .iter()
                .zip(r)
                .map(|(c, v)| (c.to_string(), json_cell(v)))
                .collect();
            Json::Object(obj)
        })
        .collect();
    let mut top = Map::new();
    top.insert(
        "meta".into(),
        json!({
            "command": command,
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
            "schema": SCHEMA_VERSION,
        }),
    );
    top.insert("rows".into(), Json::Array(rows));
    top.extend(extra);
    let mut s = serde_json::to_string_pretty(&Json::Object(top)).expect("json values serialize");
    s.push('\n');
    s
}

/// Writes to `out`, or to standard output when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_float(1.0 / 64.0), "0.015625");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333");
        assert_eq!(format_float(0.00721347520444), "0.0072134752");
        assert_eq!(format_float(123456789.4), "123456789");
        assert_eq!(format_float(1234567890.0), "1.23456789e9");
        assert_eq!(format_float(-2.5e-7), "-2.5e-7");
        assert_eq!(format_float(9.9999999996), "10");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_quotes_and_newlines() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec![Cell::Int(3), Cell::Text("x,y".into())]);
        assert_eq!(to_csv(&t), "a,b\n3,\"x,y\"\n");
    }
}
