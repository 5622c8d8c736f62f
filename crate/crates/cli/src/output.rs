//! Machine-readable artifacts.
//!
//! Floats are written with 12 significant digits in both formats, keys come
//! out in a fixed order, and no locale is consulted, so identical inputs
//! give byte-identical files.

use std::str::FromStr;

use heisenspec::weyl::{ParamValue, VolumeConvention, WeylRecord};
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA: &str = "heisenspec/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (expected json or csv)")),
        }
    }
}

pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().unwrap_or(x)
    } else {
        x
    }
}

fn float_cell(x: f64) -> String {
    format!("{x:.11e}")
}

/// Rounds every float in a JSON value to 12 significant digits.
pub fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => float_cell(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        nested => nested.to_string(),
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Output(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

fn json_bytes(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::Output(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// A flat result object with the standard envelope fields.
pub fn record(command: &str, conventions: &str, fields: Map<String, Value>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), SCHEMA.into());
    m.insert("command".into(), command.into());
    m.insert("conventions".into(), conventions.into());
    m.extend(fields);
    m
}

/// JSON: the object itself. CSV: a header and one row; nested values are
/// written as compact JSON inside the cell.
pub fn emit_record(fields: &Map<String, Value>, format: Format) -> Result<Vec<u8>, CliError> {
    let value = round_value(Value::Object(fields.clone()));
    match format {
        Format::Json => json_bytes(&value),
        Format::Csv => {
            let obj = value.as_object().expect("object stays an object");
            let header: Vec<String> = obj.keys().cloned().collect();
            let row: Vec<String> = obj.values().map(cell).collect();
            csv_bytes(&header, &[row])
        }
    }
}

/// Rows of a uniform table: one header and homogeneous rows.
pub fn emit_rows(command: &str, conventions: &str, header: &[String], rows: &[Vec<Value>], format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let objects: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(header.iter().cloned().zip(r.iter().cloned()).collect()))
                .collect();
            let mut m = record(command, conventions, Map::new());
            m.insert("rows".into(), Value::Array(objects));
            json_bytes(&round_value(Value::Object(m)))
        }
        Format::Csv => {
            let mut h = header.to_vec();
            h.push("conventions".into());
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut c: Vec<String> = r.iter().map(|v| cell(&round_value(v.clone()))).collect();
                    c.push(conventions.to_string());
                    c
                })
                .collect();
            csv_bytes(&h, &cells)
        }
    }
}

/// One line of a Weyl table: a computed record, or the parameters of an
/// excluded case and why it was excluded.
#[derive(Debug, Clone, PartialEq)]
pub enum TableRow {
    Included(WeylRecord),
    Excluded {
        family: String,
        params: Vec<(String, ParamValue)>,
        reason: String,
    },
}

impl TableRow {
    fn family(&self) -> &str {
        match self {
            TableRow::Included(r) => &r.family,
            TableRow::Excluded { family, .. } => family,
        }
    }

    fn params(&self) -> &[(String, ParamValue)] {
        match self {
            TableRow::Included(r) => &r.params,
            TableRow::Excluded { params, .. } => params,
        }
    }
}

fn param_json(p: &ParamValue) -> Value {
    match *p {
        ParamValue::Int(i) => Value::from(i),
        ParamValue::Real(x) => Value::from(x),
    }
}

/// Writes a Weyl table.
///
/// Columns are the parameters followed by `constant, exponent,
/// volume_convention, provenance, excluded`. Tables mixing families,
/// parameter sets or volume conventions are refused.
pub fn emit_table(rows: &[TableRow], format: Format, conventions: &str) -> Result<Vec<u8>, CliError> {
    let names: Vec<String> = rows.first().map(|r| r.params().iter().map(|p| p.0.clone()).collect()).unwrap_or_default();
    let mut volume: Option<VolumeConvention> = None;
    for r in rows {
        if r.family() != rows[0].family() {
            return Err(CliError::MixedTable(format!("families '{}' and '{}'", rows[0].family(), r.family())));
        }
        let these: Vec<&String> = r.params().iter().map(|p| &p.0).collect();
        if these.len() != names.len() || these.iter().zip(&names).any(|(a, b)| *a != b) {
            return Err(CliError::MixedTable("rows with different parameter sets".into()));
        }
        if let TableRow::Included(rec) = r {
            match volume {
                None => volume = Some(rec.volume_convention),
                Some(v) if v != rec.volume_convention => {
                    return Err(CliError::MixedTable(format!("volume conventions {v} and {}", rec.volume_convention)));
                }
                _ => {}
            }
        }
    }
    let mut header = names.clone();
    header.extend(["constant", "exponent", "volume_convention", "provenance", "excluded"].map(String::from));
    let values: Vec<Vec<Value>> = rows
        .iter()
        .map(|r| {
            let mut v: Vec<Value> = r.params().iter().map(|p| param_json(&p.1)).collect();
            match r {
                TableRow::Included(rec) => v.extend([
                    Value::from(rec.constant),
                    Value::from(rec.exponent),
                    Value::from(rec.volume_convention.to_string()),
                    Value::from(rec.provenance.join("; ")),
                    Value::Null,
                ]),
                TableRow::Excluded { reason, .. } => {
                    v.extend([Value::Null, Value::Null, Value::Null, Value::Null, Value::from(reason.clone())])
                }
            }
            v
        })
        .collect();
    emit_rows("weyl-table", conventions, &header, &values, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(constant: f64, conv: VolumeConvention) -> WeylRecord {
        WeylRecord {
            family: "gamma".into(),
            params: vec![("n".into(), ParamValue::Int(2)), ("k".into(), ParamValue::Int(0))],
            constant,
            exponent: 3.0,
            volume_convention: conv,
            provenance: vec!["a".into(), "b".into()],
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let out = String::from_utf8(emit_table(&[], Format::Csv, "h").unwrap()).unwrap();
        assert_eq!(out, "constant,exponent,volume_convention,provenance,excluded,conventions\n");
    }

    #[test]
    fn one_row_round_trips_and_is_stable() {
        let rows = [TableRow::Included(rec(1.0 / 3.0, VolumeConvention::Pseudohermitian))];
        let a = emit_table(&rows, Format::Json, "h").unwrap();
        assert_eq!(a, emit_table(&rows, Format::Json, "h").unwrap());
        let v: Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["rows"].as_array().unwrap().len(), 1);
        assert_eq!(v["rows"][0]["constant"].as_f64().unwrap(), 0.333333333333);
        let csv = String::from_utf8(emit_table(&rows, Format::Csv, "h").unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("2,0,3.33333333333e-1,3.00000000000e0,pseudohermitian,a; b,,h"));
    }

    #[test]
    fn mixed_conventions_are_refused() {
        let rows = [
            TableRow::Included(rec(1.0, VolumeConvention::Pseudohermitian)),
            TableRow::Included(rec(1.0, VolumeConvention::Haar)),
        ];
        assert!(matches!(emit_table(&rows, Format::Csv, "h"), Err(CliError::MixedTable(_))));
    }
}
