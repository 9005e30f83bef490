//! CSV and JSON renderings of measures and value functions.
//!
//! CSV files are comma-separated with a header row and LF line endings. Floats
//! are rounded to 12 significant digits and then printed as the shortest
//! decimal that round-trips, so repeated runs produce identical bytes.

use serde_json::{json, Value};

use crate::discretize::DiscretizedSystem;
use crate::dp::ValueFunction;
use crate::measures::{Measure, OccupationalMeasure};

pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap();
    let magnitude = rounded.abs();
    if rounded == 0.0 {
        "0".into()
    } else if (1e-6..1e15).contains(&magnitude) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Rounds like [`fmt_float`] but keeps the number, for JSON output.
pub fn round12(x: f64) -> Value {
    if x.is_finite() {
        json!(fmt_float(x).parse::<f64>().unwrap())
    } else {
        json!(fmt_float(x))
    }
}

fn coordinate_headers(dsys: &DiscretizedSystem) -> Vec<String> {
    (0..dsys.state_dim()).map(|j| format!("y{j}")).collect()
}

fn coordinates(dsys: &DiscretizedSystem, state: usize) -> Vec<String> {
    match dsys.point(state) {
        Some(y) => y.iter().map(|v| fmt_float(*v)).collect(),
        None => vec!["inf".into(); dsys.state_dim()],
    }
}

pub(crate) fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

/// One row per pair in the support: state coordinates, control index, weight.
pub fn measure_csv(dsys: &DiscretizedSystem, mu: &dyn Measure) -> String {
    let mut header = coordinate_headers(dsys);
    header.extend(["control".to_string(), "weight".to_string()]);
    let mut out = csv_line(&header);
    for (p, w) in mu.weights() {
        let mut fields = coordinates(dsys, p.state);
        fields.push(p.control.to_string());
        fields.push(fmt_float(*w));
        out.push_str(&csv_line(&fields));
    }
    out
}

pub fn measure_json(dsys: &DiscretizedSystem, mu: &OccupationalMeasure) -> Value {
    let support: Vec<Value> = mu
        .weights()
        .iter()
        .map(|(p, w)| json!({ "state": p.state, "control": p.control, "weight": round12(*w) }))
        .collect();
    json!({
        "system": dsys.name(),
        "kind": mu.kind,
        "origin": mu.origin,
        "exact": mu.exact,
        "tail_tolerance": round12(mu.tail_tolerance),
        "total_mass": round12(mu.total_mass()),
        "support": support,
    })
}

/// One row per state (infinity node last): coordinates and value.
pub fn value_csv(dsys: &DiscretizedSystem, vf: &ValueFunction) -> String {
    let mut header = coordinate_headers(dsys);
    header.push("value".into());
    let mut out = csv_line(&header);
    for (s, v) in vf.values.iter().enumerate() {
        let mut fields = coordinates(dsys, s);
        fields.push(fmt_float(*v));
        out.push_str(&csv_line(&fields));
    }
    out
}
