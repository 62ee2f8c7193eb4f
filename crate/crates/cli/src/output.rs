//! Canonical JSON (sorted keys, 17 significant digits) and CSV emission.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use radial_core::dynamics::Event;
use radial_core::fowler::{from_fowler, switch_l, FowlerState};
use radial_core::manifolds::ManifoldCurve;
use radial_core::shooting::StructureReport;

/// Serialize with object keys sorted and floats as `{:.16e}`.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(level + 1, out);
                write_value(item, level + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(level, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(level + 1, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], level + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(level, out);
            out.push('}');
        }
    }
}

/// Write a structure report as canonical JSON.
pub fn emit_report(report: &StructureReport, path: &Path) -> Result<()> {
    let text = canonical_json(report)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Trajectory states as CSV with header `t,x,y,phi,rho,u,du,r`, coordinates
/// expressed in exponent `l`.
pub fn trajectory_csv<W: Write>(states: &[FowlerState], l: f64, n: u32, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "y", "phi", "rho", "u", "du", "r"])?;
    for s in states {
        let s = switch_l(*s, l)?;
        let p = from_fowler(s, n);
        out.serialize((s.t, s.x, s.y, s.phi, s.rho(), p.u, p.du, p.r))?;
    }
    out.flush()?;
    Ok(())
}

/// Curve samples as CSV with header `param,Theta,R,x,y`.
pub fn curve_csv<W: Write>(curve: &ManifoldCurve, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["param", "Theta", "R", "x", "y"])?;
    for s in &curve.samples {
        out.serialize((s.param, s.theta, s.r, s.state.x, s.state.y))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EventsSidecar<'a> {
    schema: u32,
    events: &'a [Event],
}

pub fn events_json(events: &[Event]) -> Result<String> {
    canonical_json(&EventsSidecar { schema: 1, events })
}
