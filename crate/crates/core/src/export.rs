//! Canonical JSON, mesh and field documents, and SVG rendering.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::assembly::{DofSpace, FieldU};
use crate::error::{Error, Result};
use crate::hfield::IsoLine;
use crate::mesh::{Mesh, Point};
use crate::solver::cross_of;

/// Formats a float like C's `%.12g`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    const P: i32 = 12;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..P).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    out.push_str(&fmt_g(f));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push(':');
                write_canonical(&m[k], out);
            }
            out.push('}');
        }
    }
}

/// Compact JSON with sorted keys and `%.12g` floats.
pub fn canonical_json_value(v: &Value) -> String {
    let mut s = String::new();
    write_canonical(v, &mut s);
    s
}

pub fn canonical_json<T: Serialize>(v: &T) -> Result<String> {
    let value = serde_json::to_value(v).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(canonical_json_value(&value))
}

/// `{vertices, triangles, loops, holes}`.
pub fn mesh_json(mesh: &Mesh) -> Value {
    json!({
        "vertices": mesh.vertices,
        "triangles": mesh.triangles,
        "loops": mesh.boundary_loops,
        "holes": mesh.hole_loops.iter().map(|h| json!({"loop": h.loop_index, "spec": h.spec})).collect::<Vec<_>>(),
    })
}

/// `{space, values}`.
pub fn field_json(field: &FieldU) -> Value {
    json!({ "space": field.space.as_str(), "values": field.values })
}

struct View {
    lo: Point,
    scale: f64,
    height: f64,
}

impl View {
    fn new(mesh: &Mesh, width: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let scale = width / span;
        Self { lo, scale, height: (hi[1] - lo[1]) * scale }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        ((p[0] - self.lo[0]) * self.scale, self.height - (p[1] - self.lo[1]) * self.scale)
    }
}

fn svg_open(v: &View, width: f64) -> String {
    let pad = 10.0;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"{}\" height=\"{}\">\n",
        fmt_g(-pad),
        fmt_g(-pad),
        fmt_g(width + 2.0 * pad),
        fmt_g(v.height + 2.0 * pad),
        fmt_g(width + 2.0 * pad),
        fmt_g(v.height + 2.0 * pad)
    )
}

fn heat_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

fn boundary_paths(mesh: &Mesh, v: &View, out: &mut String) {
    for lp in &mesh.boundary_loops {
        let mut d = String::new();
        for (i, &p) in lp.iter().enumerate() {
            let (x, y) = v.map(mesh.vertices[p]);
            let _ = write!(d, "{}{} {} ", if i == 0 { 'M' } else { 'L' }, fmt_g(x), fmt_g(y));
        }
        d.push('Z');
        let _ = writeln!(out, "<path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>");
    }
}

/// `|u|` heatmap per triangle plus a four-stroke glyph per site.
pub fn field_svg(mesh: &Mesh, space: &DofSpace, field: &FieldU) -> String {
    let width = 800.0;
    let v = View::new(mesh, width);
    let mut out = svg_open(&v, width);
    let norms: Vec<f64> = field.values.iter().map(|u| u[0].hypot(u[1])).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max).max(1e-300);
    out.push_str("<g id=\"heatmap\" stroke=\"none\">\n");
    for (t, d) in space.tri_dofs.iter().enumerate() {
        let n = (norms[d[0]] + norms[d[1]] + norms[d[2]]) / (3.0 * max);
        let pts: Vec<String> = mesh
            .tri_points(t)
            .iter()
            .map(|&p| {
                let (x, y) = v.map(p);
                format!("{},{}", fmt_g(x), fmt_g(y))
            })
            .collect();
        let _ = writeln!(out, "<polygon points=\"{}\" fill=\"{}\"/>", pts.join(" "), heat_color(n));
    }
    out.push_str("</g>\n<g id=\"crosses\" stroke=\"black\" stroke-width=\"0.8\">\n");
    let glyph = 0.35 * mesh.mean_edge_length() * v.scale;
    for (s, u) in field.values.iter().enumerate() {
        let c = cross_of(*u);
        if c.degenerate {
            continue;
        }
        let len = glyph * c.norm.powf(0.25) / max.powf(0.25);
        let (x, y) = v.map(space.sites[s]);
        for j in 0..4 {
            let a = c.angle + j as f64 * std::f64::consts::FRAC_PI_2;
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                fmt_g(x),
                fmt_g(y),
                fmt_g(x + len * a.cos()),
                fmt_g(y - len * a.sin())
            );
        }
    }
    out.push_str("</g>\n");
    boundary_paths(mesh, &v, &mut out);
    out.push_str("</svg>\n");
    out
}

/// Mesh edges and boundary only.
pub fn mesh_svg(mesh: &Mesh) -> String {
    let width = 800.0;
    let v = View::new(mesh, width);
    let mut out = svg_open(&v, width);
    out.push_str("<g id=\"edges\" stroke=\"#999999\" stroke-width=\"0.3\">\n");
    for e in &mesh.edges {
        let (x1, y1) = v.map(mesh.vertices[e[0]]);
        let (x2, y2) = v.map(mesh.vertices[e[1]]);
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", fmt_g(x1), fmt_g(y1), fmt_g(x2), fmt_g(y2));
    }
    out.push_str("</g>\n");
    boundary_paths(mesh, &v, &mut out);
    out.push_str("</svg>\n");
    out
}

/// Iso-line segments over the domain outline.
pub fn iso_svg(mesh: &Mesh, lines: &[IsoLine]) -> String {
    let width = 800.0;
    let v = View::new(mesh, width);
    let mut out = svg_open(&v, width);
    let n = lines.len().max(1);
    for (i, l) in lines.iter().enumerate() {
        let _ = writeln!(
            out,
            "<g class=\"iso\" data-level=\"{}\" stroke=\"{}\" stroke-width=\"1\">",
            fmt_g(l.level),
            heat_color(i as f64 / (n - 1).max(1) as f64)
        );
        for s in &l.segments {
            let (x1, y1) = v.map(s[0]);
            let (x2, y2) = v.map(s[1]);
            let _ = writeln!(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", fmt_g(x1), fmt_g(y1), fmt_g(x2), fmt_g(y2));
        }
        out.push_str("</g>\n");
    }
    boundary_paths(mesh, &v, &mut out);
    out.push_str("</svg>\n");
    out
}
