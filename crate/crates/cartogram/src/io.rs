//! File formats: topological subdivision documents (JSON), weight tables,
//! JSON reports with stable formatting, and SVG rendering of cartograms
//! and skeleton overlays.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bend::BendingConfiguration;
use crate::geometry::{ChordArc, Point, SimplePolygon};
use crate::metrics::{CartogramReport, FaceReport};
use crate::skeleton::SkeletonRegionSet;
use crate::subdivision::{InputFace, Subdivision};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, IoError>;

pub const FORMAT_VERSION: u32 = 1;

/// One face of a subdivision document: a ring of vertex indices plus the
/// weight; the (at most one) face with weight null is the sea.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentFace {
    pub name: String,
    pub ring: Vec<usize>,
    pub weight: Option<f64>,
}

/// Topological input format: shared borders exist by construction because
/// faces reference the same vertex indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdivisionDocument {
    pub format_version: u32,
    pub vertices: Vec<[f64; 2]>,
    pub faces: Vec<DocumentFace>,
    /// Optional explicit sea face index; must agree with the null weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sea: Option<usize>,
}

pub fn parse_subdivision(bytes: &[u8]) -> Result<SubdivisionDocument> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IoError::Parse(format!("$: not UTF-8: {e}")))?;
    let doc: SubdivisionDocument =
        serde_json::from_str(text).map_err(|e| IoError::Parse(format!("$: {e}")))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(IoError::Parse(format!(
            "$.format_version: expected {FORMAT_VERSION}, got {}",
            doc.format_version
        )));
    }
    let mut seas = Vec::new();
    for (f, face) in doc.faces.iter().enumerate() {
        if face.ring.len() < 3 {
            return Err(IoError::Parse(format!(
                "$.faces[{f}].ring: fewer than 3 vertices"
            )));
        }
        for (i, &v) in face.ring.iter().enumerate() {
            if v >= doc.vertices.len() {
                return Err(IoError::Parse(format!(
                    "$.faces[{f}].ring[{i}]: vertex index {v} out of range (have {})",
                    doc.vertices.len()
                )));
            }
        }
        if face.weight.is_none() {
            seas.push(f);
        }
    }
    if seas.len() > 1 {
        return Err(IoError::Parse(format!(
            "$.faces: more than one null-weight (sea) face: indices {seas:?}"
        )));
    }
    if let Some(sea) = doc.sea {
        if sea >= doc.faces.len() {
            return Err(IoError::Parse(format!(
                "$.sea: face index {sea} out of range"
            )));
        }
        if doc.faces[sea].weight.is_some() {
            return Err(IoError::Parse(format!(
                "$.faces[{sea}]: sea face '{}' must not carry a weight",
                doc.faces[sea].name
            )));
        }
    }
    Ok(doc)
}

pub fn serialize_subdivision(doc: &SubdivisionDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("document serializes");
    out.push(b'\n');
    out
}

/// Converts the document into builder input (points resolved).
pub fn document_to_input_faces(doc: &SubdivisionDocument) -> Vec<InputFace> {
    doc.faces
        .iter()
        .map(|f| InputFace {
            name: f.name.clone(),
            ring: f
                .ring
                .iter()
                .map(|&v| Point::new(doc.vertices[v][0], doc.vertices[v][1]))
                .collect(),
            weight: f.weight,
        })
        .collect()
}

/// Re-exports a built subdivision as a document (used by the gadget
/// generator); weights are taken from the faces.
pub fn document_from_subdivision(s: &Subdivision) -> SubdivisionDocument {
    let mut faces = Vec::new();
    for (f, face) in s.faces.iter().enumerate() {
        if f == s.outer_face {
            continue;
        }
        let ring: Vec<usize> = boundary_ring(s, f);
        faces.push(DocumentFace {
            name: face.name.clone(),
            ring,
            weight: face.weight,
        });
    }
    SubdivisionDocument {
        format_version: FORMAT_VERSION,
        vertices: s.vertices.iter().map(|p| [p.x, p.y]).collect(),
        faces,
        sea: None,
    }
}

fn boundary_ring(s: &Subdivision, f: usize) -> Vec<usize> {
    s.faces[f]
        .boundary
        .iter()
        .map(|&e| s.half_edges[e].origin)
        .collect()
}

/// Weight tables: a JSON object {name: weight} or two-column CSV lines
/// "name,weight".
pub fn parse_weights(bytes: &[u8]) -> Result<BTreeMap<String, f64>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IoError::Parse(format!("weights: not UTF-8: {e}")))?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed)
            .map_err(|e| IoError::Parse(format!("weights: {e}")));
    }
    let mut map = BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, w) = line.rsplit_once(',').ok_or_else(|| {
            IoError::Parse(format!("weights line {}: expected 'name,weight'", ln + 1))
        })?;
        let w: f64 = w.trim().parse().map_err(|_| {
            IoError::Parse(format!("weights line {}: bad number '{}'", ln + 1, w.trim()))
        })?;
        map.insert(name.trim().to_string(), w);
    }
    Ok(map)
}

/// Rounds to 12 significant digits so report bytes are stable and still
/// parse as plain JSON numbers.
fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor();
    let s = 10f64.powi(11 - e as i32);
    let v = (x * s).round() / s;
    format!("{v}")
}

fn opt12(x: Option<f64>) -> String {
    match x {
        Some(v) => sig12(v),
        None => "null".into(),
    }
}

/// Serializes the report with a fixed key order and 12-significant-digit
/// numbers; output is byte-identical across runs on identical input.
pub fn write_report(report: &CartogramReport) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("{\n  \"faces\": [");
    for (i, row) in report.faces.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("\n    ");
        write_face_row(&mut out, row);
    }
    if report.faces.is_empty() {
        out.push_str("],\n");
    } else {
        out.push_str("\n  ],\n");
    }
    let a = &report.aggregates;
    out.push_str("  \"aggregates\": {\n");
    out.push_str(&format!(
        "    \"average_success_rate\": {},\n",
        opt12(a.average_success_rate)
    ));
    out.push_str(&format!("    \"average_error\": {},\n", sig12(a.average_error)));
    out.push_str(&format!("    \"total_error\": {},\n", sig12(a.total_error)));
    out.push_str(&format!(
        "    \"zero_error_faces\": {},\n",
        a.zero_error_faces
    ));
    out.push_str(&format!("    \"flow_value\": {},\n", sig12(a.flow_value)));
    out.push_str(&format!("    \"demand\": {}\n", sig12(a.demand)));
    out.push_str("  }\n}\n");
    out.into_bytes()
}

fn write_face_row(out: &mut String, row: &FaceReport) {
    out.push_str(&format!(
        "{{\"name\": {}, \"area\": {}, \"target\": {}, \"resulting\": {}, \"delta\": {}, \"success_rate\": {}, \"error\": {}, \"absolute_error\": {}}}",
        serde_json::to_string(&row.name).expect("string"),
        sig12(row.area),
        sig12(row.target),
        sig12(row.resulting),
        sig12(row.delta),
        opt12(row.success_rate),
        sig12(row.error),
        opt12(row.absolute_error),
    ));
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    /// Pixels per map unit.
    pub scale: f64,
    pub margin: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            scale: 60.0,
            margin: 24.0,
        }
    }
}

fn svg_num(x: f64) -> String {
    // enough digits to reconstruct geometry to well under 1e-6 map units
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// One path segment per undirected edge: a line when straight, else an
/// elliptical arc with rx = ry = arc radius, large-arc when the sagitta
/// exceeds half the chord, sweep flag from the sagitta sign.
fn arc_path_segment(arc: &ChordArc) -> String {
    let b = arc.b;
    if arc.is_straight() {
        return format!("L {} {}", svg_num(b.x), svg_num(b.y));
    }
    let r = arc.radius();
    let large = if arc.sagitta.abs() > arc.chord_length() / 2.0 {
        1
    } else {
        0
    };
    // map coordinates are y-up inside the flipped group: a positive
    // (bulge-left) sagitta traverses its circle in the negative-angle
    // direction there
    let sweep = if arc.sagitta > 0.0 { 0 } else { 1 };
    format!(
        "A {} {} 0 {} {} {} {}",
        svg_num(r),
        svg_num(r),
        large,
        sweep,
        svg_num(b.x),
        svg_num(b.y)
    )
}

struct Viewport {
    scale: f64,
    margin: f64,
    min: Point,
    max: Point,
}

impl Viewport {
    fn new(points: impl Iterator<Item = Point>, pad: f64, opts: &RenderOptions) -> Viewport {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
        if !min.x.is_finite() {
            min = Point::new(0.0, 0.0);
            max = Point::new(1.0, 1.0);
        }
        min = Point::new(min.x - pad, min.y - pad);
        max = Point::new(max.x + pad, max.y + pad);
        Viewport {
            scale: opts.scale,
            margin: opts.margin,
            min,
            max,
        }
    }

    fn width(&self) -> f64 {
        (self.max.x - self.min.x) * self.scale + 2.0 * self.margin
    }

    fn height(&self) -> f64 {
        (self.max.y - self.min.y) * self.scale + 2.0 * self.margin
    }

    /// Transform for the geometry group: map y up, SVG y down.
    fn group_transform(&self) -> String {
        let tx = self.margin - self.min.x * self.scale;
        let ty = self.margin + self.max.y * self.scale;
        format!(
            "matrix({} 0 0 -{} {} {})",
            svg_num(self.scale),
            svg_num(self.scale),
            svg_num(tx),
            svg_num(ty)
        )
    }

    /// Screen position of a map point (for unflipped text).
    fn screen(&self, p: Point) -> (f64, f64) {
        (
            self.margin + (p.x - self.min.x) * self.scale,
            self.margin + (self.max.y - p.y) * self.scale,
        )
    }

    fn header(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
            svg_num(self.width()),
            svg_num(self.height()),
            svg_num(self.width()),
            svg_num(self.height())
        )
    }
}

fn polygon_path(points: &[Point]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        d.push_str(if i == 0 { "M " } else { "L " });
        d.push_str(&format!("{} {} ", svg_num(p.x), svg_num(p.y)));
    }
    d.push('Z');
    d
}

fn centroid(points: &[Point]) -> Point {
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..points.len() {
        let p = points[i];
        let q = points[(i + 1) % points.len()];
        let w = p.x * q.y - q.x * p.y;
        a += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    if a.abs() < 1e-12 {
        return points[0];
    }
    Point::new(cx / (3.0 * a), cy / (3.0 * a))
}

fn inradius_estimate(points: &[Point]) -> f64 {
    let area = crate::geometry::signed_area(points).abs();
    let mut perimeter = 0.0;
    for i in 0..points.len() {
        perimeter += points[i].dist(&points[(i + 1) % points.len()]);
    }
    if perimeter == 0.0 {
        0.0
    } else {
        2.0 * area / perimeter
    }
}

/// Renders input polygons as a gray underlay with the bent boundaries on
/// top and a "(rate, error)" label at each reported face's centroid.
pub fn render_svg(
    s: &Subdivision,
    cfg: &BendingConfiguration,
    report: &CartogramReport,
    opts: &RenderOptions,
) -> String {
    let pad = cfg
        .sagitta
        .iter()
        .fold(0.5f64, |m, h| m.max(h.abs()));
    let vp = Viewport::new(s.vertices.iter().copied(), pad, opts);
    let mut svg = vp.header();
    svg.push_str(&format!("<g transform=\"{}\">\n", vp.group_transform()));

    // gray underlay: the straight input polygons
    for f in 0..s.faces.len() {
        if f == s.outer_face {
            continue;
        }
        let points: Vec<Point> = s.faces[f]
            .boundary
            .iter()
            .map(|&e| s.vertices[s.half_edges[e].origin])
            .collect();
        svg.push_str(&format!(
            "<path class=\"input\" d=\"{}\" fill=\"#d4d4d4\" stroke=\"#a0a0a0\" stroke-width=\"{}\"/>\n",
            polygon_path(&points),
            svg_num(1.0 / vp.scale)
        ));
    }

    // bent boundaries, one path segment per undirected edge
    let mut d = String::new();
    for e in s.undirected_edges() {
        let (canon, _) = cfg.canonical_sagitta(s, e);
        let arc = cfg.arc(s, canon);
        let a = arc.a;
        d.push_str(&format!("M {} {} ", svg_num(a.x), svg_num(a.y)));
        d.push_str(&arc_path_segment(&arc));
        d.push(' ');
    }
    svg.push_str(&format!(
        "<path class=\"bent\" d=\"{}\" fill=\"none\" stroke=\"#1a1a1a\" stroke-width=\"{}\"/>\n",
        d.trim_end(),
        svg_num(2.5 / vp.scale)
    ));
    svg.push_str("</g>\n");

    // labels in screen space so text is not mirrored
    for row in &report.faces {
        let Some(f) = s.faces.iter().position(|face| face.name == row.name) else {
            continue;
        };
        let points: Vec<Point> = s.faces[f]
            .boundary
            .iter()
            .map(|&e| s.vertices[s.half_edges[e].origin])
            .collect();
        let c = centroid(&points);
        let (x, y) = vp.screen(c);
        let font = (inradius_estimate(&points) * vp.scale * 0.35).max(6.0);
        let rate = match row.success_rate {
            Some(r) => format!("{r:.2}"),
            None => "-".to_string(),
        };
        let err = if row.error.is_finite() {
            format!("{:.2}", row.error)
        } else {
            format!("{:.2}", row.absolute_error.unwrap_or(f64::NAN))
        };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\">({rate}, {err})</text>\n",
            svg_num(x),
            svg_num(y),
            svg_num(font)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Skeleton overlay for one face:
/// the polygon, its straight-skeleton ridges, and the maximal arc each
/// edge can sweep inside its skeleton region.
pub fn render_skeleton_svg(
    poly: &SimplePolygon,
    skel: &SkeletonRegionSet,
    max_sagittas: &[f64],
    opts: &RenderOptions,
) -> String {
    let vp = Viewport::new(poly.vertices().iter().copied(), 0.5, opts);
    let mut svg = vp.header();
    svg.push_str(&format!("<g transform=\"{}\">\n", vp.group_transform()));
    svg.push_str(&format!(
        "<path d=\"{}\" fill=\"#eeeeee\" stroke=\"#333333\" stroke-width=\"{}\"/>\n",
        polygon_path(poly.vertices()),
        svg_num(1.5 / vp.scale)
    ));
    for (a, b) in &skel.arcs {
        svg.push_str(&format!(
            "<line class=\"ridge\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#2060c0\" stroke-width=\"{}\" stroke-dasharray=\"{}\"/>\n",
            svg_num(a.x),
            svg_num(a.y),
            svg_num(b.x),
            svg_num(b.y),
            svg_num(1.0 / vp.scale),
            svg_num(4.0 / vp.scale)
        ));
    }
    for (i, &h) in max_sagittas.iter().enumerate() {
        let (a, b) = poly.edge(i);
        if h <= 0.0 {
            continue;
        }
        let arc = ChordArc::new(a, b, h);
        svg.push_str(&format!(
            "<path class=\"maxarc\" d=\"M {} {} {}\" fill=\"none\" stroke=\"#c03020\" stroke-width=\"{}\"/>\n",
            svg_num(a.x),
            svg_num(a.y),
            arc_path_segment(&arc),
            svg_num(1.2 / vp.scale)
        ));
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}
