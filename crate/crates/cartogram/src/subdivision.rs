//! Half-edge planar map: topology construction from polygon rings, face
//! weights and desired area changes, and the dual face graph.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{
    cross, segments_properly_intersect, signed_area, Point, SimplePolygon, GEOM_EPS,
};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type FaceId = usize;

#[derive(Debug, Error)]
pub enum SubdivisionError {
    #[error("topology error: {0}")]
    Topology(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, SubdivisionError>;

#[derive(Debug, Clone, Copy)]
pub struct HalfEdge {
    pub origin: VertexId,
    pub target: VertexId,
    pub twin: EdgeId,
    pub face: FaceId,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub name: String,
    /// Counterclockwise half-edge cycle for bounded faces; unordered list of
    /// the unmatched border half-edges for the outer face.
    pub boundary: Vec<EdgeId>,
    /// Shoelace area of the boundary polygon; 0 for the outer face.
    pub area: f64,
    /// Raw input weight; None for sea/outer faces.
    pub weight: Option<f64>,
}

/// A planar polygonal map. Immutable once built.
#[derive(Debug, Clone)]
pub struct Subdivision {
    pub vertices: Vec<Point>,
    pub half_edges: Vec<HalfEdge>,
    pub faces: Vec<Face>,
    /// The face acting as sea (no target area). Either a bounded input face
    /// with unspecified weight or the synthetic outer face.
    pub sea_face: Option<FaceId>,
    /// The synthetic face for the unbounded complement; last in `faces`.
    pub outer_face: FaceId,
}

/// One input region: a simple ring of points plus an optional weight.
/// A face with `weight: None` is the explicit sea face.
#[derive(Debug, Clone)]
pub struct InputFace {
    pub name: String,
    pub ring: Vec<Point>,
    pub weight: Option<f64>,
}

impl Subdivision {
    pub fn edge_points(&self, e: EdgeId) -> (Point, Point) {
        let he = &self.half_edges[e];
        (self.vertices[he.origin], self.vertices[he.target])
    }

    pub fn edge_length(&self, e: EdgeId) -> f64 {
        let (a, b) = self.edge_points(e);
        a.dist(&b)
    }

    pub fn is_sea(&self, f: FaceId) -> bool {
        self.sea_face == Some(f)
    }

    /// Bounded faces that carry targets (everything except sea and outer).
    pub fn constrained_faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        (0..self.faces.len()).filter(|&f| f != self.outer_face && !self.is_sea(f))
    }

    pub fn face_polygon(&self, f: FaceId) -> SimplePolygon {
        let pts = self.faces[f]
            .boundary
            .iter()
            .map(|&e| self.vertices[self.half_edges[e].origin])
            .collect();
        SimplePolygon::new_unchecked(pts)
    }

    /// Degree of a vertex counted in undirected edges.
    fn vertex_degree(&self, v: VertexId) -> usize {
        self.half_edges.iter().filter(|he| he.origin == v).count()
    }

    /// Canonical representative of an undirected edge: the half-edge with
    /// the smaller id of a twin pair.
    pub fn undirected_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.half_edges.len()).filter(move |&e| e < self.half_edges[e].twin)
    }
}

/// Builds a subdivision from polygon rings: vertices within snap_eps are
/// merged, coincident border chains become twin half-edge pairs, and the
/// unbounded complement becomes the sea face unless an explicit sea polygon
/// (weight None) is present.
pub fn build_from_polygons(polygons: &[InputFace], snap_eps: f64) -> Result<Subdivision> {
    if !snap_eps.is_finite() || snap_eps < 0.0 {
        return Err(SubdivisionError::Domain(format!(
            "snap_eps must be non-negative, got {snap_eps}"
        )));
    }
    let mut vertices: Vec<Point> = Vec::new();
    fn snap(vertices: &mut Vec<Point>, p: Point, snap_eps: f64) -> VertexId {
        for (i, v) in vertices.iter().enumerate() {
            if v.dist(&p) <= snap_eps {
                return i;
            }
        }
        vertices.push(p);
        vertices.len() - 1
    }

    let mut rings: Vec<Vec<VertexId>> = Vec::new();
    for face in polygons {
        let mut ring: Vec<VertexId> = face
            .ring
            .iter()
            .map(|&p| snap(&mut vertices, p, snap_eps))
            .collect();
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        ring.dedup();
        if ring.len() < 3 {
            return Err(SubdivisionError::Domain(format!(
                "face '{}' has fewer than 3 distinct vertices after snapping",
                face.name
            )));
        }
        let pts: Vec<Point> = ring.iter().map(|&v| vertices[v]).collect();
        let a = signed_area(&pts);
        if a.abs() <= GEOM_EPS {
            return Err(SubdivisionError::Domain(format!(
                "face '{}' has near-zero area",
                face.name
            )));
        }
        if a < 0.0 {
            ring.reverse();
        }
        let pts: Vec<Point> = ring.iter().map(|&v| vertices[v]).collect();
        if !SimplePolygon::new_unchecked(pts).is_simple(GEOM_EPS) {
            return Err(SubdivisionError::Topology(format!(
                "face '{}' is self-intersecting",
                face.name
            )));
        }
        rings.push(ring);
    }

    let n_faces = polygons.len();
    let outer_face = n_faces;
    let mut half_edges: Vec<HalfEdge> = Vec::new();
    let mut directed: BTreeMap<(VertexId, VertexId), EdgeId> = BTreeMap::new();
    let mut faces: Vec<Face> = Vec::new();

    for (f, ring) in rings.iter().enumerate() {
        let mut boundary = Vec::with_capacity(ring.len());
        for i in 0..ring.len() {
            let u = ring[i];
            let v = ring[(i + 1) % ring.len()];
            let e = half_edges.len();
            if let Some(&prev) = directed.get(&(u, v)) {
                let other = half_edges[prev].face;
                return Err(SubdivisionError::Topology(format!(
                    "faces '{}' and '{}' overlap along a shared border traversed in the same direction",
                    polygons[other].name, polygons[f].name
                )));
            }
            directed.insert((u, v), e);
            half_edges.push(HalfEdge {
                origin: u,
                target: v,
                twin: usize::MAX,
                face: f,
            });
            boundary.push(e);
        }
        let pts: Vec<Point> = ring.iter().map(|&v| vertices[v]).collect();
        faces.push(Face {
            name: polygons[f].name.clone(),
            boundary,
            area: signed_area(&pts),
            weight: polygons[f].weight,
        });
    }

    // pair twins; unmatched half-edges get an outer-face twin
    let mut outer_boundary = Vec::new();
    for e in 0..half_edges.len() {
        if half_edges[e].twin != usize::MAX {
            continue;
        }
        let (u, v) = (half_edges[e].origin, half_edges[e].target);
        if let Some(&t) = directed.get(&(v, u)) {
            half_edges[e].twin = t;
            half_edges[t].twin = e;
        } else {
            let t = half_edges.len();
            half_edges.push(HalfEdge {
                origin: v,
                target: u,
                twin: e,
                face: outer_face,
            });
            half_edges[e].twin = t;
            outer_boundary.push(t);
        }
    }

    // interior holes show up as counterclockwise cycles of outer half-edges
    check_outer_cycles(&vertices, &half_edges, &outer_boundary, polygons, &faces)?;

    faces.push(Face {
        name: "<outer>".into(),
        boundary: outer_boundary,
        area: 0.0,
        weight: None,
    });

    // cross-face edge crossings and proper overlaps
    check_pairwise_crossings(&vertices, &half_edges, &faces, n_faces, polygons)?;

    let mut sea_face = None;
    for (f, face) in polygons.iter().enumerate() {
        if face.weight.is_none() {
            if sea_face.is_some() {
                return Err(SubdivisionError::Domain(
                    "more than one face without weight; only a single sea face is supported"
                        .into(),
                ));
            }
            sea_face = Some(f);
        }
    }
    // default: the unbounded complement is the sea
    let sea_face = sea_face.or(Some(outer_face));

    Ok(Subdivision {
        vertices,
        half_edges,
        faces,
        sea_face,
        outer_face,
    })
}

fn check_outer_cycles(
    vertices: &[Point],
    half_edges: &[HalfEdge],
    outer: &[EdgeId],
    polygons: &[InputFace],
    faces: &[Face],
) -> Result<()> {
    use std::collections::HashMap;
    let mut by_origin: HashMap<VertexId, Vec<EdgeId>> = HashMap::new();
    for &e in outer {
        by_origin.entry(half_edges[e].origin).or_default().push(e);
    }
    let mut visited: std::collections::HashSet<EdgeId> = Default::default();
    for &start in outer {
        if visited.contains(&start) {
            continue;
        }
        let mut cycle = Vec::new();
        let mut e = start;
        loop {
            visited.insert(e);
            cycle.push(e);
            let v = half_edges[e].target;
            let nexts = by_origin.get(&v).ok_or_else(|| {
                SubdivisionError::Topology(format!(
                    "dangling border at vertex {v}: edge borders only face '{}'",
                    face_name(half_edges[half_edges[e].twin].face, polygons, faces)
                ))
            })?;
            // at a vertex with several outgoing outer edges pick the most
            // clockwise continuation so cycles stay separated
            let prev = vertices[half_edges[e].origin];
            let cur = vertices[v];
            let next = *nexts
                .iter()
                .filter(|&&n| !visited.contains(&n) || n == start)
                .min_by(|&&x, &&y| {
                    let ax = turn_angle(prev, cur, vertices[half_edges[x].target]);
                    let ay = turn_angle(prev, cur, vertices[half_edges[y].target]);
                    ax.partial_cmp(&ay).unwrap()
                })
                .ok_or_else(|| {
                    SubdivisionError::Topology(format!("open border chain at vertex {v}"))
                })?;
            e = next;
            if e == start {
                break;
            }
        }
        let pts: Vec<Point> = cycle
            .iter()
            .map(|&e| vertices[half_edges[e].origin])
            .collect();
        if signed_area(&pts) > GEOM_EPS {
            let neighbors: Vec<String> = cycle
                .iter()
                .map(|&e| face_name(half_edges[half_edges[e].twin].face, polygons, faces))
                .collect();
            return Err(SubdivisionError::Topology(format!(
                "dangling border: interior hole bounded by faces {neighbors:?}"
            )));
        }
    }
    Ok(())
}

fn face_name(f: FaceId, polygons: &[InputFace], faces: &[Face]) -> String {
    if f < polygons.len() {
        polygons[f].name.clone()
    } else if f < faces.len() {
        faces[f].name.clone()
    } else {
        format!("<face {f}>")
    }
}

fn turn_angle(prev: Point, cur: Point, next: Point) -> f64 {
    let a = (cur.y - prev.y).atan2(cur.x - prev.x);
    let b = (next.y - cur.y).atan2(next.x - cur.x);
    let mut d = b - a;
    while d <= -std::f64::consts::PI {
        d += 2.0 * std::f64::consts::PI;
    }
    while d > std::f64::consts::PI {
        d -= 2.0 * std::f64::consts::PI;
    }
    d
}

fn check_pairwise_crossings(
    vertices: &[Point],
    half_edges: &[HalfEdge],
    faces: &[Face],
    n_faces: usize,
    polygons: &[InputFace],
) -> Result<()> {
    let ring_points = |f: FaceId| -> Vec<Point> {
        faces[f]
            .boundary
            .iter()
            .map(|&e| vertices[half_edges[e].origin])
            .collect()
    };
    for f in 0..n_faces {
        for g in (f + 1)..n_faces {
            let rf: Vec<Point> = ring_points(f);
            let rg: Vec<Point> = ring_points(g);
            for i in 0..rf.len() {
                let (a1, b1) = (rf[i], rf[(i + 1) % rf.len()]);
                for j in 0..rg.len() {
                    let (a2, b2) = (rg[j], rg[(j + 1) % rg.len()]);
                    if segments_properly_intersect(a1, b1, a2, b2, GEOM_EPS) {
                        // shared borders are identical segments, not crossings
                        let same = (a1.dist(&b2) <= GEOM_EPS && b1.dist(&a2) <= GEOM_EPS)
                            || (a1.dist(&a2) <= GEOM_EPS && b1.dist(&b2) <= GEOM_EPS);
                        if !same {
                            return Err(SubdivisionError::Topology(format!(
                                "faces '{}' and '{}' have crossing borders",
                                polygons[f].name, polygons[g].name
                            )));
                        }
                    }
                }
            }
            // containment without crossing: one face inside the other
            let pf = SimplePolygon::new_unchecked(rf.clone());
            let pg = SimplePolygon::new_unchecked(rg.clone());
            if let Some(c) = interior_probe(&rg) {
                if pf.contains_point(c, 0.0) && !on_ring_boundary(&rf, c) {
                    return Err(SubdivisionError::Topology(format!(
                        "face '{}' lies inside face '{}' (shared interior)",
                        polygons[g].name, polygons[f].name
                    )));
                }
            }
            if let Some(c) = interior_probe(&rf) {
                if pg.contains_point(c, 0.0) && !on_ring_boundary(&rg, c) {
                    return Err(SubdivisionError::Topology(format!(
                        "face '{}' lies inside face '{}' (shared interior)",
                        polygons[f].name, polygons[g].name
                    )));
                }
            }
        }
    }
    Ok(())
}

fn interior_probe(ring: &[Point]) -> Option<Point> {
    // centroid works for convex rings; fall back to edge-midpoint offsets
    let n = ring.len() as f64;
    let c = Point::new(
        ring.iter().map(|p| p.x).sum::<f64>() / n,
        ring.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let poly = SimplePolygon::new_unchecked(ring.to_vec());
    if poly.contains_point(c, 0.0) && !on_ring_boundary(ring, c) {
        return Some(c);
    }
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        let mx = 0.5 * (a.x + b.x);
        let my = 0.5 * (a.y + b.y);
        // small step toward the interior (left of the CCW edge)
        let len = a.dist(&b);
        if len == 0.0 {
            continue;
        }
        let d = 1e-4 * len;
        let p = Point::new(mx - d * (b.y - a.y) / len, my + d * (b.x - a.x) / len);
        if poly.contains_point(p, 0.0) && !on_ring_boundary(ring, p) {
            return Some(p);
        }
    }
    None
}

fn on_ring_boundary(ring: &[Point], p: Point) -> bool {
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        let len = a.dist(&b);
        if len == 0.0 {
            continue;
        }
        if (cross(a, b, p) / len).abs() <= GEOM_EPS
            && (p.x - a.x) * (p.x - b.x) + (p.y - a.y) * (p.y - b.y) <= GEOM_EPS
        {
            return true;
        }
    }
    false
}

/// A named invariant violation; validation returns these as data.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

/// Checks the structural invariants of a subdivision and returns every
/// violation found.
pub fn validate(s: &Subdivision) -> Vec<Violation> {
    let mut out = Vec::new();
    for (e, he) in s.half_edges.iter().enumerate() {
        if he.twin >= s.half_edges.len() || s.half_edges[he.twin].twin != e {
            out.push(Violation {
                entity: format!("half-edge {e}"),
                rule: "twin(twin(e)) = e".into(),
            });
            continue;
        }
        if s.half_edges[he.twin].face == he.face {
            out.push(Violation {
                entity: format!("half-edge {e}"),
                rule: "face(e) != face(twin(e))".into(),
            });
        }
        if s.half_edges[he.twin].origin != he.target || s.half_edges[he.twin].target != he.origin {
            out.push(Violation {
                entity: format!("half-edge {e}"),
                rule: "twin reverses orientation".into(),
            });
        }
    }
    for f in 0..s.faces.len() {
        if f == s.outer_face {
            continue;
        }
        let face = &s.faces[f];
        let pts: Vec<Point> = face
            .boundary
            .iter()
            .map(|&e| s.vertices[s.half_edges[e].origin])
            .collect();
        if pts.len() < 3 {
            out.push(Violation {
                entity: format!("face '{}'", face.name),
                rule: "boundary has >= 3 vertices".into(),
            });
            continue;
        }
        // boundary must be a connected cycle
        for i in 0..face.boundary.len() {
            let e = face.boundary[i];
            let n = face.boundary[(i + 1) % face.boundary.len()];
            if s.half_edges[e].target != s.half_edges[n].origin {
                out.push(Violation {
                    entity: format!("face '{}'", face.name),
                    rule: "boundary is a single connected cycle".into(),
                });
                break;
            }
            if s.half_edges[e].face != f {
                out.push(Violation {
                    entity: format!("face '{}'", face.name),
                    rule: "boundary edges reference the face".into(),
                });
                break;
            }
        }
        let a = signed_area(&pts);
        if a <= 0.0 {
            out.push(Violation {
                entity: format!("face '{}'", face.name),
                rule: "counterclockwise orientation with positive area".into(),
            });
        }
        if (a - face.area).abs() > 1e-9 * a.abs().max(1.0) {
            out.push(Violation {
                entity: format!("face '{}'", face.name),
                rule: "stored area equals shoelace area".into(),
            });
        }
        if !SimplePolygon::new_unchecked(pts).is_simple(GEOM_EPS) {
            out.push(Violation {
                entity: format!("face '{}'", face.name),
                rule: "boundary is simple".into(),
            });
        }
    }
    // cross-face edge crossings, brute force over twin representatives
    let reps: Vec<EdgeId> = s.undirected_edges().collect();
    for (i, &e1) in reps.iter().enumerate() {
        let (a1, b1) = s.edge_points(e1);
        for &e2 in reps.iter().skip(i + 1) {
            let (a2, b2) = s.edge_points(e2);
            if segments_properly_intersect(a1, b1, a2, b2, GEOM_EPS) {
                out.push(Violation {
                    entity: format!("edges {e1} and {e2}"),
                    rule: "no two edges cross".into(),
                });
            }
        }
    }
    out
}

/// Per-face target and desired change, aligned with face ids. None for the
/// sea and outer faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTargets {
    pub target: Vec<Option<f64>>,
    pub delta: Vec<f64>,
}

/// Rescales raw weights so targets sum to the total geometric area of the
/// constrained faces, then takes delta_i = t_i - a_i.
pub fn normalize_weights(s: &Subdivision, raw_weights: &[f64]) -> Result<FaceTargets> {
    let constrained: Vec<FaceId> = s.constrained_faces().collect();
    if raw_weights.len() != constrained.len() {
        return Err(SubdivisionError::Domain(format!(
            "expected {} weights for the constrained faces, got {}",
            constrained.len(),
            raw_weights.len()
        )));
    }
    for (&f, &w) in constrained.iter().zip(raw_weights) {
        if !(w.is_finite() && w > 0.0) {
            return Err(SubdivisionError::Domain(format!(
                "face '{}' has non-positive weight {w}",
                s.faces[f].name
            )));
        }
    }
    let total_area: f64 = constrained.iter().map(|&f| s.faces[f].area).sum();
    let total_weight: f64 = raw_weights.iter().sum();
    let mut target = vec![None; s.faces.len()];
    let mut delta = vec![0.0; s.faces.len()];
    for (&f, &w) in constrained.iter().zip(raw_weights) {
        let t = w / total_weight * total_area;
        target[f] = Some(t);
        delta[f] = t - s.faces[f].area;
    }
    Ok(FaceTargets { target, delta })
}

/// One node per face (sea and outer included); directed adjacency entries
/// carry the shared boundary half-edges seen from the losing side.
#[derive(Debug, Clone)]
pub struct DualGraph {
    pub n_nodes: usize,
    /// (u, v) -> half-edges on the border whose `face` is u (so bending them
    /// moves area out of u into v).
    pub adjacency: BTreeMap<(FaceId, FaceId), Vec<EdgeId>>,
}

pub fn dual_graph(s: &Subdivision) -> DualGraph {
    let mut adjacency: BTreeMap<(FaceId, FaceId), Vec<EdgeId>> = BTreeMap::new();
    for (e, he) in s.half_edges.iter().enumerate() {
        let u = he.face;
        let v = s.half_edges[he.twin].face;
        adjacency.entry((u, v)).or_default().push(e);
    }
    DualGraph {
        n_nodes: s.faces.len(),
        adjacency,
    }
}

/// Merges collinear degree-2 vertices into single longer edges, yielding a
/// geometrically identical subdivision with fewer, longer edges (and thus
/// larger bend capacities).
pub fn merge_degree2(s: &Subdivision, collinear_eps: f64) -> Result<Subdivision> {
    let mut removable = vec![false; s.vertices.len()];
    for v in 0..s.vertices.len() {
        if s.vertex_degree(v) != 2 {
            continue;
        }
        // the two incident undirected edges; removable if collinear
        let inc: Vec<EdgeId> = (0..s.half_edges.len())
            .filter(|&e| s.half_edges[e].origin == v)
            .collect();
        if inc.len() != 2 {
            continue;
        }
        let p = s.vertices[v];
        let a = s.vertices[s.half_edges[inc[0]].target];
        let b = s.vertices[s.half_edges[inc[1]].target];
        let len = a.dist(&b);
        if len > 0.0 && (cross(a, b, p) / len).abs() <= collinear_eps {
            removable[v] = true;
        }
    }
    let mut inputs = Vec::new();
    for f in 0..s.faces.len() {
        if f == s.outer_face {
            continue;
        }
        let ring: Vec<Point> = s.faces[f]
            .boundary
            .iter()
            .map(|&e| s.half_edges[e].origin)
            .filter(|&v| !removable[v])
            .map(|v| s.vertices[v])
            .collect();
        inputs.push(InputFace {
            name: s.faces[f].name.clone(),
            ring,
            weight: s.faces[f].weight,
        });
    }
    build_from_polygons(&inputs, 0.0)
}
