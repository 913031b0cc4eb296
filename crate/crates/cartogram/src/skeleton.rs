//! Straight skeleton per face and the derived safe bending limits.
//!
//! The skeleton is computed by simulating the uniformly shrinking wavefront:
//! every polygon edge moves inward at unit speed, vertices travel along
//! bisectors, and the wavefront changes combinatorially at edge events
//! (a wavefront edge collapses) and split events (a reflex vertex hits an
//! opposite edge). Candidate events are recomputed from scratch after every
//! step, which keeps the code simple and is fast enough for the few dozen
//! edges a map face has.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{
    arc_in_polygon_eps, arcs_intersect_eps, segment_area, ChordArc, Point, SimplePolygon, GEOM_EPS,
};
use crate::subdivision::{DualGraph, EdgeId, FaceId, Subdivision};

#[derive(Debug, Error)]
pub enum SkeletonError {
    #[error("degenerate polygon: {0}")]
    Degenerate(String),
    #[error("internal skeleton error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, SkeletonError>;

/// The straight-skeleton partition of one face: a region polygon per
/// boundary edge, indexed like the polygon edges, plus the skeleton arcs
/// (for rendering).
#[derive(Debug, Clone)]
pub struct SkeletonRegionSet {
    pub regions: Vec<SimplePolygon>,
    pub arcs: Vec<(Point, Point)>,
}

#[derive(Debug, Clone, Copy)]
struct WfVertex {
    /// Position at creation time `t0`; the skeleton arc source.
    origin: Point,
    t0: f64,
    vel: (f64, f64),
    /// Original edge indices of the wavefront edges meeting at this vertex.
    left_edge: usize,
    right_edge: usize,
    reflex: bool,
}

impl WfVertex {
    fn pos_at(&self, t: f64) -> Point {
        Point::new(
            self.origin.x + (t - self.t0) * self.vel.0,
            self.origin.y + (t - self.t0) * self.vel.1,
        )
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    /// Wavefront edge between LAV positions i and i+1 collapses.
    Edge { lav: usize, i: usize, t: f64, p: Point },
    /// Reflex vertex at LAV position iv splits the wavefront edge between
    /// positions ia and ia+1.
    Split { lav: usize, iv: usize, ia: usize, t: f64, p: Point },
}

impl Event {
    fn time(&self) -> f64 {
        match self {
            Event::Edge { t, .. } | Event::Split { t, .. } => *t,
        }
    }
}

struct EdgeLine {
    q: Point,
    dir: (f64, f64),
    /// Inward (left) unit normal.
    normal: (f64, f64),
}

fn edge_lines(poly: &SimplePolygon) -> Result<Vec<EdgeLine>> {
    let mut out = Vec::with_capacity(poly.len());
    for i in 0..poly.len() {
        let (a, b) = poly.edge(i);
        let len = a.dist(&b);
        if len <= GEOM_EPS {
            return Err(SkeletonError::Degenerate(format!(
                "near-zero edge {i} (length {len})"
            )));
        }
        let dir = ((b.x - a.x) / len, (b.y - a.y) / len);
        out.push(EdgeLine {
            q: a,
            dir,
            normal: (-dir.1, dir.0),
        });
    }
    Ok(out)
}

/// Vertex velocity from the two incident moving edge lines: solve
/// dot(v, n_left) = 1, dot(v, n_right) = 1.
fn vertex_velocity(n_a: (f64, f64), n_b: (f64, f64)) -> Option<(f64, f64)> {
    let det = n_a.0 * n_b.1 - n_a.1 * n_b.0;
    if det.abs() < 1e-12 {
        if n_a.0 * n_b.0 + n_a.1 * n_b.1 > 0.0 {
            // collinear continuation (180 degree vertex)
            return Some(n_a);
        }
        // edges facing each other: vertex has no finite velocity
        return None;
    }
    Some(((n_b.1 - n_a.1) / det, (n_a.0 - n_b.0) / det))
}

fn make_vertex(
    origin: Point,
    t0: f64,
    left_edge: usize,
    right_edge: usize,
    lines: &[EdgeLine],
) -> WfVertex {
    let n_a = lines[left_edge].normal;
    let n_b = lines[right_edge].normal;
    let vel = vertex_velocity(n_a, n_b).unwrap_or((0.0, 0.0));
    let d_a = lines[left_edge].dir;
    let d_b = lines[right_edge].dir;
    let reflex = d_a.0 * d_b.1 - d_a.1 * d_b.0 < -1e-12;
    WfVertex {
        origin,
        t0,
        vel,
        left_edge,
        right_edge,
        reflex,
    }
}

/// Computes the straight skeleton of a counterclockwise simple polygon and
/// returns one region per edge.
pub fn straight_skeleton(poly: &SimplePolygon) -> Result<SkeletonRegionSet> {
    let n = poly.len();
    let lines = edge_lines(poly)?;
    let scale = bbox_diag(poly.vertices());
    let eps_t = 1e-9 * scale.max(1.0);

    let mut lavs: Vec<Vec<WfVertex>> = vec![(0..n)
        .map(|i| {
            make_vertex(
                poly.vertices()[i],
                0.0,
                (i + n - 1) % n,
                i,
                &lines,
            )
        })
        .collect()];
    let mut arcs: Vec<(Point, Point)> = Vec::new();
    let mut t_now = 0.0;
    let max_steps = 4 * n + 16;

    for _step in 0..max_steps {
        lavs.retain(|l| !l.is_empty());
        if lavs.is_empty() {
            break;
        }
        let ev = next_event(&lavs, &lines, t_now, eps_t);
        let ev = match ev {
            Some(e) => e,
            None => {
                // two-vertex LAVs between anti-parallel wavefronts generate
                // no events; their vertices are the endpoints of a ridge
                let mut closed = false;
                for lav in lavs.iter_mut() {
                    if lav.len() == 2 {
                        let pa = lav[0].pos_at(t_now);
                        let pb = lav[1].pos_at(t_now);
                        push_arc(&mut arcs, lav[0].origin, pa, eps_t);
                        push_arc(&mut arcs, lav[1].origin, pb, eps_t);
                        push_arc(&mut arcs, pa, pb, eps_t);
                        lav.clear();
                        closed = true;
                    }
                }
                if closed {
                    continue;
                }
                return Err(SkeletonError::Degenerate(
                    "wavefront stalled with no remaining events".into(),
                ));
            }
        };
        t_now = ev.time();
        match ev {
            Event::Edge { lav, i, t, p } => {
                let m = lavs[lav].len();
                let va = lavs[lav][i];
                let vb = lavs[lav][(i + 1) % m];
                push_arc(&mut arcs, va.origin, p, eps_t);
                push_arc(&mut arcs, vb.origin, p, eps_t);
                if m <= 2 {
                    lavs[lav].clear();
                    continue;
                }
                let vn = make_vertex(p, t, va.left_edge, vb.right_edge, &lines);
                let j = (i + 1) % m;
                // replace va and vb with vn
                let list = &mut lavs[lav];
                if j > i {
                    list.remove(j);
                    list.remove(i);
                    list.insert(i, vn);
                } else {
                    list.remove(i);
                    list.remove(j);
                    list.insert(j, vn);
                }
            }
            Event::Split { lav, iv, ia, t, p } => {
                let list = lavs[lav].clone();
                let m = list.len();
                let v = list[iv];
                let k = list[ia].right_edge;
                push_arc(&mut arcs, v.origin, p, eps_t);
                let v1 = make_vertex(p, t, v.left_edge, k, &lines);
                let v2 = make_vertex(p, t, k, v.right_edge, &lines);
                let ib = (ia + 1) % m;
                // LAV 1: v1, then w_b .. prev(v); LAV 2: v2, then next(v) .. w_a
                let mut lav1 = vec![v1];
                let mut idx = ib;
                while idx != iv {
                    lav1.push(list[idx]);
                    idx = (idx + 1) % m;
                }
                let mut lav2 = vec![v2];
                let mut idx = (iv + 1) % m;
                loop {
                    lav2.push(list[idx]);
                    if idx == ia {
                        break;
                    }
                    idx = (idx + 1) % m;
                }
                lavs[lav] = lav1;
                lavs.push(lav2);
                // a two-vertex LAV still collapses via its edge events
            }
        }
    }
    lavs.retain(|l| !l.is_empty());
    if !lavs.is_empty() {
        return Err(SkeletonError::Degenerate(
            "wavefront did not collapse within the step budget".into(),
        ));
    }

    let regions = extract_regions(poly, &arcs, scale)?;
    Ok(SkeletonRegionSet { regions, arcs })
}

fn bbox_diag(pts: &[Point]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt()
}

fn push_arc(arcs: &mut Vec<(Point, Point)>, a: Point, b: Point, eps: f64) {
    if a.dist(&b) > eps {
        arcs.push((a, b));
    }
}

/// Scans every LAV for the earliest edge or split event. Ties break toward
/// edge events and lower indices so runs are deterministic.
fn next_event(
    lavs: &[Vec<WfVertex>],
    lines: &[EdgeLine],
    t_now: f64,
    eps_t: f64,
) -> Option<Event> {
    let mut best: Option<Event> = None;
    let mut consider = |ev: Event| {
        let better = match &best {
            None => true,
            Some(b) => ev.time() < b.time() - 1e-15,
        };
        if better {
            best = Some(ev);
        }
    };
    for (li, lav) in lavs.iter().enumerate() {
        let m = lav.len();
        for i in 0..m {
            let va = &lav[i];
            let vb = &lav[(i + 1) % m];
            let k = va.right_edge;
            if let Some((t, p)) = edge_collapse(va, vb, &lines[k], t_now, eps_t) {
                consider(Event::Edge { lav: li, i, t, p });
            }
        }
        for iv in 0..m {
            let v = &lav[iv];
            if !v.reflex {
                continue;
            }
            for ia in 0..m {
                let ib = (ia + 1) % m;
                if ia == iv || ib == iv {
                    continue;
                }
                let k = lav[ia].right_edge;
                if k == v.left_edge || k == v.right_edge {
                    continue;
                }
                if let Some((t, p)) =
                    split_hit(v, &lav[ia], &lav[ib], &lines[k], t_now, eps_t)
                {
                    consider(Event::Split { lav: li, iv, ia, t, p });
                }
            }
        }
    }
    best
}

/// Collapse time of the wavefront edge between va and vb: both endpoints
/// ride the same moving offset line, so they meet when their along-edge
/// separation reaches zero.
fn edge_collapse(
    va: &WfVertex,
    vb: &WfVertex,
    line: &EdgeLine,
    t_now: f64,
    eps_t: f64,
) -> Option<(f64, Point)> {
    let d = line.dir;
    let sep = |t: f64| {
        let pa = va.pos_at(t);
        let pb = vb.pos_at(t);
        (pb.x - pa.x) * d.0 + (pb.y - pa.y) * d.1
    };
    let s0 = sep(t_now);
    let rate = (vb.vel.0 - va.vel.0) * d.0 + (vb.vel.1 - va.vel.1) * d.1;
    if rate >= -1e-12 {
        return None; // not shrinking
    }
    let t = t_now - s0 / rate;
    if t < t_now - eps_t {
        return None;
    }
    let t = t.max(t_now);
    let pa = va.pos_at(t);
    let pb = vb.pos_at(t);
    Some((t, Point::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y))))
}

/// Time at which reflex vertex v reaches the moving offset line of edge
/// `line`, provided the hit point lies within the wavefront span wa..wb.
fn split_hit(
    v: &WfVertex,
    wa: &WfVertex,
    wb: &WfVertex,
    line: &EdgeLine,
    t_now: f64,
    eps_t: f64,
) -> Option<(f64, Point)> {
    let n = line.normal;
    // offset distance of x_v(t) from the base line must equal t
    let base = (v.origin.x - v.t0 * v.vel.0 - line.q.x) * n.0
        + (v.origin.y - v.t0 * v.vel.1 - line.q.y) * n.1;
    let denom = 1.0 - (v.vel.0 * n.0 + v.vel.1 * n.1);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = base / denom;
    if t < t_now - eps_t || !t.is_finite() {
        return None;
    }
    let t = t.max(t_now);
    let p = v.pos_at(t);
    let d = line.dir;
    let along = |q: Point| q.x * d.0 + q.y * d.1;
    let sa = along(wa.pos_at(t));
    let sb = along(wb.pos_at(t));
    let sp = along(p);
    if sp < sa - eps_t || sp > sb + eps_t {
        return None;
    }
    Some((t, p))
}

/// Builds the per-edge regions from the skeleton arcs by tracing faces of
/// the planar graph formed by the polygon edges plus the arcs.
fn extract_regions(
    poly: &SimplePolygon,
    arcs: &[(Point, Point)],
    scale: f64,
) -> Result<Vec<SimplePolygon>> {
    let merge_eps = 1e-7 * scale.max(1.0);
    let mut nodes: Vec<Point> = poly.vertices().to_vec();
    let node_of = |p: Point, nodes: &mut Vec<Point>| -> usize {
        for (i, q) in nodes.iter().enumerate() {
            if q.dist(&p) <= merge_eps {
                return i;
            }
        }
        nodes.push(p);
        nodes.len() - 1
    };
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..poly.len() {
        edges.push((i, (i + 1) % poly.len()));
    }
    for &(a, b) in arcs {
        let ia = node_of(a, &mut nodes);
        let ib = node_of(b, &mut nodes);
        if ia != ib && !edges.contains(&(ia, ib)) && !edges.contains(&(ib, ia)) {
            edges.push((ia, ib));
        }
    }
    // split edges at nodes lying on their interior (collinear bisector
    // trajectories produce such T-junctions)
    let mut split_edges: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in &edges {
        let pa = nodes[a];
        let pb = nodes[b];
        let dx = pb.x - pa.x;
        let dy = pb.y - pa.y;
        let len2 = dx * dx + dy * dy;
        let mut on: Vec<(f64, usize)> = vec![(0.0, a), (1.0, b)];
        for (ni, &np) in nodes.iter().enumerate() {
            if ni == a || ni == b {
                continue;
            }
            let t = ((np.x - pa.x) * dx + (np.y - pa.y) * dy) / len2;
            if t <= 0.0 || t >= 1.0 {
                continue;
            }
            let foot = Point::new(pa.x + t * dx, pa.y + t * dy);
            if foot.dist(&np) <= merge_eps {
                on.push((t, ni));
            }
        }
        on.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for w in on.windows(2) {
            let (u, v) = (w[0].1, w[1].1);
            if u != v
                && !split_edges.contains(&(u, v))
                && !split_edges.contains(&(v, u))
            {
                split_edges.push((u, v));
            }
        }
    }
    let edges = split_edges;
    // outgoing directed edges per node, sorted by angle
    let mut out: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
    for &(a, b) in &edges {
        let ang_ab = (nodes[b].y - nodes[a].y).atan2(nodes[b].x - nodes[a].x);
        let ang_ba = (nodes[a].y - nodes[b].y).atan2(nodes[a].x - nodes[b].x);
        out.entry(a).or_default().push((ang_ab, b));
        out.entry(b).or_default().push((ang_ba, a));
    }
    for v in out.values_mut() {
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    }
    // face on the left of a directed edge: at the head, turn to the next
    // outgoing edge clockwise from the reversed direction
    let next_edge = |u: usize, v: usize| -> Result<(usize, usize)> {
        let ang_back = (nodes[u].y - nodes[v].y).atan2(nodes[u].x - nodes[v].x);
        let cands = out
            .get(&v)
            .ok_or_else(|| SkeletonError::Internal("isolated node in skeleton graph".into()))?;
        // largest angle strictly below ang_back, wrapping around
        let mut pick: Option<(f64, usize)> = None;
        for &(a, w) in cands {
            if w == u && (a - ang_back).abs() < 1e-12 && cands.len() > 1 {
                continue;
            }
            let rel = wrap_angle(ang_back - a);
            let better = match pick {
                None => true,
                Some((brel, _)) => rel < brel,
            };
            if better && rel > 1e-12 {
                pick = Some((rel, w));
            }
        }
        let (_, w) = pick.unwrap_or((
            0.0,
            cands
                .first()
                .map(|&(_, w)| w)
                .ok_or_else(|| SkeletonError::Internal("empty adjacency".into()))?,
        ));
        Ok((v, w))
    };
    let mut regions = Vec::with_capacity(poly.len());
    for i in 0..poly.len() {
        let start = (i, (i + 1) % poly.len());
        let mut cycle = vec![start.0];
        let mut cur = start;
        for _guard in 0..(nodes.len() + edges.len()) * 2 {
            cur = next_edge(cur.0, cur.1)?;
            if cur.0 == start.0 && cur.1 == start.1 {
                break;
            }
            cycle.push(cur.0);
        }
        if cycle.len() < 3 {
            return Err(SkeletonError::Internal(format!(
                "degenerate region for edge {i}"
            )));
        }
        let pts: Vec<Point> = cycle.iter().map(|&v| nodes[v]).collect();
        let area = crate::geometry::signed_area(&pts);
        if area <= 0.0 {
            return Err(SkeletonError::Internal(format!(
                "non-positive region for edge {i} (area {area})"
            )));
        }
        regions.push(SimplePolygon::new_unchecked(pts));
    }
    Ok(regions)
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = a % two_pi;
    if a <= 0.0 {
        a += two_pi;
    }
    a
}

/// Largest sagitta (up to `cap`) whose arc over `edge` stays inside the
/// skeleton region, by bisection. Returns 0 when no positive sagitta fits.
pub fn max_sagitta(a: Point, b: Point, region: &SimplePolygon, cap: f64) -> f64 {
    let fits = |h: f64| -> bool {
        if h == 0.0 {
            return true;
        }
        arc_in_polygon_eps(&ChordArc::new(a, b, h), region, GEOM_EPS)
    };
    if cap <= 0.0 {
        return 0.0;
    }
    if fits(cap) {
        return cap;
    }
    let mut lo = 0.0;
    let mut hi = cap;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Safe transferable area across one border half-edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeCapacityEntry {
    pub half_edge: EdgeId,
    pub max_sagitta: f64,
    pub capacity: f64,
}

/// Directed capacity u -> v: the total area that can leave u through the
/// shared border by bending it into u.
#[derive(Debug, Clone)]
pub struct EdgeCapacity {
    pub from: FaceId,
    pub to: FaceId,
    pub entries: Vec<EdgeCapacityEntry>,
    pub total: f64,
}

pub type CapacityMap = BTreeMap<(FaceId, FaceId), EdgeCapacity>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Weak,
    Strong,
}

/// Per-face skeletons for every bounded face.
pub fn face_skeletons(s: &Subdivision) -> Result<Vec<Option<SkeletonRegionSet>>> {
    let mut out = Vec::with_capacity(s.faces.len());
    for f in 0..s.faces.len() {
        if f == s.outer_face {
            out.push(None);
            continue;
        }
        out.push(Some(straight_skeleton(&s.face_polygon(f)).map_err(
            |e| SkeletonError::Degenerate(format!("face '{}': {e}", s.faces[f].name)),
        )?));
    }
    Ok(out)
}

/// Directed capacities over the dual graph. `deltas` drives the strong-mode
/// zeroing rule; pass all zeros in weak mode (unused there).
pub fn edge_capacities(
    s: &Subdivision,
    g: &DualGraph,
    skeletons: &[Option<SkeletonRegionSet>],
    mode: Mode,
    deltas: &[f64],
    max_sagitta_ratio: f64,
) -> CapacityMap {
    let mut caps = CapacityMap::new();
    for (&(u, v), half_edges) in &g.adjacency {
        if u == s.outer_face {
            // capacity out of the unbounded face: only meaningful when it is
            // the sea; land growing outward is handled by the sea rule
            if s.is_sea(u) {
                let cap = sea_outward_capacity(s, u, v, half_edges, max_sagitta_ratio);
                caps.insert((u, v), cap);
            }
            continue;
        }
        let skel = match &skeletons[u] {
            Some(k) => k,
            None => continue,
        };
        let boundary = &s.faces[u].boundary;
        let mut entries = Vec::new();
        let mut total = 0.0;
        for &e in half_edges {
            let idx = boundary.iter().position(|&b| b == e).expect("edge on boundary");
            let (a, b) = s.edge_points(e);
            let cap_h = max_sagitta_ratio * a.dist(&b) / 2.0;
            let h = max_sagitta(a, b, &skel.regions[idx], cap_h);
            let c = if h > 0.0 {
                segment_area(a.dist(&b), h).unwrap_or(0.0)
            } else {
                0.0
            };
            entries.push(EdgeCapacityEntry {
                half_edge: e,
                max_sagitta: h,
                capacity: c,
            });
            total += c;
        }
        caps.insert(
            (u, v),
            EdgeCapacity {
                from: u,
                to: v,
                entries,
                total,
            },
        );
    }
    if mode == Mode::Strong {
        for cap in caps.values_mut() {
            let (u, v) = (cap.from, cap.to);
            if s.is_sea(u) || s.is_sea(v) || u == s.outer_face || v == s.outer_face {
                continue;
            }
            // only shedder -> grower survives: strong routing is bipartite,
            // growers never pass area through
            if !(deltas[u] < 0.0 && deltas[v] > 0.0) {
                cap.total = 0.0;
                for e in &mut cap.entries {
                    e.capacity = 0.0;
                    e.max_sagitta = 0.0;
                }
            }
        }
    }
    caps
}

/// Capacity for area flowing out of the unbounded sea into land face v: the
/// border arcs bend outward into open space. There is no skeleton out
/// there, so each arc is bounded by (a) half the clearance to the nearest
/// foreign edge, which keeps simultaneously bent outward arcs of different
/// faces apart, and (b) a bisection against the edges that share one of its
/// endpoints.
fn sea_outward_capacity(
    s: &Subdivision,
    u: FaceId,
    v: FaceId,
    half_edges: &[EdgeId],
    max_sagitta_ratio: f64,
) -> EdgeCapacity {
    let mut entries = Vec::new();
    let mut total = 0.0;
    for &e in half_edges {
        let (a, b) = s.edge_points(e);
        let len = a.dist(&b);
        let mut cap_h = max_sagitta_ratio * len / 2.0;
        // clearance to non-incident edges: an arc of sagitta h stays within
        // distance h of its chord, so h <= clearance/2 is safe
        for other in s.undirected_edges() {
            if other == e || other == s.half_edges[e].twin {
                continue;
            }
            let he = &s.half_edges[other];
            let ee = &s.half_edges[e];
            if he.origin == ee.origin
                || he.origin == ee.target
                || he.target == ee.origin
                || he.target == ee.target
            {
                continue;
            }
            let (c, d) = s.edge_points(other);
            let clearance = segment_segment_dist(a, b, c, d);
            cap_h = cap_h.min(clearance / 2.0);
        }
        // incident edges have zero clearance; test actual arc crossings
        let incident: Vec<ChordArc> = s
            .undirected_edges()
            .filter(|&other| other != e && other != s.half_edges[e].twin)
            .filter(|&other| {
                let he = &s.half_edges[other];
                let ee = &s.half_edges[e];
                he.origin == ee.origin
                    || he.origin == ee.target
                    || he.target == ee.origin
                    || he.target == ee.target
            })
            .map(|other| {
                let (c, d) = s.edge_points(other);
                ChordArc::straight(c, d)
            })
            .collect();
        let fits = |h: f64| -> bool {
            if h <= 0.0 {
                return true;
            }
            let arc = ChordArc::new(a, b, h);
            incident.iter().all(|seg| !arcs_intersect_eps(&arc, seg, GEOM_EPS))
        };
        let h = if cap_h <= 0.0 {
            0.0
        } else if fits(cap_h) {
            cap_h
        } else {
            let mut lo = 0.0;
            let mut hi = cap_h;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if fits(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let c = if h > 0.0 {
            segment_area(len, h).unwrap_or(0.0)
        } else {
            0.0
        };
        entries.push(EdgeCapacityEntry {
            half_edge: e,
            max_sagitta: h,
            capacity: c,
        });
        total += c;
    }
    EdgeCapacity {
        from: u,
        to: v,
        entries,
        total,
    }
}

fn segment_segment_dist(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if crate::geometry::segments_properly_intersect(a, b, c, d, 0.0) {
        return 0.0;
    }
    let pt_seg = |p: Point, u: Point, v: Point| -> f64 {
        let dx = v.x - u.x;
        let dy = v.y - u.y;
        let l2 = dx * dx + dy * dy;
        if l2 == 0.0 {
            return p.dist(&u);
        }
        let t = (((p.x - u.x) * dx + (p.y - u.y) * dy) / l2).clamp(0.0, 1.0);
        p.dist(&Point::new(u.x + t * dx, u.y + t * dy))
    };
    pt_seg(a, c, d)
        .min(pt_seg(b, c, d))
        .min(pt_seg(c, a, b))
        .min(pt_seg(d, a, b))
}

/// Sagitta cap for a face-side half-edge given the config ratio; used by
/// consumers that need to re-derive the bound.
pub fn sagitta_cap(len: f64, max_sagitta_ratio: f64) -> f64 {
    max_sagitta_ratio * len / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(pts: &[(f64, f64)]) -> SimplePolygon {
        SimplePolygon::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn square_skeleton_is_diagonals() {
        let sq = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        let sk = straight_skeleton(&sq).unwrap();
        assert_eq!(sk.regions.len(), 4);
        for r in &sk.regions {
            assert!((r.area() - 1.0).abs() < 1e-9, "region area {}", r.area());
            assert_eq!(r.len(), 3);
        }
        // all regions meet at the center
        for r in &sk.regions {
            assert!(r
                .vertices()
                .iter()
                .any(|p| p.dist(&Point::new(1.0, 1.0)) < 1e-7));
        }
    }

    #[test]
    fn rectangle_skeleton_regions() {
        // 4x2 rectangle: two side triangles of area 1, two trapezoids of
        // area 3, ridge of length 2
        let r = poly(&[(0.0, 0.0), (4.0, 0.0), (4.0, 2.0), (0.0, 2.0)]);
        let sk = straight_skeleton(&r).unwrap();
        let mut areas: Vec<f64> = sk.regions.iter().map(|r| r.area()).collect();
        areas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [1.0, 1.0, 3.0, 3.0];
        for (a, e) in areas.iter().zip(expect) {
            assert!((a - e).abs() < 1e-9, "areas {areas:?}");
        }
        // ridge from (1,1) to (3,1)
        let ridge = sk.arcs.iter().find(|(a, b)| {
            (a.dist(&Point::new(1.0, 1.0)) < 1e-7 && b.dist(&Point::new(3.0, 1.0)) < 1e-7)
                || (b.dist(&Point::new(1.0, 1.0)) < 1e-7 && a.dist(&Point::new(3.0, 1.0)) < 1e-7)
        });
        assert!(ridge.is_some(), "arcs: {:?}", sk.arcs);
    }

    #[test]
    fn pentagon_matches_bisector_oracle() {
        // deterministic pseudo-random star-shaped pentagons
        let mut state = 0xdeadbeefdeadbeefu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _case in 0..20 {
            // polygon from sorted angles on a noisy circle (star-shaped,
            // not necessarily convex)
            let mut angs: Vec<f64> = (0..5).map(|_| next() * std::f64::consts::TAU).collect();
            angs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if angs.windows(2).any(|w| w[1] - w[0] < 0.3) {
                continue;
            }
            let pts: Vec<(f64, f64)> = angs
                .iter()
                .map(|&a| {
                    let r = 2.0 + next();
                    (r * a.cos(), r * a.sin())
                })
                .collect();
            let p = poly(&pts);
            let sk = straight_skeleton(&p).unwrap();
            let total: f64 = sk.regions.iter().map(|r| r.area()).sum();
            assert!(
                (total - p.area()).abs() <= 1e-8 * p.area(),
                "partition broken: {total} vs {}",
                p.area()
            );
            // bisector oracle: region boundaries at each polygon vertex
            // follow the interior angular bisector; check that each region's
            // edge leaving vertex i is along the bisector direction
            for i in 0..p.len() {
                let prev = p.vertices()[(i + p.len() - 1) % p.len()];
                let cur = p.vertices()[i];
                let nxt = p.vertices()[(i + 1) % p.len()];
                let din = norm(cur.x - prev.x, cur.y - prev.y);
                let dout = norm(nxt.x - cur.x, nxt.y - cur.y);
                // convex vertices bisect toward dout - din; reflex ones
                // (right turns in a CCW ring) toward the negation
                let turn = din.0 * dout.1 - din.1 * dout.0;
                let bis = if turn >= 0.0 {
                    norm(dout.0 - din.0, dout.1 - din.1)
                } else {
                    norm(din.0 - dout.0, din.1 - dout.1)
                };
                // find a skeleton arc incident to cur
                let arc = sk
                    .arcs
                    .iter()
                    .find(|(a, b)| a.dist(&cur) < 1e-7 || b.dist(&cur) < 1e-7)
                    .expect("vertex arc");
                let (a, b) = if arc.0.dist(&cur) < 1e-7 {
                    (arc.0, arc.1)
                } else {
                    (arc.1, arc.0)
                };
                let d = norm(b.x - a.x, b.y - a.y);
                let dot = d.0 * bis.0 + d.1 * bis.1;
                assert!(dot > 0.999, "arc not on bisector (dot {dot})");
            }
        }
    }

    fn norm(x: f64, y: f64) -> (f64, f64) {
        let l = (x * x + y * y).sqrt();
        (x / l, y / l)
    }

    #[test]
    fn l_shape_has_split_event() {
        let l = poly(&[
            (0.0, 0.0),
            (4.0, 0.0),
            (4.0, 1.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (0.0, 3.0),
        ]);
        let sk = straight_skeleton(&l).unwrap();
        assert_eq!(sk.regions.len(), 6);
        let total: f64 = sk.regions.iter().map(|r| r.area()).sum();
        assert!((total - l.area()).abs() <= 1e-8 * l.area(), "total {total}");
    }

    #[test]
    fn max_sagitta_square_region() {
        let sq = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        let sk = straight_skeleton(&sq).unwrap();
        let (a, b) = sq.edge(0);
        let h = max_sagitta(a, b, &sk.regions[0], 1.0);
        assert!(h > 0.0 && h < 1.0, "h = {h}");
        // the arc at h_max passes containment; slightly above it fails
        assert!(arc_in_polygon_eps(
            &ChordArc::new(a, b, h),
            &sk.regions[0],
            GEOM_EPS
        ));
        assert!(!arc_in_polygon_eps(
            &ChordArc::new(a, b, h + 1e-3),
            &sk.regions[0],
            GEOM_EPS
        ));
        // sampled containment oracle at h_max
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let arc = ChordArc::new(a, b, h);
            let c = arc.center();
            let r = arc.radius();
            let a0 = (arc.a.y - c.y).atan2(arc.a.x - c.x);
            let a1 = (arc.b.y - c.y).atan2(arc.b.x - c.x);
            let mut sweep = a1 - a0;
            if sweep <= 0.0 {
                sweep += std::f64::consts::TAU;
            }
            if sweep > std::f64::consts::PI {
                sweep -= std::f64::consts::TAU;
            }
            let ang = a0 + sweep * t;
            let p = Point::new(c.x + r * ang.cos(), c.y + r * ang.sin());
            assert!(sk.regions[0].contains_point(p, 1e-6), "point {p:?} escapes");
        }
    }

    #[test]
    fn max_sagitta_rectangle_long_edge() {
        // trapezoid region of depth 1 on the long edge of a 4x2 rectangle;
        // the arc grazes the ridge, so h_max <= 1 and the tangency circle
        // through the chord endpoints and the ridge line bounds it
        let r = poly(&[(0.0, 0.0), (4.0, 0.0), (4.0, 2.0), (0.0, 2.0)]);
        let sk = straight_skeleton(&r).unwrap();
        let (a, b) = r.edge(0);
        let h = max_sagitta(a, b, &sk.regions[0], 2.0);
        assert!(h <= 1.0 + 1e-9, "h = {h}");
        // analytic tangency check: the binding constraint is the trapezoid
        // leg y = x (the arc leaves (0,0) steeper than the leg for larger
        // h), so at h_max the supporting circle is tangent to that line
        let arc = ChordArc::new(a, b, h);
        let c = arc.center();
        let r = arc.radius();
        let leg_dist = (c.x - c.y).abs() / 2f64.sqrt();
        assert!((leg_dist - r).abs() < 1e-6, "h = {h}, gap {}", leg_dist - r);
    }

    #[test]
    fn max_sagitta_degenerate_sliver() {
        let sliver = SimplePolygon::new_unchecked(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 1e-12),
        ]);
        let h = max_sagitta(Point::new(0.0, 0.0), Point::new(2.0, 0.0), &sliver, 1.0);
        assert!(h < 1e-8, "h = {h}");
    }

    #[test]
    fn random_polygon_partition() {
        // random simple polygons with reflex vertices via radial jitter
        let mut state = 0x123456789abcdefu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut done = 0;
        while done < 30 {
            let n = 5 + (next() * 12.0) as usize;
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    let a = i as f64 / n as f64 * std::f64::consts::TAU;
                    let r = 1.0 + 2.0 * next();
                    (r * a.cos(), r * a.sin())
                })
                .collect();
            let p = match SimplePolygon::new(
                pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            ) {
                Ok(p) if p.is_simple(GEOM_EPS) => p,
                _ => continue,
            };
            match straight_skeleton(&p) {
                Ok(sk) => {
                    let total: f64 = sk.regions.iter().map(|r| r.area()).sum();
                    assert!(
                        (total - p.area()).abs() <= 1e-8 * p.area(),
                        "partition broken: {total} vs {}",
                        p.area()
                    );
                    done += 1;
                }
                Err(e) => panic!("skeleton failed: {e}"),
            }
        }
    }

    #[test]
    fn skeleton_is_deterministic() {
        let l = poly(&[
            (0.0, 0.0),
            (4.0, 0.0),
            (4.0, 1.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (0.0, 3.0),
        ]);
        let a = straight_skeleton(&l).unwrap();
        let b = straight_skeleton(&l).unwrap();
        assert_eq!(a.arcs.len(), b.arcs.len());
        for (x, y) in a.arcs.iter().zip(&b.arcs) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
    }
}
