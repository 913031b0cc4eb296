//! Circular-segment and arc geometry: the substrate every other module
//! builds on. Arcs are parameterized by signed sagitta rather than radius so
//! that the straight case (sagitta 0, radius infinity) is not a singularity.

use thiserror::Error;

/// Tolerance for touching-vs-crossing decisions, in map units.
pub const GEOM_EPS: f64 = 1e-9;

/// Absolute area tolerance for the sagitta bisection.
pub const AREA_TOL: f64 = 1e-12;

/// Hard cap on bisection iterations.
pub const MAX_BISECT_ITERS: usize = 200;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("requested segment area {requested} exceeds capacity {max_area} (sagitta cap {max_sagitta})")]
    Capacity {
        requested: f64,
        max_area: f64,
        max_sagitta: f64,
    },
}

pub type Result<T> = std::result::Result<T, GeomError>;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Cross product of (b-a) x (c-a); positive when c is left of a->b.
pub fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// A map edge together with the signed sagitta of its circular-arc
/// replacement. Positive sagitta bulges to the left of the directed chord
/// a -> b; zero means the edge stays straight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordArc {
    pub a: Point,
    pub b: Point,
    pub sagitta: f64,
}

impl ChordArc {
    pub fn new(a: Point, b: Point, sagitta: f64) -> Self {
        ChordArc { a, b, sagitta }
    }

    pub fn straight(a: Point, b: Point) -> Self {
        ChordArc { a, b, sagitta: 0.0 }
    }

    pub fn chord_length(&self) -> f64 {
        self.a.dist(&self.b)
    }

    pub fn is_straight(&self) -> bool {
        self.sagitta == 0.0
    }

    /// Unit normal pointing to the left of a -> b.
    fn left_normal(&self) -> (f64, f64) {
        let dx = self.b.x - self.a.x;
        let dy = self.b.y - self.a.y;
        let len = (dx * dx + dy * dy).sqrt();
        (-dy / len, dx / len)
    }

    /// Midpoint of the arc (chord midpoint displaced by the sagitta).
    pub fn apex(&self) -> Point {
        let (nx, ny) = self.left_normal();
        Point::new(
            0.5 * (self.a.x + self.b.x) + self.sagitta * nx,
            0.5 * (self.a.y + self.b.y) + self.sagitta * ny,
        )
    }

    pub fn radius(&self) -> f64 {
        arc_radius(self.chord_length(), self.sagitta.abs())
    }

    /// Center of the supporting circle. Undefined for straight arcs.
    pub fn center(&self) -> Point {
        let r = self.radius();
        let (nx, ny) = self.left_normal();
        // the center lies on the chord normal at distance r from the apex,
        // on the side opposite the bulge
        let off = self.sagitta - self.sagitta.signum() * r;
        Point::new(
            0.5 * (self.a.x + self.b.x) + off * nx,
            0.5 * (self.a.y + self.b.y) + off * ny,
        )
    }

    /// The signed area added to the face on the left of a -> b.
    pub fn signed_segment_area(&self) -> f64 {
        if self.sagitta == 0.0 {
            0.0
        } else {
            self.sagitta.signum() * segment_area(self.chord_length(), self.sagitta.abs()).unwrap()
        }
    }

    /// Whether a point on the supporting circle lies on the arc. The chord
    /// splits the circle into two arcs, each entirely on one side, so the
    /// side of the chord line decides.
    fn on_arc_side(&self, p: Point, eps: f64) -> bool {
        self.sagitta.signum() * cross(self.a, self.b, p) >= -eps * self.chord_length()
    }

    pub fn reversed(&self) -> ChordArc {
        ChordArc {
            a: self.b,
            b: self.a,
            sagitta: -self.sagitta,
        }
    }
}

/// Counterclockwise simple polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplePolygon {
    vertices: Vec<Point>,
}

impl SimplePolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(GeomError::Domain(format!(
                "polygon needs >= 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite("polygon vertex"));
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(GeomError::Domain(
                "polygon must be counterclockwise with positive area".into(),
            ));
        }
        Ok(SimplePolygon { vertices })
    }

    /// Skips the orientation/simplicity checks; for internal callers that
    /// construct rings by known-good means.
    pub fn new_unchecked(vertices: Vec<Point>) -> Self {
        SimplePolygon { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Even-odd point containment; points within eps of the boundary count
    /// as inside.
    pub fn contains_point(&self, p: Point, eps: f64) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = self.edge(i);
            if point_segment_dist(p, a, b) <= eps {
                return true;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let (a, b) = self.edge(i);
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x = a.x + t * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Brute-force self-intersection test over all non-adjacent edge pairs.
    pub fn is_simple(&self, eps: f64) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a1, b1) = self.edge(i);
            for j in (i + 1)..n {
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let (a2, b2) = self.edge(j);
                if segments_properly_intersect(a1, b1, a2, b2, eps) {
                    return false;
                }
            }
        }
        true
    }
}

/// Shoelace area, positive for counterclockwise rings.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Circular segment bounded by a chord of length L and its arc of sagitta h.
/// r = (L^2 + 4h^2) / (8h); the half central angle follows from
/// cos(theta) = 1 - h/r, valid for minor and major segments alike.
pub fn segment_area(chord_length: f64, sagitta: f64) -> Result<f64> {
    if !chord_length.is_finite() || !sagitta.is_finite() {
        return Err(GeomError::NonFinite("segment_area input"));
    }
    if chord_length <= 0.0 {
        return Err(GeomError::Domain(format!(
            "chord_length must be positive, got {chord_length}"
        )));
    }
    if sagitta < 0.0 {
        return Err(GeomError::Domain(format!(
            "sagitta must be non-negative, got {sagitta}"
        )));
    }
    if sagitta == 0.0 {
        return Ok(0.0);
    }
    let r = arc_radius(chord_length, sagitta);
    let cos_theta = (1.0 - sagitta / r).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    Ok(r * r * (theta - theta.sin() * cos_theta))
}

/// Radius of the circle through both chord endpoints and the apex at height
/// sagitta. Returns infinity for sagitta 0 (straight edge).
pub fn arc_radius(chord_length: f64, sagitta: f64) -> f64 {
    if sagitta == 0.0 {
        return f64::INFINITY;
    }
    (chord_length * chord_length / 4.0 + sagitta * sagitta) / (2.0 * sagitta)
}

/// Inverse of segment_area in the sagitta argument, by bisection over the
/// monotone map, capped at `max_sagitta`.
pub fn sagitta_for_area_capped(
    chord_length: f64,
    area: f64,
    tol: f64,
    max_sagitta: f64,
) -> Result<f64> {
    if !(chord_length.is_finite() && area.is_finite() && tol.is_finite()) {
        return Err(GeomError::NonFinite("sagitta_for_area input"));
    }
    if chord_length <= 0.0 || area < 0.0 || tol <= 0.0 {
        return Err(GeomError::Domain(format!(
            "invalid sagitta_for_area input: L={chord_length}, area={area}, tol={tol}"
        )));
    }
    if area == 0.0 {
        return Ok(0.0);
    }
    let max_area = segment_area(chord_length, max_sagitta)?;
    if area > max_area + tol {
        return Err(GeomError::Capacity {
            requested: area,
            max_area,
            max_sagitta,
        });
    }
    let mut lo = 0.0;
    let mut hi = max_sagitta;
    for _ in 0..MAX_BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let mid_area = segment_area(chord_length, mid)?;
        if (mid_area - area).abs() <= tol {
            return Ok(mid);
        }
        if mid_area < area {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverse of segment_area with the default half-circle cap.
pub fn sagitta_for_area(chord_length: f64, area: f64, tol: f64) -> Result<f64> {
    sagitta_for_area_capped(chord_length, area, tol, chord_length / 2.0)
}

/// Polygon area after bending: shoelace area of the vertex ring plus the
/// signed segment area of each bent edge. Bends are outward-positive: bend
/// h > 0 on edge i bulges away from the interior (to the right of the CCW
/// boundary direction, i.e. ChordArc sagitta -h along that edge) and adds
/// area; h < 0 bulges inward and removes area.
pub fn face_area_with_arcs(polygon: &SimplePolygon, bends: &[f64]) -> Result<f64> {
    if bends.len() != polygon.len() {
        return Err(GeomError::Domain(format!(
            "expected {} bends, got {}",
            polygon.len(),
            bends.len()
        )));
    }
    let mut area = polygon.area();
    for (i, &h) in bends.iter().enumerate() {
        if !h.is_finite() {
            return Err(GeomError::NonFinite("bend sagitta"));
        }
        if h != 0.0 {
            let (a, b) = polygon.edge(i);
            area += h.signum() * segment_area(a.dist(&b), h.abs())?;
        }
    }
    Ok(area)
}

fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(&Point::new(a.x + t * dx, a.y + t * dy))
}

/// Transversal crossing only: each segment has its endpoints strictly on
/// opposite sides of the other.
pub fn segments_cross_transversally(a1: Point, b1: Point, a2: Point, b2: Point, eps: f64) -> bool {
    let d1 = cross(a2, b2, a1);
    let d2 = cross(a2, b2, b1);
    let d3 = cross(a1, b1, a2);
    let d4 = cross(a1, b1, b2);
    let e1 = eps * a2.dist(&b2).max(1.0);
    let e2 = eps * a1.dist(&b1).max(1.0);
    ((d1 > e1 && d2 < -e1) || (d1 < -e1 && d2 > e1))
        && ((d3 > e2 && d4 < -e2) || (d3 < -e2 && d4 > e2))
}

/// Proper crossing of two closed segments: they share a point that is
/// interior to both (touches at endpoints do not count).
pub fn segments_properly_intersect(a1: Point, b1: Point, a2: Point, b2: Point, eps: f64) -> bool {
    let d1 = cross(a2, b2, a1);
    let d2 = cross(a2, b2, b1);
    let d3 = cross(a1, b1, a2);
    let d4 = cross(a1, b1, b2);
    let scale1 = a2.dist(&b2).max(1.0);
    let scale2 = a1.dist(&b1).max(1.0);
    let e1 = eps * scale1;
    let e2 = eps * scale2;
    if ((d1 > e1 && d2 < -e1) || (d1 < -e1 && d2 > e1))
        && ((d3 > e2 && d4 < -e2) || (d3 < -e2 && d4 > e2))
    {
        return true;
    }
    // collinear overlap with shared interior
    if d1.abs() <= e1 && d2.abs() <= e1 && d3.abs() <= e2 && d4.abs() <= e2 {
        let dx = b1.x - a1.x;
        let dy = b1.y - a1.y;
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return false;
        }
        let t2a = ((a2.x - a1.x) * dx + (a2.y - a1.y) * dy) / len2;
        let t2b = ((b2.x - a1.x) * dx + (b2.y - a1.y) * dy) / len2;
        let (lo, hi) = if t2a < t2b { (t2a, t2b) } else { (t2b, t2a) };
        let te = eps / len2.sqrt();
        return lo < 1.0 - te && hi > te;
    }
    false
}

/// Intersection points of two circles. Returns an empty vec when the circles
/// coincide (handled separately by callers).
fn circle_circle_intersections(
    c1: Point,
    r1: f64,
    c2: Point,
    r2: f64,
    eps: f64,
) -> Vec<Point> {
    let d = c1.dist(&c2);
    if d <= eps {
        return vec![]; // concentric: either coincident or disjoint
    }
    if d > r1 + r2 + eps || d < (r1 - r2).abs() - eps {
        return vec![];
    }
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    let h = if h2 > 0.0 { h2.sqrt() } else { 0.0 };
    let ux = (c2.x - c1.x) / d;
    let uy = (c2.y - c1.y) / d;
    let mx = c1.x + a * ux;
    let my = c1.y + a * uy;
    // h2 carries cancellation noise of order eps * r^2 near tangency, so
    // the single-point cutoff must scale with sqrt(eps) * r
    if h <= eps.sqrt() * (r1 + r2) {
        vec![Point::new(mx, my)]
    } else {
        vec![
            Point::new(mx - h * uy, my + h * ux),
            Point::new(mx + h * uy, my - h * ux),
        ]
    }
}

/// Intersection points of a circle and a closed segment.
fn circle_segment_intersections(c: Point, r: f64, a: Point, b: Point, eps: f64) -> Vec<Point> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return vec![];
    }
    let fx = a.x - c.x;
    let fy = a.y - c.y;
    // |a + t*d - c|^2 = r^2
    let qa = len2;
    let qb = 2.0 * (fx * dx + fy * dy);
    let qc = fx * fx + fy * fy - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    let len = len2.sqrt();
    let te = eps / len;
    if disc < 0.0 {
        // allow a tangent grazing within eps
        if disc > -4.0 * qa * eps * (r.max(1.0)) {
            let t = -qb / (2.0 * qa);
            if (-te..=1.0 + te).contains(&t) {
                return vec![Point::new(a.x + t * dx, a.y + t * dy)];
            }
        }
        return vec![];
    }
    let sq = disc.sqrt();
    let mut out = vec![];
    for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
        if (-te..=1.0 + te).contains(&t) {
            out.push(Point::new(a.x + t * dx, a.y + t * dy));
        }
    }
    out.dedup_by(|p, q| p.dist(q) <= eps);
    out
}

fn is_shared_endpoint(p: Point, u: &ChordArc, v: &ChordArc, eps: f64) -> bool {
    let near_u = p.dist(&u.a) <= eps || p.dist(&u.b) <= eps;
    let near_v = p.dist(&v.a) <= eps || p.dist(&v.b) <= eps;
    near_u && near_v
}

/// Whether a point lies on the closed segment a-b (within eps).
fn point_on_segment(p: Point, a: Point, b: Point, eps: f64) -> bool {
    point_segment_dist(p, a, b) <= eps
}

/// Whether two arcs have a common point other than a shared endpoint.
/// Straight-straight reduces to segment intersection; arc cases go through
/// circle-circle / circle-line intersection filtered to the arc spans.
pub fn arcs_intersect(u: &ChordArc, v: &ChordArc) -> bool {
    arcs_intersect_eps(u, v, GEOM_EPS)
}

pub fn arcs_intersect_eps(u: &ChordArc, v: &ChordArc, eps: f64) -> bool {
    // an arc with |sagitta| <= eps stays within eps of its chord, and its
    // near-infinite radius makes the circle algebra pure cancellation noise;
    // model it as the chord at this tolerance
    let (uf, vf) = (flatten_if_within(u, eps), flatten_if_within(v, eps));
    let (u, v) = (&uf, &vf);
    match (u.is_straight(), v.is_straight()) {
        (true, true) => {
            if segments_properly_intersect(u.a, u.b, v.a, v.b, eps) {
                return true;
            }
            // endpoint of one interior to the other (T-touch of non-shared
            // endpoint counts as a common point of the open arc)
            for (p, s, t) in [
                (v.a, u, v),
                (v.b, u, v),
                (u.a, v, u),
                (u.b, v, u),
            ] {
                if point_on_segment(p, s.a, s.b, eps)
                    && p.dist(&s.a) > eps
                    && p.dist(&s.b) > eps
                    && !is_shared_endpoint(p, s, t, eps)
                {
                    return true;
                }
            }
            false
        }
        (true, false) => arc_vs_segment(v, u.a, u.b, u, eps),
        (false, true) => arc_vs_segment(u, v.a, v.b, v, eps),
        (false, false) => {
            let (c1, r1) = (u.center(), u.radius());
            let (c2, r2) = (v.center(), v.radius());
            if c1.dist(&c2) <= eps && (r1 - r2).abs() <= eps {
                return cocircular_arcs_overlap(u, v, eps);
            }
            for p in circle_circle_intersections(c1, r1, c2, r2, eps) {
                if u.on_arc_side(p, eps)
                    && v.on_arc_side(p, eps)
                    && !is_shared_endpoint(p, u, v, eps)
                {
                    return true;
                }
            }
            false
        }
    }
}

fn flatten_if_within(arc: &ChordArc, eps: f64) -> ChordArc {
    if arc.sagitta.abs() <= eps {
        ChordArc::straight(arc.a, arc.b)
    } else {
        *arc
    }
}

/// Curved arc vs straight segment; `other` is the ChordArc the segment came
/// from (for the shared-endpoint exclusion).
fn arc_vs_segment(arc: &ChordArc, a: Point, b: Point, other: &ChordArc, eps: f64) -> bool {
    for p in circle_segment_intersections(arc.center(), arc.radius(), a, b, eps) {
        if arc.on_arc_side(p, eps) && !is_shared_endpoint(p, arc, other, eps) {
            return true;
        }
    }
    false
}

/// Two arcs on the same circle: overlap iff some point interior to one lies
/// on the other.
fn cocircular_arcs_overlap(u: &ChordArc, v: &ChordArc, eps: f64) -> bool {
    let probes = [u.apex(), v.apex()];
    for p in probes {
        let on_u = (p.dist(&u.center()) - u.radius()).abs() <= eps && u.on_arc_side(p, eps);
        let on_v = (p.dist(&v.center()) - v.radius()).abs() <= eps && v.on_arc_side(p, eps);
        if on_u && on_v && !is_shared_endpoint(p, u, v, eps) {
            return true;
        }
    }
    false
}

/// Whether the arc stays within the closed region. Endpoints are expected to
/// lie on the region boundary; the arc may touch the boundary (tangency is
/// not an exit) but must not cross it.
pub fn arc_in_polygon(arc: &ChordArc, region: &SimplePolygon) -> bool {
    arc_in_polygon_eps(arc, region, GEOM_EPS)
}

pub fn arc_in_polygon_eps(arc: &ChordArc, region: &SimplePolygon, eps: f64) -> bool {
    let arc = &flatten_if_within(arc, eps);
    if !region.contains_point(arc.apex(), eps) {
        return false;
    }
    let n = region.len();
    if arc.is_straight() {
        for i in 0..n {
            let (a, b) = region.edge(i);
            // collinear overlap with a boundary edge is a touch, not an exit
            if segments_cross_transversally(arc.a, arc.b, a, b, eps) {
                return false;
            }
        }
        return true;
    }
    let c = arc.center();
    let r = arc.radius();
    for i in 0..n {
        let (a, b) = region.edge(i);
        // tangent edges only touch; skip them
        let line_dist = point_line_dist(c, a, b);
        if (line_dist - r).abs() <= eps {
            continue;
        }
        for p in circle_segment_intersections(c, r, a, b, eps) {
            if !arc.on_arc_side(p, eps) {
                continue;
            }
            if p.dist(&arc.a) <= eps || p.dist(&arc.b) <= eps {
                continue; // endpoints sit on the boundary by construction
            }
            // transversal crossing of a boundary edge: the arc exits
            return false;
        }
    }
    true
}

fn point_line_dist(p: Point, a: Point, b: Point) -> f64 {
    let len = a.dist(&b);
    if len == 0.0 {
        return p.dist(&a);
    }
    (cross(a, b, p) / len).abs()
}

/// Circumcircle of three non-collinear points: (center, radius).
pub fn circumcircle(a: Point, b: Point, c: Point) -> Result<(Point, f64)> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if d.abs() < GEOM_EPS {
        return Err(GeomError::Domain("collinear points have no circumcircle".into()));
    }
    let a2 = a.x * a.x + a.y * a.y;
    let b2 = b.x * b.x + b.y * b.y;
    let c2 = c.x * c.x + c.y * c.y;
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Point::new(ux, uy);
    Ok((center, center.dist(&a)))
}
