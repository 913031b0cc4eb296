//! NP-hardness gadget generator.
//!
//! Builds the reduction instances from planar monotone 3-SAT: variable
//! gadgets (rows of 2x4 rectangles with a central decision rectangle),
//! literal pipes with 90-degree turns, and cross-shaped clause gadgets,
//! all glued from polygons on a half-unit grid. The generator only emits
//! instances; deciding them is the hard part, by construction.
//!
//! The basic building block is a triangle with target area 0. Exactly
//! three circular-arc configurations realize it, all lying on the
//! triangle's circumcircle: pick one edge to bend inward along the major
//! arc and bend the other two outward onto the circle.

use thiserror::Error;

use crate::geometry::{circumcircle, segment_area, signed_area, Point};
use crate::subdivision::{build_from_polygons, InputFace, Subdivision};

#[derive(Debug, Error)]
pub enum HardnessError {
    #[error("gadget domain error: {0}")]
    Domain(String),
    #[error("unsupported layout: {0}")]
    Layout(String),
    #[error("subdivision error: {0}")]
    Subdivision(#[from] crate::subdivision::SubdivisionError),
}

pub type Result<T> = std::result::Result<T, HardnessError>;

/// Segment area attached to a height-4 rectangle's short side: the base-2
/// skinny triangle's feasible configuration bends the shared edge outward
/// to the triangle apex (sagitta 1, a half-circle of radius 1).
pub fn c1() -> f64 {
    segment_area(2.0, 1.0).expect("half circle")
}

/// Scaled-down segment over a base-1 edge; c2 = c1 / 4 by the scaling law.
pub fn c2() -> f64 {
    segment_area(1.0, 0.5).expect("half circle")
}

/// The three sagitta triples (outward-positive, per edge i -> i+1) that
/// realize a 0-area circular-arc triangle. Configuration k bends edge k
/// inward along the major arc of the circumcircle and the other two edges
/// outward onto the circle.
pub fn zero_area_triangle_configs(tri: [Point; 3]) -> Result<[[f64; 3]; 3]> {
    if signed_area(&tri) <= 0.0 {
        return Err(HardnessError::Domain(
            "triangle must be counterclockwise and non-degenerate".into(),
        ));
    }
    let (center, r) = circumcircle(tri[0], tri[1], tri[2])
        .map_err(|e| HardnessError::Domain(e.to_string()))?;
    // signed distance of the center from each edge along the interior side
    let mut dl = [0.0; 3];
    for i in 0..3 {
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        dl[i] = crate::geometry::cross(a, b, center) / a.dist(&b);
    }
    let mut out = [[0.0; 3]; 3];
    for (k, cfg) in out.iter_mut().enumerate() {
        for i in 0..3 {
            cfg[i] = if i == k { -(r + dl[i]) } else { r - dl[i] };
        }
    }
    Ok(out)
}

/// A gadget subdivision plus per-face absolute target areas (None for the
/// sea/outer face). Targets of 0 are legitimate here.
#[derive(Debug, Clone)]
pub struct GadgetInstance {
    pub subdivision: Subdivision,
    pub targets: Vec<Option<f64>>,
}

impl GadgetInstance {
    /// Net demanded area change over all constrained faces. Padding the
    /// instance with a frame face of target (frame area - this sum) makes
    /// the total change zero.
    pub fn target_change(&self) -> f64 {
        self.targets
            .iter()
            .enumerate()
            .filter_map(|(f, t)| t.map(|t| t - self.subdivision.faces[f].area))
            .sum()
    }

    pub fn target_of(&self, name: &str) -> Option<f64> {
        let f = self
            .subdivision
            .faces
            .iter()
            .position(|face| face.name == name)?;
        self.targets[f]
    }

    pub fn area_of(&self, name: &str) -> Option<f64> {
        self.subdivision
            .faces
            .iter()
            .find(|face| face.name == name)
            .map(|face| face.area)
    }
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// Accumulates faces and their targets before assembly.
#[derive(Default)]
struct Builder {
    faces: Vec<InputFace>,
    targets: Vec<f64>,
}

impl Builder {
    fn push(&mut self, name: String, ring: Vec<Point>, target: f64) {
        self.faces.push(InputFace {
            name,
            ring,
            // the standard builder wants positive weights; gadget targets
            // are carried separately and zero targets are fine there
            weight: Some(1.0),
        });
        self.targets.push(target);
    }

    /// Gadget assemblies enclose pockets of dead space (between pipes, the
    /// clause bar and the variable row). Fill them with neutral faces whose
    /// target equals their area so no area can leak through them.
    fn fill_holes(&mut self) {
        use std::collections::HashMap;
        let key = |p: Point| (p.x.to_bits(), p.y.to_bits());
        let mut unmatched: HashMap<((u64, u64), (u64, u64)), (Point, Point)> = HashMap::new();
        for face in &self.faces {
            // orient like the subdivision builder will
            let mut ring = face.ring.clone();
            if signed_area(&ring) < 0.0 {
                ring.reverse();
            }
            let ring = &ring;
            for i in 0..ring.len() {
                let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
                if unmatched.remove(&(key(b), key(a))).is_none() {
                    unmatched.insert((key(a), key(b)), (a, b));
                }
            }
        }
        // walk the reversed border edges; counterclockwise cycles are holes.
        // sorted maps keep the decomposition independent of hash order
        let mut by_origin: std::collections::BTreeMap<(u64, u64), Vec<(Point, Point)>> =
            Default::default();
        for &(a, b) in unmatched.values() {
            by_origin.entry(key(b)).or_default().push((b, a));
        }
        for v in by_origin.values_mut() {
            v.sort_by_key(|(_, b)| key(*b));
        }
        let turn = |prev: Point, cur: Point, next: Point| {
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
        };
        // canonical successor of a directed edge: the most-clockwise
        // continuation, never doubling straight back unless forced. This is
        // a pure function of the edge set, so the cycle decomposition does
        // not depend on which edge a trace starts from
        let successor = |e: (Point, Point)| -> Option<(Point, Point)> {
            let nexts = by_origin.get(&key(e.1))?;
            nexts
                .iter()
                .filter(|n| nexts.len() == 1 || key(n.1) != key(e.0))
                .min_by(|x, y| {
                    let ax = turn(e.0, e.1, x.1);
                    let ay = turn(e.0, e.1, y.1);
                    ax.partial_cmp(&ay).unwrap()
                })
                .copied()
        };
        let starts: Vec<(Point, Point)> = by_origin.values().flatten().copied().collect();
        let mut visited: std::collections::BTreeSet<((u64, u64), (u64, u64))> = Default::default();
        let mut fillers = Vec::new();
        for start in starts {
            if visited.contains(&(key(start.0), key(start.1))) {
                continue;
            }
            let mut cycle = vec![start.0];
            let mut e = start;
            loop {
                visited.insert((key(e.0), key(e.1)));
                let next = match successor(e) {
                    Some(n) => n,
                    None => break,
                };
                if next == start {
                    cycle.push(e.1);
                    if signed_area(&cycle) > 1e-9 {
                        fillers.push(cycle);
                    }
                    break;
                }
                if visited.contains(&(key(next.0), key(next.1))) {
                    break; // joined a cycle traced earlier
                }
                cycle.push(e.1);
                e = next;
            }
        }
        fillers.sort_by(|a, b| {
            (a[0].x, a[0].y)
                .partial_cmp(&(b[0].x, b[0].y))
                .unwrap()
        });
        for (i, ring) in fillers.into_iter().enumerate() {
            let area = signed_area(&ring);
            self.push(format!("filler{i}"), ring, area);
        }
    }

    fn assemble(mut self) -> Result<GadgetInstance> {
        self.fill_holes();
        let subdivision = build_from_polygons(&self.faces, 1e-9)?;
        let mut targets = vec![None; subdivision.faces.len()];
        for (face, target) in self.faces.iter().zip(&self.targets) {
            let f = subdivision
                .faces
                .iter()
                .position(|sf| sf.name == face.name)
                .ok_or_else(|| HardnessError::Domain(format!("face '{}' lost", face.name)))?;
            targets[f] = Some(*target);
        }
        Ok(GadgetInstance {
            subdivision,
            targets,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Plain,
    Decision,
    ConnPos,
    ConnNeg,
}

/// Emits one variable gadget row starting at `x0`; returns the x origins
/// of the positive and negative connector cells, left to right.
fn emit_variable_gadget(
    b: &mut Builder,
    prefix: &str,
    x0: f64,
    degree_pos: usize,
    degree_neg: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut cells = vec![Cell::Plain];
    for _ in 0..degree_pos {
        cells.push(Cell::ConnPos);
        cells.push(Cell::Plain);
    }
    cells.push(Cell::Decision);
    for _ in 0..degree_neg {
        cells.push(Cell::Plain);
        cells.push(Cell::ConnNeg);
    }
    cells.push(Cell::Plain);

    let cc1 = c1();
    let cc2 = c2();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut plain_id = 0;
    let mut tri_id = 0;
    let tri = |b: &mut Builder, tri_id: &mut usize, ring: Vec<Point>| {
        b.push(format!("{prefix}tri{tri_id}"), ring, 0.0);
        *tri_id += 1;
    };
    for (i, &cell) in cells.iter().enumerate() {
        let x = x0 + 2.0 * i as f64;
        let left_conn = i > 0 && matches!(cells[i - 1], Cell::ConnPos | Cell::ConnNeg);
        let right_conn = i + 1 < cells.len() && matches!(cells[i + 1], Cell::ConnPos | Cell::ConnNeg);
        let left_kind = if i > 0 { Some(cells[i - 1]) } else { None };
        let right_kind = cells.get(i + 1).copied();
        match cell {
            Cell::Plain | Cell::Decision => {
                let (name, target) = if cell == Cell::Decision {
                    (
                        format!("{prefix}decision"),
                        8.0 + 2.0 * cc1 - 2.0 * std::f64::consts::PI,
                    )
                } else {
                    let n = format!("{prefix}plain{plain_id}");
                    plain_id += 1;
                    (n, 8.0 + 2.0 * cc1)
                };
                b.push(
                    name,
                    vec![pt(x, 0.0), pt(x + 2.0, 0.0), pt(x + 2.0, 4.0), pt(x, 4.0)],
                    target,
                );
                // top skinny triangle; connector side-triangle apexes sit
                // on its legs and must appear as (collinear) ring vertices
                let mut top = vec![pt(x, 4.0), pt(x + 2.0, 4.0)];
                if right_conn && right_kind == Some(Cell::ConnPos) {
                    top.push(pt(x + 1.5, 4.5));
                }
                top.push(pt(x + 1.0, 5.0));
                if left_conn && left_kind == Some(Cell::ConnPos) {
                    top.push(pt(x + 0.5, 4.5));
                }
                tri(b, &mut tri_id, top);
                let mut bottom = vec![pt(x, 0.0)];
                if left_conn && left_kind == Some(Cell::ConnNeg) {
                    bottom.push(pt(x + 0.5, -0.5));
                }
                bottom.push(pt(x + 1.0, -1.0));
                if right_conn && right_kind == Some(Cell::ConnNeg) {
                    bottom.push(pt(x + 1.5, -0.5));
                }
                bottom.push(pt(x + 2.0, 0.0));
                tri(b, &mut tri_id, bottom);
            }
            Cell::ConnPos => {
                pos.push(x);
                b.push(
                    format!("{prefix}connp{}", pos.len() - 1),
                    vec![
                        pt(x, 0.0),
                        pt(x + 2.0, 0.0),
                        pt(x + 2.0, 4.0),
                        pt(x + 2.0, 5.0),
                        pt(x, 5.0),
                        pt(x, 4.0),
                    ],
                    10.0 + 2.0 * cc2,
                );
                // right triangle on the short side away from the literal
                tri(
                    b,
                    &mut tri_id,
                    vec![pt(x, 0.0), pt(x + 1.0, -1.0), pt(x + 2.0, 0.0)],
                );
                // base-1 skinny triangles on the sticking-out side edges
                tri(
                    b,
                    &mut tri_id,
                    vec![pt(x, 4.0), pt(x, 5.0), pt(x - 0.5, 4.5)],
                );
                tri(
                    b,
                    &mut tri_id,
                    vec![pt(x + 2.0, 5.0), pt(x + 2.0, 4.0), pt(x + 2.5, 4.5)],
                );
            }
            Cell::ConnNeg => {
                neg.push(x);
                b.push(
                    format!("{prefix}connn{}", neg.len() - 1),
                    vec![
                        pt(x, -1.0),
                        pt(x + 2.0, -1.0),
                        pt(x + 2.0, 0.0),
                        pt(x + 2.0, 4.0),
                        pt(x, 4.0),
                        pt(x, 0.0),
                    ],
                    10.0 + 2.0 * cc2,
                );
                tri(
                    b,
                    &mut tri_id,
                    vec![pt(x, 4.0), pt(x + 2.0, 4.0), pt(x + 1.0, 5.0)],
                );
                tri(
                    b,
                    &mut tri_id,
                    vec![pt(x, -1.0), pt(x, 0.0), pt(x - 0.5, -0.5)],
                );
                tri(
                    b,
                    &mut tri_id,
                    vec![pt(x + 2.0, 0.0), pt(x + 2.0, -1.0), pt(x + 2.5, -0.5)],
                );
            }
        }
    }
    (pos, neg)
}

/// Standalone variable gadget with the given numbers of positive and
/// negative literal connectors.
pub fn build_variable_gadget(degree_pos: usize, degree_neg: usize) -> Result<GadgetInstance> {
    let mut b = Builder::default();
    emit_variable_gadget(&mut b, "v_", 0.0, degree_pos, degree_neg);
    b.assemble()
}

/// Emits one clause gadget: the cross-shaped clause polygon with its stub
/// over the middle connector at `cm`, bar spanning `[bar_l, bar_r]` at
/// height `y0..y0+2`, arm on top, three right triangles and eight skinny
/// triangles. `up` selects a positive (above the row) or mirrored negative
/// clause. Coordinates are produced for the positive orientation and then
/// reflected about y = 2 for negative clauses.
fn emit_clause_gadget(
    b: &mut Builder,
    prefix: &str,
    cm: f64,
    bar_l: f64,
    bar_r: f64,
    y0: f64,
    up: bool,
) -> Result<()> {
    if bar_l > cm - 2.0 || bar_r < cm + 4.0 {
        return Err(HardnessError::Layout(format!(
            "clause bar [{bar_l}, {bar_r}] too narrow around stub at {cm}"
        )));
    }
    let y1 = y0 + 2.0;
    let m = |p: Point| if up { p } else { pt(p.x, 4.0 - p.y) };
    let face = |b: &mut Builder, name: String, ring: Vec<Point>, target: f64| {
        let mut ring: Vec<Point> = ring.into_iter().map(m).collect();
        if !up {
            ring.reverse();
        }
        b.push(name, ring, target);
    };

    let mut ring = vec![pt(cm, y0 - 2.0), pt(cm + 2.0, y0 - 2.0)];
    // right stub wall with the side-skinny base
    ring.extend([
        pt(cm + 2.0, y0 - 1.5),
        pt(cm + 2.0, y0 - 0.5),
        pt(cm + 2.0, y0),
    ]);
    // bar bottom, right of the stub: two skinny bases
    ring.extend([pt(cm + 3.0, y0), pt(cm + 4.0, y0)]);
    if bar_r > cm + 4.0 {
        ring.push(pt(bar_r, y0));
    }
    ring.push(pt(bar_r, y1));
    // bar top, right: one skinny base
    ring.extend([pt(cm + 4.0, y1), pt(cm + 3.0, y1), pt(cm + 2.5, y1)]);
    // arm
    ring.extend([
        pt(cm + 2.5, y1 + 2.0),
        pt(cm + 2.0, y1 + 2.0),
        pt(cm, y1 + 2.0),
        pt(cm - 0.5, y1 + 2.0),
        pt(cm - 0.5, y1),
    ]);
    // bar top, left: one skinny base
    ring.extend([pt(cm - 1.0, y1), pt(cm - 2.0, y1)]);
    if bar_l < cm - 2.0 {
        ring.push(pt(bar_l, y1));
    }
    ring.push(pt(bar_l, y0));
    // bar bottom, left: two skinny bases
    ring.extend([pt(cm - 2.0, y0), pt(cm - 1.0, y0), pt(cm, y0)]);
    // left stub wall
    ring.extend([pt(cm, y0 - 0.5), pt(cm, y0 - 1.5)]);
    let area = (bar_r - bar_l) * 2.0 + 6.0 + 4.0;
    face(b, format!("{prefix}clause"), ring, area + 8.0 * c2());

    // three right triangles on the arm (target 0)
    face(
        b,
        format!("{prefix}rtri_l"),
        vec![
            pt(cm - 0.5, y1),
            pt(cm - 0.5, y1 + 2.0),
            pt(cm - 1.5, y1 + 1.0),
        ],
        0.0,
    );
    face(
        b,
        format!("{prefix}rtri_t"),
        vec![
            pt(cm, y1 + 2.0),
            pt(cm + 2.0, y1 + 2.0),
            pt(cm + 1.0, y1 + 3.0),
        ],
        0.0,
    );
    face(
        b,
        format!("{prefix}rtri_r"),
        vec![
            pt(cm + 2.5, y1 + 2.0),
            pt(cm + 2.5, y1),
            pt(cm + 3.5, y1 + 1.0),
        ],
        0.0,
    );

    // eight base-1 skinny triangles (target 0): four under the bar, two on
    // the bar top, two on the stub walls
    let skinnies: Vec<Vec<Point>> = vec![
        vec![pt(cm - 1.0, y0), pt(cm - 2.0, y0), pt(cm - 1.5, y0 - 0.5)],
        vec![pt(cm, y0), pt(cm - 1.0, y0), pt(cm - 0.5, y0 - 0.5)],
        vec![pt(cm + 3.0, y0), pt(cm + 2.0, y0), pt(cm + 2.5, y0 - 0.5)],
        vec![pt(cm + 4.0, y0), pt(cm + 3.0, y0), pt(cm + 3.5, y0 - 0.5)],
        vec![pt(cm - 2.0, y1), pt(cm - 1.0, y1), pt(cm - 1.5, y1 + 0.5)],
        vec![pt(cm + 3.0, y1), pt(cm + 4.0, y1), pt(cm + 3.5, y1 + 0.5)],
        vec![
            pt(cm, y0 - 0.5),
            pt(cm, y0 - 1.5),
            pt(cm - 0.5, y0 - 1.0),
        ],
        vec![
            pt(cm + 2.0, y0 - 1.5),
            pt(cm + 2.0, y0 - 0.5),
            pt(cm + 2.5, y0 - 1.0),
        ],
    ];
    for (i, ring) in skinnies.into_iter().enumerate() {
        face(b, format!("{prefix}skinny{i}"), ring, 0.0);
    }
    Ok(())
}

/// Standalone clause gadget fragment.
pub fn build_clause_gadget() -> Result<GadgetInstance> {
    let mut b = Builder::default();
    emit_clause_gadget(&mut b, "c_", 0.0, -2.0, 4.0, 9.0, true)?;
    b.assemble()
}

/// A monotone clause: three variable indices plus the polarity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clause {
    pub vars: [usize; 3],
    pub positive: bool,
}

/// Planar monotone 3-SAT formula: variables 0..n_vars laid out left to
/// right, positive clauses drawn above the variable line, negative below.
#[derive(Debug, Clone, Default)]
pub struct MonotoneFormula {
    pub n_vars: usize,
    pub clauses: Vec<Clause>,
}

impl MonotoneFormula {
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.clauses.iter().enumerate() {
            for &v in &c.vars {
                if v >= self.n_vars {
                    return Err(HardnessError::Domain(format!(
                        "clause {i} references variable {v} out of range"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parses the simple clause-per-line text format: three signed 1-based
/// variable numbers per line, all positive or all negative; blank lines
/// and '#' comments are skipped.
pub fn parse_formula(text: &str) -> Result<MonotoneFormula> {
    let mut clauses = Vec::new();
    let mut n_vars = 0;
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|w| {
                w.parse::<i64>().map_err(|_| {
                    HardnessError::Domain(format!("line {}: bad literal '{w}'", ln + 1))
                })
            })
            .collect::<Result<_>>()?;
        if nums.len() != 3 {
            return Err(HardnessError::Domain(format!(
                "line {}: clauses have exactly 3 literals",
                ln + 1
            )));
        }
        if nums.iter().any(|&n| n == 0) {
            return Err(HardnessError::Domain(format!("line {}: literal 0", ln + 1)));
        }
        let positive = nums[0] > 0;
        if nums.iter().any(|&n| (n > 0) != positive) {
            return Err(HardnessError::Domain(format!(
                "line {}: clause mixes positive and negative literals",
                ln + 1
            )));
        }
        let vars = [
            nums[0].unsigned_abs() as usize - 1,
            nums[1].unsigned_abs() as usize - 1,
            nums[2].unsigned_abs() as usize - 1,
        ];
        n_vars = n_vars.max(*vars.iter().max().unwrap() + 1);
        clauses.push(Clause { vars, positive });
    }
    Ok(MonotoneFormula { n_vars, clauses })
}

/// Occurrence role within its clause after sorting literals by variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Left,
    Middle,
    Right,
}

/// Nesting depths per clause (same-side clauses must be laminar).
fn clause_depths(f: &MonotoneFormula) -> Result<Vec<usize>> {
    let interval = |c: &Clause| {
        let lo = *c.vars.iter().min().unwrap();
        let hi = *c.vars.iter().max().unwrap();
        (lo, hi)
    };
    let contains = |a: usize, b: usize| {
        // does clause a's interval strictly contain clause b's?
        let (al, ah) = interval(&f.clauses[a]);
        let (bl, bh) = interval(&f.clauses[b]);
        al <= bl && bh <= ah && (ah - al > bh - bl || (ah - al == bh - bl && a > b))
    };
    let mut depth = vec![0usize; f.clauses.len()];
    for i in 0..f.clauses.len() {
        depth[i] = compute_depth(i, f, &contains, &mut vec![false; f.clauses.len()])?;
    }
    // laminar check: same-side clauses either nest or have disjoint spans
    for i in 0..f.clauses.len() {
        for j in i + 1..f.clauses.len() {
            if f.clauses[i].positive != f.clauses[j].positive {
                continue;
            }
            let (il, ih) = interval(&f.clauses[i]);
            let (jl, jh) = interval(&f.clauses[j]);
            let disjoint = ih <= jl || jh <= il;
            let nested = contains(i, j) || contains(j, i);
            if !disjoint && !nested {
                return Err(HardnessError::Layout(format!(
                    "clauses {i} and {j} overlap without nesting"
                )));
            }
        }
    }
    Ok(depth)
}

fn compute_depth(
    i: usize,
    f: &MonotoneFormula,
    contains: &impl Fn(usize, usize) -> bool,
    visiting: &mut Vec<bool>,
) -> Result<usize> {
    if visiting[i] {
        return Err(HardnessError::Layout("cyclic clause nesting".into()));
    }
    visiting[i] = true;
    let mut d = 1;
    for j in 0..f.clauses.len() {
        if j != i && f.clauses[j].positive == f.clauses[i].positive && contains(i, j) {
            d = d.max(1 + compute_depth(j, f, contains, visiting)?);
        }
    }
    visiting[i] = false;
    if d > 2 {
        return Err(HardnessError::Layout(format!(
            "clause {i} nests at depth {d}; v1 supports depth <= 2"
        )));
    }
    Ok(d)
}

/// Compiles a formula into a gadget subdivision: variable gadget rows on a
/// line, literal pipes (with 90-degree turn squares for the outer
/// literals), and clause gadgets above/below.
pub fn compile(f: &MonotoneFormula) -> Result<GadgetInstance> {
    f.validate()?;
    if f.n_vars == 0 && f.clauses.is_empty() {
        return Ok(GadgetInstance {
            subdivision: build_from_polygons(&[], 1e-9)?,
            targets: Vec::new(),
        });
    }
    let depth = clause_depths(f)?;

    // occurrences per variable and side, ordered left to right so that
    // pipes of nested clauses do not cross: legs of wider clauses go
    // further outward
    #[derive(Clone, Copy)]
    struct Occ {
        clause: usize,
        role: Role,
    }
    let mut occs_pos: Vec<Vec<Occ>> = vec![Vec::new(); f.n_vars];
    let mut occs_neg: Vec<Vec<Occ>> = vec![Vec::new(); f.n_vars];
    for (ci, c) in f.clauses.iter().enumerate() {
        let mut sorted = c.vars;
        sorted.sort();
        for (slot, &v) in sorted.iter().enumerate() {
            let role = [Role::Left, Role::Middle, Role::Right][slot];
            let occ = Occ { clause: ci, role };
            if c.positive {
                occs_pos[v].push(occ);
            } else {
                occs_neg[v].push(occ);
            }
        }
    }
    let span = |ci: usize| {
        let c = &f.clauses[ci];
        (
            *c.vars.iter().min().unwrap() as i64,
            *c.vars.iter().max().unwrap() as i64,
        )
    };
    for (v, occs) in occs_pos
        .iter_mut()
        .enumerate()
        .chain(occs_neg.iter_mut().enumerate())
    {
        occs.sort_by_key(|o| {
            let (lo, hi) = span(o.clause);
            let v = v as i64;
            // legs of clauses extending left come first (wider nests
            // higher, so its leg must clear the narrow clause's bar and
            // sits further right); interior legs next; clauses extending
            // right last, wider further left. Duplicate literals of one
            // clause keep their left/middle/right slot order.
            let extends_left = lo < v && v == hi;
            if extends_left && matches!(o.role, Role::Right | Role::Middle) {
                (0, -lo, o.role, o.clause)
            } else if o.role == Role::Middle && lo < v && v < hi {
                (1, hi - lo, o.role, o.clause)
            } else {
                (2, -hi, o.role, o.clause)
            }
        });
    }

    // lay the variable gadgets on the line and record connector positions
    let mut b = Builder::default();
    let mut x = 0.0;
    // connector x origin per (clause, role)
    let mut legs: Vec<[f64; 3]> = vec![[0.0; 3]; f.clauses.len()];
    for v in 0..f.n_vars {
        let (p, n) = (occs_pos[v].len(), occs_neg[v].len());
        let (pos_x, neg_x) = emit_variable_gadget(&mut b, &format!("v{v}_"), x, p, n);
        for (occ, cx) in occs_pos[v].iter().zip(&pos_x) {
            legs[occ.clause][occ.role as usize] = *cx;
        }
        for (occ, cx) in occs_neg[v].iter().zip(&neg_x) {
            legs[occ.clause][occ.role as usize] = *cx;
        }
        x += 2.0 * (3 + 2 * (p + n)) as f64 + 2.0;
    }

    for (ci, c) in f.clauses.iter().enumerate() {
        let [xl, cm, xr] = legs[ci];
        let prefix = format!("c{ci}_");
        let y0 = 9.0 + 10.0 * (depth[ci] - 1) as f64;
        let up = c.positive;
        let m = |p: Point| if up { p } else { pt(p.x, 4.0 - p.y) };
        let face = |b: &mut Builder, name: String, ring: Vec<Point>, target: f64| {
            let mut ring: Vec<Point> = ring.into_iter().map(m).collect();
            if !up {
                ring.reverse();
            }
            b.push(name, ring, target);
        };

        // vertical pipes under the turn squares and the middle stub
        let rect = |x0: f64, y0: f64, x1: f64, y1: f64| {
            vec![pt(x0, y0), pt(x1, y0), pt(x1, y1), pt(x0, y1)]
        };
        face(
            &mut b,
            format!("{prefix}pipe_l"),
            rect(xl, 5.0, xl + 2.0, y0),
            2.0 * (y0 - 5.0),
        );
        face(
            &mut b,
            format!("{prefix}pipe_r"),
            rect(xr, 5.0, xr + 2.0, y0),
            2.0 * (y0 - 5.0),
        );
        face(
            &mut b,
            format!("{prefix}pipe_m"),
            rect(cm, 5.0, cm + 2.0, y0 - 2.0),
            2.0 * (y0 - 7.0),
        );
        // turn squares with their two right triangles on the free sides
        face(
            &mut b,
            format!("{prefix}turn_l"),
            rect(xl, y0, xl + 2.0, y0 + 2.0),
            4.0,
        );
        face(
            &mut b,
            format!("{prefix}turn_l_tri_s"),
            vec![pt(xl, y0 + 2.0), pt(xl, y0), pt(xl - 1.0, y0 + 1.0)],
            0.0,
        );
        face(
            &mut b,
            format!("{prefix}turn_l_tri_t"),
            vec![
                pt(xl, y0 + 2.0),
                pt(xl + 2.0, y0 + 2.0),
                pt(xl + 1.0, y0 + 3.0),
            ],
            0.0,
        );
        face(
            &mut b,
            format!("{prefix}turn_r"),
            rect(xr, y0, xr + 2.0, y0 + 2.0),
            4.0,
        );
        face(
            &mut b,
            format!("{prefix}turn_r_tri_s"),
            vec![
                pt(xr + 2.0, y0),
                pt(xr + 2.0, y0 + 2.0),
                pt(xr + 3.0, y0 + 1.0),
            ],
            0.0,
        );
        face(
            &mut b,
            format!("{prefix}turn_r_tri_t"),
            vec![
                pt(xr, y0 + 2.0),
                pt(xr + 2.0, y0 + 2.0),
                pt(xr + 1.0, y0 + 3.0),
            ],
            0.0,
        );
        emit_clause_gadget(&mut b, &prefix, cm, xl + 2.0, xr, y0, up)?;
    }
    b.assemble()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{arcs_intersect, face_area_with_arcs, ChordArc, SimplePolygon};
    use crate::subdivision::validate;

    fn tri_area_with(tri: [Point; 3], bends: [f64; 3]) -> f64 {
        let poly = SimplePolygon::new(tri.to_vec()).unwrap();
        face_area_with_arcs(&poly, &bends).unwrap()
    }

    #[test]
    fn segment_constants() {
        assert!((c1() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((c2() - c1() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn equilateral_zero_area_configs() {
        let h = 3.0f64.sqrt() / 2.0;
        let tri = [pt(0.0, 0.0), pt(1.0, 0.0), pt(0.5, h)];
        let configs = zero_area_triangle_configs(tri).unwrap();
        let circle = std::f64::consts::PI / 3.0; // r = 1/sqrt(3)
        for cfg in configs {
            let area = tri_area_with(tri, cfg);
            assert!(area.abs() <= 1e-9 * circle, "area {area}");
        }
    }

    #[test]
    fn right_isoceles_hypotenuse_is_half_circle() {
        let tri = [pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)];
        let configs = zero_area_triangle_configs(tri).unwrap();
        // circumcenter (0.5, 0.5) lies on the hypotenuse, so its outward
        // arc is exactly a half-circle of radius sqrt(2)/2
        let r = 0.5f64.sqrt();
        for (k, cfg) in configs.iter().enumerate() {
            if k != 1 {
                // edge 1 is the hypotenuse; in configs not bending it
                // inward, it bends outward with sagitta = r
                assert!((cfg[1] - r).abs() < 1e-12, "config {k}: {:?}", cfg);
            }
            assert!(tri_area_with(tri, *cfg).abs() < 1e-9);
        }
    }

    #[test]
    fn straight_edges_are_not_a_zero_config() {
        let tri = [pt(0.0, 0.0), pt(1.0, 0.0), pt(0.5, 0.9)];
        assert!(tri_area_with(tri, [0.0; 3]) > 0.1);
        for cfg in zero_area_triangle_configs(tri).unwrap() {
            assert!(cfg.iter().any(|&h| h != 0.0));
        }
    }

    #[test]
    fn exactly_three_sign_patterns_vanish() {
        // enumerate in/out choices per edge on the circumcircle; only the
        // three one-edge-inward patterns produce area 0
        let tri = [pt(0.0, 0.0), pt(2.0, 0.5), pt(0.5, 1.5)];
        let (center, r) = circumcircle(tri[0], tri[1], tri[2]).unwrap();
        let mut dl = [0.0; 3];
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            dl[i] = crate::geometry::cross(a, b, center) / a.dist(&b);
        }
        let mut zero_patterns = Vec::new();
        for mask in 0..8u32 {
            let mut bends = [0.0; 3];
            for i in 0..3 {
                bends[i] = if mask & (1 << i) != 0 {
                    -(r + dl[i])
                } else {
                    r - dl[i]
                };
            }
            if tri_area_with(tri, bends).abs() < 1e-9 {
                zero_patterns.push(mask);
            }
        }
        assert_eq!(zero_patterns, vec![1, 2, 4]);
    }

    #[test]
    fn random_triangles_all_configs_vanish() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        while checked < 100 {
            let a = pt(next() * 4.0, next() * 4.0);
            let b = pt(next() * 4.0, next() * 4.0);
            let c = pt(next() * 4.0, next() * 4.0);
            let tri = if signed_area(&[a, b, c]) > 0.0 {
                [a, b, c]
            } else {
                [a, c, b]
            };
            if signed_area(&tri).abs() < 0.1 {
                continue; // skip near-degenerate samples
            }
            let (_, r) = match circumcircle(tri[0], tri[1], tri[2]) {
                Ok(x) => x,
                Err(_) => continue,
            };
            let circle = std::f64::consts::PI * r * r;
            for cfg in zero_area_triangle_configs(tri).unwrap() {
                let area = tri_area_with(tri, cfg);
                assert!(area.abs() <= 1e-9 * circle.max(1.0), "area {area}");
            }
            checked += 1;
        }
    }

    #[test]
    fn variable_gadget_minimal() {
        let g = build_variable_gadget(0, 0).unwrap();
        assert!(validate(&g.subdivision).is_empty());
        // plain, decision, plain with two triangles each
        assert_eq!(
            g.subdivision
                .faces
                .iter()
                .filter(|f| f.name.contains("plain"))
                .count(),
            2
        );
        let d = g.target_of("v_decision").unwrap();
        let a = g.area_of("v_decision").unwrap();
        assert!((a - 8.0).abs() < 1e-12);
        assert!((d - a - (2.0 * c1() - 2.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn variable_gadget_with_connectors() {
        let g = build_variable_gadget(1, 1).unwrap();
        assert!(validate(&g.subdivision).is_empty());
        for name in ["v_connp0", "v_connn0"] {
            let t = g.target_of(name).unwrap();
            let a = g.area_of(name).unwrap();
            assert!((a - 10.0).abs() < 1e-12);
            assert!((t - a - 2.0 * c2()).abs() < 1e-12, "{name}");
            assert!((t - a - c1() / 2.0).abs() < 1e-12, "{name}: 2c2 = c1/2");
        }
        // every vertex on the half-unit grid
        for v in &g.subdivision.vertices {
            assert!((v.x * 2.0).fract().abs() < 1e-9);
            assert!((v.y * 2.0).fract().abs() < 1e-9);
        }
    }

    #[test]
    fn clause_gadget_fragment() {
        let g = build_clause_gadget().unwrap();
        assert!(validate(&g.subdivision).is_empty());
        let t = g.target_of("c_clause").unwrap();
        let a = g.area_of("c_clause").unwrap();
        assert!((t - a - 8.0 * c2()).abs() < 1e-12);
        assert_eq!(
            g.subdivision
                .faces
                .iter()
                .filter(|f| f.name.starts_with("c_skinny"))
                .count(),
            8
        );
    }

    #[test]
    fn at_most_two_inward_half_circles() {
        // the three top right triangles of the clause gadget, bent inward
        // as half-circles over their clause-side bases
        let (cm, y1) = (0.0, 11.0);
        let left = ChordArc::new(pt(cm - 0.5, y1), pt(cm - 0.5, y1 + 2.0), -1.0);
        let top = ChordArc::new(pt(cm, y1 + 2.0), pt(cm + 2.0, y1 + 2.0), -1.0);
        let right = ChordArc::new(pt(cm + 2.5, y1 + 2.0), pt(cm + 2.5, y1), -1.0);
        assert!(!arcs_intersect(&left, &right), "outer pair must coexist");
        assert!(arcs_intersect(&left, &top));
        assert!(arcs_intersect(&right, &top));
    }

    #[test]
    fn compile_empty_formula() {
        let g = compile(&MonotoneFormula::default()).unwrap();
        assert_eq!(g.targets.len(), 0);
    }

    #[test]
    fn compile_single_clause() {
        let f = parse_formula("1 1 1").unwrap();
        let g = compile(&f).unwrap();
        assert!(validate(&g.subdivision).is_empty());
        let names: Vec<&str> = g
            .subdivision
            .faces
            .iter()
            .map(|f| f.name.as_str())
            .collect();
        assert!(names.contains(&"v0_decision"));
        assert!(names.contains(&"c0_clause"));
        assert_eq!(names.iter().filter(|n| n.contains("pipe")).count(), 3);
        for v in &g.subdivision.vertices {
            assert!((v.x * 2.0).fract().abs() < 1e-9);
            assert!((v.y * 2.0).fract().abs() < 1e-9);
        }
    }

    #[test]
    fn compile_five_vars_four_clauses() {
        // the Fig. 3 shape: two positive clauses side by side with a wider
        // one nested above, one negative clause below
        let f = parse_formula("1 2 3\n3 4 5\n1 3 5\n-2 -3 -4").unwrap();
        let g = compile(&f).unwrap();
        assert!(validate(&g.subdivision).is_empty());
        for v in &g.subdivision.vertices {
            assert!((v.x * 2.0).fract().abs() < 1e-9);
            assert!((v.y * 2.0).fract().abs() < 1e-9);
        }
        // padding with a frame face of target (frame area - total change)
        // balances the instance
        let change = g.target_change();
        assert!(change.is_finite());
        let frame_area = 10_000.0;
        let frame_target = frame_area - change;
        assert!((change + (frame_target - frame_area)).abs() < 1e-9);
    }

    #[test]
    fn parse_rejects_mixed_clause() {
        assert!(parse_formula("1 -2 3").is_err());
    }

    #[test]
    fn deep_nesting_rejected() {
        // three nested positive clauses force depth 3
        let f = parse_formula("2 3 4\n1 3 5\n1 4 6").unwrap();
        // widen the outer clause so nesting is strict
        assert!(matches!(
            compile(&f),
            Err(HardnessError::Layout(_))
        ));
    }
}
