//! Turning a transfer plan into actual arcs.
//!
//! Each net transfer between two faces is split over their shared boundary
//! edges proportionally to the per-edge capacities and converted to a
//! sagitta bulging into the losing face. The result is one signed sagitta
//! per undirected edge plus the realized face areas.

use thiserror::Error;

use crate::flow::TransferPlan;
use crate::geometry::{
    arc_in_polygon_eps, arcs_intersect_eps, face_area_with_arcs, sagitta_for_area_capped,
    segment_area, ChordArc, AREA_TOL, GEOM_EPS,
};
use crate::skeleton::{CapacityMap, Mode, SkeletonRegionSet};
use crate::subdivision::{EdgeId, Subdivision, Violation};

#[derive(Debug, Error)]
pub enum BendError {
    #[error("internal consistency error: {0}")]
    Inconsistent(String),
    #[error("geometry error: {0}")]
    Geometry(#[from] crate::geometry::GeomError),
}

pub type Result<T> = std::result::Result<T, BendError>;

/// Per-half-edge signed sagittas. `sagitta[e]` is the ChordArc sagitta of
/// edge `e`'s directed chord origin->target, so a positive value bulges
/// into `e`'s own face (that face loses area) and twins carry negated
/// views of the same arc.
#[derive(Debug, Clone)]
pub struct BendingConfiguration {
    pub sagitta: Vec<f64>,
    /// Realized area per face; the outer face entry is its (bookkeeping)
    /// area plus whatever leaked across the map border.
    pub resulting: Vec<f64>,
}

impl BendingConfiguration {
    /// The arc of an undirected edge as seen from half-edge `e`.
    pub fn arc(&self, s: &Subdivision, e: EdgeId) -> ChordArc {
        let (a, b) = s.edge_points(e);
        ChordArc::new(a, b, self.sagitta[e])
    }

    /// Canonical signed sagitta of the undirected edge containing `e`:
    /// the view from the half-edge with the lower face id.
    pub fn canonical_sagitta(&self, s: &Subdivision, e: EdgeId) -> (EdgeId, f64) {
        let t = s.half_edges[e].twin;
        if s.half_edges[e].face <= s.half_edges[t].face {
            (e, self.sagitta[e])
        } else {
            (t, self.sagitta[t])
        }
    }
}

/// Distributes every transfer over the shared edges proportionally to their
/// capacities and solves each edge's sagitta from its segment area.
pub fn realize(s: &Subdivision, plan: &TransferPlan, caps: &CapacityMap) -> Result<BendingConfiguration> {
    let mut sagitta = vec![0.0; s.half_edges.len()];
    for (&(u, v), &transfer) in &plan.transfers {
        let cap = caps.get(&(u, v)).ok_or_else(|| {
            BendError::Inconsistent(format!("transfer on pair ({u}, {v}) without capacity"))
        })?;
        if transfer > cap.total + 1e-9 {
            return Err(BendError::Inconsistent(format!(
                "transfer {transfer} exceeds capacity {} on ({u}, {v})",
                cap.total
            )));
        }
        for entry in &cap.entries {
            if entry.capacity <= 0.0 {
                continue;
            }
            let area = transfer * entry.capacity / cap.total;
            if area <= AREA_TOL {
                continue;
            }
            let e = entry.half_edge;
            let (a, b) = s.edge_points(e);
            let h = sagitta_for_area_capped(a.dist(&b), area, AREA_TOL, entry.max_sagitta)?;
            // bulge into the losing face u = positive sagitta on u's half-edge
            sagitta[e] = h;
            sagitta[s.half_edges[e].twin] = -h;
        }
    }
    let resulting = resulting_areas(s, &sagitta)?;
    Ok(BendingConfiguration { sagitta, resulting })
}

/// Realized area per face under the given per-half-edge sagittas.
pub fn resulting_areas(s: &Subdivision, sagitta: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(s.faces.len());
    for (f, face) in s.faces.iter().enumerate() {
        if f == s.outer_face {
            // unbounded face: bookkeeping area plus the signed segment
            // areas bulging out of it (negative sagitta = outward)
            let mut b = face.area;
            for &e in &face.boundary {
                let h = sagitta[e];
                if h != 0.0 {
                    let seg = segment_area(s.edge_length(e), h.abs())?;
                    b -= h.signum() * seg;
                }
            }
            out.push(b);
            continue;
        }
        let poly = s.face_polygon(f);
        // face_area_with_arcs takes outward-positive bends; our sagittas
        // are inward-positive per half-edge
        let bends: Vec<f64> = face.boundary.iter().map(|&e| -sagitta[e]).collect();
        out.push(face_area_with_arcs(&poly, &bends)?);
    }
    Ok(out)
}

/// Re-checks a configuration: pairwise arc non-crossing, skeleton
/// containment for every bent edge, and in strong mode the sign discipline
/// on incident edges. Returns violations as data.
pub fn verify(
    s: &Subdivision,
    cfg: &BendingConfiguration,
    mode: Mode,
    deltas: &[f64],
    skeletons: &[Option<SkeletonRegionSet>],
) -> Vec<Violation> {
    let mut out = Vec::new();
    let edges: Vec<EdgeId> = s.undirected_edges().collect();
    let arcs: Vec<ChordArc> = edges.iter().map(|&e| cfg.arc(s, e)).collect();
    // capacities tolerate GEOM_EPS of boundary penetration, so two arcs
    // tangent to the same skeleton arc from opposite sides may touch within
    // sqrt(2 * eps * r) of their shared vertex; the crossing check must not
    // flag that contact region
    let scale = edges
        .iter()
        .map(|&e| s.edge_length(e))
        .fold(0.0f64, f64::max);
    let touch_eps = 1e-4 * scale.max(1.0);
    for i in 0..arcs.len() {
        for j in i + 1..arcs.len() {
            if arcs_intersect_eps(&arcs[i], &arcs[j], touch_eps) {
                out.push(Violation {
                    entity: format!("edges {} and {}", edges[i], edges[j]),
                    rule: "arcs must not cross".into(),
                });
            }
        }
    }
    for &e in &edges {
        let t = s.half_edges[e].twin;
        // orient toward the losing side: positive sagitta on a half-edge
        // means its own face loses the segment
        let (loser_he, loser) = if cfg.sagitta[e] > 0.0 {
            (e, s.half_edges[e].face)
        } else if cfg.sagitta[t] > 0.0 {
            (t, s.half_edges[t].face)
        } else {
            continue;
        };
        if let Some(skel) = skeletons.get(loser).and_then(|k| k.as_ref()) {
            let idx = s.faces[loser]
                .boundary
                .iter()
                .position(|&b| b == loser_he)
                .expect("edge on boundary");
            let arc = cfg.arc(s, loser_he);
            // capacities bisect max sagitta down to GEOM_EPS, so a saturated
            // arc may graze the region boundary by that much; give the
            // re-check a wider band so boundary-tight arcs are not flagged
            if !arc_in_polygon_eps(&arc, &skel.regions[idx], 100.0 * GEOM_EPS) {
                out.push(Violation {
                    entity: format!("edge {loser_he}"),
                    rule: "arc must stay in its skeleton region".into(),
                });
            }
        }
    }
    if mode == Mode::Strong {
        for &e in &edges {
            if cfg.sagitta[e] == 0.0 {
                continue;
            }
            let t = s.half_edges[e].twin;
            let (fu, fv) = (s.half_edges[e].face, s.half_edges[t].face);
            if s.is_sea(fu) || s.is_sea(fv) || fu == s.outer_face || fv == s.outer_face {
                continue;
            }
            if deltas[fu] * deltas[fv] > 0.0 {
                out.push(Violation {
                    entity: format!("edge {e}"),
                    rule: "edges between same-sign faces must stay straight".into(),
                });
                continue;
            }
            // the loser (positive-sagitta side) must not be a grower, and
            // symmetrically the gainer must not be a shrinker
            let (loser, gainer) = if cfg.sagitta[e] > 0.0 { (fu, fv) } else { (fv, fu) };
            if deltas[loser] > 0.0 {
                out.push(Violation {
                    entity: format!("edge {e}"),
                    rule: "growing face has an inward-bent edge".into(),
                });
            }
            if deltas[gainer] < 0.0 {
                out.push(Violation {
                    entity: format!("edge {e}"),
                    rule: "shrinking face has an outward-bent edge".into(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{build_network, extract_transfers, max_flow};
    use crate::geometry::Point;
    use crate::skeleton::{edge_capacities, face_skeletons, EdgeCapacity, EdgeCapacityEntry};
    use crate::subdivision::{build_from_polygons, dual_graph, FaceId, InputFace};

    fn square(name: &str, x0: f64, y0: f64, size: f64, w: f64) -> InputFace {
        InputFace {
            name: name.into(),
            ring: vec![
                Point::new(x0, y0),
                Point::new(x0 + size, y0),
                Point::new(x0 + size, y0 + size),
                Point::new(x0, y0 + size),
            ],
            weight: Some(w),
        }
    }

    fn grid(rows: usize, cols: usize, weights: &[f64]) -> Subdivision {
        let faces: Vec<InputFace> = (0..rows * cols)
            .map(|i| {
                let (r, c) = (i / cols, i % cols);
                square(&format!("f{i}"), c as f64, r as f64, 1.0, weights[i])
            })
            .collect();
        build_from_polygons(&faces, 1e-9).unwrap()
    }

    fn pipeline(s: &Subdivision, weights: &[f64], mode: Mode) -> (BendingConfiguration, Vec<f64>) {
        let targets = crate::subdivision::normalize_weights(s, weights).unwrap();
        let g = dual_graph(s);
        let skeletons = face_skeletons(s).unwrap();
        let caps = edge_capacities(s, &g, &skeletons, mode, &targets.delta, 1.0);
        let n = build_network(&g, &targets.delta, &caps, None).unwrap();
        let (flow, _) = max_flow(&n);
        let plan = extract_transfers(&n, &flow);
        let cfg = realize(s, &plan, &caps).unwrap();
        (cfg, targets.delta)
    }

    #[test]
    fn empty_plan_is_identity() {
        let s = grid(1, 2, &[1.0, 1.0]);
        let plan = TransferPlan::default();
        let caps = CapacityMap::new();
        let cfg = realize(&s, &plan, &caps).unwrap();
        assert!(cfg.sagitta.iter().all(|&h| h == 0.0));
        for (f, face) in s.faces.iter().enumerate() {
            assert!((cfg.resulting[f] - face.area).abs() < 1e-12);
        }
    }

    #[test]
    fn single_shared_edge_moves_exact_area() {
        // two 2x2 squares; ship 0.4 from the left into the right
        let faces = vec![
            square("l", 0.0, 0.0, 2.0, 1.0),
            square("r", 2.0, 0.0, 2.0, 1.0),
        ];
        let s = build_from_polygons(&faces, 1e-9).unwrap();
        let shared: Vec<EdgeId> = s
            .undirected_edges()
            .filter(|&e| {
                let t = s.half_edges[e].twin;
                s.half_edges[e].face != s.outer_face && s.half_edges[t].face != s.outer_face
            })
            .collect();
        assert_eq!(shared.len(), 1);
        let he = if s.half_edges[shared[0]].face == 0 {
            shared[0]
        } else {
            s.half_edges[shared[0]].twin
        };
        let transfer = 0.4;
        let mut caps = CapacityMap::new();
        caps.insert(
            (0, 1),
            EdgeCapacity {
                from: 0,
                to: 1,
                entries: vec![EdgeCapacityEntry {
                    half_edge: he,
                    max_sagitta: 1.0,
                    capacity: 1.0,
                }],
                total: 1.0,
            },
        );
        let mut plan = TransferPlan::default();
        plan.transfers.insert((0, 1), transfer);
        let cfg = realize(&s, &plan, &caps).unwrap();
        assert!((cfg.resulting[0] - (4.0 - transfer)).abs() < 1e-9);
        assert!((cfg.resulting[1] - (4.0 + transfer)).abs() < 1e-9);
    }

    #[test]
    fn proportional_split_over_two_edges() {
        // two faces sharing a border subdivided at (2,1): edge capacities
        // c and 3c, transfer 2c -> per-edge areas 0.5c and 1.5c
        let left = InputFace {
            name: "l".into(),
            ring: vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 1.0),
                Point::new(2.0, 2.0),
                Point::new(0.0, 2.0),
            ],
            weight: Some(1.0),
        };
        let right = InputFace {
            name: "r".into(),
            ring: vec![
                Point::new(2.0, 0.0),
                Point::new(4.0, 0.0),
                Point::new(4.0, 2.0),
                Point::new(2.0, 2.0),
                Point::new(2.0, 1.0),
            ],
            weight: Some(1.0),
        };
        let s = build_from_polygons(&[left, right], 1e-9).unwrap();
        let shared: Vec<EdgeId> = (0..s.half_edges.len())
            .filter(|&e| s.half_edges[e].face == 0 && s.half_edges[s.half_edges[e].twin].face == 1)
            .collect();
        assert_eq!(shared.len(), 2);
        let c = 0.08;
        let mut caps = CapacityMap::new();
        caps.insert(
            (0, 1),
            EdgeCapacity {
                from: 0,
                to: 1,
                entries: vec![
                    EdgeCapacityEntry {
                        half_edge: shared[0],
                        max_sagitta: 0.5,
                        capacity: c,
                    },
                    EdgeCapacityEntry {
                        half_edge: shared[1],
                        max_sagitta: 0.5,
                        capacity: 3.0 * c,
                    },
                ],
                total: 4.0 * c,
            },
        );
        let mut plan = TransferPlan::default();
        plan.transfers.insert((0, 1), 2.0 * c);
        let cfg = realize(&s, &plan, &caps).unwrap();
        let area_of = |e: EdgeId| {
            segment_area(s.edge_length(e), cfg.sagitta[e].abs()).unwrap()
        };
        assert!((area_of(shared[0]) - 0.5 * c).abs() < 1e-9);
        assert!((area_of(shared[1]) - 1.5 * c).abs() < 1e-9);
        assert!((cfg.resulting[0] - (4.0 - 2.0 * c)).abs() < 1e-9);
        assert!((cfg.resulting[1] - (4.0 + 2.0 * c)).abs() < 1e-9);
    }

    #[test]
    fn areas_conserved_on_grid_pipeline() {
        let weights = [3.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0];
        let s = grid(3, 3, &weights);
        let (cfg, deltas) = pipeline(&s, &weights, Mode::Weak);
        let before: f64 = s.faces.iter().map(|f| f.area).sum();
        let after: f64 = cfg.resulting.iter().sum();
        assert!((before - after).abs() < 1e-9 * before.max(1.0));
        // every constrained face moved toward its target (or stayed)
        for f in s.constrained_faces() {
            let moved = cfg.resulting[f] - s.faces[f].area;
            if deltas[f] != 0.0 {
                assert!(moved * deltas[f] >= -1e-9, "face {f} moved the wrong way");
            }
        }
        let skeletons = face_skeletons(&s).unwrap();
        let violations = verify(&s, &cfg, Mode::Weak, &deltas, &skeletons);
        assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn dense_grid_sampling_matches_resulting_areas() {
        // 3x3 grid of unit squares, a few interior edges bent by hand;
        // oracle: classify a dense lattice of sample points
        let weights = [1.0; 9];
        let s = grid(3, 3, &weights);
        let mut sagitta = vec![0.0; s.half_edges.len()];
        // pick three interior undirected edges deterministically
        let interior: Vec<EdgeId> = s
            .undirected_edges()
            .filter(|&e| {
                let t = s.half_edges[e].twin;
                s.half_edges[e].face != s.outer_face && s.half_edges[t].face != s.outer_face
            })
            .collect();
        let hs = [0.12, -0.2, 0.17];
        for (k, &e) in interior.iter().enumerate().take(3) {
            sagitta[e] = hs[k];
            sagitta[s.half_edges[e].twin] = -hs[k];
        }
        let b = resulting_areas(&s, &sagitta).unwrap();

        // point-in-bent-face test: start from the straight polygon, then
        // flip across each bent boundary edge's circular segment
        let in_face = |f: FaceId, p: Point| -> bool {
            let poly = s.face_polygon(f);
            let mut inside = poly.contains_point(p, 0.0);
            for &e in &s.faces[f].boundary {
                if sagitta[e] == 0.0 {
                    continue;
                }
                let arc = ChordArc::new(s.edge_points(e).0, s.edge_points(e).1, sagitta[e]);
                let (a, bb) = (arc.a, arc.b);
                let on_left = crate::geometry::cross(a, bb, p) > 0.0;
                let center = arc.center();
                let in_circle = center.dist(&p) < arc.radius();
                // segment between chord and arc, on the sagitta side
                let in_segment = in_circle && (on_left == (sagitta[e] > 0.0));
                if in_segment {
                    // positive sagitta bulges into f: those points leave f
                    inside = sagitta[e] < 0.0;
                }
            }
            inside
        };
        let n = 900; // 900^2 samples over [0,3]^2
        let step = 3.0 / n as f64;
        let mut counts = vec![0usize; s.faces.len()];
        for i in 0..n {
            for j in 0..n {
                let p = Point::new((i as f64 + 0.5) * step, (j as f64 + 0.5) * step);
                for f in 0..s.faces.len() {
                    if f != s.outer_face && in_face(f, p) {
                        counts[f] += 1;
                        break;
                    }
                }
            }
        }
        let cell = step * step;
        for f in 0..s.faces.len() {
            if f == s.outer_face {
                continue;
            }
            let est = counts[f] as f64 * cell;
            assert!(
                (est - b[f]).abs() < 8e-3,
                "face {f}: sampled {est} vs computed {}",
                b[f]
            );
        }
    }

    #[test]
    fn oversized_sagitta_caught_by_verify() {
        let weights = [1.0, 1.0];
        let s = grid(1, 2, &weights);
        let interior: Vec<EdgeId> = s
            .undirected_edges()
            .filter(|&e| {
                let t = s.half_edges[e].twin;
                s.half_edges[e].face != s.outer_face && s.half_edges[t].face != s.outer_face
            })
            .collect();
        let e = interior[0];
        let mut sagitta = vec![0.0; s.half_edges.len()];
        // a bulge deeper than the unit square can absorb
        sagitta[e] = 0.9;
        sagitta[s.half_edges[e].twin] = -0.9;
        let resulting = resulting_areas(&s, &sagitta).unwrap();
        let cfg = BendingConfiguration { sagitta, resulting };
        let skeletons = face_skeletons(&s).unwrap();
        let v = verify(&s, &cfg, Mode::Weak, &[0.0; 3], &skeletons);
        assert!(
            v.iter().any(|x| x.rule.contains("skeleton region")),
            "{v:?}"
        );
    }

    #[test]
    fn weak_routing_violates_strong_rules_on_same_sign_chain() {
        // 1x3 chain with deltas (+, +, -): weak routing must pass area from
        // f2 through f1 into f0, bending the same-sign edge f0|f1
        let weights = [2.0, 1.5, 0.5];
        let s = grid(1, 3, &weights);
        let (cfg, deltas) = pipeline(&s, &weights, Mode::Weak);
        assert!(deltas[0] > 0.0 && deltas[1] > 0.0 && deltas[2] < 0.0);
        let skeletons = face_skeletons(&s).unwrap();
        let weak = verify(&s, &cfg, Mode::Weak, &deltas, &skeletons);
        assert!(weak.is_empty(), "{weak:?}");
        let strong = verify(&s, &cfg, Mode::Strong, &deltas, &skeletons);
        assert!(
            strong.iter().any(|v| v.rule.contains("same-sign")),
            "{strong:?}"
        );
    }

    #[test]
    fn realize_is_deterministic() {
        let weights = [3.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0];
        let s = grid(3, 3, &weights);
        let (a, _) = pipeline(&s, &weights, Mode::Weak);
        let (b, _) = pipeline(&s, &weights, Mode::Weak);
        assert_eq!(a.sagitta, b.sagitta);
        assert_eq!(a.resulting, b.resulting);
    }

    #[test]
    fn exchange_identity_on_pipeline() {
        let weights = [3.0, 1.0, 1.0, 1.0];
        let s = grid(2, 2, &weights);
        let targets = crate::subdivision::normalize_weights(&s, &weights).unwrap();
        let g = dual_graph(&s);
        let skeletons = face_skeletons(&s).unwrap();
        let caps = edge_capacities(&s, &g, &skeletons, Mode::Weak, &targets.delta, 1.0);
        let n = build_network(&g, &targets.delta, &caps, None).unwrap();
        let (flow, _) = max_flow(&n);
        let plan = extract_transfers(&n, &flow);
        let cfg = realize(&s, &plan, &caps).unwrap();
        let mut net = vec![0.0; s.faces.len()];
        for (&(u, v), &t) in &plan.transfers {
            net[u] -= t;
            net[v] += t;
        }
        for f in 0..s.faces.len() {
            let moved = cfg.resulting[f] - s.faces[f].area;
            assert!(
                (moved - net[f]).abs() < 1e-9,
                "face {f}: moved {moved} vs net transfer {}",
                net[f]
            );
        }
    }
}
