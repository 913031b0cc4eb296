//! Area-diffusion flow network over the dual graph.
//!
//! Faces that must shed area (delta < 0) are sources, faces that must gain
//! area (delta > 0) are sinks, and dual arcs carry the skeleton-derived
//! capacities of the losing face. A maximum flow of value D (the total
//! demand) certifies that every target area is reachable; anything less
//! leaves residual cartographic error.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::skeleton::CapacityMap;
use crate::subdivision::{DualGraph, FaceId};

/// Residual capacities below this are treated as exhausted.
pub const FLOW_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("flow configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcKind {
    /// Dual arc between adjacent faces, capacity from the loser's skeleton.
    Dual(FaceId, FaceId),
    /// Supply arc: a shrinking face must shed up to -delta.
    Supply(FaceId),
    /// Demand arc: a growing face can absorb up to +delta.
    Demand(FaceId),
}

#[derive(Debug, Clone, Copy)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
    pub kind: ArcKind,
}

/// Multiple-source multiple-sink network with a super source/sink attached.
///
/// Node layout: one node per face (node id == face id), then the super
/// source and super sink. Supply arcs run super source -> shrinking face,
/// demand arcs run growing face -> super sink, so the per-face auxiliary
/// terminals coincide with the two super nodes.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub node_count: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<FlowArc>,
    /// Faces with a supply arc (delta < 0).
    pub sources: Vec<FaceId>,
    /// Faces with a demand arc (delta > 0).
    pub sinks: Vec<FaceId>,
    /// Total demand D = sum of positive deltas.
    pub demand: f64,
}

/// Builds the flow network from the dual graph, the per-face area deltas
/// and the capacity map. `sea_slack`, when set, adds unbounded supply and
/// demand arcs to the given face so area may leak to or from the sea.
pub fn build_network(
    g: &DualGraph,
    deltas: &[f64],
    caps: &CapacityMap,
    sea_slack: Option<FaceId>,
) -> Result<FlowNetwork> {
    if deltas.len() != g.n_nodes {
        return Err(FlowError::Config(format!(
            "{} deltas for {} dual nodes",
            deltas.len(),
            g.n_nodes
        )));
    }
    let supply: f64 = deltas.iter().filter(|d| **d < 0.0).map(|d| -d).sum();
    let demand: f64 = deltas.iter().filter(|d| **d > 0.0).sum();
    let scale = supply.max(demand).max(1.0);
    if (supply - demand).abs() > 1e-9 * scale {
        return Err(FlowError::Config(format!(
            "supply {supply} and demand {demand} do not balance"
        )));
    }

    let source = g.n_nodes;
    let sink = g.n_nodes + 1;
    let mut arcs = Vec::new();
    for &(u, v) in g.adjacency.keys() {
        let cap = caps.get(&(u, v)).map(|c| c.total).unwrap_or(0.0);
        if cap > 0.0 {
            arcs.push(FlowArc {
                from: u,
                to: v,
                capacity: cap,
                kind: ArcKind::Dual(u, v),
            });
        }
    }
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for (f, &d) in deltas.iter().enumerate() {
        if d < 0.0 {
            arcs.push(FlowArc {
                from: source,
                to: f,
                capacity: -d,
                kind: ArcKind::Supply(f),
            });
            sources.push(f);
        } else if d > 0.0 {
            arcs.push(FlowArc {
                from: f,
                to: sink,
                capacity: d,
                kind: ArcKind::Demand(f),
            });
            sinks.push(f);
        }
    }
    if let Some(sea) = sea_slack {
        arcs.push(FlowArc {
            from: source,
            to: sea,
            capacity: f64::INFINITY,
            kind: ArcKind::Supply(sea),
        });
        arcs.push(FlowArc {
            from: sea,
            to: sink,
            capacity: f64::INFINITY,
            kind: ArcKind::Demand(sea),
        });
    }
    Ok(FlowNetwork {
        node_count: g.n_nodes + 2,
        source,
        sink,
        arcs,
        sources,
        sinks,
        demand,
    })
}

/// Solves the network exactly; returns the per-arc flow (indexed like
/// `n.arcs`) and the flow value |f|.
pub fn max_flow(n: &FlowNetwork) -> (Vec<f64>, f64) {
    let arcs: Vec<(usize, usize, f64)> =
        n.arcs.iter().map(|a| (a.from, a.to, a.capacity)).collect();
    dinic(n.node_count, &arcs, n.source, n.sink)
}

/// Dinic blocking-flow max-flow on real capacities.
pub fn dinic(
    node_count: usize,
    arcs: &[(usize, usize, f64)],
    s: usize,
    t: usize,
) -> (Vec<f64>, f64) {
    // residual graph: forward edge 2i, backward edge 2i+1
    let mut cap: Vec<f64> = Vec::with_capacity(arcs.len() * 2);
    let mut head: Vec<usize> = Vec::with_capacity(arcs.len() * 2);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    for &(u, v, c) in arcs {
        adj[u].push(head.len());
        head.push(v);
        cap.push(c);
        adj[v].push(head.len());
        head.push(u);
        cap.push(0.0);
    }

    let mut value = 0.0;
    loop {
        // BFS level graph
        let mut level = vec![usize::MAX; node_count];
        level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &adj[u] {
                let v = head[e];
                if cap[e] > FLOW_EPS && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[t] == usize::MAX {
            break;
        }
        // DFS blocking flow with iteration pointers
        let mut it = vec![0usize; node_count];
        fn push(
            u: usize,
            t: usize,
            limit: f64,
            adj: &[Vec<usize>],
            head: &[usize],
            cap: &mut [f64],
            level: &[usize],
            it: &mut [usize],
        ) -> f64 {
            if u == t {
                return limit;
            }
            while it[u] < adj[u].len() {
                let e = adj[u][it[u]];
                let v = head[e];
                if cap[e] > FLOW_EPS && level[v] == level[u] + 1 {
                    let got = push(v, t, limit.min(cap[e]), adj, head, cap, level, it);
                    if got > FLOW_EPS {
                        cap[e] -= got;
                        cap[e ^ 1] += got;
                        return got;
                    }
                }
                it[u] += 1;
            }
            0.0
        }
        loop {
            let got = push(s, t, f64::INFINITY, &adj, &head, &mut cap, &level, &mut it);
            if got <= FLOW_EPS {
                break;
            }
            value += got;
        }
    }

    let flow: Vec<f64> = arcs
        .iter()
        .enumerate()
        .map(|(i, &(_, _, c))| (c - cap[2 * i]).max(0.0))
        .collect();
    (flow, value)
}

/// Net area transfers per unordered face pair; the key (u, v) means area
/// moves from u to v, so every stored amount is positive.
#[derive(Debug, Clone, Default)]
pub struct TransferPlan {
    pub transfers: BTreeMap<(FaceId, FaceId), f64>,
}

/// Cancels antiparallel dual flows into one net direction per face pair.
pub fn extract_transfers(n: &FlowNetwork, flow: &[f64]) -> TransferPlan {
    let mut net: BTreeMap<(FaceId, FaceId), f64> = BTreeMap::new();
    for (arc, &f) in n.arcs.iter().zip(flow) {
        if let ArcKind::Dual(u, v) = arc.kind {
            if u < v {
                *net.entry((u, v)).or_insert(0.0) += f;
            } else {
                *net.entry((v, u)).or_insert(0.0) -= f;
            }
        }
    }
    let mut transfers = BTreeMap::new();
    for ((u, v), f) in net {
        if f > FLOW_EPS {
            transfers.insert((u, v), f);
        } else if f < -FLOW_EPS {
            transfers.insert((v, u), -f);
        }
    }
    TransferPlan { transfers }
}

/// Diagnostics dump of the network and an optional solved flow.
pub fn network_json(n: &FlowNetwork, flow: Option<&[f64]>) -> serde_json::Value {
    let arcs: Vec<serde_json::Value> = n
        .arcs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let kind = match a.kind {
                ArcKind::Dual(u, v) => format!("dual {u}->{v}"),
                ArcKind::Supply(f) => format!("supply {f}"),
                ArcKind::Demand(f) => format!("demand {f}"),
            };
            let mut obj = serde_json::json!({
                "from": a.from,
                "to": a.to,
                "capacity": a.capacity,
                "kind": kind,
            });
            if let Some(flow) = flow {
                obj["flow"] = serde_json::json!(flow[i]);
            }
            obj
        })
        .collect();
    serde_json::json!({
        "nodes": n.node_count,
        "super_source": n.source,
        "super_sink": n.sink,
        "sources": n.sources,
        "sinks": n.sinks,
        "demand": n.demand,
        "arcs": arcs,
    })
}
