//! Command-line driver: build → skeleton → flow → bend → metrics → render.
//!
//! Exit codes: 0 success, 2 parse/topology errors in the input, 3 internal
//! invariant violations (a bug, not a user error).

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bend::{realize, verify, BendingConfiguration};
use crate::flow::{build_network, extract_transfers, max_flow, network_json, FlowNetwork};
use crate::hardness;
use crate::io;
use crate::metrics::{face_report, summarize, CartogramReport};
use crate::skeleton::{edge_capacities, face_skeletons, Mode, SkeletonRegionSet};
use crate::subdivision::{
    build_from_polygons, dual_graph, merge_degree2, normalize_weights, Subdivision, Violation,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Input(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) => 2,
            PipelineError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub mode: Mode,
    pub max_sagitta_ratio: f64,
    pub sea_slack: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            mode: Mode::Weak,
            max_sagitta_ratio: 0.95,
            sea_slack: false,
        }
    }
}

/// Everything downstream consumers might want to inspect after a run.
pub struct PipelineOutput {
    pub cfg: BendingConfiguration,
    pub report: CartogramReport,
    pub deltas: Vec<f64>,
    pub skeletons: Vec<Option<SkeletonRegionSet>>,
    pub network: FlowNetwork,
    pub flows: Vec<f64>,
    pub flow_value: f64,
    pub demand: f64,
    pub violations: Vec<Violation>,
}

/// Runs the full heuristic on a built subdivision. `weights` are the raw
/// per-constrained-face weights in face-id order.
pub fn run_pipeline(
    s: &Subdivision,
    weights: &[f64],
    opts: &PipelineOptions,
) -> std::result::Result<PipelineOutput, PipelineError> {
    let targets = normalize_weights(s, weights).map_err(|e| PipelineError::Input(e.to_string()))?;
    let g = dual_graph(s);
    let skeletons = face_skeletons(s).map_err(|e| PipelineError::Internal(e.to_string()))?;
    let caps = edge_capacities(s, &g, &skeletons, opts.mode, &targets.delta, opts.max_sagitta_ratio);
    let slack = if opts.sea_slack { s.sea_face } else { None };
    let network = build_network(&g, &targets.delta, &caps, slack)
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    let (flows, flow_value) = max_flow(&network);
    let plan = extract_transfers(&network, &flows);
    let cfg = realize(s, &plan, &caps).map_err(|e| PipelineError::Internal(e.to_string()))?;
    let violations = verify(s, &cfg, opts.mode, &targets.delta, &skeletons);
    let rows: Vec<_> = s
        .constrained_faces()
        .map(|f| {
            face_report(
                &s.faces[f].name,
                s.faces[f].area,
                targets.target[f].expect("constrained face has a target"),
                cfg.resulting[f],
            )
        })
        .collect();
    let demand = network.demand;
    let aggregates = summarize(&rows, flow_value, demand);
    Ok(PipelineOutput {
        cfg,
        report: CartogramReport {
            faces: rows,
            aggregates,
        },
        deltas: targets.delta,
        skeletons,
        network,
        flows,
        flow_value,
        demand,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Weak,
    Strong,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Weak => Mode::Weak,
            ModeArg::Strong => Mode::Strong,
        }
    }
}

#[derive(Parser)]
#[command(name = "cartogram", about = "Circular-arc cartograms on planar subdivisions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a bending configuration and write the SVG + report.
    Build {
        /// Subdivision document (JSON).
        input: PathBuf,
        /// Separate weight table (JSON object or CSV); overrides inline weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "weak")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1e-9)]
        snap_eps: f64,
        /// Geometric tolerance for collinearity in --merge-degree2.
        #[arg(long, default_value_t = 1e-9)]
        geom_eps: f64,
        #[arg(long, default_value_t = 0.95)]
        max_sagitta_ratio: f64,
        /// Drop collinear degree-2 vertices before running.
        #[arg(long)]
        merge_degree2: bool,
        /// Let the sea absorb/supply unlimited area.
        #[arg(long)]
        sea_slack: bool,
        #[arg(long)]
        out_svg: Option<PathBuf>,
        #[arg(long)]
        out_report: Option<PathBuf>,
        /// Dump the flow network (with flows) as JSON.
        #[arg(long)]
        dump_network: Option<PathBuf>,
    },
    /// Render one face's straight skeleton and maximal arcs.
    Skeleton {
        input: PathBuf,
        /// Face name to illustrate.
        face: String,
        #[arg(long, default_value_t = 1e-9)]
        snap_eps: f64,
        #[arg(long, default_value_t = 0.95)]
        max_sagitta_ratio: f64,
        #[arg(long)]
        out_svg: Option<PathBuf>,
    },
    /// Compile a monotone 3-SAT formula into a gadget instance.
    Gadget {
        /// Formula file: one clause per line, three signed 1-based literals.
        formula: PathBuf,
        /// Output subdivision document.
        #[arg(long)]
        out: PathBuf,
        /// Optional separate weight (target) table.
        #[arg(long)]
        out_weights: Option<PathBuf>,
    },
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &PathBuf) -> std::result::Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &PathBuf, bytes: &[u8]) -> std::result::Result<(), PipelineError> {
    std::fs::write(path, bytes)
        .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> std::result::Result<(), PipelineError> {
    match cli.cmd {
        Command::Build {
            input,
            weights,
            mode,
            snap_eps,
            geom_eps,
            max_sagitta_ratio,
            merge_degree2: merge,
            sea_slack,
            out_svg,
            out_report,
            dump_network,
        } => {
            if !(snap_eps >= 0.0 && geom_eps > 0.0 && max_sagitta_ratio > 0.0) {
                return Err(PipelineError::Input("tolerances must be positive".into()));
            }
            let doc = io::parse_subdivision(&read(&input)?)
                .map_err(|e| PipelineError::Input(e.to_string()))?;
            let mut faces = io::document_to_input_faces(&doc);
            if let Some(wpath) = weights {
                let table = io::parse_weights(&read(&wpath)?)
                    .map_err(|e| PipelineError::Input(e.to_string()))?;
                for (name, w) in &table {
                    let face = faces.iter_mut().find(|f| &f.name == name).ok_or_else(|| {
                        PipelineError::Input(format!("weights: unknown face '{name}'"))
                    })?;
                    if face.weight.is_none() {
                        return Err(PipelineError::Input(format!(
                            "weights: face '{name}' is the sea and cannot take a weight"
                        )));
                    }
                    face.weight = Some(*w);
                }
            }
            let s = build_from_polygons(&faces, snap_eps)
                .map_err(|e| PipelineError::Input(e.to_string()))?;
            let s = if merge {
                merge_degree2(&s, geom_eps).map_err(|e| PipelineError::Input(e.to_string()))?
            } else {
                s
            };
            let raw: Vec<f64> = s
                .constrained_faces()
                .map(|f| {
                    s.faces[f].weight.ok_or_else(|| {
                        PipelineError::Input(format!(
                            "face '{}' has no weight (supply inline or via --weights)",
                            s.faces[f].name
                        ))
                    })
                })
                .collect::<std::result::Result<_, _>>()?;
            let opts = PipelineOptions {
                mode: mode.into(),
                max_sagitta_ratio,
                sea_slack,
            };
            let out = run_pipeline(&s, &raw, &opts)?;
            if !out.violations.is_empty() {
                for v in &out.violations {
                    eprintln!("violation: {}: {}", v.entity, v.rule);
                }
                return Err(PipelineError::Internal(format!(
                    "{} validity violations in the bending configuration",
                    out.violations.len()
                )));
            }
            if let Some(p) = dump_network {
                let json = network_json(&out.network, Some(&out.flows));
                let mut bytes = serde_json::to_vec_pretty(&json).expect("network json");
                bytes.push(b'\n');
                write(&p, &bytes)?;
            }
            if let Some(p) = out_report {
                write(&p, &io::write_report(&out.report))?;
            }
            if let Some(p) = out_svg {
                let svg = io::render_svg(&s, &out.cfg, &out.report, &io::RenderOptions::default());
                write(&p, svg.as_bytes())?;
            }
            let a = &out.report.aggregates;
            let rate = match a.average_success_rate {
                Some(r) => format!("{r:.4}"),
                None => "n/a".into(),
            };
            println!(
                "avg success rate {rate}, avg error {:.4}, total error {:.6}, flow {:.6}/{:.6}",
                a.average_error, a.total_error, a.flow_value, a.demand
            );
            Ok(())
        }
        Command::Skeleton {
            input,
            face,
            snap_eps,
            max_sagitta_ratio,
            out_svg,
        } => {
            let doc = io::parse_subdivision(&read(&input)?)
                .map_err(|e| PipelineError::Input(e.to_string()))?;
            let faces = io::document_to_input_faces(&doc);
            let s = build_from_polygons(&faces, snap_eps)
                .map_err(|e| PipelineError::Input(e.to_string()))?;
            let f = s
                .faces
                .iter()
                .position(|fc| fc.name == face)
                .filter(|&f| f != s.outer_face)
                .ok_or_else(|| PipelineError::Input(format!("unknown face '{face}'")))?;
            let poly = s.face_polygon(f);
            let skel = crate::skeleton::straight_skeleton(&poly)
                .map_err(|e| PipelineError::Internal(e.to_string()))?;
            let hs: Vec<f64> = (0..poly.len())
                .map(|i| {
                    let (a, b) = poly.edge(i);
                    let cap = crate::skeleton::sagitta_cap(a.dist(&b), max_sagitta_ratio);
                    crate::skeleton::max_sagitta(a, b, &skel.regions[i], cap)
                })
                .collect();
            let svg = io::render_skeleton_svg(&poly, &skel, &hs, &io::RenderOptions::default());
            match out_svg {
                Some(p) => write(&p, svg.as_bytes())?,
                None => print!("{svg}"),
            }
            Ok(())
        }
        Command::Gadget {
            formula,
            out,
            out_weights,
        } => {
            let text = read(&formula)?;
            let text = String::from_utf8(text)
                .map_err(|e| PipelineError::Input(format!("formula: {e}")))?;
            let f = hardness::parse_formula(&text)
                .map_err(|e| PipelineError::Input(e.to_string()))?;
            let instance =
                hardness::compile(&f).map_err(|e| PipelineError::Input(e.to_string()))?;
            let mut doc = io::document_from_subdivision(&instance.subdivision);
            // replace the builder's placeholder weights with the targets
            for face in &mut doc.faces {
                let f = instance
                    .subdivision
                    .faces
                    .iter()
                    .position(|sf| sf.name == face.name)
                    .expect("document face exists");
                face.weight = instance.targets[f];
            }
            write(&out, &io::serialize_subdivision(&doc))?;
            if let Some(p) = out_weights {
                let table: std::collections::BTreeMap<&str, f64> = doc
                    .faces
                    .iter()
                    .filter_map(|f| f.weight.map(|w| (f.name.as_str(), w)))
                    .collect();
                let mut bytes = serde_json::to_vec_pretty(&table).expect("weights json");
                bytes.push(b'\n');
                write(&p, &bytes)?;
            }
            println!(
                "{} faces, total target change {:.6}",
                doc.faces.len(),
                instance.target_change()
            );
            Ok(())
        }
    }
}
