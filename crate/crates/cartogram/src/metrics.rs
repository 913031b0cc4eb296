//! Per-face and aggregate quality measures.
//!
//! Success rate is the relative achieved area change (b - a) / delta,
//! undefined for faces that did not need to change; cartographic error is
//! |b - t| / t. Faces with target 0 (hardness gadgets) report absolute
//! error instead, since the relative formula divides by zero.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metrics domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// success rate and relative cartographic error of one face.
pub fn face_metrics(a: f64, t: f64, b: f64) -> Result<(Option<f64>, f64)> {
    if !(t > 0.0) {
        return Err(MetricsError::Domain(format!(
            "relative error needs a positive target, got {t}"
        )));
    }
    let delta = t - a;
    let success = if delta == 0.0 { None } else { Some((b - a) / delta) };
    Ok((success, (b - t).abs() / t))
}

/// One report row per constrained face.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FaceReport {
    pub name: String,
    pub area: f64,
    pub target: f64,
    pub resulting: f64,
    pub delta: f64,
    /// None when delta = 0 (no change demanded).
    pub success_rate: Option<f64>,
    pub error: f64,
    /// Absolute |b - t| for faces with target 0, where `error` would be
    /// undefined; None otherwise.
    pub absolute_error: Option<f64>,
}

/// Builds a row, falling back to absolute error for zero targets.
pub fn face_report(name: &str, a: f64, t: f64, b: f64) -> FaceReport {
    let delta = t - a;
    let (success, error, absolute) = if t > 0.0 {
        let (s, e) = face_metrics(a, t, b).expect("positive target");
        (s, e, None)
    } else {
        let s = if delta == 0.0 { None } else { Some((b - a) / delta) };
        (s, f64::NAN, Some((b - t).abs()))
    };
    FaceReport {
        name: name.to_string(),
        area: a,
        target: t,
        resulting: b,
        delta,
        success_rate: success,
        error,
        absolute_error: absolute,
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Aggregates {
    /// Unweighted mean over faces with a defined success rate.
    pub average_success_rate: Option<f64>,
    /// Unweighted mean relative error over faces with positive targets.
    pub average_error: f64,
    /// Sum of |b - t| over all constrained faces.
    pub total_error: f64,
    pub zero_error_faces: usize,
    pub flow_value: f64,
    pub demand: f64,
}

/// The full report: per-face rows plus aggregates.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CartogramReport {
    pub faces: Vec<FaceReport>,
    pub aggregates: Aggregates,
}

pub fn summarize(rows: &[FaceReport], flow_value: f64, demand: f64) -> Aggregates {
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.success_rate).collect();
    let average_success_rate = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    let relative: Vec<f64> = rows
        .iter()
        .filter(|r| r.target > 0.0)
        .map(|r| r.error)
        .collect();
    let average_error = if relative.is_empty() {
        0.0
    } else {
        relative.iter().sum::<f64>() / relative.len() as f64
    };
    let total_error: f64 = rows.iter().map(|r| (r.resulting - r.target).abs()).sum();
    let zero_error_faces = rows
        .iter()
        .filter(|r| (r.resulting - r.target).abs() <= 1e-9 * r.target.max(1.0))
        .count();
    Aggregates {
        average_success_rate,
        average_error,
        total_error,
        zero_error_faces,
        flow_value,
        demand,
    }
}
