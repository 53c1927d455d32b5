use thiserror::Error;

use crate::graph::VertexId;

/// Crate-wide error type. Variants are grouped by the subsystem that
/// raises them first, but several (window errors in particular) are shared.
#[derive(Debug, Error)]
pub enum Error {
    // ---- graph construction and evaluation ----
    #[error("vertex {0} is not part of the graph")]
    UnknownVertex(VertexId),
    #[error("vertex {0} was declared twice")]
    DuplicateVertex(VertexId),
    #[error("edge {0}--{1} was declared twice")]
    DuplicateEdge(VertexId, VertexId),
    #[error("self loop at {0}: edge weights must have zero diagonal")]
    SelfLoop(VertexId),
    #[error("vertex {0} has non-positive measure")]
    NonPositiveMeasure(VertexId),
    #[error("edge {0}--{1} has negative weight")]
    NegativeEdgeWeight(VertexId, VertexId),
    #[error("field has no value at vertex {0}")]
    FieldUndefined(VertexId),
    #[error("field was built for a graph with {field} vertices, got one with {graph}")]
    FieldMismatch { field: usize, graph: usize },
    #[error("vertex {vertex} has a neighbor {} outside the evaluation window",
            .neighbor.map(|n| n.to_string()).unwrap_or_else(|| "beyond the generated window".into()))]
    NeighborOutsideWindow {
        vertex: VertexId,
        neighbor: Option<VertexId>,
    },
    #[error("absolute sum for the formal Laplacian at {0} is not certified finite (declared tail bound {1})")]
    FormalDomainViolation(VertexId, f64),
    #[error("exponent p = {0} is below 1; opt into quasi-norm mode for p in (0,1)")]
    InvalidExponent(f64),

    // ---- metrics ----
    #[error("window is disconnected: {0} is unreachable from the base point")]
    DisconnectedWindow(VertexId),
    #[error("operation requires a path metric with stored edge lengths")]
    NotAPathMetric,
    #[error("minimal measure is zero on isolated vertices: {0:?}")]
    ZeroRow(Vec<VertexId>),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("bad radii: need 0 < r < R, got r = {r}, R = {big_r}")]
    BadRadii { r: f64, big_r: f64 },

    // ---- potential theory ----
    #[error("singular system: a component of the region touches no boundary vertex (near {0})")]
    SingularSystem(VertexId),
    #[error("vertex {0} lies outside the requested set")]
    VertexOutsideSet(VertexId),
    #[error("time must be non-negative, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid exhaustion: {0}")]
    InvalidExhaustion(String),
    #[error("linear solve failed: {0}")]
    SolverFailure(String),

    // ---- liouville audits ----
    #[error("function is not subharmonic on the window (worst residual {0} at {1})")]
    NotSubharmonic(f64, VertexId),
    #[error("function must be non-negative: value {0} at {1}")]
    NegativeFunction(f64, VertexId),
    #[error("metric is not intrinsic on the window (max ratio {0})")]
    NotIntrinsic(f64),
    #[error("metric failed the compatibility certification: {0}")]
    NotCompatible(String),
    #[error("radii violate the jump-size gap: need r < R - 3s, got r = {r}, R = {big_r}, s = {s}")]
    RadiiViolateJumpGap { r: f64, big_r: f64, s: f64 },
    #[error("support of the test function escapes the window near {0}")]
    SupportEscapesWindow(VertexId),
    #[error("bad exponent: {0}")]
    BadExponent(String),

    // ---- Hadamard targets ----
    #[error("vertex {0} is isolated: the random walk measure is undefined")]
    IsolatedVertex(VertexId),
    #[error("empty measure has no barycenter")]
    EmptyMeasure,
    #[error("map is not harmonic on the region (max defect {0:.3e})")]
    NotHarmonicMap(f64),
    #[error("point does not belong to the target space: {0}")]
    PointOutsideSpace(String),
    #[error("harmonic-map relaxation hit the iteration cap {iterations} (last displacement {displacement:.3e})")]
    MaxItersExceeded {
        iterations: usize,
        displacement: f64,
        best: Box<crate::hmap::VertexMap>,
    },

    // ---- parsing / io ----
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
