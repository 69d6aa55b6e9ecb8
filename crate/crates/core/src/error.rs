use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("closure returned a non-finite value at node {node} (u = {coords:?})")]
    NonFiniteSample { node: usize, coords: Vec<f64> },

    #[error("axis {axis} has {points} points; order {order} stencils need at least {required}")]
    ChartTooCoarse {
        axis: usize,
        points: usize,
        order: usize,
        required: usize,
    },

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("declared symmetry ({a},{b}) violated at node {node} by {defect:e}")]
    AsymmetricSample {
        node: usize,
        a: usize,
        b: usize,
        defect: f64,
    },

    #[error("degenerate metric at node {node} (u = {coords:?}): |det| = {det:e} below floor {floor:e}")]
    DegenerateMetric {
        node: usize,
        coords: Vec<f64>,
        det: f64,
        floor: f64,
    },

    #[error("combination ({lambda1}, {lambda2}) is degenerate at node {node}")]
    DegenerateCombination { lambda1: f64, lambda2: f64, node: usize },

    #[error("metrics live on different charts")]
    ChartMismatch,

    #[error("eigensolve failed at node {0}")]
    EigensolveFailure(usize),

    #[error("metric is not diagonal at node {node}: off-diagonal entry {value:e}")]
    NotDiagonal { node: usize, value: f64 },

    #[error("chart coordinates are not flat coordinates of g2 (connection residual {residual:e} > {tol:e})")]
    NotFlatCoordinates { residual: f64, tol: f64 },

    #[error("sign mismatch at node {node}, axis {axis}: eps * g^ii = {value:e} is not positive")]
    SignMismatch { node: usize, axis: usize, value: f64 },

    #[error("profile f^{axis} vanishes or changes sign on its range")]
    SignChange { axis: usize },

    #[error("profile f^{axis}(u^{axis} - s) changes sign over the dressing range")]
    SignChangeOnRange { axis: usize },

    #[error("Lame residuals too large: {0}")]
    ResidualsTooLarge(String),

    #[error("collocation matrix is ill-conditioned (estimated condition number {0:e})")]
    IllConditioned(f64),

    #[error("kernel mass beyond the truncation length is {tail:e} (limit {limit:e})")]
    TruncationInsufficient { tail: f64, limit: f64 },

    #[error("singular collocation matrix")]
    SingularSystem,

    #[error("b vanishes at node {node}: |b| = {value:e}")]
    VanishingB { node: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expression error: {0}")]
    Expression(String),
}

pub type Result<T> = std::result::Result<T, Error>;
