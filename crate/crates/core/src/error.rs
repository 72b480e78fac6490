use thiserror::Error;

/// Errors raised by graph construction and the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DuplicateEdge: unordered pair ({0}, {1}) listed twice")]
    DuplicateEdge(usize, usize),
    #[error("NonpositiveWeight: edge ({0}, {1}) has weight {2}")]
    NonpositiveWeight(usize, usize, String),
    #[error("IsolatedVertex: vertex {0} has zero total weight")]
    IsolatedVertex(usize),
    #[error("MalformedEdge: {0}")]
    MalformedEdge(String),
    #[error("EmptyGraph: a graph needs at least one vertex")]
    EmptyGraph,
    #[error("EmptySet: the vertex set must be nonempty")]
    EmptySet,
    #[error("VertexOutOfRange: vertex {0} but the graph has {1} vertices")]
    VertexOutOfRange(usize, usize),
    #[error("SingletonFullGraph: lambda of the full set needs at least two vertices")]
    SingletonFullGraph,
    #[error("SingletonGraph: the operation needs at least two vertices")]
    SingletonGraph,
    #[error("Disconnected: the graph is not connected")]
    Disconnected,
    #[error("TooLargeForExact: {0} vertices exceeds the exact-enumeration limit of {1}")]
    TooLargeForExact(usize, usize),
    #[error("NegativeTime: t = {0}")]
    NegativeTime(f64),
    #[error("BadEpsilon: epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("KTooSmall: k = {0}, the construction needs k >= 3")]
    KTooSmall(u32),
    #[error("KTooLargeForDense: k = {0}, only k = 3 is materialised densely")]
    KTooLargeForDense(u32),
    #[error("KOutOfRange: k = {0} outside [{1}, {2}]")]
    KOutOfRange(u32, u32, u32),
    #[error("BadPieceLabel: l = {l} is not in [{lo}, {hi}]")]
    BadPieceLabel { l: u32, lo: u32, hi: u32 },
    #[error("PartialMap: {0}")]
    PartialMap(String),
    #[error("BadParameter: {0}")]
    BadParameter(String),
    #[error("BadInputFile: {0}")]
    BadInputFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
