use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("empty node name")]
    EmptyNodeName,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge between `{0}` and `{1}`")]
    DuplicateEdge(String, String),
    #[error("graph parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("index {index} is not an interior position of a path with {len} nodes")]
    NotInterior { index: usize, len: usize },
    #[error("graph is not a valid {kind}: {violation}")]
    Kind { kind: String, violation: String },
    #[error("circle mark on edge `{0}`-`{1}`: query needs a fully oriented graph")]
    CircleMark(String, String),
    #[error("invalid separation query: {0}")]
    InvalidQuery(String),
    #[error("graph has {nodes} nodes, above the exhaustive-search limit of {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("D-SEP undefined for adjacent pair `{0}`, `{1}`")]
    AdjacentPair(String, String),
    #[error("no edge between `{0}` and `{1}`")]
    MissingEdge(String, String),
    #[error("edge `{0}`-`{1}` is not a directed edge `{0} --> {1}`")]
    NotDirected(String, String),
    #[error("edge between `{0}` and `{1}` cannot carry an effect from `{0}` to `{1}`")]
    NotPossibleParent(String, String),
    #[error("visible edge `{0} --> {1}`: back-door adjustment applies, IV machinery not licensed")]
    VisibleEdge(String, String),
    #[error("invalid roles: {0}")]
    InvalidRoles(String),
    #[error("invalid conditioning set: {0}")]
    InvalidConditioningSet(String),
    #[error("node sets mismatch: {0}")]
    NodeSetMismatch(String),
    #[error("degenerate columns: {0}")]
    DegenerateColumns(String),
    #[error("insufficient samples: n = {n}, need more than {needed}")]
    InsufficientSamples { n: usize, needed: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("rank-deficient design matrix (column `{0}`)")]
    RankDeficient(String),
    #[error("weak instrument: {0}")]
    WeakInstrument(String),
    #[error("dataset error: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}
