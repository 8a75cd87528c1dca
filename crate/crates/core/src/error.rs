use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameter mismatch: ({p1}, {s1}) vs ({p2}, {s2})")]
    ParamMismatch { p1: u32, s1: u32, p2: u32, s2: u32 },

    #[error("negative depth {0}")]
    NegativeDepth(i32),

    #[error("coset floor mismatch: {0} vs {1}")]
    FloorMismatch(i32, i32),

    #[error("cannot refine floor {from} to coarser floor {to}")]
    RefineCoarser { from: i32, to: i32 },

    #[error("coset-nonconstant pairing: element has a block at index {index} below floor {floor}")]
    NonConstantPairing { index: i32, floor: i32 },

    #[error("address with floor {addr_floor} is coarser than the function resolution {floor}")]
    CoarseAddress { addr_floor: i32, floor: i32 },

    #[error("address has digit at index {index} outside the mask window [{lo}, {hi}]")]
    OutsideMaskWindow { index: i32, lo: i32, hi: i32 },

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("tree is not {n}-valid: {reason}")]
    InvalidTree { n: u32, reason: String },

    #[error("moved node {0} is inside the subtree of the target")]
    TargetInsideSubtree(usize),

    #[error("window context mismatch between node {node} and target {target}")]
    WindowContextMismatch { node: usize, target: usize },

    #[error("basic step not applicable to node {0}")]
    NotApplicable(usize),

    #[error("target {0} is not a leaf")]
    TargetNotLeaf(usize),

    #[error("invalid elementary set: {0}")]
    InvalidElementarySet(String),

    #[error("mask assignment missing coset {0}")]
    MissingCoset(String),

    #[error("mask value {value} at {coset} violates bounds [{lower}, {upper}]")]
    BoundViolation {
        coset: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("mask value at the zero address must be 1, got {0}")]
    ZeroAddressNotUnit(String),

    #[error("window length must be >= 1")]
    EmptyWindow,

    #[error("schema error: {0}")]
    Schema(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
