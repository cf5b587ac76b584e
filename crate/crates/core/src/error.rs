use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("taxonomy describes {taxonomy} semantic channels but the map has {map}")]
    TaxonomyMismatch { taxonomy: usize, map: usize },

    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),

    #[error("point ({x:.3}, {y:.3}) lies outside the map")]
    OutOfBounds { x: f64, y: f64 },

    #[error("cell ({u}, {v}) lies outside a {width}x{height} grid")]
    CellOutOfBounds {
        u: i64,
        v: i64,
        width: usize,
        height: usize,
    },

    #[error("grid dimensions differ: {0}")]
    DimensionMismatch(String),

    #[error("not a SOM1 file (bad magic)")]
    BadMagic,

    #[error("file truncated: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: usize, actual: usize },

    #[error("unsupported SOM version {0}")]
    VersionUnsupported(u32),

    #[error("malformed map: {0}")]
    Malformed(String),

    #[error("floorplan synthesis failed: {0}")]
    SynthesisFailed(String),

    #[error("no free start cell: {0}")]
    NoFreeCell(String),

    #[error("pose lies inside an obstacle")]
    PoseInObstacle,

    #[error("no reachable global goal")]
    NoReachableGoal,

    #[error("no path between the requested cells")]
    NoPath,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
