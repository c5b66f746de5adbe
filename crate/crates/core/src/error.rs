use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("magnetization {m} is not allowed on a {side}x{side} lattice")]
    DisallowedMagnetization { m: i64, side: usize },
    #[error("free boundary conditions produce open interfaces; contours need plus or minus boundary")]
    FreeBoundary,
    #[error("contour diameter {diameter:.4} is below the skeleton scale {scale:.4}")]
    ContourTooSmall { diameter: f64, scale: f64 },
    #[error("skeleton construction failed: {0}")]
    Skeleton(String),
    #[error("transfer-matrix decay fit is poor (R^2 = {r_squared:.6})")]
    PoorFit { r_squared: f64 },
    #[error("chain consistency check failed: {0}")]
    Consistency(String),
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
