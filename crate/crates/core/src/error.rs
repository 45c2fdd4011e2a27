use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ray origin lies outside the disk")]
    OriginOutside,
    #[error("ray origin lies outside the contour or the ray never crosses it")]
    NoIntersection,
    #[error("no dough above the presence threshold")]
    EmptyDough,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("both sets are empty, IoU is undefined")]
    ZeroUnion,
    #[error("every candidate direction leaves the dough outside the target")]
    AllDirectionsExcluded,
    #[error("compliance is undefined for zero force")]
    ZeroForce,
    #[error("cylinder does not fit inside the workspace")]
    OutOfWorkspace,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o: {0}")]
    Io(String),
}
