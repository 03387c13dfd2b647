use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("configuration is empty")]
    EmptyConfiguration,
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("points {0}, {1} and {2} are collinear")]
    CollinearTriple(usize, usize, usize),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid subdivision: {0}")]
    InvalidSubdivision(String),
    #[error("search budget of {0} nodes exhausted")]
    BudgetExceeded(u64),
    #[error("subdivision region is not the convex hull of the configuration")]
    WrongRegion,
    #[error("no stable generic perturbation for seed {seed}: {reason}")]
    NonGenericPerturbation { seed: u64, reason: String },
    #[error("graph is not too rigid")]
    NotTooRigid,
    #[error("split has codimension {0}, expected 1")]
    NotCodimOne(i64),
    #[error("split is not perturbedly regular")]
    NotPerturbedlyRegular,
    #[error("regions overlap")]
    RegionsOverlap,
    #[error("edge {0}-{1} is not a boundary edge of both regions")]
    NotSharedEdge(usize, usize),
    #[error("glued region is not a simple polygon")]
    UnionNotSimple,
    #[error("chain elements live on different regions")]
    MixedRegions,
    #[error("differential squared is nonzero")]
    DSquaredNonzero,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
