use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),
    #[error("invalid 2D function: {0}")]
    InvalidGrid(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("contour is not regular: {0}")]
    NotRegular(String),
    #[error("invalid bar: {0}")]
    InvalidBar(String),
    #[error("invalid point cloud: {0}")]
    InvalidPointCloud(String),
    #[error("invalid process parameters: {0}")]
    InvalidProcess(String),
    #[error("unsupported homology degree {0}; only degrees 0 and 1 are computed")]
    UnsupportedDegree(usize),
    #[error("classification error: {0}")]
    Classification(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
