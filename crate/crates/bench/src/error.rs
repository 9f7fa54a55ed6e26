use std::path::PathBuf;

use jamgraph::dataio::DataError;
use jamgraph::graph::GraphError;
use jamgraph::models::ModelError;
use jamgraph::sim::SimError;
use jamgraph::trainer::TrainError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad flags, configuration values or scenario labels.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0}")]
    MissingData(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 1 user/config error, 2 data error, 3 internal breach.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) | BenchError::Sim(_) => 1,
            BenchError::Data(_) | BenchError::MissingData(_) | BenchError::Io { .. } => 2,
            BenchError::Train(TrainError::Contract(_)) => 1,
            BenchError::Train(TrainError::Graph(GraphError::InvalidWindow { .. })) => 1,
            BenchError::Train(TrainError::Graph(GraphError::EmptyTrainingSet)) => 2,
            BenchError::Model(ModelError::Checkpoint { .. } | ModelError::Io { .. }) => 2,
            BenchError::Model(ModelError::Contract(_)) | BenchError::Train(TrainError::Model(ModelError::Contract(_))) => 1,
            BenchError::Train(_) | BenchError::Model(_) | BenchError::Invariant(_) => 3,
        }
    }
}
