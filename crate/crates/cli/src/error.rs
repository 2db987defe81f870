use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}: {message}", path.display())]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] dedsim_core::Error),

    /// A sweep point failed; names the point.
    #[error("{point}: {source}")]
    Point {
        point: String,
        #[source]
        source: dedsim_core::Error,
    },
}

impl CliError {
    /// 0 ok, 1 I/O, 2 validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use dedsim_core::Error as E;
        let model = |e: &E| match e {
            E::Io { .. } => 1,
            E::Domain(_) | E::Infeasible(_) | E::Parse { .. } => 2,
            E::Physicality { .. } | E::Numerical(_) => 3,
        };
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Model(e) => model(e),
            CliError::Point { source, .. } => model(source),
        }
    }
}
