use std::path::PathBuf;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_THRESHOLD: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("level n = {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: kvflow_core::Error,
    },

    #[error(transparent)]
    Core(#[from] kvflow_core::Error),

    #[error("{0} check(s) failed")]
    Threshold(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        let core = match self {
            CliError::Config(_) | CliError::Json { .. } => return EXIT_CONFIG,
            CliError::Io { .. } => return EXIT_OTHER,
            CliError::Threshold(_) => return EXIT_THRESHOLD,
            CliError::Level { source, .. } | CliError::Core(source) => source,
        };
        if core.is_solver_failure() {
            EXIT_SOLVER
        } else if matches!(core, kvflow_core::Error::Config(_)) {
            EXIT_CONFIG
        } else {
            EXIT_OTHER
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;
    use kvflow_core::Error;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::Threshold(2).exit_code(), EXIT_THRESHOLD);
        let picard = Error::PicardNonconvergence { iterations: 50, change: 1.0 };
        let wrapped = Error::Step { step: 3, source: Box::new(picard) };
        assert_eq!(CliError::Level { level: 8, source: wrapped }.exit_code(), EXIT_SOLVER);
        assert_eq!(CliError::Core(Error::Config("bad".into())).exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::Core(Error::MissingReference).exit_code(), EXIT_OTHER);
    }
}
