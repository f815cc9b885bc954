use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Solver(macgame::Error),
    #[error("{0}")]
    Input(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl From<macgame::Error> for CliError {
    fn from(e: macgame::Error) -> Self {
        match e {
            macgame::Error::Infeasible(_) | macgame::Error::Lp(macgame::LpError::Infeasible) => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    /// 3 for configuration problems, 4 for an infeasible LP, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Infeasible(_) => 4,
            _ => 1,
        }
    }
}
