use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or values.
    #[error("config: {0}")]
    Config(String),

    /// A residual or fit outside its tolerance.
    #[error("tolerance: {0}")]
    Tolerance(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] clockdil::Error),
}

impl CliError {
    /// 1 for numerical failures, 2 for usage and configuration errors.
    pub fn exit_code(&self) -> u8 {
        use clockdil::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Tolerance(_) | Self::Io(_) => 1,
            Self::Core(e) => match e {
                E::Parse(_)
                | E::Dimension(_)
                | E::Grid(_)
                | E::DecouplingSet(_)
                | E::Cycle(_)
                | E::Misaligned { .. }
                | E::Function(_)
                | E::Family(_)
                | E::NegativeTime(_)
                | E::InvalidState(_) => 2,
                _ => 1,
            },
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Core(e.into())
    }
}
