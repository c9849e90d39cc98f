use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("{section}: {source}")]
    Core {
        section: &'static str,
        #[source]
        source: msgwas::Error,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("writing table: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Wraps a library error, qualifying parameter names with `section`.
    pub fn core(section: &'static str) -> impl Fn(msgwas::Error) -> CliError {
        move |e| match e {
            msgwas::Error::InvalidParameter { name, reason } => CliError::Invalid {
                key: format!("{section}.{name}"),
                reason,
            },
            other => CliError::Core {
                section,
                source: other,
            },
        }
    }

    /// 3 for numerical failures on valid input, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_numerical() => 3,
            _ => 2,
        }
    }
}
