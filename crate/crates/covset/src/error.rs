use covset_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        #[source]
        source: CoreError,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_RESOURCE_CAP: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

impl CliError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Core error raised while building the object behind `field`.
    pub fn field(field: &'static str, source: CoreError) -> Self {
        CliError::Core {
            context: field,
            source,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_INVALID_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core { source, .. } => {
                if source.is_resource_cap() {
                    EXIT_RESOURCE_CAP
                } else if matches!(source, CoreError::NoIntersections | CoreError::EmptySet) {
                    EXIT_DEGENERATE
                } else {
                    EXIT_INVALID_CONFIG
                }
            }
        }
    }
}
