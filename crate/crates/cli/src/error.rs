use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid configuration. `field` is the JSON path of the
    /// offending value when known; `line`/`column` are 1-based.
    #[error("{}", config_message(.file, .field, .line, .column, .message))]
    Config {
        file: Option<PathBuf>,
        field: Option<String>,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    #[error("[{module}] {0}", module = .0.module())]
    Numerical(periodica_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Artifact(String),
}

fn config_message(
    file: &Option<PathBuf>,
    field: &Option<String>,
    line: &Option<usize>,
    column: &Option<usize>,
    message: &str,
) -> String {
    let mut s = String::from("config error");
    if let Some(f) = file {
        s.push_str(&format!(" in {}", f.display()));
    }
    if let (Some(l), Some(c)) = (line, column) {
        s.push_str(&format!(" at line {l}, column {c}"));
    }
    if let Some(p) = field {
        s.push_str(&format!(" (field `{p}`)"));
    }
    s.push_str(": ");
    s.push_str(message);
    s
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            file: None,
            field: Some(field.into()),
            line: None,
            column: None,
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(e) if e.is_config() => 2,
            _ => 3,
        }
    }

    pub(crate) fn in_file(mut self, path: &std::path::Path) -> Self {
        if let CliError::Config { file, .. } = &mut self {
            if file.is_none() {
                *file = Some(path.to_path_buf());
            }
        }
        self
    }
}

impl From<periodica_core::Error> for CliError {
    fn from(e: periodica_core::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<serde_path_to_error::Error<serde_json::Error>> for CliError {
    fn from(e: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = if inner.line() > 0 {
            (Some(inner.line()), Some(inner.column()))
        } else {
            (None, None)
        };
        CliError::Config {
            file: None,
            field: (path != ".").then_some(path),
            line,
            column,
            message: strip_position(&inner.to_string()),
        }
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}
