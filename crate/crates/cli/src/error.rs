use std::fmt;
use std::path::Path;

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable/invalid input (exit 2).
    Input(String),
    /// No truth objects in the whole evaluation set (exit 3).
    EmptyTruth(String),
    /// Anything else, including failed writes (exit 4).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::EmptyTruth(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::EmptyTruth(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<shs_core::Error> for CliError {
    fn from(e: shs_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
