use serde::Serialize;

/// Machine-readable failure, printed as JSON before a nonzero exit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub code: String,
    pub field_path: String,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(code: &str, field_path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            field_path: field_path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new("io", "", format!("{}: {e}", path.display()))
    }

    /// Wraps a library error raised while resolving the config item at `path`.
    pub fn at(path: &str, e: lrbose::Error) -> Self {
        use lrbose::Error as E;
        let (code, field) = match &e {
            E::InvalidParameter { name, .. } => ("invalid_parameter", Some(*name)),
            E::DimensionCap { .. } => ("dimension_cap", None),
            E::EmptyRegion(_) | E::Geometry(_) | E::LatticeMismatch(_) => ("geometry", None),
            E::TimeGrid(_) => ("time_grid", None),
            E::ShellPopulated { .. } | E::SectorMismatch(_) | E::UnknownOccupation(_) => ("initial_state", None),
            E::Symmetry { .. } | E::DecayExponent { .. } => ("couplings", None),
            E::KrylovNonConvergence { .. } => ("numerics", None),
            E::SupportViolation(_) | E::OperatorPrecondition(_) => ("operator", None),
            E::BasisMismatch(_) => ("basis", None),
            E::Serialization(_) => ("serialization", None),
        };
        let field_path = match field {
            Some(f) if !path.is_empty() => format!("{path}.{f}"),
            Some(f) => f.to_string(),
            None => path.to_string(),
        };
        Self::new(code, field_path, e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain strings serialize")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} at `{}`: {}", self.code, self.field_path, self.message)
    }
}

/// `.at(path)` on library results.
pub trait Context<T> {
    fn at(self, path: &str) -> CliResult<T>;
}

impl<T> Context<T> for lrbose::Result<T> {
    fn at(self, path: &str) -> CliResult<T> {
        self.map_err(|e| CliError::at(path, e))
    }
}
