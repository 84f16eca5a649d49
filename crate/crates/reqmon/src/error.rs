use reqmon_core::authoring::AuthoringError;
use reqmon_core::elicitation::ElicitationError;
use reqmon_core::monitor::MonitorError;
use reqmon_core::project::ProjectError;
use reqmon_core::reqstore::RequirementError;
use reqmon_core::semcov::SemcovError;

/// How a failure surfaces: an HTTP status for the service and an exit code
/// for the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    NotFound,
    Conflict,
    Invalid,
    Upstream,
    Internal,
}

impl Kind {
    pub fn status(self) -> u16 {
        match self {
            Kind::NotFound => 404,
            Kind::Conflict => 409,
            Kind::Invalid => 422,
            Kind::Upstream => 502,
            Kind::Internal => 500,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct AppError {
    pub kind: Kind,
    pub message: String,
    pub diagnostics: Vec<String>,
}

impl AppError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(Kind::NotFound, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(Kind::Conflict, message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(Kind::Invalid, message)
    }
}

fn project_kind(e: &ProjectError) -> Kind {
    use ProjectError as P;
    match e {
        P::UnknownRequirement(_) | P::NoSession(_) => Kind::NotFound,
        P::DuplicateRequirement(_) | P::StaleRevision { .. } => Kind::Conflict,
        P::Elicitation(ElicitationError::UnknownTrace(_)) => Kind::NotFound,
        P::Elicitation(ElicitationError::NotOpen(_) | ElicitationError::Contradiction { .. }) => Kind::Conflict,
        P::Requirement(RequirementError::NoSuchCandidate { .. }) => Kind::NotFound,
        P::Requirement(RequirementError::CandidatePruned { .. }) => Kind::Conflict,
        P::Authoring(AuthoringError::Transport { .. } | AuthoringError::BadResponse(_)) => Kind::Upstream,
        P::Io(_) | P::Parse(_) | P::Version { .. } | P::Invariant { .. } => Kind::Internal,
        _ => Kind::Invalid,
    }
}

impl From<ProjectError> for AppError {
    fn from(e: ProjectError) -> Self {
        Self::new(project_kind(&e), e.to_string())
    }
}

impl From<MonitorError> for AppError {
    fn from(e: MonitorError) -> Self {
        let kind = match e {
            MonitorError::Unsorted { .. } => Kind::Conflict,
            MonitorError::Io(_) => Kind::Internal,
            _ => Kind::Invalid,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<SemcovError> for AppError {
    fn from(e: SemcovError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Kind::Internal, e.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
