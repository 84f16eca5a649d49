//! Project documents: vocabulary, requirements, validation sessions,
//! analysis results and test suites in one JSON file.
//!
//! Every workflow step the service and the CLI offer is a method here, so
//! both front ends leave identical project state behind.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::analysis::{check_consistency, formalized_inputs, AnalysisError, AnalysisReport};
use crate::authoring::{author_candidates, AuthoringError, AuthoringRequest, Provider, ProviderConfig, VocabEntry};
use crate::automata::AutomataError;
use crate::elicitation::{ElicitationError, Label, Question, SessionStatus, ValidationSession};
use crate::exec::Execution;
use crate::ltlf::{is_valid_prop_name, LtlfError, PropSet, Trace};
use crate::monitor::ThresholdConfig;
use crate::re_lang::ReError;
use crate::reqstore::{Candidate, CandidateState, Requirement, RequirementError, RequirementStatus};
use crate::testgen::{generate_suite, Criterion, TestSuite};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ProjectError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed project document: {0}")]
    Parse(String),
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },
    #[error("{path}: {message}")]
    Invariant { path: String, message: String },
    #[error("invalid project name `{0}`")]
    InvalidName(String),
    #[error("requirement {0} already exists")]
    DuplicateRequirement(String),
    #[error("no requirement {0}")]
    UnknownRequirement(String),
    #[error("requirement {0} has no validation session")]
    NoSession(String),
    #[error("stale revision {given}, current is {current}")]
    StaleRevision { given: u64, current: u64 },
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error(transparent)]
    Requirement(#[from] RequirementError),
    #[error(transparent)]
    Re(#[from] ReError),
    #[error(transparent)]
    Authoring(#[from] AuthoringError),
    #[error(transparent)]
    Elicitation(#[from] ElicitationError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub version: u64,
    pub name: String,
    /// Proposition name to caption.
    pub vocabulary: IndexMap<String, String>,
    #[serde(default)]
    pub requirements: Vec<Requirement>,
    /// Keyed by requirement id.
    #[serde(default)]
    pub sessions: BTreeMap<String, ValidationSession>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisReport>,
    /// Keyed by requirement id.
    #[serde(default)]
    pub test_suites: BTreeMap<String, TestSuite>,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
    #[serde(default)]
    pub provider: ProviderConfig,
}

/// Names usable as file stems and URL segments.
pub fn is_valid_project_name(name: &str) -> bool {
    crate::reqstore::is_valid_requirement_id(name) && !name.starts_with('.')
}

/// Outcome of labeling a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelOutcome {
    pub pruned: Vec<usize>,
    pub status: SessionStatus,
    pub revision: u64,
}

impl Project {
    pub fn new(name: &str, vocabulary: IndexMap<String, String>) -> Result<Self, ProjectError> {
        if !is_valid_project_name(name) {
            return Err(ProjectError::InvalidName(name.to_string()));
        }
        let p = Self {
            version: FORMAT_VERSION,
            name: name.to_string(),
            vocabulary,
            requirements: Vec::new(),
            sessions: BTreeMap::new(),
            analysis: None,
            test_suites: BTreeMap::new(),
            thresholds: ThresholdConfig::default(),
            provider: ProviderConfig::default(),
        };
        p.props()?;
        Ok(p)
    }

    pub fn props(&self) -> Result<PropSet, ProjectError> {
        Ok(PropSet::new(self.vocabulary.keys().map(String::as_str))?)
    }

    pub fn requirement(&self, id: &str) -> Result<&Requirement, ProjectError> {
        self.requirements
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| ProjectError::UnknownRequirement(id.to_string()))
    }

    fn requirement_mut(&mut self, id: &str) -> Result<&mut Requirement, ProjectError> {
        self.requirements
            .iter_mut()
            .find(|r| r.id == id)
            .ok_or_else(|| ProjectError::UnknownRequirement(id.to_string()))
    }

    pub fn session(&self, id: &str) -> Result<&ValidationSession, ProjectError> {
        self.sessions
            .get(id)
            .ok_or_else(|| ProjectError::NoSession(id.to_string()))
    }

    pub fn add_requirement(&mut self, id: &str, source_text: &str) -> Result<&Requirement, ProjectError> {
        if self.requirements.iter().any(|r| r.id == id) {
            return Err(ProjectError::DuplicateRequirement(id.to_string()));
        }
        self.requirements.push(Requirement::new(id, source_text)?);
        Ok(self.requirements.last().expect("just pushed"))
    }

    fn authoring_request(&self, id: &str, max: usize) -> Result<AuthoringRequest, ProjectError> {
        if self.vocabulary.is_empty() {
            return Err(ProjectError::EmptyVocabulary);
        }
        let r = self.requirement(id)?;
        let mut req = AuthoringRequest::new(
            &r.source_text,
            self.vocabulary
                .iter()
                .map(|(n, g)| VocabEntry {
                    name: n.clone(),
                    gloss: g.clone(),
                })
                .collect(),
        );
        req.max_candidates = max;
        Ok(req)
    }

    /// Runs the provider and opens a validation session over the result.
    pub fn author(
        &mut self,
        id: &str,
        provider: &dyn Provider,
        max: usize,
    ) -> Result<Vec<crate::authoring::Diagnostic>, ProjectError> {
        let req = self.authoring_request(id, max)?;
        self.requirement_mut(id)?.status = RequirementStatus::Authoring;
        let outcome = author_candidates(&req, provider)?;
        self.install_candidates(id, outcome.candidates)?;
        Ok(outcome.diagnostics)
    }

    /// Adds candidates written directly in Restricted English.
    pub fn set_candidates_from_re(&mut self, id: &str, lines: &[String]) -> Result<(), ProjectError> {
        let props = self.props()?;
        let cands = lines
            .iter()
            .map(|l| Candidate::from_re(l, &props))
            .collect::<Result<Vec<_>, _>>()?;
        if cands.is_empty() {
            return Err(AuthoringError::NoSurvivors(0).into());
        }
        self.install_candidates(id, cands)
    }

    fn install_candidates(&mut self, id: &str, cands: Vec<Candidate>) -> Result<(), ProjectError> {
        let props = self.props()?;
        let session = ValidationSession::new(id, &props, cands.iter().map(|c| c.formula.clone()).collect())?;
        self.requirement_mut(id)?.set_candidates(cands);
        self.sessions.insert(id.to_string(), session);
        self.sync_requirement(id)
    }

    /// Mirrors the session's pruning into the requirement; a converged
    /// session formalizes the requirement with its first active candidate,
    /// an exhausted one sends it back to authoring.
    fn sync_requirement(&mut self, id: &str) -> Result<(), ProjectError> {
        let s = self.session(id)?.clone();
        let r = self.requirement_mut(id)?;
        for (i, reason) in s.pruned.iter().enumerate() {
            if let Some(reason) = reason {
                r.candidates[i].state = CandidateState::Pruned;
                r.candidates[i].prune_reason = Some(reason.clone());
            }
        }
        match s.status {
            SessionStatus::Converged => r.select(s.active[0])?,
            SessionStatus::Exhausted => {
                r.selected = None;
                r.status = RequirementStatus::Authoring;
            }
            SessionStatus::Open => {
                r.selected = None;
                r.status = RequirementStatus::Validating;
            }
        }
        Ok(())
    }

    fn check_revision(&self, id: &str, expected: Option<u64>) -> Result<(), ProjectError> {
        let current = self.session(id)?.revision;
        match expected {
            Some(given) if given != current => Err(ProjectError::StaleRevision { given, current }),
            _ => Ok(()),
        }
    }

    pub fn next_question(&mut self, id: &str) -> Result<Option<Question>, ProjectError> {
        let s = self
            .sessions
            .get_mut(id)
            .ok_or_else(|| ProjectError::NoSession(id.to_string()))?;
        let q = s.next_question()?.cloned();
        self.sync_requirement(id)?;
        Ok(q)
    }

    pub fn label(
        &mut self,
        id: &str,
        trace_id: usize,
        label: Label,
        expected_revision: Option<u64>,
    ) -> Result<LabelOutcome, ProjectError> {
        self.check_revision(id, expected_revision)?;
        let s = self.sessions.get_mut(id).expect("checked");
        let pruned = s.apply_label(trace_id, label)?;
        let (status, revision) = (s.status, s.revision);
        self.sync_requirement(id)?;
        Ok(LabelOutcome {
            pruned,
            status,
            revision,
        })
    }

    pub fn label_external(
        &mut self,
        id: &str,
        trace: Trace,
        label: Label,
        expected_revision: Option<u64>,
    ) -> Result<LabelOutcome, ProjectError> {
        self.check_revision(id, expected_revision)?;
        let s = self.sessions.get_mut(id).expect("checked");
        let (_, pruned) = s.apply_external(trace, label)?;
        let (status, revision) = (s.status, s.revision);
        self.sync_requirement(id)?;
        Ok(LabelOutcome {
            pruned,
            status,
            revision,
        })
    }

    pub fn select(&mut self, id: &str, index: usize) -> Result<(), ProjectError> {
        Ok(self.requirement_mut(id)?.select(index)?)
    }

    /// Analyzes every formalized requirement; with `all`, an unformalized
    /// requirement is an error instead of being skipped.
    pub fn analyze(&mut self, all: bool, exec: Execution) -> Result<AnalysisReport, ProjectError> {
        let reqs: Vec<Requirement> = self
            .requirements
            .iter()
            .filter(|r| all || r.selected.is_some())
            .cloned()
            .collect();
        let report = check_consistency(&formalized_inputs(&reqs)?, exec)?;
        self.analysis = Some(report.clone());
        Ok(report)
    }

    pub fn generate_tests(&mut self, id: &str, criterion: Criterion) -> Result<&TestSuite, ProjectError> {
        let r = self.requirement(id)?;
        let f = r
            .selected_formula()
            .ok_or_else(|| AnalysisError::Unformalized(id.to_string()))?
            .clone();
        let suite = generate_suite(id, &f, criterion)?;
        self.test_suites.insert(id.to_string(), suite);
        Ok(&self.test_suites[id])
    }

    /// Validates every document invariant, reporting a path into the
    /// document for the first violation.
    pub fn check(&self) -> Result<(), ProjectError> {
        let bad = |path: String, message: String| Err(ProjectError::Invariant { path, message });
        if self.version != FORMAT_VERSION {
            return Err(ProjectError::Version {
                found: self.version,
                expected: FORMAT_VERSION,
            });
        }
        if !is_valid_project_name(&self.name) {
            return bad("name".into(), format!("invalid name `{}`", self.name));
        }
        for name in self.vocabulary.keys() {
            if !is_valid_prop_name(name) {
                return bad(format!("vocabulary/{name}"), "invalid proposition name".into());
            }
        }
        let props = self.props()?;
        let mut ids = std::collections::BTreeSet::new();
        for (i, r) in self.requirements.iter().enumerate() {
            if !ids.insert(r.id.as_str()) {
                return bad(format!("requirements/{i}/id"), format!("duplicate id {}", r.id));
            }
            if let Err(e) = r.check(&props) {
                return bad(format!("requirements/{i}"), e);
            }
        }
        for (id, s) in &self.sessions {
            let path = format!("sessions/{id}");
            let Ok(r) = self.requirement(id) else {
                return bad(path, "unknown requirement".into());
            };
            if s.requirement_id != *id {
                return bad(path, "requirement id disagrees with key".into());
            }
            if s.props != props {
                return bad(path, "proposition set differs from the vocabulary".into());
            }
            let formulas: Vec<_> = r.candidates.iter().map(|c| c.formula.clone()).collect();
            if s.candidates != formulas {
                return bad(path, "candidates differ from the requirement's".into());
            }
            if s.pruned.len() != s.candidates.len()
                || s.active.iter().any(|&a| a >= s.candidates.len() || s.pruned[a].is_some())
            {
                return bad(path, "active and pruned sets are inconsistent".into());
            }
            if s.questions.iter().enumerate().any(|(k, q)| q.id != k) {
                return bad(path, "question ids are not sequential".into());
            }
        }
        for (id, t) in &self.test_suites {
            if self.requirement(id).is_err() || t.requirement_id != *id {
                return bad(format!("test_suites/{id}"), "unknown requirement".into());
            }
        }
        if let Err(e) = self.thresholds.check() {
            return bad("thresholds".into(), e.to_string());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("project serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ProjectError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ProjectError::Parse(e.to_string()))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(FORMAT_VERSION) => {}
            Some(found) => {
                return Err(ProjectError::Version {
                    found,
                    expected: FORMAT_VERSION,
                })
            }
            None => return Err(ProjectError::Parse("missing integer `version`".into())),
        }
        let p: Project = serde_json::from_value(value).map_err(|e| ProjectError::Parse(e.to_string()))?;
        p.check()?;
        Ok(p)
    }

    /// Atomic save: the document is written to a temporary file in the same
    /// directory, synced, then renamed over `path`.
    pub fn save(&self, path: &Path) -> Result<(), ProjectError> {
        self.check()?;
        let text = self.to_json();
        atomic_write_with(path, |w| w.write_all(text.as_bytes()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ProjectError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Writes through `write` into a temporary sibling of `path` and renames it
/// into place only if `write` succeeds. On failure `path` is untouched.
pub fn atomic_write_with<F>(path: &Path, write: F) -> std::io::Result<()>
where
    F: FnOnce(&mut std::fs::File) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
