//! Project workflows shared by the command line and the service, so both
//! leave a project in the same state for the same request.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use reqmon_core::analysis::AnalysisReport;
use reqmon_core::authoring::{provider_for, Diagnostic, ProviderConfig, DEFAULT_MAX_CANDIDATES};
use reqmon_core::elicitation::{Label, Question, SessionStatus};
use reqmon_core::exec::Execution;
use reqmon_core::ltlf::{Formula, Trace};
use reqmon_core::monitor::{ScoreRecord, ThresholdConfig};
use reqmon_core::project::{LabelOutcome, Project};
use reqmon_core::reqstore::{CandidateState, PruneReason, Requirement, RequirementStatus};
use reqmon_core::semcov::{build_profiles, coverage, render_heatmap, ConceptProfile, CoverageReport, ScoreMatrix, Thresholds};
use reqmon_core::testgen::{Criterion, TestSuite};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewProject {
    pub name: String,
    /// Proposition name to caption.
    pub vocabulary: IndexMap<String, String>,
    #[serde(default)]
    pub provider: Option<ProviderConfig>,
    #[serde(default)]
    pub thresholds: Option<ThresholdConfig>,
}

pub fn create_project(req: NewProject) -> AppResult<Project> {
    let mut p = Project::new(&req.name, req.vocabulary)?;
    if let Some(provider) = req.provider {
        p.provider = provider;
    }
    if let Some(t) = req.thresholds {
        t.check()?;
        p.thresholds = t;
    }
    Ok(p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewRequirement {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AuthorRequest {
    #[serde(default)]
    pub max_candidates: Option<usize>,
    /// Restricted English lines to use instead of asking the provider.
    #[serde(default)]
    pub candidates: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub index: usize,
    pub re_text: String,
    pub formula: Formula,
    pub state: CandidateState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_reason: Option<PruneReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesView {
    pub requirement_id: String,
    pub status: RequirementStatus,
    pub selected: Option<usize>,
    pub session_status: Option<SessionStatus>,
    pub revision: Option<u64>,
    pub candidates: Vec<CandidateView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorView {
    #[serde(flatten)]
    pub candidates: CandidatesView,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn candidates_view(p: &Project, id: &str) -> AppResult<CandidatesView> {
    let r: &Requirement = p.requirement(id)?;
    let session = p.sessions.get(id);
    Ok(CandidatesView {
        requirement_id: r.id.clone(),
        status: r.status,
        selected: r.selected,
        session_status: session.map(|s| s.status),
        revision: session.map(|s| s.revision),
        candidates: r
            .candidates
            .iter()
            .enumerate()
            .map(|(index, c)| CandidateView {
                index,
                re_text: c.re_text.clone(),
                formula: c.formula.clone(),
                state: c.state,
                prune_reason: c.prune_reason.clone(),
            })
            .collect(),
    })
}

/// Proposes candidates through the project's provider, or installs the
/// given Restricted English lines.
pub fn author(p: &mut Project, id: &str, req: AuthorRequest) -> AppResult<AuthorView> {
    let diagnostics = match req.candidates {
        Some(lines) => {
            p.set_candidates_from_re(id, &lines)?;
            Vec::new()
        }
        None => {
            let provider = provider_for(&p.provider);
            p.author(id, provider.as_ref(), req.max_candidates.unwrap_or(DEFAULT_MAX_CANDIDATES))?
        }
    };
    Ok(AuthorView {
        candidates: candidates_view(p, id)?,
        diagnostics,
    })
}

/// Rows are propositions, columns frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceTable {
    pub props: Vec<String>,
    pub rows: Vec<Vec<bool>>,
}

impl TraceTable {
    pub fn of(t: &Trace) -> Self {
        Self {
            props: t.props().iter().map(|p| p.to_string()).collect(),
            rows: (0..t.props().len())
                .map(|i| t.steps().iter().map(|v| v.value_at(i)).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Badge {
    pub index: usize,
    pub formula: Formula,
    pub re_text: String,
    pub accepts: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionBody {
    pub id: usize,
    pub pair: Option<(usize, usize)>,
    pub frames: Vec<Vec<String>>,
    pub table: TraceTable,
    /// Every active candidate and whether it accepts the trace.
    pub candidates: Vec<Badge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub requirement_id: String,
    pub status: SessionStatus,
    pub revision: u64,
    pub question: Option<QuestionBody>,
}

fn question_body(p: &Project, id: &str, q: &Question) -> AppResult<QuestionBody> {
    let mut s = p.session(id)?.clone();
    let r = p.requirement(id)?;
    let candidates = s
        .active
        .clone()
        .into_iter()
        .map(|i| {
            Ok(Badge {
                index: i,
                formula: r.candidates[i].formula.clone(),
                re_text: r.candidates[i].re_text.clone(),
                accepts: s.accepts(i, &q.trace).map_err(|e| AppError::invalid(e.to_string()))?,
            })
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(QuestionBody {
        id: q.id,
        pair: q.pair,
        frames: q.trace.frames(),
        table: TraceTable::of(&q.trace),
        candidates,
    })
}

/// The pending or next distinguishing question; none once the session has
/// converged or run out of candidates.
pub fn next_question(p: &mut Project, id: &str) -> AppResult<QuestionView> {
    let q = if p.session(id)?.status == SessionStatus::Open {
        p.next_question(id)?
    } else {
        None
    };
    let question = q.as_ref().map(|q| question_body(p, id, q)).transpose()?;
    let s = p.session(id)?;
    Ok(QuestionView {
        requirement_id: id.to_string(),
        status: s.status,
        revision: s.revision,
        question,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    /// A question id, or
    #[serde(default)]
    pub trace_id: Option<usize>,
    /// an engineer-supplied trace given as frames of true propositions.
    #[serde(default)]
    pub trace: Option<Vec<Vec<String>>>,
    pub label: Label,
    /// Session revision the label was decided against.
    #[serde(default)]
    pub revision: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelView {
    #[serde(flatten)]
    pub outcome: LabelOutcome,
    pub requirement: CandidatesView,
}

pub fn label(p: &mut Project, id: &str, req: LabelRequest) -> AppResult<LabelView> {
    let outcome = match (req.trace_id, req.trace) {
        (Some(t), None) => p.label(id, t, req.label, req.revision)?,
        (None, Some(frames)) => {
            let props = p.props()?;
            let trace = Trace::from_frames(&props, &frames).map_err(|e| AppError::invalid(e.to_string()))?;
            p.label_external(id, trace, req.label, req.revision)?
        }
        _ => return Err(AppError::invalid("give exactly one of trace_id and trace")),
    };
    Ok(LabelView {
        outcome,
        requirement: candidates_view(p, id)?,
    })
}

/// Consistency report over the formalized requirements. The project is
/// left untouched.
pub fn analysis(p: &Project, all: bool) -> AppResult<AnalysisReport> {
    let mut scratch = p.clone();
    Ok(scratch.analyze(all, Execution::default())?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestsRequest {
    #[serde(default = "default_criterion")]
    pub criterion: Criterion,
}

fn default_criterion() -> Criterion {
    Criterion::TransitionCoverage
}

impl Default for TestsRequest {
    fn default() -> Self {
        Self {
            criterion: default_criterion(),
        }
    }
}

pub fn tests(p: &mut Project, id: &str, req: TestsRequest) -> AppResult<TestSuite> {
    Ok(p.generate_tests(id, req.criterion)?.clone())
}

/// Formulas to monitor: the named requirements, or every formalized one.
pub fn monitor_targets(p: &Project, ids: &[String]) -> AppResult<Vec<(String, Formula)>> {
    let pick: Vec<&Requirement> = if ids.is_empty() {
        p.requirements.iter().filter(|r| r.selected.is_some()).collect()
    } else {
        ids.iter().map(|id| p.requirement(id)).collect::<Result<_, _>>()?
    };
    if pick.is_empty() {
        return Err(AppError::invalid("no formalized requirement to monitor"));
    }
    pick.into_iter()
        .map(|r| {
            r.selected_formula()
                .map(|f| (r.id.clone(), f.clone()))
                .ok_or_else(|| AppError::invalid(format!("requirement {} is not formalized", r.id)))
        })
        .collect()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CoverageRequest {
    /// Score records, with frames as items.
    #[serde(default)]
    pub records: Option<Vec<ScoreRecord>>,
    /// CSV text with header `item,feature,score`.
    #[serde(default)]
    pub csv: Option<String>,
    /// Threshold for every feature; defaults to the project's.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    #[serde(default = "default_target")]
    pub target: f64,
    /// Item to group label, for concept profiles.
    #[serde(default)]
    pub groups: BTreeMap<String, String>,
}

fn default_target() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageView {
    pub report: CoverageReport,
    pub profiles: Vec<ConceptProfile>,
    pub heatmap: String,
}

pub fn coverage_of(base: Option<&ThresholdConfig>, req: CoverageRequest) -> AppResult<CoverageView> {
    let m = match (req.records, req.csv) {
        (Some(r), None) => ScoreMatrix::from_records(&r)?,
        (None, Some(text)) => ScoreMatrix::from_csv(text.as_bytes())?,
        _ => return Err(AppError::invalid("give exactly one of records and csv")),
    };
    let mut th = match base {
        Some(cfg) => Thresholds {
            default: cfg.default,
            overrides: cfg.overrides.clone(),
        },
        None => Thresholds::uniform(reqmon_core::monitor::DEFAULT_THRESHOLD),
    };
    if let Some(t) = req.threshold {
        th.default = t;
    }
    th.overrides.extend(req.overrides);
    let exec = Execution::default();
    let report = coverage(&m, &th, req.target, exec)?;
    let profiles = if req.groups.is_empty() {
        Vec::new()
    } else {
        build_profiles(&m, &req.groups, exec)?
    };
    let heatmap = render_heatmap(&profiles);
    Ok(CoverageView {
        report,
        profiles,
        heatmap,
    })
}
