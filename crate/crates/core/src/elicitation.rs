//! Candidate disambiguation by distinguishing traces.
//!
//! A session holds competing candidate formulas for one requirement. Each
//! question is the shortest trace on which two active candidates disagree
//! (pairs scanned in index order). An `Accept` or `Reject` label prunes every
//! candidate that disagrees with it.

use serde::{Deserialize, Serialize};

use crate::automata::{compile, minimize, product, AutomataError, Dfa, ProductMode};
use crate::ltlf::{Formula, LtlfError, PropSet, Trace, Valuation};
use crate::reqstore::PruneReason;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Open,
    Converged,
    Exhausted,
}

#[derive(Debug, thiserror::Error)]
pub enum ElicitationError {
    #[error("session is {0:?}, not open")]
    NotOpen(SessionStatus),
    #[error("no trace with id {0}")]
    UnknownTrace(usize),
    #[error("trace {id} is already labeled {previous:?}")]
    Contradiction { id: usize, previous: Label },
    #[error("a session needs at least one candidate")]
    NoCandidates,
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: usize,
    pub trace: Trace,
    /// Candidate pair the trace distinguishes; absent for external traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationSession {
    pub requirement_id: String,
    pub props: PropSet,
    pub candidates: Vec<Formula>,
    pub active: Vec<usize>,
    /// Indexed by candidate; set once the candidate is pruned.
    pub pruned: Vec<Option<PruneReason>>,
    pub questions: Vec<Question>,
    /// Active pairs proven language-equivalent.
    #[serde(default)]
    pub equivalent_pairs: Vec<(usize, usize)>,
    pub status: SessionStatus,
    /// Bumped on every mutation, for optimistic concurrency.
    pub revision: u64,
    #[serde(skip)]
    dfas: DfaCache,
}

/// Minimized candidate automata, rebuilt on demand after deserialization.
/// Ignored by equality.
#[derive(Debug, Clone, Default)]
struct DfaCache(Vec<Dfa>);

impl PartialEq for DfaCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for DfaCache {}

impl std::ops::Deref for DfaCache {
    type Target = Vec<Dfa>;
    fn deref(&self) -> &Vec<Dfa> {
        &self.0
    }
}

impl ValidationSession {
    /// Traces are expressed over `props`, which must cover every candidate.
    pub fn new(
        requirement_id: &str,
        props: &PropSet,
        candidates: Vec<Formula>,
    ) -> Result<Self, ElicitationError> {
        if candidates.is_empty() {
            return Err(ElicitationError::NoCandidates);
        }
        let mut s = Self {
            requirement_id: requirement_id.to_string(),
            props: props.clone(),
            active: (0..candidates.len()).collect(),
            pruned: vec![None; candidates.len()],
            candidates,
            questions: Vec::new(),
            equivalent_pairs: Vec::new(),
            status: SessionStatus::Open,
            revision: 0,
            dfas: DfaCache::default(),
        };
        s.ensure_compiled()?;
        s.refresh_status()?;
        Ok(s)
    }

    fn ensure_compiled(&mut self) -> Result<(), ElicitationError> {
        if self.dfas.len() != self.candidates.len() {
            for c in &self.candidates {
                if !c.prop_set()?.is_subset(&self.props) {
                    return Err(LtlfError::PropositionMismatch {
                        expected: self.props.to_string(),
                        found: c.prop_set()?.to_string(),
                    }
                    .into());
                }
            }
            self.dfas = DfaCache(
                self.candidates
                    .iter()
                    .map(|c| compile(c).map(|d| minimize(&d)))
                    .collect::<Result<_, _>>()?,
            );
        }
        Ok(())
    }

    /// Shortest distinguishing trace for a pair, lifted to the session's
    /// propositions (absent propositions false), or `None` if equivalent.
    fn distinguish(&self, i: usize, j: usize) -> Result<Option<Trace>, ElicitationError> {
        let x = product(&self.dfas[i], &self.dfas[j], ProductMode::SymmetricDifference)?;
        let Some(word) = x.shortest_word(x.initial(), true, |s| x.is_accepting(s)) else {
            return Ok(None);
        };
        let pos = x.props().positions_in(&self.props)?;
        let n = self.props.len();
        let m = pos.len();
        let steps = word
            .iter()
            .map(|&l| {
                let bits = pos.iter().enumerate().fold(0u64, |acc, (j, &p)| {
                    acc | (((l >> (m - 1 - j)) & 1) << (n - 1 - p))
                });
                Valuation::from_bits(&self.props, bits)
            })
            .collect();
        Ok(Some(Trace::new(&self.props, steps)?))
    }

    fn is_equivalent(&mut self, i: usize, j: usize) -> Result<bool, ElicitationError> {
        if self.equivalent_pairs.contains(&(i, j)) {
            return Ok(true);
        }
        let eq = self.distinguish(i, j)?.is_none();
        if eq {
            self.equivalent_pairs.push((i, j));
        }
        Ok(eq)
    }

    fn refresh_status(&mut self) -> Result<(), ElicitationError> {
        self.status = if self.active.is_empty() {
            SessionStatus::Exhausted
        } else {
            let mut all_eq = true;
            let active = self.active.clone();
            'outer: for (a, &i) in active.iter().enumerate() {
                for &j in &active[a + 1..] {
                    if !self.is_equivalent(i, j)? {
                        all_eq = false;
                        break 'outer;
                    }
                }
            }
            if all_eq {
                SessionStatus::Converged
            } else {
                SessionStatus::Open
            }
        };
        Ok(())
    }

    /// The pending question if one is unanswered, else a new shortest trace
    /// separating the first non-equivalent active pair. `None` means all
    /// active candidates are equivalent, and the session is converged.
    pub fn next_question(&mut self) -> Result<Option<&Question>, ElicitationError> {
        if self.status != SessionStatus::Open {
            return Err(ElicitationError::NotOpen(self.status));
        }
        self.ensure_compiled()?;
        if let Some(k) = self
            .questions
            .iter()
            .position(|q| match (q.label, q.pair) {
                (None, Some((i, j))) => self.active.contains(&i) && self.active.contains(&j),
                _ => false,
            })
        {
            return Ok(Some(&self.questions[k]));
        }
        let active = self.active.clone();
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                if self.equivalent_pairs.contains(&(i, j)) {
                    continue;
                }
                match self.distinguish(i, j)? {
                    None => self.equivalent_pairs.push((i, j)),
                    Some(trace) => {
                        let id = self.questions.len();
                        self.questions.push(Question {
                            id,
                            trace,
                            pair: Some((i, j)),
                            label: None,
                        });
                        self.revision += 1;
                        return Ok(self.questions.last());
                    }
                }
            }
        }
        self.status = SessionStatus::Converged;
        self.revision += 1;
        Ok(None)
    }

    /// Labels an issued (or previously added) trace and prunes every active
    /// candidate that disagrees. Returns the newly pruned candidates.
    pub fn apply_label(&mut self, trace_id: usize, label: Label) -> Result<Vec<usize>, ElicitationError> {
        self.ensure_compiled()?;
        let q = self
            .questions
            .get(trace_id)
            .ok_or(ElicitationError::UnknownTrace(trace_id))?;
        match q.label {
            Some(prev) if prev != label => {
                return Err(ElicitationError::Contradiction {
                    id: trace_id,
                    previous: prev,
                })
            }
            Some(_) => return Ok(Vec::new()),
            None => {}
        }
        let trace = q.trace.clone();
        self.questions[trace_id].label = Some(label);
        let want = label == Label::Accept;
        let mut killed = Vec::new();
        for &c in &self.active {
            if self.dfas[c].accepts(&trace)? != want {
                killed.push(c);
            }
        }
        for &c in &killed {
            self.pruned[c] = Some(PruneReason { trace_id, label });
        }
        self.active.retain(|c| !killed.contains(c));
        self.refresh_status()?;
        self.revision += 1;
        Ok(killed)
    }

    /// Adds an engineer-supplied trace with its label. Relabeling a trace
    /// already in the session is treated as labeling that trace.
    pub fn apply_external(&mut self, trace: Trace, label: Label) -> Result<(usize, Vec<usize>), ElicitationError> {
        let trace = if trace.props() == &self.props {
            trace
        } else {
            lift(&trace, &self.props)?
        };
        if let Some(q) = self.questions.iter().find(|q| q.trace == trace) {
            let id = q.id;
            return Ok((id, self.apply_label(id, label)?));
        }
        let id = self.questions.len();
        self.questions.push(Question {
            id,
            trace,
            pair: None,
            label: None,
        });
        Ok((id, self.apply_label(id, label)?))
    }

    pub fn question(&self, id: usize) -> Option<&Question> {
        self.questions.get(id)
    }

    /// Whether candidate `c` accepts `trace`.
    pub fn accepts(&mut self, c: usize, trace: &Trace) -> Result<bool, ElicitationError> {
        self.ensure_compiled()?;
        Ok(self.dfas[c].accepts(trace)?)
    }

    pub fn questions_asked(&self) -> usize {
        self.questions.iter().filter(|q| q.pair.is_some()).count()
    }
}

/// Re-expresses a trace over a superset of its propositions; added
/// propositions must be absent. A trace over extra propositions is an error.
fn lift(trace: &Trace, props: &PropSet) -> Result<Trace, ElicitationError> {
    if !trace.props().is_subset(props) {
        return Err(LtlfError::PropositionMismatch {
            expected: props.to_string(),
            found: trace.props().to_string(),
        }
        .into());
    }
    Ok(Trace::from_frames(props, &trace.frames())?)
}
