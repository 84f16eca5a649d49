//! Requirement records and their candidate interpretations.

use serde::{Deserialize, Serialize};

use crate::elicitation::Label;
use crate::ltlf::{Formula, PropSet};
use crate::re_lang::{lower_to_ltlf, parse_re, ReError, ReSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequirementStatus {
    Drafted,
    Authoring,
    Validating,
    Formalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateState {
    Active,
    Pruned,
    Selected,
}

/// The labeled trace that eliminated a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReason {
    pub trace_id: usize,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub re_text: String,
    pub spec: ReSpec,
    pub formula: Formula,
    pub state: CandidateState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_reason: Option<PruneReason>,
}

impl Candidate {
    /// Parses and lowers a Restricted English line into an active candidate.
    pub fn from_re(text: &str, props: &PropSet) -> Result<Self, ReError> {
        let spec = parse_re(text, props)?;
        Ok(Self {
            re_text: text.trim().to_string(),
            formula: lower_to_ltlf(&spec),
            spec,
            state: CandidateState::Active,
            prune_reason: None,
        })
    }

    /// `re_text` parses to `spec` and `formula` is its lowering.
    pub fn check(&self, props: &PropSet) -> Result<(), String> {
        let spec = parse_re(&self.re_text, props).map_err(|e| e.to_string())?;
        if spec != self.spec {
            return Err("text does not parse to the stored template".into());
        }
        if lower_to_ltlf(&spec) != self.formula {
            return Err("formula is not the lowering of the template".into());
        }
        if (self.state == CandidateState::Pruned) != self.prune_reason.is_some() {
            return Err("prune reason must be present exactly for pruned candidates".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequirementError {
    #[error("invalid requirement id `{0}`")]
    InvalidId(String),
    #[error("requirement {id} has no candidate {index}")]
    NoSuchCandidate { id: String, index: usize },
    #[error("candidate {index} of {id} was pruned")]
    CandidatePruned { id: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub source_text: String,
    pub status: RequirementStatus,
    #[serde(default)]
    pub candidates: Vec<Candidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<usize>,
}

/// Ids are nonempty and use letters, digits, `-`, `_` and `.` only, so they
/// can appear in URLs unescaped.
pub fn is_valid_requirement_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl Requirement {
    pub fn new(id: &str, source_text: &str) -> Result<Self, RequirementError> {
        if !is_valid_requirement_id(id) {
            return Err(RequirementError::InvalidId(id.to_string()));
        }
        Ok(Self {
            id: id.to_string(),
            source_text: source_text.to_string(),
            status: RequirementStatus::Drafted,
            candidates: Vec::new(),
            selected: None,
        })
    }

    pub fn selected_formula(&self) -> Option<&Formula> {
        self.selected.map(|i| &self.candidates[i].formula)
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.candidates.len())
            .filter(|&i| self.candidates[i].state == CandidateState::Active)
            .collect()
    }

    /// Replaces the candidate list; the requirement goes back to validation.
    pub fn set_candidates(&mut self, candidates: Vec<Candidate>) {
        self.candidates = candidates;
        self.selected = None;
        self.status = RequirementStatus::Validating;
    }

    /// Marks one candidate as the formalization.
    pub fn select(&mut self, index: usize) -> Result<(), RequirementError> {
        let c = self
            .candidates
            .get(index)
            .ok_or_else(|| RequirementError::NoSuchCandidate {
                id: self.id.clone(),
                index,
            })?;
        if c.state == CandidateState::Pruned {
            return Err(RequirementError::CandidatePruned {
                id: self.id.clone(),
                index,
            });
        }
        for c in &mut self.candidates {
            if c.state == CandidateState::Selected {
                c.state = CandidateState::Active;
            }
        }
        self.candidates[index].state = CandidateState::Selected;
        self.selected = Some(index);
        self.status = RequirementStatus::Formalized;
        Ok(())
    }

    pub fn check(&self, props: &PropSet) -> Result<(), String> {
        if !is_valid_requirement_id(&self.id) {
            return Err(format!("invalid id `{}`", self.id));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            c.check(props).map_err(|e| format!("candidates/{i}: {e}"))?;
        }
        let selected: Vec<usize> = (0..self.candidates.len())
            .filter(|&i| self.candidates[i].state == CandidateState::Selected)
            .collect();
        match (self.selected, selected.as_slice()) {
            (None, []) => Ok(()),
            (Some(i), [j]) if i == *j => {
                if self.status == RequirementStatus::Formalized {
                    Ok(())
                } else {
                    Err("selected candidate requires status formalized".into())
                }
            }
            _ => Err("selected index disagrees with candidate states".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn props() -> PropSet {
        PropSet::new(["on_path", "cone_encounter"]).unwrap()
    }

    #[test]
    fn candidate_invariants() {
        let c = Candidate::from_re(
            "globally, when on_path, the rover shall eventually satisfy cone_encounter",
            &props(),
        )
        .unwrap();
        assert_eq!(c.formula.to_string(), "G (on_path -> F cone_encounter)");
        c.check(&props()).unwrap();
        let mut bad = c.clone();
        bad.formula = Formula::True;
        assert!(bad.check(&props()).is_err());
    }

    #[test]
    fn selection_lifecycle() {
        let mut r = Requirement::new("REQ-LIV-002", "Once the rover is navigating a designated path").unwrap();
        assert!(Requirement::new("bad id", "").is_err());
        r.set_candidates(vec![
            Candidate::from_re("globally, the rover shall always satisfy on_path", &props()).unwrap(),
            Candidate::from_re("globally, the rover shall eventually satisfy on_path", &props())
                .unwrap(),
        ]);
        assert_eq!(r.status, RequirementStatus::Validating);
        r.candidates[0].state = CandidateState::Pruned;
        r.candidates[0].prune_reason = Some(PruneReason {
            trace_id: 0,
            label: Label::Accept,
        });
        assert!(matches!(r.select(0), Err(RequirementError::CandidatePruned { .. })));
        r.select(1).unwrap();
        assert_eq!(r.status, RequirementStatus::Formalized);
        assert_eq!(r.selected_formula().unwrap().to_string(), "G F on_path");
        r.check(&props()).unwrap();
        r.selected = Some(0);
        assert!(r.check(&props()).is_err());
    }
}
