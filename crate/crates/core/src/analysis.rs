//! Set-level analysis of formalized requirements: joint satisfiability,
//! pairwise conflicts and redundancy by language inclusion.
//!
//! A set is consistent when one nonempty trace satisfies every requirement.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::automata::{
    compile, minimize, product, shortest_accepted, AutomataError, Dfa, ProductMode,
    DEFAULT_MAX_PROPS,
};
use crate::exec::Execution;
use crate::ltlf::{Formula, LtlfError, PropSet, Trace};
use crate::re_lang::trigger;
use crate::reqstore::Requirement;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("requirement {0} is not formalized")]
    Unformalized(String),
    #[error("duplicate requirement id {0}")]
    DuplicateId(String),
    #[error("requirement set uses {count} propositions, limit is {limit}")]
    TooManyPropositions { count: usize, limit: usize },
    #[error("requirement {id}: {source}")]
    Automata {
        id: String,
        #[source]
        source: AutomataError,
    },
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
}

/// One formalized requirement as seen by the analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisInput {
    pub id: String,
    pub formula: Formula,
    /// Condition whose occurrence makes the requirement non-vacuous.
    pub trigger: Option<Formula>,
}

impl AnalysisInput {
    pub fn new(id: &str, formula: Formula) -> Self {
        Self {
            id: id.to_string(),
            formula,
            trigger: None,
        }
    }
}

/// Selected formulas of `reqs`; every requirement must be formalized.
pub fn formalized_inputs(reqs: &[Requirement]) -> Result<Vec<AnalysisInput>, AnalysisError> {
    reqs.iter()
        .map(|r| {
            let i = r
                .selected
                .ok_or_else(|| AnalysisError::Unformalized(r.id.clone()))?;
            let c = &r.candidates[i];
            Ok(AnalysisInput {
                id: r.id.clone(),
                formula: c.formula.clone(),
                trigger: trigger(&c.spec),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictPair {
    pub first: String,
    pub second: String,
    /// States of the intersection automaton whose emptiness was established.
    pub proof_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redundancy {
    pub implied: String,
    pub implying: Vec<String>,
    /// A trace satisfying the implying requirements (and thus the implied one).
    pub example: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub satisfiable: bool,
    /// Shortest trace satisfying the whole set.
    pub witness: Option<Trace>,
    /// The witness never triggers any requirement's condition.
    pub vacuous: bool,
    pub conflict_pairs: Vec<ConflictPair>,
    pub redundancies: Vec<Redundancy>,
}

impl AnalysisReport {
    pub fn has_findings(&self) -> bool {
        !self.satisfiable || !self.conflict_pairs.is_empty() || !self.redundancies.is_empty()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if self.satisfiable {
            let _ = writeln!(out, "satisfiable: yes");
            if let Some(w) = &self.witness {
                let _ = writeln!(out, "witness ({} frames):", w.len());
                out.push_str(&w.render_table());
            }
            if self.vacuous {
                let _ = writeln!(out, "advisory: the witness triggers no requirement condition");
            }
        } else {
            let _ = writeln!(out, "satisfiable: no");
        }
        for c in &self.conflict_pairs {
            let _ = writeln!(
                out,
                "conflict: {} and {} (empty intersection, {} states)",
                c.first, c.second, c.proof_size
            );
        }
        for r in &self.redundancies {
            let _ = writeln!(out, "redundant: {} implied by {}", r.implied, r.implying.join(" & "));
        }
        out
    }
}

struct Compiled {
    id: String,
    dfa: Dfa,
}

fn prepare(inputs: &[AnalysisInput], exec: Execution) -> Result<Vec<Compiled>, AnalysisError> {
    let mut seen = BTreeSet::new();
    for i in inputs {
        if !seen.insert(i.id.as_str()) {
            return Err(AnalysisError::DuplicateId(i.id.clone()));
        }
    }
    let mut union = PropSet::empty();
    for i in inputs {
        union = union.union(&i.formula.prop_set()?)?;
    }
    if union.len() > DEFAULT_MAX_PROPS {
        return Err(AnalysisError::TooManyPropositions {
            count: union.len(),
            limit: DEFAULT_MAX_PROPS,
        });
    }
    let mut sorted: Vec<&AnalysisInput> = inputs.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    exec.map(&sorted, |i| {
        compile(&i.formula)
            .map(|d| Compiled {
                id: i.id.clone(),
                dfa: minimize(&d),
            })
            .map_err(|source| AnalysisError::Automata {
                id: i.id.clone(),
                source,
            })
    })
    .into_iter()
    .collect()
}

fn intersect(dfas: &[&Dfa]) -> Dfa {
    let mut acc = dfas[0].clone();
    for d in &dfas[1..] {
        acc = minimize(&product(&acc, d, ProductMode::Intersection).expect("within limit"));
    }
    acc
}

/// Joint satisfiability with a shortest witness, plus every unordered pair
/// whose intersection is empty. Findings are ordered by requirement id.
pub fn check_consistency(
    inputs: &[AnalysisInput],
    exec: Execution,
) -> Result<AnalysisReport, AnalysisError> {
    let compiled = prepare(inputs, exec)?;
    let (witness, satisfiable) = if compiled.is_empty() {
        (None, true)
    } else {
        let all: Vec<&Dfa> = compiled.iter().map(|c| &c.dfa).collect();
        let w = shortest_accepted(&intersect(&all));
        let sat = w.is_some();
        (w, sat)
    };

    let pairs: Vec<(usize, usize)> = (0..compiled.len())
        .flat_map(|i| (i + 1..compiled.len()).map(move |j| (i, j)))
        .collect();
    let conflict_pairs = exec
        .map(&pairs, |&(i, j)| {
            let x = product(&compiled[i].dfa, &compiled[j].dfa, ProductMode::Intersection)
                .expect("within limit");
            x.is_empty().then(|| ConflictPair {
                first: compiled[i].id.clone(),
                second: compiled[j].id.clone(),
                proof_size: x.num_states(),
            })
        })
        .into_iter()
        .flatten()
        .collect();

    let vacuous = match &witness {
        Some(w) => {
            let triggers: Vec<&Formula> = inputs.iter().filter_map(|i| i.trigger.as_ref()).collect();
            !triggers.is_empty()
                && triggers
                    .iter()
                    .all(|t| w.steps().iter().all(|v| !t.eval_letter(v)))
        }
        None => false,
    };

    let redundancies = redundancy_of(&compiled, 2, exec);
    Ok(AnalysisReport {
        satisfiable,
        witness,
        vacuous,
        conflict_pairs,
        redundancies,
    })
}

/// Requirements whose language contains the intersection of some subset of
/// the others (of size up to `max_subset`). Only minimal subsets are
/// reported, and subsets with an empty intersection are skipped since
/// conflicts already cover them.
pub fn check_redundancy(
    inputs: &[AnalysisInput],
    max_subset: usize,
    exec: Execution,
) -> Result<Vec<Redundancy>, AnalysisError> {
    let compiled = prepare(inputs, exec)?;
    Ok(redundancy_of(&compiled, max_subset, exec))
}

fn subsets(n: usize, exclude: usize, max: usize) -> Vec<Vec<usize>> {
    let pool: Vec<usize> = (0..n).filter(|&j| j != exclude).collect();
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &layer {
            let from = s.last().map_or(0, |&l| pool.iter().position(|&p| p == l).unwrap() + 1);
            for &p in &pool[from..] {
                let mut t = s.clone();
                t.push(p);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn redundancy_of(compiled: &[Compiled], max_subset: usize, exec: Execution) -> Vec<Redundancy> {
    let n = compiled.len();
    let targets: Vec<usize> = (0..n).collect();
    exec.map(&targets, |&i| {
        let mut found: Vec<Vec<usize>> = Vec::new();
        let mut out = Vec::new();
        for s in subsets(n, i, max_subset) {
            if found.iter().any(|f| f.iter().all(|x| s.contains(x))) {
                continue;
            }
            let dfas: Vec<&Dfa> = s.iter().map(|&j| &compiled[j].dfa).collect();
            let meet = intersect(&dfas);
            let Some(example) = shortest_accepted(&meet) else {
                continue;
            };
            let diff = product(&meet, &compiled[i].dfa, ProductMode::Difference).expect("within limit");
            if diff.is_empty() {
                out.push(Redundancy {
                    implied: compiled[i].id.clone(),
                    implying: s.iter().map(|&j| compiled[j].id.clone()).collect(),
                    example,
                });
                found.push(s);
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect()
}
