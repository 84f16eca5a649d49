//! Structural test generation over a requirement's minimized automaton.
//!
//! Coverage items are states or transitions (state, guard index). Each
//! item gets one shortest case: the shortest path to the item, the least
//! letter of its guard for transitions, then the shortest continuation to an
//! accepting state when one is reachable (a `Satisfy` case) or nothing (the
//! item already sits in a rejecting region, a `Violate` case). Identical
//! traces are emitted once.

use std::collections::BTreeSet;
use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::automata::{compile, minimize, AutomataError, Dfa, StateClasses, StateId};
use crate::ltlf::{Formula, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    StateCoverage,
    TransitionCoverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    Satisfy,
    Violate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoverageItem {
    State(StateId),
    /// Source state and index into its guard list.
    Transition(StateId, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub requirement_id: String,
    pub trace: Trace,
    pub expected: Expected,
    /// Transitions the trace takes, in first-visit order.
    pub covered: Vec<(StateId, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub requirement_id: String,
    pub formula: Formula,
    pub criterion: Criterion,
    pub cases: Vec<TestCase>,
    pub total_items: usize,
    pub covered_items: usize,
    pub coverage: f64,
    pub unreachable: Vec<CoverageItem>,
}

fn items(d: &Dfa, criterion: Criterion) -> Vec<CoverageItem> {
    (0..d.num_states())
        .flat_map(|s| match criterion {
            Criterion::StateCoverage => vec![CoverageItem::State(s)],
            Criterion::TransitionCoverage => (0..d.edges(s).len())
                .map(|g| CoverageItem::Transition(s, g))
                .collect(),
        })
        .collect()
}

/// Transitions taken by a letter word, in first-visit order.
pub fn replay(d: &Dfa, word: &[u64]) -> Vec<(StateId, usize)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut s = d.initial();
    for &l in word {
        let g = d.edge_index(s, l);
        if seen.insert((s, g)) {
            out.push((s, g));
        }
        s = d.step(s, l);
    }
    out
}

fn states_visited(d: &Dfa, word: &[u64]) -> BTreeSet<StateId> {
    let mut s = d.initial();
    let mut out = BTreeSet::from([s]);
    for &l in word {
        s = d.step(s, l);
        out.insert(s);
    }
    out
}

fn case_word(d: &Dfa, classes: &StateClasses, item: CoverageItem) -> Option<Vec<u64>> {
    let init = d.initial();
    let (target, mut word) = match item {
        CoverageItem::State(s) => (s, d.shortest_word(init, false, |t| t == s)?),
        CoverageItem::Transition(s, g) => {
            let mut w = d.shortest_word(init, false, |t| t == s)?;
            let e = &d.edges(s)[g];
            w.push(e.min_letter);
            (e.target, w)
        }
    };
    if classes.live[target] {
        let nonempty = word.is_empty();
        word.extend(d.shortest_word(target, nonempty, |t| d.is_accepting(t))?);
    } else if word.is_empty() {
        // empty language: any one letter violates
        word.push(0);
    }
    Some(word)
}

/// Suite for one requirement. Fails only when the formula exceeds the
/// compilation limits.
pub fn generate_suite(
    requirement_id: &str,
    formula: &Formula,
    criterion: Criterion,
) -> Result<TestSuite, AutomataError> {
    let d = minimize(&compile(formula)?);
    Ok(suite_for(requirement_id, formula, &d, criterion))
}

/// Same as [`generate_suite`] over an already minimized automaton.
pub fn suite_for(requirement_id: &str, formula: &Formula, d: &Dfa, criterion: Criterion) -> TestSuite {
    let classes = StateClasses::of(d);
    let reachable = d.reachable_from(d.initial());
    let all = items(d, criterion);
    let unreachable: Vec<CoverageItem> = all
        .iter()
        .copied()
        .filter(|it| match *it {
            CoverageItem::State(s) | CoverageItem::Transition(s, _) => !reachable[s],
        })
        .collect();

    let mut words: Vec<Vec<u64>> = Vec::new();
    for &it in &all {
        if unreachable.contains(&it) {
            continue;
        }
        if let Some(w) = case_word(d, &classes, it) {
            if !words.contains(&w) {
                words.push(w);
            }
        }
    }

    let mut hit: BTreeSet<CoverageItem> = BTreeSet::new();
    let cases: Vec<TestCase> = words
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let covered = replay(d, w);
            hit.extend(covered.iter().map(|&(s, g)| CoverageItem::Transition(s, g)));
            hit.extend(states_visited(d, w).into_iter().map(CoverageItem::State));
            TestCase {
                id: format!("{requirement_id}-T{:03}", n + 1),
                requirement_id: requirement_id.to_string(),
                trace: d.trace_of(w).expect("nonempty word"),
                expected: if d.accepts_letters(w) {
                    Expected::Satisfy
                } else {
                    Expected::Violate
                },
                covered,
            }
        })
        .collect();

    let covered_items = all.iter().filter(|it| hit.contains(it)).count();
    let denom = all.len() - unreachable.len();
    TestSuite {
        requirement_id: requirement_id.to_string(),
        formula: formula.clone(),
        criterion,
        cases,
        total_items: all.len(),
        covered_items,
        coverage: if denom == 0 {
            1.0
        } else {
            covered_items as f64 / denom as f64
        },
        unreachable,
    }
}

#[derive(Serialize)]
struct Header<'a> {
    req_id: &'a str,
    formula: String,
    criterion: Criterion,
    coverage: f64,
    total_items: usize,
    unreachable: &'a [CoverageItem],
}

#[derive(Serialize)]
struct Record<'a> {
    case_id: &'a str,
    req_id: &'a str,
    expected: Expected,
    frames: Vec<Vec<String>>,
    captions: Vec<Vec<String>>,
    covered: &'a [(StateId, usize)],
}

/// JSON lines: one header object, then one object per case with fields in
/// the order `case_id, req_id, expected, frames, captions, covered`.
/// Captions come from `captions` (proposition name to caption); a
/// proposition without a caption is captioned by its name.
pub fn export_suite<W: Write>(
    suite: &TestSuite,
    captions: &IndexMap<String, String>,
    mut out: W,
) -> std::io::Result<()> {
    let header = Header {
        req_id: &suite.requirement_id,
        formula: suite.formula.to_string(),
        criterion: suite.criterion,
        coverage: suite.coverage,
        total_items: suite.total_items,
        unreachable: &suite.unreachable,
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for c in &suite.cases {
        let frames = c.trace.frames();
        let caps = frames
            .iter()
            .map(|f| {
                f.iter()
                    .map(|p| captions.get(p).cloned().unwrap_or_else(|| p.clone()))
                    .collect()
            })
            .collect();
        let rec = Record {
            case_id: &c.id,
            req_id: &c.requirement_id,
            expected: c.expected,
            frames,
            captions: caps,
            covered: &c.covered,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
