//! Deterministic finite automata over the valuation alphabet of a
//! proposition set: LTLf compilation, minimization, Boolean products,
//! emptiness and shortest-witness extraction.
//!
//! Letters are valuations encoded as in [`Valuation::bits`], so iterating
//! letters in increasing numeric order follows the witness tie-breaking rule
//! (lexicographic over proposition names, false before true).

mod compile;
mod minimize;
mod product;
mod search;

use std::fmt::Write as _;

use crate::ltlf::{Formula, LtlfError, PropId, PropSet, Trace, Valuation};

pub use compile::{compile, compile_over, CompileLimits, DEFAULT_MAX_PROPS, DEFAULT_MAX_STATES};
pub use minimize::minimize;
pub use product::{equivalent, product, ProductMode};
pub use search::{shortest_accepted, StateClasses};

pub type StateId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomataError {
    #[error("{count} propositions exceed the limit of {limit}")]
    TooManyPropositions { count: usize, limit: usize },
    #[error("automaton exceeds {0} states")]
    TooManyStates(usize),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
}

/// A propositional transition label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard(Formula);

impl Guard {
    pub fn formula(&self) -> &Formula {
        &self.0
    }

    pub fn holds(&self, v: &Valuation) -> bool {
        self.0.eval_letter(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub guard: Guard,
    pub target: StateId,
    /// Smallest letter satisfying the guard.
    pub min_letter: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    props: PropSet,
    initial: StateId,
    accepting: Vec<bool>,
    /// `delta[state * alphabet + letter]`
    delta: Vec<StateId>,
    edges: Vec<Vec<Edge>>,
}

impl Dfa {
    /// Builds an automaton from a dense transition table. Guards are derived
    /// per (state, target) and ordered by their smallest letter.
    pub fn from_table(
        props: PropSet,
        initial: StateId,
        accepting: Vec<bool>,
        delta: Vec<StateId>,
    ) -> Self {
        let k = props.alphabet_size() as usize;
        let n = accepting.len();
        assert_eq!(delta.len(), n * k, "transition table shape");
        assert!(initial < n.max(1));
        let mut edges = Vec::with_capacity(n);
        for s in 0..n {
            let row = &delta[s * k..(s + 1) * k];
            let mut targets: Vec<(u64, StateId)> = Vec::new();
            for (letter, &t) in row.iter().enumerate() {
                assert!(t < n, "dangling transition");
                if !targets.iter().any(|&(_, x)| x == t) {
                    targets.push((letter as u64, t));
                }
            }
            let out = targets
                .into_iter()
                .map(|(min_letter, t)| {
                    let member: Vec<bool> = row.iter().map(|&x| x == t).collect();
                    Edge {
                        guard: Guard(guard_formula(&props, &member)),
                        target: t,
                        min_letter,
                    }
                })
                .collect();
            edges.push(out);
        }
        Self {
            props,
            initial,
            accepting,
            delta,
            edges,
        }
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.props.alphabet_size() as usize
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting[s]
    }

    pub fn accepting(&self) -> &[bool] {
        &self.accepting
    }

    pub fn step(&self, s: StateId, letter: u64) -> StateId {
        self.delta[s * self.alphabet_size() + letter as usize]
    }

    pub fn edges(&self, s: StateId) -> &[Edge] {
        &self.edges[s]
    }

    /// Index of the guard of `s` that `letter` satisfies.
    pub fn edge_index(&self, s: StateId, letter: u64) -> usize {
        let t = self.step(s, letter);
        self.edges[s]
            .iter()
            .position(|e| e.target == t)
            .expect("every target has an edge")
    }

    /// Total number of guarded edges.
    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn run_letters(&self, letters: &[u64]) -> StateId {
        letters.iter().fold(self.initial, |s, &a| self.step(s, a))
    }

    pub fn accepts_letters(&self, letters: &[u64]) -> bool {
        !letters.is_empty() && self.accepting[self.run_letters(letters)]
    }

    /// Maps a valuation over any superset of the automaton's propositions
    /// to a letter.
    pub fn letter_of(&self, v: &Valuation) -> Result<u64, AutomataError> {
        if v.props() == &self.props {
            return Ok(v.bits());
        }
        let pos = self.props.positions_in(v.props())?;
        Ok(v.project_bits(&pos))
    }

    pub fn trace_letters(&self, t: &Trace) -> Result<Vec<u64>, AutomataError> {
        if t.props() == &self.props {
            return Ok(t.steps().iter().map(Valuation::bits).collect());
        }
        let pos = self.props.positions_in(t.props())?;
        Ok(t.steps().iter().map(|v| v.project_bits(&pos)).collect())
    }

    pub fn accepts(&self, t: &Trace) -> Result<bool, AutomataError> {
        Ok(self.accepts_letters(&self.trace_letters(t)?))
    }

    /// Copy with one state's acceptance flipped.
    pub(crate) fn with_acceptance(&self, accepting: Vec<bool>) -> Dfa {
        Dfa {
            accepting,
            ..self.clone()
        }
    }

    pub(crate) fn delta(&self) -> &[StateId] {
        &self.delta
    }

    /// Checks that each state's guards are pairwise exclusive, jointly
    /// exhaustive and agree with the transition table, by evaluating every
    /// guard on every valuation.
    pub fn check_guards(&self) -> Result<(), String> {
        for s in 0..self.num_states() {
            for letter in 0..self.alphabet_size() as u64 {
                let v = Valuation::from_bits(&self.props, letter);
                let enabled: Vec<&Edge> =
                    self.edges[s].iter().filter(|e| e.guard.holds(&v)).collect();
                if enabled.len() != 1 {
                    return Err(format!(
                        "state {s}: {} guards enabled on {v:?}",
                        enabled.len()
                    ));
                }
                if enabled[0].target != self.step(s, letter) {
                    return Err(format!("state {s}: guard disagrees with table on {v:?}"));
                }
            }
        }
        Ok(())
    }

    /// Text graph export: a header with propositions, initial and accepting
    /// states, then one `state guard state` line per transition.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let props: Vec<&str> = self.props.iter().map(PropId::as_str).collect();
        let _ = writeln!(out, "props: {}", props.join(" "));
        let _ = writeln!(out, "initial: {}", self.initial);
        let acc: Vec<String> = (0..self.num_states())
            .filter(|&s| self.accepting[s])
            .map(|s| s.to_string())
            .collect();
        let _ = writeln!(out, "accepting: {}", acc.join(" "));
        for (s, edges) in self.edges.iter().enumerate() {
            for e in edges {
                let _ = writeln!(out, "{s} {} {}", e.guard.formula(), e.target);
            }
        }
        out
    }
}

/// Smallest propositional formula found by Shannon expansion (in
/// proposition order) for the letter set `member`.
fn guard_formula(props: &PropSet, member: &[bool]) -> Formula {
    let mut prefix = vec![0usize; member.len() + 1];
    for (i, &m) in member.iter().enumerate() {
        prefix[i + 1] = prefix[i] + usize::from(m);
    }
    shannon(props, &prefix, 0, 0, member.len())
}

fn shannon(props: &PropSet, prefix: &[usize], k: usize, lo: usize, size: usize) -> Formula {
    let count = prefix[lo + size] - prefix[lo];
    if count == size {
        return Formula::True;
    }
    if count == 0 {
        return Formula::False;
    }
    let half = size / 2;
    let low = shannon(props, prefix, k + 1, lo, half);
    let high = shannon(props, prefix, k + 1, lo + half, half);
    if low == high {
        return low;
    }
    let p = Formula::atom(props.get(k).expect("proposition index"));
    let np = Formula::not(p.clone());
    match (&high, &low) {
        (Formula::True, Formula::False) => p,
        (Formula::False, Formula::True) => np,
        (Formula::True, _) => Formula::or(p, low),
        (_, Formula::True) => Formula::or(np, high),
        (Formula::False, _) => Formula::and(np, low),
        (_, Formula::False) => Formula::and(p, high),
        _ => Formula::or(Formula::and(p, high), Formula::and(np, low)),
    }
}
