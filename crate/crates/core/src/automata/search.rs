use std::collections::VecDeque;

use super::{Dfa, StateId};
use crate::ltlf::Trace;

impl Dfa {
    /// Shortest letter word leading from `from` to a state satisfying
    /// `goal`, lexicographically least among the shortest (letters compared
    /// numerically). With `nonempty`, the empty word is not a candidate.
    pub fn shortest_word(
        &self,
        from: StateId,
        nonempty: bool,
        goal: impl Fn(StateId) -> bool,
    ) -> Option<Vec<u64>> {
        if !nonempty && goal(from) {
            return Some(Vec::new());
        }
        let k = self.alphabet_size() as u64;
        let mut parent: Vec<Option<(StateId, u64)>> = vec![None; self.num_states()];
        let mut seen = vec![false; self.num_states()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for a in 0..k {
                let t = self.step(u, a);
                if goal(t) {
                    let mut word = vec![a];
                    let mut cur = u;
                    while let Some((p, l)) = parent[cur] {
                        word.push(l);
                        cur = p;
                    }
                    word.reverse();
                    return Some(word);
                }
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = Some((u, a));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Exact emptiness over nonempty traces: no accepting state is reachable
    /// in one or more steps.
    pub fn is_empty(&self) -> bool {
        self.shortest_word(self.initial(), true, |s| self.is_accepting(s))
            .is_none()
    }

    /// States reachable from `s` in zero or more steps.
    pub fn reachable_from(&self, s: StateId) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for e in self.edges(u) {
                if !seen[e.target] {
                    seen[e.target] = true;
                    stack.push(e.target);
                }
            }
        }
        seen
    }

    pub fn trace_of(&self, word: &[u64]) -> Option<Trace> {
        Trace::from_bits(self.props(), word).ok()
    }
}

/// Minimum-length accepted trace, lexicographically least among those, or
/// `None` when the language is empty.
pub fn shortest_accepted(d: &Dfa) -> Option<Trace> {
    d.shortest_word(d.initial(), true, |s| d.is_accepting(s))
        .and_then(|w| d.trace_of(&w))
}

/// Per-state classification used for four-valued verdicts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateClasses {
    /// Some accepting state is reachable (the state itself included).
    pub live: Vec<bool>,
    /// Every state reachable (the state itself included) is accepting.
    pub safe: Vec<bool>,
}

impl StateClasses {
    pub fn of(d: &Dfa) -> Self {
        let n = d.num_states();
        // Backward fixpoints over the reverse graph.
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for s in 0..n {
            for e in d.edges(s) {
                preds[e.target].push(s);
            }
        }
        let backward = |seed: &dyn Fn(StateId) -> bool| {
            let mut mark = vec![false; n];
            let mut stack: Vec<StateId> = (0..n).filter(|&s| seed(s)).collect();
            for &s in &stack {
                mark[s] = true;
            }
            while let Some(u) = stack.pop() {
                for &p in &preds[u] {
                    if !mark[p] {
                        mark[p] = true;
                        stack.push(p);
                    }
                }
            }
            mark
        };
        let live = backward(&|s| d.is_accepting(s));
        let can_reject = backward(&|s| !d.is_accepting(s));
        let safe = can_reject.iter().map(|&r| !r).collect();
        Self { live, safe }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{compile, product, ProductMode};
    use super::*;
    use crate::ltlf::parse_formula_free as parse;

    fn c(text: &str) -> Dfa {
        compile(&parse(text).unwrap()).unwrap()
    }

    #[test]
    fn witnesses() {
        assert_eq!(shortest_accepted(&c("F p")).unwrap().frames(), vec![vec!["p"]]);
        let x = shortest_accepted(&c("X p")).unwrap();
        assert_eq!(x.frames(), vec![vec![], vec!["p"]]);
        let both = product(&c("G p"), &c("F ~p"), ProductMode::Intersection).unwrap();
        assert!(shortest_accepted(&both).is_none());
        let fpq = product(&c("F p"), &c("F q"), ProductMode::Intersection).unwrap();
        assert_eq!(
            shortest_accepted(&fpq).unwrap().frames(),
            vec![vec!["p", "q"]]
        );
    }

    #[test]
    fn vacuous_rover_witness() {
        let w = shortest_accepted(&c("G (on_path -> F cone_encounter)")).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w.frames()[0].is_empty());
    }

    #[test]
    fn classes() {
        let d = c("G p");
        let cl = StateClasses::of(&d);
        let sink = d.step(0, 0);
        assert!(cl.live[0] && !cl.safe[0]);
        assert!(!cl.live[sink] && !cl.safe[sink]);
        let t = c("true");
        assert!(StateClasses::of(&t).safe[0]);
    }
}
