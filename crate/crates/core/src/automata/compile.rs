//! LTLf to DFA by formula progression.
//!
//! A state is a pair (residual, last-flag). The residual is the obligation
//! that the next letter and its suffix must meet, kept as a DNF over the
//! temporal and literal subformulas of the input, so the state space is
//! finite. The flag records whether the word read so far, taken as a
//! complete trace, satisfies the formula: it is the residual of the previous
//! state evaluated at a final position, where strong obligations on a
//! missing next position fail and weak ones hold.

use std::collections::HashMap;

use super::{AutomataError, Dfa, StateId};
use crate::ltlf::{to_nnf, Formula, LtlfError, PropSet};

pub const DEFAULT_MAX_PROPS: usize = 10;
pub const DEFAULT_MAX_STATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileLimits {
    pub max_props: usize,
    pub max_states: usize,
}

impl Default for CompileLimits {
    fn default() -> Self {
        Self {
            max_props: DEFAULT_MAX_PROPS,
            max_states: DEFAULT_MAX_STATES,
        }
    }
}

/// Compiles `f` over the propositions it mentions.
pub fn compile(f: &Formula) -> Result<Dfa, AutomataError> {
    compile_over(f, &f.prop_set()?, CompileLimits::default())
}

/// Compiles `f` over `props`, which must contain every atom of `f`.
pub fn compile_over(
    f: &Formula,
    props: &PropSet,
    limits: CompileLimits,
) -> Result<Dfa, AutomataError> {
    if props.len() > limits.max_props {
        return Err(AutomataError::TooManyPropositions {
            count: props.len(),
            limit: limits.max_props,
        });
    }
    let mut b = Builder::new(props.clone());
    let root = b.intern(&to_nnf(f))?;
    b.explore(root, limits.max_states)
}

type NodeId = u32;
type Clause = Vec<NodeId>;
type Dnf = Vec<Clause>;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Node {
    True,
    False,
    // (bit shift of the proposition in a letter, polarity)
    Lit(u32, bool),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Next(NodeId),
    WeakNext(NodeId),
    Eventually(NodeId),
    Always(NodeId),
    Until(NodeId, NodeId),
    Release(NodeId, NodeId),
}

struct Builder {
    props: PropSet,
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    /// Complementary literal of a literal node, when interned.
    complement: Vec<Option<NodeId>>,
    prog_memo: HashMap<(NodeId, u64), Dnf>,
}

fn dnf_true() -> Dnf {
    vec![vec![]]
}

fn dnf_false() -> Dnf {
    vec![]
}

impl Builder {
    fn new(props: PropSet) -> Self {
        Self {
            props,
            nodes: Vec::new(),
            index: HashMap::new(),
            complement: Vec::new(),
            prog_memo: HashMap::new(),
        }
    }

    fn add(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        if let Node::Lit(bit, pol) = n {
            let other = self.index.get(&Node::Lit(bit, !pol)).copied();
            self.complement.push(other);
            if let Some(o) = other {
                self.complement[o as usize] = Some(id);
            }
        } else {
            self.complement.push(None);
        }
        self.nodes.push(n.clone());
        self.index.insert(n, id);
        id
    }

    fn intern(&mut self, f: &Formula) -> Result<NodeId, AutomataError> {
        let n = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom(p) => self.lit(p.as_str(), true)?,
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(p) => self.lit(p.as_str(), false)?,
                _ => unreachable!("input is in NNF"),
            },
            Formula::Implies(..) => unreachable!("input is in NNF"),
            Formula::And(a, b) => Node::And(self.intern(a)?, self.intern(b)?),
            Formula::Or(a, b) => Node::Or(self.intern(a)?, self.intern(b)?),
            Formula::Next(a) => Node::Next(self.intern(a)?),
            Formula::WeakNext(a) => Node::WeakNext(self.intern(a)?),
            Formula::Eventually(a) => Node::Eventually(self.intern(a)?),
            Formula::Always(a) => Node::Always(self.intern(a)?),
            Formula::Until(a, b) => Node::Until(self.intern(a)?, self.intern(b)?),
            Formula::Release(a, b) => Node::Release(self.intern(a)?, self.intern(b)?),
        };
        Ok(self.add(n))
    }

    fn lit(&self, name: &str, pol: bool) -> Result<Node, AutomataError> {
        let i = self
            .props
            .index_of(name)
            .ok_or_else(|| LtlfError::UnknownProposition(name.to_string()))?;
        Ok(Node::Lit((self.props.len() - 1 - i) as u32, pol))
    }

    /// Boolean structure of a node expanded into a DNF over leaf nodes.
    fn dnf(&self, id: NodeId) -> Dnf {
        match self.nodes[id as usize] {
            Node::True => dnf_true(),
            Node::False => dnf_false(),
            Node::And(a, b) => self.and(&self.dnf(a), &self.dnf(b)),
            Node::Or(a, b) => self.or(self.dnf(a), self.dnf(b)),
            _ => vec![vec![id]],
        }
    }

    fn or(&self, mut a: Dnf, b: Dnf) -> Dnf {
        a.extend(b);
        normalize(a)
    }

    fn and(&self, a: &Dnf, b: &Dnf) -> Dnf {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            'pair: for y in b {
                let mut c: Clause = Vec::with_capacity(x.len() + y.len());
                c.extend_from_slice(x);
                c.extend_from_slice(y);
                c.sort_unstable();
                c.dedup();
                for &l in &c {
                    if let Some(o) = self.complement[l as usize] {
                        if c.binary_search(&o).is_ok() {
                            continue 'pair;
                        }
                    }
                }
                out.push(c);
            }
        }
        normalize(out)
    }

    /// Obligation on the suffix after `letter`, given `id` must hold at the
    /// position reading `letter`.
    fn prog(&mut self, id: NodeId, letter: u64) -> Dnf {
        if let Some(d) = self.prog_memo.get(&(id, letter)) {
            return d.clone();
        }
        let leaf = || vec![vec![id]];
        let d = match self.nodes[id as usize].clone() {
            Node::True => dnf_true(),
            Node::False => dnf_false(),
            Node::Lit(bit, pol) => {
                if ((letter >> bit) & 1 == 1) == pol {
                    dnf_true()
                } else {
                    dnf_false()
                }
            }
            Node::And(a, b) => {
                let (pa, pb) = (self.prog(a, letter), self.prog(b, letter));
                self.and(&pa, &pb)
            }
            Node::Or(a, b) => {
                let (pa, pb) = (self.prog(a, letter), self.prog(b, letter));
                self.or(pa, pb)
            }
            Node::Next(a) | Node::WeakNext(a) => self.dnf(a),
            Node::Eventually(a) => {
                let pa = self.prog(a, letter);
                self.or(pa, leaf())
            }
            Node::Always(a) => {
                let pa = self.prog(a, letter);
                self.and(&pa, &leaf())
            }
            Node::Until(a, b) => {
                let (pa, pb) = (self.prog(a, letter), self.prog(b, letter));
                let stay = self.and(&pa, &leaf());
                self.or(pb, stay)
            }
            Node::Release(a, b) => {
                let (pa, pb) = (self.prog(a, letter), self.prog(b, letter));
                let stay = self.or(pa, leaf());
                self.and(&pb, &stay)
            }
        };
        self.prog_memo.insert((id, letter), d.clone());
        d
    }

    /// Does `id` hold at a final position reading `letter`?
    fn last(&self, id: NodeId, letter: u64) -> bool {
        match self.nodes[id as usize] {
            Node::True => true,
            Node::False => false,
            Node::Lit(bit, pol) => ((letter >> bit) & 1 == 1) == pol,
            Node::And(a, b) => self.last(a, letter) && self.last(b, letter),
            Node::Or(a, b) => self.last(a, letter) || self.last(b, letter),
            Node::Next(_) => false,
            Node::WeakNext(_) => true,
            Node::Eventually(a) | Node::Always(a) => self.last(a, letter),
            Node::Until(_, b) | Node::Release(_, b) => self.last(b, letter),
        }
    }

    /// Does `id` hold on the empty suffix? Only used for the initial state,
    /// whose flag never affects the language over nonempty traces.
    fn empty(&self, id: NodeId) -> bool {
        match self.nodes[id as usize] {
            Node::True | Node::WeakNext(_) | Node::Always(_) | Node::Release(..) => true,
            Node::False
            | Node::Lit(..)
            | Node::Next(_)
            | Node::Eventually(_)
            | Node::Until(..) => false,
            Node::And(a, b) => self.empty(a) && self.empty(b),
            Node::Or(a, b) => self.empty(a) || self.empty(b),
        }
    }

    fn explore(mut self, root: NodeId, max_states: usize) -> Result<Dfa, AutomataError> {
        let k = self.props.alphabet_size();
        let init = (self.dnf(root), self.empty(root));
        let mut ids: HashMap<(Dnf, bool), StateId> = HashMap::new();
        let mut states: Vec<(Dnf, bool)> = vec![init.clone()];
        ids.insert(init, 0);
        let mut delta: Vec<StateId> = Vec::new();
        let mut s = 0;
        while s < states.len() {
            let residual = states[s].0.clone();
            for letter in 0..k {
                let mut next = dnf_false();
                let mut flag = false;
                for clause in &residual {
                    flag |= clause.iter().all(|&l| self.last(l, letter));
                    let mut acc = dnf_true();
                    for &l in clause {
                        let p = self.prog(l, letter);
                        acc = self.and(&acc, &p);
                        if acc.is_empty() {
                            break;
                        }
                    }
                    next = self.or(next, acc);
                }
                let key = (next, flag);
                let t = match ids.get(&key) {
                    Some(&t) => t,
                    None => {
                        if states.len() >= max_states {
                            return Err(AutomataError::TooManyStates(max_states));
                        }
                        let t = states.len();
                        ids.insert(key.clone(), t);
                        states.push(key);
                        t
                    }
                };
                delta.push(t);
            }
            s += 1;
        }
        let accepting = states.iter().map(|(_, f)| *f).collect();
        Ok(Dfa::from_table(self.props, 0, accepting, delta))
    }
}

/// Sorts clauses, drops duplicates and clauses subsumed by smaller ones.
fn normalize(mut d: Dnf) -> Dnf {
    d.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    d.dedup();
    let mut out: Dnf = Vec::with_capacity(d.len());
    for c in d {
        if !out.iter().any(|kept| is_subset(kept, &c)) {
            out.push(c);
        }
    }
    out.sort_unstable();
    out
}

fn is_subset(small: &[NodeId], big: &[NodeId]) -> bool {
    small.len() <= big.len() && small.iter().all(|x| big.binary_search(x).is_ok())
}
