//! LTLf abstract syntax, the concrete-syntax parser and printer, negation
//! normal form and the reference finite-trace semantics.
//!
//! Formulas are plain immutable trees. Traces are nonempty sequences of
//! total valuations over a fixed, lexicographically ordered proposition set.

mod nnf;
mod oracle;
mod parser;
mod printer;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use nnf::{is_nnf, to_nnf};
pub use oracle::eval_oracle;
pub use parser::{parse_formula, parse_formula_free, parse_propositional};
pub use printer::print_formula;

/// Largest proposition set a [`Valuation`] can range over.
pub const MAX_VALUATION_PROPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtlfError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("invalid proposition name `{0}`")]
    InvalidPropName(String),
    #[error("duplicate proposition `{0}`")]
    DuplicateProposition(String),
    #[error("too many propositions: {0} (at most {MAX_VALUATION_PROPS})")]
    TooManyPropositions(usize),
    #[error("position {index} out of range for trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty trace")]
    EmptyTrace,
    #[error("proposition set mismatch: expected {expected}, found {found}")]
    PropositionMismatch { expected: String, found: String },
}

/// Words of the concrete grammar that can never name a proposition.
const RESERVED: &[&str] = &["true", "false"];

/// A validated proposition name matching `[a-z][a-z0-9_]*`.
#[derive(Clone, Eq, PartialOrd, Ord, Hash)]
pub struct PropId(Arc<str>);

impl PropId {
    pub fn new(name: &str) -> Result<Self, LtlfError> {
        if is_valid_prop_name(name) {
            Ok(Self(Arc::from(name)))
        } else {
            Err(LtlfError::InvalidPropName(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialEq for PropId {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl fmt::Debug for PropId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for PropId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for PropId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for PropId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PropId::new(&s).map_err(serde::de::Error::custom)
    }
}

pub fn is_valid_prop_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && !RESERVED.contains(&name)
}

/// An ordered set of propositions. Order is lexicographic by name and fixes
/// the bit layout of every [`Valuation`] over the set.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PropSet(Arc<[PropId]>);

impl PropSet {
    pub fn new<I, S>(names: I) -> Result<Self, LtlfError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for name in names {
            let id = PropId::new(name.as_ref())?;
            if !set.insert(id.clone()) {
                return Err(LtlfError::DuplicateProposition(id.to_string()));
            }
        }
        Self::from_ids(set)
    }

    pub fn from_ids(ids: impl IntoIterator<Item = PropId>) -> Result<Self, LtlfError> {
        let set: BTreeSet<PropId> = ids.into_iter().collect();
        if set.len() > MAX_VALUATION_PROPS {
            return Err(LtlfError::TooManyPropositions(set.len()));
        }
        Ok(Self(set.into_iter().collect()))
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PropId> {
        self.0.iter()
    }

    pub fn get(&self, i: usize) -> Option<&PropId> {
        self.0.get(i)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.binary_search_by(|p| p.as_str().cmp(name)).ok()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn lookup(&self, name: &str) -> Option<&PropId> {
        self.index_of(name).map(|i| &self.0[i])
    }

    pub fn is_subset(&self, other: &PropSet) -> bool {
        self.iter().all(|p| other.contains(p.as_str()))
    }

    pub fn union(&self, other: &PropSet) -> Result<PropSet, LtlfError> {
        Self::from_ids(self.iter().chain(other.iter()).cloned())
    }

    /// Number of distinct valuations, `2^len`.
    pub fn alphabet_size(&self) -> u64 {
        1u64 << self.len()
    }

    /// Position of each proposition of `self` inside `superset`.
    pub fn positions_in(&self, superset: &PropSet) -> Result<Vec<usize>, LtlfError> {
        self.iter()
            .map(|p| {
                superset
                    .index_of(p.as_str())
                    .ok_or_else(|| LtlfError::UnknownProposition(p.to_string()))
            })
            .collect()
    }
}

impl fmt::Debug for PropSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl fmt::Display for PropSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for PropSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

impl<'de> Deserialize<'de> for PropSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        PropSet::new(names).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    True,
    False,
    Atom(PropId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    WeakNext(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
}

#[allow(clippy::should_implement_trait)]
impl Formula {
    pub fn atom(p: &PropId) -> Self {
        Formula::Atom(p.clone())
    }

    pub fn not(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(a: Formula) -> Self {
        Formula::Next(Box::new(a))
    }

    pub fn weak_next(a: Formula) -> Self {
        Formula::WeakNext(Box::new(a))
    }

    pub fn eventually(a: Formula) -> Self {
        Formula::Eventually(Box::new(a))
    }

    pub fn always(a: Formula) -> Self {
        Formula::Always(Box::new(a))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Self {
        Formula::Release(Box::new(a), Box::new(b))
    }

    /// Node count.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            True | False | Atom(_) => vec![],
            Not(a) | Next(a) | WeakNext(a) | Eventually(a) | Always(a) => vec![a],
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => vec![a, b],
        }
    }

    pub fn atoms(&self) -> BTreeSet<PropId> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<PropId>) {
        if let Formula::Atom(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    /// The propositions occurring in the formula, as a set.
    pub fn prop_set(&self) -> Result<PropSet, LtlfError> {
        PropSet::from_ids(self.atoms())
    }

    /// True when the formula contains no temporal operator.
    pub fn is_propositional(&self) -> bool {
        use Formula::*;
        match self {
            True | False | Atom(_) => true,
            Not(a) => a.is_propositional(),
            And(a, b) | Or(a, b) | Implies(a, b) => a.is_propositional() && b.is_propositional(),
            Next(_) | WeakNext(_) | Eventually(_) | Always(_) | Until(..) | Release(..) => false,
        }
    }

    /// Evaluates a propositional formula on a single valuation. Temporal
    /// nodes are evaluated as on a one-letter trace.
    pub fn eval_letter(&self, v: &Valuation) -> bool {
        use Formula::*;
        match self {
            True => true,
            False => false,
            Atom(p) => v.get(p.as_str()).unwrap_or(false),
            Not(a) => !a.eval_letter(v),
            And(a, b) => a.eval_letter(v) && b.eval_letter(v),
            Or(a, b) => a.eval_letter(v) || b.eval_letter(v),
            Implies(a, b) => !a.eval_letter(v) || b.eval_letter(v),
            Next(_) => false,
            WeakNext(_) => true,
            Eventually(a) | Always(a) => a.eval_letter(v),
            Until(_, b) | Release(_, b) => b.eval_letter(v),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&print_formula(self))
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_formula_free(&s).map_err(serde::de::Error::custom)
    }
}

/// A total truth assignment over a proposition set. Proposition `i` of the
/// set is stored at bit `len - 1 - i`, so numeric order of [`Valuation::bits`]
/// is lexicographic order over proposition names with false before true.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Valuation {
    props: PropSet,
    bits: u64,
}

impl Valuation {
    pub fn from_bits(props: &PropSet, bits: u64) -> Self {
        let mask = if props.len() == 64 {
            u64::MAX
        } else {
            (1u64 << props.len()) - 1
        };
        Self {
            props: props.clone(),
            bits: bits & mask,
        }
    }

    /// Valuation where exactly the named propositions are true.
    pub fn from_true<I, S>(props: &PropSet, true_props: I) -> Result<Self, LtlfError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut bits = 0u64;
        for name in true_props {
            let i = props
                .index_of(name.as_ref())
                .ok_or_else(|| LtlfError::UnknownProposition(name.as_ref().to_string()))?;
            bits |= 1 << (props.len() - 1 - i);
        }
        Ok(Self {
            props: props.clone(),
            bits,
        })
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn value_at(&self, i: usize) -> bool {
        (self.bits >> (self.props.len() - 1 - i)) & 1 == 1
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.props.index_of(name).map(|i| self.value_at(i))
    }

    pub fn true_props(&self) -> Vec<&PropId> {
        self.props
            .iter()
            .enumerate()
            .filter(|(i, _)| self.value_at(*i))
            .map(|(_, p)| p)
            .collect()
    }

    /// The same assignment restricted to a subset of the propositions, as a
    /// letter index over `sub`.
    pub fn project_bits(&self, positions: &[usize]) -> u64 {
        let n = positions.len();
        positions.iter().enumerate().fold(0u64, |acc, (k, &i)| {
            acc | (u64::from(self.value_at(i)) << (n - 1 - k))
        })
    }
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.props.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            if !self.value_at(i) {
                write!(f, "~")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// A finite, nonempty sequence of valuations over one proposition set.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    props: PropSet,
    steps: Vec<Valuation>,
}

impl Trace {
    pub fn new(props: &PropSet, steps: Vec<Valuation>) -> Result<Self, LtlfError> {
        if steps.is_empty() {
            return Err(LtlfError::EmptyTrace);
        }
        for v in &steps {
            if v.props() != props {
                return Err(LtlfError::PropositionMismatch {
                    expected: props.to_string(),
                    found: v.props().to_string(),
                });
            }
        }
        Ok(Self {
            props: props.clone(),
            steps,
        })
    }

    pub fn from_bits(props: &PropSet, letters: &[u64]) -> Result<Self, LtlfError> {
        let steps = letters
            .iter()
            .map(|&b| Valuation::from_bits(props, b))
            .collect();
        Self::new(props, steps)
    }

    /// Builds a trace from the names of the true propositions at each frame.
    pub fn from_frames<F, S>(props: &PropSet, frames: &[F]) -> Result<Self, LtlfError>
    where
        F: AsRef<[S]>,
        S: AsRef<str>,
    {
        let steps = frames
            .iter()
            .map(|fr| Valuation::from_true(props, fr.as_ref().iter().map(|s| s.as_ref())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(props, steps)
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> &[Valuation] {
        &self.steps
    }

    pub fn get(&self, i: usize) -> Option<&Valuation> {
        self.steps.get(i)
    }

    pub fn prefix(&self, len: usize) -> Result<Trace, LtlfError> {
        Trace::new(&self.props, self.steps[..len.min(self.steps.len())].to_vec())
    }

    /// Names of the true propositions at each frame.
    pub fn frames(&self) -> Vec<Vec<String>> {
        self.steps
            .iter()
            .map(|v| v.true_props().into_iter().map(|p| p.to_string()).collect())
            .collect()
    }

    /// Per-frame truth table: one row per proposition, one column per frame.
    pub fn render_table(&self) -> String {
        let width = self.props.iter().map(|p| p.as_str().len()).max().unwrap_or(0);
        let mut out = format!("{:width$} |", "frame");
        for i in 0..self.len() {
            out.push_str(&format!(" {i:>2}"));
        }
        out.push('\n');
        for (pi, p) in self.props.iter().enumerate() {
            out.push_str(&format!("{:width$} |", p.as_str()));
            for v in &self.steps {
                out.push_str(if v.value_at(pi) { "  T" } else { "  ." });
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, v) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:?}")?;
        }
        write!(f, ">")
    }
}

#[derive(Serialize, Deserialize)]
struct TraceRepr {
    props: PropSet,
    frames: Vec<Vec<String>>,
}

impl Serialize for Trace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TraceRepr {
            props: self.props.clone(),
            frames: self.frames(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Trace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = TraceRepr::deserialize(d)?;
        Trace::from_frames(&repr.props, &repr.frames).map_err(serde::de::Error::custom)
    }
}
