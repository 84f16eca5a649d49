//! Reference semantics. Deliberately a direct transcription of the LTLf
//! satisfaction relation with no memoization, so it can be trusted as the
//! yardstick for every automaton built elsewhere.

use super::{Formula, LtlfError, Trace};

/// `t, i |= f`.
pub fn eval_oracle(f: &Formula, t: &Trace, i: usize) -> Result<bool, LtlfError> {
    if i >= t.len() {
        return Err(LtlfError::IndexOutOfRange { index: i, len: t.len() });
    }
    let letters: Vec<u64> = t.steps().iter().map(|v| v.bits()).collect();
    let resolved = resolve(f, t)?;
    Ok(holds(&resolved, &letters, i))
}

// The formula with atoms replaced by their bit position in the trace's letters.
enum Node {
    True,
    False,
    Atom(u32),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Implies(Box<Node>, Box<Node>),
    Next(Box<Node>),
    WeakNext(Box<Node>),
    Eventually(Box<Node>),
    Always(Box<Node>),
    Until(Box<Node>, Box<Node>),
    Release(Box<Node>, Box<Node>),
}

fn resolve(f: &Formula, t: &Trace) -> Result<Node, LtlfError> {
    let r = |a: &Formula| resolve(a, t).map(Box::new);
    Ok(match f {
        Formula::True => Node::True,
        Formula::False => Node::False,
        Formula::Atom(p) => {
            let i = t
                .props()
                .index_of(p.as_str())
                .ok_or_else(|| LtlfError::UnknownProposition(p.to_string()))?;
            Node::Atom((t.props().len() - 1 - i) as u32)
        }
        Formula::Not(a) => Node::Not(r(a)?),
        Formula::And(a, b) => Node::And(r(a)?, r(b)?),
        Formula::Or(a, b) => Node::Or(r(a)?, r(b)?),
        Formula::Implies(a, b) => Node::Implies(r(a)?, r(b)?),
        Formula::Next(a) => Node::Next(r(a)?),
        Formula::WeakNext(a) => Node::WeakNext(r(a)?),
        Formula::Eventually(a) => Node::Eventually(r(a)?),
        Formula::Always(a) => Node::Always(r(a)?),
        Formula::Until(a, b) => Node::Until(r(a)?, r(b)?),
        Formula::Release(a, b) => Node::Release(r(a)?, r(b)?),
    })
}

fn holds(f: &Node, t: &[u64], i: usize) -> bool {
    let n = t.len();
    match f {
        Node::True => true,
        Node::False => false,
        Node::Atom(bit) => (t[i] >> bit) & 1 == 1,
        Node::Not(a) => !holds(a, t, i),
        Node::And(a, b) => holds(a, t, i) && holds(b, t, i),
        Node::Or(a, b) => holds(a, t, i) || holds(b, t, i),
        Node::Implies(a, b) => !holds(a, t, i) || holds(b, t, i),
        Node::Next(a) => i + 1 < n && holds(a, t, i + 1),
        Node::WeakNext(a) => i + 1 >= n || holds(a, t, i + 1),
        Node::Eventually(a) => (i..n).any(|j| holds(a, t, j)),
        Node::Always(a) => (i..n).all(|j| holds(a, t, j)),
        // exists j in [i, n): b at j and a at every k in [i, j)
        Node::Until(a, b) => {
            (i..n).any(|j| holds(b, t, j) && (i..j).all(|k| holds(a, t, k)))
        }
        // for all j in [i, n): b at j, or a at some k in [i, j)
        Node::Release(a, b) => {
            (i..n).all(|j| holds(b, t, j) || (i..j).any(|k| holds(a, t, k)))
        }
    }
}
