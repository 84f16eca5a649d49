use super::Formula;

/// Negation normal form: negations only on atoms, implications eliminated,
/// negated temporal operators replaced by their finite-trace duals.
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, false)
}

fn nnf(f: &Formula, neg: bool) -> Formula {
    use Formula::*;
    match f {
        True if neg => False,
        False if neg => True,
        True | False => f.clone(),
        Atom(_) if neg => Formula::not(f.clone()),
        Atom(_) => f.clone(),
        Not(a) => nnf(a, !neg),
        And(a, b) if neg => Formula::or(nnf(a, true), nnf(b, true)),
        And(a, b) => Formula::and(nnf(a, false), nnf(b, false)),
        Or(a, b) if neg => Formula::and(nnf(a, true), nnf(b, true)),
        Or(a, b) => Formula::or(nnf(a, false), nnf(b, false)),
        Implies(a, b) if neg => Formula::and(nnf(a, false), nnf(b, true)),
        Implies(a, b) => Formula::or(nnf(a, true), nnf(b, false)),
        Next(a) if neg => Formula::weak_next(nnf(a, true)),
        Next(a) => Formula::next(nnf(a, false)),
        WeakNext(a) if neg => Formula::next(nnf(a, true)),
        WeakNext(a) => Formula::weak_next(nnf(a, false)),
        Eventually(a) if neg => Formula::always(nnf(a, true)),
        Eventually(a) => Formula::eventually(nnf(a, false)),
        Always(a) if neg => Formula::eventually(nnf(a, true)),
        Always(a) => Formula::always(nnf(a, false)),
        Until(a, b) if neg => Formula::release(nnf(a, true), nnf(b, true)),
        Until(a, b) => Formula::until(nnf(a, false), nnf(b, false)),
        Release(a, b) if neg => Formula::until(nnf(a, true), nnf(b, true)),
        Release(a, b) => Formula::release(nnf(a, false), nnf(b, false)),
    }
}

/// True when negations occur only directly on atoms and no implication remains.
pub fn is_nnf(f: &Formula) -> bool {
    match f {
        Formula::Not(a) => matches!(**a, Formula::Atom(_)),
        Formula::Implies(..) => false,
        _ => f.children().into_iter().all(is_nnf),
    }
}
