use std::collections::HashMap;

use super::{AutomataError, Dfa, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    Intersection,
    Union,
    /// Accepted by the left operand and rejected by the right.
    Difference,
    /// Accepted by exactly one operand.
    SymmetricDifference,
}

impl ProductMode {
    fn combine(self, a: bool, b: bool) -> bool {
        match self {
            ProductMode::Intersection => a && b,
            ProductMode::Union => a || b,
            ProductMode::Difference => a && !b,
            ProductMode::SymmetricDifference => a != b,
        }
    }
}

/// Synchronous product over the union of both proposition sets; a
/// proposition missing from one operand is unconstrained there. Only pairs
/// reachable from the initial pair are built. Complementation is the
/// acceptance flip in `Difference`, sound because every state has exactly one
/// successor per letter.
pub fn product(a: &Dfa, b: &Dfa, mode: ProductMode) -> Result<Dfa, AutomataError> {
    let props = a.props().union(b.props())?;
    let k = props.alphabet_size();
    let pa = a.props().positions_in(&props)?;
    let pb = b.props().positions_in(&props)?;
    let n = props.len();
    let project = |pos: &[usize], letter: u64| -> u64 {
        let m = pos.len();
        pos.iter().enumerate().fold(0u64, |acc, (j, &i)| {
            acc | (((letter >> (n - 1 - i)) & 1) << (m - 1 - j))
        })
    };
    let la: Vec<u64> = (0..k).map(|l| project(&pa, l)).collect();
    let lb: Vec<u64> = (0..k).map(|l| project(&pb, l)).collect();

    let start = (a.initial(), b.initial());
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::from([(start, 0)]);
    let mut pairs = vec![start];
    let mut delta = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let (sa, sb) = pairs[i];
        for l in 0..k as usize {
            let next = (a.step(sa, la[l]), b.step(sb, lb[l]));
            let t = *ids.entry(next).or_insert_with(|| {
                pairs.push(next);
                pairs.len() - 1
            });
            delta.push(t);
        }
        i += 1;
    }
    let accepting = pairs
        .iter()
        .map(|&(sa, sb)| mode.combine(a.is_accepting(sa), b.is_accepting(sb)))
        .collect();
    Ok(Dfa::from_table(props, 0, accepting, delta))
}

/// Language equivalence over nonempty traces.
pub fn equivalent(a: &Dfa, b: &Dfa) -> Result<bool, AutomataError> {
    let x = product(a, b, ProductMode::SymmetricDifference)?;
    Ok(x.is_empty())
}

#[cfg(test)]
mod tests {
    use super::super::{compile, minimize, shortest_accepted};
    use super::*;
    use crate::ltlf::{parse_formula_free as parse, PropSet, Trace};

    fn c(text: &str) -> Dfa {
        compile(&parse(text).unwrap()).unwrap()
    }

    #[test]
    fn contradiction_is_empty() {
        let d = product(&c("G p"), &c("F ~p"), ProductMode::Intersection).unwrap();
        assert!(d.is_empty());
        assert!(shortest_accepted(&d).is_none());
    }

    #[test]
    fn union_of_complements_is_universal() {
        let d = product(&c("p"), &c("~p"), ProductMode::Union).unwrap();
        assert_eq!(minimize(&d).num_states(), 1);
        for letters in [&[0u64][..], &[1], &[1, 0], &[0, 0, 1]] {
            assert!(d.accepts_letters(letters));
        }
    }

    #[test]
    fn difference_accepts_late_witness() {
        let d = product(&c("F p"), &c("G p"), ProductMode::Difference).unwrap();
        let props = PropSet::new(["p"]).unwrap();
        let t = Trace::from_frames(&props, &[vec![], vec!["p"]]).unwrap();
        assert!(d.accepts(&t).unwrap());
    }

    #[test]
    fn mixed_proposition_sets() {
        let d = product(&c("G p"), &c("F q"), ProductMode::Intersection).unwrap();
        assert_eq!(d.props().len(), 2);
        // <{p,~q}, {p,q}>
        assert!(d.accepts_letters(&[0b10, 0b11]));
        assert!(!d.accepts_letters(&[0b10, 0b01]));
    }

    #[test]
    fn equivalence() {
        assert!(equivalent(&c("G p"), &c("~F ~p")).unwrap());
        assert!(equivalent(&c("p U q"), &c("~(~p R ~q)")).unwrap());
        assert!(!equivalent(&c("F p"), &c("G p")).unwrap());
        assert!(!equivalent(&c("X true"), &c("N true")).unwrap());
    }
}
