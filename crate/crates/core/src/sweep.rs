//! Exhaustive enumeration of small formulas and traces, and the
//! automaton-versus-oracle sweep built on them.

use crate::automata::{compile_over, minimize, AutomataError, Dfa, StateClasses};
use crate::exec::Execution;
use crate::ltlf::{eval_oracle, Formula, PropId, PropSet, Trace, Valuation};
use crate::monitor::{verdict_at, Verdict};
use crate::testgen::{suite_for, Criterion, Expected};

/// Every formula over `atoms` with exactly `size` nodes, for each size in
/// `1..=max_size`, in a fixed order. Leaves are `true`, `false` and the
/// atoms; all unary and binary connectives are used.
pub fn formulas_up_to(atoms: &[PropId], max_size: usize) -> Vec<Formula> {
    let by_size = formulas_by_size(atoms, max_size);
    by_size.into_iter().skip(1).flatten().collect()
}

/// `result[n]` holds every formula of exactly `n` nodes (`result[0]` is empty).
pub fn formulas_by_size(atoms: &[PropId], max_size: usize) -> Vec<Vec<Formula>> {
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); max_size + 1];
    if max_size == 0 {
        return by_size;
    }
    by_size[1].push(Formula::True);
    by_size[1].push(Formula::False);
    by_size[1].extend(atoms.iter().map(Formula::atom));
    let unary: [fn(Formula) -> Formula; 5] = [
        Formula::not,
        Formula::next,
        Formula::weak_next,
        Formula::eventually,
        Formula::always,
    ];
    let binary: [fn(Formula, Formula) -> Formula; 5] = [
        Formula::and,
        Formula::or,
        Formula::implies,
        Formula::until,
        Formula::release,
    ];
    for n in 2..=max_size {
        let mut level = Vec::new();
        for op in unary {
            level.extend(by_size[n - 1].iter().cloned().map(op));
        }
        for op in binary {
            for left in 1..n - 1 {
                let right = n - 1 - left;
                for a in &by_size[left] {
                    for b in &by_size[right] {
                        level.push(op(a.clone(), b.clone()));
                    }
                }
            }
        }
        by_size[n] = level;
    }
    by_size
}

/// Every letter word of length `1..=max_len` over an alphabet of size `k`,
/// shorter words first, each length in lexicographic order.
pub fn words_up_to(k: u64, max_len: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u64>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * k as usize);
        for w in &layer {
            for a in 0..k {
                let mut x = w.clone();
                x.push(a);
                next.push(x);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Every nonempty trace over `props` up to `max_len` frames.
pub fn traces_up_to(props: &PropSet, max_len: usize) -> Vec<Trace> {
    words_up_to(props.alphabet_size(), max_len)
        .iter()
        .map(|w| Trace::from_bits(props, w).expect("nonempty"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Mismatch {
    pub formula: Formula,
    pub trace: Trace,
    pub dfa: bool,
    pub oracle: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub formulas: usize,
    pub checks: usize,
    pub mismatches: Vec<Mismatch>,
    pub errors: Vec<(Formula, AutomataError)>,
}

/// Compares `compile(f)` with the reference semantics on every trace of the
/// given set, for every formula. Each formula is compiled over `props`.
pub fn oracle_equivalence(
    formulas: &[Formula],
    props: &PropSet,
    traces: &[Trace],
    exec: Execution,
) -> SweepReport {
    let words: Vec<Vec<u64>> = traces
        .iter()
        .map(|t| t.steps().iter().map(|v| v.bits()).collect())
        .collect();
    let per_formula = exec.map(formulas, |f| {
        let d = match compile_over(f, props, Default::default()) {
            Ok(d) => d,
            Err(e) => return Err((f.clone(), e)),
        };
        let mut bad = Vec::new();
        for (t, w) in traces.iter().zip(&words) {
            let by_dfa = d.accepts_letters(w);
            let by_oracle = eval_oracle(f, t, 0).expect("trace covers formula");
            if by_dfa != by_oracle {
                bad.push(Mismatch {
                    formula: f.clone(),
                    trace: t.clone(),
                    dfa: by_dfa,
                    oracle: by_oracle,
                });
            }
        }
        Ok(bad)
    });
    let mut report = SweepReport {
        formulas: formulas.len(),
        checks: formulas.len() * traces.len(),
        ..Default::default()
    };
    for r in per_formula {
        match r {
            Ok(bad) => report.mismatches.extend(bad),
            Err(e) => report.errors.push(e),
        }
    }
    report
}

/// Findings of a per-formula property sweep.
#[derive(Debug, Clone, Default)]
pub struct PropertyReport {
    pub formulas: usize,
    pub checks: usize,
    pub violations: Vec<(Formula, String)>,
    pub errors: Vec<(Formula, AutomataError)>,
}

impl PropertyReport {
    fn collect(formulas: usize, per: Vec<Result<(usize, Vec<String>), (Formula, AutomataError)>>, fs: &[Formula]) -> Self {
        let mut r = PropertyReport {
            formulas,
            ..Default::default()
        };
        for (f, x) in fs.iter().zip(per) {
            match x {
                Ok((checks, bad)) => {
                    r.checks += checks;
                    r.violations.extend(bad.into_iter().map(|m| (f.clone(), m)));
                }
                Err(e) => r.errors.push(e),
            }
        }
        r
    }
}

/// States reachable from `s` in one to `depth` steps, by forward layers.
fn reachable_within(d: &Dfa, s: usize, depth: usize) -> Vec<bool> {
    let mut seen = vec![false; d.num_states()];
    let mut frontier = vec![s];
    for _ in 0..depth {
        let mut next = Vec::new();
        for &u in &frontier {
            for l in 0..d.alphabet_size() as u64 {
                let t = d.step(u, l);
                if !seen[t] {
                    seen[t] = true;
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    seen
}

/// Checks the monitor's definitive verdicts. For every state of the
/// minimized automaton, reached by its shortest access word `u`:
/// `Violated` requires every extension of `u` (up to the state count of the
/// unminimized automaton) to be rejected and `Satisfied` every extension to
/// be accepted. Extensions are explored on the unminimized automaton by
/// forward search, and those of length up to 2 are also checked against
/// the oracle.
pub fn monitor_soundness(formulas: &[Formula], props: &PropSet, exec: Execution) -> PropertyReport {
    let short_ext = words_up_to(props.alphabet_size(), 2);
    let per = exec.map(formulas, |f| {
        let raw = compile_over(f, props, Default::default()).map_err(|e| (f.clone(), e))?;
        let d = minimize(&raw);
        let classes = StateClasses::of(&d);
        let mut bad = Vec::new();
        let mut checks = 0;
        for s in 0..d.num_states() {
            let Some(u) = d.shortest_word(d.initial(), true, |t| t == s) else {
                continue;
            };
            let verdict = verdict_at(&d, &classes, s);
            if !verdict.is_definitive() {
                continue;
            }
            let want = verdict == Verdict::Satisfied;
            let at = raw.run_letters(&u);
            checks += 1;
            if raw.is_accepting(at) != want {
                bad.push(format!("{verdict:?} after {u:?} but the prefix disagrees"));
            }
            let within = reachable_within(&raw, at, raw.num_states());
            if (0..raw.num_states()).any(|t| within[t] && raw.is_accepting(t) != want) {
                bad.push(format!("{verdict:?} after {u:?} but some extension disagrees"));
            }
            for w in &short_ext {
                let full: Vec<u64> = u.iter().chain(w).copied().collect();
                let t = Trace::from_bits(props, &full).expect("nonempty");
                checks += 1;
                if eval_oracle(f, &t, 0).expect("trace covers formula") != want {
                    bad.push(format!("{verdict:?} after {u:?} but the oracle disagrees on {t:?}"));
                }
            }
        }
        Ok((checks, bad))
    });
    PropertyReport::collect(formulas.len(), per, formulas)
}

/// Checks transition-coverage suites. Each case is replayed by evaluating
/// guards rather than the transition table; every reachable transition must
/// be taken by some case, every reported-unreachable item must be
/// unreachable and every expected verdict must equal the oracle's.
pub fn testgen_coverage(formulas: &[Formula], props: &PropSet, exec: Execution) -> PropertyReport {
    let per = exec.map(formulas, |f| {
        let d = minimize(&compile_over(f, props, Default::default()).map_err(|e| (f.clone(), e))?);
        let suite = suite_for("R", f, &d, Criterion::TransitionCoverage);
        let mut bad = Vec::new();
        let mut checks = 0;
        let mut taken: Vec<Vec<bool>> = (0..d.num_states()).map(|s| vec![false; d.edges(s).len()]).collect();
        for c in &suite.cases {
            let mut s = d.initial();
            for v in c.trace.steps() {
                let v = Valuation::from_true(props, v.true_props().iter().map(|p| p.as_str())).expect("same props");
                let g = d.edges(s).iter().position(|e| e.guard.holds(&v)).expect("guards are exhaustive");
                taken[s][g] = true;
                s = d.edges(s)[g].target;
            }
            checks += 1;
            let truth = eval_oracle(f, &c.trace, 0).expect("trace covers formula");
            if truth != (c.expected == Expected::Satisfy) {
                bad.push(format!("case {} expects {:?}, oracle says {truth}", c.id, c.expected));
            }
        }
        let reach = d.reachable_from(d.initial());
        for s in 0..d.num_states() {
            for (g, &hit) in taken[s].iter().enumerate() {
                checks += 1;
                if reach[s] && !hit {
                    bad.push(format!("transition ({s}, {g}) not covered"));
                }
            }
        }
        if suite.coverage != 1.0 {
            bad.push(format!("reported coverage {}", suite.coverage));
        }
        for it in &suite.unreachable {
            let (crate::testgen::CoverageItem::State(s) | crate::testgen::CoverageItem::Transition(s, _)) = *it;
            if reach[s] {
                bad.push(format!("{it:?} reported unreachable"));
            }
        }
        Ok((checks, bad))
    });
    PropertyReport::collect(formulas.len(), per, formulas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts() {
        let atoms = [PropId::new("p").unwrap(), PropId::new("q").unwrap()];
        let by = formulas_by_size(&atoms, 4);
        let counts: Vec<usize> = by.iter().map(Vec::len).collect();
        // leaves 4; n: 5*S(n-1) + 5*sum S(i)S(n-1-i)
        assert_eq!(counts, vec![0, 4, 20, 180, 1700]);
        assert_eq!(words_up_to(4, 2).len(), 4 + 16);
        assert_eq!(words_up_to(2, 3)[2], vec![0, 0]);
    }

    #[test]
    fn small_sweep_has_no_mismatch() {
        let atoms = [PropId::new("p").unwrap()];
        let props = PropSet::from_ids(atoms.iter().cloned()).unwrap();
        let fs = formulas_up_to(&atoms, 4);
        let ts = traces_up_to(&props, 4);
        let r = oracle_equivalence(&fs, &props, &ts, Execution::Sequential);
        assert!(r.errors.is_empty());
        assert!(r.mismatches.is_empty(), "{:?}", r.mismatches.first());
    }

    #[test]
    fn small_property_sweeps_are_clean() {
        let atoms = [PropId::new("p").unwrap(), PropId::new("q").unwrap()];
        let props = PropSet::from_ids(atoms.iter().cloned()).unwrap();
        let fs = formulas_up_to(&atoms, 4);
        for r in [
            monitor_soundness(&fs, &props, Execution::Sequential),
            testgen_coverage(&fs, &props, Execution::Parallel),
        ] {
            assert!(r.errors.is_empty());
            assert!(r.violations.is_empty(), "{:?}", r.violations.first());
            assert!(r.checks > 0);
        }
    }
}
