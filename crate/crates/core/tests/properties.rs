use std::collections::BTreeMap;

use proptest::prelude::*;

use reqmon_core::authoring::parse_reply;
use reqmon_core::automata::{compile, equivalent, minimize};
use reqmon_core::elicitation::{Label, SessionStatus, ValidationSession};
use reqmon_core::exec::Execution;
use reqmon_core::ltlf::{
    eval_oracle, is_nnf, parse_formula_free, print_formula, to_nnf, Formula, PropId, PropSet, Trace,
};
use reqmon_core::re_lang::{lower_to_ltlf, parse_re, render_re, ReSpec, Scope, Timing};
use reqmon_core::semcov::{coverage, summarize, ScoreMatrix, Thresholds};

const NAMES: [&str; 3] = ["p", "q", "r"];

fn props() -> PropSet {
    PropSet::new(NAMES).unwrap()
}

fn atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        1 => Just(Formula::True),
        1 => Just(Formula::False),
        6 => (0..NAMES.len()).prop_map(|i| Formula::atom(&PropId::new(NAMES[i]).unwrap())),
    ]
}

fn formula(depth: u32) -> impl Strategy<Value = Formula> {
    atom().prop_recursive(depth, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::weak_next),
            inner.clone().prop_map(Formula::eventually),
            inner.clone().prop_map(Formula::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::release(a, b)),
        ]
    })
}

fn bexpr() -> impl Strategy<Value = Formula> {
    atom().prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::implies(a, b)),
        ]
    })
}

fn spec() -> impl Strategy<Value = ReSpec> {
    let scope = prop_oneof![Just(Scope::Globally), bexpr().prop_map(Scope::While)];
    let timing = prop_oneof![
        Just(Timing::Always),
        Just(Timing::Eventually),
        Just(Timing::Immediately),
        bexpr().prop_map(Timing::Until),
        (1u32..6).prop_map(Timing::Within),
    ];
    let component = prop_oneof![Just("rover"), Just("system"), Just("arm_ctrl"), Just("ego2")];
    (scope, proptest::option::of(bexpr()), component, timing, bexpr()).prop_map(
        |(scope, condition, component, timing, response)| ReSpec {
            scope,
            condition,
            component: component.to_string(),
            timing,
            response,
        },
    )
}

fn trace(max_len: usize) -> impl Strategy<Value = Trace> {
    proptest::collection::vec(0u64..8, 1..=max_len).prop_map(|bits| Trace::from_bits(&props(), &bits).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn print_parse_round_trip(f in formula(5).prop_filter("size", |f| f.size() <= 12)) {
        let text = print_formula(&f);
        prop_assert_eq!(parse_formula_free(&text).unwrap(), f);
    }

    #[test]
    fn nnf_is_equivalent(f in formula(4), t in trace(5)) {
        let n = to_nnf(&f);
        prop_assert!(is_nnf(&n));
        prop_assert_eq!(eval_oracle(&n, &t, 0).unwrap(), eval_oracle(&f, &t, 0).unwrap());
    }

    #[test]
    fn automaton_agrees_with_oracle(f in formula(4), t in trace(6)) {
        let d = minimize(&compile(&f).unwrap());
        prop_assert_eq!(d.accepts(&t).unwrap(), eval_oracle(&f, &t, 0).unwrap());
    }

    #[test]
    fn re_render_parse_identity(s in spec()) {
        let text = render_re(&s);
        let back = parse_re(&text, &props()).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(render_re(&back), text);
    }

    #[test]
    fn re_render_is_injective(a in spec(), b in spec()) {
        if render_re(&a) == render_re(&b) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn dedup_keeps_one_per_language(specs in proptest::collection::vec(spec(), 1..6)) {
        let reply: Vec<String> = specs.iter().map(render_re).collect();
        let out = parse_reply(&reply.join("\n"), &props(), 10).unwrap();
        let dfas: Vec<_> = specs.iter().map(|s| minimize(&compile(&lower_to_ltlf(s)).unwrap())).collect();
        let mut classes: Vec<usize> = Vec::new();
        for (i, d) in dfas.iter().enumerate() {
            if !classes.iter().any(|&j| equivalent(&dfas[j], d).unwrap()) {
                classes.push(i);
            }
        }
        prop_assert_eq!(out.candidates.len(), classes.len());
        for (c, &i) in out.candidates.iter().zip(&classes) {
            prop_assert_eq!(&c.formula, &lower_to_ltlf(&specs[i]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 150, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn elicitation_keeps_the_truth(
        cands in proptest::collection::vec(formula(3), 2..5),
        pick in any::<proptest::sample::Index>(),
    ) {
        let truth_ix = pick.index(cands.len());
        let truth = cands[truth_ix].clone();
        let mut s = ValidationSession::new("R", &props(), cands.clone()).unwrap();
        let mut asked = 0;
        while s.status == SessionStatus::Open {
            let Some(q) = s.next_question().unwrap().cloned() else { break };
            asked += 1;
            let label = if eval_oracle(&truth, &q.trace, 0).unwrap() { Label::Accept } else { Label::Reject };
            let pruned = s.apply_label(q.id, label).unwrap();
            prop_assert!(!pruned.is_empty());
            prop_assert!(!pruned.contains(&truth_ix));
        }
        prop_assert_eq!(s.status, SessionStatus::Converged);
        prop_assert!(asked < cands.len());
        let td = minimize(&compile(&truth).unwrap());
        for &a in &s.active {
            prop_assert!(equivalent(&minimize(&compile(&cands[a]).unwrap()), &td).unwrap());
        }
    }

    #[test]
    fn summary_is_ordered(values in proptest::collection::vec(-1.0f64..=1.0, 1..40)) {
        let s = summarize(&values);
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert!(s.std >= 0.0);
    }

    #[test]
    fn coverage_monotone_in_threshold(
        scores in proptest::collection::vec(-1.0f64..=1.0, 12),
        lo in -1.0f64..=1.0,
        hi in -1.0f64..=1.0,
    ) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let items = (0..4).map(|i| format!("i{i}")).collect();
        let feats = (0..3).map(|j| format!("f{j}")).collect();
        let m = ScoreMatrix::new(items, feats, scores).unwrap();
        let a = coverage(&m, &Thresholds::uniform(lo), 0.5, Execution::Sequential).unwrap();
        let b = coverage(&m, &Thresholds::uniform(hi), 0.5, Execution::Sequential).unwrap();
        for (x, y) in a.features.iter().zip(&b.features) {
            prop_assert!(x.covered >= y.covered);
        }
        let par = coverage(&m, &Thresholds::uniform(lo), 0.5, Execution::default()).unwrap();
        prop_assert_eq!(par, a);
    }

    #[test]
    fn per_feature_override_only_touches_its_feature(
        scores in proptest::collection::vec(-1.0f64..=1.0, 12),
        tau in -1.0f64..=1.0,
    ) {
        let items = (0..4).map(|i| format!("i{i}")).collect();
        let feats = (0..3).map(|j| format!("f{j}")).collect();
        let m = ScoreMatrix::new(items, feats, scores).unwrap();
        let base = Thresholds::uniform(0.4);
        let mut over = base.clone();
        over.overrides = BTreeMap::from([("f1".to_string(), tau)]);
        let a = coverage(&m, &base, 0.5, Execution::Sequential).unwrap();
        let b = coverage(&m, &over, 0.5, Execution::Sequential).unwrap();
        prop_assert_eq!(&a.features[0], &b.features[0]);
        prop_assert_eq!(&a.features[2], &b.features[2]);
    }
}

/// Every template over small expressions in two atoms reparses to itself,
/// and no two templates share a rendering.
#[test]
fn re_templates_exhaustive() {
    let atoms = [PropId::new("p").unwrap(), PropId::new("q").unwrap()];
    let props = PropSet::from_ids(atoms.iter().cloned()).unwrap();
    let prop_only = |max: usize| -> Vec<Formula> {
        let mut out: Vec<Formula> = reqmon_core::sweep::formulas_up_to(&atoms, max)
            .into_iter()
            .filter(|f| f.is_propositional())
            .collect();
        for c in [Formula::True, Formula::False] {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    };
    let small = prop_only(2);
    let larger = prop_only(3);
    let scopes: Vec<Scope> = std::iter::once(Scope::Globally)
        .chain(small.iter().cloned().map(Scope::While))
        .collect();
    let conditions: Vec<Option<Formula>> = std::iter::once(None).chain(small.iter().cloned().map(Some)).collect();
    let timings: Vec<Timing> = [Timing::Always, Timing::Eventually, Timing::Immediately, Timing::Within(1), Timing::Within(2)]
        .into_iter()
        .chain(small.iter().cloned().map(Timing::Until))
        .collect();
    let mut seen = std::collections::HashSet::new();
    for scope in &scopes {
        for condition in &conditions {
            for timing in &timings {
                for response in &larger {
                    let s = ReSpec {
                        scope: scope.clone(),
                        condition: condition.clone(),
                        component: "rover".into(),
                        timing: timing.clone(),
                        response: response.clone(),
                    };
                    let text = render_re(&s);
                    assert_eq!(parse_re(&text, &props).unwrap(), s, "{text}");
                    assert!(seen.insert(text));
                }
            }
        }
    }
    assert!(seen.len() > 10_000);
}
