//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reqmon_core::analysis::{check_consistency, check_redundancy, AnalysisInput};
use reqmon_core::authoring::StubProvider;
use reqmon_core::automata::{compile, equivalent, minimize};
use reqmon_core::elicitation::{Label, SessionStatus, ValidationSession};
use reqmon_core::exec::Execution;
use reqmon_core::ltlf::{eval_oracle, parse_formula_free, to_nnf, Formula, PropId, PropSet, Trace};
use reqmon_core::monitor::{scan_offline, MonitorSession, ScoreRecord, ThresholdConfig, Verdict};
use reqmon_core::project::{atomic_write_with, Project};
use reqmon_core::semcov::{coverage, ScoreMatrix, Thresholds};
use reqmon_core::sweep;

type Outcome = Result<String, String>;

fn atoms() -> (Vec<PropId>, PropSet) {
    let atoms = vec![PropId::new("p").unwrap(), PropId::new("q").unwrap()];
    let props = PropSet::from_ids(atoms.iter().cloned()).unwrap();
    (atoms, props)
}

fn f(text: &str) -> Formula {
    parse_formula_free(text).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let (atoms, props) = atoms();
    let start = Instant::now();
    let fs = sweep::formulas_up_to(&atoms, 6);
    let ts = sweep::traces_up_to(&props, 4);
    let r = sweep::oracle_equivalence(&fs, &props, &ts, Execution::default());
    let took = start.elapsed();
    let summary = format!(
        "{} formulas x {} traces, {} mismatches, {} errors, {:.1}s",
        r.formulas,
        ts.len(),
        r.mismatches.len(),
        r.errors.len(),
        took.as_secs_f64()
    );
    if let Some(m) = r.mismatches.first() {
        return Err(format!("{summary}; first: {} on {:?}", m.formula, m.trace));
    }
    if !r.errors.is_empty() || took > Duration::from_secs(60) {
        return Err(summary);
    }
    Ok(summary)
}

fn rover_project() -> Project {
    let mut p = Project::new(
        "rover",
        IndexMap::from([
            ("on_path".to_string(), "the rover is on the designated path".to_string()),
            ("cone_encounter".to_string(), "a traffic cone is in front of the rover".to_string()),
        ]),
    )
    .unwrap();
    p.add_requirement(
        "REQ-LIV-002",
        "Once the rover is navigating a designated path, it shall encounter a traffic cone.",
    )
    .unwrap();
    p
}

fn figure_two() -> Outcome {
    let mut p = rover_project();
    p.author("REQ-LIV-002", &StubProvider, 5).map_err(|e| e.to_string())?;
    let q = p
        .next_question("REQ-LIV-002")
        .map_err(|e| e.to_string())?
        .ok_or("no question")?;
    p.label("REQ-LIV-002", q.id, Label::Accept, None)
        .map_err(|e| e.to_string())?;
    let phi = p
        .requirement("REQ-LIV-002")
        .unwrap()
        .selected_formula()
        .ok_or("not formalized")?
        .clone();
    if phi != f("G (on_path -> F cone_encounter)") {
        return Err(format!("formalized as {phi}"));
    }
    let records: Vec<ScoreRecord> = [(0.63, 0.12), (0.58, 0.21), (0.61, 0.52)]
        .iter()
        .enumerate()
        .flat_map(|(i, &(a, b))| {
            [
                ScoreRecord { frame: i as u64, pred: "on_path".into(), score: a },
                ScoreRecord { frame: i as u64, pred: "cone_encounter".into(), score: b },
            ]
        })
        .collect();
    let reqs = vec![("REQ-LIV-002".to_string(), phi)];
    let props = p.props().unwrap();
    let cfg = ThresholdConfig::default();
    if cfg.default != 0.4 {
        return Err("default threshold is not 0.4".into());
    }
    let scan = scan_offline(&records, &props, &reqs, &cfg).map_err(|e| e.to_string())?;
    let got: Vec<Verdict> = scan[0].verdicts.iter().map(|x| x.1).collect();
    let want = vec![Verdict::PresumablyFalse, Verdict::PresumablyFalse, Verdict::PresumablyTrue];
    let mut online = MonitorSession::new(&props, &reqs, cfg).map_err(|e| e.to_string())?;
    let stepped: Vec<Verdict> = (0..3)
        .map(|i| {
            let scores: BTreeMap<String, f64> = records[2 * i..2 * i + 2]
                .iter()
                .map(|r| (r.pred.clone(), r.score))
                .collect();
            online.step_scores(i as u64, &scores).unwrap()[0].1
        })
        .collect();
    if got != want || stepped != want {
        return Err(format!("offline {got:?}, online {stepped:?}"));
    }
    if !scan[0].segments.is_empty() || scan[0].first_presumably_true != Some(2) {
        return Err(format!("segments {:?}", scan[0].segments));
    }
    Ok("verdicts presumably_false, presumably_false, presumably_true; no flagged segment".into())
}

/// Syntactically different but equivalent rewriting.
fn disguise(phi: &Formula, rng: &mut ChaCha8Rng) -> Formula {
    match rng.random_range(0..3) {
        0 => to_nnf(phi),
        1 => Formula::not(Formula::not(phi.clone())),
        _ => Formula::and(phi.clone(), Formula::True),
    }
}

fn elicitation_soundness() -> Outcome {
    let (atoms, props) = atoms();
    let by_size = sweep::formulas_by_size(&atoms, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let pick = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(1..=5);
        by_size[n][rng.random_range(0..by_size[n].len())].clone()
    };
    let trials = 500;
    let (mut questions, mut budget) = (0usize, 0usize);
    for trial in 0..trials {
        let truth = pick(&mut rng);
        let n = rng.random_range(3..=6);
        let mut cands: Vec<Formula> = (0..n - 1).map(|_| pick(&mut rng)).collect();
        let slot = rng.random_range(0..n);
        cands.insert(slot, disguise(&truth, &mut rng));
        let mut s = ValidationSession::new("R", &props, cands.clone()).map_err(|e| e.to_string())?;
        let mut asked = 0;
        while s.status == SessionStatus::Open {
            let Some(q) = s.next_question().map_err(|e| e.to_string())?.cloned() else {
                break;
            };
            asked += 1;
            let label = if eval_oracle(&truth, &q.trace, 0).unwrap() {
                Label::Accept
            } else {
                Label::Reject
            };
            let pruned = s.apply_label(q.id, label).map_err(|e| e.to_string())?;
            if pruned.is_empty() {
                return Err(format!("trial {trial}: question {} pruned nothing", q.id));
            }
        }
        let truth_dfa = minimize(&compile(&truth).unwrap());
        if s.status != SessionStatus::Converged || !s.active.contains(&slot) {
            return Err(format!("trial {trial}: truth {truth} lost, status {:?}", s.status));
        }
        for &a in &s.active {
            let d = minimize(&compile(&cands[a]).unwrap());
            if !equivalent(&d, &truth_dfa).unwrap() {
                return Err(format!("trial {trial}: survivor {} differs from truth {truth}", cands[a]));
            }
        }
        if asked > n - 1 {
            return Err(format!("trial {trial}: {asked} questions for {n} candidates"));
        }
        questions += asked;
        budget += n - 1;
    }
    let mean_q = questions as f64 / trials as f64;
    let mean_b = budget as f64 / trials as f64;
    let summary = format!("{trials} trials, mean questions {mean_q:.2} <= mean (candidates - 1) {mean_b:.2}");
    if mean_q > mean_b {
        return Err(summary);
    }
    Ok(summary)
}

fn property_sweep(which: &str) -> Outcome {
    let (atoms, props) = atoms();
    let fs = sweep::formulas_up_to(&atoms, 6);
    let start = Instant::now();
    let r = match which {
        "monitor" => sweep::monitor_soundness(&fs, &props, Execution::default()),
        _ => sweep::testgen_coverage(&fs, &props, Execution::default()),
    };
    let summary = format!(
        "{} formulas, {} checks, {} violations, {} errors, {:.1}s",
        r.formulas,
        r.checks,
        r.violations.len(),
        r.errors.len(),
        start.elapsed().as_secs_f64()
    );
    if let Some((phi, msg)) = r.violations.first() {
        return Err(format!("{summary}; first: {phi}: {msg}"));
    }
    if !r.errors.is_empty() {
        return Err(summary);
    }
    Ok(summary)
}

fn all_traces(props: &PropSet, max_len: usize) -> Vec<Trace> {
    sweep::traces_up_to(props, max_len)
}

fn consistency() -> Outcome {
    let ex = Execution::default();
    let inputs = |fs: &[&str]| -> Vec<AnalysisInput> {
        fs.iter()
            .enumerate()
            .map(|(i, s)| AnalysisInput::new(&format!("R{i}"), f(s)))
            .collect()
    };
    let r = check_consistency(&inputs(&["G p", "F ~p"]), ex).map_err(|e| e.to_string())?;
    if r.satisfiable || r.conflict_pairs.len() != 1 {
        return Err(format!("{{G p, F ~p}}: {r:?}"));
    }
    let red = check_redundancy(&inputs(&["G p", "G (p | q)"]), 2, ex).map_err(|e| e.to_string())?;
    if red.len() != 1 || red[0].implied != "R1" || red[0].implying != ["R0"] {
        return Err(format!("{{G p, G (p | q)}}: {red:?}"));
    }

    // Random sets: witnesses and conflicts re-verified by the oracle.
    let (atoms, props) = atoms();
    let by_size = sweep::formulas_by_size(&atoms, 4);
    let pool: Vec<&Formula> = by_size.iter().flatten().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut witnesses, mut conflicts) = (0, 0);
    for _ in 0..300 {
        let n = rng.random_range(2..=3);
        let set: Vec<AnalysisInput> = (0..n)
            .map(|i| AnalysisInput::new(&format!("R{i}"), pool[rng.random_range(0..pool.len())].clone()))
            .collect();
        let r = check_consistency(&set, ex).map_err(|e| e.to_string())?;
        if let Some(w) = &r.witness {
            let w = Trace::from_frames(&props, &w.frames()).unwrap();
            for i in &set {
                if !eval_oracle(&i.formula, &w, 0).unwrap() {
                    return Err(format!("witness {w:?} violates {}", i.formula));
                }
            }
            witnesses += 1;
        }
        if r.satisfiable == r.witness.is_none() {
            return Err("satisfiable flag disagrees with witness".into());
        }
        for c in &r.conflict_pairs {
            let a = &set.iter().find(|i| i.id == c.first).unwrap().formula;
            let b = &set.iter().find(|i| i.id == c.second).unwrap().formula;
            let depth = c.proof_size.max(1);
            if depth > 7 {
                return Err(format!("conflict proof of {} states is beyond exhaustive search", depth));
            }
            for t in all_traces(&props, depth) {
                if eval_oracle(a, &t, 0).unwrap() && eval_oracle(b, &t, 0).unwrap() {
                    return Err(format!("conflict {a} / {b} has joint model {t:?}"));
                }
            }
            conflicts += 1;
        }
        for red in &r.redundancies {
            let implied = &set.iter().find(|i| i.id == red.implied).unwrap().formula;
            if !eval_oracle(implied, &Trace::from_frames(&props, &red.example.frames()).unwrap(), 0).unwrap() {
                return Err(format!("redundancy example violates {implied}"));
            }
        }
    }
    Ok(format!(
        "contradiction and redundancy found; {witnesses} random witnesses and {conflicts} conflicts verified"
    ))
}

fn semcov_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let ex = Execution::default();
    let taus: Vec<f64> = (0..=20).map(|i| 1.0 - 0.1 * i as f64).collect();
    for m_ix in 0..100 {
        let items: Vec<String> = (0..50).map(|i| format!("img{i}")).collect();
        let features: Vec<String> = (0..10).map(|j| format!("f{j}")).collect();
        // quantized scores make ties and exact threshold hits common
        let scores: Vec<f64> = (0..500).map(|_| rng.random_range(-10..=10) as f64 / 10.0).collect();
        let m = ScoreMatrix::new(items.clone(), features.clone(), scores.clone()).unwrap();
        let mut order: Vec<usize> = (0..50).collect();
        order.shuffle(&mut rng);
        let shuffled = ScoreMatrix::new(
            order.iter().map(|&i| items[i].clone()).collect(),
            features.clone(),
            order.iter().flat_map(|&i| scores[i * 10..i * 10 + 10].to_vec()).collect(),
        )
        .unwrap();
        let mut prev: Option<Vec<usize>> = None;
        for &tau in &taus {
            let th = Thresholds::uniform(tau.clamp(-1.0, 1.0));
            let a = coverage(&m, &th, 0.5, ex).map_err(|e| e.to_string())?;
            let b = coverage(&shuffled, &th, 0.5, Execution::Sequential).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("matrix {m_ix}: report changes under permutation at tau {tau}"));
            }
            let counts: Vec<usize> = a.features.iter().map(|x| x.covered).collect();
            if let Some(p) = &prev {
                if counts.iter().zip(p).any(|(c, p)| c < p) {
                    return Err(format!("matrix {m_ix}: coverage drops as tau falls to {tau}"));
                }
            }
            prev = Some(counts);
        }
    }
    Ok("100 matrices of 50x10, 21 thresholds each: permutation-invariant, monotone".into())
}

fn crash_safety() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("rover.json");
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut current = rover_project();
    current.save(&path).map_err(|e| e.to_string())?;
    let (mut kept_old, mut took_new) = (0, 0);
    for trial in 0..100 {
        let mut next = current.clone();
        next.add_requirement(&format!("REQ-{trial:03}"), "added").unwrap();
        if trial % 3 == 0 {
            next.author(&format!("REQ-{trial:03}"), &StubProvider, 5).unwrap();
        }
        let bytes = next.to_json().into_bytes();
        let cut = rng.random_range(0..=bytes.len());
        let completes = rng.random_bool(0.3);
        let _ = atomic_write_with(&path, |w| {
            use std::io::Write;
            if completes {
                w.write_all(&bytes)
            } else {
                w.write_all(&bytes[..cut])?;
                Err(std::io::Error::other("killed"))
            }
        });
        // a temp file orphaned by a hard kill must not matter either
        std::fs::write(dir.path().join(format!(".tmp-orphan{trial}")), &bytes[..cut]).unwrap();
        let loaded = Project::load(&path).map_err(|e| format!("trial {trial}: {e}"))?;
        let expected = if completes { &next } else { &current };
        if &loaded != expected {
            let which = if loaded == next || loaded == current { "the wrong" } else { "neither" };
            return Err(format!("trial {trial}: loaded project is {which} version"));
        }
        if completes {
            took_new += 1;
            current = next;
        } else {
            kept_old += 1;
        }
    }
    Ok(format!("100 interrupted saves: {kept_old} kept the old version, {took_new} the new"))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("oracle equivalence (size <= 6, length <= 4, exhaustive)", oracle_equivalence),
        ("rover scenario monitor verdicts", figure_two),
        ("elicitation soundness (500 trials)", elicitation_soundness),
        ("monitor verdict soundness (exhaustive)", || property_sweep("monitor")),
        ("testgen transition coverage and verdicts (exhaustive)", || property_sweep("testgen")),
        ("consistency analysis", consistency),
        ("semcov determinism and monotonicity", semcov_invariants),
        ("persistence crash safety", crash_safety),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
