//! Sequential against parallel execution on the data-parallel workloads.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reqmon_core::analysis::{check_consistency, AnalysisInput};
use reqmon_core::exec::Execution;
use reqmon_core::ltlf::{PropId, PropSet};
use reqmon_core::semcov::{coverage, ScoreMatrix, Thresholds};
use reqmon_core::sweep;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn atoms() -> (Vec<PropId>, PropSet) {
    let atoms = vec![PropId::new("p").unwrap(), PropId::new("q").unwrap()];
    let props = PropSet::from_ids(atoms.iter().cloned()).unwrap();
    (atoms, props)
}

fn oracle_sweep(c: &mut Criterion) {
    let (atoms, props) = atoms();
    let formulas = sweep::formulas_up_to(&atoms, 4);
    let traces = sweep::traces_up_to(&props, 3);
    let mut g = c.benchmark_group("oracle_equivalence");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sweep::oracle_equivalence(&formulas, &props, &traces, exec))
        });
    }
    g.finish();
}

fn monitor_sweep(c: &mut Criterion) {
    let (atoms, props) = atoms();
    let formulas = sweep::formulas_up_to(&atoms, 4);
    let mut g = c.benchmark_group("monitor_soundness");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| sweep::monitor_soundness(&formulas, &props, exec))
        });
    }
    g.finish();
}

fn consistency(c: &mut Criterion) {
    let inputs: Vec<AnalysisInput> = [
        "G (p -> F q)",
        "G (q -> X ~p)",
        "F (p & q)",
        "G (r -> p)",
        "p U (q | r)",
        "G F r",
    ]
    .iter()
    .enumerate()
    .map(|(i, s)| AnalysisInput::new(&format!("R{i}"), reqmon_core::ltlf::parse_formula_free(s).unwrap()))
    .collect();
    let mut g = c.benchmark_group("consistency");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| check_consistency(&inputs, exec).unwrap())
        });
    }
    g.finish();
}

fn semcov(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, k) = (5000, 64);
    let m = ScoreMatrix::new(
        (0..n).map(|i| format!("img{i}")).collect(),
        (0..k).map(|j| format!("f{j}")).collect(),
        (0..n * k).map(|_| rng.random_range(-1.0..=1.0)).collect(),
    )
    .unwrap();
    let th = Thresholds::uniform(0.4);
    let mut g = c.benchmark_group("semcov_coverage");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| coverage(&m, &th, 0.5, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle_sweep, monitor_sweep, consistency, semcov);
criterion_main!(benches);
