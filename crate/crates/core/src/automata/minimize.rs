//! Hopcroft partition refinement over the expanded valuation alphabet.

use std::collections::VecDeque;

use super::{Dfa, StateId};

/// Language-equivalent automaton with the fewest states: unreachable states
/// are dropped and bisimilar states merged. States are renumbered in
/// breadth-first order from the initial state.
///
/// The acceptance flag of an initial state without incoming transitions only
/// concerns the empty trace, which is outside the language domain; when
/// flipping it yields a smaller automaton, the smaller one is returned.
pub fn minimize(d: &Dfa) -> Dfa {
    let m = refine(d);
    let init = m.initial();
    let k = m.alphabet_size();
    let has_incoming = m.delta().iter().any(|&t| t == init);
    if has_incoming || m.num_states() == 1 {
        return m;
    }
    let mut flipped = m.accepting().to_vec();
    flipped[init] = !flipped[init];
    let alt = refine(&m.with_acceptance(flipped));
    debug_assert_eq!(alt.alphabet_size(), k);
    if alt.num_states() < m.num_states() {
        alt
    } else {
        m
    }
}

fn refine(d: &Dfa) -> Dfa {
    let k = d.alphabet_size();

    // Reachable states in breadth-first order.
    let mut order = vec![d.initial()];
    let mut seen = vec![false; d.num_states()];
    seen[d.initial()] = true;
    let mut i = 0;
    while i < order.len() {
        let s = order[i];
        for a in 0..k as u64 {
            let t = d.step(s, a);
            if !seen[t] {
                seen[t] = true;
                order.push(t);
            }
        }
        i += 1;
    }
    let n = order.len();
    let mut local = vec![usize::MAX; d.num_states()];
    for (li, &s) in order.iter().enumerate() {
        local[s] = li;
    }
    let delta: Vec<usize> = order
        .iter()
        .flat_map(|&s| (0..k as u64).map(move |a| (s, a)))
        .map(|(s, a)| local[d.step(s, a)])
        .collect();
    let accepting: Vec<bool> = order.iter().map(|&s| d.is_accepting(s)).collect();

    // Inverse transitions in CSR form, indexed by (letter, target).
    let mut start = vec![0usize; k * n + 1];
    for s in 0..n {
        for a in 0..k {
            start[a * n + delta[s * k + a] + 1] += 1;
        }
    }
    for j in 0..k * n {
        start[j + 1] += start[j];
    }
    let mut fill = start.clone();
    let mut sources = vec![0usize; n * k];
    for s in 0..n {
        for a in 0..k {
            let slot = a * n + delta[s * k + a];
            sources[fill[slot]] = s;
            fill[slot] += 1;
        }
    }

    let mut block_of = vec![0usize; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let (acc, rej): (Vec<usize>, Vec<usize>) = (0..n).partition(|&s| accepting[s]);
    for part in [acc, rej] {
        if !part.is_empty() {
            let b = blocks.len();
            for &s in &part {
                block_of[s] = b;
            }
            blocks.push(part);
        }
    }
    let mut in_work = vec![false; blocks.len()];
    let mut work: VecDeque<usize> = VecDeque::new();
    if blocks.len() == 2 {
        let smaller = if blocks[0].len() <= blocks[1].len() { 0 } else { 1 };
        work.push_back(smaller);
        in_work[smaller] = true;
    }

    let mut marked = vec![false; n];
    let mut hits = vec![0usize; n];
    while let Some(b) = work.pop_front() {
        in_work[b] = false;
        let splitter = blocks[b].clone();
        for a in 0..k {
            let mut pre: Vec<usize> = Vec::new();
            for &t in &splitter {
                for &s in &sources[start[a * n + t]..start[a * n + t + 1]] {
                    if !marked[s] {
                        marked[s] = true;
                        pre.push(s);
                    }
                }
            }
            let mut touched: Vec<usize> = Vec::new();
            for &s in &pre {
                let y = block_of[s];
                if hits[y] == 0 {
                    touched.push(y);
                }
                hits[y] += 1;
            }
            touched.sort_unstable();
            for y in touched {
                if hits[y] < blocks[y].len() {
                    let (inside, outside): (Vec<usize>, Vec<usize>) =
                        blocks[y].iter().partition(|&&s| marked[s]);
                    let z = blocks.len();
                    for &s in &inside {
                        block_of[s] = z;
                    }
                    blocks[y] = outside;
                    blocks.push(inside);
                    in_work.push(false);
                    if in_work[y] {
                        work.push_back(z);
                        in_work[z] = true;
                    } else {
                        let pick = if blocks[y].len() <= blocks[z].len() { y } else { z };
                        work.push_back(pick);
                        in_work[pick] = true;
                    }
                }
                hits[y] = 0;
            }
            for s in pre {
                marked[s] = false;
            }
        }
    }

    // Quotient, renumbered breadth-first from the initial block.
    let mut id_of_block = vec![usize::MAX; blocks.len()];
    let mut reps: Vec<usize> = Vec::new();
    let init_block = block_of[0];
    id_of_block[init_block] = 0;
    reps.push(blocks[init_block][0]);
    let mut i = 0;
    while i < reps.len() {
        let s = reps[i];
        for a in 0..k {
            let b = block_of[delta[s * k + a]];
            if id_of_block[b] == usize::MAX {
                id_of_block[b] = reps.len();
                reps.push(blocks[b][0]);
            }
        }
        i += 1;
    }
    let new_delta: Vec<StateId> = reps
        .iter()
        .flat_map(|&s| (0..k).map(move |a| (s, a)))
        .map(|(s, a)| id_of_block[block_of[delta[s * k + a]]])
        .collect();
    let new_acc = reps.iter().map(|&s| accepting[s]).collect();
    Dfa::from_table(d.props().clone(), 0, new_acc, new_delta)
}
