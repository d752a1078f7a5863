use std::collections::{HashMap, HashSet};

use super::ops::flatten_sequences;
use super::{Action, Lts, StateId, Trace, TAU};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inclusion {
    Holds,
    /// Shortest, then lexicographically least, trace of the candidate that
    /// the reference cannot perform.
    Counterexample(Trace),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InclusionError {
    #[error("reference LTS is not deterministic")]
    NotDeterministic,
    #[error("candidate label `{0}` is outside the reference alphabet")]
    OutsideAlphabet(String),
}

/// Decides `Tr(cand) ⊆ Tr(ta)` for a deterministic `ta`. τ in `cand` is
/// silent and send sequences are compared as their single sends.
pub fn trace_included(cand: &Lts, ta: &Lts) -> Result<Inclusion, InclusionError> {
    if !ta.is_deterministic() {
        return Err(InclusionError::NotDeterministic);
    }
    let cand = flatten_sequences(cand);
    let alphabet: HashSet<Action> = ta.alphabet().into_iter().collect();
    let texts = cand.label_texts();
    // candidate label id -> reference label id
    let mut to_ta = Vec::with_capacity(texts.len());
    for (i, _) in texts.iter().enumerate() {
        let a = cand.label(super::LabelId(i as u32));
        to_ta.push(ta.label_id(a));
    }
    for t in cand.transitions() {
        let a = cand.label(t.label);
        if t.label != TAU && !alphabet.contains(a) {
            return Err(InclusionError::OutsideAlphabet(a.to_string()));
        }
    }
    let csucc = cand.successors();
    let mut tsucc: HashMap<(StateId, super::LabelId), StateId> = HashMap::new();
    for t in ta.transitions() {
        tsucc.insert((t.src, t.label), t.dst);
    }

    // ranks[r] = (parent rank, label) of the r-th distinct trace
    let mut ranks: Vec<(usize, Option<super::LabelId>)> = vec![(usize::MAX, None)];
    let mut visited: HashSet<(StateId, StateId)> = HashSet::new();
    let mut seeds: Vec<((StateId, StateId), usize)> = vec![((cand.initial(), ta.initial()), 0)];

    loop {
        // τ-closure of the seeds, each node keeping its least trace
        let mut layer: Vec<((StateId, StateId), usize)> = Vec::new();
        for (node, r) in seeds {
            if !visited.insert(node) {
                continue;
            }
            let mut stack = vec![node];
            while let Some(n) = stack.pop() {
                layer.push((n, r));
                for &(lab, d) in &csucc[n.0] {
                    if lab == TAU && visited.insert((d, n.1)) {
                        stack.push((d, n.1));
                    }
                }
            }
        }
        if layer.is_empty() {
            return Ok(Inclusion::Holds);
        }

        let mut escape: Option<(usize, &str, super::LabelId)> = None;
        let mut next: Vec<(usize, &str, (StateId, StateId), super::LabelId)> = Vec::new();
        for &((c, t), r) in &layer {
            for &(lab, d) in &csucc[c] {
                if lab == TAU {
                    continue;
                }
                let text = texts[lab.0 as usize].as_str();
                match to_ta[lab.0 as usize].and_then(|tl| tsucc.get(&(t, tl))) {
                    Some(&e) => next.push((r, text, (d, e), lab)),
                    None => {
                        if escape.is_none_or(|(er, et, _)| (r, text) < (er, et)) {
                            escape = Some((r, text, lab));
                        }
                    }
                }
            }
        }
        if let Some((r, _, lab)) = escape {
            let mut labels = vec![cand.label(lab).clone()];
            let mut cur = r;
            while let (p, Some(l)) = ranks[cur] {
                labels.push(cand.label(l).clone());
                cur = p;
            }
            labels.reverse();
            return Ok(Inclusion::Counterexample(Trace(labels)));
        }

        next.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        seeds = Vec::with_capacity(next.len());
        let mut last: Option<(usize, &str)> = None;
        for (r, text, node, lab) in next {
            if last != Some((r, text)) {
                ranks.push((r, Some(lab)));
                last = Some((r, text));
            }
            seeds.push((node, ranks.len() - 1));
        }
    }
}
