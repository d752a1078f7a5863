use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{sort_by_text, Action, LabelId, Lts, StateId, TAU};

pub fn rename(l: &Lts, f: impl Fn(&Action) -> Action) -> Lts {
    let mut out = Lts::new(l.num_states(), l.initial());
    out.set_pi(l.pi());
    out.set_theta(l.theta());
    out.alphabet = l
        .alphabet
        .as_ref()
        .map(|a| sort_by_text(a.iter().map(&f).filter(|x| !x.is_tau()).collect()));
    let mapped: Vec<LabelId> = l.labels.iter().map(|a| out.intern(&f(a))).collect();
    for t in l.transitions() {
        out.add_id(t.src, mapped[t.label.0 as usize], t.dst);
    }
    out
}

/// Replaces every transition whose label maps to two or more actions by a
/// chain through fresh states. Fresh states are numbered after the
/// existing ones, in transition order.
fn expand<E>(l: &Lts, mut f: impl FnMut(&Action) -> Result<Vec<Action>, E>) -> Result<Lts, E> {
    let mut out = Lts::new(l.num_states(), l.initial());
    out.set_pi(l.pi());
    out.set_theta(l.theta());
    out.alphabet = l.alphabet.clone();
    let mut mapped: Vec<Vec<LabelId>> = Vec::with_capacity(l.labels.len());
    for a in &l.labels {
        let v = f(a)?;
        let ids: Vec<LabelId> = if v.is_empty() {
            vec![TAU]
        } else {
            v.iter().map(|x| out.intern(x)).collect()
        };
        mapped.push(ids);
    }
    for t in l.transitions() {
        let chain = &mapped[t.label.0 as usize];
        let mut src = t.src;
        for (i, &lab) in chain.iter().enumerate() {
            let dst = if i + 1 == chain.len() {
                t.dst
            } else {
                out.add_state()
            };
            out.add_id(src, lab, dst);
            src = dst;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PsiError {
    #[error("label `{0}` does not have a shape admitted by the reconfiguration")]
    Inadmissible(String),
}

/// The ψ reconfiguration for component `component`: a step of an open actor
/// sending `<m1..mk>` to the component becomes the chain `Rcv(m1)..Rcv(mk)`,
/// a single send of the component becomes `Snd(m)::y`, and empty steps
/// become τ.
pub fn reconfigure_psi(l: &Lts, component: &str) -> Result<Lts, PsiError> {
    expand(l, |a| match a {
        Action::Tau => Ok(vec![]),
        Action::Take { sends, .. } if sends.is_empty() => Ok(vec![]),
        Action::Take { taker, sends } if taker == component => match sends.as_slice() {
            [s] => Ok(vec![Action::Snd(s.clone())]),
            _ => Err(PsiError::Inadmissible(a.to_string())),
        },
        Action::Take { sends, .. } => sends
            .iter()
            .map(|s| {
                if s.receiver == component {
                    Ok(Action::Rcv(s.message.clone()))
                } else {
                    Err(PsiError::Inadmissible(a.to_string()))
                }
            })
            .collect(),
        other => Err(PsiError::Inadmissible(other.to_string())),
    })
}

/// Splits send-sequence labels into consecutive single sends.
pub fn flatten_sequences(l: &Lts) -> Lts {
    let r: Result<Lts, ()> = expand(l, |a| match a {
        Action::Seq(s) => Ok(s.iter().cloned().map(Action::Snd).collect()),
        other => Ok(vec![other.clone()]),
    });
    r.unwrap()
}

/// τ-closure of a set of states, sorted.
pub(crate) fn closure(
    succ: &[Vec<(LabelId, StateId)>],
    seeds: impl IntoIterator<Item = StateId>,
    mark: &mut [u32],
    stamp: u32,
) -> Vec<StateId> {
    let mut out = Vec::new();
    let mut stack: Vec<StateId> = Vec::new();
    for s in seeds {
        if mark[s] != stamp {
            mark[s] = stamp;
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        out.push(s);
        for &(l, d) in &succ[s] {
            if l == TAU && mark[d] != stamp {
                mark[d] = stamp;
                stack.push(d);
            }
        }
    }
    out.sort_unstable();
    out
}

struct Closer<'a> {
    succ: &'a [Vec<(LabelId, StateId)>],
    mark: Vec<u32>,
    stamp: u32,
}

impl<'a> Closer<'a> {
    fn new(succ: &'a [Vec<(LabelId, StateId)>]) -> Self {
        Closer {
            succ,
            mark: vec![0; succ.len()],
            stamp: 0,
        }
    }

    fn close(&mut self, seeds: impl IntoIterator<Item = StateId>) -> Vec<StateId> {
        self.stamp += 1;
        closure(self.succ, seeds, &mut self.mark, self.stamp)
    }

    /// Visible successors of a closed set, grouped by label.
    fn step(&mut self, set: &[StateId]) -> BTreeMap<LabelId, Vec<StateId>> {
        let mut by_label: BTreeMap<LabelId, Vec<StateId>> = BTreeMap::new();
        for &s in set {
            for &(l, d) in &self.succ[s] {
                if l != TAU {
                    by_label.entry(l).or_default().push(d);
                }
            }
        }
        by_label
            .into_iter()
            .map(|(l, ds)| (l, self.close(ds)))
            .collect()
    }
}

/// Tarjan's algorithm over τ edges; returns the component of every state.
fn tau_sccs(succ: &[Vec<(LabelId, StateId)>]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(StateId, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = work.last_mut() {
            if *i < succ[v].len() {
                let (l, w) = succ[v][*i];
                *i += 1;
                if l != TAU {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(u, _)) = work.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

/// Merges states into classes given by `class` (dense ids), dropping τ
/// self-loops and duplicate edges. π's class keeps no outgoing edges.
fn quotient(l: &Lts, class: &[usize], nclasses: usize) -> Lts {
    let mut out = Lts::new(nclasses, class[l.initial()]);
    out.alphabet = l.alphabet.clone();
    let pi = l.pi().map(|p| class[p]);
    out.set_pi(pi);
    out.set_theta(l.theta().map(|t| class[t]));
    let mut seen = std::collections::HashSet::new();
    for t in l.transitions() {
        let (s, d) = (class[t.src], class[t.dst]);
        if (t.label == TAU && s == d) || Some(s) == pi {
            continue;
        }
        if seen.insert((s, t.label, d)) {
            let a = l.label(t.label).clone();
            out.add(s, &a, d);
        }
    }
    out
}

/// Quotient by branching bisimulation, split on π. Expects a τ-acyclic LTS
/// whose τ edges lead to lower state ids, as produced by the τ-SCC collapse.
/// Cheap and trace preserving, so the subset construction afterwards runs
/// on a much smaller LTS.
fn branching_quotient(l: &Lts) -> Lts {
    let succ = l.successors();
    let n = l.num_states();
    let pi = l.pi();
    let mut block: Vec<usize> = (0..n).map(|s| (Some(s) == pi) as usize).collect();
    let mut count = block
        .iter()
        .copied()
        .collect::<std::collections::HashSet<_>>()
        .len();
    loop {
        let mut sigs: Vec<Vec<(LabelId, usize)>> = vec![Vec::new(); n];
        for s in 0..n {
            let mut sig = Vec::new();
            for &(lab, d) in &succ[s] {
                if lab == TAU && block[d] == block[s] {
                    debug_assert!(d < s);
                    sig.extend_from_slice(&sigs[d]);
                } else {
                    sig.push((lab, block[d]));
                }
            }
            sig.sort_unstable();
            sig.dedup();
            sigs[s] = sig;
        }
        type Key<'a> = (usize, &'a [(LabelId, usize)]);
        let mut ids: HashMap<Key, usize> = HashMap::new();
        let next: Vec<usize> = (0..n)
            .map(|s| {
                let k = ids.len();
                *ids.entry((block[s], &sigs[s])).or_insert(k)
            })
            .collect();
        let c = ids.len();
        block = next;
        if c == count {
            break;
        }
        count = c;
    }
    quotient(l, &block, count)
}

/// Quotient by weak-trace equivalence: two states are merged iff they have
/// the same weak traces and the same weak error traces (traces that can
/// end in π). The result is canonically numbered.
pub fn reduce_weak_trace(l: &Lts) -> Lts {
    // Collapse τ-cycles first; every state of a τ-SCC has the same traces.
    let succ0 = l.successors();
    let scc = tau_sccs(&succ0);
    let nscc = scc.iter().copied().max().map_or(0, |m| m + 1);
    let l = quotient(l, &scc, nscc);
    let l = branching_quotient(&l);
    let succ = l.successors();

    // Subset automaton over τ-closures of single states.
    let mut closer = Closer::new(&succ);
    let mut ids: HashMap<Vec<StateId>, usize> = HashMap::new();
    let mut subsets: Vec<Vec<StateId>> = Vec::new();
    let mut delta: Vec<Vec<(LabelId, usize)>> = Vec::new();
    let mut start = Vec::with_capacity(l.num_states());
    let mut queue = VecDeque::new();
    let mut intern = |set: Vec<StateId>,
                      subsets: &mut Vec<Vec<StateId>>,
                      queue: &mut VecDeque<usize>|
     -> usize {
        if let Some(&i) = ids.get(&set) {
            return i;
        }
        let i = subsets.len();
        ids.insert(set.clone(), i);
        subsets.push(set);
        queue.push_back(i);
        i
    };
    for s in 0..l.num_states() {
        let c = closer.close([s]);
        start.push(intern(c, &mut subsets, &mut queue));
    }
    while let Some(i) = queue.pop_front() {
        let set = subsets[i].clone();
        let moves = closer.step(&set);
        let mut row = Vec::with_capacity(moves.len());
        for (lab, target) in moves {
            row.push((lab, intern(target, &mut subsets, &mut queue)));
        }
        if delta.len() <= i {
            delta.resize(i + 1, Vec::new());
        }
        delta[i] = row;
    }
    delta.resize(subsets.len(), Vec::new());

    // Moore refinement; initial split by "contains π".
    let pi = l.pi();
    let mut block: Vec<usize> = subsets
        .iter()
        .map(|s| pi.is_some_and(|p| s.binary_search(&p).is_ok()) as usize)
        .collect();
    let mut count = block
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    loop {
        let mut sig_ids: HashMap<(usize, Vec<(LabelId, usize)>), usize> = HashMap::new();
        let next: Vec<usize> = (0..subsets.len())
            .map(|i| {
                let sig = (
                    block[i],
                    delta[i]
                        .iter()
                        .map(|&(lab, j)| (lab, block[j]))
                        .collect::<Vec<_>>(),
                );
                let n = sig_ids.len();
                *sig_ids.entry(sig).or_insert(n)
            })
            .collect();
        let c = sig_ids.len();
        block = next;
        if c == count {
            break;
        }
        count = c;
    }

    // Dense class ids over the states actually used.
    let mut dense: HashMap<usize, usize> = HashMap::new();
    let class: Vec<usize> = start
        .iter()
        .map(|&sub| {
            let n = dense.len();
            *dense.entry(block[sub]).or_insert(n)
        })
        .collect();
    quotient(&l, &class, dense.len()).canonical()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiVerdict {
    Ok,
    InitialIsPi,
}

/// Merges every state that reaches π by τ steps alone into π, then prunes
/// states from which π is unreachable.
pub fn backward_propagate_pi(l: &Lts) -> (Lts, PiVerdict) {
    let Some(pi) = l.pi() else {
        return (l.clone(), PiVerdict::Ok);
    };
    let pred = l.predecessors();
    let mut silent = vec![false; l.num_states()];
    silent[pi] = true;
    let mut stack = vec![pi];
    while let Some(s) = stack.pop() {
        for &(lab, p) in &pred[s] {
            if lab == TAU && !silent[p] {
                silent[p] = true;
                stack.push(p);
            }
        }
    }
    if silent[l.initial()] {
        let mut out = Lts::new(1, 0);
        out.set_pi(Some(0));
        out.alphabet = l.alphabet.clone();
        return (out, PiVerdict::InitialIsPi);
    }

    let mut merged = Lts::new(l.num_states(), l.initial());
    merged.alphabet = l.alphabet.clone();
    merged.set_pi(Some(pi));
    merged.set_theta(l.theta());
    for t in l.transitions() {
        if silent[t.src] {
            continue;
        }
        let d = if silent[t.dst] { pi } else { t.dst };
        let a = l.label(t.label).clone();
        merged.add(t.src, &a, d);
    }

    let pred = merged.predecessors();
    let mut keep = vec![false; merged.num_states()];
    keep[pi] = true;
    let mut stack = vec![pi];
    while let Some(s) = stack.pop() {
        for &(_, p) in &pred[s] {
            if !keep[p] {
                keep[p] = true;
                stack.push(p);
            }
        }
    }
    keep[merged.initial()] = true;
    let mut pruned = Lts::new(merged.num_states(), merged.initial());
    pruned.alphabet = merged.alphabet.clone();
    pruned.set_pi(Some(pi));
    pruned.set_theta(merged.theta().filter(|t| keep[*t]));
    for t in merged.transitions() {
        if keep[t.src] && keep[t.dst] {
            let a = merged.label(t.label).clone();
            pruned.add(t.src, &a, t.dst);
        }
    }
    (pruned.canonical(), PiVerdict::Ok)
}

/// Subset construction with τ as ε, completed over `alphabet` (extended by
/// any visible label of `l`). Subsets containing π collapse into one π
/// state; missing moves go to a sink θ with a self-loop on every label.
pub fn determinize_complete(l: &Lts, alphabet: &[Action]) -> Lts {
    let mut sigma: Vec<Action> = alphabet.iter().filter(|a| !a.is_tau()).cloned().collect();
    sigma.extend(l.visible_labels());
    let sigma = sort_by_text(sigma);
    let ids: Vec<Option<LabelId>> = sigma.iter().map(|a| l.label_id(a)).collect();

    let succ = l.successors();
    let mut closer = Closer::new(&succ);
    let contains_pi = |set: &[StateId]| l.pi().is_some_and(|p| set.binary_search(&p).is_ok());

    const PI: usize = usize::MAX;
    const THETA: usize = usize::MAX - 1;
    let mut order: Vec<usize> = Vec::new(); // numbering: subset index, PI or THETA
    let mut subset_ids: HashMap<Vec<StateId>, usize> = HashMap::new();
    let mut subsets: Vec<Vec<StateId>> = Vec::new();
    let mut number: HashMap<usize, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();

    let mut place =
        |key: usize, order: &mut Vec<usize>, queue: &mut VecDeque<(usize, usize)>| -> usize {
            if let Some(&n) = number.get(&key) {
                return n;
            }
            let n = order.len();
            number.insert(key, n);
            order.push(key);
            if key != PI && key != THETA {
                queue.push_back((key, n));
            }
            n
        };

    let init = closer.close([l.initial()]);
    let key = if contains_pi(&init) {
        PI
    } else {
        subset_ids.insert(init.clone(), 0);
        subsets.push(init);
        0
    };
    place(key, &mut order, &mut queue);

    while let Some((k, src)) = queue.pop_front() {
        let set = subsets[k].clone();
        for (ai, lab) in ids.iter().enumerate() {
            let target = match lab {
                None => Vec::new(),
                Some(lab) => {
                    let ds: Vec<StateId> = set
                        .iter()
                        .flat_map(|&s| succ[s].iter().filter(|(x, _)| x == lab).map(|&(_, d)| d))
                        .collect();
                    if ds.is_empty() {
                        Vec::new()
                    } else {
                        closer.close(ds)
                    }
                }
            };
            let key = if target.is_empty() {
                THETA
            } else if contains_pi(&target) {
                PI
            } else if let Some(&i) = subset_ids.get(&target) {
                i
            } else {
                let i = subsets.len();
                subset_ids.insert(target.clone(), i);
                subsets.push(target);
                i
            };
            let dst = place(key, &mut order, &mut queue);
            edges.push((src, ai, dst));
        }
    }

    let mut out = Lts::new(order.len(), 0);
    out.alphabet = Some(sigma.clone());
    for (n, &key) in order.iter().enumerate() {
        if key == PI {
            out.set_pi(Some(n));
        } else if key == THETA {
            out.set_theta(Some(n));
        }
    }
    for (s, ai, d) in edges {
        out.add(s, &sigma[ai], d);
    }
    if let Some(t) = out.theta() {
        for a in &sigma {
            out.add(t, a, t);
        }
    }
    out
}

/// Deletes π and every transition into it; other states keep their order.
pub fn remove_pi(l: &Lts) -> Lts {
    let Some(pi) = l.pi() else {
        return l.clone();
    };
    if l.initial() == pi {
        let mut out = Lts::new(1, 0);
        out.alphabet = l.alphabet.clone();
        return out;
    }
    let shift = |s: StateId| if s > pi { s - 1 } else { s };
    let mut out = Lts::new(l.num_states() - 1, shift(l.initial()));
    out.alphabet = l.alphabet.clone();
    out.set_theta(l.theta().map(shift));
    for t in l.transitions() {
        if t.src == pi || t.dst == pi {
            continue;
        }
        let a = l.label(t.label).clone();
        out.add(shift(t.src), &a, shift(t.dst));
    }
    out
}
