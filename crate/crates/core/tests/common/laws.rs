//! Operator laws checked against brute-force enumeration on seeded random
//! inputs. Every law returns the number of cases checked.

use std::collections::{BTreeMap, BTreeSet};

use agcheck::aml::SendStmt;
use agcheck::infm::{shuffle, Response};
use agcheck::lts::{
    determinize_complete, flatten_sequences, reconfigure_psi, reduce_weak_trace, trace_included,
    Action, Inclusion, Lts, SendAction, StateId,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LawResult = Result<usize, String>;

const LETTERS: [&str; 3] = ["a", "b", "c"];

fn letters() -> Vec<Action> {
    LETTERS
        .iter()
        .map(|l| Action::Name(l.to_string()))
        .collect()
}

/// Random LTS over `a b c` and τ. With `with_pi`, the last state is π and
/// has no outgoing edges.
fn random_lts(rng: &mut ChaCha8Rng, max_states: usize, tau: f64, with_pi: bool) -> Lts {
    let n = rng.gen_range(1..=max_states);
    let mut l = Lts::new(n, 0);
    let pi = (with_pi && n > 1).then_some(n - 1);
    l.set_pi(pi);
    let mut seen = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=2 * n + 2) {
        let s = rng.gen_range(0..n);
        if Some(s) == pi {
            continue;
        }
        let a = if rng.gen_bool(tau) {
            Action::Tau
        } else {
            Action::Name(LETTERS.choose(rng).unwrap().to_string())
        };
        let d = rng.gen_range(0..n);
        if seen.insert((s, a.clone(), d)) {
            l.add(s, &a, d);
        }
    }
    l.set_alphabet(Some(letters()));
    l
}

/// States reached by some path whose visible labels spell `w`, τ steps
/// included before, between and after. Paths are enumerated one edge at a
/// time; a (state, position) pair is expanded once.
fn reach(l: &Lts, w: &[Action]) -> BTreeSet<StateId> {
    let succ = l.successors();
    let mut seen = BTreeSet::new();
    let mut stack = vec![(l.initial(), 0usize)];
    let mut out = BTreeSet::new();
    while let Some((s, i)) = stack.pop() {
        if !seen.insert((s, i)) {
            continue;
        }
        if i == w.len() {
            out.insert(s);
        }
        for &(lab, d) in &succ[s] {
            let a = l.label(lab);
            if a.is_tau() {
                stack.push((d, i));
            } else if i < w.len() && *a == w[i] {
                stack.push((d, i + 1));
            }
        }
    }
    out
}

/// All words over `alphabet` up to length `max`, shortest first.
fn words(alphabet: &[Action], max: usize) -> Vec<Vec<Action>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &layer {
            for a in alphabet {
                let mut v: Vec<Action> = w.clone();
                v.push(a.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn det_run(l: &Lts, w: &[Action]) -> Option<StateId> {
    let mut s = l.initial();
    for a in w {
        s = l
            .transitions()
            .iter()
            .find(|t| t.src == s && l.label(t.label) == a)?
            .dst;
    }
    Some(s)
}

fn multinomial(parts: &[usize]) -> usize {
    let fact = |n: usize| (1..=n).product::<usize>();
    fact(parts.iter().sum()) / parts.iter().map(|&p| fact(p)).product::<usize>()
}

/// Interleavings by enumerating every permutation of the tagged sends and
/// keeping those that respect each response's order.
fn brute_shuffle(rs: &[Response]) -> BTreeSet<Vec<String>> {
    let tagged: Vec<(usize, usize)> = rs
        .iter()
        .enumerate()
        .flat_map(|(r, x)| (0..x.messages.len()).map(move |i| (r, i)))
        .collect();
    let mut out = BTreeSet::new();
    let mut perm: Vec<usize> = (0..tagged.len()).collect();
    permutations(&mut perm, 0, &mut |p| {
        let mut next = vec![0usize; rs.len()];
        for &k in p {
            let (r, i) = tagged[k];
            if next[r] != i {
                return;
            }
            next[r] += 1;
        }
        out.insert(
            p.iter()
                .map(|&k| {
                    let (r, i) = tagged[k];
                    key(&SendStmt::to(
                        rs[r].target.as_str(),
                        rs[r].messages[i].as_str(),
                    ))
                })
                .collect(),
        );
    });
    out
}

fn key(s: &SendStmt) -> String {
    format!("{s:?}")
}

fn permutations(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, f);
        v.swap(k, i);
    }
}

pub fn shuffle_cardinality(cases: usize) -> LawResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..cases {
        let distinct = case % 2 == 0;
        let mut targets = ["x", "y", "z"];
        targets.shuffle(&mut rng);
        let k = rng.gen_range(1..=3);
        let mut budget = 6;
        let mut rs = Vec::new();
        for j in 0..k {
            if budget == 0 {
                break;
            }
            let len = rng.gen_range(1..=budget.min(3));
            budget -= len;
            let target = if distinct {
                targets[j]
            } else {
                targets[rng.gen_range(0..2)]
            };
            let msgs: Vec<String> = (0..len)
                .map(|_| ["p", "q"].choose(&mut rng).unwrap().to_string())
                .collect();
            rs.push(Response {
                target: target.into(),
                messages: msgs,
            });
        }
        let got = shuffle(&rs);
        let set: BTreeSet<Vec<String>> = got.iter().map(|v| v.iter().map(key).collect()).collect();
        if set.len() != got.len() {
            return Err(format!("duplicate interleavings for {rs:?}"));
        }
        if set != brute_shuffle(&rs) {
            return Err(format!("interleavings differ from enumeration for {rs:?}"));
        }
        if distinct {
            let lens: Vec<usize> = rs.iter().map(|r| r.messages.len()).collect();
            if got.len() != multinomial(&lens) {
                return Err(format!(
                    "{} interleavings, expected {}",
                    got.len(),
                    multinomial(&lens)
                ));
            }
        }
    }
    Ok(cases)
}

/// Contracts chains through fresh states (ids ≥ `n`) back into edges
/// `(src, labels, dst)`; fails if a fresh state is not on a simple chain.
fn contract(l: &Lts, n: usize) -> Result<Vec<(StateId, Vec<Action>, StateId)>, String> {
    let succ = l.successors();
    let pred = l.predecessors();
    for s in n..l.num_states() {
        if succ[s].len() != 1 || pred[s].len() != 1 {
            return Err(format!("fresh state {s} is not on a simple chain"));
        }
    }
    let mut out = Vec::new();
    for s in 0..n {
        for &(lab, d) in &succ[s] {
            let mut labels = vec![l.label(lab).clone()];
            let mut cur = d;
            while cur >= n {
                let (lab, next) = succ[cur][0];
                labels.push(l.label(lab).clone());
                cur = next;
            }
            out.push((s, labels, cur));
        }
    }
    out.sort();
    Ok(out)
}

fn random_sends(rng: &mut ChaCha8Rng, receivers: &[&str], max: usize) -> Vec<SendAction> {
    (0..rng.gen_range(0..=max))
        .map(|_| {
            SendAction::new(
                *["p", "q", "r"].choose(rng).unwrap(),
                *receivers.choose(rng).unwrap(),
            )
        })
        .collect()
}

/// Splitting labels into chains and contracting the chains again gives back
/// the original edges, relabelled by the expected expansion.
pub fn psi_flatten_round_trip(cases: usize) -> LawResult {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..cases {
        let n = rng.gen_range(1..=6);
        let mut psi_in = Lts::new(n, 0);
        let mut flat_in = Lts::new(n, 0);
        let mut psi_expect = Vec::new();
        let mut flat_expect = Vec::new();
        for _ in 0..rng.gen_range(0..=8) {
            let (s, d) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let (take, expanded) = if rng.gen_bool(0.4) {
                let sends = random_sends(&mut rng, &["o1", "o2"], 1);
                let e = match sends.first() {
                    Some(x) => vec![Action::Snd(x.clone())],
                    None => vec![Action::Tau],
                };
                (Action::take("M", sends), e)
            } else {
                let sends = random_sends(&mut rng, &["M"], 3);
                let mut e: Vec<Action> = sends
                    .iter()
                    .map(|x| Action::Rcv(x.message.clone()))
                    .collect();
                if e.is_empty() {
                    e.push(Action::Tau);
                }
                (
                    Action::take(*["o1", "o2"].choose(&mut rng).unwrap(), sends),
                    e,
                )
            };
            psi_in.add(s, &take, d);
            psi_expect.push((s, expanded, d));

            let sends = random_sends(&mut rng, &["o1", "o2"], 3);
            let mut e: Vec<Action> = sends.iter().cloned().map(Action::Snd).collect();
            if e.is_empty() {
                e.push(Action::Tau);
            }
            flat_in.add(s, &Action::from_sends(sends), d);
            flat_expect.push((s, e, d));
        }
        psi_expect.sort();
        flat_expect.sort();
        let psi = reconfigure_psi(&psi_in, "M").map_err(|e| e.to_string())?;
        if contract(&psi, n)? != psi_expect {
            return Err(format!(
                "ψ chains do not contract back:\n{}",
                agcheck::lts::to_aut_string(&psi)
            ));
        }
        let flat = flatten_sequences(&flat_in);
        if contract(&flat, n)? != flat_expect {
            return Err(format!(
                "flattened chains do not contract back:\n{}",
                agcheck::lts::to_aut_string(&flat)
            ));
        }
    }
    Ok(cases)
}

/// Determinism, totality, and agreement of every word's outcome (π, θ or an
/// ordinary state) with path enumeration on the input.
pub fn determinize_total_deterministic(cases: usize) -> LawResult {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let sigma = letters();
    for _ in 0..cases {
        let with_pi = rng.gen_bool(0.5);
        let l = random_lts(&mut rng, 6, 0.25, with_pi);
        let d = determinize_complete(&l, &sigma);
        if !d.is_deterministic() {
            return Err("result is not deterministic".into());
        }
        let succ = d.successors();
        for (s, edges) in succ.iter().enumerate() {
            if Some(s) == d.pi() {
                continue;
            }
            let out: BTreeSet<&Action> = edges.iter().map(|&(lab, _)| d.label(lab)).collect();
            if out.len() != sigma.len() || edges.len() != sigma.len() {
                return Err(format!("state {s} is not total"));
            }
        }
        for w in words(&sigma, 5) {
            // only words whose proper prefixes avoid π
            let r = reach(&l, &w);
            let prefix_pi =
                (0..w.len()).any(|k| l.pi().is_some_and(|p| reach(&l, &w[..k]).contains(&p)));
            if prefix_pi {
                continue;
            }
            let got = det_run(&d, &w).ok_or("run blocked in a total automaton")?;
            let want_pi = l.pi().is_some_and(|p| r.contains(&p));
            let ok = if want_pi {
                Some(got) == d.pi()
            } else if r.is_empty() {
                Some(got) == d.theta()
            } else {
                Some(got) != d.pi() && Some(got) != d.theta()
            };
            if !ok {
                return Err(format!("word {w:?} ends in the wrong kind of state"));
            }
        }
    }
    Ok(cases)
}

/// Random deterministic, partial LTS over `a b c`.
fn random_det(rng: &mut ChaCha8Rng, max_states: usize) -> Lts {
    let n = rng.gen_range(1..=max_states);
    let mut l = Lts::new(n, 0);
    for s in 0..n {
        for a in letters() {
            if rng.gen_bool(0.7) {
                l.add(s, &a, rng.gen_range(0..n));
            }
        }
    }
    l.set_alphabet(Some(letters()));
    l
}

/// `trace_included` against enumeration of the candidate's traces up to
/// length 8. A reported counterexample must be a shortest missing trace.
pub fn inclusion_brute_force(cases: usize) -> LawResult {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let sigma = letters();
    let all = words(&sigma, 8);
    let (mut holds, mut escapes) = (0, 0);
    for _ in 0..cases {
        let cand = random_lts(&mut rng, 10, 0.2, false);
        let ta = random_det(&mut rng, 10);
        let shortest_missing = all
            .iter()
            .find(|w| !reach(&cand, w).is_empty() && det_run(&ta, w).is_none())
            .map(|w| w.len());
        let got = trace_included(&cand, &ta).map_err(|e| e.to_string())?;
        match (got, shortest_missing) {
            (Inclusion::Holds, None) => holds += 1,
            (Inclusion::Counterexample(t), Some(len)) => {
                escapes += 1;
                let w = t.0;
                if w.len() != len || reach(&cand, &w).is_empty() || det_run(&ta, &w).is_some() {
                    return Err(format!(
                        "counterexample {w:?} is not a shortest missing trace"
                    ));
                }
            }
            (Inclusion::Counterexample(t), None) => {
                escapes += 1;
                let w = t.0;
                if w.len() <= 8 || reach(&cand, &w).is_empty() || det_run(&ta, &w).is_some() {
                    return Err(format!("spurious counterexample {w:?}"));
                }
            }
            (Inclusion::Holds, Some(len)) => {
                return Err(format!(
                    "inclusion holds but a trace of length {len} is missing"
                ));
            }
        }
    }
    if holds == 0 || escapes == 0 {
        return Err(format!(
            "degenerate sample: {holds} inclusions, {escapes} escapes"
        ));
    }
    Ok(cases)
}

/// Weak traces and error traces (up to length 6) survive the reduction.
pub fn reduction_preserves_traces(cases: usize) -> LawResult {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let sigma = letters();
    for _ in 0..cases {
        let with_pi = rng.gen_bool(0.6);
        let l = random_lts(&mut rng, 8, 0.35, with_pi);
        let r = reduce_weak_trace(&l);
        let outcome = |x: &Lts, w: &[Action]| -> (bool, bool) {
            let s = reach(x, w);
            (!s.is_empty(), x.pi().is_some_and(|p| s.contains(&p)))
        };
        for w in words(&sigma, 6) {
            if outcome(&l, &w) != outcome(&r, &w) {
                return Err(format!("word {w:?} changes outcome under reduction"));
            }
        }
    }
    Ok(cases)
}

pub fn all() -> BTreeMap<&'static str, LawResult> {
    BTreeMap::from([
        ("shuffle cardinality", shuffle_cardinality(200)),
        ("psi flatten round trip", psi_flatten_round_trip(200)),
        ("determinize totality", determinize_total_deterministic(150)),
        ("trace inclusion", inclusion_brute_force(150)),
        ("weak-trace reduction", reduction_preserves_traces(150)),
    ])
}
