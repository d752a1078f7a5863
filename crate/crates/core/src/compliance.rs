//! Compliance of a concrete component with its interface description.
//!
//! For each message the component handles, a message-flow graph abstracts
//! the method body (variables ignored, both branches taken) and follows
//! self-sends, so one complete path yields every response to that message.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::aml::{ActorDef, Model, Stmt, Target};
use crate::infm::InfoSpec;
use crate::lts::{reduce_weak_trace, Action, Lts, SendAction, StateId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplianceError {
    #[error("`{actor}` has no method `{method}`")]
    UnknownMethod { actor: String, method: String },
    #[error("method `{method}` sends to unknown actor `{target}`")]
    UnknownTarget { method: String, target: String },
    #[error("self-sends from `{method}` exceed the mailbox capacity {capacity}")]
    UnboundedSelfSend { method: String, capacity: usize },
}

/// Flow state: statements still to run, and self-sent messages waiting.
type FlowState = (Vec<Stmt>, Vec<String>);

/// Reduced message-flow graph of one method.
#[derive(Debug, Clone)]
pub struct MessageFlow {
    pub lts: Lts,
    /// The state `(ε, ε)`; `None` when the method never finishes.
    pub end: Option<StateId>,
}

fn is_self(t: &Target, actor: &ActorDef) -> bool {
    match t {
        Target::SelfRef => true,
        Target::Actor(a) => *a == actor.name,
    }
}

/// Unreduced flow graph. The end state is stored as the π marker.
pub fn build_flow_graph(actor: &ActorDef, m: &str) -> Result<Lts, ComplianceError> {
    if actor.method(m).is_none() {
        return Err(ComplianceError::UnknownMethod {
            actor: actor.name.clone(),
            method: m.to_string(),
        });
    }
    let mut ids: HashMap<FlowState, StateId> = HashMap::new();
    let mut todo: Vec<FlowState> = Vec::new();
    let start: FlowState = (Vec::new(), vec![m.to_string()]);
    ids.insert(start.clone(), 0);
    todo.push(start);
    let mut edges: Vec<(StateId, Action, FlowState)> = Vec::new();

    while let Some(st) = todo.pop() {
        let src = ids[&st];
        let (pending, queue) = st;
        let mut next: Vec<(Action, FlowState)> = Vec::new();
        match pending.split_first() {
            None => {
                if let Some((head, rest)) = queue.split_first() {
                    let body = match actor.method(head) {
                        Some(meth) => meth.body.clone(),
                        None => {
                            return Err(ComplianceError::UnknownMethod {
                                actor: actor.name.clone(),
                                method: head.clone(),
                            })
                        }
                    };
                    next.push((Action::Tau, (body, rest.to_vec())));
                }
            }
            Some((stmt, rest)) => match stmt {
                Stmt::Assign { .. } | Stmt::NonDet { .. } => {
                    next.push((Action::Tau, (rest.to_vec(), queue.clone())));
                }
                Stmt::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    for branch in [then_branch, else_branch] {
                        let mut p = branch.clone();
                        p.extend_from_slice(rest);
                        next.push((Action::Tau, (p, queue.clone())));
                    }
                }
                Stmt::Send(s) if is_self(&s.target, actor) => {
                    if queue.len() >= actor.capacity {
                        return Err(ComplianceError::UnboundedSelfSend {
                            method: m.to_string(),
                            capacity: actor.capacity,
                        });
                    }
                    let mut q = queue.clone();
                    q.push(s.message.clone());
                    next.push((Action::Tau, (rest.to_vec(), q)));
                }
                Stmt::Send(s) => {
                    let a = Action::snd(&s.message, s.target.resolve(&actor.name));
                    next.push((a, (rest.to_vec(), queue.clone())));
                }
            },
        }
        for (a, dst) in next {
            if !ids.contains_key(&dst) {
                ids.insert(dst.clone(), ids.len());
                todo.push(dst.clone());
            }
            edges.push((src, a, dst));
        }
    }

    let mut l = Lts::new(ids.len(), 0);
    for (src, a, dst) in &edges {
        l.add(*src, a, ids[dst]);
    }
    l.set_pi(ids.get(&(Vec::new(), Vec::new())).copied());
    Ok(l)
}

/// The flow graph of `m` reduced modulo weak trace equivalence, keeping
/// apart the states that can still finish.
pub fn build_mf(actor: &ActorDef, m: &str) -> Result<MessageFlow, ComplianceError> {
    let mut lts = reduce_weak_trace(&build_flow_graph(actor, m)?);
    let end = lts.pi();
    lts.set_pi(None);
    Ok(MessageFlow { lts, end })
}

fn on_cycle(succ: &[Vec<(crate::lts::LabelId, StateId)>], from: StateId, to: StateId) -> bool {
    // is `to` reachable back to `from`
    let mut seen = vec![false; succ.len()];
    let mut stack = vec![to];
    while let Some(s) = stack.pop() {
        if s == from {
            return true;
        }
        if std::mem::replace(&mut seen[s], true) {
            continue;
        }
        stack.extend(succ[s].iter().map(|&(_, d)| d));
    }
    false
}

fn well_formed(trace: &[SendAction], capacities: &BTreeMap<String, usize>) -> bool {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in trace {
        *counts.entry(&s.receiver).or_default() += 1;
    }
    counts
        .iter()
        .all(|(r, n)| capacities.get(*r).is_none_or(|c| n <= c))
}

/// Complete traces of a message-flow graph, collected backwards from its
/// end state. A path never revisits a state. `overflow` is set when a
/// trace sends more to some actor than its mailbox holds, or when a send
/// lies on a cycle and responses are therefore unbounded.
pub fn backward_traces(
    mf: &MessageFlow,
    capacities: &BTreeMap<String, usize>,
) -> (bool, BTreeSet<Vec<SendAction>>) {
    let mut result = BTreeSet::new();
    let l = &mf.lts;
    let succ = l.successors();
    for t in l.transitions() {
        if !l.label(t.label).is_tau() && on_cycle(&succ, t.src, t.dst) {
            return (true, result);
        }
    }
    let Some(end) = mf.end else {
        return (false, result);
    };
    let pred = l.predecessors();
    let mut on_path = vec![false; l.num_states()];
    let mut rev: Vec<SendAction> = Vec::new();
    let overflow = walk(
        l,
        &pred,
        end,
        capacities,
        &mut on_path,
        &mut rev,
        &mut result,
    );
    (overflow, result)
}

fn walk(
    l: &Lts,
    pred: &[Vec<(crate::lts::LabelId, StateId)>],
    s: StateId,
    caps: &BTreeMap<String, usize>,
    on_path: &mut [bool],
    rev: &mut Vec<SendAction>,
    out: &mut BTreeSet<Vec<SendAction>>,
) -> bool {
    if s == l.initial() {
        out.insert(rev.iter().rev().cloned().collect());
        return false;
    }
    on_path[s] = true;
    for &(lab, p) in &pred[s] {
        if on_path[p] {
            continue;
        }
        let pushed = match l.label(lab) {
            Action::Snd(a) => {
                rev.push(a.clone());
                true
            }
            _ => false,
        };
        if pushed && !well_formed(rev, caps) {
            return true;
        }
        let overflow = walk(l, pred, p, caps, on_path, rev, out);
        if pushed {
            rev.pop();
        }
        if overflow {
            return true;
        }
    }
    on_path[s] = false;
    false
}

/// Messages of `trace` addressed to `target`, in order.
pub fn project(trace: &[SendAction], target: &str) -> Vec<String> {
    trace
        .iter()
        .filter(|s| s.receiver == target)
        .map(|s| s.message.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Responses to `method` are unbounded or overflow a mailbox.
    Overflow { method: String },
    /// No interface entry for `method` produces `trace`; `target` is the
    /// first actor whose projection cannot be matched.
    Unmatched {
        method: String,
        trace: Vec<SendAction>,
        target: String,
    },
    /// The open system sends `method` but the component does not handle it.
    Missing { method: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overflow { method } => write!(f, "method={method} overflow"),
            Violation::Missing { method } => write!(f, "method={method} missing"),
            Violation::Unmatched {
                method,
                trace,
                target,
            } => {
                write!(f, "method={method} trace=<")?;
                for (i, s) in trace.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "> target={target}")
            }
        }
    }
}

fn expected<'a>(entry: &'a crate::infm::InfoEntry, y: &str) -> &'a [String] {
    entry
        .responses
        .iter()
        .find(|r| r.target == y)
        .map_or(&[], |r| r.messages.as_slice())
}

/// Checks the component against the interface description. Only the
/// messages the description lists are entry points; methods reached
/// through self-sends are covered by the flow graphs of their triggers.
/// An empty result means the component complies.
pub fn check_compliance(
    actor: &ActorDef,
    info: &InfoSpec,
    open: &Model,
) -> Result<Vec<Violation>, ComplianceError> {
    let caps: BTreeMap<String, usize> = open
        .actors
        .iter()
        .map(|a| (a.name.clone(), a.capacity))
        .collect();
    for meth in &actor.methods {
        let mut bad = None;
        crate::aml::visit_sends(&meth.body, &mut |s| {
            if !is_self(&s.target, actor) && !caps.contains_key(s.target.resolve(&actor.name)) {
                bad.get_or_insert_with(|| s.target.resolve(&actor.name).to_string());
            }
        });
        if let Some(target) = bad {
            return Err(ComplianceError::UnknownTarget {
                method: meth.name.clone(),
                target,
            });
        }
    }

    let sent = open.messages_sent_to(&actor.name);
    let mut out = Vec::new();
    for m in info.messages() {
        if actor.method(&m).is_none() {
            if sent.contains(&m) {
                out.push(Violation::Missing { method: m });
            }
            continue;
        }
        let mf = match build_mf(actor, &m) {
            Ok(mf) => mf,
            Err(ComplianceError::UnboundedSelfSend { .. }) => {
                out.push(Violation::Overflow { method: m });
                continue;
            }
            Err(e) => return Err(e),
        };
        let (overflow, traces) = backward_traces(&mf, &caps);
        if overflow {
            out.push(Violation::Overflow { method: m });
            continue;
        }
        let entries: Vec<_> = info.entries_for(&m).collect();
        for zeta in traces {
            let fits = |e: &crate::infm::InfoEntry, y: &str| project(&zeta, y) == expected(e, y);
            if entries.iter().any(|e| caps.keys().all(|y| fits(e, y))) {
                continue;
            }
            let target = caps
                .keys()
                .find(|y| !entries.iter().any(|e| fits(e, y)))
                .or_else(|| {
                    entries
                        .first()
                        .and_then(|e| caps.keys().find(|y| !fits(e, y)))
                })
                .cloned()
                .unwrap_or_default();
            out.push(Violation::Unmatched {
                method: m.clone(),
                trace: zeta,
                target,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aml::parse_model;

    fn actor(src: &str) -> ActorDef {
        parse_model(src).unwrap().actors.remove(0)
    }

    fn mutex_m() -> ActorDef {
        actor(include_str!("../fixtures/mutex/component.aml"))
    }

    fn caps(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(a, c)| (a.to_string(), *c)).collect()
    }

    #[test]
    fn mutex_req_flow_has_one_send() {
        let mf = build_mf(&mutex_m(), "reqL").unwrap();
        assert_eq!(mf.lts.num_states(), 2);
        assert_eq!(mf.lts.num_transitions(), 1);
        assert_eq!(mf.lts.label_texts(), vec!["tau", "Snd(permitL)::left"]);
        let (overflow, traces) = backward_traces(&mf, &caps(&[("left", 2)]));
        assert!(!overflow);
        assert_eq!(
            traces.into_iter().collect::<Vec<_>>(),
            vec![vec![SendAction::new("permitL", "left")]]
        );
    }

    #[test]
    fn raw_flow_graph_loops_on_self_send() {
        let g = build_flow_graph(&mutex_m(), "reqL").unwrap();
        // (ε,<reqL>) is re-entered after the else branch
        let back = g.transitions().iter().any(|t| t.dst == g.initial());
        assert!(back);
        assert!(g.pi().is_some());
    }

    #[test]
    fn empty_body_has_empty_trace() {
        let a = actor("actor M(1) { m {} }");
        let mf = build_mf(&a, "m").unwrap();
        let (overflow, traces) = backward_traces(&mf, &BTreeMap::new());
        assert!(!overflow);
        assert_eq!(traces.into_iter().collect::<Vec<_>>(), vec![vec![]]);
    }

    #[test]
    fn too_many_sends_overflow() {
        let a = actor("actor M(1) { m { x!a; x!b; x!c; } }");
        let mf = build_mf(&a, "m").unwrap();
        assert!(backward_traces(&mf, &caps(&[("x", 2)])).0);
        assert!(!backward_traces(&mf, &caps(&[("x", 3)])).0);
    }

    #[test]
    fn self_loop_never_finishes() {
        let a = actor("actor M(1) { m { self!m; } }");
        let g = build_flow_graph(&a, "m").unwrap();
        assert!(g.transitions().iter().any(|t| t.dst == g.initial()));
        let mf = build_mf(&a, "m").unwrap();
        assert_eq!(mf.end, None);
    }

    #[test]
    fn send_on_cycle_is_unbounded() {
        let a = actor("actor M(1) { m { x!a; self!m; } }");
        let mf = build_mf(&a, "m").unwrap();
        assert!(backward_traces(&mf, &caps(&[("x", 9)])).0);
    }

    #[test]
    fn self_send_chain_beyond_capacity_is_an_error() {
        let a = actor("actor M(1) { m { self!n; self!n; } n {} }");
        assert!(matches!(
            build_flow_graph(&a, "m"),
            Err(ComplianceError::UnboundedSelfSend { .. })
        ));
    }

    #[test]
    fn self_sends_join_the_response() {
        let a = actor("actor M(2) { m { x!a; self!n; } n { y!b; } }");
        let mf = build_mf(&a, "m").unwrap();
        let (_, traces) = backward_traces(&mf, &caps(&[("x", 1), ("y", 1)]));
        assert_eq!(
            traces.into_iter().collect::<Vec<_>>(),
            vec![vec![SendAction::new("a", "x"), SendAction::new("b", "y")]]
        );
    }

    #[test]
    fn projection() {
        let z = vec![SendAction::new("m1", "y"), SendAction::new("m2", "x")];
        assert_eq!(project(&z, "y"), vec!["m1"]);
        assert_eq!(project(&z, "x"), vec!["m2"]);
        assert!(project(&z, "w").is_empty());
    }

    #[test]
    fn renaming_variables_keeps_the_flow() {
        let a = mutex_m();
        let src = crate::aml::parse_model(include_str!("../fixtures/mutex/component.aml"))
            .unwrap()
            .to_string()
            .replace("taken", "busy");
        let b = actor(&src);
        for m in ["reqL", "reqR", "release"] {
            let x = build_mf(&a, m).unwrap().lts;
            let y = build_mf(&b, m).unwrap().lts;
            assert!(x.canonical().edge_list() == y.canonical().edge_list());
        }
    }

    fn fixture(dir: &str, open: &str, info: &str, comp: &str) -> (Model, InfoSpec, ActorDef) {
        let base = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join(dir);
        let read = |f: &str| std::fs::read_to_string(base.join(f)).unwrap();
        let open = parse_model(&read(open)).unwrap();
        let info = crate::infm::parse_info(&read(info), &open).unwrap().info;
        (open, info, actor(&read(comp)))
    }

    #[test]
    fn fixture_components_comply() {
        for (d, o, i, c) in [
            ("mutex", "open.aml", "mutex.info", "component.aml"),
            ("eft", "open.aml", "purchase.info", "component.aml"),
            (
                "quadricopter",
                "open_multi.aml",
                "observer.info",
                "component.aml",
            ),
        ] {
            let (open, info, m) = fixture(d, o, i, c);
            assert_eq!(check_compliance(&m, &info, &open).unwrap(), vec![], "{d}");
        }
    }

    #[test]
    fn answering_both_permits_is_rejected() {
        let (open, info, _) = fixture("mutex", "open.aml", "mutex.info", "component.aml");
        let m = actor(
            "actor mutex(3) { reqL { left!permitL; right!permitR; } reqR { right!permitR; } release {} }",
        );
        let v = check_compliance(&m, &info, &open).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(
            v[0].to_string(),
            "method=reqL trace=<Snd(permitL)::left,Snd(permitR)::right> target=right"
        );
    }

    #[test]
    fn unknown_target_is_an_error() {
        let (open, info, _) = fixture("mutex", "open.aml", "mutex.info", "component.aml");
        let m = actor("actor mutex(3) { reqL { nobody!x; } reqR {} release {} }");
        assert!(matches!(
            check_compliance(&m, &info, &open),
            Err(ComplianceError::UnknownTarget { .. })
        ));
    }
}
