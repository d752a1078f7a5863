//! Checking a concrete component: its interaction LTS is derived by letting
//! a wild environment feed it every interface message, then compared with
//! the assumption by trace inclusion.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::aml::{ActorDef, BinOp, Expr, Method, Model, SendStmt, Stmt, Target};
use crate::assume::AssumptionOutcome;
use crate::compliance::{check_compliance, ComplianceError, Violation};
use crate::infm::InfoSpec;
use crate::lts::{
    rename, trace_included, Action, Inclusion, InclusionError, Lts, SendAction, Trace,
};
use crate::property::{compose_property_lts, ErrDfa};
use crate::semantics::{explore, SemanticsError};

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("actor `{0}` has no methods to drive")]
    NoInterface(String),
    #[error(transparent)]
    Compliance(#[from] ComplianceError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Inclusion(#[from] InclusionError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComponentVerdict {
    Accepted,
    RejectedNonCompliant(Vec<Violation>),
    RejectedTraceEscape(Trace),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonolithicVerdict {
    Holds,
    /// Shortest sequence of steps reaching the error state.
    Violated(Trace),
}

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    let mut s = base.to_string();
    while taken.contains(&s) {
        s.push('_');
    }
    s
}

/// Name of the wild environment and of its only message.
fn env_names(actor: &ActorDef, taken: &BTreeSet<String>) -> (String, String) {
    let mut taken = taken.clone();
    taken.insert(actor.name.clone());
    taken.extend(actor.method_names().map(String::from));
    taken.extend(actor.vars.iter().cloned());
    taken.insert("l".into());
    let a = fresh(&format!("{}_c", actor.name), &taken);
    taken.insert(a.clone());
    let m = fresh("m_c", &taken);
    (a, m)
}

/// The wild environment of `actor` that keeps sending it one of
/// `messages`, chosen nondeterministically.
pub fn synthesize_mc_for(
    actor: &ActorDef,
    messages: &[String],
    taken: &BTreeSet<String>,
) -> Result<ActorDef, CheckError> {
    if messages.is_empty() {
        return Err(CheckError::NoInterface(actor.name.clone()));
    }
    let (name, mc) = env_names(actor, taken);
    let l = || Expr::Var("l".into());
    let mut body = vec![Stmt::NonDet {
        var: "l".into(),
        choices: (1..=messages.len() as i64).map(Expr::Int).collect(),
    }];
    body.extend(messages.iter().enumerate().map(|(i, m)| Stmt::If {
        cond: Expr::binary(BinOp::Eq, l(), Expr::Int(i as i64 + 1)),
        then_branch: vec![Stmt::Send(SendStmt::to(actor.name.clone(), m.clone()))],
        else_branch: vec![],
    }));
    body.push(Stmt::Send(SendStmt::new(Target::SelfRef, mc.clone())));
    body.push(Stmt::Assign {
        var: "l".into(),
        expr: Expr::Int(0),
    });
    Ok(ActorDef {
        name,
        capacity: 1,
        vars: vec!["l".into()],
        methods: vec![Method { name: mc, body }],
    })
}

/// The wild environment over every method of `actor`.
pub fn synthesize_mc(actor: &ActorDef) -> Result<ActorDef, CheckError> {
    let all: Vec<String> = actor.method_names().map(String::from).collect();
    synthesize_mc_for(actor, &all, &BTreeSet::new())
}

/// Closed system of `actor`, its wild environment and a message-dropping
/// dummy for every actor in `o_ids`.
pub fn tm_system(
    actor: &ActorDef,
    o_ids: &[String],
    messages: &[String],
) -> Result<Model, CheckError> {
    let taken: BTreeSet<String> = o_ids.iter().cloned().collect();
    let env = synthesize_mc_for(actor, messages, &taken)?;
    let mut received: BTreeMap<&str, BTreeSet<String>> = o_ids
        .iter()
        .map(|o| (o.as_str(), BTreeSet::new()))
        .collect();
    for m in &actor.methods {
        crate::aml::visit_sends(&m.body, &mut |s| {
            if let Some(set) = received.get_mut(s.target.resolve(&actor.name)) {
                set.insert(s.message.clone());
            }
        });
    }
    let mut actors = vec![actor.clone()];
    let main = vec![SendStmt::to(env.name.clone(), env.methods[0].name.clone())];
    actors.push(env);
    for (o, msgs) in received {
        actors.push(ActorDef {
            name: o.to_string(),
            capacity: 0,
            vars: vec![],
            methods: msgs
                .into_iter()
                .map(|name| Method { name, body: vec![] })
                .collect(),
        });
    }
    Ok(Model { actors, main })
}

/// Interaction LTS of `actor` over receipts of `messages` and its sends.
pub fn derive_tm_for(
    actor: &ActorDef,
    o_ids: &[String],
    messages: &[String],
    cap: usize,
) -> Result<Lts, CheckError> {
    let sys = tm_system(actor, o_ids, messages)?;
    let env = sys.actors[1].name.clone();
    let ss = explore(&sys, cap)?;
    Ok(rename(&ss.lts, |a| match a {
        Action::Take { taker, sends } if *taker == env => sends
            .iter()
            .find(|s| s.receiver == actor.name)
            .map_or(Action::Tau, |s| Action::rcv(&s.message)),
        Action::Take { sends, .. } => Action::from_sends(sends.clone()),
        other => other.clone(),
    }))
}

pub fn derive_tm(actor: &ActorDef, o_ids: &[String], cap: usize) -> Result<Lts, CheckError> {
    let all: Vec<String> = actor.method_names().map(String::from).collect();
    derive_tm_for(actor, o_ids, &all, cap)
}

/// Drops the sends outside `alphabet`; a label left empty becomes τ.
pub fn hide_c3(l: &Lts, alphabet: &[Action]) -> Lts {
    let keep: BTreeSet<&SendAction> = alphabet
        .iter()
        .filter_map(|a| match a {
            Action::Snd(s) => Some(s),
            _ => None,
        })
        .collect();
    rename(l, |a| match a {
        Action::Snd(s) if keep.contains(s) => a.clone(),
        Action::Snd(_) => Action::Tau,
        Action::Seq(ss) => {
            Action::from_sends(ss.iter().filter(|s| keep.contains(s)).cloned().collect())
        }
        other => other.clone(),
    })
}

/// Interface messages the environment may send: those listed in `info`
/// that `actor` handles.
pub fn interface_messages(actor: &ActorDef, info: &InfoSpec) -> Vec<String> {
    info.messages()
        .into_iter()
        .filter(|m| actor.method(m).is_some())
        .collect()
}

/// The two-step check of a concrete component against an assumption.
pub fn check_component(
    actor: &ActorDef,
    open: &Model,
    info: &InfoSpec,
    ta: &AssumptionOutcome,
    cap: usize,
) -> Result<ComponentVerdict, CheckError> {
    let violations = check_compliance(actor, info, open)?;
    if !violations.is_empty() {
        return Ok(ComponentVerdict::RejectedNonCompliant(violations));
    }
    let ta = match ta {
        AssumptionOutcome::AlwaysHolds => return Ok(ComponentVerdict::Accepted),
        AssumptionOutcome::NeverHolds => {
            return Ok(ComponentVerdict::RejectedTraceEscape(Trace::default()))
        }
        AssumptionOutcome::Assumption(l) => l,
    };
    let messages = interface_messages(actor, info);
    let tm = derive_tm_for(actor, &open.actor_names(), &messages, cap)?;
    let hidden = hide_c3(&tm, &ta.alphabet());
    Ok(match trace_included(&hidden, ta)? {
        Inclusion::Holds => ComponentVerdict::Accepted,
        Inclusion::Counterexample(t) => ComponentVerdict::RejectedTraceEscape(t),
    })
}

/// Explores the closed system against the error automaton.
pub fn verify_monolithic(
    closed: &Model,
    d: &ErrDfa,
    cap: usize,
) -> Result<MonolithicVerdict, CheckError> {
    let l = compose_property_lts(closed, d, cap)?.lts;
    let Some(pi) = l.pi() else {
        return Ok(MonolithicVerdict::Holds);
    };
    let succ = l.successors();
    let mut parent: Vec<Option<(usize, crate::lts::LabelId)>> = vec![None; l.num_states()];
    let mut seen = vec![false; l.num_states()];
    seen[l.initial()] = true;
    let mut queue = VecDeque::from([l.initial()]);
    while let Some(s) = queue.pop_front() {
        if s == pi {
            break;
        }
        for &(lab, d) in &succ[s] {
            if !std::mem::replace(&mut seen[d], true) {
                parent[d] = Some((s, lab));
                queue.push_back(d);
            }
        }
    }
    let mut steps = Vec::new();
    let mut at = pi;
    while let Some((p, lab)) = parent[at] {
        steps.push(l.label(lab).clone());
        at = p;
    }
    steps.reverse();
    Ok(MonolithicVerdict::Violated(Trace(steps)))
}
