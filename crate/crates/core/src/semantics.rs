//! Coarse-grained operational semantics: one transition per message taken,
//! with the whole method body executed atomically.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::Hash;

use crate::aml::{check_wellformed, BinOp, Diagnostic, EvalError, Expr, Model, Stmt, Value};
use crate::lts::{Action, Lts, SendAction, StateId};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// State bound from `AGCHECK_STATE_CAP`, or the default.
pub fn default_state_cap() -> usize {
    std::env::var("AGCHECK_STATE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|v: &usize| *v >= 1)
        .unwrap_or(DEFAULT_STATE_CAP)
}

#[derive(Debug, thiserror::Error)]
pub enum SemanticsError {
    #[error("model is not well-formed:\n{}", join_diags(.0))]
    IllFormed(Vec<Diagnostic>),
    #[error("main block overflows the mailbox of `{actor}` (capacity {capacity})")]
    MainOverflow { actor: String, capacity: usize },
    #[error("in {actor}.{method}: {source}")]
    Eval {
        actor: String,
        method: String,
        source: EvalError,
    },
    #[error("state bound of {cap} exceeded with {frontier} states still unexplored")]
    StateCap { cap: usize, frontier: usize },
}

fn join_diags(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|x| format!("  {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone)]
enum CExpr {
    Int(i64),
    Var(usize),
    SelfRef,
    Not(Box<CExpr>),
    Binary(BinOp, Box<CExpr>, Box<CExpr>),
}

#[derive(Debug, Clone)]
enum CStmt {
    Assign(usize, CExpr),
    NonDet(usize, Vec<CExpr>),
    If(CExpr, Vec<CStmt>, Vec<CStmt>),
    Send(usize, u32),
}

#[derive(Debug, Clone)]
struct CActor {
    name: String,
    capacity: usize,
    vars: Vec<String>,
    methods: HashMap<u32, (String, Vec<CStmt>)>,
}

/// A well-formed model compiled to index-based form.
#[derive(Debug, Clone)]
pub struct System {
    actors: Vec<CActor>,
    messages: Vec<String>,
    main: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalState {
    pub env: Vec<Value>,
    pub mailbox: Vec<u32>,
}

/// Global state between coarse steps. Method bodies run to completion
/// inside a step, so no pending statements are stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalState {
    pub locals: Vec<LocalState>,
}

/// Observer of the sends performed during a step. Returning `None` means
/// the monitor entered its error state.
pub trait Monitor {
    type State: Clone + Eq + Hash;
    fn initial(&self) -> Self::State;
    fn step(&self, q: &Self::State, a: &SendAction) -> Option<Self::State>;
}

pub struct NoMonitor;

impl Monitor for NoMonitor {
    type State = ();
    fn initial(&self) {}
    fn step(&self, _: &(), _: &SendAction) -> Option<()> {
        Some(())
    }
}

/// Result of an exploration. `states[i]` is `None` for the merged error
/// state.
#[derive(Debug, Clone)]
pub struct StateSpace<Q> {
    pub lts: Lts,
    pub states: Vec<Option<(GlobalState, Q)>>,
    pub deadlocks: Vec<StateId>,
}

enum Outcome<Q> {
    Done(GlobalState, Q, Vec<(usize, u32)>),
    Error(Vec<(usize, u32)>),
}

impl System {
    pub fn compile(model: &Model) -> Result<System, SemanticsError> {
        check_wellformed(model).map_err(SemanticsError::IllFormed)?;
        let mut messages: Vec<String> = Vec::new();
        let mut msg_ids: HashMap<String, u32> = HashMap::new();
        let mut intern = |m: &str| -> u32 {
            if let Some(&i) = msg_ids.get(m) {
                return i;
            }
            let i = messages.len() as u32;
            messages.push(m.to_string());
            msg_ids.insert(m.to_string(), i);
            i
        };
        let actor_ids: HashMap<&str, usize> = model
            .actors
            .iter()
            .enumerate()
            .map(|(i, a)| (a.name.as_str(), i))
            .collect();
        let mut actors = Vec::new();
        for (ai, a) in model.actors.iter().enumerate() {
            let var_ids: HashMap<&str, usize> = a
                .vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.as_str(), i))
                .collect();
            let mut methods = HashMap::new();
            for m in &a.methods {
                let body = compile_block(&m.body, ai, &var_ids, &actor_ids, &mut intern);
                methods.insert(intern(&m.name), (m.name.clone(), body));
            }
            actors.push(CActor {
                name: a.name.clone(),
                capacity: a.capacity,
                vars: a.vars.clone(),
                methods,
            });
        }
        let main = model
            .main
            .iter()
            .map(|s| (actor_ids[s.target.resolve("")], intern(&s.message)))
            .collect();
        Ok(System {
            actors,
            messages,
            main,
        })
    }

    pub fn actor_name(&self, i: usize) -> &str {
        &self.actors[i].name
    }

    pub fn message_name(&self, m: u32) -> &str {
        &self.messages[m as usize]
    }

    pub fn num_actors(&self) -> usize {
        self.actors.len()
    }

    fn send_action(&self, y: usize, m: u32) -> SendAction {
        SendAction::new(self.message_name(m), self.actor_name(y))
    }

    pub fn initial_state(&self) -> Result<GlobalState, SemanticsError> {
        let mut locals: Vec<LocalState> = self
            .actors
            .iter()
            .map(|a| LocalState {
                env: vec![Value::Int(0); a.vars.len()],
                mailbox: Vec::new(),
            })
            .collect();
        for &(y, m) in &self.main {
            let a = &self.actors[y];
            if locals[y].mailbox.len() >= a.capacity {
                return Err(SemanticsError::MainOverflow {
                    actor: a.name.clone(),
                    capacity: a.capacity,
                });
            }
            locals[y].mailbox.push(m);
        }
        Ok(GlobalState { locals })
    }

    /// Human-readable rendering of a state, for witnesses and debugging.
    pub fn describe(&self, s: &GlobalState) -> String {
        let parts: Vec<String> = self
            .actors
            .iter()
            .zip(&s.locals)
            .map(|(a, l)| {
                let vars: Vec<String> = a
                    .vars
                    .iter()
                    .zip(&l.env)
                    .map(|(n, v)| format!("{n}={v}"))
                    .collect();
                let mb: Vec<&str> = l.mailbox.iter().map(|m| self.message_name(*m)).collect();
                format!("{}[{}|{}]", a.name, vars.join(","), mb.join(","))
            })
            .collect();
        parts.join(" ")
    }

    fn eval(&self, e: &CExpr, x: usize, env: &[Value]) -> Result<Value, EvalError> {
        Ok(match e {
            CExpr::Int(i) => Value::Int(*i),
            CExpr::Var(v) => env[*v].clone(),
            CExpr::SelfRef => Value::Actor(self.actors[x].name.clone()),
            CExpr::Not(a) => Value::Int(!self.eval(a, x, env)?.truthy() as i64),
            CExpr::Binary(op, a, b) => op.apply(&self.eval(a, x, env)?, &self.eval(b, x, env)?)?,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn run<'a, M: Monitor>(
        &'a self,
        mon: &M,
        x: usize,
        method: &str,
        mut gs: GlobalState,
        mut q: M::State,
        mut cont: Vec<&'a [CStmt]>,
        mut sends: Vec<(usize, u32)>,
        out: &mut Vec<Outcome<M::State>>,
    ) -> Result<(), SemanticsError> {
        let wrap = |source| SemanticsError::Eval {
            actor: self.actors[x].name.clone(),
            method: method.to_string(),
            source,
        };
        loop {
            let Some(top) = cont.last_mut() else {
                out.push(Outcome::Done(gs, q, sends));
                return Ok(());
            };
            let Some((st, rest)) = top.split_first() else {
                cont.pop();
                continue;
            };
            *top = rest;
            match st {
                CStmt::Assign(v, e) => {
                    let val = self.eval(e, x, &gs.locals[x].env).map_err(wrap)?;
                    gs.locals[x].env[*v] = val;
                }
                CStmt::NonDet(v, choices) => {
                    let vals: Vec<Value> = choices
                        .iter()
                        .map(|e| self.eval(e, x, &gs.locals[x].env))
                        .collect::<Result<_, _>>()
                        .map_err(wrap)?;
                    for val in vals {
                        let mut g = gs.clone();
                        g.locals[x].env[*v] = val;
                        self.run(
                            mon,
                            x,
                            method,
                            g,
                            q.clone(),
                            cont.clone(),
                            sends.clone(),
                            out,
                        )?;
                    }
                    return Ok(());
                }
                CStmt::If(c, t, e) => {
                    let b = self.eval(c, x, &gs.locals[x].env).map_err(wrap)?.truthy();
                    cont.push(if b { t } else { e });
                }
                CStmt::Send(y, m) => {
                    let cap = self.actors[*y].capacity;
                    if cap > 0 {
                        if gs.locals[*y].mailbox.len() >= cap {
                            return Ok(()); // blocked
                        }
                        gs.locals[*y].mailbox.push(*m);
                    }
                    sends.push((*y, *m));
                    match mon.step(&q, &self.send_action(*y, *m)) {
                        Some(next) => q = next,
                        None => {
                            out.push(Outcome::Error(sends));
                            return Ok(());
                        }
                    }
                }
            }
        }
    }

    fn label(&self, taker: usize, sends: &[(usize, u32)]) -> Action {
        Action::take(
            self.actor_name(taker),
            sends.iter().map(|&(y, m)| self.send_action(y, m)).collect(),
        )
    }

    /// Breadth-first exploration from the initial state. Successors of a
    /// state are ordered by label text; the error state, if entered, is a
    /// single merged state without successors.
    pub fn explore_with<M: Monitor>(
        &self,
        mon: &M,
        cap: usize,
    ) -> Result<StateSpace<M::State>, SemanticsError> {
        let init = (self.initial_state()?, mon.initial());
        let mut index: HashMap<(GlobalState, M::State), StateId> = HashMap::new();
        let mut states: Vec<Option<(GlobalState, M::State)>> = vec![Some(init.clone())];
        index.insert(init, 0);
        let mut pi: Option<StateId> = None;
        let mut edges: Vec<(StateId, Action, StateId)> = Vec::new();
        let mut deadlocks = Vec::new();
        let mut queue = VecDeque::from([0usize]);

        while let Some(sid) = queue.pop_front() {
            let (gs, q) = states[sid].clone().expect("error state is never expanded");
            let mut outs: Vec<(usize, Outcome<M::State>)> = Vec::new();
            for x in 0..self.actors.len() {
                let Some(&m) = gs.locals[x].mailbox.first() else {
                    continue;
                };
                let (method, body) = &self.actors[x].methods[&m];
                let mut g = gs.clone();
                g.locals[x].mailbox.remove(0);
                let mut res = Vec::new();
                self.run(
                    mon,
                    x,
                    method,
                    g,
                    q.clone(),
                    vec![body.as_slice()],
                    Vec::new(),
                    &mut res,
                )?;
                outs.extend(res.into_iter().map(|o| (x, o)));
            }
            if outs.is_empty() {
                deadlocks.push(sid);
            }
            let mut succ: Vec<(String, Action, Outcome<M::State>)> = outs
                .into_iter()
                .map(|(x, o)| {
                    let a = match &o {
                        Outcome::Done(_, _, s) | Outcome::Error(s) => self.label(x, s),
                    };
                    (a.to_string(), a, o)
                })
                .collect();
            succ.sort_by(|a, b| a.0.cmp(&b.0));
            let mut seen: BTreeSet<(String, StateId)> = BTreeSet::new();
            for (text, a, o) in succ {
                let dst = match o {
                    Outcome::Error(_) => *pi.get_or_insert_with(|| {
                        states.push(None);
                        states.len() - 1
                    }),
                    Outcome::Done(g, q2, _) => {
                        let key = (g, q2);
                        match index.get(&key) {
                            Some(&d) => d,
                            None => {
                                let d = states.len();
                                index.insert(key.clone(), d);
                                states.push(Some(key));
                                queue.push_back(d);
                                d
                            }
                        }
                    }
                };
                if seen.insert((text, dst)) {
                    edges.push((sid, a, dst));
                }
            }
            if states.len() > cap {
                return Err(SemanticsError::StateCap {
                    cap,
                    frontier: queue.len(),
                });
            }
        }

        let mut lts = Lts::new(states.len(), 0);
        lts.set_pi(pi);
        for (s, a, d) in &edges {
            lts.add(*s, a, *d);
        }
        Ok(StateSpace {
            lts,
            states,
            deadlocks,
        })
    }

    pub fn explore(&self, cap: usize) -> Result<StateSpace<()>, SemanticsError> {
        self.explore_with(&NoMonitor, cap)
    }
}

fn compile_block(
    body: &[Stmt],
    owner: usize,
    vars: &HashMap<&str, usize>,
    actors: &HashMap<&str, usize>,
    intern: &mut impl FnMut(&str) -> u32,
) -> Vec<CStmt> {
    body.iter()
        .map(|s| match s {
            Stmt::Assign { var, expr } => {
                CStmt::Assign(vars[var.as_str()], compile_expr(expr, vars))
            }
            Stmt::NonDet { var, choices } => CStmt::NonDet(
                vars[var.as_str()],
                choices.iter().map(|e| compile_expr(e, vars)).collect(),
            ),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => CStmt::If(
                compile_expr(cond, vars),
                compile_block(then_branch, owner, vars, actors, intern),
                compile_block(else_branch, owner, vars, actors, intern),
            ),
            Stmt::Send(send) => {
                let y = match &send.target {
                    crate::aml::Target::SelfRef => owner,
                    crate::aml::Target::Actor(a) => actors[a.as_str()],
                };
                CStmt::Send(y, intern(&send.message))
            }
        })
        .collect()
}

fn compile_expr(e: &Expr, vars: &HashMap<&str, usize>) -> CExpr {
    match e {
        Expr::Int(i) => CExpr::Int(*i),
        Expr::Var(v) => CExpr::Var(vars[v.as_str()]),
        Expr::SelfRef => CExpr::SelfRef,
        Expr::Not(a) => CExpr::Not(Box::new(compile_expr(a, vars))),
        Expr::Binary(op, a, b) => CExpr::Binary(
            *op,
            Box::new(compile_expr(a, vars)),
            Box::new(compile_expr(b, vars)),
        ),
    }
}

/// Initial state of a well-formed model.
pub fn initial_state(model: &Model) -> Result<GlobalState, SemanticsError> {
    System::compile(model)?.initial_state()
}

/// Coarse-grained LTS of a well-formed model.
pub fn explore(model: &Model, cap: usize) -> Result<StateSpace<()>, SemanticsError> {
    System::compile(model)?.explore(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aml::parse_model;

    const CLIENT_SERVER: &str = "
actor client(10) {
  int l;
  reply { l = ?(0, 1); if (l == 0) { server!request; } else { server!delay; } }
}
actor server(10) {
  request { client!reply; }
  delay { self!request; }
}
main { client!reply; }
";

    #[test]
    fn initial_state_places_main_messages() {
        let m = parse_model(CLIENT_SERVER).unwrap();
        let sys = System::compile(&m).unwrap();
        let s0 = sys.initial_state().unwrap();
        assert_eq!(s0.locals[0].mailbox.len(), 1);
        assert_eq!(sys.message_name(s0.locals[0].mailbox[0]), "reply");
        assert!(s0.locals[1].mailbox.is_empty());
        assert_eq!(s0.locals[0].env, vec![Value::Int(0)]);

        let empty = parse_model("actor a(1){ m {} } main {}").unwrap();
        assert!(initial_state(&empty).unwrap().locals[0].mailbox.is_empty());
    }

    #[test]
    fn main_overflow_is_an_error() {
        let m = parse_model("actor a(0){ m {} } main { a!m; }").unwrap();
        assert!(matches!(
            initial_state(&m),
            Err(SemanticsError::MainOverflow { .. })
        ));
        let m = parse_model("actor a(1){ m {} } main { a!m; a!m; }").unwrap();
        assert!(matches!(
            initial_state(&m),
            Err(SemanticsError::MainOverflow { .. })
        ));
    }

    #[test]
    fn client_server_first_step() {
        let m = parse_model(CLIENT_SERVER).unwrap();
        let ss = explore(&m, 1000).unwrap();
        let from0: Vec<String> = ss
            .lts
            .transitions()
            .iter()
            .filter(|t| t.src == 0)
            .map(|t| ss.lts.label(t.label).to_string())
            .collect();
        assert_eq!(
            from0,
            vec![
                "(t_client,<Snd(delay)::server>)",
                "(t_client,<Snd(request)::server>)"
            ]
        );
    }

    #[test]
    fn self_send_loop() {
        let m = parse_model("actor a(1){ int x; go { self!go; } } main { a!go; }").unwrap();
        let ss = explore(&m, 10).unwrap();
        assert_eq!(ss.lts.num_states(), 1);
        assert_eq!(
            ss.lts.edge_list(),
            vec![(0, "(t_a,<Snd(go)::a>)".to_string(), 0)]
        );
    }

    #[test]
    fn full_mailbox_blocks_only_that_branch() {
        let src = "actor a(2){ int x; go { x = ?(0, 1); if (x == 0) { b!m; b!m; } else { b!m; } } }
                   actor b(1){ m {} } main { a!go; }";
        let ss = explore(&parse_model(src).unwrap(), 100).unwrap();
        let labels: Vec<String> = ss
            .lts
            .transitions()
            .iter()
            .filter(|t| t.src == 0)
            .map(|t| ss.lts.label(t.label).to_string())
            .collect();
        assert_eq!(labels, vec!["(t_a,<Snd(m)::b>)"]);
    }

    #[test]
    fn capacity_zero_drops_but_labels() {
        let src = "actor a(1){ go { d!m; d!m; } } actor d(0){ m {} } main { a!go; }";
        let ss = explore(&parse_model(src).unwrap(), 100).unwrap();
        assert_eq!(ss.lts.num_states(), 2);
        assert_eq!(ss.lts.edge_list()[0].1, "(t_a,<Snd(m)::d,Snd(m)::d>)");
        assert_eq!(ss.deadlocks, vec![1]);
    }

    #[test]
    fn state_cap_reports_frontier() {
        let src = "actor a(1){ int x; go { x = x + 1; self!go; } } main { a!go; }";
        let err = explore(&parse_model(src).unwrap(), 50).unwrap_err();
        assert!(matches!(err, SemanticsError::StateCap { cap: 50, .. }));
    }

    #[test]
    fn exploration_is_deterministic() {
        let m = parse_model(CLIENT_SERVER).unwrap();
        let a = explore(&m, 1000).unwrap().lts;
        let b = explore(&m, 1000).unwrap().lts;
        assert_eq!(crate::lts::to_aut_string(&a), crate::lts::to_aut_string(&b));
    }
}
