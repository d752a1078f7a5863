//! Seeded generator of small open systems with a compliant component.

use agcheck::aml::{ActorDef, BinOp, Expr, Method, Model, SendStmt, Stmt, Target};
use agcheck::infm::{InfoEntry, InfoSpec, Response};
use agcheck::property::{parse_perr, ErrDfa};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const COMPONENT: &str = "M";

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub open: Model,
    pub info: InfoSpec,
    pub component: ActorDef,
    pub perr_text: String,
    pub perr: ErrDfa,
}

impl Instance {
    pub fn closed(&self) -> Model {
        let mut m = self.open.clone();
        m.actors.push(self.component.clone());
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Knobs {
    /// Probability that a two-part response is split over a self-send.
    pub self_send: f64,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs { self_send: 0.25 }
    }
}

fn var(name: &str) -> Expr {
    Expr::Var(name.into())
}

fn coin_branch(then_branch: Vec<Stmt>, else_branch: Vec<Stmt>) -> Vec<Stmt> {
    vec![
        Stmt::NonDet {
            var: "x".into(),
            choices: vec![Expr::Int(0), Expr::Int(1)],
        },
        Stmt::If {
            cond: Expr::binary(BinOp::Eq, var("x"), Expr::Int(0)),
            then_branch,
            else_branch,
        },
    ]
}

/// Random instance for `seed`; `None` when the draw is degenerate.
pub fn instance(seed: u64, knobs: Knobs) -> Option<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_open = rng.gen_range(1..=3usize);
    let names: Vec<String> = (1..=n_open).map(|i| format!("o{i}")).collect();
    let caps: Vec<usize> = (0..n_open).map(|_| rng.gen_range(1..=2)).collect();
    let methods: Vec<Vec<String>> = names
        .iter()
        .map(|n| {
            let k = rng.gen_range(1..=3);
            (0..k).map(|j| format!("{n}m{j}")).collect()
        })
        .collect();
    let iface: Vec<String> = (0..rng.gen_range(1..=2usize))
        .map(|j| format!("i{j}"))
        .collect();

    let random_send = |rng: &mut ChaCha8Rng| -> SendStmt {
        if rng.gen_bool(0.4) {
            SendStmt::to(COMPONENT, iface.choose(rng).unwrap().clone())
        } else {
            let t = rng.gen_range(0..n_open);
            SendStmt::to(names[t].clone(), methods[t].choose(rng).unwrap().clone())
        }
    };

    let mut actors = Vec::new();
    for i in 0..n_open {
        let mut uses_x = false;
        let mut ms = Vec::new();
        for m in &methods[i] {
            let sends = |rng: &mut ChaCha8Rng| -> Vec<Stmt> {
                (0..rng.gen_range(0..=2))
                    .map(|_| Stmt::Send(random_send(rng)))
                    .collect()
            };
            let body = if rng.gen_bool(0.3) {
                uses_x = true;
                let (a, b) = (sends(&mut rng), sends(&mut rng));
                coin_branch(a, b)
            } else {
                sends(&mut rng)
            };
            ms.push(Method {
                name: m.clone(),
                body,
            });
        }
        actors.push(ActorDef {
            name: names[i].clone(),
            capacity: caps[i],
            vars: if uses_x { vec!["x".into()] } else { vec![] },
            methods: ms,
        });
    }
    let mut main = Vec::new();
    let mut queued = vec![0usize; n_open];
    for _ in 0..rng.gen_range(1..=2) {
        let t = rng.gen_range(0..n_open);
        if queued[t] < caps[t] {
            queued[t] += 1;
            main.push(SendStmt::to(
                names[t].clone(),
                methods[t].choose(&mut rng).unwrap().clone(),
            ));
        }
    }
    let open = Model { actors, main };
    let sent: Vec<String> = open.messages_sent_to(COMPONENT);
    if sent.is_empty() {
        return None;
    }

    // interface description: one or two expected responses per message
    let mut entries = Vec::new();
    for m in iface.iter().filter(|m| sent.contains(m)) {
        for _ in 0..rng.gen_range(1..=2) {
            let mut targets: Vec<usize> = (0..n_open).collect();
            targets.shuffle(&mut rng);
            let responses: Vec<Response> = targets
                .into_iter()
                .take(rng.gen_range(0..=2usize.min(n_open)))
                .map(|t| Response {
                    target: names[t].clone(),
                    messages: (0..rng.gen_range(1..=caps[t]))
                        .map(|_| methods[t].choose(&mut rng).unwrap().clone())
                        .collect(),
                })
                .collect();
            entries.push(InfoEntry {
                message: m.clone(),
                responses,
            });
        }
    }
    let info = InfoSpec {
        component: Some(COMPONENT.into()),
        entries,
    };

    // a compliant component answering with some interleaving of an entry
    let mut helpers: Vec<Method> = Vec::new();
    let mut respond = |rng: &mut ChaCha8Rng, e: &InfoEntry| -> Vec<Stmt> {
        // random merge that keeps each target's order
        let mut queues: Vec<std::collections::VecDeque<Stmt>> = e
            .responses
            .iter()
            .map(|r| {
                r.messages
                    .iter()
                    .map(|m| Stmt::Send(SendStmt::to(r.target.clone(), m.clone())))
                    .collect()
            })
            .collect();
        let mut sends = Vec::new();
        loop {
            let live: Vec<usize> = (0..queues.len())
                .filter(|&q| !queues[q].is_empty())
                .collect();
            let Some(&q) = live.choose(rng) else { break };
            sends.push(queues[q].pop_front().unwrap());
        }
        if sends.len() >= 2 && rng.gen_bool(knobs.self_send) {
            let cut = rng.gen_range(1..sends.len());
            let name = format!("h{}", helpers.len());
            helpers.push(Method {
                name: name.clone(),
                body: sends[cut..].to_vec(),
            });
            let mut head = sends[..cut].to_vec();
            head.push(Stmt::Send(SendStmt::new(Target::SelfRef, name)));
            head
        } else {
            sends
        }
    };
    let mut ms = Vec::new();
    let mut uses_s = false;
    for m in iface.iter().filter(|m| sent.contains(m)) {
        let es: Vec<&InfoEntry> = info.entries_for(m).collect();
        let body = if es.len() == 2 {
            uses_s = true;
            let mut a = respond(&mut rng, es[0]);
            a.push(Stmt::Assign {
                var: "s".into(),
                expr: Expr::Int(1),
            });
            let mut b = respond(&mut rng, es[1]);
            b.push(Stmt::Assign {
                var: "s".into(),
                expr: Expr::Int(0),
            });
            vec![Stmt::If {
                cond: Expr::binary(BinOp::Eq, var("s"), Expr::Int(0)),
                then_branch: a,
                else_branch: b,
            }]
        } else {
            respond(&mut rng, es[0])
        };
        ms.push(Method {
            name: m.clone(),
            body,
        });
    }
    ms.extend(helpers);
    let component = ActorDef {
        name: COMPONENT.into(),
        capacity: rng.gen_range(1..=2),
        vars: if uses_s { vec!["s".into()] } else { vec![] },
        methods: ms,
    };

    // error automaton over two observable sends; the component's sends to
    // itself are internal and never observed
    let mut observable: Vec<(String, String)> = Vec::new();
    for a in open.actors.iter().chain(std::iter::once(&component)) {
        for meth in &a.methods {
            agcheck::aml::visit_sends(&meth.body, &mut |s| {
                let p = (s.message.clone(), s.target.resolve(&a.name).to_string());
                let internal = a.name == COMPONENT && p.1 == COMPONENT;
                if !internal && !observable.contains(&p) {
                    observable.push(p);
                }
            });
        }
    }
    if observable.len() < 2 {
        return None;
    }
    observable.shuffle(&mut rng);
    // mostly let the first atom cross the component boundary
    let crossing = |(m, r): &(String, String)| {
        r == COMPONENT
            || component.methods.iter().any(|x| {
                let mut hit = false;
                agcheck::aml::visit_sends(&x.body, &mut |s| {
                    hit |= s.message == *m && s.target.resolve(COMPONENT) == r
                });
                hit
            })
    };
    if let Some(i) = observable.iter().position(crossing) {
        if rng.gen_bool(0.8) {
            observable.swap(0, i);
        }
    }
    let mut text = format!(
        "perr\nactions\nalpha = {} -> {}\nbeta = {} -> {}\nstates s0 s1 pi\ninit s0\n",
        observable[0].0, observable[0].1, observable[1].0, observable[1].1
    );
    let states = ["s0", "s1", "pi"];
    let mut edges: Vec<[&str; 2]> = (0..2)
        .map(|_| {
            [
                *states.choose(&mut rng).unwrap(),
                *states.choose(&mut rng).unwrap(),
            ]
        })
        .collect();
    if !edges.iter().flatten().any(|t| *t == "pi") {
        edges[1][rng.gen_range(0..2)] = "pi";
    }
    for (s, [a, b]) in ["s0", "s1"].into_iter().zip(edges) {
        text.push_str(&format!(
            "trans {s} : alpha -> {a}\ntrans {s} : beta -> {b}\ntrans {s} : !(alpha | beta) -> {s}\n"
        ));
    }
    text.push_str("end\n");
    let perr = parse_perr(&text).ok()?;
    Some(Instance {
        seed,
        open,
        info,
        component,
        perr_text: text,
        perr,
    })
}

/// Whether a send to `actor` can ever find its mailbox full. The model is
/// explored with the capacity raised by more than any single step can send;
/// if the occupancy never exceeds the real capacity there, the capacity is
/// never binding. `None` when the exploration fails.
pub fn capacity_binding(model: &Model, actor: &str, cap: usize) -> Option<bool> {
    let mut raised = model.clone();
    let a = raised.actors.iter_mut().find(|a| a.name == actor)?;
    let capacity = a.capacity;
    a.capacity += 4;
    let sys = agcheck::semantics::System::compile(&raised).ok()?;
    let i = (0..sys.num_actors()).find(|&i| sys.actor_name(i) == actor)?;
    let space = sys.explore(cap).ok()?;
    Some(
        space
            .states
            .iter()
            .flatten()
            .any(|(g, _)| g.locals[i].mailbox.len() > capacity),
    )
}
