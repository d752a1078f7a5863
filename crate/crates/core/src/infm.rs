//! Interface descriptions of the missing component and the synthesized
//! over-approximating interface actor.

use std::collections::BTreeSet;
use std::fmt;

use crate::aml::{ActorDef, BinOp, Expr, Method, Model, SendStmt, Stmt, Target};
use crate::lts::SendAction;

/// One expected response: the message sequence `messages` sent to `target`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Response {
    pub messages: Vec<String>,
    pub target: String,
}

impl Response {
    pub fn new(target: &str, messages: &[&str]) -> Response {
        Response {
            messages: messages.iter().map(|m| m.to_string()).collect(),
            target: target.to_string(),
        }
    }
}

/// A pair `(m, I)`: on receiving `message`, the component answers with
/// every response in `responses`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoEntry {
    pub message: String,
    pub responses: Vec<Response>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InfoSpec {
    /// Name of the missing component, when the file states it.
    pub component: Option<String>,
    pub entries: Vec<InfoEntry>,
}

impl InfoSpec {
    /// Distinct messages, in order of first appearance.
    pub fn messages(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.message) {
                out.push(e.message.clone());
            }
        }
        out
    }

    pub fn entries_for<'a>(&'a self, m: &'a str) -> impl Iterator<Item = &'a InfoEntry> + 'a {
        self.entries.iter().filter(move |e| e.message == m)
    }

    /// Every `Snd(m)::o` occurring in some response.
    pub fn response_sends(&self) -> Vec<SendAction> {
        let set: BTreeSet<SendAction> = self
            .entries
            .iter()
            .flat_map(|e| &e.responses)
            .flat_map(|r| {
                r.messages
                    .iter()
                    .map(|m| SendAction::new(m.as_str(), r.target.as_str()))
            })
            .collect();
        set.into_iter().collect()
    }
}

impl fmt::Display for InfoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.component {
            Some(c) => writeln!(f, "info {c}")?,
            None => writeln!(f, "info")?,
        }
        for e in &self.entries {
            let rs: Vec<String> = e
                .responses
                .iter()
                .map(|r| format!("{}: [{}]", r.target, r.messages.join(", ")))
                .collect();
            if rs.is_empty() {
                writeln!(f, "{} ->", e.message)?;
            } else {
                writeln!(f, "{} -> {}", e.message, rs.join(", "))?;
            }
        }
        writeln!(f, "end")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InfoError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown actor `{actor}`")]
    UnknownActor { line: usize, actor: String },
    #[error("line {line}: response of length {len} exceeds the capacity {capacity} of `{actor}`")]
    TooLong {
        line: usize,
        actor: String,
        len: usize,
        capacity: usize,
    },
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    c.next()
        .is_some_and(|x| x.is_ascii_alphabetic() || x == '_')
        && c.all(|x| x.is_ascii_alphanumeric() || x == '_')
}

fn parse_responses(text: &str, line: usize) -> Result<Vec<Response>, InfoError> {
    let err = |m: &str| InfoError::Syntax {
        line,
        message: m.to_string(),
    };
    let mut out: Vec<Response> = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let (target, after) = rest
            .split_once(':')
            .ok_or_else(|| err("expected `actor: [...]`"))?;
        let target = target.trim();
        if !is_ident(target) {
            return Err(err("expected an actor name"));
        }
        let after = after
            .trim_start()
            .strip_prefix('[')
            .ok_or_else(|| err("expected `[`"))?;
        let (list, tail) = after.split_once(']').ok_or_else(|| err("expected `]`"))?;
        let messages: Vec<String> = if list.trim().is_empty() {
            Vec::new()
        } else {
            list.split(',').map(|m| m.trim().to_string()).collect()
        };
        if messages.iter().any(|m| !is_ident(m)) {
            return Err(err("malformed message list"));
        }
        let r = Response {
            messages,
            target: target.to_string(),
        };
        if !out.contains(&r) {
            out.push(r);
        }
        rest = tail.trim_start();
        if let Some(t) = rest.strip_prefix(',') {
            rest = t.trim_start();
            if rest.is_empty() {
                return Err(err("trailing `,`"));
            }
        } else if !rest.is_empty() {
            return Err(err("expected `,` between responses"));
        }
    }
    Ok(out)
}

/// Parsed Info together with non-fatal warnings.
#[derive(Debug, Clone)]
pub struct ParsedInfo {
    pub info: InfoSpec,
    pub warnings: Vec<String>,
}

/// Parses the `.info` format and validates it against the open system.
pub fn parse_info(text: &str, open: &Model) -> Result<ParsedInfo, InfoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split("//").next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut info = InfoSpec::default();
    match lines.next() {
        Some((_, "info")) => {}
        Some((n, h)) if h.starts_with("info ") => {
            let c = h["info ".len()..].trim();
            if !is_ident(c) {
                return Err(InfoError::Syntax {
                    line: n,
                    message: "malformed component name".into(),
                });
            }
            info.component = Some(c.to_string());
        }
        Some((n, _)) => {
            return Err(InfoError::Syntax {
                line: n,
                message: "expected `info` header".into(),
            })
        }
        None => {
            return Err(InfoError::Syntax {
                line: 1,
                message: "empty input".into(),
            })
        }
    }
    let mut ended = false;
    let mut lines_of: Vec<usize> = Vec::new();
    for (n, line) in lines {
        if ended {
            return Err(InfoError::Syntax {
                line: n,
                message: "content after `end`".into(),
            });
        }
        if line == "end" {
            ended = true;
            continue;
        }
        let (m, rest) = line.split_once("->").ok_or_else(|| InfoError::Syntax {
            line: n,
            message: "expected `msg -> ...`".into(),
        })?;
        let m = m.trim();
        if !is_ident(m) {
            return Err(InfoError::Syntax {
                line: n,
                message: "expected a message name".into(),
            });
        }
        let responses = parse_responses(rest, n)?;
        for r in &responses {
            let Some(a) = open.actor(&r.target) else {
                return Err(InfoError::UnknownActor {
                    line: n,
                    actor: r.target.clone(),
                });
            };
            if r.messages.len() > a.capacity {
                return Err(InfoError::TooLong {
                    line: n,
                    actor: a.name.clone(),
                    len: r.messages.len(),
                    capacity: a.capacity,
                });
            }
        }
        info.entries.push(InfoEntry {
            message: m.to_string(),
            responses,
        });
        lines_of.push(n);
    }
    if !ended {
        return Err(InfoError::Syntax {
            line: text.lines().count(),
            message: "missing `end`".into(),
        });
    }

    let mut warnings = Vec::new();
    let component = info
        .component
        .clone()
        .or_else(|| match open.external_targets().as_slice() {
            [one] => Some(one.clone()),
            _ => None,
        });
    if let Some(c) = &component {
        let sent = open.messages_sent_to(c);
        for (e, n) in info.entries.iter().zip(&lines_of) {
            if !sent.contains(&e.message) {
                warnings.push(format!(
                    "line {n}: the open system never sends `{}` to `{c}`",
                    e.message
                ));
            }
        }
    }
    Ok(ParsedInfo { info, warnings })
}

/// `o!r` as a statement sequence.
fn sends_of(r: &Response) -> Vec<SendStmt> {
    r.messages
        .iter()
        .map(|m| SendStmt::to(r.target.as_str(), m.as_str()))
        .collect()
}

/// All interleavings of two sequences preserving the order within each.
pub fn hshuffle(a: &[SendStmt], b: &[SendStmt]) -> Vec<Vec<SendStmt>> {
    if a.is_empty() {
        return vec![b.to_vec()];
    }
    if b.is_empty() {
        return vec![a.to_vec()];
    }
    let mut out = Vec::new();
    for mut rest in hshuffle(&a[1..], b) {
        rest.insert(0, a[0].clone());
        out.push(rest);
    }
    for mut rest in hshuffle(a, &b[1..]) {
        rest.insert(0, b[0].clone());
        out.push(rest);
    }
    dedup(out)
}

/// Inserts `s` into every sequence of `set`.
pub fn xshuffle(s: &[SendStmt], set: &[Vec<SendStmt>]) -> Vec<Vec<SendStmt>> {
    if set.is_empty() {
        return vec![s.to_vec()];
    }
    dedup(set.iter().flat_map(|t| hshuffle(s, t)).collect())
}

/// Interleavings of all responses of `I`, per-target order preserved.
pub fn shuffle(i: &[Response]) -> Vec<Vec<SendStmt>> {
    match i.split_first() {
        None => Vec::new(),
        Some((first, rest)) => xshuffle(&sends_of(first), &shuffle(rest)),
    }
}

fn dedup(v: Vec<Vec<SendStmt>>) -> Vec<Vec<SendStmt>> {
    let mut out: Vec<Vec<SendStmt>> = Vec::with_capacity(v.len());
    for x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Default mailbox bound standing in for an unbounded mailbox: the total
/// capacity of the open system plus the messages of its main block.
pub fn default_infm_capacity(open: &Model) -> usize {
    open.actors.iter().map(|a| a.capacity).sum::<usize>() + open.main.len()
}

pub fn chain_method_name(m: &str, j: usize, i: usize, g: usize) -> String {
    format!("{m}__{j}_{i}_{g}")
}

/// Whether `name` is a chain method generated by [`synthesize_infm`].
pub fn is_chain_method(name: &str) -> bool {
    name.rsplit_once("__").is_some_and(|(base, idx)| {
        !base.is_empty()
            && idx.split('_').count() == 3
            && idx.split('_').all(|p| p.parse::<usize>().is_ok())
    })
}

fn guarded(l: i64, body: Vec<Stmt>, otherwise: Vec<Stmt>) -> Stmt {
    Stmt::If {
        cond: Expr::binary(BinOp::Eq, Expr::Var("l".into()), Expr::Int(l)),
        then_branch: body,
        else_branch: otherwise,
    }
}

fn choose(k: usize) -> Stmt {
    Stmt::NonDet {
        var: "l".into(),
        choices: (1..=k as i64).map(Expr::Int).collect(),
    }
}

/// Builds the interface actor named `name` from `info`.
pub fn synthesize_infm(info: &InfoSpec, name: &str, capacity: usize) -> ActorDef {
    let mut methods: Vec<Method> = Vec::new();
    let mut chains: Vec<Method> = Vec::new();
    for m in info.messages() {
        let entries: Vec<&InfoEntry> = info.entries_for(&m).collect();
        let mut per_entry: Vec<Vec<Stmt>> = Vec::new();
        for (j, e) in entries.iter().enumerate() {
            let shuffles = shuffle(&e.responses);
            let mut dispatch: Vec<Vec<Stmt>> = Vec::new();
            for (i, sigma) in shuffles.iter().enumerate() {
                let body = match sigma.len() {
                    0 => Vec::new(),
                    1 => vec![Stmt::Send(sigma[0].clone())],
                    len => {
                        for g in 1..=len {
                            let mut b = vec![Stmt::Send(sigma[g - 1].clone())];
                            if g < len {
                                b.push(Stmt::Send(SendStmt::new(
                                    Target::SelfRef,
                                    chain_method_name(&m, j + 1, i + 1, g + 1),
                                )));
                            }
                            chains.push(Method {
                                name: chain_method_name(&m, j + 1, i + 1, g),
                                body: b,
                            });
                        }
                        vec![Stmt::Send(SendStmt::new(
                            Target::SelfRef,
                            chain_method_name(&m, j + 1, i + 1, 1),
                        ))]
                    }
                };
                dispatch.push(body);
            }
            let inner = match dispatch.len() {
                0 => Vec::new(),
                1 => dispatch.pop().unwrap(),
                k => {
                    let mut v = vec![choose(k)];
                    v.extend(
                        dispatch
                            .into_iter()
                            .enumerate()
                            .map(|(i, b)| guarded(i as i64 + 1, b, Vec::new())),
                    );
                    v
                }
            };
            per_entry.push(inner);
        }
        let body = if per_entry.len() == 1 {
            per_entry.pop().unwrap()
        } else {
            // The entry branches form an else-if chain: each entry body
            // reassigns `l`, so a later `if (l == j)` must not see it.
            let n = per_entry.len();
            let mut chain: Vec<Stmt> = Vec::new();
            for (j, b) in per_entry.into_iter().enumerate().rev() {
                chain = vec![guarded(j as i64 + 1, b, chain)];
            }
            let mut v = vec![choose(n)];
            v.extend(chain);
            v
        };
        methods.push(Method { name: m, body });
    }
    methods.extend(chains);
    ActorDef {
        name: name.to_string(),
        capacity,
        vars: vec!["l".into()],
        methods,
    }
}
