//! Safety error automata over send actions and the property LTS.

use std::collections::HashMap;
use std::fmt;

use crate::aml::Model;
use crate::lts::SendAction;
use crate::semantics::{Monitor, SemanticsError, StateSpace, System};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    True,
    /// Index into the automaton's atom table.
    Atom(usize),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn holds(&self, a: &SendAction, atoms: &[(String, SendAction)]) -> bool {
        match self {
            Guard::True => true,
            Guard::Atom(i) => atoms[*i].1 == *a,
            Guard::Not(g) => !g.holds(a, atoms),
            Guard::And(x, y) => x.holds(a, atoms) && y.holds(a, atoms),
            Guard::Or(x, y) => x.holds(a, atoms) || y.holds(a, atoms),
        }
    }

    fn render(&self, atoms: &[(String, SendAction)], out: &mut String, prec: u8) {
        match self {
            Guard::True => out.push_str("true"),
            Guard::Atom(i) => out.push_str(&atoms[*i].0),
            Guard::Not(g) => {
                out.push('!');
                g.render(atoms, out, 3);
            }
            Guard::And(x, y) | Guard::Or(x, y) => {
                let (p, sym) = if matches!(self, Guard::And(..)) {
                    (2, " & ")
                } else {
                    (1, " | ")
                };
                if prec > p {
                    out.push('(');
                }
                x.render(atoms, out, p);
                out.push_str(sym);
                y.render(atoms, out, p);
                if prec > p {
                    out.push(')');
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerrError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("state `{state}` is nondeterministic on {action}: guards `{first}` and `{second}` both hold")]
    Nondeterministic {
        state: String,
        action: String,
        first: String,
        second: String,
    },
    #[error("state `{state}` has no edge for {action}")]
    Partial { state: String, action: String },
    #[error("the trap state has outgoing edges")]
    TrapHasEdges,
    #[error("{0}")]
    Invalid(String),
}

/// Deterministic, total monitor whose trap state `pi` accepts exactly the
/// bad prefixes of a safety property.
#[derive(Debug, Clone)]
pub struct ErrDfa {
    states: Vec<String>,
    initial: usize,
    pi: usize,
    atoms: Vec<(String, SendAction)>,
    edges: Vec<(usize, Guard, usize)>,
    // per state: successor for each atom action, and for any other action
    table: Vec<(HashMap<SendAction, usize>, usize)>,
}

impl ErrDfa {
    pub fn new(
        states: Vec<String>,
        initial: usize,
        pi: usize,
        atoms: Vec<(String, SendAction)>,
        edges: Vec<(usize, Guard, usize)>,
    ) -> Result<ErrDfa, PerrError> {
        let n = states.len();
        if initial >= n || pi >= n {
            return Err(PerrError::Invalid(
                "initial or trap state out of range".into(),
            ));
        }
        if initial == pi {
            return Err(PerrError::Invalid(
                "initial state cannot be the trap state".into(),
            ));
        }
        if edges.iter().any(|(s, _, d)| *s >= n || *d >= n) {
            return Err(PerrError::Invalid("edge state out of range".into()));
        }
        if edges.iter().any(|(s, _, _)| *s == pi) {
            return Err(PerrError::TrapHasEdges);
        }
        let mut dfa = ErrDfa {
            states,
            initial,
            pi,
            atoms,
            edges,
            table: Vec::new(),
        };
        // action classes: each distinct atom action, plus one matching no atom
        let mut classes: Vec<Option<SendAction>> = Vec::new();
        for (_, a) in &dfa.atoms {
            if !classes.contains(&Some(a.clone())) {
                classes.push(Some(a.clone()));
            }
        }
        classes.push(None);
        let other = SendAction::new("", "");
        for q in 0..n {
            let mut map = HashMap::new();
            let mut other_dst = pi;
            if q != pi {
                for class in &classes {
                    let a = class.as_ref().unwrap_or(&other);
                    let sat: Vec<&(usize, Guard, usize)> = dfa
                        .edges
                        .iter()
                        .filter(|(s, g, _)| *s == q && g.holds(a, &dfa.atoms))
                        .collect();
                    let describe = || match class {
                        Some(a) => a.to_string(),
                        None => "actions matching no atom".to_string(),
                    };
                    let Some(first) = sat.first() else {
                        return Err(PerrError::Partial {
                            state: dfa.states[q].clone(),
                            action: describe(),
                        });
                    };
                    if let Some(second) = sat.iter().find(|e| e.2 != first.2) {
                        return Err(PerrError::Nondeterministic {
                            state: dfa.states[q].clone(),
                            action: describe(),
                            first: dfa.guard_text(&first.1),
                            second: dfa.guard_text(&second.1),
                        });
                    }
                    match class {
                        Some(a) => {
                            map.insert(a.clone(), first.2);
                        }
                        None => other_dst = first.2,
                    }
                }
            }
            dfa.table.push((map, other_dst));
        }
        Ok(dfa)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn pi(&self) -> usize {
        self.pi
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn atoms(&self) -> &[(String, SendAction)] {
        &self.atoms
    }

    pub fn guard_text(&self, g: &Guard) -> String {
        let mut s = String::new();
        g.render(&self.atoms, &mut s, 0);
        s
    }

    /// Successor of `q` on `a`. Stepping from π stays in π.
    pub fn step(&self, q: usize, a: &SendAction) -> usize {
        let (map, other) = &self.table[q];
        map.get(a).copied().unwrap_or(*other)
    }

    /// Runs the automaton over a sequence of sends from the initial state.
    pub fn run<'a>(&self, sends: impl IntoIterator<Item = &'a SendAction>) -> usize {
        let mut q = self.initial;
        for a in sends {
            if q == self.pi {
                break;
            }
            q = self.step(q, a);
        }
        q
    }
}

impl fmt::Display for ErrDfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "perr")?;
        writeln!(f, "actions")?;
        for (n, a) in &self.atoms {
            writeln!(f, "{n} = {} -> {}", a.message, a.receiver)?;
        }
        let names: Vec<&str> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| if i == self.pi { "pi" } else { s.as_str() })
            .collect();
        writeln!(f, "states {}", names.join(" "))?;
        writeln!(f, "init {}", self.states[self.initial])?;
        for (s, g, d) in &self.edges {
            writeln!(
                f,
                "trans {} : {} -> {}",
                names[*s],
                self.guard_text(g),
                names[*d]
            )?;
        }
        writeln!(f, "end")
    }
}

pub fn dfa_step(d: &ErrDfa, q: usize, a: &SendAction) -> usize {
    d.step(q, a)
}

struct GuardParser<'a> {
    toks: Vec<String>,
    pos: usize,
    atoms: &'a [(String, SendAction)],
    line: usize,
}

impl GuardParser<'_> {
    fn err<T>(&self, m: impl Into<String>) -> Result<T, PerrError> {
        Err(PerrError::Syntax {
            line: self.line,
            message: m.into(),
        })
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|s| s.as_str())
    }

    fn or(&mut self) -> Result<Guard, PerrError> {
        let mut g = self.and()?;
        while matches!(self.peek(), Some("|") | Some("||")) {
            self.pos += 1;
            g = Guard::Or(Box::new(g), Box::new(self.and()?));
        }
        Ok(g)
    }

    fn and(&mut self) -> Result<Guard, PerrError> {
        let mut g = self.not()?;
        while matches!(self.peek(), Some("&") | Some("&&")) {
            self.pos += 1;
            g = Guard::And(Box::new(g), Box::new(self.not()?));
        }
        Ok(g)
    }

    fn not(&mut self) -> Result<Guard, PerrError> {
        match self.peek() {
            Some("!") => {
                self.pos += 1;
                Ok(Guard::Not(Box::new(self.not()?)))
            }
            Some("(") => {
                self.pos += 1;
                let g = self.or()?;
                if self.peek() != Some(")") {
                    return self.err("expected `)` in guard");
                }
                self.pos += 1;
                Ok(g)
            }
            Some("true") => {
                self.pos += 1;
                Ok(Guard::True)
            }
            Some(name) => match self.atoms.iter().position(|(n, _)| n == name) {
                Some(i) => {
                    self.pos += 1;
                    Ok(Guard::Atom(i))
                }
                None => self.err(format!("unknown atom `{name}`")),
            },
            None => self.err("unexpected end of guard"),
        }
    }
}

fn guard_tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() || c == '_' {
            let st = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(chars[st..i].iter().collect());
        } else if (c == '&' || c == '|') && chars.get(i + 1) == Some(&c) {
            out.push(format!("{c}{c}"));
            i += 2;
        } else {
            out.push(c.to_string());
            i += 1;
        }
    }
    out
}

pub fn parse_guard(
    text: &str,
    atoms: &[(String, SendAction)],
    line: usize,
) -> Result<Guard, PerrError> {
    let mut p = GuardParser {
        toks: guard_tokens(text),
        pos: 0,
        atoms,
        line,
    };
    let g = p.or()?;
    if p.pos != p.toks.len() {
        return p.err(format!("trailing `{}` in guard", p.toks[p.pos]));
    }
    Ok(g)
}

/// Parses the `.perr` text format and validates determinism and totality.
pub fn parse_perr(text: &str) -> Result<ErrDfa, PerrError> {
    let syntax = |line: usize, m: &str| PerrError::Syntax {
        line,
        message: m.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split("//").next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "perr")) => {}
        Some((n, _)) => return Err(syntax(n, "expected `perr` header")),
        None => return Err(syntax(1, "empty input")),
    }
    let mut atoms: Vec<(String, SendAction)> = Vec::new();
    let mut states: Vec<String> = Vec::new();
    let mut init: Option<String> = None;
    let mut raw_edges: Vec<(usize, String, String, String)> = Vec::new();
    let mut in_actions = false;
    let mut ended = false;
    for (n, line) in lines {
        if ended {
            return Err(syntax(n, "content after `end`"));
        }
        let (head, rest) = line
            .split_once(char::is_whitespace)
            .map_or((line, ""), |(h, r)| (h, r.trim()));
        match head {
            "actions" if rest.is_empty() => in_actions = true,
            "states" => {
                in_actions = false;
                states = rest.split_whitespace().map(String::from).collect();
            }
            "init" => {
                in_actions = false;
                init = Some(rest.to_string());
            }
            "trans" => {
                in_actions = false;
                let (q, tail) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(n, "expected `trans q : guard -> q'`"))?;
                let (g, d) = tail
                    .rsplit_once("->")
                    .ok_or_else(|| syntax(n, "expected `->` in transition"))?;
                raw_edges.push((
                    n,
                    q.trim().to_string(),
                    g.trim().to_string(),
                    d.trim().to_string(),
                ));
            }
            "end" if rest.is_empty() => ended = true,
            _ if in_actions => {
                let (name, act) = line
                    .split_once('=')
                    .ok_or_else(|| syntax(n, "expected `name = msg -> actor`"))?;
                let (m, y) = act
                    .split_once("->")
                    .ok_or_else(|| syntax(n, "expected `msg -> actor`"))?;
                let (name, m, y) = (name.trim(), m.trim(), y.trim());
                if [name, m, y]
                    .iter()
                    .any(|s| s.is_empty() || s.contains(char::is_whitespace))
                {
                    return Err(syntax(n, "malformed action declaration"));
                }
                if name == "true" || atoms.iter().any(|(a, _)| a == name) {
                    return Err(syntax(
                        n,
                        &format!("atom `{name}` declared twice or reserved"),
                    ));
                }
                atoms.push((name.to_string(), SendAction::new(m, y)));
            }
            _ => return Err(syntax(n, &format!("unexpected `{head}`"))),
        }
    }
    if !ended {
        return Err(syntax(text.lines().count(), "missing `end`"));
    }
    let pi = states
        .iter()
        .position(|s| s == "pi")
        .ok_or_else(|| syntax(1, "states must include `pi`"))?;
    let idx = |name: &str, line: usize| {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| syntax(line, &format!("unknown state `{name}`")))
    };
    let initial = idx(
        init.as_deref().ok_or_else(|| syntax(1, "missing `init`"))?,
        1,
    )?;
    let mut edges = Vec::new();
    for (n, q, g, d) in raw_edges {
        edges.push((idx(&q, n)?, parse_guard(&g, &atoms, n)?, idx(&d, n)?));
    }
    ErrDfa::new(states, initial, pi, atoms, edges)
}

impl Monitor for ErrDfa {
    type State = usize;

    fn initial(&self) -> usize {
        self.initial
    }

    fn step(&self, q: &usize, a: &SendAction) -> Option<usize> {
        let next = ErrDfa::step(self, *q, a);
        (next != self.pi).then_some(next)
    }
}

/// The property LTS: product of the model's coarse semantics with the
/// automaton, with every error step leading to one merged π state.
pub fn compose_property_lts(
    m: &Model,
    d: &ErrDfa,
    cap: usize,
) -> Result<StateSpace<usize>, SemanticsError> {
    System::compile(m)?.explore_with(d, cap)
}
