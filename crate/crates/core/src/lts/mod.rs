//! Labeled transition systems and the operations of the assumption pipeline.

mod aut;
mod inclusion;
mod ops;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

pub use aut::{
    from_aut_str, read_aut, to_aut_string, to_dot_string, write_aut, write_dot, AutError,
};
pub use inclusion::{trace_included, Inclusion, InclusionError};
pub use ops::{
    backward_propagate_pi, determinize_complete, flatten_sequences, reconfigure_psi,
    reduce_weak_trace, remove_pi, rename, PiVerdict, PsiError,
};

pub type StateId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelId(pub u32);

pub const TAU: LabelId = LabelId(0);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SendAction {
    pub message: String,
    pub receiver: String,
}

impl SendAction {
    pub fn new(message: impl Into<String>, receiver: impl Into<String>) -> Self {
        SendAction {
            message: message.into(),
            receiver: receiver.into(),
        }
    }
}

impl fmt::Display for SendAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Snd({})::{}", self.message, self.receiver)
    }
}

/// Transition label. Every variant prints without spaces or quotes so it
/// can be embedded in `.aut` files verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Tau,
    /// Coarse step `(t_x, <sends>)`: `taker` took a message and sent `sends`.
    Take {
        taker: String,
        sends: Vec<SendAction>,
    },
    Rcv(String),
    Snd(SendAction),
    /// Two or more sends performed in one step.
    Seq(Vec<SendAction>),
    Name(String),
}

impl Action {
    /// Label for a send sequence: empty is τ, a single send is `Snd`.
    pub fn from_sends(mut sends: Vec<SendAction>) -> Action {
        match sends.len() {
            0 => Action::Tau,
            1 => Action::Snd(sends.pop().unwrap()),
            _ => Action::Seq(sends),
        }
    }

    pub fn take(taker: impl Into<String>, sends: Vec<SendAction>) -> Action {
        Action::Take {
            taker: taker.into(),
            sends,
        }
    }

    pub fn snd(message: &str, receiver: &str) -> Action {
        Action::Snd(SendAction::new(message, receiver))
    }

    pub fn rcv(message: &str) -> Action {
        Action::Rcv(message.to_string())
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }
}

fn write_sends(f: &mut fmt::Formatter<'_>, sends: &[SendAction]) -> fmt::Result {
    f.write_str("<")?;
    for (i, s) in sends.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{s}")?;
    }
    f.write_str(">")
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Tau => f.write_str("tau"),
            Action::Take { taker, sends } => {
                write!(f, "(t_{taker},")?;
                write_sends(f, sends)?;
                f.write_str(")")
            }
            Action::Rcv(m) => write!(f, "Rcv({m})"),
            Action::Snd(s) => write!(f, "{s}"),
            Action::Seq(s) => write_sends(f, s),
            Action::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed label `{0}`")]
pub struct LabelError(pub String);

fn is_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-')
}

fn parse_send(s: &str) -> Option<SendAction> {
    let rest = s.strip_prefix("Snd(")?;
    let (msg, recv) = rest.split_once(")::")?;
    (is_name(msg) && is_name(recv)).then(|| SendAction::new(msg, recv))
}

fn parse_sends(s: &str) -> Option<Vec<SendAction>> {
    let inner = s.strip_prefix('<')?.strip_suffix('>')?;
    if inner.is_empty() {
        return Some(Vec::new());
    }
    inner.split(',').map(parse_send).collect()
}

impl FromStr for Action {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LabelError(s.to_string());
        if s == "tau" {
            return Ok(Action::Tau);
        }
        if let Some(rest) = s.strip_prefix("(t_") {
            let body = rest.strip_suffix(')').ok_or_else(bad)?;
            let (taker, sends) = body.split_once(',').ok_or_else(bad)?;
            let sends = parse_sends(sends).ok_or_else(bad)?;
            if !is_name(taker) {
                return Err(bad());
            }
            return Ok(Action::take(taker, sends));
        }
        if let Some(rest) = s.strip_prefix("Rcv(") {
            let m = rest
                .strip_suffix(')')
                .filter(|m| is_name(m))
                .ok_or_else(bad)?;
            return Ok(Action::rcv(m));
        }
        if s.starts_with("Snd(") {
            return parse_send(s).map(Action::Snd).ok_or_else(bad);
        }
        if s.starts_with('<') {
            let sends = parse_sends(s).ok_or_else(bad)?;
            if sends.len() < 2 {
                return Err(bad());
            }
            return Ok(Action::Seq(sends));
        }
        if is_name(s) {
            return Ok(Action::Name(s.to_string()));
        }
        Err(bad())
    }
}

/// A finite sequence of visible labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Trace(pub Vec<Action>);

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub src: StateId,
    pub label: LabelId,
    pub dst: StateId,
}

/// Labeled transition system with interned labels. Label 0 is always τ.
#[derive(Debug, Clone)]
pub struct Lts {
    initial: StateId,
    num_states: usize,
    labels: Vec<Action>,
    index: HashMap<Action, LabelId>,
    transitions: Vec<Transition>,
    pi: Option<StateId>,
    theta: Option<StateId>,
    alphabet: Option<Vec<Action>>,
}

impl Lts {
    pub fn new(num_states: usize, initial: StateId) -> Lts {
        assert!(initial < num_states.max(1), "initial state out of range");
        let mut index = HashMap::new();
        index.insert(Action::Tau, TAU);
        Lts {
            initial,
            num_states: num_states.max(1),
            labels: vec![Action::Tau],
            index,
            transitions: Vec::new(),
            pi: None,
            theta: None,
            alphabet: None,
        }
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn pi(&self) -> Option<StateId> {
        self.pi
    }

    pub fn theta(&self) -> Option<StateId> {
        self.theta
    }

    pub fn set_pi(&mut self, s: Option<StateId>) {
        self.pi = s;
    }

    pub fn set_theta(&mut self, s: Option<StateId>) {
        self.theta = s;
    }

    pub fn set_initial(&mut self, s: StateId) {
        assert!(s < self.num_states);
        self.initial = s;
    }

    pub fn add_state(&mut self) -> StateId {
        self.num_states += 1;
        self.num_states - 1
    }

    pub fn intern(&mut self, a: &Action) -> LabelId {
        if let Some(id) = self.index.get(a) {
            return *id;
        }
        let id = LabelId(self.labels.len() as u32);
        self.labels.push(a.clone());
        self.index.insert(a.clone(), id);
        id
    }

    pub fn label(&self, id: LabelId) -> &Action {
        &self.labels[id.0 as usize]
    }

    pub fn label_id(&self, a: &Action) -> Option<LabelId> {
        self.index.get(a).copied()
    }

    pub fn add(&mut self, src: StateId, a: &Action, dst: StateId) {
        let label = self.intern(a);
        self.add_id(src, label, dst);
    }

    pub fn add_id(&mut self, src: StateId, label: LabelId, dst: StateId) {
        assert!(
            src < self.num_states && dst < self.num_states,
            "state out of range"
        );
        self.transitions.push(Transition { src, label, dst });
    }

    /// Declared alphabet, if any; otherwise the visible labels in use.
    pub fn alphabet(&self) -> Vec<Action> {
        match &self.alphabet {
            Some(a) => a.clone(),
            None => self.visible_labels(),
        }
    }

    pub fn declared_alphabet(&self) -> Option<&[Action]> {
        self.alphabet.as_deref()
    }

    pub fn set_alphabet(&mut self, alphabet: Option<Vec<Action>>) {
        self.alphabet = alphabet.map(sort_by_text);
    }

    /// Non-τ labels occurring on transitions, sorted by text.
    pub fn visible_labels(&self) -> Vec<Action> {
        let used: BTreeSet<LabelId> = self
            .transitions
            .iter()
            .map(|t| t.label)
            .filter(|l| *l != TAU)
            .collect();
        sort_by_text(used.into_iter().map(|l| self.label(l).clone()).collect())
    }

    /// Outgoing edges per state, in stored order.
    pub fn successors(&self) -> Vec<Vec<(LabelId, StateId)>> {
        let mut out = vec![Vec::new(); self.num_states];
        for t in &self.transitions {
            out[t.src].push((t.label, t.dst));
        }
        out
    }

    pub fn predecessors(&self) -> Vec<Vec<(LabelId, StateId)>> {
        let mut out = vec![Vec::new(); self.num_states];
        for t in &self.transitions {
            out[t.dst].push((t.label, t.src));
        }
        out
    }

    /// Text of every interned label, indexed by label id.
    pub fn label_texts(&self) -> Vec<String> {
        self.labels.iter().map(|a| a.to_string()).collect()
    }

    pub fn is_deterministic(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.transitions
            .iter()
            .all(|t| t.label != TAU && seen.insert((t.src, t.label)))
    }

    /// Renumbers states in breadth-first order from the initial state,
    /// visiting successors by label text, and drops unreachable states.
    /// Transitions are sorted by (source, label text, target) and deduplicated.
    pub fn canonical(&self) -> Lts {
        let texts = self.label_texts();
        let mut succ = self.successors();
        for edges in &mut succ {
            edges.sort_by(|a, b| {
                texts[a.0 .0 as usize]
                    .cmp(&texts[b.0 .0 as usize])
                    .then(a.1.cmp(&b.1))
            });
        }
        let mut map = vec![usize::MAX; self.num_states];
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        map[self.initial] = 0;
        order.push(self.initial);
        queue.push_back(self.initial);
        while let Some(s) = queue.pop_front() {
            for &(_, d) in &succ[s] {
                if map[d] == usize::MAX {
                    map[d] = order.len();
                    order.push(d);
                    queue.push_back(d);
                }
            }
        }
        let mut out = Lts::new(order.len(), 0);
        out.alphabet = self.alphabet.clone();
        out.pi = self.pi.map(|p| map[p]).filter(|p| *p != usize::MAX);
        out.theta = self.theta.map(|p| map[p]).filter(|p| *p != usize::MAX);
        for &s in &order {
            let mut last = None;
            for &(l, d) in &succ[s] {
                if last == Some((l, d)) {
                    continue;
                }
                last = Some((l, d));
                let label = self.label(l).clone();
                out.add(map[s], &label, map[d]);
            }
        }
        out
    }

    /// Transitions as `(src, label text, dst)`, sorted.
    pub fn edge_list(&self) -> Vec<(StateId, String, StateId)> {
        let texts = self.label_texts();
        let mut v: Vec<_> = self
            .transitions
            .iter()
            .map(|t| (t.src, texts[t.label.0 as usize].clone(), t.dst))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Whether `self` and `other` are isomorphic, assuming both are
    /// deterministic and fully reachable.
    pub fn isomorphic_det(&self, other: &Lts) -> bool {
        if self.num_states != other.num_states || self.edge_list().len() != other.edge_list().len()
        {
            return false;
        }
        let (a, b) = (self.successors(), other.successors());
        let mut map = vec![usize::MAX; self.num_states];
        let mut back = vec![usize::MAX; other.num_states];
        let mut stack = vec![(self.initial, other.initial)];
        map[self.initial] = other.initial;
        back[other.initial] = self.initial;
        while let Some((s, t)) = stack.pop() {
            if a[s].len() != b[t].len() {
                return false;
            }
            for &(l, d) in &a[s] {
                let la = self.label(l);
                let Some(&(_, e)) = b[t].iter().find(|(m, _)| other.label(*m) == la) else {
                    return false;
                };
                match (map[d], back[e]) {
                    (usize::MAX, usize::MAX) => {
                        map[d] = e;
                        back[e] = d;
                        stack.push((d, e));
                    }
                    (x, y) if x == e && y == d => {}
                    _ => return false,
                }
            }
        }
        let marker = |m: Option<StateId>, n: Option<StateId>| match (m, n) {
            (Some(p), Some(q)) => map[p] == q,
            (None, None) => true,
            _ => false,
        };
        marker(self.pi, other.pi) && marker(self.theta, other.theta)
    }
}

impl PartialEq for Lts {
    fn eq(&self, other: &Lts) -> bool {
        self.initial == other.initial
            && self.num_states == other.num_states
            && self.pi == other.pi
            && self.theta == other.theta
            && self.alphabet == other.alphabet
            && self.edge_list() == other.edge_list()
    }
}

pub(crate) fn sort_by_text(mut v: Vec<Action>) -> Vec<Action> {
    v.sort_by_cached_key(|a| a.to_string());
    v.dedup();
    v
}
