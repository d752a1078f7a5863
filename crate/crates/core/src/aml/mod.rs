//! The actor modeling language: syntax tree, parser, well-formedness and
//! expression evaluation.

mod lexer;
mod parser;
mod pretty;
mod wellformed;

use std::collections::BTreeMap;
use std::fmt;

pub use parser::{parse_model, ParseError};
pub use wellformed::{check_wellformed, check_wellformed_open, Clause, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Gt,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Gt => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn apply(self, a: &Value, b: &Value) -> Result<Value, EvalError> {
        let v = match self {
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::And => (a.truthy() && b.truthy()) as i64,
            BinOp::Or => (a.truthy() || b.truthy()) as i64,
            _ => {
                let (x, y) = (a.as_int(self)?, b.as_int(self)?);
                match self {
                    BinOp::Add => x.wrapping_add(y),
                    BinOp::Sub => x.wrapping_sub(y),
                    BinOp::Mul => x.wrapping_mul(y),
                    BinOp::Lt => (x < y) as i64,
                    BinOp::Gt => (x > y) as i64,
                    _ => unreachable!(),
                }
            }
        };
        Ok(Value::Int(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Var(String),
    SelfRef,
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Names of all variables read by the expression.
    pub fn variables(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => out.push(v.clone()),
            Expr::Not(e) => e.variables(out),
            Expr::Binary(_, a, b) => {
                a.variables(out);
                b.variables(out);
            }
            Expr::Int(_) | Expr::SelfRef => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    SelfRef,
    Actor(String),
}

impl Target {
    /// The receiving actor's name, with `self` resolved to `owner`.
    pub fn resolve<'a>(&'a self, owner: &'a str) -> &'a str {
        match self {
            Target::SelfRef => owner,
            Target::Actor(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SendStmt {
    pub target: Target,
    pub message: String,
}

impl SendStmt {
    pub fn new(target: Target, message: impl Into<String>) -> Self {
        SendStmt {
            target,
            message: message.into(),
        }
    }

    pub fn to(actor: impl Into<String>, message: impl Into<String>) -> Self {
        SendStmt::new(Target::Actor(actor.into()), message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign {
        var: String,
        expr: Expr,
    },
    /// `x = ?(e1, ..., en)`; a single choice behaves as a plain assignment.
    NonDet {
        var: String,
        choices: Vec<Expr>,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    Send(SendStmt),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Method {
    pub name: String,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActorDef {
    pub name: String,
    pub capacity: usize,
    pub vars: Vec<String>,
    pub methods: Vec<Method>,
}

impl ActorDef {
    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn method_names(&self) -> impl Iterator<Item = &str> {
        self.methods.iter().map(|m| m.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Model {
    pub actors: Vec<ActorDef>,
    pub main: Vec<SendStmt>,
}

impl Model {
    pub fn actor(&self, name: &str) -> Option<&ActorDef> {
        self.actors.iter().find(|a| a.name == name)
    }

    pub fn actor_names(&self) -> Vec<String> {
        self.actors.iter().map(|a| a.name.clone()).collect()
    }

    /// Receivers named in sends (main included) that no declared actor
    /// provides, in order of first appearance.
    pub fn external_targets(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut note = |t: &str| {
            if self.actor(t).is_none() && !out.iter().any(|o| o == t) {
                out.push(t.to_string());
            }
        };
        for s in &self.main {
            if let Target::Actor(a) = &s.target {
                note(a);
            }
        }
        for a in &self.actors {
            for m in &a.methods {
                visit_sends(&m.body, &mut |s| {
                    if let Target::Actor(t) = &s.target {
                        note(t);
                    }
                });
            }
        }
        out
    }

    /// Messages sent to `receiver` from anywhere in the model.
    pub fn messages_sent_to(&self, receiver: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut note = |s: &SendStmt, owner: &str| {
            if s.target.resolve(owner) == receiver && !out.contains(&s.message) {
                out.push(s.message.clone());
            }
        };
        for s in &self.main {
            note(s, "");
        }
        for a in &self.actors {
            for m in &a.methods {
                visit_sends(&m.body, &mut |s| note(s, &a.name));
            }
        }
        out
    }
}

/// Calls `f` on every send statement in `body`, descending into branches.
pub fn visit_sends(body: &[Stmt], f: &mut dyn FnMut(&SendStmt)) {
    for s in body {
        match s {
            Stmt::Send(s) => f(s),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                visit_sends(then_branch, f);
                visit_sends(else_branch, f);
            }
            Stmt::Assign { .. } | Stmt::NonDet { .. } => {}
        }
    }
}

/// Runtime value: an integer or an actor identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Actor(String),
}

impl Value {
    /// Zero is false; everything else (actor ids included) is true.
    pub fn truthy(&self) -> bool {
        !matches!(self, Value::Int(0))
    }

    fn as_int(&self, op: BinOp) -> Result<i64, EvalError> {
        match self {
            Value::Int(i) => Ok(*i),
            Value::Actor(a) => Err(EvalError::NotAnInteger {
                op: op.symbol(),
                actor: a.clone(),
            }),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Actor(a) => f.write_str(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("operator `{op}` applied to actor `{actor}`")]
    NotAnInteger { op: &'static str, actor: String },
}

/// Variable assignment; `self` is looked up under the key `"self"`.
pub type Valuation = BTreeMap<String, Value>;

pub fn eval_expr(e: &Expr, v: &Valuation) -> Result<Value, EvalError> {
    eval_with(e, &mut |name| v.get(name).cloned())
}

/// Evaluates `e` using `lookup` for variables and for `self`.
pub fn eval_with(
    e: &Expr,
    lookup: &mut dyn FnMut(&str) -> Option<Value>,
) -> Result<Value, EvalError> {
    match e {
        Expr::Int(i) => Ok(Value::Int(*i)),
        Expr::Var(x) => lookup(x).ok_or_else(|| EvalError::Unbound(x.clone())),
        Expr::SelfRef => lookup("self").ok_or_else(|| EvalError::Unbound("self".into())),
        Expr::Not(a) => Ok(Value::Int(!eval_with(a, lookup)?.truthy() as i64)),
        Expr::Binary(op, a, b) => {
            let x = eval_with(a, lookup)?;
            let y = eval_with(b, lookup)?;
            op.apply(&x, &y)
        }
    }
}
