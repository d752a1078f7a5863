use std::collections::BTreeSet;
use std::fmt;

use super::{Expr, Model, SendStmt, Stmt, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    DistinctActors,
    DistinctMethods,
    DistinctVariables,
    NameClash,
    MainNonSelf,
    DeclaredReceiver,
    ReceiverHasMethod,
    DeclaredVariable,
}

impl Clause {
    pub fn text(self) -> &'static str {
        match self {
            Clause::DistinctActors => "actor identifiers are pairwise distinct",
            Clause::DistinctMethods => "method names of an actor are pairwise distinct",
            Clause::DistinctVariables => "variable names of an actor are pairwise distinct",
            Clause::NameClash => "identifiers of variables, methods and actors do not clash",
            Clause::MainNonSelf => "main is restricted to send statements with non-self receivers",
            Clause::DeclaredReceiver => "every send targets self or a declared actor",
            Clause::ReceiverHasMethod => "receiver of a message has a method with the same name",
            Clause::DeclaredVariable => "every accessed variable is declared by its actor",
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub clause: Clause,
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (violates: {})",
            self.location, self.detail, self.clause
        )
    }
}

pub fn check_wellformed(m: &Model) -> Result<(), Vec<Diagnostic>> {
    check_wellformed_open(m, &BTreeSet::new())
}

/// Like [`check_wellformed`], but sends to the actors in `external` are
/// accepted without further checks. Used for open systems whose missing
/// component is not declared.
pub fn check_wellformed_open(
    m: &Model,
    external: &BTreeSet<String>,
) -> Result<(), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut push = |clause, location: String, detail: String| {
        diags.push(Diagnostic {
            clause,
            location,
            detail,
        });
    };

    let mut seen = BTreeSet::new();
    for a in &m.actors {
        if !seen.insert(a.name.as_str()) {
            push(
                Clause::DistinctActors,
                format!("actor {}", a.name),
                "declared more than once".into(),
            );
        }
    }

    for a in &m.actors {
        let loc = format!("actor {}", a.name);
        let mut names = BTreeSet::new();
        for meth in &a.methods {
            if !names.insert(meth.name.as_str()) {
                push(
                    Clause::DistinctMethods,
                    loc.clone(),
                    format!("method `{}` repeated", meth.name),
                );
            }
        }
        let mut vars = BTreeSet::new();
        for v in &a.vars {
            if !vars.insert(v.as_str()) {
                push(
                    Clause::DistinctVariables,
                    loc.clone(),
                    format!("variable `{v}` repeated"),
                );
            }
            if v == "self" {
                push(
                    Clause::NameClash,
                    loc.clone(),
                    "`self` cannot be declared".into(),
                );
            }
            if names.contains(v.as_str()) || m.actor(v).is_some() || external.contains(v) {
                push(
                    Clause::NameClash,
                    loc.clone(),
                    format!("variable `{v}` clashes with a method or actor"),
                );
            }
        }
        for meth in &a.methods {
            let loc = format!("actor {}, method {}", a.name, meth.name);
            let (mut stmts, mut exprs) = (Vec::new(), Vec::new());
            collect(&meth.body, &mut stmts, &mut exprs);
            for s in stmts {
                match s {
                    Stmt::Assign { var, .. } | Stmt::NonDet { var, .. } => {
                        if !vars.contains(var.as_str()) {
                            push(
                                Clause::DeclaredVariable,
                                loc.clone(),
                                format!("assignment to undeclared `{var}`"),
                            );
                        }
                    }
                    Stmt::Send(send) => check_send(m, external, send, &a.name, &loc, &mut push),
                    Stmt::If { .. } => {}
                }
            }
            let mut used = Vec::new();
            for e in exprs {
                e.variables(&mut used);
            }
            for u in used {
                if !vars.contains(u.as_str()) {
                    push(
                        Clause::DeclaredVariable,
                        loc.clone(),
                        format!("read of undeclared `{u}`"),
                    );
                }
            }
        }
    }
    for send in &m.main {
        if send.target == Target::SelfRef {
            push(
                Clause::MainNonSelf,
                "main".into(),
                format!("`self!{}`", send.message),
            );
            continue;
        }
        check_send(m, external, send, "", "main", &mut push);
    }

    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

fn check_send(
    m: &Model,
    external: &BTreeSet<String>,
    send: &SendStmt,
    owner: &str,
    loc: &str,
    push: &mut impl FnMut(Clause, String, String),
) {
    let receiver = send.target.resolve(owner);
    match m.actor(receiver) {
        Some(r) => {
            if r.method(&send.message).is_none() {
                push(
                    Clause::ReceiverHasMethod,
                    loc.to_string(),
                    format!("`{receiver}` has no method `{}`", send.message),
                );
            }
        }
        None if external.contains(receiver) => {}
        None => push(
            Clause::DeclaredReceiver,
            loc.to_string(),
            format!("unknown actor `{receiver}`"),
        ),
    }
}

fn collect<'a>(body: &'a [Stmt], stmts: &mut Vec<&'a Stmt>, exprs: &mut Vec<&'a Expr>) {
    for s in body {
        stmts.push(s);
        match s {
            Stmt::Assign { expr, .. } => exprs.push(expr),
            Stmt::NonDet { choices, .. } => exprs.extend(choices),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                exprs.push(cond);
                collect(then_branch, stmts, exprs);
                collect(else_branch, stmts, exprs);
            }
            Stmt::Send(_) => {}
        }
    }
}
