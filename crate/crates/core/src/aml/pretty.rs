use std::fmt::{self, Display, Formatter, Write};

use super::{ActorDef, Expr, Model, SendStmt, Stmt, Target};

impl Display for Target {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Target::SelfRef => f.write_str("self"),
            Target::Actor(a) => f.write_str(a),
        }
    }
}

impl Display for SendStmt {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}!{};", self.target, self.message)
    }
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        _ => u8::MAX,
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Var(v) => f.write_str(v),
            Expr::SelfRef => f.write_str("self"),
            Expr::Not(e) => {
                if matches!(**e, Expr::Binary(..)) {
                    write!(f, "!({e})")
                } else {
                    write!(f, "!{e}")
                }
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                if expr_prec(a) < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                // left-associative: an equal-precedence right operand needs parens
                if expr_prec(b) <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

fn write_block(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        write_stmt(out, s, depth);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    match s {
        Stmt::Assign { var, expr } => {
            let _ = writeln!(out, "{pad}{var} = {expr};");
        }
        Stmt::NonDet { var, choices } => {
            let cs: Vec<String> = choices.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{pad}{var} = ?({});", cs.join(", "));
        }
        Stmt::Send(send) => {
            let _ = writeln!(out, "{pad}{send}");
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "{pad}if ({cond}) {{");
            write_block(out, then_branch, depth + 1);
            let _ = writeln!(out, "{pad}}} else {{");
            write_block(out, else_branch, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

impl Display for Stmt {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_stmt(&mut s, self, 0);
        f.write_str(s.trim_end())
    }
}

impl Display for ActorDef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "actor {}({}) {{", self.name, self.capacity);
        for v in &self.vars {
            let _ = writeln!(out, "  int {v};");
        }
        for m in &self.methods {
            if m.body.is_empty() {
                let _ = writeln!(out, "  {} {{}}", m.name);
                continue;
            }
            let _ = writeln!(out, "  {} {{", m.name);
            write_block(&mut out, &m.body, 2);
            let _ = writeln!(out, "  }}");
        }
        out.push('}');
        f.write_str(&out)
    }
}

impl Display for Model {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for a in &self.actors {
            writeln!(f, "{a}")?;
            writeln!(f)?;
        }
        writeln!(f, "main {{")?;
        for s in &self.main {
            writeln!(f, "  {s}")?;
        }
        writeln!(f, "}}")
    }
}
