use super::lexer::{tokenize, Tok, Token};
use super::{ActorDef, BinOp, Expr, Method, Model, SendStmt, Stmt, Target};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: duplicate {kind} `{name}`")]
    Duplicate {
        line: usize,
        col: usize,
        kind: &'static str,
        name: String,
    },
}

/// Parses an AML program. The `main` block may be omitted, which is
/// convenient for files holding a single component.
pub fn parse_model(src: &str) -> Result<Model, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    p.model()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax {
            line,
            col,
            message: format!("expected {expected}, found {}", self.peek().describe()),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(what),
        }
    }

    fn model(&mut self) -> Result<Model, ParseError> {
        let mut model = Model::default();
        while *self.peek() == Tok::Actor {
            let (line, col) = self.here();
            let a = self.actor()?;
            if model.actor(&a.name).is_some() {
                return Err(ParseError::Duplicate {
                    line,
                    col,
                    kind: "actor",
                    name: a.name,
                });
            }
            model.actors.push(a);
        }
        if model.actors.is_empty() {
            return self.error("`actor`");
        }
        if *self.peek() == Tok::Main {
            self.bump();
            self.expect(Tok::LBrace, "`{`")?;
            while *self.peek() != Tok::RBrace {
                if *self.peek() == Tok::Semi {
                    self.bump();
                    continue;
                }
                model.main.push(self.send()?);
            }
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return self.error("end of input");
        }
        Ok(model)
    }

    fn actor(&mut self) -> Result<ActorDef, ParseError> {
        self.expect(Tok::Actor, "`actor`")?;
        let name = self.ident("actor name")?;
        self.expect(Tok::LParen, "`(`")?;
        let capacity = match self.peek().clone() {
            Tok::Int(n) if n >= 0 => {
                self.bump();
                n as usize
            }
            _ => return self.error("mailbox capacity"),
        };
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut a = ActorDef {
            name,
            capacity,
            vars: Vec::new(),
            methods: Vec::new(),
        };
        loop {
            let (line, col) = self.here();
            match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::IntKw => {
                    self.bump();
                    loop {
                        let (line, col) = self.here();
                        let v = self.ident("variable name")?;
                        if a.vars.contains(&v) {
                            return Err(ParseError::Duplicate {
                                line,
                                col,
                                kind: "variable",
                                name: v,
                            });
                        }
                        a.vars.push(v);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::Semi, "`;`")?;
                }
                Tok::Ident(_) => {
                    let m = self.method()?;
                    if a.method(&m.name).is_some() {
                        return Err(ParseError::Duplicate {
                            line,
                            col,
                            kind: "method",
                            name: m.name,
                        });
                    }
                    a.methods.push(m);
                }
                _ => return self.error("variable declaration, method or `}`"),
            }
        }
        Ok(a)
    }

    fn method(&mut self) -> Result<Method, ParseError> {
        let name = self.ident("method name")?;
        let body = self.block()?;
        Ok(Method { name, body })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut body = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Semi {
                self.bump();
                continue;
            }
            body.push(self.stmt()?);
        }
        self.bump();
        Ok(body)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        match self.peek().clone() {
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_branch = self.block()?;
                let else_branch = if *self.peek() == Tok::Else {
                    self.bump();
                    if *self.peek() == Tok::If {
                        vec![self.stmt()?]
                    } else {
                        self.block()?
                    }
                } else {
                    Vec::new()
                };
                Ok(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                })
            }
            Tok::SelfKw => Ok(Stmt::Send(self.send()?)),
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::Bang {
                    return Ok(Stmt::Send(self.send()?));
                }
                self.bump();
                self.expect(Tok::Assign, "`=`, `:=` or `!`")?;
                let st = if *self.peek() == Tok::Question {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let mut choices = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        choices.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    Stmt::NonDet { var: name, choices }
                } else {
                    Stmt::Assign {
                        var: name,
                        expr: self.expr()?,
                    }
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(st)
            }
            _ => self.error("statement"),
        }
    }

    fn send(&mut self) -> Result<SendStmt, ParseError> {
        let target = match self.bump() {
            Tok::SelfKw => Target::SelfRef,
            Tok::Ident(s) => Target::Actor(s),
            _ => {
                self.pos -= 1;
                return self.error("send target");
            }
        };
        self.expect(Tok::Bang, "`!`")?;
        let message = self.ident("message name")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(SendStmt { target, message })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Gt => BinOp::Gt,
            Tok::AndAnd => BinOp::And,
            Tok::OrOr => BinOp::Or,
            _ => return None,
        })
    }

    // Precedence climbing; every binary operator is left-associative.
    fn binary(&mut self, min: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Tok::Minus => {
                if let Tok::Int(n) = *self.peek_at(1) {
                    self.bump();
                    self.bump();
                    Ok(Expr::Int(-n))
                } else {
                    self.error("integer literal after `-`")
                }
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::SelfKw => {
                self.bump();
                Ok(Expr::SelfRef)
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Expr::Var(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}
