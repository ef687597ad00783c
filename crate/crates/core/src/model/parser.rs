//! Recursive-descent parser for model files. Produces a position-annotated
//! syntax tree; all failures carry the line/column of the offending token.

use super::ast::{BosonDecl, Expr, FermionDecl, ModelAst, ParamDecl, ParamKind};
use super::lexer::{lex, Span, Token, TokenKind};
use super::{Diagnostic, Severity};

pub fn parse_text(text: &str) -> Result<ModelAst, Diagnostic> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let ast = p.model()?;
    p.expect_eof()?;
    Ok(ast)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn err(span: Span, message: impl Into<String>) -> Diagnostic {
    Diagnostic { severity: Severity::Error, message: message.into(), line: span.line, col: span.col }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, Diagnostic> {
        let t = self.next();
        if t.kind == kind {
            Ok(t)
        } else {
            Err(err(t.span, format!("expected {what}, found {}", t.kind.describe())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), Diagnostic> {
        let t = self.next();
        match t.kind {
            TokenKind::Ident(name) => Ok((name, t.span)),
            other => Err(err(t.span, format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Span, Diagnostic> {
        let t = self.next();
        match &t.kind {
            TokenKind::Ident(s) if s == kw => Ok(t.span),
            other => Err(err(t.span, format!("expected `{kw}`, found {}", other.describe()))),
        }
    }

    fn expect_eof(&mut self) -> Result<(), Diagnostic> {
        let t = self.peek();
        if t.kind == TokenKind::Eof {
            Ok(())
        } else {
            Err(err(t.span, format!("expected end of input, found {}", t.kind.describe())))
        }
    }

    fn model(&mut self) -> Result<ModelAst, Diagnostic> {
        self.expect_keyword("model")?;
        let (name, _) = self.expect_ident("model name")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut params = Vec::new();
        let mut bosons = Vec::new();
        let mut fermions = Vec::new();
        let mut lagrangian: Option<(Expr, Span)> = None;
        loop {
            if self.peek().kind == TokenKind::RBrace {
                self.next();
                break;
            }
            if self.at_keyword("param") {
                let span = self.next().span;
                let (name, _) = self.expect_ident("parameter name")?;
                self.expect(TokenKind::Colon, "`:`")?;
                let (kind_name, kind_span) = self.expect_ident("`real` or `complex`")?;
                let kind = match kind_name.as_str() {
                    "real" => ParamKind::Real,
                    "complex" => ParamKind::Complex,
                    other => {
                        return Err(err(
                            kind_span,
                            format!("expected `real` or `complex`, found `{other}`"),
                        ))
                    }
                };
                self.expect(TokenKind::Semi, "`;`")?;
                params.push(ParamDecl { name, kind, span });
            } else if self.at_keyword("boson") {
                let span = self.next().span;
                let (name, _) = self.expect_ident("coordinate name")?;
                self.expect(TokenKind::Semi, "`;`")?;
                bosons.push(BosonDecl { name, span });
            } else if self.at_keyword("fermion") {
                let span = self.next().span;
                let (name, _) = self.expect_ident("coordinate name")?;
                let conj = if self.at_keyword("conj") {
                    self.next();
                    Some(self.expect_ident("conjugate variable name")?.0)
                } else {
                    None
                };
                self.expect(TokenKind::Semi, "`;`")?;
                fermions.push(FermionDecl { name, conj, span });
            } else if self.at_keyword("lagrangian") {
                let span = self.next().span;
                if lagrangian.is_some() {
                    return Err(err(span, "duplicate `lagrangian` block"));
                }
                self.expect(TokenKind::LBrace, "`{`")?;
                let expr = self.expr()?;
                self.expect(TokenKind::RBrace, "`}`")?;
                lagrangian = Some((expr, span));
            } else {
                let t = self.peek();
                return Err(err(
                    t.span,
                    format!(
                        "expected `param`, `boson`, `fermion`, `lagrangian` or `}}`, found {}",
                        t.kind.describe()
                    ),
                ));
            }
        }
        let (lagrangian, _) = lagrangian.ok_or_else(|| {
            let t = self.peek();
            err(t.span, "model has no `lagrangian` block")
        })?;
        Ok(ModelAst { name, params, bosons, fermions, lagrangian })
    }

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().kind {
                TokenKind::Plus => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                TokenKind::Minus => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary()?;
        while self.peek().kind == TokenKind::Star {
            self.next();
            let rhs = self.unary()?;
            lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        if self.peek().kind == TokenKind::Minus {
            self.next();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, Diagnostic> {
        let t = self.next();
        match t.kind {
            TokenKind::Number(v) => Ok(Expr::Num(v, t.span)),
            TokenKind::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::ImagUnit(t.span)),
                "t" => Ok(Expr::TimeVar(t.span)),
                "d" => {
                    self.expect(TokenKind::LParen, "`(` after `d`")?;
                    let (name, _) = self.expect_ident("coordinate name")?;
                    self.expect(TokenKind::RParen, "`)`")?;
                    Ok(Expr::Deriv(name, t.span))
                }
                _ => Ok(Expr::Name(name, t.span)),
            },
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(err(t.span, format!("expected an expression, found {}", other.describe()))),
        }
    }
}
