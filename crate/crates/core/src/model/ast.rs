//! Abstract syntax for model files, position-annotated, together with the
//! pretty-printer. Structural equality ignores positions so that printing and
//! re-parsing yields a tree equal to the original.

use super::lexer::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Real,
    Complex,
}

#[derive(Debug, Clone)]
pub struct ParamDecl {
    pub name: String,
    pub kind: ParamKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct BosonDecl {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct FermionDecl {
    pub name: String,
    pub conj: Option<String>,
    pub span: Span,
}

/// Expression tree for a Lagrangian. Parentheses are not represented: they
/// only guide parsing, and the printer re-inserts them where precedence
/// requires.
#[derive(Debug, Clone)]
pub enum Expr {
    Num(f64, Span),
    ImagUnit(Span),
    TimeVar(Span),
    Name(String, Span),
    /// Time derivative of a named coordinate, written `d(name)`.
    Deriv(String, Span),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Position of the leftmost leaf, used to locate diagnostics.
    pub fn span(&self) -> Span {
        match self {
            Expr::Num(_, s)
            | Expr::ImagUnit(s)
            | Expr::TimeVar(s)
            | Expr::Name(_, s)
            | Expr::Deriv(_, s) => *s,
            Expr::Neg(e) => e.span(),
            Expr::Add(a, _) | Expr::Sub(a, _) | Expr::Mul(a, _) => a.span(),
        }
    }

    /// Equality of tree shape and leaf content, ignoring source positions.
    pub fn structurally_equals(&self, other: &Expr) -> bool {
        match (self, other) {
            (Expr::Num(a, _), Expr::Num(b, _)) => a == b,
            (Expr::ImagUnit(_), Expr::ImagUnit(_)) => true,
            (Expr::TimeVar(_), Expr::TimeVar(_)) => true,
            (Expr::Name(a, _), Expr::Name(b, _)) => a == b,
            (Expr::Deriv(a, _), Expr::Deriv(b, _)) => a == b,
            (Expr::Neg(a), Expr::Neg(b)) => a.structurally_equals(b),
            (Expr::Add(a1, a2), Expr::Add(b1, b2))
            | (Expr::Sub(a1, a2), Expr::Sub(b1, b2))
            | (Expr::Mul(a1, a2), Expr::Mul(b1, b2)) => {
                a1.structurally_equals(b1) && a2.structurally_equals(b2)
            }
            _ => false,
        }
    }

    // Precedence levels: additive 0, multiplicative 1, unary minus 2, atoms 3.
    fn render(&self, out: &mut String, min_prec: u8) {
        let prec = match self {
            Expr::Add(..) | Expr::Sub(..) => 0,
            Expr::Mul(..) => 1,
            Expr::Neg(..) => 2,
            _ => 3,
        };
        let parens = prec < min_prec;
        if parens {
            out.push('(');
        }
        match self {
            Expr::Num(v, _) => out.push_str(&format!("{v}")),
            Expr::ImagUnit(_) => out.push('i'),
            Expr::TimeVar(_) => out.push('t'),
            Expr::Name(n, _) => out.push_str(n),
            Expr::Deriv(n, _) => {
                out.push_str("d(");
                out.push_str(n);
                out.push(')');
            }
            Expr::Neg(e) => {
                out.push('-');
                e.render(out, 2);
            }
            Expr::Add(a, b) => {
                a.render(out, 0);
                out.push_str(" + ");
                b.render(out, 1);
            }
            Expr::Sub(a, b) => {
                a.render(out, 0);
                out.push_str(" - ");
                b.render(out, 1);
            }
            Expr::Mul(a, b) => {
                a.render(out, 1);
                out.push_str(" * ");
                b.render(out, 2);
            }
        }
        if parens {
            out.push(')');
        }
    }

    pub fn display(&self) -> String {
        let mut out = String::new();
        self.render(&mut out, 0);
        out
    }
}

#[derive(Debug, Clone)]
pub struct ModelAst {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub bosons: Vec<BosonDecl>,
    pub fermions: Vec<FermionDecl>,
    pub lagrangian: Expr,
}

impl ModelAst {
    pub fn structurally_equals(&self, other: &ModelAst) -> bool {
        self.name == other.name
            && self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
            && self.bosons.len() == other.bosons.len()
            && self.bosons.iter().zip(&other.bosons).all(|(a, b)| a.name == b.name)
            && self.fermions.len() == other.fermions.len()
            && self
                .fermions
                .iter()
                .zip(&other.fermions)
                .all(|(a, b)| a.name == b.name && a.conj == b.conj)
            && self.lagrangian.structurally_equals(&other.lagrangian)
    }

    /// Deterministic text form; parsing it back yields a structurally equal
    /// tree.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("model ");
        out.push_str(&self.name);
        out.push_str(" {\n");
        for p in &self.params {
            let kind = match p.kind {
                ParamKind::Real => "real",
                ParamKind::Complex => "complex",
            };
            out.push_str(&format!("  param {} : {};\n", p.name, kind));
        }
        for b in &self.bosons {
            out.push_str(&format!("  boson {};\n", b.name));
        }
        for f in &self.fermions {
            match &f.conj {
                Some(c) => out.push_str(&format!("  fermion {} conj {};\n", f.name, c)),
                None => out.push_str(&format!("  fermion {};\n", f.name)),
            }
        }
        out.push_str("  lagrangian { ");
        out.push_str(&self.lagrangian.display());
        out.push_str(" }\n}\n");
        out
    }
}
