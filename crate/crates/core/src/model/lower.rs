//! Name resolution and lowering of a parsed model into a symbolic Grassmann
//! polynomial over the mechanics symbol table, plus the semantic checks:
//! parity, fermionic-velocity linearity, kinetic-metric recognition and the
//! self-conjugacy test.

use super::ast::{Expr, ModelAst, ParamKind};
use super::lexer::Span;
use super::{Diagnostic, ModelSpec, Severity};
use crate::algebra::{mask_indices, Parity};
use crate::poly::GrassmannPoly;
use crate::scalar::{RealityInfo, ScalarExpr};
use crate::symbols::{mechanics_table, FermionInfo, OddSymbolTable, SymbolRole};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

const RESERVED: &[&str] = &[
    "model", "param", "boson", "fermion", "conj", "lagrangian", "real", "complex", "i", "t", "d",
];

enum Binding {
    Param,
    Boson,
    Fermion(usize),
}

fn err(span: Span, message: impl Into<String>) -> Diagnostic {
    Diagnostic { severity: Severity::Error, message: message.into(), line: span.line, col: span.col }
}

fn diag(severity: Severity, span: Span, message: impl Into<String>) -> Diagnostic {
    Diagnostic { severity, message: message.into(), line: span.line, col: span.col }
}

/// One additive term of the expanded Lagrangian before canonicalization:
/// a scalar coefficient and the odd factors in source order.
struct RawTerm {
    coeff: ScalarExpr,
    odd: Vec<usize>,
    span: Span,
}

pub(super) fn lower(ast: ModelAst) -> Result<ModelSpec, Diagnostic> {
    let mut bindings: BTreeMap<String, Binding> = BTreeMap::new();
    let mut declare = |name: &str, span: Span, b: Binding| -> Result<(), Diagnostic> {
        if RESERVED.contains(&name) {
            return Err(err(span, format!("`{name}` is reserved and cannot be declared")));
        }
        if bindings.insert(name.to_string(), b).is_some() {
            return Err(err(span, format!("duplicate declaration of `{name}`")));
        }
        Ok(())
    };
    for p in &ast.params {
        declare(&p.name, p.span, Binding::Param)?;
    }
    for b in &ast.bosons {
        declare(&b.name, b.span, Binding::Boson)?;
    }
    for (idx, f) in ast.fermions.iter().enumerate() {
        declare(&f.name, f.span, Binding::Fermion(idx))?;
    }

    // Resolve conjugation declarations and make them bidirectional.
    let mut fermions: Vec<FermionInfo> = ast
        .fermions
        .iter()
        .map(|f| FermionInfo { name: f.name.clone(), conj: f.conj.clone() })
        .collect();
    for idx in 0..fermions.len() {
        let Some(cname) = fermions[idx].conj.clone() else { continue };
        let span = ast.fermions[idx].span;
        let j = match bindings.get(&cname) {
            Some(Binding::Fermion(j)) => *j,
            _ => {
                return Err(err(
                    span,
                    format!("conjugate target `{cname}` is not a declared fermion"),
                ))
            }
        };
        let back = fermions[j].conj.clone();
        match back {
            None => fermions[j].conj = Some(fermions[idx].name.clone()),
            Some(ref b) if *b == fermions[idx].name => {}
            Some(b) => {
                return Err(err(
                    span,
                    format!(
                        "conflicting conjugation: `{}` pairs with `{cname}` but `{cname}` pairs \
                         with `{b}`",
                        fermions[idx].name
                    ),
                ))
            }
        }
    }
    let reality_declared = fermions.iter().any(|f| f.conj.is_some());

    let table = mechanics_table(&fermions)
        .map_err(|e| err(Span::new(1, 1), format!("cannot build symbol table: {e}")))?;
    let mu = fermions.len();

    let mut raw = Vec::new();
    expand(&ast.lagrangian, &bindings, &table, &mut raw)?;

    let mut diagnostics = Vec::new();
    let mut lagrangian = GrassmannPoly::zero(&table);
    for term in &raw {
        let mut seen = 0u64;
        let mut repeated = false;
        for &idx in &term.odd {
            if seen & (1 << idx) != 0 {
                repeated = true;
            }
            seen |= 1 << idx;
        }
        if repeated {
            diagnostics.push(diag(
                Severity::Warning,
                term.span,
                "term is identically zero: a fermionic factor is repeated",
            ));
        }
        let velocities =
            term.odd.iter().filter(|&&i| table.role(i) == SymbolRole::Velocity).count();
        if velocities >= 2 {
            diagnostics.push(diag(
                Severity::Error,
                term.span,
                "nonlinear fermionic velocity dependence: a term contains more than one \
                 fermionic velocity factor",
            ));
        }
        let piece = GrassmannPoly::from_term(&table, term.coeff.clone(), &term.odd);
        lagrangian = lagrangian.add(&piece).expect("same table");
    }

    if !lagrangian.is_zero() && lagrangian.parity() != Parity::Even {
        diagnostics.push(diag(
            Severity::Error,
            ast.lagrangian.span(),
            "Lagrangian must have even parity: every term needs an even number of fermionic \
             factors",
        ));
    }

    let kinetic_metric =
        extract_metric(&lagrangian, &table, mu, ast.lagrangian.span(), &mut diagnostics);

    let mut reality = RealityInfo::default();
    for p in &ast.params {
        if p.kind == ParamKind::Real {
            reality.mark_real(&p.name);
        }
    }
    for b in &ast.bosons {
        reality.mark_real(&b.name);
    }
    if reality_declared {
        let conj = lagrangian.conjugate().map_coeffs(|e| e.resolve_conj(&reality));
        let diff = lagrangian.sub(&conj).expect("same table");
        if diff.is_zero() {
            diagnostics.push(diag(
                Severity::Info,
                ast.lagrangian.span(),
                "reality check passed: the Lagrangian equals its own conjugate",
            ));
        } else {
            diagnostics.push(diag(
                Severity::Warning,
                ast.lagrangian.span(),
                "reality check failed: the Lagrangian differs from its own conjugate under the \
                 declared pairing",
            ));
        }
    } else {
        diagnostics.push(diag(
            Severity::Info,
            ast.lagrangian.span(),
            "reality check skipped: no conjugation pairing declared",
        ));
    }

    Ok(ModelSpec {
        name: ast.name.clone(),
        params: ast.params.iter().map(|p| (p.name.clone(), p.kind)).collect(),
        bosons: ast.bosons.iter().map(|b| b.name.clone()).collect(),
        fermions,
        table,
        lagrangian,
        kinetic_metric,
        reality,
        reality_declared,
        diagnostics,
        ast,
    })
}

fn expand(
    expr: &Expr,
    bindings: &BTreeMap<String, Binding>,
    table: &Arc<OddSymbolTable>,
    out: &mut Vec<RawTerm>,
) -> Result<(), Diagnostic> {
    match expr {
        Expr::Num(v, s) => {
            out.push(RawTerm { coeff: ScalarExpr::real(*v), odd: Vec::new(), span: *s })
        }
        Expr::ImagUnit(s) => {
            out.push(RawTerm { coeff: ScalarExpr::imag_unit(), odd: Vec::new(), span: *s })
        }
        Expr::TimeVar(s) => {
            out.push(RawTerm { coeff: ScalarExpr::Time, odd: Vec::new(), span: *s })
        }
        Expr::Name(name, s) => match bindings.get(name) {
            Some(Binding::Param) => {
                out.push(RawTerm { coeff: ScalarExpr::param(name), odd: Vec::new(), span: *s })
            }
            Some(Binding::Boson) => out.push(RawTerm {
                coeff: ScalarExpr::func(name),
                odd: Vec::new(),
                span: *s,
            }),
            Some(Binding::Fermion(g)) => {
                let idx = table
                    .index_in_group(*g, SymbolRole::Coordinate)
                    .expect("coordinate exists for fermion group");
                out.push(RawTerm { coeff: ScalarExpr::one(), odd: vec![idx], span: *s })
            }
            None => return Err(err(*s, format!("unknown identifier `{name}`"))),
        },
        Expr::Deriv(name, s) => match bindings.get(name) {
            Some(Binding::Boson) => out.push(RawTerm {
                coeff: ScalarExpr::func_order(name, 1),
                odd: Vec::new(),
                span: *s,
            }),
            Some(Binding::Fermion(g)) => {
                let idx = table
                    .index_in_group(*g, SymbolRole::Velocity)
                    .expect("velocity exists for fermion group");
                out.push(RawTerm { coeff: ScalarExpr::one(), odd: vec![idx], span: *s })
            }
            Some(Binding::Param) => {
                return Err(err(*s, format!("`{name}` is a parameter; d() needs a coordinate")))
            }
            None => return Err(err(*s, format!("unknown identifier `{name}`"))),
        },
        Expr::Neg(inner) => {
            let mut tmp = Vec::new();
            expand(inner, bindings, table, &mut tmp)?;
            for mut t in tmp {
                t.coeff = t.coeff.neg();
                out.push(t);
            }
        }
        Expr::Add(a, b) => {
            expand(a, bindings, table, out)?;
            expand(b, bindings, table, out)?;
        }
        Expr::Sub(a, b) => {
            expand(a, bindings, table, out)?;
            let mut tmp = Vec::new();
            expand(b, bindings, table, &mut tmp)?;
            for mut t in tmp {
                t.coeff = t.coeff.neg();
                out.push(t);
            }
        }
        Expr::Mul(a, b) => {
            let mut left = Vec::new();
            let mut right = Vec::new();
            expand(a, bindings, table, &mut left)?;
            expand(b, bindings, table, &mut right)?;
            for l in &left {
                for r in &right {
                    let mut odd = l.odd.clone();
                    odd.extend_from_slice(&r.odd);
                    out.push(RawTerm {
                        coeff: l.coeff.clone().mul(r.coeff.clone()),
                        odd,
                        span: l.span,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Recognize a kinetic part of the form (i/2) g^{ab} psi_a psi-dot_b with a
/// constant real matrix g. Every monomial containing a fermionic velocity
/// must be a coordinate-velocity bilinear with a purely imaginary literal
/// coefficient; otherwise no metric is reported.
fn extract_metric(
    lagrangian: &GrassmannPoly,
    table: &Arc<OddSymbolTable>,
    mu: usize,
    span: Span,
    diagnostics: &mut Vec<Diagnostic>,
) -> Option<Vec<Vec<f64>>> {
    if mu == 0 {
        return None;
    }
    let mut g = vec![vec![0.0f64; mu]; mu];
    let mut saw_kinetic = false;
    for (mask, coeff) in lagrangian.terms() {
        let indices = mask_indices(*mask);
        let velocities: Vec<usize> =
            indices.iter().copied().filter(|&i| table.role(i) == SymbolRole::Velocity).collect();
        if velocities.is_empty() {
            continue;
        }
        let bilinear = indices.len() == 2
            && table.role(indices[0]) == SymbolRole::Coordinate
            && table.role(indices[1]) == SymbolRole::Velocity;
        let entry = if bilinear { coeff.simplify().as_literal() } else { None };
        match entry {
            Some(c) if c.re.abs() <= 1e-12 => {
                let alpha = table.group(indices[0]).expect("coordinate group");
                let beta = table.group(indices[1]).expect("velocity group");
                g[alpha][beta] = 2.0 * c.im;
                saw_kinetic = true;
            }
            _ => {
                diagnostics.push(diag(
                    Severity::Info,
                    span,
                    "kinetic metric not recognized: velocity terms are not purely imaginary \
                     constant bilinears",
                ));
                return None;
            }
        }
    }
    if !saw_kinetic {
        return None;
    }
    diagnostics.push(diag(
        Severity::Info,
        span,
        format!("kinetic metric recognized: {}", render_matrix(&g)),
    ));
    Some(g)
}

fn render_matrix(g: &[Vec<f64>]) -> String {
    let rows: Vec<String> = g
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Numeric check used by tests and callers that want to compare a recognized
/// metric against an expected matrix.
pub fn metric_equals(g: &[Vec<f64>], expected: &[Vec<f64>], tol: f64) -> bool {
    g.len() == expected.len()
        && g.iter().zip(expected).all(|(a, b)| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
        })
}

/// Evaluate the coefficient in front of a single odd monomial, used by tests.
pub fn literal_coefficient(poly: &GrassmannPoly, indices: &[usize]) -> Option<Complex64> {
    let mask = indices.iter().fold(0u64, |m, &i| m | (1 << i));
    poly.coefficient(mask).simplify().as_literal()
}
