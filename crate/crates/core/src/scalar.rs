//! Symbolic scalar coefficients: small expression trees over complex
//! literals, named parameters, commuting dynamical symbols, the time
//! variable, and opaque named functions of time with symbolic derivative
//! orders.
//!
//! Simplification is deliberately limited — literal folding, 0/1 identities,
//! flattening, like-term collection and cancellation of structurally equal
//! factors — never full computer algebra. Anything deeper is settled by
//! numeric evaluation.

use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

/// Default step for central finite differences when a named function has no
/// registered derivative closure.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    /// Exact complex literal.
    Literal(Complex64),
    /// Named model parameter, constant in time.
    Param(String),
    /// Commuting dynamical symbol (for bosonic coordinates and momenta).
    Sym(String),
    /// The time variable.
    Time,
    /// Named function of time; `order` counts symbolic time derivatives.
    Func { name: String, order: u32 },
    Add(Vec<ScalarExpr>),
    Mul(Vec<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    /// Complex conjugation marker.
    Conj(Box<ScalarExpr>),
}

use ScalarExpr::*;

impl ScalarExpr {
    pub fn zero() -> Self {
        Literal(Complex64::new(0.0, 0.0))
    }

    pub fn one() -> Self {
        Literal(Complex64::new(1.0, 0.0))
    }

    pub fn real(x: f64) -> Self {
        Literal(Complex64::new(x, 0.0))
    }

    pub fn imag_unit() -> Self {
        Literal(Complex64::new(0.0, 1.0))
    }

    pub fn lit(c: Complex64) -> Self {
        Literal(c)
    }

    pub fn param(name: &str) -> Self {
        Param(name.into())
    }

    pub fn sym(name: &str) -> Self {
        Sym(name.into())
    }

    pub fn func(name: &str) -> Self {
        Func { name: name.into(), order: 0 }
    }

    pub fn func_order(name: &str, order: u32) -> Self {
        Func { name: name.into(), order }
    }

    pub fn as_literal(&self) -> Option<Complex64> {
        match self {
            Literal(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Literal(c) if c.norm() == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Literal(c) if *c == Complex64::new(1.0, 0.0))
    }

    pub fn add(self, other: ScalarExpr) -> ScalarExpr {
        Add(vec![self, other]).simplify()
    }

    pub fn sub(self, other: ScalarExpr) -> ScalarExpr {
        Add(vec![self, other.neg()]).simplify()
    }

    pub fn neg(self) -> ScalarExpr {
        Mul(vec![Literal(Complex64::new(-1.0, 0.0)), self]).simplify()
    }

    pub fn mul(self, other: ScalarExpr) -> ScalarExpr {
        Mul(vec![self, other]).simplify()
    }

    pub fn div(self, other: ScalarExpr) -> ScalarExpr {
        Div(Box::new(self), Box::new(other)).simplify()
    }

    pub fn pow(self, n: i32) -> ScalarExpr {
        Pow(Box::new(self), n).simplify()
    }

    pub fn conj(self) -> ScalarExpr {
        Conj(Box::new(self)).simplify()
    }

    /// Deterministic structural key; used to collect like terms and order
    /// factors. Two expressions with the same key are structurally equal.
    pub fn key(&self) -> String {
        let mut s = String::new();
        self.write_key(&mut s);
        s
    }

    fn write_key(&self, out: &mut String) {
        match self {
            Literal(c) => {
                let _ = write!(out, "L({:?},{:?})", c.re, c.im);
            }
            Param(n) => {
                let _ = write!(out, "P({n})");
            }
            Sym(n) => {
                let _ = write!(out, "S({n})");
            }
            Time => out.push('T'),
            Func { name, order } => {
                let _ = write!(out, "F({name},{order})");
            }
            Add(xs) => {
                out.push_str("A(");
                for x in xs {
                    x.write_key(out);
                    out.push(',');
                }
                out.push(')');
            }
            Mul(xs) => {
                out.push_str("M(");
                for x in xs {
                    x.write_key(out);
                    out.push(',');
                }
                out.push(')');
            }
            Pow(b, n) => {
                let _ = write!(out, "W(");
                b.write_key(out);
                let _ = write!(out, ",{n})");
            }
            Div(a, b) => {
                out.push_str("D(");
                a.write_key(out);
                out.push(',');
                b.write_key(out);
                out.push(')');
            }
            Conj(x) => {
                out.push_str("C(");
                x.write_key(out);
                out.push(')');
            }
        }
    }

    // ---- simplification ----------------------------------------------------

    pub fn simplify(&self) -> ScalarExpr {
        match self {
            Literal(_) | Param(_) | Sym(_) | Time | Func { .. } => self.clone(),
            Add(xs) => simplify_add(xs),
            Mul(xs) => simplify_product(xs, &[]),
            Div(a, b) => simplify_product(std::slice::from_ref(a.as_ref()), std::slice::from_ref(b.as_ref())),
            Pow(b, n) => simplify_pow(b, *n),
            Conj(x) => simplify_conj(x),
        }
    }

    // ---- calculus ----------------------------------------------------------

    /// Explicit time derivative: `Sym` nodes are treated as constants,
    /// `Func` nodes gain a derivative order.
    pub fn time_derivative(&self) -> ScalarExpr {
        self.derive(&DeriveTarget::Time)
    }

    /// Partial derivative with respect to a commuting dynamical symbol.
    pub fn derive_sym(&self, name: &str) -> ScalarExpr {
        self.derive(&DeriveTarget::Sym(name))
    }

    /// Partial derivative with respect to the time function `name` at
    /// derivative order `order`, treated as an independent variable (as in a
    /// variational derivative with respect to a coordinate or its velocity).
    pub fn derive_func(&self, name: &str, order: u32) -> ScalarExpr {
        self.derive(&DeriveTarget::Func(name, order))
    }

    /// Total time derivative: explicit time dependence plus chain-rule
    /// contributions `(d expr / d sym) * sym_dot` for every symbol listed in
    /// `dot_map` (symbol name -> name of its time derivative symbol).
    pub fn total_time_derivative(&self, dot_map: &BTreeMap<String, String>) -> ScalarExpr {
        let mut total = self.time_derivative();
        for (sym, dot) in dot_map {
            let partial = self.derive_sym(sym);
            if !partial.is_zero() {
                total = total.add(partial.mul(ScalarExpr::sym(dot)));
            }
        }
        total
    }

    fn derive(&self, target: &DeriveTarget) -> ScalarExpr {
        match self {
            Literal(_) | Param(_) => ScalarExpr::zero(),
            Sym(n) => match target {
                DeriveTarget::Sym(t) if n == *t => ScalarExpr::one(),
                _ => ScalarExpr::zero(),
            },
            Time => match target {
                DeriveTarget::Time => ScalarExpr::one(),
                _ => ScalarExpr::zero(),
            },
            Func { name, order } => match target {
                DeriveTarget::Time => Func { name: name.clone(), order: order + 1 },
                DeriveTarget::Func(t, o) if name == *t && order == o => ScalarExpr::one(),
                _ => ScalarExpr::zero(),
            },
            Add(xs) => Add(xs.iter().map(|x| x.derive(target)).collect()).simplify(),
            Mul(xs) => {
                let mut terms = Vec::new();
                for i in 0..xs.len() {
                    let mut fs = xs.clone();
                    fs[i] = xs[i].derive(target);
                    terms.push(Mul(fs));
                }
                Add(terms).simplify()
            }
            Pow(b, n) => {
                let db = b.derive(target);
                Mul(vec![
                    Literal(Complex64::new(*n as f64, 0.0)),
                    Pow(b.clone(), n - 1),
                    db,
                ])
                .simplify()
            }
            Div(a, b) => {
                let da = a.derive(target);
                let db = b.derive(target);
                // (a' b - a b') / b^2
                let num = Add(vec![
                    Mul(vec![da, (**b).clone()]),
                    Mul(vec![Literal(Complex64::new(-1.0, 0.0)), (**a).clone(), db]),
                ]);
                Div(Box::new(num), Box::new(Pow(b.clone(), 2))).simplify()
            }
            Conj(x) => Conj(Box::new(x.derive(target))).simplify(),
        }
    }

    /// Substitute leaves (`Param`, `Sym`, `Func` by name) with replacement
    /// expressions. `Func` replacement applies only at order zero; higher
    /// orders differentiate the replacement.
    pub fn substitute(&self, rules: &impl Fn(&ScalarExpr) -> Option<ScalarExpr>) -> ScalarExpr {
        if let Some(r) = rules(self) {
            return r;
        }
        match self {
            Literal(_) | Param(_) | Sym(_) | Time => self.clone(),
            Func { name, order } if *order > 0 => {
                let base = Func { name: name.clone(), order: 0 };
                match rules(&base) {
                    Some(mut r) => {
                        for _ in 0..*order {
                            r = r.time_derivative();
                        }
                        r
                    }
                    None => self.clone(),
                }
            }
            Func { .. } => self.clone(),
            Add(xs) => Add(xs.iter().map(|x| x.substitute(rules)).collect()).simplify(),
            Mul(xs) => Mul(xs.iter().map(|x| x.substitute(rules)).collect()).simplify(),
            Pow(b, n) => Pow(Box::new(b.substitute(rules)), *n).simplify(),
            Div(a, b) => {
                Div(Box::new(a.substitute(rules)), Box::new(b.substitute(rules))).simplify()
            }
            Conj(x) => Conj(Box::new(x.substitute(rules))).simplify(),
        }
    }

    /// Resolve conjugation markers on named leaves using declared reality
    /// information, after pushing conjugation to the leaves.
    pub fn resolve_conj(&self, info: &RealityInfo) -> ScalarExpr {
        let simplified = self.simplify();
        simplified.resolve_conj_inner(info).simplify()
    }

    fn resolve_conj_inner(&self, info: &RealityInfo) -> ScalarExpr {
        match self {
            Conj(inner) => match inner.as_ref() {
                Param(n) => info.map_name(n).map_or_else(|| self.clone(), Param),
                Sym(n) => info.map_name(n).map_or_else(|| self.clone(), Sym),
                Func { name, order } => info
                    .map_name(name)
                    .map_or_else(|| self.clone(), |m| Func { name: m, order: *order }),
                other => Conj(Box::new(other.resolve_conj_inner(info))),
            },
            Add(xs) => Add(xs.iter().map(|x| x.resolve_conj_inner(info)).collect()),
            Mul(xs) => Mul(xs.iter().map(|x| x.resolve_conj_inner(info)).collect()),
            Pow(b, n) => Pow(Box::new(b.resolve_conj_inner(info)), *n),
            Div(a, b) => Div(
                Box::new(a.resolve_conj_inner(info)),
                Box::new(b.resolve_conj_inner(info)),
            ),
            _ => self.clone(),
        }
    }

    /// Names of functions referenced anywhere in the expression.
    pub fn func_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Func { name, .. } => {
                out.insert(name.clone());
            }
            Add(xs) | Mul(xs) => xs.iter().for_each(|x| x.func_names(out)),
            Pow(b, _) => b.func_names(out),
            Div(a, b) => {
                a.func_names(out);
                b.func_names(out);
            }
            Conj(x) => x.func_names(out),
            _ => {}
        }
    }

    /// Names of commuting dynamical symbols referenced in the expression.
    pub fn sym_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Sym(name) => {
                out.insert(name.clone());
            }
            Add(xs) | Mul(xs) => xs.iter().for_each(|x| x.sym_names(out)),
            Pow(b, _) => b.sym_names(out),
            Div(a, b) => {
                a.sym_names(out);
                b.sym_names(out);
            }
            Conj(x) => x.sym_names(out),
            _ => {}
        }
    }

    // ---- printing ----------------------------------------------------------

    pub fn display(&self) -> String {
        self.render(0)
    }

    fn render(&self, parent_prec: u8) -> String {
        let (text, prec) = match self {
            Literal(c) => (format_complex(*c, false), if is_composite_literal(*c) { 0 } else { 3 }),
            Param(n) | Sym(n) => (n.clone(), 3),
            Time => ("t".into(), 3),
            Func { name, order } => {
                let marks = match order {
                    0 => String::new(),
                    1..=3 => "'".repeat(*order as usize),
                    _ => format!("^({order})"),
                };
                (format!("{name}{marks}"), 3)
            }
            Add(xs) => {
                let mut s = String::new();
                for (i, x) in xs.iter().enumerate() {
                    let part = x.render(1);
                    if i == 0 {
                        s.push_str(&part);
                    } else if let Some(rest) = part.strip_prefix('-') {
                        s.push_str(" - ");
                        s.push_str(rest);
                    } else {
                        s.push_str(" + ");
                        s.push_str(&part);
                    }
                }
                (s, 0)
            }
            Mul(xs) => {
                // pull a leading -1 out as a sign
                let mut factors = xs.clone();
                let mut neg = false;
                if let Some(Literal(c)) = factors.first() {
                    if *c == Complex64::new(-1.0, 0.0) && factors.len() > 1 {
                        neg = true;
                        factors.remove(0);
                    }
                }
                let body = factors.iter().map(|x| x.render(2)).collect::<Vec<_>>().join("*");
                (if neg { format!("-{body}") } else { body }, 1)
            }
            Pow(b, n) => (format!("{}^{}", b.render(3), n), 2),
            Div(a, b) => (format!("{}/{}", a.render(2), b.render(3)), 1),
            Conj(x) => (format!("conj({})", x.render(0)), 3),
        };
        if prec < parent_prec {
            format!("({text})")
        } else {
            text
        }
    }

    // ---- evaluation --------------------------------------------------------

    pub fn eval(&self, env: &ScalarEnv, t: f64) -> Result<Complex64, EvalError> {
        match self {
            Literal(c) => Ok(*c),
            Param(n) => env
                .params
                .get(n)
                .copied()
                .ok_or_else(|| EvalError::UnboundName { name: n.clone() }),
            Sym(n) => env
                .syms
                .get(n)
                .copied()
                .ok_or_else(|| EvalError::UnboundName { name: n.clone() }),
            Time => Ok(Complex64::new(t, 0.0)),
            Func { name, order } => {
                let def = env
                    .funcs
                    .get(name)
                    .ok_or_else(|| EvalError::UnboundName { name: name.clone() })?;
                Ok(def.eval_order(*order as usize, t, env.fd_step))
            }
            Add(xs) => {
                let mut sum = Complex64::default();
                for x in xs {
                    sum += x.eval(env, t)?;
                }
                Ok(sum)
            }
            Mul(xs) => {
                let mut prod = Complex64::new(1.0, 0.0);
                for x in xs {
                    prod *= x.eval(env, t)?;
                }
                Ok(prod)
            }
            Pow(b, n) => Ok(b.eval(env, t)?.powi(*n)),
            Div(a, b) => {
                let den = b.eval(env, t)?;
                if den.norm() == 0.0 {
                    return Err(EvalError::DivisionByZero { expr: b.display() });
                }
                Ok(a.eval(env, t)? / den)
            }
            Conj(x) => Ok(x.eval(env, t)?.conj()),
        }
    }
}

enum DeriveTarget<'a> {
    Time,
    Sym(&'a str),
    Func(&'a str, u32),
}

// ---- simplification helpers ------------------------------------------------

fn simplify_add(xs: &[ScalarExpr]) -> ScalarExpr {
    let mut flat = Vec::new();
    for x in xs {
        match x.simplify() {
            Add(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }
    // collect like terms: split each into literal coefficient * rest
    let mut groups: BTreeMap<String, (Complex64, Vec<ScalarExpr>)> = BTreeMap::new();
    for term in flat {
        let (coeff, rest) = split_coefficient(term);
        let k = rest.iter().map(|f| f.key()).collect::<Vec<_>>().join("|");
        let entry = groups.entry(k).or_insert_with(|| (Complex64::default(), rest));
        entry.0 += coeff;
    }
    let mut terms = Vec::new();
    for (_, (coeff, rest)) in groups {
        if coeff.norm() == 0.0 {
            continue;
        }
        terms.push(rebuild_term(coeff, rest));
    }
    match terms.len() {
        0 => ScalarExpr::zero(),
        1 => terms.pop().unwrap(),
        _ => Add(terms),
    }
}

/// Split a (simplified) term into its literal coefficient and the remaining
/// factors in canonical order. A quotient's literal lives in its numerator,
/// so it is extracted there — otherwise `a/d` and `-a/d` would never merge.
fn split_coefficient(term: ScalarExpr) -> (Complex64, Vec<ScalarExpr>) {
    match term {
        Literal(c) => (c, Vec::new()),
        Mul(fs) => {
            let mut coeff = Complex64::new(1.0, 0.0);
            let mut rest = Vec::new();
            for f in fs {
                match f {
                    Literal(c) => coeff *= c,
                    other => rest.push(other),
                }
            }
            (coeff, rest)
        }
        Div(a, b) => {
            let (coeff, num_rest) = split_coefficient(*a);
            let numerator = rebuild_mul(Complex64::new(1.0, 0.0), num_rest);
            (coeff, vec![Div(Box::new(numerator), b)])
        }
        other => (Complex64::new(1.0, 0.0), vec![other]),
    }
}

fn rebuild_term(coeff: Complex64, rest: Vec<ScalarExpr>) -> ScalarExpr {
    // keep the literal inside a quotient's numerator so sums and products
    // canonicalize a quotient to the same shape
    if rest.len() == 1 {
        if let Div(_, _) = rest[0] {
            let (a, b) = match rest.into_iter().next().unwrap() {
                Div(a, b) => (a, b),
                _ => unreachable!(),
            };
            let (inner, num_rest) = split_coefficient(*a);
            return Div(Box::new(rebuild_mul(coeff * inner, num_rest)), b);
        }
    }
    rebuild_mul(coeff, rest)
}

fn rebuild_mul(coeff: Complex64, rest: Vec<ScalarExpr>) -> ScalarExpr {
    if rest.is_empty() {
        return Literal(coeff);
    }
    if coeff == Complex64::new(1.0, 0.0) {
        if rest.len() == 1 {
            return rest.into_iter().next().unwrap();
        }
        return Mul(rest);
    }
    let mut fs = Vec::with_capacity(rest.len() + 1);
    fs.push(Literal(coeff));
    fs.extend(rest);
    Mul(fs)
}

/// Simplify a product given as numerator factors and denominator factors.
fn simplify_product(num_in: &[ScalarExpr], den_in: &[ScalarExpr]) -> ScalarExpr {
    let mut coeff = Complex64::new(1.0, 0.0);
    let mut num: Vec<ScalarExpr> = Vec::new();
    let mut den: Vec<ScalarExpr> = Vec::new();
    let mut den_literal = Complex64::new(1.0, 0.0);
    for x in num_in {
        collect_factors(x.simplify(), false, &mut coeff, &mut den_literal, &mut num, &mut den);
    }
    for x in den_in {
        collect_factors(x.simplify(), true, &mut coeff, &mut den_literal, &mut num, &mut den);
    }
    if coeff.norm() == 0.0 {
        // zero numerator wins (the denominator obligation lives at eval time)
        return ScalarExpr::zero();
    }
    // cancel structurally equal factor pairs
    let mut remaining_den: Vec<ScalarExpr> = Vec::new();
    'outer: for d in den {
        let dk = d.key();
        for i in 0..num.len() {
            if num[i].key() == dk {
                num.remove(i);
                continue 'outer;
            }
        }
        remaining_den.push(d);
    }
    num.sort_by_key(|f| f.key());
    remaining_den.sort_by_key(|f| f.key());
    if den_literal != Complex64::new(1.0, 0.0) {
        coeff /= den_literal;
    }
    let numerator = rebuild_term(coeff, num);
    if remaining_den.is_empty() {
        numerator
    } else {
        let denominator = rebuild_term(Complex64::new(1.0, 0.0), remaining_den);
        Div(Box::new(numerator), Box::new(denominator))
    }
}

fn collect_factors(
    x: ScalarExpr,
    invert: bool,
    coeff: &mut Complex64,
    den_literal: &mut Complex64,
    num: &mut Vec<ScalarExpr>,
    den: &mut Vec<ScalarExpr>,
) {
    match x {
        Literal(c) => {
            if invert {
                *den_literal *= c;
            } else {
                *coeff *= c;
            }
        }
        Mul(fs) => {
            for f in fs {
                collect_factors(f, invert, coeff, den_literal, num, den);
            }
        }
        Div(a, b) => {
            collect_factors(*a, invert, coeff, den_literal, num, den);
            collect_factors(*b, !invert, coeff, den_literal, num, den);
        }
        other => {
            if invert {
                den.push(other);
            } else {
                num.push(other);
            }
        }
    }
}

fn simplify_pow(base: &ScalarExpr, n: i32) -> ScalarExpr {
    let b = base.simplify();
    if n == 0 {
        return ScalarExpr::one();
    }
    if n == 1 {
        return b;
    }
    match b {
        Literal(c) => Literal(c.powi(n)),
        Pow(inner, m) => simplify_pow(&inner, n.saturating_mul(m)),
        other => Pow(Box::new(other), n),
    }
}

fn simplify_conj(x: &ScalarExpr) -> ScalarExpr {
    match x.simplify() {
        Literal(c) => Literal(c.conj()),
        Time => Time,
        Conj(inner) => *inner,
        Add(xs) => Add(xs.into_iter().map(|e| simplify_conj(&e)).collect()).simplify(),
        Mul(xs) => Mul(xs.into_iter().map(|e| simplify_conj(&e)).collect()).simplify(),
        Div(a, b) => {
            Div(Box::new(simplify_conj(&a)), Box::new(simplify_conj(&b))).simplify()
        }
        Pow(b, n) => Pow(Box::new(simplify_conj(&b)), n).simplify(),
        other => Conj(Box::new(other)),
    }
}

// ---- reality information ----------------------------------------------------

/// Declared reality data for named leaves: which names are real, and which
/// pairs are mutual conjugates (`conj(a) = b` and `conj(b) = a`).
#[derive(Debug, Clone, Default)]
pub struct RealityInfo {
    real: BTreeSet<String>,
    pairs: BTreeMap<String, String>,
}

impl RealityInfo {
    pub fn mark_real(&mut self, name: &str) {
        self.real.insert(name.into());
    }

    pub fn pair(&mut self, a: &str, b: &str) {
        self.pairs.insert(a.into(), b.into());
        self.pairs.insert(b.into(), a.into());
    }

    pub fn is_real(&self, name: &str) -> bool {
        self.real.contains(name)
    }

    fn map_name(&self, name: &str) -> Option<String> {
        if self.real.contains(name) {
            return Some(name.to_string());
        }
        self.pairs.get(name).cloned()
    }
}

// ---- numeric environment -----------------------------------------------------

type TimeClosure = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A named function of time: a value closure plus optional exact derivative
/// closures. Derivative orders beyond the registered ones fall back to
/// central finite differences applied to the highest registered order.
#[derive(Clone)]
pub struct FuncDef {
    value: TimeClosure,
    derivs: Vec<TimeClosure>,
}

impl FuncDef {
    pub fn new(value: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value), derivs: Vec::new() }
    }

    pub fn with_derivative(
        mut self,
        deriv: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.derivs.push(Arc::new(deriv));
        self
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(move |_| c).with_derivative(|_| Complex64::default())
    }

    fn eval_order(&self, order: usize, t: f64, h: f64) -> Complex64 {
        if order == 0 {
            return (self.value)(t);
        }
        if order <= self.derivs.len() {
            return (self.derivs[order - 1])(t);
        }
        // central finite difference on the previous order
        let up = self.eval_order(order - 1, t + h, h);
        let down = self.eval_order(order - 1, t - h, h);
        (up - down) / Complex64::new(2.0 * h, 0.0)
    }
}

impl std::fmt::Debug for FuncDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FuncDef(value + {} derivative closures)", self.derivs.len())
    }
}

/// Numeric bindings for evaluation: parameters, commuting symbols and named
/// functions of time.
#[derive(Debug, Clone, Default)]
pub struct ScalarEnv {
    pub params: BTreeMap<String, Complex64>,
    pub syms: BTreeMap<String, Complex64>,
    pub funcs: BTreeMap<String, FuncDef>,
    pub fd_step: f64,
}

impl ScalarEnv {
    pub fn new() -> Self {
        Self { fd_step: FD_STEP, ..Default::default() }
    }

    pub fn with_param(mut self, name: &str, value: Complex64) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    pub fn with_func(mut self, name: &str, def: FuncDef) -> Self {
        self.funcs.insert(name.into(), def);
        self
    }

    pub fn set_sym(&mut self, name: &str, value: Complex64) {
        self.syms.insert(name.into(), value);
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound name `{name}` in numeric evaluation")]
    UnboundName { name: String },
    #[error("division by zero while evaluating denominator `{expr}`")]
    DivisionByZero { expr: String },
}

// ---- formatting --------------------------------------------------------------

fn is_composite_literal(c: Complex64) -> bool {
    (c.re != 0.0 && c.im != 0.0) || c.re < 0.0 || c.im < 0.0
}

/// Render a complex literal: `2`, `-1.5`, `i`, `-2i`, `(1+2i)`.
pub fn format_complex(c: Complex64, parens_if_composite: bool) -> String {
    let text = if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        if c.im == 1.0 {
            "i".into()
        } else if c.im == -1.0 {
            "-i".into()
        } else {
            format!("{}i", c.im)
        }
    } else {
        let im = if c.im == 1.0 {
            "+i".into()
        } else if c.im == -1.0 {
            "-i".into()
        } else if c.im > 0.0 {
            format!("+{}i", c.im)
        } else {
            format!("{}i", c.im)
        };
        let body = format!("{}{}", c.re, im);
        if parens_if_composite {
            return format!("({body})");
        }
        body
    };
    text
}
