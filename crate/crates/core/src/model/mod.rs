//! Text format for declaring models: parameters, bosonic and fermionic
//! coordinates with conjugation pairing, and a Lagrangian. Parsing yields a
//! [`ModelSpec`] holding the Lagrangian as a symbolic Grassmann polynomial
//! over the mechanics symbol table, with semantic diagnostics collected for
//! [`ModelSpec::validate`].

mod ast;
mod lexer;
mod lower;
mod parser;

pub use ast::{BosonDecl, Expr, FermionDecl, ModelAst, ParamDecl, ParamKind};
pub use lexer::Span;
pub use lower::{literal_coefficient, metric_equals};
pub use parser::parse_text;

use crate::poly::GrassmannPoly;
use crate::scalar::RealityInfo;
use crate::symbols::{FermionInfo, OddSymbolTable};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

/// One parser or validation message with its source position.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.col, sev, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{diagnostic}")]
pub struct ModelError {
    pub diagnostic: Diagnostic,
}

/// A parsed and lowered model: declarations, the Lagrangian polynomial over
/// the mechanics table (coordinates, velocities, momenta), the recognized
/// kinetic metric if any, and the reality bookkeeping for scalar
/// coefficients.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub params: Vec<(String, ParamKind)>,
    pub bosons: Vec<String>,
    pub fermions: Vec<FermionInfo>,
    pub table: Arc<OddSymbolTable>,
    pub lagrangian: GrassmannPoly,
    /// Entries g[a][b] from a kinetic part (i/2) g^{ab} psi_a psi-dot_b, when
    /// every velocity term fits that shape with constant real g.
    pub kinetic_metric: Option<Vec<Vec<f64>>>,
    /// Which scalar names are real and which are conjugate-paired.
    pub reality: RealityInfo,
    /// True when at least one fermion declared an explicit conjugate partner.
    pub reality_declared: bool,
    diagnostics: Vec<Diagnostic>,
    pub ast: ModelAst,
}

impl ModelSpec {
    /// Semantic diagnostics gathered while lowering: parity and velocity
    /// linearity violations (errors), identically-zero terms (warnings),
    /// reality and metric status (info).
    pub fn validate(&self) -> Vec<Diagnostic> {
        self.diagnostics.clone()
    }

    /// True when validation produced at least one error-severity diagnostic.
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    /// Number of fermionic degrees of freedom.
    pub fn mu(&self) -> usize {
        self.fermions.len()
    }

    /// Deterministic text rendering; re-parsing it yields a structurally
    /// equal syntax tree.
    pub fn pretty_print(&self) -> String {
        self.ast.render()
    }
}

/// Parse model text into a [`ModelSpec`]. Fails on lexical or syntax errors,
/// unknown or reserved identifiers, and inconsistent conjugation
/// declarations; semantic findings that leave the model representable are
/// collected into the spec's diagnostics instead.
pub fn parse_model(text: &str) -> Result<ModelSpec, ModelError> {
    let ast = parser::parse_text(text).map_err(|diagnostic| ModelError { diagnostic })?;
    lower::lower(ast).map_err(|diagnostic| ModelError { diagnostic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ScalarExpr;
    use num_complex::Complex64;

    const INTERACTING: &str = "model interacting {\n  param k : real;\n  fermion psi1 conj \
                               psi2;\n  fermion psi2;\n  lagrangian { i * (psi1 * d(psi2) + psi2 \
                               * d(psi1)) + k * psi1 * psi2 }\n}\n";

    #[test]
    fn interacting_model_lowers_to_expected_polynomial() {
        let spec = parse_model(INTERACTING).unwrap();
        assert_eq!(spec.mu(), 2);
        assert!(!spec.has_errors());
        let t = &spec.table;
        let psi1 = t.index_of("psi1").unwrap();
        let psi2 = t.index_of("psi2").unwrap();
        let dpsi1 = t.index_of("psi1'").unwrap();
        let dpsi2 = t.index_of("psi2'").unwrap();
        // i psi1 psi2' + i psi2 psi1' + k psi1 psi2, in canonical index order.
        let c12 = literal_coefficient(&spec.lagrangian, &[psi1, dpsi2]).unwrap();
        let c21 = literal_coefficient(&spec.lagrangian, &[psi2, dpsi1]).unwrap();
        assert!((c12 - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((c21 - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let mask = (1u64 << psi1) | (1 << psi2);
        let kcoeff = spec.lagrangian.coefficient(mask);
        assert_eq!(kcoeff.key(), ScalarExpr::param("k").key());
        assert_eq!(spec.lagrangian.terms().len(), 3);
    }

    #[test]
    fn kinetic_metric_recognized_for_interacting_model() {
        let spec = parse_model(INTERACTING).unwrap();
        let g = spec.kinetic_metric.clone().expect("metric recognized");
        assert!(metric_equals(&g, &[vec![0.0, 2.0], vec![2.0, 0.0]], 1e-12));
        let msgs: Vec<String> = spec.validate().iter().map(|d| d.message.clone()).collect();
        assert!(msgs.iter().any(|m| m.contains("reality check passed")));
    }

    #[test]
    fn simple_model_lowers_and_skips_reality() {
        let spec = parse_model("model simple { fermion psi; lagrangian { psi * d(psi) } }")
            .unwrap();
        assert!(!spec.has_errors());
        assert!(spec.kinetic_metric.is_none());
        let c = literal_coefficient(&spec.lagrangian, &[0, 1]).unwrap();
        assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let msgs: Vec<String> = spec.validate().iter().map(|d| d.message.clone()).collect();
        assert!(msgs.iter().any(|m| m.contains("reality check skipped")));
    }

    #[test]
    fn source_order_is_preserved_before_canonicalization() {
        let spec = parse_model(
            "model m { fermion psi1 conj psi2; fermion psi2; lagrangian { psi2 * psi1 } }",
        )
        .unwrap();
        let c = literal_coefficient(&spec.lagrangian, &[0, 1]).unwrap();
        assert!((c - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn repeated_fermion_warns_and_cancels() {
        let spec =
            parse_model("model m { fermion psi; lagrangian { psi * psi } }").unwrap();
        assert!(spec.lagrangian.is_zero());
        let diags = spec.validate();
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Warning && d.message.contains("identically zero")));
    }

    #[test]
    fn nonlinear_velocity_is_an_error_diagnostic() {
        let spec =
            parse_model("model m { fermion psi; lagrangian { d(psi) * d(psi) } }").unwrap();
        assert!(spec.has_errors());
        assert!(spec
            .validate()
            .iter()
            .any(|d| d.message.contains("nonlinear fermionic velocity")));
    }

    #[test]
    fn odd_parity_lagrangian_is_an_error_diagnostic() {
        let spec = parse_model("model m { fermion psi; lagrangian { psi } }").unwrap();
        assert!(spec.has_errors());
        assert!(spec.validate().iter().any(|d| d.message.contains("even parity")));
    }

    #[test]
    fn unknown_identifier_fails_with_position() {
        let e = parse_model("model m { fermion psi; lagrangian { psi * d(psi) + q } }")
            .unwrap_err();
        assert!(e.diagnostic.message.contains("unknown identifier `q`"));
        assert_eq!(e.diagnostic.line, 1);
        assert!(e.diagnostic.col > 1);
    }

    #[test]
    fn syntax_error_reports_position() {
        let e = parse_model("model m {\n  fermion psi\n  lagrangian { psi } }").unwrap_err();
        assert_eq!(e.diagnostic.line, 3);
    }

    #[test]
    fn reserved_names_rejected() {
        let e = parse_model("model m { fermion i; lagrangian { 1 } }").unwrap_err();
        assert!(e.diagnostic.message.contains("reserved"));
    }

    #[test]
    fn one_sided_backward_conj_declaration_pairs_symmetrically() {
        let spec = parse_model(
            "model m { fermion psi1; fermion psi2 conj psi1; lagrangian { i * psi1 * d(psi2) + \
             i * psi2 * d(psi1) } }",
        )
        .unwrap();
        let t = &spec.table;
        let a = t.index_of("psi1").unwrap();
        let b = t.index_of("psi2").unwrap();
        assert_eq!(t.conj_target(a).index, b);
        assert_eq!(t.conj_target(b).index, a);
        assert!(spec.reality_declared);
    }

    #[test]
    fn conflicting_conj_declarations_fail() {
        let e = parse_model(
            "model m { fermion a conj b; fermion b conj c; fermion c; lagrangian { 1 } }",
        )
        .unwrap_err();
        assert!(e.diagnostic.message.contains("conflicting conjugation"));
    }

    #[test]
    fn round_trip_is_structurally_stable() {
        for src in [
            INTERACTING,
            "model simple { fermion psi; lagrangian { psi * d(psi) } }",
            "model b { boson q; param m : real; lagrangian { 0.5 * m * d(q) * d(q) - q * q } }",
            "model p { fermion x; lagrangian { -(x * d(x)) + 2 * x * d(x) } }",
            "model t { fermion x; lagrangian { t * x * d(x) } }",
        ] {
            let first = parse_model(src).unwrap();
            let printed = first.pretty_print();
            let second = parse_model(&printed).unwrap();
            assert!(
                first.ast.structurally_equals(&second.ast),
                "round trip changed structure for {src}\nprinted:\n{printed}"
            );
            assert_eq!(printed, second.pretty_print());
        }
    }

    #[test]
    fn boson_terms_become_time_functions() {
        let spec = parse_model(
            "model b { boson q; param m : real; lagrangian { 0.5 * m * d(q) * d(q) } }",
        )
        .unwrap();
        assert!(!spec.has_errors());
        let c = spec.lagrangian.coefficient(0);
        let expected = ScalarExpr::real(0.5)
            .mul(ScalarExpr::param("m"))
            .mul(ScalarExpr::func_order("q", 1))
            .mul(ScalarExpr::func_order("q", 1));
        assert_eq!(c.key(), expected.key());
    }

    #[test]
    fn duplicate_lagrangian_fails() {
        let e = parse_model("model m { fermion x; lagrangian { 1 } lagrangian { 2 } }")
            .unwrap_err();
        assert!(e.diagnostic.message.contains("duplicate `lagrangian`"));
    }
}
