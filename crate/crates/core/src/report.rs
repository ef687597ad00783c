//! Stage reports: structured results of each workbench command with a
//! deterministic JSON form (sorted keys) and a human-readable text form.
//! Every report carries the tool version, an echo of the run configuration,
//! the residual checks with their tolerances, and the stage payload.

use crate::dynamics::ComponentTrajectory;
use crate::grid::TimeGrid;
use crate::hj::{HJSystem, HpfReduction, ReducedSystem, VerifyOutcome};
use crate::mechanics::{CanonicalSystem, DeriveConvention, ElEquation, ElSign};
use crate::xform::{IdentityResidual, MatrixFormReport};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// One named residual compared against a tolerance.
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Echo of the run configuration, reproduced verbatim in every report.
#[derive(Clone)]
pub struct ConfigEcho {
    pub model: String,
    pub path: String,
    pub params: BTreeMap<String, Complex64>,
    pub grid: Option<TimeGrid>,
    pub convention: DeriveConvention,
    pub el_sign: ElSign,
    pub tol_grid: f64,
    pub tol_exact: f64,
}

pub fn convention_str(c: DeriveConvention) -> &'static str {
    match c {
        DeriveConvention::Left => "left",
        DeriveConvention::Right => "right",
    }
}

pub fn el_sign_str(s: ElSign) -> &'static str {
    match s {
        ElSign::Plus => "+",
        ElSign::Minus => "-",
    }
}

fn complex_json(c: Complex64) -> Value {
    json!({ "re": c.re, "im": c.im })
}

impl ConfigEcho {
    fn to_json(&self) -> Value {
        let params: BTreeMap<&String, Value> =
            self.params.iter().map(|(k, v)| (k, complex_json(*v))).collect();
        json!({
            "model": self.model,
            "path": self.path,
            "params": params,
            "grid": self.grid.map(|g| json!({ "t0": g.t0, "t1": g.t1, "points": g.points })),
            "convention": convention_str(self.convention),
            "el_sign": el_sign_str(self.el_sign),
            "tolerance": { "grid": self.tol_grid, "exact": self.tol_exact },
        })
    }

    fn text_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("model: {} ({})", self.model, self.path)];
        if !self.params.is_empty() {
            let parts: Vec<String> = self
                .params
                .iter()
                .map(|(k, v)| format!("{k} = {}", crate::scalar::format_complex(*v, false)))
                .collect();
            lines.push(format!("params: {}", parts.join(", ")));
        }
        if let Some(g) = self.grid {
            lines.push(format!("grid: [{}, {}] x {}", g.t0, g.t1, g.points));
        }
        lines.push(format!(
            "convention: {}   el-sign: {}",
            convention_str(self.convention),
            el_sign_str(self.el_sign)
        ));
        lines.push(format!(
            "tolerance: grid {:e}, exact {:e}",
            self.tol_grid, self.tol_exact
        ));
        lines
    }
}

/// A finished stage result ready for serialization.
pub struct Report {
    pub command: String,
    config: ConfigEcho,
    data: Value,
    sections: Vec<(String, Vec<String>)>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.residual))
    }

    /// Deterministic JSON value; objects serialize with sorted keys.
    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "residual": c.residual,
                    "tolerance": c.tolerance,
                    "passed": c.passed(),
                })
            })
            .collect();
        let failures: Vec<Value> = self
            .checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| json!({ "name": c.name, "residual": c.residual, "tolerance": c.tolerance }))
            .collect();
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config.to_json(),
            "data": self.data,
            "checks": checks,
            "failures": failures,
            "status": if self.passed() { "ok" } else { "tolerance_exceeded" },
        })
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes =
            serde_json::to_string_pretty(&self.to_json()).expect("report serializes").into_bytes();
        bytes.push(b'\n');
        bytes
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("fermi-hj {} - {}\n", env!("CARGO_PKG_VERSION"), self.command));
        for line in self.config.text_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        for (title, lines) in &self.sections {
            out.push_str(&format!("\n== {title} ==\n"));
            for line in lines {
                out.push_str(line);
                out.push('\n');
            }
        }
        if !self.checks.is_empty() {
            out.push_str("\n== checks ==\n");
            for c in &self.checks {
                let mark = if c.passed() { "ok  " } else { "FAIL" };
                out.push_str(&format!(
                    "{mark} {}  residual {:e}  (tol {:e})\n",
                    c.name, c.residual, c.tolerance
                ));
            }
        }
        out.push_str(&format!(
            "\nstatus: {}\n",
            if self.passed() { "ok" } else { "tolerance_exceeded" }
        ));
        out
    }
}

/// Report for the derivation stage: momenta, constraints, Hamiltonian, and
/// the equations of motion.
pub fn derive_report(
    config: ConfigEcho,
    canon: &CanonicalSystem,
    equations: &[ElEquation],
) -> Report {
    let momenta: BTreeMap<&String, String> =
        canon.fermion_momenta.iter().map(|(n, p)| (n, p.pretty())).collect();
    let boson_momenta: BTreeMap<&String, String> =
        canon.boson_momenta.iter().map(|(n, e)| (n, e.display())).collect();
    let constraints: Vec<String> = canon.constraints.iter().map(|c| c.pretty()).collect();
    let eqs: BTreeMap<&String, String> =
        equations.iter().map(|e| (&e.variable, e.lhs.pretty())).collect();
    let data = json!({
        "momenta": momenta,
        "boson_momenta": boson_momenta,
        "constraints": constraints,
        "hamiltonian": canon.hamiltonian.pretty(),
        "hamiltonian_momentum_free": canon.h_independent_of_fermionic_momenta,
        "equations_of_motion": eqs,
    });
    let mut sections = Vec::new();
    let mut lines: Vec<String> =
        canon.fermion_momenta.iter().map(|(n, p)| format!("{n} = {}", p.pretty())).collect();
    lines.extend(canon.boson_momenta.iter().map(|(n, e)| format!("{n} = {}", e.display())));
    sections.push(("momenta".to_string(), lines));
    if !canon.constraints.is_empty() {
        sections.push((
            "constraints".to_string(),
            canon.constraints.iter().map(|c| format!("{} = 0", c.pretty())).collect(),
        ));
    }
    sections.push((
        "hamiltonian".to_string(),
        vec![
            format!("H = {}", canon.hamiltonian.pretty()),
            format!(
                "independent of fermionic momenta: {}",
                canon.h_independent_of_fermionic_momenta
            ),
        ],
    ));
    sections.push((
        "equations of motion".to_string(),
        equations.iter().map(|e| format!("[{}]  {} = 0", e.variable, e.lhs.pretty())).collect(),
    ));
    Report { command: "derive".to_string(), config, data, sections, checks: Vec::new() }
}

/// Report for the integration stage: grid echo, final state components, and
/// the per-equation trajectory residual maxima as checks.
pub fn integrate_report(
    config: ConfigEcho,
    traj: &ComponentTrajectory,
    residuals: &[(String, f64)],
) -> Report {
    let tol = config.tol_grid;
    let last = traj.grid.points - 1;
    let mut finals: BTreeMap<String, BTreeMap<String, Value>> = BTreeMap::new();
    for (slot, name) in traj.names.iter().enumerate() {
        let mut comps = BTreeMap::new();
        for (mask, series) in traj.components(slot) {
            let names: Vec<&str> = crate::algebra::mask_indices(*mask)
                .into_iter()
                .map(|i| traj.basis.name(i))
                .collect();
            let key = if names.is_empty() { "1".to_string() } else { names.join("*") };
            comps.insert(key, complex_json(series[last]));
        }
        finals.insert(name.clone(), comps);
    }
    let data = json!({
        "states": traj.names,
        "final_values": finals,
    });
    let sections = vec![(
        "final state".to_string(),
        traj.names
            .iter()
            .enumerate()
            .map(|(slot, name)| format!("{name}(t1) = {}", traj.value_at(slot, last).display()))
            .collect(),
    )];
    let checks = residuals
        .iter()
        .map(|(name, r)| Check {
            name: format!("eom/{name}"),
            residual: *r,
            tolerance: tol,
        })
        .collect();
    Report { command: "integrate".to_string(), config, data, sections, checks }
}

/// Report for the assembly stage: the generating-function ansatz, the
/// constraint and constant equations, and the scalar evolution equation.
pub fn hj_assemble_report(config: ConfigEcho, system: &HJSystem) -> Report {
    let constraints: BTreeMap<&String, String> =
        system.constraint_eqs.iter().map(|(n, p)| (n, p.pretty())).collect();
    let constants: BTreeMap<&String, String> =
        system.odd_constant_eqs.iter().map(|e| (&e.name, e.poly.pretty())).collect();
    let data = json!({
        "ansatz": system.ansatz.poly.pretty(),
        "constraint_equations": constraints,
        "odd_constant_equations": constants,
        "hj_equation": system.hj_pde.pretty(),
        "odd_constant_count": system.odd_constant_eqs.len(),
    });
    let sections = vec![
        ("ansatz".to_string(), vec![format!("S = {}", system.ansatz.poly.pretty())]),
        (
            "constraint equations".to_string(),
            system
                .constraint_eqs
                .iter()
                .map(|(n, p)| format!("[{n}]  {} = 0", p.pretty()))
                .collect(),
        ),
        (
            "constant equations".to_string(),
            system
                .odd_constant_eqs
                .iter()
                .map(|e| format!("[{}]  {} = 0", e.name, e.poly.pretty()))
                .collect(),
        ),
        (
            "evolution equation".to_string(),
            vec![format!("{} = 0", system.hj_pde.pretty())],
        ),
    ];
    Report { command: "hj assemble".to_string(), config, data, sections, checks: Vec::new() }
}

/// Report for the reduction stage: coordinate bindings, constant relations
/// with their constancy obligations, the matched scalar equations, and the
/// reduced Hamiltonian.
pub fn hj_reduce_report(
    config: ConfigEcho,
    reduced: &ReducedSystem,
    hpf: &HpfReduction,
) -> Report {
    let table = &reduced.system.table;
    let bindings: BTreeMap<String, String> = reduced
        .bindings
        .iter()
        .map(|(idx, p)| (table.name(*idx).to_string(), p.pretty()))
        .collect();
    let relations: BTreeMap<&String, Value> = reduced
        .relations
        .iter()
        .map(|r| {
            let obligations: BTreeMap<&String, String> =
                r.obligations.iter().map(|o| (&o.label, o.expr.display())).collect();
            (&r.name, json!({ "rhs": r.rhs.pretty(), "obligations": obligations }))
        })
        .collect();
    let matched: BTreeMap<String, String> =
        reduced.matched.iter().map(|m| (m.label(), m.expr.display())).collect();
    let data = json!({
        "bindings": bindings,
        "relations": relations,
        "matched_equations": matched,
        "pinned_zero": reduced.pinned_zero,
        "free_odd_constants": {
            "before": reduced.free_constants_before,
            "after": reduced.free_constants_after,
        },
        "reduced_hamiltonian": {
            "constants_form": hpf.rho_form.pretty(),
            "coordinate_form_coefficient": hpf.psi_form_coeff.as_ref().map(|e| e.display()),
        },
    });
    let mut sections = vec![(
        "coordinate bindings".to_string(),
        reduced
            .bindings
            .iter()
            .map(|(idx, p)| format!("{} = {}", table.name(*idx), p.pretty()))
            .collect::<Vec<_>>(),
    )];
    let mut rel_lines = Vec::new();
    for r in &reduced.relations {
        rel_lines.push(format!("{} = {}", r.name, r.rhs.pretty()));
        for o in &r.obligations {
            rel_lines.push(format!("  constancy {}: {} = 0", o.label, o.expr.display()));
        }
    }
    sections.push(("constant relations".to_string(), rel_lines));
    sections.push((
        "matched equations".to_string(),
        reduced
            .matched
            .iter()
            .map(|m| format!("[{}]  {} = 0", m.label(), m.expr.display()))
            .collect(),
    ));
    sections.push((
        "reduction summary".to_string(),
        vec![
            format!("pinned to zero: {}", reduced.pinned_zero.join(", ")),
            format!(
                "free odd constants: {} -> {}",
                reduced.free_constants_before, reduced.free_constants_after
            ),
            format!("reduced H (constants form) = {}", hpf.rho_form.pretty()),
            match &hpf.psi_form_coeff {
                Some(e) => format!("reduced H (coordinate form) = ({}) * product", e.display()),
                None => "reduced H (coordinate form): n/a".to_string(),
            },
        ],
    ));
    Report { command: "hj reduce".to_string(), config, data, sections, checks: Vec::new() }
}

/// Report for the verification stage: every family residual becomes a check
/// against the grid tolerance; the boundary identity, when defined, is
/// checked against the exact tolerance.
pub fn hj_verify_report(config: ConfigEcho, outcome: &VerifyOutcome) -> Report {
    let tol = config.tol_grid;
    let tol_exact = config.tol_exact;
    let mut checks: Vec<Check> = outcome
        .residuals
        .iter()
        .map(|r| Check {
            name: format!("{}/{}", r.family, r.name),
            residual: r.max_residual,
            tolerance: tol,
        })
        .collect();
    if let Some(b) = outcome.boundary_consistency {
        checks.push(Check {
            name: "boundary/total-variation".to_string(),
            residual: b,
            tolerance: tol_exact,
        });
    }
    let data = json!({
        "free_odd_constants": {
            "before": outcome.free_constants_before,
            "after": outcome.free_constants_after,
        },
        "boundary_consistency": outcome.boundary_consistency,
        "max_residual": outcome.max_residual,
    });
    let sections = vec![(
        "summary".to_string(),
        vec![
            format!(
                "free odd constants: {} -> {}",
                outcome.free_constants_before, outcome.free_constants_after
            ),
            format!("max residual: {:e}", outcome.max_residual),
        ],
    )];
    Report { command: "hj verify".to_string(), config, data, sections, checks }
}

/// Report for the canonical-transformation stage: finite-identity and wave
/// residuals against the exact tolerance, matrix-form grid residuals against
/// the grid tolerance, and the identified rates and scale constant.
pub fn xform_check_report(
    config: ConfigEcho,
    finite: &[IdentityResidual],
    wave: &[IdentityResidual],
    matrix: &MatrixFormReport,
) -> Report {
    let tol = config.tol_grid;
    let tol_exact = config.tol_exact;
    let mut checks = Vec::new();
    for r in finite.iter().chain(wave) {
        checks.push(Check {
            name: format!("identity/{}", r.name),
            residual: r.residual,
            tolerance: tol_exact,
        });
    }
    checks.push(Check {
        name: "matrix/diagonal-rates".to_string(),
        residual: matrix.sigma_residual,
        tolerance: tol,
    });
    checks.push(Check {
        name: "matrix/rate-drift".to_string(),
        residual: matrix.max_rate_drift,
        tolerance: tol,
    });
    checks.push(Check {
        name: "matrix/hamiltonian-product".to_string(),
        residual: matrix.h_psi_max,
        tolerance: tol_exact,
    });
    checks.push(Check {
        name: "matrix/evolution".to_string(),
        residual: matrix.evolution_residual,
        tolerance: tol,
    });
    let data = json!({
        "rates": { "first": complex_json(matrix.rate1), "second": complex_json(matrix.rate2) },
        "scale_constant": complex_json(matrix.hbar),
    });
    let sections = vec![(
        "matrix form".to_string(),
        vec![
            format!(
                "diagonal rates: {} , {}",
                crate::scalar::format_complex(matrix.rate1, false),
                crate::scalar::format_complex(matrix.rate2, false)
            ),
            format!(
                "scale constant: {}",
                crate::scalar::format_complex(matrix.hbar, false)
            ),
        ],
    )];
    Report { command: "xform check".to_string(), config, data, sections, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hj::InteractingClosedForm;
    use crate::mechanics::{euler_lagrange, legendre};
    use crate::model::parse_model;

    const INTERACTING: &str = "model interacting { param k : real; fermion psi1 conj psi2; \
                               fermion psi2; lagrangian { i * (psi1 * d(psi2) + psi2 * d(psi1)) \
                               + k * psi1 * psi2 } }";

    fn echo() -> ConfigEcho {
        let mut params = BTreeMap::new();
        params.insert("k".to_string(), Complex64::new(1.0, 0.0));
        ConfigEcho {
            model: "interacting".to_string(),
            path: "fixtures/interacting.fhj".to_string(),
            params,
            grid: Some(TimeGrid::new(0.0, 10.0, 2001).unwrap()),
            convention: DeriveConvention::Left,
            el_sign: ElSign::Minus,
            tol_grid: 1e-9,
            tol_exact: 1e-12,
        }
    }

    #[test]
    fn derive_report_shows_momenta_and_hamiltonian() {
        let spec = parse_model(INTERACTING).unwrap();
        let canon = legendre(&spec, DeriveConvention::Left).unwrap();
        let els = euler_lagrange(&spec, DeriveConvention::Left, ElSign::Minus).unwrap();
        let report = derive_report(echo(), &canon, &els);
        assert!(report.passed());
        let text = report.to_text();
        assert!(text.contains("pi_psi1 = -i*psi2"), "text:\n{text}");
        assert!(text.contains("pi_psi2 = -i*psi1"), "text:\n{text}");
        assert!(text.contains("H = -k*psi1*psi2"), "text:\n{text}");
        assert!(text.contains("independent of fermionic momenta: true"));
        let v = report.to_json();
        assert_eq!(v["data"]["hamiltonian"], "-k*psi1*psi2");
        assert_eq!(v["data"]["hamiltonian_momentum_free"], true);
        assert_eq!(v["status"], "ok");
        assert_eq!(v["command"], "derive");
        assert_eq!(v["config"]["params"]["k"]["re"], 1.0);
    }

    #[test]
    fn json_bytes_are_deterministic_and_sorted() {
        let spec = parse_model(INTERACTING).unwrap();
        let canon = legendre(&spec, DeriveConvention::Left).unwrap();
        let els = euler_lagrange(&spec, DeriveConvention::Left, ElSign::Minus).unwrap();
        let a = derive_report(echo(), &canon, &els).to_json_bytes();
        let b = derive_report(echo(), &canon, &els).to_json_bytes();
        assert_eq!(a, b);
        let s = String::from_utf8(a).unwrap();
        // object keys appear sorted
        let ck = s.find("\"checks\"").unwrap();
        let cmd = s.find("\"command\"").unwrap();
        let cfg = s.find("\"config\"").unwrap();
        let dat = s.find("\"data\"").unwrap();
        assert!(ck < cmd && cmd < cfg && cfg < dat);
        assert!(s.ends_with("}\n"));
    }

    #[test]
    fn failing_check_lists_the_offender() {
        let spec = parse_model(INTERACTING).unwrap();
        let cf = InteractingClosedForm::fixture(1.0);
        let reduced =
            crate::hj::reduce(&spec, DeriveConvention::Left, ElSign::Minus, true).unwrap();
        let mut bad = cf.clone();
        bad.tau_rate += 0.05;
        let grid = TimeGrid::new(0.0, 5.0, 101).unwrap();
        let outcome =
            crate::hj::verify_candidate(&spec, &reduced, &bad.env(), grid).unwrap();
        let report = hj_verify_report(echo(), &outcome);
        assert!(!report.passed());
        let v = report.to_json();
        assert_eq!(v["status"], "tolerance_exceeded");
        let failures = v["failures"].as_array().unwrap();
        assert!(!failures.is_empty());
        for f in failures {
            assert!(f["name"].as_str().unwrap().starts_with("hj/"));
            assert!(f["residual"].as_f64().unwrap() > 1e-9);
        }
        let text = report.to_text();
        assert!(text.contains("FAIL hj/"), "text:\n{text}");
        assert!(text.contains("status: tolerance_exceeded"));
    }

    #[test]
    fn verify_report_passes_on_the_fixture() {
        let spec = parse_model(INTERACTING).unwrap();
        let cf = InteractingClosedForm::fixture(1.0);
        let reduced =
            crate::hj::reduce(&spec, DeriveConvention::Left, ElSign::Minus, true).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 2001).unwrap();
        let outcome = crate::hj::verify_candidate(&spec, &reduced, &cf.env(), grid).unwrap();
        let report = hj_verify_report(echo(), &outcome);
        assert!(report.passed());
        assert!(report.checks.iter().any(|c| c.name == "boundary/total-variation"));
        assert!(report.max_residual() <= 1e-9);
        let v = report.to_json();
        assert_eq!(v["data"]["free_odd_constants"]["before"], 4);
        assert_eq!(v["data"]["free_odd_constants"]["after"], 2);
    }

    #[test]
    fn reduce_report_renders_bindings_and_counts() {
        let spec = parse_model(INTERACTING).unwrap();
        let reduced =
            crate::hj::reduce(&spec, DeriveConvention::Left, ElSign::Minus, true).unwrap();
        let hpf = crate::hj::reduce_hpf(&reduced).unwrap();
        let report = hj_reduce_report(echo(), &reduced, &hpf);
        let v = report.to_json();
        assert_eq!(v["data"]["free_odd_constants"]["before"], 4);
        assert_eq!(v["data"]["free_odd_constants"]["after"], 2);
        assert_eq!(
            v["data"]["pinned_zero"],
            serde_json::json!(["sx12", "sx21"])
        );
        let bindings = v["data"]["bindings"].as_object().unwrap();
        assert!(bindings.contains_key("psi1") && bindings.contains_key("psi2"));
        let text = report.to_text();
        assert!(text.contains("free odd constants: 4 -> 2"));
    }

    #[test]
    fn xform_report_checks_partition_by_tolerance() {
        let spec = parse_model(INTERACTING).unwrap();
        let cf = InteractingClosedForm::fixture(1.0).gauge();
        let data = crate::xform::build_canonical_data(&spec, &cf, 0.0).unwrap();
        let finite = crate::xform::check_finite_canonical(&data).unwrap();
        let wave = crate::xform::check_wave_relation(&data).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 501).unwrap();
        let matrix = crate::xform::check_matrix_form(&spec, &cf, grid).unwrap();
        let report = xform_check_report(echo(), &finite, &wave, &matrix);
        assert!(report.passed());
        let v = report.to_json();
        assert!((v["data"]["scale_constant"]["re"].as_f64().unwrap() - 2.0).abs() <= 1e-12);
        assert!((v["data"]["rates"]["first"]["im"].as_f64().unwrap() + 0.5).abs() <= 1e-9);
        assert!((v["data"]["rates"]["second"]["im"].as_f64().unwrap() - 0.5).abs() <= 1e-9);
        let exact: Vec<&Check> =
            report.checks.iter().filter(|c| c.tolerance == 1e-12).collect();
        assert!(exact.iter().any(|c| c.name.starts_with("identity/")));
        assert!(exact.iter().any(|c| c.name == "matrix/hamiltonian-product"));
    }
}
