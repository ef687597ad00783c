//! End-to-end acceptance suite. Each test exercises one advertised
//! capability of the workbench from the public API only, prints a single
//! pass/fail line with its measured runtime, and enforces a runtime budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fermi_hj_core::dynamics::{extract_component_odes, integrate};
use fermi_hj_core::grid::TimeGrid;
use fermi_hj_core::hj::{reduce, reduce_hpf, verify_candidate, InteractingClosedForm, TimeFn};
use fermi_hj_core::mechanics::{euler_lagrange, legendre, DeriveConvention, ElSign};
use fermi_hj_core::model::{parse_model, parse_text, ModelSpec};
use fermi_hj_core::xform::{
    build_canonical_data, check_finite_canonical, check_matrix_form, check_wave_relation,
};
use fermi_hj_core::{
    mask_indices, mul_sign, FuncDef, GeneratorBasis, GrassmannElement, GrassmannPoly, Parity,
    ScalarEnv, ScalarExpr, SymbolRole,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {path}: {e}"))
}

fn interacting_spec() -> ModelSpec {
    parse_model(&fixture("interacting.fhj")).expect("interacting model parses")
}

fn simple_spec() -> ModelSpec {
    parse_model(&fixture("simple.fhj")).expect("simple model parses")
}

/// Structural polynomial equality: the difference simplifies to zero.
fn poly_eq(a: &GrassmannPoly, b: &GrassmannPoly) -> bool {
    a.sub(b).expect("same table").map_coeffs(|c| c.simplify()).is_zero()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Run `body` with timing, print one pass/fail line, and enforce `budget`.
fn criterion(number: u32, label: &str, budget: Duration, body: impl FnOnce()) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) if elapsed <= budget => {
            println!("criterion {number} ({label}): PASS in {elapsed:.2?} (budget {budget:?})");
        }
        Ok(()) => {
            println!(
                "criterion {number} ({label}): FAIL in {elapsed:.2?} (exceeded budget {budget:?})"
            );
            panic!("criterion {number} exceeded its runtime budget");
        }
        Err(cause) => {
            println!("criterion {number} ({label}): FAIL in {elapsed:.2?}");
            std::panic::resume_unwind(cause);
        }
    }
}

// ---------------------------------------------------------------------------
// 1. Canonical derivation for the interacting two-fermion model
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_interacting_canonical_structure() {
    criterion(1, "interacting canonical structure", Duration::from_secs(1), || {
        let spec = interacting_spec();
        let canon = legendre(&spec, DeriveConvention::Left).expect("legendre");
        let table = &canon.table;
        let c1 = table.index_in_group(0, SymbolRole::Coordinate).unwrap();
        let c2 = table.index_in_group(1, SymbolRole::Coordinate).unwrap();

        // momenta: pi_psi1 = -i psi2, pi_psi2 = -i psi1
        let minus_i = ScalarExpr::imag_unit().neg();
        assert_eq!(canon.fermion_momenta.len(), 2);
        let (name1, p1) = &canon.fermion_momenta[0];
        let (name2, p2) = &canon.fermion_momenta[1];
        assert_eq!(name1, "pi_psi1");
        assert_eq!(name2, "pi_psi2");
        assert!(
            poly_eq(p1, &GrassmannPoly::from_term(table, minus_i.clone(), &[c2])),
            "first momentum must be -i times the second coordinate, got {}",
            p1.pretty()
        );
        assert!(
            poly_eq(p2, &GrassmannPoly::from_term(table, minus_i, &[c1])),
            "second momentum must be -i times the first coordinate, got {}",
            p2.pretty()
        );

        // H = -k psi1 psi2, with no dependence on the fermionic momenta
        let expected_h =
            GrassmannPoly::from_term(table, ScalarExpr::param("k").neg(), &[c1, c2]);
        assert!(
            poly_eq(&canon.hamiltonian, &expected_h),
            "hamiltonian must be -k times the coordinate bilinear, got {}",
            canon.hamiltonian.pretty()
        );
        assert!(canon.h_independent_of_fermionic_momenta);
        assert_eq!(canon.constraints.len(), 2);
        assert!(canon.boson_momenta.is_empty());
    });
}

// ---------------------------------------------------------------------------
// 2. One-fermion model end to end: derivation plus generating function
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_simple_model_end_to_end() {
    criterion(2, "one-fermion model end to end", Duration::from_secs(1), || {
        let spec = simple_spec();
        let canon = legendre(&spec, DeriveConvention::Left).expect("legendre");
        let table = &canon.table;
        let coord = table.index_in_group(0, SymbolRole::Coordinate).unwrap();
        let momentum = table.index_in_group(0, SymbolRole::Momentum).unwrap();

        // momentum is minus the coordinate; the primary constraint is their sum
        let minus_one = ScalarExpr::one().neg();
        let (name, p) = &canon.fermion_momenta[0];
        assert_eq!(name, "pi_psi");
        assert!(poly_eq(p, &GrassmannPoly::from_term(table, minus_one, &[coord])));
        let expected_constraint = GrassmannPoly::symbol(table, momentum)
            .add(&GrassmannPoly::symbol(table, coord))
            .unwrap();
        assert_eq!(canon.constraints.len(), 1);
        assert!(poly_eq(&canon.constraints[0], &expected_constraint));

        // the equation of motion normalizes to a pure first derivative
        let els = euler_lagrange(&spec, DeriveConvention::Left, ElSign::Minus).unwrap();
        assert_eq!(els.len(), 1);
        assert!(els[0].is_fermionic);
        let vel = spec.table.index_in_group(0, SymbolRole::Velocity).unwrap();
        assert!(
            poly_eq(&els[0].lhs, &GrassmannPoly::symbol(&spec.table, vel)),
            "equation of motion must reduce to a vanishing velocity, got {}",
            els[0].lhs.pretty()
        );

        // generating function: one scalar slot plus one bilinear slot
        let reduced = reduce(&spec, DeriveConvention::Left, ElSign::Minus, true).unwrap();
        let ansatz = &reduced.system.ansatz;
        assert_eq!(ansatz.mu, 1);
        let rho = ansatz.rho_index(0);
        let psi = ansatz.psi_index(0);
        let bilinear = (1u64 << rho) | (1u64 << psi);
        let names: Vec<(u64, String)> =
            ansatz.coeff_names.iter().map(|(m, n)| (*m, n.clone())).collect();
        assert_eq!(names, vec![(0, "s0".to_string()), (bilinear, "a".to_string())]);

        // constraint solve binds the coordinate to a * rho
        let binding = &reduced.bindings[&psi];
        let expected_binding =
            GrassmannPoly::from_term(&reduced.system.table, ScalarExpr::func("a"), &[rho]);
        assert!(
            poly_eq(binding, &expected_binding),
            "coordinate binding must be the bilinear coefficient times the constant momentum, \
             got {}",
            binding.pretty()
        );

        // the constant-coordinate relation is a^2 * rho
        assert_eq!(reduced.relations.len(), 1);
        let rel = &reduced.relations[0];
        let env3 = ScalarEnv::new().with_func("a", FuncDef::constant(c(3.0, 0.0)));
        let rhs_value = rel.rhs.to_element(&env3, 0.0).unwrap();
        assert!((rhs_value.coefficient(&[rho]) - c(9.0, 0.0)).norm() <= 1e-12);
        assert_eq!(rhs_value.term_count(), 1);

        // a constant bilinear coefficient satisfies every matched equation and
        // obligation; a sloped one violates the derivative obligation
        let env_const = ScalarEnv::new()
            .with_func("s0", FuncDef::constant(c(0.0, 0.0)))
            .with_func("a", FuncDef::constant(c(3.0, 0.0)));
        let env_slope = ScalarEnv::new()
            .with_func("s0", FuncDef::constant(c(0.0, 0.0)))
            .with_func(
                "a",
                FuncDef::new(|t| c(3.0 + 0.5 * t, 0.0)).with_derivative(|_| c(0.5, 0.0)),
            );
        let mut max_const = 0.0f64;
        let mut max_slope = 0.0f64;
        for expr in reduced
            .matched
            .iter()
            .map(|m| &m.expr)
            .chain(rel.obligations.iter().map(|o| &o.expr))
        {
            max_const = max_const.max(expr.eval(&env_const, 0.0).unwrap().norm());
            max_slope = max_slope.max(expr.eval(&env_slope, 0.0).unwrap().norm());
        }
        assert!(max_const <= 1e-12, "constant coefficient must satisfy all equations");
        assert!(
            max_slope > 0.1,
            "a time-dependent bilinear coefficient must violate an obligation"
        );
        assert!(!rel.obligations.is_empty());

        // the reduction halves the free odd constants
        assert_eq!(reduced.free_constants_before, 2);
        assert_eq!(reduced.free_constants_after, 1);
    });
}

// ---------------------------------------------------------------------------
// 3. Equation-of-motion residuals and integrator convergence
// ---------------------------------------------------------------------------

/// Substitute analytic phase solutions (and their exact derivatives) into an
/// equation-of-motion polynomial and return the worst coefficient magnitude.
fn analytic_residual(
    spec: &ModelSpec,
    lhs: &GrassmannPoly,
    env: &ScalarEnv,
    basis: &Arc<GeneratorBasis>,
    t: f64,
    k: f64,
) -> f64 {
    let half = k / 2.0;
    let phase1 = Complex64::cis(half * t);
    let phase2 = Complex64::cis(-half * t);
    let g0 = GrassmannElement::generator(Arc::clone(basis), 0).unwrap();
    let g1 = GrassmannElement::generator(Arc::clone(basis), 1).unwrap();
    let subs = |index: usize| -> GrassmannElement {
        let table = &spec.table;
        let c1 = table.index_in_group(0, SymbolRole::Coordinate).unwrap();
        let c2 = table.index_in_group(1, SymbolRole::Coordinate).unwrap();
        let v1 = table.index_in_group(0, SymbolRole::Velocity).unwrap();
        let v2 = table.index_in_group(1, SymbolRole::Velocity).unwrap();
        if index == c1 {
            g0.scale(phase1)
        } else if index == c2 {
            g1.scale(phase2)
        } else if index == v1 {
            g0.scale(phase1 * c(0.0, half))
        } else if index == v2 {
            g1.scale(phase2 * c(0.0, -half))
        } else {
            panic!("unexpected symbol index {index} in equation of motion");
        }
    };
    let mut acc = GrassmannElement::zero(Arc::clone(basis));
    for (mask, coeff) in lhs.terms() {
        let mut term =
            GrassmannElement::scalar(Arc::clone(basis), coeff.eval(env, t).unwrap());
        for index in mask_indices(*mask) {
            term = term.mul(&subs(index)).unwrap();
        }
        acc = acc.add(&term).unwrap();
    }
    acc.max_abs()
}

/// Worst deviation of the integrated trajectory from the analytic phases.
fn integration_error(spec: &ModelSpec, env: &ScalarEnv, grid: TimeGrid, k: f64) -> f64 {
    let els = euler_lagrange(spec, DeriveConvention::Left, ElSign::Minus).unwrap();
    let system = extract_component_odes(spec, &els).unwrap();
    let (basis, initial) = system.default_initial().unwrap();
    let traj = integrate(&system, &basis, &initial, grid, env).unwrap();
    let times = traj.grid.times();
    let mut worst = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        for slot in 0..2 {
            let rate = if slot == 0 { k / 2.0 } else { -k / 2.0 };
            let expected = GrassmannElement::generator(Arc::clone(&basis), slot)
                .unwrap()
                .scale(Complex64::cis(rate * t));
            worst = worst.max(traj.value_at(slot, i).max_abs_diff(&expected).unwrap());
        }
    }
    worst
}

#[test]
fn criterion_3_dynamics_residuals_and_convergence() {
    criterion(3, "dynamics residuals and convergence", Duration::from_secs(5), || {
        let spec = interacting_spec();
        let k = 1.0;
        let env = ScalarEnv::new().with_param("k", c(k, 0.0));

        // analytic counter-rotating phases satisfy the equations of motion
        // at every grid point to exact-identity tolerance
        let els = euler_lagrange(&spec, DeriveConvention::Left, ElSign::Minus).unwrap();
        let basis = GeneratorBasis::new(vec!["xi1", "xi2"]).unwrap();
        let times = TimeGrid::new(0.0, 10.0, 2001).unwrap().times();
        let mut worst = 0.0f64;
        for eq in &els {
            for &t in &times {
                worst = worst.max(analytic_residual(&spec, &eq.lhs, &env, &basis, t, k));
            }
        }
        assert!(worst <= 1e-12, "analytic equation-of-motion residual {worst:e}");

        // fixed-step integration at dt = 1e-3 recovers the phases to 1e-8
        let fine = integration_error(&spec, &env, TimeGrid::new(0.0, 10.0, 10001).unwrap(), k);
        assert!(fine <= 1e-8, "integration error {fine:e} at dt = 1e-3");

        // halving the step shrinks the error by roughly two to the fourth
        let coarse =
            integration_error(&spec, &env, TimeGrid::new(0.0, 10.0, 201).unwrap(), k);
        let halved =
            integration_error(&spec, &env, TimeGrid::new(0.0, 10.0, 401).unwrap(), k);
        let ratio = coarse / halved;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "step-halving error ratio {ratio} outside the fourth-order window \
             (coarse {coarse:e}, halved {halved:e})"
        );
    });
}

// ---------------------------------------------------------------------------
// 4. Closed-form candidate verification on a grid
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_closed_form_verification() {
    criterion(4, "closed-form verification", Duration::from_secs(5), || {
        let spec = interacting_spec();
        let cf = InteractingClosedForm::fixture(1.0);
        let reduced = reduce(&spec, DeriveConvention::Left, ElSign::Minus, true).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 2001).unwrap();
        let outcome = verify_candidate(&spec, &reduced, &cf.env(), grid).unwrap();
        assert!(
            outcome.max_residual <= 1e-9,
            "worst family residual {:e}",
            outcome.max_residual
        );
        assert!(!outcome.residuals.is_empty());
        for family in &outcome.residuals {
            assert!(
                family.max_residual <= 1e-9,
                "{}/{} residual {:e}",
                family.family,
                family.name,
                family.max_residual
            );
        }
        assert_eq!(outcome.free_constants_before, 4);
        assert_eq!(outcome.free_constants_after, 2);
        let boundary = outcome.boundary_consistency.expect("kinetic metric present");
        assert!(boundary <= 1e-12, "boundary identity residual {boundary:e}");
    });
}

// ---------------------------------------------------------------------------
// 5. Reduced generating function: offset coefficient and independence
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_reduced_generating_function() {
    criterion(5, "reduced generating function", Duration::from_secs(2), || {
        let spec = interacting_spec();
        let reduced = reduce(&spec, DeriveConvention::Left, ElSign::Minus, true).unwrap();
        let hpf = reduce_hpf(&reduced).unwrap();
        let ansatz = &reduced.system.ansatz;
        let rho_pair = (1u64 << ansatz.rho_index(0)) | (1u64 << ansatz.rho_index(1));
        let rho_coeff = hpf.rho_form.coefficient(rho_pair).simplify();
        let psi_coeff = hpf.psi_form_coeff.clone().expect("two-fermion coefficient");

        let sample_times = [0.0, 1.0, 2.5, 5.0, 10.0];
        let check = |cf: &InteractingClosedForm, label: &str| {
            let env = cf.env();
            let v = cf.v();
            for &t in &sample_times {
                let r = rho_coeff.eval(&env, t).unwrap();
                assert!(
                    (r - c(cf.u, 0.0)).norm() <= 1e-10,
                    "{label}: constant-momenta bilinear coefficient {r} at t = {t}, \
                     expected the offset {}",
                    cf.u
                );
                let p = psi_coeff.eval(&env, t).unwrap();
                assert!(
                    (p - c(cf.u / v, 0.0)).norm() <= 1e-10,
                    "{label}: coordinate bilinear coefficient {p} at t = {t}, \
                     expected offset over squared amplitude {}",
                    cf.u / v
                );
            }
        };

        // reference member: both coefficients equal +0.7 exactly
        let base = InteractingClosedForm::fixture(1.0);
        check(&base, "reference");
        let env = base.env();
        let p0 = psi_coeff.eval(&env, 0.0).unwrap();
        assert!(p0.re > 0.0, "coordinate bilinear coefficient must come out positive");
        assert!((p0 - c(0.7, 0.0)).norm() <= 1e-10);

        // independence from the profile slot and the quartic slot
        let mut flat = base.clone();
        flat.s30 = TimeFn::constant(c(0.9, 0.0));
        check(&flat, "constant profile");
        let mut wavy = base.clone();
        wavy.s30 = TimeFn::new(
            |t| c(0.3 + 0.2 * t.cos(), 0.0),
            |t| c(-0.2 * t.sin(), 0.0),
        );
        check(&wavy, "cosine profile");
        let mut quartic = base.clone();
        quartic.s3 = TimeFn::new(
            |t| c(0.5 + 0.3 * t.sin(), 0.0),
            |t| c(0.3 * t.cos(), 0.0),
        );
        check(&quartic, "time-dependent quartic slot");

        // the coefficient tracks offset / squared amplitude
        let mut scaled = base.clone();
        scaled.a = c(2.0, 1.0); // squared amplitude 5
        check(&scaled, "rescaled amplitude");
        let mut shifted = base.clone();
        shifted.u = -1.3;
        check(&shifted, "negative offset");
    });
}

// ---------------------------------------------------------------------------
// 6. Canonical transformation to constants and the matrix form
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_canonical_transformation() {
    criterion(6, "canonical transformation and matrix form", Duration::from_secs(2), || {
        let spec = interacting_spec();
        let cf = InteractingClosedForm::fixture(1.0).gauge();

        // finite transformation identities and the wave relation, exactly
        for t in [0.0, 2.5, 5.0, 7.5, 10.0] {
            let data = build_canonical_data(&spec, &cf, t).unwrap();
            for residual in check_finite_canonical(&data)
                .unwrap()
                .into_iter()
                .chain(check_wave_relation(&data).unwrap())
            {
                assert!(
                    residual.residual <= 1e-12,
                    "{} residual {:e} at t = {t}",
                    residual.name,
                    residual.residual
                );
            }
        }

        // diagonal matrix form on the full grid
        let grid = TimeGrid::new(0.0, 10.0, 2001).unwrap();
        let report = check_matrix_form(&spec, &cf, grid).unwrap();
        assert!(
            (report.rate1 - c(0.0, -0.5)).norm() <= 1e-9,
            "first diagonal rate {}",
            report.rate1
        );
        assert!(
            (report.rate2 - c(0.0, 0.5)).norm() <= 1e-9,
            "second diagonal rate {} must equal i k / 2",
            report.rate2
        );
        assert!(report.max_rate_drift <= 1e-9);
        assert!(report.sigma_residual <= 1e-9, "sigma residual {:e}", report.sigma_residual);
        assert_eq!(report.h_psi_max, 0.0, "products with the Hamiltonian must vanish exactly");
        assert!(
            report.evolution_residual <= 1e-9,
            "evolution residual {:e}",
            report.evolution_residual
        );
        assert!(
            (report.hbar - c(2.0, 0.0)).norm() <= 1e-12,
            "scale constant {}",
            report.hbar
        );
    });
}

// ---------------------------------------------------------------------------
// 7. Algebra law suite with an independent sign oracle
// ---------------------------------------------------------------------------

fn random_element(rng: &mut ChaCha8Rng, basis: &Arc<GeneratorBasis>) -> GrassmannElement {
    let n = basis.len();
    let mut out = GrassmannElement::zero(Arc::clone(basis));
    for mask in 0u64..(1 << n) {
        if rng.random_range(0.0..1.0) < 0.4 {
            let coeff = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let term =
                GrassmannElement::from_term(Arc::clone(basis), &mask_indices(mask), coeff)
                    .unwrap();
            out = out.add(&term).unwrap();
        }
    }
    out
}

fn random_homogeneous(
    rng: &mut ChaCha8Rng,
    basis: &Arc<GeneratorBasis>,
    parity: Parity,
) -> GrassmannElement {
    let n = basis.len();
    let want_odd = parity == Parity::Odd;
    let mut out = GrassmannElement::zero(Arc::clone(basis));
    for mask in 0u64..(1 << n) {
        if (mask.count_ones() % 2 == 1) == want_odd && rng.random_range(0.0..1.0) < 0.5 {
            let coeff = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let term =
                GrassmannElement::from_term(Arc::clone(basis), &mask_indices(mask), coeff)
                    .unwrap();
            out = out.add(&term).unwrap();
        }
    }
    out
}

/// Product sign by explicit transposition counting on the concatenated index
/// sequence; `None` when a generator repeats.
fn oracle_sign(a: u64, b: u64) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut seq = mask_indices(a);
    seq.extend(mask_indices(b));
    let mut sign = 1.0;
    let n = seq.len();
    for i in 0..n {
        for j in 0..n.saturating_sub(1 + i) {
            if seq[j] > seq[j + 1] {
                seq.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    Some(sign)
}

#[test]
fn criterion_7_algebra_law_suite() {
    criterion(7, "algebra law suite", Duration::from_secs(10), || {
        let tol = 1e-12;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
        let bases: Vec<Arc<GeneratorBasis>> = (1..=6)
            .map(|n| {
                GeneratorBasis::new((0..n).map(|i| format!("g{i}")).collect::<Vec<_>>())
                    .unwrap()
            })
            .collect();

        for _case in 0..1000 {
            let basis = &bases[rng.random_range(0..bases.len())];
            let n = basis.len();
            let a = random_element(&mut rng, basis);
            let b = random_element(&mut rng, basis);
            let d = random_element(&mut rng, basis);

            // associativity
            let left = a.mul(&b).unwrap().mul(&d).unwrap();
            let right = a.mul(&b.mul(&d).unwrap()).unwrap();
            assert!(left.max_abs_diff(&right).unwrap() <= tol, "associativity");

            // graded commutativity on homogeneous factors
            let pa = if rng.random_range(0.0..1.0) < 0.5 { Parity::Even } else { Parity::Odd };
            let pb = if rng.random_range(0.0..1.0) < 0.5 { Parity::Even } else { Parity::Odd };
            let ah = random_homogeneous(&mut rng, basis, pa);
            let bh = random_homogeneous(&mut rng, basis, pb);
            let swap_sign =
                if pa == Parity::Odd && pb == Parity::Odd { -1.0 } else { 1.0 };
            let forward = ah.mul(&bh).unwrap();
            let backward = bh.mul(&ah).unwrap().scale(c(swap_sign, 0.0));
            assert!(forward.max_abs_diff(&backward).unwrap() <= tol, "graded commutativity");

            // graded derivatives: nilpotency and the graded product rule
            let index = rng.random_range(0..n);
            assert!(
                a.derive_left(index).unwrap().derive_left(index).unwrap().max_abs() <= tol,
                "left derivative nilpotency"
            );
            assert!(
                a.derive_right(index).unwrap().derive_right(index).unwrap().max_abs() <= tol,
                "right derivative nilpotency"
            );
            let leibniz_sign = if pa == Parity::Odd { -1.0 } else { 1.0 };
            let lhs = ah.mul(&b).unwrap().derive_left(index).unwrap();
            let rhs = ah
                .derive_left(index)
                .unwrap()
                .mul(&b)
                .unwrap()
                .add(&ah.mul(&b.derive_left(index).unwrap()).unwrap().scale(c(leibniz_sign, 0.0)))
                .unwrap();
            assert!(lhs.max_abs_diff(&rhs).unwrap() <= tol, "graded product rule");

            // conjugation reverses products and is an involution
            let conj_product = a.mul(&b).unwrap().conjugate();
            let reversed = b.conjugate().mul(&a.conjugate()).unwrap();
            assert!(conj_product.max_abs_diff(&reversed).unwrap() <= tol, "conjugation order");
            assert!(a.conjugate().conjugate().max_abs_diff(&a).unwrap() <= tol, "involution");

            // exponential and even inverse against the identity
            let even = random_homogeneous(&mut rng, basis, Parity::Even);
            let one = GrassmannElement::one(Arc::clone(basis));
            let exp_prod =
                even.exp().unwrap().mul(&even.scale(c(-1.0, 0.0)).exp().unwrap()).unwrap();
            assert!(exp_prod.max_abs_diff(&one).unwrap() <= tol, "exponential inverse");
            let shift = GrassmannElement::scalar(
                Arc::clone(basis),
                c(1.0 + rng.random_range(0.0..1.0), rng.random_range(-0.25..0.25)),
            );
            let invertible = even.nilpotent_part().add(&shift).unwrap();
            let inv_prod = invertible.invert_even().unwrap().mul(&invertible).unwrap();
            assert!(inv_prod.max_abs_diff(&one).unwrap() <= tol, "even inverse");
        }

        // independent sign oracle over every monomial pair
        for basis in &bases {
            let n = basis.len();
            for a_mask in 0u64..(1 << n) {
                let ea = GrassmannElement::from_term(
                    Arc::clone(basis),
                    &mask_indices(a_mask),
                    c(1.0, 0.0),
                )
                .unwrap();
                for b_mask in 0u64..(1 << n) {
                    let eb = GrassmannElement::from_term(
                        Arc::clone(basis),
                        &mask_indices(b_mask),
                        c(1.0, 0.0),
                    )
                    .unwrap();
                    let product = ea.mul(&eb).unwrap();
                    match oracle_sign(a_mask, b_mask) {
                        None => assert!(
                            product.is_zero(),
                            "repeated generator must annihilate {a_mask:#b} * {b_mask:#b}"
                        ),
                        Some(sign) => {
                            assert_eq!(
                                mul_sign(a_mask, b_mask),
                                sign,
                                "sign table disagrees with transposition counting \
                                 at {a_mask:#b} * {b_mask:#b}"
                            );
                            assert_eq!(product.term_count(), 1);
                            let coeff = product.coefficient_mask(a_mask | b_mask);
                            assert!(
                                (coeff - c(sign, 0.0)).norm() == 0.0,
                                "monomial product coefficient {coeff} vs oracle {sign}"
                            );
                        }
                    }
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 8. Model text round-trip and exact lowering
// ---------------------------------------------------------------------------

fn random_expr(rng: &mut ChaCha8Rng, depth: u32, atoms: &[String], coords: &[String]) -> String {
    let atom_choice = |rng: &mut ChaCha8Rng| -> String {
        match rng.random_range(0..5) {
            0 => ["1", "2", "0.5", "1.5", "3", "0.25"][rng.random_range(0..6)].to_string(),
            1 => "i".to_string(),
            2 => "t".to_string(),
            3 => atoms[rng.random_range(0..atoms.len())].clone(),
            _ => format!("d({})", coords[rng.random_range(0..coords.len())]),
        }
    };
    if depth == 0 || rng.random_range(0.0..1.0) < 0.3 {
        return atom_choice(rng);
    }
    let a = random_expr(rng, depth - 1, atoms, coords);
    let b = random_expr(rng, depth - 1, atoms, coords);
    match rng.random_range(0..5) {
        0 => format!("-{a}"),
        1 => format!("{a} + {b}"),
        2 => format!("{a} - {b}"),
        3 => format!("{a} * {b}"),
        _ => format!("({a})"),
    }
}

fn random_model_text(rng: &mut ChaCha8Rng, case: usize) -> String {
    let n_params = rng.random_range(0..=2usize);
    let n_fermions = rng.random_range(1..=3usize);
    let n_bosons = rng.random_range(0..=1usize);
    let mut text = format!("model m{case} {{\n");
    let mut atoms = Vec::new();
    let mut coords = Vec::new();
    for p in 0..n_params {
        let kind = if rng.random_range(0.0..1.0) < 0.5 { "real" } else { "complex" };
        text.push_str(&format!("  param p{p} : {kind};\n"));
        atoms.push(format!("p{p}"));
    }
    for q in 0..n_bosons {
        text.push_str(&format!("  boson q{q};\n"));
        atoms.push(format!("q{q}"));
        coords.push(format!("q{q}"));
    }
    let pair_first_two = n_fermions >= 2 && rng.random_range(0.0..1.0) < 0.5;
    for f in 0..n_fermions {
        if pair_first_two && f == 0 {
            text.push_str("  fermion f0 conj f1;\n");
        } else if pair_first_two && f == 1 {
            text.push_str("  fermion f1 conj f0;\n");
        } else {
            text.push_str(&format!("  fermion f{f};\n"));
        }
        atoms.push(format!("f{f}"));
        coords.push(format!("f{f}"));
    }
    let body = random_expr(rng, 4, &atoms, &coords);
    // vary the layout so lexing is exercised beyond the canonical rendering
    let body = if case % 3 == 0 { body.replace(" + ", "\n    + ") } else { body };
    text.push_str(&format!("  lagrangian {{ {body} }}\n}}\n"));
    text
}

#[test]
fn criterion_8_model_text_round_trip() {
    criterion(8, "model text round-trip", Duration::from_secs(2), || {
        // shipped fixtures round-trip and re-render verbatim
        for name in ["interacting.fhj", "simple.fhj"] {
            let text = fixture(name);
            let first = parse_text(&text).unwrap_or_else(|e| panic!("{name}: {e:?}"));
            let rendered = first.render();
            let second = parse_text(&rendered)
                .unwrap_or_else(|e| panic!("{name} re-parse: {e:?}"));
            assert!(first.structurally_equals(&second), "{name} round-trip");
            assert_eq!(second.render(), rendered, "{name} rendering must be stable");
        }

        // randomized models: parse, render, re-parse, compare
        let mut rng = ChaCha8Rng::seed_from_u64(0x0dd_ba11);
        for case in 0..500 {
            let text = random_model_text(&mut rng, case);
            let first = parse_text(&text)
                .unwrap_or_else(|e| panic!("case {case} failed to parse: {e:?}\n{text}"));
            let rendered = first.render();
            let second = parse_text(&rendered).unwrap_or_else(|e| {
                panic!("case {case} failed to re-parse: {e:?}\n{rendered}")
            });
            assert!(
                first.structurally_equals(&second),
                "case {case} round-trip\noriginal:\n{text}\nrendered:\n{rendered}"
            );
            assert_eq!(second.render(), rendered, "case {case} rendering must be stable");
        }

        // the interacting fixture lowers to the exact expected polynomial
        let spec = interacting_spec();
        let table = &spec.table;
        let c1 = table.index_in_group(0, SymbolRole::Coordinate).unwrap();
        let c2 = table.index_in_group(1, SymbolRole::Coordinate).unwrap();
        let v1 = table.index_in_group(0, SymbolRole::Velocity).unwrap();
        let v2 = table.index_in_group(1, SymbolRole::Velocity).unwrap();
        let i = ScalarExpr::imag_unit();
        let expected = GrassmannPoly::from_term(table, i.clone(), &[c1, v2])
            .add(&GrassmannPoly::from_term(table, i, &[c2, v1]))
            .unwrap()
            .add(&GrassmannPoly::from_term(table, ScalarExpr::param("k"), &[c1, c2]))
            .unwrap();
        assert!(
            poly_eq(&spec.lagrangian, &expected),
            "lowered polynomial was {}",
            spec.lagrangian.pretty()
        );
        assert!(spec.validate().iter().all(|d| !matches!(
            d.severity,
            fermi_hj_core::model::Severity::Error
        )));
    });
}
