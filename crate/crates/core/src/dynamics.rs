//! Component dynamics: expand odd-valued trajectories over monomials of
//! constant odd generators, turn Euler-Lagrange equations into an explicit
//! first-order system for the component functions, integrate it with a
//! fixed-step fourth-order Runge-Kutta scheme, and evaluate residuals of the
//! original equations along a trajectory.

use crate::algebra::{mask_indices, AlgebraError, GeneratorBasis, GrassmannElement};
use crate::grid::{map_indexed, GridError, TimeGrid};
use crate::mechanics::ElEquation;
use crate::model::ModelSpec;
use crate::poly::{GrassmannPoly, PolyError};
use crate::scalar::{EvalError, FuncDef, ScalarEnv, ScalarExpr};
use crate::symbols::{OddSymbolTable, SymbolRole};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum DynError {
    #[error("cannot extract component equations: {reason}")]
    Unsupported { reason: String },
    #[error(
        "equation for `{variable}` is not solvable for the velocities: {reason}"
    )]
    VelocityUnsolvable { variable: String, reason: String },
    #[error("state value for `{variable}` must have {expected} parity components")]
    BadParity { variable: String, expected: &'static str },
    #[error("initial data expects {expected} values, got {got}")]
    BadInitialCount { expected: usize, got: usize },
    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },
    #[error("trajectory has {got} stored points, expected {expected}")]
    BadTrajectoryLength { expected: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

enum SystemKind {
    /// First-order fermionic system: velocities = inv_matrix * (-remainder).
    Fermionic {
        /// inv_matrix[b][e]: weight of equation e in the solved velocity b.
        inv_matrix: Vec<Vec<Complex64>>,
        /// Velocity-free part of each equation, over the mechanics table.
        remainders: Vec<GrassmannPoly>,
    },
    /// Second-order bosonic system reduced to (q, q') pairs; accelerations
    /// as scalar expressions in the coordinate functions and time.
    Bosonic { accelerations: Vec<ScalarExpr> },
}

/// Explicit component ODE system extracted from equations of motion.
pub struct OdeSystem {
    pub table: Arc<OddSymbolTable>,
    /// One name per state slot: fermion coordinates, or bosonic coordinates
    /// followed by their velocities.
    pub state_names: Vec<String>,
    /// Mechanics-table coordinate index per fermionic state slot.
    coordinates: Vec<usize>,
    bosons: Vec<String>,
    kind: SystemKind,
}

/// Sampled component data: per state variable, a map from odd-generator
/// monomial mask to the series of complex values, together with the series
/// of time derivatives produced by the equations (not finite differences).
pub struct ComponentTrajectory {
    pub basis: Arc<GeneratorBasis>,
    pub grid: TimeGrid,
    pub names: Vec<String>,
    values: Vec<BTreeMap<u64, Vec<Complex64>>>,
    derivs: Vec<BTreeMap<u64, Vec<Complex64>>>,
}

fn invert_matrix(a: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let n = a.len();
    let mut m: Vec<Vec<Complex64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::default()
                }
            }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i][col].norm().partial_cmp(&m[j][col].norm()).expect("finite")
        })?;
        if m[pivot][col].norm() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f.norm() > 0.0 {
                    for k in 0..2 * n {
                        let sub = f * m[col][k];
                        m[row][k] -= sub;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Build the explicit component system from equations of motion. Fermionic
/// models must be linear in the velocities with constant coefficients;
/// bosonic models must have diagonal unit acceleration after normalization.
/// Models mixing both kinds are not supported here.
pub fn extract_component_odes(
    spec: &ModelSpec,
    equations: &[ElEquation],
) -> Result<OdeSystem, DynError> {
    let table = &spec.table;
    let mu = spec.mu();
    let n_bosons = spec.bosons.len();
    if mu > 0 && n_bosons > 0 {
        return Err(DynError::Unsupported {
            reason: "models mixing fermionic and bosonic coordinates are not supported".into(),
        });
    }
    if mu > 0 {
        let fermionic: Vec<&ElEquation> = equations.iter().filter(|e| e.is_fermionic).collect();
        if fermionic.len() != mu {
            return Err(DynError::Unsupported {
                reason: format!("expected {mu} fermionic equations, got {}", fermionic.len()),
            });
        }
        let coords = table.indices_with_role(SymbolRole::Coordinate);
        let vels = table.indices_with_role(SymbolRole::Velocity);
        let mut matrix = vec![vec![Complex64::default(); mu]; mu];
        let mut remainders = Vec::with_capacity(mu);
        for (e, eq) in fermionic.iter().enumerate() {
            let mut remainder = GrassmannPoly::zero(table);
            for (mask, coeff) in eq.lhs.terms() {
                let vel_bits: Vec<usize> = mask_indices(*mask)
                    .into_iter()
                    .filter(|i| table.role(*i) == SymbolRole::Velocity)
                    .collect();
                if vel_bits.is_empty() {
                    remainder = remainder
                        .add(&GrassmannPoly::from_term(table, coeff.clone(), &mask_indices(*mask)))
                        .expect("same table");
                    continue;
                }
                if mask.count_ones() != 1 {
                    return Err(DynError::VelocityUnsolvable {
                        variable: eq.variable.clone(),
                        reason: "a velocity appears multiplied by other odd symbols".into(),
                    });
                }
                let Some(c) = coeff.simplify().as_literal() else {
                    return Err(DynError::VelocityUnsolvable {
                        variable: eq.variable.clone(),
                        reason: "a velocity coefficient is not a numeric constant".into(),
                    });
                };
                let b = vels.iter().position(|&v| v == vel_bits[0]).expect("velocity index");
                matrix[e][b] = c;
            }
            remainders.push(remainder);
        }
        let inv_matrix = invert_matrix(&matrix).ok_or_else(|| DynError::VelocityUnsolvable {
            variable: fermionic[0].variable.clone(),
            reason: "the velocity coefficient matrix is singular".into(),
        })?;
        let state_names = spec.fermions.iter().map(|f| f.name.clone()).collect();
        return Ok(OdeSystem {
            table: Arc::clone(table),
            state_names,
            coordinates: coords,
            bosons: Vec::new(),
            kind: SystemKind::Fermionic { inv_matrix, remainders },
        });
    }
    // Bosonic: one equation per coordinate, q'' isolated with unit literal
    // coefficient after normalization.
    let mut accelerations = Vec::with_capacity(n_bosons);
    let bos_eqs: Vec<&ElEquation> = equations.iter().filter(|e| !e.is_fermionic).collect();
    if bos_eqs.len() != n_bosons {
        return Err(DynError::Unsupported {
            reason: format!("expected {n_bosons} bosonic equations, got {}", bos_eqs.len()),
        });
    }
    for (i, eq) in bos_eqs.iter().enumerate() {
        let scalar = eq.lhs.coefficient(0).simplify();
        if eq.lhs.terms().keys().any(|m| *m != 0) {
            return Err(DynError::Unsupported {
                reason: format!("bosonic equation for `{}` has odd content", eq.variable),
            });
        }
        for (j, other) in spec.bosons.iter().enumerate() {
            let c = scalar.derive_func(other, 2).simplify();
            if j == i {
                match c.as_literal() {
                    Some(v) if (v - Complex64::new(1.0, 0.0)).norm() <= 1e-12 => {}
                    _ => {
                        return Err(DynError::VelocityUnsolvable {
                            variable: eq.variable.clone(),
                            reason: "acceleration coefficient is not the unit constant".into(),
                        })
                    }
                }
            } else if !c.is_zero() {
                return Err(DynError::VelocityUnsolvable {
                    variable: eq.variable.clone(),
                    reason: format!("equation couples to the acceleration of `{other}`"),
                });
            }
        }
        let name = spec.bosons[i].clone();
        let drop_accel = move |e: &ScalarExpr| match e {
            ScalarExpr::Func { name: n, order } if *order == 2 && *n == name => {
                Some(ScalarExpr::zero())
            }
            _ => None,
        };
        accelerations.push(scalar.substitute(&drop_accel).neg().simplify());
    }
    let mut state_names: Vec<String> = spec.bosons.clone();
    state_names.extend(spec.bosons.iter().map(|b| format!("{b}'")));
    Ok(OdeSystem {
        table: Arc::clone(table),
        state_names,
        coordinates: Vec::new(),
        bosons: spec.bosons.clone(),
        kind: SystemKind::Bosonic { accelerations },
    })
}

impl OdeSystem {
    pub fn state_len(&self) -> usize {
        self.state_names.len()
    }

    pub fn is_fermionic(&self) -> bool {
        matches!(self.kind, SystemKind::Fermionic { .. })
    }

    /// Default initial data over a fresh generator basis: each fermionic
    /// coordinate seeded with its own generator; bosonic coordinates start
    /// at one with zero velocity.
    pub fn default_initial(
        &self,
    ) -> Result<(Arc<GeneratorBasis>, Vec<GrassmannElement>), DynError> {
        match &self.kind {
            SystemKind::Fermionic { .. } => {
                let names: Vec<String> =
                    self.state_names.iter().map(|n| format!("xi_{n}")).collect();
                let basis = GeneratorBasis::new(names)?;
                let init = (0..self.state_len())
                    .map(|i| GrassmannElement::generator(Arc::clone(&basis), i))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((basis, init))
            }
            SystemKind::Bosonic { .. } => {
                let basis = GeneratorBasis::new(Vec::<String>::new())?;
                let mut init = Vec::new();
                for name in &self.state_names {
                    let value = if name.ends_with('\'') {
                        Complex64::default()
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    init.push(GrassmannElement::scalar(Arc::clone(&basis), value));
                }
                Ok((basis, init))
            }
        }
    }

    /// Substitute state elements into a velocity-free polynomial over the
    /// mechanics table, evaluating scalar coefficients at time `t`.
    fn eval_poly(
        &self,
        poly: &GrassmannPoly,
        state: &[GrassmannElement],
        env: &ScalarEnv,
        t: f64,
        basis: &Arc<GeneratorBasis>,
    ) -> Result<GrassmannElement, DynError> {
        let mut acc = GrassmannElement::zero(Arc::clone(basis));
        for (mask, coeff) in poly.terms() {
            let c = coeff.eval(env, t)?;
            let mut term = GrassmannElement::scalar(Arc::clone(basis), c);
            for idx in mask_indices(*mask) {
                let slot = self
                    .coordinates
                    .iter()
                    .position(|&ci| ci == idx)
                    .ok_or_else(|| DynError::Unsupported {
                        reason: format!(
                            "symbol `{}` is not a dynamical coordinate",
                            self.table.name(idx)
                        ),
                    })?;
                term = term.mul(&state[slot])?;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Right-hand side of the explicit first-order system.
    fn rhs(
        &self,
        t: f64,
        state: &[GrassmannElement],
        env: &ScalarEnv,
        basis: &Arc<GeneratorBasis>,
    ) -> Result<Vec<GrassmannElement>, DynError> {
        match &self.kind {
            SystemKind::Fermionic { inv_matrix, remainders } => {
                let mut r_vals = Vec::with_capacity(remainders.len());
                for r in remainders {
                    r_vals.push(self.eval_poly(r, state, env, t, basis)?);
                }
                let mu = inv_matrix.len();
                let mut out = Vec::with_capacity(mu);
                for row in inv_matrix {
                    let mut v = GrassmannElement::zero(Arc::clone(basis));
                    for (e, w) in row.iter().enumerate() {
                        v = v.add(&r_vals[e].scale(-w))?;
                    }
                    out.push(v);
                }
                Ok(out)
            }
            SystemKind::Bosonic { accelerations } => {
                let n = accelerations.len();
                let mut env2 = env.clone();
                for (i, name) in self.bosons.iter().enumerate() {
                    let q = state[i].scalar_part();
                    let v = state[n + i].scalar_part();
                    env2 = env2
                        .with_func(name, FuncDef::new(move |_| q).with_derivative(move |_| v));
                }
                let mut out = Vec::with_capacity(2 * n);
                for i in 0..n {
                    out.push(state[n + i].clone());
                }
                for accel in accelerations {
                    let a = accel.eval(&env2, t)?;
                    out.push(GrassmannElement::scalar(Arc::clone(basis), a));
                }
                Ok(out)
            }
        }
    }
}

fn axpy(
    y: &[GrassmannElement],
    k: &[GrassmannElement],
    h: f64,
) -> Result<Vec<GrassmannElement>, DynError> {
    let f = Complex64::new(h, 0.0);
    y.iter()
        .zip(k)
        .map(|(a, b)| a.add(&b.scale(f)).map_err(DynError::from))
        .collect()
}

/// Integrate the system with classical fixed-step RK4 on the grid, storing
/// component values and equation-produced derivatives at every grid point.
pub fn integrate(
    system: &OdeSystem,
    basis: &Arc<GeneratorBasis>,
    initial: &[GrassmannElement],
    grid: TimeGrid,
    env: &ScalarEnv,
) -> Result<ComponentTrajectory, DynError> {
    if initial.len() != system.state_len() {
        return Err(DynError::BadInitialCount {
            expected: system.state_len(),
            got: initial.len(),
        });
    }
    if system.is_fermionic() {
        for (slot, value) in initial.iter().enumerate() {
            let odd_ok = value
                .terms()
                .all(|(mask, _)| mask.count_ones() % 2 == 1);
            if !odd_ok {
                return Err(DynError::BadParity {
                    variable: system.state_names[slot].clone(),
                    expected: "odd",
                });
            }
        }
    } else {
        for (slot, value) in initial.iter().enumerate() {
            let even_ok = value
                .terms()
                .all(|(mask, _)| mask.count_ones() % 2 == 0);
            if !even_ok {
                return Err(DynError::BadParity {
                    variable: system.state_names[slot].clone(),
                    expected: "even",
                });
            }
        }
    }
    let n = system.state_len();
    let mut values: Vec<BTreeMap<u64, Vec<Complex64>>> = vec![BTreeMap::new(); n];
    let mut derivs: Vec<BTreeMap<u64, Vec<Complex64>>> = vec![BTreeMap::new(); n];
    let mut state: Vec<GrassmannElement> = initial.to_vec();
    let dt = grid.dt();
    for i in 0..grid.points {
        let t = grid.time(i);
        for value in &state {
            if !value.terms().all(|(_, c)| c.re.is_finite() && c.im.is_finite()) {
                return Err(DynError::NonFinite { t });
            }
        }
        let d = system.rhs(t, &state, env, basis)?;
        for slot in 0..n {
            record(&mut values[slot], &state[slot], i);
            record(&mut derivs[slot], &d[slot], i);
        }
        if i + 1 == grid.points {
            break;
        }
        let k1 = d;
        let k2 = system.rhs(t + dt / 2.0, &axpy(&state, &k1, dt / 2.0)?, env, basis)?;
        let k3 = system.rhs(t + dt / 2.0, &axpy(&state, &k2, dt / 2.0)?, env, basis)?;
        let k4 = system.rhs(t + dt, &axpy(&state, &k3, dt)?, env, basis)?;
        let mut next = Vec::with_capacity(n);
        for slot in 0..n {
            let sum = k1[slot]
                .add(&k2[slot].scale(Complex64::new(2.0, 0.0)))?
                .add(&k3[slot].scale(Complex64::new(2.0, 0.0)))?
                .add(&k4[slot])?;
            next.push(state[slot].add(&sum.scale(Complex64::new(dt / 6.0, 0.0)))?);
        }
        state = next;
    }
    let mut traj = ComponentTrajectory {
        basis: Arc::clone(basis),
        grid,
        names: system.state_names.clone(),
        values,
        derivs,
    };
    traj.pad(grid.points);
    Ok(traj)
}

fn record(store: &mut BTreeMap<u64, Vec<Complex64>>, value: &GrassmannElement, step: usize) {
    for (mask, c) in value.terms() {
        let series = store.entry(mask).or_default();
        series.resize(step, Complex64::default());
        series.push(c);
    }
}

impl ComponentTrajectory {
    /// Build a trajectory from externally computed component series (for
    /// closed-form solutions). Every series must have one entry per grid
    /// point.
    pub fn from_samples(
        basis: Arc<GeneratorBasis>,
        grid: TimeGrid,
        names: Vec<String>,
        values: Vec<BTreeMap<u64, Vec<Complex64>>>,
        derivs: Vec<BTreeMap<u64, Vec<Complex64>>>,
    ) -> Result<Self, DynError> {
        for store in values.iter().chain(&derivs) {
            for series in store.values() {
                if series.len() != grid.points {
                    return Err(DynError::BadTrajectoryLength {
                        expected: grid.points,
                        got: series.len(),
                    });
                }
            }
        }
        Ok(Self { basis, grid, names, values, derivs })
    }

    fn pad(&mut self, points: usize) {
        for store in self.values.iter_mut().chain(self.derivs.iter_mut()) {
            for series in store.values_mut() {
                series.resize(points, Complex64::default());
            }
        }
    }

    pub fn value_at(&self, slot: usize, i: usize) -> GrassmannElement {
        assemble(&self.basis, &self.values[slot], i)
    }

    pub fn deriv_at(&self, slot: usize, i: usize) -> GrassmannElement {
        assemble(&self.basis, &self.derivs[slot], i)
    }

    pub fn components(&self, slot: usize) -> &BTreeMap<u64, Vec<Complex64>> {
        &self.values[slot]
    }

    pub fn deriv_components(&self, slot: usize) -> &BTreeMap<u64, Vec<Complex64>> {
        &self.derivs[slot]
    }

    /// Multiply the stored values (not derivatives) of one variable by a
    /// constant factor; used to study residual sensitivity.
    pub fn perturb_values(&mut self, slot: usize, factor: Complex64) {
        for series in self.values[slot].values_mut() {
            for v in series.iter_mut() {
                *v *= factor;
            }
        }
    }

    fn monomial_name(&self, mask: u64) -> String {
        if mask == 0 {
            return "1".into();
        }
        let names: Vec<&str> =
            mask_indices(mask).into_iter().map(|i| self.basis.name(i)).collect();
        names.join("*")
    }

    /// CSV rendering: a time column, then re/im columns per variable per
    /// stored monomial.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["t".to_string()];
        for (slot, name) in self.names.iter().enumerate() {
            for mask in self.values[slot].keys() {
                let m = self.monomial_name(*mask);
                header.push(format!("re({name}[{m}])"));
                header.push(format!("im({name}[{m}])"));
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for i in 0..self.grid.points {
            let mut row = vec![format!("{}", self.grid.time(i))];
            for store in &self.values {
                for series in store.values() {
                    row.push(format!("{}", series[i].re));
                    row.push(format!("{}", series[i].im));
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn assemble(
    basis: &Arc<GeneratorBasis>,
    store: &BTreeMap<u64, Vec<Complex64>>,
    i: usize,
) -> GrassmannElement {
    let mut out = GrassmannElement::zero(Arc::clone(basis));
    for (mask, series) in store {
        let term = GrassmannElement::from_term(
            Arc::clone(basis),
            &mask_indices(*mask),
            series[i],
        )
        .expect("mask valid for basis");
        out = out.add(&term).expect("same basis");
    }
    out
}

/// Maximum absolute residual of each equation along the trajectory, binding
/// coordinates to stored values and velocities to stored derivatives.
pub fn residual_check(
    system: &OdeSystem,
    equations: &[ElEquation],
    traj: &ComponentTrajectory,
    env: &ScalarEnv,
) -> Result<Vec<f64>, DynError> {
    let table = &system.table;
    let points = traj.grid.points;
    let per_point: Vec<Result<Vec<f64>, DynError>> = map_indexed(points, |i| {
        let t = traj.grid.time(i);
        let mut out = Vec::with_capacity(equations.len());
        match &system.kind {
            SystemKind::Fermionic { .. } => {
                for eq in equations {
                    let mut acc = GrassmannElement::zero(Arc::clone(&traj.basis));
                    for (mask, coeff) in eq.lhs.terms() {
                        let c = coeff.eval(env, t)?;
                        let mut term =
                            GrassmannElement::scalar(Arc::clone(&traj.basis), c);
                        for idx in mask_indices(*mask) {
                            let slot = system
                                .coordinates
                                .iter()
                                .position(|&ci| {
                                    ci == idx
                                        || table.group(ci) == table.group(idx)
                                            && table.role(idx) == SymbolRole::Velocity
                                })
                                .ok_or_else(|| DynError::Unsupported {
                                    reason: format!(
                                        "equation symbol `{}` has no trajectory data",
                                        table.name(idx)
                                    ),
                                })?;
                            let factor = if table.role(idx) == SymbolRole::Velocity {
                                traj.deriv_at(slot, i)
                            } else {
                                traj.value_at(slot, i)
                            };
                            term = term.mul(&factor)?;
                        }
                        acc = acc.add(&term)?;
                    }
                    out.push(acc.max_abs());
                }
            }
            SystemKind::Bosonic { .. } => {
                let n = system.bosons.len();
                let mut env2 = env.clone();
                for (b, name) in system.bosons.iter().enumerate() {
                    let q = traj.value_at(b, i).scalar_part();
                    let v = traj.value_at(n + b, i).scalar_part();
                    let a = traj.deriv_at(n + b, i).scalar_part();
                    env2 = env2.with_func(
                        name,
                        FuncDef::new(move |_| q)
                            .with_derivative(move |_| v)
                            .with_derivative(move |_| a),
                    );
                }
                for eq in equations {
                    let r = eq.lhs.coefficient(0).eval(&env2, t)?;
                    out.push(r.norm());
                }
            }
        }
        Ok(out)
    });
    let mut max = vec![0.0f64; equations.len()];
    for point in per_point {
        let vals = point?;
        for (m, v) in max.iter_mut().zip(vals) {
            *m = m.max(v);
        }
    }
    Ok(max)
}

/// Evaluate an observable polynomial (velocity-free, momentum-free) along a
/// fermionic trajectory, one element per grid point.
pub fn evaluate_observable(
    system: &OdeSystem,
    poly: &GrassmannPoly,
    traj: &ComponentTrajectory,
    env: &ScalarEnv,
) -> Result<Vec<GrassmannElement>, DynError> {
    let per_point: Vec<Result<GrassmannElement, DynError>> =
        map_indexed(traj.grid.points, |i| {
            let t = traj.grid.time(i);
            let state: Vec<GrassmannElement> =
                (0..system.state_len()).map(|s| traj.value_at(s, i)).collect();
            system.eval_poly(poly, &state, env, t, &traj.basis)
        });
    per_point.into_iter().collect()
}
