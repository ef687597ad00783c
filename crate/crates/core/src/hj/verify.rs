//! Grid verification of a candidate generating function: residuals for the
//! constraint, constant-momentum, constancy, and evolution families, plus
//! the exact endpoint-variation identity for the boundary term.

use super::system::ReducedSystem;
use super::HjError;
use crate::algebra::{mask_indices, GeneratorBasis, GrassmannElement};
use crate::grid::{map_indexed, TimeGrid};
use crate::model::ModelSpec;
use crate::scalar::ScalarEnv;
use num_complex::Complex64;
use std::sync::Arc;

/// Worst residual of one named check over the whole grid.
pub struct FamilyResidual {
    pub family: String,
    pub name: String,
    pub max_residual: f64,
}

pub struct VerifyOutcome {
    pub residuals: Vec<FamilyResidual>,
    /// Exact endpoint-variation identity residual; `None` when the model has
    /// no recognized kinetic metric to build a boundary term from.
    pub boundary_consistency: Option<f64>,
    pub free_constants_before: usize,
    pub free_constants_after: usize,
    pub max_residual: f64,
}

fn max_over_grid(
    times: &[f64],
    f: impl Fn(f64) -> Result<f64, HjError> + Sync,
) -> Result<f64, HjError> {
    let per_point: Vec<Result<f64, HjError>> = map_indexed(times.len(), |i| f(times[i]));
    let mut max = 0.0f64;
    for v in per_point {
        max = max.max(v?);
    }
    Ok(max)
}

/// Evaluate every check family for a reduced candidate on a time grid. The
/// environment must serve all coefficient functions with first derivatives.
pub fn verify_candidate(
    spec: &ModelSpec,
    reduced: &ReducedSystem,
    env: &ScalarEnv,
    grid: TimeGrid,
) -> Result<VerifyOutcome, HjError> {
    let times = grid.times();
    let mut residuals = Vec::new();
    for (name, eq) in &reduced.system.constraint_eqs {
        let bound = eq.substitute_odd(&reduced.bindings)?;
        let max = max_over_grid(&times, |t| Ok(bound.to_element(env, t)?.max_abs()))?;
        residuals.push(FamilyResidual {
            family: "constraint".into(),
            name: name.clone(),
            max_residual: max,
        });
    }
    for rel in &reduced.relations {
        let reference = rel.rhs.to_element(env, times[0])?;
        let max = max_over_grid(&times, |t| {
            Ok(rel.rhs.to_element(env, t)?.max_abs_diff(&reference)?)
        })?;
        residuals.push(FamilyResidual {
            family: "constant".into(),
            name: rel.name.clone(),
            max_residual: max,
        });
        for ob in &rel.obligations {
            let max = max_over_grid(&times, |t| Ok(ob.expr.eval(env, t)?.norm()))?;
            residuals.push(FamilyResidual {
                family: "constancy".into(),
                name: ob.label.clone(),
                max_residual: max,
            });
        }
    }
    for eq in &reduced.matched {
        let max = max_over_grid(&times, |t| Ok(eq.expr.eval(env, t)?.norm()))?;
        residuals.push(FamilyResidual {
            family: "hj".into(),
            name: eq.label(),
            max_residual: max,
        });
    }
    let boundary = match boundary_consistency(spec) {
        Ok(r) => Some(r),
        Err(HjError::MissingMetric) => None,
        Err(e) => return Err(e),
    };
    let max_residual = residuals
        .iter()
        .map(|r| r.max_residual)
        .fold(boundary.unwrap_or(0.0), f64::max);
    Ok(VerifyOutcome {
        residuals,
        boundary_consistency: boundary,
        free_constants_before: reduced.free_constants_before,
        free_constants_after: reduced.free_constants_after,
        max_residual,
    })
}

/// Exact check that the differential of the endpoint-data function cancels
/// the variation of the boundary term when the sum of the endpoint values is
/// held fixed. Works entirely in exact generator arithmetic over an
/// auxiliary basis: one `eta` (initial value), `xi` (fixed endpoint sum),
/// and `eps` (variation) generator per fermion.
pub fn boundary_consistency(spec: &ModelSpec) -> Result<f64, HjError> {
    let mu = spec.mu();
    if mu == 0 {
        return Ok(0.0);
    }
    let metric = spec.kinetic_metric.as_ref().ok_or(HjError::MissingMetric)?;
    let bt = crate::mechanics::boundary_term(spec)?;
    let mut names: Vec<String> = Vec::with_capacity(3 * mu);
    for prefix in ["eta", "xi", "eps"] {
        for f in &spec.fermions {
            names.push(format!("{prefix}_{}", f.name));
        }
    }
    let basis = GeneratorBasis::new(names)?;
    let gen = |i: usize| GrassmannElement::generator(Arc::clone(&basis), i);
    let mut psi_t1 = Vec::with_capacity(mu);
    let mut psi_t2 = Vec::with_capacity(mu);
    let mut varied_t1 = Vec::with_capacity(mu);
    let mut varied_t2 = Vec::with_capacity(mu);
    for g in 0..mu {
        let eta = gen(g)?;
        let xi = gen(mu + g)?;
        let eps = gen(2 * mu + g)?;
        psi_t2.push(xi.sub(&eta)?);
        varied_t1.push(eta.add(&eps)?);
        varied_t2.push(xi.sub(&eta)?.sub(&eps)?);
        psi_t1.push(eta);
    }
    // momentum map per fermion: -(i/2) Σ_b g[a][b] v_b
    let momentum = |values: &[GrassmannElement]| -> Result<Vec<GrassmannElement>, HjError> {
        let mut out = Vec::with_capacity(mu);
        for row in metric {
            let mut acc = GrassmannElement::zero(Arc::clone(&basis));
            for (b, &gab) in row.iter().enumerate() {
                if gab != 0.0 {
                    acc = acc.add(&values[b].scale(Complex64::new(0.0, -0.5 * gab)))?;
                }
            }
            out.push(acc);
        }
        Ok(out)
    };
    let p1 = momentum(&psi_t1)?;
    let p2 = momentum(&psi_t2)?;
    // Differential of the endpoint-data function: the initial endpoint moves
    // by +eps against minus its momentum, the final endpoint by -eps against
    // plus its momentum.
    let mut delta_f = GrassmannElement::zero(Arc::clone(&basis));
    for g in 0..mu {
        let eps = gen(2 * mu + g)?;
        delta_f = delta_f.sub(&eps.mul(&p1[g])?)?;
        delta_f = delta_f.sub(&eps.mul(&p2[g])?)?;
    }
    // Exact change of the boundary term between varied and unvaried data.
    let env = ScalarEnv::new();
    let eval_bt = |x: &[GrassmannElement],
                   y: &[GrassmannElement]|
     -> Result<GrassmannElement, HjError> {
        let mut acc = GrassmannElement::zero(Arc::clone(&basis));
        for (mask, expr) in bt.terms() {
            let c = expr.eval(&env, 0.0)?;
            let mut term = GrassmannElement::scalar(Arc::clone(&basis), c);
            for idx in mask_indices(*mask) {
                let factor = if idx < mu { &x[idx] } else { &y[idx - mu] };
                term = term.mul(factor)?;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    };
    let delta_bt = eval_bt(&varied_t1, &varied_t2)?.sub(&eval_bt(&psi_t1, &psi_t2)?)?;
    Ok(delta_f.add(&delta_bt)?.max_abs())
}
