//! Exact solution family for the two-fermion bilinear model, used to drive
//! the verification grids: coefficient functions, their derivatives, the
//! coordinate-binding coefficients, and the evaluation environment that
//! serves them.

use crate::mechanics::ElSign;
use crate::scalar::{FuncDef, ScalarEnv};
use num_complex::Complex64;
use std::sync::Arc;

type TimeClosure = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A scalar function of time with an exact derivative closure.
#[derive(Clone)]
pub struct TimeFn {
    f: TimeClosure,
    df: TimeClosure,
}

impl TimeFn {
    pub fn new(
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        df: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self { f: Arc::new(f), df: Arc::new(df) }
    }

    pub fn constant(v: Complex64) -> Self {
        Self::new(move |_| v, |_| Complex64::default())
    }

    pub fn value(&self, t: f64) -> Complex64 {
        (self.f)(t)
    }

    pub fn derivative(&self, t: f64) -> Complex64 {
        (self.df)(t)
    }
}

/// Closed-form coefficient family for the two-fermion model: an amplitude
/// `a`, a real offset `u`, a phase offset `c`, the coupling `k`, the linear
/// phase rate, and two freely chosen profile functions.
#[derive(Clone)]
pub struct InteractingClosedForm {
    pub a: Complex64,
    pub u: f64,
    pub c: f64,
    pub k: f64,
    /// dτ/dt; the consistent value is −k/2 for the default equation sign.
    pub tau_rate: f64,
    pub s30: TimeFn,
    pub s3: TimeFn,
}

impl InteractingClosedForm {
    /// Reference member of the family: unit amplitude, offset 0.7, a gently
    /// oscillating profile, and the phase rate for the default sign.
    pub fn fixture(k: f64) -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            u: 0.7,
            c: 0.0,
            k,
            tau_rate: -k / 2.0,
            s30: TimeFn::new(
                |t| Complex64::new(0.3 + 0.1 * t.sin(), 0.0),
                |t| Complex64::new(0.1 * t.cos(), 0.0),
            ),
            s3: TimeFn::constant(Complex64::new(0.5, 0.0)),
        }
    }

    /// Fixture with the phase rate matched to the chosen equation sign.
    pub fn with_branch(k: f64, el_sign: ElSign) -> Self {
        let mut cf = Self::fixture(k);
        cf.tau_rate = match el_sign {
            ElSign::Minus => -k / 2.0,
            ElSign::Plus => k / 2.0,
        };
        cf
    }

    /// Squared amplitude |a|².
    pub fn v(&self) -> f64 {
        self.a.norm_sqr()
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.tau_rate * t + self.c
    }

    pub fn s1(&self, t: f64) -> Complex64 {
        self.a.conj() * (self.s30.value(t) + Complex64::i()) * Complex64::cis(self.tau(t))
    }

    pub fn ds1(&self, t: f64) -> Complex64 {
        let i = Complex64::i();
        self.a.conj()
            * Complex64::cis(self.tau(t))
            * (self.s30.derivative(t) + i * self.tau_rate * (self.s30.value(t) + i))
    }

    pub fn s2(&self, t: f64) -> Complex64 {
        self.a * (self.s30.value(t) - Complex64::i()) * Complex64::cis(-self.tau(t))
    }

    pub fn ds2(&self, t: f64) -> Complex64 {
        let i = Complex64::i();
        self.a
            * Complex64::cis(-self.tau(t))
            * (self.s30.derivative(t) - i * self.tau_rate * (self.s30.value(t) - i))
    }

    pub fn s01(&self, t: f64) -> Complex64 {
        Complex64::new(self.v(), 0.0) * self.s30.value(t) + Complex64::new(self.u, 0.0)
    }

    pub fn ds01(&self, t: f64) -> Complex64 {
        Complex64::new(self.v(), 0.0) * self.s30.derivative(t)
    }

    /// s3 / (s1 s2), the coefficient steering the quartic slot.
    pub fn alpha(&self, t: f64) -> Complex64 {
        self.s3.value(t) / (self.s1(t) * self.s2(t))
    }

    /// Coefficient of the second constant momentum in the first coordinate
    /// binding: −a e^{−iτ}.
    pub fn psi1_coeff(&self, t: f64) -> Complex64 {
        -self.a * Complex64::cis(-self.tau(t))
    }

    /// Coefficient of the first constant momentum in the second coordinate
    /// binding: a* e^{iτ}.
    pub fn psi2_coeff(&self, t: f64) -> Complex64 {
        self.a.conj() * Complex64::cis(self.tau(t))
    }

    /// Same family member with the offsets gauged away: u = 0 and a flat
    /// zero profile, which zeroes both scalar-valued generating-function
    /// coefficients.
    pub fn gauge(&self) -> Self {
        let mut cf = self.clone();
        cf.u = 0.0;
        cf.s30 = TimeFn::constant(Complex64::default());
        cf
    }

    /// Evaluation environment serving every coefficient function with exact
    /// first derivatives, plus the coupling parameter.
    pub fn env(&self) -> ScalarEnv {
        let mut env = ScalarEnv::new().with_param("k", Complex64::new(self.k, 0.0));
        env = env.with_func("s0", FuncDef::constant(Complex64::default()));
        env = env.with_func("sx12", FuncDef::constant(Complex64::default()));
        env = env.with_func("sx21", FuncDef::constant(Complex64::default()));
        let (c1, c2) = (self.clone(), self.clone());
        env = env.with_func(
            "s01",
            FuncDef::new(move |t| c1.s01(t)).with_derivative(move |t| c2.ds01(t)),
        );
        let (c1, c2) = (self.clone(), self.clone());
        env = env.with_func(
            "s1",
            FuncDef::new(move |t| c1.s1(t)).with_derivative(move |t| c2.ds1(t)),
        );
        let (c1, c2) = (self.clone(), self.clone());
        env = env.with_func(
            "s2",
            FuncDef::new(move |t| c1.s2(t)).with_derivative(move |t| c2.ds2(t)),
        );
        let s30 = self.s30.clone();
        let ds30 = self.s30.clone();
        env = env.with_func(
            "s30",
            FuncDef::new(move |t| s30.value(t)).with_derivative(move |t| ds30.derivative(t)),
        );
        let s3 = self.s3.clone();
        let ds3 = self.s3.clone();
        env = env.with_func(
            "s3",
            FuncDef::new(move |t| s3.value(t)).with_derivative(move |t| ds3.derivative(t)),
        );
        env
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ScalarExpr;

    #[test]
    fn family_invariants_hold_on_a_grid() {
        let cf = InteractingClosedForm::fixture(1.0);
        assert!((2.0 * cf.tau_rate + cf.k).abs() < 1e-15);
        for n in 0..101 {
            let t = 0.1 * n as f64;
            let s30 = cf.s30.value(t);
            let product = cf.s1(t) * cf.s2(t);
            let expected = Complex64::new(cf.v(), 0.0) * (s30 * s30 + Complex64::new(1.0, 0.0));
            assert!((product - expected).norm() < 1e-12);
            assert!((cf.s2(t) - cf.s1(t).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn stated_derivatives_match_finite_differences() {
        let cf = InteractingClosedForm::fixture(1.3);
        let h = 1e-5;
        for t in [0.0, 0.37, 2.9, 8.11] {
            let fd1 = (cf.s1(t + h) - cf.s1(t - h)) / Complex64::new(2.0 * h, 0.0);
            assert!((fd1 - cf.ds1(t)).norm() < 1e-8);
            let fd2 = (cf.s2(t + h) - cf.s2(t - h)) / Complex64::new(2.0 * h, 0.0);
            assert!((fd2 - cf.ds2(t)).norm() < 1e-8);
            let fd01 = (cf.s01(t + h) - cf.s01(t - h)) / Complex64::new(2.0 * h, 0.0);
            assert!((fd01 - cf.ds01(t)).norm() < 1e-8);
        }
    }

    #[test]
    fn environment_serves_exact_derivatives() {
        let cf = InteractingClosedForm::fixture(1.0);
        let env = cf.env();
        let t = 0.37;
        let v1 = ScalarExpr::func_order("s1", 1).eval(&env, t).unwrap();
        assert_eq!(v1, cf.ds1(t));
        let v01 = ScalarExpr::func("s01").eval(&env, t).unwrap();
        assert_eq!(v01, cf.s01(t));
        assert!(ScalarExpr::func("sx12").eval(&env, t).unwrap().norm() < 1e-15);
        let vk = ScalarExpr::param("k").eval(&env, t).unwrap();
        assert_eq!(vk, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn gauged_member_zeroes_the_scalar_coefficients() {
        let cf = InteractingClosedForm::fixture(1.0).gauge();
        for t in [0.0, 1.0, 5.5] {
            assert!(cf.s01(t).norm() < 1e-15);
            assert!(cf.s30.value(t).norm() < 1e-15);
            // binding coefficients keep their pure-phase form
            assert!((cf.psi1_coeff(t).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn branch_choice_flips_the_phase_rate() {
        let plus = InteractingClosedForm::with_branch(2.0, ElSign::Plus);
        let minus = InteractingClosedForm::with_branch(2.0, ElSign::Minus);
        assert_eq!(plus.tau_rate, 1.0);
        assert_eq!(minus.tau_rate, -1.0);
    }
}
