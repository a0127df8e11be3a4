//! Ornstein-Uhlenbeck calculus on chaos expansions.
//!
//! Every operator here is a Fourier multiplier `T_phi = sum_m phi(m) J_m` and
//! acts by rescaling the order-`m` coefficients. `L` is the generator of the
//! semigroup, so `-L` has eigenvalue `m` on the `m`-th chaos, and `delta D = -L`.

use std::fmt;
use std::sync::Arc;

use crate::chaos::ChaosExpansion;
use crate::error::{check_dim, Error, Result};
use crate::malliavin::{derivative, divergence, OperatorValuedExpansion};
use crate::quadrature::SubordinatorQuad;

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeTime(t))
    } else {
        Ok(())
    }
}

/// A scalar rule `n -> phi(n)`, either a closure or a finite table.
#[derive(Clone)]
pub struct MultiplierSpec {
    rule: Rule,
}

#[derive(Clone)]
enum Rule {
    Fn(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
    Table(Vec<f64>),
}

impl fmt::Debug for MultiplierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::Fn(_) => f.write_str("MultiplierSpec(fn)"),
            Rule::Table(t) => write!(f, "MultiplierSpec({t:?})"),
        }
    }
}

impl MultiplierSpec {
    pub fn from_fn<F: Fn(usize) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self {
            rule: Rule::Fn(Arc::new(f)),
        }
    }

    /// `phi(n) = table[n]`, undefined beyond the table.
    pub fn from_table(table: Vec<f64>) -> Self {
        Self { rule: Rule::Table(table) }
    }

    pub fn identity() -> Self {
        Self::from_fn(|_| 1.0)
    }

    /// `phi(n) = 1 / (lambda - n)`.
    pub fn resolvent(lambda: f64) -> Self {
        Self::from_fn(move |n| 1.0 / (lambda - n as f64))
    }

    pub fn eval(&self, n: usize) -> Result<f64> {
        match &self.rule {
            Rule::Fn(f) => Ok(f(n)),
            Rule::Table(t) => t.get(n).copied().ok_or(Error::MultiplierNotTotal(n)),
        }
    }
}

/// `T_phi F = sum_n phi(n) J_n F`.
pub fn multiplier(spec: &MultiplierSpec, f: &ChaosExpansion) -> Result<ChaosExpansion> {
    for m in f.orders() {
        spec.eval(m)?;
    }
    Ok(f.map_orders(|m| spec.eval(m).expect("checked above")))
}

/// `P(t) = sum_m e^{-mt} J_m`.
pub fn apply_p(t: f64, f: &ChaosExpansion) -> Result<ChaosExpansion> {
    check_time(t)?;
    Ok(f.map_orders(|m| (-(m as f64) * t).exp()))
}

/// `L = -sum_m m J_m`.
pub fn apply_l(f: &ChaosExpansion) -> ChaosExpansion {
    f.map_orders(|m| -(m as f64))
}

/// `C = -(-L)^{1/2}`.
pub fn apply_c(f: &ChaosExpansion) -> ChaosExpansion {
    f.map_orders(|m| -(m as f64).sqrt())
}

/// `L^{-1}` on mean-zero functionals.
pub fn apply_linv(f: &ChaosExpansion) -> Result<ChaosExpansion> {
    if f.orders().first() == Some(&0) {
        return Err(Error::NonZeroMean);
    }
    Ok(f.map_orders(|m| -1.0 / m as f64))
}

/// `R_lambda = (lambda + L)^{-1} = sum_m (lambda - m)^{-1} J_m`.
pub fn resolvent(lambda: f64, f: &ChaosExpansion) -> Result<ChaosExpansion> {
    if let Some(m) = f.orders().into_iter().find(|&m| lambda == m as f64) {
        return Err(Error::InvalidArgument(format!("lambda = {m} is an eigenvalue of -L")));
    }
    multiplier(&MultiplierSpec::resolvent(lambda), f)
}

/// `Q(t) = sum_m e^{-sqrt(m) t} J_m`, the semigroup generated by `C`.
pub fn apply_q_closed(t: f64, f: &ChaosExpansion) -> Result<ChaosExpansion> {
    check_time(t)?;
    Ok(f.map_orders(|m| (-(m as f64).sqrt() * t).exp()))
}

/// `Q(t) F` in closed form and by integrating `P(s) F` against the subordinator.
pub fn apply_q(t: f64, f: &ChaosExpansion, quad: &SubordinatorQuad) -> Result<(ChaosExpansion, ChaosExpansion)> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("subordination time must be positive, got {t}")));
    }
    let closed = apply_q_closed(t, f)?;
    let mut factors = std::collections::BTreeMap::new();
    for m in f.orders() {
        factors.insert(m, quad.integrate(t, m)?.value);
    }
    let numeric = f.map_orders(|m| factors[&m]);
    Ok((closed, numeric))
}

/// `(||P(t)(I - J_0 - ... - J_{N-1}) F||, e^{-Nt} ||F||)` for scalar `F`.
pub fn tail_bound_check(t: f64, order: usize, f: &ChaosExpansion) -> Result<(f64, f64)> {
    check_time(t)?;
    check_dim(1, f.d())?;
    let tail = f.map_orders(|m| if m >= order { 1.0 } else { 0.0 });
    let lhs = apply_p(t, &tail)?.l2_norm_exact()?;
    let rhs = (-(order as f64) * t).exp() * f.l2_norm_exact()?;
    Ok((lhs, rhs))
}

/// `RF = D sum_{m>=1} m^{-1/2} J_m F` and `S(RF)`, where
/// `S U = sum_{m>=1} m^{-1/2} delta(J_{m-1} U)` inverts `R` on mean-zero functionals.
pub fn rs_operators(f: &ChaosExpansion) -> Result<(OperatorValuedExpansion, ChaosExpansion)> {
    let scaled = f.map_orders(|m| if m == 0 { 0.0 } else { 1.0 / (m as f64).sqrt() });
    let rf = derivative(&scaled);
    let mut recovered = ChaosExpansion::zero(f.dim_n(), f.space().clone());
    for k in 0..=rf.max_order() {
        let layer = rf.project(k);
        if layer.is_zero() {
            continue;
        }
        recovered = recovered.add(&divergence(&layer)?.scale(1.0 / ((k + 1) as f64).sqrt()))?;
    }
    Ok((rf, recovered))
}

/// `F = E(F) + delta(U)` with `U = D (-L)^{-1} (F - E F)`.
pub fn represent(f: &ChaosExpansion) -> Result<(Vec<f64>, OperatorValuedExpansion)> {
    let centered = f.map_orders(|m| if m == 0 { 0.0 } else { 1.0 });
    let u = derivative(&apply_linv(&centered)?.scale(-1.0));
    Ok((f.mean(), u))
}

/// Largest coefficient deviation in each commutation identity between `D` and
/// the OU operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationReport {
    /// `D P(t) F = e^{-t} P(t) D F`
    pub semigroup: f64,
    /// `D Q(t) F = e^{-t (I - L)^{1/2}} D F`
    pub subordinated: f64,
    /// `D L F = -(I - L) D F`
    pub generator: f64,
    /// `D C F = -(I - L)^{1/2} D F`
    pub square_root: f64,
}

impl CommutationReport {
    pub fn max(&self) -> f64 {
        self.semigroup
            .max(self.subordinated)
            .max(self.generator)
            .max(self.square_root)
    }
}

pub fn commutation_check(t: f64, f: &ChaosExpansion) -> Result<CommutationReport> {
    check_time(t)?;
    let df = derivative(f);
    let semigroup = derivative(&apply_p(t, f)?)
        .max_abs_diff(&df.map_orders(|m| (-t).exp() * (-(m as f64) * t).exp()));
    let subordinated = derivative(&apply_q_closed(t, f)?)
        .max_abs_diff(&df.map_orders(|m| (-t * (1.0 + m as f64).sqrt()).exp()));
    let generator = derivative(&apply_l(f)).max_abs_diff(&df.map_orders(|m| -(1.0 + m as f64)));
    let square_root = derivative(&apply_c(f)).max_abs_diff(&df.map_orders(|m| -(1.0 + m as f64).sqrt()));
    Ok(CommutationReport {
        semigroup,
        subordinated,
        generator,
        square_root,
    })
}

/// `(E <(-L) F, G>, E [DF, DG]_gamma)`.
pub fn dirichlet_check(f: &ChaosExpansion, g: &ChaosExpansion) -> Result<(f64, f64)> {
    let lhs = apply_l(f).scale(-1.0).expect_pair(g)?;
    let rhs = derivative(f).expect_pair(&derivative(g))?;
    Ok((lhs, rhs))
}
