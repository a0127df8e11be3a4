//! Malliavin derivative, divergence and pathwise operator norms.
//!
//! An [`OperatorValuedExpansion`] of tensor order `k` stores, for each chaos key
//! `c`, a dense coefficient tensor of shape `n^k x d` laid out with the first
//! `H`-slot most significant and the `E` coordinate innermost. `D^k F` prepends
//! the newest slot, so `(D^2 F)[j][l]` is `D_{u_j} D_{u_l} F`.

use std::collections::BTreeMap;

use crate::chaos::{axpy, is_zero_vec, max_abs_diff_maps, ChaosExpansion, CompiledExpansion};
use crate::error::{check_dim, Error, Result};
use crate::gaussian::SampleLayout;
use crate::mc::{estimate_means, lp_from_moment, pow_moment, EstimateResult, McConfig};
use crate::multiindex::CountVector;
use crate::space::{dot, BanachSpace, Norm};

type Terms = BTreeMap<CountVector, Vec<f64>>;

fn add_into(terms: &mut Terms, c: CountVector, a: f64, x: &[f64], width: usize) {
    if a == 0.0 || is_zero_vec(x) {
        return;
    }
    let entry = terms.entry(c.clone()).or_insert_with(|| vec![0.0; width]);
    axpy(a, x, entry);
    if is_zero_vec(entry) {
        terms.remove(&c);
    }
}

/// `D(Psi_c X) = sum_j sqrt(c_j) Psi_{c - e_j} u_j (x) X` for width-`w` coefficients.
fn shift_derivative(n: usize, width: usize, terms: &Terms) -> Terms {
    let mut out = Terms::new();
    for (c, x) in terms {
        for &(j, cj) in c.pairs() {
            let lower = c.lowered(j).expect("j occurs in c");
            let entry = out.entry(lower).or_insert_with(|| vec![0.0; n * width]);
            axpy((cj as f64).sqrt(), x, &mut entry[(j - 1) * width..j * width]);
        }
    }
    out.retain(|_, v| !is_zero_vec(v));
    out
}

/// Same derivative through the monomial basis and `d/dg_j`.
fn monomial_derivative(n: usize, width: usize, terms: &Terms) -> Result<Terms> {
    let wide = ChaosExpansion::from_terms(n, BanachSpace::l2(width), terms.clone())?;
    let mono = wide.to_monomial();
    let mut out = Terms::new();
    for j in 1..=n {
        let part = mono.partial(j)?.to_chaos();
        for (c, x) in part.terms() {
            let entry = out.entry(c.clone()).or_insert_with(|| vec![0.0; n * width]);
            entry[(j - 1) * width..j * width].copy_from_slice(x);
        }
    }
    Ok(out)
}

/// `F = sum_c Psi_c T_c` with `T_c` a tensor in `(R^n)^{(x) k} (x) E`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorValuedExpansion {
    order: usize,
    dim_n: usize,
    space: BanachSpace,
    terms: Terms,
}

impl OperatorValuedExpansion {
    pub fn zero(order: usize, dim_n: usize, space: BanachSpace) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("tensor order must be >= 1".into()));
        }
        Ok(Self {
            order,
            dim_n,
            space,
            terms: Terms::new(),
        })
    }

    /// Builds from `(key, tensor)` pairs; repeated keys are summed.
    pub fn from_terms<I>(order: usize, dim_n: usize, space: BanachSpace, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (CountVector, Vec<f64>)>,
    {
        let mut out = Self::zero(order, dim_n, space)?;
        let w = out.width();
        for (c, t) in terms {
            check_dim(w, t.len())?;
            if c.sup() > dim_n {
                return Err(Error::IndexOutOfRange { index: c.sup(), dim: dim_n });
            }
            add_into(&mut out.terms, c, 1.0, &t, w);
        }
        Ok(out)
    }

    /// `sum_j f_j u_j` with `f_j` the `j`-th entry of `fields`.
    pub fn from_fields(fields: &[ChaosExpansion]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidArgument("need one field per basis vector".into()))?;
        let n = first.dim_n();
        check_dim(n, fields.len())?;
        let d = first.d();
        let mut out = Self::zero(1, n, first.space().clone())?;
        for (j, f) in fields.iter().enumerate() {
            check_dim(n, f.dim_n())?;
            check_dim(d, f.d())?;
            for (c, x) in f.terms() {
                let mut t = vec![0.0; n * d];
                t[j * d..(j + 1) * d].copy_from_slice(x);
                add_into(&mut out.terms, c.clone(), 1.0, &t, n * d);
            }
        }
        Ok(out)
    }

    fn with_terms(&self, order: usize, terms: Terms) -> Self {
        Self {
            order,
            dim_n: self.dim_n,
            space: self.space.clone(),
            terms,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn space(&self) -> &BanachSpace {
        &self.space
    }

    pub fn d(&self) -> usize {
        self.space.dim
    }

    /// Length of each coefficient tensor, `n^k d`.
    pub fn width(&self) -> usize {
        self.dim_n.pow(self.order as u32) * self.space.dim
    }

    pub fn terms(&self) -> &BTreeMap<CountVector, Vec<f64>> {
        &self.terms
    }

    pub fn coeff(&self, c: &CountVector) -> Option<&[f64]> {
        self.terms.get(c).map(|v| v.as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(|c| c.order()).max().unwrap_or(0)
    }

    /// Multiplies every chaos-order-`m` coefficient by `factor(m)`.
    pub fn map_orders<F: Fn(usize) -> f64>(&self, factor: F) -> Self {
        let w = self.width();
        let mut out = Terms::new();
        for (c, t) in &self.terms {
            add_into(&mut out, c.clone(), factor(c.order()), t, w);
        }
        self.with_terms(self.order, out)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_orders(|_| a)
    }

    pub fn project(&self, m: usize) -> Self {
        self.map_orders(|k| if k == m { 1.0 } else { 0.0 })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        check_dim(self.order, other.order)?;
        check_dim(self.dim_n, other.dim_n)?;
        check_dim(self.d(), other.d())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let w = self.width();
        let mut out = self.terms.clone();
        for (c, t) in &other.terms {
            add_into(&mut out, c.clone(), 1.0, t, w);
        }
        Ok(self.with_terms(self.order, out))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff_maps(&self.terms, &other.terms)
    }

    /// `F(h)`: contraction of the first slot with `h in R^n`.
    pub fn apply_first(&self, h: &[f64]) -> Result<Self> {
        check_dim(self.dim_n, h.len())?;
        if self.order == 1 {
            return Err(Error::InvalidArgument(
                "use apply_h to contract a first-order expansion".into(),
            ));
        }
        let rest = self.width() / self.dim_n;
        let mut out = Terms::new();
        for (c, t) in &self.terms {
            let mut v = vec![0.0; rest];
            for (j, &hj) in h.iter().enumerate() {
                axpy(hj, &t[j * rest..(j + 1) * rest], &mut v);
            }
            add_into(&mut out, c.clone(), 1.0, &v, rest);
        }
        Ok(self.with_terms(self.order - 1, out))
    }

    /// `F(h)` for a first-order expansion, as an `E`-valued functional.
    pub fn apply_h(&self, h: &[f64]) -> Result<ChaosExpansion> {
        check_dim(1, self.order)?;
        check_dim(self.dim_n, h.len())?;
        let d = self.d();
        let mut out = ChaosExpansion::zero(self.dim_n, self.space.clone());
        for (c, t) in &self.terms {
            let mut v = vec![0.0; d];
            for (j, &hj) in h.iter().enumerate() {
                axpy(hj, &t[j * d..(j + 1) * d], &mut v);
            }
            out.add_scaled_term(c, 1.0, &v);
        }
        Ok(out)
    }

    /// Component along `u_j` (1-based) of a first-order expansion.
    pub fn slot(&self, j: usize) -> Result<ChaosExpansion> {
        if j == 0 || j > self.dim_n {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim_n });
        }
        let mut h = vec![0.0; self.dim_n];
        h[j - 1] = 1.0;
        self.apply_h(&h)
    }

    /// `D` applied to every coefficient; the new slot comes first.
    pub fn derivative(&self) -> Self {
        let terms = shift_derivative(self.dim_n, self.width(), &self.terms);
        self.with_terms(self.order + 1, terms)
    }

    /// `E [F, G]_gamma`, exact: the Hilbert-Schmidt pairing summed over chaos keys.
    pub fn expect_pair(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .terms
            .iter()
            .filter_map(|(c, t)| other.terms.get(c).map(|s| dot(t, s)))
            .sum())
    }

    /// `(E ||F||^2_{gamma})^{1/2}` for Hilbert `E`, exact by orthonormality.
    pub fn l2_norm_exact(&self) -> Result<f64> {
        self.space.require_hilbert()?;
        Ok(self.terms.values().map(|t| dot(t, t)).sum::<f64>().sqrt())
    }

    /// `<F, G>` for first-order `F` and scalar pairing with `G`: the scalar
    /// first-order expansion `sum_j <F u_j, G> u_j`.
    pub fn pair_with(&self, g: &ChaosExpansion) -> Result<Self> {
        check_dim(1, self.order)?;
        check_dim(self.dim_n, g.dim_n())?;
        check_dim(self.d(), g.d())?;
        let fields = (1..=self.dim_n)
            .map(|j| self.slot(j)?.pair(g))
            .collect::<Result<Vec<_>>>()?;
        Self::from_fields(&fields)
    }

    pub fn compile(&self) -> CompiledExpansion {
        CompiledExpansion::new(self.dim_n, self.width(), &self.terms)
    }
}

/// `DF` by the Hermite shift.
pub fn derivative(f: &ChaosExpansion) -> OperatorValuedExpansion {
    let terms = shift_derivative(f.dim_n(), f.d(), f.terms());
    OperatorValuedExpansion {
        order: 1,
        dim_n: f.dim_n(),
        space: f.space().clone(),
        terms,
    }
}

/// `DF` through the monomial basis.
pub fn derivative_monomial(f: &ChaosExpansion) -> Result<OperatorValuedExpansion> {
    let terms = monomial_derivative(f.dim_n(), f.d(), f.terms())?;
    OperatorValuedExpansion::from_terms(1, f.dim_n(), f.space().clone(), terms)
}

/// `D^k F` by repeated Hermite shifts.
pub fn derivative_n(f: &ChaosExpansion, k: usize) -> Result<OperatorValuedExpansion> {
    if k == 0 {
        return Err(Error::InvalidArgument("derivative order must be >= 1".into()));
    }
    let mut out = derivative(f);
    for _ in 1..k {
        out = out.derivative();
    }
    Ok(out)
}

/// `D^k F` by repeated monomial differentiation.
pub fn derivative_n_monomial(f: &ChaosExpansion, k: usize) -> Result<OperatorValuedExpansion> {
    if k == 0 {
        return Err(Error::InvalidArgument("derivative order must be >= 1".into()));
    }
    let n = f.dim_n();
    let mut width = f.d();
    let mut terms = f.terms().clone();
    for _ in 0..k {
        terms = monomial_derivative(n, width, &terms)?;
        width *= n;
    }
    OperatorValuedExpansion::from_terms(k, n, f.space().clone(), terms)
}

/// `delta(u)` for a first-order `u`, via `delta(f u_j (x) x) = (f g_j - D_{u_j} f) x`.
pub fn divergence(u: &OperatorValuedExpansion) -> Result<ChaosExpansion> {
    check_dim(1, u.order)?;
    let mut out = ChaosExpansion::zero(u.dim_n, u.space.clone());
    for j in 1..=u.dim_n {
        let f = u.slot(j)?;
        if f.is_zero() {
            continue;
        }
        out = out.add(&f.mul_gamma(j)?)?.sub(&derivative(&f).slot(j)?)?;
    }
    Ok(out)
}

/// `(E DF(h), E W(h) F)` for scalar `F`.
pub fn ibp_check(f: &ChaosExpansion, h: &[f64]) -> Result<(f64, f64)> {
    check_dim(1, f.d())?;
    check_dim(f.dim_n(), h.len())?;
    let lhs = derivative(f).apply_h(h)?.mean()[0];
    let mut wf = ChaosExpansion::zero(f.dim_n(), f.space().clone());
    for (j, &hj) in h.iter().enumerate() {
        if hj != 0.0 {
            wf = wf.add(&f.mul_gamma(j + 1)?.scale(hj))?;
        }
    }
    Ok((lhs, wf.mean()[0]))
}

/// `(E <DF(h), G>, E W(h) <F, G> - E <F, DG(h)>)`.
pub fn ibp_check_vector(f: &ChaosExpansion, g: &ChaosExpansion, h: &[f64]) -> Result<(f64, f64)> {
    check_dim(f.dim_n(), h.len())?;
    let lhs = derivative(f).apply_h(h)?.expect_pair(g)?;
    let fg = f.pair(g)?;
    let mut w_fg = 0.0;
    for (j, &hj) in h.iter().enumerate() {
        if hj != 0.0 {
            w_fg += hj * fg.mul_gamma(j + 1)?.mean()[0];
        }
    }
    let rhs = w_fg - f.expect_pair(&derivative(g).apply_h(h)?)?;
    Ok((lhs, rhs))
}

/// How an operator-valued quantity is normed at a sample point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaMode {
    /// `(mean_r ||T(g~_r1, ..., g~_rk)||^2)^{1/2}` over `inner_draws` fresh row sets,
    /// exact Hilbert-Schmidt norm for `l2`.
    InnerMean,
    /// `||T(g~_1, ..., g~_k)||` with a single fresh row per slot.
    Decoupled,
}

/// A random quantity whose pathwise norm is estimated.
#[derive(Debug, Clone, Copy)]
pub enum Observable<'a> {
    Chaos(&'a ChaosExpansion),
    Operator(&'a OperatorValuedExpansion, GammaMode),
}

impl Observable<'_> {
    fn dim_n(&self) -> usize {
        match self {
            Observable::Chaos(f) => f.dim_n(),
            Observable::Operator(u, _) => u.dim_n,
        }
    }
}

fn is_euclidean(space: &BanachSpace) -> bool {
    match space.norm {
        Norm::L2 => true,
        Norm::L1 | Norm::Linf => space.dim == 1,
        Norm::Custom(_) => false,
    }
}

/// Contracts the `n^k x d` tensor `t` slot by slot with `rows(0..k)`.
fn contract_dense<'r>(
    t: &[f64],
    n: usize,
    k: usize,
    rows: impl Fn(usize) -> &'r [f64],
    buf: &mut Vec<f64>,
    next: &mut Vec<f64>,
) {
    buf.clear();
    buf.extend_from_slice(t);
    for s in 0..k {
        let stride = buf.len() / n;
        next.clear();
        next.resize(stride, 0.0);
        let row = rows(s);
        for j in 0..n {
            axpy(row[j], &buf[j * stride..(j + 1) * stride], next);
        }
        std::mem::swap(buf, next);
    }
}

struct Probe<'a> {
    compiled: CompiledExpansion,
    space: &'a BanachSpace,
    order: usize,
    mode: Option<GammaMode>,
}

struct ProbeScratch {
    table: Vec<f64>,
    value: Vec<f64>,
    buf: Vec<f64>,
    next: Vec<f64>,
}

/// `L^p` norms of sums of pathwise norms, all from one set of samples.
///
/// Quantity `q` is `(E sum_{i in groups[q]} ||X_i||^p)^{1/p}`; the result is
/// indexed `[q][p]`. Items must share the same `n`.
pub fn lp_norm_groups_mc(
    items: &[Observable<'_>],
    groups: &[Vec<usize>],
    ps: &[f64],
    mc: &McConfig,
    stream: u64,
) -> Result<Vec<Vec<EstimateResult>>> {
    let n = items
        .first()
        .map(|o| o.dim_n())
        .ok_or_else(|| Error::InvalidArgument("nothing to estimate".into()))?;
    for o in items {
        check_dim(n, o.dim_n())?;
    }
    for g in groups {
        if let Some(&bad) = g.iter().find(|&&i| i >= items.len()) {
            return Err(Error::IndexOutOfRange { index: bad, dim: items.len() });
        }
    }
    for &p in ps {
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("moment order must be >= 1, got {p}")));
        }
    }
    let probes: Vec<Probe> = items
        .iter()
        .map(|o| match o {
            Observable::Chaos(f) => Probe {
                compiled: f.compile(),
                space: f.space(),
                order: 0,
                mode: None,
            },
            Observable::Operator(u, mode) => Probe {
                compiled: u.compile(),
                space: u.space(),
                order: u.order,
                mode: Some(*mode),
            },
        })
        .collect();
    let max_k = probes.iter().map(|p| p.order).max().unwrap_or(0);
    let sets = probes
        .iter()
        .map(|p| match p.mode {
            Some(GammaMode::InnerMean) if !is_euclidean(p.space) => mc.inner_draws,
            Some(_) => 1,
            None => 0,
        })
        .max()
        .unwrap_or(0);
    let layout = SampleLayout::new(n, 0, sets * max_k);
    let np = ps.len();
    let stats = estimate_means(
        layout,
        mc.rng(stream),
        mc,
        groups.len() * np,
        || {
            (
                probes
                    .iter()
                    .map(|p| ProbeScratch {
                        table: p.compiled.scratch(),
                        value: vec![0.0; p.compiled.width()],
                        buf: Vec::new(),
                        next: Vec::new(),
                    })
                    .collect::<Vec<_>>(),
                vec![0.0; items.len()],
            )
        },
        |(scratch, norms), s, out| {
            for ((p, sc), norm) in probes.iter().zip(scratch.iter_mut()).zip(norms.iter_mut()) {
                p.compiled.eval_into(s.base(), &mut sc.table, &mut sc.value);
                *norm = match p.mode {
                    None => p.space.norm_of(&sc.value),
                    Some(_) if is_euclidean(p.space) && p.mode == Some(GammaMode::InnerMean) => {
                        dot(&sc.value, &sc.value).sqrt()
                    }
                    Some(GammaMode::Decoupled) => {
                        contract_dense(&sc.value, n, p.order, |k| s.tilde(k), &mut sc.buf, &mut sc.next);
                        p.space.norm_of(&sc.buf)
                    }
                    Some(GammaMode::InnerMean) => {
                        let mut acc = 0.0;
                        for r in 0..sets {
                            contract_dense(
                                &sc.value,
                                n,
                                p.order,
                                |k| s.tilde(r * max_k + k),
                                &mut sc.buf,
                                &mut sc.next,
                            );
                            acc += p.space.norm_of(&sc.buf).powi(2);
                        }
                        (acc / sets as f64).sqrt()
                    }
                };
            }
            for (q, g) in groups.iter().enumerate() {
                for (k, &p) in ps.iter().enumerate() {
                    out[q * np + k] = g.iter().map(|&i| pow_moment(norms[i], p)).sum();
                }
            }
        },
    )?;
    Ok((0..groups.len())
        .map(|q| {
            ps.iter()
                .enumerate()
                .map(|(k, &p)| lp_from_moment(&stats[q * np + k], p, mc))
                .collect()
        })
        .collect())
}

/// `(E ||X||^p)^{1/p}` for each item and each `p`, indexed `[item][p]`.
pub fn lp_norms_mc(
    items: &[Observable<'_>],
    ps: &[f64],
    mc: &McConfig,
    stream: u64,
) -> Result<Vec<Vec<EstimateResult>>> {
    let groups: Vec<Vec<usize>> = (0..items.len()).map(|i| vec![i]).collect();
    lp_norm_groups_mc(items, &groups, ps, mc, stream)
}

/// RNG substream used by [`sobolev_norm`].
pub const SOBOLEV_STREAM: u64 = 0x50b0;

/// `||F||_{k,p} = (E||F||^p + sum_{j<=k} E||D^j F||^p_gamma)^{1/p}`.
pub fn sobolev_norm(f: &ChaosExpansion, k: usize, p: f64, mc: &McConfig) -> Result<EstimateResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("derivative order must be >= 1".into()));
    }
    if f.max_order() == 0 {
        mc.validate()?;
        return Ok(EstimateResult::exact(f.space().norm_of(&f.mean()), mc.samples, mc.seed));
    }
    let ders = (1..=k).map(|j| derivative_n(f, j)).collect::<Result<Vec<_>>>()?;
    let mut items = vec![Observable::Chaos(f)];
    items.extend(ders.iter().map(|u| Observable::Operator(u, GammaMode::InnerMean)));
    let group: Vec<usize> = (0..items.len()).collect();
    Ok(lp_norm_groups_mc(&items, &[group], &[p], mc, SOBOLEV_STREAM)?[0][0])
}

/// `||u||_{1,p}` for a first-order operator-valued `u`.
pub fn sobolev_norm_operator(u: &OperatorValuedExpansion, p: f64, mc: &McConfig) -> Result<EstimateResult> {
    let du = u.derivative();
    let items = [
        Observable::Operator(u, GammaMode::InnerMean),
        Observable::Operator(&du, GammaMode::InnerMean),
    ];
    Ok(lp_norm_groups_mc(&items, &[vec![0, 1]], &[p], mc, SOBOLEV_STREAM)?[0][0])
}

/// Exact `||F||_{k,2}` for Hilbert `E`.
pub fn sobolev_norm_exact_l2(f: &ChaosExpansion, k: usize) -> Result<f64> {
    let mut total = f.l2_norm_exact()?.powi(2);
    for j in 1..=k {
        total += derivative_n(f, j)?.l2_norm_exact()?.powi(2);
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::MonomialFunctional;
    use crate::hermite::hermite_coeffs;
    use approx::assert_relative_eq;

    fn cv(s: &str) -> CountVector {
        s.parse().unwrap()
    }

    fn mono(n: usize, d: usize, terms: &[(&[u32], &[f64])]) -> ChaosExpansion {
        MonomialFunctional::from_terms(
            n,
            BanachSpace::l2(d),
            terms.iter().map(|(e, x)| (e.to_vec(), x.to_vec())),
        )
        .unwrap()
        .to_chaos()
    }

    #[test]
    fn derivative_of_gamma() {
        let x = [2.0, -1.0];
        let f = ChaosExpansion::gamma(3, BanachSpace::l2(2), 2, x.to_vec()).unwrap();
        let df = derivative(&f);
        assert_eq!(df.terms().len(), 1);
        assert_eq!(df.coeff(&cv("")).unwrap(), &[0.0, 0.0, 2.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn derivative_of_product() {
        let f = mono(2, 1, &[(&[1, 1], &[3.0])]);
        let df = derivative(&f);
        let g2 = ChaosExpansion::gamma(2, BanachSpace::scalar(), 2, vec![3.0]).unwrap();
        let g1 = ChaosExpansion::gamma(2, BanachSpace::scalar(), 1, vec![3.0]).unwrap();
        assert_eq!(df.slot(1).unwrap(), g2);
        assert_eq!(df.slot(2).unwrap(), g1);
    }

    #[test]
    fn derivative_of_hermite_of_unit_direction() {
        // H_m(W(h)) with |h| = 1 along a rotated direction
        let h = [0.6f64, 0.8];
        for m in 1..=5 {
            let build = |deg: usize| {
                let mut terms = Vec::new();
                for (k, &a) in hermite_coeffs(deg).coeffs().iter().enumerate() {
                    for i in 0..=k {
                        let w = a * (crate::multiindex::factorial_f64(k)
                            / (crate::multiindex::factorial_f64(i) * crate::multiindex::factorial_f64(k - i)))
                            * h[0].powi(i as i32)
                            * h[1].powi((k - i) as i32);
                        terms.push((vec![i as u32, (k - i) as u32], vec![w]));
                    }
                }
                MonomialFunctional::from_terms(2, BanachSpace::scalar(), terms).unwrap().to_chaos()
            };
            let df = derivative(&build(m));
            let lower = build(m - 1);
            for j in 1..=2 {
                let expect = lower.scale(h[j - 1]);
                assert!(df.slot(j).unwrap().max_abs_diff(&expect) < 1e-12, "m={m} j={j}");
            }
        }
    }

    #[test]
    fn second_derivative_examples() {
        let f = mono(2, 2, &[(&[2, 0], &[1.0, 0.5])]);
        let d2 = derivative_n(&f, 2).unwrap();
        assert_eq!(d2.terms().len(), 1);
        let t = d2.coeff(&cv("")).unwrap();
        assert_relative_eq!(t[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(t[1], 1.0, epsilon = 1e-14);
        assert!(t[2..].iter().all(|v| *v == 0.0));

        let g = ChaosExpansion::gamma(2, BanachSpace::scalar(), 1, vec![1.0]).unwrap();
        assert!(derivative_n(&g, 2).unwrap().is_zero());
        let cubic = mono(2, 1, &[(&[2, 1], &[1.0])]);
        assert!(derivative_n(&cubic, 4).unwrap().is_zero());
        assert!(!derivative_n(&cubic, 3).unwrap().is_zero());
    }

    #[test]
    fn two_routes_agree() {
        let f = mono(3, 2, &[(&[2, 1, 0], &[1.0, -2.0]), (&[0, 3, 1], &[0.5, 0.0]), (&[1, 0, 0], &[0.0, 3.0])]);
        assert!(derivative(&f).max_abs_diff(&derivative_monomial(&f).unwrap()) < 1e-10);
        for k in 1..=3 {
            let a = derivative_n(&f, k).unwrap();
            let b = derivative_n_monomial(&f, k).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10, "k={k}");
        }
    }

    #[test]
    fn divergence_examples() {
        let space = BanachSpace::l2(2);
        let x = vec![1.0, -2.0];
        let zero = ChaosExpansion::zero(2, space.clone());
        let one = ChaosExpansion::constant(2, space.clone(), x.clone()).unwrap();
        let u = OperatorValuedExpansion::from_fields(&[one.clone(), zero.clone()]).unwrap();
        assert_eq!(divergence(&u).unwrap(), ChaosExpansion::gamma(2, space.clone(), 1, x.clone()).unwrap());

        let g2x = ChaosExpansion::gamma(2, space.clone(), 2, x.clone()).unwrap();
        let u2 = OperatorValuedExpansion::from_fields(&[g2x, zero.clone()]).unwrap();
        assert!(divergence(&u2).unwrap().max_abs_diff(&mono(2, 2, &[(&[1, 1], &[1.0, -2.0])])) < 1e-14);

        let g1x = ChaosExpansion::gamma(2, space, 1, x).unwrap();
        let u3 = OperatorValuedExpansion::from_fields(&[g1x, zero]).unwrap();
        let expect = mono(2, 2, &[(&[2, 0], &[1.0, -2.0]), (&[0, 0], &[-1.0, 2.0])]);
        assert!(divergence(&u3).unwrap().max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn ibp_examples() {
        let s = |e: u32| mono(1, 1, &[(&[e], &[1.0])]);
        let (l, r) = ibp_check(&s(1), &[1.0]).unwrap();
        assert_relative_eq!(l, 1.0);
        assert_relative_eq!(r, 1.0);
        let (l, r) = ibp_check(&s(2), &[1.0]).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let (l, r) = ibp_check(&s(3), &[1.0]).unwrap();
        assert_relative_eq!(l, 3.0, epsilon = 1e-13);
        assert_relative_eq!(r, 3.0, epsilon = 1e-13);
    }

    #[test]
    fn sobolev_examples() {
        let mc = McConfig::new(40_000, 2);
        let c = ChaosExpansion::constant(2, BanachSpace::linf(2), vec![3.0, -4.0]).unwrap();
        let r = sobolev_norm(&c, 2, 3.0, &mc).unwrap();
        assert_eq!(r.estimate, 4.0);
        assert_eq!(r.stderr, 0.0);

        let g = ChaosExpansion::gamma(1, BanachSpace::scalar(), 1, vec![1.0]).unwrap();
        let r = sobolev_norm(&g, 1, 2.0, &mc).unwrap();
        assert!(r.agrees_with_value(2f64.sqrt(), 3.0), "{r:?}");

        let f = mono(2, 2, &[(&[2, 1], &[1.0, 0.5]), (&[1, 0], &[0.0, 1.0])]);
        let exact = sobolev_norm_exact_l2(&f, 2).unwrap();
        let r = sobolev_norm(&f, 2, 2.0, &mc).unwrap();
        assert!(r.agrees_with_value(exact, 3.0), "{r:?} vs {exact}");
    }

    #[test]
    fn inner_mean_is_exact_for_l2_operator() {
        let f = mono(2, 2, &[(&[1, 1], &[1.0, 0.5])]);
        let df = derivative(&f);
        let mc = McConfig::new(20_000, 5);
        let r = lp_norms_mc(&[Observable::Operator(&df, GammaMode::InnerMean)], &[2.0], &mc, 1).unwrap();
        assert!(r[0][0].agrees_with_value(df.l2_norm_exact().unwrap(), 3.0));
    }
}
