//! Exact algebra of `E`-valued polynomial Wiener functionals.
//!
//! A [`ChaosExpansion`] stores `F = sum_c Psi_c x_c` with `c` a
//! [`CountVector`] and `x_c in R^d`. Since the `Psi_c` are orthonormal in
//! `L^2`, chaos projections, the Ornstein-Uhlenbeck calculus and Hilbert
//! norms all act directly on the coefficient table.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::gaussian::GaussianSample;
use crate::hermite::{hermite_coeffs, hermite_eval_all, monomial_in_hermite};
use crate::multiindex::{factorial_f64, CountVector};
use crate::space::{dot, BanachSpace};
use crate::tensor::ElementaryOperator;

pub(crate) fn is_zero_vec(x: &[f64]) -> bool {
    x.iter().all(|&v| v == 0.0)
}

pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn max_abs_diff_maps(
    a: &BTreeMap<CountVector, Vec<f64>>,
    b: &BTreeMap<CountVector, Vec<f64>>,
) -> f64 {
    let mut worst = 0.0f64;
    for (c, x) in a {
        match b.get(c) {
            Some(y) => x.iter().zip(y).for_each(|(u, v)| worst = worst.max((u - v).abs())),
            None => x.iter().for_each(|u| worst = worst.max(u.abs())),
        }
    }
    for (c, y) in b {
        if !a.contains_key(c) {
            y.iter().for_each(|v| worst = worst.max(v.abs()));
        }
    }
    worst
}

/// `F = sum_c Psi_c x_c`, with no zero coefficient stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosExpansion {
    dim_n: usize,
    space: BanachSpace,
    terms: BTreeMap<CountVector, Vec<f64>>,
}

impl ChaosExpansion {
    /// The zero functional.
    pub fn zero(dim_n: usize, space: BanachSpace) -> Self {
        Self {
            dim_n,
            space,
            terms: BTreeMap::new(),
        }
    }

    /// Builds from `(key, coefficient)` pairs; repeated keys are summed.
    pub fn from_terms<I>(dim_n: usize, space: BanachSpace, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (CountVector, Vec<f64>)>,
    {
        let mut out = Self::zero(dim_n, space);
        for (c, x) in terms {
            out.add_term(&c, &x)?;
        }
        Ok(out)
    }

    pub fn constant(dim_n: usize, space: BanachSpace, x: Vec<f64>) -> Result<Self> {
        Self::from_terms(dim_n, space, [(CountVector::empty(), x)])
    }

    /// `Psi_c x`.
    pub fn psi(dim_n: usize, space: BanachSpace, c: CountVector, x: Vec<f64>) -> Result<Self> {
        Self::from_terms(dim_n, space, [(c, x)])
    }

    /// `g_j x`.
    pub fn gamma(dim_n: usize, space: BanachSpace, j: usize, x: Vec<f64>) -> Result<Self> {
        Self::psi(dim_n, space, CountVector::from_indices(&[j]), x)
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

    pub fn terms(&self) -> &BTreeMap<CountVector, Vec<f64>> {
        &self.terms
    }

    pub fn coeff(&self, c: &CountVector) -> Option<&[f64]> {
        self.terms.get(c).map(|v| v.as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest chaos order present (0 for the zero functional).
    pub fn max_order(&self) -> usize {
        self.terms.keys().map(|c| c.order()).max().unwrap_or(0)
    }

    pub fn orders(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.terms.keys().map(|c| c.order()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `x_c += x`, dropping the entry if it cancels to zero.
    pub fn add_term(&mut self, c: &CountVector, x: &[f64]) -> Result<()> {
        check_dim(self.d(), x.len())?;
        if c.sup() > self.dim_n {
            return Err(Error::IndexOutOfRange {
                index: c.sup(),
                dim: self.dim_n,
            });
        }
        if is_zero_vec(x) {
            return Ok(());
        }
        let entry = self.terms.entry(c.clone()).or_insert_with(|| vec![0.0; x.len()]);
        axpy(1.0, x, entry);
        if is_zero_vec(entry) {
            self.terms.remove(c);
        }
        Ok(())
    }

    pub(crate) fn add_scaled_term(&mut self, c: &CountVector, a: f64, x: &[f64]) {
        if a == 0.0 || is_zero_vec(x) {
            return;
        }
        let entry = self.terms.entry(c.clone()).or_insert_with(|| vec![0.0; x.len()]);
        axpy(a, x, entry);
        if is_zero_vec(entry) {
            self.terms.remove(c);
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        check_dim(self.dim_n, other.dim_n)?;
        check_dim(self.d(), other.d())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (c, x) in &other.terms {
            out.add_scaled_term(c, 1.0, x);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (c, x) in &other.terms {
            out.add_scaled_term(c, -1.0, x);
        }
        Ok(out)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_orders(|_| a)
    }

    /// Multiplies every order-`m` coefficient by `factor(m)`.
    pub fn map_orders<F: Fn(usize) -> f64>(&self, factor: F) -> Self {
        let mut out = Self::zero(self.dim_n, self.space.clone());
        for (c, x) in &self.terms {
            let f = factor(c.order());
            if f != 0.0 {
                let y: Vec<f64> = x.iter().map(|v| v * f).collect();
                if !is_zero_vec(&y) {
                    out.terms.insert(c.clone(), y);
                }
            }
        }
        out
    }

    /// `J_m F`: the terms of order exactly `m`.
    pub fn project(&self, m: usize) -> Self {
        Self {
            dim_n: self.dim_n,
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| c.order() == m)
                .map(|(c, x)| (c.clone(), x.clone()))
                .collect(),
        }
    }

    /// `E(F)`, the order-0 coefficient.
    pub fn mean(&self) -> Vec<f64> {
        self.coeff(&CountVector::empty())
            .map(|x| x.to_vec())
            .unwrap_or_else(|| vec![0.0; self.d()])
    }

    /// `sum_c ||x_c||_2^2 = E ||F||_2^2`.
    pub fn l2_norm_squared(&self) -> f64 {
        self.terms.values().map(|x| dot(x, x)).sum()
    }

    /// `(E ||F||^2)^{1/2}`, exact by orthonormality; Hilbert spaces only.
    pub fn l2_norm_exact(&self) -> Result<f64> {
        self.space.require_hilbert()?;
        Ok(self.l2_norm_squared().sqrt())
    }

    /// Largest coefficientwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff_maps(&self.terms, &other.terms)
    }

    /// `F(g)` for the Gaussian vector `g`.
    pub fn evaluate_at(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim_n, g.len())?;
        let compiled = CompiledExpansion::new(self.dim_n, self.d(), &self.terms);
        let mut scratch = compiled.scratch();
        let mut out = vec![0.0; self.d()];
        compiled.eval_into(g, &mut scratch, &mut out);
        Ok(out)
    }

    /// `F` evaluated on row `copy` of a sample.
    pub fn evaluate(&self, s: &GaussianSample, copy: usize) -> Result<Vec<f64>> {
        self.evaluate_at(s.checked_row(copy)?)
    }

    pub fn compile(&self) -> CompiledExpansion {
        CompiledExpansion::new(self.dim_n, self.d(), &self.terms)
    }

    /// Scalar component `a` of the coefficients.
    pub fn component(&self, a: usize) -> Result<Self> {
        if a >= self.d() {
            return Err(Error::IndexOutOfRange { index: a, dim: self.d() });
        }
        let mut out = Self::zero(self.dim_n, BanachSpace::scalar());
        for (c, x) in &self.terms {
            out.add_scaled_term(c, 1.0, &[x[a]]);
        }
        Ok(out)
    }

    /// `g_j F`, via `g H_k(g) = (k + 1) H_{k+1}(g) + H_{k-1}(g)`.
    pub fn mul_gamma(&self, j: usize) -> Result<Self> {
        if j == 0 || j > self.dim_n {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim_n });
        }
        let mut out = Self::zero(self.dim_n, self.space.clone());
        for (c, x) in &self.terms {
            let k = c.get(j) as f64;
            out.add_scaled_term(&c.raised(j), (k + 1.0).sqrt(), x);
            if let Some(lower) = c.lowered(j) {
                out.add_scaled_term(&lower, k.sqrt(), x);
            }
        }
        Ok(out)
    }

    /// `f F` for a scalar functional `f`.
    pub fn mul_scalar(&self, f: &ChaosExpansion) -> Result<Self> {
        check_dim(1, f.d())?;
        check_dim(self.dim_n, f.dim_n)?;
        let mut out = Self::zero(self.dim_n, self.space.clone());
        for (a, fa) in &f.terms {
            for (b, x) in &self.terms {
                for (c, w) in psi_product(a, b) {
                    out.add_scaled_term(&c, w * fa[0], x);
                }
            }
        }
        Ok(out)
    }

    /// The scalar functional `<F, G>` pairing `E` with `E* = R^d`.
    pub fn pair(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.dim_n, BanachSpace::scalar());
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let xy = dot(x, y);
                if xy == 0.0 {
                    continue;
                }
                for (c, w) in psi_product(a, b) {
                    out.add_scaled_term(&c, w * xy, &[1.0]);
                }
            }
        }
        Ok(out)
    }

    /// `E <F, G>`, exact by orthonormality.
    pub fn expect_pair(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .terms
            .iter()
            .filter_map(|(c, x)| other.terms.get(c).map(|y| dot(x, y)))
            .sum())
    }

    /// Expands into monomials `prod_j g_j^{e_j}`.
    pub fn to_monomial(&self) -> MonomialFunctional {
        let mut out = MonomialFunctional::zero(self.dim_n, self.space.clone());
        let mut cache: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (c, x) in &self.terms {
            let factors: Vec<(usize, Vec<f64>)> = c
                .pairs()
                .iter()
                .map(|&(j, k)| {
                    let coeffs = cache
                        .entry(k)
                        .or_insert_with(|| hermite_coeffs(k).coeffs().to_vec())
                        .clone();
                    (j, coeffs)
                })
                .collect();
            let scale = c.factorial_f64().sqrt();
            for_each_product(&factors, &mut |picks, w| {
                let mut e = vec![0u32; self.dim_n];
                for &(j, k) in picks {
                    e[j - 1] = k as u32;
                }
                out.add_scaled_term(&e, scale * w, x);
            });
        }
        out
    }
}

/// Calls `f(picks, weight)` for every choice of one nonzero coefficient per factor,
/// where `picks` holds `(variable, degree)` and `weight` is the product of the coefficients.
fn for_each_product<F: FnMut(&[(usize, usize)], f64)>(factors: &[(usize, Vec<f64>)], f: &mut F) {
    fn rec<F: FnMut(&[(usize, usize)], f64)>(
        factors: &[(usize, Vec<f64>)],
        pos: usize,
        picks: &mut Vec<(usize, usize)>,
        w: f64,
        f: &mut F,
    ) {
        if pos == factors.len() {
            f(picks, w);
            return;
        }
        let (j, coeffs) = &factors[pos];
        for (k, &a) in coeffs.iter().enumerate() {
            if a != 0.0 {
                picks.push((*j, k));
                rec(factors, pos + 1, picks, w * a, f);
                picks.pop();
            }
        }
    }
    rec(factors, 0, &mut Vec::new(), 1.0, f);
}

/// `Psi_a Psi_b` expanded in the `Psi` basis by Hermite linearization:
/// `H_a H_b = sum_r (a + b - 2r)! / (r! (a - r)! (b - r)!) H_{a+b-2r}`.
pub fn psi_product(a: &CountVector, b: &CountVector) -> Vec<(CountVector, f64)> {
    let mut vars: Vec<usize> = a.pairs().iter().chain(b.pairs()).map(|&(j, _)| j).collect();
    vars.sort_unstable();
    vars.dedup();
    let factors: Vec<(usize, Vec<f64>)> = vars
        .iter()
        .map(|&j| {
            let (p, q) = (a.get(j), b.get(j));
            let mut coeffs = vec![0.0; p + q + 1];
            for r in 0..=p.min(q) {
                coeffs[p + q - 2 * r] = factorial_f64(p + q - 2 * r)
                    / (factorial_f64(r) * factorial_f64(p - r) * factorial_f64(q - r));
            }
            (j, coeffs)
        })
        .collect();
    let norm = (a.factorial_f64() * b.factorial_f64()).sqrt();
    let mut out = Vec::new();
    for_each_product(&factors, &mut |picks, w| {
        let pairs: Vec<(usize, usize)> = picks.to_vec();
        let c = CountVector::from_pairs(&pairs).expect("indices are 1-based");
        // prod_j H_{k_j} = Psi_c / sqrt(c!)
        out.push((c.clone(), norm * w / c.factorial_f64().sqrt()));
    });
    out
}

/// Precomputed evaluator for `sum_c Psi_c(g) a_c` with coefficient width `w`.
#[derive(Debug, Clone)]
pub struct CompiledExpansion {
    n: usize,
    width: usize,
    max_k: usize,
    terms: Vec<CompiledTerm>,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct CompiledTerm {
    /// `(0-based variable, degree)`
    factors: Vec<(usize, usize)>,
    scale: f64,
}

impl CompiledExpansion {
    pub(crate) fn new(n: usize, width: usize, terms: &BTreeMap<CountVector, Vec<f64>>) -> Self {
        let mut compiled = Vec::with_capacity(terms.len());
        let mut coeffs = Vec::with_capacity(terms.len() * width);
        let mut max_k = 0;
        for (c, x) in terms {
            for &(_, k) in c.pairs() {
                max_k = max_k.max(k);
            }
            compiled.push(CompiledTerm {
                factors: c.pairs().iter().map(|&(j, k)| (j - 1, k)).collect(),
                scale: c.factorial_f64().sqrt(),
            });
            coeffs.extend_from_slice(x);
        }
        Self {
            n,
            width,
            max_k,
            terms: compiled,
            coeffs,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Scratch buffer for [`Self::eval_into`].
    pub fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.n * (self.max_k + 1)]
    }

    pub fn eval_into(&self, g: &[f64], table: &mut [f64], out: &mut [f64]) {
        let stride = self.max_k + 1;
        for (j, &gj) in g.iter().enumerate().take(self.n) {
            hermite_eval_all(gj, &mut table[j * stride..(j + 1) * stride]);
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for (t, coeff) in self.terms.iter().zip(self.coeffs.chunks_exact(self.width)) {
            let mut psi = t.scale;
            for &(j, k) in &t.factors {
                psi *= table[j * stride + k];
            }
            axpy(psi, coeff, out);
        }
    }
}

/// Wiener-Ito map: `sum_i (i!/m!)^{1/2} Psi_i x_i` over the ordered keys of `T`.
///
/// With `require_symmetric` the operator must satisfy `P_s T = T`; otherwise the
/// result equals the image of `P_s T`.
pub fn phi_m(t: &ElementaryOperator, require_symmetric: bool) -> Result<ChaosExpansion> {
    if require_symmetric {
        t.check_symmetric()?;
    }
    let m = t.order();
    let m_fact = factorial_f64(m);
    let mut out = ChaosExpansion::zero(t.dim_n(), t.space().clone());
    for (i, x) in t.table() {
        let c = i.counts();
        let w = (c.factorial_f64() / m_fact).sqrt();
        out.add_scaled_term(&c, w, x);
    }
    Ok(out)
}

/// `F = sum_e g^e x_e` in the monomial basis; keys are exponent vectors of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialFunctional {
    dim_n: usize,
    space: BanachSpace,
    terms: BTreeMap<Vec<u32>, Vec<f64>>,
}

impl MonomialFunctional {
    pub fn zero(dim_n: usize, space: BanachSpace) -> Self {
        Self {
            dim_n,
            space,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(dim_n: usize, space: BanachSpace, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Vec<f64>)>,
    {
        let mut out = Self::zero(dim_n, space);
        for (e, x) in terms {
            check_dim(dim_n, e.len())?;
            check_dim(out.space.dim, x.len())?;
            out.add_scaled_term(&e, 1.0, &x);
        }
        Ok(out)
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    pub fn space(&self) -> &BanachSpace {
        &self.space
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Vec<f64>> {
        &self.terms
    }

    pub(crate) fn add_scaled_term(&mut self, e: &[u32], a: f64, x: &[f64]) {
        if a == 0.0 || is_zero_vec(x) {
            return;
        }
        let entry = self.terms.entry(e.to_vec()).or_insert_with(|| vec![0.0; x.len()]);
        axpy(a, x, entry);
        if is_zero_vec(entry) {
            self.terms.remove(e);
        }
    }

    pub fn evaluate_at(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim_n, g.len())?;
        let mut out = vec![0.0; self.space.dim];
        for (e, x) in &self.terms {
            let w: f64 = e.iter().zip(g).map(|(&k, &v)| v.powi(k as i32)).product();
            axpy(w, x, &mut out);
        }
        Ok(out)
    }

    /// `d/dg_j`, with `j` 1-based.
    pub fn partial(&self, j: usize) -> Result<Self> {
        if j == 0 || j > self.dim_n {
            return Err(Error::IndexOutOfRange { index: j, dim: self.dim_n });
        }
        let mut out = Self::zero(self.dim_n, self.space.clone());
        for (e, x) in &self.terms {
            let k = e[j - 1];
            if k > 0 {
                let mut lower = e.clone();
                lower[j - 1] -= 1;
                out.add_scaled_term(&lower, k as f64, x);
            }
        }
        Ok(out)
    }

    /// Expansion in the `Psi` basis.
    pub fn to_chaos(&self) -> ChaosExpansion {
        let mut out = ChaosExpansion::zero(self.dim_n, self.space.clone());
        let mut cache: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for (e, x) in &self.terms {
            let factors: Vec<(usize, Vec<f64>)> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| {
                    let coeffs = cache
                        .entry(k)
                        .or_insert_with(|| monomial_in_hermite(k as usize))
                        .clone();
                    (j + 1, coeffs)
                })
                .collect();
            for_each_product(&factors, &mut |picks, w| {
                let c = CountVector::from_pairs(picks).expect("indices are 1-based");
                // prod_j H_{k_j} = Psi_c / sqrt(c!)
                let scale = w / c.factorial_f64().sqrt();
                out.add_scaled_term(&c, scale, x);
            });
        }
        out
    }
}

/// Monomial-to-chaos conversion.
pub fn to_chaos(f: &MonomialFunctional) -> ChaosExpansion {
    f.to_chaos()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpansionRepr {
    dim_n: usize,
    space: BanachSpace,
    terms: BTreeMap<String, Vec<f64>>,
}

struct OrderedTerms<'a>(&'a BTreeMap<CountVector, Vec<f64>>);

impl Serialize for OrderedTerms<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (c, x) in self.0 {
            map.serialize_entry(&c.to_string(), x)?;
        }
        map.end()
    }
}

impl Serialize for ChaosExpansion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            dim_n: usize,
            space: &'a BanachSpace,
            terms: OrderedTerms<'a>,
        }
        Out {
            dim_n: self.dim_n,
            space: &self.space,
            terms: OrderedTerms(&self.terms),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChaosExpansion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ExpansionRepr::deserialize(d)?;
        let mut out = ChaosExpansion::zero(repr.dim_n, repr.space);
        for (key, x) in repr.terms {
            let c: CountVector = key.parse().map_err(D::Error::custom)?;
            out.add_term(&c, &x).map_err(D::Error::custom)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::MultiIndex;
    use approx::assert_relative_eq;

    fn cv(s: &str) -> CountVector {
        s.parse().unwrap()
    }

    fn scalar_monomial(n: usize, e: Vec<u32>) -> MonomialFunctional {
        MonomialFunctional::from_terms(n, BanachSpace::scalar(), [(e, vec![1.0])]).unwrap()
    }

    #[test]
    fn square_to_chaos() {
        let f = scalar_monomial(1, vec![2]).to_chaos();
        assert_eq!(f.len(), 2);
        assert_relative_eq!(f.coeff(&cv("")).unwrap()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(f.coeff(&cv("1:2")).unwrap()[0], 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn constant_and_product_to_chaos() {
        let x = vec![1.5, -2.0];
        let c = MonomialFunctional::from_terms(2, BanachSpace::l2(2), [(vec![0, 0], x.clone())])
            .unwrap()
            .to_chaos();
        assert_eq!(c.terms().len(), 1);
        assert_eq!(c.coeff(&cv("")).unwrap(), x.as_slice());
        let p = MonomialFunctional::from_terms(2, BanachSpace::l2(2), [(vec![1, 1], x.clone())])
            .unwrap()
            .to_chaos();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.coeff(&cv("1:1,2:1")).unwrap(), x.as_slice());
    }

    #[test]
    fn evaluate_examples() {
        let space = BanachSpace::l2(2);
        let x = vec![0.5, 1.0];
        let k = ChaosExpansion::constant(1, space.clone(), x.clone()).unwrap();
        assert_eq!(k.evaluate_at(&[3.0]).unwrap(), x);
        let g = ChaosExpansion::gamma(1, space, 1, x).unwrap();
        assert_eq!(g.evaluate_at(&[2.0]).unwrap(), vec![1.0, 2.0]);
        assert!(g.evaluate_at(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn projections() {
        let cube = scalar_monomial(1, vec![3]).to_chaos();
        let j1 = cube.project(1);
        assert_eq!(j1.len(), 1);
        assert_relative_eq!(j1.coeff(&cv("1:1")).unwrap()[0], 3.0, epsilon = 1e-14);
        let sq = scalar_monomial(1, vec![2]).to_chaos();
        assert_eq!(sq.project(0).coeff(&cv("")).unwrap(), &[1.0]);
        assert!(sq.project(1).is_zero());
    }

    #[test]
    fn exact_l2_norms() {
        let sq = scalar_monomial(1, vec![2]).to_chaos();
        assert_relative_eq!(sq.l2_norm_exact().unwrap(), 3f64.sqrt(), epsilon = 1e-14);
        let f = ChaosExpansion::from_terms(
            2,
            BanachSpace::l2(2),
            [(cv("1:1"), vec![1.0, 0.0]), (cv("2:1"), vec![0.0, 1.0])],
        )
        .unwrap();
        assert_relative_eq!(f.l2_norm_exact().unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let k = ChaosExpansion::constant(1, BanachSpace::l2(2), vec![3.0, 4.0]).unwrap();
        assert_eq!(k.l2_norm_exact().unwrap(), 5.0);
        let linf = ChaosExpansion::zero(1, BanachSpace::linf(2));
        assert!(matches!(linf.l2_norm_exact(), Err(Error::UnsupportedNorm(_))));
    }

    #[test]
    fn phi_examples() {
        let space = BanachSpace::l2(2);
        let x = vec![1.0, -3.0];
        let t1 = ElementaryOperator::from_terms(1, 3, space.clone(), [(MultiIndex::from(vec![2]), x.clone())]).unwrap();
        let f1 = phi_m(&t1, true).unwrap();
        assert_eq!(f1.coeff(&cv("2:1")).unwrap(), x.as_slice());

        let t2 = ElementaryOperator::from_terms(2, 2, space.clone(), [(MultiIndex::from(vec![1, 1]), x.clone())]).unwrap();
        let f2 = phi_m(&t2, true).unwrap();
        assert_eq!(f2.coeff(&cv("1:2")).unwrap(), x.as_slice());

        // P_s(u1 (x) u2) (x) x puts x/2 on (1,2) and (2,1); the image is Psi_(1,2) x / sqrt(2)
        let ps = ElementaryOperator::from_terms(2, 2, space.clone(), [(MultiIndex::from(vec![1, 2]), x.clone())])
            .unwrap()
            .symmetrize();
        let f = phi_m(&ps, true).unwrap();
        let got = f.coeff(&cv("1:1,2:1")).unwrap();
        for (a, b) in got.iter().zip(&x) {
            assert_relative_eq!(*a, b / 2f64.sqrt(), epsilon = 1e-15);
        }

        let asym = ElementaryOperator::from_terms(2, 2, space, [(MultiIndex::from(vec![1, 2]), x)]).unwrap();
        assert!(matches!(phi_m(&asym, true), Err(Error::SymmetryViolation(_))));
        assert!(phi_m(&asym, false).is_ok());
    }

    #[test]
    fn mul_gamma_matches_monomial_route() {
        let f = MonomialFunctional::from_terms(
            2,
            BanachSpace::scalar(),
            [(vec![2, 1], vec![1.0]), (vec![0, 3], vec![-0.5]), (vec![0, 0], vec![2.0])],
        )
        .unwrap();
        let via_chaos = f.to_chaos().mul_gamma(1).unwrap();
        let g1 = MonomialFunctional::from_terms(2, BanachSpace::scalar(), [(vec![1, 0], vec![1.0])]).unwrap();
        for pt in [[0.3, -1.2], [1.7, 0.4], [-2.0, 2.5]] {
            let lhs = via_chaos.evaluate_at(&pt).unwrap()[0];
            let rhs = f.evaluate_at(&pt).unwrap()[0] * g1.evaluate_at(&pt).unwrap()[0];
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_matches_pointwise() {
        let a = scalar_monomial(2, vec![3, 1]).to_chaos();
        let b = scalar_monomial(2, vec![1, 2]).to_chaos().add(&ChaosExpansion::constant(2, BanachSpace::scalar(), vec![0.5]).unwrap()).unwrap();
        let p = a.pair(&b).unwrap();
        for pt in [[0.3, -1.2], [1.1, 0.7]] {
            let lhs = p.evaluate_at(&pt).unwrap()[0];
            let rhs = a.evaluate_at(&pt).unwrap()[0] * b.evaluate_at(&pt).unwrap()[0];
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn round_trip_through_monomials() {
        let f = MonomialFunctional::from_terms(
            3,
            BanachSpace::l2(2),
            [(vec![2, 0, 1], vec![1.0, 0.5]), (vec![0, 4, 0], vec![-1.0, 0.0])],
        )
        .unwrap();
        let back = f.to_chaos().to_monomial();
        for (e, x) in f.terms() {
            let y = back.terms().get(e).unwrap();
            for (a, b) in x.iter().zip(y) {
                assert_relative_eq!(*a, b, epsilon = 1e-12);
            }
        }
        for (e, y) in back.terms() {
            if !f.terms().contains_key(e) {
                assert!(y.iter().all(|v| v.abs() < 1e-12), "spurious {e:?}");
            }
        }
    }

    #[test]
    fn zero_functional_is_accepted_everywhere() {
        let z = ChaosExpansion::zero(2, BanachSpace::l2(1));
        assert_eq!(z.l2_norm_exact().unwrap(), 0.0);
        assert!(z.project(3).is_zero());
        assert_eq!(z.evaluate_at(&[1.0, 2.0]).unwrap(), vec![0.0]);
        assert_eq!(z.mean(), vec![0.0]);
        assert!(z.to_monomial().terms().is_empty());
    }

    #[test]
    fn index_beyond_model_rejected() {
        let r = ChaosExpansion::gamma(2, BanachSpace::scalar(), 3, vec![1.0]);
        assert!(matches!(r, Err(Error::IndexOutOfRange { index: 3, dim: 2 })));
    }

    #[test]
    fn json_shape() {
        let f = scalar_monomial(2, vec![2, 1]).to_chaos();
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.starts_with(r#"{"dim_n":2,"space":{"dim":1,"norm":"l2"},"terms":{"#));
        assert!(json.contains(r#""1:2,2:1":"#));
        let back: ChaosExpansion = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"dim_n":1,"space":{"dim":1,"norm":"l2"},"terms":{"2:1":[1.0]}}"#;
        assert!(serde_json::from_str::<ChaosExpansion>(bad).is_err());
    }
}
