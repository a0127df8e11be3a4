//! Normalized Hermite polynomials and the generalized Hermite basis.
//!
//! `H_m` here is fixed by `H_0 = 1`, `H_1 = x` and
//! `(m + 1) H_{m+1}(x) = x H_m(x) - H_{m-1}(x)`. This is the probabilists'
//! Hermite polynomial divided by `m!`: `H_m = He_m / m!`, so that
//! `E[H_m(g)^2] = 1/m!` for a standard Gaussian `g`. The generalized Hermite
//! polynomial `Psi_i = sqrt(i!) * prod_j H_{j(i)}(g_j)` is then orthonormal.

use crate::error::{Error, Result};
use crate::multiindex::{CountVector, MultiIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyBasis {
    Monomial,
    Hermite,
}

/// A univariate polynomial, coefficient `k` belonging to `x^k` or `H_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariatePoly {
    coeffs: Vec<f64>,
    basis: PolyBasis,
}

impl UnivariatePoly {
    /// Trailing exact zeros are trimmed.
    pub fn new(mut coeffs: Vec<f64>, basis: PolyBasis) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs, basis }
    }

    pub fn monomial(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs, PolyBasis::Monomial)
    }

    pub fn hermite(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs, PolyBasis::Hermite)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> PolyBasis {
        self.basis
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.basis {
            PolyBasis::Monomial => self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
            PolyBasis::Hermite => {
                let mut h_prev = 0.0;
                let mut h = 1.0;
                let mut acc = 0.0;
                for (m, &c) in self.coeffs.iter().enumerate() {
                    acc += c * h;
                    let next = (x * h - h_prev) / (m as f64 + 1.0);
                    h_prev = h;
                    h = next;
                }
                acc
            }
        }
    }

    /// Re-expresses the same function in `target`.
    pub fn convert(&self, target: PolyBasis) -> Self {
        basis_convert(self, target)
    }
}

/// `H_m(x)` by the three-term recurrence.
pub fn hermite_eval(m: usize, x: f64) -> f64 {
    let mut h_prev = 0.0;
    let mut h = 1.0;
    for k in 0..m {
        let next = (x * h - h_prev) / (k as f64 + 1.0);
        h_prev = h;
        h = next;
    }
    h
}

/// Fills `out[k] = H_k(x)` for `k < out.len()`.
pub fn hermite_eval_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 1..out.len().saturating_sub(1) {
        out[k + 1] = (x * out[k] - out[k - 1]) / (k as f64 + 1.0);
    }
}

/// Monomial coefficients of `H_m`.
pub fn hermite_coeffs(m: usize) -> UnivariatePoly {
    let mut prev: Vec<f64> = Vec::new();
    let mut cur = vec![1.0];
    for k in 0..m {
        // (k+1) H_{k+1} = x H_k - H_{k-1}
        let mut next = vec![0.0; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        let scale = 1.0 / (k as f64 + 1.0);
        next.iter_mut().for_each(|c| *c *= scale);
        prev = cur;
        cur = next;
    }
    UnivariatePoly::monomial(cur)
}

/// Change of basis between monomials and Hermite polynomials.
pub fn basis_convert(p: &UnivariatePoly, target: PolyBasis) -> UnivariatePoly {
    if p.basis == target {
        return p.clone();
    }
    match target {
        PolyBasis::Monomial => {
            let mut out = vec![0.0; p.coeffs.len()];
            for (m, &c) in p.coeffs.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (k, &h) in hermite_coeffs(m).coeffs().iter().enumerate() {
                    out[k] += c * h;
                }
            }
            UnivariatePoly::monomial(out)
        }
        PolyBasis::Hermite => {
            // H_m has leading coefficient 1/m!, so peel off the top degree repeatedly.
            let mut rest = p.coeffs.clone();
            let mut out = vec![0.0; rest.len()];
            for m in (0..rest.len()).rev() {
                if rest[m] == 0.0 {
                    continue;
                }
                let hm = hermite_coeffs(m);
                let lead = *hm.coeffs().last().expect("H_m is nonzero");
                let c = rest[m] / lead;
                out[m] = c;
                for (k, &h) in hm.coeffs().iter().enumerate().take(m) {
                    rest[k] -= c * h;
                }
                rest[m] = 0.0;
            }
            UnivariatePoly::hermite(out)
        }
    }
}

/// Hermite-basis coefficients of `x^k`, cached per degree by callers that need many.
pub fn monomial_in_hermite(k: usize) -> Vec<f64> {
    let mut c = vec![0.0; k + 1];
    c[k] = 1.0;
    let mut out = basis_convert(&UnivariatePoly::monomial(c), PolyBasis::Hermite)
        .coeffs
        .clone();
    out.resize(k + 1, 0.0);
    out
}

/// `Psi_i(g)` for an ordered multi-index.
pub fn psi_eval(i: &MultiIndex, g: &[f64]) -> Result<f64> {
    psi_eval_counts(&i.counts(), g)
}

/// `Psi_c(g)` keyed by multiplicities.
pub fn psi_eval_counts(c: &CountVector, g: &[f64]) -> Result<f64> {
    if c.sup() > g.len() {
        return Err(Error::IndexOutOfRange {
            index: c.sup(),
            dim: g.len(),
        });
    }
    let mut v = c.factorial_f64().sqrt();
    for &(j, k) in c.pairs() {
        v *= hermite_eval(k, g[j - 1]);
    }
    Ok(v)
}
