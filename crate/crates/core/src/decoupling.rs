//! Coupled and decoupled Gaussian chaos pairs and their `L^p` norm ratios.
//!
//! For coefficients `x_i` indexed by ordered `m`-tuples, the coupled functional
//! uses one Gaussian sequence and the decoupled one draws slot `k` from copy
//! `k`. Symmetric coefficients couple through the Hermite basis
//! `sum_i (i!/m!)^{1/2} Psi_i x_i`; tetrahedral ones through the plain product
//! `sum_i g_{i_1} ... g_{i_m} x_i`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chaos::{phi_m, ChaosExpansion};
use crate::error::{Error, Result};
use crate::gaussian::{RngSpec, SampleLayout};
use crate::malliavin::{derivative_n, lp_norms_mc, GammaMode, Observable};
use crate::mc::{estimate_lp_norms, estimate_means, EstimateResult, McConfig};
use crate::multiindex::{factorial_f64, CountVector};
use crate::random::{random_symmetric_operator, random_tetrahedral_operator};
use crate::space::BanachSpace;
use crate::tensor::{decoupled_rows, ElementaryOperator, GAMMA_NORM_STREAM};

/// RNG substream of the Meyer-type reduction chain.
pub const MEYER_CHAIN_STREAM: u64 = 0x3e7e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseTag {
    Symmetric,
    Tetrahedral,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::Symmetric => "symmetric",
            CaseTag::Tetrahedral => "tetrahedral",
        })
    }
}

impl FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(CaseTag::Symmetric),
            "tetrahedral" => Ok(CaseTag::Tetrahedral),
            other => Err(Error::Parse(format!(
                "unknown case {other:?} (expected symmetric or tetrahedral)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingInstance {
    case: CaseTag,
    coefficients: ElementaryOperator,
}

/// Coupled and decoupled estimates for one moment order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub p: f64,
    pub coupled: EstimateResult,
    pub decoupled: EstimateResult,
    /// `coupled / decoupled`, or 1 when both vanish.
    pub ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else {
        a / b
    }
}

impl DecouplingInstance {
    pub fn new(case: CaseTag, coefficients: ElementaryOperator) -> Result<Self> {
        match case {
            CaseTag::Symmetric => coefficients.check_symmetric()?,
            CaseTag::Tetrahedral if !coefficients.is_tetrahedral() => {
                return Err(Error::NotTetrahedral("coefficients repeat an index".into()))
            }
            CaseTag::Tetrahedral => {}
        }
        Ok(Self { case, coefficients })
    }

    /// I.i.d. normal coefficients, symmetrized or masked to distinct indices.
    pub fn random(case: CaseTag, m: usize, n: usize, space: &BanachSpace, rng: RngSpec) -> Result<Self> {
        let coefficients = match case {
            CaseTag::Symmetric => random_symmetric_operator(m, n, space, rng)?,
            CaseTag::Tetrahedral => random_tetrahedral_operator(m, n, space, rng)?,
        };
        Self::new(case, coefficients)
    }

    pub fn case(&self) -> CaseTag {
        self.case
    }

    pub fn m(&self) -> usize {
        self.coefficients.order()
    }

    pub fn dim_n(&self) -> usize {
        self.coefficients.dim_n()
    }

    pub fn space(&self) -> &BanachSpace {
        self.coefficients.space()
    }

    pub fn coefficients(&self) -> &ElementaryOperator {
        &self.coefficients
    }

    /// The coupled functional `F` as an exact chaos expansion.
    pub fn build_coupled(&self) -> ChaosExpansion {
        let t = &self.coefficients;
        match self.case {
            CaseTag::Symmetric => phi_m(t, true).expect("symmetry checked on construction"),
            CaseTag::Tetrahedral => {
                // a product of distinct g_j is the Psi of their count vector
                let mut out = ChaosExpansion::zero(t.dim_n(), t.space().clone());
                for (i, x) in t.table() {
                    out.add_scaled_term(&CountVector::from_indices(i.entries()), 1.0, x);
                }
                out
            }
        }
    }

    /// `sum_i ||x_i||_2^2`, the exact decoupled second moment for Hilbert `E`.
    pub fn decoupled_second_moment(&self) -> f64 {
        self.coefficients.coeff_norm_squared()
    }

    /// `(E ||F||_2^2, E ||F~||_2^2)`, both exact.
    pub fn exact_second_moments(&self) -> (f64, f64) {
        (self.build_coupled().l2_norm_squared(), self.decoupled_second_moment())
    }

    /// `E ||F~||^p` to the power `1/p`, identical to the operator's gamma-norm estimate.
    pub fn decoupled_lp(&self, p: f64, mc: &McConfig) -> Result<EstimateResult> {
        self.coefficients.gamma_norm_mc(p, mc)
    }

    /// `E ||F||^p` to the power `1/p` on the samples used by [`Self::ratios`].
    pub fn coupled_lp(&self, p: f64, mc: &McConfig) -> Result<EstimateResult> {
        Ok(self.ratios(&[p], mc)?[0].coupled)
    }

    /// Coupled and decoupled estimates for every `p`, all from one set of samples.
    pub fn ratios(&self, ps: &[f64], mc: &McConfig) -> Result<Vec<RatioRow>> {
        let m = self.m();
        let f = self.build_coupled().compile();
        let t = &self.coefficients;
        let space = t.space();
        let d = space.dim;
        let rows = decoupled_rows(m);
        let layout = SampleLayout::new(t.dim_n(), m, 0);
        let est = estimate_lp_norms(
            layout,
            mc.rng(GAMMA_NORM_STREAM),
            mc,
            2,
            ps,
            || (f.scratch(), vec![0.0; d], vec![0.0; d]),
            |(table, fv, tv), s, out| {
                f.eval_into(s.base(), table, fv);
                t.contract_sample(s, &rows, tv);
                out[0] = space.norm_of(fv);
                out[1] = space.norm_of(tv);
            },
        )?;
        Ok(ps
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let (coupled, decoupled) = (est[0][k], est[1][k]);
                RatioRow {
                    p,
                    coupled,
                    decoupled,
                    ratio: ratio(coupled.estimate, decoupled.estimate),
                }
            })
            .collect())
    }

    /// Empirical `P(||F|| > s)` and `P(||F~|| > s)` for each threshold `s`.
    pub fn survival(&self, thresholds: &[f64], mc: &McConfig) -> Result<Vec<(f64, f64, f64)>> {
        let m = self.m();
        let f = self.build_coupled().compile();
        let t = &self.coefficients;
        let space = t.space();
        let d = space.dim;
        let rows = decoupled_rows(m);
        let k = thresholds.len();
        let stats = estimate_means(
            SampleLayout::new(t.dim_n(), m, 0),
            mc.rng(GAMMA_NORM_STREAM),
            mc,
            2 * k,
            || (f.scratch(), vec![0.0; d], vec![0.0; d]),
            |(table, fv, tv), s, out| {
                f.eval_into(s.base(), table, fv);
                t.contract_sample(s, &rows, tv);
                let (a, b) = (space.norm_of(fv), space.norm_of(tv));
                for (j, &th) in thresholds.iter().enumerate() {
                    out[j] = f64::from(u8::from(a > th));
                    out[k + j] = f64::from(u8::from(b > th));
                }
            },
        )?;
        Ok(thresholds
            .iter()
            .enumerate()
            .map(|(j, &th)| (th, stats[j].mean, stats[k + j].mean))
            .collect())
    }

    /// `Q_0, ..., Q_m` with `Q_k = (m!/(m-k)!)^{-1/2} ||D^k F||_p`, the `k` derivative
    /// slots contracted with fresh independent rows. `Q_0` is the coupled norm and
    /// `Q_m` the decoupled one; each step trades one chaos layer for one fresh copy.
    /// Symmetric instances only. Indexed `[k][p]`.
    pub fn meyer_chain(&self, ps: &[f64], mc: &McConfig) -> Result<Vec<Vec<EstimateResult>>> {
        if self.case != CaseTag::Symmetric {
            return Err(Error::InvalidArgument("the reduction chain needs symmetric coefficients".into()));
        }
        let m = self.m();
        let f = self.build_coupled();
        let ders = (1..=m)
            .map(|k| {
                let scale = (factorial_f64(m) / factorial_f64(m - k)).sqrt();
                Ok(derivative_n(&f, k)?.scale(1.0 / scale))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut items = vec![Observable::Chaos(&f)];
        items.extend(ders.iter().map(|u| Observable::Operator(u, GammaMode::Decoupled)));
        lp_norms_mc(&items, ps, mc, MEYER_CHAIN_STREAM)
    }
}

/// `(coupled, decoupled, ratio)` for one `p`.
pub fn decoupling_ratio(
    inst: &DecouplingInstance,
    p: f64,
    mc: &McConfig,
) -> Result<(EstimateResult, EstimateResult, f64)> {
    let r = inst.ratios(&[p], mc)?[0];
    Ok((r.coupled, r.decoupled, r.ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::MultiIndex;
    use crate::random::instance_stream;

    fn op(m: usize, n: usize, terms: &[(&[usize], f64)]) -> ElementaryOperator {
        ElementaryOperator::from_terms(
            m,
            n,
            BanachSpace::scalar(),
            terms.iter().map(|(i, x)| (MultiIndex::from(i.to_vec()), vec![*x])),
        )
        .unwrap()
    }

    #[test]
    fn coupled_examples() {
        let t = op(1, 3, &[(&[1], 1.0), (&[3], -2.0)]);
        let f = DecouplingInstance::new(CaseTag::Symmetric, t).unwrap().build_coupled();
        assert_eq!(f.coeff(&"1:1".parse().unwrap()).unwrap(), &[1.0]);
        assert_eq!(f.coeff(&"3:1".parse().unwrap()).unwrap(), &[-2.0]);

        let tet = DecouplingInstance::new(CaseTag::Tetrahedral, op(2, 2, &[(&[1, 2], 1.5)])).unwrap();
        let f = tet.build_coupled();
        assert_eq!(f.evaluate_at(&[2.0, 3.0]).unwrap(), vec![9.0]);

        let sq = DecouplingInstance::new(CaseTag::Symmetric, op(2, 1, &[(&[1, 1], 1.0)])).unwrap();
        let f = sq.build_coupled();
        assert_eq!(f.len(), 1);
        assert!((f.coeff(&"1:2".parse().unwrap()).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invariants_checked() {
        assert!(matches!(
            DecouplingInstance::new(CaseTag::Symmetric, op(2, 2, &[(&[1, 2], 1.0)])),
            Err(Error::SymmetryViolation(_))
        ));
        assert!(matches!(
            DecouplingInstance::new(CaseTag::Tetrahedral, op(2, 2, &[(&[1, 1], 1.0)])),
            Err(Error::NotTetrahedral(_))
        ));
    }

    #[test]
    fn symmetric_coupled_matches_wiener_ito_map() {
        let space = BanachSpace::l2(2);
        for k in 0..5 {
            let inst = DecouplingInstance::random(CaseTag::Symmetric, 3, 3, &space, RngSpec::new(9, instance_stream(k))).unwrap();
            let phi = phi_m(inst.coefficients(), true).unwrap();
            assert!(inst.build_coupled().max_abs_diff(&phi) < 1e-12);
        }
    }

    #[test]
    fn first_order_ratio_is_exactly_one() {
        let space = BanachSpace::linf(3);
        let inst = DecouplingInstance::random(CaseTag::Symmetric, 1, 4, &space, RngSpec::new(1, 2)).unwrap();
        let mc = McConfig::new(10_000, 4);
        let rows = inst.ratios(&[1.0, 2.0, 4.0], &mc).unwrap();
        for r in rows {
            assert_eq!(r.coupled, r.decoupled);
            assert_eq!(r.ratio, 1.0);
        }
        assert_eq!(inst.decoupled_lp(2.0, &mc).unwrap(), inst.coupled_lp(2.0, &mc).unwrap());
    }

    #[test]
    fn decoupled_matches_gamma_norm_and_exact_value() {
        let space = BanachSpace::l2(2);
        let inst = DecouplingInstance::random(CaseTag::Tetrahedral, 2, 4, &space, RngSpec::new(5, 0)).unwrap();
        let mc = McConfig::new(50_000, 8);
        let row = inst.ratios(&[2.0], &mc).unwrap()[0];
        assert_eq!(row.decoupled, inst.coefficients().gamma_norm_mc(2.0, &mc).unwrap());
        let exact = inst.decoupled_second_moment().sqrt();
        assert!(row.decoupled.agrees_with_value(exact, 3.0));
        assert!(row.coupled.agrees_with_value(exact, 3.0));
        let (a, b) = inst.exact_second_moments();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn second_moments_differ_when_an_orbit_has_two_keys() {
        // F = 2 g_1 g_2 while F~ has two independent products
        let inst = DecouplingInstance::new(CaseTag::Tetrahedral, op(2, 2, &[(&[1, 2], 1.0), (&[2, 1], 1.0)])).unwrap();
        assert_eq!(inst.exact_second_moments(), (4.0, 2.0));
    }

    #[test]
    fn zero_instance() {
        let z = ElementaryOperator::zero(2, 3, BanachSpace::linf(2)).unwrap();
        let inst = DecouplingInstance::new(CaseTag::Symmetric, z).unwrap();
        let row = inst.ratios(&[2.0], &McConfig::new(10_000, 0)).unwrap()[0];
        assert_eq!(row.decoupled.estimate, 0.0);
        assert_eq!(row.ratio, 1.0);
    }

    #[test]
    fn chain_ends_agree_with_direct_estimates() {
        let space = BanachSpace::linf(3);
        let inst = DecouplingInstance::random(CaseTag::Symmetric, 2, 3, &space, RngSpec::new(2, 7)).unwrap();
        let mc = McConfig::new(60_000, 8);
        let chain = inst.meyer_chain(&[2.0], &mc).unwrap();
        let direct = inst.ratios(&[2.0], &mc).unwrap()[0];
        assert!(chain[0][0].agrees_with(&direct.coupled, 4.0), "{:?} {:?}", chain[0][0], direct.coupled);
        assert!(chain[2][0].agrees_with(&direct.decoupled, 4.0), "{:?} {:?}", chain[2][0], direct.decoupled);
    }

    #[test]
    fn survival_is_monotone() {
        let inst = DecouplingInstance::random(CaseTag::Symmetric, 2, 3, &BanachSpace::linf(2), RngSpec::new(2, 7)).unwrap();
        let curve = inst.survival(&[0.0, 0.5, 1.0, 2.0, 4.0], &McConfig::new(10_000, 1)).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1 && w[1].2 <= w[0].2);
        }
    }
}
