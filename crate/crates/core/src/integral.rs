//! Multiple Wiener-Ito integrals of simple functions on a finite partition.
//!
//! Cell `A_j` of the partition is wired to the basis vector
//! `u_j = mu(A_j)^{-1/2} 1_{A_j}`, so `W(A_j) = mu(A_j)^{1/2} g_j`.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chaos::{axpy, is_zero_vec, ChaosExpansion};
use crate::error::{check_dim, Error, Result};
use crate::multiindex::{factorial_f64, CountVector, MultiIndex};
use crate::space::{dot, BanachSpace};
use crate::tensor::{serialize_table, ElementaryOperator};

/// Cells `1..=q` with strictly positive masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSpaceModel {
    masses: Vec<f64>,
}

impl MeasureSpaceModel {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidArgument("a partition needs at least one cell".into()));
        }
        if let Some(bad) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidArgument(format!("cell masses must be positive, got {bad}")));
        }
        Ok(Self { masses })
    }

    pub fn unit(q: usize) -> Result<Self> {
        Self::new(vec![1.0; q])
    }

    pub fn cells(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `mu(A_j)` for 1-based `j`.
    pub fn mass(&self, j: usize) -> Result<f64> {
        if j == 0 || j > self.masses.len() {
            return Err(Error::UnknownCell {
                index: j,
                cells: self.masses.len(),
            });
        }
        Ok(self.masses[j - 1])
    }

    /// `prod_k mu(A_{i_k})`.
    fn key_mass(&self, i: &MultiIndex) -> Result<f64> {
        i.entries().iter().map(|&j| self.mass(j)).product()
    }
}

impl<'de> Deserialize<'de> for MeasureSpaceModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            masses: Vec<f64>,
        }
        Self::new(Repr::deserialize(d)?.masses).map_err(D::Error::custom)
    }
}

/// `F = sum_i 1_{A_{i_1} x ... x A_{i_m}} x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TetraSimpleFunction {
    order: usize,
    space: BanachSpace,
    table: BTreeMap<MultiIndex, Vec<f64>>,
}

impl TetraSimpleFunction {
    /// Builds a tetrahedral function; keys with a repeated cell are rejected.
    pub fn from_terms<I>(order: usize, space: BanachSpace, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Vec<f64>)>,
    {
        let f = Self::simple(order, space, terms)?;
        f.check_tetrahedral()?;
        Ok(f)
    }

    /// Builds a general simple function; the integral rejects it unless it is tetrahedral.
    pub fn simple<I>(order: usize, space: BanachSpace, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Vec<f64>)>,
    {
        if order == 0 {
            return Err(Error::InvalidArgument("simple function order must be >= 1".into()));
        }
        let mut table: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
        for (i, x) in terms {
            check_dim(order, i.order())?;
            check_dim(space.dim, x.len())?;
            let entry = table.entry(i.clone()).or_insert_with(|| vec![0.0; x.len()]);
            axpy(1.0, &x, entry);
            if is_zero_vec(entry) {
                table.remove(&i);
            }
        }
        Ok(Self { order, space, table })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &BanachSpace {
        &self.space
    }

    pub fn table(&self) -> &BTreeMap<MultiIndex, Vec<f64>> {
        &self.table
    }

    pub fn is_tetrahedral(&self) -> bool {
        self.table.keys().all(|i| i.is_tetrahedral())
    }

    fn check_tetrahedral(&self) -> Result<()> {
        match self.table.keys().find(|i| !i.is_tetrahedral()) {
            None => Ok(()),
            Some(i) => Err(Error::NotTetrahedral(format!("key ({i}) repeats a cell"))),
        }
    }

    fn sup(&self) -> usize {
        self.table.keys().map(|i| i.sup()).max().unwrap_or(0)
    }

    /// `F~`, the permutation average.
    pub fn symmetrize(&self) -> Self {
        let op = ElementaryOperator::from_terms(
            self.order,
            self.sup().max(1),
            self.space.clone(),
            self.table.iter().map(|(i, x)| (i.clone(), x.clone())),
        )
        .expect("keys were validated on construction");
        Self {
            order: self.order,
            space: self.space.clone(),
            table: op.symmetrize().table().clone(),
        }
    }

    /// `||F||^2_{L^2(M^m)} = sum_i ||x_i||_2^2 prod_k mu(A_{i_k})`.
    pub fn l2_norm_squared(&self, m: &MeasureSpaceModel) -> Result<f64> {
        self.table
            .iter()
            .map(|(i, x)| Ok(dot(x, x) * m.key_mass(i)?))
            .sum()
    }

    /// The operator in `gamma^m(L^2(M), E)` in the normalized-indicator basis.
    pub fn to_operator(&self, m: &MeasureSpaceModel) -> Result<ElementaryOperator> {
        let mut terms = Vec::with_capacity(self.table.len());
        for (i, x) in &self.table {
            let w = m.key_mass(i)?.sqrt();
            terms.push((i.clone(), x.iter().map(|v| v * w).collect()));
        }
        ElementaryOperator::from_terms(self.order, m.cells(), self.space.clone(), terms)
    }

    /// `I_m(F) = sum_i W(A_{i_1}) ... W(A_{i_m}) x_i`, exact.
    pub fn integrate(&self, m: &MeasureSpaceModel) -> Result<ChaosExpansion> {
        self.check_tetrahedral()?;
        let mut out = ChaosExpansion::zero(m.cells(), self.space.clone());
        for (i, x) in &self.table {
            let w = m.key_mass(i)?.sqrt();
            out.add_scaled_term(&CountVector::from_indices(i.entries()), w, x);
        }
        Ok(out)
    }

    /// `(E |I_m F|^2, m! ||F~||^2_{L^2(M^m)})` for a scalar function.
    pub fn ito_isometry_check(&self, m: &MeasureSpaceModel) -> Result<(f64, f64)> {
        check_dim(1, self.space.dim)?;
        let lhs = self.integrate(m)?.l2_norm_exact()?.powi(2);
        let rhs = factorial_f64(self.order) * self.symmetrize().l2_norm_squared(m)?;
        Ok((lhs, rhs))
    }
}

pub fn integrate_im(f: &TetraSimpleFunction, m: &MeasureSpaceModel) -> Result<ChaosExpansion> {
    f.integrate(m)
}

impl Serialize for TetraSimpleFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            order: usize,
            space: &'a BanachSpace,
            #[serde(serialize_with = "serialize_table")]
            table: &'a BTreeMap<MultiIndex, Vec<f64>>,
        }
        Out {
            order: self.order,
            space: &self.space,
            table: &self.table,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TetraSimpleFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            order: usize,
            space: BanachSpace,
            table: BTreeMap<String, Vec<f64>>,
        }
        let r = Repr::deserialize(d)?;
        let mut terms = Vec::with_capacity(r.table.len());
        for (key, x) in r.table {
            terms.push((key.parse::<MultiIndex>().map_err(D::Error::custom)?, x));
        }
        Self::from_terms(r.order, r.space, terms).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn f(order: usize, d: usize, terms: &[(&[usize], &[f64])]) -> TetraSimpleFunction {
        TetraSimpleFunction::from_terms(
            order,
            BanachSpace::l2(d),
            terms.iter().map(|(i, x)| (MultiIndex::from(i.to_vec()), x.to_vec())),
        )
        .unwrap()
    }

    #[test]
    fn to_operator_scales_by_root_masses() {
        let m = MeasureSpaceModel::new(vec![4.0]).unwrap();
        let t = f(1, 2, &[(&[1], &[1.0, -0.5])]).to_operator(&m).unwrap();
        assert_eq!(t.coeff(&MultiIndex::from(vec![1])).unwrap(), &[2.0, -1.0]);

        let unit = MeasureSpaceModel::unit(3).unwrap();
        let g = f(2, 1, &[(&[3, 1], &[0.7])]);
        assert_eq!(g.to_operator(&unit).unwrap().coeff(&MultiIndex::from(vec![3, 1])).unwrap(), &[0.7]);

        let m2 = MeasureSpaceModel::new(vec![4.0, 9.0]).unwrap();
        let t2 = f(2, 1, &[(&[1, 2], &[1.0])]).to_operator(&m2).unwrap();
        assert_relative_eq!(t2.coeff(&MultiIndex::from(vec![1, 2])).unwrap()[0], 6.0);

        assert!(matches!(
            f(1, 1, &[(&[3], &[1.0])]).to_operator(&m2),
            Err(Error::UnknownCell { index: 3, cells: 2 })
        ));
    }

    #[test]
    fn symmetrize_function_examples() {
        let s = f(2, 1, &[(&[1, 2], &[1.0])]).symmetrize();
        assert_eq!(s.table().len(), 2);
        assert_eq!(s.table()[&MultiIndex::from(vec![2, 1])], vec![0.5]);
        assert_eq!(s.symmetrize(), s);
        assert!(s.is_tetrahedral());
    }

    #[test]
    fn integral_examples() {
        let unit = MeasureSpaceModel::unit(2).unwrap();
        let i1 = f(1, 2, &[(&[1], &[1.0, 2.0])]).integrate(&unit).unwrap();
        assert_eq!(i1, ChaosExpansion::gamma(2, BanachSpace::l2(2), 1, vec![1.0, 2.0]).unwrap());

        let i2 = f(2, 1, &[(&[1, 2], &[1.0])]).integrate(&unit).unwrap();
        assert_eq!(i2.coeff(&"1:1,2:1".parse().unwrap()).unwrap(), &[1.0]);
        assert_eq!(i2.evaluate_at(&[2.0, -3.0]).unwrap(), vec![-6.0]);

        let (a, b) = (0.3, 2.5);
        let m = MeasureSpaceModel::new(vec![a, b]).unwrap();
        let e = f(2, 1, &[(&[1, 2], &[1.0])]).integrate(&m).unwrap();
        assert_relative_eq!(e.l2_norm_exact().unwrap().powi(2), a * b, max_relative = 1e-14);
    }

    #[test]
    fn non_tetrahedral_rejected() {
        let space = BanachSpace::scalar();
        let diag = [(MultiIndex::from(vec![1, 1]), vec![1.0])];
        assert!(matches!(
            TetraSimpleFunction::from_terms(2, space.clone(), diag.clone()),
            Err(Error::NotTetrahedral(_))
        ));
        let general = TetraSimpleFunction::simple(2, space, diag).unwrap();
        assert!(matches!(
            general.integrate(&MeasureSpaceModel::unit(1).unwrap()),
            Err(Error::NotTetrahedral(_))
        ));
    }

    #[test]
    fn isometry_examples() {
        let unit = MeasureSpaceModel::unit(2).unwrap();
        let (lhs, rhs) = f(2, 1, &[(&[1, 2], &[1.0])]).ito_isometry_check(&unit).unwrap();
        assert_relative_eq!(lhs, 1.0, epsilon = 1e-15);
        assert_relative_eq!(rhs, 1.0, epsilon = 1e-15);
        let zero = f(2, 1, &[]);
        assert_eq!(zero.ito_isometry_check(&unit).unwrap(), (0.0, 0.0));
        assert!(f(1, 2, &[(&[1], &[1.0, 0.0])]).ito_isometry_check(&unit).is_err());
    }

    #[test]
    fn masses_validated() {
        assert!(MeasureSpaceModel::new(vec![1.0, 0.0]).is_err());
        assert!(MeasureSpaceModel::new(vec![]).is_err());
        assert!(serde_json::from_str::<MeasureSpaceModel>(r#"{"masses":[1.0,-2.0]}"#).is_err());
        let m: MeasureSpaceModel = serde_json::from_str(r#"{"masses":[1.0,2.0]}"#).unwrap();
        assert_eq!(m.cells(), 2);
    }

    #[test]
    fn json_round_trip() {
        let g = f(2, 1, &[(&[1, 3], &[0.5]), (&[2, 1], &[-1.0])]);
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains(r#""1,3":[0.5]"#));
        let back: TetraSimpleFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"order":2,"space":{"dim":1,"norm":"l2"},"table":{"1,1":[1.0]}}"#;
        assert!(serde_json::from_str::<TetraSimpleFunction>(bad).is_err());
    }
}
