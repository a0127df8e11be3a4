//! Elementary operators `T = sum_i (u_{i_1} (x) ... (x) u_{i_m}) (x) x_i`.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chaos::{axpy, is_zero_vec};
use crate::error::{check_dim, Error, Result};
use crate::gaussian::{GaussianSample, SampleLayout};
use crate::mc::{estimate_lp_norms, EstimateResult, McConfig};
use crate::multiindex::MultiIndex;
use crate::space::{dot, BanachSpace};

/// RNG substream used by [`ElementaryOperator::gamma_norms_mc`].
pub const GAMMA_NORM_STREAM: u64 = 0x7a11;

#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryOperator {
    order: usize,
    dim_n: usize,
    space: BanachSpace,
    table: BTreeMap<MultiIndex, Vec<f64>>,
}

impl ElementaryOperator {
    pub fn zero(order: usize, dim_n: usize, space: BanachSpace) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("operator order must be >= 1".into()));
        }
        Ok(Self {
            order,
            dim_n,
            space,
            table: BTreeMap::new(),
        })
    }

    /// Builds from `(key, coefficient)` pairs; repeated keys are summed.
    pub fn from_terms<I>(order: usize, dim_n: usize, space: BanachSpace, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Vec<f64>)>,
    {
        let mut out = Self::zero(order, dim_n, space)?;
        for (i, x) in terms {
            out.add_term(&i, &x)?;
        }
        Ok(out)
    }

    pub fn add_term(&mut self, i: &MultiIndex, x: &[f64]) -> Result<()> {
        check_dim(self.order, i.order())?;
        check_dim(self.space.dim, x.len())?;
        if i.sup() > self.dim_n {
            return Err(Error::IndexOutOfRange {
                index: i.sup(),
                dim: self.dim_n,
            });
        }
        self.add_scaled(i, 1.0, x);
        Ok(())
    }

    fn add_scaled(&mut self, i: &MultiIndex, a: f64, x: &[f64]) {
        if a == 0.0 || is_zero_vec(x) {
            return;
        }
        let entry = self.table.entry(i.clone()).or_insert_with(|| vec![0.0; x.len()]);
        axpy(a, x, entry);
        if is_zero_vec(entry) {
            self.table.remove(i);
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

    pub fn table(&self) -> &BTreeMap<MultiIndex, Vec<f64>> {
        &self.table
    }

    pub fn coeff(&self, i: &MultiIndex) -> Option<&[f64]> {
        self.table.get(i).map(|v| v.as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = Self {
            table: BTreeMap::new(),
            ..self.clone()
        };
        for (i, x) in &self.table {
            out.add_scaled(i, a, x);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.order, other.order)?;
        check_dim(self.dim_n, other.dim_n)?;
        check_dim(self.space.dim, other.space.dim)?;
        let mut out = self.clone();
        for (i, x) in &other.table {
            out.add_scaled(i, 1.0, x);
        }
        Ok(out)
    }

    /// `P_s T`: each coefficient replaced by its average over the permutation orbit.
    pub fn symmetrize(&self) -> Self {
        if self.is_exactly_symmetric() {
            return self.clone();
        }
        let mut orbits: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
        for (i, x) in &self.table {
            let rep = i.counts().representative();
            let sum = orbits.entry(rep).or_insert_with(|| vec![0.0; x.len()]);
            axpy(1.0, x, sum);
        }
        let mut out = Self {
            table: BTreeMap::new(),
            ..self.clone()
        };
        for (rep, sum) in orbits {
            let size = rep.counts().orbit_size() as f64;
            let avg: Vec<f64> = sum.iter().map(|v| v / size).collect();
            if is_zero_vec(&avg) {
                continue;
            }
            for key in rep.distinct_permutations() {
                out.table.insert(key, avg.clone());
            }
        }
        out
    }

    fn is_exactly_symmetric(&self) -> bool {
        self.table.iter().all(|(i, x)| {
            i.distinct_permutations()
                .iter()
                .all(|k| self.table.get(k) == Some(x))
        })
    }

    /// True if `P_s T = T` up to a relative tolerance of `1e-12`.
    pub fn is_symmetric(&self) -> bool {
        let close = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .all(|(u, v)| (u - v).abs() <= 1e-12 * u.abs().max(v.abs()).max(1.0))
        };
        let zero = vec![0.0; self.space.dim];
        self.table.iter().all(|(i, x)| {
            i.distinct_permutations().iter().all(|k| {
                let y = self.table.get(k).map(|v| v.as_slice()).unwrap_or(&zero);
                close(x, y)
            })
        })
    }

    pub(crate) fn check_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::SymmetryViolation(format!(
                "order-{} operator is not invariant under permutations",
                self.order
            )))
        }
    }

    /// Every stored key has pairwise distinct entries.
    pub fn is_tetrahedral(&self) -> bool {
        self.table.keys().all(|i| i.is_tetrahedral())
    }

    /// `sum_i ||x_i||_2^2` over ordered keys.
    pub fn coeff_norm_squared(&self) -> f64 {
        self.table.values().map(|x| dot(x, x)).sum()
    }

    /// Exact `gamma^m` norm for a Hilbert target.
    pub fn gamma_norm_exact_hilbert(&self) -> Result<f64> {
        self.space.require_hilbert()?;
        Ok(self.coeff_norm_squared().sqrt())
    }

    /// `out = sum_i g^(1)_{i_1} ... g^(m)_{i_m} x_i`, slot `k` reading `rows[k]`.
    pub fn contract_into(&self, rows: &[&[f64]], out: &mut [f64]) {
        debug_assert_eq!(rows.len(), self.order);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, x) in &self.table {
            let w: f64 = i
                .entries()
                .iter()
                .zip(rows)
                .map(|(&j, row)| row[j - 1])
                .product();
            axpy(w, x, out);
        }
    }

    /// Decoupled gamma-norm `(E ||T(g^(1), ..., g^(m))||^p)^{1/p}` for each `p`.
    ///
    /// Slot `k` reads copy row `k`; a first-order operator reads the base row.
    pub fn gamma_norms_mc(&self, ps: &[f64], mc: &McConfig) -> Result<Vec<EstimateResult>> {
        let m = self.order;
        let layout = SampleLayout::new(self.dim_n, m, 0);
        let d = self.space.dim;
        let rows = decoupled_rows(m);
        let mut r = estimate_lp_norms(
            layout,
            mc.rng(GAMMA_NORM_STREAM),
            mc,
            1,
            ps,
            || vec![0.0; d],
            |buf, s, out| {
                self.contract_sample(s, &rows, buf);
                out[0] = self.space.norm_of(buf);
            },
        )?;
        Ok(r.remove(0))
    }

    pub fn gamma_norm_mc(&self, p: f64, mc: &McConfig) -> Result<EstimateResult> {
        Ok(self.gamma_norms_mc(&[p], mc)?[0])
    }

    pub(crate) fn contract_sample(&self, s: &GaussianSample, rows: &[usize], out: &mut [f64]) {
        let slices: Vec<&[f64]> = rows.iter().map(|&r| s.row(r)).collect();
        self.contract_into(&slices, out);
    }
}

/// Row read by each slot of a decoupled contraction of order `m`.
pub fn decoupled_rows(m: usize) -> Vec<usize> {
    if m == 1 {
        vec![0]
    } else {
        (1..=m).collect()
    }
}

/// `[T, S]_gamma = sum_j <T u_j, S u_j>` for first-order operators.
pub fn trace_pairing(t: &ElementaryOperator, s: &ElementaryOperator) -> Result<f64> {
    if t.order != 1 || s.order != 1 {
        return Err(Error::InvalidArgument("trace pairing needs first-order operators".into()));
    }
    check_dim(t.dim_n, s.dim_n)?;
    check_dim(t.space.dim, s.space.dim)?;
    Ok(t.table
        .iter()
        .filter_map(|(i, x)| s.table.get(i).map(|y| dot(x, y)))
        .sum())
}

struct OrderedTable<'a>(&'a BTreeMap<MultiIndex, Vec<f64>>);

impl Serialize for OrderedTable<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (i, x) in self.0 {
            map.serialize_entry(&i.to_string(), x)?;
        }
        map.end()
    }
}

pub(crate) fn serialize_table<S: Serializer>(
    table: &BTreeMap<MultiIndex, Vec<f64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    OrderedTable(table).serialize(s)
}

impl Serialize for ElementaryOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            order: usize,
            dim_n: usize,
            space: &'a BanachSpace,
            table: OrderedTable<'a>,
        }
        Out {
            order: self.order,
            dim_n: self.dim_n,
            space: &self.space,
            table: OrderedTable(&self.table),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ElementaryOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            order: usize,
            dim_n: usize,
            space: BanachSpace,
            table: BTreeMap<String, Vec<f64>>,
        }
        let r = Repr::deserialize(d)?;
        let mut out = Self::zero(r.order, r.dim_n, r.space).map_err(D::Error::custom)?;
        for (key, x) in r.table {
            let i: MultiIndex = key.parse().map_err(D::Error::custom)?;
            out.add_term(&i, &x).map_err(D::Error::custom)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn op(order: usize, n: usize, d: usize, terms: &[(&[usize], &[f64])]) -> ElementaryOperator {
        ElementaryOperator::from_terms(
            order,
            n,
            BanachSpace::l2(d),
            terms.iter().map(|(i, x)| (MultiIndex::from(i.to_vec()), x.to_vec())),
        )
        .unwrap()
    }

    #[test]
    fn symmetrize_pair() {
        let s = op(2, 2, 2, &[(&[1, 2], &[2.0, -1.0])]).symmetrize();
        assert_eq!(s.table().len(), 2);
        assert_eq!(s.coeff(&MultiIndex::from(vec![1, 2])).unwrap(), &[1.0, -0.5]);
        assert_eq!(s.coeff(&MultiIndex::from(vec![2, 1])).unwrap(), &[1.0, -0.5]);
        assert_eq!(s.symmetrize(), s);
    }

    #[test]
    fn symmetrize_repeated_entry_orbit() {
        let s = op(3, 2, 1, &[(&[1, 1, 2], &[3.0])]).symmetrize();
        assert_eq!(s.table().len(), 3);
        for key in [[1, 1, 2], [1, 2, 1], [2, 1, 1]] {
            assert_relative_eq!(s.coeff(&MultiIndex::from(key.to_vec())).unwrap()[0], 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn tetrahedral_predicate() {
        assert!(op(2, 2, 1, &[(&[1, 2], &[1.0])]).is_tetrahedral());
        assert!(!op(2, 2, 1, &[(&[1, 1], &[1.0])]).is_tetrahedral());
        assert!(ElementaryOperator::zero(2, 2, BanachSpace::scalar()).unwrap().is_tetrahedral());
    }

    #[test]
    fn exact_hilbert_norms() {
        assert_relative_eq!(op(2, 2, 2, &[(&[1, 2], &[3.0, 4.0])]).gamma_norm_exact_hilbert().unwrap(), 5.0);
        let t = op(2, 2, 2, &[(&[1, 1], &[1.0, 2.0]), (&[2, 2], &[0.0, 2.0])]);
        assert_relative_eq!(t.gamma_norm_exact_hilbert().unwrap(), 3.0, epsilon = 1e-15);
        let z = ElementaryOperator::zero(3, 2, BanachSpace::l2(1)).unwrap();
        assert_eq!(z.gamma_norm_exact_hilbert().unwrap(), 0.0);
        let linf = ElementaryOperator::zero(1, 2, BanachSpace::linf(2)).unwrap();
        assert!(matches!(linf.gamma_norm_exact_hilbert(), Err(Error::UnsupportedNorm(_))));
    }

    #[test]
    fn mc_matches_exact_for_l2() {
        let t = op(2, 3, 2, &[(&[1, 2], &[1.0, 0.5]), (&[3, 3], &[-1.0, 0.0]), (&[2, 1], &[0.0, 2.0])]);
        let mc = McConfig::new(40_000, 4);
        let est = t.gamma_norm_mc(2.0, &mc).unwrap();
        assert!(est.agrees_with_value(t.gamma_norm_exact_hilbert().unwrap(), 3.0), "{est:?}");
    }

    #[test]
    fn mc_zero_operator_is_exact_zero() {
        let z = ElementaryOperator::zero(2, 2, BanachSpace::linf(2)).unwrap();
        let est = z.gamma_norm_mc(2.0, &McConfig::new(10_000, 0)).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn trace_pairing_examples() {
        let t = op(1, 2, 2, &[(&[1], &[1.0, 2.0])]);
        let s = op(1, 2, 2, &[(&[1], &[3.0, -1.0])]);
        assert_eq!(trace_pairing(&t, &s).unwrap(), 1.0);
        let s2 = op(1, 2, 2, &[(&[2], &[3.0, -1.0])]);
        assert_eq!(trace_pairing(&t, &s2).unwrap(), 0.0);
        let s3 = op(1, 3, 2, &[(&[2], &[3.0, -1.0])]);
        assert!(matches!(trace_pairing(&t, &s3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_bad_keys() {
        let space = BanachSpace::scalar();
        let long = ElementaryOperator::from_terms(1, 2, space.clone(), [(MultiIndex::from(vec![1, 2]), vec![1.0])]);
        assert!(long.is_err());
        let big = ElementaryOperator::from_terms(1, 2, space, [(MultiIndex::from(vec![3]), vec![1.0])]);
        assert!(matches!(big, Err(Error::IndexOutOfRange { index: 3, dim: 2 })));
    }

    #[test]
    fn json_round_trip() {
        let t = op(2, 3, 1, &[(&[1, 3], &[0.5]), (&[2, 2], &[-1.0])]);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains(r#""table":{"1,3":[0.5],"2,2":[-1.0]}"#), "{json}");
        let back: ElementaryOperator = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
