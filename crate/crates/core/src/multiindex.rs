//! Multi-index combinatorics.
//!
//! A [`MultiIndex`] is an ordered tuple `(i_1, ..., i_m)` of 1-based basis
//! indices. Its multiplicities `j(i) = #{k : i_k = j}` are collected in a
//! [`CountVector`], which is the canonical key for the generalized Hermite
//! basis because `Psi_i` only depends on the multiplicities.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ordered tuple of basis indices (all entries >= 1).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<usize>);

/// Summary statistics of a multi-index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiStats {
    /// `|i|`, the length of the tuple.
    pub order: usize,
    /// `|i|_inf`, the largest entry (0 for the empty tuple).
    pub sup: usize,
    /// `i! = prod_j j(i)!`.
    pub factorial: u128,
    pub counts: CountVector,
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = entries.iter().find(|&&e| e == 0) {
            return Err(Error::InvalidArgument(format!(
                "multi-index entries are 1-based, got {bad}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn sup(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn counts(&self) -> CountVector {
        CountVector::from_indices(&self.0)
    }

    pub fn factorial(&self) -> u128 {
        self.counts().factorial()
    }

    /// True if all entries are distinct, i.e. `j(i) <= 1` for every `j`.
    pub fn is_tetrahedral(&self) -> bool {
        let mut seen = self.0.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    pub fn stats(&self) -> MultiStats {
        let counts = self.counts();
        MultiStats {
            order: self.order(),
            sup: self.sup(),
            factorial: counts.factorial(),
            counts,
        }
    }

    /// Appends an index, producing `(i, k)`.
    pub fn push(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        v.push(k);
        Self(v)
    }

    /// All distinct rearrangements of this tuple, in lexicographic order.
    pub fn distinct_permutations(&self) -> Vec<MultiIndex> {
        let mut v = self.0.clone();
        v.sort_unstable();
        let mut out = vec![Self(v.clone())];
        while next_permutation(&mut v) {
            out.push(Self(v.clone()));
        }
        out
    }

    /// Every ordered tuple of length `m` with entries in `1..=n`, lexicographically.
    pub fn all_ordered(m: usize, n: usize) -> Vec<MultiIndex> {
        if n == 0 {
            return if m == 0 { vec![Self::empty()] } else { Vec::new() };
        }
        let total = n.pow(m as u32);
        (0..total)
            .map(|mut code| {
                let mut v = vec![0; m];
                for slot in (0..m).rev() {
                    v[slot] = code % n + 1;
                    code /= n;
                }
                Self(v)
            })
            .collect()
    }
}

impl From<Vec<usize>> for MultiIndex {
    /// Panics on a zero entry; use [`MultiIndex::new`] for fallible construction.
    fn from(v: Vec<usize>) -> Self {
        Self::new(v).expect("multi-index entries must be >= 1")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Parses a comma-joined index tuple such as `"1,2,2"`; the empty string is `()`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let entries = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad index {p:?} in key {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

/// Lexicographic successor in place; returns false at the last permutation.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Order-invariant form of a multi-index: sorted `(index, multiplicity)` pairs
/// with every multiplicity >= 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CountVector(Vec<(usize, usize)>);

impl CountVector {
    /// The empty count vector, i.e. the constant chaos.
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        let mut map = BTreeMap::new();
        for &i in indices {
            *map.entry(i).or_insert(0usize) += 1;
        }
        Self(map.into_iter().collect())
    }

    /// Builds from `(index, multiplicity)` pairs; zero multiplicities are dropped
    /// and repeated indices are merged.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(i, k) in pairs {
            if i == 0 {
                return Err(Error::InvalidArgument("count vector indices are 1-based".into()));
            }
            if k > 0 {
                *map.entry(i).or_insert(0usize) += k;
            }
        }
        Ok(Self(map.into_iter().collect()))
    }

    /// From a dense exponent vector where entry `j-1` is the multiplicity of `j`.
    pub fn from_exponents(exps: &[u32]) -> Self {
        Self(
            exps.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| (j + 1, e as usize))
                .collect(),
        )
    }

    /// Dense exponent vector of length `n`.
    pub fn to_exponents(&self, n: usize) -> Vec<u32> {
        let mut v = vec![0u32; n];
        for &(j, k) in &self.0 {
            v[j - 1] = k as u32;
        }
        v
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&(_, k)| k).sum()
    }

    pub fn sup(&self) -> usize {
        self.0.last().map(|&(j, _)| j).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiplicity of index `j`.
    pub fn get(&self, j: usize) -> usize {
        self.0
            .binary_search_by_key(&j, |&(i, _)| i)
            .map(|pos| self.0[pos].1)
            .unwrap_or(0)
    }

    pub fn factorial(&self) -> u128 {
        self.0.iter().map(|&(_, k)| factorial(k)).product()
    }

    pub fn factorial_f64(&self) -> f64 {
        self.0.iter().map(|&(_, k)| factorial_f64(k)).product()
    }

    /// `c + e_j`.
    pub fn raised(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        match v.binary_search_by_key(&j, |&(i, _)| i) {
            Ok(pos) => v[pos].1 += 1,
            Err(pos) => v.insert(pos, (j, 1)),
        }
        Self(v)
    }

    /// `c - e_j`, or `None` if `j` does not occur.
    pub fn lowered(&self, j: usize) -> Option<Self> {
        let pos = self.0.binary_search_by_key(&j, |&(i, _)| i).ok()?;
        let mut v = self.0.clone();
        if v[pos].1 == 1 {
            v.remove(pos);
        } else {
            v[pos].1 -= 1;
        }
        Some(Self(v))
    }

    /// The sorted multi-index with these multiplicities.
    pub fn representative(&self) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .flat_map(|&(j, k)| std::iter::repeat_n(j, k))
                .collect(),
        )
    }

    /// Number of ordered tuples with these multiplicities, `|c|! / c!`.
    pub fn orbit_size(&self) -> u128 {
        factorial(self.order()) / self.factorial()
    }

    /// Every count vector of the given total order over indices `1..=n`.
    pub fn all_of_order(order: usize, n: usize) -> Vec<CountVector> {
        let mut out = Vec::new();
        let mut exps = vec![0u32; n];
        fill_compositions(order, 0, &mut exps, &mut out);
        out.sort();
        out
    }

    /// Every count vector of total order `<= max_order` over `1..=n`.
    pub fn all_up_to(max_order: usize, n: usize) -> Vec<CountVector> {
        (0..=max_order).flat_map(|m| Self::all_of_order(m, n)).collect()
    }
}

fn fill_compositions(rest: usize, pos: usize, exps: &mut Vec<u32>, out: &mut Vec<CountVector>) {
    if pos == exps.len() {
        if rest == 0 {
            out.push(CountVector::from_exponents(exps));
        }
        return;
    }
    for k in 0..=rest {
        exps[pos] = k as u32;
        fill_compositions(rest - k, pos + 1, exps, out);
    }
    exps[pos] = 0;
}

impl fmt::Display for CountVector {
    /// Sorted `index:multiplicity` pairs joined by commas; empty for the constant.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(j, k)| format!("{j}:{k}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for CountVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let (j, k) = part
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected index:multiplicity, got {part:?}")))?;
            let j: usize = j
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad index in {part:?}")))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad multiplicity in {part:?}")))?;
            if j == 0 || k == 0 {
                return Err(Error::Parse(format!("index and multiplicity must be >= 1 in {part:?}")));
            }
            pairs.push((j, k));
        }
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Parse(format!("count vector {s:?} is not sorted by index")));
        }
        Ok(Self(pairs))
    }
}

pub fn factorial(k: usize) -> u128 {
    (1..=k as u128).product()
}

pub fn factorial_f64(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_of_mixed_index() {
        let s = MultiIndex::from(vec![3, 1, 3]).stats();
        assert_eq!(s.order, 3);
        assert_eq!(s.sup, 3);
        assert_eq!(s.factorial, 2);
        assert_eq!(s.counts, CountVector::from_pairs(&[(1, 1), (3, 2)]).unwrap());
    }

    #[test]
    fn stats_of_empty_index() {
        let s = MultiIndex::empty().stats();
        assert_eq!((s.order, s.sup, s.factorial), (0, 0, 1));
        assert!(s.counts.is_empty());
    }

    #[test]
    fn stats_of_repeated_index() {
        let s = MultiIndex::from(vec![2, 2, 2]).stats();
        assert_eq!((s.order, s.sup, s.factorial), (3, 2, 6));
    }

    #[test]
    fn zero_entry_rejected() {
        assert!(MultiIndex::new(vec![1, 0]).is_err());
    }

    #[test]
    fn permutations_have_same_counts() {
        let i = MultiIndex::from(vec![1, 1, 2]);
        let perms = i.distinct_permutations();
        assert_eq!(perms.len(), 3);
        assert!(perms.iter().all(|p| p.counts() == i.counts()));
        assert_eq!(i.counts().orbit_size(), 3);
    }

    #[test]
    fn count_vector_string_round_trip() {
        let c = CountVector::from_pairs(&[(3, 2), (1, 1)]).unwrap();
        assert_eq!(c.to_string(), "1:1,3:2");
        assert_eq!("1:1,3:2".parse::<CountVector>().unwrap(), c);
        assert_eq!("".parse::<CountVector>().unwrap(), CountVector::empty());
        assert!("3:1,1:1".parse::<CountVector>().is_err());
        assert!("1:0".parse::<CountVector>().is_err());
    }

    #[test]
    fn raise_and_lower() {
        let c = CountVector::from_pairs(&[(2, 1)]).unwrap();
        let up = c.raised(2).raised(1);
        assert_eq!(up.to_string(), "1:1,2:2");
        assert_eq!(up.lowered(1).unwrap().to_string(), "2:2");
        assert!(c.lowered(5).is_none());
    }

    #[test]
    fn enumeration_sizes() {
        // stars and bars: C(n + m - 1, m)
        assert_eq!(CountVector::all_of_order(3, 4).len(), 20);
        assert_eq!(CountVector::all_up_to(6, 4).len(), 210);
        assert_eq!(MultiIndex::all_ordered(3, 2).len(), 8);
        assert_eq!(MultiIndex::all_ordered(0, 5), vec![MultiIndex::empty()]);
    }

    #[test]
    fn tetrahedral_predicate() {
        assert!(MultiIndex::from(vec![1, 3, 2]).is_tetrahedral());
        assert!(!MultiIndex::from(vec![1, 3, 1]).is_tetrahedral());
        assert!(MultiIndex::empty().is_tetrahedral());
    }
}
