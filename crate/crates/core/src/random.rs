//! Reproducible random instances.
//!
//! Every generator draws i.i.d. standard normal coefficients from a
//! [`NormalStream`], visiting keys in their sorted order, so an instance is a
//! pure function of its [`RngSpec`].

use crate::chaos::ChaosExpansion;
use crate::error::{Error, Result};
use crate::gaussian::{NormalStream, RngSpec};
use crate::integral::{MeasureSpaceModel, TetraSimpleFunction};
use crate::malliavin::OperatorValuedExpansion;
use crate::multiindex::{CountVector, MultiIndex};
use crate::space::BanachSpace;
use crate::tensor::ElementaryOperator;

/// Stream id reserved for instance number `k`, far from the Monte Carlo streams.
pub fn instance_stream(k: u64) -> u64 {
    (1 << 32) + k
}

fn normals(stream: &mut NormalStream, d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    stream.fill(&mut x);
    x
}

/// Dense operator: a normal coefficient on every ordered key.
pub fn random_operator(m: usize, n: usize, space: &BanachSpace, rng: RngSpec) -> Result<ElementaryOperator> {
    let mut s = NormalStream::new(rng);
    let keys = MultiIndex::all_ordered(m, n);
    ElementaryOperator::from_terms(
        m,
        n,
        space.clone(),
        keys.into_iter().map(|i| (i, normals(&mut s, space.dim))).collect::<Vec<_>>(),
    )
}

/// Symmetrized dense operator.
pub fn random_symmetric_operator(m: usize, n: usize, space: &BanachSpace, rng: RngSpec) -> Result<ElementaryOperator> {
    Ok(random_operator(m, n, space, rng)?.symmetrize())
}

/// Tetrahedral operator with one nonzero key per multiset: the strictly
/// increasing tuples. With a single key per permutation orbit the coupled and
/// decoupled functionals have the same second moment.
pub fn random_tetrahedral_operator(m: usize, n: usize, space: &BanachSpace, rng: RngSpec) -> Result<ElementaryOperator> {
    let full = random_operator(m, n, space, rng)?;
    ElementaryOperator::from_terms(
        m,
        n,
        space.clone(),
        full.table()
            .iter()
            .filter(|(i, _)| i.entries().windows(2).all(|w| w[0] < w[1]))
            .map(|(i, x)| (i.clone(), x.clone()))
            .collect::<Vec<_>>(),
    )
}

/// Normal coefficients on every chaos key whose order is listed in `orders`.
pub fn random_chaos(n: usize, space: &BanachSpace, orders: &[usize], rng: RngSpec) -> Result<ChaosExpansion> {
    let mut s = NormalStream::new(rng);
    let mut terms = Vec::new();
    for &m in orders {
        for c in CountVector::all_of_order(m, n) {
            terms.push((c, normals(&mut s, space.dim)));
        }
    }
    ChaosExpansion::from_terms(n, space.clone(), terms)
}

/// A polynomial functional with every chaos order in `0..=max_order`.
pub fn random_polynomial(n: usize, space: &BanachSpace, max_order: usize, rng: RngSpec) -> Result<ChaosExpansion> {
    let orders: Vec<usize> = (0..=max_order).collect();
    random_chaos(n, space, &orders, rng)
}

/// A first-order operator-valued polynomial with chaos orders `0..=max_order`.
pub fn random_operator_valued(
    n: usize,
    space: &BanachSpace,
    max_order: usize,
    rng: RngSpec,
) -> Result<OperatorValuedExpansion> {
    let wide = BanachSpace::l2(n * space.dim);
    let f = random_polynomial(n, &wide, max_order, rng)?;
    OperatorValuedExpansion::from_terms(1, n, space.clone(), f.terms().clone())
}

/// Tetrahedral simple function on `q` cells with a normal coefficient on every admissible key.
pub fn random_tetra_function(m: usize, q: usize, space: &BanachSpace, rng: RngSpec) -> Result<TetraSimpleFunction> {
    if m > q {
        return Err(Error::InvalidArgument(format!(
            "a tetrahedral function of order {m} needs at least {m} cells, got {q}"
        )));
    }
    let mut s = NormalStream::new(rng);
    let keys: Vec<MultiIndex> = MultiIndex::all_ordered(m, q)
        .into_iter()
        .filter(|i| i.is_tetrahedral())
        .collect();
    TetraSimpleFunction::from_terms(
        m,
        space.clone(),
        keys.into_iter().map(|i| (i, normals(&mut s, space.dim))).collect::<Vec<_>>(),
    )
}

/// Masses `exp(z / 2)` with `z` standard normal.
pub fn random_masses(q: usize, rng: RngSpec) -> Result<MeasureSpaceModel> {
    let mut s = NormalStream::new(rng);
    MeasureSpaceModel::new((0..q).map(|_| (0.5 * s.next_normal()).exp()).collect())
}
