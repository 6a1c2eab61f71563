//! Exact demand with deterministic tie-breaking.
//!
//! The buyer takes a utility-maximizing set. Among sets whose utility is
//! within [`TOL`] of the best, the one with the largest total price wins;
//! remaining ties go to the smallest set in [`ItemSet`] order.

use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::pricing::{ItemPricing, RandomPricing};
use crate::valuation::{Valuation, TABLE_MAX_ITEMS};

pub const TOL: f64 = 1e-9;

/// Largest number of offered items the exhaustive oracle will enumerate.
pub const EXHAUSTIVE_MAX_ITEMS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct DemandResult {
    pub set: ItemSet,
    pub payment: f64,
    pub utility: f64,
}

impl DemandResult {
    pub fn nothing() -> Self {
        DemandResult {
            set: ItemSet::empty(),
            payment: 0.0,
            utility: 0.0,
        }
    }
}

/// Applies the tie-breaking rule to a candidate list. The empty set is
/// always considered.
pub(crate) fn select(candidates: impl IntoIterator<Item = DemandResult>) -> DemandResult {
    let mut all: Vec<DemandResult> = candidates.into_iter().collect();
    all.push(DemandResult::nothing());
    let best_u = all.iter().map(|c| c.utility).fold(f64::NEG_INFINITY, f64::max);
    all.retain(|c| c.utility >= best_u - TOL);
    let best_p = all.iter().map(|c| c.payment).fold(f64::NEG_INFINITY, f64::max);
    all.retain(|c| c.payment >= best_p - TOL);
    all.into_iter().min_by(|a, b| a.set.cmp(&b.set)).unwrap()
}

/// Best set for a single additive clause: items with positive margin, plus
/// zero-margin items that carry a positive price.
pub(crate) fn clause_candidate(clause: &[f64], p: &ItemPricing) -> ItemSet {
    let mut set = ItemSet::empty();
    for (j, &c) in clause.iter().enumerate() {
        let pj = p.get(j);
        if !pj.is_finite() {
            continue;
        }
        let margin = c - pj;
        if margin > TOL || (margin >= -TOL && pj > TOL) {
            set.insert(j);
        }
    }
    set
}

fn margin_sum(clause: &[f64], p: &ItemPricing, set: &ItemSet) -> f64 {
    set.iter().map(|j| clause[j] - p.get(j)).sum()
}

/// Demand for a maximum of additive clauses. Utilities are computed as sums
/// of per-item margins, which keeps ties exact when values and prices are
/// large and nearly cancel.
pub(crate) fn xos_demand(clauses: &[&[f64]], p: &ItemPricing) -> DemandResult {
    let candidates = clauses.iter().map(|c| {
        let set = clause_candidate(c, p);
        let utility = clauses
            .iter()
            .map(|d| margin_sum(d, p, &set))
            .fold(f64::NEG_INFINITY, f64::max);
        DemandResult {
            set,
            payment: p.price_of(&set),
            utility,
        }
    });
    select(candidates.collect::<Vec<_>>())
}

fn check_dims(v: &Valuation, p: &ItemPricing) -> Result<()> {
    if v.m() != p.m() {
        return Err(Error::DimensionMismatch {
            expected: v.m(),
            found: p.m(),
        });
    }
    Ok(())
}

pub fn demand(v: &Valuation, p: &ItemPricing) -> Result<DemandResult> {
    check_dims(v, p)?;
    Ok(match v {
        Valuation::Additive { values } => xos_demand(&[values], p),
        Valuation::Xos { clauses, .. } => {
            let refs: Vec<&[f64]> = clauses.iter().map(|c| c.as_slice()).collect();
            xos_demand(&refs, p)
        }
        Valuation::UnitDemand { values } => select(
            (0..values.len())
                .filter(|&j| p.get(j).is_finite())
                .map(|j| DemandResult {
                    set: ItemSet::singleton(j),
                    payment: p.get(j),
                    utility: values[j] - p.get(j),
                })
                .collect::<Vec<_>>(),
        ),
        Valuation::Table { m, .. } => {
            if *m > TABLE_MAX_ITEMS {
                return Err(Error::TooLarge {
                    what: "table item count",
                    size: *m,
                    limit: TABLE_MAX_ITEMS,
                });
            }
            demand_exhaustive(v, p)?
        }
        Valuation::BundleThreshold { bundles, .. } => select(
            bundles
                .iter()
                .filter_map(|b| {
                    let payment = p.price_of(b);
                    payment.is_finite().then_some(DemandResult {
                        set: *b,
                        payment,
                        utility: 1.0 - payment,
                    })
                })
                .collect::<Vec<_>>(),
        ),
        Valuation::XosLb(params) => params.demand(p),
        Valuation::RrsLb(params) => {
            let [c1, c2] = params.clauses();
            xos_demand(&[&c1, &c2], p)
        }
        Valuation::Restricted { inner, support } => demand(inner, &p.masked(support))?,
    })
}

/// Reference oracle: enumerates every subset of the offered items.
pub fn demand_exhaustive(v: &Valuation, p: &ItemPricing) -> Result<DemandResult> {
    check_dims(v, p)?;
    let offered: Vec<usize> = p.offered().to_vec();
    let k = offered.len();
    if k > EXHAUSTIVE_MAX_ITEMS {
        return Err(Error::TooLarge {
            what: "exhaustive demand enumeration",
            size: k,
            limit: EXHAUSTIVE_MAX_ITEMS,
        });
    }
    let n = 1usize << k;
    let mut sets = Vec::with_capacity(n);
    let mut utils = Vec::with_capacity(n);
    let mut pays = Vec::with_capacity(n);
    for idx in 0..n {
        let set = ItemSet::from_items((0..k).filter(|b| idx >> b & 1 == 1).map(|b| offered[b]));
        let pay = p.price_of(&set);
        utils.push(v.value(&set) - pay);
        pays.push(pay);
        sets.push(set);
    }
    let best_u = utils.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best_p = (0..n)
        .filter(|&i| utils[i] >= best_u - TOL)
        .map(|i| pays[i])
        .fold(f64::NEG_INFINITY, f64::max);
    // Index order over the offered items agrees with set order.
    let i = (0..n)
        .find(|&i| utils[i] >= best_u - TOL && pays[i] >= best_p - TOL)
        .unwrap();
    Ok(DemandResult {
        set: sets[i],
        payment: pays[i],
        utility: utils[i],
    })
}

/// Allocation indicator and revenue of one deterministic pricing against a
/// distribution.
pub fn alloc_and_rev(d: &BuyerDistribution, p: &ItemPricing) -> Result<(Vec<f64>, f64)> {
    let mut alloc = vec![0.0; d.m()];
    let mut rev = 0.0;
    for (prob, v) in d.iter() {
        if prob == 0.0 {
            continue;
        }
        let r = demand(v, p)?;
        for j in r.set.iter() {
            alloc[j] += prob;
        }
        rev += prob * r.payment;
    }
    Ok((alloc, rev))
}

pub fn expected_alloc(d: &BuyerDistribution, q: &RandomPricing) -> Result<Vec<f64>> {
    let mut alloc = vec![0.0; d.m()];
    for (pq, p) in q.iter() {
        let (a, _) = alloc_and_rev(d, p)?;
        for (x, y) in alloc.iter_mut().zip(a) {
            *x += pq * y;
        }
    }
    Ok(alloc)
}

pub fn expected_rev(d: &BuyerDistribution, q: &RandomPricing) -> Result<f64> {
    let mut rev = 0.0;
    for (pq, p) in q.iter() {
        rev += pq * alloc_and_rev(d, p)?.1;
    }
    Ok(rev)
}

/// Allocation of the restricted distribution `D|S`.
pub fn alloc_and_rev_restricted(
    d: &BuyerDistribution,
    set: &ItemSet,
    p: &ItemPricing,
) -> Result<(Vec<f64>, f64)> {
    alloc_and_rev(d, &p.masked(set))
}
