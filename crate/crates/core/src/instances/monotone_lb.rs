//! Monotone instance where any sequential pricing sells to at most one
//! buyer while the ex ante relaxation serves `N` of them.

use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::instance::{Generated, Instance};
use crate::items::ItemSet;
use crate::pricing::{ItemPricing, RandomPricing};
use crate::valuation::Valuation;

pub const DEFAULT_EPS: f64 = 0.01;
/// Cross-intersections are verified exhaustively up to this `ℓ`.
pub const VERIFY_MAX_ELL: usize = 13;

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

pub fn largest_prime_at_most(n: usize) -> Option<usize> {
    (2..=n).rev().find(|&p| is_prime(p))
}

/// `ℓ` partitions of the `ℓ²` grid points `(x, y)` (item `xℓ + y`):
/// bundle `B_ij` is the line `y ≡ xi + j (mod ℓ)`.
#[derive(Clone, Debug)]
pub struct GoodCollection {
    pub ell: usize,
    /// `partitions[i][j]` is `B_ij`.
    pub partitions: Vec<Vec<ItemSet>>,
}

pub fn good_collection(ell: usize) -> Result<GoodCollection> {
    if !is_prime(ell) {
        return Err(Error::InvalidArgument(format!("{ell} is not prime")));
    }
    if ell * ell > crate::items::MAX_ITEMS {
        return Err(Error::TooLarge {
            what: "good collection items",
            size: ell * ell,
            limit: crate::items::MAX_ITEMS,
        });
    }
    let partitions = (0..ell)
        .map(|i| {
            (0..ell)
                .map(|j| ItemSet::from_items((0..ell).map(|x| x * ell + (x * i + j) % ell)))
                .collect()
        })
        .collect();
    let gc = GoodCollection { ell, partitions };
    if ell <= VERIFY_MAX_ELL {
        if let Some((i, j, i2, j2)) = gc.violation() {
            return Err(Error::InvalidArgument(format!(
                "bundles ({i},{j}) and ({i2},{j2}) break the collection"
            )));
        }
    }
    Ok(gc)
}

impl GoodCollection {
    /// First violated property: a partition whose bundles overlap or miss an
    /// item, or two bundles from different partitions that are disjoint.
    pub fn violation(&self) -> Option<(usize, usize, usize, usize)> {
        let all = ItemSet::full(self.ell * self.ell);
        for (i, part) in self.partitions.iter().enumerate() {
            let mut covered = ItemSet::empty();
            for (j, b) in part.iter().enumerate() {
                if b.len() != self.ell || b.intersects(&covered) {
                    return Some((i, j, i, j));
                }
                covered = covered.union(b);
            }
            if covered != all {
                return Some((i, 0, i, 0));
            }
        }
        for (i, pi) in self.partitions.iter().enumerate() {
            for (i2, pi2) in self.partitions.iter().enumerate().skip(i + 1) {
                for (j, b) in pi.iter().enumerate() {
                    for (j2, b2) in pi2.iter().enumerate() {
                        if !b.intersects(b2) {
                            return Some((i, j, i2, j2));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Parameters derived for an item count: the prime `ℓ` and active buyers `N`.
pub fn monotone_lb_sizes(m: usize, n: usize) -> Result<(usize, usize)> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("need m ≥ 4, got {m}")));
    }
    let root = (1..).take_while(|r| r * r <= m).last().unwrap();
    let ell = largest_prime_at_most(root).unwrap();
    Ok((ell, n.min(ell)))
}

/// Buyer `i < N` wants any bundle of partition `i`; later buyers value
/// nothing. Buyer `i < N`'s reference pricing is uniform over its bundles,
/// each priced at `(1-ε)/ℓ` per item with all other items at ∞.
pub fn gen_monotone_lb(m: usize, n: usize, eps: f64) -> Result<Generated> {
    let (ell, active) = monotone_lb_sizes(m, n)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps must lie in [0, 1), got {eps}")));
    }
    let gc = good_collection(ell)?;
    let price = (1.0 - eps) / ell as f64;
    let mut buyers = Vec::with_capacity(n);
    let mut reference = Vec::with_capacity(n);
    for i in 0..n {
        if i < active {
            buyers.push(BuyerDistribution::point(Valuation::bundle_threshold(
                m,
                gc.partitions[i].clone(),
            )?));
            let w = 1.0 / ell as f64;
            reference.push(RandomPricing::new(
                gc.partitions[i]
                    .iter()
                    .map(|b| (w, ItemPricing::uniform(m, price).masked(b)))
                    .collect(),
            )?);
        } else {
            buyers.push(BuyerDistribution::point(Valuation::zero(m)));
            reference.push(RandomPricing::point(ItemPricing::all_infinite(m)));
        }
    }
    Ok(Generated {
        instance: Instance::new(m, buyers)?,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{demand, expected_alloc, expected_rev};

    #[test]
    fn primes() {
        assert_eq!(largest_prime_at_most(3), Some(3));
        assert_eq!(largest_prime_at_most(10), Some(7));
        assert_eq!(largest_prime_at_most(1), None);
        assert!(good_collection(4).is_err());
    }

    #[test]
    fn ell_two_lines() {
        let gc = good_collection(2).unwrap();
        // Item (x, y) is 2x + y.
        assert_eq!(gc.partitions[0][0], ItemSet::from_items([0, 2]));
        assert_eq!(gc.partitions[1][0], ItemSet::from_items([0, 3]));
        assert_eq!(
            gc.partitions[0][0].intersection(&gc.partitions[1][0]),
            ItemSet::singleton(0)
        );
    }

    #[test]
    fn collections_are_good() {
        for ell in [2, 3, 5, 7, 11, 13] {
            let gc = good_collection(ell).unwrap();
            assert_eq!(gc.violation(), None);
            for part in &gc.partitions {
                for (j, b) in part.iter().enumerate() {
                    for b2 in &part[j + 1..] {
                        assert!(!b.intersects(b2));
                    }
                }
            }
        }
    }

    #[test]
    fn reference_value() {
        let g = gen_monotone_lb(9, 3, DEFAULT_EPS).unwrap();
        let mut value = 0.0;
        let mut total = vec![0.0; 9];
        for (d, q) in g.instance.buyers.iter().zip(&g.reference) {
            value += expected_rev(d, q).unwrap();
            for (t, a) in total.iter_mut().zip(expected_alloc(d, q).unwrap()) {
                *t += a;
            }
        }
        assert!((value - 2.97).abs() < 1e-12);
        for t in total {
            assert!((t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inactive_buyers_buy_nothing() {
        let g = gen_monotone_lb(9, 5, DEFAULT_EPS).unwrap();
        let v = &g.instance.buyers[4].support[0].valuation;
        for p in [ItemPricing::uniform(9, 0.0), ItemPricing::uniform(9, 0.5)] {
            assert!(demand(v, &p).unwrap().set.is_empty());
        }
    }
}
