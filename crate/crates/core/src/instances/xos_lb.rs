//! XOS instance on which every sequential item pricing loses a
//! super-constant factor against the ex ante relaxation.
//!
//! A buyer values each item of a hidden set `A` (|A| = k) at `1 + t + ε`,
//! or any `tℓ` items at `1 + k/ℓ` each, whichever is larger.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::demand::{clause_candidate, select, DemandResult, TOL};
use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::instance::{Generated, Instance};
use crate::items::{ItemSet, MAX_ITEMS};
use crate::pricing::{ItemPricing, RandomPricing};
use crate::valuation::Valuation;

pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XosLbParams {
    pub m: usize,
    pub k: usize,
    pub t: usize,
    pub ell: usize,
    pub a: ItemSet,
    pub eps: f64,
}

impl XosLbParams {
    /// Parameters with `k`, `t`, `ℓ` chosen independently; used to
    /// cross-check the analytic oracle on small explicit representations.
    pub fn relaxed(m: usize, k: usize, t: usize, ell: usize, a: ItemSet, eps: f64) -> Result<Self> {
        let p = XosLbParams { m, k, t, ell, a, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m > MAX_ITEMS || self.a.bound() > self.m || self.a.len() != self.k {
            return Err(Error::InvalidValuation(format!(
                "A must be a {}-subset of {} items",
                self.k, self.m
            )));
        }
        if self.ell == 0 || self.t * self.ell > self.m {
            return Err(Error::InvalidValuation("need 1 ≤ ℓ and tℓ ≤ m".into()));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidValuation(format!("eps {}", self.eps)));
        }
        Ok(())
    }

    pub fn a_value(&self) -> f64 {
        1.0 + self.t as f64 + self.eps
    }

    pub fn b_value(&self) -> f64 {
        1.0 + self.k as f64 / self.ell as f64
    }

    pub fn b_size(&self) -> usize {
        self.t * self.ell
    }

    pub fn value(&self, set: &ItemSet) -> f64 {
        let va = self.a_value() * set.intersection(&self.a).len() as f64;
        let vb = self.b_value() * set.len().min(self.b_size()) as f64;
        va.max(vb)
    }

    fn a_clause(&self) -> Vec<f64> {
        (0..self.m)
            .map(|j| if self.a.contains(j) { self.a_value() } else { 0.0 })
            .collect()
    }

    fn utility(&self, set: &ItemSet, p: &ItemPricing) -> f64 {
        let ua: f64 = set
            .iter()
            .map(|j| if self.a.contains(j) { self.a_value() } else { 0.0 } - p.get(j))
            .sum();
        let ub = if set.len() <= self.b_size() {
            set.iter().map(|j| self.b_value() - p.get(j)).sum()
        } else {
            self.b_value() * self.b_size() as f64 - p.price_of(set)
        };
        ua.max(ub)
    }

    /// Analytic demand: the best `A`-set and the best `B`-set (the `tℓ`
    /// cheapest worthwhile items, ties by index) compete under the usual
    /// tie-breaking.
    pub fn demand(&self, p: &ItemPricing) -> DemandResult {
        let a_set = clause_candidate(&self.a_clause(), p);
        let b = self.b_value();
        let mut order: Vec<usize> = (0..self.m)
            .filter(|&j| {
                let pj = p.get(j);
                pj.is_finite() && (b - pj > TOL || (b - pj >= -TOL && pj > TOL))
            })
            .collect();
        order.sort_by(|&x, &y| p.get(x).partial_cmp(&p.get(y)).unwrap().then(x.cmp(&y)));
        order.truncate(self.b_size());
        let b_set = ItemSet::from_items(order);
        select([a_set, b_set].map(|set| DemandResult {
            set,
            payment: p.price_of(&set),
            utility: self.utility(&set, p),
        }))
    }

    /// Whether a demanded set is explained by the `A` clause.
    pub fn is_a_purchase(&self, set: &ItemSet) -> bool {
        !set.is_empty() && set.is_subset(&self.a)
    }

    /// Every clause written out: the `A` clause and one clause per
    /// `tℓ`-subset. Only for small cross-checks.
    pub fn explicit(&self, limit: usize) -> Result<Valuation> {
        let mut clauses = vec![self.a_clause()];
        let size = self.b_size();
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            if clauses.len() > limit {
                return Err(Error::TooLarge {
                    what: "explicit XOS clauses",
                    size: clauses.len(),
                    limit,
                });
            }
            let mut c = vec![0.0; self.m];
            for &j in &idx {
                c[j] = self.b_value();
            }
            clauses.push(c);
            // Next combination in lexicographic order.
            let mut i = size;
            while i > 0 && idx[i - 1] == self.m - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for r in i..size {
                idx[r] = idx[r - 1] + 1;
            }
        }
        Valuation::xos(self.m, clauses)
    }
}

/// Coupled sizes: `t` even, `k = 2^(t²)`, `m = k²`, `n = k`.
#[derive(Clone, Debug)]
pub struct XosLbConfig {
    pub t: usize,
    pub eps: f64,
    /// Each buyer's `A` is uniform over the blocks of this many independent
    /// random partitions of the items into `k` blocks of size `k`.
    pub partitions_per_buyer: usize,
}

impl XosLbConfig {
    pub fn new(t: usize, eps: f64) -> Self {
        XosLbConfig {
            t,
            eps,
            partitions_per_buyer: 1,
        }
    }
}

pub fn xos_lb_sizes(t: usize) -> Result<(usize, usize)> {
    if t < 2 || t % 2 == 1 {
        return Err(Error::InvalidArgument(format!("t must be even and ≥ 2, got {t}")));
    }
    let log_k = t * t;
    if log_k >= 16 || (1usize << (2 * log_k)) > MAX_ITEMS {
        return Err(Error::TooLarge {
            what: "XOS instance item count",
            size: if log_k < 32 { 1 << (2 * log_k) } else { usize::MAX },
            limit: MAX_ITEMS,
        });
    }
    let k = 1usize << log_k;
    Ok((k, k * k))
}

/// Builds the instance and the all-ones reference pricing.
///
/// `A` is uniform over the blocks of random partitions, so each item lies
/// in `A` with probability exactly `k/m`; `ℓ = 2^h` with `h` uniform in
/// `1..=t²/2`.
pub fn gen_xos_lb(config: &XosLbConfig, seed: u64) -> Result<Generated> {
    let (k, m) = xos_lb_sizes(config.t)?;
    if config.partitions_per_buyer == 0 {
        return Err(Error::InvalidArgument("need at least one partition".into()));
    }
    let hs: Vec<usize> = (1..=config.t * config.t / 2).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = k;
    let mut buyers = Vec::with_capacity(n);
    for _ in 0..n {
        let mut vals = Vec::new();
        for _ in 0..config.partitions_per_buyer {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut rng);
            for block in perm.chunks(k) {
                for &h in &hs {
                    let params = XosLbParams {
                        m,
                        k,
                        t: config.t,
                        ell: 1 << h,
                        a: ItemSet::from_items(block.iter().copied()),
                        eps: config.eps,
                    };
                    params.validate()?;
                    vals.push(Valuation::XosLb(params));
                }
            }
        }
        buyers.push(BuyerDistribution::uniform(vals)?);
    }
    let reference = vec![RandomPricing::point(ItemPricing::uniform(m, 1.0)); n];
    Ok(Generated {
        instance: Instance::new(m, buyers)?,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::demand_exhaustive;

    #[test]
    fn sizes() {
        assert_eq!(xos_lb_sizes(2).unwrap(), (16, 256));
        assert!(xos_lb_sizes(3).is_err());
        assert!(matches!(xos_lb_sizes(4), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn unit_prices_buy_a() {
        let g = gen_xos_lb(&XosLbConfig::new(2, DEFAULT_EPS), 7).unwrap();
        assert_eq!(g.instance.n(), 16);
        let p = ItemPricing::uniform(256, 1.0);
        for (_, v) in g.instance.buyers[0].iter() {
            let Valuation::XosLb(params) = v else { panic!() };
            assert!(params.ell == 2 || params.ell == 4);
            let r = params.demand(&p);
            assert_eq!(r.set, params.a);
            assert_eq!(r.payment, 16.0);
        }
    }

    #[test]
    fn all_infinite_buys_nothing() {
        let params =
            XosLbParams::relaxed(9, 3, 1, 2, ItemSet::from_items([0, 4, 8]), 0.0).unwrap();
        assert!(params.demand(&ItemPricing::all_infinite(9)).set.is_empty());
    }

    #[test]
    fn explicit_matches_closed_form_value() {
        let params =
            XosLbParams::relaxed(6, 2, 1, 2, ItemSet::from_items([1, 3]), 0.25).unwrap();
        let v = params.explicit(100).unwrap();
        for mask in 0..64 {
            let s = ItemSet::from_mask(mask);
            assert!((v.value(&s) - params.value(&s)).abs() < 1e-12);
        }
        let p = ItemPricing::new(vec![0.5, 2.0, 1.5, 2.2, 0.1, 3.0]).unwrap();
        assert_eq!(params.demand(&p).set, demand_exhaustive(&v, &p).unwrap().set);
    }
}
