//! Instance showing that no revenue recovery scheme beats roughly `√m`
//! when the reference pricing has geometric prices.
//!
//! Items `0..m-1` carry prices `β, β², …, β^(m-1)` and the last item is
//! free, with `β = √(m-1)`. A valuation is indexed by a level
//! `i ∈ 1..m` (item `i-1`) and a set `R` of lower items. Component one
//! values item `i-1` at `β^i` and the free item at
//! `ε + Σ_{k∈R} (β^i - p_k)`; component two values every item of `R` at `β^i`.

use serde::{Deserialize, Serialize};

use crate::demand::{DemandResult, TOL};
use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::items::{ItemSet, MAX_ITEMS};
use crate::pricing::ItemPricing;
use crate::valuation::Valuation;

pub const DEFAULT_EPS: f64 = 1e-6;
/// Largest `m` for which the support is materialized (2^(m-1) - 1 atoms).
pub const EXPLICIT_MAX_ITEMS: usize = 18;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrsLbParams {
    pub m: usize,
    /// Level `i`, between 1 and `m-1`; the valuation's own item is `i-1`.
    pub level: usize,
    pub r: ItemSet,
    pub beta: f64,
    pub eps: f64,
}

impl RrsLbParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.m > MAX_ITEMS || self.level == 0 || self.level >= self.m {
            return Err(Error::InvalidValuation(format!(
                "level {} out of range for m = {}",
                self.level, self.m
            )));
        }
        if self.r.bound() > self.level - 1 {
            return Err(Error::InvalidValuation("R must lie below the level".into()));
        }
        if !(self.beta > 1.0 && self.eps >= 0.0) {
            return Err(Error::InvalidValuation("need β > 1 and ε ≥ 0".into()));
        }
        Ok(())
    }

    /// Reference price of item `j` (the last item is free).
    pub fn price(&self, j: usize) -> f64 {
        geometric_price(self.beta, self.m, j)
    }

    pub fn clauses(&self) -> [Vec<f64>; 2] {
        let top = self.beta.powi(self.level as i32);
        let mut c1 = vec![0.0; self.m];
        let mut c2 = vec![0.0; self.m];
        c1[self.level - 1] = top;
        let mut bonus = 0.0;
        for k in self.r.iter() {
            bonus += top - self.price(k);
            c2[k] = top;
        }
        c1[self.m - 1] = self.eps + bonus;
        [c1, c2]
    }

    pub fn value(&self, set: &ItemSet) -> f64 {
        let [c1, c2] = self.clauses();
        let a: f64 = set.iter().map(|j| c1[j]).sum();
        let b: f64 = set.iter().map(|j| c2[j]).sum();
        a.max(b)
    }
}

pub fn geometric_price(beta: f64, m: usize, j: usize) -> f64 {
    if j + 1 == m {
        0.0
    } else {
        beta.powi(j as i32 + 1)
    }
}

/// The lower-bound distribution, kept implicit so large `m` stays cheap.
#[derive(Clone, Debug)]
pub struct RrsLbInstance {
    pub m: usize,
    pub eps: f64,
    pub beta: f64,
    /// `Σ_{i=1}^{m-1} β^{-i}`.
    pub sigma: f64,
    /// Inclusion probability of each lower item in `R`.
    pub rho: f64,
}

pub fn gen_rrs_lb(m: usize, eps: f64) -> Result<RrsLbInstance> {
    if !(5..=MAX_ITEMS).contains(&m) {
        return Err(Error::InvalidArgument(format!("need 5 ≤ m ≤ {MAX_ITEMS}, got {m}")));
    }
    let beta = ((m - 1) as f64).sqrt();
    let sigma = (1..m).map(|i| beta.powi(-(i as i32))).sum();
    Ok(RrsLbInstance {
        m,
        eps,
        beta,
        sigma,
        rho: 1.0 / beta,
    })
}

impl RrsLbInstance {
    pub fn level_prob(&self, level: usize) -> f64 {
        self.beta.powi(-(level as i32)) / self.sigma
    }

    /// `(β, β², …, β^(m-1), 0)`.
    pub fn pricing(&self) -> ItemPricing {
        ItemPricing::new((0..self.m).map(|j| geometric_price(self.beta, self.m, j)).collect())
            .unwrap()
    }

    /// Every item except the free one.
    pub fn available(&self) -> ItemSet {
        ItemSet::full(self.m - 1)
    }

    pub fn params(&self, level: usize, r: ItemSet) -> RrsLbParams {
        RrsLbParams {
            m: self.m,
            level,
            r,
            beta: self.beta,
            eps: self.eps,
        }
    }

    /// Visits every support atom `(probability, params)` once.
    pub fn for_each_atom<F: FnMut(f64, RrsLbParams)>(&self, mut f: F) {
        for level in 1..self.m {
            let below = level - 1;
            let pl = self.level_prob(level);
            let weights: Vec<f64> = (0..=below)
                .map(|c| self.rho.powi(c as i32) * (1.0 - self.rho).powi((below - c) as i32))
                .collect();
            for mask in 0..1u64 << below {
                let r = ItemSet::from_mask(mask);
                f(pl * weights[mask.count_ones() as usize], self.params(level, r));
            }
        }
    }

    pub fn support_size(&self) -> usize {
        (1usize << (self.m - 1)) - 1
    }

    pub fn distribution(&self) -> Result<BuyerDistribution> {
        if self.m > EXPLICIT_MAX_ITEMS {
            return Err(Error::TooLarge {
                what: "explicit lower-bound support item count",
                size: self.m,
                limit: EXPLICIT_MAX_ITEMS,
            });
        }
        let mut support = Vec::with_capacity(self.support_size());
        self.for_each_atom(|w, params| support.push((w, Valuation::RrsLb(params))));
        BuyerDistribution::new(support)
    }

    /// Exact `Rev(D|S, q)` for `S` = every item but the free one.
    ///
    /// With the free item withheld, component one only offers the level's
    /// own item, and component two only ever buys items of `R` priced at
    /// most `β^i`. Items of `R` above that price never matter, so each level
    /// enumerates subsets of the relevant lower items, with sums accumulated
    /// in ascending item order as the generic oracle does.
    pub fn restricted_revenue(&self, q: &ItemPricing) -> f64 {
        let mut total = 0.0;
        for level in 1..self.m {
            let top = self.beta.powi(level as i32);
            let own = level - 1;
            let relevant: Vec<usize> = (0..own)
                .filter(|&k| {
                    let qk = q.get(k);
                    qk.is_finite() && (top - qk > TOL || (top - qk >= -TOL && qk > TOL))
                })
                .collect();
            let own_price = q.get(own);
            let own_buy = own_price.is_finite()
                && (top - own_price > TOL || (top - own_price >= -TOL && own_price > TOL));
            let one = if own_buy {
                Some((top - own_price, own_price))
            } else {
                None
            };
            let margins: Vec<f64> = relevant.iter().map(|&k| top - q.get(k)).collect();
            let prices: Vec<f64> = relevant.iter().map(|&k| q.get(k)).collect();
            let acc = level_revenue(&margins, &prices, one, self.rho);
            total += self.level_prob(level) * acc;
        }
        total
    }

    /// `Σ_{j∈S} p_j Alloc_j(D, p)` in closed form: `(m-1)/σ`.
    pub fn reference_mass(&self) -> f64 {
        (self.m - 1) as f64 / self.sigma
    }

    /// Upper bound on any pricing's revenue from the restricted distribution.
    pub fn revenue_bound(&self) -> f64 {
        4.0 / self.sigma * ((self.m - 1) as f64).sqrt()
    }
}

/// Payment of one buyer whose component two would buy `count` items for
/// utility `u2` and payment `p2`, given component one's `(utility, payment)`.
fn leaf(u2: f64, p2: f64, count: usize, one: Option<(f64, f64)>) -> f64 {
    // Candidates: ∅, the level's own item, and R ∩ relevant. The set order
    // puts R (all lower items) before the own item.
    let mut cands: Vec<(f64, f64, u8)> = vec![(0.0, 0.0, 0)];
    if count > 0 {
        cands.push((u2, p2, 1));
    }
    if let Some((u1, p1)) = one {
        cands.push((u1, p1, 2));
    }
    let bu = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    cands.retain(|c| c.0 >= bu - TOL);
    let bp = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    cands
        .iter()
        .filter(|c| c.1 >= bp - TOL)
        .min_by_key(|c| c.2)
        .unwrap()
        .1
}

/// Sizes up to this are enumerated directly.
const DIRECT_MAX: usize = 14;

/// Expected payment of one level, `R` drawn with inclusion `rho` over the
/// relevant items.
///
/// Large levels meet in the middle: component two wins outright once its
/// utility clears the alternative by more than the tolerance and loses
/// outright below it, so only the band in between is resolved pair by pair.
fn level_revenue(margins: &[f64], prices: &[f64], one: Option<(f64, f64)>, rho: f64) -> f64 {
    let g = margins.len();
    if g <= DIRECT_MAX {
        let weights: Vec<f64> = (0..=g)
            .map(|c| rho.powi(c as i32) * (1.0 - rho).powi((g - c) as i32))
            .collect();
        let mut acc = 0.0;
        dfs(margins, prices, 0, 0.0, 0.0, 0, one, &weights, &mut acc);
        return acc;
    }
    let h = g / 2;
    let left = half(&margins[..h], &prices[..h], rho);
    let mut right = half(&margins[h..], &prices[h..], rho);
    right.sort_by(|a, b| a.u.total_cmp(&b.u));
    let mut cum_w = vec![0.0; right.len() + 1];
    let mut cum_wp = vec![0.0; right.len() + 1];
    for (i, r) in right.iter().enumerate() {
        cum_w[i + 1] = cum_w[i] + r.w;
        cum_wp[i + 1] = cum_wp[i] + r.w * r.p;
    }
    let alt = one.map_or(0.0, |o| o.0.max(0.0));
    let lose = leaf(0.0, 0.0, 0, one);
    let n = right.len();
    let mut acc = 0.0;
    for l in &left {
        let lo = right.partition_point(|r| l.u + r.u < alt - TOL);
        let hi = right.partition_point(|r| l.u + r.u <= alt + TOL).max(lo);
        acc += l.w * cum_w[lo] * lose;
        acc += l.w * (l.p * (cum_w[n] - cum_w[hi]) + (cum_wp[n] - cum_wp[hi]));
        for r in &right[lo..hi] {
            acc += l.w * r.w * leaf(l.u + r.u, l.p + r.p, l.c + r.c, one);
        }
    }
    acc
}

struct HalfSum {
    u: f64,
    p: f64,
    c: usize,
    w: f64,
}

fn half(margins: &[f64], prices: &[f64], rho: f64) -> Vec<HalfSum> {
    let g = margins.len();
    (0..1u32 << g)
        .map(|mask| {
            let (mut u, mut p) = (0.0, 0.0);
            for k in 0..g {
                if mask >> k & 1 == 1 {
                    u += margins[k];
                    p += prices[k];
                }
            }
            let c = mask.count_ones() as usize;
            HalfSum {
                u,
                p,
                c,
                w: rho.powi(c as i32) * (1.0 - rho).powi((g - c) as i32),
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    margins: &[f64],
    prices: &[f64],
    pos: usize,
    u2: f64,
    p2: f64,
    count: usize,
    one: Option<(f64, f64)>,
    weights: &[f64],
    acc: &mut f64,
) {
    if pos == margins.len() {
        *acc += weights[count] * leaf(u2, p2, count, one);
        return;
    }
    dfs(margins, prices, pos + 1, u2, p2, count, one, weights, acc);
    dfs(
        margins,
        prices,
        pos + 1,
        u2 + margins[pos],
        p2 + prices[pos],
        count + 1,
        one,
        weights,
        acc,
    );
}

/// One demand evaluation on the explicit two-component representation.
pub fn rrs_lb_demand(params: &RrsLbParams, p: &ItemPricing) -> DemandResult {
    let v = Valuation::RrsLb(params.clone());
    crate::demand::demand(&v, p).expect("dimensions agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{alloc_and_rev, demand_exhaustive};

    #[test]
    fn support_is_a_distribution() {
        let inst = gen_rrs_lb(7, DEFAULT_EPS).unwrap();
        let d = inst.distribution().unwrap();
        assert_eq!(d.support.len(), inst.support_size());
        assert!(gen_rrs_lb(4, DEFAULT_EPS).is_err());
    }

    #[test]
    fn demand_under_reference_is_own_plus_free() {
        let inst = gen_rrs_lb(8, DEFAULT_EPS).unwrap();
        let p = inst.pricing();
        inst.for_each_atom(|_, params| {
            let r = rrs_lb_demand(&params, &p);
            assert_eq!(r.set, ItemSet::from_items([params.level - 1, 7]));
        });
    }

    #[test]
    fn analytic_demand_matches_exhaustive() {
        let inst = gen_rrs_lb(9, 0.01).unwrap();
        let p = inst.pricing();
        let mut count = 0;
        inst.for_each_atom(|_, params| {
            count += 1;
            if count % 7 != 0 {
                return;
            }
            let v = Valuation::RrsLb(params.clone());
            let mut q = p.scaled(0.6).prices().to_vec();
            q[params.level % 8] = f64::INFINITY;
            let q = ItemPricing::new(q).unwrap();
            for pr in [&p, &q] {
                assert_eq!(
                    rrs_lb_demand(&params, pr).set,
                    demand_exhaustive(&v, pr).unwrap().set
                );
            }
        });
    }

    #[test]
    fn restricted_revenue_matches_generic() {
        let inst = gen_rrs_lb(9, DEFAULT_EPS).unwrap();
        let d = inst.distribution().unwrap();
        let s = inst.available();
        let b = inst.beta;
        let qs = [
            inst.pricing(),
            inst.pricing().scaled(0.5),
            ItemPricing::new((0..9).map(|j| b.powi(j + 2) / 2.0).collect()).unwrap(),
            ItemPricing::new(vec![b, b, b * b, 4.0, b.powi(4), f64::INFINITY, 1.0, 100.0, 0.0])
                .unwrap(),
        ];
        for q in &qs {
            let (_, generic) = alloc_and_rev(&d, &q.masked(&s)).unwrap();
            let fast = inst.restricted_revenue(q);
            assert!((generic - fast).abs() <= 1e-9 * (1.0 + generic), "{generic} vs {fast}");
        }
    }

    #[test]
    fn meet_in_the_middle_matches_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        for case in 0..20 {
            let g = 15 + case % 4;
            let top = 5.0;
            // Quarter-step prices make exact ties between sums common.
            let prices: Vec<f64> = (0..g).map(|_| rng.gen_range(0..=20) as f64 / 4.0).collect();
            let margins: Vec<f64> = prices.iter().map(|q| top - q).collect();
            let one = match case % 3 {
                0 => None,
                1 => Some((1.0, 4.0)),
                _ => Some((rng.gen_range(0..8) as f64 / 4.0, 3.0)),
            };
            let weights: Vec<f64> = (0..=g)
                .map(|c| 0.3f64.powi(c) * 0.7f64.powi(((g - c))))
                .collect();
            let mut direct = 0.0;
            dfs(&margins, &prices, 0, 0.0, 0.0, 0, one, &weights, &mut direct);
            let split = level_revenue(&margins, &prices, one, 0.3);
            assert!((direct - split).abs() <= 1e-9 * (1.0 + direct), "{direct} vs {split}");
        }
    }
}
