//! Sequential mechanisms: buyers arrive in order and each faces an item
//! pricing over the items still unsold.

mod gs;
mod monotone;
mod monte_carlo;
mod ocrs_seq;
mod subadditive;

pub use gs::{GsConfig, GsMechanism};
pub use monotone::{MonotoneM2, MonotoneN};
pub use monte_carlo::{monte_carlo, McReport};
pub use ocrs_seq::OcrsSequential;
pub use subadditive::{
    high_price_bound, high_price_pricing, small_band_mass, Band, Branch, PriceBands, SubadditiveMechanism,
};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::demand::demand;
use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::pricing::ItemPricing;

#[derive(Clone, Debug, PartialEq)]
pub struct BuyerStep {
    /// Items unsold when the buyer arrives.
    pub available: ItemSet,
    /// All-∞ when the buyer is skipped.
    pub offered: ItemPricing,
    pub purchased: ItemSet,
    pub payment: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub steps: Vec<BuyerStep>,
    pub revenue: f64,
    /// Buyers offered nothing, whether by a coin flip or an empty-set draw.
    pub skips: usize,
    /// Buyers skipped because the recovery scheme broke the sampler's
    /// assumptions for them.
    pub hull_violations: usize,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current available set: everything not yet bought.
    pub fn available(&self, m: usize) -> ItemSet {
        match self.steps.last() {
            Some(s) => s.available.difference(&s.purchased),
            None => ItemSet::full(m),
        }
    }

    /// Samples a valuation from `d` and records its purchase at `offered`,
    /// which is masked to the available items first.
    pub fn offer<R: rand::Rng + ?Sized>(
        &mut self,
        m: usize,
        d: &BuyerDistribution,
        offered: &ItemPricing,
        rng: &mut R,
    ) -> Result<()> {
        let available = self.available(m);
        let offered = offered.masked(&available);
        let v = d.sample(rng);
        let r = demand(v, &offered)?;
        self.revenue += r.payment;
        self.steps.push(BuyerStep {
            available,
            offered,
            purchased: r.set,
            payment: r.payment,
        });
        Ok(())
    }

    pub fn skip(&mut self, m: usize) {
        let available = self.available(m);
        self.skips += 1;
        self.steps.push(BuyerStep {
            available,
            offered: ItemPricing::all_infinite(m),
            purchased: ItemSet::empty(),
            payment: 0.0,
        });
    }

    /// Ex post feasibility: each buyer buys only unsold items and pays the
    /// posted price, and the revenue adds up.
    pub fn validate(&self, m: usize) -> Result<()> {
        let mut left = ItemSet::full(m);
        let mut total = 0.0;
        for (i, s) in self.steps.iter().enumerate() {
            if s.available != left {
                return Err(Error::Transcript(format!(
                    "buyer {i} sees {:?} but {left:?} is unsold",
                    s.available
                )));
            }
            if !s.purchased.is_subset(&s.available) {
                return Err(Error::Transcript(format!(
                    "buyer {i} bought {:?} outside {:?}",
                    s.purchased, s.available
                )));
            }
            let price = s.offered.price_of(&s.purchased);
            if (price - s.payment).abs() > 1e-9 * price.abs().max(1.0) {
                return Err(Error::Transcript(format!(
                    "buyer {i} paid {} for a bundle priced {price}",
                    s.payment
                )));
            }
            left = left.difference(&s.purchased);
            total += s.payment;
        }
        if (total - self.revenue).abs() > 1e-9 * total.abs().max(1.0) {
            return Err(Error::Transcript(format!(
                "revenue {} but payments sum to {total}",
                self.revenue
            )));
        }
        Ok(())
    }
}

/// A randomized sequential mechanism over a fixed instance.
pub trait Mechanism: Sync {
    fn name(&self) -> &'static str;
    fn m(&self) -> usize;
    fn n(&self) -> usize;
    fn run(&self, rng: &mut ChaCha20Rng) -> Result<Transcript>;
}

/// Trial `t` of seed `s` uses ChaCha20 keyed by `s` on stream `t`, so
/// trials are independent of how they are scheduled.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::Valuation;

    #[test]
    fn offer_and_validate() {
        let d = BuyerDistribution::point(Valuation::additive(vec![2.0, 2.0]).unwrap());
        let mut t = Transcript::new();
        let mut rng = trial_rng(1, 0);
        t.offer(2, &d, &ItemPricing::new(vec![1.0, f64::INFINITY]).unwrap(), &mut rng).unwrap();
        t.offer(2, &d, &ItemPricing::uniform(2, 1.0), &mut rng).unwrap();
        t.skip(2);
        assert_eq!(t.steps[1].available, ItemSet::singleton(1));
        assert_eq!(t.steps[2].available, ItemSet::empty());
        assert_eq!(t.revenue, 2.0);
        assert_eq!(t.skips, 1);
        t.validate(2).unwrap();
        t.steps[1].purchased = ItemSet::from_items([0, 1]);
        assert!(t.validate(2).is_err());
    }

    #[test]
    fn streams_differ() {
        use rand::Rng;
        let a: u64 = trial_rng(5, 0).gen();
        let b: u64 = trial_rng(5, 1).gen();
        assert_ne!(a, b);
        assert_eq!(a, trial_rng(5, 0).gen::<u64>());
    }
}
