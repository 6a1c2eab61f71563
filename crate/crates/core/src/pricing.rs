//! Item pricings and finite distributions over them.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::items::ItemSet;

/// A price per item; `f64::INFINITY` means the item is not offered.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemPricing {
    prices: Vec<f64>,
}

impl ItemPricing {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if let Some(j) = prices.iter().position(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "price of item {j} is {}",
                prices[j]
            )));
        }
        Ok(ItemPricing { prices })
    }

    pub fn uniform(m: usize, price: f64) -> Self {
        ItemPricing {
            prices: vec![price; m],
        }
    }

    pub fn all_infinite(m: usize) -> Self {
        Self::uniform(m, f64::INFINITY)
    }

    pub fn m(&self) -> usize {
        self.prices.len()
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn get(&self, j: usize) -> f64 {
        self.prices[j]
    }

    /// Total price of `set`; infinite if any member is not offered.
    pub fn price_of(&self, set: &ItemSet) -> f64 {
        set.iter().map(|j| self.prices[j]).sum()
    }

    /// Items with a finite price.
    pub fn offered(&self) -> ItemSet {
        ItemSet::from_items((0..self.m()).filter(|&j| self.prices[j].is_finite()))
    }

    /// Same prices on `set`, infinite elsewhere.
    pub fn masked(&self, set: &ItemSet) -> Self {
        ItemPricing {
            prices: (0..self.m())
                .map(|j| {
                    if set.contains(j) {
                        self.prices[j]
                    } else {
                        f64::INFINITY
                    }
                })
                .collect(),
        }
    }

    pub fn scaled(&self, gamma: f64) -> Self {
        ItemPricing {
            prices: self.prices.iter().map(|p| p * gamma).collect(),
        }
    }

    pub fn is_all_infinite(&self) -> bool {
        self.prices.iter().all(|p| p.is_infinite())
    }
}

impl Serialize for ItemPricing {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.prices.iter().map(|&p| PriceRepr(p)))
    }
}

impl<'de> Deserialize<'de> for ItemPricing {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let prices = Vec::<PriceRepr>::deserialize(d)?;
        ItemPricing::new(prices.into_iter().map(|p| p.0).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// A single price: a number, or the string `"inf"`.
#[derive(Clone, Copy, Debug)]
pub struct PriceRepr(pub f64);

impl Serialize for PriceRepr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for PriceRepr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(PriceRepr(x)),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "Infinity" | "+inf") => {
                Ok(PriceRepr(f64::INFINITY))
            }
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad price {s:?}"))),
        }
    }
}

/// Finite-support distribution over item pricings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RandomPricing {
    pub support: Vec<PricingAtom>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PricingAtom {
    pub prob: f64,
    pub prices: ItemPricing,
}

pub(crate) const PROB_TOL: f64 = 1e-12;

impl RandomPricing {
    pub fn new(support: Vec<(f64, ItemPricing)>) -> Result<Self> {
        let rp = RandomPricing {
            support: support
                .into_iter()
                .map(|(prob, prices)| PricingAtom { prob, prices })
                .collect(),
        };
        rp.validate()?;
        Ok(rp)
    }

    /// Rescales weights that sum to 1 up to rounding; zero-weight atoms are
    /// dropped unless nothing else remains.
    pub fn normalized(atoms: Vec<(f64, ItemPricing)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.0).sum();
        if !(total > 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "pricing weights sum to {total}"
            )));
        }
        let mut support: Vec<PricingAtom> = atoms
            .iter()
            .filter(|a| a.0 > 0.0)
            .map(|(prob, prices)| PricingAtom {
                prob: prob / total,
                prices: prices.clone(),
            })
            .collect();
        if support.is_empty() {
            support.push(PricingAtom {
                prob: 1.0,
                prices: atoms[0].1.clone(),
            });
        }
        let rp = RandomPricing { support };
        rp.validate()?;
        Ok(rp)
    }

    pub fn point(p: ItemPricing) -> Self {
        RandomPricing {
            support: vec![PricingAtom {
                prob: 1.0,
                prices: p,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::InvalidDistribution("empty pricing support".into()));
        }
        let m = self.support[0].prices.m();
        let mut total = 0.0;
        for a in &self.support {
            if a.prices.m() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: a.prices.m(),
                });
            }
            if !(a.prob >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {}",
                    a.prob
                )));
            }
            total += a.prob;
        }
        if (total - 1.0).abs() > PROB_TOL * self.support.len().max(1) as f64 {
            return Err(Error::InvalidDistribution(format!(
                "pricing probabilities sum to {total}"
            )));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.support[0].prices.m()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &ItemPricing)> {
        self.support.iter().map(|a| (a.prob, &a.prices))
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_weighted(self.support.iter().map(|a| a.prob), rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &ItemPricing {
        &self.support[self.sample_index(rng)].prices
    }

    /// Mix with the all-infinite pricing, keeping weight `keep` on `self`.
    pub fn thinned(&self, keep: f64) -> Self {
        let mut support: Vec<PricingAtom> = self
            .support
            .iter()
            .map(|a| PricingAtom {
                prob: a.prob * keep,
                prices: a.prices.clone(),
            })
            .collect();
        support.push(PricingAtom {
            prob: 1.0 - keep,
            prices: ItemPricing::all_infinite(self.m()),
        });
        RandomPricing { support }
    }
}

/// Draws an index proportional to `weights` (assumed to sum to about 1).
pub(crate) fn sample_weighted<I, R>(weights: I, rng: &mut R) -> usize
where
    I: IntoIterator<Item = f64>,
    R: Rng + ?Sized,
{
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            last = k;
        }
        acc += w;
        if u < acc && w > 0.0 {
            return k;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_prices() {
        assert!(ItemPricing::new(vec![1.0, -0.5]).is_err());
        assert!(ItemPricing::new(vec![0.0, f64::INFINITY]).is_ok());
    }

    #[test]
    fn masked_prices() {
        let p = ItemPricing::new(vec![1.0, 2.0, 3.0]).unwrap();
        let q = p.masked(&ItemSet::from_items([1]));
        assert_eq!(q.prices(), &[f64::INFINITY, 2.0, f64::INFINITY]);
        assert_eq!(q.offered(), ItemSet::from_items([1]));
    }

    #[test]
    fn random_pricing_must_sum_to_one() {
        let p = ItemPricing::uniform(2, 1.0);
        assert!(RandomPricing::new(vec![(0.5, p.clone())]).is_err());
        assert!(RandomPricing::new(vec![(0.5, p.clone()), (0.5, p)]).is_ok());
    }
}
