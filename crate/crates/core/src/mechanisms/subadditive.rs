use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::ocrs_seq::OcrsTable;
use super::{Mechanism, Transcript};
use crate::demand::{alloc_and_rev, demand};
use crate::error::{Error, Result};
use crate::exante::ExAnteSolution;
use crate::instance::Instance;
use crate::items::ItemSet;
use crate::pricing::{ItemPricing, RandomPricing};
use crate::rrs::RrsScheme;
use crate::valuation::Valuation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Band {
    Small,
    Medium,
    Large,
}

/// Splits prices into `[0, Obj/m²)`, `[Obj/m², 8m²·Obj]` and `(8m²·Obj, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceBands {
    pub obj: f64,
    pub m: usize,
}

impl PriceBands {
    pub fn new(obj: f64, m: usize) -> Self {
        PriceBands { obj, m }
    }

    fn m2(&self) -> f64 {
        (self.m * self.m) as f64
    }

    pub fn lower(&self) -> f64 {
        self.obj / self.m2()
    }

    pub fn upper(&self) -> f64 {
        8.0 * self.m2() * self.obj
    }

    pub fn band(&self, price: f64) -> Band {
        if price < self.lower() {
            Band::Small
        } else if price <= self.upper() {
            Band::Medium
        } else {
            Band::Large
        }
    }

    /// Items whose price under `p` is in `band`.
    pub fn items(&self, p: &ItemPricing, band: Band) -> ItemSet {
        ItemSet::from_items((0..p.m()).filter(|&j| self.band(p.get(j)) == band))
    }
}

/// Halves prices above the medium band and raises all others to at least
/// `2m·Obj`.
pub fn high_price_pricing(p: &ItemPricing, obj: f64, m: usize) -> ItemPricing {
    let bands = PriceBands::new(obj, m);
    let floor = 2.0 * m as f64 * obj;
    let prices = p
        .prices()
        .iter()
        .map(|&x| match bands.band(x) {
            Band::Large => x / 2.0,
            _ => x.max(floor),
        })
        .collect();
    ItemPricing::new(prices).expect("transform keeps prices nonnegative")
}

/// Payment at the high-price pricing next to a quarter of what `p` earns
/// from its large-band items, for one valuation.
pub fn high_price_bound(v: &Valuation, p: &ItemPricing, obj: f64) -> Result<(f64, f64)> {
    let m = p.m();
    let large = PriceBands::new(obj, m).items(p, Band::Large);
    let t = demand(v, p)?.set;
    let got = demand(v, &high_price_pricing(p, obj, m))?.payment;
    Ok((got, p.price_of(&t.intersection(&large)) / 4.0))
}

/// Revenue the ex ante solution collects from small-band prices.
pub fn small_band_mass(instance: &Instance, exante: &ExAnteSolution) -> Result<f64> {
    let bands = PriceBands::new(exante.value, instance.m);
    let mut total = 0.0;
    for (d, r) in instance.buyers.iter().zip(&exante.pricings) {
        for (prob, p) in r.iter() {
            let (alloc, _) = alloc_and_rev(d, p)?;
            for j in bands.items(p, Band::Small).iter() {
                total += prob * p.get(j) * alloc[j];
            }
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Medium,
    High,
}

/// A fair coin picks one of two mechanisms. The medium one runs the OCRS
/// sequence on each sampled pricing's medium-band items. The high one offers
/// [`high_price_pricing`] to buyers in turn and stops after the first sale.
pub struct SubadditiveMechanism {
    instance: Instance,
    exante: ExAnteSolution,
    bands: PriceBands,
    scheme: RrsScheme,
    forced: Option<Branch>,
    table: OcrsTable,
}

impl SubadditiveMechanism {
    pub fn new(instance: Instance, exante: ExAnteSolution) -> Result<Self> {
        if exante.n() != instance.n() {
            return Err(Error::DimensionMismatch {
                expected: instance.n(),
                found: exante.n(),
            });
        }
        let n = instance.n();
        Ok(SubadditiveMechanism {
            bands: PriceBands::new(exante.value, instance.m),
            instance,
            exante,
            scheme: RrsScheme::Subadditive { alpha: None },
            forced: None,
            table: OcrsTable::new(n),
        })
    }

    /// Always runs `branch` instead of flipping the coin.
    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.forced = Some(branch);
        self
    }

    pub fn bands(&self) -> PriceBands {
        self.bands
    }

    fn run_medium(&self, rng: &mut ChaCha20Rng, t: &mut Transcript) -> Result<()> {
        let m = self.instance.m;
        for (i, d) in self.instance.buyers.iter().enumerate() {
            if rng.gen_bool(0.5) {
                t.skip(m);
                continue;
            }
            let k = self.exante.pricings[i].sample_index(rng);
            let p = &self.exante.pricings[i].support[k].prices;
            let set = t.available(m).intersection(&self.bands.items(p, Band::Medium));
            let reference = RandomPricing::point(p.clone());
            match self.table.get(i, k, d, &set, &reference, self.scheme)? {
                None => {
                    t.hull_violations += 1;
                    t.skip(m);
                }
                Some(q) => {
                    let q = q.sample(rng).clone();
                    if q.is_all_infinite() {
                        t.skip(m);
                    } else {
                        t.offer(m, d, &q, rng)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn run_high(&self, rng: &mut ChaCha20Rng, t: &mut Transcript) -> Result<()> {
        let m = self.instance.m;
        let mut sold = false;
        for (i, d) in self.instance.buyers.iter().enumerate() {
            if sold {
                t.skip(m);
                continue;
            }
            let p = self.exante.pricings[i].sample(rng);
            t.offer(m, d, &high_price_pricing(p, self.bands.obj, m), rng)?;
            sold = !t.steps.last().unwrap().purchased.is_empty();
        }
        Ok(())
    }
}

impl Mechanism for SubadditiveMechanism {
    fn name(&self) -> &'static str {
        "subadd"
    }

    fn m(&self) -> usize {
        self.instance.m
    }

    fn n(&self) -> usize {
        self.instance.n()
    }

    fn run(&self, rng: &mut ChaCha20Rng) -> Result<Transcript> {
        let branch = match self.forced {
            Some(b) => b,
            None if rng.gen_bool(0.5) => Branch::High,
            None => Branch::Medium,
        };
        let mut t = Transcript::new();
        match branch {
            Branch::Medium => self.run_medium(rng, &mut t)?,
            Branch::High => self.run_high(rng, &mut t)?,
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_cases() {
        let (m, obj) = (3usize, 1.0);
        let m2 = 9.0;
        let p = ItemPricing::new(vec![10.0 * m2 * obj, 0.0, 8.0 * m2 * obj]).unwrap();
        let q = high_price_pricing(&p, obj, m);
        assert_eq!(q.prices(), &[5.0 * m2 * obj, 2.0 * m as f64 * obj, 8.0 * m2 * obj]);
        let p = ItemPricing::new(vec![f64::INFINITY, 0.1, 1.0]).unwrap();
        let q = high_price_pricing(&p, obj, m);
        assert!(q.get(0).is_infinite());
        assert!(q.prices().iter().all(|&x| x >= 2.0 * m as f64 * obj));
    }

    #[test]
    fn bands_partition() {
        let b = PriceBands::new(2.0, 2);
        assert_eq!(b.band(0.0), Band::Small);
        assert_eq!(b.band(0.5), Band::Medium);
        assert_eq!(b.band(64.0), Band::Medium);
        assert_eq!(b.band(64.1), Band::Large);
        assert_eq!(b.band(f64::INFINITY), Band::Large);
    }
}
