use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{Mechanism, Transcript};
use crate::demand::{alloc_and_rev, demand};
use crate::error::{Error, Result};
use crate::exante::ExAnteSolution;
use crate::instance::Instance;
use crate::items::ItemSet;
use crate::pricing::ItemPricing;

fn check_sizes(instance: &Instance, exante: &ExAnteSolution) -> Result<()> {
    if exante.n() != instance.n() || instance.n() == 0 {
        return Err(Error::DimensionMismatch {
            expected: instance.n(),
            found: exante.n(),
        });
    }
    Ok(())
}

/// Serves one buyer chosen uniformly at random with a draw from their ex
/// ante pricing.
pub struct MonotoneN {
    instance: Instance,
    exante: ExAnteSolution,
}

impl MonotoneN {
    pub fn new(instance: Instance, exante: ExAnteSolution) -> Result<Self> {
        check_sizes(&instance, &exante)?;
        Ok(MonotoneN { instance, exante })
    }
}

impl Mechanism for MonotoneN {
    fn name(&self) -> &'static str {
        "mono-n"
    }

    fn m(&self) -> usize {
        self.instance.m
    }

    fn n(&self) -> usize {
        self.instance.n()
    }

    fn run(&self, rng: &mut ChaCha20Rng) -> Result<Transcript> {
        let m = self.instance.m;
        let chosen = rng.gen_range(0..self.instance.n());
        let mut t = Transcript::new();
        for (i, d) in self.instance.buyers.iter().enumerate() {
            if i == chosen {
                let p = self.exante.pricings[i].sample(rng);
                t.offer(m, d, p, rng)?;
            } else {
                t.skip(m);
            }
        }
        Ok(t)
    }
}

/// Per buyer and ex ante atom: the uniform price `p_{j*}/m` and the
/// probability of offering it instead of nothing.
#[derive(Clone, Debug)]
struct UniformOffer {
    price: f64,
    accept: f64,
}

/// Prices every item at `p_{j*}/m`, where `j*` is the item carrying the
/// most ex ante revenue, and sells to at most one buyer.
pub struct MonotoneM2 {
    instance: Instance,
    exante: ExAnteSolution,
    pub best_item: usize,
    offers: Vec<Vec<UniformOffer>>,
}

impl MonotoneM2 {
    pub fn new(instance: Instance, exante: ExAnteSolution) -> Result<Self> {
        check_sizes(&instance, &exante)?;
        let m = instance.m;
        let mut per_item = vec![0.0; m];
        let mut allocs = Vec::with_capacity(instance.n());
        for (d, r) in instance.buyers.iter().zip(&exante.pricings) {
            let mut a = Vec::with_capacity(r.support.len());
            for (prob, p) in r.iter() {
                let (alloc, _) = alloc_and_rev(d, p)?;
                for j in 0..m {
                    if p.get(j).is_finite() {
                        per_item[j] += prob * p.get(j) * alloc[j];
                    }
                }
                a.push(alloc);
            }
            allocs.push(a);
        }
        let best_item = (0..m)
            .max_by(|&a, &b| per_item[a].total_cmp(&per_item[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let mut offers = Vec::with_capacity(instance.n());
        for ((d, r), a) in instance.buyers.iter().zip(&exante.pricings).zip(&allocs) {
            let mut row = Vec::with_capacity(r.support.len());
            for ((_, p), alloc) in r.iter().zip(a) {
                let price = p.get(best_item) / m as f64;
                let uniform = ItemPricing::uniform(m, price);
                let mut lambda = 0.0;
                if price.is_finite() {
                    for (pv, v) in d.iter() {
                        if !demand(v, &uniform)?.set.is_empty() {
                            lambda += pv;
                        }
                    }
                }
                let accept = if lambda > 0.0 {
                    (alloc[best_item] / (2.0 * lambda)).min(1.0)
                } else {
                    0.0
                };
                row.push(UniformOffer { price, accept });
            }
            offers.push(row);
        }
        Ok(MonotoneM2 {
            instance,
            exante,
            best_item,
            offers,
        })
    }
}

impl Mechanism for MonotoneM2 {
    fn name(&self) -> &'static str {
        "mono-m2"
    }

    fn m(&self) -> usize {
        self.instance.m
    }

    fn n(&self) -> usize {
        self.instance.n()
    }

    fn run(&self, rng: &mut ChaCha20Rng) -> Result<Transcript> {
        let m = self.instance.m;
        let full = ItemSet::full(m);
        let mut t = Transcript::new();
        for (i, d) in self.instance.buyers.iter().enumerate() {
            if t.available(m) != full {
                t.skip(m);
                continue;
            }
            let k = self.exante.pricings[i].sample_index(rng);
            let offer = &self.offers[i][k];
            if offer.accept > 0.0 && rng.gen_bool(offer.accept) {
                t.offer(m, d, &ItemPricing::uniform(m, offer.price), rng)?;
            } else {
                t.skip(m);
            }
        }
        Ok(t)
    }
}
