use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{Mechanism, Transcript};
use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::exante::ExAnteSolution;
use crate::instance::Instance;
use crate::items::ItemSet;
use crate::ocrs::{rrs_to_ocrs_cached, OcrsCache};
use crate::pricing::RandomPricing;
use crate::rrs::RrsScheme;

#[derive(Default)]
struct RefCache {
    oracle: OcrsCache,
    outputs: HashMap<ItemSet, Option<Arc<RandomPricing>>>,
}

/// OCRS outputs per buyer, reference key and available set, shared by all
/// trials. `None` records a set where the sampler's assumptions failed.
pub(crate) struct OcrsTable {
    buyers: Vec<Mutex<HashMap<usize, RefCache>>>,
}

impl OcrsTable {
    pub(crate) fn new(n: usize) -> Self {
        OcrsTable {
            buyers: (0..n).map(|_| Mutex::new(HashMap::new())).collect(),
        }
    }

    pub(crate) fn get(
        &self,
        buyer: usize,
        key: usize,
        d: &BuyerDistribution,
        set: &ItemSet,
        reference: &RandomPricing,
        scheme: RrsScheme,
    ) -> Result<Option<Arc<RandomPricing>>> {
        let mut guard = self.buyers[buyer].lock().unwrap();
        let cache = guard.entry(key).or_default();
        if let Some(out) = cache.outputs.get(set) {
            return Ok(out.clone());
        }
        let out = match rrs_to_ocrs_cached(d, set, reference, scheme, &mut cache.oracle) {
            Ok(o) => Some(Arc::new(o.pricing)),
            Err(Error::HullAssumption { .. }) => None,
            Err(e) => return Err(e),
        };
        cache.outputs.insert(*set, out.clone());
        Ok(out)
    }
}

/// Skips each buyer with probability 1/2; otherwise offers a draw from the
/// OCRS pricing for the buyer's ex ante pricing and the unsold items.
pub struct OcrsSequential {
    instance: Instance,
    exante: ExAnteSolution,
    schemes: Vec<RrsScheme>,
    table: OcrsTable,
}

impl OcrsSequential {
    pub fn new(instance: Instance, exante: ExAnteSolution, schemes: Vec<RrsScheme>) -> Result<Self> {
        let n = instance.n();
        if exante.n() != n || schemes.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if exante.n() != n { exante.n() } else { schemes.len() },
            });
        }
        Ok(OcrsSequential {
            instance,
            exante,
            schemes,
            table: OcrsTable::new(n),
        })
    }
}

impl Mechanism for OcrsSequential {
    fn name(&self) -> &'static str {
        "ocrs-seq"
    }

    fn m(&self) -> usize {
        self.instance.m
    }

    fn n(&self) -> usize {
        self.instance.n()
    }

    fn run(&self, rng: &mut ChaCha20Rng) -> Result<Transcript> {
        let m = self.instance.m;
        let mut t = Transcript::new();
        for (i, d) in self.instance.buyers.iter().enumerate() {
            if rng.gen_bool(0.5) {
                t.skip(m);
                continue;
            }
            let set = t.available(m);
            let pricing = self.table.get(
                i,
                usize::MAX,
                d,
                &set,
                &self.exante.pricings[i],
                self.schemes[i],
            )?;
            match pricing {
                None => {
                    t.hull_violations += 1;
                    t.skip(m);
                }
                Some(q) => {
                    let p = q.sample(rng).clone();
                    if p.is_all_infinite() {
                        t.skip(m);
                    } else {
                        t.offer(m, d, &p, rng)?;
                    }
                }
            }
        }
        Ok(t)
    }
}
