use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{Mechanism, Transcript};
use crate::classes::check_class;
use crate::demand::{alloc_and_rev, demand};
use crate::distribution::{BuyerDistribution, SetDistribution};
use crate::error::{Error, Result};
use crate::exante::ExAnteSolution;
use crate::instance::Instance;
use crate::items::ItemSet;
use crate::ocrs::{gs_decompose, restricted_alloc_and_rev};
use crate::pricing::RandomPricing;
use crate::valuation::ValuationClass;

#[derive(Clone, Copy, Debug)]
pub struct GsConfig {
    /// Availability is propagated exactly up to this many items.
    pub exact_max_items: usize,
    /// Sampled runs used to estimate availability beyond that.
    pub samples: usize,
    pub seed: u64,
}

impl Default for GsConfig {
    fn default() -> Self {
        GsConfig {
            exact_max_items: 12,
            samples: 100_000,
            seed: 0,
        }
    }
}

/// Each buyer's sampled ex ante pricing `p` is replaced by a mixture of
/// restrictions of `p` that, against the buyer's availability distribution,
/// sells item `j` with probability exactly `Alloc_j(D, p)/2`.
pub struct GsMechanism {
    instance: Instance,
    exante: ExAnteSolution,
    /// `plans[i][k]`: mixture offered when buyer `i` draws atom `k`.
    plans: Vec<Vec<RandomPricing>>,
    /// Availability distribution each plan was built against.
    dists: Vec<SetDistribution>,
    /// Largest amount a target had to be lowered to stay dominated.
    pub max_clip: f64,
}

fn check_gs(instance: &Instance) -> Result<()> {
    for (i, d) in instance.buyers.iter().enumerate() {
        for (k, (_, v)) in d.iter().enumerate() {
            let ok = matches!(check_class(v, ValuationClass::GrossSubstitutes), Ok(r) if r.holds);
            if !ok {
                return Err(Error::NotGrossSubstitutes(format!(
                    "buyer {i}, support valuation {k}"
                )));
            }
        }
    }
    Ok(())
}

/// Distribution of the set left after buyer `d` faces `plan[k]` with
/// probability `probs[k]`, starting from `dist`.
fn propagate(
    d: &BuyerDistribution,
    dist: &SetDistribution,
    probs: &[f64],
    plan: &[RandomPricing],
) -> Result<SetDistribution> {
    let mut out = Vec::new();
    for (ps, s) in &dist.support {
        for (pk, mix) in probs.iter().zip(plan) {
            for (pq, q) in mix.iter() {
                let w = ps * pk * pq;
                if q.is_all_infinite() {
                    out.push((w, *s));
                    continue;
                }
                let q = q.masked(s);
                for (pv, v) in d.iter() {
                    out.push((w * pv, s.difference(&demand(v, &q)?.set)));
                }
            }
        }
    }
    Ok(SetDistribution::from_weighted(out))
}

impl GsMechanism {
    pub fn new(instance: Instance, exante: ExAnteSolution, config: GsConfig) -> Result<Self> {
        if exante.n() != instance.n() {
            return Err(Error::DimensionMismatch {
                expected: instance.n(),
                found: exante.n(),
            });
        }
        check_gs(&instance)?;
        let m = instance.m;
        let exact = m <= config.exact_max_items;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let mut states = vec![ItemSet::full(m); if exact { 0 } else { config.samples.max(1) }];
        let mut dist = SetDistribution::point(ItemSet::full(m));
        let mut plans = Vec::with_capacity(instance.n());
        let mut dists = Vec::with_capacity(instance.n());
        let mut max_clip: f64 = 0.0;
        for (i, d) in instance.buyers.iter().enumerate() {
            if !exact {
                let w = 1.0 / states.len() as f64;
                dist = SetDistribution::from_weighted(states.iter().map(|s| (w, *s)));
            }
            let reference = &exante.pricings[i];
            let mut plan = Vec::with_capacity(reference.support.len());
            for (_, p) in reference.iter() {
                let (alloc, _) = alloc_and_rev(d, p)?;
                let point = RandomPricing::point(p.clone());
                let (w, _) = restricted_alloc_and_rev(d, &dist, &point)?;
                let y: Vec<f64> = (0..m)
                    .map(|j| {
                        let target = alloc[j] / 2.0;
                        max_clip = max_clip.max(target - w[j]);
                        target.min(w[j])
                    })
                    .collect();
                plan.push(gs_decompose(d, &dist, p, &y)?);
            }
            let probs: Vec<f64> = reference.iter().map(|(pk, _)| pk).collect();
            if exact {
                if i + 1 < instance.n() {
                    let next = propagate(d, &dist, &probs, &plan)?;
                    dists.push(std::mem::replace(&mut dist, next));
                } else {
                    dists.push(dist.clone());
                }
            } else {
                dists.push(dist.clone());
                for s in states.iter_mut() {
                    let k = reference.sample_index(&mut rng);
                    let q = plan[k].sample(&mut rng);
                    if !q.is_all_infinite() {
                        let v = d.sample(&mut rng);
                        *s = s.difference(&demand(v, &q.masked(s))?.set);
                    }
                }
            }
            plans.push(plan);
        }
        Ok(GsMechanism {
            instance,
            exante,
            plans,
            dists,
            max_clip: max_clip.max(0.0),
        })
    }

    /// Availability distribution buyer `i`'s plan was built against.
    pub fn availability(&self, i: usize) -> &SetDistribution {
        &self.dists[i]
    }

    /// Expected payment of buyer `i` computed from the plan and the
    /// availability distribution, with no sampling.
    pub fn planned_revenue(&self, i: usize) -> Result<f64> {
        let d = &self.instance.buyers[i];
        let mut total = 0.0;
        for ((pk, _), plan) in self.exante.pricings[i].iter().zip(&self.plans[i]) {
            total += pk * restricted_alloc_and_rev(d, &self.dists[i], plan)?.1;
        }
        Ok(total)
    }
}

impl Mechanism for GsMechanism {
    fn name(&self) -> &'static str {
        "gs"
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
            let k = self.exante.pricings[i].sample_index(rng);
            let q = self.plans[i][k].sample(rng);
            if q.is_all_infinite() {
                t.skip(m);
            } else {
                t.offer(m, d, q, rng)?;
            }
        }
        Ok(t)
    }
}
