//! Random test families with class membership guaranteed by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::items::ItemSet;
use crate::valuation::{Valuation, ValuationClass, TABLE_MAX_ITEMS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomFamily {
    Coverage,
    BudgetedAdditive,
    XosRandom,
}

impl std::str::FromStr for RandomFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coverage" => Ok(RandomFamily::Coverage),
            "budgeted_additive" | "budgeted-additive" => Ok(RandomFamily::BudgetedAdditive),
            "xos_random" | "xos-random" => Ok(RandomFamily::XosRandom),
            _ => Err(Error::InvalidArgument(format!("unknown family {s:?}"))),
        }
    }
}

/// Weighted coverage: item `j` covers `covers[j]`, a set of universe
/// elements, and a bundle is worth the total weight it covers.
pub fn coverage(covers: &[ItemSet], weights: &[f64]) -> Result<Valuation> {
    if let Some(c) = covers.iter().find(|c| c.bound() > weights.len()) {
        return Err(Error::InvalidValuation(format!(
            "cover {c:?} exceeds a universe of {}",
            weights.len()
        )));
    }
    Valuation::table_from_fn(
        covers.len(),
        |s| {
            let covered = s
                .iter()
                .fold(ItemSet::empty(), |acc, j| acc.union(&covers[j]));
            covered.iter().map(|u| weights[u]).sum()
        },
        Some(ValuationClass::Subadditive),
    )
}

/// `min(budget, Σ values)`; an infinite budget gives the additive valuation.
pub fn budgeted_additive(values: Vec<f64>, budget: f64) -> Result<Valuation> {
    if budget.is_nan() || budget < 0.0 {
        return Err(Error::InvalidValuation(format!("budget {budget}")));
    }
    if budget == f64::INFINITY {
        return Valuation::additive(values);
    }
    Valuation::table_from_fn(
        values.len(),
        |s| budget.min(s.iter().map(|j| values[j]).sum()),
        Some(ValuationClass::Subadditive),
    )
}

fn random_probs(rng: &mut ChaCha20Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn random_valuation(rng: &mut ChaCha20Rng, m: usize, family: RandomFamily) -> Result<Valuation> {
    match family {
        RandomFamily::Coverage => {
            let universe = m + 2;
            let covers: Vec<ItemSet> = (0..m)
                .map(|_| ItemSet::from_items((0..universe).filter(|_| rng.gen_bool(0.35))))
                .collect();
            let weights: Vec<f64> = (0..universe).map(|_| rng.gen_range(0.1..2.0)).collect();
            coverage(&covers, &weights)
        }
        RandomFamily::BudgetedAdditive => {
            let values: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0)).collect();
            let total: f64 = values.iter().sum();
            let budget = rng.gen_range(0.3..=1.0) * total;
            budgeted_additive(values, budget)
        }
        RandomFamily::XosRandom => {
            let clauses = (0..rng.gen_range(1..=3))
                .map(|_| {
                    (0..m)
                        .map(|_| {
                            if rng.gen_bool(0.3) {
                                0.0
                            } else {
                                rng.gen_range(0.0..2.0)
                            }
                        })
                        .collect()
                })
                .collect();
            Valuation::xos(m, clauses)
        }
    }
}

fn check_sizes(m: usize, n: usize, support: usize) -> Result<()> {
    if m == 0 || n == 0 || support == 0 {
        return Err(Error::InvalidArgument(
            "m, n and support size must be positive".into(),
        ));
    }
    if m > TABLE_MAX_ITEMS {
        return Err(Error::TooLarge {
            what: "random instance item count",
            size: m,
            limit: TABLE_MAX_ITEMS,
        });
    }
    Ok(())
}

/// `n` independent buyers, each uniform-ish over `support` valuations from `family`.
pub fn gen_random_subadditive(
    m: usize,
    n: usize,
    support: usize,
    family: RandomFamily,
    seed: u64,
) -> Result<Instance> {
    check_sizes(m, n, support)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut buyers = Vec::with_capacity(n);
    for _ in 0..n {
        let probs = random_probs(&mut rng, support);
        let vals = probs
            .into_iter()
            .map(|p| Ok((p, random_valuation(&mut rng, m, family)?)))
            .collect::<Result<Vec<_>>>()?;
        buyers.push(BuyerDistribution::new(vals)?);
    }
    Instance::new(m, buyers)
}

/// Buyers mixing additive and unit-demand valuations, both gross substitutes.
pub fn gen_random_gs(m: usize, n: usize, support: usize, seed: u64) -> Result<Instance> {
    check_sizes(m, n, support)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut buyers = Vec::with_capacity(n);
    for _ in 0..n {
        let probs = random_probs(&mut rng, support);
        let mut vals = Vec::with_capacity(support);
        for p in probs {
            let values: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0)).collect();
            let v = if rng.gen_bool(0.5) {
                Valuation::additive(values)?
            } else {
                Valuation::unit_demand(values)?
            };
            vals.push((p, v));
        }
        buyers.push(BuyerDistribution::new(vals)?);
    }
    Instance::new(m, buyers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::check_class;

    #[test]
    fn infinite_budget_is_additive() {
        let v = budgeted_additive(vec![1.0, 2.0], f64::INFINITY).unwrap();
        assert!(matches!(v, Valuation::Additive { .. }));
    }

    #[test]
    fn disjoint_coverage_is_additive() {
        let covers = [ItemSet::from_items([0]), ItemSet::from_items([1, 2])];
        let v = coverage(&covers, &[1.0, 2.0, 0.5]).unwrap();
        let add = Valuation::additive(vec![1.0, 2.5]).unwrap();
        for mask in 0..4 {
            let s = ItemSet::from_mask(mask);
            assert!((v.value(&s) - add.value(&s)).abs() < 1e-12);
        }
    }

    #[test]
    fn generated_valuations_are_subadditive() {
        for family in [
            RandomFamily::Coverage,
            RandomFamily::BudgetedAdditive,
            RandomFamily::XosRandom,
        ] {
            let inst = gen_random_subadditive(5, 2, 3, family, 11).unwrap();
            for d in &inst.buyers {
                for (_, v) in d.iter() {
                    let r = check_class(v, ValuationClass::Subadditive).unwrap();
                    assert!(r.holds, "{family:?}");
                    assert!(check_class(v, ValuationClass::Monotone).unwrap().holds);
                }
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = gen_random_subadditive(4, 2, 2, RandomFamily::Coverage, 5).unwrap();
        let b = gen_random_subadditive(4, 2, 2, RandomFamily::Coverage, 5).unwrap();
        assert_eq!(a.buyers, b.buyers);
        let c = gen_random_gs(3, 2, 2, 5).unwrap();
        assert_eq!(c.buyers, gen_random_gs(3, 2, 2, 5).unwrap().buyers);
    }
}
