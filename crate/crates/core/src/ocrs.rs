//! Contention resolution for revenue: turn a reference pricing and an
//! available set into a pricing over that set whose allocation stays under
//! the reference allocation.

use std::collections::HashMap;

use crate::demand::alloc_and_rev;
use crate::distribution::{BuyerDistribution, SetDistribution};
use crate::error::{Error, Result};
use crate::hull::{convex_hull_sampler, HullOutput};
use crate::items::ItemSet;
use crate::pricing::{ItemPricing, RandomPricing};
use crate::rrs::RrsScheme;

/// Per-item revenue mass `p_j·Alloc_j(D, p)` on `set`; zero off `set` and
/// wherever `p_j` is infinite.
fn revenue_vector(alloc: &[f64], p: &ItemPricing, set: &ItemSet) -> Vec<f64> {
    (0..alloc.len())
        .map(|j| {
            if set.contains(j) && p.get(j).is_finite() {
                p.get(j) * alloc[j]
            } else {
                0.0
            }
        })
        .collect()
}

/// Oracle answers `(y^T, q^T)` for one buyer, keyed by reference atom and
/// set, so repeated offers to the same buyer reuse earlier work.
#[derive(Default)]
pub struct OcrsCache {
    answers: HashMap<(usize, ItemSet), (Vec<f64>, ItemPricing)>,
    reference_alloc: HashMap<usize, Vec<f64>>,
    pub oracle_calls: usize,
}

impl OcrsCache {
    pub fn new() -> Self {
        Self::default()
    }
}

#[derive(Clone, Debug)]
pub struct OcrsOutput {
    pub pricing: RandomPricing,
    /// Probability of the all-∞ pricing coming from empty-set weight.
    pub skip_prob: f64,
    /// Sets queried for each reference atom.
    pub queried: Vec<Vec<ItemSet>>,
}

/// For each atom `p` of `reference`: target `w_j = p_j·Alloc_j(D, p)` on
/// `set`, oracle `y^T_j = α·q^T_j·Alloc_j(D|T, q^T)` where `q^T` is the
/// recovery scheme's pricing for `T`, masked to `T`. The sampler's weights
/// mix the `q^T`; leftover weight becomes the all-∞ pricing.
pub fn rrs_to_ocrs(
    d: &BuyerDistribution,
    set: &ItemSet,
    reference: &RandomPricing,
    scheme: RrsScheme,
) -> Result<OcrsOutput> {
    rrs_to_ocrs_cached(d, set, reference, scheme, &mut OcrsCache::new())
}

pub fn rrs_to_ocrs_cached(
    d: &BuyerDistribution,
    set: &ItemSet,
    reference: &RandomPricing,
    scheme: RrsScheme,
    cache: &mut OcrsCache,
) -> Result<OcrsOutput> {
    let m = d.m();
    if reference.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: reference.m(),
        });
    }
    let mut atoms: Vec<(f64, ItemPricing)> = Vec::new();
    let mut skip_prob = 0.0;
    let mut queried = Vec::new();
    for (idx, (prob, p)) in reference.iter().enumerate() {
        if let std::collections::hash_map::Entry::Vacant(e) = cache.reference_alloc.entry(idx) {
            let alloc = alloc_and_rev(d, p)?.0;
            e.insert(alloc);
        }
        let w = revenue_vector(&cache.reference_alloc[&idx], p, set);
        let alpha = scheme.alpha(m, set, p)?;
        let mut pricings: HashMap<ItemSet, ItemPricing> = HashMap::new();
        let out: HullOutput = convex_hull_sampler(&w, |t: &ItemSet| {
            if let Some((y, q)) = cache.answers.get(&(idx, *t)) {
                pricings.insert(*t, q.clone());
                return Ok(y.clone());
            }
            cache.oracle_calls += 1;
            let q = scheme.apply(d, t, p)?.masked(t);
            let (alloc, _) = alloc_and_rev(d, &q)?;
            let y: Vec<f64> = revenue_vector(&alloc, &q, t).iter().map(|x| alpha * x).collect();
            cache.answers.insert((idx, *t), (y.clone(), q.clone()));
            pricings.insert(*t, q);
            Ok(y)
        })?;
        for step in &out.steps {
            if step.lambda > 0.0 {
                atoms.push((prob * step.lambda, pricings[&step.set].clone()));
            }
        }
        skip_prob += prob * out.lambda_empty;
        queried.push(out.queried().copied().collect());
    }
    if skip_prob > 0.0 || atoms.is_empty() {
        atoms.push((skip_prob, ItemPricing::all_infinite(m)));
    }
    Ok(OcrsOutput {
        pricing: RandomPricing::normalized(atoms)?,
        skip_prob,
        queried,
    })
}

/// `E_S[Alloc(D|S, q)]` and `E_S[Rev(D|S, q)]`, each pricing masked to `S`.
pub fn restricted_alloc_and_rev(
    d: &BuyerDistribution,
    sets: &SetDistribution,
    q: &RandomPricing,
) -> Result<(Vec<f64>, f64)> {
    let mut alloc = vec![0.0; d.m()];
    let mut rev = 0.0;
    for (ps, s) in &sets.support {
        for (pq, p) in q.iter() {
            let (a, r) = alloc_and_rev(d, &p.masked(s))?;
            for (x, y) in alloc.iter_mut().zip(a) {
                *x += ps * pq * y;
            }
            rev += ps * pq * r;
        }
    }
    Ok((alloc, rev))
}

/// Splits `y` into a mixture of `p` restricted to sets `T`, so that a buyer
/// facing a random available set drawn from `sets` buys item `j` with
/// probability exactly `y_j`. Needs gross substitutes buyers and `y ⪯ w`
/// where `w = E_S[Alloc(D|S, p)]`.
pub fn gs_decompose(
    d: &BuyerDistribution,
    sets: &SetDistribution,
    p: &ItemPricing,
    y: &[f64],
) -> Result<RandomPricing> {
    let m = d.m();
    if y.len() != m || p.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: if y.len() != m { y.len() } else { p.m() },
        });
    }
    let point = RandomPricing::point(p.clone());
    let (w, _) = restricted_alloc_and_rev(d, sets, &point)?;
    if let Some(j) = (0..m).find(|&j| y[j] > w[j] + 1e-9) {
        return Err(Error::NotDominated {
            item: j,
            target: y[j],
            bound: w[j],
        });
    }
    let target: Vec<f64> = y.iter().map(|x| x.max(0.0)).collect();
    let out = convex_hull_sampler(&target, |t: &ItemSet| {
        let restricted = SetDistribution {
            support: sets.support.iter().map(|(pr, s)| (*pr, s.intersection(t))).collect(),
        };
        Ok(restricted_alloc_and_rev(d, &restricted, &point)?.0)
    })?;
    let mut atoms: Vec<(f64, ItemPricing)> = out
        .steps
        .iter()
        .filter(|s| s.lambda > 0.0)
        .map(|s| (s.lambda, p.masked(&s.set)))
        .collect();
    if out.lambda_empty > 0.0 || atoms.is_empty() {
        atoms.push((out.lambda_empty, ItemPricing::all_infinite(m)));
    }
    RandomPricing::normalized(atoms)
}

#[derive(Clone, Debug)]
pub struct OcrsReport {
    /// `E_S[Alloc(D|S, output)]`.
    pub alloc: Vec<f64>,
    /// First `j` with `alloc_j > x_j`, as `(j, alloc_j, x_j)`.
    pub alloc_witness: Option<(usize, f64, f64)>,
    pub revenue: f64,
    /// `(1/α)·E_{S,p}[Σ_{j∈S} p_j·Alloc_j(D, p)]`.
    pub target: f64,
}

impl OcrsReport {
    pub fn alloc_ok(&self) -> bool {
        self.alloc_witness.is_none()
    }

    pub fn revenue_ok(&self) -> bool {
        self.revenue >= self.target - 1e-9 * self.target.max(1.0)
    }

    pub fn holds(&self) -> bool {
        self.alloc_ok() && self.revenue_ok()
    }
}

/// Checks an OCRS whose output may depend on the available set: `cases`
/// lists `(Pr[S], S, output for S)`.
pub fn verify_ocrs(
    d: &BuyerDistribution,
    cases: &[(f64, ItemSet, RandomPricing)],
    x: &[f64],
    reference: &RandomPricing,
    alpha: f64,
) -> Result<OcrsReport> {
    let m = d.m();
    if x.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: x.len(),
        });
    }
    let mut alloc = vec![0.0; m];
    let mut revenue = 0.0;
    let mut marginals = vec![0.0; m];
    for (ps, s, q) in cases {
        let (a, r) = restricted_alloc_and_rev(d, &SetDistribution::point(*s), q)?;
        for (acc, y) in alloc.iter_mut().zip(a) {
            *acc += ps * y;
        }
        revenue += ps * r;
        for j in s.iter() {
            marginals[j] += ps;
        }
    }
    let mut mass = 0.0;
    for (pr, p) in reference.iter() {
        let (a, _) = alloc_and_rev(d, p)?;
        for j in 0..m {
            if p.get(j).is_finite() {
                mass += pr * marginals[j] * p.get(j) * a[j];
            }
        }
    }
    let alloc_witness = (0..m)
        .find(|&j| alloc[j] > x[j] + 1e-9)
        .map(|j| (j, alloc[j], x[j]));
    Ok(OcrsReport {
        alloc,
        alloc_witness,
        revenue,
        target: mass / alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::expected_alloc;
    use crate::instances::random::{gen_random_gs, gen_random_subadditive, RandomFamily};
    use crate::rrs::subadd_alpha;
    use crate::valuation::Valuation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const E_RATIO: f64 = std::f64::consts::E / (std::f64::consts::E - 1.0);

    fn random_pricing(rng: &mut ChaCha20Rng, m: usize) -> ItemPricing {
        ItemPricing::new((0..m).map(|_| rng.gen_range(0.1..1.5)).collect()).unwrap()
    }

    #[test]
    fn empty_set_gives_nothing() {
        let d = BuyerDistribution::point(Valuation::additive(vec![1.0, 1.0]).unwrap());
        let r = RandomPricing::point(ItemPricing::uniform(2, 0.5));
        let out = rrs_to_ocrs(&d, &ItemSet::empty(), &r, RrsScheme::GrossSubstitutes).unwrap();
        assert!(out.pricing.iter().all(|(_, p)| p.is_all_infinite()));
        let x = expected_alloc(&d, &r).unwrap();
        let cases = [(1.0, ItemSet::empty(), out.pricing)];
        let rep = verify_ocrs(&d, &cases, &x, &r, 1.0).unwrap();
        assert_eq!(rep.revenue, 0.0);
        assert!(rep.holds());
    }

    #[test]
    fn gs_full_set_reproduces_reference() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for seed in 0..10 {
            let inst = gen_random_gs(3, 1, 3, seed).unwrap();
            let d = &inst.buyers[0];
            let p = random_pricing(&mut rng, 3);
            let r = RandomPricing::point(p.clone());
            let out = rrs_to_ocrs(d, &ItemSet::full(3), &r, RrsScheme::GrossSubstitutes).unwrap();
            let got = expected_alloc(d, &out.pricing).unwrap();
            let want = expected_alloc(d, &r).unwrap();
            for j in 0..3 {
                assert!((got[j] - want[j]).abs() < 1e-9, "{got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn subadditive_ocrs_conditions() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for seed in 0..8 {
            let inst = gen_random_subadditive(4, 1, 3, RandomFamily::XosRandom, seed).unwrap();
            let d = &inst.buyers[0];
            let p = random_pricing(&mut rng, 4);
            let r = RandomPricing::point(p.clone());
            let x = expected_alloc(d, &r).unwrap();
            let s = ItemSet::from_items((0..4).filter(|_| rng.gen_bool(0.6)));
            let scheme = RrsScheme::Subadditive { alpha: None };
            let out = rrs_to_ocrs(d, &s, &r, scheme).unwrap();
            assert!(out.queried[0].len() <= s.len());
            let alpha = subadd_alpha(4, &s, &p).unwrap() * E_RATIO;
            let rep = verify_ocrs(d, &[(1.0, s, out.pricing)], &x, &r, alpha).unwrap();
            assert!(rep.holds(), "{rep:?}");
        }
    }

    #[test]
    fn overscaled_output_breaks_allocation() {
        let d = BuyerDistribution::uniform(vec![
            Valuation::additive(vec![1.0, 0.5]).unwrap(),
            Valuation::additive(vec![0.3, 1.0]).unwrap(),
        ])
        .unwrap();
        let p = ItemPricing::new(vec![0.8, 0.8]).unwrap();
        let r = RandomPricing::point(p.clone());
        let x = expected_alloc(&d, &r).unwrap();
        let cheap = RandomPricing::point(p.scaled(0.1));
        let rep = verify_ocrs(&d, &[(1.0, ItemSet::full(2), cheap)], &x, &r, 1.0).unwrap();
        assert!(!rep.alloc_ok());
        assert_eq!(rep.alloc_witness.unwrap().0, 0);
    }

    #[test]
    fn decomposition_hits_target() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for seed in 0..10 {
            let inst = gen_random_gs(3, 1, 2, seed).unwrap();
            let d = &inst.buyers[0];
            let p = random_pricing(&mut rng, 3);
            let sets = SetDistribution::from_weighted([
                (0.5, ItemSet::full(3)),
                (0.5, ItemSet::from_items([0, 2])),
            ]);
            let (w, _) = restricted_alloc_and_rev(d, &sets, &RandomPricing::point(p.clone())).unwrap();
            for scale in [1.0, 0.5] {
                let y: Vec<f64> = w.iter().map(|x| x * scale).collect();
                let q = gs_decompose(d, &sets, &p, &y).unwrap();
                let (got, rev) = restricted_alloc_and_rev(d, &sets, &q).unwrap();
                for j in 0..3 {
                    assert!((got[j] - y[j]).abs() < 1e-9);
                }
                let want: f64 = (0..3).map(|j| p.get(j) * y[j]).sum();
                assert!((rev - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn decomposition_rejects_undominated_target() {
        let d = BuyerDistribution::point(Valuation::unit_demand(vec![1.0, 1.0]).unwrap());
        let p = ItemPricing::uniform(2, 0.5);
        let err = gs_decompose(&d, &SetDistribution::point(ItemSet::full(2)), &p, &[1.0, 1.0]);
        assert!(matches!(err, Err(Error::NotDominated { .. })));
    }
}
