//! Randomized verification suites. Each suite runs a fixed, seeded batch
//! of checks and reports every failure; the CLI's `verify` command and the
//! acceptance tests share them.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::demand::{demand, demand_exhaustive, expected_alloc, expected_rev};
use crate::distribution::SetDistribution;
use crate::error::{Error, Result};
use crate::exante::{solve_exante_with, ColumnMode, ExAnteConfig, ExAnteSolution};
use crate::hull::convex_hull_sampler;
use crate::instance::Instance;
use crate::instances::monotone_lb::{gen_monotone_lb, good_collection, DEFAULT_EPS as MONO_EPS};
use crate::instances::random::{gen_random_gs, gen_random_subadditive, RandomFamily};
use crate::instances::rrs_lb::{gen_rrs_lb, RrsLbInstance, DEFAULT_EPS as RRS_EPS};
use crate::instances::xos_lb::{gen_xos_lb, XosLbConfig, XosLbParams, DEFAULT_EPS as XOS_EPS};
use crate::items::ItemSet;
use crate::mechanisms::{
    monte_carlo, GsConfig, GsMechanism, Mechanism, MonotoneM2, MonotoneN, OcrsSequential,
    SubadditiveMechanism,
};
use crate::ocrs::{gs_decompose, rrs_to_ocrs, verify_ocrs};
use crate::pricing::{ItemPricing, RandomPricing};
use crate::rrs::{
    gs_rrs, revenue_mass, scaling_window, subadd_alpha, subadd_rrs, subadd_rrs_expected_rev,
    verify_rrs, RrsScheme,
};
use crate::valuation::Valuation;

const E_RATIO: f64 = std::f64::consts::E / (std::f64::consts::E - 1.0);

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
    /// Measured quantities worth printing.
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        SuiteReport {
            name,
            checks: 0,
            failures: Vec::new(),
            notes: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }

    fn timed(mut self, start: Instant) -> Self {
        self.elapsed = start.elapsed();
        self
    }
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn mass(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// Random hull input: `w` with some zero coordinates and, for every queried
/// `T`, a vector on `T` whose mass is `w(T)` times a factor in `[1, 3]`.
/// With `gs`, every coordinate of `T` also dominates `w`.
fn hull_case(r: &mut ChaCha20Rng, gs: bool) -> (Vec<f64>, impl FnMut(&ItemSet) -> Result<Vec<f64>>) {
    let k = r.gen_range(1..=8);
    let w: Vec<f64> = (0..k)
        .map(|_| if r.gen_bool(0.15) { 0.0 } else { r.gen_range(0.0..2.0) })
        .collect();
    let seed: u64 = r.gen();
    let wc = w.clone();
    let oracle = move |t: &ItemSet| -> Result<Vec<f64>> {
        let mut local = ChaCha20Rng::seed_from_u64(seed ^ t.mask().wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut y = vec![0.0; wc.len()];
        if gs {
            for j in t.iter() {
                y[j] = wc[j] * local.gen_range(1.0..2.0) + local.gen_range(0.0..0.2);
            }
        } else {
            let need: f64 = t.iter().map(|j| wc[j]).sum();
            let shares: Vec<f64> = t.iter().map(|_| local.gen_range(0.05..1.0)).collect();
            let total: f64 = shares.iter().sum();
            let scale = local.gen_range(1.0..3.0);
            for (j, s) in t.iter().zip(shares) {
                y[j] = need * scale * s / total;
            }
        }
        Ok(y)
    };
    (w, oracle)
}

/// Random hull inputs: the output is a distribution dominated by `w` that
/// keeps a `1 - 1/e` share of its mass.
pub fn hull_random(seed: u64, count: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("hull sampler on random inputs");
    let mut r = rng(seed);
    let mut worst: f64 = f64::INFINITY;
    for case in 0..count {
        let (w, oracle) = hull_case(&mut r, false);
        let k = w.len();
        let out = match convex_hull_sampler(&w, oracle) {
            Ok(o) => o,
            Err(e) => {
                rep.check(false, || format!("case {case}: {e}"));
                continue;
            }
        };
        let dist = out.distribution();
        let total: f64 = dist.iter().map(|d| d.1).sum();
        rep.check(
            (total - 1.0).abs() <= 1e-12 && dist.iter().all(|d| d.1 >= 0.0),
            || format!("case {case}: weights sum to {total}"),
        );
        rep.check(dist.len() <= k + 1, || format!("case {case}: {} sets", dist.len()));
        rep.check((0..k).all(|j| out.combined[j] <= w[j] + 1e-9), || {
            format!("case {case}: {:?} not under {w:?}", out.combined)
        });
        let floor = (1.0 - (-1f64).exp()) * mass(&w);
        rep.check(mass(&out.combined) >= floor - 1e-9, || {
            format!("case {case}: mass {} below {floor}", mass(&out.combined))
        });
        if mass(&w) > 0.0 {
            worst = worst.min(mass(&out.combined) / mass(&w));
        }
    }
    rep.note(format!("smallest retained share {worst:.4}"));
    rep.timed(start)
}

/// Inputs where every oracle vector dominates `w` on its set: the sampler
/// must consume `w` exactly.
pub fn hull_gs_exact(seed: u64, count: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("hull sampler exactness on dominating inputs");
    let mut r = rng(seed);
    for case in 0..count {
        let (w, oracle) = hull_case(&mut r, true);
        match convex_hull_sampler(&w, oracle) {
            Ok(out) => {
                rep.check(out.residual.iter().all(|&x| x <= 1e-9), || {
                    format!("case {case}: residual {:?}", out.residual)
                });
                rep.check(
                    (0..w.len()).all(|j| (out.combined[j] - w[j]).abs() <= 1e-9),
                    || format!("case {case}: {:?} != {w:?}", out.combined),
                );
            }
            Err(e) => rep.check(false, || format!("case {case}: {e}")),
        }
    }
    rep.timed(start)
}

fn random_pricing(r: &mut ChaCha20Rng, m: usize) -> ItemPricing {
    ItemPricing::new((0..m).map(|_| r.gen_range(0.05..2.0)).collect()).unwrap()
}

fn random_subset(r: &mut ChaCha20Rng, m: usize, p: f64) -> ItemSet {
    ItemSet::from_items((0..m).filter(|_| r.gen_bool(p)))
}

const FAMILIES: [RandomFamily; 3] = [
    RandomFamily::Coverage,
    RandomFamily::BudgetedAdditive,
    RandomFamily::XosRandom,
];

/// The scaling scheme on random subadditive buyers: exact expected revenue
/// against the `1/(2 ln(2mΓ′))` bound, and the power-of-two pricing against
/// `α = 4·log₂(2mΓ′)`.
pub fn rrs_subadditive(seed: u64, count: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("subadditive recovery scheme");
    let mut r = rng(seed);
    let mut worst_ratio: f64 = f64::INFINITY;
    for case in 0..count {
        let m = r.gen_range(1..=6);
        let support = r.gen_range(1..=4);
        let family = FAMILIES[r.gen_range(0..3)];
        let inst = match gen_random_subadditive(m, 1, support, family, r.gen()) {
            Ok(i) => i,
            Err(e) => {
                rep.check(false, || format!("case {case}: {e}"));
                continue;
            }
        };
        let d = &inst.buyers[0];
        let p = random_pricing(&mut r, m);
        let s = random_subset(&mut r, m, 0.7);
        let res = (|| -> Result<()> {
            let w = scaling_window(m, &s, &p)?;
            let target = revenue_mass(d, &s, &p)?;
            let exact = subadd_rrs_expected_rev(d, &s, &p)?;
            let bound = target / (2.0 * (2.0 * m as f64 * w.aspect).ln());
            rep.check(exact >= bound - 1e-9, || {
                format!("case {case}: expected revenue {exact} below {bound}")
            });
            if target > 0.0 {
                worst_ratio = worst_ratio.min(exact / bound);
            }
            let q = subadd_rrs(d, &s, &p)?;
            let alpha = subadd_alpha(m, &s, &p)?;
            let report = verify_rrs(d, &s, &p, &q, alpha)?;
            rep.check(report.holds(), || format!("case {case}: {report:?}"));
            Ok(())
        })();
        if let Err(e) = res {
            rep.check(false, || format!("case {case}: {e}"));
        }
    }
    rep.note(format!("smallest expected revenue over bound {worst_ratio:.3}"));
    rep.timed(start)
}

/// Product distribution over available sets with inclusion in `[0.3, 1]`.
fn random_sets(r: &mut ChaCha20Rng, m: usize) -> SetDistribution {
    let probs: Vec<f64> = (0..m).map(|_| r.gen_range(0.3..=1.0)).collect();
    SetDistribution::bernoulli(&probs).unwrap()
}

fn random_reference(r: &mut ChaCha20Rng, m: usize) -> RandomPricing {
    let k = r.gen_range(1..=2);
    let w: Vec<f64> = (0..k).map(|_| r.gen_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    RandomPricing::normalized(w.iter().map(|x| (x / total, random_pricing(r, m))).collect()).unwrap()
}

/// Gross substitutes buyers: the identity scheme with `α = 1`, the
/// reduction through the hull sampler with `α = e/(e−1)` and the exact
/// decomposition with `α = 1`.
pub fn gs_rrs_ocrs(seed: u64, count: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("gross substitutes recovery and contention resolution");
    let mut r = rng(seed);
    for case in 0..count {
        let m = r.gen_range(1..=4);
        let inst = gen_random_gs(m, 1, r.gen_range(1..=3), r.gen()).unwrap();
        let d = &inst.buyers[0];
        let res = (|| -> Result<()> {
            let p = random_pricing(&mut r, m);
            let s = random_subset(&mut r, m, 0.6);
            let q = gs_rrs(d, &s, &p);
            let report = verify_rrs(d, &s, &p, &q, 1.0)?;
            rep.check(report.holds(), || format!("case {case} rrs: {report:?}"));

            let reference = random_reference(&mut r, m);
            let x = expected_alloc(d, &reference)?;
            let sets = random_sets(&mut r, m);
            let mut cases = Vec::new();
            for (ps, s) in &sets.support {
                let out = rrs_to_ocrs(d, s, &reference, RrsScheme::GrossSubstitutes)?;
                cases.push((*ps, *s, out.pricing));
            }
            let report = verify_ocrs(d, &cases, &x, &reference, E_RATIO)?;
            rep.check(report.holds(), || format!("case {case} ocrs: {report:?}"));

            let marg = sets.marginals(m);
            let mut atoms = Vec::new();
            for (pk, p) in reference.iter() {
                let (alloc, _) = crate::demand::alloc_and_rev(d, p)?;
                let y: Vec<f64> = (0..m).map(|j| marg[j] * alloc[j]).collect();
                for (pq, q) in gs_decompose(d, &sets, p, &y)?.iter() {
                    atoms.push((pk * pq, q.clone()));
                }
            }
            let mix = RandomPricing::normalized(atoms)?;
            let cases: Vec<_> = sets.support.iter().map(|(ps, s)| (*ps, *s, mix.clone())).collect();
            let report = verify_ocrs(d, &cases, &x, &reference, 1.0)?;
            rep.check(report.holds(), || format!("case {case} decomposition: {report:?}"));
            Ok(())
        })();
        if let Err(e) = res {
            rep.check(false, || format!("case {case}: {e}"));
        }
    }
    rep.timed(start)
}

/// The hull-sampler reduction on subadditive buyers with
/// `α = 4·log₂(2mΓ′)·e/(e−1)`.
pub fn ocrs_subadditive(seed: u64, count: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("subadditive contention resolution");
    let mut r = rng(seed);
    for case in 0..count {
        let m = r.gen_range(1..=4);
        let family = FAMILIES[r.gen_range(0..3)];
        let inst = gen_random_subadditive(m, 1, r.gen_range(1..=3), family, r.gen()).unwrap();
        let d = &inst.buyers[0];
        let res = (|| -> Result<()> {
            let p = random_pricing(&mut r, m);
            let reference = RandomPricing::point(p.clone());
            let x = expected_alloc(d, &reference)?;
            let sets = random_sets(&mut r, m);
            let mut cases = Vec::new();
            for (ps, s) in &sets.support {
                let out = rrs_to_ocrs(d, s, &reference, RrsScheme::Subadditive { alpha: None })?;
                cases.push((*ps, *s, out.pricing));
            }
            let alpha = subadd_alpha(m, &ItemSet::full(m), &p)? * E_RATIO;
            let report = verify_ocrs(d, &cases, &x, &reference, alpha)?;
            rep.check(report.holds(), || format!("case {case}: {report:?}"));
            Ok(())
        })();
        if let Err(e) = res {
            rep.check(false, || format!("case {case}: {e}"));
        }
    }
    rep.timed(start)
}

fn solve(inst: &Instance, reference: Option<&[RandomPricing]>) -> Result<ExAnteSolution> {
    let sol = solve_exante_with(
        &inst.buyers,
        &[],
        reference,
        ColumnMode::Auto,
        &ExAnteConfig::default(),
    )?;
    sol.check_invariants(&inst.buyers)?;
    Ok(sol)
}

/// The gross substitutes mechanism earns half of each buyer's ex ante
/// revenue: exactly from the plan, and within three standard errors in
/// simulation.
pub fn gs_halving(seed: u64, instances: usize, trials: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("gross substitutes mechanism halves ex ante revenue");
    let mut r = rng(seed);
    let mut worst_z: f64 = 0.0;
    for case in 0..instances {
        let (n, m) = (r.gen_range(1..=3), r.gen_range(1..=4));
        let res = (|| -> Result<()> {
            let inst = gen_random_gs(m, n, r.gen_range(1..=3), r.gen())?;
            let sol = solve(&inst, None)?;
            let mech = GsMechanism::new(inst.clone(), sol.clone(), GsConfig::default())?;
            let mc = monte_carlo(&mech, trials, r.gen(), false)?;
            for i in 0..n {
                let half = 0.5 * expected_rev(&inst.buyers[i], &sol.pricings[i])?;
                let planned = mech.planned_revenue(i)?;
                rep.check((planned - half).abs() <= 1e-9, || {
                    format!("case {case} buyer {i}: planned {planned} vs {half}")
                });
                let (mean, se) = (mc.buyer_mean[i], mc.buyer_stderr[i]);
                rep.check((mean - half).abs() <= 3.0 * se + 1e-12, || {
                    format!("case {case} buyer {i}: simulated {mean} ± {se} vs {half}")
                });
                if se > 0.0 {
                    worst_z = worst_z.max((mean - half).abs() / se);
                }
            }
            rep.check(mc.mean >= sol.value / 2.0 - 3.0 * mc.stderr, || {
                format!("case {case}: total {} ± {} vs {}", mc.mean, mc.stderr, sol.value / 2.0)
            });
            Ok(())
        })();
        if let Err(e) = res {
            rep.check(false, || format!("case {case}: {e}"));
        }
    }
    rep.note(format!("largest per-buyer deviation {worst_z:.2} standard errors"));
    rep.timed(start)
}

fn availability_check(
    rep: &mut SuiteReport,
    label: &str,
    mech: &dyn Mechanism,
    trials: usize,
    seed: u64,
) -> Result<()> {
    let mc = monte_carlo(mech, trials, seed, false)?;
    let mut lowest: f64 = 1.0;
    for (i, row) in mc.availability.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            let se = (a * (1.0 - a) / trials as f64).sqrt();
            rep.check(a >= 0.5 - 3.0 * se, || {
                format!("{label}: Pr[{j} unsold at buyer {i}] = {a} ± {se}")
            });
            lowest = lowest.min(a);
        }
    }
    rep.note(format!("{label}: lowest availability {lowest:.4}"));
    Ok(())
}

/// Every item is still unsold with probability at least 1/2 when each
/// buyer arrives, for the OCRS sequence and the gross substitutes mechanism.
pub fn availability(seed: u64, trials: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("availability stays above one half");
    let mut r = rng(seed);
    for case in 0..4 {
        let res = (|| -> Result<()> {
            let inst = gen_random_gs(3, 3, 2, r.gen())?;
            let sol = solve(&inst, None)?;
            let seq = OcrsSequential::new(inst.clone(), sol.clone(), vec![RrsScheme::GrossSubstitutes; 3])?;
            availability_check(&mut rep, &format!("gs case {case}, ocrs-seq"), &seq, trials, r.gen())?;
            let gs = GsMechanism::new(inst, sol, GsConfig::default())?;
            for i in 0..3 {
                let marg = gs.availability(i).marginals(3);
                rep.check(marg.iter().all(|&a| a >= 0.5 - 1e-9), || {
                    format!("gs case {case}: exact availability at buyer {i} is {marg:?}")
                });
            }
            availability_check(&mut rep, &format!("gs case {case}, gs"), &gs, trials, r.gen())?;

            let family = FAMILIES[case % 3];
            let inst = gen_random_subadditive(3, 3, 2, family, r.gen())?;
            let sol = solve(&inst, None)?;
            let seq = OcrsSequential::new(inst, sol, vec![RrsScheme::Subadditive { alpha: None }; 3])?;
            availability_check(&mut rep, &format!("subadditive case {case}, ocrs-seq"), &seq, trials, r.gen())?;
            Ok(())
        })();
        if let Err(e) = res {
            rep.check(false, || format!("case {case}: {e}"));
        }
    }
    rep.timed(start)
}

/// Structural facts of the XOS lower-bound instance at `t = 2`, and the
/// analytic oracle against enumeration on small relaxed parameters.
pub fn xos_lb(seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("XOS lower-bound instance");
    let res = (|| -> Result<()> {
        let g = gen_xos_lb(&XosLbConfig::new(2, XOS_EPS), seed)?;
        let inst = &g.instance;
        let (m, n) = (inst.m, inst.n());
        rep.check(m == 256 && n == 16, || format!("sizes m={m}, n={n}"));
        let ones = ItemPricing::uniform(m, 1.0);
        let mut totals = vec![0.0; m];
        let mut value = 0.0;
        for (d, reference) in inst.buyers.iter().zip(&g.reference) {
            for (_, v) in d.iter() {
                let Valuation::XosLb(params) = v else {
                    return Err(Error::InvalidValuation("unexpected kind".into()));
                };
                let flat = XosLbParams { eps: 0.0, ..params.clone() };
                let (k, t) = (flat.k as f64, flat.t as f64);
                let util_a = flat.value(&flat.a) - ones.price_of(&flat.a);
                let b = ItemSet::from_items((0..m).filter(|j| !flat.a.contains(*j)).take(flat.b_size()));
                let util_b = flat.value(&b) - ones.price_of(&b);
                rep.check(util_a == k * t && util_b == k * t, || {
                    format!("Util(A) = {util_a}, Util(B) = {util_b}, kt = {}", k * t)
                });
                let r = demand(v, &ones)?;
                rep.check(r.set == params.a && r.payment == k, || {
                    format!("unit prices buy {:?} for {}", r.set, r.payment)
                });
            }
            let alloc = expected_alloc(d, reference)?;
            for (tot, a) in totals.iter_mut().zip(alloc) {
                *tot += a;
            }
            value += expected_rev(d, reference)?;
        }
        rep.check(value == 256.0, || format!("reference value {value}"));
        rep.check(totals.iter().all(|&x| x == 1.0), || {
            format!("item totals range over {:?}", totals.iter().fold((f64::INFINITY, 0.0f64), |a, &x| (a.0.min(x), a.1.max(x))))
        });
        let sol = solve_exante_with(
            &inst.buyers,
            &[],
            Some(&g.reference),
            ColumnMode::Reference,
            &ExAnteConfig::default(),
        )?;
        sol.check_invariants(&inst.buyers)?;
        rep.check(sol.value >= 256.0 - 1e-7, || format!("solver value {}", sol.value));
        rep.note(format!("reference value {value}, solver value {:.6}", sol.value));

        // Whenever a buyer's purchase is explained by the A clause, it holds
        // at least kt/(t+1) items.
        let mut r = rng(seed ^ 0x5A5A);
        let mut a_events = 0;
        for _ in 0..400 {
            let d = &inst.buyers[r.gen_range(0..n)];
            let Valuation::XosLb(params) = d.sample(&mut r) else { unreachable!() };
            let (k, t) = (params.k as f64, params.t as f64);
            let blocked = r.gen_range(0.0..0.5);
            let top = params.a_value();
            let spread: f64 = r.gen_range(0.0..1.0);
            let cheapest = if r.gen_bool(0.5) { 0.0 } else { 0.6 };
            let prices: Vec<f64> = (0..m)
                .map(|j| {
                    if r.gen_bool(blocked) {
                        f64::INFINITY
                    } else if params.a.contains(j) {
                        top * r.gen_range(0.0..1.0) * spread
                    } else {
                        params.b_value() * r.gen_range(cheapest..1.5)
                    }
                })
                .collect();
            let p = ItemPricing::new(prices)?;
            let got = params.demand(&p);
            let va = params.a_value() * got.set.len() as f64;
            if params.is_a_purchase(&got.set) && va >= params.value(&got.set) {
                a_events += 1;
                let floor = k * t / (t + 1.0);
                rep.check(got.set.len() as f64 >= floor, || {
                    format!("A-clause purchase of {} items below {floor}", got.set.len())
                });
            }
        }
        rep.check(a_events > 0, || "no A-clause purchases sampled".into());
        rep.note(format!("{a_events} A-clause purchases sampled"));
        Ok(())
    })();
    if let Err(e) = res {
        rep.check(false, || e.to_string());
    }

    let mut r = rng(seed ^ 0xA5A5);
    let mut perm: Vec<usize> = (0..16).collect();
    let mut explicit_checked = 0;
    for case in 0..200 {
        perm.shuffle(&mut r);
        let ell = [1usize, 2, 4][r.gen_range(0..3)];
        let params = XosLbParams::relaxed(16, 4, 2, ell, ItemSet::from_items(perm[..4].iter().copied()), XOS_EPS)
            .unwrap();
        let prices: Vec<f64> = (0..16)
            .map(|_| match r.gen_range(0..10) {
                0 => f64::INFINITY,
                1 => 1.0,
                2 => params.b_value(),
                _ => r.gen_range(0.0..4.0),
            })
            .collect();
        let p = ItemPricing::new(prices).unwrap();
        let analytic = params.demand(&p);
        let v = Valuation::XosLb(params.clone());
        let brute = demand_exhaustive(&v, &p).unwrap();
        rep.check(analytic.set == brute.set, || {
            format!("case {case}: analytic {analytic:?} vs exhaustive {brute:?}")
        });
        if params.b_size() <= 4 && explicit_checked < 12 {
            explicit_checked += 1;
            let explicit = params.explicit(5000).unwrap();
            let d = demand(&explicit, &p).unwrap();
            rep.check(d.set == analytic.set, || {
                format!("case {case}: explicit clauses {d:?} vs analytic {analytic:?}")
            });
        }
    }
    rep.timed(start)
}

/// Good collections, the one-sale ceiling of every mechanism, and the ex
/// ante value of the bundle pricings.
pub fn monotone_lb(seed: u64, ells: &[usize], trials: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("monotone lower-bound instance");
    for &ell in ells {
        let res = (|| -> Result<()> {
            let gc = good_collection(ell)?;
            for (i, pi) in gc.partitions.iter().enumerate() {
                for pi2 in &gc.partitions[i + 1..] {
                    for b in pi {
                        for b2 in pi2 {
                            rep.check(b.intersects(b2), || format!("ℓ={ell}: {b:?} misses {b2:?}"));
                        }
                    }
                }
            }
            let m = ell * ell;
            let g = gen_monotone_lb(m, ell, MONO_EPS)?;
            let sol = solve(&g.instance, Some(&g.reference))?;
            let floor = ell as f64 * (1.0 - MONO_EPS);
            rep.check(sol.value >= floor - 1e-9, || format!("ℓ={ell}: value {} < {floor}", sol.value));
            let inst = g.instance;
            let mechs: Vec<Box<dyn Mechanism>> = vec![
                Box::new(OcrsSequential::new(
                    inst.clone(),
                    sol.clone(),
                    vec![RrsScheme::Subadditive { alpha: None }; ell],
                )?),
                Box::new(SubadditiveMechanism::new(inst.clone(), sol.clone())?),
                Box::new(MonotoneN::new(inst.clone(), sol.clone())?),
                Box::new(MonotoneM2::new(inst.clone(), sol.clone())?),
            ];
            let mut line = format!("ℓ={ell}: value {:.4}", sol.value);
            for mech in &mechs {
                let mc = monte_carlo(mech.as_ref(), trials, seed, false)?;
                rep.check(mc.max_revenue <= 1.0 + 1e-9, || {
                    format!("ℓ={ell}: {} reached {}", mech.name(), mc.max_revenue)
                });
                line += &format!(
                    ", {} mean {:.4} max {:.4} skipped buyers {}",
                    mech.name(),
                    mc.mean,
                    mc.max_revenue,
                    mc.hull_violations
                );
            }
            let gs = GsMechanism::new(inst, sol, GsConfig::default());
            rep.check(matches!(gs, Err(Error::NotGrossSubstitutes(_))), || {
                format!("ℓ={ell}: gross substitutes mechanism accepted bundle buyers")
            });
            rep.note(line + ", gs not applicable");
            Ok(())
        })();
        if let Err(e) = res {
            rep.check(false, || format!("ℓ={ell}: {e}"));
        }
    }
    rep.timed(start)
}

/// Pricings searched for the geometric-price instance: scaled and shifted
/// copies of the reference prices, single-item offers and coordinate ascent
/// over per-item candidates `β^e·{1/2, 1, 2}` and `∞`.
fn rrs_lb_grid_search(inst: &RrsLbInstance, ascent_passes: usize, window: usize) -> (f64, usize) {
    let m = inst.m;
    let s = m - 1;
    let beta = inst.beta;
    let mut evals = 0usize;
    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut eval = |q: &[f64], evals: &mut usize| -> f64 {
        let key: Vec<u64> = q.iter().map(|x| x.to_bits()).collect();
        if let Some(&v) = cache.get(&key) {
            return v;
        }
        *evals += 1;
        let mut full = q.to_vec();
        full.push(f64::INFINITY);
        let v = inst.restricted_revenue(&ItemPricing::new(full).unwrap());
        cache.insert(key, v);
        v
    };
    let mut best: f64 = 0.0;
    let mut starts = Vec::new();
    for d in -2i32..=2 {
        for c in [0.5, 1.0, 2.0] {
            let q: Vec<f64> = (0..s).map(|j| c * beta.powi(j as i32 + 1 + d)).collect();
            let v = eval(&q, &mut evals);
            best = best.max(v);
            starts.push((v, q));
        }
    }
    for j in 0..s {
        for c in [0.5, 1.0, 2.0] {
            let mut q = vec![f64::INFINITY; s];
            q[j] = c * beta.powi(j as i32 + 1);
            best = best.max(eval(&q, &mut evals));
        }
    }
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, start) in starts.into_iter().take(2) {
        let mut q = start;
        let mut cur = eval(&q, &mut evals);
        for _ in 0..ascent_passes {
            let mut improved = false;
            for j in (0..s).rev().take(window) {
                let mut cands = vec![f64::INFINITY];
                for e in -1i32..=1 {
                    for c in [0.5, 1.0, 2.0] {
                        cands.push(c * beta.powi(j as i32 + 1 + e));
                    }
                }
                for x in cands {
                    let old = q[j];
                    q[j] = x;
                    let v = eval(&q, &mut evals);
                    if v > cur + 1e-12 {
                        cur = v;
                        improved = true;
                    } else {
                        q[j] = old;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        best = best.max(cur);
    }
    (best, evals)
}

/// The geometric-price instance: revenue mass, demand under the reference
/// pricing for every support valuation, and the revenue ceiling over a
/// structured grid of restricted pricings.
pub fn rrs_lb(ms: &[usize], window: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("geometric-price lower-bound instance");
    for &m in ms {
        let inst = match gen_rrs_lb(m, RRS_EPS) {
            Ok(i) => i,
            Err(e) => {
                rep.check(false, || format!("m={m}: {e}"));
                continue;
            }
        };
        let p = inst.pricing();
        let s = inst.available();
        let free = m - 1;
        let mut mass_sum = 0.0;
        let mut prob_sum = 0.0;
        let mut bad = 0usize;
        let mut first_bad = None;
        inst.for_each_atom(|w, params| {
            let level = params.level;
            let r = demand(&Valuation::RrsLb(params), &p).expect("dimensions agree");
            if r.set != ItemSet::from_items([level - 1, free]) {
                bad += 1;
                first_bad.get_or_insert((level, r.set));
            }
            mass_sum += w * s.intersection(&r.set).iter().map(|j| p.get(j)).sum::<f64>();
            prob_sum += w;
        });
        rep.check(bad == 0, || format!("m={m}: {bad} valuations deviate, first {first_bad:?}"));
        let want = inst.reference_mass();
        rep.check((mass_sum - want).abs() <= 1e-9 * want.max(1.0), || {
            format!("m={m}: mass {mass_sum} vs (m-1)/σ = {want}")
        });
        rep.check((prob_sum - 1.0).abs() <= 1e-9, || format!("m={m}: probabilities sum to {prob_sum}"));
        let (best, evals) = rrs_lb_grid_search(&inst, 3, window.min(m - 1));
        let bound = inst.revenue_bound();
        rep.check(best <= bound + 1e-9, || format!("m={m}: grid revenue {best} above {bound}"));
        rep.note(format!(
            "m={m}: mass {mass_sum:.9}, best grid revenue {best:.6} ≤ {bound:.6} over {evals} pricings"
        ));
    }
    rep.timed(start)
}

fn random_price(r: &mut ChaCha20Rng, scale: f64) -> f64 {
    match r.gen_range(0..12) {
        0 => f64::INFINITY,
        1 => 0.0,
        2..=4 => (r.gen_range(0.0..2.0) * scale * 4.0).round() / 4.0,
        _ => r.gen_range(0.0..2.0) * scale,
    }
}

/// A random valuation of any kind on `m ≤ 10` items.
pub fn random_valuation_any(r: &mut ChaCha20Rng, m: usize) -> Valuation {
    let vec = |r: &mut ChaCha20Rng| -> Vec<f64> {
        (0..m).map(|_| if r.gen_bool(0.2) { 0.0 } else { r.gen_range(0.0..2.0) }).collect()
    };
    match r.gen_range(0..8) {
        0 => Valuation::additive(vec(r)).unwrap(),
        1 => Valuation::unit_demand(vec(r)).unwrap(),
        2 => {
            let k = r.gen_range(1..=4);
            Valuation::xos(m, (0..k).map(|_| vec(r)).collect()).unwrap()
        }
        3 => {
            let mut vals = vec![0.0];
            for mask in 1..1u64 << m {
                vals.push(r.gen_range(0.0..3.0) * (mask.count_ones() as f64).sqrt());
            }
            Valuation::table(m, vals, None).unwrap()
        }
        4 => {
            let k = r.gen_range(1..=m);
            let mut items: Vec<usize> = (0..m).collect();
            items.shuffle(r);
            let t = r.gen_range(1..=m.min(2));
            let ell = r.gen_range(1..=m / t);
            XosLbParams::relaxed(m, k, t, ell, ItemSet::from_items(items[..k].iter().copied()), 0.01)
                .map(Valuation::XosLb)
                .unwrap()
        }
        5 => {
            let bundles = (0..r.gen_range(1..=3))
                .map(|_| {
                    let b = random_subset(r, m, 0.4);
                    if b.is_empty() { ItemSet::singleton(r.gen_range(0..m)) } else { b }
                })
                .collect();
            Valuation::bundle_threshold(m, bundles).unwrap()
        }
        6 if m >= 5 => {
            let inst = gen_rrs_lb(m, 0.01).unwrap();
            let level = r.gen_range(1..m);
            let rset = random_subset(r, level - 1, inst.rho);
            Valuation::RrsLb(inst.params(level, rset))
        }
        _ => {
            let inner = random_valuation_any(r, m);
            inner.restrict(&random_subset(r, m, 0.6))
        }
    }
}

/// Structured demand against enumeration of every offered subset.
pub fn demand_ground_truth(seed: u64, count: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("demand oracle against enumeration");
    let mut r = rng(seed);
    let mut kinds: HashMap<String, usize> = HashMap::new();
    for case in 0..count {
        let m = r.gen_range(1..=10);
        let v = random_valuation_any(&mut r, m);
        let kind = format!("{:?}", v).split([' ', '(', '{']).next().unwrap_or("").to_string();
        *kinds.entry(kind).or_default() += 1;
        let scale = match &v {
            Valuation::RrsLb(params) => params.beta.powi(params.level as i32),
            Valuation::XosLb(params) => params.b_value(),
            _ => 1.0,
        };
        let p = ItemPricing::new((0..m).map(|_| random_price(&mut r, scale)).collect()).unwrap();
        let fast = demand(&v, &p).unwrap();
        let slow = demand_exhaustive(&v, &p).unwrap();
        let tol = 1e-9 * scale.max(1.0);
        rep.check(
            fast.set == slow.set
                && (fast.payment - slow.payment).abs() <= tol
                && (fast.utility - slow.utility).abs() <= tol,
            || format!("case {case}: {v:?} at {p:?}: {fast:?} vs {slow:?}"),
        );
    }
    let mut kinds: Vec<_> = kinds.into_iter().collect();
    kinds.sort();
    rep.note(format!("kinds {kinds:?}"));
    rep.timed(start)
}
