//! Ratio of the ex ante optimum to simulated revenue of the subadditive
//! mechanism on random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::demand::expected_alloc;
use crate::distribution::SetDistribution;
use crate::error::{Error, Result};
use crate::exante::{solve_exante_with, ColumnMode, ExAnteConfig};
use crate::instances::random::{gen_random_subadditive, RandomFamily};
use crate::items::ItemSet;
use crate::mechanisms::{monte_carlo, SubadditiveMechanism};
use crate::ocrs::{rrs_to_ocrs, verify_ocrs};
use crate::rrs::{subadd_alpha, subadd_rrs, verify_rrs, RrsScheme};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    /// Instance `k` of each size draws from `families[k % len]`.
    pub families: Vec<RandomFamily>,
    pub buyers: usize,
    pub support: usize,
    pub instances: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![2, 4, 6],
            families: vec![
                RandomFamily::Coverage,
                RandomFamily::BudgetedAdditive,
                RandomFamily::XosRandom,
            ],
            buyers: 2,
            support: 2,
            instances: 3,
            trials: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub instance: usize,
    pub family: RandomFamily,
    pub ea_rev: f64,
    pub revenue: f64,
    pub stderr: f64,
    /// `ea_rev / revenue`; infinite when nothing sold.
    pub ratio: f64,
    pub skip_rate: f64,
    pub hull_violations: usize,
    pub verifier_checks: usize,
    pub verifier_failures: usize,
}

/// Runs the pipeline on every size. Each transcript is checked for ex post
/// feasibility inside the simulation; an infeasible one is an error.
pub fn bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.families.is_empty() {
        return Err(Error::InvalidArgument("no instance families".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for &m in &config.sizes {
        for instance in 0..config.instances {
            let family = config.families[instance % config.families.len()];
            let inst = gen_random_subadditive(m, config.buyers, config.support, family, rng.gen())?;
            let sol = solve_exante_with(&inst.buyers, &[], None, ColumnMode::Auto, &ExAnteConfig::default())?;
            sol.check_invariants(&inst.buyers)?;

            let mut checks = 0;
            let mut failures = 0;
            let full = ItemSet::full(m);
            let probs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..=1.0)).collect();
            let sets = SetDistribution::bernoulli(&probs)?;
            for (d, reference) in inst.buyers.iter().zip(&sol.pricings) {
                let mut alpha: f64 = 1.0;
                for (_, p) in reference.iter() {
                    let a = subadd_alpha(m, &full, p)?;
                    alpha = alpha.max(a);
                    let q = subadd_rrs(d, &full, p)?;
                    checks += 1;
                    if !verify_rrs(d, &full, p, &q, a)?.holds() {
                        failures += 1;
                    }
                }
                let x = expected_alloc(d, reference)?;
                let mut cases = Vec::new();
                for (ps, s) in &sets.support {
                    let out = rrs_to_ocrs(d, s, reference, RrsScheme::Subadditive { alpha: None })?;
                    cases.push((*ps, *s, out.pricing));
                }
                let e = std::f64::consts::E;
                checks += 1;
                if !verify_ocrs(d, &cases, &x, reference, alpha * e / (e - 1.0))?.holds() {
                    failures += 1;
                }
            }

            let mech = SubadditiveMechanism::new(inst.clone(), sol.clone())?;
            let mc = monte_carlo(&mech, config.trials, rng.gen(), false)?;
            rows.push(BenchRow {
                m,
                n: inst.n(),
                instance,
                family,
                ea_rev: sol.value,
                revenue: mc.mean,
                stderr: mc.stderr,
                ratio: if mc.mean > 0.0 { sol.value / mc.mean } else { f64::INFINITY },
                skip_rate: mc.skip_rate,
                hull_violations: mc.hull_violations,
                verifier_checks: checks,
                verifier_failures: failures,
            });
        }
    }
    Ok(rows)
}
