use seqprice::exante::{solve_exante_with, ColumnMode, ExAnteConfig};
use seqprice::instances::monotone_lb::{gen_monotone_lb, DEFAULT_EPS};
use seqprice::instances::random::{gen_random_gs, gen_random_subadditive, RandomFamily};
use seqprice::mechanisms::{
    high_price_bound, monte_carlo, small_band_mass, Branch, GsConfig, GsMechanism, Mechanism,
    MonotoneM2, MonotoneN, OcrsSequential, SubadditiveMechanism,
};
use seqprice::rrs::RrsScheme;
use seqprice::{
    expected_rev, BuyerDistribution, ExAnteSolution, Instance, ItemPricing, RandomPricing,
    Valuation,
};

fn solve_ref(inst: &Instance, reference: Option<&[RandomPricing]>) -> ExAnteSolution {
    let sol = solve_exante_with(&inst.buyers, &[], reference, ColumnMode::Auto, &ExAnteConfig::default())
        .unwrap();
    sol.check_invariants(&inst.buyers).unwrap();
    sol
}

fn solve(inst: &Instance) -> ExAnteSolution {
    solve_ref(inst, None)
}

fn unit_buyers(n: usize) -> Instance {
    let d = BuyerDistribution::point(Valuation::additive(vec![1.0]).unwrap());
    Instance::new(1, vec![d; n]).unwrap()
}

fn within(mean: f64, target: f64, se: f64) -> bool {
    (mean - target).abs() <= 3.0 * se + 1e-12
}

#[test]
fn gs_single_buyer_halves() {
    let inst = unit_buyers(1);
    let sol = solve(&inst);
    assert!((sol.value - 1.0).abs() < 1e-9);
    let mech = GsMechanism::new(inst, sol, GsConfig::default()).unwrap();
    assert!((mech.planned_revenue(0).unwrap() - 0.5).abs() < 1e-12);
    let r = monte_carlo(&mech, 20_000, 1, false).unwrap();
    assert!(within(r.mean, 0.5, r.stderr));
}

#[test]
fn gs_two_unit_buyers_total_half() {
    let inst = unit_buyers(2);
    let sol = solve(&inst);
    let mech = GsMechanism::new(inst, sol, GsConfig::default()).unwrap();
    let total = mech.planned_revenue(0).unwrap() + mech.planned_revenue(1).unwrap();
    assert!((total - 0.5).abs() < 1e-12, "{total}");
}

#[test]
fn gs_rejects_bundles() {
    let g = gen_monotone_lb(9, 3, DEFAULT_EPS).unwrap();
    let sol = solve_ref(&g.instance, Some(&g.reference));
    assert!(GsMechanism::new(g.instance, sol, GsConfig::default()).is_err());
}

#[test]
fn gs_random_per_buyer_identity() {
    for seed in 0..3 {
        let inst = gen_random_gs(3, 3, 2, seed).unwrap();
        let sol = solve(&inst);
        let mech = GsMechanism::new(inst.clone(), sol.clone(), GsConfig::default()).unwrap();
        for i in 0..3 {
            let half = 0.5 * expected_rev(&inst.buyers[i], &sol.pricings[i]).unwrap();
            assert!((mech.planned_revenue(i).unwrap() - half).abs() < 1e-9);
        }
        let r = monte_carlo(&mech, 5_000, seed, false).unwrap();
        for row in &r.availability {
            for &a in row {
                assert!(a >= 0.5 - 3.0 * (0.25f64 / 5000.0).sqrt());
            }
        }
    }
}

#[test]
fn monotone_n_shares_value() {
    let inst = unit_buyers(1);
    let sol = solve(&inst);
    let r = monte_carlo(&MonotoneN::new(inst, sol).unwrap(), 100, 3, false).unwrap();
    assert_eq!(r.mean, 1.0);
    assert_eq!(r.stderr, 0.0);

    let inst = unit_buyers(2);
    let sol = solve(&inst);
    let r = monte_carlo(&MonotoneN::new(inst, sol).unwrap(), 20_000, 3, false).unwrap();
    assert!(within(r.mean, 0.5, r.stderr));
}

#[test]
fn monotone_m2_single_item() {
    let inst = unit_buyers(1);
    let sol = solve(&inst);
    let mech = MonotoneM2::new(inst, sol).unwrap();
    assert_eq!(mech.best_item, 0);
    let r = monte_carlo(&mech, 20_000, 4, false).unwrap();
    assert!(r.mean >= 0.25 - 3.0 * r.stderr);
}

#[test]
fn single_trial_mean_is_its_revenue() {
    let inst = gen_random_subadditive(3, 2, 2, RandomFamily::Coverage, 1).unwrap();
    let sol = solve(&inst);
    let mech = MonotoneN::new(inst, sol).unwrap();
    let r = monte_carlo(&mech, 1, 9, true).unwrap();
    assert_eq!(r.mean, r.revenues.unwrap()[0]);
    assert_eq!(r.stderr, 0.0);
}

#[test]
fn same_seed_same_report() {
    let inst = gen_random_subadditive(3, 2, 2, RandomFamily::XosRandom, 2).unwrap();
    let sol = solve(&inst);
    let mech = SubadditiveMechanism::new(inst, sol).unwrap();
    let a = monte_carlo(&mech, 500, 11, true).unwrap();
    let b = monte_carlo(&mech, 500, 11, true).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ocrs_sequential_single_buyer_and_availability() {
    let inst = unit_buyers(1);
    let sol = solve(&inst);
    let mech = OcrsSequential::new(inst, sol, vec![RrsScheme::GrossSubstitutes]).unwrap();
    let r = monte_carlo(&mech, 10_000, 5, false).unwrap();
    assert!(within(r.mean, 0.5, r.stderr));

    let inst = gen_random_subadditive(3, 3, 2, RandomFamily::BudgetedAdditive, 5).unwrap();
    let sol = solve(&inst);
    let mech = OcrsSequential::new(inst, sol, vec![RrsScheme::Subadditive { alpha: None }; 3]).unwrap();
    let r = monte_carlo(&mech, 10_000, 6, false).unwrap();
    for row in &r.availability {
        for &a in row {
            assert!(a >= 0.5 - 3.0 * (0.25f64 / 10_000.0).sqrt(), "{a}");
        }
    }
}

#[test]
fn high_branch_sells_huge_item_at_half_price() {
    let d = BuyerDistribution::new(vec![
        (0.05, Valuation::additive(vec![100.0]).unwrap()),
        (0.95, Valuation::additive(vec![1.0]).unwrap()),
    ])
    .unwrap();
    let inst = Instance::new(1, vec![d]).unwrap();
    let sol = solve(&inst);
    assert!((sol.value - 5.0).abs() < 1e-9);
    let mech = SubadditiveMechanism::new(inst, sol).unwrap().with_branch(Branch::High);
    let r = monte_carlo(&mech, 40_000, 7, false).unwrap();
    assert!(within(r.mean, 2.5, r.stderr), "{} ± {}", r.mean, r.stderr);
}

#[test]
fn high_branch_idle_when_prices_are_medium() {
    let inst = unit_buyers(2);
    let sol = solve(&inst);
    let mech = SubadditiveMechanism::new(inst, sol).unwrap().with_branch(Branch::High);
    let r = monte_carlo(&mech, 1_000, 8, false).unwrap();
    assert_eq!(r.mean, 0.0);
}

#[test]
fn high_branch_keeps_everything_for_half_the_buyers() {
    let inst = gen_random_subadditive(3, 4, 3, RandomFamily::Coverage, 12).unwrap();
    let sol = solve(&inst);
    let mech = SubadditiveMechanism::new(inst, sol).unwrap().with_branch(Branch::High);
    let trials = 10_000;
    let r = monte_carlo(&mech, trials, 13, false).unwrap();
    for row in &r.availability {
        let a = row[0];
        let se = (a * (1.0 - a) / trials as f64).sqrt();
        assert!(a >= 0.5 - 3.0 * se);
    }
}

#[test]
fn small_band_is_negligible_and_high_price_bound_holds() {
    for seed in 0..5 {
        let inst = gen_random_subadditive(4, 2, 3, RandomFamily::XosRandom, seed).unwrap();
        let sol = solve(&inst);
        assert!(small_band_mass(&inst, &sol).unwrap() <= sol.value / 4.0 + 1e-12);
        for (d, r) in inst.buyers.iter().zip(&sol.pricings) {
            for (_, p) in r.iter() {
                for (_, v) in d.iter() {
                    let (got, quarter) = high_price_bound(v, p, sol.value).unwrap();
                    assert!(got >= quarter - 1e-9);
                }
            }
        }
        // A pricing with a huge price on item 0 exercises the large band.
        let p = ItemPricing::new(vec![1e4, 0.5, 0.5, f64::INFINITY]).unwrap();
        for (_, v) in inst.buyers[0].iter() {
            let (got, quarter) = high_price_bound(v, &p, 0.1).unwrap();
            assert!(got >= quarter - 1e-9);
        }
    }
}

#[test]
fn monotone_lb_revenue_at_most_one() {
    let g = gen_monotone_lb(9, 3, DEFAULT_EPS).unwrap();
    let sol = solve_ref(&g.instance, Some(&g.reference));
    assert!(sol.value >= 2.97 - 1e-9);
    let inst = g.instance;
    let mechs: Vec<Box<dyn Mechanism>> = vec![
        Box::new(OcrsSequential::new(inst.clone(), sol.clone(), vec![RrsScheme::Subadditive { alpha: None }; 3]).unwrap()),
        Box::new(SubadditiveMechanism::new(inst.clone(), sol.clone()).unwrap()),
        Box::new(MonotoneN::new(inst.clone(), sol.clone()).unwrap()),
        Box::new(MonotoneM2::new(inst.clone(), sol.clone()).unwrap()),
    ];
    for m in &mechs {
        let r = monte_carlo(m.as_ref(), 2_000, 10, false).unwrap();
        assert!(r.max_revenue <= 1.0 + 1e-9, "{}: {}", m.name(), r.max_revenue);
    }
}
