//! The ex ante relaxation over a finite grid of candidate pricings.
//!
//! Each buyer mixes over deterministic candidate pricings; each item may be
//! sold at most once in expectation across buyers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{alloc_and_rev, expected_alloc, expected_rev, TOL};
use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::lp::{lp_solve, LinearProgram, LpStatus};
use crate::pricing::{ItemPricing, PricingAtom, RandomPricing};
use crate::valuation::Valuation;

/// Largest item count for which marginal differences are enumerated.
pub const CANDIDATE_MAX_ITEMS: usize = 12;
pub const DEFAULT_CANDIDATE_BUDGET: usize = 1_000_000;
pub const DEFAULT_MAX_COLUMNS: usize = 10_000;

const INVARIANT_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug)]
pub struct ExAnteConfig {
    pub candidate_budget: usize,
    pub max_columns: usize,
}

impl Default for ExAnteConfig {
    fn default() -> Self {
        ExAnteConfig {
            candidate_budget: DEFAULT_CANDIDATE_BUDGET,
            max_columns: DEFAULT_MAX_COLUMNS,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExAnteSolution {
    pub value: f64,
    pub x: Vec<Vec<f64>>,
    pub pricings: Vec<RandomPricing>,
}

fn dedup_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if x - last <= TOL || (x.is_infinite() && last.is_infinite()) => {}
            _ => out.push(x),
        }
    }
    out
}

/// Per-item candidate prices, ascending with `∞` last: 0, ∞, every
/// marginal `v(S) - v(S∖{j})` over the given valuations and `S ∋ j`, and the
/// extra grid.
pub fn item_candidates(vals: &[Valuation], m: usize, extra: &[f64]) -> Result<Vec<Vec<f64>>> {
    if m > CANDIDATE_MAX_ITEMS {
        return Err(Error::TooLarge {
            what: "candidate enumeration item count",
            size: m,
            limit: CANDIDATE_MAX_ITEMS,
        });
    }
    if let Some(x) = extra.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidArgument(format!("grid price {x}")));
    }
    let mut per_item: Vec<Vec<f64>> = vec![vec![0.0, f64::INFINITY]; m];
    for v in vals {
        let table: Vec<f64> = (0..1u64 << m).map(|s| v.value(&ItemSet::from_mask(s))).collect();
        for (j, cands) in per_item.iter_mut().enumerate() {
            for s in 0..table.len() {
                if s >> j & 1 == 1 {
                    let d = table[s] - table[s & !(1 << j)];
                    if d > 0.0 {
                        cands.push(d);
                    }
                }
            }
        }
    }
    Ok(per_item
        .into_iter()
        .map(|mut c| {
            c.extend_from_slice(extra);
            dedup_sorted(c)
        })
        .collect())
}

fn product_size(cands: &[Vec<f64>]) -> Option<usize> {
    cands.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
}

fn product(cands: &[Vec<f64>]) -> Vec<ItemPricing> {
    let m = cands.len();
    let size = product_size(cands).unwrap_or(0);
    let mut out = Vec::with_capacity(size);
    let mut idx = vec![0usize; m];
    for _ in 0..size {
        out.push(ItemPricing::new((0..m).map(|j| cands[j][idx[j]]).collect()).unwrap());
        for j in 0..m {
            idx[j] += 1;
            if idx[j] < cands[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

/// Cartesian product of the per-item candidate sets of one buyer.
pub fn candidate_prices(
    d: &BuyerDistribution,
    extra_grid: &[f64],
    budget: usize,
) -> Result<Vec<ItemPricing>> {
    let vals: Vec<Valuation> = d.iter().map(|(_, v)| v.clone()).collect();
    let cands = item_candidates(&vals, d.m(), extra_grid)?;
    let size = product_size(&cands).unwrap_or(usize::MAX);
    if size > budget {
        return Err(Error::TooLarge {
            what: "candidate pricing grid",
            size,
            limit: budget,
        });
    }
    Ok(product(&cands))
}

/// Like [`candidate_prices`], but drops the most crowded interior
/// candidates until the grid fits the budget. 0 and ∞ are always kept.
pub fn thinned_candidate_prices(
    d: &BuyerDistribution,
    extra_grid: &[f64],
    budget: usize,
) -> Result<Vec<ItemPricing>> {
    let vals: Vec<Valuation> = d.iter().map(|(_, v)| v.clone()).collect();
    let mut cands = item_candidates(&vals, d.m(), extra_grid)?;
    while product_size(&cands).is_none_or(|s| s > budget) {
        let (j, _) = cands
            .iter()
            .enumerate()
            .max_by_key(|(j, c)| (c.len(), usize::MAX - j))
            .unwrap();
        let c = &mut cands[j];
        if c.len() <= 2 {
            return Err(Error::TooLarge {
                what: "candidate pricing grid",
                size: product_size(&cands).unwrap_or(usize::MAX),
                limit: budget,
            });
        }
        // Interior point whose neighbours are closest together.
        let k = (1..c.len() - 1)
            .filter(|&k| c[k].is_finite() && c[k] > 0.0)
            .min_by(|&a, &b| {
                let gap = |k: usize| {
                    let hi = if c[k + 1].is_finite() { c[k + 1] } else { c[k] * 2.0 };
                    hi - c[k - 1]
                };
                gap(a).partial_cmp(&gap(b)).unwrap()
            })
            .unwrap();
        c.remove(k);
    }
    Ok(product(&cands))
}

struct Column {
    buyer: usize,
    pricing: ItemPricing,
    alloc: Vec<f64>,
    rev: f64,
}

/// Solves the ex ante LP restricted to the given per-buyer candidates.
/// Zero-revenue columns are dropped: their mass can always move to the
/// all-∞ pricing.
pub fn solve_exante(
    buyers: &[BuyerDistribution],
    candidates: &[Vec<ItemPricing>],
    config: &ExAnteConfig,
) -> Result<ExAnteSolution> {
    if buyers.len() != candidates.len() {
        return Err(Error::DimensionMismatch {
            expected: buyers.len(),
            found: candidates.len(),
        });
    }
    if buyers.is_empty() {
        return Err(Error::InvalidArgument("no buyers".into()));
    }
    let m = buyers[0].m();
    for (d, c) in buyers.iter().zip(candidates) {
        if d.m() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: d.m(),
            });
        }
        if let Some(p) = c.iter().find(|p| p.m() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: p.m(),
            });
        }
    }
    let raw: usize = candidates.iter().map(|c| c.len()).sum();
    if raw > config.candidate_budget {
        return Err(Error::TooLarge {
            what: "candidate pricings",
            size: raw,
            limit: config.candidate_budget,
        });
    }

    let mut columns: Vec<Column> = Vec::new();
    for (i, (d, cands)) in buyers.iter().zip(candidates).enumerate() {
        let mut uniq: Vec<&ItemPricing> = Vec::new();
        for p in cands {
            if !uniq.contains(&p) {
                uniq.push(p);
            }
        }
        let evaluated: Vec<Result<(Vec<f64>, f64)>> =
            uniq.par_iter().map(|p| alloc_and_rev(d, p)).collect();
        for (p, r) in uniq.into_iter().zip(evaluated) {
            let (alloc, rev) = r?;
            if rev > 0.0 {
                columns.push(Column {
                    buyer: i,
                    pricing: p.clone(),
                    alloc,
                    rev,
                });
            }
        }
    }
    if columns.len() > config.max_columns {
        return Err(Error::TooLarge {
            what: "LP columns",
            size: columns.len(),
            limit: config.max_columns,
        });
    }

    let n = buyers.len();
    let mut rows = vec![vec![0.0; columns.len()]; n + m];
    for (c, col) in columns.iter().enumerate() {
        rows[col.buyer][c] = 1.0;
        for j in 0..m {
            rows[n + j][c] = col.alloc[j];
        }
    }
    let lp = LinearProgram::packing(
        columns.iter().map(|c| c.rev).collect(),
        rows,
        vec![1.0; n + m],
    );
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::LpStatus("not optimal in ex ante relaxation"));
    }

    let mut x = vec![vec![0.0; m]; n];
    let mut support: Vec<Vec<PricingAtom>> = vec![Vec::new(); n];
    let mut mass = vec![0.0; n];
    let mut value = 0.0;
    for (col, &lam) in columns.iter().zip(&sol.x) {
        if lam <= 1e-12 {
            continue;
        }
        mass[col.buyer] += lam;
        value += lam * col.rev;
        for j in 0..m {
            x[col.buyer][j] += lam * col.alloc[j];
        }
        support[col.buyer].push(PricingAtom {
            prob: lam,
            prices: col.pricing.clone(),
        });
    }
    let pricings = support
        .into_iter()
        .zip(&mass)
        .map(|(mut atoms, &total)| {
            if total > 1.0 {
                for a in atoms.iter_mut() {
                    a.prob /= total;
                }
            } else if total < 1.0 {
                atoms.push(PricingAtom {
                    prob: 1.0 - total,
                    prices: ItemPricing::all_infinite(m),
                });
            }
            RandomPricing { support: atoms }
        })
        .collect();
    Ok(ExAnteSolution { value, x, pricings })
}

/// Marginal grid for each buyer, solved.
pub fn solve_exante_on_grid(
    buyers: &[BuyerDistribution],
    extra_grid: &[f64],
    config: &ExAnteConfig,
) -> Result<ExAnteSolution> {
    let per_buyer = (config.max_columns / buyers.len().max(1)).min(config.candidate_budget);
    let cands = buyers
        .iter()
        .map(|d| candidate_prices(d, extra_grid, per_buyer))
        .collect::<Result<Vec<_>>>()?;
    solve_exante(buyers, &cands, config)
}

/// How LP columns are chosen for each buyer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnMode {
    /// The product grid when it fits, a thinned grid otherwise, plus any
    /// reference pricings. Beyond the enumeration limit only references and
    /// uniform pricings at the extra grid prices are used.
    Auto,
    /// The full product grid; too large is an error.
    Product,
    /// Only the reference pricings.
    Reference,
}

/// Per-buyer candidate pricings for `mode`.
pub fn build_candidates(
    buyers: &[BuyerDistribution],
    extra_grid: &[f64],
    references: Option<&[RandomPricing]>,
    mode: ColumnMode,
    config: &ExAnteConfig,
) -> Result<Vec<Vec<ItemPricing>>> {
    if let Some(r) = references {
        if r.len() != buyers.len() {
            return Err(Error::DimensionMismatch {
                expected: buyers.len(),
                found: r.len(),
            });
        }
    }
    let ref_atoms = |i: usize| -> Vec<ItemPricing> {
        references.map_or(Vec::new(), |r| r[i].iter().map(|(_, p)| p.clone()).collect())
    };
    let ref_total: usize = (0..buyers.len()).map(|i| ref_atoms(i).len()).sum();
    let per_buyer = (config.max_columns.saturating_sub(ref_total) / buyers.len().max(1))
        .min(config.candidate_budget);
    buyers
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut cands = match mode {
                ColumnMode::Reference => Vec::new(),
                ColumnMode::Product => candidate_prices(d, extra_grid, per_buyer)?,
                ColumnMode::Auto if d.m() > CANDIDATE_MAX_ITEMS => extra_grid
                    .iter()
                    .map(|&x| ItemPricing::new(vec![x; d.m()]))
                    .collect::<Result<_>>()?,
                ColumnMode::Auto => match candidate_prices(d, extra_grid, per_buyer) {
                    Err(Error::TooLarge { .. }) => {
                        thinned_candidate_prices(d, extra_grid, per_buyer)?
                    }
                    other => other?,
                },
            };
            cands.extend(ref_atoms(i));
            Ok(cands)
        })
        .collect()
}

/// [`build_candidates`] followed by [`solve_exante`].
pub fn solve_exante_with(
    buyers: &[BuyerDistribution],
    extra_grid: &[f64],
    references: Option<&[RandomPricing]>,
    mode: ColumnMode,
    config: &ExAnteConfig,
) -> Result<ExAnteSolution> {
    let cands = build_candidates(buyers, extra_grid, references, mode, config)?;
    solve_exante(buyers, &cands, config)
}

impl ExAnteSolution {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Checks feasibility and consistency against the buyers it was solved for.
    pub fn check_invariants(&self, buyers: &[BuyerDistribution]) -> Result<()> {
        let m = buyers.first().map_or(0, |d| d.m());
        for j in 0..m {
            let total: f64 = self.x.iter().map(|xi| xi[j]).sum();
            if total > 1.0 + INVARIANT_TOL {
                return Err(Error::InvalidArgument(format!(
                    "item {j} allocated {total} in expectation"
                )));
            }
        }
        let mut value = 0.0;
        for (i, d) in buyers.iter().enumerate() {
            self.pricings[i].validate()?;
            let a = expected_alloc(d, &self.pricings[i])?;
            for j in 0..m {
                if a[j] > self.x[i][j] + INVARIANT_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "buyer {i} item {j}: allocation {} exceeds x = {}",
                        a[j], self.x[i][j]
                    )));
                }
            }
            value += expected_rev(d, &self.pricings[i])?;
        }
        if (value - self.value).abs() > INVARIANT_TOL * (1.0 + value.abs()) {
            return Err(Error::InvalidArgument(format!(
                "value {} but pricings earn {value}",
                self.value
            )));
        }
        Ok(())
    }

    /// Every buyer's pricing mixed with the all-∞ pricing at weight 1/2.
    pub fn halved(&self) -> ExAnteSolution {
        ExAnteSolution {
            value: self.value / 2.0,
            x: self
                .x
                .iter()
                .map(|xi| xi.iter().map(|v| v / 2.0).collect())
                .collect(),
            pricings: self.pricings.iter().map(|p| p.thinned(0.5)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: Valuation) -> BuyerDistribution {
        BuyerDistribution::point(v)
    }

    #[test]
    fn additive_candidates() {
        let v = Valuation::additive(vec![2.0, 3.0]).unwrap();
        let c = item_candidates(std::slice::from_ref(&v), 2, &[]).unwrap();
        assert_eq!(c[0], vec![0.0, 2.0, f64::INFINITY]);
        assert_eq!(c[1], vec![0.0, 3.0, f64::INFINITY]);
        assert_eq!(candidate_prices(&one(v), &[], 100).unwrap().len(), 9);
    }

    #[test]
    fn unit_demand_candidates_share_value() {
        let v = Valuation::unit_demand(vec![5.0, 5.0]).unwrap();
        let c = item_candidates(&[v], 2, &[]).unwrap();
        assert!(c[0].contains(&5.0) && c[1].contains(&5.0));
    }

    #[test]
    fn budget_exceeded() {
        let v = Valuation::additive(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            candidate_prices(&one(v), &[], 26),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn single_buyer_single_item() {
        let d = one(Valuation::additive(vec![1.0]).unwrap());
        let s = solve_exante_on_grid(std::slice::from_ref(&d), &[], &ExAnteConfig::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!((s.x[0][0] - 1.0).abs() < 1e-12);
        assert_eq!(s.pricings[0].support[0].prices.get(0), 1.0);
        s.check_invariants(&[d]).unwrap();
    }

    #[test]
    fn two_buyers_split_one_item() {
        let d = one(Valuation::additive(vec![1.0]).unwrap());
        let buyers = vec![d.clone(), d];
        let s = solve_exante_on_grid(&buyers, &[], &ExAnteConfig::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        let total: f64 = s.x.iter().map(|x| x[0]).sum();
        assert!((total - 1.0).abs() < 1e-12);
        s.check_invariants(&buyers).unwrap();
    }

    #[test]
    fn halving() {
        let d = BuyerDistribution::new(vec![
            (0.5, Valuation::additive(vec![1.0, 2.0]).unwrap()),
            (0.5, Valuation::unit_demand(vec![3.0, 1.0]).unwrap()),
        ])
        .unwrap();
        let buyers = vec![d.clone(), d];
        let s = solve_exante_on_grid(&buyers, &[], &ExAnteConfig::default()).unwrap();
        let h = s.halved();
        h.check_invariants(&buyers).unwrap();
        assert!((h.value - s.value / 2.0).abs() < 1e-12);
    }

    #[test]
    fn thinning_respects_budget() {
        let d = one(Valuation::xos(3, vec![vec![1.0, 2.0, 3.0], vec![2.5, 0.5, 1.5]]).unwrap());
        let full = candidate_prices(&d, &[], usize::MAX).unwrap();
        let thin = thinned_candidate_prices(&d, &[], 30).unwrap();
        assert!(thin.len() <= 30 && thin.len() < full.len());
        assert!(thin.iter().all(|p| full.contains(p)));
    }

    #[test]
    fn nested_grids_never_lose_value() {
        let buyers = vec![
            BuyerDistribution::new(vec![
                (0.5, Valuation::additive(vec![1.0, 2.5]).unwrap()),
                (0.5, Valuation::unit_demand(vec![3.0, 1.5]).unwrap()),
            ])
            .unwrap(),
            one(Valuation::xos(2, vec![vec![2.0, 0.5], vec![0.7, 1.8]]).unwrap()),
        ];
        let grids: [&[f64]; 4] = [&[], &[1.0], &[1.0, 0.75, 2.25], &[1.0, 0.75, 2.25, 0.4, 1.3, 2.9]];
        let mut last = f64::NEG_INFINITY;
        for g in grids {
            let s = solve_exante_on_grid(&buyers, g, &ExAnteConfig::default()).unwrap();
            s.check_invariants(&buyers).unwrap();
            assert!(s.value >= last - 1e-9, "{} after {last}", s.value);
            last = s.value;
        }
    }
}
