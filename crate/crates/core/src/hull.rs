//! Greedy sampler that mixes oracle vectors `y^T` into a vector dominated by
//! a target `w` while keeping at least a `1 - 1/e` share of its mass.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::items::ItemSet;

/// Relative threshold below which a residual coordinate counts as zero.
pub const ZERO_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct HullStep {
    pub set: ItemSet,
    pub lambda: f64,
    pub tau: f64,
}

#[derive(Clone, Debug)]
pub struct HullOutput {
    /// Sets with positive weight in query order; the empty set is not listed.
    pub steps: Vec<HullStep>,
    /// Weight left on the empty set.
    pub lambda_empty: f64,
    /// `Σ λ_T y^T`.
    pub combined: Vec<f64>,
    /// What was left of `w` when the loop stopped.
    pub residual: Vec<f64>,
    /// Residual after each step, starting with `w`.
    pub trace: Vec<Vec<f64>>,
}

impl HullOutput {
    /// `(T, λ_T)` pairs including the empty set when it has weight.
    pub fn distribution(&self) -> Vec<(ItemSet, f64)> {
        let mut out: Vec<_> = self.steps.iter().map(|s| (s.set, s.lambda)).collect();
        if self.lambda_empty > 0.0 {
            out.push((ItemSet::empty(), self.lambda_empty));
        }
        out
    }

    pub fn queried(&self) -> impl Iterator<Item = &ItemSet> {
        self.steps.iter().map(|s| &s.set)
    }
}

fn check_oracle(set: &ItemSet, y: &[f64], w: &[f64], tol: f64) -> Result<()> {
    if y.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: y.len(),
        });
    }
    if let Some(j) = y.iter().position(|x| x.is_nan() || *x < 0.0) {
        return Err(Error::HullAssumption {
            set: *set,
            detail: format!("y[{j}] = {}", y[j]),
        });
    }
    if let Some(j) = (0..y.len()).find(|&j| !set.contains(j) && y[j] != 0.0) {
        return Err(Error::HullAssumption {
            set: *set,
            detail: format!("y[{j}] = {} outside the set", y[j]),
        });
    }
    let mass: f64 = y.iter().sum();
    let need: f64 = set.iter().map(|j| w[j]).sum();
    if mass < need - tol {
        return Err(Error::HullAssumption {
            set: *set,
            detail: format!("|y| = {mass} below w(T) = {need}"),
        });
    }
    Ok(())
}

/// Runs the greedy on `w` (nonnegative, length `k ≤ 256`), calling `oracle`
/// on the current support `Q` of the residual each round.
///
/// Every oracle answer must vanish outside `Q` and carry at least `w(Q)`
/// in total; a violation is an error naming `Q`.
pub fn convex_hull_sampler<F>(w: &[f64], mut oracle: F) -> Result<HullOutput>
where
    F: FnMut(&ItemSet) -> Result<Vec<f64>>,
{
    if let Some(j) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidArgument(format!("w[{j}] = {}", w[j])));
    }
    if w.len() > crate::items::MAX_ITEMS {
        return Err(Error::TooLarge {
            what: "hull dimension",
            size: w.len(),
            limit: crate::items::MAX_ITEMS,
        });
    }
    let total: f64 = w.iter().sum();
    let zero = ZERO_REL * total;
    let tol = 1e-9 * total.max(1.0);
    let support = |r: &[f64]| ItemSet::from_items((0..r.len()).filter(|&j| r[j] > zero));

    let mut residual = w.to_vec();
    let mut combined = vec![0.0; w.len()];
    let mut trace = vec![residual.clone()];
    let mut steps = Vec::new();
    let mut sigma = 0.0;
    let mut q = support(&residual);
    while !q.is_empty() && sigma < 1.0 {
        let y = oracle(&q)?;
        check_oracle(&q, &y, w, tol)?;
        let (argmin, tau) = q
            .iter()
            .filter(|&j| y[j] > 0.0)
            .map(|j| (j, residual[j] / y[j]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::HullAssumption {
                set: q,
                detail: "oracle vector vanishes on the residual support".into(),
            })?;
        let lambda = tau.min(1.0 - sigma);
        sigma += lambda;
        for j in q.iter() {
            residual[j] = (residual[j] - lambda * y[j]).max(0.0);
            combined[j] += lambda * y[j];
        }
        if lambda == tau {
            residual[argmin] = 0.0;
        }
        steps.push(HullStep { set: q, lambda, tau });
        trace.push(residual.clone());
        q = support(&residual);
    }
    Ok(HullOutput {
        steps,
        lambda_empty: (1.0 - sigma).max(0.0),
        combined,
        residual,
        trace,
    })
}

/// Wraps an oracle so repeated sets are answered from memory.
pub struct Memo<F> {
    inner: F,
    cache: HashMap<ItemSet, Vec<f64>>,
    pub calls: usize,
}

impl<F: FnMut(&ItemSet) -> Result<Vec<f64>>> Memo<F> {
    pub fn new(inner: F) -> Self {
        Memo {
            inner,
            cache: HashMap::new(),
            calls: 0,
        }
    }

    pub fn get(&mut self, set: &ItemSet) -> Result<Vec<f64>> {
        if let Some(y) = self.cache.get(set) {
            return Ok(y.clone());
        }
        self.calls += 1;
        let y = (self.inner)(set)?;
        self.cache.insert(*set, y.clone());
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(entries: Vec<(ItemSet, Vec<f64>)>) -> impl FnMut(&ItemSet) -> Result<Vec<f64>> {
        move |t: &ItemSet| {
            Ok(entries
                .iter()
                .find(|(s, _)| s == t)
                .map(|(_, y)| y.clone())
                .unwrap_or_else(|| panic!("unexpected query {t:?}")))
        }
    }

    #[test]
    fn one_dimension() {
        let out = convex_hull_sampler(&[1.0], table(vec![(ItemSet::singleton(0), vec![1.0])])).unwrap();
        assert_eq!(out.distribution(), vec![(ItemSet::singleton(0), 1.0)]);
        assert_eq!(out.combined, vec![1.0]);
    }

    #[test]
    fn zero_target() {
        let out = convex_hull_sampler(&[0.0, 0.0], |_: &ItemSet| unreachable!()).unwrap();
        assert_eq!(out.distribution(), vec![(ItemSet::empty(), 1.0)]);
        assert_eq!(out.combined, vec![0.0, 0.0]);
    }

    #[test]
    fn two_step_trace() {
        let both = ItemSet::from_items([0, 1]);
        let second = ItemSet::singleton(1);
        let out = convex_hull_sampler(
            &[1.0, 1.0],
            table(vec![(both, vec![2.0, 0.0]), (second, vec![0.0, 1.0])]),
        )
        .unwrap();
        assert_eq!(out.distribution(), vec![(both, 0.5), (second, 0.5)]);
        assert_eq!(out.steps[0].tau, 0.5);
        assert_eq!(out.steps[1].tau, 1.0);
        assert_eq!(out.combined, vec![1.0, 0.5]);
        assert!(1.5 >= (1.0 - (-1f64).exp()) * 2.0);
    }

    #[test]
    fn rejects_mass_outside_set() {
        let err = convex_hull_sampler(&[1.0, 0.0], |_: &ItemSet| Ok(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::HullAssumption { .. }));
    }

    #[test]
    fn rejects_small_mass() {
        let err = convex_hull_sampler(&[1.0, 1.0], |_: &ItemSet| Ok(vec![0.5, 0.5])).unwrap_err();
        assert!(matches!(err, Error::HullAssumption { .. }));
    }

    #[test]
    fn memo_counts_fresh_calls() {
        let mut memo = Memo::new(|t: &ItemSet| Ok(vec![t.len() as f64]));
        memo.get(&ItemSet::singleton(0)).unwrap();
        memo.get(&ItemSet::singleton(0)).unwrap();
        assert_eq!(memo.calls, 1);
    }

    /// Oracle that moves `w(T)·scale` of mass onto `T` with random proportions.
    fn random_oracle(weights: Vec<f64>, scale: f64, w: Vec<f64>) -> impl FnMut(&ItemSet) -> Result<Vec<f64>> {
        move |t: &ItemSet| {
            let need: f64 = t.iter().map(|j| w[j]).sum();
            let norm: f64 = t.iter().map(|j| weights[j]).sum();
            let mut y = vec![0.0; w.len()];
            for j in t.iter() {
                y[j] = need * scale * weights[j] / norm;
            }
            Ok(y)
        }
    }

    proptest! {
        #[test]
        fn sampler_properties(
            w in prop::collection::vec(0.0f64..1.0, 1..8),
            weights in prop::collection::vec(0.05f64..1.0, 8),
            scale in 1.0f64..3.0,
        ) {
            let k = w.len();
            let out = convex_hull_sampler(&w, random_oracle(weights[..k].to_vec(), scale, w.clone())).unwrap();
            let lam: f64 = out.distribution().iter().map(|(_, l)| l).sum();
            prop_assert!((lam - 1.0).abs() < 1e-12);
            prop_assert!(out.steps.len() <= k);
            for j in 0..k {
                prop_assert!(out.combined[j] <= w[j] + 1e-9);
            }
            let mass: f64 = out.combined.iter().sum();
            let total: f64 = w.iter().sum();
            prop_assert!(mass >= (1.0 - (-1f64).exp()) * total - 1e-9);
            for pair in out.trace.windows(2) {
                for j in 0..k {
                    prop_assert!(pair[1][j] <= pair[0][j]);
                }
            }
        }
    }
}
