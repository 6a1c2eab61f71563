//! Finite-support buyer distributions and distributions over item sets.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::pricing::{sample_weighted, PROB_TOL};
use crate::valuation::Valuation;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuyerDistribution {
    pub support: Vec<ValuationAtom>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuationAtom {
    pub prob: f64,
    pub valuation: Valuation,
}

impl BuyerDistribution {
    pub fn new(support: Vec<(f64, Valuation)>) -> Result<Self> {
        let d = BuyerDistribution {
            support: support
                .into_iter()
                .map(|(prob, valuation)| ValuationAtom { prob, valuation })
                .collect(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn point(v: Valuation) -> Self {
        BuyerDistribution {
            support: vec![ValuationAtom {
                prob: 1.0,
                valuation: v,
            }],
        }
    }

    /// Uniform over `vals`.
    pub fn uniform(vals: Vec<Valuation>) -> Result<Self> {
        let w = 1.0 / vals.len() as f64;
        Self::new(vals.into_iter().map(|v| (w, v)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::InvalidDistribution("empty valuation support".into()));
        }
        let m = self.m();
        let mut total = 0.0;
        for a in &self.support {
            if a.valuation.m() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: a.valuation.m(),
                });
            }
            if !(a.prob >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {}",
                    a.prob
                )));
            }
            a.valuation.validate()?;
            total += a.prob;
        }
        if (total - 1.0).abs() > PROB_TOL * self.support.len() as f64 {
            return Err(Error::InvalidDistribution(format!(
                "valuation probabilities sum to {total}"
            )));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.support[0].valuation.m()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Valuation)> {
        self.support.iter().map(|a| (a.prob, &a.valuation))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Valuation {
        &self.support[sample_weighted(self.support.iter().map(|a| a.prob), rng)].valuation
    }

    /// `D|S`: every support valuation restricted to `set`.
    pub fn restrict(&self, set: &ItemSet) -> Self {
        BuyerDistribution {
            support: self
                .support
                .iter()
                .map(|a| ValuationAtom {
                    prob: a.prob,
                    valuation: a.valuation.restrict(set),
                })
                .collect(),
        }
    }
}

/// Finite distribution over available item sets.
#[derive(Clone, Debug, PartialEq)]
pub struct SetDistribution {
    pub support: Vec<(f64, ItemSet)>,
}

impl SetDistribution {
    pub fn point(set: ItemSet) -> Self {
        SetDistribution {
            support: vec![(1.0, set)],
        }
    }

    /// Independent inclusion of each item `j < probs.len()` with `probs[j]`.
    pub fn bernoulli(probs: &[f64]) -> Result<Self> {
        let m = probs.len();
        if m > 16 {
            return Err(Error::TooLarge {
                what: "product distribution item count",
                size: m,
                limit: 16,
            });
        }
        let support = (0..1u64 << m)
            .map(|mask| {
                let w: f64 = (0..m)
                    .map(|j| if mask >> j & 1 == 1 { probs[j] } else { 1.0 - probs[j] })
                    .product();
                (w, ItemSet::from_mask(mask))
            })
            .filter(|(w, _)| *w > 0.0)
            .collect();
        Ok(SetDistribution { support })
    }

    /// Builds from weighted sets, merging duplicates and dropping zeros.
    pub fn from_weighted(items: impl IntoIterator<Item = (f64, ItemSet)>) -> Self {
        let mut acc: HashMap<ItemSet, f64> = HashMap::new();
        for (w, s) in items {
            if w > 0.0 {
                *acc.entry(s).or_insert(0.0) += w;
            }
        }
        let mut support: Vec<(f64, ItemSet)> = acc.into_iter().map(|(s, w)| (w, s)).collect();
        support.sort_by_key(|a| a.1);
        SetDistribution { support }
    }

    /// `Pr[j ∈ S]` for each item.
    pub fn marginals(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (w, s) in &self.support {
            for j in s.iter() {
                if j < m {
                    out[j] += w;
                }
            }
        }
        out
    }
}
