//! Valuation families over a fixed item count `m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{RrsLbParams, XosLbParams};
use crate::items::{ItemSet, MAX_ITEMS};

/// Largest item count for which explicit tables are accepted.
pub const TABLE_MAX_ITEMS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuationClass {
    Monotone,
    Subadditive,
    XosCertified,
    GrossSubstitutes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Valuation {
    Additive {
        values: Vec<f64>,
    },
    UnitDemand {
        values: Vec<f64>,
    },
    /// Maximum over additive clauses.
    Xos {
        m: usize,
        clauses: Vec<Vec<f64>>,
    },
    /// `values[mask]` is the value of the set whose characteristic bits form `mask`.
    Table {
        m: usize,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<ValuationClass>,
    },
    XosLb(XosLbParams),
    /// Value 1 iff the set contains one of the bundles.
    BundleThreshold {
        m: usize,
        bundles: Vec<ItemSet>,
    },
    RrsLb(RrsLbParams),
    /// `v(T ∩ support)`.
    Restricted {
        inner: Box<Valuation>,
        support: ItemSet,
    },
}

fn check_entries(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(j) => Err(Error::InvalidValuation(format!(
            "{what} entry {j} is {}",
            values[j]
        ))),
        None => Ok(()),
    }
}

impl Valuation {
    pub fn additive(values: Vec<f64>) -> Result<Self> {
        let v = Valuation::Additive { values };
        v.validate()?;
        Ok(v)
    }

    pub fn unit_demand(values: Vec<f64>) -> Result<Self> {
        let v = Valuation::UnitDemand { values };
        v.validate()?;
        Ok(v)
    }

    pub fn xos(m: usize, clauses: Vec<Vec<f64>>) -> Result<Self> {
        let v = Valuation::Xos { m, clauses };
        v.validate()?;
        Ok(v)
    }

    /// Explicit table; a declared class is checked exhaustively.
    pub fn table(m: usize, values: Vec<f64>, class: Option<ValuationClass>) -> Result<Self> {
        let v = Valuation::Table { m, values, class };
        v.validate()?;
        Ok(v)
    }

    /// Tabulates `f` over all subsets of `m` items.
    pub fn table_from_fn<F: FnMut(ItemSet) -> f64>(
        m: usize,
        mut f: F,
        class: Option<ValuationClass>,
    ) -> Result<Self> {
        if m > TABLE_MAX_ITEMS {
            return Err(Error::TooLarge {
                what: "table item count",
                size: m,
                limit: TABLE_MAX_ITEMS,
            });
        }
        let values = (0..1u64 << m).map(|mask| f(ItemSet::from_mask(mask))).collect();
        Self::table(m, values, class)
    }

    pub fn bundle_threshold(m: usize, bundles: Vec<ItemSet>) -> Result<Self> {
        let v = Valuation::BundleThreshold { m, bundles };
        v.validate()?;
        Ok(v)
    }

    pub fn zero(m: usize) -> Self {
        Valuation::Additive {
            values: vec![0.0; m],
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Valuation::Additive { values } | Valuation::UnitDemand { values } => values.len(),
            Valuation::Xos { m, .. }
            | Valuation::Table { m, .. }
            | Valuation::BundleThreshold { m, .. } => *m,
            Valuation::XosLb(p) => p.m,
            Valuation::RrsLb(p) => p.m,
            Valuation::Restricted { inner, .. } => inner.m(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m() > MAX_ITEMS {
            return Err(Error::TooLarge {
                what: "item count",
                size: self.m(),
                limit: MAX_ITEMS,
            });
        }
        match self {
            Valuation::Additive { values } => check_entries(values, "additive"),
            Valuation::UnitDemand { values } => check_entries(values, "unit-demand"),
            Valuation::Xos { m, clauses } => {
                for c in clauses {
                    if c.len() != *m {
                        return Err(Error::DimensionMismatch {
                            expected: *m,
                            found: c.len(),
                        });
                    }
                    check_entries(c, "xos clause")?;
                }
                Ok(())
            }
            Valuation::Table { m, values, class } => {
                if *m > TABLE_MAX_ITEMS {
                    return Err(Error::TooLarge {
                        what: "table item count",
                        size: *m,
                        limit: TABLE_MAX_ITEMS,
                    });
                }
                if values.len() != 1 << m {
                    return Err(Error::DimensionMismatch {
                        expected: 1 << m,
                        found: values.len(),
                    });
                }
                check_entries(values, "table")?;
                if values[0] != 0.0 {
                    return Err(Error::InvalidValuation("table value of ∅ must be 0".into()));
                }
                if let Some(c) = class {
                    let report = crate::classes::check_class(self, *c)?;
                    if !report.holds {
                        return Err(Error::InvalidValuation(format!(
                            "table declared {c:?} but fails: {:?}",
                            report.witness
                        )));
                    }
                }
                Ok(())
            }
            Valuation::BundleThreshold { m, bundles } => {
                for b in bundles {
                    if b.is_empty() || b.bound() > *m {
                        return Err(Error::InvalidValuation(format!(
                            "bundle {b:?} is empty or out of range"
                        )));
                    }
                }
                Ok(())
            }
            Valuation::XosLb(p) => p.validate(),
            Valuation::RrsLb(p) => p.validate(),
            Valuation::Restricted { inner, support } => {
                if support.bound() > inner.m() {
                    return Err(Error::InvalidValuation("restriction out of range".into()));
                }
                inner.validate()
            }
        }
    }

    pub fn value(&self, set: &ItemSet) -> f64 {
        match self {
            Valuation::Additive { values } => set.iter().map(|j| values[j]).sum(),
            Valuation::UnitDemand { values } => {
                set.iter().map(|j| values[j]).fold(0.0, f64::max)
            }
            Valuation::Xos { clauses, .. } => clauses
                .iter()
                .map(|c| set.iter().map(|j| c[j]).sum::<f64>())
                .fold(0.0, f64::max),
            Valuation::Table { values, .. } => values[set.mask() as usize],
            Valuation::XosLb(p) => p.value(set),
            Valuation::BundleThreshold { bundles, .. } => {
                if bundles.iter().any(|b| b.is_subset(set)) {
                    1.0
                } else {
                    0.0
                }
            }
            Valuation::RrsLb(p) => p.value(set),
            Valuation::Restricted { inner, support } => inner.value(&set.intersection(support)),
        }
    }

    /// `v|S(T) = v(T ∩ S)`.
    pub fn restrict(&self, set: &ItemSet) -> Valuation {
        let full = ItemSet::full(self.m());
        if full.is_subset(set) {
            return self.clone();
        }
        match self {
            Valuation::Restricted { inner, support } => Valuation::Restricted {
                inner: inner.clone(),
                support: support.intersection(set),
            },
            _ => Valuation::Restricted {
                inner: Box::new(self.clone()),
                support: set.intersection(&full),
            },
        }
    }

    /// Classes that hold by construction, without any check.
    pub fn structural_classes(&self) -> &'static [ValuationClass] {
        use ValuationClass::*;
        match self {
            Valuation::Additive { .. } | Valuation::UnitDemand { .. } => {
                &[Monotone, Subadditive, XosCertified, GrossSubstitutes]
            }
            Valuation::Xos { .. } | Valuation::XosLb(_) | Valuation::RrsLb(_) => {
                &[Monotone, Subadditive, XosCertified]
            }
            Valuation::BundleThreshold { .. } => &[Monotone],
            Valuation::Table { .. } => &[],
            Valuation::Restricted { inner, .. } => inner.structural_classes(),
        }
    }
}
