use serde::{Deserialize, Serialize};

use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::pricing::RandomPricing;

/// Items and buyers in arrival order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instance {
    pub m: usize,
    pub buyers: Vec<BuyerDistribution>,
}

impl Instance {
    pub fn new(m: usize, buyers: Vec<BuyerDistribution>) -> Result<Self> {
        let inst = Instance { m, buyers };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.buyers.len()
    }

    pub fn validate(&self) -> Result<()> {
        for d in &self.buyers {
            d.validate()?;
            if d.m() != self.m {
                return Err(Error::DimensionMismatch {
                    expected: self.m,
                    found: d.m(),
                });
            }
        }
        Ok(())
    }
}

/// A generated instance with per-buyer reference pricings.
#[derive(Clone, Debug)]
pub struct Generated {
    pub instance: Instance,
    pub reference: Vec<RandomPricing>,
}
