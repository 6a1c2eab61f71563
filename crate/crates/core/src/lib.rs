//! Sequential item pricing against the ex ante relaxation: valuations and
//! demand, the ex ante LP, revenue recovery schemes, contention resolution
//! via a greedy hull sampler, sequential mechanisms and lower-bound instances.

pub mod classes;
pub mod demand;
pub mod distribution;
pub mod error;
pub mod exante;
pub mod experiments;
pub mod hull;
pub mod instance;
pub mod instances;
pub mod items;
pub mod lp;
pub mod mechanisms;
pub mod ocrs;
pub mod pricing;
pub mod rrs;
pub mod suites;
pub mod valuation;

pub use classes::{check_class, ClassReport, ClassWitness};
pub use demand::{demand, demand_exhaustive, expected_alloc, expected_rev, DemandResult};
pub use distribution::{BuyerDistribution, SetDistribution};
pub use error::{Error, Result};
pub use exante::{
    solve_exante, solve_exante_on_grid, solve_exante_with, ColumnMode, ExAnteConfig, ExAnteSolution,
};
pub use instance::{Generated, Instance};
pub use items::ItemSet;
pub use pricing::{ItemPricing, RandomPricing};
pub use valuation::{Valuation, ValuationClass};
