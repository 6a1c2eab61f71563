//! Lower-bound instance generators and random test families.

pub mod monotone_lb;
pub mod random;
pub mod rrs_lb;
pub mod xos_lb;

pub use monotone_lb::{gen_monotone_lb, good_collection, GoodCollection};
pub use random::{gen_random_gs, gen_random_subadditive, RandomFamily};
pub use rrs_lb::{gen_rrs_lb, RrsLbInstance, RrsLbParams};
pub use xos_lb::{gen_xos_lb, XosLbConfig, XosLbParams};
