//! Revenue recovery: given a pricing `p` and an available set `S`, find a
//! pricing `q` on `S` that keeps prices within a factor `α` of `p` and
//! recovers a `1/α` share of `p`'s revenue mass on `S`.

use crate::demand::{alloc_and_rev, demand, TOL};
use crate::distribution::BuyerDistribution;
use crate::error::{Error, Result};
use crate::items::ItemSet;
use crate::pricing::ItemPricing;
use crate::valuation::Valuation;

/// Range `[low, high]` of the random scaling factor, with `low = 1/2` and
/// `high = m·Γ′`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingWindow {
    pub low: f64,
    pub high: f64,
    /// Max over min of the positive prices on `S`; 1 if there are none.
    pub aspect: f64,
}

impl ScalingWindow {
    pub fn log_width(&self) -> f64 {
        (self.high / self.low).ln()
    }

    /// Scaling factor for a uniform `u ∈ [0, 1]`; the density is `1/(γ ln(h/ℓ))`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.low * (self.high / self.low).powf(u)
    }
}

/// Items of `S` that `p` actually offers. Items priced at infinity are
/// never sold under `p` and carry no revenue mass.
pub fn effective_set(set: &ItemSet, p: &ItemPricing) -> ItemSet {
    set.intersection(&p.offered())
}

pub fn scaling_window(m: usize, set: &ItemSet, p: &ItemPricing) -> Result<ScalingWindow> {
    if p.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: p.m(),
        });
    }
    let positive: Vec<f64> = effective_set(set, p)
        .iter()
        .map(|j| p.get(j))
        .filter(|&x| x > 0.0)
        .collect();
    let aspect = if positive.is_empty() {
        1.0
    } else {
        let hi = positive.iter().copied().fold(0.0, f64::max);
        let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    };
    Ok(ScalingWindow {
        low: 0.5,
        high: m.max(1) as f64 * aspect,
        aspect,
    })
}

/// `α = 4·log₂(2mΓ′)`, the guarantee of the power-of-two scaling.
pub fn subadd_alpha(m: usize, set: &ItemSet, p: &ItemPricing) -> Result<f64> {
    let w = scaling_window(m, set, p)?;
    Ok(4.0 * (2.0 * m.max(1) as f64 * w.aspect).log2())
}

/// `Σ_{j∈S} p_j·Alloc_j(D, p)`.
pub fn revenue_mass(d: &BuyerDistribution, set: &ItemSet, p: &ItemPricing) -> Result<f64> {
    let (alloc, _) = alloc_and_rev(d, p)?;
    Ok(effective_set(set, p).iter().map(|j| p.get(j) * alloc[j]).sum())
}

/// `Rev(D|S, q)`.
pub fn restricted_revenue(d: &BuyerDistribution, set: &ItemSet, q: &ItemPricing) -> Result<f64> {
    Ok(alloc_and_rev(d, &q.masked(set))?.1)
}

/// Integral of `γ·p(T(γ))·f(γ)` over `[a, b]` for one valuation, where `T(γ)`
/// is the demand at `γp` and `f` the scaling density, up to the factor
/// `1/ln(h/ℓ)`. Demand sets along the upper envelope change only where two
/// utility lines cross, so each split is at a line intersection.
fn envelope_integral(
    v: &Valuation,
    base: &ItemPricing,
    a: f64,
    ta: ItemSet,
    b: f64,
    tb: ItemSet,
    min_width: f64,
) -> Result<f64> {
    if ta == tb {
        return Ok(base.price_of(&ta) * (b - a));
    }
    let (va, pa) = (v.value(&ta), base.price_of(&ta));
    let (vb, pb) = (v.value(&tb), base.price_of(&tb));
    if b - a <= min_width {
        let mid = 0.5 * (a + b);
        return Ok(pa * (mid - a) + pb * (b - mid));
    }
    let cross = if (pa - pb).abs() > TOL {
        (va - vb) / (pa - pb)
    } else {
        f64::NAN
    };
    let split = if cross > a && cross < b {
        cross
    } else {
        0.5 * (a + b)
    };
    let ts = demand(v, &base.scaled(split))?.set;
    if split == cross && (ts == ta || ts == tb) {
        return Ok(pa * (split - a) + pb * (b - split));
    }
    Ok(envelope_integral(v, base, a, ta, split, ts, min_width)?
        + envelope_integral(v, base, split, ts, b, tb, min_width)?)
}

fn check_prices(set: &ItemSet, p: &ItemPricing) -> Result<()> {
    match set.iter().find(|&j| p.get(j).is_nan() || p.get(j) < 0.0) {
        Some(j) => Err(Error::InvalidArgument(format!(
            "price of item {j} is {}",
            p.get(j)
        ))),
        None => Ok(()),
    }
}

/// `E_γ[Rev(D|S, γp)]` for `γ` with density `1/(γ ln(h/ℓ))` on `[ℓ, h]`,
/// computed exactly by following each valuation's demand envelope.
pub fn subadd_rrs_expected_rev(d: &BuyerDistribution, set: &ItemSet, p: &ItemPricing) -> Result<f64> {
    check_prices(set, p)?;
    let m = d.m();
    let w = scaling_window(m, set, p)?;
    let s = effective_set(set, p);
    if s.is_empty() {
        return Ok(0.0);
    }
    let base = p.masked(&s);
    let min_width = 1e-9 * w.high;
    let mut total = 0.0;
    for (prob, v) in d.iter() {
        if prob == 0.0 {
            continue;
        }
        let ta = demand(v, &base.scaled(w.low))?.set;
        let tb = demand(v, &base.scaled(w.high))?.set;
        total += prob * envelope_integral(v, &base, w.low, ta, w.high, tb, min_width)?;
    }
    Ok(total / w.log_width())
}

/// Best power-of-two scaling in `[1/2, mΓ′]`; ties go to the smaller factor.
pub fn subadd_rrs_scale(d: &BuyerDistribution, set: &ItemSet, p: &ItemPricing) -> Result<f64> {
    check_prices(set, p)?;
    let w = scaling_window(d.m(), set, p)?;
    let s = effective_set(set, p);
    let base = p.masked(&s);
    let mut best = (w.low, f64::NEG_INFINITY);
    let mut gamma = w.low;
    while gamma <= w.high * (1.0 + 1e-12) {
        let rev = alloc_and_rev(d, &base.scaled(gamma))?.1;
        if rev > best.1 + TOL {
            best = (gamma, rev);
        }
        gamma *= 2.0;
    }
    Ok(best.0)
}

/// Derandomized scaling scheme for subadditive buyers: `q = γ*·p`.
pub fn subadd_rrs(d: &BuyerDistribution, set: &ItemSet, p: &ItemPricing) -> Result<ItemPricing> {
    if set.is_empty() {
        return Ok(p.clone());
    }
    Ok(p.scaled(subadd_rrs_scale(d, set, p)?))
}

/// Gross substitutes buyers only gain demand for the remaining items when
/// others are withdrawn, so `q = p` already recovers everything.
pub fn gs_rrs(_d: &BuyerDistribution, _set: &ItemSet, p: &ItemPricing) -> ItemPricing {
    p.clone()
}

/// Which recovery scheme to run for a buyer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RrsScheme {
    GrossSubstitutes,
    /// `alpha` overrides `4·log₂(2mΓ′)`.
    Subadditive { alpha: Option<f64> },
}

impl RrsScheme {
    pub fn apply(&self, d: &BuyerDistribution, set: &ItemSet, p: &ItemPricing) -> Result<ItemPricing> {
        match self {
            RrsScheme::GrossSubstitutes => Ok(gs_rrs(d, set, p)),
            RrsScheme::Subadditive { .. } => subadd_rrs(d, set, p),
        }
    }

    /// Guarantee for every subset of `set`.
    pub fn alpha(&self, m: usize, set: &ItemSet, p: &ItemPricing) -> Result<f64> {
        match self {
            RrsScheme::GrossSubstitutes => Ok(1.0),
            RrsScheme::Subadditive { alpha: Some(a) } => Ok(*a),
            RrsScheme::Subadditive { alpha: None } => subadd_alpha(m, set, p),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RrsReport {
    /// First item of `S` with `q_j < p_j/α`, as `(j, q_j, p_j/α)`.
    pub price_witness: Option<(usize, f64, f64)>,
    /// `Rev(D|S, q)`.
    pub revenue: f64,
    /// `(1/α)·Σ_{j∈S} p_j·Alloc_j(D, p)`.
    pub target: f64,
}

impl RrsReport {
    pub fn prices_ok(&self) -> bool {
        self.price_witness.is_none()
    }

    pub fn revenue_ok(&self) -> bool {
        self.revenue >= self.target - 1e-9 * self.target.max(1.0)
    }

    pub fn holds(&self) -> bool {
        self.prices_ok() && self.revenue_ok()
    }
}

pub fn verify_rrs(
    d: &BuyerDistribution,
    set: &ItemSet,
    p: &ItemPricing,
    q: &ItemPricing,
    alpha: f64,
) -> Result<RrsReport> {
    if q.m() != p.m() {
        return Err(Error::DimensionMismatch {
            expected: p.m(),
            found: q.m(),
        });
    }
    let price_witness = set.iter().find_map(|j| {
        let floor = p.get(j) / alpha;
        let ok = if floor.is_infinite() {
            q.get(j).is_infinite()
        } else {
            q.get(j) >= floor - 1e-9
        };
        (!ok).then_some((j, q.get(j), floor))
    });
    Ok(RrsReport {
        price_witness,
        revenue: restricted_revenue(d, set, q)?,
        target: revenue_mass(d, set, p)? / alpha,
    })
}

/// Utility of `v|S` at `low·p` minus utility at `high·p`, next to half of
/// `v`'s revenue mass on `S` at `p`.
pub fn utility_drop(v: &Valuation, set: &ItemSet, p: &ItemPricing) -> Result<(f64, f64)> {
    let w = scaling_window(v.m(), set, p)?;
    let s = effective_set(set, p);
    let base = p.masked(&s);
    let drop = demand(v, &base.scaled(w.low))?.utility - demand(v, &base.scaled(w.high))?.utility;
    let bought = demand(v, p)?.set;
    let mass: f64 = bought.intersection(&s).iter().map(|j| p.get(j)).sum();
    Ok((drop, 0.5 * mass))
}
