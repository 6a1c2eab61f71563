use rayon::prelude::*;

use super::{trial_rng, Mechanism};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct McReport {
    pub trials: usize,
    pub mean: f64,
    /// Sample standard error of the mean.
    pub stderr: f64,
    pub buyer_mean: Vec<f64>,
    pub buyer_stderr: Vec<f64>,
    /// `availability[i][j]`: fraction of trials with item `j` unsold when
    /// buyer `i` arrives.
    pub availability: Vec<Vec<f64>>,
    pub max_revenue: f64,
    /// Fraction of buyer arrivals offered nothing.
    pub skip_rate: f64,
    pub hull_violations: usize,
    /// Per-trial revenues, when requested.
    pub revenues: Option<Vec<f64>>,
}

struct TrialSummary {
    payments: Vec<f64>,
    available: Vec<crate::items::ItemSet>,
    revenue: f64,
    skips: usize,
    hull_violations: usize,
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs `trials` independent trials in parallel and validates every
/// transcript. Results depend only on `(mechanism, trials, seed)`.
pub fn monte_carlo(
    mech: &dyn Mechanism,
    trials: usize,
    seed: u64,
    keep_revenues: bool,
) -> Result<McReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let (m, n) = (mech.m(), mech.n());
    let summaries: Vec<TrialSummary> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let tr = mech.run(&mut trial_rng(seed, t))?;
            tr.validate(m)?;
            if tr.steps.len() != n {
                return Err(Error::Transcript(format!(
                    "{} steps for {n} buyers",
                    tr.steps.len()
                )));
            }
            Ok(TrialSummary {
                payments: tr.steps.iter().map(|s| s.payment).collect(),
                available: tr.steps.iter().map(|s| s.available).collect(),
                revenue: tr.revenue,
                skips: tr.skips,
                hull_violations: tr.hull_violations,
            })
        })
        .collect::<Result<_>>()?;

    let (mean, stderr) = mean_and_stderr(summaries.iter().map(|s| s.revenue), trials);
    let (buyer_mean, buyer_stderr) = (0..n)
        .map(|i| mean_and_stderr(summaries.iter().map(|s| s.payments[i]), trials))
        .unzip();
    let mut availability = vec![vec![0.0; m]; n];
    for s in &summaries {
        for (i, set) in s.available.iter().enumerate() {
            for j in set.iter() {
                availability[i][j] += 1.0;
            }
        }
    }
    for row in &mut availability {
        for a in row.iter_mut() {
            *a /= trials as f64;
        }
    }
    Ok(McReport {
        trials,
        mean,
        stderr,
        buyer_mean,
        buyer_stderr,
        availability,
        max_revenue: summaries.iter().map(|s| s.revenue).fold(0.0, f64::max),
        skip_rate: summaries.iter().map(|s| s.skips).sum::<usize>() as f64
            / (trials * n.max(1)) as f64,
        hull_violations: summaries.iter().map(|s| s.hull_violations).sum(),
        revenues: keep_revenues.then(|| summaries.iter().map(|s| s.revenue).collect()),
    })
}
