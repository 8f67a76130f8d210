//! Statistical checks of sampled solutions: an a-posteriori confidence
//! bound on each chance constraint's risk, and the order-statistic lower
//! bound on the true optimum from repeated sampled solves.

mod stats;

pub use stats::{binomial_cdf, erfc, normal_cdf, normal_quantile};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centralized::solve_centralized_hard;
use crate::error::{BlendError, Result};
use crate::model::ProblemInstance;
use crate::sampling::{
    empirical_violation_rates, lot_efficiencies, sample_scenarios, sample_scenarios_tagged, ScenarioSet, StreamTag,
};

/// Smallest check sample accepted by [`posterior_feasibility`].
pub const MIN_CHECK_SAMPLE: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCertificate {
    pub sample_size: usize,
    pub rate_ash: f64,
    pub rate_thermal: f64,
    pub upper_ash: f64,
    pub upper_thermal: f64,
    pub delta: f64,
    pub feasible: bool,
}

/// One-sided upper confidence limit p̂ + z_{1-δ} sqrt(p̂(1-p̂)/N′).
pub fn upper_confidence_limit(rate: f64, sample_size: usize, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(BlendError::Domain(format!("violation rate {rate} outside [0, 1]")));
    }
    if sample_size == 0 {
        return Err(BlendError::Argument("check sample must be nonempty".into()));
    }
    let z = normal_quantile(1.0 - delta)?;
    Ok(rate + z * (rate * (1.0 - rate) / sample_size as f64).sqrt())
}

/// Certificate of `quantities` against an explicit check sample.
pub fn certify_on(
    instance: &ProblemInstance,
    quantities: &[f64],
    check: &ScenarioSet,
    delta: f64,
) -> Result<FeasibilityCertificate> {
    let r = instance.refinery();
    let (p1, p2) = empirical_violation_rates(
        quantities,
        check,
        r.ash_limit,
        r.thermal_requirement,
        &lot_efficiencies(instance),
    )?;
    let u1 = upper_confidence_limit(p1, check.len(), delta)?;
    let u2 = upper_confidence_limit(p2, check.len(), delta)?;
    Ok(FeasibilityCertificate {
        sample_size: check.len(),
        rate_ash: p1,
        rate_thermal: p2,
        upper_ash: u1,
        upper_thermal: u2,
        delta,
        feasible: u1 <= r.risk_ash && u2 <= r.risk_thermal,
    })
}

/// Draws a fresh check sample of size `sample_size` on the validation
/// stream of `seed` and certifies each chance constraint separately.
pub fn posterior_feasibility(
    instance: &ProblemInstance,
    quantities: &[f64],
    sample_size: usize,
    delta: f64,
    seed: u64,
) -> Result<FeasibilityCertificate> {
    if sample_size < MIN_CHECK_SAMPLE {
        return Err(BlendError::Argument(format!(
            "check sample of {sample_size} is below the normal-approximation minimum {MIN_CHECK_SAMPLE}"
        )));
    }
    let check = sample_scenarios_tagged(instance, sample_size, seed, StreamTag::Validation)?;
    certify_on(instance, quantities, &check, delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundConfig {
    /// Scenarios per replication.
    pub samples: usize,
    pub replications: usize,
    pub inner_risk_ash: f64,
    pub risk_ash: f64,
    pub inner_risk_thermal: f64,
    pub risk_thermal: f64,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub replications: usize,
    pub samples: usize,
    /// Replication objectives, nondecreasing. Infeasible replications sort
    /// last as +inf.
    pub objectives: Vec<f64>,
    pub pi_ash: f64,
    pub pi_thermal: f64,
    /// 1-based order statistic used, if any qualifies.
    pub index: Option<usize>,
    pub bound: Option<f64>,
    pub delta: f64,
}

/// π = B(⌊N β̂⌋; β, N).
pub fn replication_coverage(samples: usize, inner_risk: f64, risk: f64) -> Result<f64> {
    let k = (samples as f64 * inner_risk).floor() as u64;
    binomial_cdf(k.min(samples as u64), risk, samples as u64)
}

/// Largest T in 1..=M with B(T-1; π, M) <= δ.
pub fn order_statistic_index(pi: f64, replications: usize, delta: f64) -> Result<Option<usize>> {
    let mut best = None;
    for t in 1..=replications {
        if binomial_cdf(t as u64 - 1, pi, replications as u64)? <= delta {
            best = Some(t);
        } else {
            break;
        }
    }
    Ok(best)
}

/// Seed of replication `r`, spread with a splitmix step.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    let mut z = seed.wrapping_add((r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Optimal value of the sampled problem with every scenario enforced, or
/// `None` when it is infeasible.
pub fn hard_objective(instance: &ProblemInstance, scenarios: &ScenarioSet) -> Result<Option<f64>> {
    Ok(solve_centralized_hard(instance, scenarios)?.map(|r| r.lower_bound))
}

/// Runs M independent sampled solves in parallel and returns the T-th
/// smallest objective. One T serves both chance constraints: the smaller
/// of the two per-constraint indices.
pub fn saa_lower_bound<F>(instance: &ProblemInstance, config: &LowerBoundConfig, solver: F) -> Result<LowerBoundReport>
where
    F: Fn(&ScenarioSet) -> Result<Option<f64>> + Sync,
{
    if config.replications == 0 || config.samples == 0 {
        return Err(BlendError::Argument("lower bound needs M >= 1 and N >= 1".into()));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(BlendError::Argument(format!("delta {} outside (0, 1)", config.delta)));
    }
    let pi_ash = replication_coverage(config.samples, config.inner_risk_ash, config.risk_ash)?;
    let pi_thermal = replication_coverage(config.samples, config.inner_risk_thermal, config.risk_thermal)?;
    let t1 = order_statistic_index(pi_ash, config.replications, config.delta)?;
    let t2 = order_statistic_index(pi_thermal, config.replications, config.delta)?;
    let index = match (t1, t2) {
        (Some(a), Some(b)) => Some(a.min(b)),
        _ => None,
    };

    let mut objectives = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let scenarios = sample_scenarios(instance, config.samples, replication_seed(config.seed, r))?;
            Ok(solver(&scenarios)?.unwrap_or(f64::INFINITY))
        })
        .collect::<Result<Vec<f64>>>()?;
    objectives.sort_by(f64::total_cmp);
    let bound = index.map(|t| objectives[t - 1]);
    Ok(LowerBoundReport {
        replications: config.replications,
        samples: config.samples,
        objectives,
        pi_ash,
        pi_thermal,
        index,
        bound,
        delta: config.delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_limit_values() {
        assert_eq!(upper_confidence_limit(0.0, 100, 0.05).unwrap(), 0.0);
        assert!((upper_confidence_limit(0.5, 100, 0.05).unwrap() - 0.58224).abs() < 1e-4);
        let a = upper_confidence_limit(0.3, 100, 0.05).unwrap();
        let b = upper_confidence_limit(0.3, 400, 0.05).unwrap();
        assert!(b <= a);
    }

    #[test]
    fn coverage_with_zero_inner_risk() {
        let pi = replication_coverage(10, 0.0, 0.3).unwrap();
        assert!((pi - 0.0282475249).abs() < 1e-10);
    }

    #[test]
    fn single_replication_index() {
        let pi = 0.4;
        assert_eq!(order_statistic_index(pi, 1, 0.6).unwrap(), Some(1));
        assert_eq!(order_statistic_index(pi, 1, 0.5).unwrap(), None);
    }

    #[test]
    fn replication_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..100).map(|r| replication_seed(7, r)).collect();
        assert_eq!(seeds.len(), 100);
    }
}
