//! Leader-follower blending: the suppliers' best response to door prices,
//! its optimality certificate, the leader's subproblem, the price-ladder
//! heuristic and a relaxation bound.

mod follower;
mod kkt;
mod leader;

pub use follower::{
    brute_force_profit, follower_best_response, follower_lp, follower_lp_profit, margin, FollowerResponse, LotOffer,
    PriceVector,
};
pub use kkt::{verify_follower_optimality, KktReport, LotMultipliers, KKT_TOL};
pub use leader::{
    assemble_result, candidate_prices, check_bilevel_feasibility, gap_record, heuristic_solve, leader_subproblem,
    lower_bound_relaxation, DecentralizedResult, GapRecord, HeuristicOutcome, HeuristicStep, LeaderSolution,
    RelaxationBound,
};

use crate::centralized::{default_penalty_upper, search_penalties, InnerSummary, SearchOptions, SearchOutcome};
use crate::error::{BlendError, Result};
use crate::model::ProblemInstance;
use crate::sampling::ScenarioSet;

/// Default number of non-improving heuristic steps tolerated.
pub const DEFAULT_PATIENCE: usize = 5;

/// Penalty search with the heuristic as the inner solver.
pub fn saa_heuristic_search(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    inner_risk_ash: f64,
    inner_risk_thermal: f64,
    patience: usize,
    options: &SearchOptions,
) -> Result<SearchOutcome<DecentralizedResult>> {
    let default_upper = default_penalty_upper(instance);
    let upper = (options.lambda_upper.unwrap_or(default_upper), options.mu_upper.unwrap_or(default_upper));
    search_penalties(scenarios.len(), inner_risk_ash, inner_risk_thermal, upper, options, |w| {
        let out = heuristic_solve(instance, scenarios, w.lambda, w.mu, patience)?;
        let best = out.incumbent.ok_or_else(|| {
            BlendError::SearchFailure(format!("price ladder exhausted after {} steps without a plan", out.trace.len()))
        })?;
        let summary = InnerSummary {
            violations: best.violations,
            objective: best.leader_objective,
            deterministic_cost: best.deterministic_cost(),
        };
        Ok((best, summary))
    })
}
