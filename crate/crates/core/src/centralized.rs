//! Centralized blending: the penalized SAA model solved through its convex
//! incremental-pricing relaxation, the joint binary search over the penalty
//! weights, and a bracket-indicator MIP used as an exact oracle on small
//! instances.

use serde::{Deserialize, Serialize};

use crate::error::{BlendError, Result};
use crate::lp::{
    solve_bracket_mip, solve_lp_with, Basis, BracketMip, Direction, LinearProgram, LpStatus, Sense,
    SolverOptions,
};
use crate::model::{cost_breakdown, BlendSolution, LotPurchase, ProblemInstance, ScenarioSlacks};
use crate::sampling::{ash_activities, lot_efficiencies, thermal_activities, ScenarioSet};

/// Relative threshold above which a slack counts as a violated scenario.
pub const VIOLATION_THRESHOLD: f64 = 1e-6;

const LIFT_TOL: f64 = 1e-6;

/// Scenarios in the first round of a hard solve.
const HARD_INITIAL_SCENARIOS: usize = 50;

/// Penalty weights and the state of their search interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    /// λ, cost per unit of ash excess.
    pub lambda: f64,
    /// μ, cost per unit of thermal shortfall.
    pub mu: f64,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub mu_lower: f64,
    pub mu_upper: f64,
    /// ε, slack on the violated-scenario counts.
    pub count_slack: f64,
    /// δ, stop once both midpoints move by at most this much.
    pub width_tol: f64,
}

impl PenaltyWeights {
    /// Fixed weights with a degenerate search interval.
    pub fn fixed(lambda: f64, mu: f64) -> Self {
        Self {
            lambda,
            mu,
            lambda_lower: lambda,
            lambda_upper: lambda,
            mu_lower: mu,
            mu_upper: mu,
            count_slack: 0.0,
            width_tol: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, v: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= v && v <= hi;
        if !ok(self.lambda_lower, self.lambda, self.lambda_upper) || !ok(self.mu_lower, self.mu, self.mu_upper) {
            return Err(BlendError::Argument(format!(
                "penalties must satisfy 0 <= lower <= value <= upper (lambda {}, mu {})",
                self.lambda, self.mu
            )));
        }
        if !(self.count_slack >= 0.0 && self.width_tol >= 0.0) {
            return Err(BlendError::Argument("search tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Outcome of one centralized solve at fixed penalties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralizedResult {
    pub solution: BlendSolution,
    /// Penalized all-units objective at the relaxation optimum.
    pub upper_bound: f64,
    /// Penalized incremental-pricing objective at the same point.
    pub lower_bound: f64,
    /// (UB - LB) / UB, zero when UB is zero.
    pub error_gap: f64,
    /// Sum over purchased lots of `c_p k_lower_p - offset_p`.
    pub delta: f64,
    pub penalties: PenaltyWeights,
    /// (C1, C2): scenarios with positive ash excess and thermal shortfall.
    pub violations: (usize, usize),
    pub lp_objective: f64,
    pub lp_iterations: usize,
}

impl CentralizedResult {
    /// All-units purchase, transport and handling cost without penalties.
    pub fn deterministic_cost(&self) -> f64 {
        self.solution.cost_breakdown.deterministic()
    }

    pub fn quantities(&self) -> Vec<f64> {
        self.solution.flatten()
    }
}

/// The relaxation LP and the column index of every variable family.
#[derive(Debug, Clone)]
pub struct OuterModel {
    pub lp: LinearProgram,
    pub x: Vec<usize>,
    pub f: Vec<usize>,
    pub ash_surplus: Vec<usize>,
    pub ash_excess: Vec<usize>,
    pub thermal_surplus: Vec<usize>,
    pub thermal_shortfall: Vec<usize>,
}

impl OuterModel {
    pub fn set_penalties(&mut self, lambda: f64, mu: f64) {
        for &j in &self.ash_excess {
            self.lp.objective[j] = lambda;
        }
        for &j in &self.thermal_shortfall {
            self.lp.objective[j] = mu;
        }
    }

    /// Forbids every violation slack, turning both scenario families into
    /// hard constraints.
    pub fn harden(&mut self) {
        for &j in self.ash_excess.iter().chain(&self.thermal_shortfall) {
            self.lp.upper[j] = 0.0;
        }
    }
}

fn check_scenarios(instance: &ProblemInstance, scenarios: &ScenarioSet) -> Result<()> {
    if scenarios.is_empty() {
        return Err(BlendError::Argument("scenario set is empty".into()));
    }
    if scenarios.lots() != instance.lots().len() {
        return Err(BlendError::Argument(format!(
            "scenarios cover {} lots, instance has {}",
            scenarios.lots(),
            instance.lots().len()
        )));
    }
    Ok(())
}

/// Appends the scenario rows `sum (a - alpha) X + V - W = 0` and
/// `-sum e h X + U - J = -tau` with their slack columns.
pub(crate) fn add_scenario_rows(
    lp: &mut LinearProgram,
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    x_of: &dyn Fn(usize) -> Vec<usize>,
    lambda: f64,
    mu: f64,
) -> [Vec<usize>; 4] {
    let alpha = instance.refinery().ash_limit;
    let tau = instance.refinery().thermal_requirement;
    let eff = lot_efficiencies(instance);
    let n = scenarios.len();
    let mut cols: [Vec<usize>; 4] = Default::default();
    for s in 0..n {
        cols[0].push(lp.add_var(format!("V[{s}]"), 0.0, 0.0, f64::INFINITY));
        cols[1].push(lp.add_var(format!("W[{s}]"), lambda, 0.0, f64::INFINITY));
        cols[2].push(lp.add_var(format!("U[{s}]"), 0.0, 0.0, f64::INFINITY));
        cols[3].push(lp.add_var(format!("J[{s}]"), mu, 0.0, f64::INFINITY));
    }
    for s in 0..n {
        let mut coeffs = Vec::new();
        for k in 0..instance.lots().len() {
            let a = scenarios.ash(s, k) - alpha;
            if a != 0.0 {
                coeffs.extend(x_of(k).into_iter().map(|j| (j, a)));
            }
        }
        coeffs.push((cols[0][s], 1.0));
        coeffs.push((cols[1][s], -1.0));
        lp.add_row(format!("ash[{s}]"), coeffs, Sense::Eq, 0.0);
    }
    for s in 0..n {
        let mut coeffs = Vec::new();
        for (k, e) in eff.iter().enumerate() {
            let g = e * scenarios.heat(s, k);
            if g != 0.0 {
                coeffs.extend(x_of(k).into_iter().map(|j| (j, -g)));
            }
        }
        coeffs.push((cols[2][s], 1.0));
        coeffs.push((cols[3][s], -1.0));
        lp.add_row(format!("thermal[{s}]"), coeffs, Sense::Eq, -tau);
    }
    cols
}

/// Builds the penalized incremental-pricing relaxation at fixed (λ, μ).
///
/// Columns: `X_k`, `F_k` per lot, then `V_s, W_s, U_s, J_s` per scenario.
/// Rows: one epigraph row per (lot, bracket), an availability row per lot,
/// then the ash rows and the thermal rows.
pub fn build_outer_model(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    lambda: f64,
    mu: f64,
) -> Result<OuterModel> {
    check_scenarios(instance, scenarios)?;
    let mut lp = LinearProgram::new(Direction::Minimize);
    let lots = instance.lots();
    let mut x = Vec::with_capacity(lots.len());
    let mut f = Vec::with_capacity(lots.len());
    for (k, lot) in lots.iter().enumerate() {
        let tag = format!("{},{}", lot.supplier, lot.biomass);
        x.push(lp.add_var(format!("X[{tag}]"), instance.delivery_cost(k), 0.0, f64::INFINITY));
        f.push(lp.add_var(format!("F[{tag}]"), 1.0, 0.0, f64::INFINITY));
    }
    for (k, lot) in lots.iter().enumerate() {
        let offsets = lot.curve.outer_offsets();
        for (p, b) in lot.curve.brackets().iter().enumerate() {
            lp.add_row(
                format!("piece[{k},{p}]"),
                vec![(f[k], 1.0), (x[k], -b.price)],
                Sense::Ge,
                offsets[p] - b.price * b.lower,
            );
        }
    }
    for (k, lot) in lots.iter().enumerate() {
        lp.add_row(format!("avail[{k}]"), vec![(x[k], 1.0)], Sense::Le, lot.curve.availability());
    }
    let xs = x.clone();
    let [v, w, u, j] = add_scenario_rows(&mut lp, instance, scenarios, &|k| vec![xs[k]], lambda, mu);
    Ok(OuterModel { lp, x, f, ash_surplus: v, ash_excess: w, thermal_surplus: u, thermal_shortfall: j })
}

/// Canonical slacks and violation counts for aggregate lot quantities.
pub fn evaluate_slacks(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    quantities: &[f64],
) -> (ScenarioSlacks, (usize, usize)) {
    let r = instance.refinery();
    let eff = lot_efficiencies(instance);
    let ash = ash_activities(quantities, scenarios, r.ash_limit);
    let thermal = thermal_activities(quantities, scenarios, r.thermal_requirement, &eff);
    let slacks = ScenarioSlacks::from_activities(&ash, &thermal);
    let mut c1 = 0;
    let mut c2 = 0;
    for s in 0..scenarios.len() {
        let (ash_scale, heat_scale) = row_scales(instance, scenarios, s, quantities, &eff);
        if slacks.ash_excess[s] > VIOLATION_THRESHOLD * ash_scale {
            c1 += 1;
        }
        if slacks.thermal_shortfall[s] > VIOLATION_THRESHOLD * heat_scale {
            c2 += 1;
        }
    }
    (slacks, (c1, c2))
}

/// Magnitudes of the ash and thermal rows of scenario `s`, used to turn
/// absolute slacks into relative violations.
fn row_scales(instance: &ProblemInstance, scenarios: &ScenarioSet, s: usize, quantities: &[f64], eff: &[f64]) -> (f64, f64) {
    let r = instance.refinery();
    let ash: f64 = scenarios.ash_row(s).iter().zip(quantities).map(|(a, x)| ((a - r.ash_limit) * x).abs()).sum();
    let heat: f64 =
        scenarios.heat_row(s).iter().zip(quantities).zip(eff).map(|((h, x), e)| (e * h * x).abs()).sum();
    (ash.max(1.0), heat.max(r.thermal_requirement).max(1.0))
}

/// Evaluates the penalized all-units objective (UB) and the penalized
/// incremental objective (LB) at aggregate quantities.
pub fn evaluate_bounds(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    quantities: &[f64],
    penalties: PenaltyWeights,
) -> Result<CentralizedResult> {
    check_scenarios(instance, scenarios)?;
    let snapped = BlendSolution::snap_to_breakpoints(instance, quantities, LIFT_TOL);
    let purchases = BlendSolution::lift(instance, &snapped, LIFT_TOL)?;
    let (slacks, violations) = evaluate_slacks(instance, scenarios, &flat(&purchases));
    let penalty = penalties.lambda * slacks.ash_excess.iter().sum::<f64>()
        + penalties.mu * slacks.thermal_shortfall.iter().sum::<f64>();
    let mut breakdown = cost_breakdown(instance, &purchases);
    breakdown.penalty = penalty;
    let mut outer = 0.0;
    let mut delta = 0.0;
    for (lot, p) in instance.lots().iter().zip(&purchases) {
        outer += lot.curve.outer_cost(p.quantity)?;
        if p.quantity > 0.0 {
            delta += lot.curve.bracket_gap(p.bracket);
        }
    }
    let upper_bound = breakdown.total();
    let lower_bound = outer + breakdown.transport + breakdown.processing + penalty;
    let error_gap = if upper_bound > 0.0 { (upper_bound - lower_bound) / upper_bound } else { 0.0 };
    Ok(CentralizedResult {
        solution: BlendSolution { purchases, slacks, objective: upper_bound, cost_breakdown: breakdown },
        upper_bound,
        lower_bound,
        error_gap,
        delta,
        penalties,
        violations,
        lp_objective: f64::NAN,
        lp_iterations: 0,
    })
}

fn flat(purchases: &[LotPurchase]) -> Vec<f64> {
    purchases.iter().map(|p| p.quantity).collect()
}

fn solve_model(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    model: &OuterModel,
    penalties: PenaltyWeights,
    warm: Option<&Basis>,
) -> Result<Option<(CentralizedResult, Option<Basis>)>> {
    let sol = solve_lp_with(&model.lp, &SolverOptions::default(), warm)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(None),
        LpStatus::Unbounded => return Err(BlendError::Solver("centralized relaxation is unbounded".into())),
    }
    let quantities: Vec<f64> = model.x.iter().map(|&j| sol.x[j]).collect();
    let mut result = evaluate_bounds(instance, scenarios, &quantities, penalties)?;
    check_identity(&result)?;
    result.lp_objective = sol.objective;
    result.lp_iterations = sol.iterations;
    Ok(Some((result, sol.basis)))
}

/// Solves the relaxation at fixed penalties, lifts the optimum to bracketed
/// purchases and reports both bounds.
pub fn solve_centralized_fixed_penalty(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    lambda: f64,
    mu: f64,
) -> Result<CentralizedResult> {
    let penalties = PenaltyWeights::fixed(lambda, mu);
    penalties.validate()?;
    let model = build_outer_model(instance, scenarios, lambda, mu)?;
    solve_model(instance, scenarios, &model, penalties, None)?
        .map(|(r, _)| r)
        .ok_or_else(|| BlendError::Solver("penalized relaxation reported infeasible".into()))
}

/// Solves the relaxation with every scenario row enforced. Returns `None`
/// when no purchase plan satisfies all scenarios.
///
/// Large scenario sets are handled by row generation: the model starts from
/// a prefix of the scenarios and takes in every scenario the current blend
/// violates until none is left. The final blend is then feasible for the
/// full set and optimal for a relaxation of it, hence optimal.
pub fn solve_centralized_hard(instance: &ProblemInstance, scenarios: &ScenarioSet) -> Result<Option<CentralizedResult>> {
    check_scenarios(instance, scenarios)?;
    let mut active: Vec<usize> = (0..scenarios.len().min(HARD_INITIAL_SCENARIOS)).collect();
    let mut iterations = 0;
    loop {
        let subset = scenarios.subset(&active)?;
        let mut model = build_outer_model(instance, &subset, 0.0, 0.0)?;
        model.harden();
        let sol = solve_lp_with(&model.lp, &SolverOptions::default(), None)?;
        iterations += sol.iterations;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => return Err(BlendError::Solver("centralized relaxation is unbounded".into())),
        }
        let quantities: Vec<f64> = model.x.iter().map(|&j| sol.x[j]).collect();
        let (slacks, _) = evaluate_slacks(instance, scenarios, &quantities);
        let mut taken = vec![false; scenarios.len()];
        for &s in &active {
            taken[s] = true;
        }
        let before = active.len();
        let eff = lot_efficiencies(instance);
        for s in (0..scenarios.len()).filter(|&s| !taken[s]) {
            let (ash_scale, heat_scale) = row_scales(instance, scenarios, s, &quantities, &eff);
            // Tighter than the violation threshold so the final count is zero.
            let tol = 0.1 * VIOLATION_THRESHOLD;
            if slacks.ash_excess[s] > tol * ash_scale || slacks.thermal_shortfall[s] > tol * heat_scale {
                active.push(s);
            }
        }
        if active.len() == before {
            let mut result = evaluate_bounds(instance, scenarios, &quantities, PenaltyWeights::fixed(0.0, 0.0))?;
            check_identity(&result)?;
            result.lp_objective = sol.objective;
            result.lp_iterations = iterations;
            return Ok(Some(result));
        }
        active.sort_unstable();
    }
}

fn check_identity(result: &CentralizedResult) -> Result<()> {
    let identity = result.upper_bound - result.lower_bound - result.delta;
    if identity.abs() > 1e-6 * result.upper_bound.abs().max(1.0) {
        return Err(BlendError::Verification(format!(
            "bound gap {} does not match bracket offsets {}",
            result.upper_bound - result.lower_bound,
            result.delta
        )));
    }
    Ok(())
}

/// The penalized all-units model with explicit bracket indicators, for
/// exact solution by branch-and-bound. Returns the MIP and, per lot, the
/// quantity columns of its brackets.
pub fn build_bracket_mip(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    lambda: f64,
    mu: f64,
) -> Result<(BracketMip, Vec<Vec<usize>>)> {
    check_scenarios(instance, scenarios)?;
    let mut lp = LinearProgram::new(Direction::Minimize);
    let mut xcols = Vec::new();
    let mut groups = Vec::new();
    for (k, lot) in instance.lots().iter().enumerate() {
        let extra = instance.delivery_cost(k);
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for (p, b) in lot.curve.brackets().iter().enumerate() {
            let xj = lp.add_var(format!("X[{k},{p}]"), b.price + extra, 0.0, b.upper);
            let zj = lp.add_var(format!("Z[{k},{p}]"), 0.0, 0.0, 1.0);
            lp.add_row(format!("lo[{k},{p}]"), vec![(xj, 1.0), (zj, -b.lower)], Sense::Ge, 0.0);
            lp.add_row(format!("hi[{k},{p}]"), vec![(xj, 1.0), (zj, -b.upper)], Sense::Le, 0.0);
            xs.push(xj);
            zs.push(zj);
        }
        lp.add_row(format!("one[{k}]"), zs.iter().map(|&z| (z, 1.0)).collect(), Sense::Eq, 1.0);
        xcols.push(xs);
        groups.push(zs);
    }
    let cols = xcols.clone();
    add_scenario_rows(&mut lp, instance, scenarios, &|k| cols[k].clone(), lambda, mu);
    Ok((BracketMip { lp, groups, node_limit: 200_000 }, xcols))
}

/// Exact optimum of the penalized all-units model and the bracket chosen
/// for every lot.
pub fn solve_bracket_oracle(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    lambda: f64,
    mu: f64,
) -> Result<Option<(f64, Vec<LotPurchase>)>> {
    let (mip, xcols) = build_bracket_mip(instance, scenarios, lambda, mu)?;
    let Some(sol) = solve_bracket_mip(&mip)? else { return Ok(None) };
    let purchases = xcols
        .iter()
        .zip(&sol.assignment)
        .map(|(cols, &p)| LotPurchase { quantity: sol.solution.x[cols[p]].max(0.0), bracket: p })
        .collect();
    Ok(Some((sol.solution.objective, purchases)))
}

/// Settings for the penalty search. `None` bounds fall back to defaults
/// derived from the instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub lambda_upper: Option<f64>,
    pub mu_upper: Option<f64>,
    pub count_slack: f64,
    /// δ as a fraction of the initial upper bounds.
    pub relative_width: f64,
    /// Number of times the upper bounds may be doubled before giving up.
    pub max_expansions: usize,
    pub max_iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            lambda_upper: None,
            mu_upper: None,
            count_slack: 0.0,
            relative_width: 1e-4,
            max_expansions: 40,
            max_iterations: 200,
        }
    }
}

/// One evaluated penalty pair of the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub lambda: f64,
    pub mu: f64,
    pub ash_violations: usize,
    pub thermal_violations: usize,
    /// Penalized objective of the inner solve.
    pub objective: f64,
    pub deterministic_cost: f64,
    pub within_targets: bool,
}

/// What the search needs from an inner solve at fixed penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSummary {
    pub violations: (usize, usize),
    pub objective: f64,
    pub deterministic_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome<R> {
    pub result: R,
    pub penalties: PenaltyWeights,
    pub trace: Vec<SearchStep>,
    /// Largest admissible (C1, C2).
    pub targets: (usize, usize),
}

/// Largest number of violated scenarios allowed by an inner risk level:
/// `N - ceil((1 - risk) N)`.
pub fn allowed_violations(risk: f64, n: usize) -> usize {
    let keep = ((1.0 - risk) * n as f64 - 1e-9).ceil().max(0.0) as usize;
    n - keep.min(n)
}

/// λᵘ = μᵘ = 10 × (largest delivered unit cost) × (τ / smallest LHV).
pub fn default_penalty_upper(instance: &ProblemInstance) -> f64 {
    let min_lhv = instance.biomass().iter().map(|b| b.heat.low).fold(f64::INFINITY, f64::min);
    let scale = 10.0 * instance.max_unit_delivered_cost().max(1.0) * (instance.refinery().thermal_requirement / min_lhv);
    scale.max(1.0)
}

/// Joint binary search over (λ, μ) around an arbitrary inner solver.
///
/// The inner solver must report the violated-scenario counts of its
/// solution. The upper bounds are doubled until the counts at (λᵘ, μᵘ) are
/// admissible. Each iteration then evaluates the midpoints and moves both
/// intervals. Among all evaluated pairs within the targets, the solution with
/// the lowest deterministic cost is returned.
pub fn search_penalties<R, F>(
    scenario_count: usize,
    inner_risk_ash: f64,
    inner_risk_thermal: f64,
    initial_upper: (f64, f64),
    options: &SearchOptions,
    mut inner: F,
) -> Result<SearchOutcome<R>>
where
    F: FnMut(PenaltyWeights) -> Result<(R, InnerSummary)>,
{
    for r in [inner_risk_ash, inner_risk_thermal] {
        if !(0.0..1.0).contains(&r) {
            return Err(BlendError::Argument(format!("inner risk {r} outside [0, 1)")));
        }
    }
    if !(options.count_slack >= 0.0 && options.relative_width > 0.0) {
        return Err(BlendError::Argument("search tolerances must be positive".into()));
    }
    let n = scenario_count;
    let targets = (allowed_violations(inner_risk_ash, n), allowed_violations(inner_risk_thermal, n));
    let eps = options.count_slack;
    let too_many = |c: usize, t: usize| c as f64 >= t as f64 + 1.0 + eps;
    let few_enough = |c: usize, t: usize| c as f64 <= t as f64 - eps;
    let admissible = |c: (usize, usize)| c.0 as f64 <= targets.0 as f64 + eps && c.1 as f64 <= targets.1 as f64 + eps;

    let (mut lambda_upper, mut mu_upper) = initial_upper;
    if !(lambda_upper > 0.0 && mu_upper > 0.0 && lambda_upper.is_finite() && mu_upper.is_finite()) {
        return Err(BlendError::Argument("penalty upper bounds must be positive".into()));
    }

    let mut trace = Vec::new();
    let mut best: Option<(f64, R)> = None;
    let mut evaluate = |weights: PenaltyWeights, trace: &mut Vec<SearchStep>| -> Result<(usize, usize)> {
        let (result, summary) = inner(weights)?;
        let ok = admissible(summary.violations);
        trace.push(SearchStep {
            lambda: weights.lambda,
            mu: weights.mu,
            ash_violations: summary.violations.0,
            thermal_violations: summary.violations.1,
            objective: summary.objective,
            deterministic_cost: summary.deterministic_cost,
            within_targets: ok,
        });
        if ok && best.as_ref().map_or(true, |(c, _)| summary.deterministic_cost < *c) {
            best = Some((summary.deterministic_cost, result));
        }
        Ok(summary.violations)
    };

    let mut expansions = 0;
    loop {
        let w = PenaltyWeights {
            lambda: lambda_upper,
            mu: mu_upper,
            lambda_lower: 0.0,
            lambda_upper,
            mu_lower: 0.0,
            mu_upper,
            count_slack: eps,
            width_tol: 0.0,
        };
        let counts = evaluate(w, &mut trace)?;
        if admissible(counts) {
            break;
        }
        if expansions == options.max_expansions {
            return Err(BlendError::SearchFailure(format!(
                "violations ({}, {}) exceed targets ({}, {}) at lambda {lambda_upper:e}, mu {mu_upper:e} after {expansions} doublings",
                counts.0, counts.1, targets.0, targets.1
            )));
        }
        if too_many(counts.0, targets.0) {
            lambda_upper *= 2.0;
        }
        if too_many(counts.1, targets.1) {
            mu_upper *= 2.0;
        }
        expansions += 1;
    }

    let delta_lambda = options.relative_width * lambda_upper;
    let delta_mu = options.relative_width * mu_upper;
    let (mut lam_lo, mut lam_hi, mut mu_lo, mut mu_hi) = (0.0, lambda_upper, 0.0, mu_upper);
    for _ in 0..options.max_iterations {
        let lambda = 0.5 * (lam_lo + lam_hi);
        let mu = 0.5 * (mu_lo + mu_hi);
        let w = PenaltyWeights {
            lambda,
            mu,
            lambda_lower: lam_lo,
            lambda_upper: lam_hi,
            mu_lower: mu_lo,
            mu_upper: mu_hi,
            count_slack: eps,
            width_tol: delta_lambda.max(delta_mu),
        };
        let (c1, c2) = evaluate(w, &mut trace)?;
        if too_many(c1, targets.0) {
            lam_lo = lambda;
        } else if few_enough(c1, targets.0) {
            lam_hi = lambda;
        }
        if too_many(c2, targets.1) {
            mu_lo = mu;
        } else if few_enough(c2, targets.1) {
            mu_hi = mu;
        }
        if (lambda - 0.5 * (lam_lo + lam_hi)).abs() <= delta_lambda && (mu - 0.5 * (mu_lo + mu_hi)).abs() <= delta_mu {
            break;
        }
    }

    let (_, result) = best.ok_or_else(|| BlendError::SearchFailure("no admissible penalty pair found".into()))?;
    let chosen = trace
        .iter()
        .filter(|s| s.within_targets)
        .min_by(|a, b| a.deterministic_cost.total_cmp(&b.deterministic_cost))
        .copied()
        .expect("an admissible step exists");
    let penalties = PenaltyWeights {
        lambda: chosen.lambda,
        mu: chosen.mu,
        lambda_lower: lam_lo,
        lambda_upper: lam_hi,
        mu_lower: mu_lo,
        mu_upper: mu_hi,
        count_slack: eps,
        width_tol: delta_lambda.max(delta_mu),
    };
    Ok(SearchOutcome { result, penalties, trace, targets })
}

/// Penalty search for the centralized model: `allowed_violations(β̂, N)` ash
/// rows and `allowed_violations(γ̂, N)` thermal rows may be violated, each
/// widened by ε. Successive relaxations are warm-started.
pub fn saa_binary_search(
    instance: &ProblemInstance,
    scenarios: &ScenarioSet,
    inner_risk_ash: f64,
    inner_risk_thermal: f64,
    options: &SearchOptions,
) -> Result<SearchOutcome<CentralizedResult>> {
    let default_upper = default_penalty_upper(instance);
    let upper = (options.lambda_upper.unwrap_or(default_upper), options.mu_upper.unwrap_or(default_upper));
    let mut model = build_outer_model(instance, scenarios, upper.0, upper.1)?;
    let mut basis: Option<Basis> = None;
    search_penalties(scenarios.len(), inner_risk_ash, inner_risk_thermal, upper, options, |w| {
        model.set_penalties(w.lambda, w.mu);
        let (result, next) = solve_model(instance, scenarios, &model, w, basis.as_ref())?
            .ok_or_else(|| BlendError::Solver("penalized relaxation reported infeasible".into()))?;
        basis = next;
        let summary = InnerSummary {
            violations: result.violations,
            objective: result.upper_bound,
            deterministic_cost: result.deterministic_cost(),
        };
        Ok((result, summary))
    })
}

/// Share of the total purchased mass per biomass type, in percent. All zeros
/// when nothing is bought.
pub fn blend_percentages(instance: &ProblemInstance, quantities: &[f64]) -> Vec<f64> {
    let mut per_type = vec![0.0; instance.biomass().len()];
    for (lot, x) in instance.lots().iter().zip(quantities) {
        per_type[lot.biomass] += x;
    }
    let total: f64 = per_type.iter().sum();
    if total <= 0.0 {
        return per_type.iter().map(|_| 0.0).collect();
    }
    per_type.iter().map(|x| 100.0 * x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bracket, BiomassType, RefinerySpec, Supplier, SupplyCurve, TriangularParams, UniformParams};
    use std::collections::BTreeMap;

    fn instance(tau: f64) -> ProblemInstance {
        let bt = BiomassType {
            id: "b".into(),
            ash: TriangularParams::new(1.0, 2.0, 3.0).unwrap(),
            heat: UniformParams::new(10.0, 12.0).unwrap(),
            efficiency: 1.0,
            harvest_collection: 0.0,
            processing: 1.0,
            storage: 0.0,
            transport_fixed: 2.0,
            transport_variable: 0.0,
            harvest_cost: None,
        };
        let curve = SupplyCurve::new(vec![
            Bracket { lower: 0.0, upper: 100.0, price: 10.0 },
            Bracket { lower: 100.0, upper: 250.0, price: 20.0 },
        ])
        .unwrap();
        let supplier = Supplier {
            id: "s".into(),
            coords: None,
            distance: 0.0,
            curves: BTreeMap::from([("b".to_string(), curve)]),
        };
        let refinery = RefinerySpec {
            ash_limit: 5.0,
            thermal_requirement: tau,
            risk_ash: 0.1,
            risk_thermal: 0.1,
            inner_risk_ash: 0.0,
            inner_risk_thermal: 0.0,
        };
        ProblemInstance::new(vec![supplier], vec![bt], refinery).unwrap()
    }

    fn scenarios(inst: &ProblemInstance, heat: &[f64]) -> ScenarioSet {
        let lots = inst.lots().len();
        ScenarioSet::from_values(heat.len(), lots, 0, vec![2.0; heat.len()], heat.to_vec()).unwrap()
    }

    #[test]
    fn outer_model_shape() {
        let inst = instance(1000.0);
        let sc = scenarios(&inst, &[10.0, 12.0]);
        let m = build_outer_model(&inst, &sc, 1.0, 1.0).unwrap();
        assert_eq!(m.lp.num_rows(), 2 + 2 + 2 + 1);
        assert_eq!(m.lp.num_vars(), 2 + 4 * 2);
    }

    #[test]
    fn zero_penalties_buy_nothing() {
        let inst = instance(1000.0);
        let sc = scenarios(&inst, &[10.0, 12.0]);
        let r = solve_centralized_fixed_penalty(&inst, &sc, 0.0, 0.0).unwrap();
        assert_eq!(r.quantities(), vec![0.0]);
        assert_eq!(r.upper_bound, 0.0);
        assert_eq!(r.violations, (0, 2));
    }

    #[test]
    fn bracket_one_demand_has_no_gap() {
        let inst = instance(500.0);
        let sc = scenarios(&inst, &[10.0, 12.0]);
        let r = solve_centralized_fixed_penalty(&inst, &sc, 1e4, 1e4).unwrap();
        assert!((r.quantities()[0] - 50.0).abs() < 1e-7);
        assert_eq!(r.upper_bound, r.lower_bound);
        assert_eq!(r.error_gap, 0.0);
        assert_eq!(r.violations, (0, 0));
    }

    #[test]
    fn second_bracket_gap_is_offset_identity() {
        let inst = instance(1500.0);
        let sc = scenarios(&inst, &[10.0, 10.0]);
        let r = solve_centralized_fixed_penalty(&inst, &sc, 1e4, 1e4).unwrap();
        assert!((r.quantities()[0] - 150.0).abs() < 1e-7);
        assert!((r.upper_bound - r.lower_bound - 1000.0).abs() < 1e-6);
        assert_eq!(r.delta, 1000.0);
        let oracle = solve_bracket_oracle(&inst, &sc, 1e4, 1e4).unwrap().unwrap();
        assert!(r.upper_bound - oracle.0 >= -1e-6);
        assert!(r.upper_bound - oracle.0 <= r.delta + 1e-6);
    }

    #[test]
    fn targets_use_integer_ceiling() {
        assert_eq!(allowed_violations(0.0, 50), 0);
        assert_eq!(allowed_violations(0.2, 50), 10);
        assert_eq!(allowed_violations(0.25, 10), 2);
        assert_eq!(allowed_violations(0.99, 1), 0);
    }

    #[test]
    fn search_with_zero_risk_meets_every_scenario() {
        let inst = instance(1500.0);
        let sc = scenarios(&inst, &[10.0, 11.0, 12.0]);
        let out = saa_binary_search(&inst, &sc, 0.0, 0.0, &SearchOptions::default()).unwrap();
        assert_eq!(out.result.violations, (0, 0));
        assert!((out.result.quantities()[0] - 150.0).abs() < 1e-6);
    }

    #[test]
    fn wide_count_slack_stops_after_first_midpoint() {
        let inst = instance(1500.0);
        let sc = scenarios(&inst, &[10.0, 11.0, 12.0]);
        let opts = SearchOptions { count_slack: 3.0, ..SearchOptions::default() };
        let out = saa_binary_search(&inst, &sc, 0.0, 0.0, &opts).unwrap();
        assert_eq!(out.trace.len(), 2);
        assert_eq!(out.trace[1].lambda, 0.5 * out.trace[0].lambda);
    }

    #[test]
    fn blend_shares_sum_to_hundred() {
        let inst = instance(1.0);
        assert_eq!(blend_percentages(&inst, &[0.0]), vec![0.0]);
        assert_eq!(blend_percentages(&inst, &[3.0]), vec![100.0]);
    }
}
