use super::simplex::{solve_lp_with, Basis, SolverOptions};
use super::{Direction, LinearProgram, LpSolution, LpStatus};
use crate::error::{BlendError, Result};

/// A minimization LP whose indicator variables come in groups that must sum
/// to one and take 0/1 values. The LP itself is the continuous relaxation:
/// indicators are bounded in [0, 1] and each group's sum row is present.
#[derive(Debug, Clone)]
pub struct BracketMip {
    pub lp: LinearProgram,
    pub groups: Vec<Vec<usize>>,
    pub node_limit: usize,
}

#[derive(Debug, Clone)]
pub struct BracketMipSolution {
    pub solution: LpSolution,
    /// Chosen member index within each group.
    pub assignment: Vec<usize>,
    pub relaxation_objective: f64,
    pub nodes: usize,
    /// Incumbent objective after every improvement, in discovery order.
    pub incumbent_trace: Vec<f64>,
}

const INTEGRALITY_TOL: f64 = 1e-7;

struct Search<'a> {
    mip: &'a BracketMip,
    opts: SolverOptions,
    nodes: usize,
    best: Option<(f64, Vec<usize>, LpSolution)>,
    trace: Vec<f64>,
}

impl Search<'_> {
    fn tol(&self, value: f64) -> f64 {
        1e-9 * (1.0 + value.abs())
    }

    fn node_lp(&self, fixed: &[usize]) -> LinearProgram {
        let mut lp = self.mip.lp.clone();
        for (g, &choice) in fixed.iter().enumerate() {
            for (k, &var) in self.mip.groups[g].iter().enumerate() {
                if k == choice {
                    lp.lower[var] = 1.0;
                    lp.upper[var] = 1.0;
                } else {
                    lp.lower[var] = 0.0;
                    lp.upper[var] = 0.0;
                }
            }
        }
        lp
    }

    fn integral_assignment(&self, x: &[f64]) -> Option<Vec<usize>> {
        self.mip
            .groups
            .iter()
            .map(|g| {
                let ones: Vec<usize> = g
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| (x[v] - 1.0).abs() <= INTEGRALITY_TOL)
                    .map(|(k, _)| k)
                    .collect();
                let zeros = g.iter().filter(|&&v| x[v].abs() <= INTEGRALITY_TOL).count();
                (ones.len() == 1 && zeros + 1 == g.len()).then(|| ones[0])
            })
            .collect()
    }

    fn visit(&mut self, fixed: &mut Vec<usize>, warm: Option<&Basis>) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.mip.node_limit {
            return Err(BlendError::Resource(format!(
                "branch-and-bound node limit {} exceeded",
                self.mip.node_limit
            )));
        }
        let lp = self.node_lp(fixed);
        let sol = solve_lp_with(&lp, &self.opts, warm)?;
        match sol.status {
            LpStatus::Infeasible => return Ok(()),
            LpStatus::Unbounded => {
                return Err(BlendError::Solver("bracket relaxation is unbounded".into()));
            }
            LpStatus::Optimal => {}
        }
        if let Some((inc, _, _)) = &self.best {
            if sol.objective > inc + self.tol(*inc) {
                return Ok(());
            }
        }
        if let Some(assign) = self.integral_assignment(&sol.x) {
            let replace = match &self.best {
                None => true,
                Some((inc, inc_assign, _)) => {
                    sol.objective < inc - self.tol(*inc)
                        || (sol.objective <= inc + self.tol(*inc) && assign < *inc_assign)
                }
            };
            if replace {
                self.trace.push(sol.objective);
                self.best = Some((sol.objective, assign, sol.clone()));
            }
            // A smaller assignment with the same value may still exist below.
            if fixed.len() == self.mip.groups.len() {
                return Ok(());
            }
        }
        if fixed.len() == self.mip.groups.len() {
            return Ok(());
        }
        let g = fixed.len();
        for choice in 0..self.mip.groups[g].len() {
            fixed.push(choice);
            self.visit(fixed, sol.basis.as_ref())?;
            fixed.pop();
        }
        Ok(())
    }
}

/// Exact minimum over 0/1 group assignments by depth-first branch-and-bound
/// with LP bounds. Groups are branched in order and members in index order;
/// among equal objectives the lexicographically smallest assignment wins.
/// Returns `None` when no integral assignment is feasible.
pub fn solve_bracket_mip(mip: &BracketMip) -> Result<Option<BracketMipSolution>> {
    if mip.lp.direction != Direction::Minimize {
        return Err(BlendError::Argument("bracket MIP must be a minimization".into()));
    }
    mip.lp.validate()?;
    for g in &mip.groups {
        if g.is_empty() || g.iter().any(|&v| v >= mip.lp.num_vars()) {
            return Err(BlendError::Argument("invalid indicator group".into()));
        }
    }
    let opts = SolverOptions::default();
    let root = solve_lp_with(&mip.lp, &opts, None)?;
    let relaxation_objective = root.objective;
    if root.status == LpStatus::Infeasible {
        return Ok(None);
    }
    let mut search = Search { mip, opts, nodes: 0, best: None, trace: Vec::new() };
    let mut fixed = Vec::new();
    search.visit(&mut fixed, root.basis.as_ref())?;
    let nodes = search.nodes;
    let trace = search.trace;
    Ok(search.best.map(|(_, assignment, solution)| BracketMipSolution {
        solution,
        assignment,
        relaxation_objective,
        nodes,
        incumbent_trace: trace,
    }))
}
