//! Bounded-variable revised primal simplex on an explicit dense basis inverse.
//!
//! Every row `a_i x (sense) b_i` is turned into `a_i x - s_i = 0` with a
//! logical variable `s_i` whose bounds carry the sense and right-hand side.
//! The cold-start basis is all logicals. Infeasible basics are driven out by
//! a composite phase 1 (sum of infeasibilities); the true costs take over as
//! soon as the basis is primal feasible. Pricing is Dantzig with a switch to
//! Bland's rule after a streak of degenerate pivots. The ratio test is the
//! two-pass Harris test.

use serde::{Deserialize, Serialize};

use super::{Direction, LinearProgram, LpSolution, LpStatus, Sense};
use crate::error::{BlendError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: Option<usize>,
    pub degenerate_streak: usize,
    pub refactor_every: usize,
    pub scale: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            pivot_tol: 1e-9,
            max_iterations: None,
            degenerate_streak: 50,
            refactor_every: 100,
            scale: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Basis over structural variables followed by one logical per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &SolverOptions::default(), None)
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SolverOptions, warm: Option<&Basis>) -> Result<LpSolution> {
    lp.validate()?;
    let mut s = Simplex::new(lp, opts);
    if let Some(b) = warm {
        if !s.install_basis(b) {
            s.cold_start();
        }
    }
    let status = s.run()?;
    Ok(s.extract(lp, status))
}

struct Simplex {
    m: usize,
    n: usize,
    /// Scaled structural columns, sparse.
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basic: Vec<usize>,
    binv: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    obj_scale: f64,
    opts: SolverOptions,
    iterations: usize,
    repairs: usize,
}

enum Step {
    Optimal,
    Infeasible,
    Unbounded,
    Continue { degenerate: bool },
}

impl Simplex {
    fn new(lp: &LinearProgram, opts: &SolverOptions) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut row_scale = vec![1.0; m];
        let mut col_scale = vec![1.0; n];
        if opts.scale {
            for (i, row) in lp.rows.iter().enumerate() {
                let mx = row.coeffs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
                if mx > 0.0 {
                    row_scale[i] = 1.0 / mx;
                }
            }
            let mut colmax = vec![0.0f64; n];
            for (i, row) in lp.rows.iter().enumerate() {
                for &(j, v) in &row.coeffs {
                    colmax[j] = colmax[j].max((v * row_scale[i]).abs());
                }
            }
            for j in 0..n {
                if colmax[j] > 0.0 {
                    col_scale[j] = 1.0 / colmax[j];
                }
            }
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                if v != 0.0 {
                    cols[j].push((i, v * row_scale[i] * col_scale[j]));
                }
            }
        }
        // merge duplicate entries
        for c in &mut cols {
            c.sort_by_key(|e| e.0);
            c.dedup_by(|a, b| {
                if a.0 == b.0 {
                    b.1 += a.1;
                    true
                } else {
                    false
                }
            });
        }
        let sign = match lp.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        let mut cost: Vec<f64> = (0..n).map(|j| sign * lp.objective[j] * col_scale[j]).collect();
        let cmax = cost.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let obj_scale = if opts.scale && cmax > 0.0 { 1.0 / cmax } else { 1.0 };
        for c in &mut cost {
            *c *= obj_scale;
        }
        cost.extend(std::iter::repeat(0.0).take(m));

        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        for j in 0..n {
            lo.push(lp.lower[j] / col_scale[j]);
            up.push(lp.upper[j] / col_scale[j]);
        }
        for (i, row) in lp.rows.iter().enumerate() {
            let b = row.rhs * row_scale[i];
            let (l, u) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, b),
                Sense::Ge => (b, f64::INFINITY),
                Sense::Eq => (b, b),
            };
            lo.push(l);
            up.push(u);
        }
        let mut s = Self {
            m,
            n,
            cols,
            cost,
            lo,
            up,
            x: vec![0.0; n + m],
            status: vec![VarStatus::AtLower; n + m],
            basic: Vec::new(),
            binv: Vec::new(),
            row_scale,
            col_scale,
            obj_scale,
            opts: *opts,
            iterations: 0,
            repairs: 0,
        };
        s.cold_start();
        s
    }

    fn nonbasic_status(&self, j: usize) -> VarStatus {
        if self.lo[j].is_finite() {
            VarStatus::AtLower
        } else if self.up[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn cold_start(&mut self) {
        let (m, n) = (self.m, self.n);
        for j in 0..n {
            self.status[j] = self.nonbasic_status(j);
        }
        for i in 0..m {
            self.status[n + i] = VarStatus::Basic;
        }
        self.basic = (n..n + m).collect();
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
        }
        self.set_nonbasic_values();
        self.compute_basic_values();
    }

    fn install_basis(&mut self, basis: &Basis) -> bool {
        let total = self.n + self.m;
        if basis.status.len() != total {
            return false;
        }
        let basic: Vec<usize> = (0..total).filter(|&j| basis.status[j] == VarStatus::Basic).collect();
        if basic.len() != self.m {
            return false;
        }
        for j in 0..total {
            let st = basis.status[j];
            let ok = match st {
                VarStatus::Basic => true,
                VarStatus::AtLower => self.lo[j].is_finite(),
                VarStatus::AtUpper => self.up[j].is_finite(),
                VarStatus::Free => !self.lo[j].is_finite() && !self.up[j].is_finite(),
            };
            self.status[j] = if ok { st } else { self.nonbasic_status(j) };
        }
        self.basic = basic;
        if self.refactor().is_err() {
            return false;
        }
        self.set_nonbasic_values();
        self.compute_basic_values();
        true
    }

    fn set_nonbasic_values(&mut self) {
        for j in 0..self.n + self.m {
            self.x[j] = match self.status[j] {
                VarStatus::Basic => self.x[j],
                VarStatus::AtLower => self.lo[j],
                VarStatus::AtUpper => self.up[j],
                VarStatus::Free => 0.0,
            };
        }
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, v) in &self.cols[j] {
                f(i, v);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    /// x_B = B^-1 (-N x_N)
    fn compute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_col(j, |i, v| rhs[i] -= v * xj);
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            self.x[self.basic[r]] = v;
        }
    }

    /// Dense Gauss-Jordan inverse of the current basis matrix. Basis
    /// columns that turn out dependent are swapped for the logicals of the
    /// rows left without a pivot, and the inverse is rebuilt.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (r, &j) in self.basic.iter().enumerate() {
            self.for_col(j, |i, v| a[i * m + r] = v);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        let mut pivot_row = vec![usize::MAX; m];
        let mut used = vec![false; m];
        let mut dependent = Vec::new();
        for c in 0..m {
            let mut p = usize::MAX;
            let mut best = 0.0;
            for r in (0..m).filter(|&r| !used[r]) {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-11 {
                dependent.push(c);
                continue;
            }
            used[p] = true;
            pivot_row[c] = p;
            let piv = a[p * m + c];
            for k in 0..m {
                a[p * m + k] /= piv;
                inv[p * m + k] /= piv;
            }
            for r in 0..m {
                if r == p {
                    continue;
                }
                let f = a[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] -= f * a[p * m + k];
                    inv[r * m + k] -= f * inv[p * m + k];
                }
            }
        }
        if !dependent.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&r| !used[r]).collect();
            for (&c, &row) in dependent.iter().zip(&free_rows) {
                let old = self.basic[c];
                let logical = self.n + row;
                if self.status[logical] == VarStatus::Basic {
                    return Err(BlendError::Solver("singular basis".into()));
                }
                self.status[old] = self.nonbasic_status(old);
                self.x[old] = match self.status[old] {
                    VarStatus::AtLower => self.lo[old],
                    VarStatus::AtUpper => self.up[old],
                    _ => 0.0,
                };
                self.status[logical] = VarStatus::Basic;
                self.basic[c] = logical;
            }
            self.repairs += 1;
            if self.repairs > 50 {
                return Err(BlendError::Solver("singular basis".into()));
            }
            return self.refactor();
        }
        // Row pivot_row[c] of the reduced inverse is row c of B^-1.
        let mut binv = vec![0.0; m * m];
        for (c, &p) in pivot_row.iter().enumerate() {
            binv[c * m..(c + 1) * m].copy_from_slice(&inv[p * m..(p + 1) * m]);
        }
        self.binv = binv;
        Ok(())
    }

    fn tol_for(&self, bound: f64) -> f64 {
        self.opts.feas_tol * (1.0 + bound.abs())
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lo[j] - self.tol_for(self.lo[j]) {
            self.lo[j] - x
        } else if x > self.up[j] + self.tol_for(self.up[j]) {
            x - self.up[j]
        } else {
            0.0
        }
    }

    fn is_primal_feasible(&self) -> bool {
        self.basic.iter().all(|&j| self.infeasibility(j) == 0.0)
    }

    /// Costs of the basic variables for the current phase.
    fn basic_costs(&self, phase_one: bool) -> Vec<f64> {
        self.basic
            .iter()
            .map(|&j| {
                if phase_one {
                    let x = self.x[j];
                    if x < self.lo[j] - self.tol_for(self.lo[j]) {
                        -1.0
                    } else if x > self.up[j] + self.tol_for(self.up[j]) {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    self.cost[j]
                }
            })
            .collect()
    }

    /// y = c_B' B^-1
    fn duals(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, a) in y.iter_mut().zip(row) {
                    *yi += c * a;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase_one: bool) -> f64 {
        let c = if phase_one { 0.0 } else { self.cost[j] };
        let mut d = c;
        self.for_col(j, |i, v| d -= y[i] * v);
        d
    }

    /// Direction (+1 increase, -1 decrease) a nonbasic variable may move in
    /// to improve the objective, if any.
    fn eligible(&self, j: usize, d: f64) -> Option<f64> {
        let tol = self.opts.opt_tol;
        match self.status[j] {
            VarStatus::Basic => None,
            VarStatus::AtLower if d < -tol && self.up[j] > self.lo[j] => Some(1.0),
            VarStatus::AtUpper if d > tol && self.up[j] > self.lo[j] => Some(-1.0),
            VarStatus::Free if d.abs() > tol => Some(if d < 0.0 { 1.0 } else { -1.0 }),
            _ => None,
        }
    }

    fn column_in_basis(&self, q: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        let mut entries = Vec::new();
        self.for_col(q, |i, v| entries.push((i, v)));
        for (r, out) in alpha.iter_mut().enumerate() {
            let row = &self.binv[r * m..(r + 1) * m];
            *out = entries.iter().map(|&(i, v)| row[i] * v).sum();
        }
        alpha
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for (i, chunk) in before.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (a, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *a -= f * p;
                }
            }
        }
        for (off, chunk) in after.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + off];
            if f != 0.0 {
                for (a, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *a -= f * p;
                }
            }
        }
    }

    fn iterate(&mut self, bland: bool) -> Result<Step> {
        let phase_one = !self.is_primal_feasible();
        let cb = self.basic_costs(phase_one);
        let y = self.duals(&cb);

        let mut entering: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let d = self.reduced_cost(j, &y, phase_one);
            if let Some(dir) = self.eligible(j, d) {
                if bland {
                    entering = Some((j, dir, d));
                    break;
                }
                if entering.map_or(true, |(_, _, best)| d.abs() > best.abs()) {
                    entering = Some((j, dir, d));
                }
            }
        }
        let Some((q, dir, _)) = entering else {
            return Ok(if phase_one { Step::Infeasible } else { Step::Optimal });
        };

        let alpha = self.column_in_basis(q);
        // candidate: (row, exact ratio, harris ratio, target bound)
        let mut cands: Vec<(usize, f64, f64, f64)> = Vec::new();
        for (r, &a) in alpha.iter().enumerate() {
            if a.abs() <= self.opts.pivot_tol {
                continue;
            }
            let j = self.basic[r];
            let rate = -dir * a;
            let x = self.x[j];
            let (lo, up) = (self.lo[j], self.up[j]);
            let below = x < lo - self.tol_for(lo);
            let above = x > up + self.tol_for(up);
            let target = if rate < 0.0 {
                if above {
                    Some(up)
                } else if below {
                    None
                } else if lo.is_finite() {
                    Some(lo)
                } else {
                    None
                }
            } else if below {
                Some(lo)
            } else if above {
                None
            } else if up.is_finite() {
                Some(up)
            } else {
                None
            };
            if let Some(t) = target {
                let dist = ((x - t).abs()).max(0.0);
                let dist = if (rate < 0.0 && x < t) || (rate > 0.0 && x > t) { 0.0 } else { dist };
                cands.push((r, dist / rate.abs(), (dist + self.tol_for(t)) / rate.abs(), t));
            }
        }
        let flip = self.up[q] - self.lo[q];

        let chosen = if bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= min + 1e-12 * (1.0 + min))
                .min_by_key(|c| self.basic[c.0])
                .copied()
        } else {
            let harris = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= harris)
                .max_by(|a, b| alpha[a.0].abs().total_cmp(&alpha[b.0].abs()).then(b.0.cmp(&a.0)))
                .copied()
        };

        match chosen {
            Some((_, ratio, _, _)) if flip.is_finite() && flip <= ratio => self.bound_flip(q, dir, flip, &alpha),
            None if flip.is_finite() => self.bound_flip(q, dir, flip, &alpha),
            None => {
                if phase_one {
                    return Err(BlendError::Solver("phase-one ratio test found no limit".into()));
                }
                Ok(Step::Unbounded)
            }
            Some((r, ratio, _, target)) => {
                let t = ratio.max(0.0);
                self.x[q] += dir * t;
                for (i, &a) in alpha.iter().enumerate() {
                    let j = self.basic[i];
                    self.x[j] -= dir * a * t;
                }
                let leaving = self.basic[r];
                self.x[leaving] = target;
                self.status[leaving] = if target == self.lo[leaving] {
                    VarStatus::AtLower
                } else {
                    VarStatus::AtUpper
                };
                self.status[q] = VarStatus::Basic;
                self.basic[r] = q;
                self.pivot(r, &alpha);
                Ok(Step::Continue { degenerate: t <= 1e-12 })
            }
        }
    }

    fn bound_flip(&mut self, q: usize, dir: f64, flip: f64, alpha: &[f64]) -> Result<Step> {
        for (i, &a) in alpha.iter().enumerate() {
            let j = self.basic[i];
            self.x[j] -= dir * a * flip;
        }
        if dir > 0.0 {
            self.x[q] = self.up[q];
            self.status[q] = VarStatus::AtUpper;
        } else {
            self.x[q] = self.lo[q];
            self.status[q] = VarStatus::AtLower;
        }
        Ok(Step::Continue { degenerate: false })
    }

    fn run(&mut self) -> Result<LpStatus> {
        let limit = self
            .opts
            .max_iterations
            .unwrap_or(200 * (self.m + self.n) + 1000);
        let mut streak = 0usize;
        let mut since_refactor = 0usize;
        let mut confirmations = 0usize;
        loop {
            if self.iterations >= limit {
                return Err(BlendError::Solver(format!(
                    "iteration limit {limit} reached without convergence"
                )));
            }
            let bland = streak >= self.opts.degenerate_streak;
            match self.iterate(bland)? {
                Step::Continue { degenerate } => {
                    self.iterations += 1;
                    streak = if degenerate { streak + 1 } else { 0 };
                    since_refactor += 1;
                    if since_refactor >= self.opts.refactor_every {
                        self.refactor()?;
                        self.compute_basic_values();
                        since_refactor = 0;
                    }
                }
                terminal => {
                    // Confirm on a fresh factorization before reporting.
                    if since_refactor > 0 {
                        self.refactor()?;
                        self.compute_basic_values();
                        since_refactor = 0;
                        confirmations += 1;
                        if confirmations < 20 {
                            continue;
                        }
                    }
                    return Ok(match terminal {
                        Step::Optimal => LpStatus::Optimal,
                        Step::Infeasible => LpStatus::Infeasible,
                        Step::Unbounded => LpStatus::Unbounded,
                        Step::Continue { .. } => unreachable!(),
                    });
                }
            }
        }
    }

    fn extract(&self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        let (n, m) = (self.n, self.m);
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let v = self.x[j] * self.col_scale[j];
                v.clamp(lp.lower[j], lp.upper[j])
            })
            .collect();
        let sign = match lp.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        let (duals, reduced_costs) = if status == LpStatus::Optimal {
            let cb = self.basic_costs(false);
            let y = self.duals(&cb);
            let duals = (0..m).map(|i| sign * y[i] * self.row_scale[i] / self.obj_scale).collect();
            let rc = (0..n)
                .map(|j| {
                    if self.status[j] == VarStatus::Basic {
                        0.0
                    } else {
                        sign * self.reduced_cost(j, &y, false) / (self.obj_scale * self.col_scale[j])
                    }
                })
                .collect();
            (duals, rc)
        } else {
            (vec![0.0; m], vec![0.0; n])
        };
        let objective = lp.objective_value(&x);
        LpSolution {
            status,
            x,
            duals,
            reduced_costs,
            objective,
            iterations: self.iterations,
            basis: Some(Basis { status: self.status.clone() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{Direction, LinearProgram, LpStatus, Sense};

    #[test]
    fn maximize_single_bound() {
        let mut lp = LinearProgram::new(Direction::Maximize);
        let x = lp.add_var("x", 1.0, 0.0, f64::INFINITY);
        lp.add_row("cap", vec![(x, 1.0)], Sense::Le, 3.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_pair() {
        let mut lp = LinearProgram::new(Direction::Minimize);
        let x = lp.add_var("x", 1.0, 0.0, f64::INFINITY);
        lp.add_row("neg", vec![(x, 1.0)], Sense::Le, -1.0);
        lp.add_row("pos", vec![(x, 1.0)], Sense::Ge, 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(Direction::Maximize);
        let x = lp.add_var("x", 1.0, 0.0, f64::INFINITY);
        let y = lp.add_var("y", 0.0, 0.0, f64::INFINITY);
        lp.add_row("r", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_only() {
        let mut lp = LinearProgram::new(Direction::Minimize);
        lp.add_var("x", -2.0, 1.0, 4.0);
        lp.add_var("y", 3.0, -1.0, 5.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.x, vec![4.0, -1.0]);
        assert!((sol.objective + 11.0).abs() < 1e-12);
        assert_eq!(sol.reduced_costs, vec![-2.0, 3.0]);
    }

    #[test]
    fn equality_and_ge_rows_with_duals() {
        // min 2x + 3y  s.t. x + y = 4, x - y >= 1, x <= 3
        let mut lp = LinearProgram::new(Direction::Minimize);
        let x = lp.add_var("x", 2.0, 0.0, 3.0);
        let y = lp.add_var("y", 3.0, 0.0, f64::INFINITY);
        lp.add_row("sum", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
        lp.add_row("diff", vec![(x, 1.0), (y, -1.0)], Sense::Ge, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 9.0).abs() < 1e-9);
        // raising the sum by one buys one more y
        assert!((sol.duals[0] - 3.0).abs() < 1e-9);
        assert!(sol.duals[1].abs() < 1e-9);
        // x at its upper bound is worth 2 - 3 = -1 per unit
        assert!((sol.reduced_costs[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let mut lp = LinearProgram::new(Direction::Minimize);
        let vars: Vec<usize> = (0..6).map(|j| lp.add_var(format!("x{j}"), 1.0 + j as f64, 0.0, 10.0)).collect();
        lp.add_row("demand", vars.iter().map(|&j| (j, 1.0)).collect(), Sense::Ge, 25.0);
        let cold = solve_lp(&lp).unwrap();
        lp.objective[5] = 0.5;
        let warm = solve_lp_with(&lp, &SolverOptions::default(), cold.basis.as_ref()).unwrap();
        let fresh = solve_lp(&lp).unwrap();
        assert!((warm.objective - fresh.objective).abs() < 1e-9);
    }
}
