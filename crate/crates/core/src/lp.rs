//! Dense bounded-variable primal simplex for the LP relaxation.
//!
//! Every row gets a slack (`+s` for `<=`, `-s` for `>=`). Structural columns
//! start non-basic at their lower bound; rows whose slack cannot absorb the
//! residual get an artificial column and phase 1 drives those to zero.
//! Pricing is Dantzig's rule until 50 consecutive degenerate pivots, then
//! Bland's rule until the objective moves again.

use thiserror::Error;

use crate::system::{rational_to_f64, ConstraintSystem, Sense};

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    pub max_iterations: usize,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub bland_after: usize,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_iterations: 100_000,
            bland_after: 50,
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural column values (meaningful when `Optimal`).
    pub values: Vec<f64>,
    /// Objective including the system's constant offset.
    pub objective: f64,
    pub iterations: usize,
    /// Basic columns at termination, sorted. Indices `>= num_columns` are
    /// slacks (`num_columns + row`) or artificials.
    pub basis: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex exceeded {iterations} iterations")]
    CycleLimit { iterations: usize },
    #[error("expected {expected} bound pairs, got {got}")]
    BoundCount { expected: usize, got: usize },
    #[error("column {column} has bounds [{lower}, {upper}]")]
    BadBounds { column: usize, lower: f64, upper: f64 },
}

pub fn solve_lp(sys: &ConstraintSystem) -> Result<LpSolution, LpError> {
    LpSolver::default().solve(sys)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LpSolver {
    pub options: LpOptions,
}

impl LpSolver {
    pub fn new(options: LpOptions) -> Self {
        LpSolver { options }
    }

    pub fn solve(&self, sys: &ConstraintSystem) -> Result<LpSolution, LpError> {
        let bounds: Vec<(f64, f64)> =
            sys.bounds.iter().map(|(l, u)| (rational_to_f64(l), rational_to_f64(u))).collect();
        self.solve_with_bounds(sys, &bounds)
    }

    /// Solves with the system's column bounds replaced by `bounds`.
    pub fn solve_with_bounds(&self, sys: &ConstraintSystem, bounds: &[(f64, f64)]) -> Result<LpSolution, LpError> {
        if bounds.len() != sys.num_columns {
            return Err(LpError::BoundCount { expected: sys.num_columns, got: bounds.len() });
        }
        for (column, &(lower, upper)) in bounds.iter().enumerate() {
            if !lower.is_finite() || !upper.is_finite() || lower > upper {
                return Err(LpError::BadBounds { column, lower, upper });
            }
        }
        let mut tab = Tableau::build(sys, bounds, &self.options);
        let mut iterations = 0;

        if tab.num_artificial > 0 {
            tab.set_phase_one_costs();
            tab.run(&self.options, &mut iterations)?;
            let infeasibility: f64 = (0..tab.m)
                .filter(|&i| tab.basis[i] >= tab.first_artificial)
                .map(|i| tab.beta[i].max(0.0))
                .sum();
            if infeasibility > self.options.feasibility_tol {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    values: tab.structural_values(),
                    objective: f64::NAN,
                    iterations,
                    basis: tab.sorted_basis(),
                });
            }
            tab.retire_artificials(&self.options);
        }

        tab.set_costs(sys);
        let outcome = tab.run(&self.options, &mut iterations)?;
        let values = tab.structural_values();
        let status = match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Unbounded => LpStatus::Unbounded,
        };
        let objective = if status == LpStatus::Optimal { sys.objective_f64(&values) } else { f64::NEG_INFINITY };
        Ok(LpSolution { status, values, objective, iterations, basis: tab.sorted_basis() })
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    n: usize,
    ncols: usize,
    first_artificial: usize,
    num_artificial: usize,
    /// Row-major `B^-1 A`, `m x ncols`.
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
}

impl Tableau {
    fn build(sys: &ConstraintSystem, bounds: &[(f64, f64)], opts: &LpOptions) -> Self {
        let m = sys.rows.len();
        let n = sys.num_columns;
        let mut residual = Vec::with_capacity(m);
        let mut slack_sign = Vec::with_capacity(m);
        for row in &sys.rows {
            let at_lower: f64 = row.terms.iter().map(|(c, a)| rational_to_f64(a) * bounds[*c].0).sum();
            residual.push(rational_to_f64(&row.rhs) - at_lower);
            slack_sign.push(if row.sense == Sense::Le { 1.0 } else { -1.0 });
        }
        let needs_artificial: Vec<bool> = (0..m)
            .map(|i| residual[i] * slack_sign[i] < -opts.feasibility_tol * 1e-3)
            .collect();
        let num_artificial = needs_artificial.iter().filter(|&&b| b).count();
        let first_artificial = n + m;
        let ncols = n + m + num_artificial;

        let mut t = vec![0.0; m * ncols];
        let mut beta = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut is_basic = vec![false; ncols];
        let mut next_art = first_artificial;
        for (i, row) in sys.rows.iter().enumerate() {
            let r = &mut t[i * ncols..(i + 1) * ncols];
            for (c, a) in &row.terms {
                r[*c] = rational_to_f64(a);
            }
            r[n + i] = slack_sign[i];
            let scale = if needs_artificial[i] {
                r[next_art] = residual[i].signum();
                basis[i] = next_art;
                next_art += 1;
                residual[i].signum()
            } else {
                basis[i] = n + i;
                slack_sign[i]
            };
            for v in r.iter_mut() {
                *v /= scale;
            }
            beta[i] = (residual[i] / scale).max(0.0);
            is_basic[basis[i]] = true;
        }

        let mut lower = vec![0.0; ncols];
        let mut upper = vec![f64::INFINITY; ncols];
        for (j, &(l, u)) in bounds.iter().enumerate() {
            lower[j] = l;
            upper[j] = u;
        }
        Tableau {
            m,
            n,
            ncols,
            first_artificial,
            num_artificial,
            t,
            beta,
            basis,
            is_basic,
            lower,
            upper,
            at_upper: vec![false; ncols],
            cost: vec![0.0; ncols],
            reduced: vec![0.0; ncols],
        }
    }

    fn set_phase_one_costs(&mut self) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        for j in self.first_artificial..self.ncols {
            self.cost[j] = 1.0;
        }
        self.price();
    }

    fn set_costs(&mut self, sys: &ConstraintSystem) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        for (j, c) in sys.objective.iter().enumerate() {
            self.cost[j] = rational_to_f64(c);
        }
        self.price();
    }

    /// Recomputes reduced costs `c_j - c_B B^-1 a_j` from scratch.
    fn price(&mut self) {
        self.reduced.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            for (d, a) in self.reduced.iter_mut().zip(row) {
                *d -= cb * a;
            }
        }
        for i in 0..self.m {
            self.reduced[self.basis[i]] = 0.0;
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            self.lower[j]
        }
    }

    fn choose_entering(&self, bland: bool, tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            if self.is_basic[j] || self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            let d = self.reduced[j];
            let (eligible, dir) = if self.at_upper[j] { (d > tol, -1.0) } else { (d < -tol, 1.0) };
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, score)| d.abs() > score) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn run(&mut self, opts: &LpOptions, iterations: &mut usize) -> Result<Outcome, LpError> {
        let mut degenerate_streak = 0usize;
        loop {
            let bland = degenerate_streak >= opts.bland_after;
            let Some((q, dir)) = self.choose_entering(bland, opts.optimality_tol) else {
                return Ok(Outcome::Optimal);
            };
            if *iterations >= opts.max_iterations {
                return Err(LpError::CycleLimit { iterations: *iterations });
            }
            *iterations += 1;

            // Step length limited by the entering column's own range and by
            // every basic variable reaching a bound.
            let mut theta = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.t[i * self.ncols + q];
                if alpha.abs() <= opts.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * alpha;
                let (limit, to_upper) = if rate < 0.0 {
                    ((self.beta[i] - self.lower[b]).max(0.0) / -rate, false)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[i]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                // On ties a bound flip wins over a pivot; between pivots Bland
                // takes the lowest basic index, Dantzig the largest |alpha|.
                let better = if limit < theta - 1e-12 {
                    true
                } else if limit <= theta + 1e-12 {
                    match leave {
                        None => false,
                        Some((r, _)) if bland => b < self.basis[r],
                        Some(_) => alpha.abs() > leave_alpha,
                    }
                } else {
                    false
                };
                if better {
                    theta = limit.min(theta);
                    leave = Some((i, to_upper));
                    leave_alpha = alpha.abs();
                }
            }
            if !theta.is_finite() {
                return Ok(Outcome::Unbounded);
            }

            if theta <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            for i in 0..self.m {
                let alpha = self.t[i * self.ncols + q];
                if alpha != 0.0 {
                    self.beta[i] -= dir * alpha * theta;
                }
            }
            match leave {
                None => {
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let entering_value = self.nonbasic_value(q) + dir * theta;
                    let p = self.basis[r];
                    self.pivot(r, q);
                    self.is_basic[p] = false;
                    self.at_upper[p] = to_upper;
                    self.is_basic[q] = true;
                    self.basis[r] = q;
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        for other in before.chunks_exact_mut(nc).chain(after.chunks_exact_mut(nc)) {
            let f = other[q];
            if f == 0.0 {
                continue;
            }
            for (v, p) in other.iter_mut().zip(prow.iter()) {
                if *p != 0.0 {
                    *v -= f * p;
                    if v.abs() < 1e-13 {
                        *v = 0.0;
                    }
                }
            }
            other[q] = 0.0;
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (d, p) in self.reduced.iter_mut().zip(prow.iter()) {
                *d -= f * p;
            }
        }
        self.reduced[q] = 0.0;
    }

    /// After phase 1: pin artificials to zero and pivot basic ones out where a
    /// non-artificial column can replace them. Rows where none can are
    /// redundant and keep their (fixed) artificial.
    fn retire_artificials(&mut self, opts: &LpOptions) {
        for j in self.first_artificial..self.ncols {
            self.upper[j] = 0.0;
            self.lower[j] = 0.0;
            self.at_upper[j] = false;
        }
        for r in 0..self.m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
            let candidate = (0..self.first_artificial)
                .filter(|&j| !self.is_basic[j] && row[j].abs() > opts.feasibility_tol)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()));
            if let Some(q) = candidate {
                let p = self.basis[r];
                let value = self.nonbasic_value(q);
                self.pivot(r, q);
                self.is_basic[p] = false;
                self.is_basic[q] = true;
                self.basis[r] = q;
                self.beta[r] = value;
            }
        }
    }

    fn structural_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n).map(|j| self.nonbasic_value(j)).collect();
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n {
                x[b] = self.beta[i].clamp(self.lower[b], self.upper[b]);
            }
        }
        x
    }

    fn sorted_basis(&self) -> Vec<usize> {
        let mut b = self.basis.clone();
        b.sort_unstable();
        b
    }
}

/// Result of an integrality check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrality {
    pub integral: bool,
    /// Most fractional column and its distance to {0, 1}.
    pub worst: Option<(usize, f64)>,
}

/// Whether every value is within `tol` of 0 or 1.
pub fn is_integral(sol: &LpSolution, tol: f64) -> Integrality {
    let worst = sol
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| (j, v.abs().min((v - 1.0).abs())))
        .fold(None, |acc: Option<(usize, f64)>, (j, d)| match acc {
            Some((_, best)) if best >= d => acc,
            _ => Some((j, d)),
        });
    Integrality { integral: worst.is_none_or(|(_, d)| d <= tol), worst }
}
