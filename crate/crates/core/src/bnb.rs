//! Best-first branch-and-bound over 0/1 columns.
//!
//! Nodes fix columns through their bounds and are re-solved from scratch with
//! the simplex. Candidate incumbents are re-checked exactly against every row
//! before they are accepted, so the returned objective is exact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::lp::{is_integral, LpError, LpSolver, LpStatus};
use crate::system::{rational_to_f64, ConstraintSystem, Rational};
use crate::INTEGRALITY_TOL;

#[derive(Clone, Copy, Debug)]
pub struct BranchOptions {
    pub node_limit: usize,
    /// Discard nodes whose relaxation cannot beat the incumbent. Disabling it
    /// explores every LP-feasible node and exists to check pruning.
    pub prune: bool,
    pub lp: LpSolver,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions { node_limit: 1_000_000, prune: true, lp: LpSolver::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpSolution {
    pub status: IpStatus,
    pub values: Vec<u8>,
    /// Exact objective including the offset; meaningless when infeasible.
    pub objective: Rational,
    pub nodes_explored: usize,
    pub lp_was_integral: bool,
    /// Root relaxation objective, `None` when the root LP is infeasible.
    pub root_bound: Option<f64>,
    /// Smallest LP objective seen at any explored node.
    pub min_node_bound: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IpError {
    #[error("branch-and-bound explored {explored} nodes without finishing")]
    NodeLimit { explored: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub fn solve_ip(sys: &ConstraintSystem) -> Result<IpSolution, IpError> {
    solve_ip_with(sys, &BranchOptions::default())
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    bounds: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap pops the maximum: lowest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

pub fn solve_ip_with(sys: &ConstraintSystem, opts: &BranchOptions) -> Result<IpSolution, IpError> {
    let root_bounds: Vec<(f64, f64)> =
        sys.bounds.iter().map(|(l, u)| (rational_to_f64(l), rational_to_f64(u))).collect();
    let root = opts.lp.solve_with_bounds(sys, &root_bounds)?;
    let mut nodes_explored = 1;

    let infeasible = |nodes_explored, root_bound, min_node_bound| IpSolution {
        status: IpStatus::Infeasible,
        values: Vec::new(),
        objective: Rational::from_integer(0),
        nodes_explored,
        lp_was_integral: false,
        root_bound,
        min_node_bound,
    };

    if root.status != LpStatus::Optimal {
        return Ok(infeasible(nodes_explored, None, f64::INFINITY));
    }
    let root_bound = root.objective;
    let lp_was_integral = is_integral(&root, INTEGRALITY_TOL).integral;
    if lp_was_integral {
        let values = round(&root.values);
        if sys.is_feasible_binary(&values) {
            return Ok(IpSolution {
                status: IpStatus::Optimal,
                objective: sys.objective_binary(&values),
                values,
                nodes_explored,
                lp_was_integral,
                root_bound: Some(root_bound),
                min_node_bound: root_bound,
            });
        }
    }

    let mut incumbent: Option<(Vec<u8>, Rational)> = None;
    let mut min_node_bound = root_bound;
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    branch(&mut heap, &mut seq, &root.values, root_bound, 0, &root_bounds);

    while let Some(node) = heap.pop() {
        if opts.prune && cannot_improve(node.bound, &incumbent) {
            continue;
        }
        if nodes_explored >= opts.node_limit {
            return Err(IpError::NodeLimit { explored: nodes_explored });
        }
        let sol = opts.lp.solve_with_bounds(sys, &node.bounds)?;
        nodes_explored += 1;
        if sol.status != LpStatus::Optimal {
            continue;
        }
        min_node_bound = min_node_bound.min(sol.objective);
        if opts.prune && cannot_improve(sol.objective, &incumbent) {
            continue;
        }
        if is_integral(&sol, INTEGRALITY_TOL).integral {
            let values = round(&sol.values);
            if sys.is_feasible_binary(&values) {
                let obj = sys.objective_binary(&values);
                if incumbent.as_ref().is_none_or(|(_, best)| obj < *best) {
                    incumbent = Some((values, obj));
                }
                continue;
            }
        }
        branch(&mut heap, &mut seq, &sol.values, sol.objective, node.depth + 1, &node.bounds);
    }

    Ok(match incumbent {
        Some((values, objective)) => IpSolution {
            status: IpStatus::Optimal,
            values,
            objective,
            nodes_explored,
            lp_was_integral,
            root_bound: Some(root_bound),
            min_node_bound,
        },
        None => infeasible(nodes_explored, Some(root_bound), min_node_bound),
    })
}

fn cannot_improve(bound: f64, incumbent: &Option<(Vec<u8>, Rational)>) -> bool {
    match incumbent {
        Some((_, best)) => bound >= rational_to_f64(best) - 1e-9,
        None => false,
    }
}

fn round(values: &[f64]) -> Vec<u8> {
    values.iter().map(|v| (v.round() as i64).clamp(0, 1) as u8).collect()
}

/// Pushes the two children of the most fractional free column (lowest index on
/// ties). A node whose values are all integral but exactly infeasible is split
/// on its first free column instead.
fn branch(
    heap: &mut BinaryHeap<Node>,
    seq: &mut usize,
    values: &[f64],
    bound: f64,
    depth: usize,
    bounds: &[(f64, f64)],
) {
    let free = |j: &usize| bounds[*j].0 < bounds[*j].1;
    let mut pick: Option<(usize, f64)> = None;
    for j in (0..values.len()).filter(free) {
        let d = values[j].abs().min((values[j] - 1.0).abs());
        if pick.is_none_or(|(_, best)| d > best) {
            pick = Some((j, d));
        }
    }
    let Some((col, _)) = pick else { return };
    for fix in [0.0, 1.0] {
        let mut child = bounds.to_vec();
        child[col] = (fix, fix);
        heap.push(Node { bound, depth, seq: *seq, bounds: child });
        *seq += 1;
    }
}
