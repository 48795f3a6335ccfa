//! Solving only the flights that are in conflict.
//!
//! Start from the undelayed schedule, collect the flights involved in any
//! capacity or turnaround violation (the set X), and solve the program for X
//! alone while every other flight stays frozen on its trajectory and uses
//! capacity as a constant. Re-check, grow X, repeat. When X swallows every
//! flight the full program is solved instead.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bnb::{solve_ip_with, BranchOptions, IpError, IpStatus};
use crate::formulation::{
    assignment_from_schedule, extract_schedule, formulate, ExtractError, FlightSchedule, FormulationError,
    ScheduleSet,
};
use crate::model::{validate_instance, SectorId, Time, ValidatedInstance, ValidationError, Window};
use crate::system::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConflictKind {
    Departure,
    Arrival,
    Sector,
    Turnaround,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evidence {
    pub kind: ConflictKind,
    pub resource: SectorId,
    pub time: Time,
    /// Every flight using the resource at that time; for turnarounds the
    /// incoming flight then the outgoing one.
    pub flights: Vec<String>,
    /// Capacity that was exceeded (`None` for turnarounds).
    pub capacity: Option<u32>,
    /// Flights using the resource, or for turnarounds the periods missing.
    pub demand: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictSet {
    /// Flights named in some piece of evidence, in instance order.
    pub in_conflict: Vec<String>,
    /// Everyone else.
    pub clear: Vec<String>,
    pub evidence: Vec<Evidence>,
}

/// Checks capacities and turnarounds against fixed trajectories, one per
/// flight in instance order.
pub fn detect_conflicts(inst: &ValidatedInstance, schedule: &[FlightSchedule]) -> ConflictSet {
    assert_eq!(schedule.len(), inst.flights.len(), "one trajectory per flight");
    let mut evidence = Vec::new();
    let mut usage: BTreeMap<(usize, Time, ConflictKind), Vec<usize>> = BTreeMap::new();
    for (fi, (f, s)) in inst.flights.iter().zip(schedule).enumerate() {
        let times = &s.sector_times;
        usage.entry((inst.sector_index(f.departure_airport()), times[0], ConflictKind::Departure)).or_default().push(fi);
        usage
            .entry((inst.sector_index(f.arrival_airport()), times[times.len() - 1], ConflictKind::Arrival))
            .or_default()
            .push(fi);
        for pos in 0..f.path.len() - 1 {
            let j = inst.sector_index(&f.path[pos]);
            for t in times[pos]..times[pos + 1] {
                usage.entry((j, t, ConflictKind::Sector)).or_default().push(fi);
            }
        }
    }
    for ((k, t, kind), users) in &usage {
        if *t < 1 || *t > inst.horizon {
            continue;
        }
        let sector = &inst.sectors[*k];
        let cap = match kind {
            ConflictKind::Departure => inst.capacities.departure(sector, *t),
            ConflictKind::Arrival => inst.capacities.arrival(sector, *t),
            _ => inst.capacities.occupancy(sector, *t),
        };
        if let Some(c) = cap.limit() {
            if users.len() > c as usize {
                evidence.push(Evidence {
                    kind: *kind,
                    resource: sector.clone(),
                    time: *t,
                    flights: users.iter().map(|&f| inst.flights[f].id.clone()).collect(),
                    capacity: Some(c),
                    demand: users.len() as u32,
                });
            }
        }
    }
    for &(pred, succ) in inst.continuation_pairs() {
        let p = &inst.flights[pred];
        let ready = schedule[pred].actual_arrival + p.turnaround as Time;
        let dep = schedule[succ].actual_departure;
        if dep < ready {
            evidence.push(Evidence {
                kind: ConflictKind::Turnaround,
                resource: p.arrival_airport().clone(),
                time: dep,
                flights: vec![p.id.clone(), inst.flights[succ].id.clone()],
                capacity: None,
                demand: (ready - dep) as u32,
            });
        }
    }
    evidence.sort_by(|a, b| (a.kind, a.time, &a.resource).cmp(&(b.kind, b.time, &b.resource)));

    let mut flagged = vec![false; inst.flights.len()];
    for e in &evidence {
        for id in &e.flights {
            if let Some(i) = inst.flight_index(id) {
                flagged[i] = true;
            }
        }
    }
    let (in_conflict, clear) = split_ids(inst, &flagged);
    ConflictSet { in_conflict, clear, evidence }
}

fn split_ids(inst: &ValidatedInstance, member: &[bool]) -> (Vec<String>, Vec<String>) {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (f, &m) in inst.flights.iter().zip(member) {
        if m {
            inside.push(f.id.clone());
        } else {
            outside.push(f.id.clone());
        }
    }
    (inside, outside)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// |X| after this iteration's transfers.
    pub x_size: usize,
    /// Objective of the program solved this iteration, if one was solved.
    pub objective: Option<Rational>,
    /// Flights moved from Y into X this iteration.
    pub transfers: Vec<String>,
    /// Evidence entries found at the start of the iteration.
    pub conflicts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionTrace {
    pub iterations: Vec<IterationRecord>,
    pub final_schedule: ScheduleSet,
    pub in_conflict: Vec<String>,
    pub converged: bool,
    pub collapsed_to_full: bool,
    /// Optimum of the full program, when requested.
    pub oracle_objective: Option<Rational>,
}

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("no conflict-free schedule after {} iterations", .trace.iterations.len())]
    NonConvergence { trace: Box<DecompositionTrace> },
    #[error("subproblem over {flights:?} is infeasible and no frozen flight can be released")]
    InfeasibleSubproblem { flights: Vec<String> },
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Ip(#[from] IpError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DecompositionOptions {
    /// Defaults to the number of flights plus one.
    pub max_iters: Option<usize>,
    /// Also solve the full program and record its objective.
    pub oracle: bool,
    pub branch: BranchOptions,
}

enum Sub {
    Solved(ScheduleSet, Rational),
    Infeasible,
}

/// Solves the program with every flight outside `free` pinned to its
/// trajectory by singleton windows.
fn solve_restricted(
    inst: &ValidatedInstance,
    free: &[bool],
    trajectories: &[FlightSchedule],
    branch: &BranchOptions,
) -> Result<Sub, DecompositionError> {
    let mut raw = inst.instance().clone();
    for ((f, &is_free), traj) in raw.flights.iter_mut().zip(free).zip(trajectories) {
        if !is_free {
            f.windows = traj.sector_times.iter().map(|&t| Some(Window::new(t, t))).collect();
        }
    }
    let restricted = validate_instance(raw)?;
    let form = match formulate(&restricted) {
        Ok(f) => f,
        Err(FormulationError::InfeasibleConstruction { .. }) => return Ok(Sub::Infeasible),
        Err(e) => return Err(e.into()),
    };
    let ip = solve_ip_with(&form.system, branch)?;
    if ip.status == IpStatus::Infeasible {
        return Ok(Sub::Infeasible);
    }
    let values: Vec<f64> = ip.values.iter().map(|&v| v as f64).collect();
    let schedule = extract_schedule(&restricted, &form.vars, &form.system, &values)?;
    Ok(Sub::Solved(schedule, ip.objective))
}

/// Frozen flights that share a sector or a continuation with a free one.
fn blocking_flights(inst: &ValidatedInstance, free: &[bool]) -> Vec<usize> {
    let mut out = Vec::new();
    for (yi, y) in inst.flights.iter().enumerate() {
        if free[yi] {
            continue;
        }
        let shares_sector = inst
            .flights
            .iter()
            .enumerate()
            .filter(|(xi, _)| free[*xi])
            .any(|(_, x)| x.path.iter().any(|s| y.path.contains(s)));
        let linked = inst
            .continuation_pairs()
            .iter()
            .any(|&(p, s)| (p == yi && free[s]) || (s == yi && free[p]));
        if shares_sector || linked {
            out.push(yi);
        }
    }
    out
}

fn full_solve(inst: &ValidatedInstance, branch: &BranchOptions) -> Result<Option<(ScheduleSet, Rational)>, DecompositionError> {
    let all = vec![true; inst.flights.len()];
    let scheduled: Vec<FlightSchedule> = inst.flights.iter().map(FlightSchedule::scheduled).collect();
    Ok(match solve_restricted(inst, &all, &scheduled, branch)? {
        Sub::Solved(s, obj) => Some((s, obj)),
        Sub::Infeasible => None,
    })
}

pub fn iterative_solve(
    inst: &ValidatedInstance,
    opts: &DecompositionOptions,
) -> Result<DecompositionTrace, DecompositionError> {
    let n = inst.flights.len();
    let max_iters = opts.max_iters.unwrap_or(n + 1);
    let mut in_x = vec![false; n];
    let mut trajectories: Vec<FlightSchedule> = inst.flights.iter().map(FlightSchedule::scheduled).collect();
    let mut iterations = Vec::new();
    let mut converged = false;
    let mut collapsed = false;

    for _ in 0..max_iters {
        let conflicts = detect_conflicts(inst, &trajectories);
        let mut transfers = Vec::new();
        for id in &conflicts.in_conflict {
            let i = inst.flight_index(id).expect("known flight");
            if !in_x[i] {
                in_x[i] = true;
                transfers.push(id.clone());
            }
        }
        let conflict_count = conflicts.evidence.len();
        let x_size = in_x.iter().filter(|&&b| b).count();
        if conflict_count == 0 {
            iterations.push(IterationRecord { x_size, objective: None, transfers, conflicts: 0 });
            converged = true;
            break;
        }
        if x_size == n {
            let Some((schedule, obj)) = full_solve(inst, &opts.branch)? else {
                return Err(DecompositionError::InfeasibleSubproblem { flights: split_ids(inst, &in_x).0 });
            };
            trajectories = schedule.flights;
            iterations.push(IterationRecord { x_size, objective: Some(obj), transfers, conflicts: conflict_count });
            converged = true;
            collapsed = true;
            break;
        }
        match solve_restricted(inst, &in_x, &trajectories, &opts.branch)? {
            Sub::Solved(schedule, obj) => {
                trajectories = schedule.flights;
                iterations.push(IterationRecord {
                    x_size,
                    objective: Some(obj),
                    transfers,
                    conflicts: conflict_count,
                });
            }
            Sub::Infeasible => {
                let blockers = blocking_flights(inst, &in_x);
                if blockers.is_empty() {
                    return Err(DecompositionError::InfeasibleSubproblem { flights: split_ids(inst, &in_x).0 });
                }
                for b in blockers {
                    in_x[b] = true;
                    transfers.push(inst.flights[b].id.clone());
                }
                iterations.push(IterationRecord {
                    x_size: in_x.iter().filter(|&&b| b).count(),
                    objective: None,
                    transfers,
                    conflicts: conflict_count,
                });
            }
        }
    }

    let oracle_objective = if opts.oracle { full_solve(inst, &opts.branch)?.map(|(_, obj)| obj) } else { None };
    let trace = DecompositionTrace {
        iterations,
        final_schedule: ScheduleSet::new(trajectories),
        in_conflict: split_ids(inst, &in_x).0,
        converged,
        collapsed_to_full: collapsed,
        oracle_objective,
    };
    if converged {
        Ok(trace)
    } else {
        Err(DecompositionError::NonConvergence { trace: Box::new(trace) })
    }
}

/// Descriptions of every full-instance row the schedule violates; empty when
/// the schedule is feasible.
pub fn verify_full_schedule(
    inst: &ValidatedInstance,
    schedule: &[FlightSchedule],
) -> Result<Vec<String>, FormulationError> {
    let form = formulate(inst)?;
    let x = match assignment_from_schedule(inst, &form.vars, schedule) {
        Ok(x) => x,
        Err(e) => return Ok(vec![e.to_string()]),
    };
    Ok(form.system.violated_rows(&x).into_iter().map(|i| form.system.rows[i].tag.describe(inst)).collect())
}
