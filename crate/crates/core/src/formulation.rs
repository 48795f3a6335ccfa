//! The arrives-by 0/1 program: columns, rows, objective and the way back from
//! column values to flight schedules.
//!
//! A column stands for `w[f, j, t] = 1` iff flight `f` has reached sector `j`
//! by the end of period `t`. Only times inside the flight's window at `j` get a
//! column, and the last window time is fixed to 1 instead. Outside its window
//! `w` is the constant 0 (before) or 1 (after).

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::{Flight, Time, ValidatedInstance, Window};
use crate::system::{rational_to_f64, ConstraintSystem, Rational, RowTag, Sense};
use crate::INTEGRALITY_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarKey {
    pub flight: usize,
    /// Position in the flight's path.
    pub position: usize,
    pub time: Time,
}

/// Value of `w` at some (flight, position, time): a constant or a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Const(i64),
    Var(usize),
}

#[derive(Clone, Debug)]
pub struct VariableMap {
    columns: Vec<VarKey>,
    index: HashMap<VarKey, usize>,
    fixed: BTreeMap<VarKey, u8>,
    windows: Vec<Vec<Window>>,
    blocks: Vec<Vec<Range<usize>>>,
}

impl VariableMap {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn key(&self, column: usize) -> VarKey {
        self.columns[column]
    }

    pub fn column(&self, key: &VarKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn keys(&self) -> &[VarKey] {
        &self.columns
    }

    /// Eliminated variables with their constant value.
    pub fn fixed(&self) -> &BTreeMap<VarKey, u8> {
        &self.fixed
    }

    pub fn window(&self, flight: usize, position: usize) -> Window {
        self.windows[flight][position]
    }

    /// Columns of one (flight, position) pair, in time order.
    pub fn block(&self, flight: usize, position: usize) -> Range<usize> {
        self.blocks[flight][position].clone()
    }

    pub fn value(&self, flight: usize, position: usize, t: Time) -> Term {
        let w = self.windows[flight][position];
        if t < w.first {
            Term::Const(0)
        } else if t >= w.last {
            Term::Const(1)
        } else {
            Term::Var(self.blocks[flight][position].start + (t - w.first) as usize)
        }
    }
}

/// One column per window time except the last, ordered by flight, path
/// position, then time.
pub fn build_variables(inst: &ValidatedInstance) -> VariableMap {
    let mut columns = Vec::new();
    let mut index = HashMap::new();
    let mut fixed = BTreeMap::new();
    let mut windows = Vec::with_capacity(inst.flights.len());
    let mut blocks = Vec::with_capacity(inst.flights.len());
    for (fi, f) in inst.flights.iter().enumerate() {
        let mut fw = Vec::with_capacity(f.path.len());
        let mut fb = Vec::with_capacity(f.path.len());
        for pos in 0..f.path.len() {
            let w = f.window(pos);
            let start = columns.len();
            for t in w.first..w.last {
                let key = VarKey { flight: fi, position: pos, time: t };
                index.insert(key, columns.len());
                columns.push(key);
            }
            fixed.insert(VarKey { flight: fi, position: pos, time: w.last }, 1);
            fw.push(w);
            fb.push(start..columns.len());
        }
        windows.push(fw);
        blocks.push(fb);
    }
    VariableMap { columns, index, fixed, windows, blocks }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulationError {
    #[error("infeasible by construction: row {row} reduces to {lhs} {sense} {rhs}")]
    InfeasibleConstruction { row: String, lhs: i64, sense: &'static str, rhs: i64 },
    #[error("flight {flight}: time {time} at {sector} lies outside its window {first}..{last}")]
    OutsideWindow { flight: String, sector: String, time: Time, first: Time, last: Time },
}

#[derive(Default)]
struct LinExpr {
    terms: BTreeMap<usize, i64>,
    constant: i64,
}

impl LinExpr {
    fn add(&mut self, term: Term, coef: i64) {
        match term {
            Term::Const(c) => self.constant += coef * c,
            Term::Var(col) => *self.terms.entry(col).or_insert(0) += coef,
        }
    }
}

/// Emits `expr (sense) rhs` with constants moved to the right. Constant rows
/// are dropped when they hold and rejected when they do not.
fn push_row(
    inst: &ValidatedInstance,
    sys: &mut ConstraintSystem,
    expr: LinExpr,
    sense: Sense,
    rhs: i64,
    tag: RowTag,
) -> Result<(), FormulationError> {
    let terms: Vec<(usize, Rational)> = expr
        .terms
        .into_iter()
        .filter(|(_, a)| *a != 0)
        .map(|(c, a)| (c, Rational::from_integer(a)))
        .collect();
    let rhs = rhs - expr.constant;
    if terms.is_empty() {
        let holds = match sense {
            Sense::Le => 0 <= rhs,
            Sense::Ge => 0 >= rhs,
        };
        if holds {
            return Ok(());
        }
        return Err(FormulationError::InfeasibleConstruction {
            row: tag.describe(inst),
            lhs: expr.constant,
            sense: if sense == Sense::Le { "<=" } else { ">=" },
            rhs: rhs + expr.constant,
        });
    }
    sys.add_row(terms, sense, Rational::from_integer(rhs), tag);
    Ok(())
}

/// Builds rows, bounds and objective. Row order is departure capacity,
/// arrival capacity, sector capacity, transit, turnaround, monotonicity; inside
/// a family by sector or flight, then time.
pub fn build_system(inst: &ValidatedInstance, vars: &VariableMap) -> Result<ConstraintSystem, FormulationError> {
    let mut sys = ConstraintSystem::new(vars.len());
    let nsec = inst.sectors.len();
    let mut departing = vec![Vec::new(); nsec];
    let mut arriving = vec![Vec::new(); nsec];
    let mut occupying = vec![Vec::new(); nsec];
    for (fi, f) in inst.flights.iter().enumerate() {
        departing[inst.sector_index(f.departure_airport())].push(fi);
        arriving[inst.sector_index(f.arrival_airport())].push(fi);
        for pos in 0..f.path.len() - 1 {
            occupying[inst.sector_index(&f.path[pos])].push((fi, pos));
        }
    }

    for (k, flights) in departing.iter().enumerate() {
        if flights.is_empty() {
            continue;
        }
        for t in 1..=inst.horizon {
            let Some(cap) = inst.capacities.departure(&inst.sectors[k], t).limit() else { continue };
            let mut e = LinExpr::default();
            for &f in flights {
                e.add(vars.value(f, 0, t), 1);
                e.add(vars.value(f, 0, t - 1), -1);
            }
            push_row(inst, &mut sys, e, Sense::Le, cap as i64, RowTag::DepCap { airport: k, t })?;
        }
    }

    for (k, flights) in arriving.iter().enumerate() {
        if flights.is_empty() {
            continue;
        }
        for t in 1..=inst.horizon {
            let Some(cap) = inst.capacities.arrival(&inst.sectors[k], t).limit() else { continue };
            let mut e = LinExpr::default();
            for &f in flights {
                let last = inst.flights[f].path.len() - 1;
                e.add(vars.value(f, last, t), 1);
                e.add(vars.value(f, last, t - 1), -1);
            }
            push_row(inst, &mut sys, e, Sense::Le, cap as i64, RowTag::ArrCap { airport: k, t })?;
        }
    }

    for (j, users) in occupying.iter().enumerate() {
        if users.is_empty() {
            continue;
        }
        for t in 1..=inst.horizon {
            let Some(cap) = inst.capacities.occupancy(&inst.sectors[j], t).limit() else { continue };
            let mut e = LinExpr::default();
            for &(f, pos) in users {
                e.add(vars.value(f, pos, t), 1);
                e.add(vars.value(f, pos + 1, t), -1);
            }
            push_row(inst, &mut sys, e, Sense::Le, cap as i64, RowTag::SectorCap { sector: j, t })?;
        }
    }

    for (fi, f) in inst.flights.iter().enumerate() {
        for pos in 0..f.path.len() - 1 {
            let l = f.transit_times[pos] as Time;
            let here = vars.window(fi, pos);
            let next = vars.window(fi, pos + 1);
            // Before `here` opens w is 0, so reaching the next sector within
            // `l` periods of such a time is ruled out too.
            for t in here.first.min(next.first - l)..=here.last {
                let mut e = LinExpr::default();
                e.add(vars.value(fi, pos + 1, t + l), 1);
                e.add(vars.value(fi, pos, t), -1);
                push_row(inst, &mut sys, e, Sense::Le, 0, RowTag::Transit { flight: fi, position: pos, t })?;
            }
        }
    }

    for &(pred, succ) in inst.continuation_pairs() {
        let pf = &inst.flights[pred];
        let arr_pos = pf.path.len() - 1;
        let s = pf.turnaround as Time;
        for t in vars.window(succ, 0).first..=vars.window(succ, 0).last {
            let before = vars.value(pred, arr_pos, t - s);
            if before == Term::Const(1) {
                continue;
            }
            let mut e = LinExpr::default();
            e.add(vars.value(succ, 0, t), 1);
            e.add(before, -1);
            push_row(inst, &mut sys, e, Sense::Le, 0, RowTag::Turn { flight: succ, predecessor: pred, t })?;
        }
    }

    for (fi, f) in inst.flights.iter().enumerate() {
        for pos in 0..f.path.len() {
            let w = vars.window(fi, pos);
            for t in w.first..=w.last {
                let mut e = LinExpr::default();
                e.add(vars.value(fi, pos, t), 1);
                e.add(vars.value(fi, pos, t - 1), -1);
                push_row(inst, &mut sys, e, Sense::Ge, 0, RowTag::Monotone { flight: fi, position: pos, t })?;
            }
        }
    }

    // Actual time at a window = last - (sum of its free columns), so
    //   g = dep - d,  a = arr - r - g,
    //   cg*g + ca*a = (cg - ca)*(dep - d) + ca*(arr - r).
    let mut offset = Rational::zero();
    for (fi, f) in inst.flights.iter().enumerate() {
        let last = f.path.len() - 1;
        let dep_coef = f.ground_cost - f.air_cost;
        let arr_coef = f.air_cost;
        for c in vars.block(fi, 0) {
            sys.objective[c] -= dep_coef;
        }
        for c in vars.block(fi, last) {
            sys.objective[c] -= arr_coef;
        }
        offset += dep_coef * Rational::from_integer(vars.window(fi, 0).last - f.scheduled_departure);
        offset += arr_coef * Rational::from_integer(vars.window(fi, last).last - f.scheduled_arrival);
    }
    sys.objective_offset = offset;
    Ok(sys)
}

/// Columns and system built together.
#[derive(Clone, Debug)]
pub struct Formulation {
    pub vars: VariableMap,
    pub system: ConstraintSystem,
}

pub fn formulate(inst: &ValidatedInstance) -> Result<Formulation, FormulationError> {
    let vars = build_variables(inst);
    let system = build_system(inst, &vars)?;
    Ok(Formulation { vars, system })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlightSchedule {
    pub flight: String,
    /// Arrives-by time at each path sector.
    pub sector_times: Vec<Time>,
    pub scheduled_departure: Time,
    pub actual_departure: Time,
    pub scheduled_arrival: Time,
    pub actual_arrival: Time,
    /// Negative when the flight leaves early.
    pub ground_delay: i64,
    pub air_delay: i64,
    /// `cg * g + ca * a`, the quantity the objective minimises.
    pub cost_beta: Rational,
    /// Same with each component clamped at zero.
    pub cost_alpha: Rational,
}

impl FlightSchedule {
    pub fn from_times(flight: &Flight, sector_times: Vec<Time>) -> Self {
        let actual_departure = sector_times[0];
        let actual_arrival = sector_times[sector_times.len() - 1];
        let ground_delay = actual_departure - flight.scheduled_departure;
        let air_delay = actual_arrival - flight.scheduled_arrival - ground_delay;
        let ground = flight.ground_cost * Rational::from_integer(ground_delay);
        let air = flight.air_cost * Rational::from_integer(air_delay);
        let clamp = |c: Rational| if c.is_negative() { Rational::zero() } else { c };
        FlightSchedule {
            flight: flight.id.clone(),
            sector_times,
            scheduled_departure: flight.scheduled_departure,
            actual_departure,
            scheduled_arrival: flight.scheduled_arrival,
            actual_arrival,
            ground_delay,
            air_delay,
            cost_beta: ground + air,
            cost_alpha: clamp(ground) + clamp(air),
        }
    }

    /// The undelayed trajectory.
    pub fn scheduled(flight: &Flight) -> Self {
        Self::from_times(flight, flight.scheduled_times())
    }

    pub fn has_negative_component(&self) -> bool {
        self.ground_delay < 0 || self.air_delay < 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleSet {
    pub flights: Vec<FlightSchedule>,
    pub total_beta: Rational,
    pub total_alpha: Rational,
}

impl ScheduleSet {
    pub fn new(flights: Vec<FlightSchedule>) -> Self {
        let total_beta = flights.iter().map(|f| f.cost_beta).sum();
        let total_alpha = flights.iter().map(|f| f.cost_alpha).sum();
        ScheduleSet { flights, total_beta, total_alpha }
    }

    pub fn get(&self, id: &str) -> Option<&FlightSchedule> {
        self.flights.iter().find(|f| f.flight == id)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("column {column} has fractional value {value}")]
    FractionalSolution { column: usize, value: f64 },
    #[error("expected {expected} column values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("schedule cost {schedule} disagrees with objective value {objective}")]
    ObjectiveMismatch { schedule: f64, objective: f64 },
}

/// Reads flight schedules off a (near-)integral column vector and checks that
/// their summed cost reproduces the objective.
pub fn extract_schedule(
    inst: &ValidatedInstance,
    vars: &VariableMap,
    sys: &ConstraintSystem,
    values: &[f64],
) -> Result<ScheduleSet, ExtractError> {
    if values.len() != vars.len() {
        return Err(ExtractError::Length { expected: vars.len(), got: values.len() });
    }
    let mut rounded = Vec::with_capacity(values.len());
    for (column, &v) in values.iter().enumerate() {
        let r = v.round();
        if (v - r).abs() > INTEGRALITY_TOL || !(r == 0.0 || r == 1.0) {
            return Err(ExtractError::FractionalSolution { column, value: v });
        }
        rounded.push(r as u8);
    }
    let flights: Vec<FlightSchedule> = inst
        .flights
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let times = (0..f.path.len())
                .map(|pos| {
                    let reached: Time = vars.block(fi, pos).map(|c| rounded[c] as Time).sum();
                    vars.window(fi, pos).last - reached
                })
                .collect();
            FlightSchedule::from_times(f, times)
        })
        .collect();
    let set = ScheduleSet::new(flights);
    let objective = rational_to_f64(&sys.objective_binary(&rounded));
    let schedule = rational_to_f64(&set.total_beta);
    if (objective - schedule).abs() > INTEGRALITY_TOL * (1.0 + objective.abs()) {
        return Err(ExtractError::ObjectiveMismatch { schedule, objective });
    }
    Ok(set)
}

/// The 0/1 column vector that realises the given trajectories. Fails when a
/// trajectory leaves its window.
pub fn assignment_from_schedule(
    inst: &ValidatedInstance,
    vars: &VariableMap,
    schedules: &[FlightSchedule],
) -> Result<Vec<u8>, FormulationError> {
    let mut x = vec![0u8; vars.len()];
    for (fi, (f, s)) in inst.flights.iter().zip(schedules).enumerate() {
        for (pos, &time) in s.sector_times.iter().enumerate() {
            let w = vars.window(fi, pos);
            if !w.contains(time) {
                return Err(FormulationError::OutsideWindow {
                    flight: f.id.clone(),
                    sector: f.path[pos].to_string(),
                    time,
                    first: w.first,
                    last: w.last,
                });
            }
            for c in vars.block(fi, pos) {
                x[c] = (vars.key(c).time >= time) as u8;
            }
        }
    }
    Ok(x)
}
