//! Instance types and their consistency checks.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Deref;

use thiserror::Error;

use crate::system::Rational;

/// A period index on the 1-based grid `1..=horizon`. Signed so that window
/// arithmetic can step below 1 before clipping.
pub type Time = i64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorId(pub String);

impl SectorId {
    pub fn new(name: impl Into<String>) -> Self {
        SectorId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Inclusive interval of feasible arrives-by times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub first: Time,
    pub last: Time,
}

impl Window {
    pub fn new(first: Time, last: Time) -> Self {
        Window { first, last }
    }

    pub fn len(&self) -> usize {
        if self.last < self.first {
            0
        } else {
            (self.last - self.first + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }

    pub fn contains(&self, t: Time) -> bool {
        self.first <= t && t <= self.last
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flight {
    pub id: String,
    /// Departure airport first, arrival airport last.
    pub path: Vec<SectorId>,
    pub scheduled_departure: Time,
    pub scheduled_arrival: Time,
    /// Periods the aircraft needs on the ground after this flight before it can
    /// fly its continuation.
    pub turnaround: u32,
    pub ground_cost: Rational,
    pub air_cost: Rational,
    /// Minimum periods spent in each path sector before entering the next one;
    /// one entry per sector except the arrival airport.
    pub transit_times: Vec<u32>,
    /// One window per path sector; `None` until given explicitly or derived.
    pub windows: Vec<Option<Window>>,
}

impl Flight {
    pub fn departure_airport(&self) -> &SectorId {
        &self.path[0]
    }

    pub fn arrival_airport(&self) -> &SectorId {
        &self.path[self.path.len() - 1]
    }

    /// Arrives-by times of the undelayed trajectory, one per path sector.
    pub fn scheduled_times(&self) -> Vec<Time> {
        let mut times = Vec::with_capacity(self.path.len());
        let mut t = self.scheduled_departure;
        times.push(t);
        for l in &self.transit_times {
            t += *l as Time;
            times.push(t);
        }
        times
    }

    /// The window at a path position. Panics if it has not been set, which
    /// validation rules out.
    pub fn window(&self, position: usize) -> Window {
        self.windows[position].expect("window present after validation")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Capacity {
    Limited(u32),
    Unbounded,
}

impl Capacity {
    pub fn limit(self) -> Option<u32> {
        match self {
            Capacity::Limited(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }
}

/// One capacity statement over a time range. Fields left `None` keep
/// whatever an earlier entry (or the unbounded default) said.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityEntry {
    pub sector: SectorId,
    pub from: Time,
    pub to: Time,
    pub departure: Option<Capacity>,
    pub arrival: Option<Capacity>,
    pub occupancy: Option<Capacity>,
}

/// D_k(t), A_k(t) and S_j(t). Later entries override earlier ones; anything
/// not covered is unbounded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CapacityProfile {
    pub entries: Vec<CapacityEntry>,
}

impl CapacityProfile {
    fn lookup(&self, sector: &SectorId, t: Time, pick: impl Fn(&CapacityEntry) -> Option<Capacity>) -> Capacity {
        self.entries
            .iter()
            .rev()
            .filter(|e| &e.sector == sector && e.from <= t && t <= e.to)
            .find_map(pick)
            .unwrap_or(Capacity::Unbounded)
    }

    pub fn departure(&self, sector: &SectorId, t: Time) -> Capacity {
        self.lookup(sector, t, |e| e.departure)
    }

    pub fn arrival(&self, sector: &SectorId, t: Time) -> Capacity {
        self.lookup(sector, t, |e| e.arrival)
    }

    pub fn occupancy(&self, sector: &SectorId, t: Time) -> Capacity {
        self.lookup(sector, t, |e| e.occupancy)
    }
}

/// Hold allowances used when windows are derived from the schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HoldAllowance {
    pub max_ground_hold: u32,
    pub max_air_hold: u32,
    pub allow_early: u32,
}

/// The aircraft of `from` flies `to` next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Continuation {
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    /// Number of periods T; times run over `1..=horizon`.
    pub horizon: Time,
    /// Period length, reporting only.
    pub period_minutes: Option<u32>,
    pub holds: HoldAllowance,
    pub sectors: Vec<SectorId>,
    pub flights: Vec<Flight>,
    pub capacities: CapacityProfile,
    pub continuations: Vec<Continuation>,
}

impl Instance {
    pub fn flight(&self, id: &str) -> Option<&Flight> {
        self.flights.iter().find(|f| f.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("instance has {} violation(s): {}", .violations.len(), render_list(.violations))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("empty time window(s) after clipping to the horizon: {}", render_list(.empty))]
pub struct WindowError {
    /// (flight id, sector) pairs whose derived window is empty.
    pub empty: Vec<Violation>,
}

fn render_list(items: &[Violation]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// An instance whose invariants have been checked, with lookup tables.
#[derive(Clone, Debug)]
pub struct ValidatedInstance {
    inner: Instance,
    sector_index: HashMap<SectorId, usize>,
    flight_index: HashMap<String, usize>,
    /// Continuation pairs as (predecessor, successor) flight indices.
    pairs: Vec<(usize, usize)>,
}

impl Deref for ValidatedInstance {
    type Target = Instance;

    fn deref(&self) -> &Instance {
        &self.inner
    }
}

impl ValidatedInstance {
    pub fn instance(&self) -> &Instance {
        &self.inner
    }

    pub fn into_inner(self) -> Instance {
        self.inner
    }

    pub fn sector_index(&self, id: &SectorId) -> usize {
        self.sector_index[id]
    }

    pub fn flight_index(&self, id: &str) -> Option<usize> {
        self.flight_index.get(id).copied()
    }

    pub fn continuation_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// Checks every instance invariant and reports all violations at once.
pub fn validate_instance(raw: Instance) -> Result<ValidatedInstance, ValidationError> {
    let mut violations = Vec::new();
    let mut push = |location: String, message: String| violations.push(Violation { location, message });

    if raw.horizon < 1 {
        push("horizon".into(), format!("horizon must be at least 1, got {}", raw.horizon));
    }

    let mut sector_index = HashMap::new();
    for (i, s) in raw.sectors.iter().enumerate() {
        if s.0.is_empty() {
            push(format!("sector #{}", i + 1), "empty sector name".into());
        } else if sector_index.insert(s.clone(), i).is_some() {
            push(format!("sector {s}"), "duplicate sector".into());
        }
    }

    let mut flight_index = HashMap::new();
    for (fi, f) in raw.flights.iter().enumerate() {
        let loc = format!("flight {}", if f.id.is_empty() { format!("#{}", fi + 1) } else { f.id.clone() });
        if f.id.is_empty() {
            push(loc.clone(), "empty flight id".into());
        } else if flight_index.insert(f.id.clone(), fi).is_some() {
            push(loc.clone(), format!("duplicate flight id {}", f.id));
        }
        if f.path.len() < 2 {
            push(loc.clone(), format!("path needs a departure and an arrival airport, got {} sector(s)", f.path.len()));
        }
        let mut seen = HashSet::new();
        for s in &f.path {
            if !sector_index.contains_key(s) {
                push(loc.clone(), format!("unknown sector {s} in path"));
            }
            if !seen.insert(s) {
                push(loc.clone(), format!("sector {s} appears twice in path"));
            }
        }
        if f.path.len() >= 2 && f.transit_times.len() != f.path.len() - 1 {
            push(
                loc.clone(),
                format!("expected {} transit time(s), got {}", f.path.len() - 1, f.transit_times.len()),
            );
        }
        if f.transit_times.contains(&0) {
            push(loc.clone(), "transit times must be positive".into());
        }
        if f.ground_cost < Rational::from_integer(0) || f.air_cost < Rational::from_integer(0) {
            push(loc.clone(), "delay costs must be non-negative".into());
        }
        if f.windows.len() != f.path.len() {
            push(loc.clone(), format!("expected {} window(s), got {}", f.path.len(), f.windows.len()));
        }
        for (pos, w) in f.windows.iter().enumerate() {
            let sector = f.path.get(pos).map(|s| s.to_string()).unwrap_or_else(|| format!("#{}", pos + 1));
            match w {
                None => push(format!("{loc}, sector {sector}"), "window missing (derive windows first)".into()),
                Some(w) if w.is_empty() => {
                    push(format!("{loc}, sector {sector}"), format!("empty window {}..{}", w.first, w.last))
                }
                Some(w) if w.first < 1 || w.last > raw.horizon => push(
                    format!("{loc}, sector {sector}"),
                    format!("window {}..{} outside horizon 1..{}", w.first, w.last, raw.horizon),
                ),
                Some(_) => {}
            }
        }
    }

    for (i, e) in raw.capacities.entries.iter().enumerate() {
        let loc = format!("capacity entry #{} ({})", i + 1, e.sector);
        if !sector_index.contains_key(&e.sector) {
            push(loc.clone(), format!("unknown sector {}", e.sector));
        }
        if e.from > e.to {
            push(loc.clone(), format!("empty time range {}..{}", e.from, e.to));
        } else if e.from < 1 || e.to > raw.horizon {
            push(loc, format!("time range {}..{} outside horizon 1..{}", e.from, e.to, raw.horizon));
        }
    }

    let mut pairs = Vec::new();
    let mut successors_seen = HashSet::new();
    for c in &raw.continuations {
        let loc = format!("continuation {} > {}", c.from, c.to);
        let (Some(&pi), Some(&si)) = (flight_index.get(&c.from), flight_index.get(&c.to)) else {
            push(loc, "references an unknown flight".into());
            continue;
        };
        if pi == si {
            push(loc, "a flight cannot continue itself".into());
            continue;
        }
        if !successors_seen.insert(si) {
            push(loc.clone(), format!("flight {} continues more than one flight", c.to));
        }
        let (p, s) = (&raw.flights[pi], &raw.flights[si]);
        if let (Some(arr), Some(dep)) = (p.path.last(), s.path.first()) {
            if arr != dep {
                push(loc, format!("airport mismatch: {} arrives at {} but {} departs from {}", p.id, arr, s.id, dep));
                continue;
            }
        }
        pairs.push((pi, si));
    }

    if violations.is_empty() {
        Ok(ValidatedInstance { inner: raw, sector_index, flight_index, pairs })
    } else {
        Err(ValidationError { violations })
    }
}

/// Fills every missing window from the flight's schedule.
///
/// At path position `i` the earliest arrives-by time is the scheduled one minus
/// `allow_early`; the latest adds `max_ground_hold + max_air_hold` to the
/// scheduled time. Both ends are clipped to `1..=horizon`. Explicit windows are
/// left as they are.
pub fn derive_time_windows(
    mut inst: Instance,
    max_ground_hold: u32,
    max_air_hold: u32,
    allow_early: u32,
) -> Result<Instance, WindowError> {
    let mut empty = Vec::new();
    let horizon = inst.horizon;
    for f in &mut inst.flights {
        let times = f.scheduled_times();
        if f.windows.len() != f.path.len() {
            f.windows.resize(f.path.len(), None);
        }
        for (pos, slot) in f.windows.iter_mut().enumerate() {
            if slot.is_some() {
                continue;
            }
            let Some(&scheduled) = times.get(pos) else { continue };
            let earliest = scheduled - allow_early as Time;
            let latest = scheduled + (max_ground_hold + max_air_hold) as Time;
            let w = Window::new(earliest.max(1), latest.min(horizon));
            if w.is_empty() {
                empty.push(Violation {
                    location: format!("flight {}, sector {}", f.id, f.path[pos]),
                    message: format!("derived window {}..{} does not meet 1..{}", earliest, latest, horizon),
                });
            }
            *slot = Some(w);
        }
    }
    if empty.is_empty() {
        Ok(inst)
    } else {
        Err(WindowError { empty })
    }
}
