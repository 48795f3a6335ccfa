//! Seeded random instances.
//!
//! Paths are random walks of 2 to 4 sectors over a random connected
//! adjacency. Continued flights start at their predecessor's arrival airport
//! after its turnaround. Every capacity is the zero-delay peak demand of its
//! resource scaled by the tightness and rounded up, so tightness 1 leaves the
//! undelayed schedule feasible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    derive_time_windows, validate_instance, Capacity, CapacityEntry, CapacityProfile, Continuation, Flight,
    HoldAllowance, Instance, SectorId, Time,
};
use crate::system::Rational;

const RETRY_BUDGET: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneratorParams {
    pub flights: usize,
    pub sectors: usize,
    pub horizon: Time,
    /// Share of flights that continue an earlier flight's aircraft.
    pub continued_fraction: f64,
    /// Scale applied to zero-delay peak demand, in (0, 1].
    pub capacity_tightness: f64,
    pub max_ground_hold: u32,
    pub max_air_hold: u32,
    pub allow_early: u32,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            flights: 4,
            sectors: 6,
            horizon: 10,
            continued_fraction: 0.2,
            capacity_tightness: 1.0,
            max_ground_hold: 1,
            max_air_hold: 1,
            allow_early: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerationError {
    #[error("invalid generator parameters: {0}")]
    Params(String),
    #[error("could not place {wanted} continued flights after {RETRY_BUDGET} attempts")]
    Continuations { wanted: usize },
    #[error("generated instance failed validation: {0}")]
    Invalid(String),
}

pub fn generate_instance(params: &GeneratorParams, seed: u64) -> Result<Instance, GenerationError> {
    check(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sectors: Vec<SectorId> = (0..params.sectors).map(|i| SectorId::new(format!("S{i}"))).collect();
    let adjacency = random_adjacency(&mut rng, params.sectors);
    let continued = (params.continued_fraction * params.flights as f64 + 1e-9).floor() as usize;
    let continued = continued.min(params.flights);

    for _ in 0..RETRY_BUDGET {
        if let Some((flights, continuations)) = try_flights(&mut rng, params, &sectors, &adjacency, continued) {
            let mut inst = Instance {
                horizon: params.horizon,
                period_minutes: None,
                holds: HoldAllowance {
                    max_ground_hold: params.max_ground_hold,
                    max_air_hold: params.max_air_hold,
                    allow_early: params.allow_early,
                },
                sectors: sectors.clone(),
                flights,
                capacities: CapacityProfile::default(),
                continuations,
            };
            inst.capacities = capacities(&inst, params.capacity_tightness);
            let h = inst.holds;
            let inst = derive_time_windows(inst, h.max_ground_hold, h.max_air_hold, h.allow_early)
                .map_err(|e| GenerationError::Invalid(e.to_string()))?;
            return match validate_instance(inst) {
                Ok(v) => Ok(v.into_inner()),
                Err(e) => Err(GenerationError::Invalid(e.to_string())),
            };
        }
    }
    Err(GenerationError::Continuations { wanted: continued })
}

fn check(p: &GeneratorParams) -> Result<(), GenerationError> {
    let bad = |m: &str| Err(GenerationError::Params(m.into()));
    if p.flights == 0 {
        return bad("need at least one flight");
    }
    if p.sectors < 2 {
        return bad("need at least two sectors for a path");
    }
    if p.horizon < 2 {
        return bad("horizon must allow a departure and a later arrival");
    }
    if !(0.0..=1.0).contains(&p.continued_fraction) {
        return bad("continued_fraction must lie in [0, 1]");
    }
    if !(p.capacity_tightness > 0.0 && p.capacity_tightness <= 1.0) {
        return bad("capacity_tightness must lie in (0, 1]");
    }
    Ok(())
}

/// A random spanning tree plus extra edges with probability 0.3.
fn random_adjacency(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m];
    let link = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        if a != b && !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    };
    for i in 1..m {
        let j = rng.gen_range(0..i);
        link(&mut adj, i, j);
    }
    for a in 0..m {
        for b in a + 1..m {
            if rng.gen_bool(0.3) {
                link(&mut adj, a, b);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// A simple random walk starting at `start` that fits in `budget` periods.
fn random_path(rng: &mut ChaCha8Rng, adj: &[Vec<usize>], start: usize, budget: Time) -> Option<(Vec<usize>, Vec<u32>)> {
    let want = rng.gen_range(2..=4usize);
    let mut path = vec![start];
    let mut transit = Vec::new();
    let mut used: Time = 0;
    while path.len() < want {
        let here = *path.last().unwrap();
        let options: Vec<usize> = adj[here].iter().copied().filter(|s| !path.contains(s)).collect();
        let Some(&next) = options.choose(rng) else { break };
        let l: u32 = rng.gen_range(1..=2);
        let l = if used + l as Time > budget { 1 } else { l };
        if used + l as Time > budget {
            break;
        }
        used += l as Time;
        path.push(next);
        transit.push(l);
    }
    (path.len() >= 2).then_some((path, transit))
}

fn make_flight(rng: &mut ChaCha8Rng, id: String, sectors: &[SectorId], path: Vec<usize>, transit: Vec<u32>, dep: Time) -> Flight {
    let arr = dep + transit.iter().map(|&l| l as Time).sum::<Time>();
    let cg: i64 = rng.gen_range(1..=10);
    let ca = cg + rng.gen_range(0..=5);
    let n = path.len();
    Flight {
        id,
        path: path.into_iter().map(|s| sectors[s].clone()).collect(),
        scheduled_departure: dep,
        scheduled_arrival: arr,
        turnaround: rng.gen_range(0..=1),
        ground_cost: Rational::from_integer(cg),
        air_cost: Rational::from_integer(ca),
        transit_times: transit,
        windows: vec![None; n],
    }
}

/// Builds one rotation per non-continued flight. Rotation lengths differ by
/// at most one, and each leg gets an even share of the periods its aircraft
/// has left, so long rotations still fit the horizon.
fn try_flights(
    rng: &mut ChaCha8Rng,
    params: &GeneratorParams,
    sectors: &[SectorId],
    adj: &[Vec<usize>],
    continued: usize,
) -> Option<(Vec<Flight>, Vec<Continuation>)> {
    let t = params.horizon;
    let chains = params.flights - continued;
    if chains == 0 {
        return None;
    }
    let mut flights: Vec<Flight> = Vec::with_capacity(params.flights);
    let mut continuations = Vec::new();

    for c in 0..chains {
        let len = params.flights / chains + usize::from(c < params.flights % chains);
        let mut earliest: Time = 1;
        let mut start = rng.gen_range(0..params.sectors);
        for j in 0..len {
            let share = (t - earliest + 1) / (len - j) as Time;
            if share < 2 {
                return None;
            }
            let (path, transit) = random_path(rng, adj, start, share - 1)?;
            let dur: Time = transit.iter().map(|&l| l as Time).sum();
            let spare = share - 1 - dur;
            // Continued legs leave soon after the turnaround.
            let dep = earliest + rng.gen_range(0..=if j == 0 { spare } else { spare.min(1) });
            let id = format!("F{}", flights.len());
            let f = make_flight(rng, id.clone(), sectors, path, transit, dep);
            earliest = f.scheduled_arrival + f.turnaround as Time;
            start = sectors.iter().position(|s| s == f.arrival_airport()).unwrap();
            if j > 0 {
                continuations.push(Continuation { from: flights.last().unwrap().id.clone(), to: id });
            }
            flights.push(f);
        }
    }
    Some((flights, continuations))
}

/// Peak zero-delay demand per (sector, resource), scaled and rounded up.
/// Resources nobody uses stay unbounded.
fn capacities(inst: &Instance, tightness: f64) -> CapacityProfile {
    let m = inst.sectors.len();
    let idx = |s: &SectorId| inst.sectors.iter().position(|x| x == s).unwrap();
    let mut dep = vec![vec![0u32; inst.horizon as usize + 1]; m];
    let mut arr = dep.clone();
    let mut occ = dep.clone();
    for f in &inst.flights {
        let times = f.scheduled_times();
        dep[idx(f.departure_airport())][times[0] as usize] += 1;
        arr[idx(f.arrival_airport())][*times.last().unwrap() as usize] += 1;
        for pos in 0..f.path.len() - 1 {
            for t in times[pos]..times[pos + 1] {
                occ[idx(&f.path[pos])][t as usize] += 1;
            }
        }
    }
    let scale = |peak: u32| -> Option<Capacity> {
        (peak > 0).then(|| Capacity::Limited(((peak as f64 * tightness) - 1e-9).ceil().max(1.0) as u32))
    };
    let entries = (0..m)
        .filter_map(|k| {
            let d = scale(*dep[k].iter().max().unwrap());
            let a = scale(*arr[k].iter().max().unwrap());
            let s = scale(*occ[k].iter().max().unwrap());
            (d.is_some() || a.is_some() || s.is_some()).then(|| CapacityEntry {
                sector: inst.sectors[k].clone(),
                from: 1,
                to: inst.horizon,
                departure: d,
                arrival: a,
                occupancy: s,
            })
        })
        .collect();
    CapacityProfile { entries }
}
