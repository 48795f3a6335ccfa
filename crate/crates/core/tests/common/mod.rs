//! Oracles shared by the integration tests. None of them call into the
//! solver or enumeration code they are used to check.
#![allow(dead_code)]

use std::path::PathBuf;

use tfmp_core::formulation::FlightSchedule;
use tfmp_core::model::{Instance, Time};
use tfmp_core::{ConstraintSystem, Rational, Sense};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm_of_denoms<'a>(rs: impl Iterator<Item = &'a Rational>) -> i64 {
    rs.fold(1i64, |acc, r| acc / gcd(acc, *r.denom()) * r.denom())
}

fn scaled(r: &Rational, by: i64) -> i64 {
    (r * Rational::from_integer(by)).to_integer()
}

/// Exhaustive 0/1 minimum by Gray-code walk with incremental row activities.
/// `None` when no point is feasible.
pub fn brute_force_min(sys: &ConstraintSystem) -> Option<Rational> {
    let n = sys.num_columns;
    assert!(n <= 24, "brute force is only for tiny systems");
    // Every row as sum a_c x_c <= b in integers.
    let mut rows: Vec<(Vec<(usize, i64)>, i64)> = Vec::new();
    for r in &sys.rows {
        let l = lcm_of_denoms(r.terms.iter().map(|(_, a)| a).chain([&r.rhs]));
        let sign = if r.sense == Sense::Le { 1 } else { -1 };
        rows.push((r.terms.iter().map(|(c, a)| (*c, sign * scaled(a, l))).collect(), sign * scaled(&r.rhs, l)));
    }
    let mut touches = vec![Vec::new(); n];
    for (ri, (terms, _)) in rows.iter().enumerate() {
        for &(c, a) in terms {
            touches[c].push((ri, a));
        }
    }
    let ol = lcm_of_denoms(sys.objective.iter());
    let cost: Vec<i64> = sys.objective.iter().map(|c| scaled(c, ol)).collect();

    let mut activity = vec![0i64; rows.len()];
    let mut violated = rows.iter().filter(|(_, b)| 0 > *b).count();
    let mut x = vec![false; n];
    let mut value = 0i64;
    let mut best = (violated == 0).then_some(0i64);
    for step in 1u64..(1u64 << n) {
        let c = step.trailing_zeros() as usize;
        let delta = if x[c] { -1 } else { 1 };
        x[c] = !x[c];
        value += delta * cost[c];
        for &(ri, a) in &touches[c] {
            let before = activity[ri] > rows[ri].1;
            activity[ri] += delta * a;
            let after = activity[ri] > rows[ri].1;
            match (before, after) {
                (false, true) => violated += 1,
                (true, false) => violated -= 1,
                _ => {}
            }
        }
        if violated == 0 && best.is_none_or(|b| value < b) {
            best = Some(value);
        }
    }
    best.map(|v| Rational::new(v, ol) + sys.objective_offset)
}

/// Every feasible 0/1 point by plain counting, in lexicographic order of the
/// bit pattern read with column 0 as the lowest bit.
pub fn naive_points(sys: &ConstraintSystem) -> Vec<Vec<u8>> {
    let n = sys.num_columns;
    assert!(n <= 20);
    (0u64..(1u64 << n))
        .map(|m| (0..n).map(|c| ((m >> c) & 1) as u8).collect::<Vec<u8>>())
        .filter(|x| sys.is_feasible_binary(x))
        .collect()
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_rank(mut m: Vec<Vec<i128>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&r| m[r][col] != 0) else { continue };
        m.swap(rank, p);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                m[r][c] = (m[rank][col] * m[r][c] - m[r][col] * m[rank][c]) / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Affine rank minus one of the given 0/1 points; -1 for no points.
pub fn affine_dim_oracle(points: &[&[u8]]) -> i64 {
    let Some(first) = points.first() else { return -1 };
    let diffs: Vec<Vec<i128>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(first.iter()).map(|(&a, &b)| a as i128 - b as i128).collect())
        .collect();
    bareiss_rank(diffs) as i64
}

/// Checks a full schedule against the instance data directly: windows,
/// transit times, turnarounds and all three capacity kinds.
pub fn independent_violations(inst: &Instance, sched: &[FlightSchedule]) -> Vec<String> {
    let mut out = Vec::new();
    for (f, s) in inst.flights.iter().zip(sched) {
        for (pos, &t) in s.sector_times.iter().enumerate() {
            if let Some(w) = f.windows[pos] {
                if t < w.first || t > w.last {
                    out.push(format!("{} leaves its window at position {pos}", f.id));
                }
            }
        }
        for (pos, &l) in f.transit_times.iter().enumerate() {
            if s.sector_times[pos + 1] < s.sector_times[pos] + l as Time {
                out.push(format!("{} too fast between positions {pos} and {}", f.id, pos + 1));
            }
        }
    }
    for c in &inst.continuations {
        let pi = inst.flights.iter().position(|f| f.id == c.from).unwrap();
        let si = inst.flights.iter().position(|f| f.id == c.to).unwrap();
        let ready = sched[pi].actual_arrival + inst.flights[pi].turnaround as Time;
        if sched[si].actual_departure < ready {
            out.push(format!("{} leaves before {} has turned around", c.to, c.from));
        }
    }
    for t in 1..=inst.horizon {
        for k in &inst.sectors {
            let dep = inst
                .flights
                .iter()
                .zip(sched)
                .filter(|(f, s)| f.departure_airport() == k && s.actual_departure == t)
                .count();
            let arr = inst
                .flights
                .iter()
                .zip(sched)
                .filter(|(f, s)| f.arrival_airport() == k && s.actual_arrival == t)
                .count();
            let occ = inst
                .flights
                .iter()
                .zip(sched)
                .map(|(f, s)| {
                    (0..f.path.len() - 1)
                        .filter(|&p| &f.path[p] == k && s.sector_times[p] <= t && t < s.sector_times[p + 1])
                        .count()
                })
                .sum::<usize>();
            let checks = [
                ("departures", dep, inst.capacities.departure(k, t)),
                ("arrivals", arr, inst.capacities.arrival(k, t)),
                ("occupancy", occ, inst.capacities.occupancy(k, t)),
            ];
            for (what, used, cap) in checks {
                if let Some(c) = cap.limit() {
                    if used > c as usize {
                        out.push(format!("{what} at {k} t={t}: {used} > {c}"));
                    }
                }
            }
        }
    }
    out
}

/// Free columns from the raw schedule and hold allowances, without the
/// library's window derivation: sum over flights and path positions of
/// window length minus one.
pub fn free_column_tally(inst: &Instance) -> usize {
    let h = inst.holds;
    let mut total = 0;
    for f in &inst.flights {
        let mut t = f.scheduled_departure;
        for pos in 0..f.path.len() {
            if pos > 0 {
                t += f.transit_times[pos - 1] as Time;
            }
            let (first, last) = match f.windows[pos] {
                Some(w) => (w.first, w.last),
                None => (
                    (t - h.allow_early as Time).max(1),
                    (t + (h.max_ground_hold + h.max_air_hold) as Time).min(inst.horizon),
                ),
            };
            total += (last - first).max(0) as usize;
        }
    }
    total
}
