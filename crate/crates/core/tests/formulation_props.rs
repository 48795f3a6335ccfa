mod common;

use common::{fixture, free_column_tally, independent_violations, naive_points};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfmp_core::formulation::{formulate, FlightSchedule, VariableMap};
use tfmp_core::harness::generator::{generate_instance, GeneratorParams};
use tfmp_core::harness::{load_instance, parse_instance};
use tfmp_core::model::{validate_instance, SectorId, Time, ValidatedInstance};
use tfmp_core::{Rational, RowTag, Sense};

fn tiny(seed: u64) -> ValidatedInstance {
    let p = GeneratorParams {
        flights: 2,
        sectors: 4,
        horizon: 7,
        continued_fraction: 0.5,
        capacity_tightness: 0.5,
        max_ground_hold: 1,
        max_air_hold: 1,
        allow_early: 0,
    };
    validate_instance(generate_instance(&p, seed).unwrap()).unwrap()
}

/// 0/1 columns for given arrives-by times, built straight from the keys.
fn columns_for(vars: &VariableMap, times: &[Vec<Time>]) -> Vec<u8> {
    vars.keys().iter().map(|k| (k.time >= times[k.flight][k.position]) as u8).collect()
}

/// Cost from raw delays, no telescoping.
fn direct_cost(inst: &ValidatedInstance, times: &[Vec<Time>]) -> Rational {
    inst.flights
        .iter()
        .zip(times)
        .map(|(f, t)| {
            let g = t[0] - f.scheduled_departure;
            let a = (t[t.len() - 1] - f.scheduled_arrival) - g;
            f.ground_cost * Rational::from_integer(g) + f.air_cost * Rational::from_integer(a)
        })
        .sum()
}

/// Every assignment of one time per window (not necessarily feasible).
fn all_trajectories(inst: &ValidatedInstance) -> Vec<Vec<Vec<Time>>> {
    let slots: Vec<(usize, usize)> =
        inst.flights.iter().enumerate().flat_map(|(fi, f)| (0..f.path.len()).map(move |p| (fi, p))).collect();
    let mut out = vec![inst.flights.iter().map(|f| vec![0; f.path.len()]).collect::<Vec<_>>()];
    for &(fi, p) in &slots {
        let w = inst.flights[fi].window(p);
        out = out
            .into_iter()
            .flat_map(|base| {
                (w.first..=w.last).map(move |t| {
                    let mut next = base.clone();
                    next[fi][p] = t;
                    next
                })
            })
            .collect();
    }
    out
}

#[test]
fn feasible_points_are_exactly_the_valid_trajectories() {
    let mut checked = 0;
    for seed in 0..12 {
        let inst = tiny(seed);
        let form = formulate(&inst).unwrap();
        if form.system.num_columns > 16 {
            continue;
        }
        let mut expected: Vec<Vec<u8>> = all_trajectories(&inst)
            .into_iter()
            .filter(|times| {
                let sched: Vec<FlightSchedule> =
                    inst.flights.iter().zip(times).map(|(f, t)| FlightSchedule::from_times(f, t.clone())).collect();
                independent_violations(&inst, &sched).is_empty()
            })
            .map(|times| columns_for(&form.vars, &times))
            .collect();
        expected.sort();
        let mut got = naive_points(&form.system);
        got.sort();
        assert_eq!(got, expected, "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 8, "only {checked} instances were small enough");
}

#[test]
fn objective_matches_direct_cost_on_random_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..10 {
        let inst = validate_instance(generate_instance(&GeneratorParams::default(), seed).unwrap()).unwrap();
        let form = formulate(&inst).unwrap();
        for _ in 0..100 {
            let times: Vec<Vec<Time>> = inst
                .flights
                .iter()
                .map(|f| (0..f.path.len()).map(|p| rng.gen_range(f.window(p).first..=f.window(p).last)).collect())
                .collect();
            let x = columns_for(&form.vars, &times);
            assert_eq!(form.system.objective_binary(&x), direct_cost(&inst, &times));
        }
    }
}

#[test]
fn column_and_monotone_row_tallies() {
    for name in ["scenario1.tfmp", "scenario2.tfmp", "scenario3.tfmp", "scenario4.tfmp"] {
        let raw = parse_instance(fixture(name)).unwrap();
        let tally = free_column_tally(&raw);
        let inst = load_instance(fixture(name)).unwrap();
        let form = formulate(&inst).unwrap();
        assert_eq!(form.system.num_columns, tally, "{name}");
        let monotone: usize = inst
            .flights
            .iter()
            .flat_map(|f| f.windows.iter().map(|w| w.unwrap().len()))
            .filter(|&len| len >= 2)
            .sum();
        let counted = form.system.rows.iter().filter(|r| matches!(r.tag, RowTag::Monotone { .. })).count();
        assert_eq!(counted, monotone, "{name}");
        let dep = form.system.rows.iter().filter(|r| matches!(r.tag, RowTag::DepCap { .. })).count();
        assert_eq!(dep, 0, "{name} has no departure capacities");
    }
    // 4 flights with 2, 3, 3, 3 path sectors; every window spans 6 periods
    // except where the horizon clips it.
    let raw = parse_instance(fixture("scenario1.tfmp")).unwrap();
    assert_eq!(free_column_tally(&raw), 55);
}

#[test]
fn bangalore_arrival_row_at_five() {
    let inst = load_instance(fixture("scenario1.tfmp")).unwrap();
    let form = formulate(&inst).unwrap();
    let bangalore = inst.sector_index(&SectorId::new("Bangalore"));
    let row = form
        .system
        .rows
        .iter()
        .find(|r| r.tag == RowTag::ArrCap { airport: bangalore, t: 5 })
        .expect("row present");
    assert_eq!(row.terms.len(), 2);
    assert_eq!(row.sense, Sense::Le);
    assert_eq!(row.rhs, Rational::from_integer(1));
    assert!(row.terms.iter().all(|(_, a)| *a == Rational::from_integer(1)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scheduled_trajectory_at_full_capacity_costs_nothing(seed in 0u64..10_000) {
        let inst = validate_instance(generate_instance(&GeneratorParams::default(), seed).unwrap()).unwrap();
        let form = formulate(&inst).unwrap();
        let times: Vec<Vec<Time>> = inst.flights.iter().map(|f| f.scheduled_times()).collect();
        let x = columns_for(&form.vars, &times);
        prop_assert!(form.system.is_feasible_binary(&x));
        prop_assert_eq!(form.system.objective_binary(&x), Rational::from_integer(0));
    }
}
