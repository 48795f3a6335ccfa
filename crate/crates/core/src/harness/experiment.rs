//! How often is the LP relaxation of a generated instance already integral?

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bnb::{solve_ip, IpStatus};
use crate::formulation::{formulate, FormulationError};
use crate::harness::generator::{generate_instance, GeneratorParams};
use crate::lp::{is_integral, solve_lp, LpStatus};
use crate::model::validate_instance;
use crate::system::rational_to_f64;
use crate::INTEGRALITY_TOL;

/// Fresh seeds tried when a generation attempt fails.
const GENERATION_ATTEMPTS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentStats {
    pub instances: usize,
    pub integral_lp: usize,
    pub fractional_lp: usize,
    pub infeasible: usize,
    /// Instances that could not be generated or whose solve hit a limit.
    /// They count towards `instances` but no category.
    pub solver_errors: usize,
    /// Fractional instances whose integer program was solved.
    pub gap_samples: usize,
    /// Mean of IP − LP over `gap_samples`; zero when there are none.
    pub mean_objective_gap: f64,
    pub seed: u64,
    pub params: GeneratorParams,
}

impl ExperimentStats {
    pub fn classified(&self) -> usize {
        self.integral_lp + self.fractional_lp + self.infeasible
    }

    /// Integral share among instances with a feasible relaxation.
    pub fn integral_fraction(&self) -> f64 {
        let feasible = self.integral_lp + self.fractional_lp;
        if feasible == 0 {
            0.0
        } else {
            self.integral_lp as f64 / feasible as f64
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "instances={} integral={} fractional={} infeasible={} errors={} integral_fraction={:.4} mean_gap={:.6} seed={}",
            self.instances,
            self.integral_lp,
            self.fractional_lp,
            self.infeasible,
            self.solver_errors,
            self.integral_fraction(),
            self.mean_objective_gap,
            self.seed
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stats serialise")
    }
}

enum Outcome {
    Integral,
    Fractional(Option<f64>),
    Infeasible,
    Error,
}

fn classify(params: &GeneratorParams, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = None;
    for _ in 0..GENERATION_ATTEMPTS {
        if let Ok(i) = generate_instance(params, rng.gen()) {
            inst = Some(i);
            break;
        }
    }
    let Some(Ok(inst)) = inst.map(validate_instance) else { return Outcome::Error };
    let form = match formulate(&inst) {
        Ok(f) => f,
        Err(FormulationError::InfeasibleConstruction { .. }) => return Outcome::Infeasible,
        Err(_) => return Outcome::Error,
    };
    let Ok(lp) = solve_lp(&form.system) else { return Outcome::Error };
    match lp.status {
        LpStatus::Infeasible => Outcome::Infeasible,
        LpStatus::Unbounded => Outcome::Error,
        LpStatus::Optimal if is_integral(&lp, INTEGRALITY_TOL).integral => Outcome::Integral,
        LpStatus::Optimal => match solve_ip(&form.system) {
            Ok(ip) if ip.status == IpStatus::Optimal => {
                Outcome::Fractional(Some(rational_to_f64(&ip.objective) - lp.objective))
            }
            Ok(_) => Outcome::Fractional(None),
            Err(_) => Outcome::Error,
        },
    }
}

/// Generates `count` instances from seeds drawn off `seed` and classifies
/// each relaxation. Failures are counted, never propagated.
pub fn run_experiment(count: usize, params: &GeneratorParams, seed: u64) -> ExperimentStats {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..count).map(|_| master.gen()).collect();
    let mut stats = ExperimentStats {
        instances: count,
        integral_lp: 0,
        fractional_lp: 0,
        infeasible: 0,
        solver_errors: 0,
        gap_samples: 0,
        mean_objective_gap: 0.0,
        seed,
        params: *params,
    };
    let mut gap_sum = 0.0;
    for s in seeds {
        match classify(params, s) {
            Outcome::Integral => stats.integral_lp += 1,
            Outcome::Fractional(gap) => {
                stats.fractional_lp += 1;
                if let Some(g) = gap {
                    stats.gap_samples += 1;
                    gap_sum += g;
                }
            }
            Outcome::Infeasible => stats.infeasible += 1,
            Outcome::Error => stats.solver_errors += 1,
        }
    }
    if stats.gap_samples > 0 {
        stats.mean_objective_gap = gap_sum / stats.gap_samples as f64;
    }
    stats
}
