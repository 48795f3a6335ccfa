//! Solving a scenario file and rendering the per-flight schedule.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::json;
use thiserror::Error;

use crate::bnb::{solve_ip_with, BranchOptions, IpError, IpStatus};
use crate::decomposition::{iterative_solve, DecompositionError, DecompositionOptions};
use crate::formulation::{extract_schedule, formulate, ExtractError, FormulationError, ScheduleSet};
use crate::harness::format::format_rational;
use crate::harness::{load_instance, LoadError};
use crate::lp::{is_integral, LpError, LpStatus};
use crate::model::ValidatedInstance;
use crate::system::{rational_to_f64, Rational};
use crate::INTEGRALITY_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Relax,
    Exact,
    Decompose,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Relax => "relax",
            Mode::Exact => "exact",
            Mode::Decompose => "decompose",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    JsonLines,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ScenarioOptions {
    pub branch: BranchOptions,
    pub decomposition: DecompositionOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionSummary {
    pub iterations: usize,
    pub converged: bool,
    pub collapsed_to_full: bool,
    pub in_conflict: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ScenarioReport {
    pub mode: Mode,
    pub schedule: ScheduleSet,
    /// Exact cost of the reported schedule.
    pub objective: Rational,
    /// Whether the LP relaxation came out integral. Decomposition reports
    /// `None` since it never solves the full relaxation.
    pub integral: Option<bool>,
    pub lp_objective: Option<f64>,
    pub nodes_explored: Option<usize>,
    pub variables: usize,
    pub rows: usize,
    pub elapsed: Duration,
    pub decomposition: Option<DecompositionSummary>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("instance is infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Formulation(FormulationError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Ip(#[from] IpError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Decomposition(DecompositionError),
}

impl ScenarioError {
    /// 1 infeasible, 2 input error, 3 internal limit or failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Infeasible(_) => 1,
            ScenarioError::Load(_) => 2,
            ScenarioError::Decomposition(DecompositionError::Validation(_)) => 2,
            _ => 3,
        }
    }
}

impl From<FormulationError> for ScenarioError {
    fn from(e: FormulationError) -> Self {
        match e {
            FormulationError::InfeasibleConstruction { .. } => ScenarioError::Infeasible(e.to_string()),
            other => ScenarioError::Formulation(other),
        }
    }
}

impl From<DecompositionError> for ScenarioError {
    fn from(e: DecompositionError) -> Self {
        match e {
            DecompositionError::InfeasibleSubproblem { .. } => ScenarioError::Infeasible(e.to_string()),
            DecompositionError::Formulation(f) => f.into(),
            other => ScenarioError::Decomposition(other),
        }
    }
}

pub fn run_scenario(path: impl AsRef<Path>, mode: Mode, opts: &ScenarioOptions) -> Result<ScenarioReport, ScenarioError> {
    let inst = load_instance(path)?;
    solve_instance(&inst, mode, opts)
}

pub fn solve_instance(inst: &ValidatedInstance, mode: Mode, opts: &ScenarioOptions) -> Result<ScenarioReport, ScenarioError> {
    let start = Instant::now();
    let form = formulate(inst)?;
    let (variables, rows) = (form.system.num_columns, form.system.rows.len());
    let mut report = ScenarioReport {
        mode,
        schedule: ScheduleSet::new(Vec::new()),
        objective: Rational::from_integer(0),
        integral: None,
        lp_objective: None,
        nodes_explored: None,
        variables,
        rows,
        elapsed: Duration::ZERO,
        decomposition: None,
    };

    let exact = |report: &mut ScenarioReport| -> Result<(), ScenarioError> {
        let ip = solve_ip_with(&form.system, &opts.branch)?;
        if ip.status == IpStatus::Infeasible {
            return Err(ScenarioError::Infeasible("no 0/1 point satisfies every row".into()));
        }
        let values: Vec<f64> = ip.values.iter().map(|&v| v as f64).collect();
        report.schedule = extract_schedule(inst, &form.vars, &form.system, &values)?;
        report.objective = ip.objective;
        report.nodes_explored = Some(ip.nodes_explored);
        report.integral = Some(ip.lp_was_integral);
        report.lp_objective = ip.root_bound;
        Ok(())
    };

    match mode {
        Mode::Relax => {
            let lp = opts.branch.lp.solve(&form.system)?;
            match lp.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => return Err(ScenarioError::Infeasible("the relaxation is infeasible".into())),
                LpStatus::Unbounded => unreachable!("0/1 columns keep the relaxation bounded"),
            }
            if is_integral(&lp, INTEGRALITY_TOL).integral {
                report.schedule = extract_schedule(inst, &form.vars, &form.system, &lp.values)?;
                report.objective = report.schedule.total_beta;
                report.integral = Some(true);
                report.lp_objective = Some(lp.objective);
            } else {
                // A fractional point has no schedule; fall back to the exact
                // solve for the table and keep the flag honest.
                exact(&mut report)?;
                report.nodes_explored = None;
                report.lp_objective = Some(lp.objective);
            }
        }
        Mode::Exact => exact(&mut report)?,
        Mode::Decompose => {
            let trace = iterative_solve(inst, &opts.decomposition)?;
            report.objective = trace.final_schedule.total_beta;
            report.schedule = trace.final_schedule;
            report.decomposition = Some(DecompositionSummary {
                iterations: trace.iterations.len(),
                converged: trace.converged,
                collapsed_to_full: trace.collapsed_to_full,
                in_conflict: trace.in_conflict,
            });
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

const COLUMNS: [&str; 9] = [
    "flight",
    "dep_sched",
    "dep_actual",
    "arr_sched",
    "arr_actual",
    "ground_delay",
    "air_delay",
    "cost_beta",
    "cost_alpha",
];

fn cells(schedule: &ScheduleSet) -> Vec<[String; 9]> {
    schedule
        .flights
        .iter()
        .map(|f| {
            [
                f.flight.clone(),
                f.scheduled_departure.to_string(),
                f.actual_departure.to_string(),
                f.scheduled_arrival.to_string(),
                f.actual_arrival.to_string(),
                f.ground_delay.to_string(),
                f.air_delay.to_string(),
                format_rational(&f.cost_beta),
                format_rational(&f.cost_alpha),
            ]
        })
        .collect()
}

impl ScenarioReport {
    pub fn shows_alpha(&self) -> bool {
        self.schedule.flights.iter().any(|f| f.has_negative_component())
    }

    /// The schedule alone, with no mode or timing information.
    pub fn render_schedule(&self, format: ReportFormat) -> String {
        let rows = cells(&self.schedule);
        let mut out = String::new();
        match format {
            ReportFormat::Table => {
                let ncols = if self.shows_alpha() { 9 } else { 8 };
                let mut widths: Vec<usize> = COLUMNS[..ncols].iter().map(|c| c.len()).collect();
                for r in &rows {
                    for (w, c) in widths.iter_mut().zip(r.iter()) {
                        *w = (*w).max(c.len());
                    }
                }
                let line = |out: &mut String, cols: &mut dyn Iterator<Item = &str>| {
                    let parts: Vec<String> = cols
                        .zip(&widths)
                        .enumerate()
                        .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                        .collect();
                    let _ = writeln!(out, "{}", parts.join("  "));
                };
                line(&mut out, &mut COLUMNS[..ncols].iter().copied());
                for r in &rows {
                    line(&mut out, &mut r[..ncols].iter().map(String::as_str));
                }
                let _ = writeln!(out, "total cost_beta = {}", format_rational(&self.schedule.total_beta));
                if self.shows_alpha() {
                    let _ = writeln!(out, "total cost_alpha = {}", format_rational(&self.schedule.total_alpha));
                }
            }
            ReportFormat::Csv => {
                let _ = writeln!(out, "{}", COLUMNS.join(","));
                for r in &rows {
                    let _ = writeln!(out, "{}", r.join(","));
                }
            }
            ReportFormat::JsonLines => {
                for f in &self.schedule.flights {
                    let v = json!({
                        "flight": f.flight,
                        "dep_sched": f.scheduled_departure,
                        "dep_actual": f.actual_departure,
                        "arr_sched": f.scheduled_arrival,
                        "arr_actual": f.actual_arrival,
                        "ground_delay": f.ground_delay,
                        "air_delay": f.air_delay,
                        "cost_beta": format_rational(&f.cost_beta),
                        "cost_alpha": format_rational(&f.cost_alpha),
                    });
                    let _ = writeln!(out, "{v}");
                }
            }
        }
        out
    }

    /// Schedule followed by the solve summary. CSV output carries the
    /// summary as `#` comment lines after the data.
    pub fn render(&self, format: ReportFormat) -> String {
        let mut out = self.render_schedule(format);
        let integral = self.integral.map_or("n/a".to_string(), |b| b.to_string());
        let nodes = self.nodes_explored.map_or("n/a".to_string(), |n| n.to_string());
        let lp = self.lp_objective.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        let ms = self.elapsed.as_secs_f64() * 1e3;
        match format {
            ReportFormat::Table | ReportFormat::Csv => {
                let prefix = if format == ReportFormat::Csv { "# " } else { "" };
                let _ = writeln!(
                    out,
                    "{prefix}mode={} objective={} lp_objective={lp} integral={integral} nodes={nodes} variables={} rows={} time_ms={ms:.3}",
                    self.mode,
                    format_rational(&self.objective),
                    self.variables,
                    self.rows
                );
                if let Some(d) = &self.decomposition {
                    let _ = writeln!(
                        out,
                        "{prefix}iterations={} converged={} collapsed_to_full={} in_conflict={}",
                        d.iterations,
                        d.converged,
                        d.collapsed_to_full,
                        d.in_conflict.join(",")
                    );
                }
            }
            ReportFormat::JsonLines => {
                let mut v = json!({
                    "summary": true,
                    "mode": self.mode.to_string(),
                    "objective": format_rational(&self.objective),
                    "objective_f64": rational_to_f64(&self.objective),
                    "lp_objective": self.lp_objective,
                    "integral": self.integral,
                    "nodes_explored": self.nodes_explored,
                    "variables": self.variables,
                    "rows": self.rows,
                    "time_ms": ms,
                });
                if let Some(d) = &self.decomposition {
                    v["iterations"] = json!(d.iterations);
                    v["converged"] = json!(d.converged);
                    v["collapsed_to_full"] = json!(d.collapsed_to_full);
                    v["in_conflict"] = json!(d.in_conflict);
                }
                let _ = writeln!(out, "{v}");
            }
        }
        out
    }
}
