//! Sparse linear inequality systems over 0/1-bounded columns.

use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::model::{Time, ValidatedInstance};

/// Exact coefficient type for rows, bounds and costs.
pub type Rational = Ratio<i64>;

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
}

/// Which formulation family (and index) a row came from. Flights and sectors
/// are indices into the instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RowTag {
    DepCap { airport: usize, t: Time },
    ArrCap { airport: usize, t: Time },
    SectorCap { sector: usize, t: Time },
    Transit { flight: usize, position: usize, t: Time },
    Turn { flight: usize, predecessor: usize, t: Time },
    Monotone { flight: usize, position: usize, t: Time },
    /// Rows of hand-built systems.
    Other(String),
}

impl RowTag {
    pub fn family(&self) -> &'static str {
        match self {
            RowTag::DepCap { .. } => "DepCap",
            RowTag::ArrCap { .. } => "ArrCap",
            RowTag::SectorCap { .. } => "SectorCap",
            RowTag::Transit { .. } => "Transit",
            RowTag::Turn { .. } => "Turn",
            RowTag::Monotone { .. } => "Monotone",
            RowTag::Other(_) => "Other",
        }
    }

    /// Human-readable form with flight and sector names resolved.
    pub fn describe(&self, inst: &ValidatedInstance) -> String {
        let sector = |i: usize| inst.sectors[i].to_string();
        let flight = |i: usize| inst.flights[i].id.clone();
        match self {
            RowTag::DepCap { airport, t } => format!("DepCap {} t={}", sector(*airport), t),
            RowTag::ArrCap { airport, t } => format!("ArrCap {} t={}", sector(*airport), t),
            RowTag::SectorCap { sector: s, t } => format!("SectorCap {} t={}", sector(*s), t),
            RowTag::Transit { flight: f, position, t } => {
                format!("Transit {} {} t={}", flight(*f), inst.flights[*f].path[*position], t)
            }
            RowTag::Turn { flight: f, predecessor, t } => {
                format!("Turn {} after {} t={}", flight(*f), flight(*predecessor), t)
            }
            RowTag::Monotone { flight: f, position, t } => {
                format!("Monotone {} {} t={}", flight(*f), inst.flights[*f].path[*position], t)
            }
            RowTag::Other(name) => name.clone(),
        }
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowTag::DepCap { airport, t } => write!(f, "DepCap k{airport} t{t}"),
            RowTag::ArrCap { airport, t } => write!(f, "ArrCap k{airport} t{t}"),
            RowTag::SectorCap { sector, t } => write!(f, "SectorCap j{sector} t{t}"),
            RowTag::Transit { flight, position, t } => write!(f, "Transit f{flight} i{position} t{t}"),
            RowTag::Turn { flight, predecessor, t } => write!(f, "Turn f{flight} f'{predecessor} t{t}"),
            RowTag::Monotone { flight, position, t } => write!(f, "Monotone f{flight} i{position} t{t}"),
            RowTag::Other(name) => f.write_str(name),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// (column, coefficient), sorted by column, no zero coefficients.
    pub terms: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
    pub tag: RowTag,
}

impl Row {
    pub fn new(terms: Vec<(usize, Rational)>, sense: Sense, rhs: Rational, tag: RowTag) -> Self {
        let mut terms: Vec<_> = terms.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        terms.sort_by_key(|(c, _)| *c);
        Row { terms, sense, rhs, tag }
    }

    pub fn activity_f64(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, a)| rational_to_f64(a) * x[*c]).sum()
    }

    pub fn activity_binary(&self, x: &[u8]) -> Rational {
        self.terms
            .iter()
            .filter(|(c, _)| x[*c] != 0)
            .fold(Rational::zero(), |acc, (_, a)| acc + a)
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation_f64(&self, x: &[f64]) -> f64 {
        let lhs = self.activity_f64(x);
        let rhs = rational_to_f64(&self.rhs);
        match self.sense {
            Sense::Le => (lhs - rhs).max(0.0),
            Sense::Ge => (rhs - lhs).max(0.0),
        }
    }

    pub fn holds_binary(&self, x: &[u8]) -> bool {
        let lhs = self.activity_binary(x);
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
        }
    }

    /// The row rewritten as `a·x <= b`.
    pub fn as_le(&self) -> (Vec<(usize, Rational)>, Rational) {
        match self.sense {
            Sense::Le => (self.terms.clone(), self.rhs),
            Sense::Ge => (self.terms.iter().map(|(c, a)| (*c, -a)).collect(), -self.rhs),
        }
    }
}

/// `min objective·x + offset` subject to the rows and column bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    pub num_columns: usize,
    pub rows: Vec<Row>,
    pub objective: Vec<Rational>,
    pub objective_offset: Rational,
    pub bounds: Vec<(Rational, Rational)>,
}

impl ConstraintSystem {
    /// An empty system with `n` columns bounded to `[0, 1]` and zero cost.
    pub fn new(n: usize) -> Self {
        ConstraintSystem {
            num_columns: n,
            rows: Vec::new(),
            objective: vec![Rational::zero(); n],
            objective_offset: Rational::zero(),
            bounds: vec![(Rational::zero(), Rational::from_integer(1)); n],
        }
    }

    pub fn add_row(&mut self, terms: Vec<(usize, Rational)>, sense: Sense, rhs: Rational, tag: RowTag) {
        debug_assert!(terms.iter().all(|(c, _)| *c < self.num_columns));
        self.rows.push(Row::new(terms, sense, rhs, tag));
    }

    pub fn with_objective(&self, costs: Vec<Rational>) -> Self {
        assert_eq!(costs.len(), self.num_columns);
        ConstraintSystem { objective: costs, objective_offset: Rational::zero(), ..self.clone() }
    }

    pub fn objective_f64(&self, x: &[f64]) -> f64 {
        rational_to_f64(&self.objective_offset)
            + self.objective.iter().zip(x).map(|(c, v)| rational_to_f64(c) * v).sum::<f64>()
    }

    pub fn objective_binary(&self, x: &[u8]) -> Rational {
        self.objective
            .iter()
            .zip(x)
            .filter(|(_, v)| **v != 0)
            .fold(self.objective_offset, |acc, (c, _)| acc + c)
    }

    /// Largest row or bound violation of a floating point point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation_f64(x)).fold(0.0, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|((l, u), v)| (rational_to_f64(l) - v).max(v - rational_to_f64(u)).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Exact feasibility of a 0/1 point, bounds included.
    pub fn is_feasible_binary(&self, x: &[u8]) -> bool {
        x.len() == self.num_columns
            && self.bounds.iter().zip(x).all(|((l, u), v)| {
                let v = Rational::from_integer(*v as i64);
                *l <= v && v <= *u
            })
            && self.rows.iter().all(|r| r.holds_binary(x))
    }

    /// Indices of rows a 0/1 point violates.
    pub fn violated_rows(&self, x: &[u8]) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| !self.rows[i].holds_binary(x)).collect()
    }

    pub fn family_counts(&self) -> Vec<(&'static str, usize)> {
        let mut counts: Vec<(&'static str, usize)> = Vec::new();
        for r in &self.rows {
            let fam = r.tag.family();
            match counts.iter_mut().find(|(f, _)| *f == fam) {
                Some((_, n)) => *n += 1,
                None => counts.push((fam, 1)),
            }
        }
        counts
    }
}
