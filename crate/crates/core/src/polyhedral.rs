//! Brute-force polyhedral checks on tiny systems.
//!
//! The feasible 0/1 set `S` is enumerated outright; `conv(S)` is only ever
//! represented by those points. All tightness and rank decisions use exact
//! arithmetic.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lp::{solve_lp, LpError, LpStatus};
use crate::system::{rational_to_f64, ConstraintSystem, Rational, RowTag, Sense};

pub const DEFAULT_CAP: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("{free} free columns exceed the enumeration cap of {cap}")]
    CapExceeded { free: usize, cap: usize },
    #[error("row {row} ({tag}) is violated by feasible point {point}: formulation bug")]
    InvalidRow { row: usize, tag: String, point: usize },
    #[error("the feasible set is empty")]
    EmptyPointSet,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// The feasible 0/1 points of a system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    pub dimension: usize,
    pub points: Vec<Vec<u8>>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Groups columns into monotone chains using the two-term monotone rows
/// `x_b - x_a >= 0`. Columns outside any chain form singleton blocks.
fn monotone_blocks(sys: &ConstraintSystem) -> Vec<Vec<usize>> {
    let n = sys.num_columns;
    let mut next: Vec<Option<usize>> = vec![None; n];
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let one = Rational::one();
    let mut conflict = false;
    for row in &sys.rows {
        if !matches!(row.tag, RowTag::Monotone { .. }) || row.terms.len() != 2 || !row.rhs.is_zero() {
            continue;
        }
        let (a, b) = match (row.sense, row.terms[0], row.terms[1]) {
            (Sense::Ge, (c0, a0), (c1, a1)) if a0 == -one && a1 == one => (c0, c1),
            (Sense::Ge, (c0, a0), (c1, a1)) if a0 == one && a1 == -one => (c1, c0),
            _ => continue,
        };
        if next[a].is_some_and(|x| x != b) || prev[b].is_some_and(|x| x != a) {
            conflict = true;
        }
        next[a] = Some(b);
        prev[b] = Some(a);
    }
    if conflict {
        return (0..n).map(|c| vec![c]).collect();
    }
    let mut blocks = Vec::new();
    let mut seen = vec![false; n];
    for start in 0..n {
        if prev[start].is_some() || seen[start] {
            continue;
        }
        let mut chain = vec![start];
        seen[start] = true;
        let mut cur = start;
        while let Some(nx) = next[cur] {
            if seen[nx] {
                break;
            }
            seen[nx] = true;
            chain.push(nx);
            cur = nx;
        }
        blocks.push(chain);
    }
    // Anything left sits on a cycle; enumerate it bit by bit.
    blocks.extend((0..n).filter(|&c| !seen[c]).map(|c| vec![c]));
    blocks
}

/// Every 0/1 vector satisfying all rows and bounds.
///
/// Monotone chains are enumerated by the position of their first 1, so a
/// chain of `m` columns costs `m + 1` choices rather than `2^m`. Rows are
/// checked as soon as all of their columns are assigned.
pub fn enumerate_feasible(sys: &ConstraintSystem, cap: usize) -> Result<PointSet, LabError> {
    let n = sys.num_columns;
    if n > cap {
        return Err(LabError::CapExceeded { free: n, cap });
    }
    let blocks = monotone_blocks(sys);
    let mut block_of = vec![0; n];
    for (b, cols) in blocks.iter().enumerate() {
        for &c in cols {
            block_of[c] = b;
        }
    }
    let mut rows_at: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
    let mut constant_rows = Vec::new();
    for (i, row) in sys.rows.iter().enumerate() {
        match row.terms.iter().map(|(c, _)| block_of[*c]).max() {
            Some(b) => rows_at[b].push(i),
            None => constant_rows.push(i),
        }
    }
    let mut points = Vec::new();
    let empty = vec![0u8; n];
    if constant_rows.iter().any(|&i| !sys.rows[i].holds_binary(&empty)) {
        return Ok(PointSet { dimension: n, points });
    }
    let bound_ok = |c: usize, v: u8| {
        let v = Rational::from_integer(v as i64);
        sys.bounds[c].0 <= v && v <= sys.bounds[c].1
    };

    let mut x = vec![0u8; n];
    let mut choice = vec![0usize; blocks.len()];
    let mut depth = 0usize;
    if blocks.is_empty() {
        points.push(x);
        return Ok(PointSet { dimension: n, points });
    }
    // Iterative depth-first search; `choice[b]` is the next pattern to try
    // at block `b` (pattern p = number of leading zeros in the chain).
    loop {
        let cols = &blocks[depth];
        if choice[depth] > cols.len() {
            choice[depth] = 0;
            if depth == 0 {
                break;
            }
            depth -= 1;
            continue;
        }
        let p = choice[depth];
        choice[depth] += 1;
        let mut ok = true;
        for (k, &c) in cols.iter().enumerate() {
            let v = (k >= p) as u8;
            x[c] = v;
            ok &= bound_ok(c, v);
        }
        if !ok || !rows_at[depth].iter().all(|&i| sys.rows[i].holds_binary(&x)) {
            continue;
        }
        if depth + 1 == blocks.len() {
            points.push(x.clone());
        } else {
            depth += 1;
        }
    }
    Ok(PointSet { dimension: n, points })
}

/// Incrementally built row-echelon basis over the rationals.
#[derive(Clone, Debug, Default)]
struct EchelonBasis {
    rows: Vec<(usize, Vec<BigRational>)>,
}

impl EchelonBasis {
    /// Adds `v` if it is independent of the current rows; returns whether it was.
    fn insert(&mut self, mut v: Vec<BigRational>) -> bool {
        for (pivot, row) in &self.rows {
            if v[*pivot].is_zero() {
                continue;
            }
            let f = v[*pivot].clone();
            for (x, r) in v.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
        }
        let Some(pivot) = v.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = v[pivot].recip();
        for x in v.iter_mut() {
            *x *= &inv;
        }
        // Keep the basis fully reduced so insertion order does not matter.
        for (_, row) in self.rows.iter_mut() {
            if row[pivot].is_zero() {
                continue;
            }
            let f = row[pivot].clone();
            for (x, r) in row.iter_mut().zip(&v) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
        }
        self.rows.push((pivot, v));
        true
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

fn difference(p: &[u8], base: &[u8]) -> Vec<BigRational> {
    p.iter()
        .zip(base)
        .map(|(a, b)| BigRational::from_integer(BigInt::from(*a as i64 - *b as i64)))
        .collect()
}

/// Affinely independent subset chosen greedily in input order, as indices.
fn affine_basis<'a>(points: impl IntoIterator<Item = (usize, &'a Vec<u8>)>) -> Vec<usize> {
    let mut iter = points.into_iter();
    let Some((i0, base)) = iter.next() else { return Vec::new() };
    let mut chosen = vec![i0];
    let mut basis = EchelonBasis::default();
    for (i, p) in iter {
        if basis.rank() == base.len() {
            break;
        }
        if basis.insert(difference(p, base)) {
            chosen.push(i);
        }
    }
    chosen
}

/// Dimension of the affine hull: -1 for no points, 0 for one.
pub fn affine_dimension(points: &[Vec<u8>]) -> i64 {
    affine_basis(points.iter().enumerate()).len() as i64 - 1
}

/// Rank of the rows (and column bounds) that hold with equality at every
/// point, each taken as the augmented vector `(a, b)`.
pub fn implicit_equality_rank(sys: &ConstraintSystem, points: &[Vec<u8>]) -> usize {
    let n = sys.num_columns;
    let to_big = |r: &Rational| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
    let mut basis = EchelonBasis::default();
    if points.is_empty() {
        return 0;
    }
    for row in &sys.rows {
        if points.iter().all(|p| row.activity_binary(p) == row.rhs) {
            let mut v = vec![BigRational::zero(); n + 1];
            for (c, a) in &row.terms {
                v[*c] = to_big(a);
            }
            v[n] = to_big(&row.rhs);
            basis.insert(v);
        }
    }
    for c in 0..n {
        for bound in [sys.bounds[c].0, sys.bounds[c].1] {
            if points.iter().all(|p| Rational::from_integer(p[c] as i64) == bound) {
                let mut v = vec![BigRational::zero(); n + 1];
                v[c] = BigRational::one();
                v[n] = to_big(&bound);
                basis.insert(v);
            }
        }
    }
    basis.rank()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceReport {
    pub row: usize,
    pub row_tag: RowTag,
    /// Indices into the point set of the points where the row is tight.
    pub tight_points: Vec<usize>,
    pub face_dim: i64,
    pub polytope_dim: i64,
    pub is_facet: bool,
    /// `face_dim + 1` affinely independent tight points.
    pub witnesses: Vec<usize>,
}

/// One report per row. Fails if any row cuts off a feasible point, which
/// would mean the row is not valid for `S`.
pub fn classify_faces(sys: &ConstraintSystem, points: &PointSet) -> Result<Vec<FaceReport>, LabError> {
    let polytope_dim = affine_dimension(&points.points);
    let mut reports = Vec::with_capacity(sys.rows.len());
    for (ri, row) in sys.rows.iter().enumerate() {
        let (terms, rhs) = row.as_le();
        let mut tight = Vec::new();
        for (pi, p) in points.points.iter().enumerate() {
            let lhs = terms
                .iter()
                .filter(|(c, _)| p[*c] != 0)
                .fold(Rational::zero(), |acc, (_, a)| acc + a);
            if lhs > rhs {
                return Err(LabError::InvalidRow { row: ri, tag: row.tag.to_string(), point: pi });
            }
            if lhs == rhs {
                tight.push(pi);
            }
        }
        let witnesses = affine_basis(tight.iter().map(|&i| (i, &points.points[i])));
        let face_dim = witnesses.len() as i64 - 1;
        reports.push(FaceReport {
            row: ri,
            row_tag: row.tag.clone(),
            tight_points: tight,
            face_dim,
            polytope_dim,
            is_facet: face_dim == polytope_dim - 1,
            witnesses,
        });
    }
    Ok(reports)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    /// Minimum of the objective over the enumerated points.
    pub enumeration_optimum: Rational,
    /// Optimum of the LP over convex combinations of the points.
    pub hull_optimum: f64,
    /// Whether the hull LP landed on a point of `S` with the enumeration optimum.
    pub hull_agrees: bool,
    /// Optimum of the system's own LP relaxation.
    pub relaxation_optimum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremReport {
    pub trials: usize,
    pub seed: u64,
    pub hull_agreements: usize,
    /// Relaxation optimum equal to the enumeration optimum.
    pub matches: usize,
    /// Relaxation optimum strictly below it (the relaxation is weaker than conv(S)).
    pub relaxation_strictly_below: usize,
    /// Relaxation optimum strictly above it; impossible for a correct solver.
    pub relaxation_above: usize,
    pub outcomes: Vec<TrialOutcome>,
}

/// Cost vector for one trial: integers in `[-10, 10]` drawn from a stream
/// derived from `seed` and the trial number.
pub fn trial_costs(n: usize, seed: u64, trial: usize) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (0..n).map(|_| Rational::from_integer(rng.gen_range(-10..=10))).collect()
}

/// For random objectives, compares the minimum over `S`, the LP minimum
/// over `conv(S)` (a simplex over the points), and the system's relaxation.
pub fn verify_main_theorem(
    sys: &ConstraintSystem,
    points: &PointSet,
    trials: usize,
    seed: u64,
) -> Result<TheoremReport, LabError> {
    if points.is_empty() {
        return Err(LabError::EmptyPointSet);
    }
    let tol = 1e-7;
    let mut report = TheoremReport {
        trials,
        seed,
        hull_agreements: 0,
        matches: 0,
        relaxation_strictly_below: 0,
        relaxation_above: 0,
        outcomes: Vec::with_capacity(trials),
    };
    let index: HashMap<&[u8], usize> = points.points.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    for trial in 0..trials {
        let costs = trial_costs(sys.num_columns, seed, trial);
        let value = |p: &[u8]| {
            costs.iter().zip(p).filter(|(_, v)| **v != 0).fold(Rational::zero(), |acc, (c, _)| acc + c)
        };
        let point_values: Vec<Rational> = points.points.iter().map(|p| value(p)).collect();
        let enumeration_optimum = *point_values.iter().min().expect("non-empty");

        // min sum_i lambda_i (c . p_i)  s.t.  sum_i lambda_i = 1,  0 <= lambda <= 1
        let mut hull = ConstraintSystem::new(points.len());
        hull.objective = point_values.clone();
        let ones: Vec<(usize, Rational)> = (0..points.len()).map(|i| (i, Rational::one())).collect();
        hull.add_row(ones.clone(), Sense::Ge, Rational::one(), RowTag::Other("sum lambda >= 1".into()));
        hull.add_row(ones, Sense::Le, Rational::one(), RowTag::Other("sum lambda <= 1".into()));
        let hull_sol = solve_lp(&hull)?;
        let hull_optimum = hull_sol.objective;
        let hull_agrees = hull_sol.status == LpStatus::Optimal && {
            let x: Vec<f64> = (0..sys.num_columns)
                .map(|c| hull_sol.values.iter().zip(&points.points).map(|(l, p)| l * p[c] as f64).sum())
                .collect();
            let rounded: Vec<u8> = x.iter().map(|v| v.round().clamp(0.0, 1.0) as u8).collect();
            let integral = x.iter().zip(&rounded).all(|(v, r)| (v - *r as f64).abs() <= tol);
            integral
                && index.get(rounded.as_slice()).is_some_and(|&i| point_values[i] == enumeration_optimum)
                && (hull_optimum - rational_to_f64(&enumeration_optimum)).abs() <= tol
        };

        let relax = solve_lp(&sys.with_objective(costs.clone()))?;
        let relaxation_optimum = relax.objective;
        let enum_f = rational_to_f64(&enumeration_optimum);
        if relax.status == LpStatus::Optimal && (relaxation_optimum - enum_f).abs() <= tol {
            report.matches += 1;
        } else if relax.status == LpStatus::Optimal && relaxation_optimum < enum_f {
            report.relaxation_strictly_below += 1;
        } else {
            report.relaxation_above += 1;
        }
        if hull_agrees {
            report.hull_agreements += 1;
        }
        report.outcomes.push(TrialOutcome {
            trial,
            enumeration_optimum,
            hull_optimum,
            hull_agrees,
            relaxation_optimum,
        });
    }
    Ok(report)
}
