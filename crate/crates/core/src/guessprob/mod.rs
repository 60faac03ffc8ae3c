//! Guessing-probability LPs and the closed-form references they are checked against.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::behavior::{flat_index, pr_entry, pr_product, Behavior, NoiseParameter, MAX_ROUNDS};
use crate::certify::Certificate;
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpSolution, LpStatus};
use crate::nosig::{scenario_rows_generic, ConstraintSystem, RowLabel, ScenarioKind, SparseRow};
use crate::numeric::{Field, Mode, Rational, Scalar};

mod symmetric;

/// Which LP is solved: the symmetry-reduced one (one behavior) or the full
/// decomposition over Eve's `2^n` guesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Reduced,
    Full,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Reduced => "reduced",
            Formulation::Full => "full",
        })
    }
}

impl FromStr for Formulation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "reduced" => Ok(Formulation::Reduced),
            "full" => Ok(Formulation::Full),
            _ => Err(format!("unknown formulation {s:?} (expected reduced or full)")),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ROUNDS {
        return Err(Error::RoundsOutOfRange(n, MAX_ROUNDS));
    }
    Ok(())
}

fn check_inputs(n: usize, x_star: usize, y_star: usize) -> Result<()> {
    if x_star >> n != 0 || y_star >> n != 0 {
        return Err(Error::InvalidArgument(format!("inputs x*={x_star}, y*={y_star} do not fit {n} rounds")));
    }
    Ok(())
}

/// `2^n ∏_i PR_v(0, c_i | x_i, y_i)`
fn marginal_rhs<T: Field>(n: usize, v: &T, x: usize, y: usize, c: usize) -> T {
    let mut acc = T::from_int(1 << n);
    for k in 0..n {
        acc = acc.mul_ref(&pr_entry(v, 0, (c >> k) & 1, (x >> k) & 1, (y >> k) & 1));
    }
    acc
}

/// Reduced LP: variables are one behavior `P(a,b|x,y)` in flat order.
pub fn assemble_reduced<T: Field>(n: usize, scenario: ScenarioKind, v: &T) -> Result<LpProblem<T>> {
    check_n(n)?;
    let v = NoiseParameter::nonnegative(v.clone())?;
    let v = v.value();
    let s = 1usize << n;
    let mut sys = ConstraintSystem::empty(1 << (4 * n));
    for x in 0..s {
        for y in 0..s {
            for c in 0..s {
                let row = SparseRow::from_pairs((0..s).map(|a| (flat_index(n, a, a ^ c, x, y) as u32, 1)).collect());
                sys.push(row, marginal_rhs(n, v, x, y, c), RowLabel::Marginal { x, y, b: c });
            }
        }
    }
    sys.extend(scenario_rows_generic(n, scenario)?);
    let objective = (0..s).map(|b| (flat_index(n, 0, b, 0, 0), T::one())).collect();
    LpProblem::new(sys, objective)
}

/// Full LP over the unnormalized components `P̃_α`, α-major.
pub fn assemble_full<T: Field>(n: usize, scenario: ScenarioKind, v: &T, x_star: usize, y_star: usize) -> Result<LpProblem<T>> {
    check_n(n)?;
    check_inputs(n, x_star, y_star)?;
    let v = NoiseParameter::nonnegative(v.clone())?;
    let s = 1usize << n;
    let block = 1usize << (4 * n);
    let ns = scenario_rows_generic::<T>(n, scenario)?;
    let mut sys = ConstraintSystem::empty(block * s);
    for alpha in 0..s {
        let shift = (alpha * block) as u32;
        for ((row, rhs), label) in ns.rows.iter().zip(&ns.rhs).zip(&ns.labels) {
            let shifted = SparseRow::from_pairs(row.iter().map(|(c, a)| (c as u32 + shift, a)).collect());
            let label = match *label {
                RowLabel::NoSignaling { scenario, side, round, free, signal, .. } => {
                    RowLabel::NoSignaling { scenario, side, round, component: Some(alpha), free, signal }
                }
                other => other,
            };
            sys.push(shifted, rhs.clone(), label);
        }
    }
    let target = pr_product(n, &v)?;
    for (idx, p) in target.entries().iter().enumerate() {
        let (a, b, x, y) = crate::behavior::split_index(n, idx);
        let row = SparseRow::from_pairs((0..s).map(|alpha| ((alpha * block + idx) as u32, 1)).collect());
        sys.push(row, p.clone(), RowLabel::Decomposition { a, b, x, y });
    }
    let mut objective = Vec::new();
    for alpha in 0..s {
        for b in 0..s {
            objective.push((alpha * block + flat_index(n, alpha, b, x_star, y_star), T::one()));
        }
    }
    objective.sort_by_key(|e| e.0);
    LpProblem::new(sys, objective)
}

pub fn assemble<T: Field>(
    formulation: Formulation,
    n: usize,
    scenario: ScenarioKind,
    v: &T,
    x_star: usize,
    y_star: usize,
) -> Result<LpProblem<T>> {
    match formulation {
        Formulation::Reduced => {
            if x_star != 0 || y_star != 0 {
                return Err(Error::InvalidArgument("the reduced formulation fixes x* = y* = 0".into()));
            }
            assemble_reduced(n, scenario, v)
        }
        Formulation::Full => assemble_full(n, scenario, v, x_star, y_star),
    }
}

/// A solved instance in its own field.
#[derive(Clone, Debug)]
pub struct Solved<T> {
    pub problem: LpProblem<T>,
    pub solution: LpSolution<T>,
}

/// Solves one instance. The reduced Full-NS, ABNS and TONS problems are solved in their
/// invariant subspace and lifted back; the result is still a checked optimum
/// of the assembled problem.
pub fn solve_instance<T: Field>(
    formulation: Formulation,
    n: usize,
    scenario: ScenarioKind,
    v: &T,
    x_star: usize,
    y_star: usize,
) -> Result<Solved<T>> {
    let problem = assemble(formulation, n, scenario, v, x_star, y_star)?;
    let solution = if formulation == Formulation::Reduced && symmetric::applies(scenario) {
        symmetric::solve(&problem, n, scenario)?
    } else {
        lp::solve(&problem)?
    };
    optimal(problem, solution)
}

/// [`solve_instance`] without the invariant-subspace shortcut.
pub fn solve_instance_direct<T: Field>(
    formulation: Formulation,
    n: usize,
    scenario: ScenarioKind,
    v: &T,
    x_star: usize,
    y_star: usize,
) -> Result<Solved<T>> {
    let problem = assemble(formulation, n, scenario, v, x_star, y_star)?;
    let solution = lp::solve(&problem)?;
    optimal(problem, solution)
}

fn optimal<T: Field>(problem: LpProblem<T>, solution: LpSolution<T>) -> Result<Solved<T>> {
    match solution.status {
        LpStatus::Optimal => Ok(Solved { problem, solution }),
        status => Err(Error::Solver(format!("guessing LP reported {status:?}"))),
    }
}

#[derive(Clone, Debug)]
pub struct GuessingResult {
    pub n: usize,
    pub scenario: ScenarioKind,
    pub v: Scalar,
    pub g: Scalar,
    /// `-log₂ G` in binary64.
    pub h: f64,
    pub mode: Mode,
    pub certificate: Certificate,
}

impl GuessingResult {
    pub fn bounds(&self) -> (Scalar, Scalar) {
        match &self.v {
            Scalar::Exact(v) => {
                let (lo, hi) = trivial_bounds(self.n, v);
                (Scalar::Exact(lo), Scalar::Exact(hi))
            }
            Scalar::Float(v) => {
                let (lo, hi) = trivial_bounds(self.n, v);
                (Scalar::Float(lo), Scalar::Float(hi))
            }
        }
    }

    pub fn within_bounds(&self) -> bool {
        let (lo, hi) = self.bounds();
        match (&lo, &hi, &self.g) {
            (Scalar::Exact(lo), Scalar::Exact(hi), Scalar::Exact(g)) => lo <= g && g <= hi,
            _ => {
                let g = self.g.to_f64();
                lo.to_f64() - 1e-8 <= g && g <= hi.to_f64() + 1e-8
            }
        }
    }

    pub fn csv_record(&self) -> CsvRecord {
        let (lo, hi) = self.bounds();
        CsvRecord {
            scenario: self.scenario.to_string(),
            n: self.n,
            v: self.v.to_string(),
            g: self.g.to_string(),
            h: self.h,
            h_per_round: self.h / self.n as f64,
            mode: self.mode.to_string(),
            lower_bound: lo.to_string(),
            upper_bound: hi.to_string(),
        }
    }
}

/// One line of a sweep file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub scenario: String,
    pub n: usize,
    pub v: String,
    #[serde(rename = "G")]
    pub g: String,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "H_per_round")]
    pub h_per_round: f64,
    pub mode: String,
    pub lower_bound: String,
    pub upper_bound: String,
}

pub fn min_entropy(g: f64) -> f64 {
    -g.log2()
}

/// Solve the reduced LP at `v` in the mode carried by `v`.
pub fn guessing_probability(n: usize, scenario: ScenarioKind, v: &Scalar) -> Result<GuessingResult> {
    guessing_probability_with(Formulation::Reduced, n, scenario, v, 0, 0)
}

pub fn guessing_probability_with(
    formulation: Formulation,
    n: usize,
    scenario: ScenarioKind,
    v: &Scalar,
    x_star: usize,
    y_star: usize,
) -> Result<GuessingResult> {
    fn finish<T: Field>(
        formulation: Formulation,
        n: usize,
        scenario: ScenarioKind,
        v: &T,
        x_star: usize,
        y_star: usize,
    ) -> Result<GuessingResult> {
        let solved = solve_instance(formulation, n, scenario, v, x_star, y_star)?;
        let g = solved.solution.objective.clone();
        let certificate = Certificate::from_solved(&solved, formulation, n, scenario, v, x_star, y_star);
        Ok(GuessingResult {
            n,
            scenario,
            v: v.to_scalar(),
            h: min_entropy(g.to_f64()),
            g: g.to_scalar(),
            mode: T::MODE,
            certificate,
        })
    }
    match v {
        Scalar::Exact(r) => finish(formulation, n, scenario, r, x_star, y_star),
        Scalar::Float(f) => finish(formulation, n, scenario, f, x_star, y_star),
    }
}

/// `Σ_{a,b,x,y} ∏_i β(a_i,b_i,x_i,y_i) P(a,b|x,y)` with `β = 1/8` on CHSH-winning entries and `5/8` otherwise.
pub fn beta_bound<T: Field>(beh: &Behavior<T>) -> T {
    let n = beh.rounds();
    let s = 1usize << n;
    let eighth = T::one() / T::from_int(8);
    let five_eighths = T::from_int(5) / T::from_int(8);
    // the weight depends only on the number of lost rounds, so sum per class first
    let mut classes = vec![T::zero(); n + 1];
    for (idx, p) in beh.entries().iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let (a, b, x, y) = crate::behavior::split_index(n, idx);
        classes[((a ^ b ^ (x & y)) & (s - 1)).count_ones() as usize] += p;
    }
    let mut acc = T::zero();
    for (losses, sum) in classes.iter().enumerate() {
        let mut w = T::one();
        for k in 0..n {
            w = w.mul_ref(if k < losses { &five_eighths } else { &eighth });
        }
        acc.add_mul_assign(&w, sum);
    }
    acc
}

/// `((1 - v/2)^n, 1 - v/2)`
pub fn trivial_bounds<T: Field>(n: usize, v: &T) -> (T, T) {
    let single = T::one() - v.clone() / T::from_int(2);
    let mut lower = T::one();
    for _ in 0..n {
        lower = lower.mul_ref(&single);
    }
    (lower, single)
}

/// A breakpoint of a closed-form piece.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// `√2 - 1`
    Sqrt2Minus1,
    /// `√5 - 2`
    Sqrt5Minus2,
    /// Root of `x³ - 3x² - 13x + 3` in `[0, 1]`.
    CubicV1,
    /// Root of `x³ + 5x² + 3x - 5` in `[0, 1]`.
    CubicV2,
}

impl Threshold {
    pub fn value(self) -> f64 {
        match self {
            Threshold::Sqrt2Minus1 => std::f64::consts::SQRT_2 - 1.0,
            Threshold::Sqrt5Minus2 => 5f64.sqrt() - 2.0,
            Threshold::CubicV1 => cubic_root_in_unit(&[3.0, -13.0, -3.0, 1.0]),
            Threshold::CubicV2 => cubic_root_in_unit(&[-5.0, 3.0, 5.0, 1.0]),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Threshold::Sqrt2Minus1 => "sqrt(2)-1",
            Threshold::Sqrt5Minus2 => "sqrt(5)-2",
            Threshold::CubicV1 => "root of x^3-3x^2-13x+3 in [0,1]",
            Threshold::CubicV2 => "root of x^3+5x^2+3x-5 in [0,1]",
        }
    }
}

fn poly_f64(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

// Bisection on [0, 1]; the cubics used here change sign exactly once there.
fn cubic_root_in_unit(coeffs: &[f64]) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let flo = poly_f64(coeffs, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (poly_f64(coeffs, mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form `G_n(v)` on `[0, 1]`: polynomial `k` applies between breakpoints `k-1` and `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticPiece {
    pub scenario: ScenarioKind,
    pub n: usize,
    pub breakpoints: Vec<Threshold>,
    /// Coefficients in increasing degree.
    pub polynomials: Vec<Vec<Rational>>,
}

fn coeffs(c: &[(i64, i64)]) -> Vec<Rational> {
    c.iter().map(|&(p, q)| Rational::new(p, q).expect("nonzero denominator")).collect()
}

impl AnalyticPiece {
    pub fn new(n: usize, scenario: ScenarioKind) -> Result<Self> {
        use ScenarioKind::*;
        use Threshold::*;
        let (breakpoints, polynomials) = match (n, scenario) {
            (1, _) => (vec![], vec![coeffs(&[(1, 1), (-1, 2)])]),
            (2 | 3, FullNs) => {
                let (lo, _) = trivial_bounds_poly(n);
                (vec![], vec![lo])
            }
            (2, Abns) => (vec![Sqrt2Minus1], vec![coeffs(&[(1, 1), (-1, 2)]), coeffs(&[(9, 8), (-3, 4), (-1, 8)])]),
            (2, Tons | Wtons) => (vec![], vec![coeffs(&[(1, 1), (-3, 4)])]),
            (3, Abns) => (
                vec![CubicV1, CubicV2],
                vec![
                    coeffs(&[(1, 1), (-1, 2)]),
                    coeffs(&[(67, 64), (-45, 64), (-3, 64), (1, 64)]),
                    coeffs(&[(41, 32), (-27, 32), (-9, 32), (-1, 32)]),
                ],
            ),
            (3, Tons | Wtons) => (
                vec![Sqrt5Minus2],
                vec![coeffs(&[(1, 1), (-29, 32), (1, 8), (1, 32)]), coeffs(&[(1, 1), (-7, 8)])],
            ),
            _ => return Err(Error::InvalidArgument(format!("no closed form for n = {n}"))),
        };
        Ok(AnalyticPiece { scenario, n, breakpoints, polynomials })
    }

    fn piece_index(&self, v: f64) -> usize {
        self.breakpoints.iter().take_while(|t| v > t.value()).count()
    }

    pub fn evaluate(&self, v: f64) -> f64 {
        let poly: Vec<f64> = self.polynomials[self.piece_index(v)].iter().map(|c| c.to_f64()).collect();
        poly_f64(&poly, v)
    }

    /// Exact value at a rational `v` lying at least `margin` away from every breakpoint.
    pub fn exact_value(&self, v: &Rational, margin: f64) -> Option<Rational> {
        let vf = v.to_f64();
        if self.breakpoints.iter().any(|t| (vf - t.value()).abs() < margin) {
            return None;
        }
        let poly = &self.polynomials[self.piece_index(vf)];
        Some(poly.iter().rev().fold(Rational::zero(), |acc, c| &(&acc * v) + c))
    }

    /// Largest jump between adjacent pieces at the breakpoints.
    pub fn continuity_defect(&self) -> f64 {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let x = t.value();
                let l: Vec<f64> = self.polynomials[k].iter().map(|c| c.to_f64()).collect();
                let r: Vec<f64> = self.polynomials[k + 1].iter().map(|c| c.to_f64()).collect();
                (poly_f64(&l, x) - poly_f64(&r, x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

// Coefficients of (1 - v/2)^n and of 1 - v/2.
fn trivial_bounds_poly(n: usize) -> (Vec<Rational>, Vec<Rational>) {
    let single = coeffs(&[(1, 1), (-1, 2)]);
    let mut acc = vec![Rational::one()];
    for _ in 0..n {
        let mut next = vec![Rational::zero(); acc.len() + 1];
        for (i, a) in acc.iter().enumerate() {
            for (j, s) in single.iter().enumerate() {
                next[i + j] += &(a * s);
            }
        }
        acc = next;
    }
    (acc, single)
}

/// Closed-form reference for `n ∈ {1, 2, 3}`.
pub fn analytic_reference(n: usize, scenario: ScenarioKind, v: f64) -> Result<f64> {
    Ok(AnalyticPiece::new(n, scenario)?.evaluate(v))
}

/// Per-round min-entropy `H_k(v)/k` for `k = 1..=k_max` at each grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub v: Scalar,
    pub rates: Vec<f64>,
}

/// Solves `G_k` for every `k ≤ k_max` and grid point.
pub fn entropy_rates(scenario: ScenarioKind, grid: &[Scalar], k_max: usize) -> Result<Vec<RateRow>> {
    if k_max == 0 || k_max > MAX_ROUNDS {
        return Err(Error::RoundsOutOfRange(k_max, MAX_ROUNDS));
    }
    grid.iter()
        .map(|v| {
            let rates = (1..=k_max)
                .map(|k| Ok(guessing_probability(k, scenario, v)?.h / k as f64))
                .collect::<Result<Vec<_>>>()?;
            Ok(RateRow { v: v.clone(), rates })
        })
        .collect()
}

/// `H_k/k ≤ H_1` for every row (with a binary64 slack).
pub fn rates_bounded_by_single_round(rows: &[RateRow]) -> bool {
    rows.iter().all(|r| r.rates.iter().all(|h| *h <= r.rates[0] + 1e-12))
}
