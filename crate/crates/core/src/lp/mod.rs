//! Linear programs in the standard form `max cᵀp  s.t.  A p = b, p ≥ 0`.
//!
//! [`solve`] runs a two-phase revised simplex. In exact mode a binary64 solve
//! is done first and its final basis seeds the rational solve, which then
//! finishes with exact pivots; the returned solution is checked exactly
//! before it is reported optimal.

pub mod lu;
pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nosig::{ConstraintDump, ConstraintSystem};
use crate::numeric::{Field, Mode};
use lu::{Factor, SparseVec};
use simplex::{Matrix, Options, Outcome, Simplex};

#[derive(Clone, Debug)]
pub struct LpProblem<T> {
    /// Objective to maximize, as (variable, coefficient) pairs.
    pub objective: Vec<(usize, T)>,
    pub system: ConstraintSystem<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Nonzero primal entries, ascending by variable.
    pub primal: Vec<(usize, T)>,
    /// One multiplier per row, in row order. For an infeasible problem these are
    /// the phase-1 multipliers, a Farkas witness: `Aᵀy ≤ 0` and `bᵀy > 0`.
    pub dual: Vec<T>,
    pub objective: T,
    /// Basic columns; values `>= num_vars` denote the artificial of row `value - num_vars`.
    pub basis: Vec<usize>,
    pub pivots: usize,
    /// For an unbounded problem, an improving ray of the feasible set.
    pub ray: Option<Vec<(usize, T)>>,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub max_pivots: usize,
    /// Consecutive degenerate pivots before Bland's rule is used; `None` means `3 × rows`.
    pub stall_limit: Option<usize>,
    /// Exact mode only: seed the rational solve with a binary64 solve.
    pub float_warm_start: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_pivots: usize::MAX, stall_limit: None, float_warm_start: true }
    }
}

/// Sparse JSON form of `(A, b, c)` for cross-checking with other solvers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpDump {
    pub sense: String,
    pub constraints: ConstraintDump,
    pub objective: Vec<(usize, String)>,
}

impl<T: Field> LpProblem<T> {
    pub fn new(system: ConstraintSystem<T>, objective: Vec<(usize, T)>) -> Result<Self> {
        if let Some((j, _)) = objective.iter().find(|(j, _)| *j >= system.num_vars) {
            return Err(Error::DimensionMismatch(format!(
                "objective index {j} with {} variables",
                system.num_vars
            )));
        }
        Ok(LpProblem { objective, system })
    }

    pub fn num_vars(&self) -> usize {
        self.system.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.system.len()
    }

    pub fn objective_value(&self, p: &[T]) -> T {
        let mut acc = T::zero();
        for (j, c) in &self.objective {
            acc.add_mul_assign(c, &p[*j]);
        }
        acc
    }

    /// `bᵀy`
    pub fn dual_value(&self, y: &[T]) -> T {
        let mut acc = T::zero();
        for (b, yi) in self.system.rhs.iter().zip(y) {
            acc.add_mul_assign(b, yi);
        }
        acc
    }

    /// `Aᵀy - c`, one entry per variable.
    pub fn dual_slack(&self, y: &[T]) -> Vec<T> {
        let mut s = vec![T::zero(); self.num_vars()];
        for (row, yi) in self.system.rows.iter().zip(y) {
            if yi.is_zero() {
                continue;
            }
            for (j, a) in row.iter() {
                s[j].add_mul_assign(&T::from_int(a), yi);
            }
        }
        for (j, c) in &self.objective {
            s[*j] -= c;
        }
        s
    }

    pub fn to_dump(&self) -> LpDump {
        LpDump {
            sense: "max".into(),
            constraints: self.system.to_dump(),
            objective: self.objective.iter().map(|(j, c)| (*j, c.to_text())).collect(),
        }
    }

    fn to_float(&self) -> LpProblem<f64> {
        LpProblem {
            objective: self.objective.iter().map(|(j, c)| (*j, c.to_f64())).collect(),
            system: self.system.map_rhs(|b| b.to_f64()),
        }
    }

    fn signed_matrix(&self) -> (Matrix, Vec<bool>, Vec<T>) {
        let flip: Vec<bool> = self.system.rhs.iter().map(|b| b.is_negative()).collect();
        let rows = self.system.rows.iter().zip(&flip).map(|(r, &f)| {
            r.iter().map(|(j, a)| (j, if f { -a } else { a })).collect::<Vec<_>>()
        });
        let a = Matrix::from_rows(self.num_vars(), rows);
        let b = self.system.rhs.iter().map(|b| b.abs()).collect();
        (a, flip, b)
    }
}

fn run<T: Field>(prob: &LpProblem<T>, opts: &SolveOptions, warm: Option<&[usize]>) -> Result<LpSolution<T>> {
    let (a, flip, b) = prob.signed_matrix();
    let m = a.m;
    let n = a.n;
    let mut sopts = Options::for_mode(T::MODE);
    sopts.max_pivots = opts.max_pivots;
    sopts.stall_limit = Some(opts.stall_limit.unwrap_or(3 * m.max(1)));
    let mut outcome = None;
    let mut s = Simplex::new(&a, b.clone(), sopts.clone(), warm);
    if warm.is_some() {
        if s.primal_feasible() && !s.artificial_mass_positive() {
            outcome = Some(s.run(&prob.objective));
        } else {
            outcome = s.run_dual(&prob.objective);
        }
    }
    if outcome.is_none() {
        if let Some(crash) = simplex::crash_basis(&a, &prob.objective) {
            s = Simplex::new(&a, b.clone(), sopts.clone(), Some(&crash));
            outcome = s.run_dual(&prob.objective);
        }
    }
    if outcome.is_none() || outcome == Some(Outcome::Infeasible) {
        // cold two-phase primal; also the source of the Farkas witness
        s = Simplex::new(&a, b, sopts, None);
        outcome = Some(s.run(&prob.objective));
    }
    let outcome = outcome.expect("set above");
    let unflip = |y: Vec<T>| -> Vec<T> {
        y.into_iter().zip(&flip).map(|(v, &f)| if f { -v } else { v }).collect()
    };
    let basis = s.basis().to_vec();
    match outcome {
        Outcome::Optimal => {
            let p = s.primal();
            let dual = unflip(s.duals());
            let objective = prob.objective_value(&p);
            let primal = p.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
            Ok(LpSolution { status: LpStatus::Optimal, primal, dual, objective, basis, pivots: s.pivots, ray: None })
        }
        Outcome::Infeasible => Ok(LpSolution {
            status: LpStatus::Infeasible,
            primal: Vec::new(),
            dual: unflip(s.phase_one_duals()).into_iter().map(|v| -v).collect(),
            objective: T::zero(),
            basis,
            pivots: s.pivots,
            ray: None,
        }),
        Outcome::Unbounded { entering } => {
            // ray: increase `entering`, basic variables move by -B⁻¹a_q
            let mut alpha = vec![T::zero(); m];
            for (i, v) in a.column(entering) {
                alpha[i] = T::from_int(v);
            }
            let cols: Vec<SparseVec<T>> = basis.iter().map(|&j| basis_column(&a, j)).collect();
            let (f, _) = Factor::new(m, &cols, 0.0);
            f.ftran(&mut alpha);
            let mut ray = vec![(entering, T::one())];
            for (pos, &j) in basis.iter().enumerate() {
                if j < n && !alpha[pos].is_zero() {
                    ray.push((j, -alpha[pos].clone()));
                }
            }
            ray.sort_by_key(|e| e.0);
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                primal: s.primal().into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect(),
                dual: Vec::new(),
                objective: T::zero(),
                basis,
                pivots: s.pivots,
                ray: Some(ray),
            })
        }
        Outcome::PivotLimit => Err(Error::Solver(format!("pivot limit reached after {} pivots", s.pivots))),
        Outcome::Numerical(msg) => Err(Error::Solver(format!("numerical failure: {msg}"))),
    }
}

fn basis_column<T: Field>(a: &Matrix, j: usize) -> SparseVec<T> {
    if j >= a.n {
        SparseVec::unit(j - a.n)
    } else {
        let mut c = SparseVec::new();
        for (i, v) in a.column(j) {
            c.push(i, T::from_int(v));
        }
        c
    }
}

/// Solve the problem. Exact mode reports `Optimal` only after an exact check of
/// primal feasibility, dual feasibility and equal objectives.
pub fn solve<T: Field>(prob: &LpProblem<T>) -> Result<LpSolution<T>> {
    solve_with(prob, &SolveOptions::default())
}

pub fn solve_with<T: Field>(prob: &LpProblem<T>, opts: &SolveOptions) -> Result<LpSolution<T>> {
    let mut warm = None;
    if T::MODE == Mode::Exact && opts.float_warm_start && prob.num_rows() > 0 {
        match run(&prob.to_float(), opts, None) {
            Ok(fs) if fs.status == LpStatus::Optimal => warm = Some(fs.basis),
            Ok(_) => {}
            Err(e) => log::debug!("float warm start failed: {e}"),
        }
    }
    let sol = run(prob, opts, warm.as_deref())?;
    if sol.status == LpStatus::Optimal {
        check_optimal(prob, &sol)?;
    }
    Ok(sol)
}

/// Optimality conditions of a claimed optimal solution, exact in exact mode and
/// to the float tolerances otherwise.
pub fn check_optimal<T: Field>(prob: &LpProblem<T>, sol: &LpSolution<T>) -> Result<()> {
    let (feas, opt) = match T::MODE {
        Mode::Exact => (0.0, 0.0),
        Mode::Float => (1e-8, 1e-9),
    };
    let mut p = vec![T::zero(); prob.num_vars()];
    for (j, v) in &sol.primal {
        if v.is_negative() && !v.negligible(feas) {
            return Err(Error::Solver(format!("negative primal entry at column {j}")));
        }
        p[*j] = v.clone();
    }
    for (i, r) in prob.system.residuals(&p)?.iter().enumerate() {
        if !r.negligible(feas) {
            return Err(Error::Solver(format!("primal residual {r} at row {i}")));
        }
    }
    for (j, s) in prob.dual_slack(&sol.dual).iter().enumerate() {
        if (-s.clone()).exceeds(opt) {
            return Err(Error::Solver(format!("dual infeasible at column {j}: slack {s}")));
        }
    }
    let gap = prob.objective_value(&p) - prob.dual_value(&sol.dual);
    if !gap.negligible(feas.max(opt) * 10.0) {
        return Err(Error::Solver(format!("duality gap {gap}")));
    }
    Ok(())
}

/// Dual vector `y = B⁻ᵀ c_B` recomputed from the optimal basis of `sol`.
pub fn extract_dual<T: Field>(sol: &LpSolution<T>, prob: &LpProblem<T>) -> Result<Vec<T>> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("no dual for a {:?} solution", sol.status)));
    }
    let (a, flip, _) = prob.signed_matrix();
    if sol.basis.len() != a.m {
        return Err(Error::DimensionMismatch(format!("basis of size {} for {} rows", sol.basis.len(), a.m)));
    }
    let cols: Vec<SparseVec<T>> = sol.basis.iter().map(|&j| basis_column(&a, j)).collect();
    let (f, sing) = Factor::new(a.m, &cols, if T::MODE == Mode::Exact { 0.0 } else { 1e-14 });
    if !sing.replaced.is_empty() {
        return Err(Error::Solver("singular basis".into()));
    }
    let mut cost = vec![T::zero(); a.n];
    for (j, c) in &prob.objective {
        cost[*j] += c;
    }
    let mut y: Vec<T> = sol.basis.iter().map(|&j| if j < a.n { cost[j].clone() } else { T::zero() }).collect();
    f.btran(&mut y);
    Ok(y.into_iter().zip(&flip).map(|(v, &fl)| if fl { -v } else { v }).collect())
}
