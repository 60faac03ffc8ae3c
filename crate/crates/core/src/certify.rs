//! Independent checks of solver output: certificates, the two-scenario
//! sandwich, and the vertex test.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behavior::{flat_index, Behavior};
use crate::error::{Error, Result};
use crate::guessprob::{assemble, Formulation, Solved};
use crate::lp::LpProblem;
use crate::nosig::{scenario_rows, ConstraintSystem, ScenarioKind, SparseRow};
use crate::numeric::{Field, Mode, Rational};

/// SHA-256 over the canonical text of the row labels and sparse entries, in row order.
pub fn order_hash<T: Field>(sys: &ConstraintSystem<T>) -> String {
    let mut h = Sha256::new();
    h.update(format!("vars={}\n", sys.num_vars).as_bytes());
    let mut line = String::new();
    for (row, label) in sys.rows.iter().zip(&sys.labels) {
        line.clear();
        use std::fmt::Write;
        let _ = write!(line, "{label}|");
        for (k, (c, v)) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            let _ = write!(line, "{c}:{v}");
        }
        line.push('\n');
        h.update(line.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Exact rank of a set of integer rows over `num_cols` columns.
pub fn row_rank(rows: &[SparseRow], num_cols: usize) -> usize {
    let mut pivots: Vec<Option<Vec<(usize, Rational)>>> = vec![None; num_cols];
    let mut rank = 0;
    for row in rows {
        let mut r: Vec<(usize, Rational)> = row.iter().map(|(c, v)| (c, Rational::from_integer(v))).collect();
        loop {
            let Some(&(lead, _)) = r.first() else { break };
            match &pivots[lead] {
                Some(p) => {
                    let factor = r[0].1.clone();
                    r = axpy_sparse(&r, p, &factor);
                }
                None => {
                    let inv = r[0].1.recip().expect("nonzero leading entry");
                    let normalized: Vec<_> = r.iter().map(|(c, v)| (*c, v * &inv)).collect();
                    pivots[lead] = Some(normalized);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

// r - factor * p, where p has leading coefficient one on r's leading column.
fn axpy_sparse(r: &[(usize, Rational)], p: &[(usize, Rational)], factor: &Rational) -> Vec<(usize, Rational)> {
    let mut out = Vec::with_capacity(r.len() + p.len());
    let (mut i, mut j) = (0, 0);
    while i < r.len() || j < p.len() {
        let ci = r.get(i).map_or(usize::MAX, |e| e.0);
        let cj = p.get(j).map_or(usize::MAX, |e| e.0);
        if ci < cj {
            out.push(r[i].clone());
            i += 1;
        } else if cj < ci {
            out.push((cj, -(&p[j].1 * factor)));
            j += 1;
        } else {
            let v = &r[i].1 - &(&p[j].1 * factor);
            if !v.is_zero() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Bits of an n-round input string, round 1 first.
pub fn bits_to_string(n: usize, s: usize) -> String {
    (1..=n).map(|r| if crate::behavior::round_bit(n, s, r) == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bits(n: usize, s: &str) -> Result<usize> {
    if s.len() != n || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::InvalidArgument(format!("input string {s:?} is not {n} binary digits")));
    }
    Ok(usize::from_str_radix(s, 2).expect("binary digits"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub n: usize,
    pub scenario: ScenarioKind,
    pub v: String,
    pub mode: Mode,
    pub formulation: Formulation,
    pub x_star: String,
    pub y_star: String,
}

impl Metadata {
    fn inputs(&self) -> Result<(usize, usize)> {
        Ok((parse_bits(self.n, &self.x_star)?, parse_bits(self.n, &self.y_star)?))
    }

    /// Regenerates the LP the certificate refers to.
    pub fn problem<T: Field>(&self) -> Result<LpProblem<T>> {
        if self.mode != T::MODE {
            return Err(Error::InvalidArgument(format!("certificate mode {} read as {}", self.mode, T::MODE)));
        }
        let v = T::parse_text(&self.v)?;
        let (x, y) = self.inputs()?;
        assemble(self.formulation, self.n, self.scenario, &v, x, y)
    }
}

/// A primal/dual pair for one guessing LP, with textual scalars.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub metadata: Metadata,
    pub primal: Vec<(usize, String)>,
    pub dual: Vec<String>,
    pub objective: String,
    pub order_hash: String,
}

impl Certificate {
    pub fn from_solved<T: Field>(
        solved: &Solved<T>,
        formulation: Formulation,
        n: usize,
        scenario: ScenarioKind,
        v: &T,
        x_star: usize,
        y_star: usize,
    ) -> Self {
        Certificate {
            metadata: Metadata {
                n,
                scenario,
                v: v.to_text(),
                mode: T::MODE,
                formulation,
                x_star: bits_to_string(n, x_star),
                y_star: bits_to_string(n, y_star),
            },
            primal: solved.solution.primal.iter().map(|(j, p)| (*j, p.to_text())).collect(),
            dual: solved.solution.dual.iter().map(|y| y.to_text()).collect(),
            objective: solved.solution.objective.to_text(),
            order_hash: order_hash(&solved.problem.system),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation seen (textual scalar), or a short note.
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    /// First failure, if any.
    pub reason: Option<String>,
}

impl Report {
    pub fn accepted(&self) -> bool {
        self.reason.is_none()
    }

    fn push(&mut self, name: &'static str, failure: Option<String>, detail: String) {
        if self.reason.is_none() {
            if let Some(f) = &failure {
                self.reason = Some(format!("{name}: {f}"));
            }
        }
        self.checks.push(Check { name, passed: failure.is_none(), detail });
    }
}

struct Tolerances {
    feas: f64,
    opt: f64,
}

fn tolerances<T: Field>() -> Tolerances {
    match T::MODE {
        Mode::Exact => Tolerances { feas: 0.0, opt: 0.0 },
        Mode::Float => Tolerances { feas: 1e-8, opt: 1e-9 },
    }
}

fn max_abs<T: Field>(acc: &mut T, v: &T) {
    let a = v.abs();
    if a > *acc {
        *acc = a;
    }
}

fn parse_primal<T: Field>(n: usize, entries: &[(usize, String)]) -> std::result::Result<Vec<T>, String> {
    let mut p = vec![T::zero(); n];
    let mut last = None;
    for (j, s) in entries {
        if *j >= n {
            return Err(format!("primal index {j} out of range"));
        }
        if last.is_some_and(|l| l >= *j) {
            return Err(format!("primal index {j} out of order"));
        }
        last = Some(*j);
        p[*j] = T::parse_text(s).map_err(|e| format!("primal entry {j}: {e}"))?;
    }
    Ok(p)
}

fn parse_dual<T: Field>(m: usize, entries: &[String]) -> std::result::Result<Vec<T>, String> {
    if entries.len() != m {
        return Err(format!("{} dual entries for {m} rows", entries.len()));
    }
    entries.iter().enumerate().map(|(i, s)| T::parse_text(s).map_err(|e| format!("dual entry {i}: {e}"))).collect()
}

fn check_hash<T: Field>(report: &mut Report, prob: &LpProblem<T>, claimed: &str) {
    let h = order_hash(&prob.system);
    let fail = (h != claimed).then(|| format!("expected {h}, certificate has {claimed}"));
    report.push("order_hash", fail, h);
}

fn check_primal<T: Field>(report: &mut Report, prob: &LpProblem<T>, p: &[T], tol: &Tolerances) {
    let mut worst = T::zero();
    let mut fail = None;
    for (j, v) in p.iter().enumerate() {
        if v.is_negative() {
            max_abs(&mut worst, v);
            if fail.is_none() && !v.negligible(tol.feas) {
                fail = Some(format!("column {j} is negative ({v})"));
            }
        }
    }
    report.push("p >= 0", fail, worst.to_text());

    let mut worst = T::zero();
    let mut fail = None;
    for (i, (row, b)) in prob.system.rows.iter().zip(&prob.system.rhs).enumerate() {
        let r = row.dot(p) - b.clone();
        max_abs(&mut worst, &r);
        if fail.is_none() && !r.negligible(tol.feas) {
            fail = Some(format!("row {i} ({}) has residual {r}", prob.system.labels[i]));
        }
    }
    report.push("A p = b", fail, worst.to_text());
}

fn check_dual<T: Field>(report: &mut Report, prob: &LpProblem<T>, y: &[T], tol: &Tolerances) {
    let mut worst = T::zero();
    let mut fail = None;
    for (j, s) in prob.dual_slack(y).iter().enumerate() {
        if s.is_negative() {
            max_abs(&mut worst, s);
            if fail.is_none() && !s.negligible(tol.opt) {
                fail = Some(format!("column {j} has slack {s}"));
            }
        }
    }
    report.push("A^T y >= c", fail, worst.to_text());
}

fn check_equal<T: Field>(report: &mut Report, name: &'static str, got: &T, want: &T, tol: f64) {
    let d = got.clone() - want.clone();
    let fail = (!d.negligible(tol)).then(|| format!("{got} differs from {want}"));
    report.push(name, fail, d.abs().to_text());
}

fn verify_typed<T: Field>(cert: &Certificate) -> Result<Report> {
    let prob: LpProblem<T> = cert.metadata.problem()?;
    let tol = tolerances::<T>();
    let mut report = Report { checks: Vec::new(), reason: None };
    check_hash(&mut report, &prob, &cert.order_hash);
    let p = match parse_primal::<T>(prob.num_vars(), &cert.primal) {
        Ok(p) => p,
        Err(e) => {
            report.push("primal format", Some(e), String::new());
            return Ok(report);
        }
    };
    let y = match parse_dual::<T>(prob.num_rows(), &cert.dual) {
        Ok(y) => y,
        Err(e) => {
            report.push("dual format", Some(e), String::new());
            return Ok(report);
        }
    };
    let objective = match T::parse_text(&cert.objective) {
        Ok(o) => o,
        Err(e) => {
            report.push("objective format", Some(e.to_string()), String::new());
            return Ok(report);
        }
    };
    check_primal(&mut report, &prob, &p, &tol);
    check_dual(&mut report, &prob, &y, &tol);
    let gap_tol = tol.feas.max(tol.opt) * 10.0;
    check_equal(&mut report, "c^T p = objective", &prob.objective_value(&p), &objective, gap_tol);
    check_equal(&mut report, "b^T y = objective", &prob.dual_value(&y), &objective, gap_tol);
    Ok(report)
}

/// Rebuilds the LP from the certificate metadata and checks the pair it carries.
pub fn verify_certificate(cert: &Certificate) -> Result<Report> {
    match cert.metadata.mode {
        Mode::Exact => verify_typed::<Rational>(cert),
        Mode::Float => verify_typed::<f64>(cert),
    }
}

fn sandwich_typed<T: Field>(primal: &Certificate, dual: &Certificate) -> Result<Report> {
    let pm = &primal.metadata;
    let dm = &dual.metadata;
    if (pm.n, &pm.v, pm.mode, pm.formulation, &pm.x_star, &pm.y_star)
        != (dm.n, &dm.v, dm.mode, dm.formulation, &dm.x_star, &dm.y_star)
    {
        return Err(Error::InvalidArgument("certificates refer to different instances".into()));
    }
    let pp: LpProblem<T> = pm.problem()?;
    let dp: LpProblem<T> = dm.problem()?;
    let tol = tolerances::<T>();
    let mut report = Report { checks: Vec::new(), reason: None };
    check_hash(&mut report, &pp, &primal.order_hash);
    check_hash(&mut report, &dp, &dual.order_hash);
    let p = match parse_primal::<T>(pp.num_vars(), &primal.primal) {
        Ok(p) => p,
        Err(e) => {
            report.push("primal format", Some(e), String::new());
            return Ok(report);
        }
    };
    let y = match parse_dual::<T>(dp.num_rows(), &dual.dual) {
        Ok(y) => y,
        Err(e) => {
            report.push("dual format", Some(e), String::new());
            return Ok(report);
        }
    };
    check_primal(&mut report, &pp, &p, &tol);
    check_dual(&mut report, &dp, &y, &tol);
    let gap_tol = tol.feas.max(tol.opt) * 10.0;
    check_equal(&mut report, "primal value = dual value", &pp.objective_value(&p), &dp.dual_value(&y), gap_tol);
    Ok(report)
}

/// Primal feasible point of one scenario and dual feasible point of a larger
/// one with equal values: both optima then equal that value.
pub fn verify_sandwich(primal: &Certificate, dual: &Certificate) -> Result<Report> {
    match primal.metadata.mode {
        Mode::Exact => sandwich_typed::<Rational>(primal, dual),
        Mode::Float => sandwich_typed::<f64>(primal, dual),
    }
}

/// Whether a feasible behavior is a vertex of the scenario polytope: the
/// equality rows (normalization and no-signaling) together with the active
/// nonnegativity constraints have full column rank.
pub fn vertex_check(beh: &Behavior<Rational>, scenario: ScenarioKind) -> Result<bool> {
    let n = beh.rounds();
    if !beh.is_nonnegative() || !beh.is_normalized() {
        return Err(Error::InvalidArgument("behavior is not a normalized nonnegative table".into()));
    }
    let sys = scenario_rows(n, scenario)?;
    if let Some((i, r)) = sys.residuals(beh.entries())?.iter().enumerate().find(|(_, r)| !r.is_zero()) {
        return Err(Error::Infeasible { scenario: scenario.to_string(), row: i, residual: r.to_string() });
    }
    let s = 1usize << n;
    let mut rows: Vec<SparseRow> = sys.rows;
    for x in 0..s {
        for y in 0..s {
            let mut pairs = Vec::new();
            for a in 0..s {
                for b in 0..s {
                    pairs.push((flat_index(n, a, b, x, y) as u32, 1));
                }
            }
            rows.push(SparseRow::from_pairs(pairs));
        }
    }
    for (j, p) in beh.entries().iter().enumerate() {
        if p.is_zero() {
            rows.push(SparseRow::from_pairs(vec![(j as u32, 1)]));
        }
    }
    let dim = 1usize << (4 * n);
    Ok(row_rank(&rows, dim) == dim)
}
