//! The reduced LP restricted to behaviors invariant under the relabelings
//! `g_t: (a, b, x, y) ↦ (a ⊕ (x ∧ t), b, x, y ⊕ t)`.
//!
//! Every `g_t` maps the feasible set onto itself, and for Full-NS, ABNS and
//! TONS it also preserves the objective, because Alice's output marginal cannot depend
//! on `y`. An optimum can therefore be taken invariant, which leaves one free
//! value per orbit: the table at `y = 0`, `2^n` times fewer variables.
//!
//! The invariant solve is lifted back to a primal/dual pair of the original
//! reduced LP. The dual is averaged over the group, then corrected by the
//! no-signaling rows that move the objective from `y = 0` to every other `y`.
//! The pair is checked against the original problem before it is returned.

use std::collections::HashMap;

use crate::behavior::{flat_index, split_index};
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpSolution, LpStatus};
use crate::nosig::{families, ConstraintSystem, Family, RowLabel, ScenarioKind, Side, SparseRow};
use crate::numeric::Field;

/// Scenarios whose objective is invariant on the feasible set.
pub(super) fn applies(scenario: ScenarioKind) -> bool {
    matches!(scenario, ScenarioKind::FullNs | ScenarioKind::Abns | ScenarioKind::Tons)
}

fn act(n: usize, t: usize, j: usize) -> usize {
    let (a, b, x, y) = split_index(n, j);
    flat_index(n, a ^ (x & t), b, x, y ^ t)
}

/// Index of the orbit of `j`: its member with `y = 0`, with the `y` bits dropped.
fn orbit(n: usize, j: usize) -> usize {
    let y = j & ((1 << n) - 1);
    act(n, y, j) >> n
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Canonical rows of `sys`, keyed for lookups of images.
struct RowIndex(HashMap<SparseRow, usize>);

impl RowIndex {
    fn new(sys: &ConstraintSystem<impl Field>) -> Self {
        RowIndex(sys.rows.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect())
    }

    /// `(row, sign)` with `raw = sign · row`, or `None` for an empty `raw`.
    fn find(&self, raw: Vec<(u32, i64)>) -> Result<Option<(usize, i64)>> {
        let mut row = SparseRow::from_pairs(raw);
        if row.is_empty() {
            return Ok(None);
        }
        let sign = if row.canonicalize() { -1 } else { 1 };
        match self.0.get(&row) {
            Some(&i) => Ok(Some((i, sign))),
            None => Err(Error::Solver("image of a constraint row is not a row of the system".into())),
        }
    }
}

/// `M − M|signal=0` for a marginal functional `M` given by its columns.
fn against_reference(cols: &[usize], signal: usize) -> Vec<(u32, i64)> {
    let mut raw: Vec<(u32, i64)> = cols.iter().map(|&c| (c as u32, 1)).collect();
    raw.extend(cols.iter().map(|&c| ((c & !signal) as u32, -1)));
    raw
}

/// Image of row `i` under `g_t`, as signed multiples of rows of the system.
fn image(
    n: usize,
    sys: &ConstraintSystem<impl Field>,
    index: &RowIndex,
    signals: &HashMap<(Side, usize), usize>,
    t: usize,
    i: usize,
) -> Result<Vec<(usize, i64)>> {
    let s = 1usize << n;
    match sys.labels[i] {
        RowLabel::Marginal { x, y, b } => Ok(vec![((x * s + (y ^ t)) * s + (b ^ (x & t)), 1)]),
        RowLabel::NoSignaling { side, round, .. } => {
            let signal = signals[&(side, round)];
            // each row is a difference of two marginals of one family sharing the free part
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for (j, a) in sys.rows[i].iter() {
                let g = act(n, t, j);
                match a {
                    1 => pos.push(g),
                    -1 => neg.push(g),
                    _ => return Err(Error::Solver("unexpected coefficient in a no-signaling row".into())),
                }
            }
            let mut out = Vec::new();
            for (cols, sign) in [(pos, 1), (neg, -1)] {
                if let Some((k, s)) = index.find(against_reference(&cols, signal))? {
                    out.push((k, sign * s));
                }
            }
            Ok(out)
        }
        other => Err(Error::Solver(format!("row {other} has no known image"))),
    }
}

/// Rows (with signs) summing to `Σ_b P(0,b|0,t) − Σ_b P(0,b|0,0)`. The bits of
/// `t` are switched on one at a time, each step through a Bob-side family
/// that keeps all of Alice's outputs and lets that bit of `y` vary.
fn objective_shift(n: usize, index: &RowIndex, fams: &[Family], t: usize) -> Result<Vec<(usize, i64)>> {
    let all = (1usize << n) - 1;
    let mut out = Vec::new();
    let mut y = 0;
    for bit in (0..n).map(|k| 1 << k).filter(|b| t & b != 0) {
        let fam = fams
            .iter()
            .find(|f| f.side == Side::Bob && f.keep_a == all && f.sig_y & bit != 0)
            .ok_or_else(|| Error::Solver("objective is not invariant in this scenario".into()))?;
        let signal = flat_index(n, 0, 0, fam.sig_x, fam.sig_y);
        let dropped = all & !fam.keep_b;
        let cols = |kept: usize, y: usize| -> Vec<usize> {
            (0..=all).filter(|d| d & !dropped == 0).map(|d| flat_index(n, 0, kept | d, 0, y)).collect()
        };
        for kept in (0..=all).filter(|k| k & dropped == 0) {
            for (yy, sign) in [(y | bit, 1), (y, -1)] {
                if let Some((k, s)) = index.find(against_reference(&cols(kept, yy), signal))? {
                    out.push((k, sign * s));
                }
            }
        }
        y |= bit;
    }
    Ok(out)
}

/// Solves `prob`, the reduced LP of `scenario` with `n` rounds, in the invariant subspace.
pub(super) fn solve<T: Field>(prob: &LpProblem<T>, n: usize, scenario: ScenarioKind) -> Result<LpSolution<T>> {
    let sys = &prob.system;
    let group = 1usize << n;

    // projected rows, deduplicated up to a nonzero multiple
    let mut seen: HashMap<SparseRow, usize> = HashMap::new();
    let mut small = ConstraintSystem::empty(sys.num_vars >> n);
    let mut origin: Vec<(usize, i64)> = Vec::new();
    for (i, row) in sys.rows.iter().enumerate() {
        let mut r = SparseRow::from_pairs(row.iter().map(|(j, a)| (orbit(n, j) as u32, a)).collect());
        if r.is_empty() {
            if !sys.rhs[i].is_zero() {
                return Err(Error::Solver("projected problem is infeasible".into()));
            }
            continue;
        }
        let mut scale = r.coefs.iter().fold(0, |g, &c| gcd(g, c));
        if r.canonicalize() {
            scale = -scale;
        }
        for c in &mut r.coefs {
            *c /= scale.abs();
        }
        if seen.contains_key(&r) {
            continue;
        }
        seen.insert(r.clone(), origin.len());
        origin.push((i, scale));
        small.push(r, sys.rhs[i].div_ref(&T::from_int(scale)), sys.labels[i]);
    }
    let mut objective: Vec<(usize, T)> = Vec::new();
    for (j, c) in &prob.objective {
        let k = orbit(n, *j);
        match objective.iter_mut().find(|e| e.0 == k) {
            Some(e) => e.1 += c,
            None => objective.push((k, c.clone())),
        }
    }
    objective.sort_by_key(|e| e.0);
    let small = LpProblem::new(small, objective)?;
    log::debug!("invariant subproblem: {} rows, {} columns", small.num_rows(), small.num_vars());
    let sol = lp::solve(&small)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("invariant subproblem reported {:?}", sol.status)));
    }

    let mut primal = Vec::with_capacity(sol.primal.len() * group);
    for (k, val) in &sol.primal {
        for t in 0..group {
            primal.push((act(n, t, k << n), val.clone()));
        }
    }
    primal.sort_by_key(|e| e.0);

    // one original row per projected row carries its multiplier
    let mut y = vec![T::zero(); sys.len()];
    for ((i, scale), w) in origin.iter().zip(&sol.dual) {
        y[*i] = w.div_ref(&T::from_int(*scale));
    }
    let index = RowIndex::new(sys);
    let fams = families(n, scenario);
    let signals: HashMap<(Side, usize), usize> = fams
        .iter()
        .map(|f| ((f.side, f.round), flat_index(n, 0, 0, f.sig_x, f.sig_y)))
        .collect();
    let weight = T::one().div_ref(&T::from_int(group as i64));
    let mut dual = vec![T::zero(); sys.len()];
    for (i, yi) in y.iter().enumerate() {
        if yi.is_zero() {
            continue;
        }
        let share = yi.mul_ref(&weight);
        for t in 0..group {
            for (k, sign) in image(n, sys, &index, &signals, t, i)? {
                if sign > 0 {
                    dual[k] += &share;
                } else {
                    dual[k] -= &share;
                }
            }
        }
    }

    // the averaged dual covers the averaged objective; the rows moving
    // Σ_b P(0,b|0,y) from y = 0 to every other y carry the rest
    for t in 1..group {
        for (k, sign) in objective_shift(n, &index, &fams, t)? {
            if sign > 0 {
                dual[k] -= &weight;
            } else {
                dual[k] += &weight;
            }
        }
    }

    let lifted = LpSolution {
        status: LpStatus::Optimal,
        primal,
        dual,
        objective: sol.objective.clone(),
        basis: Vec::new(),
        pivots: sol.pivots,
        ray: None,
    };
    lp::check_optimal(prob, &lifted)?;
    Ok(lifted)
}
