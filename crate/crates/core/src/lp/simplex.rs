//! Two-phase revised primal simplex over a [`Field`].
//!
//! Every row gets an artificial column (row signs are flipped so that the
//! right-hand side is nonnegative). Phase 1 minimizes the sum of artificials.
//! In phase 2 artificials still in the basis are fixed to zero: they leave on
//! the first pivot whose column touches them and never re-enter, so redundant
//! rows simply keep a zero artificial in the basis.

use log::debug;

use super::lu::{Factor, SparseVec};
use crate::numeric::{Field, Mode};

#[derive(Clone, Debug)]
pub struct Options {
    pub max_pivots: usize,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots after which Bland's rule takes over.
    pub stall_limit: Option<usize>,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub drop_tol: f64,
}

impl Options {
    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Exact => Options {
                max_pivots: usize::MAX,
                refactor_every: 80,
                stall_limit: None,
                feas_tol: 0.0,
                opt_tol: 0.0,
                pivot_tol: 0.0,
                drop_tol: 0.0,
            },
            Mode::Float => Options {
                max_pivots: usize::MAX,
                refactor_every: 100,
                stall_limit: None,
                feas_tol: 1e-9,
                opt_tol: 1e-9,
                pivot_tol: 1e-7,
                drop_tol: 1e-14,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Optimal,
    Infeasible,
    Unbounded { entering: usize },
    PivotLimit,
    Numerical(String),
}

/// Column-and-row storage of the sign-adjusted constraint matrix.
pub struct Matrix {
    pub m: usize,
    pub n: usize,
    col_ptr: Vec<usize>,
    col_row: Vec<u32>,
    col_val: Vec<i64>,
    row_ptr: Vec<usize>,
    row_col: Vec<u32>,
    row_val: Vec<i64>,
}

impl Matrix {
    /// Build from rows given as (column, coefficient) lists.
    pub fn from_rows<'a>(n: usize, rows: impl Iterator<Item = Vec<(usize, i64)>>) -> Self {
        let mut row_ptr = vec![0];
        let mut row_col = Vec::new();
        let mut row_val = Vec::new();
        let mut counts = vec![0usize; n];
        for r in rows {
            for (c, v) in r {
                row_col.push(c as u32);
                row_val.push(v);
                counts[c] += 1;
            }
            row_ptr.push(row_col.len());
        }
        let m = row_ptr.len() - 1;
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let mut fill = col_ptr.clone();
        let mut col_row = vec![0u32; row_col.len()];
        let mut col_val = vec![0i64; row_col.len()];
        for i in 0..m {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = row_col[k] as usize;
                col_row[fill[j]] = i as u32;
                col_val[fill[j]] = row_val[k];
                fill[j] += 1;
            }
        }
        Matrix { m, n, col_ptr, col_row, col_val, row_ptr, row_col, row_val }
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.col_row[k] as usize, self.col_val[k]))
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.row_col[k] as usize, self.row_val[k]))
    }
}

pub struct Simplex<'a, T: Field> {
    a: &'a Matrix,
    opts: Options,
    m: usize,
    n: usize,
    b: Vec<T>,
    cost: Vec<T>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    xb: Vec<T>,
    d: Vec<T>,
    factor: Factor<T>,
    phase: u8,
    pub pivots: usize,
    bland: bool,
    degenerate_run: usize,
    /// Dual steepest-edge weights `‖e_rᵀB⁻¹‖²` per basis position (float mode).
    dse: Vec<f64>,
    /// Basis positions whose pivot row proved unstable since the last successful pivot.
    rejected: Vec<usize>,
}

const NONBASIC: usize = usize::MAX;

const PERTURBATION: f64 = 1e-6;

/// Deterministic value in [0, 1) derived from a column index.
fn jitter(j: usize) -> f64 {
    let mut z = (j as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

impl<'a, T: Field> Simplex<'a, T> {
    /// `b` must already be nonnegative (rows sign-adjusted by the caller).
    pub fn new(a: &'a Matrix, b: Vec<T>, opts: Options, warm: Option<&[usize]>) -> Self {
        let (m, n) = (a.m, a.n);
        let basis: Vec<usize> = match warm {
            Some(w) if w.len() == m => w.to_vec(),
            _ => (n..n + m).collect(),
        };
        let mut s = Simplex {
            a,
            m,
            n,
            b,
            cost: vec![T::zero(); n + m],
            pos_of: vec![NONBASIC; n + m],
            basis,
            xb: Vec::new(),
            d: vec![T::zero(); n + m],
            factor: Factor::new(0, &[], 0.0).0,
            phase: 1,
            pivots: 0,
            bland: false,
            degenerate_run: 0,
            dse: vec![1.0; m],
            rejected: Vec::new(),
            opts,
        };
        s.refactor();
        s
    }

    fn column(&self, j: usize) -> SparseVec<T> {
        if j >= self.n {
            SparseVec::unit(j - self.n)
        } else {
            let mut c = SparseVec::new();
            for (i, v) in self.a.column(j) {
                c.push(i, T::from_int(v));
            }
            c
        }
    }

    fn dense_column(&self, j: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.m];
        if j >= self.n {
            v[j - self.n] = T::one();
        } else {
            for (i, a) in self.a.column(j) {
                v[i] = T::from_int(a);
            }
        }
        v
    }

    fn refactor(&mut self) {
        let cols: Vec<SparseVec<T>> = self.basis.iter().map(|&j| self.column(j)).collect();
        let (f, sing) = Factor::new(self.m, &cols, self.opts.drop_tol);
        self.factor = f;
        for (pos, row) in sing.replaced {
            debug!("basis position {pos} dependent; replaced by artificial of row {row}");
            self.basis[pos] = self.n + row;
        }
        self.pos_of.iter_mut().for_each(|p| *p = NONBASIC);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.pos_of[j] = pos;
        }
        let mut x = self.b.clone();
        self.factor.ftran(&mut x);
        self.xb = x;
    }

    /// Basic primal values are nonnegative (within tolerance).
    pub fn primal_feasible(&self) -> bool {
        self.xb.iter().all(|x| !(-x.clone()).exceeds(self.opts.feas_tol))
    }

    pub fn artificial_mass_positive(&self) -> bool {
        self.basis
            .iter()
            .zip(&self.xb)
            .any(|(&j, x)| j >= self.n && x.exceeds(self.opts.feas_tol))
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    fn set_phase(&mut self, phase: u8, objective: &[(usize, T)]) {
        self.phase = phase;
        self.cost.iter_mut().for_each(|c| *c = T::zero());
        if phase == 1 {
            for j in self.n..self.n + self.m {
                self.cost[j] = -T::one();
            }
        } else {
            for (j, c) in objective {
                self.cost[*j] += c;
            }
        }
        self.recompute_duals();
    }

    /// Simplex multipliers for the current costs, indexed by (sign-adjusted) row.
    pub fn duals(&self) -> Vec<T> {
        let mut y: Vec<T> = self.basis.iter().map(|&j| self.cost[j].clone()).collect();
        self.factor.btran(&mut y);
        y
    }

    fn recompute_duals(&mut self) {
        let y = self.duals();
        for j in 0..self.n + self.m {
            if self.pos_of[j] != NONBASIC {
                self.d[j] = T::zero();
                continue;
            }
            let mut dj = self.cost[j].clone();
            if j >= self.n {
                dj -= &y[j - self.n];
            } else {
                for (i, a) in self.a.column(j) {
                    if !y[i].is_zero() {
                        dj.sub_mul_assign(&T::from_int(a), &y[i]);
                    }
                }
            }
            self.d[j] = dj;
        }
    }

    fn eligible(&self, j: usize) -> bool {
        self.pos_of[j] == NONBASIC && (j < self.n || self.phase == 1)
    }

    fn choose_entering(&self) -> Option<usize> {
        let tol = self.opts.opt_tol;
        let limit = if self.phase == 1 { self.n + self.m } else { self.n };
        if self.bland {
            return (0..limit).find(|&j| self.eligible(j) && self.d[j].exceeds(tol));
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..limit {
            if !self.eligible(j) || !self.d[j].exceeds(tol) {
                continue;
            }
            let score = self.d[j].to_f64();
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Returns the leaving position and step length, or None when the ray is unbounded.
    fn ratio_test(&self, alpha: &[T]) -> Option<(usize, T)> {
        let ptol = self.opts.pivot_tol;
        let fixed = |pos: usize| self.phase == 2 && self.basis[pos] >= self.n;
        // A basic artificial in phase 2 blocks any movement in which it takes part.
        let blocking = |pos: usize| {
            if fixed(pos) {
                !alpha[pos].negligible(ptol)
            } else {
                alpha[pos].exceeds(ptol)
            }
        };
        match T::MODE {
            Mode::Exact => {
                let mut best: Option<(usize, T)> = None;
                for pos in 0..self.m {
                    if !blocking(pos) {
                        continue;
                    }
                    let ratio = if fixed(pos) { T::zero() } else { self.xb[pos].div_ref(&alpha[pos]) };
                    let take = match &best {
                        None => true,
                        Some((bp, br)) => {
                            if ratio < *br {
                                true
                            } else if ratio == *br {
                                if self.bland {
                                    self.basis[pos] < self.basis[*bp]
                                } else {
                                    alpha[pos].abs().to_f64() > alpha[*bp].abs().to_f64()
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if take {
                        best = Some((pos, ratio));
                    }
                }
                best
            }
            Mode::Float => {
                let ftol = self.opts.feas_tol;
                let mut theta_max = f64::INFINITY;
                for pos in 0..self.m {
                    if !blocking(pos) {
                        continue;
                    }
                    let a = alpha[pos].to_f64().abs();
                    let x = if fixed(pos) { 0.0 } else { self.xb[pos].to_f64().max(0.0) };
                    theta_max = theta_max.min((x + ftol) / a);
                }
                if theta_max == f64::INFINITY {
                    return None;
                }
                let mut best: Option<(usize, f64, f64)> = None;
                for pos in 0..self.m {
                    if !blocking(pos) {
                        continue;
                    }
                    let a = alpha[pos].to_f64().abs();
                    let x = if fixed(pos) { 0.0 } else { self.xb[pos].to_f64().max(0.0) };
                    let ratio = x / a;
                    if ratio > theta_max {
                        continue;
                    }
                    let take = match best {
                        None => true,
                        Some((bp, _, ba)) => {
                            if self.bland {
                                self.basis[pos] < self.basis[bp]
                            } else {
                                a > ba
                            }
                        }
                    };
                    if take {
                        best = Some((pos, ratio, a));
                    }
                }
                best.map(|(pos, ratio, _)| (pos, T::from_float(ratio)))
            }
        }
    }

    fn pivot_row(&self, pos: usize) -> Vec<T> {
        self.pivot_row_with_rho(pos).0
    }

    fn pivot_row_with_rho(&self, pos: usize) -> (Vec<T>, Vec<T>) {
        let mut rho = vec![T::zero(); self.m];
        rho[pos] = T::one();
        self.factor.btran(&mut rho);
        // alpha_r over all columns
        let mut row = vec![T::zero(); self.n + self.m];
        for (i, r) in rho.iter().enumerate() {
            if r.is_zero() {
                continue;
            }
            for (j, a) in self.a.row(i) {
                row[j].add_mul_assign(&T::from_int(a), r);
            }
            row[self.n + i] = r.clone();
        }
        (row, rho)
    }

    /// Run the current phase to completion.
    fn iterate(&mut self) -> Outcome {
        loop {
            if self.pivots >= self.opts.max_pivots {
                return Outcome::PivotLimit;
            }
            let Some(q) = self.choose_entering() else {
                if T::MODE == Mode::Float && self.factor.num_updates() > 0 {
                    // confirm on a fresh factorization
                    self.refactor();
                    self.recompute_duals();
                    if self.choose_entering().is_some() {
                        continue;
                    }
                }
                return Outcome::Optimal;
            };
            let mut alpha = self.dense_column(q);
            let spike = self.factor.ftran_spike(&mut alpha);
            let Some((r, theta)) = self.ratio_test(&alpha) else {
                return Outcome::Unbounded { entering: q };
            };
            let dq = self.d[q].clone();
            let prow = self.pivot_row(r);
            let arq = alpha[r].clone();
            if arq.negligible(self.opts.pivot_tol) || prow[q].negligible(self.opts.pivot_tol) {
                return Outcome::Numerical(format!("tiny pivot at column {q}"));
            }

            // primal update
            if !theta.is_zero() {
                for (pos, a) in alpha.iter().enumerate() {
                    if !a.is_zero() {
                        self.xb[pos].sub_mul_assign(a, &theta);
                    }
                }
            }
            self.xb[r] = theta.clone();

            // reduced-cost update
            let ratio = dq.div_ref(&arq);
            for (j, arj) in prow.iter().enumerate() {
                if !arj.is_zero() && self.pos_of[j] == NONBASIC {
                    self.d[j].sub_mul_assign(&ratio, arj);
                }
            }
            let leaving = self.basis[r];
            self.d[q] = T::zero();
            self.d[leaving] = -ratio;

            let consistent = self.factor.update(r, &spike, &alpha[r]);
            self.pos_of[leaving] = NONBASIC;
            self.pos_of[q] = r;
            self.basis[r] = q;
            self.pivots += 1;

            self.track_degeneracy(theta.negligible(self.opts.feas_tol));

            if !consistent || self.factor.stale(self.opts.refactor_every) {
                self.refactor();
                if T::MODE == Mode::Float {
                    self.recompute_duals();
                }
            }
            if self.pivots % 1000 == 0 {
                debug!(
                    "phase {} pivots {} objective {} factor nnz {} bland {}",
                    self.phase,
                    self.pivots,
                    self.objective_f64(),
                    self.factor.nnz(),
                    self.bland
                );
            }
        }
    }

    fn objective_f64(&self) -> f64 {
        self.basis.iter().zip(&self.xb).map(|(&j, x)| self.cost[j].to_f64() * x.to_f64()).sum()
    }

    fn choose_leaving(&self) -> Option<(usize, T)> {
        let tol = self.opts.feas_tol;
        let mut best: Option<(usize, T, f64)> = None;
        for (pos, x) in self.xb.iter().enumerate() {
            let j = self.basis[pos];
            if self.rejected.contains(&pos) {
                continue;
            }
            let delta = if (-x.clone()).exceeds(tol) || (j >= self.n && x.exceeds(tol)) {
                x.clone()
            } else {
                continue;
            };
            let df = delta.to_f64();
            let score = match T::MODE {
                Mode::Float => df * df / self.dse[pos],
                Mode::Exact => df.abs(),
            };
            let take = match &best {
                None => true,
                Some((bp, _, s)) => {
                    if self.bland {
                        j < self.basis[*bp]
                    } else {
                        score > *s
                    }
                }
            };
            if take {
                best = Some((pos, delta, score));
            }
        }
        best.map(|(pos, delta, _)| (pos, delta))
    }

    /// Dual ratio test on the pivot row: the entering column keeps all reduced costs nonpositive.
    fn dual_ratio_test(&self, row: &[T], delta_positive: bool) -> Option<usize> {
        let ptol = self.opts.pivot_tol;
        let candidate = |j: usize| -> bool {
            if !self.eligible(j) {
                return false;
            }
            let a = &row[j];
            if delta_positive { a.exceeds(ptol) } else { (-a.clone()).exceeds(ptol) }
        };
        match T::MODE {
            Mode::Exact => {
                let mut best: Option<(usize, T)> = None;
                for j in 0..self.n {
                    if !candidate(j) {
                        continue;
                    }
                    let ratio = self.d[j].div_ref(&row[j]).abs();
                    let take = match &best {
                        None => true,
                        Some((bj, br)) => {
                            ratio < *br
                                || (ratio == *br
                                    && !self.bland
                                    && row[j].abs().to_f64() > row[*bj].abs().to_f64())
                        }
                    };
                    if take {
                        best = Some((j, ratio));
                    }
                }
                best.map(|(j, _)| j)
            }
            Mode::Float => {
                let otol = self.opts.opt_tol;
                let mut bound = f64::INFINITY;
                for j in 0..self.n {
                    if candidate(j) {
                        let d = self.d[j].to_f64().min(0.0).abs();
                        bound = bound.min((d + otol) / row[j].to_f64().abs());
                    }
                }
                if bound == f64::INFINITY {
                    return None;
                }
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.n {
                    if !candidate(j) {
                        continue;
                    }
                    let a = row[j].to_f64().abs();
                    let d = self.d[j].to_f64().min(0.0).abs();
                    if d / a > bound {
                        continue;
                    }
                    let take = match best {
                        None => true,
                        Some((_, ba)) => !self.bland && a > ba,
                    };
                    if take {
                        best = Some((j, a));
                    }
                }
                best.map(|(j, _)| j)
            }
        }
    }

    /// Float refactorization inside the dual simplex. Fresh reduced costs can
    /// come out slightly positive (or clearly so, when a dependent column was
    /// swapped out); their costs are shifted down so the basis stays dual
    /// feasible. `run_dual` restores the true costs afterwards.
    fn dual_refactor(&mut self) {
        self.refactor();
        self.recompute_duals();
        let mut shifted = 0;
        for j in 0..self.n {
            if self.pos_of[j] == NONBASIC && self.d[j].exceeds(self.opts.opt_tol) {
                let target = PERTURBATION * (1.0 + jitter(j));
                let shift = self.d[j].clone() + T::from_float(target);
                self.cost[j] -= &shift;
                self.d[j] = T::from_float(-target);
                shifted += 1;
            }
        }
        if shifted > 0 {
            debug!("shifted {shifted} costs to keep the basis dual feasible");
        }
    }

    /// Dual simplex from a dual-feasible basis, with artificials fixed at zero.
    fn dual_iterate(&mut self) -> Outcome {
        loop {
            if self.pivots >= self.opts.max_pivots {
                return Outcome::PivotLimit;
            }
            let lv = self.choose_leaving();
            let Some((r, delta)) = lv else {
                if T::MODE == Mode::Float && self.factor.num_updates() > 0 {
                    self.dual_refactor();
                    if self.choose_leaving().is_some() {
                        continue;
                    }
                }
                if !self.rejected.is_empty() {
                    return Outcome::Numerical(format!("{} infeasible rows left with unstable pivots", self.rejected.len()));
                }
                return Outcome::Optimal;
            };
            let (prow, rho) = self.pivot_row_with_rho(r);
            let Some(q) = self.dual_ratio_test(&prow, delta.is_positive()) else {
                if T::MODE == Mode::Float && self.factor.num_updates() > 0 {
                    self.dual_refactor();
                    continue;
                }
                return Outcome::Infeasible;
            };
            let mut alpha = self.dense_column(q);
            let spike = self.factor.ftran_spike(&mut alpha);
            let arq = alpha[r].clone();
            if T::MODE == Mode::Float {
                let (a_col, a_row) = (arq.to_f64(), prow[q].to_f64());
                let bad = a_col.abs() <= self.opts.pivot_tol || (a_col - a_row).abs() > 1e-7 * (1.0 + a_col.abs());
                if bad {
                    if self.factor.num_updates() > 0 {
                        debug!("pivot mismatch {a_col} vs {a_row}; refactoring");
                        self.dual_refactor();
                    } else {
                        debug!("unstable pivot row {r} (column {q}); skipping it");
                        self.rejected.push(r);
                    }
                    continue;
                }
                let mut tau: Vec<T> = rho.clone();
                self.factor.ftran(&mut tau);
                let ar = a_col;
                let wr = rho.iter().map(|v| v.to_f64() * v.to_f64()).sum::<f64>().max(1e-12);
                for (pos, a) in alpha.iter().enumerate() {
                    if pos == r || a.is_zero() {
                        continue;
                    }
                    let k = a.to_f64() / ar;
                    let w = self.dse[pos] - 2.0 * k * tau[pos].to_f64() + k * k * wr;
                    self.dse[pos] = w.max(1e-4);
                }
                self.dse[r] = (wr / (ar * ar)).max(1e-4);
            } else if arq.is_zero() {
                return Outcome::Numerical(format!("zero dual pivot at column {q}"));
            }
            let theta = delta.div_ref(&arq);
            for (pos, a) in alpha.iter().enumerate() {
                if !a.is_zero() {
                    self.xb[pos].sub_mul_assign(a, &theta);
                }
            }
            self.xb[r] = theta;

            let t = self.d[q].div_ref(&prow[q]);
            let degenerate = t.negligible(self.opts.opt_tol);
            if !t.is_zero() {
                for (j, arj) in prow.iter().enumerate() {
                    if !arj.is_zero() && self.pos_of[j] == NONBASIC {
                        self.d[j].sub_mul_assign(&t, arj);
                    }
                }
            }
            let leaving = self.basis[r];
            self.d[q] = T::zero();
            self.d[leaving] = -t;

            let consistent = self.factor.update(r, &spike, &alpha[r]);
            self.pos_of[leaving] = NONBASIC;
            self.pos_of[q] = r;
            self.basis[r] = q;
            self.pivots += 1;
            self.rejected.clear();
            self.track_degeneracy(degenerate);
            if !consistent || self.factor.stale(self.opts.refactor_every) {
                if T::MODE == Mode::Float {
                    self.dual_refactor();
                } else {
                    self.refactor();
                }
            }
            if self.pivots % 1000 == 0 {
                debug!(
                    "dual pivots {} objective {} infeasible {} factor nnz {}",
                    self.pivots,
                    self.objective_f64(),
                    self.xb.iter().filter(|x| (-(*x).clone()).exceeds(self.opts.feas_tol)).count(),
                    self.factor.nnz()
                );
            }
        }
    }

    fn track_degeneracy(&mut self, degenerate: bool) {
        if degenerate {
            self.degenerate_run += 1;
            if let Some(lim) = self.opts.stall_limit {
                if !self.bland && self.degenerate_run > lim {
                    debug!("switching to Bland's rule after {} degenerate pivots", self.degenerate_run);
                    self.bland = true;
                }
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    /// Reduced costs are nonpositive for every structural nonbasic column.
    pub fn dual_feasible(&self) -> bool {
        (0..self.n).all(|j| self.pos_of[j] != NONBASIC || !self.d[j].exceeds(self.opts.opt_tol))
    }

    /// Dual simplex for `max cost·x` from the current basis, which must be dual feasible
    /// once artificials are fixed at zero.
    pub fn run_dual(&mut self, objective: &[(usize, T)]) -> Option<Outcome> {
        self.set_phase(2, objective);
        if !self.dual_feasible() {
            return None;
        }
        if T::MODE == Mode::Exact {
            return Some(self.dual_iterate());
        }
        // Shifting nonbasic costs down keeps the basis dual feasible and breaks
        // the ties that otherwise make the dual simplex stall.
        for j in 0..self.n {
            if self.pos_of[j] == NONBASIC {
                let shift = PERTURBATION * (1.0 + self.cost[j].to_f64().abs()) * (1.0 + jitter(j));
                self.cost[j] -= &T::from_float(shift);
            }
        }
        self.recompute_duals();
        let outcome = self.dual_iterate();
        self.set_phase(2, objective);
        if outcome != Outcome::Optimal || self.dual_feasible() {
            return Some(outcome);
        }
        debug!("removing cost perturbation; primal clean-up");
        Some(self.iterate())
    }

    /// Solve max cost·x over {A x = b, x >= 0}. On `Infeasible` the phase-1 duals are kept.
    pub fn run(&mut self, objective: &[(usize, T)]) -> Outcome {
        if self.artificial_mass_positive() || !self.primal_feasible() {
            if !self.primal_feasible() {
                // warm start not feasible: fall back to the all-artificial basis
                self.basis = (self.n..self.n + self.m).collect();
                self.refactor();
            }
            self.set_phase(1, objective);
            match self.iterate() {
                Outcome::Optimal => {}
                other => return other,
            }
            if self.artificial_mass_positive() {
                return Outcome::Infeasible;
            }
        }
        self.set_phase(2, objective);
        self.iterate()
    }

    /// Phase-1 duals at an infeasible optimum; `yᵀb < 0` while `yᵀA <= 0` on structural columns.
    pub fn phase_one_duals(&self) -> Vec<T> {
        self.duals()
    }

    /// Structural primal values.
    pub fn primal(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        for (pos, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[pos].clone();
            }
        }
        x
    }
}

/// A basis that is dual feasible for `max cᵀx` when artificials are fixed at
/// zero. It exists when some rows with all coefficients `+1` partition the
/// columns: each such row contributes its column of largest cost, and every
/// other row its artificial.
pub fn crash_basis<T: Field>(a: &Matrix, objective: &[(usize, T)]) -> Option<Vec<usize>> {
    let mut cost = vec![T::zero(); a.n];
    for (j, c) in objective {
        cost[*j] += c;
    }
    let mut covered = vec![false; a.n];
    let mut basis: Vec<usize> = (a.n..a.n + a.m).collect();
    let mut count = 0;
    for i in 0..a.m {
        if a.row(i).next().is_none() || a.row(i).any(|(j, v)| v != 1 || covered[j]) {
            continue;
        }
        let mut best: Option<usize> = None;
        for (j, _) in a.row(i) {
            covered[j] = true;
            count += 1;
            if best.map_or(true, |b| cost[j] > cost[b]) {
                best = Some(j);
            }
        }
        basis[i] = best.expect("nonempty row");
    }
    (count == a.n).then_some(basis)
}
