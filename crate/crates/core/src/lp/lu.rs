//! Sparse LU factorization of a simplex basis with Forrest–Tomlin updates.
//!
//! The factorization is right-looking with Markowitz pivot selection
//! (singletons first, then the smallest `(r-1)(c-1)` among a few short rows
//! and columns), with threshold partial pivoting in float mode. A basis change
//! replaces one column of `U` by the partially solved entering column, moves
//! that step to the end of the triangular order and eliminates the old row
//! with a row eta, so the update costs about as much as the spike is long.

use crate::numeric::Field;

/// A basis column: row indices and values.
#[derive(Clone, Debug, Default)]
pub struct SparseVec<T> {
    pub idx: Vec<usize>,
    pub val: Vec<T>,
}

impl<T: Field> SparseVec<T> {
    pub fn new() -> Self {
        SparseVec { idx: Vec::new(), val: Vec::new() }
    }

    pub fn unit(i: usize) -> Self {
        SparseVec { idx: vec![i], val: vec![T::one()] }
    }

    pub fn push(&mut self, i: usize, v: T) {
        self.idx.push(i);
        self.val.push(v);
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &T)> {
        self.idx.iter().copied().zip(self.val.iter())
    }
}

impl<T: Field> SparseVec<T> {
    fn remove(&mut self, i: usize) {
        if let Some(k) = self.idx.iter().position(|&x| x == i) {
            self.idx.swap_remove(k);
            self.val.swap_remove(k);
        }
    }
}

/// Row operation `b[row of step] -= Σ μ_s b[row of s]`, applied between `L` and `U`.
#[derive(Clone, Debug)]
struct RowEta<T> {
    step: usize,
    entries: Vec<(usize, T)>,
}

/// Outcome of a factorization in which some columns turned out dependent.
#[derive(Clone, Debug, Default)]
pub struct Singular {
    /// (basis position, row) pairs: the column at `position` must be replaced by the unit column of `row`.
    pub replaced: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct Factor<T> {
    m: usize,
    /// Per step: rows below the pivot and their multipliers.
    l_cols: Vec<SparseVec<T>>,
    /// Per row: (step, multiplier) pairs of `L` in that row.
    l_rows: Vec<Vec<(usize, T)>>,
    /// Per step: (later step, value) entries of `U` in the pivot row.
    u_rows: Vec<SparseVec<T>>,
    /// Per step: (earlier step, value) entries of `U` in that column.
    u_cols: Vec<SparseVec<T>>,
    u_diag: Vec<T>,
    row_of_step: Vec<usize>,
    pos_of_step: Vec<usize>,
    step_of_row: Vec<usize>,
    step_of_pos: Vec<usize>,
    /// Current triangular order of the steps of `U`, and each step's rank in it.
    order: Vec<usize>,
    rank: Vec<usize>,
    etas: Vec<RowEta<T>>,
    update_nnz: usize,
    base_nnz: usize,
    drop_tol: f64,
    work: Vec<T>,
    queued: Vec<bool>,
}

const NONE: usize = usize::MAX;

/// Doubly linked lists of indices bucketed by a count.
struct Buckets {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    count: Vec<usize>,
    live: Vec<bool>,
}

impl Buckets {
    fn new(n: usize, max_count: usize) -> Self {
        Buckets {
            head: vec![NONE; max_count + 2],
            next: vec![NONE; n],
            prev: vec![NONE; n],
            count: vec![0; n],
            live: vec![false; n],
        }
    }

    fn insert(&mut self, i: usize, c: usize) {
        let c = c.min(self.head.len() - 1);
        self.count[i] = c;
        self.live[i] = true;
        self.prev[i] = NONE;
        self.next[i] = self.head[c];
        if self.head[c] != NONE {
            self.prev[self.head[c]] = i;
        }
        self.head[c] = i;
    }

    fn remove(&mut self, i: usize) {
        if !self.live[i] {
            return;
        }
        let (p, n) = (self.prev[i], self.next[i]);
        if p != NONE {
            self.next[p] = n;
        } else {
            self.head[self.count[i]] = n;
        }
        if n != NONE {
            self.prev[n] = p;
        }
        self.live[i] = false;
    }

    fn set(&mut self, i: usize, c: usize) {
        self.remove(i);
        self.insert(i, c);
    }
}

impl<T: Field> Factor<T> {
    /// Factor the basis whose columns (by position) are `cols`.
    ///
    /// Dependent columns are swapped for unit columns of unpivoted rows; the
    /// swaps are reported so the caller can adjust its basis.
    pub fn new(m: usize, cols: &[SparseVec<T>], drop_tol: f64) -> (Self, Singular) {
        assert_eq!(cols.len(), m);
        let float = T::MODE == crate::numeric::Mode::Float;
        let threshold = if float { 0.1 } else { 0.0 };

        // active submatrix: values by column, patterns by row
        let mut colv: Vec<Vec<(usize, T)>> = cols
            .iter()
            .map(|c| c.iter().filter(|(_, v)| !v.negligible(drop_tol)).map(|(i, v)| (i, v.clone())).collect())
            .collect();
        let mut rowp: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, c) in colv.iter().enumerate() {
            for (i, _) in c {
                rowp[*i].push(j);
            }
        }
        let mut cb = Buckets::new(m, m);
        let mut rb = Buckets::new(m, m);
        for j in 0..m {
            cb.insert(j, colv[j].len());
        }
        for i in 0..m {
            rb.insert(i, rowp[i].len());
        }
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];

        let mut l_cols: Vec<SparseVec<T>> = Vec::with_capacity(m);
        let mut u_rows_pos: Vec<Vec<(usize, T)>> = Vec::with_capacity(m);
        let mut u_diag = Vec::with_capacity(m);
        let mut row_of_step = Vec::with_capacity(m);
        let mut pos_of_step = Vec::with_capacity(m);
        let mut mark = vec![NONE; m];

        let col_max = |c: &Vec<(usize, T)>| c.iter().map(|(_, v)| v.to_f64().abs()).fold(0.0f64, f64::max);

        for _ in 0..m {
            // pivot search
            let mut best: Option<(usize, usize, usize)> = None; // (cost, row, col)
            if cb.head[1] != NONE {
                let j = cb.head[1];
                best = Some((0, colv[j][0].0, j));
            }
            let mut examined = 0;
            let mut c = 1;
            while best.map_or(true, |b| b.0 > 0) && c < cb.head.len() {
                let lower = (c - 1) * (c - 1);
                if best.is_some_and(|b| b.0 <= lower) {
                    break;
                }
                // columns of count c
                let mut j = cb.head[c];
                while j != NONE {
                    let cm = col_max(&colv[j]);
                    for (i, v) in &colv[j] {
                        if v.to_f64().abs() < threshold * cm {
                            continue;
                        }
                        let cost = (rowp[*i].len() - 1) * (c - 1);
                        if best.map_or(true, |b| cost < b.0) {
                            best = Some((cost, *i, j));
                        }
                    }
                    examined += 1;
                    if examined >= 4 && best.is_some() {
                        break;
                    }
                    j = cb.next[j];
                }
                if examined >= 4 && best.is_some() {
                    break;
                }
                // rows of count c
                let mut i = rb.head[c];
                while i != NONE {
                    for &j in &rowp[i] {
                        let cost = (c - 1) * (colv[j].len() - 1);
                        if best.is_some_and(|b| cost >= b.0) {
                            continue;
                        }
                        let cm = col_max(&colv[j]);
                        let v = colv[j].iter().find(|e| e.0 == i).map(|e| e.1.to_f64().abs()).unwrap_or(0.0);
                        if v > 0.0 && v >= threshold * cm {
                            best = Some((cost, i, j));
                        }
                    }
                    examined += 1;
                    if examined >= 4 && best.is_some() {
                        break;
                    }
                    i = rb.next[i];
                }
                if examined >= 4 && best.is_some() {
                    break;
                }
                c += 1;
            }
            let Some((_, p, q)) = best else { break };

            // eliminate
            let col_q = std::mem::take(&mut colv[q]);
            let piv = col_q.iter().find(|e| e.0 == p).expect("pivot in column").1.clone();
            let mut lcol = SparseVec::new();
            for (i, v) in &col_q {
                if *i != p {
                    lcol.push(*i, v.div_ref(&piv));
                }
                let rp = &mut rowp[*i];
                if let Some(k) = rp.iter().position(|&x| x == q) {
                    rp.swap_remove(k);
                }
            }
            cb.remove(q);
            col_done[q] = true;
            let prow = std::mem::take(&mut rowp[p]);
            rb.remove(p);
            row_done[p] = true;
            let mut urow = Vec::with_capacity(prow.len());
            for &j in &prow {
                let cj = &mut colv[j];
                let k = cj.iter().position(|e| e.0 == p).expect("row entry in column");
                let (_, apj) = cj.swap_remove(k);
                if lcol.is_empty() {
                    urow.push((j, apj));
                    cb.set(j, colv[j].len());
                    continue;
                }
                for (k, (i, _)) in colv[j].iter().enumerate() {
                    mark[*i] = k;
                }
                let mut removed = Vec::new();
                for (i, l) in lcol.iter() {
                    let k = mark[i];
                    if k != NONE {
                        let e = &mut colv[j][k].1;
                        e.sub_mul_assign(l, &apj);
                        if e.negligible(drop_tol) {
                            removed.push(i);
                        }
                    } else {
                        let mut v = T::zero();
                        v.sub_mul_assign(l, &apj);
                        if !v.negligible(drop_tol) {
                            colv[j].push((i, v));
                            rowp[i].push(j);
                        }
                    }
                }
                for (i, _) in colv[j].iter() {
                    mark[*i] = NONE;
                }
                if !removed.is_empty() {
                    colv[j].retain(|(i, _)| !removed.contains(i));
                    for i in removed {
                        let rp = &mut rowp[i];
                        if let Some(k) = rp.iter().position(|&x| x == j) {
                            rp.swap_remove(k);
                        }
                    }
                }
                urow.push((j, apj));
                cb.set(j, colv[j].len());
            }
            for (i, _) in lcol.iter() {
                rb.set(i, rowp[i].len());
            }
            row_of_step.push(p);
            pos_of_step.push(q);
            u_diag.push(piv);
            l_cols.push(lcol);
            u_rows_pos.push(urow);
        }

        // columns without a pivot are dependent
        let mut singular = Singular::default();
        let free_rows: Vec<usize> = (0..m).filter(|&r| !row_done[r]).collect();
        let dep_cols: Vec<usize> = (0..m).filter(|&j| !col_done[j]).collect();
        for (&q, &r) in dep_cols.iter().zip(&free_rows) {
            row_of_step.push(r);
            pos_of_step.push(q);
            u_diag.push(T::one());
            l_cols.push(SparseVec::new());
            u_rows_pos.push(Vec::new());
            singular.replaced.push((q, r));
        }
        // U rows of earlier steps may mention dependent columns; those entries
        // belong to the replaced columns and are dropped.
        let dep: std::collections::HashSet<usize> = dep_cols.iter().copied().collect();

        let mut step_of_pos = vec![NONE; m];
        for (k, &q) in pos_of_step.iter().enumerate() {
            step_of_pos[q] = k;
        }
        let mut u_rows: Vec<SparseVec<T>> = Vec::with_capacity(m);
        let mut u_cols: Vec<SparseVec<T>> = vec![SparseVec::new(); m];
        for (k, row) in u_rows_pos.into_iter().enumerate() {
            let mut r = SparseVec::new();
            for (q, v) in row {
                if dep.contains(&q) {
                    continue;
                }
                let s = step_of_pos[q];
                u_cols[s].push(k, v.clone());
                r.push(s, v);
            }
            u_rows.push(r);
        }
        let mut l_rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); m];
        for (k, c) in l_cols.iter().enumerate() {
            for (i, v) in c.iter() {
                l_rows[i].push((k, v.clone()));
            }
        }
        let base_nnz = m + l_cols.iter().map(|c| c.len()).sum::<usize>() + u_rows.iter().map(|c| c.len()).sum::<usize>();
        let mut step_of_row = vec![NONE; m];
        for (k, &r) in row_of_step.iter().enumerate() {
            step_of_row[r] = k;
        }
        let f = Factor {
            m,
            l_cols,
            l_rows,
            u_rows,
            u_cols,
            u_diag,
            row_of_step,
            pos_of_step,
            step_of_row,
            step_of_pos,
            order: (0..m).collect(),
            rank: (0..m).collect(),
            etas: Vec::new(),
            update_nnz: 0,
            base_nnz,
            drop_tol,
            work: vec![T::zero(); m],
            queued: vec![false; m],
        };
        (f, singular)
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// True once `limit` updates have been applied or their fill outweighs the fresh factors.
    pub fn stale(&self, limit: usize) -> bool {
        self.etas.len() >= limit || self.update_nnz > self.base_nnz
    }

    /// Number of stored nonzeros in L, U and the row etas.
    pub fn nnz(&self) -> usize {
        self.l_cols.iter().map(|c| c.len()).sum::<usize>()
            + self.u_rows.iter().map(|c| c.len()).sum::<usize>()
            + self.m
            + self.etas.iter().map(|e| e.entries.len()).sum::<usize>()
    }

    /// Solve `B x = b`; `b` is indexed by row on input, `x` by basis position on output.
    pub fn ftran(&self, b: &mut Vec<T>) {
        self.solve(b, false);
    }

    /// As [`Factor::ftran`], also returning the spike (`b` after `L` and the row etas,
    /// by row) that [`Factor::update`] needs when this column enters the basis.
    pub fn ftran_spike(&self, b: &mut Vec<T>) -> SparseVec<T> {
        self.solve(b, true).expect("spike requested")
    }

    fn solve(&self, b: &mut Vec<T>, keep_spike: bool) -> Option<SparseVec<T>> {
        let m = self.m;
        for k in 0..m {
            let r = self.row_of_step[k];
            if b[r].is_zero() {
                continue;
            }
            let xr = b[r].clone();
            for (i, l) in self.l_cols[k].iter() {
                b[i].sub_mul_assign(l, &xr);
            }
        }
        for e in &self.etas {
            let mut acc = T::zero();
            for (s, mu) in &e.entries {
                let v = &b[self.row_of_step[*s]];
                if !v.is_zero() {
                    acc.add_mul_assign(mu, v);
                }
            }
            if !acc.is_zero() {
                b[self.row_of_step[e.step]] -= &acc;
            }
        }
        let spike = keep_spike.then(|| {
            let mut sp = SparseVec::new();
            for (r, v) in b.iter().enumerate() {
                if !v.negligible(self.drop_tol) {
                    sp.push(r, v.clone());
                }
            }
            sp
        });
        let mut x = vec![T::zero(); m];
        for &k in self.order.iter().rev() {
            let r = self.row_of_step[k];
            if b[r].is_zero() {
                continue;
            }
            let z = b[r].div_ref(&self.u_diag[k]);
            for (s, u) in self.u_cols[k].iter() {
                let rs = self.row_of_step[s];
                b[rs].sub_mul_assign(u, &z);
            }
            x[self.pos_of_step[k]] = z;
        }
        if T::MODE == crate::numeric::Mode::Float {
            for v in x.iter_mut() {
                if v.negligible(self.drop_tol) {
                    *v = T::zero();
                }
            }
        }
        *b = x;
        spike
    }

    /// Solve `Bᵀ y = c`; `c` is indexed by basis position on input, `y` by row on output.
    pub fn btran(&self, c: &mut Vec<T>) {
        let m = self.m;
        // Uᵀ t = c, in step space
        let mut t: Vec<T> = (0..m).map(|k| std::mem::replace(&mut c[self.pos_of_step[k]], T::zero())).collect();
        for &k in &self.order {
            if t[k].is_zero() {
                continue;
            }
            let tk = t[k].div_ref(&self.u_diag[k]);
            for (s, u) in self.u_rows[k].iter() {
                t[s].sub_mul_assign(u, &tk);
            }
            t[k] = tk;
        }
        for e in self.etas.iter().rev() {
            if t[e.step].is_zero() {
                continue;
            }
            let tk = t[e.step].clone();
            for (s, mu) in &e.entries {
                t[*s].sub_mul_assign(mu, &tk);
            }
        }
        // L̃ᵀ y = t
        let mut y = vec![T::zero(); m];
        for k in (0..m).rev() {
            let r = self.row_of_step[k];
            let mut yr = std::mem::replace(&mut t[k], T::zero());
            if T::MODE == crate::numeric::Mode::Float && yr.negligible(self.drop_tol) {
                yr = T::zero();
            }
            if yr.is_zero() {
                continue;
            }
            for (s, l) in &self.l_rows[r] {
                t[*s].sub_mul_assign(l, &yr);
            }
            y[r] = yr;
        }
        *c = y;
    }

    /// Replace the column at basis position `pos` by the column whose spike is
    /// `spike` and whose FTRAN image has `alpha_r` at `pos`.
    ///
    /// Returns false when the updated factors disagree with `alpha_r` beyond
    /// round-off; the caller should then refactor.
    pub fn update(&mut self, pos: usize, spike: &SparseVec<T>, alpha_r: &T) -> bool {
        let k = self.step_of_pos[pos];
        let old_diag = self.u_diag[k].clone();

        // drop the old column k
        for (s, _) in std::mem::replace(&mut self.u_cols[k], SparseVec::new()).iter() {
            self.u_rows[s].remove(k);
        }
        // spike by step, in the work array
        let mut spike_steps = Vec::with_capacity(spike.len());
        for (r, v) in spike.iter() {
            let s = self.step_of_row[r];
            spike_steps.push((s, v.clone()));
        }

        // eliminate row k against the rows that follow it, in order
        let row_k = std::mem::replace(&mut self.u_rows[k], SparseVec::new());
        let mut heap = std::collections::BinaryHeap::new();
        for (s, v) in row_k.iter() {
            self.u_cols[s].remove(k);
            self.work[s] = v.clone();
            self.queued[s] = true;
            heap.push(std::cmp::Reverse(self.rank[s]));
        }
        let mut entries = Vec::new();
        while let Some(std::cmp::Reverse(rk)) = heap.pop() {
            let s = self.order[rk];
            self.queued[s] = false;
            let w = std::mem::replace(&mut self.work[s], T::zero());
            if w.negligible(self.drop_tol) {
                continue;
            }
            let mu = w.div_ref(&self.u_diag[s]);
            for (s2, u) in self.u_rows[s].iter() {
                if !self.queued[s2] {
                    self.queued[s2] = true;
                    heap.push(std::cmp::Reverse(self.rank[s2]));
                }
                self.work[s2].sub_mul_assign(&mu, u);
            }
            entries.push((s, mu));
        }

        let mut diag = T::zero();
        for (s, v) in &spike_steps {
            if *s == k {
                diag += v;
            }
        }
        if !entries.is_empty() {
            for (s, mu) in &entries {
                self.work[*s] = mu.clone();
            }
            for (s, v) in &spike_steps {
                if *s != k && !self.work[*s].is_zero() {
                    diag.sub_mul_assign(&self.work[*s], v);
                }
            }
            for (s, _) in &entries {
                self.work[*s] = T::zero();
            }
        }

        // the spike becomes column k, and step k moves to the end
        for (s, v) in spike_steps {
            if s != k {
                self.u_rows[s].push(k, v.clone());
                self.u_cols[k].push(s, v);
            }
        }
        self.update_nnz += self.u_cols[k].len() + entries.len() + 1;
        self.u_diag[k] = diag.clone();
        let rk = self.rank[k];
        self.order.remove(rk);
        self.order.push(k);
        for (i, &s) in self.order.iter().enumerate().skip(rk) {
            self.rank[s] = i;
        }
        self.etas.push(RowEta { step: k, entries });

        let expected = alpha_r.mul_ref(&old_diag);
        if diag.is_zero() {
            return false;
        }
        match T::MODE {
            crate::numeric::Mode::Exact => diag == expected,
            crate::numeric::Mode::Float => {
                let (d, e) = (diag.to_f64(), expected.to_f64());
                (d - e).abs() <= 1e-8 * (1.0 + e.abs())
            }
        }
    }
}
