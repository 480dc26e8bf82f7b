//! Compressed sparse row storage and a left-looking sparse LU factorization.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular: pivot {pivot:e} in column {column} (largest |entry| {scale:e})")]
    Singular { column: usize, pivot: f64, scale: f64 },
    #[error("ordering is not a permutation of 0..{0}")]
    BadPermutation(usize),
}

/// Coordinate-list accumulator; duplicates are summed on conversion.
#[derive(Debug, Clone)]
pub struct CooMatrix<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> CooMatrix<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    /// Sums duplicates in insertion order and drops exact zeros.
    pub fn to_csr(&self) -> CsrMatrix<T> {
        let mut counts = vec![0usize; self.nrows + 1];
        for &(i, _, _) in &self.entries {
            counts[i + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        // stable bucket by row keeps insertion order within a row
        let mut by_row = vec![(0usize, T::zero()); self.entries.len()];
        let mut next = counts.clone();
        for &(i, j, v) in &self.entries {
            by_row[next[i]] = (j, v);
            next[i] += 1;
        }
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let mut row = Vec::new();
        for i in 0..self.nrows {
            row.clear();
            row.extend_from_slice(&by_row[counts[i]..counts[i + 1]]);
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut s = T::zero();
                while k < row.len() && row[k].0 == j {
                    s += row[k].1;
                    k += 1;
                }
                if s != T::zero() {
                    indices.push(j);
                    values.push(s);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut coo = CooMatrix::new(rows.len(), ncols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                coo.push(i, j, v);
            }
        }
        coo.to_csr()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.ncols]; self.nrows];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out[i][j] = v;
            }
        }
        out
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        self.mul_vec(x).iter().zip(x).map(|(&a, &b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut coo = CooMatrix::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                coo.push(j, i, v);
            }
        }
        coo.to_csr()
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && *self == self.transpose()
    }

    /// `αA + βB` for matrices of equal shape.
    pub fn linear_combination(&self, alpha: T, other: &Self, beta: T) -> Result<Self, SparseError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SparseError::Dimension(format!(
                "{}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut coo = CooMatrix::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                coo.push(i, j, alpha * v);
            }
            for (j, v) in other.row(i) {
                coo.push(i, j, beta * v);
            }
        }
        Ok(coo.to_csr())
    }

    /// Replaces each listed row by the given `(column, value)` entries.
    pub fn replace_rows(&self, rows: &[usize], replacement: impl Fn(usize) -> Vec<(usize, T)>) -> Self {
        let mut marked = vec![false; self.nrows];
        for &r in rows {
            marked[r] = true;
        }
        let mut coo = CooMatrix::with_capacity(self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            if marked[i] {
                for (j, v) in replacement(i) {
                    coo.push(i, j, v);
                }
            } else {
                for (j, v) in self.row(i) {
                    coo.push(i, j, v);
                }
            }
        }
        coo.to_csr()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }
}

/// Compressed sparse column storage used inside the factorization.
#[derive(Debug, Clone)]
struct Csc<T> {
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Csc<T> {
    fn from_csr(a: &CsrMatrix<T>) -> Self {
        let t = a.transpose();
        Self {
            colptr: t.indptr,
            rowind: t.indices,
            values: t.values,
        }
    }
}

/// `P A Q = L U` with unit lower-triangular `L`. Column order `Q` is supplied
/// by the caller (fill-reducing); row pivoting uses threshold partial pivoting
/// that prefers the diagonal, so symmetric-pattern orderings keep their fill.
#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    n: usize,
    lower: Csc<T>,
    upper: Csc<T>,
    /// `pinv[i]` = position of original row `i` in the factor.
    pinv: Vec<usize>,
    /// `q[k]` = original column eliminated at step `k`.
    q: Vec<usize>,
}

/// Relative pivot size below which the diagonal is rejected.
pub const DIAGONAL_PREFERENCE: f64 = 1e-3;

impl<T: Scalar> SparseLu<T> {
    pub fn factor(a: &CsrMatrix<T>, column_order: Option<&[usize]>) -> Result<Self, SparseError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(SparseError::Dimension(format!("LU of a {}x{} matrix", n, a.ncols())));
        }
        let q: Vec<usize> = match column_order {
            Some(order) => {
                check_permutation(order, n)?;
                order.to_vec()
            }
            None => (0..n).collect(),
        };
        let scale = a.max_abs();
        let tiny = scale * T::epsilon() * T::lit(16.0);
        let a = Csc::from_csr(a);
        let tol = T::lit(DIAGONAL_PREFERENCE);

        let mut lp = Vec::with_capacity(n + 1);
        let mut li: Vec<usize> = Vec::new();
        let mut lx: Vec<T> = Vec::new();
        let mut up = Vec::with_capacity(n + 1);
        let mut ui: Vec<usize> = Vec::new();
        let mut ux: Vec<T> = Vec::new();
        const UNSET: usize = usize::MAX;
        let mut pinv = vec![UNSET; n];
        let mut x = vec![T::zero(); n];
        let mut reach = Reach::new(n);

        for k in 0..n {
            lp.push(li.len());
            up.push(ui.len());
            let col = q[k];
            // x = L \ A(:, col) restricted to the reach of the column pattern
            let pattern = reach.compute(&lp, &li, &a, col, &pinv);
            for &i in pattern {
                x[i] = T::zero();
            }
            for p in a.colptr[col]..a.colptr[col + 1] {
                x[a.rowind[p]] = a.values[p];
            }
            for &j in pattern {
                let jj = pinv[j];
                if jj == UNSET {
                    continue;
                }
                let xj = x[j];
                // first entry of L(:, jj) is the unit diagonal
                for p in (lp[jj] + 1)..l_end(&lp, jj, li.len()) {
                    x[li[p]] -= lx[p] * xj;
                }
            }
            let mut ipiv = UNSET;
            let mut best = -T::one();
            for &i in pattern {
                if pinv[i] == UNSET {
                    let t = x[i].abs();
                    if t > best {
                        best = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == UNSET || !(best > tiny) || !best.is_finite() {
                return Err(SparseError::Singular {
                    column: col,
                    pivot: best.max(T::zero()).to_f64_lossy(),
                    scale: scale.to_f64_lossy(),
                });
            }
            if pinv[col] == UNSET && x[col].abs() >= best * tol {
                ipiv = col;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(T::one());
            for &i in pattern {
                if pinv[i] == UNSET {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = T::zero();
            }
        }
        lp.push(li.len());
        up.push(ui.len());
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self {
            n,
            lower: Csc {
                colptr: lp,
                rowind: li,
                values: lx,
            },
            upper: Csc {
                colptr: up,
                rowind: ui,
                values: ux,
            },
            pinv,
            q,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries in `L + U`.
    pub fn fill(&self) -> usize {
        self.lower.values.len() + self.upper.values.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        let mut work = vec![T::zero(); self.n];
        self.solve_into(b, &mut out, &mut work);
        out
    }

    /// Solves `A x = b` into `x`; `work` must have length `n`.
    pub fn solve_into(&self, b: &[T], x: &mut [T], work: &mut [T]) {
        assert_eq!(b.len(), self.n);
        for (i, &bi) in b.iter().enumerate() {
            work[self.pinv[i]] = bi;
        }
        let l = &self.lower;
        for j in 0..self.n {
            let xj = work[j];
            if xj == T::zero() {
                continue;
            }
            for p in (l.colptr[j] + 1)..l.colptr[j + 1] {
                work[l.rowind[p]] -= l.values[p] * xj;
            }
        }
        let u = &self.upper;
        for j in (0..self.n).rev() {
            let last = u.colptr[j + 1] - 1;
            work[j] /= u.values[last];
            let xj = work[j];
            if xj == T::zero() {
                continue;
            }
            for p in u.colptr[j]..last {
                work[u.rowind[p]] -= u.values[p] * xj;
            }
        }
        for (k, &col) in self.q.iter().enumerate() {
            x[col] = work[k];
        }
    }
}

fn l_end(lp: &[usize], j: usize, len: usize) -> usize {
    if j + 1 < lp.len() {
        lp[j + 1]
    } else {
        len
    }
}

fn check_permutation(p: &[usize], n: usize) -> Result<(), SparseError> {
    if p.len() != n {
        return Err(SparseError::BadPermutation(n));
    }
    let mut seen = vec![false; n];
    for &i in p {
        if i >= n || seen[i] {
            return Err(SparseError::BadPermutation(n));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Depth-first reach in the graph of `L`, producing a topological order.
struct Reach {
    mark: Vec<usize>,
    stamp: usize,
    out: Vec<usize>,
    stack: Vec<(usize, usize)>,
}

impl Reach {
    fn new(n: usize) -> Self {
        Self {
            mark: vec![usize::MAX; n],
            stamp: 0,
            out: Vec::with_capacity(n),
            stack: Vec::new(),
        }
    }

    fn compute<T>(&mut self, lp: &[usize], li: &[usize], a: &Csc<T>, col: usize, pinv: &[usize]) -> &[usize] {
        self.stamp += 1;
        self.out.clear();
        let len = li.len();
        for p in a.colptr[col]..a.colptr[col + 1] {
            let start = a.rowind[p];
            if self.mark[start] == self.stamp {
                continue;
            }
            self.mark[start] = self.stamp;
            self.stack.push((start, 0));
            while let Some(&(node, cursor)) = self.stack.last() {
                let jj = pinv[node];
                let mut next_child = None;
                if jj != usize::MAX {
                    let (lo, hi) = (lp[jj] + 1, l_end(lp, jj, len));
                    let mut c = lo + cursor;
                    while c < hi {
                        let child = li[c];
                        c += 1;
                        if self.mark[child] != self.stamp {
                            next_child = Some((child, c - lo));
                            break;
                        }
                    }
                }
                match next_child {
                    Some((child, resume)) => {
                        self.mark[child] = self.stamp;
                        if let Some(top) = self.stack.last_mut() {
                            top.1 = resume;
                        }
                        self.stack.push((child, 0));
                    }
                    None => {
                        self.stack.pop();
                        self.out.push(node);
                    }
                }
            }
        }
        self.out.reverse();
        &self.out
    }
}
