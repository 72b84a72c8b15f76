//! Compressed sparse row matrices and a direct solver based on reverse
//! Cuthill–McKee reordering followed by banded LU with partial pivoting.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Zero matrix with the given per-row column patterns. Each row is sorted and
    /// deduplicated; the diagonal is always included.
    pub fn with_pattern(n: usize, rows: impl IntoIterator<Item = Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, mut cols) in rows.into_iter().enumerate() {
            cols.push(i);
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        assert_eq!(row_ptr.len(), n + 1, "pattern must have one entry per row");
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::with_pattern(n, (0..n).map(|_| Vec::new()));
        for i in 0..n {
            m.add(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from (row, column, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::with_pattern(n, rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Adds `v` to entry (i, j). Panics if (i, j) is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[j] += v * x[i];
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Reverse Cuthill–McKee ordering of the symmetrized pattern. Returns `perm`
/// with `perm[new] = old`.
pub fn rcm_order(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n;
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // returns (eccentricity, a minimum-degree node on the last level)
        let mut seen = visited.to_vec();
        let mut frontier = vec![start];
        seen[start] = true;
        let mut depth = 0;
        let mut last = frontier.clone();
        while !frontier.is_empty() {
            last = frontier.clone();
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if !next.is_empty() {
                depth += 1;
            }
            frontier = next;
        }
        let far = *last.iter().min_by_key(|&&u| (degree[u], u)).unwrap();
        (depth, far)
    };

    loop {
        let seed = match (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) {
            Some(s) => s,
            None => break,
        };
        // pseudo-peripheral start node
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// LU factorization with partial pivoting of a banded matrix.
#[derive(Clone, Debug)]
struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Factors the permuted matrix `P A Pᵀ`. Fails on a pivot below `tol`.
    fn factor(a: &SparseMatrix, perm: &[usize], inv: &[usize], tol: f64) -> std::result::Result<Self, (usize, f64)> {
        let n = a.n;
        let (mut kl, mut ku) = (0usize, 0usize);
        for (new_i, &old_i) in perm.iter().enumerate() {
            for (old_j, _) in a.row(old_i) {
                let new_j = inv[old_j];
                if new_i > new_j {
                    kl = kl.max(new_i - new_j);
                } else {
                    ku = ku.max(new_j - new_i);
                }
            }
        }
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
        };
        for (new_i, &old_i) in perm.iter().enumerate() {
            for (old_j, v) in a.row(old_i) {
                let k = lu.idx(new_i, inv[old_j]);
                lu.data[k] += v;
            }
        }
        let reach = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut p = k;
            let mut best = lu.data[lu.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = lu.data[lu.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= tol {
                return Err((k, best));
            }
            lu.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (x, y) = (lu.idx(k, j), lu.idx(p, j));
                    lu.data.swap(x, y);
                }
            }
            let diag = lu.data[lu.idx(k, k)];
            for r in k + 1..=last_row {
                let rk = lu.idx(r, k);
                let l = lu.data[rk] / diag;
                if l == 0.0 {
                    continue;
                }
                lu.data[rk] = l;
                let (row_r, row_k) = (lu.idx(r, k), lu.idx(k, k));
                for off in 1..=(last_col - k) {
                    let v = lu.data[row_k + off];
                    lu.data[row_r + off] -= l * v;
                }
            }
        }
        Ok(lu)
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            b.swap(k, p);
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + self.kl).min(n - 1) {
                    b[r] -= self.data[self.idx(r, k)] * bk;
                }
            }
        }
        let reach = self.kl + self.ku;
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
    }
}

/// A factored sparse matrix ready for repeated solves.
#[derive(Clone, Debug)]
pub struct Factorization {
    perm: Vec<usize>,
    lu: BandedLu,
}

impl Factorization {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let perm = rcm_order(a);
        let mut inv = vec![0; a.n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let tol = 1e-13 * a.max_abs().max(f64::MIN_POSITIVE);
        match BandedLu::factor(a, &perm, &inv, tol) {
            Ok(lu) => Ok(Self { perm, lu }),
            Err((col, pivot)) => {
                let ones = vec![1.0; a.n];
                let null_defect = a.mul_vec(&ones).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                Err(Error::LinearFailure(format!(
                    "singular matrix: pivot {pivot:.3e} at elimination step {col}; \
                     max|A·1| = {null_defect:.3e} (constant vector nearly null: a mean-zero constraint is required)"
                )))
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        self.lu.solve_in_place(&mut y);
        let mut x = vec![0.0; y.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.lu.kl, self.lu.ku)
    }
}

/// Side condition attached to a linear solve.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    None,
    /// Solves [[A, w], [wᵀ, 0]] [x; μ] = [b; 0]: the w-weighted mean of x vanishes.
    MeanZero { weights: Vec<f64> },
    /// Solves [[A, col], [rowᵀ, 0]] [x; μ] = [b; 0].
    Bordered { row: Vec<f64>, col: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    /// Multiplier μ of the border column; zero without a constraint.
    pub multiplier: f64,
    /// Raised when the right-hand side had a component outside the range of A,
    /// absorbed by the border column.
    pub incompatible: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Direct solve of `A x = b` under an optional constraint.
pub fn linear_solve(a: &SparseMatrix, b: &[f64], constraint: &Constraint) -> Result<LinearSolution> {
    if b.len() != a.n {
        return Err(Error::InvalidParameter(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.n
        )));
    }
    let (row, col) = match constraint {
        Constraint::None => {
            let f = Factorization::new(a)?;
            return Ok(LinearSolution {
                x: f.solve(b),
                multiplier: 0.0,
                incompatible: false,
            });
        }
        Constraint::MeanZero { weights } => (weights, weights),
        Constraint::Bordered { row, col } => (row, col),
    };
    bordered_solve(a, b, row, col)
}

/// Solves [[A, c], [rᵀ, 0]] [x; μ] = [f; 0] where A may have a one-dimensional nullspace.
///
/// A is regularized as P = A + s·e_k e_kᵀ; the correction is recovered from three
/// solves with P and a 2×2 system in (x_k, μ).
fn bordered_solve(a: &SparseMatrix, f: &[f64], r: &[f64], c: &[f64]) -> Result<LinearSolution> {
    let n = a.n;
    if r.len() != n || c.len() != n {
        return Err(Error::InvalidParameter("constraint vectors must match the matrix size".into()));
    }
    if norm2(r) == 0.0 || norm2(c) == 0.0 {
        return Err(Error::InvalidParameter("constraint vectors must be nonzero".into()));
    }
    let k = (0..n)
        .max_by(|&i, &j| a.get(i, i).abs().total_cmp(&a.get(j, j).abs()).then(j.cmp(&i)))
        .unwrap_or(0);
    let s = a.get(k, k).abs().max(a.max_abs()).max(1.0);
    let mut p = a.clone();
    p.add(k, k, s);
    let fac = Factorization::new(&p)?;
    let y_f = fac.solve(f);
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    let y_e = fac.solve(&e);
    let y_c = fac.solve(c);

    // (1 − s·y_e[k]) ξ + y_c[k] μ = y_f[k]
    // s·(r·y_e) ξ − (r·y_c) μ = −r·y_f
    let m11 = 1.0 - s * y_e[k];
    let m12 = y_c[k];
    let m21 = s * dot(r, &y_e);
    let m22 = -dot(r, &y_c);
    let rhs1 = y_f[k];
    let rhs2 = -dot(r, &y_f);
    let det = m11 * m22 - m12 * m21;
    let scale = (m11.abs() + m12.abs()) * (m21.abs() + m22.abs());
    if !(det.abs() > 1e-14 * scale) {
        return Err(Error::LinearFailure(format!(
            "bordered system is singular (determinant {det:.3e}); the constraint does not remove the nullspace"
        )));
    }
    let xi = (rhs1 * m22 - m12 * rhs2) / det;
    let mu = (m11 * rhs2 - m21 * rhs1) / det;
    let x: Vec<f64> = (0..n).map(|i| y_f[i] + s * xi * y_e[i] - mu * y_c[i]).collect();
    let incompatible = (mu * norm2(c)).abs() > 1e-10 * norm2(f).max(f64::MIN_POSITIVE);
    Ok(LinearSolution {
        x,
        multiplier: mu,
        incompatible,
    })
}
