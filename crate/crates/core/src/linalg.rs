//! Compressed sparse row matrices, assembly primitives and linear solves.
//!
//! Direct solves go through faer's sparse LU. The symbolic factorization is
//! cached on the sparsity pattern, so repeated Newton solves on one pattern
//! only pay for the numeric phase.

use std::sync::{Arc, Once, OnceLock};

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use crate::error::{Error, Result};

/// Sorted, duplicate-free CSR structure.
pub struct CsrPattern {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    csc: OnceLock<CscView>,
    lu: OnceLock<std::result::Result<SymbolicLu<usize>, String>>,
}

// Column-major copy of the structure plus the CSR slot of every CSC entry.
struct CscView {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    from_csr: Vec<usize>,
}

impl std::fmt::Debug for CsrPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CsrPattern")
            .field("n_rows", &self.n_rows)
            .field("n_cols", &self.n_cols)
            .field("nnz", &self.col_idx.len())
            .finish()
    }
}

impl PartialEq for CsrPattern {
    fn eq(&self, other: &Self) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }
}

impl CsrPattern {
    pub fn new(n_rows: usize, n_cols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 || row_ptr[n_rows] != col_idx.len() {
            return Err(Error::invalid("inconsistent CSR row pointer"));
        }
        for i in 0..n_rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::invalid("CSR row pointer not monotone"));
            }
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("row {i} has unsorted or duplicate columns")));
            }
            if row.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::invalid(format!("row {i} has a column index out of range")));
            }
        }
        Ok(Self::from_parts(n_rows, n_cols, row_ptr, col_idx))
    }

    fn from_parts(n_rows: usize, n_cols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        CsrPattern { n_rows, n_cols, row_ptr, col_idx, csc: OnceLock::new(), lu: OnceLock::new() }
    }

    /// Square pattern in which every listed index set is a dense clique.
    /// The diagonal is always present.
    pub fn from_cliques<'a>(n: usize, cliques: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for clique in cliques {
            for &i in clique {
                rows[i].extend_from_slice(clique);
            }
        }
        Self::from_rows(n, n, rows)
    }

    fn from_rows(n_rows: usize, n_cols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        Self::from_parts(n_rows, n_cols, row_ptr, col_idx)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts(n, n, (0..=n).collect(), (0..n).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage slot of entry `(i, j)`.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }

    pub fn union(&self, other: &CsrPattern) -> Result<CsrPattern> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::invalid("pattern union of different shapes"));
        }
        let rows = (0..self.n_rows)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.extend_from_slice(other.row(i));
                r
            })
            .collect();
        Ok(Self::from_rows(self.n_rows, self.n_cols, rows))
    }

    fn csc(&self) -> &CscView {
        self.csc.get_or_init(|| {
            let mut counts = vec![0usize; self.n_cols + 1];
            for &c in &self.col_idx {
                counts[c + 1] += 1;
            }
            for j in 0..self.n_cols {
                counts[j + 1] += counts[j];
            }
            let col_ptr = counts.clone();
            let mut next = counts;
            let mut row_idx = vec![0; self.nnz()];
            let mut from_csr = vec![0; self.nnz()];
            for i in 0..self.n_rows {
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let c = self.col_idx[k];
                    row_idx[next[c]] = i;
                    from_csr[next[c]] = k;
                    next[c] += 1;
                }
            }
            CscView { col_ptr, row_idx, from_csr }
        })
    }

    fn symbolic_lu(&self) -> Result<SymbolicLu<usize>> {
        let res = self.lu.get_or_init(|| {
            let csc = self.csc();
            let sym = SymbolicSparseColMatRef::new_checked(self.n_rows, self.n_cols, &csc.col_ptr, None, &csc.row_idx);
            SymbolicLu::try_new(sym).map_err(|e| format!("{e:?}"))
        });
        res.clone().map_err(Error::Singular)
    }
}

/// CSR matrix: a shared pattern plus one value per stored entry.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pattern: Arc<CsrPattern>,
    values: Vec<f64>,
}

impl PartialEq for SparseMatrix {
    fn eq(&self, other: &Self) -> bool {
        *self.pattern == *other.pattern && self.values == other.values
    }
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        SparseMatrix { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix { pattern: Arc::new(CsrPattern::identity(n)), values: vec![1.0; n] }
    }

    pub fn from_values(pattern: Arc<CsrPattern>, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::invalid("value count does not match pattern"));
        }
        Ok(SparseMatrix { pattern, values })
    }

    /// Duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); n_rows];
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::invalid(format!("triplet ({i}, {j}) out of range")));
            }
            rows[i].push(j);
        }
        let pattern = Arc::new(CsrPattern::from_rows(n_rows, n_cols, rows));
        let mut m = SparseMatrix::zeros(pattern);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        Ok(m)
    }

    /// Drops exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::invalid("ragged dense matrix"));
            }
            trip.extend(r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (i, j, v)));
        }
        Self::from_triplets(n_rows, n_cols, &trip)
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Panics if `(i, j)` is not in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.pattern.find(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    /// Scatters a dense local block `local[a][b]` into rows `rows[a]`, columns `cols[b]`.
    pub fn add_local<const R: usize, const C: usize>(
        &mut self,
        rows: &[usize; R],
        cols: &[usize; C],
        local: &[[f64; C]; R],
    ) {
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                if local[a][b] != 0.0 {
                    self.add(i, j, local[a][b]);
                }
            }
        }
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// `y = A x`.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n_cols() || y.len() != self.n_rows() {
            return Err(Error::invalid(format!(
                "spmv dimension mismatch: matrix {}x{}, x {}, y {}",
                self.n_rows(),
                self.n_cols(),
                x.len(),
                y.len()
            )));
        }
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yi = s;
        }
        Ok(())
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows()];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `self += c * a`; the pattern of `a` must be contained in ours.
    pub fn axpy(&mut self, c: f64, a: &SparseMatrix) -> Result<()> {
        if Arc::ptr_eq(&self.pattern, &a.pattern) || *self.pattern == *a.pattern {
            for (v, w) in self.values.iter_mut().zip(&a.values) {
                *v += c * w;
            }
            return Ok(());
        }
        if self.n_rows() != a.n_rows() || self.n_cols() != a.n_cols() {
            return Err(Error::invalid("axpy dimension mismatch"));
        }
        let ap = &*a.pattern;
        for i in 0..ap.n_rows {
            for k in ap.row_ptr[i]..ap.row_ptr[i + 1] {
                let j = ap.col_idx[k];
                let slot = self
                    .pattern
                    .find(i, j)
                    .ok_or_else(|| Error::invalid(format!("entry ({i}, {j}) not in target pattern")))?;
                self.values[slot] += c * a.values[k];
            }
        }
        Ok(())
    }

    pub fn transpose(&self) -> SparseMatrix {
        let trip: Vec<_> = (0..self.n_rows())
            .flat_map(|i| {
                let p = &self.pattern;
                (p.row_ptr[i]..p.row_ptr[i + 1]).map(move |k| (p.col_idx[k], i, k))
            })
            .map(|(j, i, k)| (j, i, self.values[k]))
            .collect();
        Self::from_triplets(self.n_cols(), self.n_rows(), &trip).expect("indices in range")
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows() {
            for &j in self.pattern.row(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows().min(self.n_cols())).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols()]; self.n_rows()];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1] {
                row[self.pattern.col_idx[k]] = self.values[k];
            }
        }
        d
    }

    /// Replaces row `i` by the unit row (requires the diagonal entry).
    pub fn set_identity_row(&mut self, i: usize) {
        let p = self.pattern.clone();
        for k in p.row_ptr[i]..p.row_ptr[i + 1] {
            self.values[k] = if p.col_idx[k] == i { 1.0 } else { 0.0 };
        }
    }

    pub fn factorize(&self) -> Result<LuFactor> {
        LuFactor::new(self)
    }
}

/// Vector combination `accumulator + c * a`, over the union pattern when the
/// patterns differ.
pub fn add_scaled(accumulator: &SparseMatrix, a: &SparseMatrix, c: f64) -> Result<SparseMatrix> {
    if accumulator.n_rows() != a.n_rows() || accumulator.n_cols() != a.n_cols() {
        return Err(Error::invalid(format!(
            "add_scaled dimension mismatch: {}x{} vs {}x{}",
            accumulator.n_rows(),
            accumulator.n_cols(),
            a.n_rows(),
            a.n_cols()
        )));
    }
    let mut out = if Arc::ptr_eq(&accumulator.pattern, &a.pattern) || *accumulator.pattern == *a.pattern {
        accumulator.clone()
    } else {
        let union = Arc::new(accumulator.pattern.union(&a.pattern)?);
        let mut m = SparseMatrix::zeros(union);
        m.axpy(1.0, accumulator)?;
        m
    };
    out.axpy(c, a)?;
    Ok(out)
}

pub fn spmv(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.spmv(x)
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn init_parallelism() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Numeric sparse LU factors of one matrix.
pub struct LuFactor {
    lu: Lu<usize, f64>,
    matrix: SparseMatrix,
}

impl LuFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::invalid("LU of a non-square matrix"));
        }
        if a.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix contains non-finite entries"));
        }
        init_parallelism();
        let p = &*a.pattern;
        let symbolic = p.symbolic_lu()?;
        let csc = p.csc();
        let vals: Vec<f64> = csc.from_csr.iter().map(|&k| a.values[k]).collect();
        let sym = SymbolicSparseColMatRef::new_checked(p.n_rows, p.n_cols, &csc.col_ptr, None, &csc.row_idx);
        let mat = SparseColMatRef::new(sym, &vals);
        let lu = Lu::try_new_with_symbolic(symbolic, mat).map_err(|e| Error::Singular(format!("{e:?}")))?;
        Ok(LuFactor { lu, matrix: a.clone() })
    }

    /// Raw triangular solves, no residual check.
    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        use faer::linalg::solvers::SolveCore;
        let mut x = b.to_vec();
        let n = x.len();
        self.lu.solve_in_place_with_conj(faer::Conj::No, MatMut::from_column_major_slice_mut(&mut x, n, 1));
        x
    }

    /// Solve with one step of iterative refinement when needed; fails when
    /// the residual bound `1e-10 (1 + |b|)` cannot be met.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.matrix.n_rows() {
            return Err(Error::invalid("right-hand side length mismatch"));
        }
        let tol = 1e-10 * (1.0 + norm2(b));
        let mut x = self.apply(b);
        let mut r = residual(&self.matrix, &x, b);
        if !(norm2(&r) <= tol) {
            if x.iter().all(|v| v.is_finite()) {
                let dx = self.apply(&r);
                x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
                r = residual(&self.matrix, &x, b);
            }
            let rn = norm2(&r);
            if !(rn <= tol) {
                return Err(Error::Singular(format!("LU residual {rn:.3e} exceeds {tol:.3e}")));
            }
        }
        Ok(x)
    }
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.spmv(x).expect("dimensions checked");
    b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect()
}

/// Direct sparse solve `A x = b` with a verified residual.
pub fn solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    a.factorize()?.solve(b)
}

/// Restarted GMRES with a right preconditioner `precond(v) ~ A^{-1} v`.
/// Stops when `|b - A x| <= tol`; returns the iterate and the iteration count.
pub fn gmres(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    if a.n_rows() != n || a.n_cols() != n {
        return Err(Error::invalid("gmres dimension mismatch"));
    }
    let restart = restart.max(1);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut iters = 0;
    loop {
        let r = residual(a, &x, b);
        let beta = norm2(&r);
        if beta <= tol {
            return Ok((x, iters));
        }
        if iters >= max_iter || !beta.is_finite() {
            return Err(Error::Singular(format!("GMRES stalled at residual {beta:.3e} after {iters} iterations")));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut m = 0;
        while m < restart && iters < max_iter {
            let zm = precond(&v[m]);
            let mut w = a.spmv(&zm)?;
            z.push(zm);
            for i in 0..=m {
                h[i][m] = dot(&w, &v[i]);
                w.iter_mut().zip(&v[i]).for_each(|(wk, vk)| *wk -= h[i][m] * vk);
            }
            h[m + 1][m] = norm2(&w);
            for i in 0..m {
                let t = cs[i] * h[i][m] + sn[i] * h[i + 1][m];
                h[i + 1][m] = -sn[i] * h[i][m] + cs[i] * h[i + 1][m];
                h[i][m] = t;
            }
            let d = h[m][m].hypot(h[m + 1][m]);
            cs[m] = if d == 0.0 { 1.0 } else { h[m][m] / d };
            sn[m] = if d == 0.0 { 0.0 } else { h[m + 1][m] / d };
            h[m][m] = d;
            g[m + 1] = -sn[m] * g[m];
            g[m] *= cs[m];
            let hn = h[m + 1][m];
            h[m + 1][m] = 0.0;
            iters += 1;
            m += 1;
            if g[m].abs() <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wk| wk / hn).collect());
        }
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&z[j]).for_each(|(xk, zk)| *xk += yj * zk);
        }
    }
}

/// GMRES with Jacobi (diagonal) preconditioning.
pub fn solve_gmres(a: &SparseMatrix, b: &[f64], restart: usize, max_iter: usize) -> Result<Vec<f64>> {
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let tol = 1e-10 * (1.0 + norm2(b));
    let precond = |v: &[f64]| v.iter().zip(&inv_diag).map(|(vi, di)| vi * di).collect();
    gmres(a, b, None, precond, tol, restart, max_iter).map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, density: f64, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            n as f64
                        } else if rng.random::<f64>() < density {
                            rng.random_range(-1.0..1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        SparseMatrix::from_dense(&dense).unwrap()
    }

    fn dense_mul(d: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        d.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn pattern_validation() {
        assert!(CsrPattern::new(2, 2, vec![0, 1, 2], vec![0, 1]).is_ok());
        assert!(CsrPattern::new(2, 2, vec![0, 2, 2], vec![1, 0]).is_err());
        assert!(CsrPattern::new(2, 2, vec![0, 2, 2], vec![1, 1]).is_err());
        assert!(CsrPattern::new(2, 2, vec![0, 1, 2], vec![0, 2]).is_err());
        assert!(CsrPattern::new(2, 2, vec![0, 1], vec![0]).is_err());
    }

    #[test]
    fn cliques_sorted_and_unique() {
        let p = CsrPattern::from_cliques(5, [[0usize, 3, 1].as_slice(), &[3, 4], &[1, 0]]);
        assert_eq!(p.row(0), &[0, 1, 3]);
        assert_eq!(p.row(2), &[2]);
        assert_eq!(p.row(3), &[0, 1, 3, 4]);
        assert!(p.find(4, 3).is_some());
        assert!(p.find(4, 0).is_none());
    }

    #[test]
    fn spmv_identity() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(SparseMatrix::identity(3).spmv(&x).unwrap(), x);
    }

    #[test]
    fn spmv_matches_dense_oracle() {
        let a = random_sparse(50, 0.2, 7);
        let d = a.to_dense();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = a.spmv(&x).unwrap();
        for (yi, zi) in y.iter().zip(dense_mul(&d, &x)) {
            assert!((yi - zi).abs() <= 1e-13);
        }
    }

    #[test]
    fn spmv_dimension_mismatch() {
        assert!(SparseMatrix::identity(3).spmv(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn solve_small_cases() {
        let x = solve(&SparseMatrix::identity(4), &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0]);
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = solve(&a, &[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn solve_random_nonsymmetric() {
        let a = random_sparse(120, 0.05, 3);
        let b: Vec<f64> = (0..120).map(|i| (i as f64).sin()).collect();
        let x = solve(&a, &b).unwrap();
        let r = residual(&a, &x, &b);
        assert!(norm2(&r) <= 1e-10 * (1.0 + norm2(&b)));
    }

    #[test]
    fn singular_matrix_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        match solve(&a, &[1.0, 1.0]) {
            Err(Error::Singular(_)) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
        let z = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 0.0)]).unwrap();
        assert!(matches!(solve(&z, &[1.0, 1.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn factor_reuse_on_shared_pattern() {
        let a = random_sparse(40, 0.1, 11);
        let mut b = a.clone();
        b.scale(2.0);
        let rhs = vec![1.0; 40];
        let xa = solve(&a, &rhs).unwrap();
        let xb = solve(&b, &rhs).unwrap();
        for (p, q) in xa.iter().zip(&xb) {
            assert!((p - 2.0 * q).abs() < 1e-12);
        }
    }

    #[test]
    fn add_scaled_cases() {
        let a = random_sparse(30, 0.1, 1);
        let same = add_scaled(&a, &a, 0.0).unwrap();
        assert_eq!(same.values(), a.values());
        let zero = add_scaled(&a, &a, -1.0).unwrap();
        assert_eq!(zero.max_abs(), 0.0);

        let m = random_sparse(30, 0.1, 2);
        let combo = add_scaled(&m, &a, 2.0).unwrap();
        let x: Vec<f64> = (0..30).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let y = combo.spmv(&x).unwrap();
        let ym = m.spmv(&x).unwrap();
        let ya = a.spmv(&x).unwrap();
        for i in 0..30 {
            assert!((y[i] - ym[i] - 2.0 * ya[i]).abs() <= 1e-13);
        }
        assert!(add_scaled(&a, &SparseMatrix::identity(3), 1.0).is_err());
    }

    #[test]
    fn gmres_jacobi_matches_lu() {
        let a = random_sparse(80, 0.05, 5);
        let b: Vec<f64> = (0..80).map(|i| (0.3 * i as f64).cos()).collect();
        let x1 = solve(&a, &b).unwrap();
        let x2 = solve_gmres(&a, &b, 30, 500).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn transpose_and_asymmetry() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(a.asymmetry(), 2.0);
        let t = a.transpose();
        assert_eq!(t.get(1, 0), 2.0);
        assert_eq!(t.get(0, 1), 0.0);
        let s = add_scaled(&a, &t, 1.0).unwrap();
        assert_eq!(s.asymmetry(), 0.0);
    }
}
