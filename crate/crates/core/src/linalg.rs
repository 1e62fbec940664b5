//! Sparse matrices, shift-invert eigensolver and small dense helpers.
//!
//! Sparse LU factorization and dense eigendecompositions come from `faer`.
//! The shift-invert eigensolver is a restarted block Krylov method with
//! Rayleigh-Ritz extraction: it builds an orthonormal basis `V` together with
//! `W = (A - σ)^{-1} V`, so restarts reuse `W` instead of re-solving.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Compressed sparse column matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl CscMatrix {
    /// Assemble from triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut cols = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "entry ({r}, {c}) out of bounds");
            if let (Some(&lr), Some(&lc)) = (row_idx.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            row_idx.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut out_rows = Vec::with_capacity(row_idx.len());
        let mut out_vals = Vec::with_capacity(row_idx.len());
        for ((r, c), v) in row_idx.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                out_rows.push(r);
                out_vals.push(v);
                col_ptr[c + 1] += 1;
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        CscMatrix { nrows, ncols, col_ptr, row_idx: out_rows, vals: out_vals }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    /// Stored entries as `(row, col, value)`, column by column.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.ncols).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], c, self.vals[k]))
        })
    }

    /// Entries of column `c` as `(row, value)`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], self.vals[k]))
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![ZERO; self.nrows];
        for (c, &xc) in x.iter().enumerate() {
            if xc == ZERO {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.vals[k] * xc;
            }
        }
        y
    }

    /// Induced 1-norm (largest absolute column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.ncols)
            .map(|c| self.column(c).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on the given (sorted, distinct) indices.
    pub fn principal_submatrix(&self, idx: &[usize]) -> CscMatrix {
        let mut pos = vec![usize::MAX; self.nrows];
        for (new, &old) in idx.iter().enumerate() {
            pos[old] = new;
        }
        let trip = idx.iter().enumerate().flat_map(|(nc, &oc)| {
            let pos = &pos;
            self.column(oc)
                .filter(move |&(r, _)| pos[r] != usize::MAX)
                .map(move |(r, v)| (pos[r], nc, v))
        });
        CscMatrix::from_triplets(idx.len(), idx.len(), trip.collect::<Vec<_>>())
    }

    /// `A - σ I`.
    pub fn shifted(&self, sigma: C64) -> CscMatrix {
        assert_eq!(self.nrows, self.ncols);
        CscMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.iter().chain((0..self.nrows).map(|i| (i, i, -sigma))),
        )
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, C64>> {
        let t: Vec<Triplet<usize, usize, C64>> =
            self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::LinearAlgebra(format!("sparse assembly: {e:?}")))
    }
}

/// LU factorization of `A - σ I`, applied as `(A - σ I)^{-1}`.
pub struct ShiftInvert {
    lu: faer::sparse::linalg::solvers::Lu<usize, C64>,
    n: usize,
    sigma: C64,
}

impl ShiftInvert {
    pub fn new(a: &CscMatrix, sigma: C64) -> Result<Self> {
        let lu = a
            .shifted(sigma)
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::LinearAlgebra(format!("sparse LU: {e:?}")))?;
        Ok(ShiftInvert { lu, n: a.nrows(), sigma })
    }

    pub fn sigma(&self) -> C64 {
        self.sigma
    }

    pub fn solve_in_place(&self, x: &mut [C64]) -> Result<()> {
        assert_eq!(x.len(), self.n);
        self.lu.solve_in_place(MatMut::from_column_major_slice_mut(x, self.n, 1));
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::LinearAlgebra(format!(
                "shifted matrix is numerically singular at sigma = {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn solve(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = x.to_vec();
        self.solve_in_place(&mut y)?;
        Ok(y)
    }
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn scale(x: &mut [C64], s: C64) {
    x.iter_mut().for_each(|v| *v *= s);
}

/// Orthogonalize `x` against the orthonormal set `basis` (two passes) and
/// normalize. Returns `false` if `x` is numerically in the span.
fn orthonormalize(basis: &[Vec<C64>], x: &mut [C64]) -> bool {
    let start = norm(x);
    if start == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, x);
            x.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
        }
    }
    let nrm = norm(x);
    if nrm <= 1e-10 * start {
        return false;
    }
    scale(x, C64::new(1.0 / nrm, 0.0));
    true
}

/// One eigenpair with its residual `‖A x - λ x‖` for unit `x`.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: C64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct KrylovOptions {
    /// Number of eigenpairs nearest the shift to compute.
    pub nev: usize,
    /// How many of the leading `nev` pairs must meet `tol`.
    pub converge: usize,
    pub block: usize,
    /// Maximum basis size before a restart; 0 picks a default from `nev`.
    pub max_dim: usize,
    pub max_restarts: usize,
    /// Absolute residual tolerance.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            nev: 1,
            converge: 1,
            block: 2,
            max_dim: 0,
            max_restarts: 60,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

/// Eigenpairs of `A` nearest `sigma`, ordered by increasing distance.
pub fn eigs_near(a: &CscMatrix, sigma: C64, opts: &KrylovOptions) -> Result<Vec<EigenPair>> {
    let op = ShiftInvert::new(a, sigma)?;
    eigs_shift_invert(a, &op, opts)
}

/// As [`eigs_near`], reusing an existing factorization.
pub fn eigs_shift_invert(
    a: &CscMatrix,
    op: &ShiftInvert,
    opts: &KrylovOptions,
) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    let nev = opts.nev.min(n).max(1);
    let converge = opts.converge.min(nev);
    let block = opts.block.max(1);
    let max_dim = if opts.max_dim == 0 { (4 * nev).max(nev + 40) } else { opts.max_dim }
        .max(nev + block + 1)
        .min(n);
    let sigma = op.sigma();

    if n <= max_dim.max(64) {
        return dense_near(a, sigma, nev);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Vec<C64>> = Vec::with_capacity(max_dim);
    let mut w: Vec<Vec<C64>> = Vec::with_capacity(max_dim);
    let mut cand: Vec<Vec<C64>> = (0..block)
        .map(|_| (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    let mut best_res = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        // expand the subspace
        while v.len() < max_dim {
            let mut added = 0;
            for mut x in cand.drain(..) {
                if v.len() >= max_dim {
                    break;
                }
                if orthonormalize(&v, &mut x) {
                    let y = op.solve(&x)?;
                    v.push(x);
                    w.push(y);
                    added += 1;
                }
            }
            if added == 0 {
                if v.len() >= nev {
                    break;
                }
                // exhausted: restart the search with fresh random directions
                cand = (0..block)
                    .map(|_| (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect())
                    .collect();
                continue;
            }
            let m = w.len();
            cand = w[m - added..].to_vec();
        }

        // Rayleigh-Ritz on (A - σ)^{-1}
        let m = v.len();
        let h = Mat::<C64>::from_fn(m, m, |i, j| dot(&v[i], &w[j]));
        let evd = h
            .eigen()
            .map_err(|e| Error::LinearAlgebra(format!("projected eigenproblem: {e:?}")))?;
        let theta: Vec<C64> = (0..m).map(|i| evd.S().column_vector()[i]).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| theta[j].norm().total_cmp(&theta[i].norm()).then(i.cmp(&j)));

        let ritz = |col: usize| -> Vec<C64> {
            let mut x = vec![ZERO; n];
            for (k, vk) in v.iter().enumerate() {
                let c = evd.U()[(k, col)];
                x.iter_mut().zip(vk).for_each(|(a, b)| *a += c * b);
            }
            let nr = norm(&x);
            scale(&mut x, C64::new(1.0 / nr, 0.0));
            x
        };

        let mut pairs = Vec::with_capacity(nev);
        for &i in order.iter().take(nev) {
            let x = ritz(i);
            let value = if theta[i].norm() == 0.0 {
                C64::new(f64::INFINITY, 0.0)
            } else {
                sigma + theta[i].inv()
            };
            let ax = a.mul_vec(&x);
            let r: Vec<C64> = ax.iter().zip(&x).map(|(p, q)| p - value * q).collect();
            pairs.push(EigenPair { value, vector: x, residual: norm(&r) });
        }
        let worst = pairs[..converge].iter().map(|p| p.residual).fold(0.0, f64::max);
        best_res = best_res.min(worst);
        log::trace!("krylov restart {restart}: dim {m}, worst residual {worst:e}");
        if worst <= opts.tol || m == n {
            return Ok(pairs);
        }

        // thick restart: keep the wanted Ritz directions
        let keep = (nev + (nev / 2).max(2)).min(m.saturating_sub(block)).max(1);
        let mut q: Vec<Vec<C64>> = Vec::with_capacity(keep);
        for &i in order.iter().take(keep) {
            let mut y: Vec<C64> = (0..m).map(|k| evd.U()[(k, i)]).collect();
            if orthonormalize(&q, &mut y) {
                q.push(y);
            }
        }
        let combine = |basis: &[Vec<C64>], coeff: &[C64]| -> Vec<C64> {
            let mut x = vec![ZERO; n];
            for (b, &c) in basis.iter().zip(coeff) {
                x.iter_mut().zip(b).for_each(|(a, bb)| *a += c * bb);
            }
            x
        };
        let new_v: Vec<Vec<C64>> = q.iter().map(|y| combine(&v, y)).collect();
        let new_w: Vec<Vec<C64>> = q.iter().map(|y| combine(&w, y)).collect();
        let unconverged: Vec<usize> = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.residual > opts.tol)
            .map(|(i, _)| i)
            .filter(|&i| i < new_w.len())
            .take(block)
            .collect();
        cand = if unconverged.is_empty() {
            vec![new_w[0].clone()]
        } else {
            unconverged.iter().map(|&i| new_w[i].clone()).collect()
        };
        v = new_v;
        w = new_w;
    }
    Err(Error::NotConverged {
        what: "shift-invert eigensolver",
        iterations: opts.max_restarts,
        residual: best_res,
    })
}

/// Dense fallback for small problems.
fn dense_near(a: &CscMatrix, sigma: C64, nev: usize) -> Result<Vec<EigenPair>> {
    let d = a.to_dense();
    let evd = d
        .eigen()
        .map_err(|e| Error::LinearAlgebra(format!("dense eigenproblem: {e:?}")))?;
    let n = a.nrows();
    let vals: Vec<C64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| (vals[i] - sigma).norm().total_cmp(&(vals[j] - sigma).norm()));
    Ok(order
        .into_iter()
        .take(nev)
        .map(|i| {
            let mut x: Vec<C64> = (0..n).map(|k| evd.U()[(k, i)]).collect();
            let nr = norm(&x);
            scale(&mut x, C64::new(1.0 / nr, 0.0));
            let ax = a.mul_vec(&x);
            let r: Vec<C64> = ax.iter().zip(&x).map(|(p, q)| p - vals[i] * q).collect();
            EigenPair { value: vals[i], vector: x, residual: norm(&r) }
        })
        .collect())
}

/// Diagonal similarity scaling `B = D^{-1} A D` that equalizes the off-diagonal
/// 1-norms of every row and column (Osborne iteration with exact factors).
///
/// Radix-2 factors as used by LAPACK leave per-link imbalances of up to a factor
/// of two, which compound along long tridiagonal chains; exact factors do not.
/// Iteration runs over the stored sparsity pattern only. Returns `d`.
pub fn balance(a: &mut Mat<C64>) -> Vec<f64> {
    const TOL: f64 = 1e-4;
    const MAX_SWEEPS: usize = 5000;
    let n = a.nrows();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..n {
            if i != j && a[(i, j)] != ZERO {
                rows[i].push(j);
                cols[j].push(i);
            }
        }
    }
    let mut d = vec![1.0f64; n];
    for _ in 0..MAX_SWEEPS {
        let mut done = true;
        for i in 0..n {
            let c: f64 = cols[i].iter().map(|&r| a[(r, i)].norm()).sum();
            let r: f64 = rows[i].iter().map(|&col| a[(i, col)].norm()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let f = (r / c).sqrt();
            let next = d[i] * f;
            if (f - 1.0).abs() <= TOL || !(1e-150..=1e150).contains(&next) {
                continue;
            }
            done = false;
            d[i] = next;
            for &row in &cols[i] {
                a[(row, i)] *= f;
            }
            for &col in &rows[i] {
                a[(i, col)] /= f;
            }
        }
        if done {
            break;
        }
    }
    d
}

/// Apply `B = D^{-1} A D` for a given diagonal `d`.
pub fn scale_similarity(a: &mut Mat<C64>, d: &[f64]) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] *= d[j] / d[i];
        }
    }
}

/// Eigenvalues of a dense complex matrix.
pub fn eigenvalues(a: &Mat<C64>) -> Result<Vec<C64>> {
    a.eigenvalues()
        .map_err(|e| Error::LinearAlgebra(format!("dense eigenvalues: {e:?}")))
}

/// Eigenvalues after diagonal balancing.
pub fn balanced_eigenvalues(a: &Mat<C64>) -> Result<Vec<C64>> {
    let mut b = a.clone();
    balance(&mut b);
    eigenvalues(&b)
}

/// Polish an approximate eigenvalue of `a` with one two-sided inverse
/// iteration and the correction `y^H (A - z) x / (y^H x)`. The correction is
/// kept only when it is below `accept` in magnitude.
pub fn refine_eigenvalue(a: &Mat<C64>, z: C64, accept: f64) -> C64 {
    let n = a.nrows();
    let shifted = Mat::<C64>::from_fn(n, n, |i, j| if i == j { a[(i, j)] - z } else { a[(i, j)] });
    let start = |seed: f64| Mat::<C64>::from_fn(n, 1, |i, _| C64::new(1.0 + seed * i as f64 / n as f64, 0.0));
    let inverse_iterate = |m: &Mat<C64>, seed: f64| {
        let lu = m.full_piv_lu();
        let mut x = start(seed);
        for _ in 0..2 {
            lu.solve_in_place(x.as_mut());
            let nrm = (0..n).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
            if !(nrm.is_finite() && nrm > 0.0) {
                return None;
            }
            for i in 0..n {
                x[(i, 0)] /= nrm;
            }
        }
        Some((0..n).map(|i| x[(i, 0)]).collect::<Vec<C64>>())
    };
    let (Some(x), Some(y)) = (inverse_iterate(&shifted, 0.5), inverse_iterate(&shifted.adjoint().to_owned(), -0.25)) else {
        return z;
    };
    let mut num = C64::new(0.0, 0.0);
    for i in 0..n {
        let row: C64 = (0..n).map(|j| shifted[(i, j)] * x[j]).sum();
        num += y[i].conj() * row;
    }
    let den = dot(&y, &x);
    let dz = num / den;
    if dz.is_finite() && dz.norm() <= accept {
        z + dz
    } else {
        z
    }
}

/// Solve the dense system `A x = b`.
pub fn solve_dense(a: &Mat<C64>, b: &[C64]) -> Vec<C64> {
    let n = a.nrows();
    let lu = a.full_piv_lu();
    let mut x = Mat::<C64>::from_fn(n, 1, |i, _| b[i]);
    lu.solve_in_place(x.as_mut());
    (0..n).map(|i| x[(i, 0)]).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
