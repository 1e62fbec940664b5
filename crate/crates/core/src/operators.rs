//! Truncated oscillator and qubit operators.
//!
//! Operators are stored in compressed sparse row form. The joint space is
//! qubit-major: index `s * nmax + n` for qubit state `s` (0 = up, 1 = down)
//! and Fock level `n`.

use std::collections::BTreeMap;
use std::fmt;

use faer::Mat;

use crate::error::{Error, Result};
use crate::model::{ModelParams, QubitBranch};
use crate::C64;

/// Label of the Hilbert space an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Fock(usize),
    Qubit,
    QubitFock(usize),
    Generic(usize),
}

impl Basis {
    pub fn dim(self) -> usize {
        match self {
            Basis::Fock(n) => n,
            Basis::Qubit => 2,
            Basis::QubitFock(n) => 2 * n,
            Basis::Generic(n) => n,
        }
    }

    /// Number of retained Fock levels, if the space contains an oscillator.
    pub fn nmax(self) -> Option<usize> {
        match self {
            Basis::Fock(n) | Basis::QubitFock(n) => Some(n),
            _ => None,
        }
    }

    fn kron(self, other: Basis) -> Basis {
        match (self, other) {
            (Basis::Qubit, Basis::Fock(n)) => Basis::QubitFock(n),
            (a, b) => Basis::Generic(a.dim() * b.dim()),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Fock(n) => write!(f, "fock({n})"),
            Basis::Qubit => write!(f, "qubit"),
            Basis::QubitFock(n) => write!(f, "qubit⊗fock({n})"),
            Basis::Generic(n) => write!(f, "generic({n})"),
        }
    }
}

/// Number of retained oscillator levels `|0>, ..., |nmax-1>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockTruncation(usize);

impl FockTruncation {
    pub fn new(nmax: usize) -> Result<Self> {
        if nmax < 2 {
            return Err(Error::InvalidArgument(format!("Nmax must be >= 2, got {nmax}")));
        }
        Ok(FockTruncation(nmax))
    }

    pub fn nmax(self) -> usize {
        self.0
    }

    /// Truncation used for the convergence cross-check, `ceil(1.3 Nmax)`.
    pub fn enlarged(self) -> FockTruncation {
        FockTruncation(((self.0 as f64) * 1.3).ceil() as usize)
    }
}

/// Complex sparse square matrix tagged with its basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    basis: Basis,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    /// Assemble from coordinate triplets. Duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets<I>(basis: Basis, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let dim = basis.dim();
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside a {dim}x{dim} operator"
                )));
            }
            *rows[r].entry(c).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseOperator { basis, row_ptr, cols, vals })
    }

    pub fn zeros(basis: Basis) -> Self {
        SparseOperator {
            basis,
            row_ptr: vec![0; basis.dim() + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(basis: Basis) -> Self {
        let n = basis.dim();
        SparseOperator {
            basis,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn diagonal(basis: Basis, diag: &[C64]) -> Result<Self> {
        if diag.len() != basis.dim() {
            return Err(Error::DimMismatch { expected: basis.dim(), got: diag.len() });
        }
        Self::from_triplets(basis, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Relabel the basis; dimensions must agree.
    pub fn with_basis(mut self, basis: Basis) -> Result<Self> {
        if basis.dim() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: basis.dim() });
        }
        self.basis = basis;
        Ok(self)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Iterate over stored `(row, col, value)` entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    fn check_basis(&self, other: &SparseOperator) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch { left: self.basis, right: other.basis });
        }
        Ok(())
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        if s == C64::new(0.0, 0.0) {
            return Self::zeros(self.basis);
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &SparseOperator) -> Result<Self> {
        self.check_basis(other)?;
        Self::from_triplets(self.basis, self.iter().chain(other.iter()))
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<Self> {
        self.check_basis(other)?;
        Self::from_triplets(self.basis, self.iter().chain(other.iter().map(|(r, c, v)| (r, c, -v))))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<Self> {
        self.check_basis(other)?;
        let mut trip = Vec::new();
        for (r, k, a) in self.iter() {
            for q in other.row_ptr[k]..other.row_ptr[k + 1] {
                trip.push((r, other.cols[q], a * other.vals[q]));
            }
        }
        Self::from_triplets(self.basis, trip)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &SparseOperator) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// `{self, other}`.
    pub fn anticommutator(&self, other: &SparseOperator) -> Result<Self> {
        self.matmul(other)?.add(&other.matmul(self)?)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.basis, self.iter().map(|(r, c, v)| (c, r, v)))
            .expect("transpose preserves bounds")
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.basis, self.iter().map(|(r, c, v)| (c, r, v.conj())))
            .expect("adjoint preserves bounds")
    }

    /// Exact Hermiticity check (no tolerance).
    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: x.len() });
        }
        Ok((0..self.dim())
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect())
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.dim(), self.dim());
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Keep only entries whose row and column both lie below `levels` in the
    /// Fock index (per qubit block for joint spaces). Used to mask truncation
    /// artifacts in identity checks.
    pub fn interior(&self, levels: usize) -> Self {
        let nmax = self.basis.nmax().unwrap_or(self.dim());
        let keep = |i: usize| i % nmax < levels;
        Self::from_triplets(self.basis, self.iter().filter(|&(r, c, _)| keep(r) && keep(c)))
            .expect("subset of valid entries")
    }
}

/// Kronecker product with index `i_a * dim_b + i_b`.
pub fn tensor(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    let db = b.dim();
    let basis = a.basis.kron(b.basis);
    let mut trip = Vec::with_capacity(a.nnz() * b.nnz());
    for (ra, ca, va) in a.iter() {
        for (rb, cb, vb) in b.iter() {
            trip.push((ra * db + rb, ca * db + cb, va * vb));
        }
    }
    SparseOperator::from_triplets(basis, trip).expect("kron indices in range")
}

/// Truncated ladder operators.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub a: SparseOperator,
    pub adag: SparseOperator,
    pub n: SparseOperator,
}

pub fn ladder_ops(trunc: FockTruncation) -> Ladder {
    let nmax = trunc.nmax();
    let basis = Basis::Fock(nmax);
    let a = SparseOperator::from_triplets(
        basis,
        (1..nmax).map(|m| (m - 1, m, C64::new((m as f64).sqrt(), 0.0))),
    )
    .expect("ladder entries in range");
    let adag = a.adjoint();
    // diagonal set directly so that the entries are exact integers
    let n = SparseOperator::from_triplets(basis, (1..nmax).map(|m| (m, m, C64::new(m as f64, 0.0))))
        .expect("ladder entries in range");
    Ladder { a, adag, n }
}

/// Pauli matrices in the basis `(|up>, |down>)`.
#[derive(Clone, Debug)]
pub struct Pauli {
    pub sx: SparseOperator,
    pub sy: SparseOperator,
    pub sz: SparseOperator,
    /// Raising operator `|up><down| = (sx + i sy) / 2`.
    pub sp: SparseOperator,
    pub sm: SparseOperator,
}

pub fn pauli_ops() -> Pauli {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let build = |t: Vec<(usize, usize, C64)>| {
        SparseOperator::from_triplets(Basis::Qubit, t).expect("2x2 entries")
    };
    Pauli {
        sx: build(vec![(0, 1, one), (1, 0, one)]),
        sy: build(vec![(0, 1, -i), (1, 0, i)]),
        sz: build(vec![(0, 0, one), (1, 1, -one)]),
        sp: build(vec![(0, 1, one)]),
        sm: build(vec![(1, 0, one)]),
    }
}

/// Embed a Fock-space operator into qubit⊗Fock as `1 ⊗ op`.
pub fn on_oscillator(op: &SparseOperator) -> SparseOperator {
    tensor(&SparseOperator::identity(Basis::Qubit), op)
}

/// Embed a qubit operator into qubit⊗Fock(nmax) as `op ⊗ 1`.
pub fn on_qubit(op: &SparseOperator, trunc: FockTruncation) -> SparseOperator {
    tensor(op, &SparseOperator::identity(Basis::Fock(trunc.nmax())))
}

/// `(Omega/2) sz + lambda sx (a + a†) + omega0 n` on qubit⊗Fock.
pub fn rabi_hamiltonian(params: &ModelParams, trunc: FockTruncation) -> Result<SparseOperator> {
    let (omega, lambda) = match (params.qubit_frequency(), params.lambda()) {
        (Some(o), Some(l)) => (o, l),
        _ => return Err(Error::InfiniteEta),
    };
    let lad = ladder_ops(trunc);
    let pauli = pauli_ops();
    let x = lad.a.add(&lad.adag)?;
    let qubit = on_qubit(&pauli.sz, trunc).scale_re(omega / 2.0);
    let coupling = tensor(&pauli.sx, &x).scale_re(lambda);
    let osc = on_oscillator(&lad.n).scale_re(params.omega0);
    qubit.add(&coupling)?.add(&osc)
}

/// Soft-mode oscillator Hamiltonian `∓(omega0 g²/4)(a + a†)² + omega0 n`
/// (minus sign for the down branch). `(a + a†)²` is the product of the
/// truncated matrices.
pub fn reduced_hamiltonian(
    branch: QubitBranch,
    params: &ModelParams,
    trunc: FockTruncation,
) -> SparseOperator {
    let lad = ladder_ops(trunc);
    let x = lad.a.add(&lad.adag).expect("same basis");
    let x2 = x.matmul(&x).expect("same basis");
    let c = -branch.coupling_sign() * params.omega0 * params.g * params.g / 4.0;
    x2.scale_re(c)
        .add(&lad.n.scale_re(params.omega0))
        .expect("same basis")
}

/// Parity `(-1)^n` of each Fock level.
pub fn fock_parity(trunc: FockTruncation) -> Vec<i8> {
    (0..trunc.nmax()).map(|n| if n % 2 == 0 { 1 } else { -1 }).collect()
}

/// Eigenvalues of `sz (-1)^n` on the qubit-major joint basis.
pub fn joint_parity(trunc: FockTruncation) -> Vec<i8> {
    let fock = fock_parity(trunc);
    [1i8, -1]
        .iter()
        .flat_map(|&s| fock.iter().map(move |&p| s * p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Eta;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn dense_eq(op: &SparseOperator, expected: &[&[f64]]) {
        for (r, row) in expected.iter().enumerate() {
            for (col, &v) in row.iter().enumerate() {
                let got = op.get(r, col);
                assert!((got - c(v)).norm() < 1e-14, "({r},{col}): {got} vs {v}");
            }
        }
    }

    #[test]
    fn ladder_matrices() {
        let l = ladder_ops(FockTruncation::new(3).unwrap());
        let s2 = 2f64.sqrt();
        dense_eq(&l.a, &[&[0.0, 1.0, 0.0], &[0.0, 0.0, s2], &[0.0, 0.0, 0.0]]);
        dense_eq(&l.n, &[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        assert_eq!(l.adag, l.a.adjoint());
        let prod = l.adag.matmul(&l.a).unwrap().sub(&l.n).unwrap();
        assert!(prod.max_abs() < 1e-15);
        // truncation shows up only in the last diagonal entry
        let comm = l.a.commutator(&l.adag).unwrap();
        dense_eq(&comm, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, -2.0]]);
    }

    #[test]
    fn truncation_must_keep_two_levels() {
        assert!(FockTruncation::new(1).is_err());
        assert_eq!(FockTruncation::new(10).unwrap().enlarged().nmax(), 13);
    }

    #[test]
    fn pauli_algebra() {
        let p = pauli_ops();
        let id = SparseOperator::identity(Basis::Qubit);
        assert_eq!(p.sx.matmul(&p.sx).unwrap(), id);
        assert_eq!(p.sy.matmul(&p.sy).unwrap(), id);
        assert_eq!(p.sz.matmul(&p.sz).unwrap(), id);
        assert_eq!(p.sp.matmul(&p.sm).unwrap().add(&p.sm.matmul(&p.sp).unwrap()).unwrap(), id);
        let sp = p.sx.add(&p.sy.scale(C64::new(0.0, 1.0))).unwrap().scale_re(0.5);
        assert_eq!(sp, p.sp);
        assert_eq!(p.sz.get(0, 0), c(1.0));
        // [sx, sy] = 2i sz
        let comm = p.sx.commutator(&p.sy).unwrap();
        assert_eq!(comm, p.sz.scale(C64::new(0.0, 2.0)));
    }

    #[test]
    fn kronecker_products() {
        let id6 = tensor(
            &SparseOperator::identity(Basis::Qubit),
            &SparseOperator::identity(Basis::Fock(3)),
        );
        assert_eq!(id6, SparseOperator::identity(Basis::QubitFock(3)));
        let l = ladder_ops(FockTruncation::new(2).unwrap());
        let szn = tensor(&pauli_ops().sz, &l.n);
        assert_eq!(szn.dim(), 4);
        dense_eq(
            &szn,
            &[&[0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, -1.0]],
        );
    }

    #[test]
    fn basis_mismatch_is_an_error() {
        let a = ladder_ops(FockTruncation::new(3).unwrap()).a;
        let s = pauli_ops().sx;
        assert!(matches!(a.add(&s), Err(Error::BasisMismatch { .. })));
        assert!(matches!(a.matmul(&s), Err(Error::BasisMismatch { .. })));
    }

    #[test]
    fn rabi_hamiltonian_structure() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, Eta::Finite(10.0)).unwrap();
        let t = FockTruncation::new(2).unwrap();
        let h = rabi_hamiltonian(&p, t).unwrap();
        assert!(h.is_hermitian());
        let lam = p.lambda().unwrap();
        // |up,0> couples to |down,1>, |up,1> to |down,0>
        dense_eq(
            &h,
            &[
                &[5.0, 0.0, 0.0, lam],
                &[0.0, 6.0, lam, 0.0],
                &[0.0, lam, -5.0, 0.0],
                &[lam, 0.0, 0.0, -4.0],
            ],
        );
        let inf = p.with_eta(Eta::Infinite).unwrap();
        assert!(matches!(rabi_hamiltonian(&inf, t), Err(Error::InfiniteEta)));
    }

    #[test]
    fn decoupled_rabi_is_diagonal() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.0, Eta::Finite(3.0)).unwrap();
        let t = FockTruncation::new(5).unwrap();
        let h = rabi_hamiltonian(&p, t).unwrap();
        for (r, col, v) in h.iter() {
            assert_eq!(r, col);
            let s = if r < 5 { 1.5 } else { -1.5 };
            assert_eq!(v, c(s + (r % 5) as f64));
        }
    }

    #[test]
    fn reduced_hamiltonian_small_truncation() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, Eta::Infinite).unwrap();
        let t = FockTruncation::new(2).unwrap();
        // (a + a†) = sx on two levels, so (a + a†)² = 1
        let h = reduced_hamiltonian(QubitBranch::Down, &p, t);
        dense_eq(&h, &[&[-0.25, 0.0], &[0.0, 0.75]]);
        let h_up = reduced_hamiltonian(QubitBranch::Up, &p, t);
        dense_eq(&h_up, &[&[0.25, 0.0], &[0.0, 1.25]]);

        let free = reduced_hamiltonian(QubitBranch::Down, &p.with_g(0.0).unwrap(), t);
        assert_eq!(free, ladder_ops(t).n);
    }

    #[test]
    fn up_spectrum_dominates_down() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 0.8, Eta::Infinite).unwrap();
        let t = FockTruncation::new(12).unwrap();
        let spec = |b| {
            let h = reduced_hamiltonian(b, &p, t);
            assert!(h.is_hermitian());
            let mut ev: Vec<f64> = h
                .to_dense()
                .self_adjoint_eigenvalues(faer::Side::Lower)
                .unwrap();
            ev.sort_by(f64::total_cmp);
            ev
        };
        let down = spec(QubitBranch::Down);
        let up = spec(QubitBranch::Up);
        for (d, u) in down.iter().zip(&up) {
            assert!(u >= d, "{u} < {d}");
        }
    }

    #[test]
    fn joint_parity_is_qubit_major() {
        let par = joint_parity(FockTruncation::new(3).unwrap());
        assert_eq!(par, vec![1, -1, 1, -1, 1, -1]);
    }
}
