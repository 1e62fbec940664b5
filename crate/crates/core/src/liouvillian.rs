//! Vectorized Lindblad generators, steady states and spectral edges.
//!
//! Density matrices are column-stacked: `vec(ρ)[i + j d] = ρ[i, j]`, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, CscMatrix, EigenPair, KrylovOptions, ShiftInvert};
use crate::model::{ModelParams, QubitBranch};
use crate::operators::{
    fock_parity, joint_parity, ladder_ops, rabi_hamiltonian, reduced_hamiltonian, tensor, Basis,
    FockTruncation, SparseOperator,
};
use crate::C64;

/// Which generator a superoperator represents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelTag {
    Generic,
    Rabi { params: ModelParams, nmax: usize },
    Reduced { branch: QubitBranch, params: ModelParams, nmax: usize },
}

/// Lindblad generator acting on vectorized density matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    hilbert_dim: usize,
    basis: Basis,
    matrix: CscMatrix,
    tag: ModelTag,
    /// Eigenvalues of the weak symmetry on each Hilbert basis state, if known.
    parity: Option<Vec<i8>>,
}

impl Superoperator {
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Dimension `d²` of the vectorized space.
    pub fn dim(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    pub fn parity(&self) -> Option<&[i8]> {
        self.parity.as_deref()
    }

    pub fn with_parity(mut self, parity: Vec<i8>) -> Result<Self> {
        if parity.len() != self.hilbert_dim {
            return Err(Error::DimMismatch { expected: self.hilbert_dim, got: parity.len() });
        }
        self.parity = Some(parity);
        Ok(self)
    }

    /// Largest `|Σ_m M[(m,m), c]|` over columns: zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim;
        (0..self.dim())
            .map(|c| {
                self.matrix
                    .column(c)
                    .filter(|&(r, _)| r % d == r / d)
                    .map(|(_, v)| v)
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max ‖L(V E V†) - V L(E) V†‖` over matrix units `E`, for the stored
    /// parity operator `V`. Zero when the generator has the weak symmetry.
    pub fn weak_symmetry_defect(&self) -> Option<f64> {
        let p = self.parity.as_ref()?;
        let d = self.hilbert_dim;
        let pair = |k: usize| p[k % d] * p[k / d];
        Some(
            self.matrix
                .iter()
                .map(|(r, c, v)| v.norm() * f64::from((pair(c) - pair(r)).abs()))
                .fold(0.0, f64::max),
        )
    }

    /// Vectorized indices `(i, j)` with `p_i p_j = sign`.
    pub fn sector_indices(&self, sign: i8) -> Option<Vec<usize>> {
        let p = self.parity.as_ref()?;
        let d = self.hilbert_dim;
        Some((0..self.dim()).filter(|&k| p[k % d] * p[k / d] == sign).collect())
    }

    /// `L(ρ)` as a (generally non-Hermitian, traceless) matrix.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<Mat<C64>> {
        if rho.dim() != self.hilbert_dim {
            return Err(Error::DimMismatch { expected: self.hilbert_dim, got: rho.dim() });
        }
        let out = self.matrix.mul_vec(&rho.to_vec());
        Ok(unvec(&out, self.hilbert_dim))
    }
}

fn unvec(x: &[C64], d: usize) -> Mat<C64> {
    Mat::from_fn(d, d, |i, j| x[i + j * d])
}

/// Matrix of `ρ ↦ -i[H, ρ] + Σ r D[L](ρ)`.
pub fn lindblad_superop(h: &SparseOperator, channels: &[(f64, SparseOperator)]) -> Result<Superoperator> {
    let d = h.dim();
    let i = C64::new(0.0, 1.0);
    let mut trip: Vec<(usize, usize, C64)> = Vec::new();
    // -i (I ⊗ H) + i (Hᵀ ⊗ I)
    for (r, c, v) in h.iter() {
        for a in 0..d {
            trip.push((a * d + r, a * d + c, -i * v));
            trip.push((r * d + a, c * d + a, i * v));
        }
    }
    for (rate, l) in channels {
        if !(rate.is_finite() && *rate >= 0.0) {
            return Err(Error::InvalidParam { field: "rate", range: "[0,inf)", value: *rate });
        }
        if l.basis() != h.basis() {
            return Err(Error::BasisMismatch { left: h.basis(), right: l.basis() });
        }
        if *rate == 0.0 {
            continue;
        }
        let r = C64::new(*rate, 0.0);
        // conj(L) ⊗ L
        for (r1, c1, v1) in l.iter() {
            for (r2, c2, v2) in l.iter() {
                trip.push((r1 * d + r2, c1 * d + c2, r * v1.conj() * v2));
            }
        }
        let ldl = l.adjoint().matmul(l)?;
        for (rr, cc, v) in ldl.iter() {
            for a in 0..d {
                trip.push((a * d + rr, a * d + cc, -0.5 * r * v));
                trip.push((cc * d + a, rr * d + a, -0.5 * r * v));
            }
        }
    }
    Ok(Superoperator {
        hilbert_dim: d,
        basis: h.basis(),
        matrix: CscMatrix::from_triplets(d * d, d * d, trip),
        tag: ModelTag::Generic,
        parity: None,
    })
}

/// Full Rabi generator with damping `κ(1-γ) D[a]` and dephasing `κγ D[n]`.
pub fn rabi_liouvillian(params: &ModelParams, trunc: FockTruncation) -> Result<Superoperator> {
    let h = rabi_hamiltonian(params, trunc)?;
    let lad = ladder_ops(trunc);
    let id = SparseOperator::identity(Basis::Qubit);
    let channels = [
        (params.damping_rate(), tensor(&id, &lad.a)),
        (params.dephasing_rate(), tensor(&id, &lad.n)),
    ];
    let mut s = lindblad_superop(&h, &channels)?.with_parity(joint_parity(trunc))?;
    s.tag = ModelTag::Rabi { params: *params, nmax: trunc.nmax() };
    Ok(s)
}

/// Oscillator-only generator conditioned on a qubit branch.
pub fn reduced_liouvillian(
    branch: QubitBranch,
    params: &ModelParams,
    trunc: FockTruncation,
) -> Result<Superoperator> {
    let h = reduced_hamiltonian(branch, params, trunc);
    let lad = ladder_ops(trunc);
    let channels = [(params.damping_rate(), lad.a), (params.dephasing_rate(), lad.n)];
    let mut s = lindblad_superop(&h, &channels)?.with_parity(fock_parity(trunc))?;
    s.tag = ModelTag::Reduced { branch, params: *params, nmax: trunc.nmax() };
    Ok(s)
}

/// Adjoint dissipator `r (L† A L - ½{L†L, A})`.
pub fn adjoint_apply(channel: (f64, &SparseOperator), a: &SparseOperator) -> Result<SparseOperator> {
    let (rate, l) = channel;
    let ld = l.adjoint();
    let ldl = ld.matmul(l)?;
    let jump = ld.matmul(a)?.matmul(l)?;
    Ok(jump.sub(&ldl.anticommutator(a)?.scale_re(0.5))?.scale_re(rate))
}

/// Dense density matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: Mat<C64>,
}

impl DensityMatrix {
    pub fn from_dense(mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimMismatch { expected: mat.nrows(), got: mat.ncols() });
        }
        Ok(DensityMatrix { mat })
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &[C64]) -> Self {
        let nrm = linalg::norm(psi);
        let d = psi.len();
        DensityMatrix { mat: Mat::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / (nrm * nrm)) }
    }

    /// Projector onto basis state `k`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        psi[k] = C64::new(1.0, 0.0);
        Self::pure(&psi)
    }

    pub fn from_vec(x: &[C64], d: usize) -> Result<Self> {
        if x.len() != d * d {
            return Err(Error::DimMismatch { expected: d * d, got: x.len() });
        }
        Ok(DensityMatrix { mat: unvec(x, d) })
    }

    pub fn to_vec(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d * d).map(|k| self.mat[(k % d, k / d)]).collect()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Largest `|ρ - ρ†|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..=i {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn hermitized(&self) -> Mat<C64> {
        let d = self.dim();
        Mat::from_fn(d, d, |i, j| (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.hermitized()
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("density eigenvalues: {e:?}")))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Copy with negative eigenvalues down to `-1e-8` set to zero and the
    /// trace restored. Larger negativity is an error.
    pub fn clipped(&self) -> Result<Self> {
        let evd = self
            .hermitized()
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("density eigendecomposition: {e:?}")))?;
        let d = self.dim();
        let s: Vec<f64> = (0..d).map(|i| evd.S().column_vector()[i].re).collect();
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::Domain(format!("density matrix eigenvalue {min:e} below -1e-8")));
        }
        let clip: f64 = s.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
        if clip > 0.0 {
            log::debug!("clipped negative density eigenvalues, total magnitude {clip:e}");
        }
        let u = evd.U();
        let kept: Vec<f64> = s.iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = kept.iter().sum();
        let mat = Mat::from_fn(d, d, |i, j| {
            (0..d).map(|k| u[(i, k)] * u[(j, k)].conj() * (kept[k] / total)).sum()
        });
        Ok(DensityMatrix { mat })
    }

    fn normalized_hermitian(x: &[C64], d: usize) -> Self {
        let raw = unvec(x, d);
        let tr: C64 = (0..d).map(|i| raw[(i, i)]).sum();
        let mat = Mat::from_fn(d, d, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5 / tr.re);
        let mut rho = DensityMatrix { mat };
        // phase of the eigenvector: fix through the trace before Hermitizing
        if tr.norm() > 0.0 {
            let phase = tr / tr.norm();
            let m = Mat::from_fn(d, d, |i, j| raw[(i, j)] / phase);
            let tr2: f64 = (0..d).map(|i| m[(i, i)].re).sum();
            rho.mat = Mat::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5 / tr2);
        }
        rho
    }
}

/// `tr(A ρ)`.
pub fn expectation(rho: &DensityMatrix, a: &SparseOperator) -> Result<C64> {
    if rho.dim() != a.dim() {
        return Err(Error::DimMismatch { expected: rho.dim(), got: a.dim() });
    }
    Ok(a.iter().map(|(r, c, v)| v * rho.mat[(c, r)]).sum())
}

#[derive(Clone, Debug)]
pub struct SteadyStateOptions {
    /// Relative residual `‖L vec(ρ)‖ / (‖L‖₁ ‖vec(ρ)‖)`.
    pub tol: f64,
    /// Second-smallest eigenvalue magnitude below which the steady space is degenerate.
    pub degeneracy_tol: f64,
    /// Shift for the inverse iteration; small and off the spectrum.
    pub shift: C64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Restrict to the symmetric sector when the generator carries a parity.
    pub use_symmetry: bool,
    pub seed: u64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        SteadyStateOptions {
            tol: 1e-10,
            degeneracy_tol: 1e-9,
            shift: C64::new(1e-4, 0.0),
            krylov_dim: 24,
            max_restarts: 60,
            use_symmetry: true,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// Relative residual of the returned state.
    pub residual: f64,
    /// Eigenvalue nearest zero after the steady one (within the solved sector).
    pub second_eigenvalue: C64,
}

impl SteadyState {
    /// Spectral gap estimate `-Re ℓ₂`.
    pub fn gap(&self) -> f64 {
        -self.second_eigenvalue.re
    }
}

fn embed(sector: Option<&[usize]>, x: &[C64], dim: usize) -> Vec<C64> {
    match sector {
        None => x.to_vec(),
        Some(idx) => {
            let mut full = vec![C64::new(0.0, 0.0); dim];
            for (k, &i) in idx.iter().enumerate() {
                full[i] = x[k];
            }
            full
        }
    }
}

/// Unique steady state of `S`.
pub fn steady_state(s: &Superoperator, opts: &SteadyStateOptions) -> Result<SteadyState> {
    let d = s.hilbert_dim;
    let sector = if opts.use_symmetry { s.sector_indices(1) } else { None };
    let a = match &sector {
        Some(idx) => s.matrix.principal_submatrix(idx),
        None => s.matrix.clone(),
    };
    let scale = a.norm_one().max(f64::MIN_POSITIVE);
    let op = ShiftInvert::new(&a, opts.shift)?;
    let kopts = KrylovOptions {
        nev: 2,
        converge: 1,
        block: 2,
        max_dim: opts.krylov_dim,
        max_restarts: opts.max_restarts,
        tol: (opts.tol * scale).max(1e-13 * scale),
        seed: opts.seed,
    };
    let pairs = linalg::eigs_shift_invert(&a, &op, &kopts)?;
    let second = pairs[1].value;
    let to_state = |p: &EigenPair| {
        let x = embed(sector.as_deref(), &p.vector, d * d);
        let tr: C64 = (0..d).map(|i| x[i + i * d]).sum();
        if tr.norm() > 1e-12 {
            DensityMatrix::normalized_hermitian(&x, d)
        } else {
            DensityMatrix { mat: unvec(&x, d) }
        }
    };
    if second.norm() < opts.degeneracy_tol {
        return Err(Error::DegenerateSteadyState {
            second,
            states: Box::new([to_state(&pairs[0]), to_state(&pairs[1])]),
        });
    }

    // polish with inverse iteration on the same factorization
    let mut x = pairs[0].vector.clone();
    for _ in 0..2 {
        op.solve_in_place(&mut x)?;
        let nrm = linalg::norm(&x);
        linalg::scale(&mut x, C64::new(1.0 / nrm, 0.0));
    }
    let full = embed(sector.as_deref(), &x, d * d);
    let rho = DensityMatrix::normalized_hermitian(&full, d);
    let v = rho.to_vec();
    let residual = linalg::norm(&s.matrix.mul_vec(&v)) / (s.matrix.norm_one().max(f64::MIN_POSITIVE) * linalg::norm(&v));
    if !(residual <= opts.tol) {
        return Err(Error::NotConverged { what: "steady state", iterations: opts.max_restarts, residual });
    }
    Ok(SteadyState { rho, residual, second_eigenvalue: second })
}

#[derive(Clone, Debug)]
pub struct EdgeOptions {
    /// Shift placed to the right of the spectrum.
    pub shift: C64,
    /// Absolute residual tolerance per eigenpair.
    pub tol: f64,
    /// Extra eigenpairs computed beyond `count` before ranking by real part.
    pub buffer: usize,
    pub max_restarts: usize,
    pub use_symmetry: bool,
    pub seed: u64,
}

impl Default for EdgeOptions {
    fn default() -> Self {
        EdgeOptions {
            shift: C64::new(1.0, 0.0),
            tol: 1e-8,
            buffer: 8,
            max_restarts: 200,
            use_symmetry: true,
            seed: 0xed9e,
        }
    }
}

/// Eigenvalues with the largest real parts, each with its residual.
#[derive(Clone, Debug, Default)]
pub struct SpectralEdge {
    pub pairs: Vec<(C64, f64)>,
}

impl SpectralEdge {
    pub fn values(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.0).collect()
    }
}

pub fn spectrum_edge(s: &Superoperator, count: usize, opts: &EdgeOptions) -> Result<SpectralEdge> {
    if count == 0 {
        return Err(Error::InvalidArgument("spectrum_edge needs count >= 1".into()));
    }
    let blocks: Vec<CscMatrix> = match (opts.use_symmetry, s.sector_indices(1), s.sector_indices(-1)) {
        (true, Some(even), Some(odd)) => [even, odd]
            .iter()
            .filter(|idx| !idx.is_empty())
            .map(|idx| s.matrix.principal_submatrix(idx))
            .collect(),
        _ => vec![s.matrix.clone()],
    };
    let nev = count + opts.buffer;
    let mut all: Vec<(C64, f64)> = Vec::new();
    for a in &blocks {
        let kopts = KrylovOptions {
            nev,
            converge: nev,
            block: 2,
            max_dim: 0,
            max_restarts: opts.max_restarts,
            tol: opts.tol,
            seed: opts.seed,
        };
        all.extend(linalg::eigs_near(a, opts.shift, &kopts)?.into_iter().map(|p| (p.value, p.residual)));
    }
    all.sort_by(|x, y| y.0.re.total_cmp(&x.0.re).then(x.0.im.total_cmp(&y.0.im)));
    all.truncate(count);
    Ok(SpectralEdge { pairs: all })
}

/// Relative drift at or below this counts as converged.
pub const DRIFT_THRESHOLD: f64 = 0.01;
/// Floor on the denominator of the relative drift.
pub const DRIFT_FLOOR: f64 = 1e-6;

/// Observable compared between two truncations.
#[derive(Clone, Copy, Debug)]
pub struct Drift {
    pub value: f64,
    pub value_enlarged: f64,
    pub nmax_enlarged: usize,
    /// `|v' - v| / max(|v'|, 1e-6)`.
    pub relative: f64,
}

impl Drift {
    pub fn between(value: f64, value_enlarged: f64, nmax_enlarged: usize) -> Self {
        Drift {
            value,
            value_enlarged,
            nmax_enlarged,
            relative: (value_enlarged - value).abs() / value_enlarged.abs().max(DRIFT_FLOOR),
        }
    }

    pub fn converged(&self) -> bool {
        self.relative <= DRIFT_THRESHOLD
    }
}

/// Evaluate `f` at `Nmax` and `ceil(1.3 Nmax)`.
pub fn truncation_drift<F>(trunc: FockTruncation, f: F) -> Result<Drift>
where
    F: Fn(FockTruncation) -> Result<f64>,
{
    let big = trunc.enlarged();
    Ok(Drift::between(f(trunc)?, f(big)?, big.nmax()))
}
