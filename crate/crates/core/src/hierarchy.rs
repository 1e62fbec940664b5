//! Non-Hermitian spin-k/2 blocks governing the k-th order moments.
//!
//! In the soft-mode limit the equations of motion for all normal-ordered
//! moments of order `k` close among themselves up to lower-order sources, and
//! their generator is similar to
//!
//! ```text
//! H(k) = -κk(1-γ)/2 - G ω0 Sx + (G - 2) i ω0 Sy - 2κγ Sy²
//! ```
//!
//! on the spin-k/2 representation, with `G = g²` (down branch), `-g²` (up
//! branch) or `0` (the coherent, zero-η block).

use std::fmt;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Eta, ModelParams, QubitBranch};
use crate::C64;

/// Spin operators for spin `S = k/2` in the `Sz` eigenbasis, `Sz = diag(S, ..., -S)`.
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub sx: Mat<C64>,
    pub sy: Mat<C64>,
    pub sz: Mat<C64>,
}

pub fn spin_matrices(k: usize) -> SpinMatrices {
    let dim = k + 1;
    let s = k as f64 / 2.0;
    let m = |i: usize| s - i as f64;
    // <m+1|S+|m> at (i-1, i)
    let up = |i: usize| (s * (s + 1.0) - m(i) * (m(i) + 1.0)).max(0.0).sqrt();
    let mut sx = Mat::<C64>::zeros(dim, dim);
    let mut sy = Mat::<C64>::zeros(dim, dim);
    let mut sz = Mat::<C64>::zeros(dim, dim);
    for i in 0..dim {
        sz[(i, i)] = C64::new(m(i), 0.0);
        if i > 0 {
            let c = up(i) / 2.0;
            sx[(i - 1, i)] = C64::new(c, 0.0);
            sx[(i, i - 1)] = C64::new(c, 0.0);
            sy[(i - 1, i)] = C64::new(0.0, -c);
            sy[(i, i - 1)] = C64::new(0.0, c);
        }
    }
    SpinMatrices { sx, sy, sz }
}

/// Which block family a spin Hamiltonian belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockBranch {
    Down,
    Up,
    /// Zero-η limit: the coupling drops out.
    Coherent,
}

impl BlockBranch {
    /// The factor `G` multiplying `ω0 Sx` and entering `(G - 2) i ω0 Sy`.
    pub fn coupling(self, g: f64) -> f64 {
        match self {
            BlockBranch::Down => g * g,
            BlockBranch::Up => -g * g,
            BlockBranch::Coherent => 0.0,
        }
    }
}

impl From<QubitBranch> for BlockBranch {
    fn from(b: QubitBranch) -> Self {
        match b {
            QubitBranch::Down => BlockBranch::Down,
            QubitBranch::Up => BlockBranch::Up,
        }
    }
}

impl fmt::Display for BlockBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockBranch::Down => "down",
            BlockBranch::Up => "up",
            BlockBranch::Coherent => "coherent",
        })
    }
}

impl std::str::FromStr for BlockBranch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "down" => Ok(BlockBranch::Down),
            "up" => Ok(BlockBranch::Up),
            "coherent" => Ok(BlockBranch::Coherent),
            other => Err(Error::InvalidArgument(format!("unknown block branch {other:?}"))),
        }
    }
}

/// Dense `(k+1) x (k+1)` spin-block Hamiltonian.
#[derive(Clone, Debug)]
pub struct SpinBlock {
    pub k: usize,
    pub branch: BlockBranch,
    pub params: ModelParams,
    pub matrix: Mat<C64>,
}

impl SpinBlock {
    /// Eigenvalues after diagonal balancing.
    ///
    /// The tridiagonal part couples neighbours by `-ω0` above and `(1 - G) ω0`
    /// below the diagonal, so `diag(c^i)` with `c = sqrt|1 - G|` makes it
    /// symmetric in magnitude; the Osborne iteration then absorbs the `Sy²` term.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::eigenvalues(&self.balanced())
    }

    /// Eigenvalues polished by two-sided inverse iteration, for reporting
    /// spectra. Costs `O(k^4)`; stability verdicts use [`Self::eigenvalues`].
    pub fn refined_eigenvalues(&self) -> Result<Vec<C64>> {
        let m = self.balanced();
        let ev = linalg::eigenvalues(&m)?;
        let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
        Ok(ev.into_iter().map(|z| linalg::refine_eigenvalue(&m, z, 1e-9 * scale)).collect())
    }

    fn balanced(&self) -> Mat<C64> {
        let mut m = self.matrix.clone();
        let c = (1.0 - self.branch.coupling(self.params.g)).abs().sqrt();
        let span = c.ln().abs() * self.k as f64;
        if c > 0.0 && span < 600.0 {
            let d: Vec<f64> = (0..=self.k).map(|i| c.powf(i as f64 - self.k as f64 / 2.0)).collect();
            linalg::scale_similarity(&mut m, &d);
        }
        linalg::balance(&mut m);
        m
    }

    /// Largest real part of the spectrum.
    pub fn abscissa(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn trace(&self) -> C64 {
        (0..=self.k).map(|i| self.matrix[(i, i)]).sum()
    }
}

pub fn effective_hamiltonian(k: usize, branch: BlockBranch, params: &ModelParams) -> Result<SpinBlock> {
    if k == 0 {
        return Err(Error::InvalidArgument("spin block order k must be >= 1".into()));
    }
    let ModelParams { omega0, kappa, gamma, g, .. } = *params;
    let big_g = branch.coupling(g);
    let s = spin_matrices(k);
    let sy2 = &s.sy * &s.sy;
    let shift = -kappa * k as f64 * (1.0 - gamma) / 2.0;
    let cx = C64::new(-big_g * omega0, 0.0);
    let cy = C64::new(0.0, (big_g - 2.0) * omega0);
    let cyy = C64::new(-2.0 * kappa * gamma, 0.0);
    let matrix = Mat::from_fn(k + 1, k + 1, |i, j| {
        let diag = if i == j { C64::new(shift, 0.0) } else { C64::new(0.0, 0.0) };
        diag + cx * s.sx[(i, j)] + cy * s.sy[(i, j)] + cyy * sy2[(i, j)]
    });
    Ok(SpinBlock { k, branch, params: *params, matrix })
}

/// Default stability margin on the spectral abscissa.
pub const STABILITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub k: usize,
    pub branch: BlockBranch,
    pub abscissa: f64,
    /// `abscissa < -tol`.
    pub stable: bool,
    /// `|abscissa| <= tol`; counted as unstable.
    pub marginal: bool,
}

pub fn stability(k: usize, branch: BlockBranch, params: &ModelParams, tol: f64) -> Result<StabilityVerdict> {
    let abscissa = effective_hamiltonian(k, branch, params)?.abscissa()?;
    Ok(StabilityVerdict {
        k,
        branch,
        abscissa,
        stable: abscissa < -tol,
        marginal: abscissa.abs() <= tol,
    })
}

/// A coupling strength that may be unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    Finite(f64),
    Infinite,
}

impl Coupling {
    pub fn value(self) -> f64 {
        match self {
            Coupling::Finite(g) => g,
            Coupling::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupling::Finite(g) => write!(f, "{g}"),
            Coupling::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// First-order (mean-field) boundary `sqrt(1 + r²/4)`.
    Gc1,
    /// Second-order boundary of the down branch.
    Gc2Down,
    /// Second-order boundary of the up branch.
    Gc2Up,
    /// Limit of the cascade for `k → ∞`, `sqrt(r (1 - γ))`.
    GcInfinity,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParam { field: "gamma", range: "[0,1]", value: gamma });
    }
    Ok(())
}

/// Closed-form boundaries in units of `ω0`, with `r = κ/ω0`.
pub fn analytic_boundary(kind: BoundaryKind, gamma: f64, r: f64) -> Result<Coupling> {
    check_gamma(gamma)?;
    let gc2 = |sign: f64| {
        let root = (1.0 + gamma + gamma * r * r * (1.0 + gamma).powi(2) / 2.0).sqrt();
        let s = (1.0 - gamma).sqrt();
        ((s / gamma) * (root + sign * s)).max(0.0).sqrt()
    };
    Ok(match kind {
        BoundaryKind::Gc1 => Coupling::Finite((1.0 + r * r / 4.0).sqrt()),
        BoundaryKind::GcInfinity => Coupling::Finite((r * (1.0 - gamma)).sqrt()),
        BoundaryKind::Gc2Down if gamma == 0.0 => Coupling::Finite((1.0 + r * r / 4.0).sqrt()),
        BoundaryKind::Gc2Down => Coupling::Finite(gc2(-1.0)),
        BoundaryKind::Gc2Up if gamma == 0.0 => Coupling::Infinite,
        BoundaryKind::Gc2Up => Coupling::Finite(gc2(1.0)),
    })
}

/// Coefficients of `det(ℓ - H₂) = ℓ³ + a2 ℓ² + a1 ℓ + a0` (units `ω0 = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RouthHurwitz {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub stable: bool,
}

pub fn routh_hurwitz_k2(branch: QubitBranch, gamma: f64, g: f64, r: f64) -> Result<RouthHurwitz> {
    check_gamma(gamma)?;
    let g2 = g * g;
    let a2 = (3.0 + gamma) * r;
    let (a1, a0) = match branch {
        QubitBranch::Down => (
            (3.0 - gamma) * (1.0 + gamma) * r * r - 4.0 * (g2 - 1.0),
            (1.0 - gamma) * (1.0 + gamma).powi(2) * r.powi(3)
                - 4.0 * (gamma * g2 * g2 / 2.0 + (1.0 - gamma) * (g2 - 1.0)) * r,
        ),
        QubitBranch::Up => (
            (3.0 - gamma) * (1.0 + gamma) * r * r + 4.0 * (g2 + 1.0),
            (1.0 - gamma) * (1.0 + gamma).powi(2) * r.powi(3)
                - 4.0 * (gamma * g2 * g2 / 2.0 - (1.0 - gamma) * (g2 + 1.0)) * r,
        ),
    };
    let stable = a0 > 0.0 && a1 > 0.0 && a2 > 0.0 && a2 * a1 - a0 > 0.0;
    Ok(RouthHurwitz { a0, a1, a2, stable })
}

/// Leading-order (in γ) eigenvalue of `H(k)` with the largest real part, for `g > 1`.
pub fn perturbative_abscissa(k: usize, gamma: f64, g: f64, r: f64) -> Result<C64> {
    let g2 = g * g;
    if g2 <= 1.0 {
        return Err(Error::Domain(format!("perturbative eigenvalue needs g > 1, got {g}")));
    }
    let kf = k as f64;
    let val = kf * (-r / 2.0 + (g2 - 1.0).sqrt() + r * gamma * (kf - 1.0) * (g2 - 2.0).powi(2) / (8.0 * (g2 - 1.0)));
    Ok(C64::new(val, 0.0))
}

/// Spectrum of the coherent block, listed for `My = -k/2, ..., k/2`.
pub fn zero_eta_spectrum(k: usize, gamma: f64, kappa: f64, omega0: f64) -> Vec<C64> {
    let kf = k as f64;
    (0..=k)
        .map(|j| {
            let my = j as f64 - kf / 2.0;
            C64::new(-kappa * kf * (1.0 - gamma) / 2.0 - 2.0 * kappa * gamma * my * my, -2.0 * omega0 * my)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl std::str::FromStr for Parity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(Error::InvalidArgument(format!("unknown parity {other:?}"))),
        }
    }
}

/// Smallest unstable order of the given parity up to `k_max`.
pub fn min_unstable_k(params: &ModelParams, k_max: usize, parity: Parity, branch: BlockBranch) -> Result<Option<usize>> {
    let first = match parity {
        Parity::Even => 2,
        Parity::Odd => 1,
    };
    for k in (first..=k_max).step_by(2) {
        if !stability(k, branch, params, STABILITY_TOL)?.stable {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Options for [`critical_coupling`].
#[derive(Clone, Copy, Debug)]
pub struct BisectOptions {
    pub tol_g: f64,
    /// Couplings above this are reported as an infinite boundary.
    pub g_max: f64,
    /// Interior samples used for the monotonicity audit.
    pub audit_points: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions { tol_g: 1e-8, g_max: 100.0, audit_points: 8 }
    }
}

/// Coupling at which `H(k)` turns unstable, by bisection on the stability verdict.
pub fn critical_coupling(k: usize, branch: BlockBranch, gamma: f64, r: f64, opts: &BisectOptions) -> Result<Coupling> {
    check_gamma(gamma)?;
    let params = |g: f64| ModelParams::new(1.0, r, gamma, g, Eta::Infinite);
    let stable = |g: f64| -> Result<bool> { Ok(stability(k, branch, &params(g)?, STABILITY_TOL)?.stable) };

    if !stable(0.0)? {
        return Ok(Coupling::Finite(0.0));
    }
    let mut lo = 0.0;
    if let Coupling::Finite(ginf) = analytic_boundary(BoundaryKind::GcInfinity, gamma, r)? {
        let guess = ginf * (1.0 - 1e-6);
        if guess > 0.0 && stable(guess)? {
            lo = guess;
        }
    }
    let gc1 = analytic_boundary(BoundaryKind::Gc1, gamma, r)?.value();
    let mut hi = gc1.max(lo) * (1.0 + 1e-6);
    while stable(hi)? {
        lo = hi;
        hi *= 1.25;
        if hi > opts.g_max {
            return Ok(if stable(opts.g_max)? { Coupling::Infinite } else { bisect(&stable, lo, opts.g_max, k, opts)? });
        }
    }
    bisect(&stable, lo, hi, k, opts)
}

fn bisect<F>(stable: &F, mut lo: f64, mut hi: f64, k: usize, opts: &BisectOptions) -> Result<Coupling>
where
    F: Fn(f64) -> Result<bool>,
{
    let (lo0, hi0) = (lo, hi);
    while hi - lo > opts.tol_g {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let margin = 10.0 * opts.tol_g;
    let n = opts.audit_points.max(1);
    for i in 1..=n {
        let t = i as f64 / (n + 1) as f64;
        let below = lo0 + t * (root - margin - lo0);
        let above = root + margin + t * (hi0 - root - margin);
        if (below > lo0 && !stable(below)?) || (above < hi0 && stable(above)?) {
            return Err(Error::NonMonotone { k, lo: lo0, hi: hi0 });
        }
    }
    Ok(Coupling::Finite(root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(kappa: f64, gamma: f64, g: f64) -> ModelParams {
        ModelParams::new(1.0, kappa, gamma, g, Eta::Infinite).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Largest distance from an element of `a` to its nearest unused partner in `b`.
    fn spectral_distance(a: &[C64], b: &[C64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let mut used = vec![false; b.len()];
        let mut worst = 0.0f64;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    fn max_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
        (a - b).norm_max()
    }

    #[test]
    fn spin_half_and_one() {
        let s = spin_matrices(1);
        assert_eq!(s.sx[(0, 1)], c(0.5, 0.0));
        assert_eq!(s.sy[(0, 1)], c(0.0, -0.5));
        assert_eq!(s.sz[(1, 1)], c(-0.5, 0.0));
        let s = spin_matrices(2);
        let r = 0.5f64.sqrt();
        assert!((s.sx[(0, 1)] - c(r, 0.0)).norm() < 1e-15);
        assert!((s.sx[(1, 2)] - c(r, 0.0)).norm() < 1e-15);
        assert_eq!(s.sz[(0, 0)], c(1.0, 0.0));
        assert_eq!(s.sz[(2, 2)], c(-1.0, 0.0));
    }

    #[test]
    fn spin_commutators() {
        for k in [1, 2, 7, 40, 400] {
            let s = spin_matrices(k);
            let comm = &s.sx * &s.sy - &s.sy * &s.sx;
            let isz = &s.sz * faer::Scale(c(0.0, 1.0));
            assert!(max_diff(&comm, &isz) <= 1e-13 * (k as f64).max(1.0), "k={k}");
        }
    }

    #[test]
    fn k1_block_hand_evaluated() {
        let h = effective_hamiltonian(1, BlockBranch::Down, &p(1.0, 0.5, 1.0)).unwrap();
        let want = [[c(-0.5, 0.0), c(-1.0, 0.0)], [c(0.0, 0.0), c(-0.5, 0.0)]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h.matrix[(i, j)] - want[i][j]).norm() < 1e-15);
            }
        }
        for z in h.eigenvalues().unwrap() {
            assert!((z - c(-0.5, 0.0)).norm() < 1e-7);
        }
    }

    #[test]
    fn k1_spectrum_closed_form() {
        for g in [0.0, 0.3, 0.9, 1.2, 2.0] {
            for gamma in [0.0, 0.5, 1.0] {
                let ev = effective_hamiltonian(1, BlockBranch::Down, &p(1.0, gamma, g)).unwrap().eigenvalues().unwrap();
                let root = C64::new(1.0 - g * g, 0.0).sqrt();
                let want = vec![c(-0.5, 0.0) + c(0.0, 1.0) * root, c(-0.5, 0.0) - c(0.0, 1.0) * root];
                // g = 1 is a Jordan block: eigenvalues only to sqrt(eps)
                let tol = if g == 1.0 { 1e-7 } else { 1e-10 };
                assert!(spectral_distance(&ev, &want) < tol);
            }
        }
    }

    #[test]
    fn k2_block_matches_printed_three_by_three() {
        for (gamma, g, kappa) in [(0.3, 1.05, 1.0), (0.7, 0.4, 2.0), (0.0, 1.3, 0.5)] {
            let g2 = g * g;
            let i = c(0.0, 1.0);
            let h2 = Mat::<C64>::from_fn(3, 3, |r, col| {
                let v = match (r, col) {
                    (0, 0) => i * (1.0 + gamma) * kappa - 2.0 + g2,
                    (0, 1) => c(g2, 0.0),
                    (1, 0) => c(-g2 / 2.0, 0.0),
                    (1, 1) => i * (1.0 - gamma) * kappa,
                    (1, 2) => c(g2 / 2.0, 0.0),
                    (2, 1) => c(-g2, 0.0),
                    (2, 2) => i * (1.0 + gamma) * kappa + 2.0 - g2,
                    _ => c(0.0, 0.0),
                };
                i * v
            });
            let want = linalg::eigenvalues(&h2).unwrap();
            let got = effective_hamiltonian(2, BlockBranch::Down, &p(kappa, gamma, g)).unwrap().eigenvalues().unwrap();
            assert!(spectral_distance(&got, &want) < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn block_trace() {
        for k in [1, 2, 5, 12] {
            let pp = p(1.3, 0.4, 0.8);
            let h = effective_hamiltonian(k, BlockBranch::Down, &pp).unwrap();
            let s = spin_matrices(k);
            let sy2 = &s.sy * &s.sy;
            let tr_sy2: C64 = (0..=k).map(|i| sy2[(i, i)]).sum();
            let want = (k as f64 + 1.0) * (-1.3 * k as f64 * 0.6 / 2.0) - 2.0 * 1.3 * 0.4 * tr_sy2;
            assert!((h.trace() - want).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_limit_spectrum() {
        // at γ = 0 the spectrum is -κk/2 + 2m sqrt(g² - 1) ω0
        for k in [4, 40, 200] {
            let g: f64 = 1.3;
            let ev = effective_hamiltonian(k, BlockBranch::Down, &p(1.0, 0.0, g)).unwrap().eigenvalues().unwrap();
            let w = (g * g - 1.0).sqrt();
            let want: Vec<C64> = (0..=k).map(|j| c(-(k as f64) / 2.0 + (2.0 * j as f64 - k as f64) * w, 0.0)).collect();
            let d = spectral_distance(&ev, &want);
            assert!(d < 1e-10 * k as f64, "k={k}: {d}");
        }
    }

    #[test]
    fn stability_examples() {
        let v = stability(1, BlockBranch::Down, &p(1.0, 0.0, 1.2), STABILITY_TOL).unwrap();
        assert!((v.abscissa - (-0.5 + 0.44f64.sqrt())).abs() < 1e-10);
        assert!(!v.stable);
        let v = stability(1, BlockBranch::Down, &p(1.0, 0.0, 1.0), STABILITY_TOL).unwrap();
        assert!((v.abscissa + 0.5).abs() < 1e-7);
        assert!(v.stable);
        for g in [0.0, 1.0, 3.0, 10.0] {
            let v = stability(1, BlockBranch::Up, &p(1.0, 0.3, g), STABILITY_TOL).unwrap();
            assert!((v.abscissa + 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_boundaries() {
        let b = |k, gamma, r| analytic_boundary(k, gamma, r).unwrap().value();
        assert!((b(BoundaryKind::GcInfinity, 0.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((b(BoundaryKind::GcInfinity, 0.75, 1.0) - 0.5).abs() < 1e-15);
        assert!((b(BoundaryKind::Gc2Down, 0.3, 1.0) - 1.068_969_452_8).abs() < 1e-7);
        assert!((b(BoundaryKind::Gc2Down, 1e-9, 1.0) - 1.25f64.sqrt()).abs() < 1e-7);
        assert_eq!(b(BoundaryKind::Gc2Down, 0.0, 1.0), 1.25f64.sqrt());
        assert_eq!(analytic_boundary(BoundaryKind::Gc2Up, 0.0, 1.0).unwrap(), Coupling::Infinite);
        assert!(b(BoundaryKind::Gc2Up, 1e-6, 1.0) > 1e2);
        assert!((b(BoundaryKind::Gc2Up, 0.999, 1.0) - 0.253_515_882_04).abs() < 1e-9);
        assert!(b(BoundaryKind::Gc2Up, 0.9999, 1.0) < 0.15);
        assert!((b(BoundaryKind::Gc2Up, 1.0, 1.0) - b(BoundaryKind::Gc2Down, 1.0, 1.0)).abs() < 1e-15);
        assert!(analytic_boundary(BoundaryKind::Gc1, 1.2, 1.0).is_err());
    }

    #[test]
    fn routh_hurwitz_example_and_polynomial() {
        let rh = routh_hurwitz_k2(QubitBranch::Down, 0.5, 1.0, 1.0).unwrap();
        assert!((rh.a2 - 3.5).abs() < 1e-14);
        assert!((rh.a1 - 3.75).abs() < 1e-14);
        assert!((rh.a0 - 0.125).abs() < 1e-14);
        assert!(rh.stable);
        // coefficients agree with the characteristic polynomial of the block
        for branch in [QubitBranch::Down, QubitBranch::Up] {
            for (gamma, g, r) in [(0.2, 0.7, 1.0), (0.6, 1.4, 0.5), (0.9, 0.3, 2.0)] {
                let rh = routh_hurwitz_k2(branch, gamma, g, r).unwrap();
                let ev = effective_hamiltonian(2, branch.into(), &p(r, gamma, g)).unwrap().eigenvalues().unwrap();
                let e1: C64 = ev.iter().sum();
                let e2 = ev[0] * ev[1] + ev[0] * ev[2] + ev[1] * ev[2];
                let e3 = ev[0] * ev[1] * ev[2];
                assert!((c(rh.a2, 0.0) + e1).norm() < 1e-10);
                assert!((c(rh.a1, 0.0) - e2).norm() < 1e-10);
                assert!((c(rh.a0, 0.0) + e3).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn a0_vanishes_on_gc2() {
        for gamma in [0.1, 0.5, 0.9] {
            let g = analytic_boundary(BoundaryKind::Gc2Down, gamma, 1.0).unwrap().value();
            assert!(routh_hurwitz_k2(QubitBranch::Down, gamma, g, 1.0).unwrap().a0.abs() < 1e-12);
            let gu = analytic_boundary(BoundaryKind::Gc2Up, gamma, 1.0).unwrap().value();
            assert!(routh_hurwitz_k2(QubitBranch::Up, gamma, gu, 1.0).unwrap().a0.abs() < 1e-10);
        }
    }

    #[test]
    fn critical_coupling_examples() {
        let o = BisectOptions::default();
        let g2 = critical_coupling(2, BlockBranch::Down, 0.3, 1.0, &o).unwrap().value();
        assert!((g2 - 1.068_969_452_8).abs() < 1e-7, "{g2}");
        for gamma in [0.0, 0.4, 0.9] {
            let g1 = critical_coupling(1, BlockBranch::Down, gamma, 1.0, &o).unwrap().value();
            assert!((g1 - 1.25f64.sqrt()).abs() < 1e-7);
        }
        assert_eq!(critical_coupling(1, BlockBranch::Up, 0.5, 1.0, &o).unwrap(), Coupling::Infinite);
        let up = critical_coupling(2, BlockBranch::Up, 0.999, 1.0, &o).unwrap().value();
        assert!((up - 0.253_515_882_04).abs() < 1e-7, "{up}");
    }

    #[test]
    fn perturbative_examples() {
        let v = perturbative_abscissa(1, 0.37, 2f64.sqrt(), 1.0).unwrap();
        assert!((v.re - 0.5).abs() < 1e-14);
        let v = perturbative_abscissa(2, 0.1, 3f64.sqrt(), 1.0).unwrap();
        assert!((v.re - 1.8409).abs() < 1e-4);
        let a = perturbative_abscissa(5, 0.0, 2f64.sqrt(), 1.0).unwrap();
        let b = perturbative_abscissa(5, 0.8, 2f64.sqrt(), 1.0).unwrap();
        assert!((a - b).norm() < 1e-12);
        assert!(matches!(perturbative_abscissa(2, 0.1, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_eta_examples() {
        let s = zero_eta_spectrum(1, 0.4, 1.0, 1.0);
        assert!((s[0] - c(-0.5, 1.0)).norm() < 1e-15);
        assert!((s[1] - c(-0.5, -1.0)).norm() < 1e-15);
        assert!((zero_eta_spectrum(2, 0.0, 1.0, 1.0)[1] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fig_two_classifications() {
        let o = min_unstable_k(&p(1.0, 0.1, 1.05), 6, Parity::Even, BlockBranch::Down).unwrap();
        assert_eq!(o, None);
        let o = min_unstable_k(&p(1.0, 0.3, 1.05), 6, Parity::Even, BlockBranch::Down).unwrap();
        assert_eq!(o, Some(4));
        let o = min_unstable_k(&p(1.0, 0.3, 1.05), 6, Parity::Odd, BlockBranch::Down).unwrap();
        assert_eq!(o, Some(3));
    }

    #[test]
    fn refined_zero_eta_spectrum_to_1e12() {
        for gamma in [0.3, 0.95] {
            for k in [10, 31, 50] {
                let b = effective_hamiltonian(k, BlockBranch::Coherent, &p(1.0, gamma, 0.0)).unwrap();
                let want = zero_eta_spectrum(k, gamma, 1.0, 1.0);
                assert!(spectral_distance(&b.refined_eigenvalues().unwrap(), &want) < 1e-12, "gamma={gamma} k={k}");
            }
        }
        // non-normal block: polishing stays on the same eigenvalues
        let b = effective_hamiltonian(20, BlockBranch::Down, &p(1.0, 0.5, 1.2)).unwrap();
        assert!(spectral_distance(&b.refined_eigenvalues().unwrap(), &b.eigenvalues().unwrap()) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn k1_is_gamma_independent(g in 0.0f64..3.0, r in 0.1f64..3.0) {
            let a = effective_hamiltonian(1, BlockBranch::Down, &p(r, 0.0, g)).unwrap();
            for gamma in [0.5, 1.0] {
                let b = effective_hamiltonian(1, BlockBranch::Down, &p(r, gamma, g)).unwrap();
                // γ cancels in the matrix itself
                prop_assert_eq!(a.matrix.clone(), b.matrix.clone());
            }
        }

        #[test]
        fn coherent_block_matches_closed_form(k in 1usize..30, gamma in 0.0f64..1.0, r in 0.1f64..3.0) {
            let pp = p(r, gamma, 0.7);
            let got = effective_hamiltonian(k, BlockBranch::Coherent, &pp).unwrap().eigenvalues().unwrap();
            let want = zero_eta_spectrum(k, gamma, r, 1.0);
            prop_assert!(spectral_distance(&got, &want) < 1e-10);
        }

        #[test]
        fn below_classical_bound_is_stable(gamma in 0.0f64..0.99, frac in 0.0f64..0.98) {
            let ginf = analytic_boundary(BoundaryKind::GcInfinity, gamma, 1.0).unwrap().value();
            let pp = p(1.0, gamma, frac * ginf);
            prop_assert_eq!(min_unstable_k(&pp, 12, Parity::Even, BlockBranch::Down).unwrap(), None);
            prop_assert_eq!(min_unstable_k(&pp, 11, Parity::Odd, BlockBranch::Down).unwrap(), None);
        }
    }
}
