//! Normal-ordered moment algebra and the moment-evolution generator.
//!
//! A [`MomentPolynomial`] is a linear combination of monomials
//! `(a†)^m a^n`, keyed by `(m, n)`. Products with `a`, `a†` and `n = a†a` are
//! reordered with `[a, a†] = 1`. Applying the adjoint soft-mode generator to
//! every monomial up to order `K` gives a block-lower-triangular matrix whose
//! diagonal blocks are similar to the spin blocks of [`crate::hierarchy`].

use std::collections::BTreeMap;
use std::fmt;

use faer::Mat;

use crate::error::{Error, Result};
use crate::hierarchy::{self, BlockBranch, STABILITY_TOL};
use crate::linalg;
use crate::model::{ModelParams, QubitBranch};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Complex combination of normal-ordered monomials `(a†)^m a^n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentPolynomial {
    terms: BTreeMap<(usize, usize), C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    A,
    Adag,
    N,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl MomentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, 0, C64::new(1.0, 0.0))
    }

    pub fn monomial(m: usize, n: usize, coeff: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(m, n, coeff);
        p
    }

    pub fn add_term(&mut self, m: usize, n: usize, coeff: C64) {
        let e = self.terms.entry((m, n)).or_insert(ZERO);
        *e += coeff;
        if *e == ZERO {
            self.terms.remove(&(m, n));
        }
    }

    pub fn coeff(&self, m: usize, n: usize) -> C64 {
        self.terms.get(&(m, n)).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), C64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `m + n` present, `None` for the zero polynomial.
    pub fn order(&self) -> Option<usize> {
        self.terms.keys().map(|(m, n)| m + n).max()
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = Self::zero();
        for (&(m, n), &c) in &self.terms {
            out.add_term(m, n, c * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(m, n), &c) in &other.terms {
            out.add_term(m, n, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    /// Hermitian conjugate: `(a†)^m a^n ↦ (a†)^n a^m` with conjugated coefficient.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (&(m, n), &c) in &self.terms {
            out.add_term(n, m, c.conj());
        }
        out
    }
}

impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(m, n), c)| format!("({c})·a†^{m}a^{n}"))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

fn left_a(p: &MomentPolynomial) -> MomentPolynomial {
    // a (a†)^m a^n = (a†)^m a^{n+1} + m (a†)^{m-1} a^n
    let mut out = MomentPolynomial::zero();
    for ((m, n), c) in p.terms() {
        out.add_term(m, n + 1, c);
        if m > 0 {
            out.add_term(m - 1, n, c * m as f64);
        }
    }
    out
}

fn left_adag(p: &MomentPolynomial) -> MomentPolynomial {
    let mut out = MomentPolynomial::zero();
    for ((m, n), c) in p.terms() {
        out.add_term(m + 1, n, c);
    }
    out
}

fn right_a(p: &MomentPolynomial) -> MomentPolynomial {
    let mut out = MomentPolynomial::zero();
    for ((m, n), c) in p.terms() {
        out.add_term(m, n + 1, c);
    }
    out
}

fn right_adag(p: &MomentPolynomial) -> MomentPolynomial {
    // (a†)^m a^n a† = (a†)^{m+1} a^n + n (a†)^m a^{n-1}
    let mut out = MomentPolynomial::zero();
    for ((m, n), c) in p.terms() {
        out.add_term(m + 1, n, c);
        if n > 0 {
            out.add_term(m, n - 1, c * n as f64);
        }
    }
    out
}

/// Exact product `factor · p` or `p · factor`, reordered to normal form.
pub fn multiply_and_normal_order(p: &MomentPolynomial, factor: Factor, side: Side) -> MomentPolynomial {
    match (factor, side) {
        (Factor::A, Side::Left) => left_a(p),
        (Factor::Adag, Side::Left) => left_adag(p),
        (Factor::N, Side::Left) => left_adag(&left_a(p)),
        (Factor::A, Side::Right) => right_a(p),
        (Factor::Adag, Side::Right) => right_adag(p),
        (Factor::N, Side::Right) => right_a(&right_adag(p)),
    }
}

fn apply_word(p: &MomentPolynomial, word: &[Factor], side: Side) -> MomentPolynomial {
    // Left: word[0] word[1] ... · p; Right: p · word[0] word[1] ...
    match side {
        Side::Left => word
            .iter()
            .rev()
            .fold(p.clone(), |acc, &f| multiply_and_normal_order(&acc, f, Side::Left)),
        Side::Right => word
            .iter()
            .fold(p.clone(), |acc, &f| multiply_and_normal_order(&acc, f, Side::Right)),
    }
}

/// Adjoint dissipator `L† A L - ½ {L†L, A}` (unit rate), exact in the
/// normal-ordered algebra.
pub fn adjoint_dissipator(p: &MomentPolynomial, l: Factor) -> MomentPolynomial {
    let (ld, ldl): (Factor, Vec<Factor>) = match l {
        Factor::A => (Factor::Adag, vec![Factor::N]),
        Factor::N => (Factor::N, vec![Factor::N, Factor::N]),
        Factor::Adag => (Factor::A, vec![Factor::A, Factor::Adag]),
    };
    let jump = multiply_and_normal_order(&multiply_and_normal_order(p, ld, Side::Left), l, Side::Right);
    let anti = apply_word(p, &ldl, Side::Left).add(&apply_word(p, &ldl, Side::Right));
    jump.sub(&anti.scaled(C64::new(0.5, 0.0)))
}

/// Adjoint soft-mode generator applied to `p`:
/// `i[H, A] + κ(1-γ) D†[a](A) + κγ D†[n](A)` with
/// `H = ∓(ω0 g²/4)(a + a†)² + ω0 n` (minus for the down branch).
pub fn adjoint_action(p: &MomentPolynomial, branch: QubitBranch, params: &ModelParams) -> MomentPolynomial {
    let mut out = MomentPolynomial::zero();
    for ((m, n), c) in p.terms() {
        out = out.add(&adjoint_action_monomial(m, n, branch, params).scaled(c));
    }
    out
}

fn adjoint_action_monomial(m: usize, n: usize, branch: QubitBranch, params: &ModelParams) -> MomentPolynomial {
    // every intermediate coefficient is an exact integer until the rates are applied
    let unit = MomentPolynomial::monomial(m, n, C64::new(1.0, 0.0));
    let ModelParams { omega0, kappa, gamma, g, .. } = *params;
    // (a + a†)² = a² + a†² + 2 a†a + 1; the constant drops out of the commutator
    let sq = -branch.coupling_sign() * omega0 * g * g / 4.0;
    let h_terms: [(f64, &[Factor]); 3] = [
        (sq, &[Factor::A, Factor::A]),
        (sq, &[Factor::Adag, Factor::Adag]),
        (2.0 * sq + omega0, &[Factor::N]),
    ];
    let i = C64::new(0.0, 1.0);
    let mut out = MomentPolynomial::zero();
    for (c, word) in h_terms {
        if c == 0.0 {
            continue;
        }
        let comm = apply_word(&unit, word, Side::Left).sub(&apply_word(&unit, word, Side::Right));
        out = out.add(&comm.scaled(i * c));
    }
    let damp = params.damping_rate();
    if damp != 0.0 {
        out = out.add(&adjoint_dissipator(&unit, Factor::A).scaled(C64::new(damp, 0.0)));
    }
    let deph = kappa * gamma;
    if deph != 0.0 {
        out = out.add(&adjoint_dissipator(&unit, Factor::N).scaled(C64::new(deph, 0.0)));
    }
    out
}

/// Monomials `(m, n)` with `m + n <= k_max`, by order and then by `m`.
pub fn monomial_basis(k_max: usize) -> Vec<(usize, usize)> {
    (0..=k_max)
        .flat_map(|k| (0..=k).map(move |m| (m, k - m)))
        .collect()
}

/// Matrix `G` with `d/dt <b_j> = Σ_i G[j, i] <b_i>` on [`monomial_basis`].
#[derive(Clone, Debug)]
pub struct MomentGenerator {
    pub k_max: usize,
    pub basis: Vec<(usize, usize)>,
    pub matrix: Mat<C64>,
}

impl MomentGenerator {
    /// Index of the first monomial of order `k`.
    pub fn offset(k: usize) -> usize {
        k * (k + 1) / 2
    }

    pub fn index_of(&self, m: usize, n: usize) -> usize {
        Self::offset(m + n) + m
    }

    /// Block coupling order `row_order` to order `col_order`.
    pub fn block(&self, row_order: usize, col_order: usize) -> Mat<C64> {
        let (r0, c0) = (Self::offset(row_order), Self::offset(col_order));
        Mat::from_fn(row_order + 1, col_order + 1, |i, j| self.matrix[(r0 + i, c0 + j)])
    }

    /// Largest entry magnitude outside the allowed `k → k, k-2, ...` pattern.
    pub fn triangularity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, &(mr, nr)) in self.basis.iter().enumerate() {
            for (c, &(mc, nc)) in self.basis.iter().enumerate() {
                let (kr, kc) = (mr + nr, mc + nc);
                if kc > kr || (kr - kc) % 2 == 1 {
                    worst = worst.max(self.matrix[(r, c)].norm());
                }
            }
        }
        worst
    }
}

pub fn moment_generator(k_max: usize, branch: QubitBranch, params: &ModelParams) -> Result<MomentGenerator> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("moment generator needs K >= 1".into()));
    }
    let basis = monomial_basis(k_max);
    let dim = basis.len();
    let mut matrix = Mat::<C64>::zeros(dim, dim);
    for (row, &(m, n)) in basis.iter().enumerate() {
        let img = adjoint_action(&MomentPolynomial::monomial(m, n, C64::new(1.0, 0.0)), branch, params);
        for ((mm, nn), c) in img.terms() {
            let col = MomentGenerator::offset(mm + nn) + mm;
            matrix[(row, col)] = c;
        }
    }
    Ok(MomentGenerator { k_max, basis, matrix })
}

/// Steady-state `<(a†)^m a^n>` for all `m + n <= K`.
///
/// Odd orders have no source term and vanish identically; even orders are
/// solved bottom-up after checking that their spin block is stable.
pub fn steady_moments(k_max: usize, branch: QubitBranch, params: &ModelParams) -> Result<BTreeMap<(usize, usize), C64>> {
    for k in (2..=k_max).step_by(2) {
        let v = hierarchy::stability(k, BlockBranch::from(branch), params, STABILITY_TOL)?;
        if !v.stable {
            return Err(Error::UnstableOrder { order: k, abscissa: v.abscissa });
        }
    }
    let gen = moment_generator(k_max, branch, params)?;
    let mut x = vec![ZERO; gen.basis.len()];
    x[0] = C64::new(1.0, 0.0);
    for k in 1..=k_max {
        let r0 = MomentGenerator::offset(k);
        let rhs: Vec<C64> = (0..=k)
            .map(|i| -(0..r0).map(|c| gen.matrix[(r0 + i, c)] * x[c]).sum::<C64>())
            .collect();
        if rhs.iter().all(|v| *v == ZERO) {
            continue;
        }
        let sol = linalg::solve_dense(&gen.block(k, k), &rhs);
        x[r0..r0 + k + 1].copy_from_slice(&sol);
    }
    Ok(gen.basis.iter().copied().zip(x).collect())
}
