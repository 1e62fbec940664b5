use dqrm::liouvillian::{expectation, DensityMatrix};
use dqrm::operators::{ladder_ops, on_oscillator, on_qubit, pauli_ops, FockTruncation, SparseOperator};
use dqrm::{Result, C64};

use crate::args::Observable;

/// Observables on qubit⊗Fock (full model) or on Fock alone (reduced model).
pub struct Operators {
    pub n: SparseOperator,
    pub n2: SparseOperator,
    pub n3: SparseOperator,
    pub a: SparseOperator,
    pub aa: SparseOperator,
    pub adag_a: SparseOperator,
    pub adag_adag: SparseOperator,
    pub qubit: Option<(SparseOperator, SparseOperator)>,
}

impl Operators {
    pub fn full(trunc: FockTruncation) -> Result<Self> {
        let lad = ladder_ops(trunc);
        let p = pauli_ops();
        Self::build(
            on_oscillator(&lad.a),
            on_oscillator(&lad.n),
            Some((on_qubit(&p.sz, trunc), on_qubit(&p.sx, trunc))),
        )
    }

    pub fn reduced(trunc: FockTruncation) -> Result<Self> {
        let lad = ladder_ops(trunc);
        Self::build(lad.a, lad.n, None)
    }

    fn build(a: SparseOperator, n: SparseOperator, qubit: Option<(SparseOperator, SparseOperator)>) -> Result<Self> {
        let n2 = n.matmul(&n)?;
        let n3 = n2.matmul(&n)?;
        let aa = a.matmul(&a)?;
        let adag_a = a.adjoint().matmul(&a)?;
        let adag_adag = aa.adjoint();
        Ok(Operators { n, n2, n3, a, aa, adag_a, adag_adag, qubit })
    }

    /// Real observable value; `a` reports `|<a>|`. `None` when the
    /// observable does not exist on this space.
    pub fn value(&self, obs: Observable, rho: &DensityMatrix) -> Result<Option<f64>> {
        let op = match obs {
            Observable::N => &self.n,
            Observable::N2 => &self.n2,
            Observable::N3 => &self.n3,
            Observable::A => return Ok(Some(expectation(rho, &self.a)?.norm())),
            Observable::Sz => match &self.qubit {
                Some((sz, _)) => sz,
                None => return Ok(None),
            },
            Observable::Sx => match &self.qubit {
                Some((_, sx)) => sx,
                None => return Ok(None),
            },
        };
        Ok(Some(expectation(rho, op)?.re))
    }

    /// `(<aa>, <a†a>, <a†a†>)`.
    pub fn second_moments(&self, rho: &DensityMatrix) -> Result<(C64, C64, C64)> {
        let aa = expectation(rho, &self.aa)?;
        let ada = expectation(rho, &self.adag_a)?;
        let adad = expectation(rho, &self.adag_adag)?;
        Ok((aa, ada, adad))
    }
}
