//! Model parameters.
//!
//! All rates are in the same (arbitrary) units as `omega0`; the CLI fixes
//! `omega0 = 1` so every reported rate is in units of the oscillator frequency.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Frequency ratio between the qubit splitting and the oscillator frequency.
///
/// `Infinite` selects the soft-mode (reduced) description and is kept as its
/// own state rather than an `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eta {
    Finite(f64),
    Infinite,
}

impl Eta {
    pub fn finite(self) -> Option<f64> {
        match self {
            Eta::Finite(x) => Some(x),
            Eta::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Eta::Infinite)
    }
}

impl fmt::Display for Eta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eta::Finite(x) => write!(f, "{x}"),
            Eta::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Eta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinite") {
            return Ok(Eta::Infinite);
        }
        let x: f64 = t
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse eta from {s:?}")))?;
        if x.is_infinite() && x > 0.0 {
            return Ok(Eta::Infinite);
        }
        Ok(Eta::Finite(x))
    }
}

/// Which qubit eigenstate the soft-mode oscillator is conditioned on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum QubitBranch {
    #[default]
    Down,
    Up,
}

impl QubitBranch {
    /// Sign multiplying `g^2` in the reduced Hamiltonian relative to the down branch.
    pub fn coupling_sign(self) -> f64 {
        match self {
            QubitBranch::Down => 1.0,
            QubitBranch::Up => -1.0,
        }
    }
}

impl fmt::Display for QubitBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QubitBranch::Down => "down",
            QubitBranch::Up => "up",
        })
    }
}

impl FromStr for QubitBranch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "down" => Ok(QubitBranch::Down),
            "up" => Ok(QubitBranch::Up),
            other => Err(Error::InvalidArgument(format!("unknown branch {other:?}"))),
        }
    }
}

/// Physical parameters of the dissipative Rabi model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Oscillator frequency, > 0.
    pub omega0: f64,
    /// Total dissipation rate, >= 0.
    pub kappa: f64,
    /// Non-Gaussianity: 0 is pure damping, 1 pure dephasing.
    pub gamma: f64,
    /// Dimensionless coupling, >= 0.
    pub g: f64,
    pub eta: Eta,
}

impl ModelParams {
    pub fn new(omega0: f64, kappa: f64, gamma: f64, g: f64, eta: Eta) -> Result<Self> {
        let p = ModelParams {
            omega0,
            kappa,
            gamma,
            g,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, field: &'static str, range: &'static str, value: f64) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParam { field, range, value })
            }
        }
        check(self.omega0.is_finite() && self.omega0 > 0.0, "omega0", "(0,inf)", self.omega0)?;
        check(self.kappa.is_finite() && self.kappa >= 0.0, "kappa", "[0,inf)", self.kappa)?;
        check((0.0..=1.0).contains(&self.gamma), "gamma", "[0,1]", self.gamma)?;
        check(self.g.is_finite() && self.g >= 0.0, "g", "[0,inf)", self.g)?;
        if let Eta::Finite(e) = self.eta {
            check(e.is_finite() && e > 0.0, "eta", "(0,inf]", e)?;
        }
        Ok(())
    }

    /// Qubit splitting `Omega = eta * omega0`; `None` in the soft-mode limit.
    pub fn qubit_frequency(&self) -> Option<f64> {
        self.eta.finite().map(|e| e * self.omega0)
    }

    /// Bare coupling `lambda = g sqrt(omega0 Omega) / 2`.
    pub fn lambda(&self) -> Option<f64> {
        self.qubit_frequency()
            .map(|om| self.g * (self.omega0 * om).sqrt() / 2.0)
    }

    pub fn kappa_over_omega0(&self) -> f64 {
        self.kappa / self.omega0
    }

    /// Damping rate `kappa (1 - gamma)`.
    pub fn damping_rate(&self) -> f64 {
        self.kappa * (1.0 - self.gamma)
    }

    /// Dephasing rate `kappa gamma`.
    pub fn dephasing_rate(&self) -> f64 {
        self.kappa * self.gamma
    }

    pub fn with_g(mut self, g: f64) -> Result<Self> {
        self.g = g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta(mut self, eta: Eta) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }
}

/// Bare coupling for a dimensionless `g` at fixed `(omega0, eta)`.
pub fn lambda_from_g(omega0: f64, eta: f64, g: f64) -> f64 {
    g * (omega0 * eta * omega0).sqrt() / 2.0
}

/// Inverse of [`lambda_from_g`].
pub fn g_from_lambda(omega0: f64, eta: f64, lambda: f64) -> f64 {
    2.0 * lambda / (omega0 * eta * omega0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derived_quantities() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 1.0, Eta::Finite(10.0)).unwrap();
        assert_eq!(p.qubit_frequency(), Some(10.0));
        assert!((p.lambda().unwrap() - 10f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((p.lambda().unwrap() - 1.5811388300841898).abs() < 1e-12);

        let q = ModelParams::new(1.0, 0.0, 0.0, 0.0, Eta::Finite(1.0)).unwrap();
        assert_eq!(q.lambda(), Some(0.0));
    }

    #[test]
    fn validation_names_field() {
        let err = ModelParams::new(1.0, 1.0, 1.5, 1.0, Eta::Finite(1.0)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("gamma out of [0,1]"), "{msg}");
        assert!(ModelParams::new(0.0, 1.0, 0.5, 1.0, Eta::Infinite).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.5, 1.0, Eta::Infinite).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.5, -0.1, Eta::Infinite).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.5, 1.0, Eta::Finite(0.0)).is_err());
    }

    #[test]
    fn infinite_eta_has_no_lambda() {
        let p = ModelParams::new(1.0, 1.0, 0.3, 1.0, Eta::Infinite).unwrap();
        assert_eq!(p.lambda(), None);
        assert_eq!("inf".parse::<Eta>().unwrap(), Eta::Infinite);
        assert_eq!("12.5".parse::<Eta>().unwrap(), Eta::Finite(12.5));
    }

    #[test]
    fn value_equality() {
        let a = ModelParams::new(1.0, 1.0, 0.3, 1.0, Eta::Finite(2.0)).unwrap();
        let b = ModelParams::new(1.0, 1.0, 0.3, 1.0, Eta::Finite(2.0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, b.with_g(1.1).unwrap());
        assert_ne!(a, b.with_eta(Eta::Infinite).unwrap());
    }

    proptest! {
        #[test]
        fn g_lambda_round_trip(g in 0.0f64..50.0, omega0 in 0.01f64..10.0, eta in 0.01f64..1e4) {
            let lam = lambda_from_g(omega0, eta, g);
            let back = g_from_lambda(omega0, eta, lam);
            prop_assert!((back - g).abs() <= 1e-12 * g.max(1.0));
        }
    }
}
