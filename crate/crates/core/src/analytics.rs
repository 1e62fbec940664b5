//! Closed-form second-order steady moments and the large-η `<σz>` prediction.

use crate::error::{Error, Result};
use crate::hierarchy::{analytic_boundary, BoundaryKind, Coupling};
use crate::model::{ModelParams, QubitBranch};
use crate::C64;

/// Evaluations closer than this to the second-order boundary are refused.
pub const BOUNDARY_GUARD: f64 = 1e-10;

/// `(<aa>, <a†a>, <a†a†>)`.
pub type SecondMoments = (C64, C64, C64);

/// Normalization `N` of the second-order solution; it vanishes on the boundary.
pub fn normalization(branch: QubitBranch, params: &ModelParams) -> f64 {
    let gamma = params.gamma;
    let r = params.kappa_over_omega0();
    let g2 = branch.coupling_sign() * params.g * params.g;
    8.0 * (1.0 - gamma) * (1.0 + (1.0 + gamma).powi(2) * r * r / 4.0) - 8.0 * (1.0 - gamma) * g2 - 4.0 * gamma * g2 * g2
}

fn boundary_kind(branch: QubitBranch) -> BoundaryKind {
    match branch {
        QubitBranch::Down => BoundaryKind::Gc2Down,
        QubitBranch::Up => BoundaryKind::Gc2Up,
    }
}

/// Normalization after checking that `g` lies strictly inside the stable region.
fn checked_normalization(branch: QubitBranch, params: &ModelParams) -> Result<f64> {
    let boundary = analytic_boundary(boundary_kind(branch), params.gamma, params.kappa_over_omega0())?;
    let n = normalization(branch, params);
    let near = match boundary {
        Coupling::Finite(gc) => (params.g - gc).abs() < BOUNDARY_GUARD,
        Coupling::Infinite => false,
    };
    if near || n <= 0.0 {
        let boundary = match boundary {
            Coupling::Finite(gc) => gc,
            Coupling::Infinite => f64::INFINITY,
        };
        return Err(Error::Divergence { g: params.g, boundary });
    }
    Ok(n)
}

/// Steady second moments of the reduced oscillator for the given qubit branch.
pub fn v2_steady(branch: QubitBranch, params: &ModelParams) -> Result<SecondMoments> {
    let n = checked_normalization(branch, params)?;
    let gamma = params.gamma;
    let r = params.kappa_over_omega0();
    let g2 = branch.coupling_sign() * params.g * params.g;
    let aa = C64::new(2.0 - g2, r * (1.0 + gamma)) * ((1.0 - gamma) * g2 / n);
    let ada = (1.0 + gamma) * g2 * g2 / n;
    Ok((aa, C64::new(ada, 0.0), aa.conj()))
}

/// `y = Tr[(a - a†)² ρ]` on the branch steady state.
pub fn y_param(branch: QubitBranch, params: &ModelParams) -> Result<f64> {
    let n = checked_normalization(branch, params)?;
    let g2 = params.g * params.g;
    let gamma = params.gamma;
    Ok(match branch {
        QubitBranch::Down => 4.0 * g2 * (1.0 - gamma - g2) / n - 1.0,
        QubitBranch::Up => -4.0 * g2 * (1.0 - gamma + g2) / n - 1.0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SigmaZPrediction {
    pub value: f64,
    /// `None` where the branch moments diverge.
    pub y_down: Option<f64>,
    pub y_up: Option<f64>,
    pub n_down: f64,
    pub n_up: f64,
    /// Set for `γ > 0` and `g >= gc2_down`, where the value is pinned to 1.
    pub saturated: bool,
}

/// `lim_{η→∞} <σz>` in the steady state.
pub fn sigma_z_infinity(params: &ModelParams) -> Result<SigmaZPrediction> {
    let gamma = params.gamma;
    let n_down = normalization(QubitBranch::Down, params);
    let n_up = normalization(QubitBranch::Up, params);
    if gamma == 1.0 && params.g == 0.0 {
        return Err(Error::Domain("sigma_z is undetermined without damping at g=0".into()));
    }
    let gc2 = analytic_boundary(BoundaryKind::Gc2Down, gamma, params.kappa_over_omega0())?;
    let beyond = match gc2 {
        Coupling::Finite(gc) => params.g >= gc,
        Coupling::Infinite => false,
    };
    let y_up = y_param(QubitBranch::Up, params).ok();
    if beyond {
        let saturated = gamma > 0.0;
        let value = if saturated { 1.0 } else { 0.0 };
        return Ok(SigmaZPrediction { value, y_down: None, y_up, n_down, n_up, saturated });
    }
    let yd = y_param(QubitBranch::Down, params)?;
    let yu = y_param(QubitBranch::Up, params)?;
    let den = -2.0 * (1.0 - gamma) + gamma * (yd + yu);
    if den == 0.0 {
        return Err(Error::Domain(format!("sigma_z denominator vanishes at gamma={gamma}, g={}", params.g)));
    }
    // adding 0.0 turns a negative zero at γ = 0 into +0
    let value = gamma * (yd - yu) / den + 0.0;
    Ok(SigmaZPrediction { value, y_down: Some(yd), y_up: Some(yu), n_down, n_up, saturated: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Eta;
    use crate::moments::steady_moments;
    use proptest::prelude::*;

    fn p(kappa: f64, gamma: f64, g: f64) -> ModelParams {
        ModelParams::new(1.0, kappa, gamma, g, Eta::Infinite).unwrap()
    }

    fn gc2_down(gamma: f64, r: f64) -> f64 {
        match analytic_boundary(BoundaryKind::Gc2Down, gamma, r).unwrap() {
            Coupling::Finite(g) => g,
            Coupling::Infinite => unreachable!(),
        }
    }

    #[test]
    fn vacuum_values() {
        for branch in [QubitBranch::Down, QubitBranch::Up] {
            let (aa, ada, adad) = v2_steady(branch, &p(1.0, 0.4, 0.0)).unwrap();
            assert_eq!((aa, ada, adad), (C64::default(), C64::default(), C64::default()));
            assert_eq!(y_param(branch, &p(1.0, 0.4, 0.0)).unwrap(), -1.0);
        }
        for gamma in [0.0, 0.3, 0.9] {
            assert_eq!(sigma_z_infinity(&p(1.0, gamma, 0.0)).unwrap().value, 0.0);
        }
    }

    #[test]
    fn coherent_limit_example() {
        let (aa, ada, adad) = v2_steady(QubitBranch::Down, &p(1.0, 0.0, 1.0)).unwrap();
        assert!((aa - C64::new(0.5, 0.5)).norm() < 1e-15);
        assert!((ada - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((adad - C64::new(0.5, -0.5)).norm() < 1e-15);
        assert_eq!(normalization(QubitBranch::Down, &p(1.0, 0.0, 1.0)), 2.0);
        assert_eq!(y_param(QubitBranch::Down, &p(1.0, 0.0, 1.0)).unwrap(), -1.0);
    }

    #[test]
    fn dephased_example() {
        let params = p(1.0, 0.5, 1.0);
        assert!((normalization(QubitBranch::Down, &params) - 0.25).abs() < 1e-15);
        let s = sigma_z_infinity(&params).unwrap();
        assert!((s.y_down.unwrap() + 9.0).abs() < 1e-12);
        assert!((s.y_up.unwrap() + 19.0 / 11.0).abs() < 1e-12);
        assert!((s.value - 4.0 / 7.0).abs() < 1e-12);
        assert!(!s.saturated);
    }

    #[test]
    fn normalization_vanishes_on_boundary() {
        for gamma in [0.1, 0.3, 0.5, 0.8] {
            for r in [0.5, 1.0, 2.0] {
                let gc = gc2_down(gamma, r);
                let params = ModelParams::new(1.0, r, gamma, gc, Eta::Infinite).unwrap();
                assert!(normalization(QubitBranch::Down, &params).abs() < 1e-12);
                assert!(matches!(v2_steady(QubitBranch::Down, &params), Err(Error::Divergence { .. })));
                let inside = params.with_g(gc - 1e-9).unwrap();
                let near = params.with_g(gc - 0.5e-10).unwrap();
                assert!(v2_steady(QubitBranch::Down, &inside).is_ok());
                assert!(matches!(y_param(QubitBranch::Down, &near), Err(Error::Divergence { .. })));
            }
        }
    }

    #[test]
    fn saturation_and_coherent_case() {
        let gc = gc2_down(0.3, 1.0);
        let s = sigma_z_infinity(&p(1.0, 0.3, gc + 0.01)).unwrap();
        assert!(s.saturated && s.value == 1.0 && s.y_down.is_none());
        let s = sigma_z_infinity(&p(1.0, 0.0, 1.2)).unwrap();
        assert!(!s.saturated && s.value == 0.0);
        let s = sigma_z_infinity(&p(1.0, 0.0, 0.7)).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn y_down_diverges_like_inverse_distance() {
        let (gamma, r) = (0.3, 1.0);
        let gc = gc2_down(gamma, r);
        let mut prev = f64::INFINITY;
        let (mut ds, mut ys) = (Vec::new(), Vec::new());
        for i in 0..=20 {
            let d = 10f64.powf(-3.0 - i as f64 / 20.0);
            let y = y_param(QubitBranch::Down, &p(r, gamma, gc - d)).unwrap();
            assert!(y < prev.min(0.0));
            prev = y;
            ds.push(d);
            ys.push(-y);
        }
        let slope = crate::linalg::loglog_slope(&ds, &ys);
        assert!((slope + 1.0).abs() < 0.01, "slope {slope}");
    }

    #[test]
    fn approaches_one_at_boundary() {
        for gamma in [0.05, 0.3, 0.7] {
            let gc = gc2_down(gamma, 1.0);
            let s = sigma_z_infinity(&p(1.0, gamma, gc - 1e-8)).unwrap();
            assert!(s.value > 0.999 && s.value < 1.0, "{gamma}: {}", s.value);
        }
    }

    #[test]
    fn degenerate_denominator_is_domain_error() {
        // γ = 1 with g > 0 lies beyond gc2_down = 0 and saturates
        let s = sigma_z_infinity(&p(1.0, 1.0, 0.5)).unwrap();
        assert!(s.saturated);
        assert!(matches!(sigma_z_infinity(&p(1.0, 1.0, 0.0)), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]

        #[test]
        fn agrees_with_moment_solve(gamma in 0.0f64..0.95, frac in 0.0f64..0.97, r in 0.2f64..3.0, up in any::<bool>()) {
            let gc = gc2_down(gamma, r);
            let g = frac * gc.min(3.0);
            let params = ModelParams::new(1.0, r, gamma, g, Eta::Infinite).unwrap();
            let branch = if up { QubitBranch::Up } else { QubitBranch::Down };
            // skip points where the up branch itself is past its boundary
            prop_assume!(normalization(branch, &params) > 0.0);
            let (aa, ada, adad) = v2_steady(branch, &params).unwrap();
            prop_assert_eq!(adad, aa.conj());
            prop_assert!(ada.re >= 0.0);
            let s = steady_moments(2, branch, &params).unwrap();
            let scale = aa.norm().max(ada.norm()).max(1.0);
            prop_assert!((s[&(0, 2)] - aa).norm() < 1e-12 * scale);
            prop_assert!((s[&(1, 1)] - ada).norm() < 1e-12 * scale);
            prop_assert!((s[&(2, 0)] - adad).norm() < 1e-12 * scale);
        }

        #[test]
        fn prediction_stays_in_range(gamma in 0.0f64..1.0, g in 0.0f64..3.0) {
            if let Ok(s) = sigma_z_infinity(&p(1.0, gamma, g)) {
                prop_assert!((-1.0..=1.0).contains(&s.value));
            }
        }
    }
}
