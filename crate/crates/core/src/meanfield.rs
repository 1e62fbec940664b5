//! Mean-field equations of motion under the factorization `<σ a> ≈ <σ><a>`.
//!
//! Variables are `a = <a>/√η` and the Bloch vector `s`. In these units the
//! flow reads
//!
//! ```text
//! da/dt  = -(κ/2 + iω0) a - i(g ω0 / 2) sx
//! dsx/dt = -Ω sy
//! dsy/dt =  Ω (sx - g sz (a + a*))
//! dsz/dt =  Ω g sy (a + a*)
//! ```
//!
//! Damping and dephasing act identically on `<a>`, so γ never enters.

use ode_solvers::dop_shared::{IntegrationError, OutputType};
use ode_solvers::{Dopri5, System, Vector5};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::ModelParams;
use crate::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanFieldState {
    pub a: C64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl MeanFieldState {
    pub fn new(a: C64, sx: f64, sy: f64, sz: f64) -> Self {
        Self { a, sx, sy, sz }
    }

    /// Normal state with the qubit down.
    pub fn ground() -> Self {
        Self::new(C64::default(), 0.0, 0.0, -1.0)
    }

    pub fn bloch_norm(&self) -> f64 {
        (self.sx * self.sx + self.sy * self.sy + self.sz * self.sz).sqrt()
    }

    /// Euclidean norm over all five real components.
    pub fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.sx * self.sx + self.sy * self.sy + self.sz * self.sz).sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let d = Self::new(self.a - other.a, self.sx - other.sx, self.sy - other.sy, self.sz - other.sz);
        d.norm()
    }

    fn to_vector(self) -> Vector5<f64> {
        Vector5::new(self.a.re, self.a.im, self.sx, self.sy, self.sz)
    }

    fn from_vector(v: &Vector5<f64>) -> Self {
        Self::new(C64::new(v[0], v[1]), v[2], v[3], v[4])
    }
}

/// Time derivative of every component, stored as a [`MeanFieldState`].
pub fn mf_rhs(state: &MeanFieldState, params: &ModelParams) -> Result<MeanFieldState> {
    let omega = params.qubit_frequency().ok_or(Error::InfiniteEta)?;
    Ok(rhs(state, params.omega0, params.kappa, params.g, omega))
}

fn rhs(s: &MeanFieldState, omega0: f64, kappa: f64, g: f64, omega: f64) -> MeanFieldState {
    let re2 = 2.0 * s.a.re;
    MeanFieldState {
        a: -C64::new(kappa / 2.0, omega0) * s.a - C64::new(0.0, g * omega0 / 2.0) * s.sx,
        sx: -omega * s.sy,
        sy: omega * (s.sx - g * s.sz * re2),
        sz: omega * g * s.sy * re2,
    }
}

/// Mean-field threshold `sqrt(1 + κ²/(4ω0²))`.
pub fn mean_field_threshold(params: &ModelParams) -> f64 {
    let r = params.kappa_over_omega0();
    (1.0 + r * r / 4.0).sqrt()
}

/// Stable fixed points: the two normal states for `g <= gc`, the two
/// symmetry-broken states otherwise.
pub fn mf_steady_branches(params: &ModelParams) -> Vec<MeanFieldState> {
    let gc = mean_field_threshold(params);
    let g = params.g;
    if g <= gc {
        return vec![
            MeanFieldState::new(C64::default(), 0.0, 0.0, -1.0),
            MeanFieldState::new(C64::default(), 0.0, 0.0, 1.0),
        ];
    }
    let q = (gc / g).powi(2);
    let root = (1.0 - q * q).max(0.0).sqrt();
    let denom = C64::new(1.0, -params.kappa_over_omega0() / 2.0);
    [1.0, -1.0]
        .into_iter()
        .map(|sign| {
            let a = C64::new(sign * g / 2.0 * root, 0.0) / denom;
            MeanFieldState::new(a, -sign * root, 0.0, -q)
        })
        .collect()
}

/// Slope of `ln|a|` against `ln(g - gc)` on the broken branch over
/// `(gc, gc + width]`, sampled at `points` equally spaced couplings.
pub fn order_parameter_exponent(params: &ModelParams, width: f64, points: usize) -> Result<f64> {
    if !(width > 0.0) || points < 2 {
        return Err(Error::InvalidArgument(format!("need width > 0 and >= 2 points, got {width}, {points}")));
    }
    let gc = mean_field_threshold(params);
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 1..=points {
        let d = width * i as f64 / points as f64;
        let p = params.with_g(gc + d)?;
        xs.push(d);
        ys.push(mf_steady_branches(&p)[0].a.norm());
    }
    Ok(linalg::loglog_slope(&xs, &ys))
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
}

impl Trajectory {
    pub fn last(&self) -> &MeanFieldState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Largest `| |s(t)| - |s(0)| |` along the samples.
    pub fn bloch_drift(&self) -> f64 {
        let n0 = self.states[0].bloch_norm();
        self.states.iter().map(|s| (s.bloch_norm() - n0).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u32,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 50_000_000 }
    }
}

struct Flow {
    omega0: f64,
    kappa: f64,
    g: f64,
    omega: f64,
}

impl System<f64, Vector5<f64>> for &Flow {
    fn system(&self, _t: f64, y: &Vector5<f64>, dy: &mut Vector5<f64>) {
        let d = rhs(&MeanFieldState::from_vector(y), self.omega0, self.kappa, self.g, self.omega);
        *dy = d.to_vector();
    }
}

/// Adaptive Dormand-Prince integration sampled every `dt` up to `t_final`.
///
/// The Bloch vector is not projected back onto the sphere; use
/// [`Trajectory::bloch_drift`] to monitor it.
pub fn mf_evolve(state0: &MeanFieldState, t_final: f64, dt: f64, params: &ModelParams) -> Result<Trajectory> {
    mf_evolve_with(state0, t_final, dt, params, &EvolveOptions::default())
}

pub fn mf_evolve_with(
    state0: &MeanFieldState,
    t_final: f64,
    dt: f64,
    params: &ModelParams,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_final >= 0, got dt={dt}, t_final={t_final}")));
    }
    let omega = params.qubit_frequency().ok_or(Error::InfiniteEta)?;
    if t_final == 0.0 {
        return Ok(Trajectory { times: vec![0.0], states: vec![*state0] });
    }
    let flow = Flow { omega0: params.omega0, kappa: params.kappa, g: params.g, omega };
    let samples = (t_final / dt).ceil() as usize;
    let mut times = Vec::with_capacity(samples + 1);
    let mut states = Vec::with_capacity(samples + 1);
    times.push(0.0);
    states.push(*state0);
    let mut y = state0.to_vector();
    let mut h = 0.0;
    for i in 1..=samples {
        let (t0, t1) = (times[i - 1], (i as f64 * dt).min(t_final));
        // each leg lands exactly on its sample time; no interpolation involved
        let mut solver = Dopri5::from_param(
            &flow,
            t0,
            t1,
            dt,
            y,
            opts.rtol,
            opts.atol,
            0.9,
            0.04,
            0.2,
            10.0,
            t1 - t0,
            h,
            opts.max_steps,
            u32::MAX,
            OutputType::Sparse,
        );
        match solver.integrate() {
            Ok(_) => {}
            Err(IntegrationError::StepSizeUnderflow { x }) => return Err(Error::StepUnderflow { t: x }),
            Err(IntegrationError::MaxNumStepReached { x, n_step }) => {
                return Err(Error::NotConverged { what: "mean-field integration", iterations: n_step as usize, residual: t_final - x })
            }
            Err(IntegrationError::StiffnessDetected { x }) => {
                return Err(Error::NotConverged { what: "mean-field integration (stiff)", iterations: 0, residual: t_final - x })
            }
        }
        let (ts, ys) = solver.results().get();
        if ts.len() >= 2 {
            h = ts[ts.len() - 1] - ts[ts.len() - 2];
        }
        y = *ys.last().expect("sparse output records the endpoint");
        times.push(t1);
        states.push(MeanFieldState::from_vector(&y));
    }
    log::debug!("mean-field integration: {samples} samples up to t = {t_final}");
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Eta;
    use proptest::prelude::*;

    fn p(gamma: f64, g: f64, eta: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, gamma, g, Eta::Finite(eta)).unwrap()
    }

    #[test]
    fn fixed_point_and_simple_components() {
        let d = mf_rhs(&MeanFieldState::ground(), &p(0.3, 0.8, 10.0)).unwrap();
        assert_eq!(d, MeanFieldState::default());
        let s = MeanFieldState::new(C64::new(0.1, -0.2), 0.3, 0.4, 0.5);
        let d = mf_rhs(&s, &p(0.3, 0.8, 10.0)).unwrap();
        assert!((d.sx + 10.0 * 0.4).abs() < 1e-15);
        let inf = ModelParams::new(1.0, 1.0, 0.3, 0.8, Eta::Infinite).unwrap();
        assert!(matches!(mf_rhs(&s, &inf), Err(Error::InfiniteEta)));
    }

    #[test]
    fn threshold_and_broken_branch_values() {
        let params = p(0.0, 1.5, 10.0);
        assert!((mean_field_threshold(&params) - 1.25f64.sqrt()).abs() < 1e-15);
        let branches = mf_steady_branches(&params);
        assert_eq!(branches.len(), 2);
        let sz: f64 = -1.25 / 2.25;
        let sx = (1.0 - sz * sz).sqrt();
        let mut signs = Vec::new();
        for b in &branches {
            assert!((b.sz - sz).abs() < 1e-12);
            assert!((b.sx.abs() - sx).abs() < 1e-12);
            assert!((b.a.norm() - 0.5577733510).abs() < 1e-9);
            assert!((b.bloch_norm() - 1.0).abs() < 1e-12);
            assert!(mf_rhs(b, &params).unwrap().norm() <= 1e-12);
            signs.push(b.sx.signum());
        }
        signs.sort_by(f64::total_cmp);
        assert_eq!(signs, vec![-1.0, 1.0]);
    }

    #[test]
    fn branches_meet_at_threshold() {
        let gc = 1.25f64.sqrt();
        for b in mf_steady_branches(&p(0.0, gc, 10.0)) {
            assert_eq!((b.a, b.sx), (C64::default(), 0.0));
        }
        let b = mf_steady_branches(&p(0.0, gc * (1.0 + 1e-12), 10.0));
        assert!(b[0].a.norm() < 1e-5 && (b[0].sz + 1.0).abs() < 1e-10);
    }

    #[test]
    fn normal_branches_are_fixed_points() {
        let params = p(0.5, 0.9, 20.0);
        for b in mf_steady_branches(&params) {
            assert!(mf_rhs(&b, &params).unwrap().norm() <= 1e-12);
        }
    }

    #[test]
    fn exponent_is_one_half() {
        let slope = order_parameter_exponent(&p(0.0, 1.0, 10.0), 0.05, 50).unwrap();
        assert!((slope - 0.5).abs() < 0.03, "{slope}");
    }

    #[test]
    fn evolve_from_fixed_point_stays_put() {
        let params = p(0.2, 1.5, 10.0);
        let b = mf_steady_branches(&params)[1];
        let traj = mf_evolve(&b, 20.0, 0.5, &params).unwrap();
        for s in &traj.states {
            assert!(s.distance(&b) < 1e-9);
        }
        assert_eq!(traj.times.first(), Some(&0.0));
        assert!((traj.times.last().unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn broken_phase_attracts_to_a_branch() {
        // the qubit is undamped, so the slow modes relax at a rate ~ 1/η²
        let params = p(0.0, 1.5, 1.0);
        let kick = MeanFieldState::new(C64::new(0.01, 0.0), 0.0, 0.0, -1.0);
        let traj = mf_evolve(&kick, 300.0, 1.0, &params).unwrap();
        let end = traj.last();
        let d = mf_steady_branches(&params).iter().map(|b| b.distance(end)).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-6, "distance to branches {d}");
        assert!(traj.bloch_drift() < 1e-6, "{}", traj.bloch_drift());
    }

    #[test]
    fn normal_phase_decays() {
        // a relaxes onto the precessing qubit, leaving a residual of order g/η
        for (eta, bound) in [(10.0, 2.5e-2), (100.0, 2.5e-3)] {
            let params = p(0.4, 0.5, eta);
            let start = MeanFieldState::new(C64::new(0.3, -0.2), 0.6, 0.0, -0.8);
            let traj = mf_evolve(&start, 50.0, 1.0, &params).unwrap();
            assert!(traj.last().a.norm() < bound, "{eta}: {}", traj.last().a.norm());
            assert!(traj.bloch_drift() < 1e-6);
        }
    }

    #[test]
    fn bloch_norm_drift_over_long_run() {
        let params = p(0.3, 1.3, 100.0);
        let start = MeanFieldState::new(C64::new(0.05, 0.02), 0.6, 0.0, -0.8);
        let traj = mf_evolve(&start, 100.0, 5.0, &params).unwrap();
        assert!(traj.bloch_drift() < 1e-6, "{}", traj.bloch_drift());
    }

    #[test]
    fn invalid_step_is_rejected() {
        let params = p(0.0, 0.5, 10.0);
        assert!(mf_evolve(&MeanFieldState::ground(), 1.0, 0.0, &params).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn rhs_ignores_gamma(re in -1.0f64..1.0, im in -1.0f64..1.0, sx in -1.0f64..1.0, sy in -1.0f64..1.0,
                             sz in -1.0f64..1.0, g in 0.0f64..3.0, g1 in 0.0f64..1.0, g2 in 0.0f64..1.0) {
            let s = MeanFieldState::new(C64::new(re, im), sx, sy, sz);
            prop_assert_eq!(mf_rhs(&s, &p(g1, g, 50.0)).unwrap(), mf_rhs(&s, &p(g2, g, 50.0)).unwrap());
        }

        #[test]
        fn broken_branches_are_unit_fixed_points(g in 1.12f64..4.0, kappa in 0.1f64..3.0) {
            let params = ModelParams::new(1.0, kappa, 0.3, g, Eta::Finite(30.0)).unwrap();
            for b in mf_steady_branches(&params) {
                prop_assert!((b.bloch_norm() - 1.0).abs() < 1e-9);
                prop_assert!(mf_rhs(&b, &params).unwrap().norm() <= 1e-12 * params.qubit_frequency().unwrap());
            }
        }
    }
}
