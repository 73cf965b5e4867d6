//! Discrete actions along a stored trajectory.
//!
//! All sigma-integrals use the trapezoid rule on the stored samples, with the
//! velocity `dq/d(sigma) = N dH/dp = N p / m` taken from the equations of
//! motion. The `pi_t dt` and `t d(pi_t)` terms are midpoint sums, so that
//! `sum pi_bar dt + sum t_bar d(pi) = [pi_t t]` holds term by term.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ClassicalSystem;

use super::integrator::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Actions {
    /// `int [p q' + pi_t t' - N (H + pi_t)] d(sigma)`.
    pub s_param: f64,
    /// `int [p dq/dt - H] dt`; absent when `t` is not monotone.
    pub s_hamilton: Option<f64>,
    /// `int [p q' - N (H - E)] d(sigma)` for the supplied `E`.
    pub s_mj: Option<f64>,
    /// Routh-transformed action `int [p q' - t pi_t' - N (H + pi_t)] d(sigma)`.
    pub s_routh: f64,
    /// `|s_routh - (s_param - [pi_t t])|`.
    pub routh_residual: f64,
}

fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum()
}

pub(crate) fn trajectory_actions(traj: &Trajectory, sys: &ClassicalSystem, energy: Option<f64>) -> Actions {
    let m = sys.mass();
    let sigma = &traj.sigma_values;
    let pq: Vec<f64> = traj
        .states
        .iter()
        .zip(&traj.lapse_values)
        .map(|(s, n)| n * s.p.iter().map(|x| x * x).sum::<f64>() / m)
        .collect();
    let constraint: Vec<f64> = traj
        .states
        .iter()
        .zip(&traj.lapse_values)
        .zip(&traj.h_values)
        .map(|((s, n), h)| n * (h + s.pi_t))
        .collect();

    let mut pi_dt = 0.0;
    let mut t_dpi = 0.0;
    for w in traj.states.windows(2) {
        pi_dt += 0.5 * (w[0].pi_t + w[1].pi_t) * (w[1].t - w[0].t);
        t_dpi += 0.5 * (w[0].t + w[1].t) * (w[1].pi_t - w[0].pi_t);
    }
    let kinetic = trapezoid(sigma, &pq);
    let penalty = trapezoid(sigma, &constraint);
    let s_param = kinetic + pi_dt - penalty;
    let s_routh = kinetic - t_dpi - penalty;
    let (first, last) = (traj.initial(), traj.last());
    let boundary = last.pi_t * last.t - first.pi_t * first.t;
    let routh_residual = (s_routh - (s_param - boundary)).abs();

    let s_hamilton = if time_is_monotone(traj) {
        let t: Vec<f64> = traj.states.iter().map(|s| s.t).collect();
        let lagrangian: Vec<f64> = traj
            .states
            .iter()
            .zip(&traj.h_values)
            .map(|(s, h)| s.p.iter().map(|x| x * x).sum::<f64>() / m - h)
            .collect();
        Some(trapezoid(&t, &lagrangian))
    } else {
        None
    };

    let s_mj = energy.map(|e| {
        let f: Vec<f64> = pq
            .iter()
            .zip(&traj.lapse_values)
            .zip(&traj.h_values)
            .map(|((pq, n), h)| pq - n * (h - e))
            .collect();
        trapezoid(sigma, &f)
    });

    Actions {
        s_param,
        s_hamilton,
        s_mj,
        s_routh,
        routh_residual,
    }
}

fn time_is_monotone(traj: &Trajectory) -> bool {
    traj.states.windows(2).all(|w| w[1].t > w[0].t)
}

/// Parametrized, Hamilton and (with `energy`) Maupertuis-Jacobi actions plus the Routh residual.
pub fn evaluate_actions(traj: &Trajectory, sys: &ClassicalSystem, energy: Option<f64>) -> Result<Actions> {
    if traj.states.len() < 2 {
        return Err(Error::InvalidArgument("trajectory needs at least two points".into()));
    }
    if !time_is_monotone(traj) {
        return Err(Error::NonMonotoneTime);
    }
    Ok(trajectory_actions(traj, sys, energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::integrator::{gauge_fix_hamilton, integrate_parametrized, ExtendedPhasePoint, LapseProfile};
    use crate::models::ClassicalModelSpec;
    use std::f64::consts::PI;

    fn sys(spec: ClassicalModelSpec) -> ClassicalSystem {
        ClassicalSystem::from_spec(&spec).unwrap()
    }

    #[test]
    fn free_particle_hamilton_action() {
        let s = sys(ClassicalModelSpec::FreeParticle { dof: 1, mass: 2.0 });
        let traj = gauge_fix_hamilton(&s, &[0.0], &[3.0], (0.0, 4.0), 64).unwrap();
        let a = evaluate_actions(&traj, &s, None).unwrap();
        assert!((a.s_hamilton.unwrap() - 9.0 * 4.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn gauge_actions_agree() {
        let s = sys(ClassicalModelSpec::Harmonic { dof: 1, mass: 1.0, omega: 1.0 });
        let traj = gauge_fix_hamilton(&s, &[1.0], &[0.3], (0.0, 2.0 * PI), 2048).unwrap();
        let a = evaluate_actions(&traj, &s, None).unwrap();
        assert!((a.s_param - a.s_hamilton.unwrap()).abs() < 1e-8);
        assert!(a.routh_residual < 1e-10);
    }

    #[test]
    fn routh_identity_with_nonuniform_lapse() {
        let s = sys(ClassicalModelSpec::DoubleWell { dof: 2, mass: 1.0, height: 1.0, minimum: 1.0 });
        let x0 = ExtendedPhasePoint::on_shell(&s, vec![0.1, -0.9], vec![1.2, 0.4], 3.0).unwrap();
        let lapse = LapseProfile::sinusoidal(0.8, 0.7, 2.5, 0.4).unwrap();
        let traj = integrate_parametrized(&s, &x0, &lapse, (0.0, 6.0), 1024).unwrap();
        let a = evaluate_actions(&traj, &s, Some(-x0.pi_t)).unwrap();
        assert!(a.routh_residual < 1e-10);
        // on shell with E = H the two fixed-energy forms coincide up to the constraint
        assert!((a.s_mj.unwrap() - (a.s_param - x0.pi_t * (traj.last().t - 3.0))).abs() < 1e-8);
    }

    #[test]
    fn non_monotone_time_is_rejected() {
        let s = sys(ClassicalModelSpec::FreeParticle { dof: 1, mass: 1.0 });
        let mut traj = gauge_fix_hamilton(&s, &[0.0], &[1.0], (0.0, 1.0), 16).unwrap();
        traj.states[5].t = traj.states[4].t;
        assert_eq!(evaluate_actions(&traj, &s, None), Err(Error::NonMonotoneTime));
    }
}
