//! Fixed-energy boundary-value problem: given `q_a`, `q_b` and `E`, find the
//! shell momentum `p_a` and the travel time.
//!
//! Unknowns are `(p, tau)`. For a trial pair the orbit is integrated in the
//! gauge `N = 1` with a fixed number of steps over `[0, tau]`, so the endpoint
//! depends smoothly on `tau`. The residual is `q(tau; p) - q_b` plus the shell
//! condition, driven to zero by a damped Broyden iteration; `p` is rescaled
//! onto `|p| = sqrt(2 m (E - V(q_a)))` after every update.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ClassicalSystem;

use super::actions::trajectory_actions;
use super::integrator::{
    integrate_parametrized_with, ExtendedPhasePoint, LapseProfile, Scheme, Stepper, Trajectory,
    DEFAULT_STEPS, MIN_STEPS,
};

pub const MAX_SHOOTING_ITERATIONS: usize = 200;
/// Endpoint residual (max-norm) at which iteration stops.
pub const SHOOTING_TOL: f64 = 1e-12;
/// Residual still accepted once the iteration stalls at rounding level.
pub const SHOOTING_ACCEPT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub n_steps: usize,
    pub scheme: Scheme,
    pub max_iterations: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            n_steps: DEFAULT_STEPS,
            scheme: Scheme::default(),
            max_iterations: MAX_SHOOTING_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingSolution {
    pub p_a: Vec<f64>,
    pub time_of_flight: f64,
    pub iterations: usize,
    /// Max-norm distance between the integrated endpoint and `q_b`.
    pub endpoint_residual: f64,
    pub trajectory: Trajectory,
}

/// Shooting with default options.
pub fn maupertuis_shoot(
    sys: &ClassicalSystem,
    q_a: &[f64],
    q_b: &[f64],
    energy: f64,
    init_guess: &[f64],
) -> Result<ShootingSolution> {
    maupertuis_shoot_with(sys, q_a, q_b, energy, init_guess, &ShootingOptions::default())
}

struct Problem<'a> {
    sys: &'a ClassicalSystem,
    q_a: &'a [f64],
    q_b: &'a [f64],
    shell: f64,
    opts: ShootingOptions,
}

impl Problem<'_> {
    fn dof(&self) -> usize {
        self.sys.dof()
    }

    fn project(&self, p: &mut [f64]) {
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in p.iter_mut() {
                *x *= self.shell / norm;
            }
        }
    }

    /// Endpoint after `n_steps` equal steps of total time `tau`.
    fn endpoint(&self, p0: &[f64], tau: f64) -> Vec<f64> {
        let mut stepper = Stepper::new(self.sys, self.opts.scheme);
        let mut q = self.q_a.to_vec();
        let mut p = p0.to_vec();
        let h = tau / self.opts.n_steps as f64;
        for _ in 0..self.opts.n_steps {
            stepper.advance(&mut q, &mut p, h);
        }
        q
    }

    /// Residual vector: endpoint mismatch followed by the scaled shell condition.
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dof();
        let (p, tau) = (&x[..d], x[d]);
        let q = self.endpoint(p, tau);
        let mut r: Vec<f64> = q.iter().zip(self.q_b).map(|(a, b)| a - b).collect();
        let p2: f64 = p.iter().map(|v| v * v).sum();
        r.push((p2 - self.shell * self.shell) / (2.0 * self.shell.max(1e-300)));
        r
    }

    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = x.len();
        let d = self.dof();
        let mut jac = vec![vec![0.0; n]; n];
        for j in 0..n {
            let step = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += step;
            xm[j] -= step;
            let (rp, rm) = (self.residual(&xp), self.residual(&xm));
            for i in 0..d {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * step);
            }
        }
        // shell row is analytic
        for j in 0..d {
            jac[d][j] = x[j] / self.shell.max(1e-300);
        }
        jac[d][d] = 0.0;
        jac
    }

    /// First time at which the orbit stops approaching `q_b`.
    fn initial_time(&self, p0: &[f64]) -> Result<f64> {
        let dist = self
            .q_a
            .iter()
            .zip(self.q_b)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let speed = (self.shell / self.sys.mass()).max(1e-12);
        let dt = dist / speed / 256.0;
        let approach = |q: &[f64], p: &[f64]| -> f64 {
            q.iter().zip(self.q_b).zip(p).map(|((q, b), p)| (q - b) * p).sum()
        };
        let mut stepper = Stepper::new(self.sys, self.opts.scheme);
        let mut q = self.q_a.to_vec();
        let mut p = p0.to_vec();
        let mut t = 0.0;
        let mut seen_negative = approach(&q, &p) < 0.0;
        for _ in 0..1_000_000 {
            let (q_prev, p_prev) = (q.clone(), p.clone());
            stepper.advance(&mut q, &mut p, dt);
            let g = approach(&q, &p);
            if g < 0.0 {
                seen_negative = true;
            } else if seen_negative {
                // bisect on a partial step from the bracketing state
                let (mut lo, mut hi) = (0.0, dt);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let (mut qm, mut pm) = (q_prev.clone(), p_prev.clone());
                    stepper.advance(&mut qm, &mut pm, mid);
                    if approach(&qm, &pm) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(t + 0.5 * (lo + hi));
            }
            t += dt;
        }
        Err(Error::ShootingDiverged {
            iterations: 0,
            residual: f64::INFINITY,
        })
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Some(x)
}

pub fn maupertuis_shoot_with(
    sys: &ClassicalSystem,
    q_a: &[f64],
    q_b: &[f64],
    energy: f64,
    init_guess: &[f64],
    opts: &ShootingOptions,
) -> Result<ShootingSolution> {
    sys.check_dims(q_a, "maupertuis_shoot (q_a)")?;
    sys.check_dims(q_b, "maupertuis_shoot (q_b)")?;
    sys.check_dims(init_guess, "maupertuis_shoot (init_guess)")?;
    if opts.n_steps < MIN_STEPS {
        return Err(Error::InvalidArgument(format!(
            "n_steps must be >= {MIN_STEPS}, got {}",
            opts.n_steps
        )));
    }
    if !q_a.iter().chain(q_b).all(|x| x.is_finite()) || !energy.is_finite() {
        return Err(Error::InvalidArgument("non-finite boundary data".into()));
    }
    let v_a = sys.potential(q_a);
    if energy < v_a {
        return Err(Error::EnergyBelowBarrier {
            energy,
            potential: v_a,
        });
    }
    let shell = (2.0 * sys.mass() * (energy - v_a)).sqrt();
    let d = sys.dof();

    let mut p: Vec<f64> = if init_guess.iter().any(|x| *x != 0.0) {
        init_guess.to_vec()
    } else {
        q_b.iter().zip(q_a).map(|(b, a)| b - a).collect()
    };
    if p.iter().all(|x| *x == 0.0) {
        p[0] = 1.0;
    }
    let problem = Problem {
        sys,
        q_a,
        q_b,
        shell,
        opts: *opts,
    };
    problem.project(&mut p);

    if q_a == q_b {
        let traj = Trajectory::from_states(
            sys,
            vec![0.0],
            vec![ExtendedPhasePoint {
                q: q_a.to_vec(),
                p: p.clone(),
                t: 0.0,
                pi_t: -energy,
            }],
            vec![1.0],
        );
        return Ok(ShootingSolution {
            p_a: p,
            time_of_flight: 0.0,
            iterations: 0,
            endpoint_residual: 0.0,
            trajectory: traj,
        });
    }
    if shell == 0.0 {
        return Err(Error::ShootingDiverged {
            iterations: 0,
            residual: max_norm(&q_a.iter().zip(q_b).map(|(a, b)| a - b).collect::<Vec<_>>()),
        });
    }

    let tau0 = problem.initial_time(&p)?;
    let mut x: Vec<f64> = p.iter().copied().chain([tau0]).collect();
    let mut r = problem.residual(&x);
    let mut jac = problem.jacobian(&x);
    let mut fresh = true;
    let mut iterations = 0;
    while max_norm(&r[..d]) > SHOOTING_TOL * q_b.iter().fold(1.0f64, |a, v| a.max(v.abs())) {
        if iterations >= opts.max_iterations {
            return Err(Error::ShootingDiverged {
                iterations,
                residual: max_norm(&r[..d]),
            });
        }
        iterations += 1;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = match solve_real(&jac, &neg) {
            Some(dx) => dx,
            None if !fresh => {
                jac = problem.jacobian(&x);
                fresh = true;
                continue;
            }
            None => {
                return Err(Error::ShootingDiverged {
                    iterations,
                    residual: max_norm(&r[..d]),
                })
            }
        };
        // damped step with shell re-projection and positive travel time
        let norm0 = max_norm(&r);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut xn: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + lambda * b).collect();
            problem.project(&mut xn[..d]);
            if xn[d] > 0.0 {
                let rn = problem.residual(&xn);
                if max_norm(&rn) < norm0 {
                    accepted = Some((xn, rn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xn, rn)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = rn.iter().zip(&r).map(|(a, b)| a - b).collect();
                let ss: f64 = s.iter().map(|v| v * v).sum();
                if ss > 0.0 {
                    for i in 0..=d {
                        let js: f64 = (0..=d).map(|k| jac[i][k] * s[k]).sum();
                        let coef = (y[i] - js) / ss;
                        for k in 0..=d {
                            jac[i][k] += coef * s[k];
                        }
                    }
                }
                x = xn;
                r = rn;
                fresh = false;
            }
            None if !fresh => {
                jac = problem.jacobian(&x);
                fresh = true;
            }
            None => {
                if max_norm(&r[..d]) <= SHOOTING_ACCEPT {
                    break;
                }
                return Err(Error::ShootingDiverged {
                    iterations,
                    residual: max_norm(&r[..d]),
                });
            }
        }
    }

    let p_a = x[..d].to_vec();
    let tau = x[d];
    // pi_t = -E exactly; H(p_a, q_a) = E holds to rounding after projection
    let x0 = ExtendedPhasePoint {
        q: q_a.to_vec(),
        p: p_a.clone(),
        t: 0.0,
        pi_t: -energy,
    };
    let trajectory =
        integrate_parametrized_with(sys, &x0, &LapseProfile::unit(), (0.0, tau), opts.n_steps, opts.scheme)?;
    let endpoint_residual = max_norm(
        &trajectory
            .last()
            .q
            .iter()
            .zip(q_b)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    let mut trajectory = trajectory;
    trajectory.action_mj = trajectory_actions(&trajectory, sys, Some(energy)).s_mj;
    let time_of_flight = trajectory.last().t - trajectory.initial().t;
    Ok(ShootingSolution {
        p_a,
        time_of_flight,
        iterations,
        endpoint_residual,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ClassicalModelSpec;
    use std::f64::consts::PI;

    fn sys(spec: ClassicalModelSpec) -> ClassicalSystem {
        ClassicalSystem::from_spec(&spec).unwrap()
    }

    #[test]
    fn harmonic_quarter_orbit() {
        let s = sys(ClassicalModelSpec::Harmonic { dof: 1, mass: 1.0, omega: 1.0 });
        let sol = maupertuis_shoot(&s, &[0.0], &[1.0], 1.0, &[1.0]).unwrap();
        assert!((sol.p_a[0] - 2f64.sqrt()).abs() < 1e-8, "{:?}", sol.p_a);
        assert!((sol.time_of_flight - PI / 4.0).abs() < 1e-6);
        assert!(sol.endpoint_residual < 1e-8);
        assert!(sol.trajectory.states.iter().all(|x| x.pi_t == -1.0));
    }

    #[test]
    fn free_particle_closed_form() {
        let (m, e, l) = (2.0, 0.5, 3.0);
        let s = sys(ClassicalModelSpec::FreeParticle { dof: 1, mass: m });
        let sol = maupertuis_shoot(&s, &[0.0], &[l], e, &[0.3]).unwrap();
        assert!((sol.p_a[0] - (2.0 * m * e).sqrt()).abs() < 1e-10);
        assert!((sol.time_of_flight - l * (m / (2.0 * e)).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn free_particle_in_two_dimensions() {
        let s = sys(ClassicalModelSpec::FreeParticle { dof: 2, mass: 1.0 });
        let sol = maupertuis_shoot(&s, &[0.0, 0.0], &[3.0, 4.0], 2.0, &[1.0, 0.0]).unwrap();
        assert!((sol.p_a[0] - 1.2).abs() < 1e-10 && (sol.p_a[1] - 1.6).abs() < 1e-10);
        assert!((sol.time_of_flight - 2.5).abs() < 1e-10);
    }

    #[test]
    fn double_well_over_the_barrier() {
        let s = sys(ClassicalModelSpec::DoubleWell { dof: 1, mass: 1.0, height: 1.0, minimum: 1.0 });
        let sol = maupertuis_shoot(&s, &[-1.0], &[1.0], 1.5, &[1.0]).unwrap();
        assert!(sol.endpoint_residual < 1e-8);
        assert!(sol.trajectory.energy_drift < 1e-8);
        let h = s.kinetic(&sol.p_a) + s.potential(&[-1.0]);
        assert!((h - 1.5).abs() < 1e-10);
    }

    #[test]
    fn degenerate_and_forbidden_inputs() {
        let s = sys(ClassicalModelSpec::Harmonic { dof: 1, mass: 1.0, omega: 1.0 });
        let sol = maupertuis_shoot(&s, &[0.5], &[0.5], 1.0, &[1.0]).unwrap();
        assert_eq!(sol.time_of_flight, 0.0);
        assert!(matches!(
            maupertuis_shoot(&s, &[3.0], &[1.0], 1.0, &[1.0]),
            Err(Error::EnergyBelowBarrier { .. })
        ));
    }

    #[test]
    fn unreachable_target_diverges() {
        // energy too low to reach q_b = 2 from the bottom of the well
        let s = sys(ClassicalModelSpec::Harmonic { dof: 1, mass: 1.0, omega: 1.0 });
        let opts = ShootingOptions {
            n_steps: 64,
            ..ShootingOptions::default()
        };
        let r = maupertuis_shoot_with(&s, &[0.0], &[2.0], 0.5, &[1.0], &opts);
        assert!(matches!(r, Err(Error::ShootingDiverged { .. })), "{r:?}");
    }
}
