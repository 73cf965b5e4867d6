//! Parametrized classical mechanics on extended phase space.

pub mod actions;
pub mod integrator;
pub mod shooting;

pub use actions::{evaluate_actions, Actions};
pub use integrator::{
    gauge_fix_hamilton, gauge_fix_hamilton_with, integrate_hamilton, integrate_parametrized,
    integrate_parametrized_with, reparametrization_invariance_check,
    reparametrization_invariance_check_with, ExtendedPhasePoint, HamiltonPath, LapseProfile,
    Scheme, Trajectory, DEFAULT_STEPS,
};
pub use shooting::{maupertuis_shoot, maupertuis_shoot_with, ShootingOptions, ShootingSolution};
