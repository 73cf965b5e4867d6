//! Canonical and microcanonical ensembles as two projections of the
//! constrained kernel, with direct spectral oracles for comparison.
//!
//! Normalization conventions (discrete-trace):
//!
//! * `Z(beta) = Tr exp(-beta H)`, no prefactor. On the constrained route the
//!   one-step clock kernel `<T_{k+1}| g_sigma(C) |T_k>` equals
//!   `kappa exp(-i dT H)` with `kappa = (dT / 2 pi) exp(-sigma^2 dT^2 / 2)`;
//!   `kappa` is divided out before the generator is recovered.
//! * `Omega_sigma(E) = Tr g_sigma(H - E)`. On the constrained route this is the
//!   trace of the diagonal clock-energy block of `g_sigma(C)`, with no extra
//!   constant (the continuum factor `1 / dP` of the momentum delta is absorbed
//!   by working with the lattice Kronecker delta).

use std::f64::consts::PI;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::clock::{auto_clock, build_clock, clock_energy_basis, ClockGrid, ClockOperators, DEFAULT_WIDTH_IN_SPACINGS};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, eig_hermitian_matrix, identity, max_abs, solve_complex, trace, CMatrix,
    HermitianOperator, C64,
};
use crate::models::{build_quantum, QuantumModelSpec};
use crate::projector::{
    build_constraint, contract_clock, gaussian_delta, kernel_clock_energy, kernel_clock_time,
    projector_quadrature, projector_spectral, to_clock_basis, DeltaRegularization,
    ExtendedOperator, QuadratureSpec, QuadratureWindow, RegularizationScheme,
};

/// Energy window around the spectrum covered by default energy grids, in widths.
pub const ENERGY_GRID_TAIL_WIDTHS: f64 = 6.0;

/// `Tr exp(-beta H)` via the clock-time kernel at imaginary separation `-i beta`.
pub fn canonical_from_kernel(h: &HermitianOperator, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let k = kernel_clock_time(h, C64::new(0.0, -beta))?;
    Ok(trace(&k).re)
}

/// `Tr g_sigma(H - E)` via the clock-energy kernel.
pub fn microcanonical_from_kernel(h: &HermitianOperator, energy: f64, reg: &DeltaRegularization) -> Result<f64> {
    let k = kernel_clock_energy(h, energy, reg)?;
    Ok(trace(&k).re)
}

/// Oracle `sum_n exp(-beta lambda_n)`.
pub fn canonical_direct(eigenvalues: &[f64], beta: f64) -> f64 {
    eigenvalues.iter().map(|l| (-beta * l).exp()).sum()
}

/// Oracle `sum_n g_sigma(lambda_n - E)`.
pub fn microcanonical_direct(eigenvalues: &[f64], energy: f64, sigma: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|l| gaussian_delta(l - energy, sigma))
        .sum()
}

/// Trapezoid `int dE Omega_sigma(E) exp(-beta E)` on `e_grid`.
///
/// For Gaussian broadening this equals `Z(beta) exp(beta^2 sigma^2 / 2)`.
/// The grid must be increasing, reach `6 sigma` past both spectral edges and
/// have spacing at most `sigma / 4`; `beta sigma <= 2`.
pub fn laplace_consistency(
    h: &HermitianOperator,
    reg: &DeltaRegularization,
    beta: f64,
    e_grid: &[f64],
) -> Result<f64> {
    reg.validate()?;
    let sigma = reg.width;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    if beta * sigma > 2.0 {
        return Err(Error::GridTooCoarse(format!(
            "beta * sigma = {} exceeds 2; the shifted Gaussian leaves the grid",
            beta * sigma
        )));
    }
    if e_grid.len() < 2 {
        return Err(Error::GridTooCoarse("energy grid needs at least two points".into()));
    }
    let lam = eig_hermitian(h)?.eigenvalues;
    let (lo, hi) = (lam[0], lam[lam.len() - 1]);
    let reach = ENERGY_GRID_TAIL_WIDTHS * sigma;
    let tol = 1e-9 * sigma;
    if e_grid[0] > lo - reach + tol || e_grid[e_grid.len() - 1] < hi + reach - tol {
        return Err(Error::GridTooCoarse(format!(
            "grid [{}, {}] does not span [{}, {}]",
            e_grid[0],
            e_grid[e_grid.len() - 1],
            lo - reach,
            hi + reach
        )));
    }
    for w in e_grid.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) {
            return Err(Error::GridTooCoarse("energy grid must be strictly increasing".into()));
        }
        if d > 0.25 * sigma * (1.0 + 1e-9) {
            return Err(Error::GridTooCoarse(format!(
                "spacing {d} exceeds sigma / 4 = {}",
                0.25 * sigma
            )));
        }
    }
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for &e in e_grid {
        let f = microcanonical_from_kernel(h, e, reg)? * (-beta * e).exp();
        if let Some((pe, pf)) = prev {
            integral += 0.5 * (e - pe) * (f + pf);
        }
        prev = Some((e, f));
    }
    Ok(integral)
}

/// Default inverse-temperature grid: 16 log-spaced points in `[0.1, 10]`.
pub fn default_beta_grid() -> Vec<f64> {
    log_spaced(0.1, 10.0, 16)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Uniform grid from `lambda_min - 6 sigma` to `lambda_max + 6 sigma` with spacing `sigma / 4`.
pub fn default_energy_grid(eigenvalues: &[f64], sigma: f64) -> Vec<f64> {
    let lo = eigenvalues[0] - ENERGY_GRID_TAIL_WIDTHS * sigma;
    let hi = eigenvalues[eigenvalues.len() - 1] + ENERGY_GRID_TAIL_WIDTHS * sigma;
    let step = 0.25 * sigma;
    let n = ((hi - lo) / step).ceil() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must be > 0, got {beta}")))
    }
}

/// Constraint projector `delta_reg(C)` for a fixed system and clock, and the two
/// projections read off from it.
#[derive(Debug, Clone)]
pub struct ConstrainedKernel {
    grid: ClockGrid,
    ops: ClockOperators,
    system: HermitianOperator,
    reg: DeltaRegularization,
    projector: ExtendedOperator,
}

impl ConstrainedKernel {
    pub fn new(system: HermitianOperator, n_sites: usize, period: f64, reg: DeltaRegularization) -> Result<Self> {
        reg.validate()?;
        let (grid, ops) = build_clock(n_sites, period)?;
        let c = build_constraint(&ops, &system)?;
        let projector = match reg.scheme {
            RegularizationScheme::GaussianBroadening => projector_spectral(&c, &reg)?,
            RegularizationScheme::AlphaQuadrature => projector_quadrature(&c, &reg)?,
        };
        Ok(Self {
            grid,
            ops,
            system,
            reg,
            projector,
        })
    }

    pub fn grid(&self) -> &ClockGrid {
        &self.grid
    }

    pub fn projector(&self) -> &ExtendedOperator {
        &self.projector
    }

    pub fn regularization(&self) -> &DeltaRegularization {
        &self.reg
    }

    /// `<T_{from + steps}| delta_reg(C) |T_from>` (sites taken mod `N_T`).
    pub fn clock_time_kernel(&self, from: usize, steps: usize) -> Result<CMatrix> {
        let n = self.grid.n_sites();
        let bra = self.grid.position_state((from + steps) % n);
        let ket = self.grid.position_state(from % n);
        contract_clock(&self.projector, &bra, &ket)
    }

    /// Scalar `kappa(m) = (dT / 2 pi) exp(-sigma^2 (m dT)^2 / 2)` relating the
    /// `m`-step kernel to `exp(-i m dT H)`.
    pub fn kernel_scale(&self, steps: usize) -> f64 {
        let theta = steps as f64 * self.grid.spacing();
        let dt = self.grid.spacing();
        let s = self.reg.width;
        dt / (2.0 * PI) * (-0.5 * s * s * theta * theta).exp()
    }

    /// Hermitian generator recovered from the one-step kernel at base site `from`.
    ///
    /// `U = K_1 / kappa` approximates `exp(-i dT H)`; the Cayley transform
    /// `X = -i (1 - U)(1 + U)^-1` has eigenvalues `tan(dT lambda / 2)`, and
    /// `2 atan(X) / dT` returns the generator.
    pub fn euclidean_generator(&self, from: usize) -> Result<HermitianOperator> {
        let n = self.system.dim();
        let u = self.clock_time_kernel(from, 1)?.mapv(|z| z / self.kernel_scale(1));
        let id = identity(n);
        let x = solve_complex(&(&id + &u), &(&id - &u))?.mapv(|z| z * C64::new(0.0, -1.0));
        let xh = (&x + &crate::linalg::dagger(x.view())).mapv(|z| z * 0.5);
        let dt = self.grid.spacing();
        let sd = eig_hermitian_matrix(xh.view())?;
        HermitianOperator::new(sd.apply(|t| C64::new(2.0 * t.atan() / dt, 0.0)))
    }

    /// Kernel-route `Z(beta)`: the recovered generator continued to imaginary
    /// clock separation `-i beta`.
    pub fn partition_function(&self, betas: &[f64], from: usize) -> Result<Vec<f64>> {
        let g = self.euclidean_generator(from)?;
        betas.iter().map(|&b| canonical_from_kernel(&g, b)).collect()
    }

    /// `delta_reg(C)` with the clock factor rotated to the clock-energy basis.
    pub fn energy_blocks(&self) -> Result<ExtendedOperator> {
        to_clock_basis(&self.projector, &clock_energy_basis(&self.ops))
    }

    /// Kernel-route `Omega_sigma(E)` for clock-lattice energies.
    pub fn density_of_states(&self, energies: &[f64]) -> Result<Vec<f64>> {
        let blocks = self.energy_blocks()?;
        self.density_from_blocks(&blocks, energies)
    }

    fn density_from_blocks(&self, blocks: &ExtendedOperator, energies: &[f64]) -> Result<Vec<f64>> {
        energies
            .iter()
            .map(|&e| {
                let j = self.grid.energy_index(e).ok_or(Error::EnergyOffClockLattice {
                    energy: e,
                    spacing: self.grid.momentum_spacing(),
                })?;
                Ok(trace(&blocks.block(j, j)).re)
            })
            .collect()
    }

    /// Clock-lattice energies within `6 sigma` of the spectrum.
    pub fn lattice_energy_grid(&self, eigenvalues: &[f64]) -> Vec<f64> {
        let reach = ENERGY_GRID_TAIL_WIDTHS * self.reg.width;
        let (lo, hi) = (eigenvalues[0] - reach, eigenvalues[eigenvalues.len() - 1] + reach);
        let mut e: Vec<f64> = self
            .grid
            .clock_energies()
            .into_iter()
            .filter(|&x| x >= lo && x <= hi)
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Largest entry of any off-diagonal clock-energy block.
pub fn max_offdiagonal_block(blocks: &ExtendedOperator) -> f64 {
    let nt = blocks.clock_dim();
    let mut worst = 0.0f64;
    for j in 0..nt {
        for jp in 0..nt {
            if j != jp {
                worst = worst.max(max_abs(blocks.block(j, jp).view()));
            }
        }
    }
    worst
}

/// Marker for the literal `"auto"` in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

/// `"auto"` or an explicit clock grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum ClockSetting {
    Auto(Auto),
    Grid {
        /// Number of clock sites N_T (>= 2).
        n_sites: usize,
        /// Clock period Theta (time units).
        period: f64,
    },
}

impl Default for ClockSetting {
    fn default() -> Self {
        ClockSetting::Auto(Auto::Auto)
    }
}

/// `"auto"` or an explicit list of energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum EnergyGridSetting {
    Auto(Auto),
    Explicit(Vec<f64>),
}

impl Default for EnergyGridSetting {
    fn default() -> Self {
        EnergyGridSetting::Auto(Auto::Auto)
    }
}

/// Regularization as configured; a missing width is derived from the clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSetting {
    #[serde(default = "default_scheme")]
    pub scheme: RegularizationScheme,
    /// Gaussian width sigma_E (energy units); default 4 clock momentum spacings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Alpha-integral rule; default range is half the clock period with nodes
    /// spaced at half the resolution limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
}

fn default_scheme() -> RegularizationScheme {
    RegularizationScheme::GaussianBroadening
}

impl Default for RegularizationSetting {
    fn default() -> Self {
        Self {
            scheme: default_scheme(),
            width: None,
            quadrature: None,
        }
    }
}

/// Clock and regularization after `"auto"` and defaults are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ResolvedClock {
    pub n_sites: usize,
    pub period: f64,
    pub width: f64,
    pub scheme: RegularizationScheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
}

impl ResolvedClock {
    pub fn regularization(&self) -> DeltaRegularization {
        DeltaRegularization {
            scheme: self.scheme,
            width: self.width,
            quadrature: self.quadrature,
        }
    }
}

/// Fills in clock size, width and quadrature defaults for a spectrum.
pub fn resolve_clock(eigenvalues: &[f64], clock: &ClockSetting, reg: &RegularizationSetting) -> Result<ResolvedClock> {
    let (lo, hi) = (eigenvalues[0], eigenvalues[eigenvalues.len() - 1]);
    let (n_sites, period, width) = match *clock {
        ClockSetting::Auto(_) => {
            let a = auto_clock(lo, hi, reg.width)?;
            (a.n_sites, a.period, a.width)
        }
        ClockSetting::Grid { n_sites, period } => {
            let grid = ClockGrid::new(n_sites, period)?;
            let w = reg
                .width
                .unwrap_or(DEFAULT_WIDTH_IN_SPACINGS * grid.momentum_spacing());
            (n_sites, period, w)
        }
    };
    let quadrature = match reg.scheme {
        RegularizationScheme::GaussianBroadening => None,
        RegularizationScheme::AlphaQuadrature => Some(reg.quadrature.unwrap_or_else(|| {
            let grid = ClockGrid::new(n_sites, period).expect("checked above");
            let (wlo, whi) = grid.energy_window();
            let reach = wlo.abs().max(whi.abs()) + lo.abs().max(hi.abs());
            let alpha_max = 0.5 * period;
            let n_nodes = ((4.0 * alpha_max * reach / PI).ceil() as usize + 1).max(64);
            QuadratureSpec {
                alpha_max,
                n_nodes,
                window: QuadratureWindow::Gaussian,
            }
        })),
    };
    Ok(ResolvedClock {
        n_sites,
        period,
        width,
        scheme: reg.scheme,
        quadrature,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub beta_grid: Vec<f64>,
    pub z_kernel: Vec<f64>,
    pub z_direct: Vec<f64>,
    pub energy_grid: Vec<f64>,
    pub omega_kernel: Vec<f64>,
    pub omega_direct: Vec<f64>,
    pub sigma_used: f64,
    #[serde(rename = "max_rel_error_Z")]
    pub max_rel_error_z: f64,
    pub max_abs_error_omega: f64,
    /// Largest off-diagonal clock-energy block entry of the projector.
    pub max_offdiagonal_block: f64,
    pub clock: ResolvedClock,
    pub eigenvalues: Vec<f64>,
}

impl EnsembleReport {
    pub fn z_rel_errors(&self) -> Vec<f64> {
        self.z_kernel
            .iter()
            .zip(&self.z_direct)
            .map(|(k, d)| ((k - d) / d).abs())
            .collect()
    }

    pub fn omega_abs_errors(&self) -> Vec<f64> {
        self.omega_kernel
            .iter()
            .zip(&self.omega_direct)
            .map(|(k, d)| (k - d).abs())
            .collect()
    }
}

/// Both projections through the extended-space projector, next to their oracles.
pub fn full_report(
    spec: &QuantumModelSpec,
    clock: &ClockSetting,
    reg: &RegularizationSetting,
    beta_grid: &[f64],
    energy_grid: &EnergyGridSetting,
) -> Result<EnsembleReport> {
    if beta_grid.is_empty() {
        return Err(Error::EmptyGrid("beta"));
    }
    for &b in beta_grid {
        check_beta(b)?;
    }
    if let EnergyGridSetting::Explicit(e) = energy_grid {
        if e.is_empty() {
            return Err(Error::EmptyGrid("energy"));
        }
    }
    let h = build_quantum(spec)?;
    let eigenvalues = eig_hermitian(&h)?.eigenvalues;
    let resolved = resolve_clock(&eigenvalues, clock, reg)?;
    let kernel = ConstrainedKernel::new(h, resolved.n_sites, resolved.period, resolved.regularization())?;
    let sigma = resolved.width;

    let z_kernel = kernel.partition_function(beta_grid, 0)?;
    let z_direct: Vec<f64> = beta_grid
        .iter()
        .map(|&b| canonical_direct(&eigenvalues, b))
        .collect();

    let energies = match energy_grid {
        EnergyGridSetting::Auto(_) => kernel.lattice_energy_grid(&eigenvalues),
        EnergyGridSetting::Explicit(e) => e.clone(),
    };
    if energies.is_empty() {
        return Err(Error::EmptyGrid("energy"));
    }
    let blocks = kernel.energy_blocks()?;
    let omega_kernel = kernel.density_from_blocks(&blocks, &energies)?;
    let omega_direct: Vec<f64> = energies
        .iter()
        .map(|&e| microcanonical_direct(&eigenvalues, e, sigma))
        .collect();

    let mut report = EnsembleReport {
        beta_grid: beta_grid.to_vec(),
        z_kernel,
        z_direct,
        energy_grid: energies,
        omega_kernel,
        omega_direct,
        sigma_used: sigma,
        max_rel_error_z: 0.0,
        max_abs_error_omega: 0.0,
        max_offdiagonal_block: max_offdiagonal_block(&blocks),
        clock: resolved,
        eigenvalues,
    };
    report.max_rel_error_z = report.z_rel_errors().into_iter().fold(0.0, f64::max);
    report.max_abs_error_omega = report.omega_abs_errors().into_iter().fold(0.0, f64::max);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::random_hermitian_matrix;

    fn diag(v: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(v).unwrap()
    }

    #[test]
    fn canonical_examples() {
        assert!((canonical_from_kernel(&diag(&[0.0]), 3.7).unwrap() - 1.0).abs() < 1e-15);
        let z = canonical_from_kernel(&diag(&[0.0, 1.0]), 2f64.ln()).unwrap();
        assert!((z - 1.5).abs() < 1e-14);

        let spec = QuantumModelSpec::TruncatedOscillator { omega: 1.0, n: 40 };
        let h = build_quantum(&spec).unwrap();
        let b: f64 = 1.0;
        let geometric = (-b / 2.0).exp() * (1.0 - (-b * 40.0).exp()) / (1.0 - (-b).exp());
        let z = canonical_from_kernel(&h, b).unwrap();
        assert!(((z - geometric) / geometric).abs() < 1e-10);
        assert!(canonical_from_kernel(&h, 0.0).is_err());
    }

    #[test]
    fn canonical_matches_eigen_sum_for_random_matrix() {
        let h = HermitianOperator::new(random_hermitian_matrix(6, 3, 1.0)).unwrap();
        let lam = eig_hermitian(&h).unwrap().eigenvalues;
        for b in [0.1, 1.0, 4.0] {
            let z = canonical_from_kernel(&h, b).unwrap();
            let d = canonical_direct(&lam, b);
            assert!(((z - d) / d).abs() < 1e-10);
        }
    }

    #[test]
    fn microcanonical_examples() {
        let one = DeltaRegularization::gaussian(1.0);
        let w = microcanonical_from_kernel(&diag(&[0.0]), 0.0, &one).unwrap();
        assert!((w - 0.398_942_280_401_432_7).abs() < 1e-15);

        let narrow = DeltaRegularization::gaussian(0.1);
        let w = microcanonical_from_kernel(&diag(&[0.0, 1.0]), 0.5, &narrow).unwrap();
        let want = 2.0 / (0.1 * (2.0 * PI).sqrt()) * (-12.5f64).exp();
        assert!(((w - want) / want).abs() < 1e-12);

        let h = HermitianOperator::new(random_hermitian_matrix(6, 11, 1.0)).unwrap();
        let lam = eig_hermitian(&h).unwrap().eigenvalues;
        let reg = DeltaRegularization::gaussian(0.25);
        for i in 0..=40 {
            let e = -4.0 + 0.2 * i as f64;
            let got = microcanonical_from_kernel(&h, e, &reg).unwrap();
            assert!((got - microcanonical_direct(&lam, e, 0.25)).abs() < 1e-10);
        }
    }

    #[test]
    fn laplace_examples() {
        let sigma = 0.05;
        let reg = DeltaRegularization::gaussian(sigma);
        let single = diag(&[0.0]);
        let grid = default_energy_grid(&[0.0], sigma);
        let v = laplace_consistency(&single, &reg, 1.0, &grid).unwrap();
        let want = (0.5 * sigma * sigma).exp();
        assert!(((v - want) / want).abs() < 1e-4);
        assert!((want - 1.00125).abs() < 1e-5);

        let two = diag(&[0.0, 1.0]);
        let grid = default_energy_grid(&[0.0, 1.0], sigma);
        let v0 = laplace_consistency(&two, &reg, 0.0, &grid).unwrap();
        assert!((v0 / 2.0 - 1.0).abs() < 1e-3);
        let v = laplace_consistency(&two, &reg, 0.7, &grid).unwrap();
        let want = (1.0 + (-0.7f64).exp()) * (0.5 * 0.49 * sigma * sigma).exp();
        assert!(((v - want) / want).abs() < 1e-4);
    }

    #[test]
    fn laplace_rejects_bad_grids() {
        let sigma = 0.05;
        let reg = DeltaRegularization::gaussian(sigma);
        let two = diag(&[0.0, 1.0]);
        let coarse: Vec<f64> = (0..=30).map(|i| -0.5 + 0.1 * i as f64).collect();
        assert!(matches!(
            laplace_consistency(&two, &reg, 1.0, &coarse),
            Err(Error::GridTooCoarse(_))
        ));
        let short: Vec<f64> = (0..=40).map(|i| 0.0125 * i as f64).collect();
        assert!(matches!(
            laplace_consistency(&two, &reg, 1.0, &short),
            Err(Error::GridTooCoarse(_))
        ));
        let grid = default_energy_grid(&[0.0, 1.0], sigma);
        assert!(matches!(
            laplace_consistency(&two, &reg, 50.0, &grid),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn default_grids() {
        let b = default_beta_grid();
        assert_eq!(b.len(), 16);
        assert!((b[0] - 0.1).abs() < 1e-15 && (b[15] - 10.0).abs() < 1e-12);
        let ratios: Vec<f64> = b.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-12));

        let e = default_energy_grid(&[0.0, 1.0], 0.1);
        assert!(e[0] <= -0.6 + 1e-12 && *e.last().unwrap() >= 1.6 - 1e-12);
        assert!(e.windows(2).all(|w| (w[1] - w[0] - 0.025).abs() < 1e-12));
    }

    #[test]
    fn kernel_scale_matches_zero_step_normalization() {
        let h = diag(&[0.3, 0.9]);
        let a = auto_clock(0.3, 0.9, None).unwrap();
        let k = ConstrainedKernel::new(h, a.n_sites, a.period, DeltaRegularization::gaussian(a.width)).unwrap();
        let k0 = k.clock_time_kernel(0, 0).unwrap();
        let want = identity(2).mapv(|z| z * k.kernel_scale(0));
        assert!(crate::linalg::max_abs_diff(k0.view(), want.view()) < 1e-14);
    }

    #[test]
    fn one_step_kernel_is_scaled_evolution() {
        let h = HermitianOperator::new(random_hermitian_matrix(3, 21, 0.5)).unwrap();
        let lam = eig_hermitian(&h).unwrap().eigenvalues;
        let a = auto_clock(lam[0], lam[2], None).unwrap();
        let k = ConstrainedKernel::new(h.clone(), a.n_sites, a.period, DeltaRegularization::gaussian(a.width)).unwrap();
        let dt = k.grid().spacing();
        for steps in [1usize, 2, 3] {
            let got = k.clock_time_kernel(5, steps).unwrap();
            let want = kernel_clock_time(&h, C64::new(steps as f64 * dt, 0.0))
                .unwrap()
                .mapv(|z| z * k.kernel_scale(steps));
            let rel = crate::linalg::max_abs_diff(got.view(), want.view()) / k.kernel_scale(steps);
            assert!(rel < 1e-12, "{steps}: {rel:e}");
        }
    }

    #[test]
    fn report_two_level_defaults() {
        let spec = QuantumModelSpec::TwoLevel { e0: 0.0, e1: 1.0 };
        let r = full_report(
            &spec,
            &ClockSetting::default(),
            &RegularizationSetting::default(),
            &default_beta_grid(),
            &EnergyGridSetting::default(),
        )
        .unwrap();
        assert!(r.max_rel_error_z < 1e-8, "{:e}", r.max_rel_error_z);
        assert!(r.max_abs_error_omega < 1e-6, "{:e}", r.max_abs_error_omega);
        assert!(r.max_offdiagonal_block < 1e-10);
        assert_eq!(r.z_kernel.len(), 16);
        // the auto energy grid resolves peaks at sigma / 4
        let d = r.energy_grid[1] - r.energy_grid[0];
        assert!((d - r.sigma_used / 4.0).abs() < 1e-12);
    }

    #[test]
    fn report_rejects_empty_grids() {
        let spec = QuantumModelSpec::TwoLevel { e0: 0.0, e1: 1.0 };
        let r = full_report(
            &spec,
            &ClockSetting::default(),
            &RegularizationSetting::default(),
            &[],
            &EnergyGridSetting::default(),
        );
        assert_eq!(r, Err(Error::EmptyGrid("beta")));
        let r = full_report(
            &spec,
            &ClockSetting::default(),
            &RegularizationSetting::default(),
            &[1.0],
            &EnergyGridSetting::Explicit(vec![]),
        );
        assert_eq!(r, Err(Error::EmptyGrid("energy")));
    }

    #[test]
    fn report_rejects_off_lattice_energy() {
        let spec = QuantumModelSpec::TwoLevel { e0: 0.0, e1: 1.0 };
        let r = full_report(
            &spec,
            &ClockSetting::Grid { n_sites: 64, period: 2.0 * PI / 0.05 },
            &RegularizationSetting::default(),
            &[1.0],
            &EnergyGridSetting::Explicit(vec![0.0, 0.51, 1.0]),
        );
        assert!(matches!(r, Err(Error::EnergyOffClockLattice { .. })));
    }

    #[test]
    fn quadrature_scheme_reaches_same_report() {
        let spec = QuantumModelSpec::TwoLevel { e0: 0.0, e1: 1.0 };
        let reg = RegularizationSetting {
            scheme: RegularizationScheme::AlphaQuadrature,
            width: None,
            quadrature: None,
        };
        let r = full_report(&spec, &ClockSetting::default(), &reg, &default_beta_grid(), &EnergyGridSetting::default()).unwrap();
        assert!(r.max_rel_error_z < 1e-8, "{:e}", r.max_rel_error_z);
        assert!(r.max_abs_error_omega < 1e-6, "{:e}", r.max_abs_error_omega);
    }

    #[test]
    fn clock_settings_parse() {
        let a: ClockSetting = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(a, ClockSetting::default());
        let g: ClockSetting = serde_json::from_str(r#"{"n_sites": 8, "period": 3.0}"#).unwrap();
        assert_eq!(g, ClockSetting::Grid { n_sites: 8, period: 3.0 });
        assert!(serde_json::from_str::<ClockSetting>("\"manual\"").is_err());
        let e: EnergyGridSetting = serde_json::from_str("[0.0, 1.0]").unwrap();
        assert_eq!(e, EnergyGridSetting::Explicit(vec![0.0, 1.0]));
    }
}
