//! Periodic auxiliary clock: position grid `T_k = k dT` on a circle of extent
//! `period`, with the conjugate momentum lattice `p_j = (2 pi / period) m_j`.
//!
//! Momenta are stored in FFT order (`m = 0, 1, .., ceil(N/2)-1, -floor(N/2), .., -1`),
//! so the clock-momentum basis is exactly the unitary DFT and
//! `exp(i alpha P_T)` is the circulant shift `|T> -> |T - alpha>` whenever
//! `alpha` is a multiple of the grid spacing.
//!
//! The canonical commutator `[T, P_T] = i` has no finite-dimensional
//! realization; what holds exactly here is the Weyl (shift) form, see
//! [`ClockOperators::shift_sites`] and the tests below.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Spectrum-to-window margin required by the aliasing rule.
pub const ALIASING_MARGIN: f64 = 1.25;
/// Gaussian tail (in widths) kept inside the clock window by [`auto_clock`].
pub const AUTO_TAIL_WIDTHS: f64 = 8.0;
/// Default regularization width in units of the clock momentum spacing.
pub const DEFAULT_WIDTH_IN_SPACINGS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ClockGrid {
    n_sites: usize,
    period: f64,
    t_values: Vec<f64>,
    p_values: Vec<f64>,
}

impl ClockGrid {
    pub fn new(n_sites: usize, period: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidGrid(format!("n_sites must be >= 2, got {n_sites}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidGrid(format!("period must be > 0, got {period}")));
        }
        let spacing = period / n_sites as f64;
        let dp = 2.0 * PI / period;
        let t_values = (0..n_sites).map(|k| k as f64 * spacing).collect();
        let p_values = (0..n_sites)
            .map(|j| dp * fft_index(j, n_sites) as f64)
            .collect();
        Ok(Self {
            n_sites,
            period,
            t_values,
            p_values,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Clock position spacing `period / n_sites`.
    pub fn spacing(&self) -> f64 {
        self.period / self.n_sites as f64
    }

    /// Clock momentum spacing `2 pi / period`.
    pub fn momentum_spacing(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    /// Momentum eigenvalues in FFT order.
    pub fn p_values(&self) -> &[f64] {
        &self.p_values
    }

    /// Clock energies `E_j = -p_j`, same ordering as [`Self::p_values`].
    pub fn clock_energies(&self) -> Vec<f64> {
        self.p_values.iter().map(|p| -p).collect()
    }

    /// Integer label `m_j` of momentum index `j`.
    pub fn momentum_label(&self, j: usize) -> i64 {
        fft_index(j, self.n_sites)
    }

    /// Closed interval of representable clock energies.
    pub fn energy_window(&self) -> (f64, f64) {
        let n = self.n_sites as i64;
        let dp = self.momentum_spacing();
        // m ranges over [-floor(n/2), ceil(n/2) - 1]; E = -p
        let m_lo = -(n / 2);
        let m_hi = (n + 1) / 2 - 1;
        (-(m_hi as f64) * dp, -(m_lo as f64) * dp)
    }

    /// Momentum index `j` whose clock energy equals `energy`, if any.
    pub fn energy_index(&self, energy: f64) -> Option<usize> {
        let dp = self.momentum_spacing();
        let m = (-energy / dp).round();
        if ((-energy / dp) - m).abs() > 1e-9 {
            return None;
        }
        let n = self.n_sites as i64;
        let m = m as i64;
        if m < -(n / 2) || m > (n + 1) / 2 - 1 {
            return None;
        }
        Some(m.rem_euclid(n) as usize)
    }

    /// Clock position eigenvector `|T_k>`.
    pub fn position_state(&self, k: usize) -> Array1<C64> {
        let mut v = Array1::zeros(self.n_sites);
        v[k % self.n_sites] = C64::new(1.0, 0.0);
        v
    }

    /// Enforces the aliasing rule: the spectrum, measured from the window
    /// centre, must fit inside the clock-energy window shrunk by 1.25.
    pub fn check_aliasing(&self, spectrum_min: f64, spectrum_max: f64) -> Result<()> {
        let (lo, hi) = self.energy_window();
        let centre = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let reach = (spectrum_min - centre).abs().max((spectrum_max - centre).abs());
        let required = ALIASING_MARGIN * reach;
        if required > half * (1.0 + 1e-12) {
            return Err(Error::AliasingError {
                spectrum_min,
                spectrum_max,
                required,
                available: half,
            });
        }
        Ok(())
    }
}

fn fft_index(j: usize, n: usize) -> i64 {
    let half_up = n.div_ceil(2);
    if j < half_up {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// `exp(2 pi i r / n)` evaluated on the reduced residue for exact periodicity.
fn root_of_unity(r: i64, n: usize) -> C64 {
    let r = r.rem_euclid(n as i64) as f64;
    let angle = 2.0 * PI * r / n as f64;
    C64::new(angle.cos(), angle.sin())
}

#[derive(Debug, Clone)]
pub struct ClockOperators {
    grid: ClockGrid,
    t_op: CMatrix,
    p_op: CMatrix,
    fourier: CMatrix,
}

impl ClockOperators {
    pub fn grid(&self) -> &ClockGrid {
        &self.grid
    }

    /// Diagonal clock position operator.
    pub fn t_op(&self) -> &CMatrix {
        &self.t_op
    }

    /// `F^dagger diag(p) F`.
    pub fn p_op(&self) -> &CMatrix {
        &self.p_op
    }

    /// Unitary DFT `F[j][k] = exp(-2 pi i j k / N) / sqrt(N)`.
    pub fn fourier(&self) -> &CMatrix {
        &self.fourier
    }

    /// Circulant translation `|T_k> -> |T_{k - steps mod N}>`, i.e.
    /// `exp(i alpha P_T)` for `alpha = steps * dT`.
    pub fn shift_sites(&self, steps: i64) -> CMatrix {
        let n = self.grid.n_sites;
        let mut s = Array2::zeros((n, n));
        for k in 0..n {
            let target = (k as i64 - steps).rem_euclid(n as i64) as usize;
            s[[target, k]] = C64::new(1.0, 0.0);
        }
        s
    }

    /// `exp(i alpha P_T)` for `alpha` an integer multiple of the grid spacing.
    pub fn shift(&self, alpha: f64) -> Result<CMatrix> {
        let steps = alpha / self.grid.spacing();
        let rounded = steps.round();
        if (steps - rounded).abs() > 1e-9 * steps.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "shift {alpha} is not a multiple of the clock spacing {}",
                self.grid.spacing()
            )));
        }
        Ok(self.shift_sites(rounded as i64))
    }
}

/// Clock grid and operators for `n_sites` points on a circle of extent `period`.
pub fn build_clock(n_sites: usize, period: f64) -> Result<(ClockGrid, ClockOperators)> {
    let grid = ClockGrid::new(n_sites, period)?;
    let n = n_sites;
    let norm = 1.0 / (n as f64).sqrt();

    let fourier = Array2::from_shape_fn((n, n), |(j, k)| {
        root_of_unity(-((j * k) as i64), n) * norm
    });

    // p_op[k][k'] = (1/N) sum_j p_j exp(2 pi i j (k - k') / N)
    let mut p_op = Array2::zeros((n, n));
    for k in 0..n {
        for kp in 0..=k {
            let diff = k as i64 - kp as i64;
            let mut acc = C64::new(0.0, 0.0);
            for (j, &p) in grid.p_values.iter().enumerate() {
                acc += root_of_unity(j as i64 * diff, n) * p;
            }
            acc /= n as f64;
            if k == kp {
                p_op[[k, k]] = C64::new(acc.re, 0.0);
            } else {
                p_op[[k, kp]] = acc;
                p_op[[kp, k]] = acc.conj();
            }
        }
    }

    let t_op = CMatrix::from_diag(&Array1::from_iter(
        grid.t_values.iter().map(|&t| C64::new(t, 0.0)),
    ));

    let ops = ClockOperators {
        grid: grid.clone(),
        t_op,
        p_op,
        fourier,
    };
    Ok((grid, ops))
}

/// Clock-momentum eigenbasis as columns; column `j` carries momentum `p_j`
/// (clock energy `-p_j`) and has a real positive `T = 0` component.
pub fn clock_energy_basis(ops: &ClockOperators) -> CMatrix {
    let n = ops.grid.n_sites;
    let norm = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(k, j)| root_of_unity((j * k) as i64, n) * norm)
}

/// Clock parameters chosen from a spectral range by [`auto_clock`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoClock {
    pub n_sites: usize,
    pub period: f64,
    pub width: f64,
}

/// Derives a clock for a spectrum in `[spectrum_min, spectrum_max]`.
///
/// Momentum spacing `dP = R / 8` with `R = max |lambda|` (capped at `width / 4`
/// when a width is supplied), default width `4 dP`. The clock-energy window
/// covers `max(1.25 R, R + 8 width)` on both sides of zero, which satisfies
/// the aliasing rule and keeps every broadened level's Gaussian tail inside
/// the window.
pub fn auto_clock(spectrum_min: f64, spectrum_max: f64, width: Option<f64>) -> Result<AutoClock> {
    if !(spectrum_min.is_finite() && spectrum_max.is_finite()) || spectrum_min > spectrum_max {
        return Err(Error::InvalidArgument(format!(
            "bad spectral range [{spectrum_min}, {spectrum_max}]"
        )));
    }
    let mut reach = spectrum_min.abs().max(spectrum_max.abs());
    if reach < 1e-12 {
        reach = 1.0;
    }
    let mut dp = reach / 8.0;
    if let Some(w) = width {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidRegularization(format!("width must be > 0, got {w}")));
        }
        dp = dp.min(w / DEFAULT_WIDTH_IN_SPACINGS);
    }
    let width = width.unwrap_or(DEFAULT_WIDTH_IN_SPACINGS * dp);
    let half_window = (ALIASING_MARGIN * reach).max(reach + AUTO_TAIL_WIDTHS * width);
    let half_sites = (half_window / dp).ceil() as usize + 2;
    Ok(AutoClock {
        n_sites: 2 * half_sites,
        period: 2.0 * PI / dp,
        width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        dagger, hermiticity_deviation, identity, max_abs_diff, operator_function,
        unitarity_deviation, HermitianOperator,
    };

    #[test]
    fn two_site_momenta() {
        let (grid, _) = build_clock(2, 2.0 * PI).unwrap();
        assert_eq!(grid.p_values(), &[0.0, -1.0]);
    }

    #[test]
    fn odd_grid_momenta_are_symmetric() {
        let grid = ClockGrid::new(7, 3.0).unwrap();
        let mut p = grid.p_values().to_vec();
        p.sort_by(f64::total_cmp);
        for (a, b) in p.iter().zip(p.iter().rev()) {
            assert!((a + b).abs() < 1e-15);
        }
    }

    #[test]
    fn uncertainty_product() {
        for (n, period) in [(2, 1.0), (8, 20.0), (33, 7.5)] {
            let g = ClockGrid::new(n, period).unwrap();
            let prod = g.spacing() * g.momentum_spacing();
            assert!((prod - 2.0 * PI / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(ClockGrid::new(1, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(ClockGrid::new(4, 0.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(ClockGrid::new(4, f64::NAN), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn shift_moves_one_site_down_and_is_periodic() {
        let (grid, ops) = build_clock(4, 2.0 * PI).unwrap();
        let s = ops.shift(grid.spacing()).unwrap();
        for k in 0..4 {
            let moved = s.dot(&grid.position_state(k));
            assert_eq!(moved, grid.position_state((k + 3) % 4));
        }
        let s4 = s.dot(&s).dot(&s).dot(&s);
        assert_eq!(s4, identity(4));
        assert!(ops.shift(0.3 * grid.spacing()).is_err());
    }

    #[test]
    fn spectral_exponential_of_momentum_is_circulant_shift() {
        let (grid, ops) = build_clock(8, 20.0).unwrap();
        let p = HermitianOperator::new(ops.p_op().clone()).unwrap();
        for steps in [-3i64, -1, 1, 2, 5] {
            let alpha = steps as f64 * grid.spacing();
            let spectral = operator_function(&p, |l| C64::new(0.0, alpha * l).exp()).unwrap();
            let circulant = ops.shift_sites(steps);
            let diff = max_abs_diff(spectral.view(), circulant.view());
            assert!(diff < 1e-10, "steps {steps}: {diff:e}");
        }
    }

    #[test]
    fn momentum_operator_is_hermitian() {
        for n in [2, 3, 8, 17] {
            let (_, ops) = build_clock(n, 5.0).unwrap();
            assert!(hermiticity_deviation(ops.p_op().view()) < 1e-12);
        }
    }

    #[test]
    fn energy_basis_diagonalizes_momentum() {
        let (grid, ops) = build_clock(9, 4.0).unwrap();
        let v = clock_energy_basis(&ops);
        assert!(unitarity_deviation(v.view()) < 1e-10);
        for j in 0..9 {
            let col = v.column(j).to_owned();
            let applied = ops.p_op().dot(&col);
            let expected = col.mapv(|z| z * grid.p_values()[j]);
            let diff = applied
                .iter()
                .zip(expected.iter())
                .fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
            assert!(diff < 1e-10);
            assert!(v[[0, j]].im == 0.0 && v[[0, j]].re > 0.0);
        }
        // energy basis is the conjugate-transposed DFT
        assert!(max_abs_diff(v.view(), dagger(ops.fourier().view()).view()) < 1e-15);
    }

    #[test]
    fn energy_basis_overlaps_are_flat() {
        let (_, ops) = build_clock(12, 3.0).unwrap();
        let v = clock_energy_basis(&ops);
        let expected = 1.0 / 12f64.sqrt();
        // <T_k|E_j> is just the (k, j) entry; compute it as an explicit inner product
        let grid = ops.grid();
        for k in 0..12 {
            let t = grid.position_state(k);
            for j in 0..12 {
                let overlap: C64 = t.iter().zip(v.column(j)).map(|(a, b)| a.conj() * b).sum();
                assert!((overlap.norm() - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn weyl_relation_holds_on_every_site() {
        let (grid, ops) = build_clock(10, 6.0).unwrap();
        let theta = 2.0 * PI / grid.period();
        let phase = |shift: f64| {
            CMatrix::from_diag(&Array1::from_iter(
                grid.t_values()
                    .iter()
                    .map(|&t| C64::new(0.0, theta * (t + shift)).exp()),
            ))
        };
        let s = ops.shift_sites(1);
        let lhs = s.dot(&phase(0.0)).dot(&dagger(s.view()));
        let rhs = phase(grid.spacing());
        // interior sites exactly; the wrap site also agrees since theta * period = 2 pi
        for k in 0..grid.n_sites() - 1 {
            assert!((lhs[[k, k]] - rhs[[k, k]]).norm() < 1e-14);
        }
        assert!(max_abs_diff(lhs.view(), rhs.view()) < 1e-12);
    }

    #[test]
    fn energy_window_and_lattice_lookup() {
        let g = ClockGrid::new(4, 2.0 * PI).unwrap();
        // m in {-2, -1, 0, 1} so E in {-1, 0, 1, 2}
        assert_eq!(g.energy_window(), (-1.0, 2.0));
        assert_eq!(g.energy_index(2.0), Some(2));
        assert_eq!(g.energy_index(-1.0), Some(1));
        assert_eq!(g.energy_index(3.0), None);
        assert_eq!(g.energy_index(0.5), None);
        let e = g.clock_energies();
        for energy in [-1.0, 0.0, 1.0, 2.0] {
            assert_eq!(e[g.energy_index(energy).unwrap()], energy);
        }
    }

    #[test]
    fn aliasing_rule() {
        // window E in {-1, 0, 1} * dp, dp = 2 pi / period
        let g = ClockGrid::new(3, 2.0 * PI / 1.25).unwrap();
        assert!(g.check_aliasing(0.0, 1.0).is_ok());
        assert!(matches!(
            g.check_aliasing(0.0, 1.01),
            Err(Error::AliasingError { .. })
        ));
    }

    #[test]
    fn auto_clock_satisfies_aliasing_and_tails() {
        for (lo, hi, w) in [(0.0, 1.0, None), (0.5, 7.5, None), (-5.0, 3.0, Some(0.3)), (0.0, 0.0, None)] {
            let a = auto_clock(lo, hi, w).unwrap();
            let g = ClockGrid::new(a.n_sites, a.period).unwrap();
            g.check_aliasing(lo, hi).unwrap();
            let (elo, ehi) = g.energy_window();
            assert!(elo <= lo - AUTO_TAIL_WIDTHS * a.width);
            assert!(ehi >= hi + AUTO_TAIL_WIDTHS * a.width);
            let ratio = a.width / g.momentum_spacing();
            assert!(ratio >= DEFAULT_WIDTH_IN_SPACINGS - 1e-12);
        }
    }
}
