//! The constraint `C = P_T (x) 1 + 1 (x) H` on the extended space and its
//! regularized delta projector.
//!
//! `delta_reg(C)` is available by two routes that share nothing but the
//! eigenbasis of `C`:
//!
//! * spectral broadening, `g_sigma(C)` with
//!   `g_sigma(x) = exp(-x^2 / 2 sigma^2) / (sigma sqrt(2 pi))`;
//! * the constraint integral `(1/2pi) int d(alpha) W(alpha) exp(i alpha C)`
//!   on a trapezoid rule, with the Gaussian window
//!   `W(alpha) = exp(-alpha^2 sigma^2 / 2)` whose Fourier transform is
//!   exactly `g_sigma`.
//!
//! Index convention on the extended space: clock slow, system fast,
//! `(k, s) -> k * system_dim + s`.

use std::f64::consts::PI;

use ndarray::{s, Array1, Array2};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::clock::ClockOperators;
use crate::error::{Error, Result};
use crate::linalg::{
    dagger, eig_hermitian, eig_hermitian_matrix, hermiticity_deviation, CMatrix,
    HermitianOperator, SpectralDecomposition, C64, DEFAULT_DIMENSION_CAP,
};

/// An operator on clock (x) system.
#[derive(Debug, Clone)]
pub struct ExtendedOperator {
    clock_dim: usize,
    system_dim: usize,
    clock_period: Option<f64>,
    entries: CMatrix,
}

impl ExtendedOperator {
    pub fn new(clock_dim: usize, system_dim: usize, entries: CMatrix) -> Result<Self> {
        let dim = clock_dim * system_dim;
        if entries.dim() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                context: "ExtendedOperator (clock_dim * system_dim)",
                expected: dim,
                found: entries.nrows(),
            });
        }
        Ok(Self {
            clock_dim,
            system_dim,
            clock_period: None,
            entries,
        })
    }

    /// Same as [`Self::new`], remembering the clock extent so that quadrature
    /// ranges can be checked against it.
    pub fn with_clock_period(mut self, period: f64) -> Self {
        self.clock_period = Some(period);
        self
    }

    pub fn clock_dim(&self) -> usize {
        self.clock_dim
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn dim(&self) -> usize {
        self.clock_dim * self.system_dim
    }

    pub fn clock_period(&self) -> Option<f64> {
        self.clock_period
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// System-space block between clock indices `row` and `col`.
    pub fn block(&self, row: usize, col: usize) -> CMatrix {
        let n = self.system_dim;
        self.entries
            .slice(s![row * n..(row + 1) * n, col * n..(col + 1) * n])
            .to_owned()
    }

    fn eig(&self) -> Result<SpectralDecomposition> {
        let dev = hermiticity_deviation(self.entries.view());
        if !(dev <= crate::linalg::HERMITICITY_TOL) {
            return Err(Error::NonHermitianInput { deviation: dev });
        }
        eig_hermitian_matrix(self.entries.view())
    }

    fn with_entries(&self, entries: CMatrix) -> Self {
        Self {
            clock_dim: self.clock_dim,
            system_dim: self.system_dim,
            clock_period: self.clock_period,
            entries,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum RegularizationScheme {
    GaussianBroadening,
    AlphaQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureWindow {
    #[default]
    Gaussian,
}

/// Trapezoid rule for the constraint integral over `[-alpha_max, alpha_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Half-range of the alpha integral (time units); must not exceed half the clock period.
    pub alpha_max: f64,
    /// Number of trapezoid nodes including both endpoints (>= 8).
    pub n_nodes: usize,
    #[serde(default)]
    pub window: QuadratureWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRegularization {
    pub scheme: RegularizationScheme,
    /// Gaussian width sigma_E (energy units).
    pub width: f64,
    pub quadrature: Option<QuadratureSpec>,
}

impl DeltaRegularization {
    pub fn gaussian(width: f64) -> Self {
        Self {
            scheme: RegularizationScheme::GaussianBroadening,
            width,
            quadrature: None,
        }
    }

    pub fn alpha_quadrature(width: f64, alpha_max: f64, n_nodes: usize) -> Self {
        Self {
            scheme: RegularizationScheme::AlphaQuadrature,
            width,
            quadrature: Some(QuadratureSpec {
                alpha_max,
                n_nodes,
                window: QuadratureWindow::Gaussian,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidRegularization(format!(
                "width must be > 0, got {}",
                self.width
            )));
        }
        if self.scheme == RegularizationScheme::AlphaQuadrature {
            let q = self.quadrature.ok_or_else(|| {
                Error::InvalidRegularization("alpha_quadrature needs quadrature parameters".into())
            })?;
            if q.n_nodes < 8 {
                return Err(Error::InvalidRegularization(format!(
                    "quadrature needs >= 8 nodes, got {}",
                    q.n_nodes
                )));
            }
            if !(q.alpha_max > 0.0 && q.alpha_max.is_finite()) {
                return Err(Error::InvalidRegularization(format!(
                    "alpha_max must be > 0, got {}",
                    q.alpha_max
                )));
            }
        }
        Ok(())
    }
}

/// Normalized Gaussian `exp(-x^2 / 2 sigma^2) / (sigma sqrt(2 pi))`.
pub fn gaussian_delta(x: f64, sigma: f64) -> f64 {
    let u = x / sigma;
    (-0.5 * u * u).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Assembles `P_T (x) 1 + 1 (x) H` after checking the aliasing rule.
pub fn build_constraint(clock: &ClockOperators, h: &HermitianOperator) -> Result<ExtendedOperator> {
    let grid = clock.grid();
    let spectrum = eig_hermitian(h)?.eigenvalues;
    grid.check_aliasing(spectrum[0], spectrum[spectrum.len() - 1])?;

    let nt = grid.n_sites();
    let ns = h.dim();
    let dim = nt * ns;
    if dim > DEFAULT_DIMENSION_CAP {
        return Err(Error::DimensionOverflow {
            dim,
            cap: DEFAULT_DIMENSION_CAP,
        });
    }
    let p = clock.p_op();
    let hm = h.entries();
    let entries = Array2::from_shape_fn((dim, dim), |(r, c)| {
        let (k, s) = (r / ns, r % ns);
        let (kp, sp) = (c / ns, c % ns);
        let mut z = if s == sp { p[[k, kp]] } else { C64::new(0.0, 0.0) };
        if k == kp {
            z += hm[[s, sp]];
        }
        z
    });
    Ok(ExtendedOperator::new(nt, ns, entries)?.with_clock_period(grid.period()))
}

/// `g_sigma(C)` through the spectral decomposition of `C`.
pub fn projector_spectral(c: &ExtendedOperator, reg: &DeltaRegularization) -> Result<ExtendedOperator> {
    reg.validate()?;
    if reg.scheme != RegularizationScheme::GaussianBroadening {
        return Err(Error::InvalidRegularization(
            "projector_spectral expects gaussian_broadening".into(),
        ));
    }
    let sigma = reg.width;
    let sd = c.eig()?;
    let out = sd.apply(|x| C64::new(gaussian_delta(x, sigma), 0.0));
    Ok(c.with_entries(out))
}

/// Nodes and trapezoid weights on `[-alpha_max, alpha_max]`.
pub fn trapezoid_nodes(alpha_max: f64, n_nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * alpha_max / (n_nodes - 1) as f64;
    let nodes = (0..n_nodes)
        .map(|m| -alpha_max + m as f64 * h)
        .collect();
    let weights = (0..n_nodes)
        .map(|m| if m == 0 || m == n_nodes - 1 { 0.5 * h } else { h })
        .collect();
    (nodes, weights)
}

/// `(1/2pi) sum_m w_m exp(-alpha_m^2 sigma^2 / 2) exp(i alpha_m C)`.
pub fn projector_quadrature(c: &ExtendedOperator, reg: &DeltaRegularization) -> Result<ExtendedOperator> {
    reg.validate()?;
    if reg.scheme != RegularizationScheme::AlphaQuadrature {
        return Err(Error::InvalidRegularization(
            "projector_quadrature expects alpha_quadrature".into(),
        ));
    }
    let q = reg.quadrature.expect("validated");
    if let Some(period) = c.clock_period() {
        if q.alpha_max > 0.5 * period * (1.0 + 1e-12) {
            return Err(Error::InvalidRegularization(format!(
                "alpha_max {} exceeds half the clock period {}",
                q.alpha_max,
                0.5 * period
            )));
        }
    }
    let sd = c.eig()?;
    let reach = sd
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    let (nodes, weights) = trapezoid_nodes(q.alpha_max, q.n_nodes);
    let spacing = 2.0 * q.alpha_max / (q.n_nodes - 1) as f64;
    if reach > 0.0 && spacing > PI / reach {
        return Err(Error::QuadratureUnderresolved {
            spacing,
            limit: PI / reach,
        });
    }

    let sigma = reg.width;
    let window: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(a, w)| w * (-0.5 * a * a * sigma * sigma).exp() / (2.0 * PI))
        .collect();
    let values: Vec<C64> = sd
        .eigenvalues
        .iter()
        .map(|&x| {
            nodes
                .iter()
                .zip(&window)
                .map(|(a, w)| C64::new(0.0, a * x).exp() * w)
                .sum()
        })
        .collect();
    Ok(c.with_entries(sd.apply_weights(&values)))
}

/// `exp(-i dT H)` with `dT = T_f - T_i`; `dT = -i beta` gives `exp(-beta H)`.
pub fn kernel_clock_time(h: &HermitianOperator, dt: C64) -> Result<CMatrix> {
    let sd = eig_hermitian(h)?;
    Ok(sd.apply(|l| (C64::new(0.0, -1.0) * dt * l).exp()))
}

/// Spectral shell operator `g_sigma(H - E)`.
pub fn kernel_clock_energy(h: &HermitianOperator, energy: f64, reg: &DeltaRegularization) -> Result<CMatrix> {
    reg.validate()?;
    let sigma = reg.width;
    let sd = eig_hermitian(h)?;
    Ok(sd.apply(|l| C64::new(gaussian_delta(l - energy, sigma), 0.0)))
}

/// Partial contraction `<bra| X |ket>` over the clock factor.
pub fn contract_clock(op: &ExtendedOperator, bra: &Array1<C64>, ket: &Array1<C64>) -> Result<CMatrix> {
    let nt = op.clock_dim();
    for v in [bra, ket] {
        if v.len() != nt {
            return Err(Error::DimensionMismatch {
                context: "contract_clock (clock vector)",
                expected: nt,
                found: v.len(),
            });
        }
    }
    let ns = op.system_dim();
    let x = op.entries();
    let mut out = CMatrix::zeros((ns, ns));
    for k in 0..nt {
        let b = bra[k].conj();
        if b == C64::new(0.0, 0.0) {
            continue;
        }
        for kp in 0..nt {
            let w = b * ket[kp];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            let block = x.slice(s![k * ns..(k + 1) * ns, kp * ns..(kp + 1) * ns]);
            out.scaled_add(w, &block);
        }
    }
    Ok(out)
}

/// `(V^dagger (x) 1) X (V (x) 1)` for a clock-space unitary `V` (columns = new basis).
pub fn to_clock_basis(op: &ExtendedOperator, basis: &CMatrix) -> Result<ExtendedOperator> {
    let nt = op.clock_dim();
    if basis.dim() != (nt, nt) {
        return Err(Error::DimensionMismatch {
            context: "to_clock_basis (basis)",
            expected: nt,
            found: basis.nrows(),
        });
    }
    let ns = op.system_dim();
    let n = nt * ns;
    let vd = dagger(basis.view());
    // (V^dagger (x) 1) Y, with Y viewed as an nt x (ns * n) matrix
    let left = |y: CMatrix| -> CMatrix {
        let y = y
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((nt, ns * n))
            .expect("contiguous");
        vd.dot(&y).into_shape_with_order((n, n)).expect("contiguous")
    };
    let a = left(op.entries().clone());
    let b = left(dagger(a.view()));
    Ok(op.with_entries(dagger(b.view())))
}
