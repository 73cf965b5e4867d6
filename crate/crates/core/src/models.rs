//! Catalog of quantum Hamiltonians and classical potentials.
//!
//! Units: hbar = 1, k_B = 1 throughout.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator, C64};

fn default_mass() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    1.0
}

fn default_dof() -> usize {
    1
}

/// Quantum model selector. Energies are in the model's own units (hbar = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuantumModelSpec {
    /// Harmonic oscillator truncated to its lowest `n` levels: omega (n + 1/2).
    TruncatedOscillator {
        /// Angular frequency (energy units).
        omega: f64,
        /// Number of retained levels.
        n: usize,
    },
    /// diag(e0, e1).
    TwoLevel {
        /// Lower level energy.
        e0: f64,
        /// Upper level energy.
        e1: f64,
    },
    /// Infinite square well, levels k^2 pi^2 / (2 m L^2) for k = 1..=n.
    ParticleInBox {
        /// Box length L (length units).
        length: f64,
        /// Number of retained levels.
        n: usize,
        /// Particle mass.
        #[serde(default = "default_mass")]
        mass: f64,
    },
    /// GUE-style draw from a ChaCha8 stream (see [`random_hermitian_matrix`]).
    RandomHermitian {
        /// Matrix dimension.
        n: usize,
        /// PRNG seed; falls back to the run seed when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        /// Overall energy scale applied to every entry.
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// Arbitrary real spectrum on the diagonal.
    ExplicitDiagonal {
        /// Level energies.
        levels: Vec<f64>,
    },
}

impl QuantumModelSpec {
    /// Fills in a missing random seed; other variants are returned unchanged.
    pub fn with_default_seed(&self, run_seed: u64) -> Self {
        match self {
            QuantumModelSpec::RandomHermitian { n, seed: None, scale } => {
                QuantumModelSpec::RandomHermitian {
                    n: *n,
                    seed: Some(run_seed),
                    scale: *scale,
                }
            }
            other => other.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive_dim = |n: usize, what: &str| {
            if n == 0 {
                Err(Error::InvalidSpec(format!("{what}: dimension must be >= 1")))
            } else {
                Ok(())
            }
        };
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{what} must be finite")))
            }
        };
        match *self {
            QuantumModelSpec::TruncatedOscillator { omega, n } => {
                positive_dim(n, "truncated_oscillator")?;
                if !(omega > 0.0 && omega.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "truncated_oscillator: omega must be > 0, got {omega}"
                    )));
                }
            }
            QuantumModelSpec::TwoLevel { e0, e1 } => {
                finite(e0, "two_level e0")?;
                finite(e1, "two_level e1")?;
            }
            QuantumModelSpec::ParticleInBox { length, n, mass } => {
                positive_dim(n, "particle_in_box")?;
                if !(length > 0.0 && length.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "particle_in_box: length must be > 0, got {length}"
                    )));
                }
                if !(mass > 0.0 && mass.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "particle_in_box: mass must be > 0, got {mass}"
                    )));
                }
            }
            QuantumModelSpec::RandomHermitian { n, scale, .. } => {
                positive_dim(n, "random_hermitian")?;
                finite(scale, "random_hermitian scale")?;
            }
            QuantumModelSpec::ExplicitDiagonal { ref levels } => {
                positive_dim(levels.len(), "explicit_diagonal")?;
                for &l in levels {
                    finite(l, "explicit_diagonal level")?;
                }
            }
        }
        Ok(())
    }
}

/// Builds the Hamiltonian matrix for a catalog model.
pub fn build_quantum(spec: &QuantumModelSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    match *spec {
        QuantumModelSpec::TruncatedOscillator { omega, n } => {
            let levels: Vec<f64> = (0..n).map(|k| omega * (k as f64 + 0.5)).collect();
            HermitianOperator::from_real_diagonal(&levels)
        }
        QuantumModelSpec::TwoLevel { e0, e1 } => HermitianOperator::from_real_diagonal(&[e0, e1]),
        QuantumModelSpec::ParticleInBox { length, n, mass } => {
            let unit = std::f64::consts::PI.powi(2) / (2.0 * mass * length * length);
            let levels: Vec<f64> = (1..=n).map(|k| unit * (k * k) as f64).collect();
            HermitianOperator::from_real_diagonal(&levels)
        }
        QuantumModelSpec::RandomHermitian { n, seed, scale } => {
            HermitianOperator::new(random_hermitian_matrix(n, seed.unwrap_or(0), scale))
        }
        QuantumModelSpec::ExplicitDiagonal { ref levels } => {
            HermitianOperator::from_real_diagonal(levels)
        }
    }
}

/// Reproducible GUE-style Hermitian matrix.
///
/// Stream: `ChaCha8Rng::seed_from_u64(seed)`, standard normals from
/// `rand_distr::StandardNormal`. Draw order is row-major over the upper
/// triangle: for each row `i`, first the diagonal `N(0,1)`, then for each
/// `j > i` the real and imaginary parts, each `N(0,1)/sqrt(2)`. Every entry is
/// multiplied by `scale`; the lower triangle is the conjugate mirror.
pub fn random_hermitian_matrix(n: usize, seed: u64, scale: f64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut m = Array2::zeros((n, n));
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        m[[i, i]] = C64::new(scale * normal(), 0.0);
        for j in i + 1..n {
            let re = normal() * inv_sqrt2;
            let im = normal() * inv_sqrt2;
            let z = C64::new(scale * re, scale * im);
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
        }
    }
    m
}

/// A potential energy surface V(q) with its gradient.
pub trait Potential: Send + Sync + fmt::Debug {
    fn value(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64], grad: &mut [f64]);
}

/// Separable catalog potentials: V(q) = sum_i v(q_i).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogPotential {
    Free,
    /// v = m omega^2 q^2 / 2
    Harmonic { mass: f64, omega: f64 },
    /// v = height ((q/a)^2 - 1)^2, minima at +-a, barrier `height` at 0.
    DoubleWell { height: f64, minimum: f64 },
    /// v = depth (1 - exp(-k (q - c)))^2
    Morse {
        depth: f64,
        stiffness: f64,
        center: f64,
    },
}

impl CatalogPotential {
    fn value_1d(&self, x: f64) -> f64 {
        match *self {
            CatalogPotential::Free => 0.0,
            CatalogPotential::Harmonic { mass, omega } => 0.5 * mass * omega * omega * x * x,
            CatalogPotential::DoubleWell { height, minimum } => {
                let u = x / minimum;
                let w = u * u - 1.0;
                height * w * w
            }
            CatalogPotential::Morse {
                depth,
                stiffness,
                center,
            } => {
                let w = 1.0 - (-stiffness * (x - center)).exp();
                depth * w * w
            }
        }
    }

    fn derivative_1d(&self, x: f64) -> f64 {
        match *self {
            CatalogPotential::Free => 0.0,
            CatalogPotential::Harmonic { mass, omega } => mass * omega * omega * x,
            CatalogPotential::DoubleWell { height, minimum } => {
                let u = x / minimum;
                4.0 * height * u * (u * u - 1.0) / minimum
            }
            CatalogPotential::Morse {
                depth,
                stiffness,
                center,
            } => {
                let ex = (-stiffness * (x - center)).exp();
                2.0 * depth * stiffness * ex * (1.0 - ex)
            }
        }
    }
}

impl Potential for CatalogPotential {
    fn value(&self, q: &[f64]) -> f64 {
        q.iter().map(|&x| self.value_1d(x)).sum()
    }

    fn gradient(&self, q: &[f64], grad: &mut [f64]) {
        for (g, &x) in grad.iter_mut().zip(q) {
            *g = self.derivative_1d(x);
        }
    }
}

/// Classical system selector for configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassicalModelSpec {
    /// V = 0.
    FreeParticle {
        #[serde(default = "default_dof")]
        dof: usize,
        #[serde(default = "default_mass")]
        mass: f64,
    },
    /// V = m omega^2 |q|^2 / 2.
    Harmonic {
        #[serde(default = "default_dof")]
        dof: usize,
        #[serde(default = "default_mass")]
        mass: f64,
        /// Angular frequency.
        omega: f64,
    },
    /// V = sum_i height ((q_i/minimum)^2 - 1)^2.
    DoubleWell {
        #[serde(default = "default_dof")]
        dof: usize,
        #[serde(default = "default_mass")]
        mass: f64,
        /// Barrier height at q = 0 (energy units).
        height: f64,
        /// Position of the minima (length units).
        minimum: f64,
    },
    /// V = sum_i depth (1 - exp(-stiffness (q_i - center)))^2.
    Morse {
        #[serde(default = "default_dof")]
        dof: usize,
        #[serde(default = "default_mass")]
        mass: f64,
        /// Well depth (energy units).
        depth: f64,
        /// Inverse range (1 / length units).
        stiffness: f64,
        /// Equilibrium position.
        #[serde(default)]
        center: f64,
    },
}

/// H(q, p) = |p|^2 / (2m) + V(q) on D degrees of freedom.
#[derive(Debug, Clone)]
pub struct ClassicalSystem {
    dof: usize,
    mass: f64,
    potential: Arc<dyn Potential>,
}

impl ClassicalSystem {
    pub fn new(dof: usize, mass: f64, potential: Arc<dyn Potential>) -> Result<Self> {
        if dof == 0 {
            return Err(Error::InvalidSpec("classical system needs dof >= 1".into()));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidSpec(format!("mass must be > 0, got {mass}")));
        }
        Ok(Self {
            dof,
            mass,
            potential,
        })
    }

    pub fn from_spec(spec: &ClassicalModelSpec) -> Result<Self> {
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{what} must be > 0, got {x}")))
            }
        };
        let (dof, mass, pot) = match *spec {
            ClassicalModelSpec::FreeParticle { dof, mass } => (dof, mass, CatalogPotential::Free),
            ClassicalModelSpec::Harmonic { dof, mass, omega } => {
                positive(omega, "omega")?;
                (dof, mass, CatalogPotential::Harmonic { mass, omega })
            }
            ClassicalModelSpec::DoubleWell {
                dof,
                mass,
                height,
                minimum,
            } => {
                positive(height, "height")?;
                positive(minimum, "minimum")?;
                (dof, mass, CatalogPotential::DoubleWell { height, minimum })
            }
            ClassicalModelSpec::Morse {
                dof,
                mass,
                depth,
                stiffness,
                center,
            } => {
                positive(depth, "depth")?;
                positive(stiffness, "stiffness")?;
                (
                    dof,
                    mass,
                    CatalogPotential::Morse {
                        depth,
                        stiffness,
                        center,
                    },
                )
            }
        };
        Self::new(dof, mass, Arc::new(pot))
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn potential(&self, q: &[f64]) -> f64 {
        self.potential.value(q)
    }

    pub fn grad_potential(&self, q: &[f64], grad: &mut [f64]) {
        self.potential.gradient(q, grad)
    }

    pub fn kinetic(&self, p: &[f64]) -> f64 {
        p.iter().map(|x| x * x).sum::<f64>() / (2.0 * self.mass)
    }

    pub(crate) fn energy_unchecked(&self, q: &[f64], p: &[f64]) -> f64 {
        self.kinetic(p) + self.potential(q)
    }

    pub(crate) fn check_dims(&self, v: &[f64], context: &'static str) -> Result<()> {
        if v.len() != self.dof {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dof,
                found: v.len(),
            });
        }
        Ok(())
    }
}

/// H(p, q) = sum_i p_i^2 / 2m + V(q).
pub fn hamiltonian_value(sys: &ClassicalSystem, q: &[f64], p: &[f64]) -> Result<f64> {
    sys.check_dims(q, "hamiltonian_value (q)")?;
    sys.check_dims(p, "hamiltonian_value (p)")?;
    Ok(sys.energy_unchecked(q, p))
}

/// Worst relative discrepancy between `grad_potential` and central finite
/// differences of `potential` over the given sample points.
///
/// Relative to `max(|grad|, 1)` so that near-zero gradients are compared absolutely.
pub fn gradient_consistency(sys: &ClassicalSystem, points: &[Vec<f64>]) -> f64 {
    let d = sys.dof();
    let mut grad = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for q in points {
        sys.grad_potential(q, &mut grad);
        let mut probe = q.clone();
        for i in 0..d {
            let h = 1e-5 * q[i].abs().max(1.0);
            probe[i] = q[i] + h;
            let up = sys.potential(&probe);
            probe[i] = q[i] - h;
            let down = sys.potential(&probe);
            probe[i] = q[i];
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(h: &HermitianOperator) -> Vec<f64> {
        h.entries().diag().iter().map(|z| z.re).collect()
    }

    #[test]
    fn oscillator_levels() {
        let h = build_quantum(&QuantumModelSpec::TruncatedOscillator { omega: 1.0, n: 3 }).unwrap();
        assert_eq!(diag(&h), vec![0.5, 1.5, 2.5]);
        let h = build_quantum(&QuantumModelSpec::TruncatedOscillator { omega: 0.3, n: 20 }).unwrap();
        for w in diag(&h).windows(2) {
            assert!((w[1] - w[0] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level() {
        let h = build_quantum(&QuantumModelSpec::TwoLevel { e0: 0.0, e1: 1.0 }).unwrap();
        assert_eq!(diag(&h), vec![0.0, 1.0]);
    }

    #[test]
    fn box_levels_scale_inverse_square() {
        let spec = |length| QuantumModelSpec::ParticleInBox {
            length,
            n: 5,
            mass: 1.0,
        };
        let a = diag(&build_quantum(&spec(1.0)).unwrap());
        let b = diag(&build_quantum(&spec(2.0)).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x / 4.0 - y).abs() < 1e-12 * x);
        }
        assert!((a[0] - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_is_reproducible() {
        let spec = QuantumModelSpec::RandomHermitian {
            n: 4,
            seed: Some(42),
            scale: 1.0,
        };
        let a = build_quantum(&spec).unwrap();
        let b = build_quantum(&spec).unwrap();
        let bytes = |h: &HermitianOperator| -> Vec<u64> {
            h.entries()
                .iter()
                .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
                .collect()
        };
        assert_eq!(bytes(&a), bytes(&b));
        let other = build_quantum(&QuantumModelSpec::RandomHermitian {
            n: 4,
            seed: Some(43),
            scale: 1.0,
        })
        .unwrap();
        assert_ne!(bytes(&a), bytes(&other));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            QuantumModelSpec::TruncatedOscillator { omega: 0.0, n: 3 },
            QuantumModelSpec::TruncatedOscillator { omega: 1.0, n: 0 },
            QuantumModelSpec::ParticleInBox {
                length: -1.0,
                n: 2,
                mass: 1.0,
            },
            QuantumModelSpec::ExplicitDiagonal { levels: vec![] },
        ];
        for spec in bad {
            assert!(matches!(build_quantum(&spec), Err(Error::InvalidSpec(_))), "{spec:?}");
        }
    }

    #[test]
    fn hamiltonian_values() {
        let h = ClassicalSystem::from_spec(&ClassicalModelSpec::Harmonic {
            dof: 1,
            mass: 1.0,
            omega: 1.0,
        })
        .unwrap();
        assert_eq!(hamiltonian_value(&h, &[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(hamiltonian_value(&h, &[1.0], &[1.0]).unwrap(), 1.0);
        assert!(matches!(
            hamiltonian_value(&h, &[1.0, 2.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));

        let dw = ClassicalSystem::from_spec(&ClassicalModelSpec::DoubleWell {
            dof: 1,
            mass: 1.0,
            height: 1.0,
            minimum: 1.0,
        })
        .unwrap();
        let (q, p) = (0.3_f64, 0.4_f64);
        let direct = p * p / 2.0 + (q * q - 1.0).powi(2);
        assert!((hamiltonian_value(&dw, &[q], &[p]).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn catalog_gradients_match_finite_differences() {
        let specs = [
            ClassicalModelSpec::FreeParticle { dof: 2, mass: 1.0 },
            ClassicalModelSpec::Harmonic {
                dof: 2,
                mass: 1.5,
                omega: 0.7,
            },
            ClassicalModelSpec::DoubleWell {
                dof: 2,
                mass: 1.0,
                height: 1.0,
                minimum: 1.0,
            },
            ClassicalModelSpec::Morse {
                dof: 2,
                mass: 1.0,
                depth: 2.0,
                stiffness: 1.3,
                center: 0.5,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                (0..2)
                    .map(|_| 1.5 * { let z: f64 = StandardNormal.sample(&mut rng); z })
                    .collect()
            })
            .collect();
        for spec in specs {
            let sys = ClassicalSystem::from_spec(&spec).unwrap();
            let worst = gradient_consistency(&sys, &points);
            assert!(worst < 1e-6, "{spec:?}: {worst:e}");
        }
    }
}
