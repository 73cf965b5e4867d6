use std::f64::consts::PI;

use ndarray::Array1;
use proptest::prelude::*;

use constraint_ensembles::classical::{
    evaluate_actions, integrate_parametrized, ExtendedPhasePoint, LapseProfile,
};
use constraint_ensembles::clock::{auto_clock, build_clock};
use constraint_ensembles::ensembles::{canonical_from_kernel, microcanonical_from_kernel, ConstrainedKernel};
use constraint_ensembles::linalg::{
    dagger, eig_hermitian, identity, max_abs_diff, operator_function, tensor_product, trace,
    unitarity_deviation, CMatrix, HermitianOperator, C64,
};
use constraint_ensembles::models::{
    build_quantum, gradient_consistency, random_hermitian_matrix, ClassicalModelSpec, ClassicalSystem,
    QuantumModelSpec,
};
use constraint_ensembles::projector::{gaussian_delta, kernel_clock_energy, DeltaRegularization};

fn random_h(n: usize, seed: u64, scale: f64) -> HermitianOperator {
    HermitianOperator::new(random_hermitian_matrix(n, seed, scale)).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diag(&Array1::from_iter(values.iter().map(|&x| C64::new(x, 0.0))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boltzmann_operator_spectrum(n in 1usize..7, seed in any::<u64>(), beta in 0.01f64..3.0) {
        let h = random_h(n, seed, 1.0);
        let lambdas = eig_hermitian(&h).unwrap().eigenvalues;
        let f = operator_function(&h, |x| C64::new((-beta * x).exp(), 0.0)).unwrap();
        // symmetrize away roundoff; entries reach e^{3 beta} so the 1e-12 absolute check is too strict here
        let fh = (&f + &dagger(f.view())).mapv(|z| z * 0.5);
        let fe = sorted(eig_hermitian(&HermitianOperator::new(fh).unwrap()).unwrap().eigenvalues);
        let expected = sorted(lambdas.iter().map(|l| (-beta * l).exp()).collect());
        for (a, b) in fe.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        let z: f64 = expected.iter().sum();
        prop_assert!((trace(&f).re - z).abs() <= 1e-10 * z);
    }

    #[test]
    fn phase_operator_is_unitary(n in 1usize..7, seed in any::<u64>(), alpha in -20.0f64..20.0) {
        let h = random_h(n, seed, 1.0);
        let g = operator_function(&h, |x| C64::new(0.0, alpha * x).exp()).unwrap();
        prop_assert!(unitarity_deviation(g.view()) < 1e-10);
    }

    #[test]
    fn tensor_product_is_associative(
        a in prop::collection::vec(-9i32..10, 1..4),
        b in prop::collection::vec(-9i32..10, 1..4),
        c in prop::collection::vec(-9i32..10, 1..4),
    ) {
        // integer entries keep every product exact, isolating the index layout
        let d = |v: &[i32]| diag(&v.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let (a, b, c) = (d(&a), d(&b), d(&c));
        let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
        let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(max_abs_diff(left.view(), right.view()), 0.0);
    }

    #[test]
    fn oscillator_spacing(omega in 0.05f64..20.0, n in 2usize..12) {
        let h = build_quantum(&QuantumModelSpec::TruncatedOscillator { omega, n }).unwrap();
        let e = sorted(eig_hermitian(&h).unwrap().eigenvalues);
        for w in e.windows(2) {
            prop_assert!((w[1] - w[0] - omega).abs() < 1e-12 * omega.max(1.0) * n as f64);
        }
    }

    #[test]
    fn box_levels_scale_inverse_square(length in 0.2f64..5.0, n in 1usize..9, mass in 0.3f64..4.0) {
        let levels = |l: f64| {
            let h = build_quantum(&QuantumModelSpec::ParticleInBox { length: l, n, mass }).unwrap();
            sorted(eig_hermitian(&h).unwrap().eigenvalues)
        };
        for (a, b) in levels(length).iter().zip(levels(2.0 * length)) {
            prop_assert!((b - a / 4.0).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn potentials_match_finite_differences(
        kind in 0usize..4,
        dof in 1usize..4,
        seed in prop::collection::vec(-2.0f64..2.0, 60),
    ) {
        let spec = match kind {
            0 => ClassicalModelSpec::FreeParticle { dof, mass: 1.3 },
            1 => ClassicalModelSpec::Harmonic { dof, mass: 0.7, omega: 1.9 },
            2 => ClassicalModelSpec::DoubleWell { dof, mass: 1.0, height: 0.8, minimum: 1.1 },
            _ => ClassicalModelSpec::Morse { dof, mass: 1.0, depth: 2.0, stiffness: 1.2, center: 0.3 },
        };
        let sys = ClassicalSystem::from_spec(&spec).unwrap();
        let points: Vec<Vec<f64>> = (0..20).map(|i| (0..dof).map(|d| seed[(3 * i + d) % 60]).collect()).collect();
        prop_assert!(gradient_consistency(&sys, &points) < 1e-6);
    }

    #[test]
    fn clock_and_system_factors_commute(n_t in 2usize..9, period in 1.0f64..30.0, n in 1usize..4, seed in any::<u64>()) {
        let (_, ops) = build_clock(n_t, period).unwrap();
        let h = random_hermitian_matrix(n, seed, 1.0);
        let a = tensor_product(ops.p_op(), &identity(n)).unwrap();
        let b = tensor_product(&identity(n_t), &h).unwrap();
        let comm = a.dot(&b) - b.dot(&a);
        prop_assert!(comm.iter().all(|z| z.norm() < 1e-13 * (1.0 + a.iter().map(|z| z.norm()).fold(0.0, f64::max))));
    }

    #[test]
    fn weyl_shift_relation(n_t in 3usize..24, period in 0.5f64..50.0) {
        let (grid, ops) = build_clock(n_t, period).unwrap();
        let theta = 2.0 * PI / grid.period();
        let phase = |shift: f64| {
            CMatrix::from_diag(&Array1::from_iter(
                grid.t_values().iter().map(|&t| C64::new(0.0, theta * (t + shift)).exp()),
            ))
        };
        let s = ops.shift_sites(1);
        let lhs = s.dot(&phase(0.0)).dot(&dagger(s.view()));
        let rhs = phase(grid.spacing());
        for k in 0..n_t - 1 {
            prop_assert!((lhs[[k, k]] - rhs[[k, k]]).norm() < 1e-12);
        }
    }

    #[test]
    fn shell_operator_is_psd_and_normalized(n in 1usize..6, seed in any::<u64>(), sigma in 0.05f64..0.5, e in -2.0f64..2.0) {
        let h = random_h(n, seed, 0.5);
        let reg = DeltaRegularization::gaussian(sigma);
        let g = HermitianOperator::new(kernel_clock_energy(&h, e, &reg).unwrap()).unwrap();
        let ev = eig_hermitian(&g).unwrap().eigenvalues;
        prop_assert!(ev.iter().all(|&x| x > -1e-12));

        let lambdas = eig_hermitian(&h).unwrap().eigenvalues;
        let lo = lambdas.iter().cloned().fold(f64::INFINITY, f64::min) - 6.0 * sigma;
        let hi = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 6.0 * sigma;
        let m = 2000;
        let step = (hi - lo) / m as f64;
        let omega: Vec<f64> = (0..=m)
            .map(|i| microcanonical_from_kernel(&h, lo + i as f64 * step, &reg).unwrap())
            .collect();
        let integral: f64 = omega.windows(2).map(|w| 0.5 * step * (w[0] + w[1])).sum();
        prop_assert!((integral - n as f64).abs() < 1e-3 * n as f64);
    }

    #[test]
    fn partition_function_is_log_convex(n in 1usize..7, seed in any::<u64>()) {
        let h = random_h(n, seed, 1.0);
        let betas: Vec<f64> = (0..24).map(|i| 0.05 + 0.2 * i as f64).collect();
        let log_z: Vec<f64> = betas.iter().map(|&b| canonical_from_kernel(&h, b).unwrap().ln()).collect();
        for w in log_z.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
    }

    #[test]
    fn density_peaks_sit_on_levels(gaps in prop::collection::vec(0.8f64..2.0, 1..5), start in -2.0f64..1.0) {
        let mut levels = vec![start];
        for g in &gaps {
            levels.push(levels.last().unwrap() + g);
        }
        let h = build_quantum(&QuantumModelSpec::ExplicitDiagonal { levels: levels.clone() }).unwrap();
        for sigma in [0.2, 0.1, 0.05] {
            let reg = DeltaRegularization::gaussian(sigma);
            let step = sigma / 20.0;
            let (lo, hi) = (levels[0] - 1.0, levels[levels.len() - 1] + 1.0);
            let es: Vec<f64> = (0..).map(|i| lo + i as f64 * step).take_while(|&e| e <= hi).collect();
            let om: Vec<f64> = es.iter().map(|&e| microcanonical_from_kernel(&h, e, &reg).unwrap()).collect();
            let peaks: Vec<f64> = (1..es.len() - 1)
                .filter(|&i| om[i] > om[i - 1] && om[i] >= om[i + 1])
                .map(|i| es[i])
                .collect();
            prop_assert_eq!(peaks.len(), levels.len());
            for (p, l) in peaks.iter().zip(&levels) {
                prop_assert!((p - l).abs() < sigma);
            }
        }
    }

    #[test]
    fn parametrized_flow_preserves_constraint(
        kind in 0usize..3,
        q0 in -1.2f64..1.2,
        p0 in -1.2f64..1.2,
        t0 in -3.0f64..3.0,
        amp in 0.0f64..0.8,
        freq in 0.2f64..3.0,
        phase in 0.0f64..6.0,
    ) {
        let spec = match kind {
            0 => ClassicalModelSpec::Harmonic { dof: 1, mass: 1.0, omega: 1.0 },
            1 => ClassicalModelSpec::DoubleWell { dof: 1, mass: 1.0, height: 1.0, minimum: 1.0 },
            _ => ClassicalModelSpec::Morse { dof: 1, mass: 1.0, depth: 2.0, stiffness: 1.0, center: 0.0 },
        };
        let sys = ClassicalSystem::from_spec(&spec).unwrap();
        let x0 = ExtendedPhasePoint::on_shell(&sys, vec![q0], vec![p0], t0).unwrap();
        let span = (0.0, 2.0 * PI);
        let lapse = LapseProfile::normalized_sinusoidal(amp, freq, phase, span).unwrap();
        let traj = integrate_parametrized(&sys, &x0, &lapse, span, 2048).unwrap();
        prop_assert!(traj.energy_drift < 1e-8);
        prop_assert!(traj.states.iter().all(|s| s.pi_t == x0.pi_t));
        let dt = traj.last().t - t0;
        prop_assert!((dt - lapse.integral(span.0, span.1)).abs() < 1e-12 * dt.abs().max(1.0));
        let a = evaluate_actions(&traj, &sys, Some(-x0.pi_t)).unwrap();
        prop_assert!(a.routh_residual < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn kernel_z_is_clock_translation_invariant(n in 1usize..4, seed in any::<u64>(), from in 1usize..40) {
        let h = random_h(n, seed, 0.5);
        let ev = eig_hermitian(&h).unwrap().eigenvalues;
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let clock = auto_clock(lo, hi, None).unwrap();
        let kernel = ConstrainedKernel::new(h, clock.n_sites, clock.period, DeltaRegularization::gaussian(clock.width)).unwrap();
        let betas = [0.1, 1.0, 5.0];
        let base = kernel.partition_function(&betas, 0).unwrap();
        let shifted = kernel.partition_function(&betas, from % clock.n_sites).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs());
        }
    }
}

#[test]
fn gaussian_delta_is_normalized() {
    for sigma in [0.01, 0.3, 2.0] {
        let m = 4000;
        let step = 16.0 * sigma / m as f64;
        let s: f64 = (0..=m)
            .map(|i| {
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                w * gaussian_delta(-8.0 * sigma + i as f64 * step, sigma)
            })
            .sum::<f64>()
            * step;
        assert!((s - 1.0).abs() < 1e-12);
    }
}
