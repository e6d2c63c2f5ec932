//! Cross-module invariant suites: algebraic identities over seeded random
//! ensembles plus property-based checks on the core tensor algebra.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qovk::channels::{apply, random_pauli_channel};
use qovk::circuit::analytic::postselection_probability;
use qovk::clinalg::{haar_random_unitary, ComplexMatrix, Subsystem, Tolerance, C64};
use qovk::experiment::{run_trial, ExperimentConfig, KernelVariant};
use qovk::qkernels::{
    eval_ovk, gram, validate_psd, Coupling, FeatureMatrixRule, Kernel, OVKernelSpec,
};
use qovk::qstates::{random_density, to_density, DensityMatrix, PureState};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn tensor_associativity_and_trace_multiplicativity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let a = haar_random_unitary(2, &mut rng);
        let b = haar_random_unitary(3, &mut rng);
        let m = haar_random_unitary(2, &mut rng);
        let left = a.tensor(&b).unwrap().tensor(&m).unwrap();
        let right = a.tensor(&b.tensor(&m).unwrap()).unwrap();
        assert!(left.max_abs_diff(&right) < 1e-12);
        let prod = a.tensor(&b).unwrap();
        assert!((prod.trace() - a.trace() * b.trace()).norm() < 1e-12);
    }
}

#[test]
fn partial_trace_recovers_tensor_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let a = random_density(2, 2, &mut rng).unwrap();
        let b = random_density(3, 3, &mut rng).unwrap();
        let ab = a.matrix().tensor(b.matrix()).unwrap();
        let reduced = ab.partial_trace(2, 3, Subsystem::First).unwrap();
        assert!(reduced.max_abs_diff(a.matrix()) < 1e-12);
    }
}

#[test]
fn specialization_chain_holds_for_100_pairs() {
    // One-dimensional Kraus/product kernel = scalar kernel = fidelity.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let spec = OVKernelSpec::new(
        FeatureMatrixRule::ProductForm,
        Coupling::Kraus {
            ops: vec![ComplexMatrix::identity(1)],
        },
        1,
        1,
    )
    .unwrap();
    for _ in 0..100 {
        let x = PureState::haar_random(1, &mut rng);
        let z = PureState::haar_random(1, &mut rng);
        let k = eval_ovk(&spec, &to_density(&x), &to_density(&z))
            .unwrap()
            .get(0, 0);
        let s = qovk::qkernels::scalar_kernel(&to_density(&x), &to_density(&z)).unwrap();
        let f = qovk::qstates::fidelity_pure(&x, &z).unwrap();
        assert!((k.re - s).abs() < 1e-12 && (s - f).abs() < 1e-12 && k.im.abs() < 1e-12);
    }
}

#[test]
fn dilation_kernel_preserves_trace_with_symmetrized_features() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..30 {
        let u = haar_random_unitary(4, &mut rng);
        let spec = OVKernelSpec::new(
            FeatureMatrixRule::SymmetrizedForm,
            Coupling::Unitary {
                unitary: u,
                output_state: to_density(&PureState::haar_random(2, &mut rng)),
            },
            2,
            2,
        )
        .unwrap();
        let x = to_density(&PureState::haar_random(2, &mut rng));
        let z = to_density(&PureState::haar_random(2, &mut rng));
        let k = eval_ovk(&spec, &x, &z).unwrap();
        assert!((k.trace().re - 1.0).abs() < 1e-10);
        assert!(k.trace().im.abs() < 1e-10);
    }
}

#[test]
fn kraus_product_grams_stay_psd_on_20_datasets() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let kernel = Kernel::OperatorValued(
        OVKernelSpec::new(
            FeatureMatrixRule::ProductForm,
            Coupling::Kraus {
                ops: qovk::qkernels::pauli_kraus_set(2).unwrap(),
            },
            2,
            2,
        )
        .unwrap(),
    );
    for _ in 0..20 {
        let data: Vec<DensityMatrix> = (0..5)
            .map(|_| random_density(2, 2, &mut rng).unwrap())
            .collect();
        let g = gram(&kernel, &data).unwrap();
        let report = validate_psd(&g, &[vec![c(1.0, 0.0), c(0.0, 0.5)]]);
        assert!(!report.violation, "{report:?}");
        assert!(report.min_eigenvalue >= -1e-8);
        assert!(report.min_quadratic_form.unwrap() >= -1e-8);
    }
}

#[test]
fn postselection_probability_never_below_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let x = PureState::haar_random(4, &mut rng);
        let z = PureState::haar_random(4, &mut rng);
        let p = postselection_probability(&x, &z);
        assert!((0.5..=1.0 + 1e-12).contains(&p));
    }
}

#[test]
fn channel_application_preserves_state_structure() {
    let tol = Tolerance::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let ch = random_pauli_channel(2, &mut rng).unwrap();
        let rho = random_density(2, 2, &mut rng).unwrap();
        let out = apply(&ch, &rho).unwrap();
        assert!(out.matrix().is_density(&tol));
    }
}

#[test]
fn recovery_error_grows_with_noise() {
    // Mean recovery error at a heavy noise level dominates the light one
    // for the same seeds.
    let heavy_vs_light = |variant: KernelVariant| {
        let mut heavy_sum = 0.0;
        let mut light_sum = 0.0;
        for seed in 0..5u64 {
            for (noise, out) in [(0.3, &mut heavy_sum), (0.05, &mut light_sum)] {
                let cfg = ExperimentConfig {
                    noise_lambda: noise,
                    n_channels: 4,
                    n_train: 8,
                    seed,
                    kernel_variants: vec![variant],
                    ..ExperimentConfig::default()
                };
                *out += run_trial(&cfg).unwrap().summary(variant).unwrap().mean;
            }
        }
        (heavy_sum / 5.0, light_sum / 5.0)
    };
    for variant in [KernelVariant::ScalarBaseline, KernelVariant::EntangledKrausPauli] {
        let (heavy, light) = heavy_vs_light(variant);
        assert!(heavy >= light, "{variant:?}: {heavy} < {light}");
    }
}

#[test]
fn trial_determinism_across_parallel_executions() {
    let cfg = ExperimentConfig {
        n_channels: 4,
        n_train: 6,
        seed: 99,
        ..ExperimentConfig::default()
    };
    let a = serde_json::to_string(&run_trial(&cfg).unwrap()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| serde_json::to_string(&run_trial(&cfg).unwrap()).unwrap());
    assert_eq!(a, b, "results depend on scheduling");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_tensor_dims_and_trace(
        a_re in prop::collection::vec(ment(), 4),
        b_re in prop::collection::vec(ment(), 9),
    ) {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| a_re[i * 2 + j]);
        let b = ComplexMatrix::from_fn(3, 3, |i, j| b_re[i * 3 + j]);
        let t = a.tensor(&b).unwrap();
        prop_assert_eq!(t.rows(), 6);
        prop_assert!((t.trace() - a.trace() * b.trace()).norm() < 1e-10);
        // Dagger distributes over the Kronecker product.
        let lhs = t.dagger();
        let rhs = a.dagger().tensor(&b.dagger()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn prop_fidelity_symmetric_and_bounded(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = PureState::haar_random(4, &mut rng);
        let z = PureState::haar_random(4, &mut rng);
        let f_xz = qovk::qstates::fidelity_pure(&x, &z).unwrap();
        let f_zx = qovk::qstates::fidelity_pure(&z, &x).unwrap();
        prop_assert!((f_xz - f_zx).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f_xz));
    }

    #[test]
    fn prop_kernel_hermitian_symmetry(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = OVKernelSpec::new(
            FeatureMatrixRule::ProductForm,
            Coupling::Unitary {
                unitary: haar_random_unitary(4, &mut rng),
                output_state: DensityMatrix::maximally_mixed(2),
            },
            2,
            2,
        ).unwrap();
        let x = random_density(2, 2, &mut rng).unwrap();
        let z = random_density(2, 2, &mut rng).unwrap();
        let kxz = eval_ovk(&spec, &x, &z).unwrap();
        let kzx = eval_ovk(&spec, &z, &x).unwrap();
        prop_assert!(kxz.max_abs_diff(&kzx.dagger()) < 1e-10);
    }
}

/// Strategy for well-scaled complex entries.
fn ment() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| C64::new(re, im))
}
