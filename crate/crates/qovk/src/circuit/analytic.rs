//! Closed-form expressions for every stage of the operator-valued kernel
//! circuit, plus the verification harness that compares them against the
//! density-matrix simulator instance by instance.
//!
//! These formulas are evaluated directly from the input states; they share
//! no code path with the gate-by-gate simulator they check.

use rand::Rng;
use serde::Serialize;

use crate::clinalg::{haar_random_unitary, ComplexMatrix, Subsystem, C64};
use crate::qkernels::{feature_matrix, FeatureMatrixRule};
use crate::qstates::{to_density, PureState};

use super::{run_ovk_circuit, CircuitError};

fn outer(a: &PureState, b: &PureState) -> ComplexMatrix {
    ComplexMatrix::outer(a.amplitudes(), b.amplitudes())
}

/// State after the first Hadamard: (|0⟩+|1⟩)/√2 ⊗ ψ_z ⊗ ψ_x ⊗ φ.
pub fn state_after_first_hadamard(
    psi_x: &PureState,
    psi_z: &PureState,
    phi_y: &PureState,
) -> PureState {
    let s = 1.0 / 2.0_f64.sqrt();
    let ancilla = PureState::new(vec![C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
    ancilla.tensor(psi_z).tensor(psi_x).tensor(phi_y)
}

/// State after the controlled swap:
/// (|0⟩ψ_zψ_x + |1⟩ψ_xψ_z)/√2 ⊗ φ.
pub fn state_after_controlled_swap(
    psi_x: &PureState,
    psi_z: &PureState,
    phi_y: &PureState,
) -> PureState {
    let s = 1.0 / 2.0_f64.sqrt();
    let zero = PureState::basis(2, 0);
    let one = PureState::basis(2, 1);
    let branch0 = zero.tensor(psi_z).tensor(psi_x);
    let branch1 = one.tensor(psi_x).tensor(psi_z);
    let amplitudes: Vec<C64> = branch0
        .amplitudes()
        .iter()
        .zip(branch1.amplitudes().iter())
        .map(|(a, b)| (a + b) * s)
        .collect();
    PureState::new(amplitudes).unwrap().tensor(phi_y)
}

/// State after the second Hadamard:
/// [|0⟩(ψ_zψ_x + ψ_xψ_z) + |1⟩(ψ_zψ_x − ψ_xψ_z)]/2 ⊗ φ.
pub fn state_after_second_hadamard(
    psi_x: &PureState,
    psi_z: &PureState,
    phi_y: &PureState,
) -> PureState {
    let zx = psi_z.tensor(psi_x);
    let xz = psi_x.tensor(psi_z);
    let sym: Vec<C64> = zx
        .amplitudes()
        .iter()
        .zip(xz.amplitudes().iter())
        .map(|(a, b)| (a + b) * 0.5)
        .collect();
    let anti: Vec<C64> = zx
        .amplitudes()
        .iter()
        .zip(xz.amplitudes().iter())
        .map(|(a, b)| (a - b) * 0.5)
        .collect();
    let dim = zx.dim();
    let mut amplitudes = Vec::with_capacity(2 * dim);
    amplitudes.extend_from_slice(&sym);
    amplitudes.extend_from_slice(&anti);
    PureState::new(amplitudes).unwrap().tensor(phi_y)
}

/// Probability of finding the ancilla in |0⟩: (1 + |⟨ψ_z|ψ_x⟩|²)/2.
pub fn postselection_probability(psi_x: &PureState, psi_z: &PureState) -> f64 {
    let overlap = psi_z.inner(psi_x).unwrap();
    0.5 * (1.0 + overlap.norm_sqr())
}

/// Post-selected state on Z⊗X⊗Y:
/// [ρ_z⊗ρ_x + ρ_x⊗ρ_z + |ψ_z⟩⟨ψ_x|⊗|ψ_x⟩⟨ψ_z| + |ψ_x⟩⟨ψ_z|⊗|ψ_z⟩⟨ψ_x|]
///   / (2(1+|⟨ψ_z|ψ_x⟩|²)) ⊗ |φ⟩⟨φ|.
pub fn postselected_state(
    psi_x: &PureState,
    psi_z: &PureState,
    phi_y: &PureState,
) -> ComplexMatrix {
    let rho_x = to_density(psi_x);
    let rho_z = to_density(psi_z);
    let overlap = psi_z.inner(psi_x).unwrap();
    let t1 = rho_z.matrix().tensor(rho_x.matrix()).unwrap();
    let t2 = rho_x.matrix().tensor(rho_z.matrix()).unwrap();
    let t3 = outer(psi_z, psi_x).tensor(&outer(psi_x, psi_z)).unwrap();
    let t4 = outer(psi_x, psi_z).tensor(&outer(psi_z, psi_x)).unwrap();
    let numerator = &(&t1 + &t2) + &(&t3 + &t4);
    let denom = 2.0 * (1.0 + overlap.norm_sqr());
    let zx = numerator.scale(C64::new(1.0 / denom, 0.0));
    zx.tensor(to_density(phi_y).matrix()).unwrap()
}

/// Feature matrix on register X:
/// [ρ_x + ρ_z + ⟨ψ_x|ψ_z⟩|ψ_x⟩⟨ψ_z| + ⟨ψ_z|ψ_x⟩|ψ_z⟩⟨ψ_x|] / (2(1+|⟨ψ_z|ψ_x⟩|²)).
pub fn input_feature_matrix(psi_x: &PureState, psi_z: &PureState) -> ComplexMatrix {
    let rho_x = to_density(psi_x);
    let rho_z = to_density(psi_z);
    let x_dot_z = psi_x.inner(psi_z).unwrap();
    let cross_xz = outer(psi_x, psi_z).scale(x_dot_z);
    let cross_zx = outer(psi_z, psi_x).scale(x_dot_z.conj());
    let numerator = &(rho_x.matrix() + rho_z.matrix()) + &(&cross_xz + &cross_zx);
    let denom = 2.0 * (1.0 + x_dot_z.norm_sqr());
    numerator.scale(C64::new(1.0 / denom, 0.0))
}

/// State after the coupling, in Y⊗X factor order:
/// U(|φ⟩⟨φ| ⊗ σ)U†.
pub fn state_after_coupling(
    psi_x: &PureState,
    psi_z: &PureState,
    phi_y: &PureState,
    coupling: &ComplexMatrix,
) -> ComplexMatrix {
    let sigma = input_feature_matrix(psi_x, psi_z);
    let dilated = to_density(phi_y).matrix().tensor(&sigma).unwrap();
    coupling.matmul(&dilated).matmul(&coupling.dagger())
}

/// Kernel value Tr_X[U(|φ⟩⟨φ| ⊗ σ)U†].
pub fn kernel_value(
    psi_x: &PureState,
    psi_z: &PureState,
    phi_y: &PureState,
    coupling: &ComplexMatrix,
) -> ComplexMatrix {
    state_after_coupling(psi_x, psi_z, phi_y, coupling)
        .partial_trace(phi_y.dim(), psi_x.dim(), Subsystem::First)
        .unwrap()
}

/// Deviation of one checked equality, maximized over instances.
#[derive(Debug, Clone, Serialize)]
pub struct EquationCheck {
    pub name: String,
    pub max_deviation: f64,
}

/// Result of comparing the simulator against the closed forms.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub payload_qubits: usize,
    pub output_qubits: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<EquationCheck>,
    pub all_within_tolerance: bool,
}

/// Runs `instances` random circuit instances and records, per checked
/// equality, the maximum elementwise deviation between the simulated state
/// and its closed form.
pub fn verify_circuit_equations<R: Rng + ?Sized>(
    instances: usize,
    payload_qubits: usize,
    output_qubits: usize,
    tolerance: f64,
    rng: &mut R,
    seed_label: u64,
) -> Result<VerifyReport, CircuitError> {
    let payload_dim = 1 << payload_qubits;
    let out_dim = 1 << output_qubits;
    let names = [
        "state_after_first_hadamard",
        "state_after_controlled_swap",
        "state_after_second_hadamard",
        "postselection_probability",
        "postselected_state",
        "input_feature_matrix",
        "feature_matrix_vs_kernel_module",
        "state_after_coupling",
        "kernel_value",
        "kernel_value_vs_kernel_module",
    ];
    let mut max_dev = vec![0.0_f64; names.len()];

    for _ in 0..instances {
        let psi_x = PureState::haar_random(payload_dim, rng);
        let psi_z = PureState::haar_random(payload_dim, rng);
        let phi_y = PureState::haar_random(out_dim, rng);
        let coupling = haar_random_unitary(out_dim * payload_dim, rng);
        let run = run_ovk_circuit(&psi_x, &psi_z, &phi_y, &coupling)?;

        let record = |slot: &mut f64, dev: f64| {
            if dev > *slot {
                *slot = dev;
            }
        };

        let psi2 = to_density(&state_after_first_hadamard(&psi_x, &psi_z, &phi_y));
        record(
            &mut max_dev[0],
            run.after_first_hadamard
                .density()
                .matrix()
                .max_abs_diff(psi2.matrix()),
        );

        let psi3 = to_density(&state_after_controlled_swap(&psi_x, &psi_z, &phi_y));
        record(
            &mut max_dev[1],
            run.after_controlled_swap
                .density()
                .matrix()
                .max_abs_diff(psi3.matrix()),
        );

        let psi4 = to_density(&state_after_second_hadamard(&psi_x, &psi_z, &phi_y));
        record(
            &mut max_dev[2],
            run.after_second_hadamard
                .density()
                .matrix()
                .max_abs_diff(psi4.matrix()),
        );

        let prob = postselection_probability(&psi_x, &psi_z);
        record(
            &mut max_dev[3],
            (run.postselection_probability - prob).abs(),
        );

        let eta1 = postselected_state(&psi_x, &psi_z, &phi_y);
        record(
            &mut max_dev[4],
            run.postselected.density().matrix().max_abs_diff(&eta1),
        );

        let sigma = input_feature_matrix(&psi_x, &psi_z);
        record(&mut max_dev[5], run.feature_matrix.max_abs_diff(&sigma));

        let sigma_kernel = feature_matrix(
            FeatureMatrixRule::SymmetrizedForm,
            &to_density(&psi_x),
            &to_density(&psi_z),
        )?;
        record(
            &mut max_dev[6],
            run.feature_matrix.max_abs_diff(&sigma_kernel),
        );

        // The simulator keeps registers in X⊗Y order; the closed form is in
        // Y⊗X order, so compare after a subsystem swap.
        let eta2 = state_after_coupling(&psi_x, &psi_z, &phi_y, &coupling)
            .swap_subsystems(out_dim, payload_dim)?;
        record(
            &mut max_dev[7],
            run.after_coupling.density().matrix().max_abs_diff(&eta2),
        );

        let k = kernel_value(&psi_x, &psi_z, &phi_y, &coupling);
        record(&mut max_dev[8], run.kernel.max_abs_diff(&k));

        let spec = crate::qkernels::OVKernelSpec::new(
            FeatureMatrixRule::SymmetrizedForm,
            crate::qkernels::Coupling::Unitary {
                unitary: coupling.clone(),
                output_state: to_density(&phi_y),
            },
            out_dim,
            payload_dim,
        )?;
        let k_module =
            crate::qkernels::eval_ovk(&spec, &to_density(&psi_x), &to_density(&psi_z))?;
        record(&mut max_dev[9], run.kernel.max_abs_diff(&k_module));
    }

    let checks: Vec<EquationCheck> = names
        .iter()
        .zip(max_dev.iter())
        .map(|(name, &max_deviation)| EquationCheck {
            name: (*name).to_string(),
            max_deviation,
        })
        .collect();
    let all_within_tolerance = checks.iter().all(|c| c.max_deviation < tolerance);
    Ok(VerifyReport {
        instances,
        payload_qubits,
        output_qubits,
        seed: seed_label,
        tolerance,
        checks,
        all_within_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simulator_matches_closed_forms_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let report = verify_circuit_equations(10, 1, 1, 1e-10, &mut rng, 101).unwrap();
        for check in &report.checks {
            assert!(
                check.max_deviation < 1e-10,
                "{} deviated by {}",
                check.name,
                check.max_deviation
            );
        }
        assert!(report.all_within_tolerance);
    }

    #[test]
    fn closed_forms_hold_for_two_qubit_payloads() {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let report = verify_circuit_equations(3, 2, 1, 1e-10, &mut rng, 202).unwrap();
        assert!(report.all_within_tolerance);
    }

    #[test]
    fn separable_coupling_returns_output_projector() {
        // With U = I⊗B the kernel collapses to Tr(σ)·|φ⟩⟨φ| = |φ⟩⟨φ|.
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let psi_x = PureState::haar_random(2, &mut rng);
        let psi_z = PureState::haar_random(2, &mut rng);
        let phi = PureState::haar_random(2, &mut rng);
        let b = haar_random_unitary(2, &mut rng);
        let u = ComplexMatrix::identity(2).tensor(&b).unwrap();
        let run = run_ovk_circuit(&psi_x, &psi_z, &phi, &u).unwrap();
        let expected = to_density(&phi);
        assert!(run.kernel.max_abs_diff(expected.matrix()) < 1e-10);
    }

    #[test]
    fn equal_inputs_give_conjugated_input_state() {
        // x = z makes σ = ρ_x, so K = Tr_X[U(|φ⟩⟨φ|⊗ρ_x)U†].
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let psi = PureState::haar_random(2, &mut rng);
        let phi = PureState::haar_random(2, &mut rng);
        let u = haar_random_unitary(4, &mut rng);
        let run = run_ovk_circuit(&psi, &psi, &phi, &u).unwrap();
        let dilated = to_density(&phi)
            .matrix()
            .tensor(to_density(&psi).matrix())
            .unwrap();
        let expected = u
            .matmul(&dilated)
            .matmul(&u.dagger())
            .partial_trace(2, 2, Subsystem::First)
            .unwrap();
        assert!(run.kernel.max_abs_diff(&expected) < 1e-10);
    }
}
