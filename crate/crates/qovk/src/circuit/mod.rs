//! Exact density-matrix simulation of the swap-test circuits.
//!
//! Register order in the flattened index space is a, Z, X, Y from most to
//! least significant; all gate embedding and partial tracing follows that
//! convention. Simulation is on density matrices because post-selection and
//! register discarding produce mixed states mid-circuit.

pub mod analytic;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::clinalg::{gates, ComplexMatrix, LinalgError, Subsystem, Tolerance, C64};
use crate::qkernels::KernelError;
use crate::qstates::{DensityMatrix, PureState, StateError};

/// Hard cap on the total simulated qubit count.
pub const MAX_TOTAL_QUBITS: usize = 12;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("gate is not unitary (deviation {deviation:.3e})")]
    NonUnitaryGate { deviation: f64 },
    #[error("gate dimension {gate_dim} does not match target dimension {target_dim}")]
    TargetMismatch { gate_dim: usize, target_dim: usize },
    #[error("register {name:?} is not present in the circuit")]
    UnknownRegister { name: RegisterName },
    #[error("post-selection probability {probability:.3e} is numerically zero")]
    PostselectionImpossible { probability: f64 },
    #[error("qubit counts do not match: {context}")]
    QubitMismatch { context: String },
    #[error("total of {total} qubits exceeds the cap of {cap}")]
    TooManyQubits { total: usize, cap: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Circuit wire labels, top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegisterName {
    /// Single ancilla qubit.
    A,
    /// First payload register (t qubits).
    Z,
    /// Second payload register (t qubits).
    X,
    /// Output register (s qubits).
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Register {
    pub name: RegisterName,
    pub qubits: usize,
}

impl Register {
    pub fn dim(&self) -> usize {
        1 << self.qubits
    }
}

/// Density matrix over an ordered product of named registers.
#[derive(Debug, Clone)]
pub struct CircuitState {
    rho: DensityMatrix,
    layout: Vec<Register>,
}

impl CircuitState {
    /// Starts a circuit from per-register pure states, in layout order.
    pub fn from_pure_registers(parts: &[(RegisterName, &PureState)]) -> Result<Self, CircuitError> {
        let mut layout = Vec::with_capacity(parts.len());
        let mut total = 0usize;
        for (name, state) in parts {
            let qubits = state.qubits();
            if 1 << qubits != state.dim() {
                return Err(CircuitError::QubitMismatch {
                    context: format!("register {name:?} dimension {} is not a power of two", state.dim()),
                });
            }
            total += qubits;
            layout.push(Register { name: *name, qubits });
        }
        if total > MAX_TOTAL_QUBITS {
            return Err(CircuitError::TooManyQubits {
                total,
                cap: MAX_TOTAL_QUBITS,
            });
        }
        let mut amplitudes = parts[0].1.clone();
        for (_, state) in &parts[1..] {
            amplitudes = amplitudes.tensor(state);
        }
        Ok(Self {
            rho: crate::qstates::to_density(&amplitudes),
            layout,
        })
    }

    pub fn from_density(rho: DensityMatrix, layout: Vec<Register>) -> Result<Self, CircuitError> {
        let total: usize = layout.iter().map(|r| r.qubits).sum();
        if 1 << total != rho.dim() {
            return Err(CircuitError::QubitMismatch {
                context: format!("layout of {total} qubits against state dimension {}", rho.dim()),
            });
        }
        Ok(Self { rho, layout })
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn layout(&self) -> &[Register] {
        &self.layout
    }

    pub fn dims(&self) -> Vec<usize> {
        self.layout.iter().map(|r| r.dim()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    fn position(&self, name: RegisterName) -> Result<usize, CircuitError> {
        self.layout
            .iter()
            .position(|r| r.name == name)
            .ok_or(CircuitError::UnknownRegister { name })
    }

    /// Discards a register by partial trace.
    pub fn trace_out(&self, name: RegisterName) -> Result<CircuitState, CircuitError> {
        let pos = self.position(name)?;
        let reduced = self.rho.matrix().partial_trace_multi(&self.dims(), pos)?;
        let mut layout = self.layout.clone();
        layout.remove(pos);
        Ok(CircuitState {
            rho: DensityMatrix::new(reduced.hermitian_part())?,
            layout,
        })
    }
}

/// Embeds `gate` acting on `target_positions` (in the gate's own factor
/// order) into the full product space described by `dims`.
fn embed_gate(gate: &ComplexMatrix, dims: &[usize], target_positions: &[usize]) -> ComplexMatrix {
    let total: usize = dims.iter().product();
    let mut full = ComplexMatrix::zeros(total, total);
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0usize; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = idx % dims[k];
            idx /= dims[k];
        }
        d
    };
    let undigits = |d: &[usize]| -> usize {
        d.iter()
            .zip(dims.iter())
            .fold(0usize, |acc, (&digit, &dim)| acc * dim + digit)
    };
    let gate_dims: Vec<usize> = target_positions.iter().map(|&p| dims[p]).collect();
    let gate_index = |d: &[usize]| -> usize {
        target_positions
            .iter()
            .zip(gate_dims.iter())
            .fold(0usize, |acc, (&p, &gd)| acc * gd + d[p])
    };
    let gate_total: usize = gate_dims.iter().product();
    for r in 0..total {
        let rd = digits(r);
        let gr = gate_index(&rd);
        for gc in 0..gate_total {
            let v = gate.get(gr, gc);
            if v.norm_sqr() == 0.0 {
                continue;
            }
            // Write the gate column digits into the target slots.
            let mut cd = rd.clone();
            let mut rem = gc;
            for (&p, &gd) in target_positions.iter().rev().zip(gate_dims.iter().rev()) {
                cd[p] = rem % gd;
                rem /= gd;
            }
            full.set(r, undigits(&cd), v);
        }
    }
    full
}

/// Applies a unitary gate to the named registers (gate factor order follows
/// the order of `targets`): ρ ← GρG†.
pub fn apply_gate(
    state: &CircuitState,
    gate: &ComplexMatrix,
    targets: &[RegisterName],
) -> Result<CircuitState, CircuitError> {
    let tol = Tolerance::default();
    if !gate.is_square() {
        return Err(CircuitError::TargetMismatch {
            gate_dim: gate.rows(),
            target_dim: gate.cols(),
        });
    }
    let positions: Vec<usize> = targets
        .iter()
        .map(|&n| state.position(n))
        .collect::<Result<_, _>>()?;
    let dims = state.dims();
    let target_dim: usize = positions.iter().map(|&p| dims[p]).product();
    if gate.rows() != target_dim {
        return Err(CircuitError::TargetMismatch {
            gate_dim: gate.rows(),
            target_dim,
        });
    }
    if !gate.is_unitary(&tol) {
        let dev = gate
            .dagger()
            .matmul(gate)
            .max_abs_diff(&ComplexMatrix::identity(gate.rows()));
        return Err(CircuitError::NonUnitaryGate { deviation: dev });
    }
    let full = embed_gate(gate, &dims, &positions);
    let evolved = full
        .matmul(state.rho.matrix())
        .matmul(&full.dagger())
        .hermitian_part();
    Ok(CircuitState {
        rho: DensityMatrix::new(evolved)?,
        layout: state.layout.clone(),
    })
}

/// Result of post-selecting a register on a basis outcome.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub probability: f64,
    /// Normalized state of the remaining registers.
    pub post_state: CircuitState,
}

/// Projects the named register onto basis state `outcome`, discards it, and
/// renormalizes by the outcome probability.
pub fn measure_postselect(
    state: &CircuitState,
    register: RegisterName,
    outcome: usize,
) -> Result<MeasurementOutcome, CircuitError> {
    let pos = state.position(register)?;
    let dims = state.dims();
    assert!(outcome < dims[pos], "outcome index out of range");
    let mut proj = ComplexMatrix::zeros(dims[pos], dims[pos]);
    proj.set(outcome, outcome, C64::new(1.0, 0.0));
    let full = embed_gate(&proj, &dims, &[pos]);
    let projected = state.rho.matrix().matmul(&full);
    let probability = projected.trace().re;
    if probability < 1e-12 {
        return Err(CircuitError::PostselectionImpossible { probability });
    }
    let reduced = projected.partial_trace_multi(&dims, pos)?;
    let normalized = reduced
        .scale(C64::new(1.0 / probability, 0.0))
        .hermitian_part();
    let mut layout = state.layout.to_vec();
    layout.remove(pos);
    Ok(MeasurementOutcome {
        probability,
        post_state: CircuitState {
            rho: DensityMatrix::new(normalized)?,
            layout,
        },
    })
}

/// Runs the scalar swap test and returns the kernel estimate 2·P(0) − 1.
pub fn run_scalar_swap_test(psi_x: &PureState, psi_z: &PureState) -> Result<f64, CircuitError> {
    if psi_x.dim() != psi_z.dim() {
        return Err(CircuitError::QubitMismatch {
            context: format!("payload dims {} and {}", psi_x.dim(), psi_z.dim()),
        });
    }
    let ancilla = PureState::zero(1);
    let state = CircuitState::from_pure_registers(&[
        (RegisterName::A, &ancilla),
        (RegisterName::Z, psi_z),
        (RegisterName::X, psi_x),
    ])?;
    let h = gates::hadamard();
    let state = apply_gate(&state, &h, &[RegisterName::A])?;
    let cswap = gates::controlled_swap(psi_x.dim());
    let state = apply_gate(&state, &cswap, &[RegisterName::A, RegisterName::Z, RegisterName::X])?;
    let state = apply_gate(&state, &h, &[RegisterName::A])?;
    let outcome = measure_postselect(&state, RegisterName::A, 0)?;
    Ok(2.0 * outcome.probability - 1.0)
}

/// Full trace of one operator-valued kernel circuit execution.
#[derive(Debug, Clone)]
pub struct OvkCircuitRun {
    pub initial: CircuitState,
    pub after_first_hadamard: CircuitState,
    pub after_controlled_swap: CircuitState,
    pub after_second_hadamard: CircuitState,
    pub postselection_probability: f64,
    /// State of registers Z, X, Y after post-selecting the ancilla on 0.
    pub postselected: CircuitState,
    /// State of registers X, Y after discarding Z.
    pub feature_state: CircuitState,
    /// Extracted input feature matrix on register X.
    pub feature_matrix: ComplexMatrix,
    /// State of registers X, Y after the coupling unitary.
    pub after_coupling: CircuitState,
    /// The kernel value left on register Y.
    pub kernel: ComplexMatrix,
}

/// Executes the operator-valued kernel circuit: swap-test block, ancilla
/// post-selection, discard of Z, coupling unitary on Y⊗X, trace over X.
///
/// `coupling` is given in Y⊗X factor order and must act on exactly
/// 2^(t+s) dimensions.
pub fn run_ovk_circuit(
    psi_x: &PureState,
    psi_z: &PureState,
    phi_y: &PureState,
    coupling: &ComplexMatrix,
) -> Result<OvkCircuitRun, CircuitError> {
    if psi_x.dim() != psi_z.dim() {
        return Err(CircuitError::QubitMismatch {
            context: format!("payload dims {} and {}", psi_x.dim(), psi_z.dim()),
        });
    }
    let payload_dim = psi_x.dim();
    let out_dim = phi_y.dim();
    if coupling.rows() != payload_dim * out_dim || coupling.cols() != payload_dim * out_dim {
        return Err(CircuitError::TargetMismatch {
            gate_dim: coupling.rows(),
            target_dim: payload_dim * out_dim,
        });
    }

    let ancilla = PureState::zero(1);
    let initial = CircuitState::from_pure_registers(&[
        (RegisterName::A, &ancilla),
        (RegisterName::Z, psi_z),
        (RegisterName::X, psi_x),
        (RegisterName::Y, phi_y),
    ])?;
    let h = gates::hadamard();
    let after_first_hadamard = apply_gate(&initial, &h, &[RegisterName::A])?;
    let cswap = gates::controlled_swap(payload_dim);
    let after_controlled_swap = apply_gate(
        &after_first_hadamard,
        &cswap,
        &[RegisterName::A, RegisterName::Z, RegisterName::X],
    )?;
    let after_second_hadamard = apply_gate(&after_controlled_swap, &h, &[RegisterName::A])?;
    let outcome = measure_postselect(&after_second_hadamard, RegisterName::A, 0)?;
    let postselected = outcome.post_state.clone();
    let feature_state = postselected.trace_out(RegisterName::Z)?;
    let feature_matrix = feature_state
        .density()
        .matrix()
        .partial_trace(payload_dim, out_dim, Subsystem::First)?;
    let after_coupling = apply_gate(&feature_state, coupling, &[RegisterName::Y, RegisterName::X])?;
    let kernel = after_coupling
        .density()
        .matrix()
        .partial_trace(payload_dim, out_dim, Subsystem::Second)?;
    Ok(OvkCircuitRun {
        initial,
        after_first_hadamard,
        after_controlled_swap,
        after_second_hadamard,
        postselection_probability: outcome.probability,
        postselected,
        feature_state,
        feature_matrix,
        after_coupling,
        kernel,
    })
}

/// Samples the named register's basis-0 outcome `shots` times and returns
/// the empirical frequency.
pub fn sample_shots<R: Rng + ?Sized>(
    state: &CircuitState,
    register: RegisterName,
    shots: usize,
    rng: &mut R,
) -> Result<f64, CircuitError> {
    assert!(shots >= 1, "at least one shot required");
    let exact = match measure_postselect(state, register, 0) {
        Ok(outcome) => outcome.probability,
        Err(CircuitError::PostselectionImpossible { probability }) => probability.max(0.0),
        Err(e) => return Err(e),
    };
    let mut count = 0usize;
    for _ in 0..shots {
        if rng.gen::<f64>() < exact {
            count += 1;
        }
    }
    Ok(count as f64 / shots as f64)
}
