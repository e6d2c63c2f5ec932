//! Quantum state representations, classical-data encodings and fidelity.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clinalg::{gates, ComplexMatrix, LinalgError, Tolerance, C64};

#[derive(Debug, Error)]
pub enum StateError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("matrix is not a density matrix: {context}")]
    NotDensity { context: String },
    #[error("rank {rank} out of range for dimension {dim}")]
    RankOutOfRange { rank: usize, dim: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Normalized pure state |ψ⟩ over a power-of-two dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureStateWire", into = "PureStateWire")]
pub struct PureState {
    amplitudes: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct PureStateWire {
    kind: String,
    mat: ComplexMatrix,
}

impl From<PureState> for PureStateWire {
    fn from(p: PureState) -> Self {
        PureStateWire {
            kind: "pure".into(),
            mat: ComplexMatrix::column(&p.amplitudes),
        }
    }
}

impl TryFrom<PureStateWire> for PureState {
    type Error = String;

    fn try_from(w: PureStateWire) -> Result<Self, String> {
        if w.kind != "pure" {
            return Err(format!("expected kind \"pure\", found {:?}", w.kind));
        }
        if w.mat.cols() != 1 {
            return Err("pure state payload must be a column vector".into());
        }
        PureState::new(w.mat.entries().to_vec()).map_err(|e| e.to_string())
    }
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self, StateError> {
        let tol = Tolerance::default();
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol.eps_structural {
            return Err(StateError::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// |0…0⟩ on `qubits` qubits.
    pub fn zero(qubits: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// Computational basis state |index⟩ of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> Result<C64, StateError> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch {
                context: format!("inner product of dims {} and {}", self.dim(), other.dim()),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product |self⟩ ⊗ |other⟩.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        PureState { amplitudes }
    }

    /// Haar-random pure state of the given dimension.
    pub fn haar_random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
        let u = crate::clinalg::haar_random_unitary(dim, rng);
        let amplitudes = (0..dim).map(|i| u.get(i, 0)).collect();
        PureState { amplitudes }
    }
}

/// Unit-trace psd Hermitian matrix; a quantum state, pure or mixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityWire", into = "DensityWire")]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct DensityWire {
    kind: String,
    mat: ComplexMatrix,
}

impl From<DensityMatrix> for DensityWire {
    fn from(d: DensityMatrix) -> Self {
        DensityWire {
            kind: "density".into(),
            mat: d.mat,
        }
    }
}

impl TryFrom<DensityWire> for DensityMatrix {
    type Error = String;

    fn try_from(w: DensityWire) -> Result<Self, String> {
        if w.kind != "density" {
            return Err(format!("expected kind \"density\", found {:?}", w.kind));
        }
        DensityMatrix::new(w.mat).map_err(|e| e.to_string())
    }
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self, StateError> {
        let tol = Tolerance::default();
        if !mat.is_square() {
            return Err(StateError::NotDensity {
                context: format!("{}x{} matrix is not square", mat.rows(), mat.cols()),
            });
        }
        if !mat.is_density(&tol) {
            let tr = mat.trace();
            return Err(StateError::NotDensity {
                context: format!(
                    "hermitian deviation {:.3e}, trace {:.6}+{:.3e}i, min eigenvalue {:.3e}",
                    mat.hermitian_deviation(),
                    tr.re,
                    tr.im,
                    mat.min_eigenvalue_hermitian(&tol).unwrap_or(f64::NAN)
                ),
            });
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix that is known valid by construction.
    pub(crate) fn from_matrix_unchecked(mat: ComplexMatrix) -> Self {
        debug_assert!(mat.is_density(&Tolerance::default()));
        Self { mat }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn purity(&self) -> f64 {
        self.mat.matmul(&self.mat).trace().re
    }

    /// Principal eigenvector; the underlying pure state when rank is one.
    pub fn principal_eigenvector(&self, tol: &Tolerance) -> Result<Vec<C64>, StateError> {
        let eig = self.mat.hermitian_eigen(tol)?;
        Ok(eig.eigenvector(self.dim() - 1))
    }
}

/// Data-to-state encoding rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoder {
    /// One qubit per coordinate: R_y(x_j) on qubit j, then a ring of CNOTs.
    AngleEncoding { qubits: usize },
    /// An explicitly supplied encoding unitary for the input at hand.
    GivenUnitary { unitary: ComplexMatrix },
}

/// Applies a single-qubit gate to qubit `target` of a statevector.
fn apply_single_qubit(amplitudes: &mut [C64], qubits: usize, target: usize, gate: &ComplexMatrix) {
    let stride = 1 << (qubits - 1 - target);
    for base in 0..amplitudes.len() {
        if base & stride != 0 {
            continue;
        }
        let a0 = amplitudes[base];
        let a1 = amplitudes[base | stride];
        amplitudes[base] = gate.get(0, 0) * a0 + gate.get(0, 1) * a1;
        amplitudes[base | stride] = gate.get(1, 0) * a0 + gate.get(1, 1) * a1;
    }
}

/// CNOT with `control` and `target` qubit indices on a statevector.
fn apply_cnot(amplitudes: &mut [C64], qubits: usize, control: usize, target: usize) {
    let c_bit = 1 << (qubits - 1 - control);
    let t_bit = 1 << (qubits - 1 - target);
    for i in 0..amplitudes.len() {
        if i & c_bit != 0 && i & t_bit == 0 {
            amplitudes.swap(i, i | t_bit);
        }
    }
}

/// Encodes a classical vector into a pure state.
pub fn encode(encoder: &Encoder, x: &[f64]) -> Result<PureState, StateError> {
    match encoder {
        Encoder::AngleEncoding { qubits } => {
            if x.len() != *qubits {
                return Err(StateError::DimensionMismatch {
                    context: format!("{} coordinates for {} qubits", x.len(), qubits),
                });
            }
            let t = *qubits;
            let mut amplitudes = PureState::zero(t).amplitudes;
            for (j, &angle) in x.iter().enumerate() {
                apply_single_qubit(&mut amplitudes, t, j, &gates::ry(angle));
            }
            if t >= 2 {
                for j in 0..t {
                    apply_cnot(&mut amplitudes, t, j, (j + 1) % t);
                }
            }
            Ok(PureState { amplitudes })
        }
        Encoder::GivenUnitary { unitary } => {
            let tol = Tolerance::default();
            if !unitary.is_unitary(&tol) {
                return Err(StateError::NotDensity {
                    context: "encoding matrix is not unitary".into(),
                });
            }
            let dim = unitary.rows();
            if !dim.is_power_of_two() {
                return Err(StateError::DimensionMismatch {
                    context: format!("encoding unitary dimension {dim} is not a power of two"),
                });
            }
            let zero = PureState::basis(dim, 0);
            let amplitudes = unitary.matvec(zero.amplitudes());
            Ok(PureState { amplitudes })
        }
    }
}

/// Rank-one density |ψ⟩⟨ψ|.
pub fn to_density(p: &PureState) -> DensityMatrix {
    DensityMatrix {
        mat: ComplexMatrix::outer(p.amplitudes(), p.amplitudes()),
    }
}

/// Fidelity |⟨ψ_x|ψ_z⟩|² between pure states.
pub fn fidelity_pure(x: &PureState, z: &PureState) -> Result<f64, StateError> {
    Ok(x.inner(z)?.norm_sqr())
}

/// Random density matrix of the given rank (Ginibre construction G·G†/Tr).
pub fn random_density<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix, StateError> {
    if rank == 0 || rank > dim {
        return Err(StateError::RankOutOfRange { rank, dim });
    }
    let g = crate::clinalg::random::complex_gaussian_matrix(dim, rank, rng);
    let gg = g.matmul(&g.dagger());
    let tr = gg.trace().re;
    Ok(DensityMatrix {
        mat: gg.scale(C64::new(1.0 / tr, 0.0)).hermitian_part(),
    })
}
