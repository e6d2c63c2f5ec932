//! Quantum channel representations, generators, noise and recovery error.
//!
//! Choi convention: input factor first, unnormalized —
//! Choi(Φ) = Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|). All comparisons in the crate use
//! this same convention, so the Frobenius recovery metric is
//! convention-consistent.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clinalg::{gates, ComplexMatrix, LinalgError, Subsystem, Tolerance, C64};
use crate::qstates::{DensityMatrix, StateError};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("channel is not trace preserving (deviation {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },
    #[error("Choi matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    ChoiNotPsd { min_eigenvalue: f64 },
    #[error("depolarizing strength {lambda} outside [0, 1]")]
    LambdaOutOfRange { lambda: f64 },
    #[error("unsupported Pauli dimension {dim} (expected 2 or 4)")]
    UnsupportedPauliDim { dim: usize },
    #[error("channel reconstruction failed: {context}")]
    Reconstruction { context: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Internal representation of a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rep", rename_all = "snake_case")]
pub enum ChannelRep {
    Kraus { ops: Vec<ComplexMatrix> },
    Choi { matrix: ComplexMatrix },
}

/// Completely positive trace-preserving map from a×a to b×b states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumChannel {
    pub rep: ChannelRep,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl QuantumChannel {
    pub fn from_kraus(ops: Vec<ComplexMatrix>) -> Result<Self, ChannelError> {
        if ops.is_empty() {
            return Err(ChannelError::DimensionMismatch {
                context: "empty Kraus set".into(),
            });
        }
        let out_dim = ops[0].rows();
        let in_dim = ops[0].cols();
        if ops
            .iter()
            .any(|op| op.rows() != out_dim || op.cols() != in_dim)
        {
            return Err(ChannelError::DimensionMismatch {
                context: "Kraus operators have non-uniform shapes".into(),
            });
        }
        let ch = Self {
            rep: ChannelRep::Kraus { ops },
            in_dim,
            out_dim,
        };
        ch.check_trace_preserving()?;
        Ok(ch)
    }

    /// Trace-preservation deviation: ‖Σ A_i†A_i − I‖_max for Kraus,
    /// ‖Tr_out[Choi] − I‖_max for Choi.
    pub fn trace_preservation_deviation(&self) -> f64 {
        match &self.rep {
            ChannelRep::Kraus { ops } => {
                let mut sum = ComplexMatrix::zeros(self.in_dim, self.in_dim);
                for op in ops {
                    sum = &sum + &op.dagger().matmul(op);
                }
                sum.max_abs_diff(&ComplexMatrix::identity(self.in_dim))
            }
            ChannelRep::Choi { matrix } => matrix
                .partial_trace(self.in_dim, self.out_dim, Subsystem::First)
                .map(|m| m.max_abs_diff(&ComplexMatrix::identity(self.in_dim)))
                .unwrap_or(f64::INFINITY),
        }
    }

    fn check_trace_preserving(&self) -> Result<(), ChannelError> {
        let tol = Tolerance::default();
        let deviation = self.trace_preservation_deviation();
        if deviation > tol.eps_structural {
            return Err(ChannelError::NotTracePreserving { deviation });
        }
        Ok(())
    }
}

/// Applies the channel to a state.
pub fn apply(ch: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix, ChannelError> {
    if rho.dim() != ch.in_dim {
        return Err(ChannelError::DimensionMismatch {
            context: format!(
                "state of dimension {} into channel with input dimension {}",
                rho.dim(),
                ch.in_dim
            ),
        });
    }
    let out = match &ch.rep {
        ChannelRep::Kraus { ops } => {
            let mut out = ComplexMatrix::zeros(ch.out_dim, ch.out_dim);
            for op in ops {
                out = &out + &op.matmul(rho.matrix()).matmul(&op.dagger());
            }
            out
        }
        ChannelRep::Choi { matrix } => {
            // Φ(ρ) = Tr_in[Choi · (ρ^T ⊗ I_out)].
            let lifted = rho.matrix().transpose().tensor(&ComplexMatrix::identity(ch.out_dim))?;
            matrix
                .matmul(&lifted)
                .partial_trace(ch.in_dim, ch.out_dim, Subsystem::Second)?
        }
    };
    Ok(DensityMatrix::new(out.hermitian_part())?)
}

/// Uniform sample from the probability simplex (normalized unit exponentials).
pub(crate) fn dirichlet_flat<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// Random Pauli channel: Kraus operators {√p_i·σ_i} with simplex-uniform
/// probabilities over the (tensor-pair) Pauli basis.
pub fn random_pauli_channel<R: Rng + ?Sized>(
    p_dim: usize,
    rng: &mut R,
) -> Result<QuantumChannel, ChannelError> {
    let paulis: Vec<ComplexMatrix> = match p_dim {
        2 => gates::paulis().to_vec(),
        4 => {
            let singles = gates::paulis();
            let mut out = Vec::with_capacity(16);
            for a in &singles {
                for b in &singles {
                    out.push(a.tensor(b).unwrap());
                }
            }
            out
        }
        dim => return Err(ChannelError::UnsupportedPauliDim { dim }),
    };
    let probs = dirichlet_flat(paulis.len(), rng);
    let ops: Vec<ComplexMatrix> = paulis
        .iter()
        .zip(probs.iter())
        .map(|(sigma, &p)| sigma.scale(C64::new(p.sqrt(), 0.0)))
        .collect();
    QuantumChannel::from_kraus(ops)
}

/// Depolarizing map Δ_λ(ρ) = (1−λ)ρ + (λ/p)·I.
pub fn depolarize(rho: &DensityMatrix, lambda: f64) -> Result<DensityMatrix, ChannelError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ChannelError::LambdaOutOfRange { lambda });
    }
    let p = rho.dim();
    let mixed = ComplexMatrix::identity(p).scale(C64::new(lambda / p as f64, 0.0));
    let kept = rho.matrix().scale(C64::new(1.0 - lambda, 0.0));
    Ok(DensityMatrix::new(&kept + &mixed)?)
}

/// Choi matrix Σ_{ij}|i⟩⟨j| ⊗ Φ(|i⟩⟨j|), input factor first, unnormalized.
pub fn to_choi(ch: &QuantumChannel) -> Result<ComplexMatrix, ChannelError> {
    match &ch.rep {
        ChannelRep::Choi { matrix } => Ok(matrix.clone()),
        ChannelRep::Kraus { ops } => {
            let (a, b) = (ch.in_dim, ch.out_dim);
            let side = a * b;
            let mut choi = ComplexMatrix::zeros(side, side);
            for i in 0..a {
                for j in 0..a {
                    // Φ(|i⟩⟨j|) = Σ_k A_k|i⟩⟨j|A_k† = Σ_k col_i(A_k)·row_j(A_k†).
                    let mut block = ComplexMatrix::zeros(b, b);
                    for op in ops {
                        for r in 0..b {
                            for c in 0..b {
                                let v = block.get(r, c) + op.get(r, i) * op.get(c, j).conj();
                                block.set(r, c, v);
                            }
                        }
                    }
                    for r in 0..b {
                        for c in 0..b {
                            choi.set(i * b + r, j * b + c, block.get(r, c));
                        }
                    }
                }
            }
            Ok(choi)
        }
    }
}

/// Validates a Choi matrix (psd, trace preserving) and wraps it as a channel.
pub fn from_choi(
    matrix: ComplexMatrix,
    in_dim: usize,
    out_dim: usize,
) -> Result<QuantumChannel, ChannelError> {
    let tol = Tolerance::default();
    if matrix.rows() != in_dim * out_dim || matrix.cols() != in_dim * out_dim {
        return Err(ChannelError::DimensionMismatch {
            context: format!(
                "{}x{} Choi matrix for dims {in_dim} -> {out_dim}",
                matrix.rows(),
                matrix.cols()
            ),
        });
    }
    let dev = matrix.hermitian_deviation();
    if dev > tol.eps_structural {
        return Err(ChannelError::ChoiNotPsd {
            min_eigenvalue: f64::NAN,
        });
    }
    let min_eigenvalue = matrix.hermitian_part().min_eigenvalue_hermitian(&tol)?;
    if min_eigenvalue < -tol.eps_psd {
        return Err(ChannelError::ChoiNotPsd { min_eigenvalue });
    }
    let ch = QuantumChannel {
        rep: ChannelRep::Choi { matrix },
        in_dim,
        out_dim,
    };
    ch.check_trace_preserving()?;
    Ok(ch)
}

/// Diagnostics attached to a reconstructed (not necessarily CPTP) channel.
#[derive(Debug, Clone, Serialize)]
pub struct ChoiValidity {
    pub hermitian_deviation: f64,
    pub min_eigenvalue: f64,
    pub trace_preservation_deviation: f64,
}

/// A Choi matrix fitted from predictions, kept raw on purpose: projecting to
/// the CPTP set would change the recovery metric.
#[derive(Debug, Clone)]
pub struct ReconstructedChannel {
    pub choi: ComplexMatrix,
    pub in_dim: usize,
    pub out_dim: usize,
    pub validity: ChoiValidity,
}

/// Canonical single-qubit probe states |0⟩⟨0|, |1⟩⟨1|, |+⟩⟨+|, |+i⟩⟨+i|.
fn single_qubit_probes() -> Vec<ComplexMatrix> {
    let half = C64::new(0.5, 0.0);
    let zero = ComplexMatrix::from_entries(
        2,
        2,
        vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
    )
    .unwrap();
    let one = ComplexMatrix::from_entries(
        2,
        2,
        vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    )
    .unwrap();
    let plus = ComplexMatrix::from_fn(2, 2, |_, _| half);
    let plus_i = ComplexMatrix::from_entries(
        2,
        2,
        vec![half, C64::new(0.0, -0.5), C64::new(0.0, 0.5), half],
    )
    .unwrap();
    vec![zero, one, plus, plus_i]
}

/// Tomographically complete probe densities for an a-dimensional input
/// (a must be a power of two; probes are tensor products of the canonical
/// single-qubit set).
pub fn tomography_probes(in_dim: usize) -> Result<Vec<DensityMatrix>, ChannelError> {
    if !in_dim.is_power_of_two() {
        return Err(ChannelError::DimensionMismatch {
            context: format!("probe construction needs a power-of-two dimension, got {in_dim}"),
        });
    }
    let mut probes: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(1)];
    let mut dim = 1;
    while dim < in_dim {
        let mut next = Vec::with_capacity(probes.len() * 4);
        for p in &probes {
            for q in single_qubit_probes() {
                next.push(p.tensor(&q)?);
            }
        }
        probes = next;
        dim *= 2;
    }
    probes
        .into_iter()
        .map(|m| Ok(DensityMatrix::new(m)?))
        .collect()
}

/// Fits the Choi matrix of the linear map realized by `predictor`.
///
/// The predictor is evaluated on the tomographically complete probe set;
/// the linear system expressing each Φ(|i⟩⟨j|) in terms of probe outputs is
/// solved by normal equations, and the Choi matrix is assembled without any
/// CPTP projection. A validity report travels with the result.
pub fn reconstruct_channel<F>(
    predictor: F,
    in_dim: usize,
    out_dim: usize,
) -> Result<ReconstructedChannel, ChannelError>
where
    F: Fn(&DensityMatrix) -> Result<ComplexMatrix, ChannelError>,
{
    let tol = Tolerance::default();
    let probes = tomography_probes(in_dim)?;
    let n_probes = probes.len();
    debug_assert_eq!(n_probes, in_dim * in_dim);

    // Design matrix D[m, (i,j)] = probe_m[i, j]: probe_m = Σ_ij probe_m[i,j]·E_ij,
    // so predictions satisfy out_m = Σ_ij probe_m[i,j]·Φ(E_ij).
    let unknowns = in_dim * in_dim;
    let design = ComplexMatrix::from_fn(n_probes, unknowns, |m, col| {
        probes[m].matrix().get(col / in_dim, col % in_dim)
    });

    // Right-hand side: one column per output matrix entry.
    let mut rhs = ComplexMatrix::zeros(n_probes, out_dim * out_dim);
    for (m, probe) in probes.iter().enumerate() {
        let out = predictor(probe)?;
        if out.rows() != out_dim || out.cols() != out_dim {
            return Err(ChannelError::DimensionMismatch {
                context: format!(
                    "predictor returned {}x{}, expected {out_dim}x{out_dim}",
                    out.rows(),
                    out.cols()
                ),
            });
        }
        for r in 0..out_dim {
            for c in 0..out_dim {
                rhs.set(m, r * out_dim + c, out.get(r, c));
            }
        }
    }

    // Normal equations; the canonical probe design is square and well
    // conditioned, so a singular system here is a programming error.
    let gram = design.dagger().matmul(&design).hermitian_part();
    let min_gram_eig = gram.min_eigenvalue_hermitian(&tol)?;
    if min_gram_eig < 1e-6 {
        return Err(ChannelError::Reconstruction {
            context: format!("probe system nearly singular (min eigenvalue {min_gram_eig:.3e})"),
        });
    }
    let solution = gram.solve_hermitian(&design.dagger().matmul(&rhs))?;

    // Row (i,j) of `solution` holds Φ(E_ij) flattened; place it as the
    // (i,j) block of the Choi matrix.
    let side = in_dim * out_dim;
    let mut choi = ComplexMatrix::zeros(side, side);
    for i in 0..in_dim {
        for j in 0..in_dim {
            for r in 0..out_dim {
                for c in 0..out_dim {
                    choi.set(
                        i * out_dim + r,
                        j * out_dim + c,
                        solution.get(i * in_dim + j, r * out_dim + c),
                    );
                }
            }
        }
    }

    let hermitian_deviation = choi.hermitian_deviation();
    let min_eigenvalue = choi
        .hermitian_part()
        .min_eigenvalue_hermitian(&tol)
        .unwrap_or(f64::NAN);
    let trace_preservation_deviation = choi
        .partial_trace(in_dim, out_dim, Subsystem::First)
        .map(|m| m.max_abs_diff(&ComplexMatrix::identity(in_dim)))
        .unwrap_or(f64::INFINITY);
    Ok(ReconstructedChannel {
        choi,
        in_dim,
        out_dim,
        validity: ChoiValidity {
            hermitian_deviation,
            min_eigenvalue,
            trace_preservation_deviation,
        },
    })
}

/// Frobenius distance between the Choi matrices of a true channel and a
/// reconstructed candidate.
pub fn recovery_error(
    true_channel: &QuantumChannel,
    learned: &ReconstructedChannel,
) -> Result<f64, ChannelError> {
    if true_channel.in_dim != learned.in_dim || true_channel.out_dim != learned.out_dim {
        return Err(ChannelError::DimensionMismatch {
            context: format!(
                "channels {}→{} and {}→{}",
                true_channel.in_dim, true_channel.out_dim, learned.in_dim, learned.out_dim
            ),
        });
    }
    let choi_true = to_choi(true_channel)?;
    Ok((&choi_true - &learned.choi).frobenius_norm())
}
