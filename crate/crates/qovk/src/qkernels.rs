//! Construction and evaluation of operator-valued quantum kernels.
//!
//! The kernel classes form a hierarchy: fidelity kernels are scalar kernels
//! on pure states, scalar kernels are separable operator-valued kernels with
//! one-dimensional output, separable kernels are dilations with a factorized
//! coupling, and entangled kernels use a coupling that does not factorize.
//! Every specialization is runtime-checkable through the operations here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clinalg::{gates, ComplexMatrix, LinalgError, Subsystem, Tolerance, C64};
use crate::qstates::{DensityMatrix, StateError};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("symmetrized feature rule requires pure inputs (second eigenvalue {second_eigenvalue:.3e})")]
    MixedInput { second_eigenvalue: f64 },
    #[error("invalid kernel specification: {context}")]
    InvalidSpec { context: String },
    #[error("Pauli Kraus sets are defined for dimensions 2 and 4, not {dim}")]
    UnsupportedPauliDim { dim: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// How the pairwise input feature matrix is built from two states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMatrixRule {
    /// σ = ρ_x·ρ_z; defined for any pair of density matrices.
    ProductForm,
    /// The swap-test feature matrix; defined for pure inputs only.
    SymmetrizedForm,
}

/// Coupling between the input feature space and the output space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Coupling {
    /// Unitary dilation: K = Tr_X[U (ρ_Y ⊗ σ) U†].
    Unitary {
        unitary: ComplexMatrix,
        output_state: DensityMatrix,
    },
    /// Kraus form: K = Σ_i M_i σ M_i† with p×m operators.
    Kraus { ops: Vec<ComplexMatrix> },
}

/// A complete operator-valued kernel configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OVKernelSpec {
    pub feature_rule: FeatureMatrixRule,
    pub coupling: Coupling,
    /// Output dimension: kernel values are p×p.
    pub p: usize,
    /// Input feature dimension: feature matrices are m×m.
    pub m: usize,
}

impl OVKernelSpec {
    pub fn new(
        feature_rule: FeatureMatrixRule,
        coupling: Coupling,
        p: usize,
        m: usize,
    ) -> Result<Self, KernelError> {
        let spec = Self {
            feature_rule,
            coupling,
            p,
            m,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let tol = Tolerance::default();
        if self.p == 0 || self.m == 0 {
            return Err(KernelError::InvalidSpec {
                context: "output and feature dimensions must be positive".into(),
            });
        }
        match &self.coupling {
            Coupling::Unitary {
                unitary,
                output_state,
            } => {
                let side = self.p * self.m;
                if unitary.rows() != side || unitary.cols() != side {
                    return Err(KernelError::InvalidSpec {
                        context: format!(
                            "coupling unitary is {}x{}, expected {side}x{side}",
                            unitary.rows(),
                            unitary.cols()
                        ),
                    });
                }
                if !unitary.is_unitary(&tol) {
                    return Err(KernelError::InvalidSpec {
                        context: "coupling matrix is not unitary".into(),
                    });
                }
                if output_state.dim() != self.p {
                    return Err(KernelError::InvalidSpec {
                        context: format!(
                            "output state dimension {} does not match p = {}",
                            output_state.dim(),
                            self.p
                        ),
                    });
                }
            }
            Coupling::Kraus { ops } => {
                if ops.is_empty() {
                    return Err(KernelError::InvalidSpec {
                        context: "Kraus coupling needs at least one operator".into(),
                    });
                }
                for (i, op) in ops.iter().enumerate() {
                    if op.rows() != self.p || op.cols() != self.m {
                        return Err(KernelError::InvalidSpec {
                            context: format!(
                                "Kraus operator {i} is {}x{}, expected {}x{}",
                                op.rows(),
                                op.cols(),
                                self.p,
                                self.m
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the pairwise feature matrix for two input states.
pub fn feature_matrix(
    rule: FeatureMatrixRule,
    rho_x: &DensityMatrix,
    rho_z: &DensityMatrix,
) -> Result<ComplexMatrix, KernelError> {
    if rho_x.dim() != rho_z.dim() {
        return Err(KernelError::DimensionMismatch {
            context: format!(
                "feature matrix of dims {} and {}",
                rho_x.dim(),
                rho_z.dim()
            ),
        });
    }
    match rule {
        FeatureMatrixRule::ProductForm => Ok(rho_x.matrix().matmul(rho_z.matrix())),
        FeatureMatrixRule::SymmetrizedForm => {
            let tol = Tolerance::default();
            let dim = rho_x.dim();
            let mut kets = Vec::with_capacity(2);
            for rho in [rho_x, rho_z] {
                let eig = rho.matrix().hermitian_eigen(&tol)?;
                let second = if dim >= 2 { eig.values[dim - 2] } else { 0.0 };
                if second.abs() > 1e-8 {
                    return Err(KernelError::MixedInput {
                        second_eigenvalue: second,
                    });
                }
                kets.push(eig.eigenvector(dim - 1));
            }
            let (psi_x, psi_z) = (&kets[0], &kets[1]);
            // ⟨ψ_x|ψ_z⟩ with the physics convention (conjugate-linear first slot).
            let x_dot_z: C64 = psi_x.iter().zip(psi_z.iter()).map(|(a, b)| a.conj() * b).sum();
            let z_dot_x = x_dot_z.conj();
            let cross_xz = ComplexMatrix::outer(psi_x, psi_z).scale(x_dot_z);
            let cross_zx = ComplexMatrix::outer(psi_z, psi_x).scale(z_dot_x);
            let numerator = &(rho_x.matrix() + rho_z.matrix()) + &(&cross_xz + &cross_zx);
            let denom = 2.0 * (1.0 + x_dot_z.norm_sqr());
            Ok(numerator.scale(C64::new(1.0 / denom, 0.0)))
        }
    }
}

/// Scalar quantum kernel Tr[ρ_x ρ_z].
pub fn scalar_kernel(rho_x: &DensityMatrix, rho_z: &DensityMatrix) -> Result<f64, KernelError> {
    if rho_x.dim() != rho_z.dim() {
        return Err(KernelError::DimensionMismatch {
            context: format!("scalar kernel of dims {} and {}", rho_x.dim(), rho_z.dim()),
        });
    }
    let tr = rho_x.matrix().matmul(rho_z.matrix()).trace();
    debug_assert!(tr.im.abs() < 1e-12);
    Ok(tr.re)
}

/// Evaluates an operator-valued kernel at a pair of input states.
pub fn eval_ovk(
    spec: &OVKernelSpec,
    rho_x: &DensityMatrix,
    rho_z: &DensityMatrix,
) -> Result<ComplexMatrix, KernelError> {
    if rho_x.dim() != spec.m || rho_z.dim() != spec.m {
        return Err(KernelError::DimensionMismatch {
            context: format!(
                "kernel with feature dimension {} applied to states of dims {} and {}",
                spec.m,
                rho_x.dim(),
                rho_z.dim()
            ),
        });
    }
    let sigma = feature_matrix(spec.feature_rule, rho_x, rho_z)?;
    match &spec.coupling {
        Coupling::Unitary {
            unitary,
            output_state,
        } => {
            let dilated = output_state.matrix().tensor(&sigma)?;
            let evolved = unitary.matmul(&dilated).matmul(&unitary.dagger());
            Ok(evolved.partial_trace(spec.p, spec.m, Subsystem::First)?)
        }
        Coupling::Kraus { ops } => {
            let mut out = ComplexMatrix::zeros(spec.p, spec.p);
            for op in ops {
                out = &out + &op.matmul(&sigma).matmul(&op.dagger());
            }
            Ok(out)
        }
    }
}

/// Normalized Pauli Kraus set: {I, X, Y, Z}/√4 for p = 2, the sixteen tensor
/// pairs scaled by 1/√16 for p = 4; Σ M_i† M_i = I either way.
pub fn pauli_kraus_set(p: usize) -> Result<Vec<ComplexMatrix>, KernelError> {
    let singles = gates::paulis();
    match p {
        2 => {
            let scale = C64::new(0.5, 0.0);
            Ok(singles.iter().map(|m| m.scale(scale)).collect())
        }
        4 => {
            let scale = C64::new(0.25, 0.0);
            let mut out = Vec::with_capacity(16);
            for a in &singles {
                for b in &singles {
                    out.push(a.tensor(b).unwrap().scale(scale));
                }
            }
            Ok(out)
        }
        dim => Err(KernelError::UnsupportedPauliDim { dim }),
    }
}

/// Which kernel a Gram matrix or regression uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum Kernel {
    /// Scalar kernel Tr[ρ_x ρ_z]; yields 1×1 blocks.
    Scalar,
    /// Operator-valued kernel per the attached specification.
    OperatorValued(OVKernelSpec),
}

impl Kernel {
    pub fn block_dim(&self) -> usize {
        match self {
            Kernel::Scalar => 1,
            Kernel::OperatorValued(spec) => spec.p,
        }
    }

    pub fn evaluate(
        &self,
        rho_x: &DensityMatrix,
        rho_z: &DensityMatrix,
    ) -> Result<ComplexMatrix, KernelError> {
        match self {
            Kernel::Scalar => {
                let k = scalar_kernel(rho_x, rho_z)?;
                Ok(ComplexMatrix::from_entries(1, 1, vec![C64::new(k, 0.0)]).unwrap())
            }
            Kernel::OperatorValued(spec) => eval_ovk(spec, rho_x, rho_z),
        }
    }
}

/// Block kernel matrix: an n×n grid of p×p blocks.
#[derive(Debug, Clone)]
pub struct BlockGram {
    n: usize,
    p: usize,
    blocks: Vec<ComplexMatrix>,
}

impl BlockGram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn block(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.blocks[i * self.n + j]
    }

    pub(crate) fn set_block(&mut self, i: usize, j: usize, block: ComplexMatrix) {
        self.blocks[i * self.n + j] = block;
    }

    /// The flattened np×np matrix.
    pub fn flatten(&self) -> ComplexMatrix {
        let side = self.n * self.p;
        ComplexMatrix::from_fn(side, side, |r, c| {
            self.block(r / self.p, c / self.p)
                .get(r % self.p, c % self.p)
        })
    }

    /// Largest deviation from blocks[i][j] = blocks[j][i]†.
    pub fn hermitian_block_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                dev = dev.max(self.block(i, j).max_abs_diff(&self.block(j, i).dagger()));
            }
        }
        dev
    }
}

/// Evaluates the kernel on all data pairs.
pub fn gram(kernel: &Kernel, data: &[DensityMatrix]) -> Result<BlockGram, KernelError> {
    if data.is_empty() {
        return Err(KernelError::InvalidSpec {
            context: "Gram matrix of an empty dataset".into(),
        });
    }
    let dim = data[0].dim();
    if data.iter().any(|d| d.dim() != dim) {
        return Err(KernelError::DimensionMismatch {
            context: "Gram data has non-uniform dimensions".into(),
        });
    }
    let n = data.len();
    let p = kernel.block_dim();
    let mut g = BlockGram {
        n,
        p,
        blocks: vec![ComplexMatrix::zeros(p, p); n * n],
    };
    for i in 0..n {
        for j in 0..n {
            g.set_block(i, j, kernel.evaluate(&data[i], &data[j])?);
        }
    }
    Ok(g)
}

/// Diagnostic result of a positive semidefiniteness check.
#[derive(Debug, Clone, Serialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub min_quadratic_form: Option<f64>,
    pub hermitian_block_deviation: f64,
    pub violation: bool,
}

/// Reports the minimum eigenvalue of the flattened Gram and the minimum
/// quadratic form Σ_{ij} ⟨y, G_ij y⟩ over the supplied probe vectors.
/// A violation is flagged, never assumed away.
pub fn validate_psd(g: &BlockGram, probes: &[Vec<C64>]) -> PsdReport {
    let tol = Tolerance::default();
    let flat = g.flatten();
    let block_dev = g.hermitian_block_deviation();
    let min_eigenvalue = flat
        .hermitian_part()
        .min_eigenvalue_hermitian(&tol)
        .unwrap_or(f64::NAN);

    let mut min_quad: Option<f64> = None;
    for y in probes {
        assert_eq!(y.len(), g.p(), "probe vectors must have length p");
        let mut q = C64::new(0.0, 0.0);
        for i in 0..g.n() {
            for j in 0..g.n() {
                let ky = g.block(i, j).matvec(y);
                let term: C64 = y.iter().zip(ky.iter()).map(|(a, b)| a.conj() * b).sum();
                q += term;
            }
        }
        let q = q.re;
        min_quad = Some(min_quad.map_or(q, |m: f64| m.min(q)));
    }

    let violation = min_eigenvalue < -tol.eps_psd
        || block_dev > tol.eps_structural
        || min_quad.is_some_and(|q| q < -tol.eps_psd);
    PsdReport {
        min_eigenvalue,
        min_quadratic_form: min_quad,
        hermitian_block_deviation: block_dev,
        violation,
    }
}

/// Completes an isometry (orthonormal columns) to a square unitary by
/// twice-iterated Gram-Schmidt over the remaining basis directions.
fn complete_to_unitary(isometry: &ComplexMatrix) -> ComplexMatrix {
    let n = isometry.rows();
    let k = isometry.cols();
    let mut columns: Vec<Vec<C64>> = (0..k)
        .map(|j| (0..n).map(|i| isometry.get(i, j)).collect())
        .collect();
    let mut basis_idx = 0usize;
    while columns.len() < n {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[basis_idx] = C64::new(1.0, 0.0);
        basis_idx += 1;
        for _ in 0..2 {
            for col in &columns {
                let dot: C64 = col.iter().zip(v.iter()).map(|(c, x)| c.conj() * x).sum();
                for (x, c) in v.iter_mut().zip(col.iter()) {
                    *x -= dot * c;
                }
            }
        }
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for x in &mut v {
            *x /= norm;
        }
        columns.push(v);
    }
    ComplexMatrix::from_fn(n, n, |i, j| columns[j][i])
}

/// Realizes a Kraus family {A_x} (p×m each, Σ A_x†A_x = I, at most m
/// operators) as a coupling unitary: paired with the pure basis output
/// state |0⟩⟨0|, the dilation kernel Tr_X[U(|0⟩⟨0|_Y ⊗ σ)U†] evaluates to
/// Σ_x A_x σ A_x†. This is the constructive inclusion of the Kraus kernel
/// class into the dilation class.
pub fn dilate_kraus_coupling(
    ops: &[ComplexMatrix],
    p: usize,
    m: usize,
) -> Result<ComplexMatrix, KernelError> {
    if ops.is_empty() || ops.len() > m {
        return Err(KernelError::InvalidSpec {
            context: format!("{} Kraus operators cannot dilate into {m} slots", ops.len()),
        });
    }
    let mut completeness = ComplexMatrix::zeros(m, m);
    for op in ops {
        if op.rows() != p || op.cols() != m {
            return Err(KernelError::InvalidSpec {
                context: format!(
                    "Kraus operator is {}x{}, expected {p}x{m}",
                    op.rows(),
                    op.cols()
                ),
            });
        }
        completeness = &completeness + &op.dagger().matmul(op);
    }
    let dev = completeness.max_abs_diff(&ComplexMatrix::identity(m));
    if dev > Tolerance::default().eps_structural {
        return Err(KernelError::InvalidSpec {
            context: format!("Kraus family is not an isometry (deviation {dev:.3e})"),
        });
    }
    // The dilation reads Kraus operator x out of the columns (0, j) of U:
    // A_x[y, j] = U[(y, x), (0, j)].
    let mut w = ComplexMatrix::zeros(p * m, m);
    for (x, op) in ops.iter().enumerate() {
        for y in 0..p {
            for j in 0..m {
                w.set(y * m + x, j, op.get(y, j));
            }
        }
    }
    Ok(complete_to_unitary(&w))
}

/// Singular values of the coupling realignment, descending. A coupling on a
/// p×m product factorizes as A⊗B exactly when one value is nonzero.
pub fn coupling_schmidt_values(
    u: &ComplexMatrix,
    p: usize,
    m: usize,
) -> Result<Vec<f64>, KernelError> {
    if u.rows() != p * m || u.cols() != p * m {
        return Err(KernelError::DimensionMismatch {
            context: format!(
                "realignment of {}x{} with factors {p} and {m}",
                u.rows(),
                u.cols()
            ),
        });
    }
    let realigned = ComplexMatrix::from_fn(p * p, m * m, |r, c| {
        let (y, y2) = (r / p, r % p);
        let (x, x2) = (c / m, c % m);
        u.get(y * m + x, y2 * m + x2)
    });
    let tol = Tolerance::default();
    let gram = realigned.dagger().matmul(&realigned).hermitian_part();
    let eig = gram.hermitian_eigen(&tol)?;
    let mut singular: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    singular.reverse();
    Ok(singular)
}

/// True when the coupling is within `rel_tol` of a separable A⊗B form.
pub fn coupling_is_separable(
    u: &ComplexMatrix,
    p: usize,
    m: usize,
    rel_tol: f64,
) -> Result<bool, KernelError> {
    let s = coupling_schmidt_values(u, p, m)?;
    Ok(s.len() < 2 || s[1] <= rel_tol * s[0].max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clinalg::haar_random_unitary;
    use crate::qstates::{random_density, to_density, PureState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pure_density(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        to_density(&PureState::haar_random(dim, rng))
    }

    #[test]
    fn symmetrized_coincides_with_input_on_equal_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = pure_density(4, &mut rng);
        let sigma = feature_matrix(FeatureMatrixRule::SymmetrizedForm, &rho, &rho).unwrap();
        assert!(sigma.max_abs_diff(rho.matrix()) < 1e-10);
    }

    #[test]
    fn symmetrized_orthogonal_states_average() {
        let rho0 = to_density(&PureState::basis(2, 0));
        let rho1 = to_density(&PureState::basis(2, 1));
        let sigma = feature_matrix(FeatureMatrixRule::SymmetrizedForm, &rho0, &rho1).unwrap();
        let expected = &(rho0.matrix().scale(C64::new(0.5, 0.0)))
            + &(rho1.matrix().scale(C64::new(0.5, 0.0)));
        assert!(sigma.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn symmetrized_output_is_a_density_matrix() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..25 {
            let a = pure_density(4, &mut rng);
            let b = pure_density(4, &mut rng);
            let sigma = feature_matrix(FeatureMatrixRule::SymmetrizedForm, &a, &b).unwrap();
            assert!(sigma.is_density(&tol));
        }
    }

    #[test]
    fn symmetrized_rejects_mixed_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mixed = random_density(2, 2, &mut rng).unwrap();
        let pure = pure_density(2, &mut rng);
        assert!(matches!(
            feature_matrix(FeatureMatrixRule::SymmetrizedForm, &mixed, &pure),
            Err(KernelError::MixedInput { .. })
        ));
    }

    #[test]
    fn product_form_on_projector() {
        let rho0 = to_density(&PureState::basis(2, 0));
        let sigma = feature_matrix(FeatureMatrixRule::ProductForm, &rho0, &rho0).unwrap();
        assert!(sigma.max_abs_diff(rho0.matrix()) < 1e-15);
    }

    #[test]
    fn scalar_kernel_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = PureState::haar_random(2, &mut rng);
        let rho = to_density(&psi);
        assert!((scalar_kernel(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((scalar_kernel(&mixed, &mixed).unwrap() - 0.5).abs() < 1e-15);
        let phi = PureState::haar_random(2, &mut rng);
        let k = scalar_kernel(&rho, &to_density(&phi)).unwrap();
        let f = crate::qstates::fidelity_pure(&psi, &phi).unwrap();
        assert!((k - f).abs() < 1e-12);
    }

    #[test]
    fn separable_unitary_reduces_to_scalar_times_output_state() {
        // Coupling I⊗B collapses the dilation to Tr(σ)·ρ_Y.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let b = haar_random_unitary(2, &mut rng);
            let u = ComplexMatrix::identity(2).tensor(&b).unwrap();
            let rho_y = random_density(2, 2, &mut rng).unwrap();
            let spec = OVKernelSpec::new(
                FeatureMatrixRule::ProductForm,
                Coupling::Unitary {
                    unitary: u,
                    output_state: rho_y.clone(),
                },
                2,
                2,
            )
            .unwrap();
            let x = random_density(2, 2, &mut rng).unwrap();
            let z = random_density(2, 2, &mut rng).unwrap();
            let k = eval_ovk(&spec, &x, &z).unwrap();
            let sigma = feature_matrix(FeatureMatrixRule::ProductForm, &x, &z).unwrap();
            let expected = rho_y.matrix().scale(sigma.trace());
            assert!(k.max_abs_diff(&expected) < 1e-10);
        }
    }

    #[test]
    fn single_identity_kraus_returns_feature_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let spec = OVKernelSpec::new(
            FeatureMatrixRule::ProductForm,
            Coupling::Kraus {
                ops: vec![ComplexMatrix::identity(2)],
            },
            2,
            2,
        )
        .unwrap();
        let x = random_density(2, 2, &mut rng).unwrap();
        let z = random_density(2, 2, &mut rng).unwrap();
        let k = eval_ovk(&spec, &x, &z).unwrap();
        let sigma = feature_matrix(FeatureMatrixRule::ProductForm, &x, &z).unwrap();
        assert!(k.max_abs_diff(&sigma) < 1e-14);
    }

    #[test]
    fn unitary_dilation_matches_index_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = 2;
        let m = 2;
        let u = haar_random_unitary(p * m, &mut rng);
        let rho_y = pure_density(p, &mut rng);
        let spec = OVKernelSpec::new(
            FeatureMatrixRule::SymmetrizedForm,
            Coupling::Unitary {
                unitary: u.clone(),
                output_state: rho_y.clone(),
            },
            p,
            m,
        )
        .unwrap();
        let x = pure_density(m, &mut rng);
        let z = pure_density(m, &mut rng);
        let k = eval_ovk(&spec, &x, &z).unwrap();

        // Oracle: expand K[a,b] = Σ_x Σ_{c,d,e,f} U[(a,x),(c,d)] (ρ_Y⊗σ)[(c,d),(e,f)]
        // conj(U[(b,x),(e,f)]) by explicit index summation.
        let sigma = feature_matrix(FeatureMatrixRule::SymmetrizedForm, &x, &z).unwrap();
        let mut oracle = ComplexMatrix::zeros(p, p);
        for a in 0..p {
            for b in 0..p {
                let mut sum = C64::new(0.0, 0.0);
                for xi in 0..m {
                    for c in 0..p {
                        for d in 0..m {
                            for e in 0..p {
                                for f in 0..m {
                                    sum += u.get(a * m + xi, c * m + d)
                                        * rho_y.matrix().get(c, e)
                                        * sigma.get(d, f)
                                        * u.get(b * m + xi, e * m + f).conj();
                                }
                            }
                        }
                    }
                }
                oracle.set(a, b, sum);
            }
        }
        assert!(k.max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn hermitian_symmetry_for_both_feature_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let u = haar_random_unitary(4, &mut rng);
        let rho_y = DensityMatrix::maximally_mixed(2);
        for rule in [FeatureMatrixRule::ProductForm, FeatureMatrixRule::SymmetrizedForm] {
            let spec = OVKernelSpec::new(
                rule,
                Coupling::Unitary {
                    unitary: u.clone(),
                    output_state: rho_y.clone(),
                },
                2,
                2,
            )
            .unwrap();
            for _ in 0..20 {
                let x = pure_density(2, &mut rng);
                let z = pure_density(2, &mut rng);
                let kxz = eval_ovk(&spec, &x, &z).unwrap();
                let kzx = eval_ovk(&spec, &z, &x).unwrap();
                assert!(kxz.max_abs_diff(&kzx.dagger()) < 1e-10);
            }
        }
    }

    #[test]
    fn pauli_kraus_set_is_trace_preserving_and_depolarizing() {
        for p in [2usize, 4] {
            let ops = pauli_kraus_set(p).unwrap();
            assert_eq!(ops.len(), p * p);
            let mut sum = ComplexMatrix::zeros(p, p);
            for op in &ops {
                sum = &sum + &op.dagger().matmul(op);
            }
            assert!(sum.max_abs_diff(&ComplexMatrix::identity(p)) < 1e-12);
        }
        // Full Pauli twirl sends any state to I/p: direct 4-term sum oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let rho = random_density(2, 2, &mut rng).unwrap();
        let ops = pauli_kraus_set(2).unwrap();
        let mut twirled = ComplexMatrix::zeros(2, 2);
        for op in &ops {
            twirled = &twirled + &op.matmul(rho.matrix()).matmul(&op.dagger());
        }
        let expected = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(twirled.max_abs_diff(&expected) < 1e-12);
        // Unital: I/2 is a fixed point.
        let mixed = DensityMatrix::maximally_mixed(2);
        let mut fixed = ComplexMatrix::zeros(2, 2);
        for op in &ops {
            fixed = &fixed + &op.matmul(mixed.matrix()).matmul(&op.dagger());
        }
        assert!(fixed.max_abs_diff(mixed.matrix()) < 1e-14);
    }

    #[test]
    fn unit_gram_and_permutation_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let psi = pure_density(2, &mut rng);
        let g = gram(&Kernel::Scalar, &[psi]).unwrap();
        assert_eq!(g.n(), 1);
        assert!((g.block(0, 0).get(0, 0).re - 1.0).abs() < 1e-12);

        let data: Vec<DensityMatrix> = (0..4)
            .map(|_| random_density(2, 2, &mut rng).unwrap())
            .collect();
        let g = gram(&Kernel::Scalar, &data).unwrap();
        let mut swapped = data.clone();
        swapped.swap(0, 2);
        let g2 = gram(&Kernel::Scalar, &swapped).unwrap();
        assert!(g.block(0, 2).max_abs_diff(g2.block(2, 0)) < 1e-15);
        assert!(g.block(1, 3).max_abs_diff(g2.block(1, 3)) < 1e-15);
    }

    #[test]
    fn validate_psd_flags_corrupted_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let data: Vec<DensityMatrix> = (0..5)
            .map(|_| pure_density(2, &mut rng))
            .collect();
        let mut g = gram(&Kernel::Scalar, &data).unwrap();
        let probes = vec![vec![C64::new(1.0, 0.0)]];
        let report = validate_psd(&g, &probes);
        assert!(!report.violation);
        assert!(report.min_eigenvalue > -1e-10);

        // Break block symmetry deliberately.
        g.set_block(
            0,
            1,
            ComplexMatrix::from_entries(1, 1, vec![C64::new(9.0, 1.0)]).unwrap(),
        );
        let report = validate_psd(&g, &probes);
        assert!(report.violation);
        assert!(report.hermitian_block_deviation > 1.0);
    }

    #[test]
    fn identity_gram_report() {
        let g = BlockGram {
            n: 3,
            p: 1,
            blocks: (0..9)
                .map(|k| {
                    let v = if k % 4 == 0 { 1.0 } else { 0.0 };
                    ComplexMatrix::from_entries(1, 1, vec![C64::new(v, 0.0)]).unwrap()
                })
                .collect(),
        };
        let report = validate_psd(&g, &[]);
        assert!((report.min_eigenvalue - 1.0).abs() < 1e-12);
        assert!(!report.violation);
    }

    #[test]
    fn kraus_kernels_embed_into_dilation_kernels() {
        // Dual route: the dilated coupling with the pure basis output state
        // reproduces the Kraus-form kernel exactly. The embedding needs
        // Kraus rank at most m, so use a weighted two-operator family.
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let ops = vec![
            ComplexMatrix::identity(2).scale(C64::new(0.7_f64.sqrt(), 0.0)),
            crate::clinalg::gates::pauli_x().scale(C64::new(0.3_f64.sqrt(), 0.0)),
        ];
        let u = dilate_kraus_coupling(&ops, 2, 2).unwrap();
        assert!(u.is_unitary(&tol));
        let kraus_spec = OVKernelSpec::new(
            FeatureMatrixRule::ProductForm,
            Coupling::Kraus { ops },
            2,
            2,
        )
        .unwrap();
        let dilated_spec = OVKernelSpec::new(
            FeatureMatrixRule::ProductForm,
            Coupling::Unitary {
                unitary: u,
                output_state: to_density(&PureState::basis(2, 0)),
            },
            2,
            2,
        )
        .unwrap();
        for _ in 0..10 {
            let x = random_density(2, 2, &mut rng).unwrap();
            let z = random_density(2, 2, &mut rng).unwrap();
            let via_kraus = eval_ovk(&kraus_spec, &x, &z).unwrap();
            let via_dilation = eval_ovk(&dilated_spec, &x, &z).unwrap();
            assert!(via_kraus.max_abs_diff(&via_dilation) < 1e-10);
        }
    }

    #[test]
    fn dilation_rejects_non_isometric_families() {
        let ops = vec![ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0))];
        assert!(matches!(
            dilate_kraus_coupling(&ops, 2, 2),
            Err(KernelError::InvalidSpec { .. })
        ));
    }

    #[test]
    fn schmidt_values_detect_separable_couplings() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let a = haar_random_unitary(2, &mut rng);
        let b = haar_random_unitary(3, &mut rng);
        let sep = a.tensor(&b).unwrap();
        assert!(coupling_is_separable(&sep, 2, 3, 1e-6).unwrap());
        let entangled = haar_random_unitary(6, &mut rng);
        assert!(!coupling_is_separable(&entangled, 2, 3, 1e-6).unwrap());
    }

    #[test]
    fn spec_serialization_round_trip() {
        let spec = OVKernelSpec::new(
            FeatureMatrixRule::ProductForm,
            Coupling::Kraus {
                ops: pauli_kraus_set(2).unwrap(),
            },
            2,
            2,
        )
        .unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"feature_rule\":\"product_form\""));
        assert!(text.contains("\"type\":\"kraus\""));
        assert!(text.contains("\"p\":2"));
        let back: OVKernelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
