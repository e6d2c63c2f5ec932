//! Kernel ridge regression with operator-valued kernels over the complex
//! field, plus the scalar-kernel baseline (p independent scalar regressions
//! on the same Gram).
//!
//! Vectorization convention is column-major everywhere: vec(M)[j·b + i] =
//! M[i, j].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clinalg::{ComplexMatrix, LinalgError, Tolerance, C64};
use crate::qkernels::{gram, Kernel, KernelError};
use crate::qstates::DensityMatrix;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("ridge parameter must be positive, got {ridge}")]
    InvalidRidge { ridge: f64 },
    #[error("training set is malformed: {context}")]
    InvalidTrainingSet { context: String },
    #[error("label length {label_len} does not match kernel output dimension {p}")]
    LabelMismatch { label_len: usize, p: usize },
    #[error("flattened Gram deviates from Hermitian by {deviation:.3e}")]
    GramAsymmetric { deviation: f64 },
    #[error("fit residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Column-major vectorization of a matrix.
pub fn vectorize(m: &ComplexMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.rows() * m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            out.push(m.get(i, j));
        }
    }
    out
}

/// Column-major reshape of a length-b² vector into a b×b matrix.
pub fn unvectorize(v: &[C64], b: usize) -> Result<ComplexMatrix, RegressionError> {
    if v.len() != b * b {
        return Err(RegressionError::InvalidTrainingSet {
            context: format!("vector of length {} cannot reshape to {b}x{b}", v.len()),
        });
    }
    Ok(ComplexMatrix::from_fn(b, b, |i, j| v[j * b + i]))
}

/// Training inputs (density matrices) and complex label vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrainingSetWire", into = "TrainingSetWire")]
pub struct TrainingSet {
    inputs: Vec<DensityMatrix>,
    labels: Vec<Vec<C64>>,
}

#[derive(Serialize, Deserialize)]
struct TrainingSetWire {
    inputs: Vec<DensityMatrix>,
    /// n×p matrix, one label vector per row.
    labels: ComplexMatrix,
}

impl From<TrainingSet> for TrainingSetWire {
    fn from(ts: TrainingSet) -> Self {
        let n = ts.labels.len();
        let p = ts.labels.first().map_or(0, |l| l.len());
        TrainingSetWire {
            inputs: ts.inputs,
            labels: ComplexMatrix::from_fn(n, p, |i, j| ts.labels[i][j]),
        }
    }
}

impl TryFrom<TrainingSetWire> for TrainingSet {
    type Error = String;

    fn try_from(w: TrainingSetWire) -> Result<Self, String> {
        let labels = (0..w.labels.rows())
            .map(|i| (0..w.labels.cols()).map(|j| w.labels.get(i, j)).collect())
            .collect();
        TrainingSet::new(w.inputs, labels).map_err(|e| e.to_string())
    }
}

impl TrainingSet {
    pub fn new(
        inputs: Vec<DensityMatrix>,
        labels: Vec<Vec<C64>>,
    ) -> Result<Self, RegressionError> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(RegressionError::InvalidTrainingSet {
                context: format!("{} inputs against {} labels", inputs.len(), labels.len()),
            });
        }
        let dim = inputs[0].dim();
        if inputs.iter().any(|x| x.dim() != dim) {
            return Err(RegressionError::InvalidTrainingSet {
                context: "inputs have non-uniform dimensions".into(),
            });
        }
        let p = labels[0].len();
        if p == 0 || labels.iter().any(|l| l.len() != p) {
            return Err(RegressionError::InvalidTrainingSet {
                context: "labels have non-uniform or zero length".into(),
            });
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[DensityMatrix] {
        &self.inputs
    }

    pub fn labels(&self) -> &[Vec<C64>] {
        &self.labels
    }

    pub fn label_dim(&self) -> usize {
        self.labels[0].len()
    }
}

/// A fitted kernel ridge regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelWire", into = "ModelWire")]
pub struct RegressionModel {
    kernel: Kernel,
    /// One coefficient vector of length p per training input.
    coefficients: Vec<Vec<C64>>,
    ridge: f64,
    training_inputs: Vec<DensityMatrix>,
}

#[derive(Serialize, Deserialize)]
struct ModelWire {
    kernel: Kernel,
    coefficients: ComplexMatrix,
    ridge: f64,
    training_inputs: Vec<DensityMatrix>,
}

impl From<RegressionModel> for ModelWire {
    fn from(m: RegressionModel) -> Self {
        let n = m.coefficients.len();
        let p = m.coefficients.first().map_or(0, |c| c.len());
        ModelWire {
            kernel: m.kernel,
            coefficients: ComplexMatrix::from_fn(n, p, |i, j| m.coefficients[i][j]),
            ridge: m.ridge,
            training_inputs: m.training_inputs,
        }
    }
}

impl TryFrom<ModelWire> for RegressionModel {
    type Error = String;

    fn try_from(w: ModelWire) -> Result<Self, String> {
        if w.coefficients.rows() != w.training_inputs.len() {
            return Err("coefficient count does not match training inputs".into());
        }
        let coefficients = (0..w.coefficients.rows())
            .map(|i| {
                (0..w.coefficients.cols())
                    .map(|j| w.coefficients.get(i, j))
                    .collect()
            })
            .collect();
        Ok(RegressionModel {
            kernel: w.kernel,
            coefficients,
            ridge: w.ridge,
            training_inputs: w.training_inputs,
        })
    }
}

impl RegressionModel {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn coefficients(&self) -> &[Vec<C64>] {
        &self.coefficients
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Fits a kernel ridge regression model: solves (G + λI)c = y on the
/// flattened block Gram (operator-valued case) or p independent n×n systems
/// sharing one scalar Gram (scalar case).
pub fn fit(ts: &TrainingSet, kernel: Kernel, ridge: f64) -> Result<RegressionModel, RegressionError> {
    let tol = Tolerance::default();
    if !ridge.is_finite() || ridge <= 0.0 {
        return Err(RegressionError::InvalidRidge { ridge });
    }
    let n = ts.len();
    let p = ts.label_dim();
    if let Kernel::OperatorValued(spec) = &kernel {
        if spec.p != p {
            return Err(RegressionError::LabelMismatch {
                label_len: p,
                p: spec.p,
            });
        }
    }

    let coefficients = match &kernel {
        Kernel::Scalar => {
            let g = gram(&kernel, ts.inputs())?.flatten();
            let dev = g.hermitian_deviation();
            if dev > tol.eps_structural {
                return Err(RegressionError::GramAsymmetric { deviation: dev });
            }
            let mut system = g.hermitian_part();
            for i in 0..n {
                let v = system.get(i, i) + C64::new(ridge, 0.0);
                system.set(i, i, v);
            }
            let rhs = ComplexMatrix::from_fn(n, p, |i, j| ts.labels()[i][j]);
            let solution = system.solve_hermitian(&rhs)?;
            check_residual(&system, &solution, &rhs)?;
            (0..n)
                .map(|i| (0..p).map(|j| solution.get(i, j)).collect())
                .collect()
        }
        Kernel::OperatorValued(_) => {
            let g = gram(&kernel, ts.inputs())?.flatten();
            let dev = g.hermitian_deviation();
            if dev > tol.eps_structural {
                return Err(RegressionError::GramAsymmetric { deviation: dev });
            }
            let side = n * p;
            let mut system = g.hermitian_part();
            for i in 0..side {
                let v = system.get(i, i) + C64::new(ridge, 0.0);
                system.set(i, i, v);
            }
            let rhs = ComplexMatrix::from_fn(side, 1, |i, _| ts.labels()[i / p][i % p]);
            let solution = system.solve_hermitian(&rhs)?;
            check_residual(&system, &solution, &rhs)?;
            (0..n)
                .map(|i| (0..p).map(|j| solution.get(i * p + j, 0)).collect())
                .collect()
        }
    };

    Ok(RegressionModel {
        kernel,
        coefficients,
        ridge,
        training_inputs: ts.inputs().to_vec(),
    })
}

fn check_residual(
    system: &ComplexMatrix,
    solution: &ComplexMatrix,
    rhs: &ComplexMatrix,
) -> Result<(), RegressionError> {
    let residual = (&system.matmul(solution) - rhs).frobenius_norm();
    let bound = 1e-8 * rhs.frobenius_norm().max(1e-300);
    if residual > bound {
        return Err(RegressionError::ResidualTooLarge { residual, bound });
    }
    Ok(())
}

/// Representer prediction Σ_i K(x, x_i)·c_i.
pub fn predict(model: &RegressionModel, x: &DensityMatrix) -> Result<Vec<C64>, RegressionError> {
    let p = model.coefficients.first().map_or(0, |c| c.len());
    let mut out = vec![C64::new(0.0, 0.0); p];
    for (xi, ci) in model.training_inputs.iter().zip(model.coefficients.iter()) {
        match &model.kernel {
            Kernel::Scalar => {
                let k = crate::qkernels::scalar_kernel(x, xi)?;
                for (o, c) in out.iter_mut().zip(ci.iter()) {
                    *o += C64::new(k, 0.0) * c;
                }
            }
            Kernel::OperatorValued(spec) => {
                let block = crate::qkernels::eval_ovk(spec, x, xi)?;
                let contrib = block.matvec(ci);
                for (o, c) in out.iter_mut().zip(contrib.iter()) {
                    *o += c;
                }
            }
        }
    }
    Ok(out)
}
