//! The channel-estimation experiment end to end: data generation, noise
//! injection, training every kernel variant, channel reconstruction, error
//! tables and heatmap grids.

mod heatmap;

pub use heatmap::emit_heatmaps;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{
    apply, random_pauli_channel, reconstruct_channel, recovery_error, to_choi, QuantumChannel,
};
use crate::clinalg::{gates, haar_random_unitary, ComplexMatrix, C64};
use crate::ovkrr::{fit, predict, unvectorize, vectorize, TrainingSet};
use crate::qkernels::{coupling_is_separable, Coupling, FeatureMatrixRule, Kernel, OVKernelSpec};
use crate::qstates::{random_density, to_density, DensityMatrix, PureState};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {context}")]
    InvalidConfig { context: String },
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err(stage: &'static str, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Stage {
        stage,
        message: e.to_string(),
    }
}

/// Channel family used for ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Pauli,
}

/// Kernel methods compared by the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    ScalarBaseline,
    SeparableOvk,
    EntangledUnitary,
    EntangledKrausPauli,
}

impl KernelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            KernelVariant::ScalarBaseline => "scalar_baseline",
            KernelVariant::SeparableOvk => "separable_ovk",
            KernelVariant::EntangledUnitary => "entangled_unitary",
            KernelVariant::EntangledKrausPauli => "entangled_kraus_pauli",
        }
    }

    pub fn is_entangled(&self) -> bool {
        matches!(
            self,
            KernelVariant::EntangledUnitary | KernelVariant::EntangledKrausPauli
        )
    }
}

/// How training inputs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Full-rank random densities.
    RandomFullRank,
    /// The canonical tomography probes padded with random pure states.
    InformationallyCompletePure,
}

/// How the depolarizing label noise is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelNoiseModel {
    /// The mean map: every label becomes (1−λ)Φ(ρ) + (λ/p)I.
    MeanMap,
    /// The ensemble unraveling of the same channel: with probability λ a
    /// label is replaced by I/p, otherwise kept exact.
    Unraveled,
}

fn default_qubit_dim() -> usize {
    2
}
fn default_n_train() -> usize {
    10
}
fn default_n_channels() -> usize {
    10
}
fn default_noise_lambda() -> f64 {
    0.1
}
fn default_ridge_grid() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}
fn default_variants() -> Vec<KernelVariant> {
    vec![
        KernelVariant::ScalarBaseline,
        KernelVariant::SeparableOvk,
        KernelVariant::EntangledUnitary,
        KernelVariant::EntangledKrausPauli,
    ]
}
fn default_seed() -> u64 {
    0
}
fn default_input_mode() -> InputMode {
    InputMode::RandomFullRank
}
fn default_label_noise() -> LabelNoiseModel {
    LabelNoiseModel::MeanMap
}
fn default_n_probe() -> usize {
    20
}
fn default_channel_kind() -> ChannelKind {
    ChannelKind::Pauli
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_channel_kind")]
    pub channel_kind: ChannelKind,
    /// Input/output matrix dimension of the estimated channel.
    #[serde(default = "default_qubit_dim")]
    pub qubit_dim: usize,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_channels")]
    pub n_channels: usize,
    #[serde(default = "default_noise_lambda")]
    pub noise_lambda: f64,
    #[serde(default = "default_ridge_grid")]
    pub ridge_grid: Vec<f64>,
    #[serde(default = "default_variants")]
    pub kernel_variants: Vec<KernelVariant>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_input_mode")]
    pub input_mode: InputMode,
    #[serde(default = "default_label_noise")]
    pub label_noise: LabelNoiseModel,
    /// Held-out noiseless densities used for ridge selection.
    #[serde(default = "default_n_probe")]
    pub n_probe: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("default config")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |context: String| Err(ExperimentError::InvalidConfig { context });
        if self.qubit_dim != 2 && self.qubit_dim != 4 {
            return bad(format!("qubit_dim must be 2 or 4, got {}", self.qubit_dim));
        }
        if self.n_train == 0 || self.n_channels == 0 || self.n_probe == 0 {
            return bad("counts must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.noise_lambda) {
            return bad(format!(
                "noise_lambda must lie in [0, 1], got {}",
                self.noise_lambda
            ));
        }
        if self.ridge_grid.is_empty() || self.ridge_grid.iter().any(|&r| r <= 0.0) {
            return bad("ridge grid must be non-empty and positive".into());
        }
        if self.kernel_variants.is_empty() {
            return bad("at least one kernel variant required".into());
        }
        if self.input_mode == InputMode::InformationallyCompletePure
            && self.n_train < self.qubit_dim * self.qubit_dim
        {
            return bad(format!(
                "informationally complete inputs need at least {} samples",
                self.qubit_dim * self.qubit_dim
            ));
        }
        Ok(())
    }

    /// Label vector length: vectorized output matrices.
    pub fn label_dim(&self) -> usize {
        self.qubit_dim * self.qubit_dim
    }
}

/// Deterministic sub-generator: one ChaCha stream per (seed, purpose).
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const STREAM_CHANNEL: u64 = 1;
const STREAM_DATA: u64 = 2;
const STREAM_PROBE: u64 = 3;
const STREAM_KERNEL: u64 = 4;
const STREAM_BLOCK: u64 = 64;

/// Draws one label with the configured depolarizing noise.
fn noisy_label<R: Rng + ?Sized>(
    exact: &DensityMatrix,
    noise_lambda: f64,
    model: LabelNoiseModel,
    rng: &mut R,
) -> Result<DensityMatrix, ExperimentError> {
    match model {
        LabelNoiseModel::MeanMap => crate::channels::depolarize(exact, noise_lambda)
            .map_err(|e| stage_err("label-noise", e)),
        LabelNoiseModel::Unraveled => {
            if rng.gen::<f64>() < noise_lambda {
                Ok(DensityMatrix::maximally_mixed(exact.dim()))
            } else {
                Ok(exact.clone())
            }
        }
    }
}

/// Draws training inputs according to the configured input mode.
fn draw_inputs<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> Result<Vec<DensityMatrix>, ExperimentError> {
    match cfg.input_mode {
        InputMode::RandomFullRank => (0..cfg.n_train)
            .map(|_| {
                random_density(cfg.qubit_dim, cfg.qubit_dim, rng)
                    .map_err(|e| stage_err("generate-inputs", e))
            })
            .collect(),
        InputMode::InformationallyCompletePure => {
            let mut inputs = crate::channels::tomography_probes(cfg.qubit_dim)
                .map_err(|e| stage_err("generate-inputs", e))?;
            inputs.truncate(cfg.n_train);
            while inputs.len() < cfg.n_train {
                inputs.push(to_density(&PureState::haar_random(cfg.qubit_dim, rng)));
            }
            Ok(inputs)
        }
    }
}

/// Generates a training set for one channel: random input densities and
/// vectorized noisy channel outputs.
pub fn generate_dataset<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    channel: &QuantumChannel,
    rng: &mut R,
) -> Result<TrainingSet, ExperimentError> {
    let inputs = draw_inputs(cfg, rng)?;
    let mut labels = Vec::with_capacity(inputs.len());
    for rho in &inputs {
        let exact = apply(channel, rho).map_err(|e| stage_err("apply-channel", e))?;
        let noisy = noisy_label(&exact, cfg.noise_lambda, cfg.label_noise, rng)?;
        labels.push(vectorize(noisy.matrix()));
    }
    TrainingSet::new(inputs, labels).map_err(|e| stage_err("assemble-dataset", e))
}

/// Input representation used by a kernel variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLift {
    /// Feed the raw density matrix.
    Raw,
    /// Feed the rank-one density of the padded vectorization
    /// [vec(ρ); √(1−Tr ρ²)]: the vectorized entries stay unscaled and the
    /// slack coordinate restores unit norm, so the lift embeds ρ linearly
    /// in its leading d² coordinates.
    VectorizedSlack,
}

pub fn lift_input(lift: InputLift, rho: &DensityMatrix) -> DensityMatrix {
    match lift {
        InputLift::Raw => rho.clone(),
        InputLift::VectorizedSlack => {
            let mut w = vectorize(rho.matrix());
            let purity: f64 = w.iter().map(|c| c.norm_sqr()).sum();
            w.push(C64::new((1.0 - purity).max(0.0).sqrt(), 0.0));
            DensityMatrix::from_matrix_unchecked(ComplexMatrix::outer(&w, &w))
        }
    }
}

/// Diagonal Pauli-pair Kraus operators restricted to the vectorized-input
/// block of the slack-lifted feature space: M_k = s·(σ_k⊗σ_k)·[I | 0]/√r.
fn diagonal_pauli_kraus(d: usize, scale: f64) -> Vec<ComplexMatrix> {
    let basis = pauli_basis(d);
    let p = d * d;
    let m = p + 1;
    let factor = C64::new(scale / (basis.len() as f64).sqrt(), 0.0);
    basis
        .iter()
        .map(|sigma| {
            let pair = sigma.tensor(sigma).unwrap();
            ComplexMatrix::from_fn(p, m, |i, j| {
                if j < p {
                    pair.get(i, j) * factor
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect()
}

/// The Pauli basis of the given dimension (4 or 16 matrices).
fn pauli_basis(dim: usize) -> Vec<ComplexMatrix> {
    let singles = gates::paulis();
    match dim {
        2 => singles.to_vec(),
        4 => {
            let mut out = Vec::with_capacity(16);
            for a in &singles {
                for b in &singles {
                    out.push(a.tensor(b).unwrap());
                }
            }
            out
        }
        _ => unreachable!("validated dimensions are 2 and 4"),
    }
}

/// Builds the kernel and input representation for one variant.
///
/// The entangled Kraus variant acts on the slack-lifted vectorized inputs
/// with its operators fixed to the diagonal Pauli pairs σ_k⊗σ_k — never
/// learned. The entangled unitary variant draws a Haar-random coupling on
/// the raw product space, resampling in the measure-zero event that the
/// draw is within tolerance of a separable A⊗B form.
pub fn build_variant<R: Rng + ?Sized>(
    variant: KernelVariant,
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> Result<(Kernel, InputLift), ExperimentError> {
    let d = cfg.qubit_dim;
    let p = cfg.label_dim();
    match variant {
        KernelVariant::ScalarBaseline => Ok((Kernel::Scalar, InputLift::Raw)),
        KernelVariant::SeparableOvk => {
            let b = haar_random_unitary(d, rng);
            let unitary = ComplexMatrix::identity(p)
                .tensor(&b)
                .map_err(|e| stage_err("build-kernel", e))?;
            let spec = OVKernelSpec::new(
                FeatureMatrixRule::ProductForm,
                Coupling::Unitary {
                    unitary,
                    output_state: DensityMatrix::maximally_mixed(p),
                },
                p,
                d,
            )
            .map_err(|e| stage_err("build-kernel", e))?;
            Ok((Kernel::OperatorValued(spec), InputLift::Raw))
        }
        KernelVariant::EntangledUnitary => {
            let unitary = loop {
                let candidate = haar_random_unitary(p * d, rng);
                let separable = coupling_is_separable(&candidate, p, d, 1e-6)
                    .map_err(|e| stage_err("build-kernel", e))?;
                if !separable {
                    break candidate;
                }
            };
            let spec = OVKernelSpec::new(
                FeatureMatrixRule::ProductForm,
                Coupling::Unitary {
                    unitary,
                    output_state: DensityMatrix::maximally_mixed(p),
                },
                p,
                d,
            )
            .map_err(|e| stage_err("build-kernel", e))?;
            Ok((Kernel::OperatorValued(spec), InputLift::Raw))
        }
        KernelVariant::EntangledKrausPauli => {
            let spec = OVKernelSpec::new(
                FeatureMatrixRule::ProductForm,
                Coupling::Kraus {
                    ops: diagonal_pauli_kraus(d, 1.0),
                },
                p,
                p + 1,
            )
            .map_err(|e| stage_err("build-kernel", e))?;
            Ok((Kernel::OperatorValued(spec), InputLift::VectorizedSlack))
        }
    }
}

/// Result of fitting one variant on one channel.
#[derive(Debug, Clone, Serialize)]
pub struct VariantFit {
    pub variant: KernelVariant,
    pub recovery_error: f64,
    pub selected_ridge: f64,
    /// Learned Choi matrix (raw, no CPTP projection).
    pub learned_choi: ComplexMatrix,
}

/// Fits every configured variant on one channel's dataset and measures the
/// channel-recovery error of each.
pub fn run_channel_trial(
    cfg: &ExperimentConfig,
    channel: &QuantumChannel,
    channel_index: usize,
) -> Result<Vec<VariantFit>, ExperimentError> {
    let base = cfg.seed;
    let block = STREAM_BLOCK * (channel_index as u64 + 1);
    let mut data_rng = task_rng(base, block + STREAM_DATA);
    let dataset = generate_dataset(cfg, channel, &mut data_rng)?;

    // Held-out noiseless probe pairs for ridge selection, shared by all
    // variants of this trial.
    let mut probe_rng = task_rng(base, block + STREAM_PROBE);
    let mut probes = Vec::with_capacity(cfg.n_probe);
    for _ in 0..cfg.n_probe {
        let rho = random_density(cfg.qubit_dim, cfg.qubit_dim, &mut probe_rng)
            .map_err(|e| stage_err("probe-set", e))?;
        let out = apply(channel, &rho).map_err(|e| stage_err("probe-set", e))?;
        probes.push((rho, out));
    }

    let mut fits = Vec::with_capacity(cfg.kernel_variants.len());
    for (v_idx, &variant) in cfg.kernel_variants.iter().enumerate() {
        let mut kernel_rng = task_rng(base, block + STREAM_KERNEL + v_idx as u64);
        let (kernel, lift) = build_variant(variant, cfg, &mut kernel_rng)?;

        let lifted_inputs: Vec<DensityMatrix> = dataset
            .inputs()
            .iter()
            .map(|rho| lift_input(lift, rho))
            .collect();
        let train = TrainingSet::new(lifted_inputs, dataset.labels().to_vec())
            .map_err(|e| stage_err("lift-dataset", e))?;

        let mut best: Option<(f64, f64, crate::ovkrr::RegressionModel)> = None;
        for &ridge in &cfg.ridge_grid {
            let model =
                fit(&train, kernel.clone(), ridge).map_err(|e| stage_err("fit", e))?;
            let mut err_sum = 0.0;
            for (rho, out_true) in &probes {
                let pred = predict(&model, &lift_input(lift, rho))
                    .map_err(|e| stage_err("probe-predict", e))?;
                let pred_mat =
                    unvectorize(&pred, cfg.qubit_dim).map_err(|e| stage_err("probe-predict", e))?;
                err_sum += (&pred_mat - out_true.matrix()).frobenius_norm();
            }
            let probe_error = err_sum / probes.len() as f64;
            if best.as_ref().is_none_or(|(e, _, _)| probe_error < *e) {
                best = Some((probe_error, ridge, model));
            }
        }
        let (_, selected_ridge, model) = best.expect("non-empty ridge grid");

        let learned = reconstruct_channel(
            |rho| {
                let pred = predict(&model, &lift_input(lift, rho)).map_err(|e| {
                    crate::channels::ChannelError::Reconstruction {
                        context: e.to_string(),
                    }
                })?;
                unvectorize(&pred, cfg.qubit_dim)
                    .map_err(|e| crate::channels::ChannelError::Reconstruction {
                        context: e.to_string(),
                    })
            },
            cfg.qubit_dim,
            cfg.qubit_dim,
        )
        .map_err(|e| stage_err("reconstruct", e))?;
        let error = recovery_error(channel, &learned).map_err(|e| stage_err("recovery", e))?;
        fits.push(VariantFit {
            variant,
            recovery_error: error,
            selected_ridge,
            learned_choi: learned.choi,
        });
    }
    Ok(fits)
}

/// Summary statistics for one variant over all channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantSummary {
    pub errors: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 by convention for a single channel.
    pub std: f64,
    pub selected_ridges: Vec<f64>,
}

/// Aggregated result of one full experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub config: ExperimentConfig,
    pub variants: BTreeMap<String, VariantSummary>,
    /// True when n_channels = 1 makes the reported std degenerate.
    pub degenerate_std: bool,
    /// Runtime record of the modelling choices baked into this run.
    pub decisions: Vec<String>,
}

impl TrialResult {
    pub fn summary(&self, variant: KernelVariant) -> Option<&VariantSummary> {
        self.variants.get(variant.name())
    }

    /// The central comparison: every entangled variant beats the scalar
    /// baseline in mean recovery error.
    pub fn entangled_strictly_better(&self) -> Option<bool> {
        let scalar = self.summary(KernelVariant::ScalarBaseline)?;
        let entangled: Vec<&VariantSummary> = self
            .config
            .kernel_variants
            .iter()
            .filter(|v| v.is_entangled())
            .filter_map(|v| self.summary(*v))
            .collect();
        if entangled.is_empty() {
            return None;
        }
        Some(entangled.iter().all(|s| s.mean < scalar.mean))
    }
}

fn mean_and_std(errors: &[f64]) -> (f64, f64) {
    let n = errors.len();
    let mean = errors.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Runs the full experiment: n_channels random channels, each fitted by
/// every variant, reduced in channel order regardless of scheduling.
pub fn run_trial(cfg: &ExperimentConfig) -> Result<TrialResult, ExperimentError> {
    cfg.validate()?;
    let channels: Vec<QuantumChannel> = (0..cfg.n_channels)
        .map(|i| {
            let mut rng = task_rng(cfg.seed, STREAM_BLOCK * (i as u64 + 1) + STREAM_CHANNEL);
            random_pauli_channel(cfg.qubit_dim, &mut rng).map_err(|e| stage_err("channel", e))
        })
        .collect::<Result<_, _>>()?;

    let per_channel: Vec<Vec<VariantFit>> = channels
        .par_iter()
        .enumerate()
        .map(|(i, ch)| run_channel_trial(cfg, ch, i))
        .collect::<Result<_, _>>()?;

    let mut variants = BTreeMap::new();
    for (v_idx, &variant) in cfg.kernel_variants.iter().enumerate() {
        let errors: Vec<f64> = per_channel
            .iter()
            .map(|fits| fits[v_idx].recovery_error)
            .collect();
        let ridges: Vec<f64> = per_channel
            .iter()
            .map(|fits| fits[v_idx].selected_ridge)
            .collect();
        let (mean, std) = mean_and_std(&errors);
        variants.insert(
            variant.name().to_string(),
            VariantSummary {
                errors,
                mean,
                std,
                selected_ridges: ridges,
            },
        );
    }

    Ok(TrialResult {
        config: cfg.clone(),
        variants,
        degenerate_std: cfg.n_channels == 1,
        decisions: run_decisions(cfg),
    })
}

fn run_decisions(cfg: &ExperimentConfig) -> Vec<String> {
    vec![
        format!(
            "label noise: depolarizing channel at lambda = {} realized as {:?}",
            cfg.noise_lambda, cfg.label_noise
        ),
        "training inputs: Ginibre random densities (full rank) unless configured otherwise"
            .to_string(),
        "ridge selection: best mean Frobenius prediction error on a held-out noiseless probe set, identical protocol for every variant".to_string(),
        "separable/entangled dilations use the maximally mixed output state".to_string(),
        "entangled Kraus variant: diagonal Pauli pairs on the normalized vectorization of the input".to_string(),
        "summaries report the sample standard deviation".to_string(),
    ]
}

/// Channels and per-variant learned Choi matrices for one channel index,
/// used by heatmap emission.
pub fn run_single_channel(
    cfg: &ExperimentConfig,
    channel_index: usize,
) -> Result<(QuantumChannel, Vec<VariantFit>), ExperimentError> {
    cfg.validate()?;
    if channel_index >= cfg.n_channels {
        return Err(ExperimentError::InvalidConfig {
            context: format!(
                "channel index {channel_index} out of range for {} channels",
                cfg.n_channels
            ),
        });
    }
    let mut rng = task_rng(
        cfg.seed,
        STREAM_BLOCK * (channel_index as u64 + 1) + STREAM_CHANNEL,
    );
    let channel =
        random_pauli_channel(cfg.qubit_dim, &mut rng).map_err(|e| stage_err("channel", e))?;
    let fits = run_channel_trial(cfg, &channel, channel_index)?;
    Ok((channel, fits))
}

/// Convenience: the true Choi matrix of a channel.
pub fn true_choi(channel: &QuantumChannel) -> Result<ComplexMatrix, ExperimentError> {
    to_choi(channel).map_err(|e| stage_err("choi", e))
}
