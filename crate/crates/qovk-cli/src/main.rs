//! Command-line entry point for the qovk laboratory.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors. Every subcommand honors --seed and writes all
//! artifacts strictly under the --out directory, including an echo of the
//! fully resolved configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use qovk::channels::random_pauli_channel;
use qovk::circuit::analytic::verify_circuit_equations;
use qovk::circuit::{sample_shots, CircuitState, RegisterName};
use qovk::experiment::{
    build_variant, emit_heatmaps, generate_dataset, lift_input, run_single_channel, run_trial,
    task_rng, true_choi, ExperimentConfig, InputLift, KernelVariant,
};
use qovk::ovkrr::{fit, predict, unvectorize, RegressionModel, TrainingSet};
use qovk::qstates::{DensityMatrix, PureState};

#[derive(Parser)]
#[command(name = "qovk", version, about = "Operator-valued quantum kernel laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; all artifacts land strictly under it.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker thread cap (default: hardware parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Configuration override, key=value (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Shot count for measurement-statistics sampling.
    #[arg(long, global = true)]
    shots: Option<usize>,

    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random channel and a noisy training set.
    GenData,
    /// Fit one kernel variant on a saved dataset.
    Train {
        /// Dataset file produced by gen-data.
        #[arg(long)]
        dataset: PathBuf,
        /// Kernel variant to fit.
        #[arg(long, default_value = "entangled_kraus_pauli")]
        variant: String,
        /// Ridge parameter.
        #[arg(long, default_value_t = 1e-3)]
        ridge: f64,
    },
    /// Predict the channel output for a saved state with a saved model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Input state file (density matrix JSON).
        #[arg(long)]
        state: PathBuf,
    },
    /// Run the full channel-estimation comparison and write results.
    ReproduceTable1,
    /// Check the simulated circuit against its closed-form expressions.
    CircuitVerify {
        /// Number of random instances.
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// Evaluate one kernel variant at a pair of states.
    KernelEval {
        #[arg(long, default_value = "entangled_kraus_pauli")]
        variant: String,
        /// First state file; a seeded random density when omitted.
        #[arg(long)]
        x: Option<PathBuf>,
        /// Second state file; a seeded random density when omitted.
        #[arg(long)]
        z: Option<PathBuf>,
    },
    /// Emit heatmap grids for one channel's true and learned Choi matrices.
    EmitHeatmap {
        /// Which of the run's channels to render.
        #[arg(long, default_value_t = 0)]
        channel_index: usize,
    },
}

/// Model file wrapper: the fitted model plus the input representation it
/// was trained with.
#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    model: RegressionModel,
    input_lift: InputLift,
    qubit_dim: usize,
    variant: KernelVariant,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QOVK_LOG")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Loads the configuration file (or defaults), applies --set overrides and
/// --seed, and validates the result.
fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut value: serde_json::Value = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("config not found: {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("config does not parse: {}", path.display()))?
        }
        None => json!({}),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| anyhow!("config root must be a JSON object"))?;
    for entry in &cli.set {
        let (key, raw) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("override {entry:?} is not of the form key=value"))?;
        // The λ spelling is accepted as an alias for the config field name.
        let key = match key {
            "noise_λ" => "noise_lambda",
            other => other,
        };
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        obj.insert(key.to_string(), parsed);
    }
    if let Some(seed) = cli.seed {
        obj.insert("seed".into(), json!(seed));
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(value).context("config does not match the expected schema")?;
    cfg.validate().map_err(|e| anyhow!(e.to_string()))?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn echo_config(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join("resolved_config.json"), cfg)
}

fn parse_variant(name: &str) -> Result<KernelVariant> {
    serde_json::from_value(json!(name))
        .map_err(|_| anyhow!("unknown kernel variant {name:?} (expected scalar_baseline, separable_ovk, entangled_unitary or entangled_kraus_pauli)"))
}

fn load_density(path: &Path) -> Result<DensityMatrix> {
    let text =
        fs::read_to_string(path).with_context(|| format!("state not found: {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("state does not parse: {}", path.display()))
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<ExitCode> {
    let out = &cli.out;
    match &cli.command {
        Command::GenData => {
            echo_config(out, cfg)?;
            let mut rng = task_rng(cfg.seed, 1);
            let channel = random_pauli_channel(cfg.qubit_dim, &mut rng)?;
            let dataset = generate_dataset(cfg, &channel, &mut task_rng(cfg.seed, 2))?;
            write_json(&out.join("channel.json"), &channel)?;
            write_json(&out.join("dataset.json"), &dataset)?;
            if !cli.quiet {
                println!(
                    "wrote channel.json and dataset.json ({} samples) to {}",
                    dataset.len(),
                    out.display()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            dataset,
            variant,
            ridge,
        } => {
            echo_config(out, cfg)?;
            let variant = parse_variant(variant)?;
            let text = fs::read_to_string(dataset)
                .with_context(|| format!("dataset not found: {}", dataset.display()))?;
            let raw: TrainingSet = serde_json::from_str(&text).context("dataset does not parse")?;
            let mut rng = task_rng(cfg.seed, 4);
            let (kernel, lift) = build_variant(variant, cfg, &mut rng)?;
            let lifted = TrainingSet::new(
                raw.inputs().iter().map(|x| lift_input(lift, x)).collect(),
                raw.labels().to_vec(),
            )?;
            let model = fit(&lifted, kernel, *ridge)?;
            let file = ModelFile {
                model,
                input_lift: lift,
                qubit_dim: cfg.qubit_dim,
                variant,
            };
            write_json(&out.join("model.json"), &file)?;
            if !cli.quiet {
                println!("wrote model.json (variant {}) to {}", variant.name(), out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { model, state } => {
            echo_config(out, cfg)?;
            let text = fs::read_to_string(model)
                .with_context(|| format!("model not found: {}", model.display()))?;
            let file: ModelFile = serde_json::from_str(&text).context("model does not parse")?;
            let rho = load_density(state)?;
            let lifted = lift_input(file.input_lift, &rho);
            let prediction = predict(&file.model, &lifted)?;
            let matrix = unvectorize(&prediction, file.qubit_dim)?;
            let rendered = serde_json::to_string_pretty(&matrix)?;
            println!("{rendered}");
            write_json(&out.join("prediction.json"), &matrix)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ReproduceTable1 => {
            echo_config(out, cfg)?;
            let result = run_trial(cfg)?;
            write_json(&out.join("results.json"), &result)?;
            let mut csv = String::from("channel_index,variant,recovery_error,selected_ridge\n");
            for (name, summary) in &result.variants {
                for (i, (err, ridge)) in summary
                    .errors
                    .iter()
                    .zip(summary.selected_ridges.iter())
                    .enumerate()
                {
                    csv.push_str(&format!("{i},{name},{err},{ridge}\n"));
                }
            }
            fs::write(out.join("results.csv"), csv)?;
            let ordering_holds = result.entangled_strictly_better().unwrap_or(false);
            if !cli.quiet {
                for (name, summary) in &result.variants {
                    println!(
                        "{name}: mean {:.4} +/- {:.4} over {} channels",
                        summary.mean,
                        summary.std,
                        summary.errors.len()
                    );
                }
                println!("entangled-beats-scalar ordering holds: {ordering_holds}");
            }
            if ordering_holds {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("variant-ordering property does not hold for this configuration");
                Ok(ExitCode::from(1))
            }
        }
        Command::CircuitVerify { instances } => {
            echo_config(out, cfg)?;
            let mut rng = task_rng(cfg.seed, 8);
            let mut report = serde_json::to_value(verify_circuit_equations(
                *instances, 1, 1, 1e-10, &mut rng, cfg.seed,
            )?)?;
            if let Some(shots) = cli.shots {
                // Measurement-statistics demonstration on the swap-test
                // ancilla, excluded from the exactness assertions.
                let psi_x = PureState::haar_random(2, &mut rng);
                let psi_z = PureState::haar_random(2, &mut rng);
                let ancilla = PureState::zero(1);
                let state = CircuitState::from_pure_registers(&[
                    (RegisterName::A, &ancilla),
                    (RegisterName::Z, &psi_z),
                    (RegisterName::X, &psi_x),
                ])?;
                let h = qovk::clinalg::gates::hadamard();
                let state = qovk::circuit::apply_gate(&state, &h, &[RegisterName::A])?;
                let cswap = qovk::clinalg::gates::controlled_swap(2);
                let state = qovk::circuit::apply_gate(
                    &state,
                    &cswap,
                    &[RegisterName::A, RegisterName::Z, RegisterName::X],
                )?;
                let state = qovk::circuit::apply_gate(&state, &h, &[RegisterName::A])?;
                let exact = qovk::circuit::measure_postselect(&state, RegisterName::A, 0)?
                    .probability;
                let frequency = sample_shots(&state, RegisterName::A, shots, &mut rng)?;
                report.as_object_mut().unwrap().insert(
                    "shot_sampling".into(),
                    json!({"shots": shots, "exact_probability": exact, "frequency": frequency}),
                );
            }
            let rendered = serde_json::to_string_pretty(&report)?;
            println!("{rendered}");
            fs::write(out.join("circuit_verify.json"), rendered)?;
            let ok = report
                .get("all_within_tolerance")
                .and_then(|v| v.as_bool())
                .unwrap_or(false);
            if ok {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("circuit equalities exceeded tolerance");
                Ok(ExitCode::from(1))
            }
        }
        Command::KernelEval { variant, x, z } => {
            echo_config(out, cfg)?;
            let variant = parse_variant(variant)?;
            let mut rng = task_rng(cfg.seed, 16);
            let (kernel, lift) = build_variant(variant, cfg, &mut rng)?;
            let mut state_rng = task_rng(cfg.seed, 17);
            let mut load_or_random = |path: &Option<PathBuf>| -> Result<DensityMatrix> {
                match path {
                    Some(p) => load_density(p),
                    None => Ok(qovk::qstates::random_density(
                        cfg.qubit_dim,
                        cfg.qubit_dim,
                        &mut state_rng,
                    )?),
                }
            };
            let rho_x = load_or_random(x)?;
            let rho_z = load_or_random(z)?;
            let value = kernel.evaluate(&lift_input(lift, &rho_x), &lift_input(lift, &rho_z))?;
            let rendered = serde_json::to_string_pretty(&value)?;
            println!("{rendered}");
            write_json(&out.join("kernel_value.json"), &value)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::EmitHeatmap { channel_index } => {
            echo_config(out, cfg)?;
            let (channel, fits) = run_single_channel(cfg, *channel_index)?;
            let mut entries = vec![("true".to_string(), true_choi(&channel)?)];
            for fit in fits {
                entries.push((fit.variant.name().to_string(), fit.learned_choi));
            }
            let written = emit_heatmaps(&entries, out)?;
            if !cli.quiet {
                println!("wrote {} heatmap files to {}", written.len(), out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
