use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use taco_core::classifier::{self, evaluate, load_model, save_model, CnnModel};
use taco_core::config::{BankConfig, RunConfig};
use taco_core::corrupt::{apply_corruption, CorruptionKind, CorruptionSpec, Severity};
use taco_core::cubical::{image_persistence, oracle::oracle_suite};
use taco_core::features::{
    featurize_dataset, featurize_input, load_input, read_features, read_manifest, write_features,
    FeatureVector, Input, LabeledDataset, FEATURE_MAGIC,
};
use taco_core::filtration::{self, FiltrationSpec};
use taco_core::pc_io::{self, save_xyz};
use taco_core::voxel::{self, save_binary_image, save_gray_volume};

#[derive(Parser)]
#[command(name = "taco", version, about = "Topological features and a 1D CNN for point-cloud classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize a point cloud (.xyz) or mesh (.off) into a binary volume.
    Voxelize {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured voxel size.
        #[arg(long)]
        voxel_size: Option<f64>,
    },
    /// Featurize every entry of a `path,label` manifest.
    Featurize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Train a classifier on a feature file.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run configuration; defaults to the one echoed in the feature file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Classify a cloud, mesh, volume or every row of a feature file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Accuracy and confusion matrix of a model on a labeled feature file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Also write per-class precision and recall as CSV.
        #[arg(long)]
        per_class: Option<PathBuf>,
    },
    /// Write a corrupted copy of a point cloud.
    Corrupt {
        #[arg(long)]
        kind: CorruptionKind,
        #[arg(long)]
        severity: Severity,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        input: PathBuf,
        output: PathBuf,
    },
    /// Compare the fast persistence reduction with the reference one on
    /// random images.
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        max_dim: usize,
        #[arg(long, default_value_t = 8)]
        levels: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the architecture and metadata of a model file.
    ModelInfo {
        #[arg(long)]
        model: PathBuf,
    },
    /// Dump the persistence diagram of one filtration of an input.
    Diagram {
        input: PathBuf,
        #[arg(long, default_value = "height:0,0,1")]
        filtration: FiltrationSpec,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the filtered grayscale volume.
        #[arg(long)]
        gray_out: Option<PathBuf>,
    },
}

/// Failures that are the program's fault rather than the caller's.
#[derive(Debug)]
struct Internal(String);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Internal {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<Internal>() {
        return 2;
    }
    match err.downcast_ref::<taco_core::Error>() {
        Some(taco_core::Error::Diverged { .. }) => 2,
        _ => 1,
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn is_feature_file(path: &Path) -> Result<bool> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(bytes.starts_with(FEATURE_MAGIC.as_bytes()))
}

fn voxelize(input: &Path, output: &Path, config: Option<&Path>, voxel_size: Option<f64>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(v) = voxel_size {
        cfg.voxel_size = v;
        cfg.validate()?;
    }
    let img = match load_input(input, cfg.mesh_samples, cfg.seed)? {
        Input::Cloud(c) => voxel::voxelize(&c, cfg.voxel_size)?,
        Input::Image(img) => img,
    };
    save_binary_image(output, &img)?;
    let d = img.dims();
    println!("dims {}x{}x{}, {} active voxels", d[0], d[1], d[2], img.active_count());
    Ok(())
}

fn featurize(config: &Path, manifest: &Path, out: &Path, workers: Option<usize>) -> Result<()> {
    let mut cfg = load_config(Some(config))?;
    if let Some(w) = workers {
        cfg.workers = w;
        cfg.validate()?;
    }
    let inputs = read_manifest(manifest)?;
    let report = featurize_dataset(&inputs, &cfg)?;
    for f in &report.failures {
        eprintln!("failed: {} ({})", f.path.display(), f.error);
    }
    write_features(out, &report.dataset)?;
    println!(
        "{} rows, {} failures, dim {} ({} {})",
        report.dataset.len(),
        report.failures.len(),
        report.dataset.dim,
        report.dataset.preset,
        report.dataset.bank_hash
    );
    Ok(())
}

fn train(features: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let data = read_features(features)?;
    let echoed = data.config.as_deref().map(RunConfig::from_json).transpose()?;
    let cfg = match (config, echoed) {
        (Some(p), echoed) => {
            let cfg = load_config(Some(p))?;
            if let Some(e) = echoed {
                let strip = |c: &RunConfig| RunConfig {
                    training: Default::default(),
                    workers: 1,
                    ..c.clone()
                };
                if strip(&e) != strip(&cfg) {
                    log::warn!("featurization settings in {} differ from the feature file", p.display());
                }
            }
            cfg
        }
        (None, Some(e)) => e,
        (None, None) => RunConfig::default(),
    };
    if let Ok(bank) = cfg.bank.resolve() {
        if bank.hash() != data.bank_hash {
            log::warn!("feature bank {} does not match the configured bank {}", data.bank_hash, bank.hash());
        }
    }
    let (mut model, report) = classifier::train(&data, &cfg.training)?;
    model.run_config = Some(cfg.to_json());
    save_model(out, &model)?;
    println!(
        "trained on {} rows, {} classes, {} epochs, final loss {:.6}{}",
        data.len(),
        model.classes.len(),
        report.epochs(),
        report.final_loss(),
        if report.stopped_early { " (loss target reached)" } else { "" }
    );
    Ok(())
}

/// Run configuration a model was trained with, or defaults on its bank.
fn model_config(model: &CnnModel) -> Result<RunConfig> {
    match &model.run_config {
        Some(json) => Ok(RunConfig::from_json(json)?),
        None => Ok(RunConfig {
            bank: BankConfig::Preset(model.preset.clone()),
            ..Default::default()
        }),
    }
}

fn predict(model_path: &Path, input: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let mut out = std::io::stdout().lock();
    if is_feature_file(input)? {
        let data = read_features(input)?;
        if data.bank_hash != model.bank_hash {
            return Err(taco_core::Error::BankMismatch {
                expected: model.bank_hash.clone(),
                found: data.bank_hash.clone(),
            }
            .into());
        }
        writeln!(out, "row,label,predicted,probability")?;
        for (i, row) in data.rows.iter().enumerate() {
            let fv = FeatureVector {
                values: row.values.clone(),
                bank_hash: data.bank_hash.clone(),
                source: String::new(),
            };
            let (label, p) = model.predict(&fv)?;
            writeln!(out, "{i},{},{label},{p:.6}", row.label)?;
        }
        return Ok(());
    }
    let cfg = model_config(&model)?;
    let bank = cfg.bank.resolve()?;
    let loaded = load_input(input, cfg.mesh_samples, cfg.seed)?;
    let fv = FeatureVector {
        values: featurize_input(&loaded, &cfg, &bank)?,
        bank_hash: bank.hash(),
        source: input.display().to_string(),
    };
    let (label, p) = model.predict(&fv)?;
    writeln!(out, "{label} {p:.6}")?;
    Ok(())
}

fn eval(model_path: &Path, features: &Path, per_class: Option<&Path>) -> Result<()> {
    let model = load_model(model_path)?;
    let data: LabeledDataset = read_features(features)?;
    let cm = evaluate(&model, &data)?;
    print!("{}", cm.report());
    if let Some(path) = per_class {
        let mut csv = String::from("class,precision,recall,support\n");
        let recalls = cm.recalls();
        for (i, class) in cm.classes.iter().enumerate() {
            let predicted: usize = cm.counts.iter().map(|row| row[i]).sum();
            let precision = if predicted == 0 {
                String::new()
            } else {
                format!("{:.6}", cm.counts[i][i] as f64 / predicted as f64)
            };
            let recall = recalls[i].map(|r| format!("{r:.6}")).unwrap_or_default();
            let support: usize = cm.counts[i].iter().sum();
            csv.push_str(&format!("{class},{precision},{recall},{support}\n"));
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn corrupt(spec: CorruptionSpec, input: &Path, output: &Path) -> Result<()> {
    let cloud = pc_io::load_xyz(input)?;
    let out = apply_corruption(&cloud, &spec)?;
    save_xyz(output, &out, &[spec.describe()])?;
    println!("{} -> {} points", cloud.len(), out.len());
    Ok(())
}

fn oracle_check(trials: usize, max_dim: usize, levels: u32, seed: u64) -> Result<()> {
    let r = oracle_suite(trials, max_dim, levels, seed)?;
    println!("{}/{} matches", r.matches, r.trials);
    if let Some((dims, values)) = r.first_mismatch {
        return Err(Internal(format!("persistence differs from the oracle on dims {dims:?}, values {values:?}")).into());
    }
    Ok(())
}

fn model_info(path: &Path) -> Result<()> {
    let m = load_model(path)?;
    println!("classes ({}): {}", m.classes.len(), m.classes.join(", "));
    println!("bank: {} {}", m.preset, m.bank_hash);
    println!("input length: {}", m.shape.input_len);
    for (name, shape) in m.param_summary() {
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        println!("  {name}: [{}]", dims.join(", "));
    }
    println!("parameters: {}", m.param_count());
    if let Some(cfg) = &m.run_config {
        println!("config: {cfg}");
    }
    Ok(())
}

fn diagram(input: &Path, spec: &FiltrationSpec, config: Option<&Path>, gray_out: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let img = match load_input(input, cfg.mesh_samples, cfg.seed)? {
        Input::Cloud(c) => voxel::voxelize(&c, cfg.voxel_size)?,
        Input::Image(img) => img,
    };
    let gray = filtration::apply(&img, spec)?;
    if let Some(p) = gray_out {
        save_gray_volume(p, gray.dims, &gray.values)?;
    }
    let mut d = image_persistence(&gray);
    if cfg.drop_essential {
        d = d.without_essential();
    }
    print!("{}", d.to_text());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Voxelize {
            input,
            output,
            config,
            voxel_size,
        } => voxelize(&input, &output, config.as_deref(), voxel_size),
        Command::Featurize {
            config,
            manifest,
            out,
            workers,
        } => featurize(&config, &manifest, &out, workers),
        Command::Train { features, out, config } => train(&features, &out, config.as_deref()),
        Command::Predict { model, input } => predict(&model, &input),
        Command::Eval {
            model,
            features,
            per_class,
        } => eval(&model, &features, per_class.as_deref()),
        Command::Corrupt {
            kind,
            severity,
            seed,
            input,
            output,
        } => corrupt(CorruptionSpec { kind, severity, seed }, &input, &output),
        Command::OracleCheck {
            trials,
            max_dim,
            levels,
            seed,
        } => oracle_check(trials, max_dim, levels, seed),
        Command::ModelInfo { model } => model_info(&model),
        Command::Diagram {
            input,
            filtration,
            config,
            gray_out,
        } => diagram(&input, &filtration, config.as_deref(), gray_out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TACO_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(2),
    }
}
