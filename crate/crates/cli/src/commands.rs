use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use spokesense::classifier::{evaluate_trials, train_model, KernelChoice, TrainParams};
use spokesense::eigen::eigen_signature;
use spokesense::features::{extract_all, FeatureConfig};
use spokesense::formats::{
    read_dataset, read_features, read_model, read_profile, write_confusion, write_dataset,
    write_distance_report, write_eigen_report, write_features, write_model, write_predictions,
    write_spectrum, EigenRow, FeatureTable, PredictionRow,
};
use spokesense::signal::{dft_magnitude, segment_windows, TimeSeries, Window};
use spokesense::similarity::{build_library, rank_unknown};
use spokesense::synthgen::{builtin_profile, builtin_profiles, class_seed, generate, GenSpec, BUILTIN_NAMES};

use crate::output::Outputs;
use crate::{
    Cli, ClassifyArgs, Command, EigenArgs, EvaluateArgs, ExtractArgs, IdentifyArgs, KernelArg,
    SimulateArgs, SpectrumArgs, SvmArgs, TrainArgs, WindowArgs,
};

const FEATURE_MARKER: &str = "# feature_layout_id=";

pub fn run(cli: Cli) -> Result<()> {
    let Cli { out, seed, command } = cli;
    match command {
        Command::Simulate(a) => simulate(&out, seed, a),
        Command::Extract(a) => extract(&out, a),
        Command::Train(a) => train(&out, a),
        Command::Evaluate(a) => evaluate(&out, seed, a),
        Command::Classify(a) => classify(&out, a),
        Command::Identify(a) => identify(&out, a),
        Command::Spectrum(a) => spectrum(&out, a),
        Command::Eigen(a) => eigen(&out, a),
    }
}

fn require_files<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            bail!("input file {} does not exist", p.display());
        }
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim().is_empty() {
        bail!("{} is empty", path.display());
    }
    Ok(text)
}

fn load_dataset(path: &Path) -> Result<TimeSeries> {
    read_dataset(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_features(path: &Path) -> Result<FeatureTable> {
    read_features(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

/// Record label, falling back to the file stem.
fn record_label(series: &TimeSeries, path: &Path) -> Result<String> {
    if let Some(l) = series.label() {
        return Ok(l.to_string());
    }
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .with_context(|| format!("cannot derive a label from {}", path.display()))
}

fn windows_of(series: &TimeSeries, w: &WindowArgs, path: &Path) -> Result<Vec<Window>> {
    segment_windows(series, w.window_seconds, w.overlap).with_context(|| format!("in {}", path.display()))
}

/// Per-window features of a record or a feature file, checked against `cfg`.
enum Rows {
    Features(FeatureTable),
    Record { series: TimeSeries, windows: Vec<Window>, rows: Vec<Vec<f64>> },
}

fn rows_for(path: &Path, cfg: &FeatureConfig, w: &WindowArgs) -> Result<Rows> {
    let text = read_text(path)?;
    if text.starts_with(FEATURE_MARKER) {
        let table = read_features(&text).with_context(|| format!("in {}", path.display()))?;
        let expected = cfg.layout_id();
        if table.layout_id != expected {
            bail!(spokesense::Error::LayoutMismatch {
                expected,
                found: format!("{} in {}", table.layout_id, path.display()),
            });
        }
        Ok(Rows::Features(table))
    } else {
        let series = read_dataset(&text).with_context(|| format!("in {}", path.display()))?;
        let windows = windows_of(&series, w, path)?;
        let rows = extract_all(&series, &windows, cfg).with_context(|| format!("in {}", path.display()))?;
        Ok(Rows::Record { series, windows, rows })
    }
}

fn train_params(a: &SvmArgs) -> TrainParams {
    TrainParams {
        kernel: match a.kernel {
            KernelArg::Linear => KernelChoice::Linear,
            KernelArg::Rbf => KernelChoice::Rbf(a.gamma),
        },
        c: a.c,
        tol: a.tol,
        max_passes: a.max_passes as usize,
    }
}

fn warn_unconverged(count: usize) {
    if count > 0 {
        eprintln!("warning: {count} binary problem(s) stopped at the solver budget");
    }
}

fn simulate(out: &Path, seed: u64, a: SimulateArgs) -> Result<()> {
    let jobs = if let Some(path) = &a.profile_file {
        require_files([path])?;
        let profile = read_profile(&read_text(path)?).with_context(|| format!("in {}", path.display()))?;
        vec![(profile, seed)]
    } else {
        let name = a.profile.as_deref().unwrap_or_default();
        if name == "all" {
            builtin_profiles()
                .into_iter()
                .enumerate()
                .map(|(i, p)| (p, class_seed(seed, i)))
                .collect()
        } else {
            let profile = builtin_profile(name)?;
            let i = BUILTIN_NAMES.iter().position(|n| *n == name).unwrap_or(0);
            vec![(profile, class_seed(seed, i))]
        }
    };
    let specs: Vec<GenSpec> = jobs
        .into_iter()
        .map(|(p, s)| GenSpec::new(p, a.duration, a.rate, s))
        .collect();
    for s in &specs {
        s.validate()?;
        if s.profile.name.contains(['/', '\\']) || s.profile.name.starts_with('.') {
            bail!("profile name `{}` cannot be used as a file name", s.profile.name);
        }
    }
    let mut outputs = Outputs::new(out)?;
    for s in &specs {
        let series = generate(s)?;
        outputs.write(&format!("{}.csv", s.profile.name), &write_dataset(&series)?)?;
    }
    outputs.commit();
    Ok(())
}

fn extract(out: &Path, a: ExtractArgs) -> Result<()> {
    require_files(&a.inputs)?;
    let cfg = FeatureConfig {
        bands: a.bands,
        entropy_bins: a.entropy_bins as usize,
        include_extras: a.extras,
    };
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for path in &a.inputs {
        let series = load_dataset(path)?;
        let label = record_label(&series, path)?;
        let windows = windows_of(&series, &a.window, path)?;
        let block = extract_all(&series, &windows, &cfg).with_context(|| format!("in {}", path.display()))?;
        labels.extend(std::iter::repeat(label).take(block.len()));
        rows.extend(block);
    }
    let table = FeatureTable {
        layout_id: cfg.layout_id(),
        rows,
        labels: Some(labels),
    };
    let mut outputs = Outputs::new(out)?;
    outputs.write("features.csv", &write_features(&table)?)?;
    outputs.commit();
    Ok(())
}

fn train(out: &Path, a: TrainArgs) -> Result<()> {
    require_files([&a.features])?;
    let table = load_features(&a.features)?;
    let set = table.to_labeled()?;
    let report = train_model(&set, &train_params(&a.svm), &table.layout_id)?;
    warn_unconverged(report.unconverged_pairs);
    let mut outputs = Outputs::new(out)?;
    outputs.write("model.json", &write_model(&report.model)?)?;
    outputs.commit();
    Ok(())
}

fn evaluate(out: &Path, seed: u64, a: EvaluateArgs) -> Result<()> {
    require_files([&a.features])?;
    let set = load_features(&a.features)?.to_labeled()?;
    let eval = evaluate_trials(&set, a.trials as usize, a.test_fraction, seed, &train_params(&a.svm))?;
    warn_unconverged(eval.unconverged_pairs);
    let mut outputs = Outputs::new(out)?;
    outputs.write("confusion.csv", &write_confusion(&eval.confusion)?)?;
    outputs.commit();
    println!("mean accuracy over {} trials: {:.4}", a.trials, eval.mean_accuracy);
    Ok(())
}

fn classify(out: &Path, a: ClassifyArgs) -> Result<()> {
    require_files([&a.model, &a.input])?;
    let model = read_model(&read_text(&a.model)?).with_context(|| format!("in {}", a.model.display()))?;
    let cfg = FeatureConfig::from_layout_id(&model.feature_layout_id)?;
    let rows = match rows_for(&a.input, &cfg, &a.window)? {
        Rows::Features(table) => {
            let labels = table.labels.clone();
            table
                .rows
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    Ok(PredictionRow {
                        window_index: i,
                        start_sample: 0,
                        predicted: model.predict(x)?.to_string(),
                        label: labels.as_ref().map(|l| l[i].clone()),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Rows::Record { series, windows, rows } => {
            let label = series.label().map(str::to_string);
            rows.iter()
                .zip(&windows)
                .enumerate()
                .map(|(i, (x, w))| {
                    Ok(PredictionRow {
                        window_index: i,
                        start_sample: w.start,
                        predicted: model.predict(x)?.to_string(),
                        label: label.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut outputs = Outputs::new(out)?;
    outputs.write("predictions.csv", &write_predictions(&rows)?)?;
    outputs.commit();
    Ok(())
}

fn identify(out: &Path, a: IdentifyArgs) -> Result<()> {
    require_files([&a.library, &a.unknown])?;
    let table = load_features(&a.library)?;
    let cfg = table.config()?;
    let library = build_library(&table.to_labeled()?, a.epsilon_scale, !a.no_standardize)?;
    let unknown = match rows_for(&a.unknown, &cfg, &a.window)? {
        Rows::Features(t) => t.rows,
        Rows::Record { rows, .. } => rows,
    };
    let report = rank_unknown(&unknown, &library)?;
    let mut outputs = Outputs::new(out)?;
    outputs.write("distances.csv", &write_distance_report(&report)?)?;
    outputs.commit();
    println!(
        "nearest (euclidean): {}; nearest (mahalanobis): {}",
        report.nearest_euclidean, report.nearest_mahalanobis
    );
    Ok(())
}

fn spectrum(out: &Path, a: SpectrumArgs) -> Result<()> {
    require_files([&a.input])?;
    let series = load_dataset(&a.input)?;
    let k = a.channel as usize;
    let spec = dft_magnitude(series.channel(k - 1), series.sample_rate_hz())?;
    let mut outputs = Outputs::new(out)?;
    outputs.write(&format!("spectrum_ch{k}.csv"), &write_spectrum(&spec)?)?;
    outputs.commit();
    Ok(())
}

fn eigen(out: &Path, a: EigenArgs) -> Result<()> {
    require_files(&a.inputs)?;
    let mut rows = Vec::new();
    for path in &a.inputs {
        let series = load_dataset(path)?;
        let label = record_label(&series, path)?;
        for (i, w) in windows_of(&series, &a.window, path)?.into_iter().enumerate() {
            rows.push(EigenRow {
                window_index: i,
                signature: eigen_signature(&series, w).with_context(|| format!("in {}", path.display()))?,
                label: label.clone(),
            });
        }
    }
    let mut outputs = Outputs::new(out)?;
    outputs.write("eigen.csv", &write_eigen_report(&rows)?)?;
    outputs.commit();
    Ok(())
}
