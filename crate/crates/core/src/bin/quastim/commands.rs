//! One function per subcommand plus the shared plumbing: setting
//! resolution, output-directory handling, and provenance headers.

use std::fs;
use std::path::{Path, PathBuf};

use quastim::classifier::{
    evaluate, generate_dataset, train_seeded, ClassDefinitions, ClassLabel, DatasetConfig,
    LabeledDataset, TrainConfig,
};
use quastim::fitting::{fit_distribution, FitConfig};
use quastim::imaging::{
    classify_image, separation_sweep, simulate_raster, SweepConfig, DEFAULT_BACKGROUND_THRESHOLD,
};
use quastim::io::{self, FeatureScatterRow, OutputHeader, SceneDocument};
use quastim::photon_stats::{distribution_mix, DEFAULT_N_MAX};
use quastim::sampling::{
    draw_counts, feature_projection, to_features, FeatureVector, StreamRng,
};

use crate::config::{self, ConfigFile};
use crate::{
    Cli, CliError, CliResult, Command, ClassifyArgs, EvalArgs, EvalCurveArgs, FeaturesArgs,
    FitDistArgs, GenDataArgs, SimulateArgs, SweepArgs, TrainArgs,
};

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = config::load(cli.config.as_deref())?;
    let out = out_dir(cli.out, &cfg);
    fs::create_dir_all(&out)?;
    let cmdline = std::env::args().collect::<Vec<_>>().join(" ");
    match cli.command {
        Command::GenData(a) => gen_data(a, &cfg, &out, &cmdline),
        Command::Train(a) => train(a, &cfg, &out, &cmdline),
        Command::Eval(a) => eval(a, &out, &cmdline),
        Command::EvalCurve(a) => eval_curve(a, &cfg, &out, &cmdline),
        Command::Simulate(a) => simulate(a, &cfg, &out, &cmdline),
        Command::Classify(a) => classify(a, &cfg, &out, &cmdline),
        Command::Sweep(a) => sweep(a, &cfg, &out, &cmdline),
        Command::FitDist(a) => fit_dist(a, &cfg, &out, &cmdline),
        Command::Features(a) => features(a, &cfg, &out, &cmdline),
    }
}

/// Flag, then config file, then `QUASTIM_OUT_DIR`, then the working directory.
fn out_dir(flag: Option<PathBuf>, cfg: &ConfigFile) -> PathBuf {
    flag.or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os("QUASTIM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Flag beats config file beats default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

fn gen_data(args: GenDataArgs, cfg: &ConfigFile, out: &Path, cmdline: &str) -> CliResult<()> {
    let shots = pick(args.shots, cfg.shots, 3500);
    if shots == 0 {
        return Err(usage("--shots must be at least 1"));
    }
    let per_class = pick(args.per_class, cfg.per_class, 1000);
    if per_class == 0 {
        return Err(usage("--per-class must be at least 1"));
    }
    let seed = pick(args.seed, cfg.seed, 0);
    let n_max = pick(args.n_max, cfg.n_max, DEFAULT_N_MAX);
    let jitter = args.brightness_jitter.or(cfg.brightness_jitter);

    let dataset = generate_dataset(
        &ClassDefinitions::default(),
        &DatasetConfig {
            shots,
            histograms_per_class: per_class,
            seed,
            n_max,
            brightness_jitter: jitter,
        },
    )?;

    let header = OutputHeader::new(cmdline, seed);
    for (name, items) in [
        ("train.csv", dataset.train()),
        ("validation.csv", dataset.validation()),
        ("test.csv", dataset.test()),
    ] {
        let path = out.join(name);
        io::write_dataset_csv(&path, &header, items)?;
        wrote(&path);
    }

    let manifest = io::DatasetManifest {
        tool_version: header.tool_version.clone(),
        command_line: header.command_line.clone(),
        seed,
        shots,
        per_class,
        n_max,
        brightness_jitter: jitter,
        split_sizes: (
            dataset.train().len(),
            dataset.validation().len(),
            dataset.test().len(),
        ),
        files: (
            "train.csv".to_string(),
            "validation.csv".to_string(),
            "test.csv".to_string(),
        ),
    };
    let path = out.join("manifest.json");
    io::write_manifest_json(&path, &manifest)?;
    wrote(&path);
    Ok(())
}

fn train_config(
    max_epochs: Option<usize>,
    patience: Option<usize>,
    seed: u64,
    cfg: &ConfigFile,
) -> TrainConfig {
    let d = TrainConfig::default();
    TrainConfig {
        max_epochs: pick(max_epochs, cfg.max_epochs, d.max_epochs),
        patience_epochs: pick(patience, cfg.patience, d.patience_epochs),
        seed,
        ..d
    }
}

fn train(args: TrainArgs, cfg: &ConfigFile, out: &Path, cmdline: &str) -> CliResult<()> {
    let train_items = io::read_dataset_csv(&args.data.join("train.csv"))?;
    let val_items = io::read_dataset_csv(&args.data.join("validation.csv"))?;
    let dataset = LabeledDataset::from_splits(train_items, val_items, Vec::new());

    let seed = pick(args.seed, cfg.seed, 0);
    let tc = train_config(args.max_epochs, args.patience, seed, cfg);
    let (model, history) = train_seeded(&dataset, &tc)?;

    let header = OutputHeader::new(cmdline, seed);
    let model_path = out.join("model.json");
    io::write_model_json(&model_path, &header, &model)?;
    wrote(&model_path);
    let curve_path = out.join("training_curve.csv");
    io::write_training_curve_csv(&curve_path, &header, &history)?;
    wrote(&curve_path);

    println!("epochs: {}", history.len());
    if let Some(last) = history.last() {
        println!("final validation loss: {}", last.val_loss);
    }
    Ok(())
}

fn eval(args: EvalArgs, out: &Path, cmdline: &str) -> CliResult<()> {
    let model = io::read_model_json(&args.model)?;
    let items = io::read_dataset_csv(&args.data)?;
    let evaluation = evaluate(&model, &items);
    println!("accuracy: {}", evaluation.accuracy());

    // No randomness in this command; the header's seed slot is fixed.
    let header = OutputHeader::new(cmdline, 0);
    let path = out.join("confusion.csv");
    io::write_confusion_csv(&path, &header, &evaluation)?;
    wrote(&path);
    Ok(())
}

fn eval_curve(args: EvalCurveArgs, cfg: &ConfigFile, out: &Path, cmdline: &str) -> CliResult<()> {
    let shots_list = args
        .shots
        .or_else(|| cfg.shots_list.clone())
        .unwrap_or_else(|| vec![100, 500, 1000, 3500, 10_000]);
    if shots_list.iter().any(|&d| d == 0) {
        return Err(usage("--shots entries must be at least 1"));
    }
    let per_class = pick(args.per_class, cfg.per_class, 1000);
    if per_class == 0 {
        return Err(usage("--per-class must be at least 1"));
    }
    let seed = pick(args.seed, cfg.seed, 0);
    let tc = train_config(args.max_epochs, args.patience, seed, cfg);
    let defs = ClassDefinitions::default();

    let mut rows = Vec::with_capacity(shots_list.len());
    for &shots in &shots_list {
        let dataset = generate_dataset(
            &defs,
            &DatasetConfig {
                shots,
                histograms_per_class: per_class,
                seed,
                n_max: DEFAULT_N_MAX,
                brightness_jitter: None,
            },
        )?;
        let (model, _) = train_seeded(&dataset, &tc)?;
        let accuracy = evaluate(&model, dataset.test()).accuracy();
        println!("shots {shots}: accuracy {accuracy}");
        rows.push((shots, accuracy));
    }

    let header = OutputHeader::new(cmdline, seed);
    let path = out.join("eval_curve.csv");
    io::write_eval_curve_csv(&path, &header, &rows)?;
    wrote(&path);
    Ok(())
}

/// Scene plus the sampling settings resolved from flags, file, and config.
fn load_scene(
    path: &Path,
    shots_flag: Option<u64>,
    seed_flag: Option<u64>,
    cfg: &ConfigFile,
) -> CliResult<(SceneDocument, u64, u64)> {
    let doc = io::read_scene_json(path)?;
    if doc.emitters.is_empty() {
        return Err(usage("scene file has no emitters"));
    }
    let shots = shots_flag.or(doc.shots).or(cfg.shots).unwrap_or(10_000);
    if shots == 0 {
        return Err(usage("--shots must be at least 1"));
    }
    let seed = seed_flag.or(doc.seed).or(cfg.seed).unwrap_or(0);
    Ok((doc, shots, seed))
}

fn simulate(args: SimulateArgs, cfg: &ConfigFile, out: &Path, cmdline: &str) -> CliResult<()> {
    let (doc, shots, seed) = load_scene(&args.scene, args.shots, args.seed, cfg)?;
    let scene = doc.to_scene()?;
    let grid = simulate_raster(&scene, shots, seed)?;

    let header = OutputHeader::new(cmdline, seed);
    let path = out.join("histograms.csv");
    io::write_histogram_grid_csv(&path, &header, &grid)?;
    wrote(&path);
    let intensity = grid.empirical_intensity();
    let path = out.join("intensity.pgm");
    io::write_intensity_pgm(&path, &header, &intensity)?;
    wrote(&path);
    let path = out.join("intensity.csv");
    io::write_intensity_csv(&path, &header, &intensity)?;
    wrote(&path);
    Ok(())
}

fn classify(args: ClassifyArgs, cfg: &ConfigFile, out: &Path, cmdline: &str) -> CliResult<()> {
    let model = io::read_model_json(&args.model)?;
    let (doc, shots, seed) = load_scene(&args.scene, args.shots, args.seed, cfg)?;
    let scene = doc.to_scene()?;
    let threshold = pick(
        args.background_threshold,
        cfg.background_threshold,
        DEFAULT_BACKGROUND_THRESHOLD,
    );

    let grid = simulate_raster(&scene, shots, seed)?;
    let map = classify_image(&model, &grid, threshold);

    let header = OutputHeader::new(cmdline, seed);
    let path = out.join("intensity.pgm");
    io::write_intensity_pgm(&path, &header, &grid.empirical_intensity())?;
    wrote(&path);
    let path = out.join("class_map.pgm");
    io::write_class_map_pgm(&path, &header, &map)?;
    wrote(&path);
    let path = out.join("class_map.csv");
    io::write_class_map_csv(&path, &header, &map)?;
    wrote(&path);
    let path = out.join("class_legend.txt");
    io::write_class_legend(&path, &header)?;
    wrote(&path);

    let counts: Vec<String> = io::CLASS_GRAY_TABLE
        .iter()
        .map(|(_, name)| {
            let n = map.cells().iter().filter(|c| c.as_str() == *name).count();
            format!("{name}={n}")
        })
        .collect();
    println!("pixels: {}", counts.join(" "));
    Ok(())
}

fn sweep(args: SweepArgs, cfg: &ConfigFile, out: &Path, cmdline: &str) -> CliResult<()> {
    let model = io::read_model_json(&args.model)?;
    let d = SweepConfig::default();
    let sc = SweepConfig {
        separations: args
            .separations
            .or_else(|| cfg.separations.clone())
            .unwrap_or(d.separations),
        repeats: pick(args.repeats, cfg.repeats, d.repeats),
        shots: pick(args.shots, cfg.shots, d.shots),
        grid: pick(args.grid, cfg.grid, d.grid),
        peak_mean: pick(args.peak_mean, cfg.peak_mean, d.peak_mean),
        background_threshold: pick(
            args.background_threshold,
            cfg.background_threshold,
            d.background_threshold,
        ),
        plateau_separation: pick(
            args.plateau_separation,
            cfg.plateau_separation,
            d.plateau_separation,
        ),
        margin: pick(args.margin, cfg.margin, d.margin),
        seed: pick(args.seed, cfg.seed, d.seed),
        max_components: pick(args.max_components, cfg.max_components, d.max_components),
    };

    let estimates = separation_sweep(&model, &sc)?;
    for e in &estimates {
        let tag = if e.direct.is_plateau() { " (plateau)" } else { "" };
        println!(
            "s={} direct={}{tag} classified={}",
            e.true_separation,
            e.direct.value(),
            e.classified
        );
    }

    let header = OutputHeader::new(cmdline, sc.seed);
    let path = out.join("sweep.csv");
    io::write_sweep_csv(&path, &header, &estimates)?;
    wrote(&path);
    Ok(())
}

fn fit_dist(args: FitDistArgs, cfg: &ConfigFile, out: &Path, cmdline: &str) -> CliResult<()> {
    let p_exp = io::read_distribution_csv(&args.input)?;
    let d = FitConfig::default();
    let fc = FitConfig {
        grid_step: pick(args.grid_step, cfg.grid_step, d.grid_step),
        n_fit_max: pick(args.n_fit_max, cfg.n_fit_max, d.n_fit_max),
        max_modes: pick(args.max_modes, cfg.max_modes, d.max_modes),
    };
    let result = fit_distribution(&p_exp, &fc)?;

    // No randomness in this command; the header's seed slot is fixed.
    let header = OutputHeader::new(cmdline, 0);
    let report = io::fit_report(&header, &result, &p_exp, &fc);
    println!("objective: {}", report.objective);
    for (i, mode) in report.modes.iter().enumerate() {
        println!(
            "mode {}: coherent={} thermal={}+{}",
            i + 1,
            mode.coherent,
            mode.thermal1,
            mode.thermal2
        );
    }

    let path = out.join("fit_report.json");
    io::write_fit_report_json(&path, &report)?;
    wrote(&path);
    let path = out.join("fit_bars.csv");
    io::write_fit_bars_csv(&path, &header, &report)?;
    wrote(&path);
    Ok(())
}

fn features(args: FeaturesArgs, cfg: &ConfigFile, out: &Path, cmdline: &str) -> CliResult<()> {
    let shots_list = args
        .shots_list
        .or_else(|| cfg.shots_list.clone())
        .unwrap_or_else(|| vec![10, 100, 1000, 10_000]);
    if shots_list.iter().any(|&d| d == 0) {
        return Err(usage("--shots-list entries must be at least 1"));
    }
    let per_point = pick(args.per_point, cfg.per_point, 200);
    if per_point == 0 {
        return Err(usage("--per-point must be at least 1"));
    }
    let seed = pick(args.seed, cfg.seed, 0);
    let n_max = pick(args.n_max, cfg.n_max, DEFAULT_N_MAX);
    let defs = ClassDefinitions::default();

    let mut rows = Vec::with_capacity(ClassLabel::ALL.len() * (1 + shots_list.len() * per_point));
    for label in ClassLabel::ALL {
        let dist = distribution_mix(defs.mix_for(label), n_max);
        rows.push(FeatureScatterRow {
            label,
            shots: 0,
            projection: feature_projection(&FeatureVector::from_distribution(&dist)),
        });
        for (di, &shots) in shots_list.iter().enumerate() {
            for i in 0..per_point {
                let stream = ((label.index() * shots_list.len() + di) * per_point + i) as u64;
                let mut rng = StreamRng::new(seed, stream);
                let hist = draw_counts(&dist, shots, &mut rng);
                rows.push(FeatureScatterRow {
                    label,
                    shots,
                    projection: feature_projection(&to_features(&hist)?),
                });
            }
        }
    }

    let header = OutputHeader::new(cmdline, seed);
    let path = out.join("features.csv");
    io::write_features_csv(&path, &header, &rows)?;
    wrote(&path);
    Ok(())
}
