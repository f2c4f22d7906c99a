//! End-to-end contract tests for the command-line binary: exit codes,
//! provenance headers, byte-identical reruns, setting precedence, and the
//! three-emitter classification regression.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::OnceLock;

use quastim::classifier::{
    generate_dataset, train_seeded, ClassDefinitions, DatasetConfig, TrainConfig,
};
use quastim::io::{self, FitReport, OutputHeader};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_quastim")
}

/// Scratch directory unique to one test; removed on drop.
struct TmpDir(PathBuf);

impl TmpDir {
    fn new(name: &str) -> TmpDir {
        static COUNTER: AtomicU32 = AtomicU32::new(0);
        let id = COUNTER.fetch_add(1, Ordering::Relaxed);
        let dir = std::env::temp_dir().join(format!(
            "quastim-cli-{}-{id}-{name}",
            std::process::id()
        ));
        fs::create_dir_all(&dir).unwrap();
        TmpDir(dir)
    }

    fn path(&self) -> &Path {
        &self.0
    }

    fn join(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for TmpDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

/// Runs the binary in `dir` with a clean output-dir environment.
fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("QUASTIM_OUT_DIR")
        .output()
        .expect("binary spawns")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// A model file trained once and shared by every test that needs one.
///
/// Brightness jitter matches the imaging defaults so off-peak pixels stay
/// in distribution.
fn model_file() -> &'static Path {
    static MODEL: OnceLock<PathBuf> = OnceLock::new();
    MODEL.get_or_init(|| {
        let dataset = generate_dataset(
            &ClassDefinitions::default(),
            &DatasetConfig {
                shots: 4000,
                histograms_per_class: 400,
                seed: 7,
                n_max: 20,
                brightness_jitter: Some((0.05, 1.25)),
            },
        )
        .unwrap();
        let (model, _) = train_seeded(
            &dataset,
            &TrainConfig {
                max_epochs: 500,
                patience_epochs: 500,
                seed: 7,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let path = std::env::temp_dir().join(format!(
            "quastim-cli-shared-model-{}.json",
            std::process::id()
        ));
        io::write_model_json(&path, &OutputHeader::new("test fixture", 7), &model).unwrap();
        path
    })
}

fn assert_comment_header(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let first_comment = text
        .lines()
        .find(|l| l.starts_with('#'))
        .unwrap_or_else(|| panic!("{} has no comment lines", path.display()));
    assert!(first_comment.starts_with("# quastim "));
    assert!(text.contains("\n# command: "));
    assert!(text.contains("\n# seed: "));
}

#[test]
fn gen_data_writes_split_files_and_reruns_byte_identically() {
    let tmp = TmpDir::new("gendata");
    let args = [
        "gen-data",
        "--shots",
        "300",
        "--per-class",
        "40",
        "--seed",
        "7",
        "--out",
        "data",
    ];
    assert_exit(&run_in(tmp.path(), &args), 0);

    let data = tmp.join("data");
    for name in ["train.csv", "validation.csv", "test.csv"] {
        assert_comment_header(&data.join(name));
    }
    let train = io::read_dataset_csv(&data.join("train.csv")).unwrap();
    let val = io::read_dataset_csv(&data.join("validation.csv")).unwrap();
    let test = io::read_dataset_csv(&data.join("test.csv")).unwrap();
    assert_eq!(train.len(), 140);
    assert_eq!(val.len(), 30);
    assert_eq!(test.len(), 30);

    let manifest = fs::read_to_string(data.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 7"));
    assert!(manifest.contains("\"shots\": 300"));

    let before: Vec<Vec<u8>> = ["train.csv", "validation.csv", "test.csv", "manifest.json"]
        .iter()
        .map(|n| fs::read(data.join(n)).unwrap())
        .collect();
    assert_exit(&run_in(tmp.path(), &args), 0);
    for (name, old) in ["train.csv", "validation.csv", "test.csv", "manifest.json"]
        .iter()
        .zip(&before)
    {
        assert_eq!(&fs::read(data.join(name)).unwrap(), old, "{name} changed");
    }
}

#[test]
fn zero_shots_is_a_usage_error_naming_the_flag() {
    let tmp = TmpDir::new("shots0");
    let output = run_in(tmp.path(), &["gen-data", "--shots", "0"]);
    assert_exit(&output, 2);
    assert!(stderr_of(&output).contains("--shots"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = TmpDir::new("badflag");
    assert_exit(&run_in(tmp.path(), &["gen-data", "--frobnicate"]), 2);
}

#[test]
fn empty_scene_file_is_a_usage_error() {
    let tmp = TmpDir::new("emptyscene");
    fs::write(
        tmp.join("scene.json"),
        r#"{"emitters": [], "grid": [16, 16], "extent": 4.0}"#,
    )
    .unwrap();
    let output = run_in(tmp.path(), &["simulate", "--scene", "scene.json"]);
    assert_exit(&output, 2);
    assert!(stderr_of(&output).contains("no emitters"));
}

#[test]
fn missing_input_file_is_an_io_error() {
    let tmp = TmpDir::new("missing");
    let output = run_in(
        tmp.path(),
        &["eval", "--model", "absent.json", "--data", "absent.csv"],
    );
    assert_exit(&output, 3);
}

#[test]
fn mismatched_feature_width_is_a_format_error() {
    let tmp = TmpDir::new("narrow");
    fs::write(tmp.join("narrow.csv"), "f0,f1,f2,label\n0.5,0.3,0.2,C\n").unwrap();
    let output = run_in(
        tmp.path(),
        &[
            "eval",
            "--model",
            model_file().to_str().unwrap(),
            "--data",
            "narrow.csv",
        ],
    );
    assert_exit(&output, 4);
    assert!(stderr_of(&output).contains("feature columns"));
}

#[test]
fn degenerate_training_split_is_a_domain_error() {
    let tmp = TmpDir::new("degenerate");
    let data = tmp.join("data");
    fs::create_dir_all(&data).unwrap();
    // Train split holds only C items; validation introduces T.
    let mut csv = String::from("# fixture\n");
    for i in 0..N_FEATURE_COLS {
        csv.push_str(&format!("f{i},"));
    }
    csv.push_str("label\n");
    let row = |label: &str| {
        let mut line = String::new();
        for i in 0..N_FEATURE_COLS {
            line.push_str(if i == 0 { "0.5," } else { "0.025," });
        }
        line.push_str(label);
        line.push('\n');
        line
    };
    let mut train = csv.clone();
    for _ in 0..10 {
        train.push_str(&row("C"));
    }
    let mut val = csv.clone();
    val.push_str(&row("T"));
    fs::write(data.join("train.csv"), train).unwrap();
    fs::write(data.join("validation.csv"), val).unwrap();

    let output = run_in(
        tmp.path(),
        &["train", "--data", "data", "--max-epochs", "5", "--patience", "5"],
    );
    assert_exit(&output, 4);
    assert!(stderr_of(&output).contains("absent from the training split"));
}

const N_FEATURE_COLS: usize = 21;

#[test]
fn truncated_fit_input_is_a_domain_error() {
    let tmp = TmpDir::new("truncfit");
    fs::write(tmp.join("short.csv"), "n,count\n0,40\n1,30\n2,20\n3,7\n4,3\n").unwrap();
    let output = run_in(tmp.path(), &["fit-dist", "--input", "short.csv"]);
    assert_exit(&output, 4);
    assert!(stderr_of(&output).contains("n=6"));
}

#[test]
fn fit_dist_recovers_an_all_coherent_allocation_from_poisson_input() {
    let tmp = TmpDir::new("fitpoisson");
    // Poisson mean 1: p(n) = e^{-1} / n!.
    let mut csv = String::from("n,p\n");
    let mut term = (-1.0_f64).exp();
    for n in 0..13 {
        csv.push_str(&format!("{n},{term}\n"));
        term /= (n + 1) as f64;
    }
    fs::write(tmp.join("poisson.csv"), csv).unwrap();
    assert_exit(
        &run_in(tmp.path(), &["fit-dist", "--input", "poisson.csv", "--out", "fit"]),
        0,
    );

    let report: FitReport =
        serde_json::from_str(&fs::read_to_string(tmp.join("fit/fit_report.json")).unwrap())
            .unwrap();
    assert!(report.objective < 1e-10);
    assert_eq!(report.modes.len(), 1);
    assert!((report.modes[0].coherent - 1.0).abs() < 1e-12);
    assert_eq!(report.modes[0].thermal1, 0.0);
    assert_comment_header(&tmp.join("fit/fit_bars.csv"));
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = TmpDir::new("config");
    fs::write(
        tmp.join("cfg.json"),
        r#"{"shots": 250, "per_class": 20, "seed": 9}"#,
    )
    .unwrap();

    assert_exit(
        &run_in(
            tmp.path(),
            &["gen-data", "--config", "cfg.json", "--out", "a"],
        ),
        0,
    );
    let manifest = fs::read_to_string(tmp.join("a/manifest.json")).unwrap();
    assert!(manifest.contains("\"shots\": 250"));
    assert!(manifest.contains("\"seed\": 9"));

    assert_exit(
        &run_in(
            tmp.path(),
            &[
                "gen-data",
                "--config",
                "cfg.json",
                "--shots",
                "500",
                "--out",
                "b",
            ],
        ),
        0,
    );
    let manifest = fs::read_to_string(tmp.join("b/manifest.json")).unwrap();
    assert!(manifest.contains("\"shots\": 500"));
    assert!(manifest.contains("\"seed\": 9"));
}

#[test]
fn env_var_provides_the_default_output_directory() {
    let tmp = TmpDir::new("envout");
    let output = Command::new(bin())
        .args(["gen-data", "--shots", "200", "--per-class", "10"])
        .current_dir(tmp.path())
        .env("QUASTIM_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert_exit(&output, 0);
    assert!(tmp.join("from_env/manifest.json").exists());
}

#[test]
fn simulate_writes_the_archive_and_reruns_byte_identically() {
    let tmp = TmpDir::new("simulate");
    fs::write(
        tmp.join("scene.json"),
        r#"{
          "emitters": [{"x": 0.0, "y": 0.0, "kind": "T", "peak_mean": 1.2}],
          "grid": [16, 16],
          "extent": 4.0,
          "shots": 500,
          "seed": 3
        }"#,
    )
    .unwrap();
    let args = ["simulate", "--scene", "scene.json", "--out", "sim"];
    assert_exit(&run_in(tmp.path(), &args), 0);

    let pgm = fs::read_to_string(tmp.join("sim/intensity.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n# quastim "));
    let hist = fs::read_to_string(tmp.join("sim/histograms.csv")).unwrap();
    assert!(hist.contains("# shots: 500\n"));
    let rows = hist
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .count();
    assert_eq!(rows, 1 + 16 * 16);

    let before = fs::read(tmp.join("sim/histograms.csv")).unwrap();
    assert_exit(&run_in(tmp.path(), &args), 0);
    assert_eq!(fs::read(tmp.join("sim/histograms.csv")).unwrap(), before);
}

#[test]
fn sweep_emits_one_row_per_separation() {
    let tmp = TmpDir::new("sweep");
    let output = run_in(
        tmp.path(),
        &[
            "sweep",
            "--model",
            model_file().to_str().unwrap(),
            "--separations",
            "0.4,1.8",
            "--repeats",
            "2",
            "--shots",
            "2000",
            "--grid",
            "32",
            "--seed",
            "4",
            "--out",
            "sw",
        ],
    );
    assert_exit(&output, 0);
    let text = fs::read_to_string(tmp.join("sw/sweep.csv")).unwrap();
    assert_comment_header(&tmp.join("sw/sweep.csv"));
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("s_true,s_direct,plateau_flag,s_classified"));
    let data: Vec<&str> = rows.collect();
    assert_eq!(data.len(), 2);
    for row in data {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert!(fields[2] == "0" || fields[2] == "1");
    }
}

#[test]
fn features_row_count_matches_the_sampling_plan() {
    let tmp = TmpDir::new("features");
    assert_exit(
        &run_in(
            tmp.path(),
            &[
                "features",
                "--shots-list",
                "10,100",
                "--per-point",
                "15",
                "--seed",
                "2",
                "--out",
                "feat",
            ],
        ),
        0,
    );
    let text = fs::read_to_string(tmp.join("feat/features.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("class,shots,p0,p1,p2"));
    let rows: Vec<&str> = lines.collect();
    // 5 exact anchors + 5 classes x 2 shot counts x 15 points.
    assert_eq!(rows.len(), 5 + 5 * 2 * 15);
    assert_eq!(rows.iter().filter(|r| r.split(',').nth(1) == Some("0")).count(), 5);
}

/// Pipeline regression: a close triangle of emitters blurs into a single
/// intensity lobe, yet the class map recovers a distinct region per source.
#[test]
fn classify_resolves_three_emitters_the_intensity_image_cannot() {
    let tmp = TmpDir::new("classify3");
    // Pairwise separations ~1.4 w0: well below the two-lobe threshold.
    fs::write(
        tmp.join("scene.json"),
        r#"{
          "emitters": [
            {"x": -0.7, "y": -0.5, "kind": "C", "peak_mean": 1.2},
            {"x": 0.7, "y": -0.5, "kind": "T", "peak_mean": 1.2},
            {"x": 0.0, "y": 0.7, "kind": "T", "peak_mean": 1.2}
          ],
          "grid": [48, 48],
          "extent": 6.4,
          "shots": 10000,
          "seed": 5
        }"#,
    )
    .unwrap();
    assert_exit(
        &run_in(
            tmp.path(),
            &[
                "classify",
                "--scene",
                "scene.json",
                "--model",
                model_file().to_str().unwrap(),
                "--out",
                "cls",
            ],
        ),
        0,
    );

    let (width, height, extent) = (48usize, 48usize, 6.4);
    let pitch = extent / width as f64;
    let center = |i: usize| (i as f64 + 0.5 - width as f64 / 2.0) * pitch;

    // Intensity: every pixel at >= half max joins one connected blob.
    let intensity = read_pgm_samples(&tmp.join("cls/intensity.pgm"), width, height);
    let max = *intensity.iter().max().unwrap();
    let bright: Vec<bool> = intensity.iter().map(|&v| 2 * v >= max).collect();
    let blobs = connected_components(&bright, width, height);
    assert_eq!(blobs, 1, "intensity image should show one blurred lobe");

    // Class map: a correct pure-class majority around each emitter.
    let mut classes = vec![String::new(); width * height];
    let text = fs::read_to_string(tmp.join("cls/class_map.csv")).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (ix, iy): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        classes[iy * width + ix] = f[2].to_string();
    }
    let emitters = [(-0.7, -0.5, "C"), (0.7, -0.5, "T"), (0.0, 0.7, "T")];
    for (ex, ey, want) in emitters {
        let mut hits = 0;
        let mut total = 0;
        for iy in 0..height {
            for ix in 0..width {
                let (dx, dy) = (center(ix) - ex, center(iy) - ey);
                if (dx * dx + dy * dy).sqrt() <= 0.3 {
                    total += 1;
                    if classes[iy * width + ix] == want {
                        hits += 1;
                    }
                }
            }
        }
        assert!(total >= 9, "emitter neighborhood too small");
        assert!(
            hits * 10 >= total * 6,
            "emitter at ({ex}, {ey}): {hits}/{total} pixels classified {want}"
        );
    }

    // Composite statistics appear between emitters, background at corners.
    let n_composite = classes
        .iter()
        .filter(|c| ["CT", "TT", "CTT"].contains(&c.as_str()))
        .count();
    assert!(n_composite >= 10, "only {n_composite} composite pixels");
    for (ix, iy) in [(0, 0), (width - 1, 0), (0, height - 1), (width - 1, height - 1)] {
        assert_eq!(classes[iy * width + ix], "BG");
    }
}

/// Reads a plain PGM, checking the declared geometry.
fn read_pgm_samples(path: &Path, width: usize, height: usize) -> Vec<u32> {
    let text = fs::read_to_string(path).unwrap();
    let mut tokens = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::split_whitespace);
    assert_eq!(tokens.next(), Some("P2"));
    assert_eq!(tokens.next(), Some(&*width.to_string()));
    assert_eq!(tokens.next(), Some(&*height.to_string()));
    assert_eq!(tokens.next(), Some("255"));
    let samples: Vec<u32> = tokens.map(|t| t.parse().unwrap()).collect();
    assert_eq!(samples.len(), width * height);
    samples
}

/// 4-neighbor connected components among `true` cells.
fn connected_components(mask: &[bool], width: usize, height: usize) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut components = 0;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (ix, iy) = (i % width, i / width);
            let mut push = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if ix > 0 {
                push(i - 1);
            }
            if ix + 1 < width {
                push(i + 1);
            }
            if iy > 0 {
                push(i - width);
            }
            if iy + 1 < height {
                push(i + width);
            }
        }
    }
    components
}
