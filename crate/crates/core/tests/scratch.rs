//! Scratch experiments (not part of the suite; deleted before release).

use quastim::classifier::{
    evaluate, train_seeded, ClassLabel, LabeledDataset, LabeledItem, MLPModel, TrainConfig,
};
use quastim::imaging::{
    classify_image, composite_class, fit_classified, fit_direct, ground_truth_map,
    simulate_raster_streams, ClassMap, DirectFitOptions, EmitterKind, EmitterSpec,
    FitClassifiedOptions, PixelClass, ScalarImage, Scene,
};
use quastim::photon_stats::{distribution_mix, DistinguishableMix, ModeSpec, DEFAULT_N_MAX};
use quastim::sampling::{draw_counts, to_features, StreamRng};

const SEPARATIONS: [f64; 9] = [0.3, 0.35, 0.4, 0.45, 0.5, 0.6, 0.8, 1.0, 1.5];

fn pair_scene(s: f64, peak: f64, grid: usize, margin: f64) -> Scene {
    Scene::new(
        vec![
            EmitterSpec::new(-s / 2.0, 0.0, EmitterKind::Coherent, peak),
            EmitterSpec::new(s / 2.0, 0.0, EmitterKind::Thermal, peak),
        ],
        (grid, grid),
        s + 2.0 * margin,
    )
    .unwrap()
}

/// Experiment A: disk fits on perfect-classification maps.
#[test]
fn exp_a_perfect_maps() {
    for contrib in [0.05, 0.10, 0.20] {
        println!("--- contribution threshold {contrib}");
        for s in [0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2, 1.5, 2.0] {
            let scene = pair_scene(s, 1.2, 64, 1.6);
            let map = ground_truth_map(&scene, 0.05, contrib).unwrap();
            let fit = fit_classified(&map, 2, &FitClassifiedOptions::default()).unwrap();
            println!(
                "s={s:.2}  fit={:.3}  err={:+.1}%  agree={:.4}",
                fit.separation(),
                100.0 * (fit.separation() - s) / s,
                fit.agreement_fraction()
            );
        }
    }
}

/// Replicates the fitter's agreement objective for hand-built geometries.
/// Disks given as (x_px, y_px, r_px); pixel (ix, iy) sits at (ix, iy).
fn agreement_of(map: &ClassMap, disks: &[(f64, f64, f64, EmitterKind)]) -> (usize, usize) {
    let mut matches = 0;
    let mut fg = 0;
    for iy in 0..map.height() {
        for ix in 0..map.width() {
            let observed = match map.get(ix, iy) {
                PixelClass::Background => continue,
                PixelClass::Light(label) => label,
            };
            fg += 1;
            let mut n_c = 0;
            let mut n_t = 0;
            for &(x, y, r, kind) in disks {
                let (dx, dy) = (ix as f64 - x, iy as f64 - y);
                if dx * dx + dy * dy <= r * r {
                    match kind {
                        EmitterKind::Coherent => n_c += 1,
                        EmitterKind::Thermal => n_t += 1,
                    }
                }
            }
            if n_c == 0 && n_t == 0 {
                let nearest = disks
                    .iter()
                    .min_by(|a, b| {
                        let da = (ix as f64 - a.0).hypot(iy as f64 - a.1) - a.2;
                        let db = (ix as f64 - b.0).hypot(iy as f64 - b.1) - b.2;
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                match nearest.3 {
                    EmitterKind::Coherent => n_c = 1,
                    EmitterKind::Thermal => n_t = 1,
                }
            }
            if composite_class(n_c, n_t) == Some(observed) {
                matches += 1;
            }
        }
    }
    (matches, fg)
}

/// Experiment D: objective landscape probes on a perfect map.
#[test]
fn exp_d_landscape() {
    use EmitterKind::{Coherent, Thermal};
    for (s, theta) in [
        (0.3, 0.05),
        (0.5, 0.05),
        (1.0, 0.05),
        (2.0, 0.05),
        (0.3, 0.1),
        (0.5, 0.1),
        (2.0, 0.1),
        (0.3, 0.2),
        (1.0, 0.2),
    ] {
        let scene = pair_scene(s, 1.2, 64, 1.6);
        let map = ground_truth_map(&scene, 0.05, theta).unwrap();
        let pitch = scene.pitch();
        let half = 64.0 / 2.0;
        let px = |w: f64| w / pitch + half - 0.5;
        let r_det = (1.2_f64 / theta).ln().sqrt() / std::f64::consts::SQRT_2 / pitch;
        let truth = [
            (px(-s / 2.0), px(0.0), r_det, Coherent),
            (px(s / 2.0), px(0.0), r_det, Thermal),
        ];
        let (m_true, fg) = agreement_of(&map, &truth);
        println!(
            "s={s:.2} th={theta}  true: {m_true}/{fg} = {:.4}  (r_det={:.1}px)",
            m_true as f64 / fg as f64,
            r_det
        );
        let fit = fit_classified(&map, 2, &FitClassifiedOptions::default()).unwrap();
        let ret: Vec<(f64, f64, f64, EmitterKind)> = fit
            .disks
            .iter()
            .map(|d| (px(d.x), px(d.y), d.radius / pitch, d.kind))
            .collect();
        let (m_ret, _) = agreement_of(&map, &ret);
        println!(
            "        returned: {:.4} (lib reports {:.4}), disks {:?}",
            m_ret as f64 / fg as f64,
            fit.agreement_fraction(),
            fit.disks
                .iter()
                .map(|d| (
                    (d.x * 100.0).round() / 100.0,
                    (d.y * 100.0).round() / 100.0,
                    (d.radius * 100.0).round() / 100.0
                ))
                .collect::<Vec<_>>()
        );
    }
}

fn log_uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    (rng.uniform() * (hi / lo).ln()).exp() * lo
}

/// Presence-labeled training set: per-source means drawn independently,
/// label = composite of sources above the presence threshold.
fn presence_dataset(per_class: usize, shots: u64, seed: u64) -> LabeledDataset {
    use EmitterKind::{Coherent, Thermal};
    let templates: [&[EmitterKind]; 5] = [
        &[Coherent],
        &[Thermal],
        &[Coherent, Thermal],
        &[Thermal, Thermal],
        &[Coherent, Thermal, Thermal],
    ];
    let threshold = 0.05;
    let mut items = Vec::new();
    for (ti, kinds) in templates.iter().enumerate() {
        for i in 0..per_class {
            let stream = (ti * per_class + i) as u64;
            let mut rng = StreamRng::new(seed, stream);
            let means: Vec<(EmitterKind, f64)> = kinds
                .iter()
                .map(|&k| (k, 1.2 * log_uniform(&mut rng, 0.005, 1.25)))
                .collect();
            let mut n_c = 0usize;
            let mut n_t = 0usize;
            for &(k, m) in &means {
                if m >= threshold {
                    match k {
                        Coherent => n_c += 1,
                        Thermal => n_t += 1,
                    }
                }
            }
            if n_c == 0 && n_t == 0 {
                let strongest = means
                    .iter()
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                match strongest.0 {
                    Coherent => n_c = 1,
                    Thermal => n_t = 1,
                }
            }
            let label = composite_class(n_c, n_t).unwrap();
            let modes: Vec<ModeSpec> = means
                .iter()
                .map(|&(k, m)| match k {
                    Coherent => ModeSpec::coherent(m.sqrt(), 0.0).unwrap(),
                    Thermal => ModeSpec::thermal(m).unwrap(),
                })
                .collect();
            let dist = distribution_mix(&DistinguishableMix::new(modes).unwrap(), DEFAULT_N_MAX);
            let hist = draw_counts(&dist, shots, &mut rng);
            items.push(LabeledItem {
                features: to_features(&hist).unwrap(),
                label,
            });
        }
    }
    // Deterministic shuffle before the positional split.
    let mut rng = StreamRng::new(seed, u64::MAX);
    for i in (1..items.len()).rev() {
        items.swap(i, rng.below(i + 1));
    }
    LabeledDataset::new(items, (0.7, 0.15, 0.15)).unwrap()
}

fn map_agreement(a: &ClassMap, b: &ClassMap) -> (f64, f64) {
    let mut all = 0usize;
    let mut all_match = 0usize;
    let mut fg = 0usize;
    let mut fg_match = 0usize;
    for (ca, cb) in a.cells().iter().zip(b.cells()) {
        all += 1;
        if ca == cb {
            all_match += 1;
        }
        if *ca != PixelClass::Background || *cb != PixelClass::Background {
            fg += 1;
            if ca == cb {
                fg_match += 1;
            }
        }
    }
    (all_match as f64 / all as f64, fg_match as f64 / fg as f64)
}

/// Experiment B: train on presence-labeled data, run the real pipeline.
#[test]
fn exp_b_presence_model() {
    let t0 = std::time::Instant::now();
    let data = presence_dataset(400, 4000, 7);
    println!("dataset built in {:?}", t0.elapsed());
    let label_counts: Vec<usize> = (0..5)
        .map(|i| {
            data.items()
                .iter()
                .filter(|it| it.label.index() == i)
                .count()
        })
        .collect();
    println!("label counts after relabeling: {label_counts:?}");
    let cfg = TrainConfig {
        max_epochs: 500,
        patience_epochs: 500,
        seed: 7,
        ..TrainConfig::default()
    };
    let (model, _) = train_seeded(&data, &cfg).unwrap();
    let eval = evaluate(&model, data.test());
    println!(
        "trained in {:?}; test accuracy {:.3}",
        t0.elapsed(),
        eval.accuracy()
    );

    for &s in &SEPARATIONS {
        let scene = pair_scene(s, 1.2, 64, 1.6);
        let truth = ground_truth_map(&scene, 0.05, 0.05).unwrap();
        let mut fits = Vec::new();
        let mut agree_all = 0.0;
        let mut agree_fg = 0.0;
        let reps = 4usize;
        for rep in 0..reps {
            let stream_base = (rep as u64) << 24;
            let grid = simulate_raster_streams(&scene, 10_000, 0, stream_base).unwrap();
            let map = classify_image(&model, &grid, 0.05);
            let (a_all, a_fg) = map_agreement(&map, &truth);
            agree_all += a_all;
            agree_fg += a_fg;
            let fit = fit_classified(&map, 2, &FitClassifiedOptions::default()).unwrap();
            fits.push(fit.separation());
        }
        let mean_fit = fits.iter().sum::<f64>() / fits.len() as f64;
        println!(
            "s={s:.2}  mean_fit={mean_fit:.3}  err={:+.1}%  map_agree(all)={:.3} (fg)={:.3}  fits={:?}",
            100.0 * (mean_fit - s) / s,
            agree_all / reps as f64,
            agree_fg / reps as f64,
            fits.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        );
    }
}

fn model_image(
    comps: &[quastim::imaging::GaussianComponent],
    width: usize,
    height: usize,
    pitch: f64,
) -> ScalarImage {
    let half_w = width as f64 / 2.0;
    let half_h = height as f64 / 2.0;
    let mut data = Vec::with_capacity(width * height);
    for iy in 0..height {
        for ix in 0..width {
            let x = (ix as f64 + 0.5 - half_w) * pitch;
            let y = (iy as f64 + 0.5 - half_h) * pitch;
            let mut v = 0.0;
            for c in comps {
                let ux = (x - c.x) / c.waist_x;
                let uy = (y - c.y) / c.waist_y;
                v += c.amplitude * (-2.0 * (ux * ux + uy * uy)).exp();
            }
            data.push(v);
        }
    }
    ScalarImage::new(width, height, data)
}

fn rss(image: &ScalarImage, model: &ScalarImage) -> f64 {
    image
        .data()
        .iter()
        .zip(model.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Experiment C: RSS improvement of 2 components over 1 at default scale.
#[test]
fn exp_c_direct_rss() {
    let force2 = DirectFitOptions {
        rss_improvement: 0.0,
        ..DirectFitOptions::default()
    };
    for (si, &s) in SEPARATIONS.iter().enumerate() {
        let scene = pair_scene(s, 1.2, 64, 1.6);
        let mut improvements = Vec::new();
        for rep in 0..10usize {
            let stream_base = ((si * 10 + rep) as u64) << 24;
            let grid = simulate_raster_streams(&scene, 10_000, 0, stream_base).unwrap();
            let image = grid.empirical_intensity();
            let one = fit_direct(&image, scene.pitch(), 1, &DirectFitOptions::default()).unwrap();
            let two = fit_direct(&image, scene.pitch(), 2, &force2).unwrap();
            let rss1 = rss(&image, &model_image(&one, 64, 64, scene.pitch()));
            let rss2 = rss(&image, &model_image(&two, 64, 64, scene.pitch()));
            improvements.push(1.0 - rss2 / rss1);
        }
        let mean = improvements.iter().sum::<f64>() / improvements.len() as f64;
        let min = improvements.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = improvements.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "s={s:.2}  improvement mean={mean:.4} min={min:.4} max={max:.4}  all={:?}",
            improvements
                .iter()
                .map(|v| (v * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        );
    }
}
