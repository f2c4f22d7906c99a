//! Raster-scan imaging of point emitters with per-pixel photon statistics.
//!
//! Each emitter is a point source under a Gaussian point-spread function:
//! its mean photon number at a pixel falls off as peak·exp(−2r²/w²), where
//! w is the PSF waist. Emitters are mutually distinguishable, so a pixel
//! sees a [`DistinguishableMix`] with one mode per emitter, and its photon
//! statistics carry which kinds of source illuminate it — information a
//! plain intensity image integrates away. Classifying every pixel's
//! histogram into {C, T, CT, TT, CTT, background} turns one scan into a
//! class map whose region geometry survives emitter separations well below
//! the diffraction limit; the fitters in the submodules exploit that.
//!
//! Coordinates: positions and waists are in waist units (w0). The grid is
//! centered on the origin; pixel (ix, iy) has center
//! ((ix + 0.5 − width/2)·pitch, (iy + 0.5 − height/2)·pitch) with
//! pitch = extent/width on both axes.

mod fit_classified;
mod fit_direct;
mod sweep;

pub use fit_classified::{
    fit_classified, ClassifiedFit, FitClassifiedOptions, FittedDisk, GeneticConfig,
};
pub use fit_direct::{fit_direct, DirectFitOptions, GaussianComponent};
pub use sweep::{separation_sweep, DirectEstimate, SeparationEstimate, SweepConfig};

use crate::classifier::{predict, ClassLabel, MLPModel};
use crate::error::{Error, Result};
use crate::photon_stats::{
    distribution_mix, DistinguishableMix, ModeSpec, DEFAULT_N_MAX,
};
use crate::sampling::{draw_counts, to_features, PhotonHistogram, StreamRng};

/// Pixels with empirical mean below this are background by default.
pub const DEFAULT_BACKGROUND_THRESHOLD: f64 = 0.05;

/// Statistical kind of one emitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmitterKind {
    Coherent,
    Thermal,
}

impl EmitterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmitterKind::Coherent => "C",
            EmitterKind::Thermal => "T",
        }
    }
}

impl std::fmt::Display for EmitterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EmitterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" => Ok(EmitterKind::Coherent),
            "T" => Ok(EmitterKind::Thermal),
            other => Err(Error::format(
                "emitter kind",
                format!("expected C or T, got {other:?}"),
            )),
        }
    }
}

/// One point emitter. Position and waist in w0 units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterSpec {
    pub x: f64,
    pub y: f64,
    pub waist: f64,
    pub kind: EmitterKind,
    /// Mean photon number at the PSF center.
    pub peak_mean: f64,
}

impl EmitterSpec {
    pub fn new(x: f64, y: f64, kind: EmitterKind, peak_mean: f64) -> EmitterSpec {
        EmitterSpec {
            x,
            y,
            waist: 1.0,
            kind,
            peak_mean,
        }
    }

    /// Mean photon number this emitter contributes at (x, y).
    pub fn mean_at(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.x;
        let dy = y - self.y;
        self.peak_mean * (-2.0 * (dx * dx + dy * dy) / (self.waist * self.waist)).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "waist must be positive and finite, got {}",
                self.waist
            )));
        }
        if !(self.peak_mean > 0.0 && self.peak_mean.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "peak_mean must be positive and finite, got {}",
                self.peak_mean
            )));
        }
        if !self.x.is_finite() || !self.y.is_finite() {
            return Err(Error::InvalidScene("emitter position must be finite".into()));
        }
        Ok(())
    }
}

/// Emitters plus the pixel grid they are imaged onto.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    emitters: Vec<EmitterSpec>,
    width: usize,
    height: usize,
    extent: f64,
}

impl Scene {
    pub const MIN_GRID: usize = 8;

    pub fn new(
        emitters: Vec<EmitterSpec>,
        (width, height): (usize, usize),
        extent: f64,
    ) -> Result<Scene> {
        if emitters.is_empty() {
            return Err(Error::InvalidScene("scene needs at least one emitter".into()));
        }
        if width < Self::MIN_GRID || height < Self::MIN_GRID {
            return Err(Error::InvalidScene(format!(
                "grid must be at least {0}x{0}, got {width}x{height}",
                Self::MIN_GRID
            )));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "extent must be positive and finite, got {extent}"
            )));
        }
        for e in &emitters {
            e.validate()?;
        }
        Ok(Scene {
            emitters,
            width,
            height,
            extent,
        })
    }

    pub fn emitters(&self) -> &[EmitterSpec] {
        &self.emitters
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Physical size of one pixel in w0 units (both axes).
    pub fn pitch(&self) -> f64 {
        self.extent / self.width as f64
    }

    /// Center of pixel (ix, iy) in w0 units, grid centered on the origin.
    pub fn pixel_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let pitch = self.pitch();
        (
            (ix as f64 + 0.5 - self.width as f64 / 2.0) * pitch,
            (iy as f64 + 0.5 - self.height as f64 / 2.0) * pitch,
        )
    }
}

/// The light at one pixel: one distinguishable mode per emitter, coherent
/// emitters as |α|² = mean (phase 0), thermal emitters as m = mean.
pub fn pixel_mix(scene: &Scene, ix: usize, iy: usize) -> DistinguishableMix {
    let (x, y) = scene.pixel_center(ix, iy);
    let modes = scene
        .emitters
        .iter()
        .map(|e| {
            let mean = e.mean_at(x, y);
            match e.kind {
                EmitterKind::Coherent => ModeSpec::coherent(mean.sqrt(), 0.0),
                EmitterKind::Thermal => ModeSpec::thermal(mean),
            }
            .expect("emitter means are finite and nonnegative")
        })
        .collect();
    DistinguishableMix::new(modes).expect("scene has at least one emitter")
}

/// Plain scalar image in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> ScalarImage {
        assert_eq!(data.len(), width * height);
        ScalarImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.data[iy * self.width + ix]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-pixel mean photon numbers (no normalization).
pub fn render_means(scene: &Scene) -> ScalarImage {
    let mut data = Vec::with_capacity(scene.width * scene.height);
    for iy in 0..scene.height {
        for ix in 0..scene.width {
            let (x, y) = scene.pixel_center(ix, iy);
            data.push(scene.emitters.iter().map(|e| e.mean_at(x, y)).sum());
        }
    }
    ScalarImage::new(scene.width, scene.height, data)
}

/// Intensity image normalized to a maximum of 1.
pub fn render_intensity(scene: &Scene) -> ScalarImage {
    let mut image = render_means(scene);
    let max = image.max();
    // Emitter peaks are positive and Gaussians never vanish, so max > 0.
    for v in &mut image.data {
        *v /= max;
    }
    image
}

/// Photon histograms for every pixel of one raster scan.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramGrid {
    width: usize,
    height: usize,
    pitch: f64,
    shots: u64,
    histograms: Vec<PhotonHistogram>,
}

impl HistogramGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// w0 units per pixel, inherited from the scene.
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn get(&self, ix: usize, iy: usize) -> &PhotonHistogram {
        &self.histograms[iy * self.width + ix]
    }

    pub fn histograms(&self) -> &[PhotonHistogram] {
        &self.histograms
    }

    /// Empirical mean image of the scan, normalized to a maximum of 1.
    /// This is what a direct intensity measurement of the same data sees.
    pub fn empirical_intensity(&self) -> ScalarImage {
        let data: Vec<f64> = self.histograms.iter().map(PhotonHistogram::mean).collect();
        let mut image = ScalarImage::new(self.width, self.height, data);
        let max = image.max();
        if max > 0.0 {
            for v in &mut image.data {
                *v /= max;
            }
        }
        image
    }
}

/// Samples D shots per pixel on stream id = pixel row-major index.
pub fn simulate_raster(scene: &Scene, shots: u64, seed: u64) -> Result<HistogramGrid> {
    simulate_raster_streams(scene, shots, seed, 0)
}

/// As [`simulate_raster`], with pixel streams offset by `stream_base` so
/// repeated scans under one master seed stay independent.
pub fn simulate_raster_streams(
    scene: &Scene,
    shots: u64,
    seed: u64,
    stream_base: u64,
) -> Result<HistogramGrid> {
    if shots == 0 {
        return Err(Error::domain("shots per pixel must be at least 1"));
    }
    let mut histograms = Vec::with_capacity(scene.width * scene.height);
    for iy in 0..scene.height {
        for ix in 0..scene.width {
            let dist = distribution_mix(&pixel_mix(scene, ix, iy), DEFAULT_N_MAX);
            let stream = stream_base + (iy * scene.width + ix) as u64;
            let mut rng = StreamRng::new(seed, stream);
            histograms.push(draw_counts(&dist, shots, &mut rng));
        }
    }
    Ok(HistogramGrid {
        width: scene.width,
        height: scene.height,
        pitch: scene.pitch(),
        shots,
        histograms,
    })
}

/// One class-map cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelClass {
    Background,
    Light(ClassLabel),
}

impl PixelClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PixelClass::Background => "BG",
            PixelClass::Light(label) => label.as_str(),
        }
    }
}

impl std::fmt::Display for PixelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grid of per-pixel class decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    width: usize,
    height: usize,
    pitch: f64,
    cells: Vec<PixelClass>,
}

impl ClassMap {
    pub fn new(width: usize, height: usize, pitch: f64, cells: Vec<PixelClass>) -> ClassMap {
        assert_eq!(cells.len(), width * height);
        assert!(pitch > 0.0);
        ClassMap {
            width,
            height,
            pitch,
            cells,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn get(&self, ix: usize, iy: usize) -> PixelClass {
        self.cells[iy * self.width + ix]
    }

    pub fn cells(&self) -> &[PixelClass] {
        &self.cells
    }

    pub fn foreground_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| !matches!(c, PixelClass::Background))
            .count()
    }

    /// Center of pixel (ix, iy) in w0 units, grid centered on the origin.
    pub fn pixel_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            (ix as f64 + 0.5 - self.width as f64 / 2.0) * self.pitch,
            (iy as f64 + 0.5 - self.height as f64 / 2.0) * self.pitch,
        )
    }
}

/// Classifies every pixel: below the mean threshold → background, else the
/// model's argmax class on the histogram's features.
pub fn classify_image(
    model: &MLPModel,
    grid: &HistogramGrid,
    background_threshold: f64,
) -> ClassMap {
    let cells = grid
        .histograms
        .iter()
        .map(|hist| {
            if hist.mean() < background_threshold {
                PixelClass::Background
            } else {
                let features = to_features(hist).expect("raster histograms have shots >= 1");
                PixelClass::Light(predict(model, &features))
            }
        })
        .collect();
    ClassMap::new(grid.width, grid.height, grid.pitch, cells)
}

/// The five-class label for a count of coherent and thermal contributors,
/// if that combination is one of the representable classes.
pub fn composite_class(n_coherent: usize, n_thermal: usize) -> Option<ClassLabel> {
    match (n_coherent, n_thermal) {
        (1, 0) => Some(ClassLabel::C),
        (0, 1) => Some(ClassLabel::T),
        (1, 1) => Some(ClassLabel::CT),
        (0, 2) => Some(ClassLabel::TT),
        (1, 2) => Some(ClassLabel::CTT),
        _ => None,
    }
}

/// Ground-truth class map: an emitter counts at a pixel when its mean there
/// reaches `contribution_threshold`; pixels whose total mean stays below
/// `background_threshold` are background. Errors when a pixel's contributor
/// combination has no class label (e.g. two coherent emitters overlapping).
pub fn ground_truth_map(
    scene: &Scene,
    background_threshold: f64,
    contribution_threshold: f64,
) -> Result<ClassMap> {
    let mut cells = Vec::with_capacity(scene.width * scene.height);
    for iy in 0..scene.height {
        for ix in 0..scene.width {
            let (x, y) = scene.pixel_center(ix, iy);
            let total: f64 = scene.emitters.iter().map(|e| e.mean_at(x, y)).sum();
            if total < background_threshold {
                cells.push(PixelClass::Background);
                continue;
            }
            let mut n_c = 0;
            let mut n_t = 0;
            for e in &scene.emitters {
                if e.mean_at(x, y) >= contribution_threshold {
                    match e.kind {
                        EmitterKind::Coherent => n_c += 1,
                        EmitterKind::Thermal => n_t += 1,
                    }
                }
            }
            if n_c == 0 && n_t == 0 {
                // Foreground by total but no single emitter over threshold:
                // attribute to the strongest emitter.
                let strongest = scene
                    .emitters
                    .iter()
                    .max_by(|a, b| {
                        a.mean_at(x, y)
                            .partial_cmp(&b.mean_at(x, y))
                            .expect("means are finite")
                    })
                    .expect("scene has at least one emitter");
                match strongest.kind {
                    EmitterKind::Coherent => n_c = 1,
                    EmitterKind::Thermal => n_t = 1,
                }
            }
            match composite_class(n_c, n_t) {
                Some(label) => cells.push(PixelClass::Light(label)),
                None => {
                    return Err(Error::InvalidScene(format!(
                        "pixel ({ix}, {iy}) sees {n_c} coherent and {n_t} thermal \
                         emitters, which no class labels"
                    )))
                }
            }
        }
    }
    Ok(ClassMap::new(
        scene.width,
        scene.height,
        scene.pitch(),
        cells,
    ))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon_stats::mix_stats;
    use crate::sampling::FeatureVector;

    fn one_emitter_scene() -> Scene {
        // Pitch 1: emitter coordinates at half-integers sit on pixel centers.
        Scene::new(
            vec![EmitterSpec::new(0.5, 0.5, EmitterKind::Coherent, 1.2)],
            (16, 16),
            16.0,
        )
        .unwrap()
    }

    #[test]
    fn scene_validation_rejects_bad_inputs() {
        let e = EmitterSpec::new(0.0, 0.0, EmitterKind::Thermal, 1.0);
        assert!(Scene::new(vec![], (16, 16), 16.0).is_err());
        assert!(Scene::new(vec![e], (4, 16), 16.0).is_err());
        assert!(Scene::new(vec![e], (16, 16), 0.0).is_err());
        let bad_waist = EmitterSpec {
            waist: 0.0,
            ..e
        };
        assert!(Scene::new(vec![bad_waist], (16, 16), 16.0).is_err());
        let bad_peak = EmitterSpec {
            peak_mean: -1.0,
            ..e
        };
        assert!(Scene::new(vec![bad_peak], (16, 16), 16.0).is_err());
    }

    #[test]
    fn pixel_grid_geometry_is_centered() {
        let scene = one_emitter_scene();
        assert_eq!(scene.pitch(), 1.0);
        assert_eq!(scene.pixel_center(0, 0), (-7.5, -7.5));
        assert_eq!(scene.pixel_center(8, 8), (0.5, 0.5));
        assert_eq!(scene.pixel_center(15, 15), (7.5, 7.5));
    }

    #[test]
    fn pixel_mix_follows_gaussian_profile() {
        let scene = one_emitter_scene();
        // On the emitter: full peak.
        let on = pixel_mix(&scene, 8, 8);
        assert!((on.mean() - 1.2).abs() <= 1e-12);
        // One waist away: peak · e⁻².
        let off = pixel_mix(&scene, 9, 8);
        assert!((off.mean() - 1.2 * (-2.0_f64).exp()).abs() <= 1e-12);
    }

    #[test]
    fn pixel_mix_midpoint_between_two_emitters() {
        // Separation 1 w0; the midpoint pixel sees both at peak · e^{−1/2}.
        let scene = Scene::new(
            vec![
                EmitterSpec::new(-1.0, 0.5, EmitterKind::Coherent, 1.0),
                EmitterSpec::new(0.0, 0.5, EmitterKind::Thermal, 1.0),
            ],
            (16, 16),
            16.0,
        )
        .unwrap();
        let mid = pixel_mix(&scene, 7, 8);
        let want = (-0.5_f64).exp();
        for mode in mid.modes() {
            assert!((mode.mean() - want).abs() <= 1e-12, "mean {}", mode.mean());
        }
        assert_eq!(mid.modes()[0].m_tot(), 0.0);
        assert!(mid.modes()[1].alpha_sq() == 0.0);
    }

    #[test]
    fn rendered_intensity_peaks_at_emitter_with_value_one() {
        let scene = one_emitter_scene();
        let image = render_intensity(&scene);
        assert_eq!(image.get(8, 8), 1.0);
        assert!(image.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn rendered_means_match_distribution_moments() {
        let scene = Scene::new(
            vec![
                EmitterSpec::new(-0.5, 0.5, EmitterKind::Coherent, 1.3),
                EmitterSpec::new(1.5, 0.5, EmitterKind::Thermal, 1.1),
            ],
            (16, 16),
            16.0,
        )
        .unwrap();
        let means = render_means(&scene);
        // Pixels near the emitters; far pixels are vacuum and carry no g².
        for (ix, iy) in [(8, 8), (9, 8), (7, 9), (10, 9)] {
            let stats = mix_stats(&pixel_mix(&scene, ix, iy)).unwrap();
            assert!(
                (means.get(ix, iy) - stats.mean).abs() <= 1e-9,
                "pixel ({ix}, {iy}): {} vs {}",
                means.get(ix, iy),
                stats.mean
            );
        }
    }

    #[test]
    fn symmetric_scene_renders_symmetric_image() {
        let scene = Scene::new(
            vec![
                EmitterSpec::new(-1.0, 0.0, EmitterKind::Thermal, 1.0),
                EmitterSpec::new(1.0, 0.0, EmitterKind::Thermal, 1.0),
            ],
            (16, 16),
            16.0,
        )
        .unwrap();
        let image = render_intensity(&scene);
        for iy in 0..16 {
            for ix in 0..16 {
                let mirrored = image.get(15 - ix, iy);
                assert!((image.get(ix, iy) - mirrored).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn raster_is_deterministic_and_matches_analytic_mean() {
        let scene = one_emitter_scene();
        let a = simulate_raster(&scene, 10_000, 9).unwrap();
        let b = simulate_raster(&scene, 10_000, 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_raster_streams(&scene, 10_000, 9, 1_000_000).unwrap();
        assert_ne!(a, c);

        // Center pixel: empirical mean within 3σ of the analytic mean.
        let stats = mix_stats(&pixel_mix(&scene, 8, 8)).unwrap();
        let sigma = (stats.variance / 10_000.0).sqrt();
        let got = a.get(8, 8).mean();
        assert!(
            (got - stats.mean).abs() <= 3.0 * sigma,
            "mean {got} vs {} (3σ = {})",
            stats.mean,
            3.0 * sigma
        );

        // Far-corner pixel: effectively vacuum, every count at n = 0.
        let corner = a.get(0, 0);
        assert_eq!(corner.counts()[0], 10_000);
        assert!(simulate_raster(&scene, 0, 1).is_err());
    }

    #[test]
    fn empirical_intensity_normalizes_to_unit_maximum() {
        let scene = one_emitter_scene();
        let grid = simulate_raster(&scene, 2_000, 3).unwrap();
        let image = grid.empirical_intensity();
        assert_eq!(image.max(), 1.0);
        assert_eq!(image.width(), 16);
    }

    #[test]
    fn classify_marks_dim_grids_as_background() {
        // All emitters far outside the grid: every pixel is below threshold.
        let scene = Scene::new(
            vec![EmitterSpec::new(50.0, 50.0, EmitterKind::Coherent, 1.2)],
            (8, 8),
            8.0,
        )
        .unwrap();
        let grid = simulate_raster(&scene, 100, 1).unwrap();
        let model = MLPModel::init(0);
        let map = classify_image(&model, &grid, DEFAULT_BACKGROUND_THRESHOLD);
        assert_eq!(map.foreground_count(), 0);
        assert!(map.cells().iter().all(|&c| c == PixelClass::Background));
    }

    #[test]
    fn composite_class_covers_exactly_the_five_labels() {
        assert_eq!(composite_class(1, 0), Some(ClassLabel::C));
        assert_eq!(composite_class(0, 1), Some(ClassLabel::T));
        assert_eq!(composite_class(1, 1), Some(ClassLabel::CT));
        assert_eq!(composite_class(0, 2), Some(ClassLabel::TT));
        assert_eq!(composite_class(1, 2), Some(ClassLabel::CTT));
        assert_eq!(composite_class(0, 0), None);
        assert_eq!(composite_class(2, 0), None);
        assert_eq!(composite_class(0, 3), None);
        assert_eq!(composite_class(2, 1), None);
    }

    #[test]
    fn ground_truth_map_partitions_regions() {
        // Separation 1.6 w0: pure zones over each emitter, a CT band between.
        let scene = Scene::new(
            vec![
                EmitterSpec::new(-0.8, 0.5, EmitterKind::Coherent, 1.2),
                EmitterSpec::new(0.8, 0.5, EmitterKind::Thermal, 1.2),
            ],
            (32, 32),
            16.0,
        )
        .unwrap();
        let map = ground_truth_map(&scene, 0.05, 0.05).unwrap();
        assert!(map.foreground_count() > 0);
        let at = |x: f64, y: f64| {
            let ix = ((x / map.pitch()) + 16.0 - 0.5).round() as usize;
            let iy = ((y / map.pitch()) + 16.0 - 0.5).round() as usize;
            map.get(ix, iy)
        };
        assert_eq!(at(-0.8, 0.5), PixelClass::Light(ClassLabel::C));
        assert_eq!(at(0.8, 0.5), PixelClass::Light(ClassLabel::T));
        assert_eq!(at(0.0, 0.5), PixelClass::Light(ClassLabel::CT));
        assert_eq!(map.get(0, 0), PixelClass::Background);
    }

    #[test]
    fn ground_truth_map_rejects_unrepresentable_overlap() {
        let scene = Scene::new(
            vec![
                EmitterSpec::new(-0.2, 0.0, EmitterKind::Coherent, 1.2),
                EmitterSpec::new(0.2, 0.0, EmitterKind::Coherent, 1.2),
            ],
            (16, 16),
            16.0,
        )
        .unwrap();
        assert!(ground_truth_map(&scene, 0.05, 0.05).is_err());
    }

    #[test]
    fn sampled_means_track_rendered_means_across_the_grid() {
        // Aggregate L1 deviation of empirical means from analytic means,
        // normalized by the total intensity, stays under 2% at D = 10⁴.
        let scene = Scene::new(
            vec![
                EmitterSpec::new(-0.8, 0.0, EmitterKind::Coherent, 1.2),
                EmitterSpec::new(0.8, 0.3, EmitterKind::Thermal, 1.2),
            ],
            (32, 32),
            8.0,
        )
        .unwrap();
        let truth = render_means(&scene);
        let grid = simulate_raster(&scene, 10_000, 17).unwrap();
        let mut abs_dev = 0.0;
        let mut total = 0.0;
        for iy in 0..32 {
            for ix in 0..32 {
                abs_dev += (grid.get(ix, iy).mean() - truth.get(ix, iy)).abs();
                total += truth.get(ix, iy);
            }
        }
        let rel = abs_dev / total;
        assert!(rel < 0.02, "grid-averaged relative deviation {rel}");
    }

    #[test]
    fn exact_features_reproduce_ground_truth_classes() {
        // Infinite-D limit: classify each pixel's exact distribution and
        // compare against the ground-truth partition of a three-source
        // scene. An emitter counts at a pixel where it contributes at least
        // the background threshold.
        let scene = Scene::new(
            vec![
                EmitterSpec::new(-1.6, -0.9, EmitterKind::Coherent, 1.2),
                EmitterSpec::new(1.6, -0.9, EmitterKind::Thermal, 1.2),
                EmitterSpec::new(0.0, 1.4, EmitterKind::Thermal, 1.2),
            ],
            (48, 48),
            9.6,
        )
        .unwrap();
        let truth = ground_truth_map(&scene, DEFAULT_BACKGROUND_THRESHOLD, DEFAULT_BACKGROUND_THRESHOLD)
            .unwrap();
        let model = test_model::shared();
        let mut foreground = 0;
        let mut agree = 0;
        for iy in 0..scene.height() {
            for ix in 0..scene.width() {
                let expected = match truth.get(ix, iy) {
                    PixelClass::Background => continue,
                    PixelClass::Light(label) => label,
                };
                foreground += 1;
                let dist = distribution_mix(&pixel_mix(&scene, ix, iy), DEFAULT_N_MAX);
                let features = FeatureVector::from_distribution(&dist);
                if predict(model, &features) == expected {
                    agree += 1;
                }
            }
        }
        let fraction = agree as f64 / foreground as f64;
        assert!(
            fraction >= 0.95,
            "ground-truth agreement {fraction} on {foreground} foreground pixels"
        );
    }

    #[test]
    fn sampled_classification_recovers_single_emitter_class() {
        let scene = Scene::new(
            vec![EmitterSpec::new(0.0, 0.0, EmitterKind::Thermal, 1.2)],
            (24, 24),
            6.0,
        )
        .unwrap();
        let grid = simulate_raster(&scene, 10_000, 19).unwrap();
        let map = classify_image(test_model::shared(), &grid, DEFAULT_BACKGROUND_THRESHOLD);
        let mut foreground = 0;
        let mut thermal = 0;
        for &cell in map.cells() {
            if let PixelClass::Light(label) = cell {
                foreground += 1;
                if label == ClassLabel::T {
                    thermal += 1;
                }
            }
        }
        assert!(foreground > 50, "foreground {foreground}");
        let fraction = thermal as f64 / foreground as f64;
        assert!(fraction >= 0.90, "thermal fraction {fraction}");
    }

    #[test]
    fn emitter_kind_round_trips_through_strings() {
        assert_eq!("C".parse::<EmitterKind>().unwrap(), EmitterKind::Coherent);
        assert_eq!("T".parse::<EmitterKind>().unwrap(), EmitterKind::Thermal);
        assert!("X".parse::<EmitterKind>().is_err());
        assert_eq!(EmitterKind::Coherent.to_string(), "C");
    }
}
