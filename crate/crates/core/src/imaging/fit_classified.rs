//! Emitter geometry from a class map.
//!
//! The observed map assigns each pixel one of the five light classes or
//! background. A candidate geometry of one disk per emitter predicts a
//! class for every foreground pixel: inside several disks, the composite
//! class of those emitters' kinds; inside none, the kind of the nearest
//! disk, because a foreground pixel beyond every disk is still lit and its
//! statistics are dominated by whichever emitter sits closest. The fit
//! maximizes the number of foreground pixels where prediction and
//! observation agree. Background pixels are excluded: they were separated
//! by the intensity threshold, not by photon statistics, so they carry no
//! information about emitter geometry. With this objective the boundary
//! arcs of the overlap region pin both disk radius and centers, and the
//! recovered separation is insensitive to where the classifier's
//! detectability limit happens to place the class boundaries. Class
//! regions keep their shape however small the emitter separation is, so
//! the maximizer tracks separations far below the point where the summed
//! intensity profiles merge.
//!
//! The objective counts agreeing pixels, so it is piecewise constant;
//! gradient methods do not apply. The default optimizer is deterministic:
//! centroid seeding per kind assignment, a coarse per-disk lattice scan,
//! then compass search down to quarter-pixel steps. A seeded genetic
//! optimizer is available behind [`FitClassifiedOptions::genetic`] for
//! rugged maps; it refines its best individual with the same compass
//! search, so it never returns a worse map fit than its own seeding.

use super::{composite_class, ClassMap, EmitterKind, PixelClass};
use crate::classifier::ClassLabel;
use crate::error::{Error, Result};
use crate::sampling::StreamRng;

/// One fitted emitter disk, in w0 units with the grid centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedDisk {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub kind: EmitterKind,
}

/// Best geometry found and how well it reproduces the observed map.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedFit {
    pub disks: Vec<FittedDisk>,
    /// Foreground pixels where the predicted and observed class agree.
    pub agreement: usize,
    /// Foreground pixels in the map.
    pub total: usize,
}

impl ClassifiedFit {
    pub fn agreement_fraction(&self) -> f64 {
        self.agreement as f64 / self.total as f64
    }

    /// Distance between the two fitted centers; panics unless exactly two.
    pub fn separation(&self) -> f64 {
        assert_eq!(self.disks.len(), 2, "separation needs a two-disk fit");
        let dx = self.disks[0].x - self.disks[1].x;
        let dy = self.disks[0].y - self.disks[1].y;
        dx.hypot(dy)
    }
}

/// Options for the genetic optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneticConfig {
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig {
            population: 64,
            generations: 120,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitClassifiedOptions {
    /// Allowed disk radius range in w0 units.
    pub radius_bounds: (f64, f64),
    /// Replace the deterministic optimizer's scan stage with a seeded
    /// genetic search. None = fully deterministic fit.
    pub genetic: Option<GeneticConfig>,
}

impl Default for FitClassifiedOptions {
    fn default() -> Self {
        FitClassifiedOptions {
            radius_bounds: (0.5, 2.0),
            genetic: None,
        }
    }
}

/// Disk in pixel-index units: pixel (ix, iy) sits at (ix, iy) exactly.
#[derive(Debug, Clone, Copy)]
struct Disk {
    x: f64,
    y: f64,
    r: f64,
}

impl Disk {
    fn contains(&self, ix: usize, iy: usize) -> bool {
        let dx = ix as f64 - self.x;
        let dy = iy as f64 - self.y;
        dx * dx + dy * dy <= self.r * self.r
    }

    /// Distance from the pixel to the disk edge (negative inside).
    fn edge_distance(&self, ix: usize, iy: usize) -> f64 {
        let dx = ix as f64 - self.x;
        let dy = iy as f64 - self.y;
        dx.hypot(dy) - self.r
    }
}

/// Kind of the disk whose edge lies closest to the pixel.
fn nearest_kind(disks: &[Disk], kinds: &[EmitterKind], ix: usize, iy: usize) -> EmitterKind {
    let (_, &kind) = disks
        .iter()
        .zip(kinds)
        .min_by(|(a, _), (b, _)| {
            a.edge_distance(ix, iy)
                .partial_cmp(&b.edge_distance(ix, iy))
                .expect("distances are finite")
        })
        .expect("fit always places at least one disk");
    kind
}

/// Fits `n_emitters` disks with per-disk kinds to the observed class map.
pub fn fit_classified(
    map: &ClassMap,
    n_emitters: usize,
    opts: &FitClassifiedOptions,
) -> Result<ClassifiedFit> {
    if !(1..=3).contains(&n_emitters) {
        return Err(Error::domain(format!(
            "fit supports 1 to 3 emitters, got {n_emitters}"
        )));
    }
    let (r_lo, r_hi) = opts.radius_bounds;
    if !(r_lo > 0.0 && r_hi >= r_lo && r_hi.is_finite()) {
        return Err(Error::domain(format!(
            "radius bounds must satisfy 0 < lo <= hi, got ({r_lo}, {r_hi})"
        )));
    }
    if map.foreground_count() == 0 {
        return Err(Error::NoForeground);
    }

    let fitter = Fitter {
        map,
        r_lo: r_lo / map.pitch(),
        r_hi: r_hi / map.pitch(),
    };

    let mut best: Option<(usize, Vec<Disk>, Vec<EmitterKind>)> = None;
    for kinds in kind_multisets(n_emitters) {
        let mut seeds = vec![fitter.seed_disks(&kinds)];
        if let Some(lens) = fitter.lens_seed(&kinds) {
            seeds.push(lens);
        }
        for mut disks in seeds {
            match &opts.genetic {
                None => fitter.lattice_scan(&mut disks, &kinds),
                Some(cfg) => fitter.genetic_scan(&mut disks, &kinds, cfg),
            }
            fitter.pair_polish(&mut disks, &kinds);
            fitter.compass_search(&mut disks, &kinds);
            let score = fitter.agreement(&disks, &kinds);
            let better = match &best {
                None => true,
                Some((s, _, _)) => score > *s,
            };
            if better {
                best = Some((score, disks, kinds.clone()));
            }
        }
    }
    let (agreement, disks, kinds) = best.expect("at least one kind assignment");

    let pitch = map.pitch();
    let half_w = map.width() as f64 / 2.0;
    let half_h = map.height() as f64 / 2.0;
    let mut fitted: Vec<FittedDisk> = disks
        .iter()
        .zip(&kinds)
        .map(|(d, &kind)| FittedDisk {
            x: (d.x + 0.5 - half_w) * pitch,
            y: (d.y + 0.5 - half_h) * pitch,
            radius: d.r * pitch,
            kind,
        })
        .collect();
    // Stable output order: coherent disks first, then by position.
    fitted.sort_by(|a, b| {
        let ka = matches!(a.kind, EmitterKind::Thermal) as u8;
        let kb = matches!(b.kind, EmitterKind::Thermal) as u8;
        (ka, a.x, a.y)
            .partial_cmp(&(kb, b.x, b.y))
            .expect("fitted coordinates are finite")
    });
    Ok(ClassifiedFit {
        disks: fitted,
        agreement,
        total: map.foreground_count(),
    })
}

/// All kind assignments of the given size, up to emitter relabeling.
fn kind_multisets(n: usize) -> Vec<Vec<EmitterKind>> {
    let mut out = Vec::new();
    for n_thermal in 0..=n {
        let mut kinds = vec![EmitterKind::Coherent; n - n_thermal];
        kinds.extend(std::iter::repeat(EmitterKind::Thermal).take(n_thermal));
        out.push(kinds);
    }
    out
}

struct Fitter<'a> {
    map: &'a ClassMap,
    r_lo: f64,
    r_hi: f64,
}

impl Fitter<'_> {
    /// Foreground pixels whose observed class matches under disks+kinds.
    fn agreement(&self, disks: &[Disk], kinds: &[EmitterKind]) -> usize {
        let mut matches = 0;
        for iy in 0..self.map.height() {
            for ix in 0..self.map.width() {
                let observed = match self.map.get(ix, iy) {
                    PixelClass::Background => continue,
                    PixelClass::Light(label) => label,
                };
                let mut n_c = 0;
                let mut n_t = 0;
                for (d, &kind) in disks.iter().zip(kinds) {
                    if d.contains(ix, iy) {
                        match kind {
                            EmitterKind::Coherent => n_c += 1,
                            EmitterKind::Thermal => n_t += 1,
                        }
                    }
                }
                if n_c == 0 && n_t == 0 {
                    // Lit but outside every disk: the nearest disk's kind.
                    match nearest_kind(disks, kinds, ix, iy) {
                        EmitterKind::Coherent => n_c = 1,
                        EmitterKind::Thermal => n_t = 1,
                    }
                }
                // A combination outside the class set matches nothing.
                if composite_class(n_c, n_t) == Some(observed) {
                    matches += 1;
                }
            }
        }
        matches
    }

    /// Initial disks: one per emitter, centered on the centroid of the
    /// pixels whose observed class involves that emitter's kind, with the
    /// radius a uniform disk of the same second moment would have. On a
    /// clean map the involvement region of a kind is exactly the emitter's
    /// class disk, so the seed starts in the basin of the true geometry.
    /// Same-kind pairs split along the principal axis of their support so
    /// the scan does not start from coincident disks.
    fn seed_disks(&self, kinds: &[EmitterKind]) -> Vec<Disk> {
        let mut disks = Vec::with_capacity(kinds.len());
        for (i, &kind) in kinds.iter().enumerate() {
            let support = self.support_pixels(kind);
            let (cx, cy, sx, sy, sxy) = moments(&support);
            // A uniform disk of radius R has E[d²] = R²/2.
            let r_init = (2.0 * (sx + sy)).sqrt().clamp(self.r_lo, self.r_hi);
            let copies_before = kinds[..i].iter().filter(|&&k| k == kind).count();
            let copies_total = kinds.iter().filter(|&&k| k == kind).count();
            let (mut x, mut y) = (cx, cy);
            if copies_total > 1 {
                let (vx, vy, sigma) = principal_axis(sx, sy, sxy);
                let offset = sigma.max(1.0);
                // Copies fan out along the axis: −σ, +σ, center.
                let t = match copies_before {
                    0 => -1.0,
                    1 => 1.0,
                    _ => 0.0,
                };
                x += t * offset * vx;
                y += t * offset * vy;
            }
            disks.push(Disk {
                x,
                y,
                r: r_init,
            });
        }
        disks
    }

    /// Seed from the overlap region, for two-disk fits. The pixels whose
    /// class involves both kinds at once form the disk intersection; its
    /// half-width w along the pair axis and half-height h perpendicular
    /// give closed-form estimates R = (w + h²/w)/2, c = (h²/w − w)/2 of
    /// the disk radius and half-separation, since the intersection of two
    /// radius-R disks at ±c spans R − c by √(R² − c²). Spans are measured
    /// after trimming a sliver of each tail, so stray misclassified
    /// pixels far from the overlap cannot stretch them. None when the
    /// overlap region is missing or too small to measure.
    fn lens_seed(&self, kinds: &[EmitterKind]) -> Option<Vec<Disk>> {
        if kinds.len() != 2 {
            return None;
        }
        let need_c = kinds
            .iter()
            .filter(|&&k| k == EmitterKind::Coherent)
            .count();
        let need_t = kinds.len() - need_c;
        let covers = |label: ClassLabel, nc: usize, nt: usize| {
            let (c, t) = label_counts(label);
            c >= nc && t >= nt
        };
        let mut overlap = Vec::new();
        for iy in 0..self.map.height() {
            for ix in 0..self.map.width() {
                if let PixelClass::Light(label) = self.map.get(ix, iy) {
                    if covers(label, need_c, need_t) {
                        overlap.push((ix as f64, iy as f64));
                    }
                }
            }
        }
        if overlap.len() < 8 {
            return None;
        }
        let (cx, cy, sx, sy, sxy) = moments(&overlap);
        let (ux, uy, _) = principal_axis(sx, sy, sxy);
        let along: Vec<f64> = overlap
            .iter()
            .map(|&(x, y)| (x - cx) * ux + (y - cy) * uy)
            .collect();
        let perp: Vec<f64> = overlap
            .iter()
            .map(|&(x, y)| -(x - cx) * uy + (y - cy) * ux)
            .collect();
        let (w, mid_a) = trimmed_span(along)?;
        let (h, mid_p) = trimmed_span(perp)?;
        // A disk intersection is never wider along the axis than across
        // it; anything else is speckle, not an overlap region.
        if w < 1.0 || h < w {
            return None;
        }
        let r_plus_c = h * h / w;
        let r = ((w + r_plus_c) / 2.0).clamp(self.r_lo, self.r_hi);
        let c = ((r_plus_c - w) / 2.0).max(0.0);
        let (mx, my) = (cx + mid_a * ux - mid_p * uy, cy + mid_a * uy + mid_p * ux);

        // Which side of the overlap each kind sits on, from the pixels
        // involving that kind exclusively. Same-kind pairs are symmetric.
        let mut sign = 1.0;
        if kinds[0] != kinds[1] {
            let exclusive = |want: EmitterKind| -> Option<f64> {
                let mut sum = 0.0;
                let mut n = 0usize;
                for iy in 0..self.map.height() {
                    for ix in 0..self.map.width() {
                        if let PixelClass::Light(label) = self.map.get(ix, iy) {
                            let (nc, nt) = label_counts(label);
                            let only = match want {
                                EmitterKind::Coherent => nc >= 1 && nt == 0,
                                EmitterKind::Thermal => nt >= 1 && nc == 0,
                            };
                            if only {
                                sum += (ix as f64 - cx) * ux + (iy as f64 - cy) * uy;
                                n += 1;
                            }
                        }
                    }
                }
                (n > 0).then(|| sum / n as f64)
            };
            if let Some(side) = exclusive(kinds[0]) {
                sign = if side >= 0.0 { 1.0 } else { -1.0 };
            }
        }
        Some(vec![
            Disk {
                x: mx + sign * c * ux,
                y: my + sign * c * uy,
                r,
            },
            Disk {
                x: mx - sign * c * ux,
                y: my - sign * c * uy,
                r,
            },
        ])
    }

    /// Fine joint grid for two-disk fits: half-separation and common
    /// radius in quarter-pixel steps around the current pair, with small
    /// midpoint offsets along and across the pair axis. The agreement
    /// landscape has a near-degenerate ridge where both disks inflate
    /// while their overlap edge stays fixed; per-disk coordinate moves
    /// cannot descend it, a joint grid in exactly those two directions
    /// can. Ties prefer the geometry closest to the incoming one.
    fn pair_polish(&self, disks: &mut Vec<Disk>, kinds: &[EmitterKind]) {
        if disks.len() != 2 {
            return;
        }
        let (d0, d1) = (disks[0], disks[1]);
        let (mx, my) = ((d0.x + d1.x) / 2.0, (d0.y + d1.y) / 2.0);
        let (dx, dy) = (d1.x - d0.x, d1.y - d0.y);
        let norm = dx.hypot(dy);
        let (ux, uy) = if norm < 1e-9 {
            (1.0, 0.0)
        } else {
            (dx / norm, dy / norm)
        };
        let c0 = norm / 2.0;
        let r0 = (d0.r + d1.r) / 2.0;
        let mut best_score = self.agreement(disks, kinds);
        let mut best_key = (0usize, 0usize, 0usize, 0usize);
        let mut best_disks: Option<Vec<Disk>> = None;
        for im in -1i32..=1 {
            for ip in -1i32..=1 {
                let (bx, by) = (
                    mx + im as f64 * ux - ip as f64 * uy,
                    my + im as f64 * uy + ip as f64 * ux,
                );
                for ic in -12i32..=12 {
                    let c = c0 + ic as f64 * 0.25;
                    if c < 0.0 {
                        continue;
                    }
                    for ir in -12i32..=12 {
                        let r = (r0 + ir as f64 * 0.25).clamp(self.r_lo, self.r_hi);
                        let trial = vec![
                            Disk {
                                x: bx - c * ux,
                                y: by - c * uy,
                                r,
                            },
                            Disk {
                                x: bx + c * ux,
                                y: by + c * uy,
                                r,
                            },
                        ];
                        let score = self.agreement(&trial, kinds);
                        let key = (
                            ic.unsigned_abs() as usize,
                            ir.unsigned_abs() as usize,
                            im.unsigned_abs() as usize,
                            ip.unsigned_abs() as usize,
                        );
                        if score > best_score || (score == best_score && key < best_key) {
                            best_score = score;
                            best_key = key;
                            best_disks = Some(trial);
                        }
                    }
                }
            }
        }
        if let Some(d) = best_disks {
            *disks = d;
        }
    }

    /// Foreground pixels whose class involves `kind`; falls back to all
    /// foreground pixels when no observed class does.
    fn support_pixels(&self, kind: EmitterKind) -> Vec<(f64, f64)> {
        use crate::classifier::ClassLabel::{C, CT, CTT, T, TT};
        let involves = |c: PixelClass| -> bool {
            let label = match c {
                PixelClass::Background => return false,
                PixelClass::Light(l) => l,
            };
            match kind {
                EmitterKind::Coherent => matches!(label, C | CT | CTT),
                EmitterKind::Thermal => matches!(label, T | CT | TT | CTT),
            }
        };
        let collect = |pred: &dyn Fn(PixelClass) -> bool| -> Vec<(f64, f64)> {
            let mut px = Vec::new();
            for iy in 0..self.map.height() {
                for ix in 0..self.map.width() {
                    if pred(self.map.get(ix, iy)) {
                        px.push((ix as f64, iy as f64));
                    }
                }
            }
            px
        };
        let support = collect(&involves);
        if !support.is_empty() {
            return support;
        }
        collect(&|c| !matches!(c, PixelClass::Background))
    }

    /// Coarse block scan: each disk in turn tries a lattice of offsets and
    /// radii while the others stay fixed; two passes so disks can react to
    /// each other's moves.
    fn lattice_scan(&self, disks: &mut Vec<Disk>, kinds: &[EmitterKind]) {
        const OFFSETS: [f64; 7] = [-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0];
        let radii: Vec<f64> = (0..7)
            .map(|i| self.r_lo + (self.r_hi - self.r_lo) * i as f64 / 6.0)
            .collect();
        let mut best = self.agreement(disks, kinds);
        for _pass in 0..2 {
            for i in 0..disks.len() {
                let anchor = disks[i];
                let mut chosen = anchor;
                for &dx in &OFFSETS {
                    for &dy in &OFFSETS {
                        for &r in &radii {
                            let trial = Disk {
                                x: anchor.x + dx,
                                y: anchor.y + dy,
                                r,
                            };
                            disks[i] = trial;
                            let score = self.agreement(disks, kinds);
                            if score > best {
                                best = score;
                                chosen = trial;
                            }
                        }
                    }
                }
                disks[i] = chosen;
            }
        }
    }

    /// Compass search over all disk parameters, halving the step from two
    /// pixels down to a quarter pixel. The objective is integer-valued, so
    /// finer steps cannot change it.
    ///
    /// Besides the six axis moves per disk, each disk tries coupled moves
    /// along the line to every other disk: center toward the partner with
    /// radius shrinking by the same step, and the reverse. These track the
    /// near-degenerate direction in which a disk pair inflates while its
    /// overlap edge stays fixed.
    fn compass_search(&self, disks: &mut Vec<Disk>, kinds: &[EmitterKind]) {
        let mut best = self.agreement(disks, kinds);
        let mut step = 2.0;
        while step >= 0.25 {
            let mut improved = true;
            let mut sweeps = 0;
            while improved && sweeps < 200 {
                improved = false;
                sweeps += 1;
                for i in 0..disks.len() {
                    let mut moves = vec![
                        (step, 0.0, 0.0),
                        (-step, 0.0, 0.0),
                        (0.0, step, 0.0),
                        (0.0, -step, 0.0),
                        (0.0, 0.0, step),
                        (0.0, 0.0, -step),
                    ];
                    for (j, other) in disks.iter().enumerate() {
                        if j == i {
                            continue;
                        }
                        let (ux, uy) = (other.x - disks[i].x, other.y - disks[i].y);
                        let norm = ux.hypot(uy);
                        if norm < 1e-9 {
                            continue;
                        }
                        let (ux, uy) = (ux / norm, uy / norm);
                        moves.push((step * ux, step * uy, -step));
                        moves.push((-step * ux, -step * uy, step));
                    }
                    for (dx, dy, dr) in moves {
                        let anchor = disks[i];
                        let trial = Disk {
                            x: anchor.x + dx,
                            y: anchor.y + dy,
                            r: (anchor.r + dr).clamp(self.r_lo, self.r_hi),
                        };
                        if trial.r == anchor.r && (dx, dy) == (0.0, 0.0) {
                            continue;
                        }
                        disks[i] = trial;
                        let score = self.agreement(disks, kinds);
                        if score > best {
                            best = score;
                            improved = true;
                        } else {
                            disks[i] = anchor;
                        }
                    }
                }
            }
            step *= 0.5;
        }
    }

    /// Seeded genetic alternative to the lattice scan. Individuals are flat
    /// (x, y, r) vectors; tournament selection, blend crossover, uniform
    /// mutation, elitism of four.
    fn genetic_scan(&self, disks: &mut Vec<Disk>, kinds: &[EmitterKind], cfg: &GeneticConfig) {
        if cfg.population < 2 || cfg.generations == 0 {
            return;
        }
        let mut rng = StreamRng::new(cfg.seed, 0);
        let seed_vec = flatten(disks);
        let dim = seed_vec.len();
        let mut population: Vec<Vec<f64>> = (0..cfg.population)
            .map(|i| {
                if i == 0 {
                    return seed_vec.clone();
                }
                let mut v = seed_vec.clone();
                for (j, g) in v.iter_mut().enumerate() {
                    if j % 3 == 2 {
                        *g = rng.uniform_in(self.r_lo, self.r_hi);
                    } else {
                        *g += rng.uniform_in(-4.0, 4.0);
                    }
                }
                v
            })
            .collect();
        let mut scores: Vec<usize> = population
            .iter()
            .map(|v| self.agreement(&unflatten(v), kinds))
            .collect();

        for _gen in 0..cfg.generations {
            let mut order: Vec<usize> = (0..population.len()).collect();
            order.sort_by_key(|&i| std::cmp::Reverse(scores[i]));
            let mut next: Vec<Vec<f64>> =
                order.iter().take(4).map(|&i| population[i].clone()).collect();
            while next.len() < cfg.population {
                let a = self.tournament(&scores, &mut rng);
                let b = self.tournament(&scores, &mut rng);
                let mut child = Vec::with_capacity(dim);
                for j in 0..dim {
                    let t = rng.uniform();
                    child.push(population[a][j] * t + population[b][j] * (1.0 - t));
                }
                for (j, g) in child.iter_mut().enumerate() {
                    if rng.uniform() < 0.2 {
                        *g += rng.uniform_in(-2.0, 2.0);
                    }
                    if j % 3 == 2 {
                        *g = g.clamp(self.r_lo, self.r_hi);
                    }
                }
                next.push(child);
            }
            population = next;
            scores = population
                .iter()
                .map(|v| self.agreement(&unflatten(v), kinds))
                .collect();
        }
        let best = (0..population.len())
            .max_by_key(|&i| scores[i])
            .expect("population is nonempty");
        *disks = unflatten(&population[best]);
    }

    fn tournament(&self, scores: &[usize], rng: &mut StreamRng) -> usize {
        let a = rng.below(scores.len());
        let b = rng.below(scores.len());
        if scores[a] >= scores[b] {
            a
        } else {
            b
        }
    }
}

fn flatten(disks: &[Disk]) -> Vec<f64> {
    disks.iter().flat_map(|d| [d.x, d.y, d.r]).collect()
}

fn unflatten(v: &[f64]) -> Vec<Disk> {
    v.chunks_exact(3)
        .map(|c| Disk {
            x: c[0],
            y: c[1],
            r: c[2],
        })
        .collect()
}

/// Centroid and central second moments of a pixel set.
/// How many coherent and thermal contributors a class label implies.
fn label_counts(label: ClassLabel) -> (usize, usize) {
    use ClassLabel::{C, CT, CTT, T, TT};
    match label {
        C => (1, 0),
        T => (0, 1),
        CT => (1, 1),
        TT => (0, 2),
        CTT => (1, 2),
    }
}

/// Half-span and midpoint of the values after dropping 2% (at least two
/// samples) from each tail. None when too few values survive.
fn trimmed_span(mut values: Vec<f64>) -> Option<(f64, f64)> {
    values.sort_by(|a, b| a.partial_cmp(b).expect("projections are finite"));
    let k = (values.len() / 50).max(2);
    if values.len() < 2 * k + 2 {
        return None;
    }
    let lo = values[k];
    let hi = values[values.len() - 1 - k];
    Some(((hi - lo) / 2.0, (hi + lo) / 2.0))
}

fn moments(px: &[(f64, f64)]) -> (f64, f64, f64, f64, f64) {
    let n = px.len().max(1) as f64;
    let cx = px.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = px.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in px {
        sx += (x - cx) * (x - cx);
        sy += (y - cy) * (y - cy);
        sxy += (x - cx) * (y - cy);
    }
    (cx, cy, sx / n, sy / n, sxy / n)
}

/// Unit eigenvector and standard deviation of the dominant axis of the
/// covariance [[sx, sxy], [sxy, sy]].
fn principal_axis(sx: f64, sy: f64, sxy: f64) -> (f64, f64, f64) {
    let tr = sx + sy;
    let det = sx * sy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let lambda = tr / 2.0 + disc;
    // Eigenvector of the larger eigenvalue; fall back to x when isotropic.
    let (vx, vy) = if sxy.abs() > 1e-12 {
        (lambda - sy, sxy)
    } else if sx >= sy {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm = vx.hypot(vy).max(1e-300);
    (vx / norm, vy / norm, lambda.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::ClassLabel;

    /// Independent rasterizer: the class map a disk geometry implies.
    fn map_from_disks(
        width: usize,
        height: usize,
        pitch: f64,
        disks: &[(f64, f64, f64, EmitterKind)],
    ) -> ClassMap {
        let mut cells = Vec::with_capacity(width * height);
        for iy in 0..height {
            for ix in 0..width {
                let x = (ix as f64 + 0.5 - width as f64 / 2.0) * pitch;
                let y = (iy as f64 + 0.5 - height as f64 / 2.0) * pitch;
                let mut n_c = 0;
                let mut n_t = 0;
                for &(ex, ey, er, kind) in disks {
                    if (x - ex).powi(2) + (y - ey).powi(2) <= er * er {
                        match kind {
                            EmitterKind::Coherent => n_c += 1,
                            EmitterKind::Thermal => n_t += 1,
                        }
                    }
                }
                let cell = if n_c == 0 && n_t == 0 {
                    PixelClass::Background
                } else {
                    PixelClass::Light(composite_class(n_c, n_t).expect("representable"))
                };
                cells.push(cell);
            }
        }
        ClassMap::new(width, height, pitch, cells)
    }

    #[test]
    fn recovers_two_disk_geometry_from_exact_map() {
        let pitch = 6.0 / 64.0;
        let truth = [
            (-0.5, 0.0, 1.1, EmitterKind::Coherent),
            (0.5, 0.0, 1.2, EmitterKind::Thermal),
        ];
        let map = map_from_disks(64, 64, pitch, &truth);
        let fit = fit_classified(&map, 2, &FitClassifiedOptions::default()).unwrap();
        assert_eq!(fit.disks.len(), 2);
        assert_eq!(fit.disks[0].kind, EmitterKind::Coherent);
        assert_eq!(fit.disks[1].kind, EmitterKind::Thermal);
        let tol = 2.0 * pitch;
        assert!((fit.disks[0].x + 0.5).abs() <= tol, "x0 {}", fit.disks[0].x);
        assert!((fit.disks[1].x - 0.5).abs() <= tol, "x1 {}", fit.disks[1].x);
        assert!((fit.separation() - 1.0).abs() <= 2.0 * tol);
        assert!(fit.agreement_fraction() >= 0.98);
    }

    #[test]
    fn recovers_single_disk_and_kind() {
        let pitch = 5.0 / 48.0;
        let map = map_from_disks(48, 48, pitch, &[(0.3, -0.4, 0.9, EmitterKind::Thermal)]);
        let fit = fit_classified(&map, 1, &FitClassifiedOptions::default()).unwrap();
        assert_eq!(fit.disks[0].kind, EmitterKind::Thermal);
        assert!((fit.disks[0].x - 0.3).abs() <= 2.0 * pitch);
        assert!((fit.disks[0].y + 0.4).abs() <= 2.0 * pitch);
        assert!((fit.disks[0].radius - 0.9).abs() <= 2.0 * pitch);
        assert!(fit.agreement_fraction() >= 0.99);
    }

    #[test]
    fn splits_same_kind_pair_from_exact_map() {
        let pitch = 6.0 / 64.0;
        let truth = [
            (-0.75, 0.0, 1.0, EmitterKind::Thermal),
            (0.75, 0.0, 1.0, EmitterKind::Thermal),
        ];
        let map = map_from_disks(64, 64, pitch, &truth);
        let fit = fit_classified(&map, 2, &FitClassifiedOptions::default()).unwrap();
        assert!(fit
            .disks
            .iter()
            .all(|d| d.kind == EmitterKind::Thermal));
        assert!((fit.separation() - 1.5).abs() <= 4.0 * pitch);
        assert!(fit.agreement_fraction() >= 0.97);
    }

    #[test]
    fn mirrored_map_gives_mirrored_fit() {
        let pitch = 6.0 / 64.0;
        let truth = [
            (-0.4, 0.2, 1.0, EmitterKind::Coherent),
            (0.7, -0.1, 1.3, EmitterKind::Thermal),
        ];
        let map = map_from_disks(64, 64, pitch, &truth);
        let mirrored_truth = [
            (0.4, 0.2, 1.0, EmitterKind::Coherent),
            (-0.7, -0.1, 1.3, EmitterKind::Thermal),
        ];
        let mirrored = map_from_disks(64, 64, pitch, &mirrored_truth);
        let a = fit_classified(&map, 2, &FitClassifiedOptions::default()).unwrap();
        let b = fit_classified(&mirrored, 2, &FitClassifiedOptions::default()).unwrap();
        // Same kinds, x negated within half a pixel, y and radius preserved.
        for (da, db) in a.disks.iter().zip(&b.disks) {
            assert_eq!(da.kind, db.kind);
            assert!((da.x + db.x).abs() <= 0.5 * pitch, "{} vs {}", da.x, db.x);
            assert!((da.y - db.y).abs() <= 0.5 * pitch);
            assert!((da.radius - db.radius).abs() <= 0.5 * pitch);
        }
    }

    #[test]
    fn rejects_empty_and_invalid_inputs() {
        let background =
            ClassMap::new(8, 8, 1.0, vec![PixelClass::Background; 64]);
        assert!(matches!(
            fit_classified(&background, 1, &FitClassifiedOptions::default()),
            Err(Error::NoForeground)
        ));

        let map = map_from_disks(16, 16, 0.5, &[(0.0, 0.0, 1.0, EmitterKind::Coherent)]);
        assert!(fit_classified(&map, 0, &FitClassifiedOptions::default()).is_err());
        assert!(fit_classified(&map, 4, &FitClassifiedOptions::default()).is_err());
        let bad = FitClassifiedOptions {
            radius_bounds: (2.0, 1.0),
            ..Default::default()
        };
        assert!(fit_classified(&map, 1, &bad).is_err());
    }

    #[test]
    fn genetic_optimizer_is_seeded_and_agrees_with_deterministic() {
        let pitch = 5.0 / 48.0;
        let map = map_from_disks(48, 48, pitch, &[(0.2, 0.1, 1.0, EmitterKind::Coherent)]);
        let opts = FitClassifiedOptions {
            genetic: Some(GeneticConfig {
                population: 24,
                generations: 30,
                seed: 11,
            }),
            ..Default::default()
        };
        let a = fit_classified(&map, 1, &opts).unwrap();
        let b = fit_classified(&map, 1, &opts).unwrap();
        assert_eq!(a, b);
        let det = fit_classified(&map, 1, &FitClassifiedOptions::default()).unwrap();
        assert!((a.disks[0].x - det.disks[0].x).abs() <= 2.0 * pitch);
        assert!((a.disks[0].y - det.disks[0].y).abs() <= 2.0 * pitch);
        assert!(a.agreement_fraction() >= 0.99);
    }

    #[test]
    fn unrepresentable_overlap_counts_against_agreement() {
        // Two coherent disks forced to overlap: the CC zone can never match,
        // so the best achievable agreement stays below 1.
        let pitch = 0.25;
        let mut cells = vec![PixelClass::Background; 32 * 32];
        for (i, cell) in cells.iter_mut().enumerate() {
            let ix = i % 32;
            if (10..22).contains(&ix) {
                *cell = PixelClass::Light(ClassLabel::C);
            }
        }
        let map = ClassMap::new(32, 32, pitch, cells);
        let fit = fit_classified(&map, 2, &FitClassifiedOptions::default()).unwrap();
        assert!(fit.agreement <= fit.total);
        assert!(fit.agreement_fraction() > 0.5);
    }
}
