//! Command implementations behind the `spotdiff` binary: dataset generation,
//! episode runs, benchmarks over the strategy matrix, and map rendering.
//!
//! Every output byte is a function of the configuration and master seed. Episodes
//! run on a worker pool and results are merged in manifest order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episode::{run_episode_with, EpisodeConfig, EpisodeMaps};
use crate::error::{Error, Result};
use crate::eval::{Metrics, RewardTotals};
use crate::layout::{generate_dataset, load_manifest, DatasetSpec, Episode, Manifest, TAXONOMY_FILE};
use crate::mapping::{BeliefMap, Localization};
use crate::nav::{GlobalStrategy, VisibilityIndex};
use crate::som::{collapse_to_occupancy, read_som, ClassTaxonomy, Mask, OccupancyGrid, SemanticOccupancyMap};
use crate::world::{NoiseModel, SensorConfig};

pub const BENCH_CSV: &str = "bench.csv";
pub const BENCH_JSON: &str = "summary.json";
pub const BENCH_TABLE: &str = "summary.txt";
pub const FAILURES_JSON: &str = "failures.json";

/// Flat run configuration; every field can also be set from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub policy: String,
    pub localization: Localization,
    /// Overrides each episode's budget_T when set.
    pub budget: Option<usize>,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
    /// Run only the first N episodes of the manifest.
    pub episodes: Option<usize>,
    pub render: bool,
    /// Steps between rendered frames and curve samples.
    pub render_every: usize,
    pub out: PathBuf,
    /// Worker threads; all available cores when unset.
    pub workers: Option<usize>,
    pub sensor: SensorConfig,
    pub noise: NoiseModel,
    /// Strategy matrix for `bench`, in table order.
    pub bench_policies: Vec<String>,
    pub bench_localizations: Vec<Localization>,
    /// Dataset layout for `generate`; its seed is replaced by `seed`.
    pub dataset: DatasetSpec,
    /// Taxonomy JSON for `generate`; the desk taxonomy when unset.
    pub taxonomy: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            policy: "combined".into(),
            localization: Localization::DeadReckoning,
            budget: None,
            beta1: GlobalStrategy::DEFAULT_BETA1,
            beta2: GlobalStrategy::DEFAULT_BETA2,
            seed: 0,
            episodes: None,
            render: false,
            render_every: 50,
            out: PathBuf::from("out"),
            workers: None,
            sensor: SensorConfig::default(),
            noise: NoiseModel::default(),
            bench_policies: ["random", "frontier", "diff", "coverage", "combined"].map(String::from).to_vec(),
            bench_localizations: vec![Localization::DeadReckoning, Localization::Oracle],
            dataset: DatasetSpec::default(),
            taxonomy: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Parses a strategy name, applying the configured coefficients to `combined`.
    pub fn strategy(&self, name: &str) -> Result<GlobalStrategy> {
        let s = name.parse::<GlobalStrategy>()?;
        let s = match s {
            GlobalStrategy::CombinedGreedy { .. } => GlobalStrategy::CombinedGreedy {
                beta1: self.beta1,
                beta2: self.beta2,
            },
            other => other,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == Some(0) {
            return Err(Error::InvalidConfig("budget must be at least 1".into()));
        }
        if self.render_every == 0 {
            return Err(Error::InvalidConfig("render_every must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        self.strategy(&self.policy)?;
        for p in &self.bench_policies {
            self.strategy(p)?;
        }
        self.sensor.validate()?;
        self.noise.validate()
    }

    fn manifest_path(&self) -> Result<&Path> {
        let p = self
            .manifest
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("a dataset manifest is required".into()))?;
        if !p.is_file() {
            return Err(Error::InvalidConfig(format!("manifest {} does not exist", p.display())));
        }
        Ok(p)
    }

    fn episode_config(&self, strategy: GlobalStrategy, localization: Localization, ep: &Episode, seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            strategy,
            localization,
            budget_t: self.budget.unwrap_or(ep.budget_t),
            seed,
            sensor: self.sensor,
            noise: self.noise,
            curve_stride: self.render_every,
            ..Default::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
    }
}

/// Process exit code for an error: 2 for configuration problems, 3 for I/O and file format problems.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::BadMagic
        | Error::TruncatedFile { .. }
        | Error::VersionUnsupported(_)
        | Error::Malformed(_) => 3,
        _ => 2,
    }
}

/// Seed of the `index`-th manifest episode under `master`; shared by every strategy so
/// they face the same noise.
pub fn episode_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generates the dataset described by `cfg.dataset` into `cfg.out`.
pub fn cmd_generate(cfg: &RunConfig) -> Result<Vec<Episode>> {
    let taxonomy = match &cfg.taxonomy {
        Some(p) => ClassTaxonomy::load(p)?,
        None => ClassTaxonomy::desk(),
    };
    let spec = DatasetSpec {
        seed: cfg.seed,
        ..cfg.dataset.clone()
    };
    generate_dataset(&spec, &taxonomy, &cfg.out)
}

/// Per-episode report, written as `<episode_id>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub episode_id: String,
    pub strategy: String,
    pub localization: String,
    pub metrics: Metrics,
    pub reward_totals: RewardTotals,
    /// (t, Acc, IoU) samples.
    pub curves: Vec<(usize, f64, f64)>,
    pub steps_executed: usize,
    pub seed: u64,
    pub max_pose_error_m: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub episode_id: String,
    pub strategy: String,
    pub localization: String,
    pub error: String,
}

/// Reports in manifest order plus the episodes that failed.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub reports: Vec<EpisodeReport>,
    pub failures: Vec<Failure>,
}

struct Dataset {
    manifest: Manifest,
    taxonomy: ClassTaxonomy,
    selected: usize,
}

impl Dataset {
    fn open(cfg: &RunConfig) -> Result<Self> {
        let manifest = load_manifest(cfg.manifest_path()?)?;
        let taxonomy = ClassTaxonomy::load(manifest.dir.join(TAXONOMY_FILE))?;
        let selected = cfg.episodes.unwrap_or(manifest.episodes.len()).min(manifest.episodes.len());
        Ok(Self {
            manifest,
            taxonomy,
            selected,
        })
    }

    fn episodes(&self) -> &[Episode] {
        &self.manifest.episodes[..self.selected]
    }

    /// Truth maps and visibility indices, loaded once per floor.
    fn floors(&self, cfg: &EpisodeConfig) -> Result<BTreeMap<PathBuf, Floor>> {
        let mut keys: Vec<&Path> = self.episodes().iter().map(|e| e.floor_key()).collect();
        keys.sort();
        keys.dedup();
        keys.into_par_iter()
            .map(|k| {
                let ep = self.episodes().iter().find(|e| e.floor_key() == k).expect("key from episodes");
                let truth = read_som(self.manifest.truth_path(ep))?;
                let visibility = Arc::new(VisibilityIndex::new(&truth, &self.taxonomy, cfg.threshold, &cfg.goal)?);
                Ok((k.to_path_buf(), Floor { truth, visibility }))
            })
            .collect()
    }

    fn maps(&self, ep: &Episode, floor: &Floor, cfg: &EpisodeConfig) -> Result<EpisodeMaps> {
        let prior = read_som(self.manifest.prior_path(ep))?;
        EpisodeMaps::with_visibility(&prior, floor.truth.clone(), &self.taxonomy, cfg, floor.visibility.clone())
    }
}

struct Floor {
    truth: SemanticOccupancyMap,
    visibility: Arc<VisibilityIndex>,
}

/// One cell of the strategy matrix.
#[derive(Debug, Clone)]
struct Arm {
    name: String,
    strategy: GlobalStrategy,
    localization: Localization,
}

fn run_matrix(cfg: &RunConfig, arms: &[Arm], frames: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    let data = Dataset::open(cfg)?;
    let base = EpisodeConfig::default();
    let floors = data.floors(&base)?;
    let pool = cfg.pool()?;
    let per_episode: Vec<Vec<std::result::Result<EpisodeReport, Failure>>> = pool.install(|| {
        data.episodes()
            .par_iter()
            .enumerate()
            .map(|(i, ep)| {
                let seed = episode_seed(cfg.seed, i);
                let fail = |arm: &Arm, e: &Error| Failure {
                    episode_id: ep.id.clone(),
                    strategy: arm.name.clone(),
                    localization: arm.localization.name().into(),
                    error: e.to_string(),
                };
                let maps = data.maps(ep, &floors[ep.floor_key()], &base);
                arms.iter()
                    .map(|arm| {
                        let maps = maps.as_ref().map_err(|e| fail(arm, e))?;
                        let ecfg = cfg.episode_config(arm.strategy, arm.localization, ep, seed);
                        run_one(ep, arm, maps, &ecfg, frames).map_err(|e| {
                            log::error!("episode {} ({}, {}) failed: {e}", ep.id, arm.name, arm.localization.name());
                            fail(arm, &e)
                        })
                    })
                    .collect()
            })
            .collect()
    });
    let mut out = RunOutcome::default();
    for r in per_episode.into_iter().flatten() {
        match r {
            Ok(rep) => out.reports.push(rep),
            Err(f) => out.failures.push(f),
        }
    }
    Ok(out)
}

fn run_one(ep: &Episode, arm: &Arm, maps: &EpisodeMaps, cfg: &EpisodeConfig, frames: Option<&Path>) -> Result<EpisodeReport> {
    let mut frame_err = None;
    let frame_dir = frames.map(|d| d.join(&ep.id));
    if let Some(d) = &frame_dir {
        fs::create_dir_all(d)?;
    }
    let result = run_episode_with(maps, ep.start, cfg, |t, belief| {
        if let (Some(d), None) = (&frame_dir, &frame_err) {
            let path = d.join(format!("{}_{}_t{t:05}.ppm", arm.name, arm.localization.name()));
            if let Err(e) = fs::write(path, render_belief(maps, belief)) {
                frame_err = Some(e);
            }
        }
    })?;
    if let Some(e) = frame_err {
        return Err(e.into());
    }
    Ok(EpisodeReport {
        episode_id: ep.id.clone(),
        strategy: arm.name.clone(),
        localization: arm.localization.name().into(),
        metrics: result.report.metrics,
        reward_totals: result.trace.totals(),
        curves: result.report.curves.iter().map(|c| (c.t, c.acc, c.iou)).collect(),
        steps_executed: result.steps_executed,
        seed: cfg.seed,
        max_pose_error_m: result.pose_errors.iter().copied().fold(0.0, f64::max),
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Runs every selected episode with the configured policy and localization, writing
/// `<episode_id>.json` reports and `failures.json` into `cfg.out`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let arm = Arm {
        name: cfg.strategy(&cfg.policy)?.name().into(),
        strategy: cfg.strategy(&cfg.policy)?,
        localization: cfg.localization,
    };
    fs::create_dir_all(&cfg.out)?;
    let frames = cfg.render.then(|| cfg.out.join("frames"));
    let outcome = run_matrix(cfg, &[arm], frames.as_deref())?;
    for r in &outcome.reports {
        write_json(&cfg.out.join(format!("{}.json", r.episode_id)), r)?;
    }
    write_json(&cfg.out.join(FAILURES_JSON), &outcome.failures)?;
    Ok(outcome)
}

/// Mean and standard error of each metric for one (strategy, localization) arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub strategy: String,
    pub localization: String,
    pub episodes: usize,
    pub mean: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub columns: Vec<String>,
    pub arms: Vec<ArmSummary>,
    pub failures: Vec<Failure>,
}

impl BenchSummary {
    pub fn arm(&self, strategy: &str, localization: Localization) -> Option<&ArmSummary> {
        self.arms
            .iter()
            .find(|a| a.strategy == strategy && a.localization == localization.name())
    }
}

/// Mean and standard error (sample deviation over sqrt n; zero for a single value).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Groups reports by arm, in the order the arms are listed.
pub fn summarize(reports: &[EpisodeReport], arms: &[(String, String)], failures: Vec<Failure>) -> BenchSummary {
    let arms = arms
        .iter()
        .map(|(strategy, localization)| {
            let rows: Vec<[f64; 9]> = reports
                .iter()
                .filter(|r| &r.strategy == strategy && &r.localization == localization)
                .map(|r| r.metrics.values())
                .collect();
            let mut mean = BTreeMap::new();
            let mut stderr = BTreeMap::new();
            for (j, col) in Metrics::COLUMNS.iter().enumerate() {
                let xs: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                let (m, s) = mean_stderr(&xs);
                mean.insert(col.to_string(), m);
                stderr.insert(col.to_string(), s);
            }
            ArmSummary {
                strategy: strategy.clone(),
                localization: localization.clone(),
                episodes: rows.len(),
                mean,
                stderr,
            }
        })
        .collect();
    BenchSummary {
        columns: Metrics::COLUMNS.iter().map(|c| c.to_string()).collect(),
        arms,
        failures,
    }
}

/// Per-episode rows with a header, in manifest order then matrix order.
pub fn bench_csv(reports: &[EpisodeReport]) -> String {
    let mut s = String::from("episode_id,strategy,localization,seed,steps_executed");
    for c in Metrics::COLUMNS {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for r in reports {
        let _ = write!(s, "{},{},{},{},{}", r.episode_id, r.strategy, r.localization, r.seed, r.steps_executed);
        for v in r.metrics.values() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Text table with Seen% as is and the other metrics in percent, mean ± standard error.
pub fn format_table(summary: &BenchSummary) -> String {
    let heads = ["Seen%", "Acc", "IoU+", "IoU-", "IoU", "mAcc", "mIoU+", "mIoU-", "mIoU"];
    let mut s = format!("{:<10} {:<8} {:>4}", "strategy", "loc", "n");
    for h in heads {
        let _ = write!(s, " {h:>13}");
    }
    s.push('\n');
    for a in &summary.arms {
        let _ = write!(s, "{:<10} {:<8} {:>4}", a.strategy, a.localization, a.episodes);
        for (j, col) in Metrics::COLUMNS.iter().enumerate() {
            let scale = if j == 0 { 1.0 } else { 100.0 };
            let _ = write!(s, " {:>6.1} ± {:>4.1}", a.mean[*col] * scale, a.stderr[*col] * scale);
        }
        s.push('\n');
    }
    s
}

/// Runs the strategy × localization matrix over the selected episodes and writes
/// `bench.csv`, `summary.json`, `summary.txt` and one report per run under `reports/`.
pub fn cmd_bench(cfg: &RunConfig) -> Result<BenchSummary> {
    let mut arms = Vec::new();
    for p in &cfg.bench_policies {
        let strategy = cfg.strategy(p)?;
        for &localization in &cfg.bench_localizations {
            arms.push(Arm {
                name: strategy.name().into(),
                strategy,
                localization,
            });
        }
    }
    let report_dir = cfg.out.join("reports");
    fs::create_dir_all(&report_dir)?;
    let outcome = run_matrix(cfg, &arms, None)?;
    for r in &outcome.reports {
        let name = format!("{}__{}__{}.json", r.episode_id, r.strategy, r.localization);
        write_json(&report_dir.join(name), r)?;
    }
    // Table order: localization blocks, strategies within each.
    let mut order = Vec::new();
    for &l in &cfg.bench_localizations {
        for a in arms.iter().filter(|a| a.localization == l) {
            order.push((a.name.clone(), l.name().to_string()));
        }
    }
    let summary = summarize(&outcome.reports, &order, outcome.failures);
    fs::write(cfg.out.join(BENCH_CSV), bench_csv(&outcome.reports))?;
    write_json(&cfg.out.join(BENCH_JSON), &summary)?;
    fs::write(cfg.out.join(BENCH_TABLE), format_table(&summary))?;
    Ok(summary)
}

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const DARK_GRAY: [u8; 3] = [64, 64, 64];
pub const LIGHT_GRAY: [u8; 3] = [192, 192, 192];
pub const RED: [u8; 3] = [220, 30, 30];

/// PPM (P6) image, one pixel per cell, row 0 at the top.
///
/// A changed cell (prior differs from truth) is red when the belief differs from the
/// prior there and light gray otherwise. Every other occupied cell is dark gray;
/// the rest is white.
pub fn render_ppm(prior: &OccupancyGrid, truth: &OccupancyGrid, belief: &OccupancyGrid, explorable: &Mask) -> Vec<u8> {
    let (w, h) = (truth.width(), truth.height());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(3 * w * h);
    for i in 0..w * h {
        let (p, t, b) = (prior.is_occupied(i), truth.is_occupied(i), belief.is_occupied(i));
        let px = if explorable.at(i) && p != t {
            if b != p { RED } else { LIGHT_GRAY }
        } else if t {
            DARK_GRAY
        } else {
            WHITE
        };
        out.extend_from_slice(&px);
    }
    out
}

fn render_belief(maps: &EpisodeMaps, belief: &BeliefMap) -> Vec<u8> {
    render_ppm(&maps.prior, maps.truth.occupancy(), belief.grid(), &maps.explorable)
}

/// What `cmd_render` draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    /// One map: obstacles dark gray, free space white.
    Map,
    /// Prior against truth (and optionally a later map standing in for the belief).
    Diff,
}

impl std::str::FromStr for RenderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map" => Ok(RenderMode::Map),
            "diff" => Ok(RenderMode::Diff),
            other => Err(Error::InvalidConfig(format!("unknown render mode {other:?}"))),
        }
    }
}

/// Renders SOM files to a PPM at `out`. `Map` uses the first path; `Diff` reads
/// prior, truth and an optional belief map, in that order.
pub fn cmd_render(maps: &[PathBuf], taxonomy: &ClassTaxonomy, mode: RenderMode, threshold: f64, out: &Path) -> Result<()> {
    let load = |p: &PathBuf| -> Result<(OccupancyGrid, Mask)> {
        let som = read_som(p)?;
        Ok((collapse_to_occupancy(&som, taxonomy, threshold)?, som.explorable_mask()))
    };
    let bytes = match (mode, maps) {
        (RenderMode::Map, [m]) => {
            let (occ, _) = load(m)?;
            let none = Mask::new(occ.width(), occ.height());
            render_ppm(&occ, &occ, &occ, &none)
        }
        (RenderMode::Diff, [prior, truth, rest @ ..]) if rest.len() <= 1 => {
            let (prior, _) = load(prior)?;
            let (truth, explorable) = load(truth)?;
            prior.geometry().check_same(truth.geometry(), "prior vs truth")?;
            let belief = match rest.first() {
                Some(b) => {
                    let (b, _) = load(b)?;
                    b.geometry().check_same(truth.geometry(), "belief vs truth")?;
                    b
                }
                None => prior.clone(),
            };
            render_ppm(&prior, &truth, &belief, &explorable)
        }
        _ => {
            return Err(Error::InvalidConfig(format!(
                "render mode {mode:?} takes {} map paths, got {}",
                if mode == RenderMode::Map { "1" } else { "2 or 3" },
                maps.len()
            )))
        }
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, bytes)?;
    Ok(())
}
