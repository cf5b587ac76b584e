use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{manipulate, synthesize_floorplan, FloorplanSpec, ManipulationSpec};
use crate::error::{Error, Result};
use crate::som::{write_som, ClassTaxonomy, Pose2D};
use crate::world::{CellKind, WorldMap};

const VARIANT_SEED_OFFSET: u64 = 1 << 32;
const EPISODE_SEED_OFFSET: u64 = 2 << 32;
const START_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizePreset {
    /// 24 m, W = 481.
    #[default]
    Desk,
    /// 48 m, W = 961.
    Small,
    /// 100 m, W = 2001.
    Large,
}

impl SizePreset {
    pub fn extent_m(self) -> f64 {
        match self {
            SizePreset::Desk => 24.0,
            SizePreset::Small => 48.0,
            SizePreset::Large => 100.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SizePreset::Desk => "desk",
            SizePreset::Small => "small",
            SizePreset::Large => "large",
        }
    }
}

impl fmt::Display for SizePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SizePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(SizePreset::Desk),
            "small" => Ok(SizePreset::Small),
            "large" => Ok(SizePreset::Large),
            _ => Err(Error::InvalidConfig(format!("unknown size preset '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub seed: u64,
    pub floors: usize,
    pub variants_per_map: usize,
    pub episodes_per_variant: usize,
    pub budget_t: usize,
    pub preset: SizePreset,
    pub agent_radius_m: f64,
    /// Template; `seed` and `extent_m` are overwritten per floor.
    pub floorplan: FloorplanSpec,
    /// Template; `seed` is overwritten per variant.
    pub manipulation: ManipulationSpec,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            floors: 1,
            variants_per_map: 10,
            episodes_per_variant: 1,
            budget_t: 1000,
            preset: SizePreset::Desk,
            agent_radius_m: crate::world::Kinematics::default().agent_radius_m,
            floorplan: FloorplanSpec::default(),
            manipulation: ManipulationSpec::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self, taxonomy: &ClassTaxonomy) -> Result<()> {
        if self.floors == 0 || self.variants_per_map == 0 || self.episodes_per_variant == 0 {
            return Err(Error::InvalidConfig("dataset counts must be at least 1".into()));
        }
        if self.budget_t == 0 {
            return Err(Error::InvalidConfig("budget_T must be at least 1".into()));
        }
        self.floor_spec(0).validate(taxonomy)?;
        self.manipulation.validate()
    }

    pub fn floor_spec(&self, floor: usize) -> FloorplanSpec {
        FloorplanSpec {
            seed: self.seed.wrapping_add(floor as u64),
            extent_m: self.preset.extent_m(),
            ..self.floorplan.clone()
        }
    }

    fn variant_seed(&self, floor: usize, variant: usize) -> u64 {
        self.seed
            .wrapping_add(VARIANT_SEED_OFFSET)
            .wrapping_add((floor * self.variants_per_map + variant) as u64)
    }

    fn episode_seed(&self, floor: usize, variant: usize) -> u64 {
        self.seed
            .wrapping_add(EPISODE_SEED_OFFSET)
            .wrapping_add((floor * self.variants_per_map + variant) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub prior_map: PathBuf,
    pub truth_map: PathBuf,
    pub start: Pose2D,
    #[serde(rename = "budget_T")]
    pub budget_t: usize,
}

impl Episode {
    pub fn validate(&self) -> Result<()> {
        if self.budget_t == 0 {
            return Err(Error::InvalidConfig(format!("episode {}: budget_T must be at least 1", self.id)));
        }
        Ok(())
    }

    /// Floor identifier shared by every variant of the same source map.
    pub fn floor_key(&self) -> &Path {
        &self.truth_map
    }
}

/// Episodes with map paths resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub dir: PathBuf,
    pub episodes: Vec<Episode>,
}

impl Manifest {
    pub fn prior_path(&self, ep: &Episode) -> PathBuf {
        self.dir.join(&ep.prior_map)
    }

    pub fn truth_path(&self, ep: &Episode) -> PathBuf {
        self.dir.join(&ep.truth_map)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let episodes: Vec<Episode> = serde_json::from_str(&fs::read_to_string(path)?)?;
    for ep in &episodes {
        ep.validate()?;
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { dir, episodes })
}

/// Uniform start on a free truth cell where the agent body fits, with an integer heading.
pub fn sample_start(world: &WorldMap, agent_radius_m: f64, rng: &mut impl Rng) -> Result<Pose2D> {
    let g = world.geometry();
    let free: Vec<usize> = (0..g.len()).filter(|&i| world.kind_at(i) == CellKind::Free).collect();
    if free.is_empty() {
        return Err(Error::NoFreeCell("map has no free explorable cell".into()));
    }
    for _ in 0..START_ATTEMPTS {
        let (u, v) = g.uv(free[rng.random_range(0..free.len())]);
        let (x, y) = g.cell_center(u, v);
        if !world.disk_collides(x, y, agent_radius_m) {
            let theta = rng.random_range(0..360) as f64;
            return Ok(Pose2D::new(x, y, theta));
        }
    }
    Err(Error::NoFreeCell(format!(
        "no free cell fits a {agent_radius_m} m agent after {START_ATTEMPTS} draws"
    )))
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TAXONOMY_FILE: &str = "taxonomy.json";

/// Writes truth maps, manipulated priors, the taxonomy and `manifest.json` into `out_dir`.
///
/// The manipulated map is the prior and the synthesized original is the truth.
pub fn generate_dataset(spec: &DatasetSpec, taxonomy: &ClassTaxonomy, out_dir: impl AsRef<Path>) -> Result<Vec<Episode>> {
    spec.validate(taxonomy)?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    taxonomy.save(out_dir.join(TAXONOMY_FILE))?;

    let per_floor: Vec<Result<Vec<Episode>>> = (0..spec.floors)
        .into_par_iter()
        .map(|i| generate_floor(spec, taxonomy, out_dir, i))
        .collect();
    let mut episodes = Vec::new();
    for r in per_floor {
        episodes.extend(r?);
    }
    let mut json = serde_json::to_string_pretty(&episodes)?;
    json.push('\n');
    fs::write(out_dir.join(MANIFEST_FILE), json)?;
    log::info!("wrote {} episodes to {}", episodes.len(), out_dir.display());
    Ok(episodes)
}

fn generate_floor(spec: &DatasetSpec, taxonomy: &ClassTaxonomy, out_dir: &Path, i: usize) -> Result<Vec<Episode>> {
    let truth = synthesize_floorplan(&spec.floor_spec(i), taxonomy)?;
    let truth_name = PathBuf::from(format!("floor{i:02}.som"));
    write_som(&truth, out_dir.join(&truth_name))?;
    let world = WorldMap::new(truth.clone(), taxonomy, spec.manipulation.threshold)?;
    let mut episodes = Vec::with_capacity(spec.variants_per_map * spec.episodes_per_variant);
    for j in 0..spec.variants_per_map {
        let mspec = ManipulationSpec {
            seed: spec.variant_seed(i, j),
            ..spec.manipulation
        };
        let (prior, diff, log) = manipulate(&truth, taxonomy, &mspec)?;
        log::debug!(
            "floor {i} variant {j}: {} removed, {} displaced, {} cascaded, {} changed cells",
            log.removed.len(),
            log.displaced.len(),
            log.cascaded.len(),
            diff.changed()
        );
        let prior_name = PathBuf::from(format!("floor{i:02}_v{j:02}.som"));
        write_som(&prior, out_dir.join(&prior_name))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.episode_seed(i, j));
        for k in 0..spec.episodes_per_variant {
            episodes.push(Episode {
                id: format!("floor{i:02}_v{j:02}_e{k:02}"),
                prior_map: prior_name.clone(),
                truth_map: truth_name.clone(),
                start: sample_start(&world, spec.agent_radius_m, &mut rng)?,
                budget_t: spec.budget_t,
            });
        }
    }
    Ok(episodes)
}
