//! Procedural floorplans, manipulated alternatives, and episode datasets.

mod dataset;
mod floorplan;
mod manipulate;

pub use dataset::{
    generate_dataset, load_manifest, sample_start, DatasetSpec, Episode, Manifest, SizePreset, MANIFEST_FILE, TAXONOMY_FILE,
};
pub use floorplan::{synthesize, synthesize_floorplan, Floorplan, FloorplanSpec, Rect};
pub use manipulate::{manipulate, ManipulationLog, ManipulationSpec};
