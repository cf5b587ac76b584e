use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What layout manipulation may do with the connected components of a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassAction {
    #[serde(rename = "no_op")]
    NoOperation,
    #[serde(rename = "removal")]
    Removal,
    #[serde(rename = "displacement")]
    Displacement,
    #[serde(rename = "overlap_removal")]
    OverlapRemoval,
}

impl ClassAction {
    pub fn is_movable(self) -> bool {
        !matches!(self, ClassAction::NoOperation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub index: usize,
    pub name: String,
    pub action: ClassAction,
    pub obstacle: bool,
}

/// Semantic class table for every channel of a map except the trailing explorable channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TaxonomyEntry>", into = "Vec<TaxonomyEntry>")]
pub struct ClassTaxonomy {
    entries: Vec<TaxonomyEntry>,
}

impl TryFrom<Vec<TaxonomyEntry>> for ClassTaxonomy {
    type Error = Error;

    fn try_from(entries: Vec<TaxonomyEntry>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<ClassTaxonomy> for Vec<TaxonomyEntry> {
    fn from(t: ClassTaxonomy) -> Self {
        t.entries
    }
}

impl ClassTaxonomy {
    /// Validates that indices are unique and cover `0..n` exactly.
    pub fn new(mut entries: Vec<TaxonomyEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidTaxonomy("no entries".into()));
        }
        entries.sort_by_key(|e| e.index);
        for (expected, e) in entries.iter().enumerate() {
            if e.index != expected {
                return Err(Error::InvalidTaxonomy(format!(
                    "channel indices must cover 0..{} exactly; found {} at position {expected}",
                    entries.len(),
                    e.index
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Compact class table used by the procedural floorplans.
    pub fn desk() -> Self {
        Self::from_json_str(include_str!("../../taxonomies/desk.json")).expect("bundled taxonomy")
    }

    pub fn mp3d() -> Self {
        Self::from_json_str(include_str!("../../taxonomies/mp3d.json")).expect("bundled taxonomy")
    }

    pub fn gibson() -> Self {
        Self::from_json_str(include_str!("../../taxonomies/gibson.json")).expect("bundled taxonomy")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("taxonomy serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn entries(&self) -> &[TaxonomyEntry] {
        &self.entries
    }

    /// Number of semantic channels; a map governed by this taxonomy has one more channel.
    pub fn semantic_channels(&self) -> usize {
        self.entries.len()
    }

    pub fn total_channels(&self) -> usize {
        self.entries.len() + 1
    }

    pub fn check(&self, map_channels: usize) -> Result<()> {
        if map_channels != self.total_channels() {
            return Err(Error::TaxonomyMismatch {
                taxonomy: self.semantic_channels(),
                map: map_channels.saturating_sub(1),
            });
        }
        Ok(())
    }

    pub fn entry(&self, channel: usize) -> &TaxonomyEntry {
        &self.entries[channel]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn action(&self, channel: usize) -> ClassAction {
        self.entries[channel].action
    }

    pub fn is_obstacle(&self, channel: usize) -> bool {
        self.entries[channel].obstacle
    }

    pub fn obstacle_channels(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.obstacle)
            .map(|e| e.index)
            .collect()
    }

    pub fn channels_with(&self, action: ClassAction) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.action == action)
            .map(|e| e.index)
            .collect()
    }
}
