//! Map data model: semantic occupancy maps, occupancy grids, class taxonomy,
//! difference maps, and the SOM1 file format.

mod grid;
mod io;
mod pose;
mod taxonomy;

pub use grid::{CellState, GridGeometry, Mask, OccupancyGrid};
pub use io::{read_som, som_from_bytes, som_to_bytes, write_som, SOM_MAGIC, SOM_VERSION};
pub use pose::{normalize_deg, wrap_deg, Displacement, Pose2D};
pub use taxonomy::{ClassAction, ClassTaxonomy, TaxonomyEntry};

use crate::error::{Error, Result};

/// Default binarization threshold for probabilities.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Default cell side in meters.
pub const DEFAULT_CELL_SIZE_M: f32 = 0.05;

/// Smallest stored byte whose probability `b / 255` reaches `threshold`.
pub fn threshold_byte(threshold: f64) -> u16 {
    (0u16..=255)
        .find(|&b| b as f64 / 255.0 >= threshold)
        .unwrap_or(256)
}

pub fn quantize(p: f64) -> u8 {
    (p.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Multi-channel grid of per-class occupancy probabilities, quantized to bytes.
///
/// Values are stored channel-major, row-major within a channel. The last channel
/// marks explorable space.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticOccupancyMap {
    width: usize,
    height: usize,
    channels: usize,
    cell_size_m: f32,
    values: Vec<u8>,
}

impl SemanticOccupancyMap {
    pub fn new(width: usize, height: usize, channels: usize, cell_size_m: f32) -> Result<Self> {
        Self::from_raw(
            width,
            height,
            channels,
            cell_size_m,
            vec![0; width * height * channels],
        )
    }

    pub fn from_raw(
        width: usize,
        height: usize,
        channels: usize,
        cell_size_m: f32,
        values: Vec<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::Malformed(format!(
                "dimensions must be positive, got {width}x{height}x{channels}"
            )));
        }
        if !(cell_size_m.is_finite() && cell_size_m > 0.0) {
            return Err(Error::Malformed(format!("cell size {cell_size_m}")));
        }
        if values.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {width}x{height}x{channels}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            cell_size_m,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn cell_size_m(&self) -> f32 {
        self.cell_size_m
    }

    pub fn geometry(&self) -> GridGeometry {
        GridGeometry::new(self.width, self.height, self.cell_size_m as f64)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn explorable_channel(&self) -> usize {
        self.channels - 1
    }

    #[inline]
    fn offset(&self, ch: usize, idx: usize) -> usize {
        ch * self.width * self.height + idx
    }

    pub fn channel(&self, ch: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.values[ch * n..(ch + 1) * n]
    }

    pub fn channel_mut(&mut self, ch: usize) -> &mut [u8] {
        let n = self.width * self.height;
        &mut self.values[ch * n..(ch + 1) * n]
    }

    #[inline]
    pub fn value(&self, ch: usize, u: usize, v: usize) -> u8 {
        self.values[self.offset(ch, v * self.width + u)]
    }

    #[inline]
    pub fn value_at(&self, ch: usize, idx: usize) -> u8 {
        self.values[self.offset(ch, idx)]
    }

    pub fn prob(&self, ch: usize, u: usize, v: usize) -> f64 {
        self.value(ch, u, v) as f64 / 255.0
    }

    #[inline]
    pub fn set_value(&mut self, ch: usize, u: usize, v: usize, b: u8) {
        let o = self.offset(ch, v * self.width + u);
        self.values[o] = b;
    }

    #[inline]
    pub fn set_value_at(&mut self, ch: usize, idx: usize, b: u8) {
        let o = self.offset(ch, idx);
        self.values[o] = b;
    }

    pub fn set_prob(&mut self, ch: usize, u: usize, v: usize, p: f64) {
        self.set_value(ch, u, v, quantize(p));
    }

    #[inline]
    pub fn is_explorable_at(&self, idx: usize) -> bool {
        self.value_at(self.explorable_channel(), idx) as u16 >= threshold_byte(DEFAULT_THRESHOLD)
    }

    pub fn explorable_mask(&self) -> Mask {
        self.channel_mask(self.explorable_channel(), DEFAULT_THRESHOLD)
    }

    /// Cells whose probability on `ch` reaches `threshold`.
    pub fn channel_mask(&self, ch: usize, threshold: f64) -> Mask {
        let tb = threshold_byte(threshold);
        let data = self.channel(ch);
        Mask::from_fn(self.width, self.height, |i| data[i] as u16 >= tb)
    }
}

/// Collapses semantic channels to a binary occupancy grid.
///
/// A cell is Occupied when any obstacle channel reaches `threshold` (ties count as
/// occupied) or when it is outside explorable space.
pub fn collapse_to_occupancy(
    som: &SemanticOccupancyMap,
    taxonomy: &ClassTaxonomy,
    threshold: f64,
) -> Result<OccupancyGrid> {
    taxonomy.check(som.channels())?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold {threshold} outside (0, 1)"
        )));
    }
    let geom = som.geometry();
    let tb = threshold_byte(threshold);
    let explorable = som.explorable_mask();
    let mut occupied = explorable.bits().iter().map(|&e| !e).collect::<Vec<_>>();
    for ch in taxonomy.obstacle_channels() {
        for (o, &b) in occupied.iter_mut().zip(som.channel(ch)) {
            *o |= b as u16 >= tb;
        }
    }
    let cells = occupied
        .into_iter()
        .map(|o| if o { CellState::Occupied } else { CellState::Free })
        .collect();
    OccupancyGrid::from_cells(geom, cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffLabel {
    Unchanged,
    /// Free in the prior, occupied in the truth.
    Added,
    /// Occupied in the prior, free in the truth.
    Removed,
    NotExplorable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceMap {
    width: usize,
    height: usize,
    labels: Vec<DiffLabel>,
}

impl DifferenceMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[DiffLabel] {
        &self.labels
    }

    pub fn get(&self, u: usize, v: usize) -> DiffLabel {
        self.labels[v * self.width + u]
    }

    pub fn count(&self, label: DiffLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn changed(&self) -> usize {
        self.count(DiffLabel::Added) + self.count(DiffLabel::Removed)
    }
}

/// Per-cell change labels between an outdated prior and the current truth.
pub fn diff_maps(
    prior: &OccupancyGrid,
    truth: &OccupancyGrid,
    explorable: &Mask,
) -> Result<DifferenceMap> {
    prior.geometry().check_same(truth.geometry(), "prior vs truth")?;
    if !explorable.same_shape(prior.width(), prior.height()) {
        return Err(Error::DimensionMismatch("explorable mask".into()));
    }
    let labels = (0..prior.geometry().len())
        .map(|i| {
            if !explorable.at(i) {
                return DiffLabel::NotExplorable;
            }
            match (prior.is_occupied(i), truth.is_occupied(i)) {
                (false, true) => DiffLabel::Added,
                (true, false) => DiffLabel::Removed,
                _ => DiffLabel::Unchanged,
            }
        })
        .collect();
    Ok(DifferenceMap {
        width: prior.width(),
        height: prior.height(),
        labels,
    })
}
