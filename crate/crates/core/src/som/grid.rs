use crate::error::{Error, Result};

/// Size and resolution of a square-celled map whose world origin sits at the map center.
///
/// World x grows east, world y grows north; grid columns `u` grow east and rows `v`
/// grow south.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub cell_size_m: f64,
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, cell_size_m: f64) -> Self {
        Self {
            width,
            height,
            cell_size_m,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn uv(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    #[inline]
    pub fn contains(&self, u: i64, v: i64) -> bool {
        u >= 0 && v >= 0 && (u as usize) < self.width && (v as usize) < self.height
    }

    /// Continuous grid coordinates (in cells) of a world point; integer parts are the cell.
    #[inline]
    pub fn world_to_grid_f(&self, x_m: f64, y_m: f64) -> (f64, f64) {
        (
            self.width as f64 / 2.0 + x_m / self.cell_size_m,
            self.height as f64 / 2.0 - y_m / self.cell_size_m,
        )
    }

    /// Cell containing a world point, without bounds checking.
    #[inline]
    pub fn world_to_cell_unchecked(&self, x_m: f64, y_m: f64) -> (i64, i64) {
        let (gu, gv) = self.world_to_grid_f(x_m, y_m);
        (gu.floor() as i64, gv.floor() as i64)
    }

    pub fn world_to_cell(&self, x_m: f64, y_m: f64) -> Result<(usize, usize)> {
        let (u, v) = self.world_to_cell_unchecked(x_m, y_m);
        if self.contains(u, v) {
            Ok((u as usize, v as usize))
        } else {
            Err(Error::OutOfBounds { x: x_m, y: y_m })
        }
    }

    /// World coordinates of a cell center.
    pub fn cell_to_world(&self, u: usize, v: usize) -> Result<(f64, f64)> {
        if u >= self.width || v >= self.height {
            return Err(Error::CellOutOfBounds {
                u: u as i64,
                v: v as i64,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.cell_center(u, v))
    }

    #[inline]
    pub fn cell_center(&self, u: usize, v: usize) -> (f64, f64) {
        (
            (u as f64 + 0.5 - self.width as f64 / 2.0) * self.cell_size_m,
            (self.height as f64 / 2.0 - v as f64 - 0.5) * self.cell_size_m,
        )
    }

    pub fn check_same(&self, other: &GridGeometry, what: &str) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

/// Single-channel occupancy map.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    geom: GridGeometry,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn filled(geom: GridGeometry, state: CellState) -> Self {
        Self {
            geom,
            cells: vec![state; geom.len()],
        }
    }

    pub fn from_cells(geom: GridGeometry, cells: Vec<CellState>) -> Result<Self> {
        if cells.len() != geom.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                geom.width,
                geom.height
            )));
        }
        Ok(Self { geom, cells })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geom
    }

    pub fn width(&self) -> usize {
        self.geom.width
    }

    pub fn height(&self) -> usize {
        self.geom.height
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> CellState {
        self.cells[self.geom.idx(u, v)]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> CellState {
        self.cells[idx]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, s: CellState) {
        let i = self.geom.idx(u, v);
        self.cells[i] = s;
    }

    #[inline]
    pub fn set_at(&mut self, idx: usize, s: CellState) {
        self.cells[idx] = s;
    }

    #[inline]
    pub fn is_occupied(&self, idx: usize) -> bool {
        self.cells[idx] == CellState::Occupied
    }

    pub fn count(&self, s: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == s).count()
    }

    pub fn occupied_mask(&self) -> Mask {
        Mask::from_fn(self.geom.width, self.geom.height, |i| {
            self.cells[i] == CellState::Occupied
        })
    }
}

/// Dense boolean grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize) -> bool) -> Self {
        Self {
            width,
            height,
            bits: (0..width * height).map(f).collect(),
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[v * self.width + u]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.bits[v * self.width + u] = value;
    }

    #[inline]
    pub fn set_at(&mut self, idx: usize, value: bool) {
        self.bits[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_shape(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }
}
