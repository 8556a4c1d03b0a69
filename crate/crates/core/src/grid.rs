//! Integer cell geometry shared by the engine and the region system.

use serde::{Deserialize, Serialize};

/// A map cell addressed by column and row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellPoint {
    pub x: u32,
    pub y: u32,
}

impl CellPoint {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

/// Half-open cell rectangle: `x0..x1` by `y0..y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub const fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        Self { x0, y0, x1, y1 }
    }

    /// The 1×1 rectangle covering a single cell.
    pub const fn cell(p: CellPoint) -> Self {
        Self::new(p.x, p.y, p.x + 1, p.y + 1)
    }

    pub const fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub const fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub const fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub const fn contains(&self, p: CellPoint) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellPoint> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| CellPoint::new(x, y)))
    }

    /// Squared distance from the cell's center to the rect's center, in
    /// half-cell units so it stays integral.
    pub fn center_distance_sq(&self, p: CellPoint) -> u64 {
        let dx = (2 * p.x as i64 + 1) - (self.x0 as i64 + self.x1 as i64);
        let dy = (2 * p.y as i64 + 1) - (self.y0 as i64 + self.y1 as i64);
        (dx * dx + dy * dy) as u64
    }
}
