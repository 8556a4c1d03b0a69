//! Dynamic map partition driven by player action points.
//!
//! The map starts as one region. Each recorded point splits the region that
//! contains it in two by bisecting the region's longer side; square regions
//! are cut vertically. The low half keeps the parent's id and the high half
//! receives a fresh one, so ids are dense and never reused. A cell→id grid
//! keeps lookups O(1); a split rewrites only the cells of the high half.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellPoint, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub u32);

impl std::fmt::Display for RegionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// One row of the region dump format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub id: u32,
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSet {
    width: u32,
    height: u32,
    rects: Vec<Rect>,
    cells: Vec<RegionId>,
    split_count: u64,
}

impl RegionSet {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("region map must be non-empty, got {width}x{height}")));
        }
        Ok(Self {
            width,
            height,
            rects: vec![Rect::new(0, 0, width, height)],
            cells: vec![RegionId(0); width as usize * height as usize],
            split_count: 0,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn split_count(&self) -> u64 {
        self.split_count
    }

    pub fn map_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    fn check(&self, p: CellPoint) -> Result<usize> {
        if p.x >= self.width || p.y >= self.height {
            return Err(Error::Domain(format!("point ({}, {}) outside {}x{} map", p.x, p.y, self.width, self.height)));
        }
        Ok(p.y as usize * self.width as usize + p.x as usize)
    }

    /// Splits the region containing `p` and returns the id of the half that
    /// now contains it. A 1×1 region cannot split and is returned unchanged.
    pub fn record_action_point(&mut self, p: CellPoint) -> Result<RegionId> {
        let idx = self.check(p)?;
        let id = self.cells[idx];
        let r = self.rects[id.0 as usize];
        let (low, high) = if r.width() >= r.height() {
            if r.width() == 1 {
                return Ok(id);
            }
            let mid = r.x0 + r.width().div_ceil(2);
            (Rect::new(r.x0, r.y0, mid, r.y1), Rect::new(mid, r.y0, r.x1, r.y1))
        } else {
            let mid = r.y0 + r.height().div_ceil(2);
            (Rect::new(r.x0, r.y0, r.x1, mid), Rect::new(r.x0, mid, r.x1, r.y1))
        };
        let new_id = RegionId(self.rects.len() as u32);
        self.rects[id.0 as usize] = low;
        self.rects.push(high);
        let w = self.width as usize;
        for y in high.y0..high.y1 {
            let row = y as usize * w;
            self.cells[row + high.x0 as usize..row + high.x1 as usize].fill(new_id);
        }
        self.split_count += 1;
        Ok(if high.contains(p) { new_id } else { id })
    }

    pub fn lookup(&self, p: CellPoint) -> Result<RegionId> {
        Ok(self.cells[self.check(p)?])
    }

    pub fn bounds(&self, id: RegionId) -> Result<Rect> {
        self.rects.get(id.0 as usize).copied().ok_or_else(|| Error::Domain(format!("unknown region {id}")))
    }

    /// Uniform over region ids.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RegionId {
        RegionId(rng.random_range(0..self.rects.len() as u32))
    }

    pub fn ids(&self) -> impl Iterator<Item = RegionId> + '_ {
        (0..self.rects.len() as u32).map(RegionId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (RegionId, Rect)> + '_ {
        self.rects.iter().enumerate().map(|(i, r)| (RegionId(i as u32), *r))
    }

    pub fn dump(&self) -> Vec<RegionRecord> {
        self.iter().map(|(id, r)| RegionRecord { id: id.0, x0: r.x0, y0: r.y0, x1: r.x1, y1: r.y1 }).collect()
    }

    pub fn dump_json(&self) -> String {
        serde_json::to_string(&self.dump()).expect("region dump serializes")
    }

    /// Rebuilds a set by replaying points in order.
    pub fn replay<I: IntoIterator<Item = CellPoint>>(width: u32, height: u32, points: I) -> Result<Self> {
        let mut rs = Self::new(width, height)?;
        for p in points {
            rs.record_action_point(p)?;
        }
        Ok(rs)
    }
}
