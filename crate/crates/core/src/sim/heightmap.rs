use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{label_components, BinaryMask, Disk, Vec2};

pub const DEFAULT_RESOLUTION: f64 = 0.001;
pub const DEFAULT_WORKSPACE: f64 = 0.30;
/// Dough presence threshold used by perception and fracture detection.
pub const DEFAULT_EPSILON: f64 = 0.002;

/// Uniform grid of dough heights in meters. Same cell layout as [`BinaryMask`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightMap {
    pub resolution: f64,
    pub origin: Vec2,
    pub rows: usize,
    pub cols: usize,
    pub heights: Vec<f64>,
}

impl HeightMap {
    pub fn new(resolution: f64, origin: Vec2, rows: usize, cols: usize) -> Self {
        Self { resolution, origin, rows, cols, heights: vec![0.0; rows * cols] }
    }

    /// Square workspace of side `size` centered on the origin of the workspace frame.
    pub fn workspace(resolution: f64, size: f64) -> Self {
        let n = (size / resolution).round() as usize;
        let half = n as f64 * resolution / 2.0;
        Self::new(resolution, Vec2::new(-half, -half), n, n)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.heights[self.index(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, h: f64) {
        let i = self.index(row, col);
        self.heights[i] = h;
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn center_of_index(&self, i: usize) -> Vec2 {
        self.cell_center(i / self.cols, i % self.cols)
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_at(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        (fx >= 0.0 && fy >= 0.0 && (fx as usize) < self.cols && (fy as usize) < self.rows)
            .then(|| (fy as usize, fx as usize))
    }

    pub fn index_at(&self, p: Vec2) -> Option<usize> {
        self.cell_at(p).map(|(r, c)| self.index(r, c))
    }

    pub fn extent_min(&self) -> Vec2 {
        self.origin
    }

    pub fn extent_max(&self) -> Vec2 {
        self.origin + Vec2::new(self.cols as f64, self.rows as f64) * self.resolution
    }

    /// Sum of heights times cell area, in m³.
    pub fn total_volume(&self) -> f64 {
        self.heights.iter().sum::<f64>() * self.cell_area()
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_height(&self) -> f64 {
        self.heights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cells strictly above `eps`.
    pub fn mask(&self, eps: f64) -> BinaryMask {
        BinaryMask {
            resolution: self.resolution,
            origin: self.origin,
            rows: self.rows,
            cols: self.cols,
            cells: self.heights.iter().map(|&h| h > eps).collect(),
        }
    }

    /// Number of 4-connected components of `{h > eps}`.
    pub fn connected_components(&self, eps: f64) -> usize {
        label_components(self.rows, self.cols, |i| self.heights[i] > eps).count()
    }

    /// Adds a flat cylinder of dough. Rim cells at least half covered stand at
    /// full height, so the visible outline matches the disk; the remaining
    /// volume difference is spread over the rim in proportion to coverage
    /// error, keeping thin rim cells below the default presence threshold.
    pub fn add_cylinder(&mut self, diameter: f64, height: f64, center: Vec2) -> Result<()> {
        if !(diameter > 0.0) || !(height >= 0.0) || !height.is_finite() {
            return Err(Error::InvalidConfig(format!("bad cylinder d={diameter} h={height}")));
        }
        let disk = Disk::new(center, diameter / 2.0)?;
        let lo = self.extent_min();
        let hi = self.extent_max();
        let r = disk.radius;
        if center.x - r < lo.x || center.y - r < lo.y || center.x + r > hi.x || center.y + r > hi.y {
            return Err(Error::OutOfWorkspace);
        }
        let res = self.resolution;
        let half_diag = res * std::f64::consts::FRAC_1_SQRT_2;
        let (r0, c0) = self.cell_at(center - Vec2::new(r, r)).unwrap_or((0, 0));
        let (r1, c1) = self
            .cell_at(center + Vec2::new(r, r))
            .unwrap_or((self.rows - 1, self.cols - 1));
        let mut rim = Vec::new();
        for row in r0..=r1 {
            for col in c0..=c1 {
                let p = self.cell_center(row, col);
                let d = p.distance(center);
                let i = self.index(row, col);
                if d <= r - half_diag {
                    self.heights[i] += height;
                } else if d < r + half_diag {
                    let f = cell_coverage(&disk, p, res, 32);
                    if f > 0.0 {
                        rim.push((i, f));
                    }
                }
            }
        }
        // Height-units of volume the half-coverage rule gains (negative) or loses.
        let deficit: f64 = rim.iter().map(|&(_, f)| if f >= 0.5 { f - 1.0 } else { f }).sum::<f64>() * height;
        let (mut film, mut trim) = (0.0, 0.0);
        if deficit > 0.0 {
            let weight: f64 = rim.iter().filter(|(_, f)| *f < 0.5).map(|(_, f)| f).sum();
            film = if weight > 0.0 { deficit / weight } else { 0.0 };
        } else if deficit < 0.0 {
            let weight: f64 = rim.iter().filter(|(_, f)| *f >= 0.5).map(|(_, f)| 1.0 - f).sum();
            trim = if weight > 0.0 { -deficit / weight } else { 0.0 };
        }
        let film_cap = (0.5 * DEFAULT_EPSILON).min(height);
        for (i, f) in rim {
            self.heights[i] += if f >= 0.5 {
                (height - trim * (1.0 - f)).max(0.5 * height)
            } else {
                (film * f).min(film_cap)
            };
        }
        Ok(())
    }
}

fn cell_coverage(disk: &Disk, center: Vec2, res: f64, n: usize) -> f64 {
    let mut hits = 0usize;
    for i in 0..n {
        for j in 0..n {
            let p = center
                + Vec2::new(
                    ((i as f64 + 0.5) / n as f64 - 0.5) * res,
                    ((j as f64 + 0.5) / n as f64 - 0.5) * res,
                );
            if disk.contains(p) {
                hits += 1;
            }
        }
    }
    hits as f64 / (n * n) as f64
}

/// Default 0.30 m workspace at 1 mm with one cylinder of dough.
pub fn init_cylinder(diameter: f64, height: f64, center: Vec2) -> Result<HeightMap> {
    let mut hm = HeightMap::workspace(DEFAULT_RESOLUTION, DEFAULT_WORKSPACE);
    hm.add_cylinder(diameter, height, center)?;
    Ok(hm)
}

/// Total volume, in m³.
pub fn total_volume(hm: &HeightMap) -> f64 {
    hm.total_volume()
}

pub fn connected_components(hm: &HeightMap, eps: f64) -> usize {
    hm.connected_components(eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = 0.056;
    const H: f64 = 0.016;

    #[test]
    fn cylinder_volume_and_height() {
        let hm = init_cylinder(D, H, Vec2::ZERO).unwrap();
        let analytic = std::f64::consts::PI * 0.028 * 0.028 * 0.016;
        assert!((analytic - 3.941e-5).abs() < 1e-8);
        let rel = (hm.total_volume() - analytic).abs() / analytic;
        assert!(rel < 2e-3, "volume error {rel}");
        assert_eq!(hm.max_height(), 0.016);
    }

    #[test]
    fn zero_height_cylinder_is_empty() {
        let hm = init_cylinder(D, 0.0, Vec2::ZERO).unwrap();
        assert_eq!(hm.total_volume(), 0.0);
        assert_eq!(HeightMap::workspace(0.001, 0.1).total_volume(), 0.0);
    }

    #[test]
    fn cylinder_outside_workspace_rejected() {
        assert_eq!(init_cylinder(D, H, Vec2::new(0.14, 0.0)), Err(Error::OutOfWorkspace));
    }

    #[test]
    fn volume_consistent_across_resolutions() {
        let mut coarse = HeightMap::workspace(0.001, 0.1);
        coarse.add_cylinder(D, H, Vec2::new(0.003, -0.002)).unwrap();
        let mut fine = HeightMap::workspace(0.0005, 0.1);
        fine.add_cylinder(D, H, Vec2::new(0.003, -0.002)).unwrap();
        assert_eq!(fine.heights.len(), 4 * coarse.heights.len());
        let rel = (fine.total_volume() - coarse.total_volume()).abs() / coarse.total_volume();
        assert!(rel < 5e-3, "{rel}");
    }

    #[test]
    fn components_of_cylinders_and_channel() {
        let mut hm = HeightMap::workspace(0.001, 0.2);
        hm.add_cylinder(D, H, Vec2::new(-0.04, 0.0)).unwrap();
        assert_eq!(hm.connected_components(DEFAULT_EPSILON), 1);
        hm.add_cylinder(D, H, Vec2::new(0.04, 0.0)).unwrap();
        assert_eq!(hm.connected_components(DEFAULT_EPSILON), 2);

        let mut cut = init_cylinder(D, H, Vec2::ZERO).unwrap();
        let (_, col) = cut.cell_at(Vec2::new(0.0005, 0.0)).unwrap();
        for row in 0..cut.rows {
            cut.set(row, col, 0.0);
        }
        // Oracle: flood fill from both sides of the channel.
        let labels = label_components(cut.rows, cut.cols, |i| cut.heights[i] > DEFAULT_EPSILON);
        let (r, _) = cut.cell_at(Vec2::ZERO).unwrap();
        let left = labels.labels[cut.index(r, col - 5)];
        let right = labels.labels[cut.index(r, col + 5)];
        assert_ne!(left, right);
        assert_eq!(cut.connected_components(DEFAULT_EPSILON), 2);
    }
}
