use serde::{Deserialize, Serialize};

use super::{Disk, Vec2};

/// Occupancy grid sharing its frame with the height map it came from.
///
/// Cell `(row, col)` covers `origin + [col, col+1) x [row, row+1)` times `resolution`,
/// so rows advance along +y and columns along +x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryMask {
    pub resolution: f64,
    pub origin: Vec2,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(resolution: f64, origin: Vec2, rows: usize, cols: usize) -> Self {
        Self { resolution, origin, rows, cols, cells: vec![false; rows * cols] }
    }

    /// Rasterizes a disk: a cell is set when more than half of its area lies inside.
    /// Coverage is estimated with a 16x16 sub-sample grid per boundary cell.
    pub fn from_disk(resolution: f64, origin: Vec2, rows: usize, cols: usize, disk: &Disk) -> Self {
        let mut mask = Self::empty(resolution, origin, rows, cols);
        let half_diag = resolution * std::f64::consts::FRAC_1_SQRT_2;
        for r in 0..rows {
            for c in 0..cols {
                let center = mask.cell_center(r, c);
                let d = center.distance(disk.center);
                let inside = if d <= disk.radius - half_diag {
                    true
                } else if d >= disk.radius + half_diag {
                    false
                } else {
                    disk_cell_coverage(disk, center, resolution) > 0.5
                };
                mask.cells[r * cols + c] = inside;
            }
        }
        mask
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[self.index(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        let i = self.index(row, col);
        self.cells[i] = v;
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&b| b)
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.resolution * self.resolution
    }

    pub fn same_frame(&self, other: &BinaryMask) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.resolution == other.resolution
            && self.origin == other.origin
    }

    /// Only the largest 4-connected component; ties keep the first in row-major order.
    pub fn largest_component(&self) -> BinaryMask {
        let labels = label_components(self.rows, self.cols, |i| self.cells[i]);
        let mut out = BinaryMask::empty(self.resolution, self.origin, self.rows, self.cols);
        if let Some(best) = labels.largest() {
            for (o, &l) in out.cells.iter_mut().zip(&labels.labels) {
                *o = l == best;
            }
        }
        out
    }
}

fn disk_cell_coverage(disk: &Disk, center: Vec2, res: f64) -> f64 {
    const N: usize = 16;
    let mut hits = 0;
    for i in 0..N {
        for j in 0..N {
            let p = Vec2::new(
                center.x + ((i as f64 + 0.5) / N as f64 - 0.5) * res,
                center.y + ((j as f64 + 0.5) / N as f64 - 0.5) * res,
            );
            if disk.contains(p) {
                hits += 1;
            }
        }
    }
    hits as f64 / (N * N) as f64
}

/// 4-connected component labelling. Label 0 is background; components are
/// numbered from 1 in row-major order of their first cell.
#[derive(Clone, Debug)]
pub struct Labels {
    pub labels: Vec<u32>,
    /// `sizes[k]` is the cell count of label `k + 1`.
    pub sizes: Vec<usize>,
}

impl Labels {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(usize, u32)> = None;
        for (k, &s) in self.sizes.iter().enumerate() {
            if best.is_none_or(|(bs, _)| s > bs) {
                best = Some((s, k as u32 + 1));
            }
        }
        best.map(|(_, l)| l)
    }
}

pub fn label_components(rows: usize, cols: usize, occupied: impl Fn(usize) -> bool) -> Labels {
    let mut labels = vec![0u32; rows * cols];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..rows * cols {
        if labels[start] != 0 || !occupied(start) {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (r, c) = (i / cols, i % cols);
            let mut visit = |j: usize| {
                if labels[j] == 0 && occupied(j) {
                    labels[j] = label;
                    stack.push(j);
                }
            };
            if r > 0 {
                visit(i - cols);
            }
            if r + 1 < rows {
                visit(i + cols);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < cols {
                visit(i + 1);
            }
        }
        sizes.push(size);
    }
    Labels { labels, sizes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_two_blobs_and_diagonal() {
        // Diagonal neighbours are separate under 4-connectivity.
        let grid = [
            1, 1, 0, 0, //
            0, 0, 1, 0, //
            0, 0, 0, 0, //
            1, 0, 0, 1,
        ];
        let l = label_components(4, 4, |i| grid[i] == 1);
        assert_eq!(l.count(), 4);
        assert_eq!(l.sizes, vec![2, 1, 1, 1]);
        assert_eq!(l.largest(), Some(1));
    }

    #[test]
    fn disk_raster_area_close_to_analytic() {
        let d = Disk::new(Vec2::ZERO, 0.028).unwrap();
        let m = BinaryMask::from_disk(0.001, Vec2::new(-0.05, -0.05), 100, 100, &d);
        let rel = (m.area() - d.area()).abs() / d.area();
        assert!(rel < 0.01, "{rel}");
    }

    #[test]
    fn largest_component_keeps_biggest() {
        let mut m = BinaryMask::empty(1.0, Vec2::ZERO, 3, 5);
        m.set(0, 0, true);
        for c in 2..5 {
            m.set(1, c, true);
        }
        let big = m.largest_component();
        assert_eq!(big.count(), 3);
        assert!(!big.get(0, 0));
    }
}
