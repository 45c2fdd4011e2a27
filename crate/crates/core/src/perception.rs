//! Top-down measurements of the dough: mask, outline, point cloud, IoU,
//! centroids and highest point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{outer_contour, BinaryMask, Contour, Disk, Vec2, Vec3};
use crate::sim::HeightMap;
use crate::spatial::GridIndex;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    /// Footprint of each point when sampled from a grid, m².
    pub cell_area: Option<f64>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points, cell_area: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_z(&self) -> Option<f64> {
        self.points.iter().map(|p| p.z).reduce(f64::max)
    }
}

/// Everything the planner needs from one look at the dough.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeState {
    pub mask: BinaryMask,
    /// Outer boundary of the largest component, counterclockwise.
    pub contour: Contour,
    pub cloud: PointCloud,
    pub iou: f64,
    pub max_height: f64,
}

pub fn capture(hm: &HeightMap, target: &Disk, eps: f64) -> Result<ShapeState> {
    let mask = hm.mask(eps);
    let contour = outer_contour(&mask).ok_or(Error::EmptyDough)?;
    let cloud = point_cloud(hm, eps);
    let iou = iou(&mask, target)?;
    Ok(ShapeState { mask, contour, cloud, iou, max_height: hm.max_height() })
}

/// Cell centers above `eps` with z set to the cell height.
pub fn point_cloud(hm: &HeightMap, eps: f64) -> PointCloud {
    let points = hm
        .heights
        .iter()
        .enumerate()
        .filter(|(_, &h)| h > eps)
        .map(|(i, &h)| hm.center_of_index(i).with_z(h))
        .collect();
    PointCloud { points, cell_area: Some(hm.cell_area()) }
}

/// Raster IoU against the disk rasterized in the mask's own frame.
pub fn iou(mask: &BinaryMask, target: &Disk) -> Result<f64> {
    let t = BinaryMask::from_disk(mask.resolution, mask.origin, mask.rows, mask.cols, target);
    mask_iou(mask, &t)
}

/// IoU of two masks on the same grid.
pub fn mask_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    assert!(a.same_frame(b), "masks must share a grid");
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.cells.iter().zip(&b.cells) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        return Err(Error::ZeroUnion);
    }
    Ok(inter as f64 / union as f64)
}

/// Mean of occupied cell centers.
pub fn centroid_2d(mask: &BinaryMask) -> Result<Vec2> {
    let mut sum = Vec2::ZERO;
    let mut n = 0usize;
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            if mask.get(r, c) {
                sum += mask.cell_center(r, c);
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyDough);
    }
    Ok(sum * (1.0 / n as f64))
}

/// Mean z of the `k` cloud points nearest to `xy` in the plane.
pub fn knn_z(cloud: &PointCloud, xy: Vec2, k: usize) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let index = GridIndex::build(cloud.points.iter().map(|p| [p.x, p.y]).collect());
    let hits = index.k_nearest([xy.x, xy.y], k.max(1));
    Ok(hits.iter().map(|&(i, _)| cloud.points[i].z).sum::<f64>() / hits.len() as f64)
}

/// Center of mass of the dough columns at constant density.
pub fn centroid_3d(hm: &HeightMap) -> Result<Vec3> {
    let (mut mass, mut mx, mut my, mut mz) = (0.0, 0.0, 0.0, 0.0);
    for (i, &h) in hm.heights.iter().enumerate() {
        if h > 0.0 {
            let p = hm.center_of_index(i);
            mass += h;
            mx += h * p.x;
            my += h * p.y;
            mz += 0.5 * h * h;
        }
    }
    if mass <= 0.0 {
        return Err(Error::EmptyDough);
    }
    Ok(Vec3::new(mx / mass, my / mass, mz / mass))
}

/// Tallest cell; ties go to the first cell in row-major order.
pub fn highest_point(hm: &HeightMap) -> Result<Vec3> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &h) in hm.heights.iter().enumerate() {
        if h > 0.0 && best.is_none_or(|(_, bh)| h > bh) {
            best = Some((i, h));
        }
    }
    let (i, h) = best.ok_or(Error::EmptyDough)?;
    Ok(hm.center_of_index(i).with_z(h))
}
