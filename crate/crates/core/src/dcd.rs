//! Density-aware Chamfer distance between a target cloud `S1` and a current
//! cloud `S2`, its per-point gradient with respect to `S2`, plain Chamfer
//! distance, and gradient-descent deformation of one cloud onto another.
//!
//! Nearest-neighbour assignments and hit counts are frozen within one
//! evaluation, so the gradient is exact away from assignment switches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Disk, Vec2, Vec3};
use crate::perception::PointCloud;
use crate::spatial::GridIndex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcdParams {
    /// Distance scale of the exponential kernel, 1/m.
    pub alpha: f64,
}

impl Default for DcdParams {
    fn default() -> Self {
        Self { alpha: 1000.0 }
    }
}

/// How the z coordinate of a discretized target is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HeightProfile {
    /// Flat layer holding this volume (m³) over the disk.
    VolumePreserving(f64),
    Constant(f64),
}

/// `n` points spread uniformly by area over the disk (sunflower spiral).
pub fn discretize_target(target: &Disk, n: usize, profile: HeightProfile) -> Result<PointCloud> {
    if n < 16 {
        return Err(Error::InvalidConfig(format!("target discretization needs at least 16 points, got {n}")));
    }
    let z = match profile {
        HeightProfile::VolumePreserving(v) => v / target.area(),
        HeightProfile::Constant(z) => z,
    };
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let points = (0..n)
        .map(|i| {
            let r = target.radius * ((i as f64 + 0.5) / n as f64).sqrt();
            (target.center + Vec2::from_angle(i as f64 * golden) * r).with_z(z)
        })
        .collect();
    Ok(PointCloud::new(points))
}

/// Source and target clouds for disk-to-disk deformation: two concentric
/// disks at the origin, each a flat layer holding `volume`.
pub fn disk_pair(source_radius: f64, target_radius: f64, volume: f64, n: usize) -> Result<(PointCloud, PointCloud)> {
    let profile = HeightProfile::VolumePreserving(volume);
    let src = discretize_target(&Disk::new(Vec2::ZERO, source_radius)?, n, profile)?;
    let tgt = discretize_target(&Disk::new(Vec2::ZERO, target_radius)?, n, profile)?;
    Ok((src, tgt))
}

fn to_array(p: &Vec3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Nearest neighbours in both directions plus hit counts.
struct Matching {
    /// For each x in S1: index of its nearest y in S2.
    nn_of_x: Vec<usize>,
    /// For each y in S2: index of its nearest x in S1.
    nn_of_y: Vec<usize>,
    /// Number of x whose nearest neighbour is y.
    hits_on_y: Vec<u32>,
    /// Number of y whose nearest neighbour is x.
    hits_on_x: Vec<u32>,
}

fn nearest_all(from: &[Vec3], index: &GridIndex<3>) -> Vec<usize> {
    from.iter().map(|p| index.nearest(to_array(p)).expect("non-empty index").0).collect()
}

fn matching(s1: &PointCloud, s2: &PointCloud) -> Result<Matching> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let i1 = GridIndex::build(s1.points.iter().map(to_array).collect());
    let i2 = GridIndex::build(s2.points.iter().map(to_array).collect());
    let nn_of_x = nearest_all(&s1.points, &i2);
    let nn_of_y = nearest_all(&s2.points, &i1);
    let mut hits_on_y = vec![0u32; s2.len()];
    for &j in &nn_of_x {
        hits_on_y[j] += 1;
    }
    let mut hits_on_x = vec![0u32; s1.len()];
    for &i in &nn_of_y {
        hits_on_x[i] += 1;
    }
    Ok(Matching { nn_of_x, nn_of_y, hits_on_y, hits_on_x })
}

pub fn dcd_loss(s1: &PointCloud, s2: &PointCloud, p: &DcdParams) -> Result<f64> {
    let m = matching(s1, s2)?;
    Ok(loss_from(s1, s2, p, &m))
}

fn loss_from(s1: &PointCloud, s2: &PointCloud, p: &DcdParams, m: &Matching) -> f64 {
    let mut a = 0.0;
    for (x, &j) in s1.points.iter().zip(&m.nn_of_x) {
        let d = x.distance(s2.points[j]);
        a += 1.0 - (-p.alpha * d).exp() / m.hits_on_y[j] as f64;
    }
    let mut b = 0.0;
    for (y, &i) in s2.points.iter().zip(&m.nn_of_y) {
        let d = y.distance(s1.points[i]);
        b += 1.0 - (-p.alpha * d).exp() / m.hits_on_x[i] as f64;
    }
    0.5 * (a / s1.len() as f64 + b / s2.len() as f64)
}

/// dL/dy for every y in S2.
pub fn dcd_gradient(s1: &PointCloud, s2: &PointCloud, p: &DcdParams) -> Result<Vec<Vec3>> {
    let m = matching(s1, s2)?;
    Ok(gradient_from(s1, s2, p, &m))
}

fn gradient_from(s1: &PointCloud, s2: &PointCloud, p: &DcdParams, m: &Matching) -> Vec<Vec3> {
    let mut grad = vec![Vec3::ZERO; s2.len()];
    let w1 = p.alpha / (2.0 * s1.len() as f64);
    let w2 = p.alpha / (2.0 * s2.len() as f64);
    // Each x pulls on the y it is matched to; summed in x order for determinism.
    for (x, &j) in s1.points.iter().zip(&m.nn_of_x) {
        let diff = s2.points[j] - *x;
        let d = diff.norm();
        if d > 0.0 {
            grad[j] += diff * (w1 * (-p.alpha * d).exp() / (m.hits_on_y[j] as f64 * d));
        }
    }
    for ((g, y), &i) in grad.iter_mut().zip(&s2.points).zip(&m.nn_of_y) {
        let diff = *y - s1.points[i];
        let d = diff.norm();
        if d > 0.0 {
            *g += diff * (w2 * (-p.alpha * d).exp() / (m.hits_on_x[i] as f64 * d));
        }
    }
    grad
}

/// Index of the largest gradient; ties keep the first.
pub fn max_grad_point(grads: &[Vec3]) -> usize {
    let mut best = 0;
    let mut best_norm = f64::NEG_INFINITY;
    for (i, g) in grads.iter().enumerate() {
        let n = g.norm_sq();
        if n > best_norm {
            best = i;
            best_norm = n;
        }
    }
    best
}

/// Symmetric mean squared nearest-neighbour distance.
pub fn chamfer(s1: &PointCloud, s2: &PointCloud) -> Result<f64> {
    let m = matching(s1, s2)?;
    let a: f64 = s1.points.iter().zip(&m.nn_of_x).map(|(x, &j)| (*x - s2.points[j]).norm_sq()).sum();
    let b: f64 = s2.points.iter().zip(&m.nn_of_y).map(|(y, &i)| (*y - s1.points[i]).norm_sq()).sum();
    Ok(0.5 * (a / s1.len() as f64 + b / s2.len() as f64))
}

/// Loss history of a gradient-descent deformation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdTrace {
    /// DCD loss before step 1, then after every step.
    pub dcd: Vec<f64>,
    /// Chamfer distance at the same instants.
    pub chamfer: Vec<f64>,
    pub final_cloud: PointCloud,
}

impl SgdTrace {
    /// CSV with header `step,dcd,chamfer`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,dcd,chamfer\n");
        for (k, (d, c)) in self.dcd.iter().zip(&self.chamfer).enumerate() {
            out.push_str(&format!("{k},{d},{c}\n"));
        }
        out
    }
}

/// Moves every source point along `-lr * dL/dy`, `steps` times, targeting `target`.
pub fn sgd_deform(source: &PointCloud, target: &PointCloud, steps: usize, lr: f64, p: &DcdParams) -> Result<SgdTrace> {
    if steps == 0 || !(lr > 0.0) {
        return Err(Error::InvalidConfig("sgd needs steps >= 1 and lr > 0".into()));
    }
    let mut cloud = source.clone();
    let mut dcd = Vec::with_capacity(steps + 1);
    let mut cham = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let m = matching(target, &cloud)?;
        dcd.push(loss_from(target, &cloud, p, &m));
        cham.push(chamfer(target, &cloud)?);
        if step == steps {
            break;
        }
        let grads = gradient_from(target, &cloud, p, &m);
        for (y, g) in cloud.points.iter_mut().zip(grads) {
            *y = *y - g * lr;
        }
    }
    Ok(SgdTrace { dcd, chamfer: cham, final_cloud: cloud })
}
