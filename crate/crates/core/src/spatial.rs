//! Exact nearest-neighbour queries over a uniform bucket grid.
//!
//! Results are ordered by `(squared distance, point index)`, so ties resolve to
//! the smaller index regardless of bucket layout.

#[derive(Clone, Debug)]
pub struct GridIndex<const D: usize> {
    points: Vec<[f64; D]>,
    min: [f64; D],
    cell: f64,
    dims: [usize; D],
    /// Bucket `b` holds `items[starts[b]..starts[b + 1]]`.
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl<const D: usize> GridIndex<D> {
    pub fn build(points: Vec<[f64; D]>) -> Self {
        let n = points.len().max(1);
        let mut min = [f64::INFINITY; D];
        let mut max = [f64::NEG_INFINITY; D];
        for p in &points {
            for a in 0..D {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        if points.is_empty() {
            min = [0.0; D];
            max = [0.0; D];
        }
        // Size buckets from the first two axes; the clouds here are thin in z.
        let spread = (0..D.min(2)).map(|a| max[a] - min[a]).filter(|e| *e > 0.0).collect::<Vec<_>>();
        let cell = match spread.len() {
            0 => 1.0,
            1 => spread[0] / n as f64 * 2.0,
            _ => (spread[0] * spread[1] / n as f64 * 2.0).sqrt(),
        }
        .max(1e-12);
        let mut dims = [1usize; D];
        for a in 0..D {
            dims[a] = (((max[a] - min[a]) / cell).floor() as usize + 1).min(1 << 16);
        }
        let total: usize = dims.iter().product();
        let mut index = Self { points, min, cell, dims, starts: vec![0; total + 1], items: Vec::new() };
        let buckets: Vec<usize> = index.points.iter().map(|p| index.bucket_of(&index.coords(p))).collect();
        for &b in &buckets {
            index.starts[b + 1] += 1;
        }
        for b in 0..total {
            index.starts[b + 1] += index.starts[b];
        }
        let mut fill = index.starts.clone();
        index.items = vec![0; index.points.len()];
        for (i, &b) in buckets.iter().enumerate() {
            index.items[fill[b]] = i;
            fill[b] += 1;
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> [f64; D] {
        self.points[i]
    }

    fn coords(&self, p: &[f64; D]) -> [usize; D] {
        let mut c = [0usize; D];
        for a in 0..D {
            let f = ((p[a] - self.min[a]) / self.cell).floor();
            c[a] = if f.is_nan() || f < 0.0 { 0 } else { (f as usize).min(self.dims[a] - 1) };
        }
        c
    }

    fn bucket_of(&self, c: &[usize; D]) -> usize {
        let mut b = 0;
        for a in (0..D).rev() {
            b = b * self.dims[a] + c[a];
        }
        b
    }

    pub fn nearest(&self, q: [f64; D]) -> Option<(usize, f64)> {
        self.k_nearest(q, 1).into_iter().next()
    }

    /// Up to `k` nearest points as `(index, squared distance)`.
    pub fn k_nearest(&self, q: [f64; D], k: usize) -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k == 0 || self.points.is_empty() {
            return best;
        }
        let center = self.coords(&q);
        let max_ring = *self.dims.iter().max().unwrap();
        for ring in 0..=max_ring {
            self.visit_shell(&center, ring, |b| {
                for &i in &self.items[self.starts[b]..self.starts[b + 1]] {
                    let p = &self.points[i];
                    let d2: f64 = (0..D).map(|a| (p[a] - q[a]) * (p[a] - q[a])).sum();
                    insert_sorted(&mut best, k, (i, d2));
                }
            });
            if best.len() == k {
                let bound = ring as f64 * self.cell;
                if best[k - 1].1 < bound * bound {
                    break;
                }
            }
        }
        best
    }

    /// Calls `f` for each bucket at Chebyshev distance exactly `ring` from `center`.
    fn visit_shell(&self, center: &[usize; D], ring: usize, mut f: impl FnMut(usize)) {
        let r = ring as i64;
        let mut lo = [0i64; D];
        let mut hi = [0i64; D];
        for a in 0..D {
            lo[a] = (center[a] as i64 - r).max(0);
            hi[a] = (center[a] as i64 + r).min(self.dims[a] as i64 - 1);
        }
        let mut cur = lo;
        loop {
            let on_shell = (0..D).any(|a| (cur[a] - center[a] as i64).abs() == r);
            if on_shell {
                let mut c = [0usize; D];
                for a in 0..D {
                    c[a] = cur[a] as usize;
                }
                f(self.bucket_of(&c));
            }
            let mut a = 0;
            loop {
                if a == D {
                    return;
                }
                if cur[a] < hi[a] {
                    cur[a] += 1;
                    break;
                }
                cur[a] = lo[a];
                a += 1;
            }
        }
    }
}

fn insert_sorted(best: &mut Vec<(usize, f64)>, k: usize, cand: (usize, f64)) {
    let before = |a: &(usize, f64), b: &(usize, f64)| a.1 < b.1 || (a.1 == b.1 && a.0 < b.0);
    if best.len() == k && !before(&cand, &best[k - 1]) {
        return;
    }
    let pos = best.iter().position(|e| before(&cand, e)).unwrap_or(best.len());
    best.insert(pos, cand);
    best.truncate(k);
}
