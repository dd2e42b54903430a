use crate::concept::Label;
use crate::metric::Metric;

const GRID_MIN_POINTS: usize = 32;

/// Append-only memory of labelled points with exact nearest-neighbour
/// queries. Ties go to the earliest inserted point.
#[derive(Clone, Debug)]
pub struct History {
    dim: usize,
    metric: Metric,
    coords: Vec<f64>,
    labels: Vec<Label>,
    grid: Option<Grid>,
    accelerate: bool,
}

#[derive(Clone, Debug)]
struct Grid {
    lo: Vec<f64>,
    side: f64,
    cells_per_axis: Vec<i64>,
    strides: Vec<usize>,
    cells: Vec<Vec<u32>>,
    built_at: usize,
}

impl Grid {
    fn build(dim: usize, coords: &[f64]) -> Grid {
        let n = coords.len() / dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks_exact(dim) {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let ext: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
        let scale = ext.iter().cloned().fold(0.0, f64::max).max(1e-300);
        let floor = 1e-9 * scale;
        let vol: f64 = ext.iter().map(|e| e.max(floor)).product();
        let mut side = (vol / n as f64).powf(1.0 / dim as f64).max(floor);
        let limit = 4 * n + 16;
        let count =
            |side: f64| -> Vec<i64> { ext.iter().map(|e| (e / side).floor() as i64 + 1).collect() };
        let mut per = count(side);
        while per.iter().map(|&c| c as f64).product::<f64>() > limit as f64 {
            side *= 1.5;
            per = count(side);
        }
        let mut strides = vec![1usize; dim];
        for k in 1..dim {
            strides[k] = strides[k - 1] * per[k - 1] as usize;
        }
        let total = strides[dim - 1] * per[dim - 1] as usize;
        let mut g = Grid {
            lo,
            side,
            cells_per_axis: per,
            strides,
            cells: vec![Vec::new(); total],
            built_at: n,
        };
        for (i, p) in coords.chunks_exact(dim).enumerate() {
            let c = g.flat(&g.cell_of(p));
            g.cells[c].push(i as u32);
        }
        g
    }

    fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .zip(&self.lo)
            .map(|(x, l)| ((x - l) / self.side).floor() as i64)
            .collect()
    }

    fn in_range(&self, c: &[i64]) -> bool {
        c.iter()
            .zip(&self.cells_per_axis)
            .all(|(&ci, &n)| ci >= 0 && ci < n)
    }

    fn flat(&self, c: &[i64]) -> usize {
        c.iter()
            .zip(&self.strides)
            .map(|(&ci, &s)| ci as usize * s)
            .sum()
    }

    fn insert(&mut self, p: &[f64], index: usize) -> bool {
        let c = self.cell_of(p);
        if !self.in_range(&c) {
            return false;
        }
        let f = self.flat(&c);
        self.cells[f].push(index as u32);
        true
    }
}

impl History {
    /// Linear-scan history.
    pub fn new(dim: usize, metric: Metric) -> Self {
        History {
            dim,
            metric,
            coords: Vec::new(),
            labels: Vec::new(),
            grid: None,
            accelerate: false,
        }
    }

    /// History with the grid-bucketing accelerator enabled.
    pub fn accelerated(dim: usize, metric: Metric) -> Self {
        History {
            accelerate: true,
            ..History::new(dim, metric)
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn update(&mut self, x: &[f64], y: Label) {
        assert_eq!(x.len(), self.dim, "history dimension");
        let i = self.labels.len();
        self.coords.extend_from_slice(x);
        self.labels.push(y);
        if !self.accelerate {
            return;
        }
        let n = i + 1;
        let rebuild = match &mut self.grid {
            None => n >= GRID_MIN_POINTS,
            Some(g) => n >= 2 * g.built_at || !g.insert(x, i),
        };
        if rebuild {
            self.grid = Some(Grid::build(self.dim, &self.coords));
        }
    }

    /// Index of the nearest stored point (earliest on ties).
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        match &self.grid {
            Some(g) => self.nearest_grid(g, x),
            None => self.nearest_linear(x),
        }
    }

    pub fn nearest_linear(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in self.coords.chunks_exact(self.dim).enumerate() {
            let k = self.metric.dist_key(p, x);
            if best.is_none_or(|(bk, _)| k < bk) {
                best = Some((k, i));
            }
        }
        best.map(|(_, i)| i)
    }

    fn nearest_grid(&self, g: &Grid, x: &[f64]) -> Option<usize> {
        let d = self.dim;
        let c = g.cell_of(x);
        // Chebyshev cell distance from the query cell to the grid range
        let start = c
            .iter()
            .zip(&g.cells_per_axis)
            .map(|(&ci, &n)| {
                if ci < 0 {
                    -ci
                } else if ci >= n {
                    ci - n + 1
                } else {
                    0
                }
            })
            .max()
            .unwrap_or(0);
        let max_ring = c
            .iter()
            .zip(&g.cells_per_axis)
            .map(|(&ci, &n)| ci.max(n - 1 - ci))
            .max()
            .unwrap_or(0);
        let n = self.len();
        let mut best: Option<(f64, usize)> = None;
        let mut visited_cells = 0usize;
        let mut off = vec![0i64; d];
        let mut cell = vec![0i64; d];
        for k in start..=max_ring {
            // cells of ring k intersected with the grid range
            let lo: Vec<i64> = (0..d).map(|a| (c[a] - k).max(0)).collect();
            let hi: Vec<i64> = (0..d)
                .map(|a| (c[a] + k).min(g.cells_per_axis[a] - 1))
                .collect();
            if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                continue;
            }
            let boxed: f64 = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| (h - l + 1) as f64)
                .product();
            if boxed > (4 * n + 64) as f64 {
                return self.nearest_linear(x);
            }
            off.copy_from_slice(&lo);
            loop {
                let on_ring = (0..d).any(|a| (off[a] - c[a]).abs() == k);
                if on_ring {
                    cell.copy_from_slice(&off);
                    visited_cells += 1;
                    for &i in &g.cells[g.flat(&cell)] {
                        let i = i as usize;
                        let kk = self.metric.dist_key(self.point(i), x);
                        let better = match best {
                            None => true,
                            Some((bk, bi)) => kk < bk || (kk == bk && i < bi),
                        };
                        if better {
                            best = Some((kk, i));
                        }
                    }
                }
                // odometer increment
                let mut a = 0;
                loop {
                    if a == d {
                        break;
                    }
                    off[a] += 1;
                    if off[a] <= hi[a] {
                        break;
                    }
                    off[a] = lo[a];
                    a += 1;
                }
                if a == d {
                    break;
                }
            }
            if let Some((bk, _)) = best {
                // unvisited points lie at least k cells away along some axis
                let reach = (k as f64 - 1e-6) * g.side;
                if reach > 0.0 && bk < self.metric.key_of(reach) {
                    break;
                }
            }
            if visited_cells > 4 * n + 64 {
                return self.nearest_linear(x);
            }
        }
        best.map(|(_, i)| i)
    }

    /// Label of the nearest stored point, or `default` when empty.
    pub fn predict(&self, x: &[f64], default: Label) -> Label {
        match self.nearest(x) {
            Some(i) => self.labels[i],
            None => default,
        }
    }
}
