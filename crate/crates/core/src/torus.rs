//! Uniform grids on the torus T^d = [-π, π]^d and small quadrature helpers.

use std::f64::consts::PI;

/// Uniform `M^d` grid with nodes `k_m = -π + 2πm/M` on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    pub dim: usize,
    pub size: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, size: usize) -> Self {
        TorusGrid { dim, size }
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    /// Volume element `(2π/M)^d` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.step().powi(self.dim as i32)
    }

    pub fn coordinate(&self, m: usize) -> f64 {
        -PI + self.step() * m as f64
    }

    /// Multi-index of the linear point index (first axis slowest).
    pub fn multi_index(&self, linear: usize) -> Vec<usize> {
        let mut rest = linear;
        let mut idx = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % self.size;
            rest /= self.size;
        }
        idx
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.size + i)
    }

    pub fn point(&self, linear: usize) -> Vec<f64> {
        self.multi_index(linear).into_iter().map(|m| self.coordinate(m)).collect()
    }

    /// Linear indices of the `3^d - 1` periodic neighbours.
    pub fn neighbours(&self, linear: usize) -> Vec<usize> {
        let idx = self.multi_index(linear);
        let mut out = Vec::with_capacity(3usize.pow(self.dim as u32) - 1);
        let total = 3usize.pow(self.dim as u32);
        for code in 0..total {
            let mut c = code;
            let mut shifted = idx.clone();
            let mut zero = true;
            for s in shifted.iter_mut() {
                let delta = c % 3;
                c /= 3;
                if delta != 1 {
                    zero = false;
                }
                *s = (*s + self.size + delta - 1) % self.size;
            }
            if !zero {
                out.push(self.linear(&shifted));
            }
        }
        out
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let j = j as f64;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
