//! Uniform Cartesian grid covering the disk, and second-order central
//! difference versions of the Cauchy–Riemann operators on it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Nodes `(i·Δ, j·Δ)` for `i, j ∈ [-half, half]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    spacing: f64,
    half: usize,
}

impl CartesianGrid {
    /// Smallest symmetric grid of the given spacing whose nodes reach `extent`.
    pub fn covering(spacing: f64, extent: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(extent > 0.0) {
            return Err(Error::Config(format!(
                "grid spacing and extent must be positive (spacing {spacing}, extent {extent})"
            )));
        }
        let half = (extent / spacing - 1e-9).ceil() as usize;
        Ok(CartesianGrid { spacing, half })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn side(&self) -> usize {
        2 * self.half + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.side() + ix
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.side(), idx / self.side())
    }

    pub fn node(&self, idx: usize) -> Point {
        let (ix, iy) = self.coords(idx);
        self.node_at(ix, iy)
    }

    pub fn node_at(&self, ix: usize, iy: usize) -> Point {
        let h = self.half as f64;
        Point::new((ix as f64 - h) * self.spacing, (iy as f64 - h) * self.spacing)
    }

    /// Mask of nodes with `|z| <= radius`.
    pub fn disk_mask(&self, radius: f64) -> Vec<bool> {
        (0..self.len()).map(|i| self.node(i).norm() <= radius).collect()
    }

    /// Lower-left cell corner and fractional offsets for bilinear interpolation.
    pub fn locate(&self, x: Point) -> Option<(usize, usize, f64, f64)> {
        let h = self.half as f64;
        let gx = x.x / self.spacing + h;
        let gy = x.y / self.spacing + h;
        let max = (self.side() - 1) as f64;
        if !(gx >= 0.0 && gy >= 0.0 && gx <= max && gy <= max) {
            return None;
        }
        let ix = (gx.floor() as usize).min(self.side() - 2);
        let iy = (gy.floor() as usize).min(self.side() - 2);
        Some((ix, iy, gx - ix as f64, gy - iy as f64))
    }

    /// Neighbor indices `(east, west, north, south)` when all exist.
    pub fn neighbors(&self, idx: usize) -> Option<[usize; 4]> {
        let (ix, iy) = self.coords(idx);
        let last = self.side() - 1;
        if ix == 0 || iy == 0 || ix == last || iy == last {
            return None;
        }
        Some([idx + 1, idx - 1, idx + self.side(), idx - self.side()])
    }
}

/// Complex field sampled on a grid with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: CartesianGrid,
    pub values: Vec<Complex64>,
    pub valid: Vec<bool>,
}

impl GridField {
    pub fn new(grid: CartesianGrid, values: Vec<Complex64>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || valid.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid has {} nodes but field has {} values and {} mask entries",
                grid.len(),
                values.len(),
                valid.len()
            )));
        }
        Ok(GridField { grid, values, valid })
    }

    pub fn zeros(grid: CartesianGrid) -> Self {
        GridField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            valid: vec![true; grid.len()],
        }
    }

    /// Central-difference `∂ = (∂x − i∂y)/2` and `∂̄ = (∂x + i∂y)/2`; valid
    /// only where the four neighbors are valid.
    pub fn cauchy_riemann(&self) -> (GridField, GridField) {
        let g = self.grid;
        let inv = 1.0 / (2.0 * g.spacing());
        let mut d = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut db = d.clone();
        let mut ok = vec![false; g.len()];
        for idx in 0..g.len() {
            if !self.valid[idx] {
                continue;
            }
            let Some([e, w, n, s]) = g.neighbors(idx) else { continue };
            if !(self.valid[e] && self.valid[w] && self.valid[n] && self.valid[s]) {
                continue;
            }
            let dx = (self.values[e] - self.values[w]) * inv;
            let dy = (self.values[n] - self.values[s]) * inv;
            d[idx] = (dx - Complex64::i() * dy) * 0.5;
            db[idx] = (dx + Complex64::i() * dy) * 0.5;
            ok[idx] = true;
        }
        (
            GridField { grid: g, values: d, valid: ok.clone() },
            GridField { grid: g, values: db, valid: ok },
        )
    }

    /// Fourth-order central `(∂, ∂̄)`; valid where both neighbors on each
    /// axis at distance one and two are valid.
    pub fn cauchy_riemann4(&self) -> (GridField, GridField) {
        let g = self.grid;
        let side = g.side();
        let inv = 1.0 / (12.0 * g.spacing());
        let mut d = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut db = d.clone();
        let mut ok = vec![false; g.len()];
        for idx in 0..g.len() {
            let (ix, iy) = g.coords(idx);
            if !self.valid[idx] || ix < 2 || iy < 2 || ix + 2 >= side || iy + 2 >= side {
                continue;
            }
            let at = |jx: usize, jy: usize| g.index(jx, jy);
            let xs = [at(ix - 2, iy), at(ix - 1, iy), at(ix + 1, iy), at(ix + 2, iy)];
            let ys = [at(ix, iy - 2), at(ix, iy - 1), at(ix, iy + 1), at(ix, iy + 2)];
            if !xs.iter().chain(&ys).all(|&k| self.valid[k]) {
                continue;
            }
            let v = &self.values;
            let dx = (v[xs[0]] - v[xs[1]] * 8.0 + v[xs[2]] * 8.0 - v[xs[3]]) * inv;
            let dy = (v[ys[0]] - v[ys[1]] * 8.0 + v[ys[2]] * 8.0 - v[ys[3]]) * inv;
            d[idx] = (dx - Complex64::i() * dy) * 0.5;
            db[idx] = (dx + Complex64::i() * dy) * 0.5;
            ok[idx] = true;
        }
        (
            GridField { grid: g, values: d, valid: ok.clone() },
            GridField { grid: g, values: db, valid: ok },
        )
    }

    /// `∂² = (∂xx − ∂yy − 2i∂xy)/4` by second-order central differences.
    pub fn dz_dz(&self) -> GridField {
        let g = self.grid;
        let side = g.side();
        let h2 = g.spacing() * g.spacing();
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut ok = vec![false; g.len()];
        for idx in 0..g.len() {
            let (ix, iy) = g.coords(idx);
            if !self.valid[idx] || ix < 1 || iy < 1 || ix + 1 >= side || iy + 1 >= side {
                continue;
            }
            let at = |dx: isize, dy: isize| g.index((ix as isize + dx) as usize, (iy as isize + dy) as usize);
            let st = [at(1, 0), at(-1, 0), at(0, 1), at(0, -1), at(1, 1), at(-1, -1), at(1, -1), at(-1, 1)];
            if !st.iter().all(|&k| self.valid[k]) {
                continue;
            }
            let v = &self.values;
            let c = v[idx] * 2.0;
            let dxx = (v[st[0]] + v[st[1]] - c) / h2;
            let dyy = (v[st[2]] + v[st[3]] - c) / h2;
            let dxy = (v[st[4]] + v[st[5]] - v[st[6]] - v[st[7]]) / (4.0 * h2);
            out[idx] = (dxx - dyy - Complex64::i() * dxy * 2.0) * 0.25;
            ok[idx] = true;
        }
        GridField { grid: g, values: out, valid: ok }
    }

    /// Five-point `∂∂̄ = Δ/4`.
    pub fn dz_dzbar(&self) -> GridField {
        let g = self.grid;
        let inv = 1.0 / (4.0 * g.spacing() * g.spacing());
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut ok = vec![false; g.len()];
        for idx in 0..g.len() {
            if !self.valid[idx] {
                continue;
            }
            let Some(nb) = g.neighbors(idx) else { continue };
            if !nb.iter().all(|&k| self.valid[k]) {
                continue;
            }
            let lap: Complex64 = nb.iter().map(|&k| self.values[k]).sum::<Complex64>() - self.values[idx] * 4.0;
            out[idx] = lap * inv;
            ok[idx] = true;
        }
        GridField { grid: g, values: out, valid: ok }
    }

    /// Bilinear interpolation; `None` when a cell corner is invalid or the
    /// point is off the grid.
    pub fn interpolate(&self, x: Point) -> Option<Complex64> {
        let (ix, iy, fx, fy) = self.grid.locate(x)?;
        let g = self.grid;
        let i00 = g.index(ix, iy);
        let i10 = g.index(ix + 1, iy);
        let i01 = g.index(ix, iy + 1);
        let i11 = g.index(ix + 1, iy + 1);
        if ![i00, i10, i01, i11].iter().all(|&k| self.valid[k]) {
            return None;
        }
        Some(
            self.values[i00] * ((1.0 - fx) * (1.0 - fy))
                + self.values[i10] * (fx * (1.0 - fy))
                + self.values[i01] * ((1.0 - fx) * fy)
                + self.values[i11] * (fx * fy),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }
}
