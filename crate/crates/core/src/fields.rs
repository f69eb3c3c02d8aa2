//! Gridded axisymmetric fields on the half-plane `{(r, z) : r > 0}` and the
//! stream-function machinery built on them.
//!
//! Nodes are cell centred: node `(i, j)` sits at `r_i = (i + ½) hr`,
//! `z_j = z_min + (j + ½) hz`, so no node lies on the symmetry axis. Values
//! are stored row-major with `i` (radius) as the slow index, which keeps each
//! constant-r row contiguous.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{FProfileTable, KernelEval, Profile};
use crate::sum::exact_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiGrid {
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl AxiGrid {
    pub fn new(nr: usize, nz: usize, r_max: f64, z_min: f64, z_max: f64) -> Result<Self> {
        if nr < 4 || nz < 4 {
            return Err(Error::Domain(format!(
                "grid needs at least 4x4 cells, got {nr}x{nz}"
            )));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::Domain(format!("r_max must be positive, got {r_max}")));
        }
        if !(z_max > z_min && z_min.is_finite() && z_max.is_finite()) {
            return Err(Error::Domain(format!(
                "need z_max > z_min, got [{z_min}, {z_max}]"
            )));
        }
        Ok(AxiGrid {
            nr,
            nz,
            r_max,
            z_min,
            z_max,
        })
    }

    /// Grid on `0 < r < r_max`, `|z| < z_half`.
    pub fn symmetric(nr: usize, nz: usize, r_max: f64, z_half: f64) -> Result<Self> {
        AxiGrid::new(nr, nz, r_max, -z_half, z_half)
    }

    #[inline]
    pub fn hr(&self) -> f64 {
        self.r_max / self.nr as f64
    }

    #[inline]
    pub fn hz(&self) -> f64 {
        (self.z_max - self.z_min) / self.nz as f64
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hr()
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        self.z_min + (j as f64 + 0.5) * self.hz()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of the ring swept by cell `i`: `2π r_i hr hz`.
    #[inline]
    pub fn cell_volume(&self, i: usize) -> f64 {
        2.0 * PI * self.r(i) * self.hr() * self.hz()
    }

    pub fn check_same(&self, other: &AxiGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grids differ: {}x{} on r<{}, z in [{}, {}] vs {}x{} on r<{}, z in [{}, {}]",
                self.nr,
                self.nz,
                self.r_max,
                self.z_min,
                self.z_max,
                other.nr,
                other.nz,
                other.r_max,
                other.z_min,
                other.z_max
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: AxiGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: AxiGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value at node ({}, {})",
                k / grid.nz,
                k % grid.nz
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: AxiGrid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(r, z)` at every node.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: AxiGrid, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nr {
            let r = grid.r(i);
            for j in 0..grid.nz {
                values.push(f(r, grid.z(j)));
            }
        }
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &AxiGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nz = self.grid.nz;
        &self.values[i * nz..(i + 1) * nz]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Resamples at `(r, z - tau)`, linear in z, zero outside the grid.
    pub fn shift_z(&self, tau: f64) -> ScalarField {
        shift_z(self, tau)
    }
}

/// Relative vorticity with the box constraint `0 ≤ ξ ≤ cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct VorticityField {
    field: ScalarField,
    cap: f64,
}

impl VorticityField {
    pub fn new(field: ScalarField, cap: f64) -> Result<Self> {
        if !(cap >= 0.0 && cap.is_finite()) {
            return Err(Error::InvalidField(format!(
                "strength cap must be finite and nonnegative, got {cap}"
            )));
        }
        let nz = field.grid.nz;
        if let Some(k) = field.values.iter().position(|&v| !(0.0..=cap).contains(&v)) {
            return Err(Error::InvalidField(format!(
                "value {} at node ({}, {}) outside [0, {cap}]",
                field.values[k],
                k / nz,
                k % nz
            )));
        }
        Ok(VorticityField { field, cap })
    }

    pub fn from_values(grid: AxiGrid, values: Vec<f64>, cap: f64) -> Result<Self> {
        VorticityField::new(ScalarField::new(grid, values)?, cap)
    }

    pub fn zeros(grid: AxiGrid, cap: f64) -> Result<Self> {
        VorticityField::new(ScalarField::zeros(grid), cap)
    }

    /// Builds a field from arbitrary node values, clamping into `[0, cap]`.
    pub(crate) fn clamped(grid: AxiGrid, mut values: Vec<f64>, cap: f64) -> Self {
        for v in values.iter_mut() {
            *v = v.clamp(0.0, cap);
        }
        VorticityField {
            field: ScalarField { grid, values },
            cap,
        }
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &AxiGrid {
        &self.field.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.field.values
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.field.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.field.row(i)
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    pub fn shift_z(&self, tau: f64) -> VorticityField {
        // convex combinations with zero stay inside [0, cap]
        VorticityField::clamped(self.field.grid, shift_z(&self.field, tau).values, self.cap)
    }

    /// Pointwise sum, capped at the larger of the two caps' sum.
    pub fn add(&self, other: &VorticityField) -> Result<VorticityField> {
        self.grid().check_same(other.grid())?;
        let values = self
            .values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| a + b)
            .collect();
        VorticityField::from_values(*self.grid(), values, self.cap + other.cap)
    }
}

/// Sample of the field at `(r, z - tau)`, linear in z with zero ghosts one
/// cell beyond each end.
pub fn shift_z(field: &ScalarField, tau: f64) -> ScalarField {
    let grid = field.grid;
    let nz = grid.nz as isize;
    let mut offset = tau / grid.hz();
    if (offset - offset.round()).abs() < 1e-9 {
        offset = offset.round();
    }
    let floor = offset.floor();
    let frac = offset - floor;
    let base = floor as isize;
    let at = |row: &[f64], k: isize| -> f64 {
        if k < 0 || k >= nz {
            0.0
        } else {
            row[k as usize]
        }
    };
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.nr {
        let row = field.row(i);
        let out = &mut values[i * grid.nz..(i + 1) * grid.nz];
        for (j, o) in out.iter_mut().enumerate() {
            // sample position j - offset = (j - base - 1) + (1 - frac)
            let k = j as isize - base;
            *o = if frac == 0.0 {
                at(row, k)
            } else {
                frac * at(row, k - 1) + (1.0 - frac) * at(row, k)
            };
        }
    }
    ScalarField { grid, values }
}

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫∫ ln sqrt(x² + y²)` over `[-a, a] × [-b, b]`.
pub fn rect_log_integral(a: f64, b: f64) -> f64 {
    2.0 * (a * b * (a * a + b * b).ln() - 3.0 * a * b
        + a * a * (b / a).atan()
        + b * b * (a / b).atan())
}

/// `∫_cell G(r_i, 0; r', z') r' dr' dz'` over the cell centred at `(r_i, 0)`.
///
/// The logarithmic singularity is removed analytically: with
/// `c(r') = sqrt(r_i r') r' / (2π)` and `ρ` the distance to the centre,
/// `c(r') F(s) + c(r_i) ln ρ` is bounded, is integrated by 8-point
/// Gauss-Legendre on each quadrant, and `c(r_i) ∫ ln ρ` is added back in
/// closed form.
fn self_cell<P: Profile + ?Sized>(prof: &P, r: f64, hr: f64, hz: f64) -> Result<f64> {
    let c = |rp: f64| (r * rp).sqrt() * rp / (2.0 * PI);
    let cr = c(r);
    let (a, b) = (0.5 * hr, 0.5 * hz);
    let nodes: Vec<(f64, f64)> = GL8_X
        .iter()
        .zip(GL8_W.iter())
        .flat_map(|(&x, &w)| [(-x, w), (x, w)])
        .collect();
    let mut total = 0.0;
    for sr in [-1.0, 1.0] {
        for sz in [-1.0, 1.0] {
            for &(xr, wr) in &nodes {
                let dr = sr * 0.5 * a * (1.0 + xr);
                let rp = r + dr;
                for &(xz, wz) in &nodes {
                    let dz = sz * 0.5 * b * (1.0 + xz);
                    let rho2 = dr * dr + dz * dz;
                    let f = c(rp) * prof.profile(rho2 / (r * rp))? + cr * 0.5 * rho2.ln();
                    total += wr * wz * f;
                }
            }
        }
    }
    // quadrant Jacobian (a/2)(b/2)
    Ok(0.25 * a * b * total - cr * rect_log_integral(a, b))
}

/// Direct-summation stream solver with a precomputed kernel table.
///
/// `G` depends on `z` only through `z - z'`, so on a uniform grid the weight
/// linking cell `(i2, j2)` to node `(i, j)` is `table[i][i2][|j - j2|]`. The
/// table stores `G · r' hr hz` off the diagonal and the integrated self-cell
/// value on it.
#[derive(Debug, Clone)]
pub struct StreamSolver {
    grid: AxiGrid,
    table: Vec<f64>,
}

impl StreamSolver {
    /// Uses the memoized profile when `eval.memo` is set, direct quadrature
    /// otherwise.
    pub fn new(grid: &AxiGrid, eval: &KernelEval) -> Result<Self> {
        if eval.memo {
            let table = FProfileTable::new(eval, 32)?;
            StreamSolver::with_profile(grid, &table)
        } else {
            StreamSolver::with_profile(grid, eval)
        }
    }

    pub fn with_profile<P: Profile + ?Sized>(grid: &AxiGrid, prof: &P) -> Result<Self> {
        let g = *grid;
        let (nr, nz) = (g.nr, g.nz);
        let (hr, hz) = (g.hr(), g.hz());
        let area = hr * hz;
        let mut table = vec![0.0; nr * nr * nz];
        table
            .par_chunks_mut(nr * nz)
            .enumerate()
            .try_for_each(|(i, block)| -> Result<()> {
                let r = g.r(i);
                for i2 in 0..nr {
                    let r2 = g.r(i2);
                    let rr = r * r2;
                    let pref = rr.sqrt() / (2.0 * PI) * r2 * area;
                    let dr2 = (r - r2) * (r - r2);
                    let out = &mut block[i2 * nz..(i2 + 1) * nz];
                    for (dj, o) in out.iter_mut().enumerate() {
                        if i2 == i && dj == 0 {
                            *o = self_cell(prof, r, hr, hz)?;
                        } else {
                            let dz = dj as f64 * hz;
                            *o = pref * prof.profile((dr2 + dz * dz) / rr)?;
                        }
                    }
                }
                Ok(())
            })?;
        Ok(StreamSolver { grid: g, table })
    }

    pub fn grid(&self) -> &AxiGrid {
        &self.grid
    }

    /// `ψ = 𝒢[ξ]`.
    pub fn solve(&self, xi: &VorticityField) -> Result<ScalarField> {
        self.grid.check_same(xi.grid())?;
        Ok(ScalarField {
            grid: self.grid,
            values: self.apply(xi.values()),
        })
    }

    /// Applies the discrete kernel to arbitrary node values (linear).
    pub fn apply(&self, src: &[f64]) -> Vec<f64> {
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        assert_eq!(src.len(), nr * nz, "source length must match the grid");
        let active: Vec<usize> = (0..nr)
            .filter(|&i2| src[i2 * nz..(i2 + 1) * nz].iter().any(|&v| v != 0.0))
            .collect();
        let mut out = vec![0.0; nr * nz];
        out.par_chunks_mut(nz).enumerate().for_each(|(i, acc)| {
            for &i2 in &active {
                let kern = &self.table[(i * nr + i2) * nz..(i * nr + i2 + 1) * nz];
                let row = &src[i2 * nz..(i2 + 1) * nz];
                for (j2, &q) in row.iter().enumerate() {
                    if q == 0.0 {
                        continue;
                    }
                    for (a, k) in acc[j2..].iter_mut().zip(&kern[..nz - j2]) {
                        *a += q * k;
                    }
                    for (a, k) in acc[..j2].iter_mut().zip(kern[1..=j2].iter().rev()) {
                        *a += q * k;
                    }
                }
            }
        });
        out
    }
}

/// One-off `ψ = 𝒢[ξ]`; builds the kernel table for `xi`'s grid.
pub fn stream_solve(xi: &VorticityField, eval: &KernelEval) -> Result<ScalarField> {
    StreamSolver::new(xi.grid(), eval)?.solve(xi)
}

/// `∂ψ/∂r` with even reflection across the axis and one-sided second-order
/// differences at the outer edges.
fn d_dr(psi: &ScalarField, i: usize, j: usize) -> f64 {
    let g = psi.grid;
    let h = g.hr();
    let n = g.nr;
    if i == 0 {
        (psi.get(1, j) - psi.get(0, j)) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * psi.get(i, j) - 4.0 * psi.get(i - 1, j) + psi.get(i - 2, j)) / (2.0 * h)
    } else {
        (psi.get(i + 1, j) - psi.get(i - 1, j)) / (2.0 * h)
    }
}

fn d_dz(psi: &ScalarField, i: usize, j: usize) -> f64 {
    let g = psi.grid;
    let h = g.hz();
    let n = g.nz;
    if j == 0 {
        (-3.0 * psi.get(i, 0) + 4.0 * psi.get(i, 1) - psi.get(i, 2)) / (2.0 * h)
    } else if j == n - 1 {
        (3.0 * psi.get(i, j) - 4.0 * psi.get(i, j - 1) + psi.get(i, j - 2)) / (2.0 * h)
    } else {
        (psi.get(i, j + 1) - psi.get(i, j - 1)) / (2.0 * h)
    }
}

/// `(u_r, u_z) = (-∂zψ / r, ∂rψ / r)` at the nodes.
pub fn velocity(psi: &ScalarField) -> (ScalarField, ScalarField) {
    let g = psi.grid;
    let mut ur = vec![0.0; g.len()];
    let mut uz = vec![0.0; g.len()];
    for i in 0..g.nr {
        let r = g.r(i);
        for j in 0..g.nz {
            let k = g.idx(i, j);
            ur[k] = -d_dz(psi, i, j) / r;
            uz[k] = d_dr(psi, i, j) / r;
        }
    }
    (
        ScalarField {
            grid: g,
            values: ur,
        },
        ScalarField {
            grid: g,
            values: uz,
        },
    )
}

/// `u_z` on the axis at height `z_j`: `2 η(0)` with `η = ψ / r²` extrapolated
/// quadratically from the first three radial nodes. `u_r` vanishes there.
pub fn axis_velocity(psi: &ScalarField, j: usize) -> f64 {
    let g = psi.grid;
    let eta = |i: usize| psi.get(i, j) / (g.r(i) * g.r(i));
    2.0 * (1.875 * eta(0) - 1.25 * eta(1) + 0.375 * eta(2))
}

/// Second-order `L = ∂²_r - (1/r) ∂_r + ∂²_z` in the conservative form
/// `r ∂_r((1/r) ∂_r)`, at an interior node.
fn l_h(psi: &ScalarField, i: usize, j: usize) -> f64 {
    let g = psi.grid;
    let (hr, hz) = (g.hr(), g.hz());
    let r = g.r(i);
    let rp = r + 0.5 * hr;
    let rm = r - 0.5 * hr;
    let c = psi.get(i, j);
    let radial = r * ((psi.get(i + 1, j) - c) / rp - (c - psi.get(i - 1, j)) / rm) / (hr * hr);
    let axial = (psi.get(i, j + 1) - 2.0 * c + psi.get(i, j - 1)) / (hz * hz);
    radial + axial
}

/// Largest `|-(1/r²) L_h ψ - ξ|` over interior nodes at least two cells away
/// from any jump of ξ.
///
/// A jump is a pair of adjacent nodes whose ξ values differ by more than a
/// tenth of the strength cap.
pub fn elliptic_residual(psi: &ScalarField, xi: &VorticityField) -> Result<f64> {
    let g = psi.grid;
    g.check_same(xi.grid())?;
    let (nr, nz) = (g.nr, g.nz);
    let jump = 0.1 * xi.cap().max(f64::MIN_POSITIVE);
    let mut near = vec![false; g.len()];
    for i in 0..nr {
        for j in 0..nz {
            let v = xi.get(i, j);
            let right = j + 1 < nz && (xi.get(i, j + 1) - v).abs() > jump;
            let up = i + 1 < nr && (xi.get(i + 1, j) - v).abs() > jump;
            if right || up {
                let (i1, j1) = (i + usize::from(up), j + usize::from(right));
                for a in i.saturating_sub(2)..=(i1 + 2).min(nr - 1) {
                    for b in j.saturating_sub(2)..=(j1 + 2).min(nz - 1) {
                        near[g.idx(a, b)] = true;
                    }
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 1..nr - 1 {
        let r2 = g.r(i) * g.r(i);
        for j in 1..nz - 1 {
            if near[g.idx(i, j)] {
                continue;
            }
            let res = (-l_h(psi, i, j) / r2 - xi.get(i, j)).abs();
            worst = worst.max(res);
        }
    }
    Ok(worst)
}

/// Row-wise exact sums of `f(i, j, value)` weighted by `weight(i)`, reduced in
/// row order.
pub(crate) fn weighted_row_sum<W, F>(grid: &AxiGrid, weight: W, f: F) -> f64
where
    W: Fn(usize) -> f64,
    F: Fn(usize, usize) -> f64,
{
    let mut total = 0.0;
    for i in 0..grid.nr {
        let w = weight(i);
        let row = exact_sum((0..grid.nz).map(|j| f(i, j)));
        total += w * row;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> AxiGrid {
        AxiGrid::symmetric(8, 16, 2.0, 2.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(AxiGrid::new(3, 8, 1.0, -1.0, 1.0).is_err());
        assert!(AxiGrid::new(8, 8, 0.0, -1.0, 1.0).is_err());
        assert!(AxiGrid::new(8, 8, 1.0, 1.0, 1.0).is_err());
        let g = grid();
        assert_eq!(g.r(0), 0.125);
        assert_eq!(g.z(0), -2.0 + 0.125);
        assert!(g.r(0) > 0.0);
    }

    #[test]
    fn vorticity_bounds_enforced() {
        let g = grid();
        let mut v = vec![0.0; g.len()];
        v[3] = 1.5;
        assert!(VorticityField::from_values(g, v.clone(), 1.0).is_err());
        assert!(VorticityField::from_values(g, v, 2.0).is_ok());
        let mut w = vec![0.0; g.len()];
        w[0] = -1e-3;
        assert!(VorticityField::from_values(g, w, 1.0).is_err());
        let mut nan = vec![0.0; g.len()];
        nan[1] = f64::NAN;
        assert!(ScalarField::new(g, nan).is_err());
    }

    #[test]
    fn shift_identity_and_integer() {
        let g = grid();
        let f = ScalarField::from_fn(g, |r, z| r + z * z).unwrap();
        assert_eq!(f.shift_z(0.0), f);
        let s = f.shift_z(3.0 * g.hz());
        for i in 0..g.nr {
            for j in 0..g.nz {
                let expect = if j >= 3 { f.get(i, j - 3) } else { 0.0 };
                assert_eq!(s.get(i, j), expect);
            }
        }
        let back = f.shift_z(-2.0 * g.hz());
        assert_eq!(back.get(1, 0), f.get(1, 2));
        assert_eq!(back.get(1, g.nz - 1), 0.0);
    }

    #[test]
    fn shift_half_cell_interpolates() {
        let g = grid();
        let f = ScalarField::from_fn(g, |_, z| z).unwrap();
        let s = f.shift_z(0.5 * g.hz());
        for j in 1..g.nz {
            assert!((s.get(2, j) - (g.z(j) - 0.5 * g.hz())).abs() < 1e-14);
        }
    }

    #[test]
    fn rect_log_matches_quadrature() {
        // reference from high-precision quadrature
        assert!((rect_log_integral(0.3, 0.7) - (-0.882_128_645_834_354)).abs() < 1e-14);
    }

    #[test]
    fn residual_zero_for_zero_fields() {
        let g = grid();
        let psi = ScalarField::zeros(g);
        let xi = VorticityField::zeros(g, 1.0).unwrap();
        assert_eq!(elliptic_residual(&psi, &xi).unwrap(), 0.0);
    }

    #[test]
    fn zero_vorticity_zero_stream() {
        let g = grid();
        let xi = VorticityField::zeros(g, 1.0).unwrap();
        let psi = stream_solve(&xi, &KernelEval::default()).unwrap();
        assert!(psi.values().iter().all(|&v| v == 0.0));
        let (ur, uz) = velocity(&psi);
        assert!(ur.values().iter().chain(uz.values()).all(|&v| v == 0.0));
    }
}
