//! Conserved functionals and the comparison metrics between vorticity fields.
//!
//! All integrals are midpoint sums over cells with `dx = 2π r dr dz`. Sums
//! over a constant-r row are exactly rounded, so any permutation of values
//! within rows leaves the row totals bit-identical.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{weighted_row_sum, ScalarField, StreamSolver, VorticityField};
use crate::kernel::KernelEval;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantityRecord {
    pub l1: f64,
    pub l2: f64,
    pub strength: f64,
    pub impulse: f64,
    pub circulation: f64,
    pub energy: f64,
    pub z_moment: f64,
}

/// `∫ |ξ| dx`.
pub fn l1_norm(xi: &VorticityField) -> f64 {
    let g = xi.grid();
    weighted_row_sum(g, |i| g.cell_volume(i), |i, j| xi.get(i, j).abs())
}

/// `(∫ ξ² dx)^{1/2}`.
pub fn l2_norm(xi: &VorticityField) -> f64 {
    let g = xi.grid();
    weighted_row_sum(g, |i| g.cell_volume(i), |i, j| xi.get(i, j) * xi.get(i, j)).sqrt()
}

/// `∫ ξ dx`.
pub fn circulation(xi: &VorticityField) -> f64 {
    let g = xi.grid();
    weighted_row_sum(g, |i| g.cell_volume(i), |i, j| xi.get(i, j))
}

/// `½ ∫ r² ξ dx`.
pub fn impulse(xi: &VorticityField) -> f64 {
    let g = xi.grid();
    weighted_row_sum(
        g,
        |i| 0.5 * g.r(i) * g.r(i) * g.cell_volume(i),
        |i, j| xi.get(i, j),
    )
}

/// `∫ r² |ξ| dx`.
pub fn weighted_l1(xi: &VorticityField) -> f64 {
    let g = xi.grid();
    weighted_row_sum(
        g,
        |i| g.r(i) * g.r(i) * g.cell_volume(i),
        |i, j| xi.get(i, j).abs(),
    )
}

/// `∫ z r² ξ dx`.
pub fn z_moment(xi: &VorticityField) -> f64 {
    let g = xi.grid();
    weighted_row_sum(
        g,
        |i| g.r(i) * g.r(i) * g.cell_volume(i),
        |i, j| g.z(j) * xi.get(i, j),
    )
}

/// `∫ r ξ dx`.
pub fn radial_moment(xi: &VorticityField) -> f64 {
    let g = xi.grid();
    weighted_row_sum(g, |i| g.r(i) * g.cell_volume(i), |i, j| xi.get(i, j))
}

/// `½ ∫ ξ ψ dx`.
pub fn energy(xi: &VorticityField, psi: &ScalarField) -> Result<f64> {
    let g = xi.grid();
    g.check_same(psi.grid())?;
    Ok(0.5 * weighted_row_sum(g, |i| g.cell_volume(i), |i, j| xi.get(i, j) * psi.get(i, j)))
}

/// Impulse-weighted axial centroid `∫ z r² ξ / ∫ r² ξ`, or 0 for an empty field.
pub fn centroid_z(xi: &VorticityField) -> f64 {
    let w = 2.0 * impulse(xi);
    if w > 0.0 {
        z_moment(xi) / w
    } else {
        0.0
    }
}

/// `∫_{a < ξ < b} ξ dx`.
pub fn band_mass(xi: &VorticityField, a: f64, b: f64) -> f64 {
    let g = xi.grid();
    weighted_row_sum(
        g,
        |i| g.cell_volume(i),
        |i, j| {
            let v = xi.get(i, j);
            if v > a && v < b {
                v
            } else {
                0.0
            }
        },
    )
}

/// All conserved quantities; `psi` is solved for when omitted.
pub fn quantities(
    xi: &VorticityField,
    psi: Option<&ScalarField>,
    eval: &KernelEval,
) -> Result<QuantityRecord> {
    match psi {
        Some(psi) => quantities_with(xi, psi),
        None => {
            let psi = StreamSolver::new(xi.grid(), eval)?.solve(xi)?;
            quantities_with(xi, &psi)
        }
    }
}

pub fn quantities_with(xi: &VorticityField, psi: &ScalarField) -> Result<QuantityRecord> {
    Ok(QuantityRecord {
        l1: l1_norm(xi),
        l2: l2_norm(xi),
        strength: xi.values().iter().fold(0.0f64, |m, &v| m.max(v)),
        impulse: impulse(xi),
        circulation: circulation(xi),
        energy: energy(xi, psi)?,
        z_moment: z_moment(xi),
    })
}

/// Components of `‖ξ₁ - ξ₂‖_{L¹∩L²} + ‖r²(ξ₁ - ξ₂)‖_{L¹}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub l1: f64,
    pub l2: f64,
    pub w1: f64,
}

impl Distance {
    /// `l1 + l2 + w1`.
    pub fn combined(&self) -> f64 {
        self.l1 + self.l2 + self.w1
    }

    /// `∫ (1 + r²) |ξ₁ - ξ₂| dx`.
    pub fn weighted(&self) -> f64 {
        self.l1 + self.w1
    }
}

pub fn weighted_distance(xi1: &VorticityField, xi2: &VorticityField) -> Result<Distance> {
    let g = xi1.grid();
    g.check_same(xi2.grid())?;
    let (a, b) = (xi1.values(), xi2.values());
    let (mut l1, mut l2, mut w1) = (0.0, 0.0, 0.0);
    for i in 0..g.nr {
        let vol = g.cell_volume(i);
        let (mut s1, mut s2) = (0.0, 0.0);
        for k in i * g.nz..(i + 1) * g.nz {
            let d = (a[k] - b[k]).abs();
            s1 += d;
            s2 += d * d;
        }
        l1 += vol * s1;
        l2 += vol * s2;
        w1 += g.r(i) * g.r(i) * vol * s1;
    }
    Ok(Distance {
        l1,
        l2: l2.sqrt(),
        w1,
    })
}

/// Which combination of [`Distance`] components the orbital search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrbitalMetric {
    /// `l1 + l2 + w1`
    #[default]
    Combined,
    /// `l1 + w1`, the `(1 + r²)`-weighted L¹ distance
    Weighted,
}

impl OrbitalMetric {
    pub fn eval(&self, d: &Distance) -> f64 {
        match self {
            OrbitalMetric::Combined => d.combined(),
            OrbitalMetric::Weighted => d.weighted(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftScan {
    pub metric: OrbitalMetric,
    /// Shifts scanned; defaults to the full height of the grid either way.
    pub tau_range: Option<(f64, f64)>,
}

impl Default for ShiftScan {
    fn default() -> Self {
        ShiftScan {
            metric: OrbitalMetric::Combined,
            tau_range: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalDistance {
    pub tau_star: f64,
    pub value: f64,
}

/// `inf_τ metric(shift_z(ξ₁, τ), ξ₂)`.
///
/// Coarse scan over integer multiples of `hz` (ties go to the smallest τ),
/// then golden-section refinement on `[τ* - hz, τ* + hz]` down to `hz / 100`.
/// The refined point is only accepted if it beats the coarse minimum.
pub fn orbital_distance(
    xi1: &VorticityField,
    xi2: &VorticityField,
    scan: &ShiftScan,
) -> Result<OrbitalDistance> {
    let g = *xi1.grid();
    g.check_same(xi2.grid())?;
    let hz = g.hz();
    let height = g.z_max - g.z_min;
    let (lo, hi) = scan.tau_range.unwrap_or((-height, height));
    let k_lo = (lo / hz).ceil() as i64;
    let k_hi = (hi / hz).floor() as i64;
    let eval = |tau: f64| -> Result<f64> {
        let d = weighted_distance(&xi1.shift_z(tau), xi2)?;
        Ok(scan.metric.eval(&d))
    };
    let mut best = (0.0, f64::INFINITY);
    for k in k_lo..=k_hi.max(k_lo) {
        let tau = k as f64 * hz;
        let v = eval(tau)?;
        if v < best.1 {
            best = (tau, v);
        }
    }
    let (a, b) = (best.0 - hz, best.0 + hz);
    let refined = golden_section(a, b, hz / 100.0, &eval)?;
    if refined.1 < best.1 {
        best = refined;
    }
    Ok(OrbitalDistance {
        tau_star: best.0,
        value: best.1,
    })
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub(crate) fn golden_section<F>(mut a: f64, mut b: f64, tol: f64, f: &F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// `∫ r² |ξ₁ - ξ₂| dx + |∫ z r² ξ₁ dx - ∫ z r² ξ₂ dx|`.
pub fn wan_metric(xi1: &VorticityField, xi2: &VorticityField) -> Result<f64> {
    let d = weighted_distance(xi1, xi2)?;
    Ok(d.w1 + (z_moment(xi1) - z_moment(xi2)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AxiGrid;

    #[test]
    fn zero_field_quantities() {
        let g = AxiGrid::symmetric(8, 16, 2.0, 2.0).unwrap();
        let xi = VorticityField::zeros(g, 1.0).unwrap();
        let q = quantities(&xi, None, &KernelEval::default()).unwrap();
        assert_eq!(
            q,
            QuantityRecord {
                l1: 0.0,
                l2: 0.0,
                strength: 0.0,
                impulse: 0.0,
                circulation: 0.0,
                energy: 0.0,
                z_moment: 0.0
            }
        );
        assert_eq!(centroid_z(&xi), 0.0);
    }

    #[test]
    fn distance_grid_mismatch() {
        let g1 = AxiGrid::symmetric(8, 16, 2.0, 2.0).unwrap();
        let g2 = AxiGrid::symmetric(8, 16, 2.5, 2.0).unwrap();
        let a = VorticityField::zeros(g1, 1.0).unwrap();
        let b = VorticityField::zeros(g2, 1.0).unwrap();
        assert!(matches!(
            weighted_distance(&a, &b),
            Err(crate::Error::Shape(_))
        ));
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section(-1.0, 3.0, 1e-9, &|x: f64| Ok((x - 0.7) * (x - 0.7) + 2.0)).unwrap();
        assert!((x - 0.7).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }
}
