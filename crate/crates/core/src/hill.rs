//! Hill's spherical vortex `ξ = λ 1_{|x - c e_z| < a}` in closed form.
//!
//! The unit vortex (λ = a = 1) has stream function
//! `ψ_H = ½ W r² (5/2 - 3/2 |x|²)` inside the ball and `½ W r² / |x|³` outside,
//! with speed `W = 2/15`. The general member follows from
//! `ψ_{H(λ,a)}(x) = λ a⁴ ψ_H(x / a)`, and all closed forms below are
//! evaluated in the rescaled variable `x / a`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{AxiGrid, VorticityField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillParams {
    pub lambda: f64,
    pub a: f64,
    #[serde(default)]
    pub c: f64,
}

impl HillParams {
    pub fn new(lambda: f64, a: f64, c: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {a}")));
        }
        if !c.is_finite() {
            return Err(Error::Domain(format!("center must be finite, got {c}")));
        }
        Ok(HillParams { lambda, a, c })
    }

    pub fn unit() -> Self {
        HillParams {
            lambda: 1.0,
            a: 1.0,
            c: 0.0,
        }
    }

    fn scaled(&self, r: f64, z: f64) -> (f64, f64) {
        (r / self.a, (z - self.c) / self.a)
    }
}

/// Conserved quantities of a Hill's vortex together with its speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillQuantities {
    pub strength: f64,
    pub circulation: f64,
    pub impulse: f64,
    pub energy: f64,
    pub speed: f64,
}

/// `W_H = 2/15`.
pub const UNIT_SPEED: f64 = 2.0 / 15.0;

/// Threshold `M₁ = (4/15) π ((4/3) π)^{-5/3}` of the scale-free combination
/// `μ ν^{-5/3} λ^{2/3}` at which Hill's vortex is the unique maximizer.
pub fn m1_threshold() -> f64 {
    4.0 / 15.0 * PI * (4.0 / 3.0 * PI).powf(-5.0 / 3.0)
}

/// The scale-free combination `μ ν^{-5/3} λ^{2/3}`.
pub fn scale_free_impulse(mu: f64, nu: f64, lambda: f64) -> f64 {
    mu * nu.powf(-5.0 / 3.0) * lambda.powf(2.0 / 3.0)
}

pub fn hill_vorticity(p: &HillParams, r: f64, z: f64) -> f64 {
    let (x, y) = p.scaled(r, z);
    if x * x + y * y < 1.0 {
        p.lambda
    } else {
        0.0
    }
}

/// Unit stream function `ψ_H(r, z)`.
fn unit_stream(r: f64, z: f64) -> f64 {
    let rho2 = r * r + z * z;
    if rho2 <= 1.0 {
        0.5 * UNIT_SPEED * r * r * (2.5 - 1.5 * rho2)
    } else {
        0.5 * UNIT_SPEED * r * r / (rho2 * rho2.sqrt())
    }
}

pub fn hill_stream(p: &HillParams, r: f64, z: f64) -> f64 {
    let (x, y) = p.scaled(r, z);
    p.lambda * p.a.powi(4) * unit_stream(x, y)
}

/// `(∂_r ψ, ∂_z ψ)` of the closed form.
pub fn hill_stream_gradient(p: &HillParams, r: f64, z: f64) -> (f64, f64) {
    let (x, y) = p.scaled(r, z);
    let rho2 = x * x + y * y;
    let w = UNIT_SPEED;
    let (dx, dy) = if rho2 <= 1.0 {
        // ½ W (5/2 x² - 3/2 x⁴ - 3/2 x² y²)
        (
            0.5 * w * (5.0 * x - 6.0 * x * x * x - 3.0 * x * y * y),
            0.5 * w * (-3.0 * x * x * y),
        )
    } else {
        // ½ W x² ρ^{-3}
        let rho = rho2.sqrt();
        let rho5 = rho2 * rho2 * rho;
        (
            0.5 * w * (2.0 * x / (rho2 * rho) - 3.0 * x * x * x / rho5),
            0.5 * w * (-3.0 * x * x * y / rho5),
        )
    };
    // chain rule: one factor 1/a from x = r/a
    let scale = p.lambda * p.a.powi(3);
    (scale * dx, scale * dy)
}

pub fn hill_speed(p: &HillParams) -> f64 {
    UNIT_SPEED * p.lambda * p.a * p.a
}

pub fn hill_quantities(p: &HillParams) -> HillQuantities {
    let (l, a) = (p.lambda, p.a);
    HillQuantities {
        strength: l,
        circulation: 4.0 / 3.0 * PI * l * a.powi(3),
        impulse: 4.0 / 15.0 * PI * l * a.powi(5),
        energy: 8.0 / 315.0 * PI * l * l * a.powi(7),
        speed: hill_speed(p),
    }
}

/// Radius of the Hill's vortex of strength `lambda` carrying impulse `mu`.
pub fn radius_from_impulse(mu: f64, lambda: f64) -> Result<f64> {
    if !(mu > 0.0 && lambda > 0.0) {
        return Err(Error::Domain(format!(
            "impulse and strength must be positive, got mu = {mu}, lambda = {lambda}"
        )));
    }
    Ok((15.0 * mu / (4.0 * PI * lambda)).powf(0.2))
}

/// `Ψ = ψ - ½ W r²` (flux constant zero).
pub fn adjusted_stream(p: &HillParams, r: f64, z: f64) -> f64 {
    let (x, y) = p.scaled(r, z);
    let rho2 = x * x + y * y;
    // computed in the scaled variables so the boundary value cancels exactly
    let unit = if rho2 <= 1.0 {
        0.5 * UNIT_SPEED * x * x * 1.5 * (1.0 - rho2)
    } else {
        0.5 * UNIT_SPEED * x * x * (1.0 / (rho2 * rho2.sqrt()) - 1.0)
    };
    p.lambda * p.a.powi(4) * unit
}

/// Hill's vortex sampled at the node centres.
pub fn hill_field_sampled(grid: &AxiGrid, p: &HillParams) -> VorticityField {
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.nr {
        for j in 0..grid.nz {
            values.push(hill_vorticity(p, grid.r(i), grid.z(j)));
        }
    }
    VorticityField::from_values(*grid, values, p.lambda).expect("hill values lie in [0, lambda]")
}

/// Hill's vortex averaged over each cell with the `r dr dz` weight, so that
/// the midpoint sums of circulation reproduce the exact cell masses.
pub fn hill_field_cell_average(grid: &AxiGrid, p: &HillParams) -> VorticityField {
    let (hr, hz) = (grid.hr(), grid.hz());
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.nr {
        let r0 = i as f64 * hr;
        let r1 = r0 + hr;
        let denom = 0.5 * (r1 * r1 - r0 * r0) * hz;
        for j in 0..grid.nz {
            let z0 = grid.z_min + j as f64 * hz;
            let mass = ball_cell_moment(p.a, p.c, r0, r1, z0, z0 + hz);
            values.push((p.lambda * mass / denom).clamp(0.0, p.lambda));
        }
    }
    VorticityField::from_values(*grid, values, p.lambda).expect("hill values lie in [0, lambda]")
}

/// `∫∫ r 1_{r² + (z-c)² < a²} dr dz` over `[r0, r1] × [z0, z1]`, exactly.
///
/// On each r-interval between breakpoints the covered z-length is
/// `α + β sqrt(a² - r²)` with β ∈ {0, 1, 2}, which integrates in closed form.
pub fn ball_cell_moment(a: f64, c: f64, r0: f64, r1: f64, z0: f64, z1: f64) -> f64 {
    let top = r1.min(a);
    if top <= r0 {
        return 0.0;
    }
    let mut breaks = vec![r0, top];
    for zz in [z0, z1] {
        let d = (zz - c).abs();
        if d < a {
            let rb = (a * a - d * d).sqrt();
            if rb > r0 && rb < top {
                breaks.push(rb);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let h = |r: f64| (a * a - r * r).max(0.0).sqrt();
    // antiderivatives of r and r sqrt(a² - r²)
    let lin = |r: f64| 0.5 * r * r;
    let cap = |r: f64| -(a * a - r * r).max(0.0).powf(1.5) / 3.0;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let hm = h(mid);
        // upper end: z1 or c + h(r); lower end: z0 or c - h(r)
        let (up_const, up_h) = if z1 <= c + hm { (z1, 0.0) } else { (c, 1.0) };
        let (lo_const, lo_h) = if z0 >= c - hm { (z0, 0.0) } else { (c, -1.0) };
        if up_const + up_h * hm <= lo_const + lo_h * hm {
            continue;
        }
        let alpha = up_const - lo_const;
        let beta = up_h - lo_h;
        total += alpha * (lin(hi) - lin(lo)) + beta * (cap(hi) - cap(lo));
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        let unit = HillParams::unit();
        assert_eq!(hill_vorticity(&unit, 0.5, 0.5), 1.0);
        assert_eq!(hill_vorticity(&unit, 1.0, 0.5), 0.0);
        // boundary excluded
        assert_eq!(hill_vorticity(&unit, 1.0, 0.0), 0.0);
        let p = HillParams::new(2.0, 0.5, 3.0).unwrap();
        assert_eq!(hill_vorticity(&p, 0.1, 3.1), 2.0);
    }

    #[test]
    fn params_validated() {
        assert!(HillParams::new(0.0, 1.0, 0.0).is_err());
        assert!(HillParams::new(1.0, -1.0, 0.0).is_err());
        assert!(HillParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn stream_values() {
        let unit = HillParams::unit();
        assert!((hill_stream(&unit, 1.0, 0.0) - 1.0 / 15.0).abs() < 1e-16);
        for z in [-3.0, 0.0, 0.4, 7.0] {
            assert_eq!(hill_stream(&unit, 0.0, z), 0.0);
        }
        let p = HillParams::new(1.0, 2.0, 0.0).unwrap();
        // 16 · ½ · (2/15) · (1/4) · (5/2 - 3/8) = 17/30 by hand
        assert!((hill_stream(&p, 1.0, 0.0) - 17.0 / 30.0).abs() < 1e-14);
        // continuity across the sphere
        let (inside, outside) = (
            hill_stream(&unit, 0.6, 0.8 - 1e-12),
            hill_stream(&unit, 0.6, 0.8 + 1e-12),
        );
        assert!((inside - outside).abs() < 1e-12);
    }

    #[test]
    fn speeds() {
        let s = |l, a| hill_speed(&HillParams::new(l, a, 0.0).unwrap());
        assert!((s(1.0, 1.0) - 2.0 / 15.0).abs() < 1e-16);
        assert!((s(1.0, 2.0) - 8.0 / 15.0).abs() < 1e-15);
        assert!((s(3.0, 1.0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn quantities_and_inverse_radius() {
        let q = hill_quantities(&HillParams::unit());
        assert!((q.circulation - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((q.impulse - 4.0 * PI / 15.0).abs() < 1e-15);
        assert!((q.energy - 8.0 * PI / 315.0).abs() < 1e-16);
        let q2 = hill_quantities(&HillParams::new(1.0, 2.0, 0.0).unwrap());
        assert!((q2.impulse - 4.0 / 15.0 * PI * 32.0).abs() < 1e-13);
        let tiny = hill_quantities(&HillParams::new(1e-12, 1.0, 0.0).unwrap());
        assert!(tiny.circulation < 1e-11 && tiny.energy < 1e-20);

        assert!((radius_from_impulse(4.0 * PI / 15.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((radius_from_impulse(4.0 / 15.0 * PI * 32.0, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((radius_from_impulse(4.0 * PI / 15.0, 32.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(radius_from_impulse(0.0, 1.0).is_err());
        assert!(radius_from_impulse(1.0, -2.0).is_err());
    }

    #[test]
    fn adjusted_stream_sign() {
        let unit = HillParams::unit();
        assert!(adjusted_stream(&unit, 0.5, 0.0) > 0.0);
        assert!(adjusted_stream(&unit, 2.0, 0.0) < 0.0);
        let (r, z) = (0.6, 0.8);
        assert!(adjusted_stream(&unit, r, z).abs() < 1e-14);
        // agrees with ψ - ½ W r² away from the boundary
        let p = HillParams::new(1.5, 0.7, -0.2).unwrap();
        for (r, z) in [(0.3, 0.1), (1.2, -0.5)] {
            let direct = hill_stream(&p, r, z) - 0.5 * hill_speed(&p) * r * r;
            assert!((adjusted_stream(&p, r, z) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn m1_identity() {
        let m = scale_free_impulse(4.0 * PI / 15.0, 4.0 * PI / 3.0, 1.0);
        assert!((m - m1_threshold()).abs() <= 4.0 * f64::EPSILON * m);
    }

    #[test]
    fn gradient_matches_differences() {
        let p = HillParams::new(1.3, 0.9, 0.2).unwrap();
        let h = 1e-6;
        for (r, z) in [(0.4, 0.3), (0.2, -0.5), (1.1, 0.9), (0.7, 1.6)] {
            let (gr, gz) = hill_stream_gradient(&p, r, z);
            let fr = (hill_stream(&p, r + h, z) - hill_stream(&p, r - h, z)) / (2.0 * h);
            let fz = (hill_stream(&p, r, z + h) - hill_stream(&p, r, z - h)) / (2.0 * h);
            assert!((gr - fr).abs() < 1e-8, "{gr} {fr}");
            assert!((gz - fz).abs() < 1e-8, "{gz} {fz}");
        }
    }

    #[test]
    fn cell_moment_matches_subsampling() {
        let (a, c) = (1.0, 0.1);
        for (r0, z0) in [(0.55, 0.7), (0.95, -0.3), (0.0, 0.95), (0.3, -1.0), (2.0, 0.0)] {
            let (r1, z1) = (r0 + 0.1, z0 + 0.13);
            let exact = ball_cell_moment(a, c, r0, r1, z0, z1);
            let n = 1200;
            let mut brute = 0.0;
            for p in 0..n {
                let r = r0 + (p as f64 + 0.5) * 0.1 / n as f64;
                for q in 0..n {
                    let z = z0 + (q as f64 + 0.5) * 0.13 / n as f64;
                    if r * r + (z - c) * (z - c) < a * a {
                        brute += r;
                    }
                }
            }
            brute *= 0.1 * 0.13 / (n * n) as f64;
            assert!((exact - brute).abs() < 2e-6, "{r0} {z0}: {exact} vs {brute}");
        }
    }
}
