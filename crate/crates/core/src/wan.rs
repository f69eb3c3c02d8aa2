//! The translation-sensitive metric
//! `d(ξ₁, ξ₂) = ∫ r² |ξ₁ - ξ₂| dx + |∫ z r² ξ₁ dx - ∫ z r² ξ₂ dx|`
//! evaluated in closed form between the exact travelling Hill's vortex
//! `ξ_{H(1,a)}(x - t W̃ e_z)` and translates of the unit Hill's vortex.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::golden_section;
use crate::hill::{hill_speed, HillParams};
use crate::sum::ls_slope;

/// `∫ r² dx` over a ball of radius `a`: `(8π/15) a⁵`.
pub fn ball_r2_mass(a: f64) -> f64 {
    8.0 * PI / 15.0 * a.powi(5)
}

/// `∫_{z_lo}^{z_hi} (π/2)(R² - (z - c)²)² dz`, the `r²`-mass of the slab of a
/// ball of radius `R` centred at `c` (each disc contributes `π ρ⁴ / 2`).
fn slab_r2_mass(big_r: f64, c: f64, z_lo: f64, z_hi: f64) -> f64 {
    let r2 = big_r * big_r;
    let anti = |u: f64| r2 * r2 * u - 2.0 / 3.0 * r2 * u.powi(3) + u.powi(5) / 5.0;
    0.5 * PI * (anti(z_hi - c) - anti(z_lo - c))
}

/// `∫ r² dx` over the intersection of the balls `B(c1 e_z, a1)` and
/// `B(c2 e_z, a2)`.
pub fn lens_r2_mass(a1: f64, c1: f64, a2: f64, c2: f64) -> f64 {
    let lo = (c1 - a1).max(c2 - a2);
    let hi = (c1 + a1).min(c2 + a2);
    if hi <= lo {
        return 0.0;
    }
    // slice radii² a_k² - (z - c_k)² are equal on one plane when c1 ≠ c2
    let smaller_on = |z_lo: f64, z_hi: f64| -> f64 {
        let m = 0.5 * (z_lo + z_hi);
        let (s1, s2) = (a1 * a1 - (m - c1).powi(2), a2 * a2 - (m - c2).powi(2));
        if s1 <= s2 {
            slab_r2_mass(a1, c1, z_lo, z_hi)
        } else {
            slab_r2_mass(a2, c2, z_lo, z_hi)
        }
    };
    if c1 == c2 {
        return smaller_on(lo, hi);
    }
    let z_star = (a2 * a2 - a1 * a1 + c1 * c1 - c2 * c2) / (2.0 * (c1 - c2));
    if z_star <= lo || z_star >= hi {
        smaller_on(lo, hi)
    } else {
        smaller_on(lo, z_star) + smaller_on(z_star, hi)
    }
}

/// `∫ r² |1_{B(c1, a1)} - 1_{B(c2, a2)}| dx`.
pub fn ball_w1(a1: f64, c1: f64, a2: f64, c2: f64) -> f64 {
    (ball_r2_mass(a1) + ball_r2_mass(a2) - 2.0 * lens_r2_mass(a1, c1, a2, c2)).max(0.0)
}

/// The metric between `λ = 1` Hill's vortices of radii `a1`, `a2` centred at
/// `c1`, `c2`.
pub fn wan_distance_balls(a1: f64, c1: f64, a2: f64, c2: f64) -> f64 {
    ball_w1(a1, c1, a2, c2) + (c1 * ball_r2_mass(a1) - c2 * ball_r2_mass(a2)).abs()
}

/// Minimizes `f` over `[lo, hi]` by a uniform scan, refinement around the
/// best sample, and the supplied candidate points.
fn minimize_1d<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, candidates: &[f64]) -> (f64, f64) {
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let mut best = (lo, f(lo));
    for k in 1..=n {
        let x = lo + k as f64 * h;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let wrapped = |x: f64| -> Result<f64> { Ok(f(x)) };
    if let Ok(refined) = golden_section(best.0 - h, best.0 + h, 1e-12 * (1.0 + best.0.abs()), &wrapped) {
        if refined.1 < best.1 {
            best = refined;
        }
    }
    for &x in candidates {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WanSample {
    pub t: f64,
    /// Centre of the travelling vortex, `t W̃`.
    pub center: f64,
    pub wan_infimum: f64,
    pub wan_tau: f64,
    /// Closed-form value of the infimum where it is known, else `None`.
    pub wan_closed_form: Option<f64>,
    /// `inf_τ ∫ r² |ξ(t) - ξ_H(· - τ e_z)| dx`.
    pub orbital: f64,
    pub orbital_tau: f64,
    /// Metric against the unit vortex travelling at its own speed.
    pub wan_comoving: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WanReport {
    pub a: f64,
    pub speed: f64,
    pub samples: Vec<WanSample>,
    /// Least-squares slope of the computed infimum against `t`.
    pub fitted_slope: f64,
    /// Least-squares slope of the closed-form infimum at the same times.
    pub closed_form_slope: Option<f64>,
    /// `(8π/15) |a⁵ W̃ - W_H|`, the growth rate against the co-moving unit vortex.
    pub comoving_slope: f64,
    /// `(8π/15)(a⁵ + 1)`, the value the infimum settles at once the cores separate.
    pub saturation: f64,
    /// `(8π/15) |a⁵ - 1|`
    pub orbital_closed_form: f64,
    /// `max_t |orbital(t) / orbital(0) - 1|`
    pub orbital_relative_spread: f64,
}

/// Closed-form infimum at the two regimes where it is elementary: at `t = 0`
/// both terms are minimized by `τ = 0`; once `|c (a⁵ - 1)| ≥ 1 + a` the
/// moment term vanishes at `τ = a⁵ c` with disjoint cores.
pub fn wan_infimum_closed_form(a: f64, center: f64) -> Option<f64> {
    let m = 8.0 * PI / 15.0;
    if center == 0.0 {
        Some(m * (a.powi(5) - 1.0).abs())
    } else if (center * (a.powi(5) - 1.0)).abs() >= 1.0 + a {
        Some(m * (a.powi(5) + 1.0))
    } else {
        None
    }
}

/// Evaluates both metrics between `ξ_{H(1,a)}(x - t W̃ e_z)` and the unit
/// Hill's vortex for each sample time.
pub fn wan_counterexample(a: f64, t_samples: &[f64]) -> Result<WanReport> {
    if !(a > 0.0 && a.is_finite()) || a == 1.0 {
        return Err(Error::Domain(format!("radius must be positive and different from 1, got {a}")));
    }
    if t_samples.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Domain("sample times must be finite and nonnegative".into()));
    }
    let speed = hill_speed(&HillParams::new(1.0, a, 0.0)?);
    let unit_speed = hill_speed(&HillParams::unit());
    let a5 = a.powi(5);
    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let c = t * speed;
        let wan = |tau: f64| wan_distance_balls(a, c, 1.0, tau);
        let span = 2.0 * (1.0 + a);
        let (lo, hi) = (c.min(a5 * c) - span, c.max(a5 * c) + span);
        let (wan_tau, wan_infimum) = minimize_1d(&wan, lo, hi, &[c, a5 * c, 0.0]);
        let orb = |tau: f64| ball_w1(a, c, 1.0, tau);
        let (orbital_tau, orbital) = minimize_1d(&orb, c - span, c + span, &[c]);
        samples.push(WanSample {
            t,
            center: c,
            wan_infimum,
            wan_tau,
            wan_closed_form: wan_infimum_closed_form(a, c),
            orbital,
            orbital_tau,
            wan_comoving: wan_distance_balls(a, c, 1.0, t * unit_speed),
        });
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let fitted: Vec<f64> = samples.iter().map(|s| s.wan_infimum).collect();
    let closed: Option<Vec<f64>> = samples.iter().map(|s| s.wan_closed_form).collect();
    let m = 8.0 * PI / 15.0;
    let orbital0 = samples.first().map_or(0.0, |s| s.orbital);
    Ok(WanReport {
        a,
        speed,
        fitted_slope: ls_slope(&ts, &fitted),
        closed_form_slope: closed.map(|v| ls_slope(&ts, &v)),
        comoving_slope: m * (a5 * speed - unit_speed).abs(),
        saturation: m * (a5 + 1.0),
        orbital_closed_form: m * (a5 - 1.0).abs(),
        orbital_relative_spread: samples
            .iter()
            .fold(0.0f64, |acc, s| acc.max((s.orbital / orbital0 - 1.0).abs())),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lens_limits() {
        let m = ball_r2_mass(1.0);
        assert_eq!(lens_r2_mass(1.0, 0.0, 1.0, 5.0), 0.0);
        assert!((lens_r2_mass(1.0, 0.0, 1.0, 0.0) - m).abs() < 1e-14);
        assert!((lens_r2_mass(1.2, 0.0, 1.0, 0.1) - m).abs() < 1e-14);
        assert!((slab_r2_mass(1.0, 0.0, -1.0, 1.0) - m).abs() < 1e-14);
    }

    #[test]
    fn degenerate_radius_rejected() {
        assert!(matches!(wan_counterexample(1.0, &[0.0]), Err(Error::Domain(_))));
        assert!(wan_counterexample(1.2, &[-1.0]).is_err());
    }
}
