//! The axisymmetric Green's function of the swirl-free Biot-Savart law.
//!
//! The stream function kernel is written as
//!
//! ```text
//! G(r, z, r', z') = sqrt(r r') / (2π) · F(s),     s = ((r - r')² + (z - z')²) / (r r')
//!
//!          π
//!          ⌠        cos θ
//! F(s)  =  │  ─────────────────────── dθ
//!          ⌡  sqrt(2(1 - cos θ) + s)
//!         0
//! ```
//!
//! `F` is positive and strictly decreasing, behaves like `½ ln(1/s) + ln 8 - 2`
//! as `s → 0` and like `(π/2) s^{-3/2}` as `s → ∞`. It can also be expressed
//! through complete elliptic integrals of the first and second kind; that
//! route is not used here, the defining integral is evaluated directly by
//! adaptive Gauss-Kronrod quadrature. The integrand peaks at `θ = 0`, where
//! the denominator shrinks to `sqrt(s)`, so the initial partition is graded
//! geometrically towards that endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `ln 8 - 2`, the constant of the small-s expansion.
pub const LOG8_MINUS_2: f64 = 0.079_441_541_679_835_9;

/// Quadrature policy for the profile `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Opt-in: route bulk kernel evaluations (stream-solve tables) through a
    /// memoized [`FProfileTable`] instead of direct quadrature.
    pub memo: bool,
}

impl Default for KernelEval {
    fn default() -> Self {
        KernelEval {
            abs_tol: 1e-12,
            max_subdivisions: 512,
            memo: false,
        }
    }
}

impl KernelEval {
    pub fn new(abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !abs_tol.is_finite() {
            return Err(Error::Domain(format!("abs_tol must be positive, got {abs_tol}")));
        }
        if max_subdivisions < 8 {
            return Err(Error::Domain(format!(
                "max_subdivisions must be at least 8, got {max_subdivisions}"
            )));
        }
        Ok(KernelEval {
            abs_tol,
            max_subdivisions,
            memo: false,
        })
    }

    pub fn with_memo(mut self, memo: bool) -> Self {
        self.memo = memo;
        self
    }

    /// `F(s)` by adaptive quadrature of the defining integral.
    pub fn f_profile(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let integrand = |theta: f64| {
            let half = (0.5 * theta).sin();
            theta.cos() / (4.0 * half * half + s).sqrt()
        };
        adaptive_gk15(integrand, &graded_breaks(s), self.abs_tol, self.max_subdivisions)
    }

    /// `dF/ds` by quadrature of the differentiated integrand.
    pub fn f_profile_derivative(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let integrand = |theta: f64| {
            let half = (0.5 * theta).sin();
            let d = 4.0 * half * half + s;
            -0.5 * theta.cos() / (d * d.sqrt())
        };
        // the derivative scales like 1/s for small s
        let tol = self.abs_tol / s.min(1.0);
        adaptive_gk15(integrand, &graded_breaks(s), tol, self.max_subdivisions)
    }

    pub fn green(&self, r: f64, z: f64, r2: f64, z2: f64) -> Result<f64> {
        green_with(self, r, z, r2, z2)
    }

    /// Upper bound `C_τ (r r')^{τ+1/2} / t^{2τ}` of `G`, `t` the distance of
    /// the two points. The constants `C_τ` are calibrated (see
    /// [`bound_constant`]).
    pub fn green_upper_bound(&self, r: f64, z: f64, r2: f64, z2: f64, tau: f64) -> Result<f64> {
        green_upper_bound(r, z, r2, z2, tau)
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("F(s) requires s > 0, got {s}")))
    }
}

/// Breakpoints 0 < sqrt(s) < 10 sqrt(s) < ... < π.
fn graded_breaks(s: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut t = s.sqrt();
    while t < 0.5 * PI {
        breaks.push(t);
        t *= 8.0;
    }
    breaks.push(PI);
    breaks
}

/// Something that evaluates the profile `F`.
pub trait Profile: Sync {
    fn profile(&self, s: f64) -> Result<f64>;
}

impl Profile for KernelEval {
    fn profile(&self, s: f64) -> Result<f64> {
        self.f_profile(s)
    }
}

/// `G(r, z, r2, z2)` with the profile supplied by `prof`.
///
/// The expression only involves `(r - r2)²`, `(z - z2)²` and `r·r2`, all of
/// which are exactly symmetric in IEEE arithmetic, so swapping the two points
/// returns the identical bit pattern.
pub fn green_with<P: Profile + ?Sized>(prof: &P, r: f64, z: f64, r2: f64, z2: f64) -> Result<f64> {
    if !(r > 0.0) || !(r2 >= 0.0) {
        return Err(Error::Domain(format!(
            "green requires r > 0 and r2 >= 0, got r = {r}, r2 = {r2}"
        )));
    }
    if r2 == 0.0 {
        return Ok(0.0);
    }
    let dr = r - r2;
    let dz = z - z2;
    let rr = r * r2;
    let num = dr * dr + dz * dz;
    if num == 0.0 {
        return Err(Error::Singularity);
    }
    let s = num / rr;
    Ok(rr.sqrt() / (2.0 * PI) * prof.profile(s)?)
}

/// Small-s expansion `½ ln(1/s) + ln 8 - 2`.
pub fn f_small_asymptote(s: f64) -> f64 {
    -0.5 * s.ln() + LOG8_MINUS_2
}

/// Large-s leading term `(π/2) s^{-3/2}`.
pub fn f_large_asymptote(s: f64) -> f64 {
    0.5 * PI / (s * s.sqrt())
}

/// Calibrated `C_τ` on the grid τ = k/8, k = 1..=12.
///
/// Each entry is `1.01 · sup_s F(s) s^τ / (2π)` from a log-spaced sweep over
/// `s ∈ [1e-12, 1e12]` (`examples/calibrate_bound.rs` regenerates the table).
/// For τ = 3/2, `F(s) s^{3/2}` overshoots its limit `π/2` slightly at
/// moderate s, so the constant sits a little above `1.01 / 4`.
pub const BOUND_CONSTANTS: [f64; 12] = [
    0.241_311_320_997_228_3,
    0.124_045_701_220_039_47,
    0.087_265_837_163_776_62,
    0.071_454_074_417_140_63,
    0.064_685_819_982_252_12,
    0.063_272_654_569_482_17,
    0.066_116_655_042_104_18,
    0.073_443_360_288_622_04,
    0.086_736_296_029_446_98,
    0.109_600_848_676_031_45,
    0.151_100_951_397_491_66,
    0.252_521_351_140_010_7,
];

/// `C_τ` for arbitrary τ in (0, 3/2].
///
/// Between grid points the larger neighbouring constant is used: for
/// τ_k ≤ τ ≤ τ_{k+1}, `s^τ ≤ max(s^{τ_k}, s^{τ_{k+1}})` for every s > 0.
/// Below 1/8 the bound `s^τ ≤ max(1, s^{1/8})` brings in `sup F / (2π)`,
/// which is infinite, so τ < 1/8 falls back to a direct sweep.
pub fn bound_constant(tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.5) {
        return Err(Error::Domain(format!("tau must lie in (0, 3/2], got {tau}")));
    }
    let pos = tau * 8.0;
    let k = pos.floor() as usize;
    if pos == pos.floor() && k >= 1 {
        return Ok(BOUND_CONSTANTS[k - 1]);
    }
    if k >= 1 {
        return Ok(BOUND_CONSTANTS[k - 1].max(BOUND_CONSTANTS[k]));
    }
    let sup = sweep_bound_sup(&KernelEval::default(), tau, 40)?;
    Ok(1.01 * sup)
}

/// `sup_s F(s) s^τ / (2π)` over a log-spaced sweep with `per_decade` points
/// per decade on `[1e-12, 1e12]`.
pub fn sweep_bound_sup(eval: &KernelEval, tau: f64, per_decade: usize) -> Result<f64> {
    let n = 24 * per_decade;
    let mut best = 0.0f64;
    for k in 0..=n {
        let s = 10f64.powf(-12.0 + 24.0 * k as f64 / n as f64);
        best = best.max(eval.f_profile(s)? * s.powf(tau));
    }
    if (tau - 1.5).abs() < 1e-15 {
        best = best.max(0.5 * PI);
    }
    Ok(best / (2.0 * PI))
}

pub fn green_upper_bound(r: f64, z: f64, r2: f64, z2: f64, tau: f64) -> Result<f64> {
    if !(r > 0.0 && r2 > 0.0) {
        return Err(Error::Domain(format!(
            "bound requires r, r2 > 0, got r = {r}, r2 = {r2}"
        )));
    }
    let c = bound_constant(tau)?;
    let t2 = (r - r2) * (r - r2) + (z - z2) * (z - z2);
    if t2 == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(c * (r * r2).powf(tau + 0.5) / t2.powf(tau))
}

/// Memoized `F` on a log-spaced grid with monotone cubic Hermite
/// interpolation in `x = ln s`. Immutable once built.
#[derive(Debug, Clone)]
pub struct FProfileTable {
    x0: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl FProfileTable {
    pub const LOG10_S_MIN: f64 = -12.0;
    pub const LOG10_S_MAX: f64 = 12.0;

    pub fn new(eval: &KernelEval, per_decade: usize) -> Result<Self> {
        let decades = Self::LOG10_S_MAX - Self::LOG10_S_MIN;
        let n = (decades * per_decade as f64).round() as usize;
        let x0 = Self::LOG10_S_MIN * std::f64::consts::LN_10;
        let step = decades * std::f64::consts::LN_10 / n as f64;
        let mut values = Vec::with_capacity(n + 1);
        let mut slopes = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let s = (x0 + step * k as f64).exp();
            values.push(eval.f_profile(s)?);
            slopes.push(s * eval.f_profile_derivative(s)?);
        }
        limit_slopes(&values, &mut slopes, step);
        Ok(FProfileTable {
            x0,
            step,
            values,
            slopes,
        })
    }

    pub fn eval(&self, s: f64) -> f64 {
        let x = s.ln();
        let n = self.values.len() - 1;
        let pos = (x - self.x0) / self.step;
        if pos < 0.0 {
            return f_small_asymptote(s);
        }
        if pos >= n as f64 {
            return f_large_asymptote(s) * (1.0 - 3.0 / s);
        }
        let k = (pos.floor() as usize).min(n - 1);
        let t = pos - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.step, self.slopes[k + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}

impl Profile for FProfileTable {
    fn profile(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        Ok(self.eval(s))
    }
}

/// Fritsch-Carlson limiter; a no-op when the exact slopes are already
/// consistent with a monotone interpolant.
fn limit_slopes(values: &[f64], slopes: &mut [f64], step: f64) {
    for k in 0..values.len() - 1 {
        let delta = (values[k + 1] - values[k]) / step;
        if delta == 0.0 {
            slopes[k] = 0.0;
            slopes[k + 1] = 0.0;
            continue;
        }
        let a = slopes[k] / delta;
        let b = slopes[k + 1] / delta;
        if a < 0.0 {
            slopes[k] = 0.0;
        }
        if b < 0.0 {
            slopes[k + 1] = 0.0;
        }
        let norm = a * a + b * b;
        if norm > 9.0 {
            let tau = 3.0 / norm.sqrt();
            slopes[k] = tau * a * delta;
            slopes[k + 1] = tau * b * delta;
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod (7, 15) over the partition `breaks`.
pub fn adaptive_gk15<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (value, err) = gk15(&f, w[0], w[1]);
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }
    let mut count = heap.len();
    loop {
        let (total, err) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
        if err <= abs_tol {
            return Ok(total);
        }
        if count >= max_subdivisions {
            return Err(Error::Accuracy {
                estimate: total,
                error_bound: err,
            });
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = gk15(&f, a, b);
            heap.push(Segment { a, b, value, err });
        }
        count += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_policy() {
        assert!(KernelEval::new(0.0, 100).is_err());
        assert!(KernelEval::new(1e-10, 4).is_err());
        assert!(KernelEval::new(1e-10, 8).is_ok());
    }

    #[test]
    fn domain_and_accuracy_errors() {
        let k = KernelEval::default();
        assert!(matches!(k.f_profile(0.0), Err(Error::Domain(_))));
        assert!(matches!(k.f_profile(-1.0), Err(Error::Domain(_))));
        let tight = KernelEval::new(1e-300, 8).unwrap();
        match tight.f_profile(1e-8) {
            Err(Error::Accuracy { estimate, .. }) => {
                assert!((estimate - k.f_profile(1e-8).unwrap()).abs() < 1e-3)
            }
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn green_on_axis_and_coincident() {
        let k = KernelEval::default();
        assert_eq!(k.green(1.0, 0.0, 0.0, 5.0).unwrap(), 0.0);
        assert_eq!(k.green(1.0, 0.3, 1.0, 0.3), Err(Error::Singularity));
        assert!(k.green(0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bound_domain() {
        assert!(green_upper_bound(1.0, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(green_upper_bound(1.0, 0.0, 1.0, 1.0, 1.6).is_err());
        assert_eq!(
            green_upper_bound(1.0, 0.0, 1.0, 0.0, 1.0),
            Err(Error::Singularity)
        );
    }

    #[test]
    fn gk15_integrates_polynomials() {
        let v = adaptive_gk15(|x| x.powi(5) - 2.0 * x, &[0.0, 2.0], 1e-13, 16).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }
}
