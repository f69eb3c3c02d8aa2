//! Acceptance checks, shared by the `verify` subcommand and the test suite.
//!
//! Each check returns an [`Outcome`] with the measured numbers; tolerances
//! are fixed here.

use std::f64::consts::PI;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evolve::{run, stability_experiment, EvolveConfig, Perturbation};
use crate::fields::{AxiGrid, StreamSolver, VorticityField};
use crate::functionals::{
    circulation, energy, impulse, l1_norm, l2_norm, orbital_distance, weighted_l1, OrbitalMetric, ShiftScan,
};
use crate::hill::{
    hill_field_cell_average, hill_field_sampled, hill_quantities, hill_stream, radius_from_impulse, HillParams,
};
use crate::kernel::{f_small_asymptote, KernelEval};
use crate::maximize::{maximize_energy, Constraints, MaximizeOptions, MaximizerResult, MaximizerSummary};
use crate::rearrange::{radial_shift, steiner_symmetrize};
use crate::snapshot::Snapshot;
use crate::wan::wan_counterexample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(id: u8, title: &str, pass: bool, detail: String) -> Self {
        Outcome {
            id,
            title: title.to_string(),
            pass,
            detail,
        }
    }

    /// `criterion N: PASS|FAIL  title  (detail)`
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2}: {}  {}  ({})",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Quantities of `Hill(λ, a)` against independently written closed forms.
fn hill_closed_form_check(lambda: f64, a: f64) -> Result<(bool, f64)> {
    let q = hill_quantities(&HillParams::new(lambda, a, 0.0)?);
    let expected = [
        (q.strength, lambda),
        (q.circulation, 4.0 * PI * lambda * a * a * a / 3.0),
        (q.impulse, 4.0 * PI * lambda * a * a * a * a * a / 15.0),
        (q.energy, 8.0 * PI * lambda * lambda * a.powi(7) / 315.0),
        (q.speed, 2.0 * lambda * a * a / 15.0),
    ];
    let worst = expected.iter().fold(0.0f64, |m, &(x, e)| m.max(rel(x, e)));
    Ok((worst <= 1e-12, worst))
}

pub fn criterion_1() -> Result<Outcome> {
    let (pass, worst) = hill_closed_form_check(1.0, 1.0)?;
    Ok(Outcome::new(1, "closed-form Hill quantities", pass, format!("max rel err {worst:.2e}")))
}

pub fn criterion_2() -> Result<Outcome> {
    let mut pass = true;
    let mut worst = 0.0f64;
    for (l, a) in [(1.0, 2.0), (3.0, 0.5), (2.0, 1.5)] {
        let (p, w) = hill_closed_form_check(l, a)?;
        pass &= p;
        worst = worst.max(w);
    }
    Ok(Outcome::new(2, "Hill scaling law", pass, format!("max rel err {worst:.2e}")))
}

pub fn criterion_3(eval: &KernelEval) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [1e-4, 1e-5] {
        let err = (eval.f_profile(s)? - f_small_asymptote(s)).abs();
        let bound = 5.0 * s * (1.0 / s).ln();
        pass &= err <= bound;
        parts.push(format!("s={s:e}: {err:.2e} <= {bound:.2e}"));
    }
    for s in [1e4, 1e5] {
        let err = (eval.f_profile(s)? * s.powf(1.5) - 0.5 * PI).abs();
        let bound = 5.0 / s;
        pass &= err <= bound;
        parts.push(format!("s={s:e}: {err:.2e} <= {bound:.2e}"));
    }
    Ok(Outcome::new(3, "kernel asymptotics", pass, parts.join("; ")))
}

/// Largest `|ψ - ψ_H| / ψ_H` over nodes at least `2 hr` from the sphere.
pub fn hill_stream_error(grid: &AxiGrid, eval: &KernelEval) -> Result<f64> {
    let p = HillParams::unit();
    let xi = hill_field_cell_average(grid, &p);
    let psi = StreamSolver::new(grid, eval)?.solve(&xi)?;
    let mut worst = 0.0f64;
    for i in 0..grid.nr {
        for j in 0..grid.nz {
            let (r, z) = (grid.r(i), grid.z(j));
            if ((r * r + z * z).sqrt() - p.a).abs() < 2.0 * grid.hr() {
                continue;
            }
            let exact = hill_stream(&p, r, z);
            worst = worst.max(((psi.get(i, j) - exact) / exact).abs());
        }
    }
    Ok(worst)
}

pub fn criterion_4(eval: &KernelEval) -> Result<Outcome> {
    let coarse = hill_stream_error(&AxiGrid::symmetric(128, 256, 3.0, 3.0)?, eval)?;
    let fine = hill_stream_error(&AxiGrid::symmetric(256, 512, 3.0, 3.0)?, eval)?;
    let ratio = coarse / fine;
    let pass = coarse <= 2e-2 && ratio >= 3.5;
    Ok(Outcome::new(
        4,
        "stream-solve accuracy",
        pass,
        format!("max rel err {coarse:.3e} (128x256), {fine:.3e} (256x512), ratio {ratio:.2}"),
    ))
}

pub fn criterion_5(eval: &KernelEval) -> Result<Outcome> {
    let grid = AxiGrid::symmetric(128, 256, 3.0, 3.0)?;
    let xi = hill_field_cell_average(&grid, &HillParams::unit());
    let psi = StreamSolver::new(&grid, eval)?.solve(&xi)?;
    let (ei, ec, ee) = (
        rel(impulse(&xi), 4.0 * PI / 15.0),
        rel(circulation(&xi), 4.0 * PI / 3.0),
        rel(energy(&xi, &psi)?, 8.0 * PI / 315.0),
    );
    let pass = ei <= 0.01 && ec <= 0.01 && ee <= 0.03;
    Ok(Outcome::new(
        5,
        "numerical functionals",
        pass,
        format!("rel err impulse {ei:.2e}, circulation {ec:.2e}, energy {ee:.2e}"),
    ))
}

/// Random field with values in `[0, 1]` on a random subset of the cells
/// `i < nr/2`, `|z| < z_half/2`.
pub fn random_field(grid: &AxiGrid, rng: &mut ChaCha8Rng) -> VorticityField {
    let density: f64 = rng.gen_range(0.2..0.9);
    let mut values = vec![0.0; grid.len()];
    for i in 0..grid.nr / 2 {
        for j in grid.nz / 4..3 * grid.nz / 4 {
            if rng.gen::<f64>() < density {
                values[grid.idx(i, j)] = rng.gen::<f64>();
            }
        }
    }
    VorticityField::from_values(*grid, values, 1.0).expect("values in [0, 1]")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RearrangementStats {
    pub norms_bit_exact: bool,
    /// Smallest `(E[ξ*] - E[ξ]) / E[ξ]`.
    pub min_steiner_gain: f64,
    /// Smallest `(E[ξ_τ] - E[ξ]) / E[ξ]`.
    pub min_shift_gain: f64,
}

/// Relative energy tolerance of the stream solve.
pub const ENERGY_NOISE: f64 = 1e-10;

pub fn rearrangement_stats(n_fields: usize, seed: u64, eval: &KernelEval) -> Result<RearrangementStats> {
    let grid = AxiGrid::symmetric(24, 48, 3.0, 3.0)?;
    let solver = StreamSolver::new(&grid, eval)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = RearrangementStats {
        norms_bit_exact: true,
        min_steiner_gain: f64::INFINITY,
        min_shift_gain: f64::INFINITY,
    };
    let e_of = |xi: &VorticityField| -> Result<f64> { energy(xi, &solver.solve(xi)?) };
    for _ in 0..n_fields {
        let xi = random_field(&grid, &mut rng);
        let star = steiner_symmetrize(&xi, 0.0);
        let same = |f: fn(&VorticityField) -> f64| f(&xi).to_bits() == f(&star).to_bits();
        stats.norms_bit_exact &= same(l1_norm) && same(l2_norm) && same(weighted_l1);
        let e = e_of(&xi)?;
        stats.min_steiner_gain = stats.min_steiner_gain.min((e_of(&star)? - e) / e);
        let shifted = radial_shift(&xi, 2.0 * grid.hr())?;
        stats.min_shift_gain = stats.min_shift_gain.min((e_of(&shifted)? - e) / e);
    }
    Ok(stats)
}

pub fn criterion_6(eval: &KernelEval) -> Result<Outcome> {
    let s = rearrangement_stats(50, 6, eval)?;
    let pass = s.norms_bit_exact && s.min_steiner_gain >= -ENERGY_NOISE && s.min_shift_gain > ENERGY_NOISE;
    Ok(Outcome::new(
        6,
        "rearrangement properties",
        pass,
        format!(
            "norms bit-exact {}, min rel Steiner gain {:.3e}, min rel shift gain {:.3e}",
            s.norms_bit_exact, s.min_steiner_gain, s.min_shift_gain
        ),
    ))
}

/// The grid of the maximizer endpoint run: 96×192 on `r ≤ 2.5`, `|z| ≤ 2.5`.
pub fn endpoint_grid() -> AxiGrid {
    AxiGrid::symmetric(96, 192, 2.5, 2.5).expect("valid grid")
}

pub fn endpoint_constraints() -> Constraints {
    Constraints::new(0.837758, 4.18879, 1.0).expect("positive constraints")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointCheck {
    pub converged: bool,
    pub gamma: f64,
    pub gamma_tol: f64,
    pub speed_rel_err: f64,
    pub orbital_distance: f64,
    /// `(1 + a²) λ · 2π a hr hz`, one cell on the rim of the Hill ball.
    pub boundary_cell_mass: f64,
    pub identity_residual: f64,
}

impl EndpointCheck {
    pub fn pass(&self) -> bool {
        self.converged
            && self.gamma <= self.gamma_tol
            && self.speed_rel_err <= 0.05
            && self.orbital_distance <= 5.0 * self.boundary_cell_mass
            && self.identity_residual <= 0.02
    }
}

/// Compares a maximizer with the gridded Hill's vortex of the same impulse.
pub fn endpoint_check(res: &MaximizerResult) -> Result<EndpointCheck> {
    endpoint_check_summary(&res.xi, &res.summary())
}

/// As [`endpoint_check`], from a stored field and its summary.
pub fn endpoint_check_summary(xi: &VorticityField, s: &MaximizerSummary) -> Result<EndpointCheck> {
    let c = s.constraints;
    let g = *xi.grid();
    let a = radius_from_impulse(c.mu, c.lambda)?;
    let hill = HillParams::new(c.lambda, a, 0.5 * (g.z_min + g.z_max))?;
    let reference = hill_field_sampled(&g, &hill);
    let scan = ShiftScan {
        metric: OrbitalMetric::Weighted,
        tau_range: Some((-a, a)),
    };
    let d = orbital_distance(xi, &reference, &scan)?;
    Ok(EndpointCheck {
        converged: s.converged,
        gamma: s.multipliers.gamma,
        gamma_tol: 1e-3 * c.lambda * g.r_max * g.r_max,
        speed_rel_err: rel(s.multipliers.w, 2.0 / 15.0 * c.lambda * a * a),
        orbital_distance: d.value,
        boundary_cell_mass: (1.0 + a * a) * c.lambda * 2.0 * PI * a * g.hr() * g.hz(),
        identity_residual: s.identities.identity_residual,
    })
}

pub fn criterion_7(eval: &KernelEval) -> Result<Outcome> {
    let res = maximize_energy(&endpoint_constraints(), &endpoint_grid(), &MaximizeOptions::default(), eval)?;
    let e = endpoint_check(&res)?;
    Ok(Outcome::new(
        7,
        "maximizer endpoint",
        e.pass(),
        format!(
            "converged {} in {} its, gamma {:.2e} (tol {:.2e}), W rel err {:.2e}, orbital {:.4} vs 5 cells {:.4}, identity {:.2e}",
            e.converged,
            res.iterations,
            e.gamma,
            e.gamma_tol,
            e.speed_rel_err,
            e.orbital_distance,
            5.0 * e.boundary_cell_mass,
            e.identity_residual
        ),
    ))
}

/// `7E = 5Wμ` for the unit Hill's vortex in units of π: `E = 8/315`,
/// `W = 2/15`, `μ = 4/15`.
pub fn criterion_8() -> Outcome {
    let r = Rational64::new;
    let lhs = r(7, 1) * r(8, 315);
    let rhs = r(5, 1) * r(2, 15) * r(4, 15);
    let pass = lhs == rhs && lhs == r(8, 45);
    Outcome::new(
        8,
        "ring identity, exact",
        pass,
        format!("7E = {}π/{}, 5Wμ = {}π/{}", lhs.numer(), lhs.denom(), rhs.numer(), rhs.denom()),
    )
}

pub fn criterion_9(eval: &KernelEval) -> Result<Outcome> {
    let grid = AxiGrid::symmetric(128, 256, 3.0, 3.0)?;
    let xi = hill_field_cell_average(&grid, &HillParams::unit());
    let cfg = EvolveConfig {
        dt_cfl: 0.5,
        t_end: 3.0,
        resolve_every: 1,
        diag_every: 1,
        bands: vec![(0.5, 1.5)],
    };
    let (_, log) = run(&xi, &cfg, eval)?;
    let (dl, di, de) = (
        log.relative_drift(|r| r.l1),
        log.relative_drift(|r| r.impulse),
        log.relative_drift(|r| r.energy),
    );
    let speed = log.centroid_speed();
    let se = rel(speed, 2.0 / 15.0);
    let pass = dl <= 0.02 && di <= 0.02 && de <= 0.02 && se <= 0.1;
    Ok(Outcome::new(
        9,
        "evolution conservation",
        pass,
        format!("drift l1 {dl:.2e}, impulse {di:.2e}, energy {de:.2e}; speed {speed:.5} (rel err {se:.2e})"),
    ))
}

pub fn criterion_10(eval: &KernelEval) -> Result<Outcome> {
    let grid = AxiGrid::symmetric(128, 256, 3.0, 3.0)?;
    let cfg = EvolveConfig {
        diag_every: 4,
        ..EvolveConfig::default()
    };
    let base = stability_experiment(Perturbation::None, &grid, &cfg, eval, 3.0, None)?;
    let mut pass = true;
    let mut parts = vec![format!("floor {:.3e}", base.floor)];
    for a in [1.01, 1.03] {
        let rep = stability_experiment(Perturbation::Radius(a), &grid, &cfg, eval, 3.0, Some(base.floor))?;
        pass &= rep.pass;
        parts.push(format!(
            "a={a}: delta0 {:.3e}, max {:.3e} <= {:.3e}",
            rep.delta0, rep.max_distance, rep.threshold
        ));
    }
    Ok(Outcome::new(10, "orbital stability", pass, parts.join("; ")))
}

pub fn criterion_11() -> Result<Outcome> {
    let rep = wan_counterexample(1.2, &[0.0, 50.0, 100.0, 200.0])?;
    let w0 = rep.samples[0].wan_infimum;
    let e0 = rel(w0, 8.0 * PI / 15.0 * (1.2f64.powi(5) - 1.0));
    let slope_err = rep.closed_form_slope.map_or(f64::INFINITY, |s| rel(rep.fitted_slope, s));
    let pass = e0 <= 0.01 && rep.fitted_slope > 0.0 && slope_err <= 0.05 && rep.orbital_relative_spread <= 1e-9;
    Ok(Outcome::new(
        11,
        "Wan counterexample",
        pass,
        format!(
            "t=0 rel err {e0:.2e}; slope {:.5e} vs closed form {:.5e} (rel err {slope_err:.2e}); orbital spread {:.2e}; infimum saturates at {:.5}",
            rep.fitted_slope,
            rep.closed_form_slope.unwrap_or(f64::NAN),
            rep.orbital_relative_spread,
            rep.saturation
        ),
    ))
}

/// Serialized output of one endpoint maximization: snapshot then summary.
pub fn endpoint_output(eval: &KernelEval) -> Result<String> {
    let res = maximize_energy(&endpoint_constraints(), &endpoint_grid(), &MaximizeOptions::default(), eval)?;
    let mut s = Snapshot::vorticity("xi", 0.0, &res.xi).to_string_repr()?;
    s.push_str(&serde_json::to_string(&res.summary()).map_err(|e| crate::Error::Format(e.to_string()))?);
    Ok(s)
}

pub fn criterion_12(eval: &KernelEval) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .map_err(|e| crate::Error::Domain(e.to_string()))?;
    let first = pool.install(|| endpoint_output(eval))?;
    let second = pool.install(|| endpoint_output(eval))?;
    let pass = first.as_bytes() == second.as_bytes();
    Ok(Outcome::new(
        12,
        "determinism",
        pass,
        format!("{} bytes, identical {}", first.len(), pass),
    ))
}

/// Runs every check in order.
pub fn run_all(eval: &KernelEval) -> Result<Vec<Outcome>> {
    Ok(vec![
        criterion_1()?,
        criterion_2()?,
        criterion_3(eval)?,
        criterion_4(eval)?,
        criterion_5(eval)?,
        criterion_6(eval)?,
        criterion_7(eval)?,
        criterion_8(),
        criterion_9(eval)?,
        criterion_10(eval)?,
        criterion_11()?,
        criterion_12(eval)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_identity_holds() {
        assert!(criterion_8().pass);
    }

    #[test]
    fn outcome_line_format() {
        let o = Outcome::new(3, "x", true, "d".into());
        assert_eq!(o.line(), "criterion  3: PASS  x  (d)");
    }
}
