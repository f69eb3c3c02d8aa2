//! Semi-Lagrangian transport of relative vorticity, `∂ₜξ + u·∇ξ = 0`, with
//! conservation diagnostics and the orbital stability experiment.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{velocity, AxiGrid, ScalarField, StreamSolver, VorticityField};
use crate::functionals::{
    band_mass, centroid_z, orbital_distance, quantities_with, OrbitalMetric, ShiftScan,
};
use crate::hill::{hill_field_cell_average, HillParams};
use crate::kernel::KernelEval;
use crate::sum::ls_slope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    /// Courant fraction in `(0, 1]`.
    pub dt_cfl: f64,
    pub t_end: f64,
    /// Steps between stream re-solves.
    pub resolve_every: usize,
    /// Steps between diagnostics.
    pub diag_every: usize,
    /// `(a, b)` intervals for the level-band masses `∫_{a<ξ<b} ξ dx`.
    #[serde(default)]
    pub bands: Vec<(f64, f64)>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            dt_cfl: 0.5,
            t_end: 3.0,
            resolve_every: 1,
            diag_every: 1,
            bands: vec![(0.5, 1.5)],
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_cfl > 0.0 && self.dt_cfl <= 1.0) {
            return Err(Error::Domain(format!("CFL fraction must lie in (0, 1], got {}", self.dt_cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain(format!("end time must be positive, got {}", self.t_end)));
        }
        if self.resolve_every == 0 || self.diag_every == 0 {
            return Err(Error::Domain("step cadences must be at least 1".into()));
        }
        Ok(())
    }
}

/// Node velocities with bilinear sampling; `u_r` is odd and `u_z` even
/// across the axis, and both are held constant beyond the outer nodes.
#[derive(Debug, Clone)]
pub struct VelocityField {
    ur: ScalarField,
    uz: ScalarField,
}

impl VelocityField {
    pub fn from_stream(psi: &ScalarField) -> Self {
        let (ur, uz) = velocity(psi);
        VelocityField { ur, uz }
    }

    pub fn components(&self) -> (&ScalarField, &ScalarField) {
        (&self.ur, &self.uz)
    }

    pub fn max_speed(&self) -> f64 {
        self.ur
            .values()
            .iter()
            .zip(self.uz.values())
            .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn sample(&self, r: f64, z: f64) -> (f64, f64) {
        let g = self.ur.grid();
        let sign = if r < 0.0 { -1.0 } else { 1.0 };
        let x = (r.abs() / g.hr() - 0.5).min((g.nr - 1) as f64);
        let y = ((z - g.z_min) / g.hz() - 0.5).clamp(0.0, (g.nz - 1) as f64);
        let j0 = (y.floor() as usize).min(g.nz - 2);
        let wy = y - j0 as f64;
        let (i0, wx) = if x < 0.0 {
            (None, x + 1.0)
        } else {
            let i = (x.floor() as usize).min(g.nr - 2);
            (Some(i), x - i as f64)
        };
        let pick = |f: &ScalarField, odd: bool| -> f64 {
            let row = |i: Option<usize>, j: usize| -> f64 {
                match i {
                    Some(i) => f.get(i, j),
                    None if odd => -f.get(0, j),
                    None => f.get(0, j),
                }
            };
            let i1 = Some(i0.map_or(0, |i| i + 1));
            let a = (1.0 - wy) * row(i0, j0) + wy * row(i0, j0 + 1);
            let b = (1.0 - wy) * row(i1, j0) + wy * row(i1, j0 + 1);
            (1.0 - wx) * a + wx * b
        };
        (sign * pick(&self.ur, true), pick(&self.uz, false))
    }
}

/// Bilinear sample of `ξ`, even across the axis, zero beyond the grid.
fn sample_vorticity(xi: &VorticityField, r: f64, z: f64) -> f64 {
    let g = xi.grid();
    let x = r.abs() / g.hr() - 0.5;
    let y = (z - g.z_min) / g.hz() - 0.5;
    if x >= g.nr as f64 || y <= -1.0 || y >= g.nz as f64 {
        return 0.0;
    }
    let at = |i: isize, j: isize| -> f64 {
        if j < 0 || j >= g.nz as isize || i >= g.nr as isize {
            0.0
        } else {
            xi.get(i.max(0) as usize, j as usize)
        }
    };
    let (fx, fy) = (x.floor(), y.floor());
    let (wx, wy) = (x - fx, y - fy);
    let (i0, j0) = (fx as isize, fy as isize);
    let a = (1.0 - wy) * at(i0, j0) + wy * at(i0, j0 + 1);
    let b = (1.0 - wy) * at(i0 + 1, j0) + wy * at(i0 + 1, j0 + 1);
    (1.0 - wx) * a + wx * b
}

/// Largest stable step `cfl · min(hr, hz) / max|u|` (infinite for `u ≡ 0`).
pub fn cfl_limit(vel: &VelocityField, cfl: f64) -> f64 {
    let g = vel.ur.grid();
    let umax = vel.max_speed();
    if umax > 0.0 {
        cfl * g.hr().min(g.hz()) / umax
    } else {
        f64::INFINITY
    }
}

/// One semi-Lagrangian step with frozen velocity: midpoint backward trace,
/// bilinear interpolation of the old field, clamp into `[0, λ]`.
pub fn step(xi: &VorticityField, vel: &VelocityField, dt: f64, cfl: f64) -> Result<VorticityField> {
    xi.grid().check_same(vel.ur.grid())?;
    let limit = cfl_limit(vel, cfl);
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, limit });
    }
    let g = *xi.grid();
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(g.nz).enumerate().for_each(|(i, row)| {
        let r = g.r(i);
        for (j, o) in row.iter_mut().enumerate() {
            let z = g.z(j);
            let (ur, uz) = vel.sample(r, z);
            let (rm, zm) = (r - 0.5 * dt * ur, z - 0.5 * dt * uz);
            let (ur, uz) = vel.sample(rm, zm);
            *o = sample_vorticity(xi, r - dt * ur, z - dt * uz);
        }
    });
    Ok(VorticityField::clamped(g, out, xi.cap()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub impulse: f64,
    pub circulation: f64,
    pub energy: f64,
    pub centroid_z: f64,
    pub band_masses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ConservationLog {
    pub bands: Vec<(f64, f64)>,
    pub records: Vec<LogRecord>,
}

impl ConservationLog {
    /// `max_t |q(t) - q(0)| / |q(0)|` for the selected quantity.
    pub fn relative_drift<F: Fn(&LogRecord) -> f64>(&self, f: F) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        let q0 = f(first);
        self.records.iter().fold(0.0f64, |m, rec| {
            let d = (f(rec) - q0).abs();
            m.max(if q0 != 0.0 { d / q0.abs() } else { d })
        })
    }

    /// Least-squares slope of the centroid against time.
    pub fn centroid_speed(&self) -> f64 {
        let t: Vec<f64> = self.records.iter().map(|r| r.t).collect();
        let z: Vec<f64> = self.records.iter().map(|r| r.centroid_z).collect();
        ls_slope(&t, &z)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,l1,l2,impulse,circulation,energy,centroid_z");
        for (a, b) in &self.bands {
            s.push_str(&format!(",band_mass_{a:?}_{b:?}"));
        }
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.t, r.l1, r.l2, r.impulse, r.circulation, r.energy, r.centroid_z
            ));
            for m in &r.band_masses {
                s.push_str(&format!(",{m:?}"));
            }
            s.push('\n');
        }
        s
    }
}

fn record(t: f64, xi: &VorticityField, psi: &ScalarField, bands: &[(f64, f64)]) -> Result<LogRecord> {
    let q = quantities_with(xi, psi)?;
    Ok(LogRecord {
        t,
        l1: q.l1,
        l2: q.l2,
        impulse: q.impulse,
        circulation: q.circulation,
        energy: q.energy,
        centroid_z: centroid_z(xi),
        band_masses: bands.iter().map(|&(a, b)| band_mass(xi, a, b)).collect(),
    })
}

/// Advances `xi0` to `cfg.t_end`. The time step is the CFL limit of the
/// latest velocity, shortened to land exactly on `t_end`.
pub fn run(
    xi0: &VorticityField,
    cfg: &EvolveConfig,
    eval: &KernelEval,
) -> Result<(VorticityField, ConservationLog)> {
    let solver = StreamSolver::new(xi0.grid(), eval)?;
    run_with_solver(xi0, cfg, &solver, |_, _| Ok(()))
}

/// As [`run`], calling `observe(t, ξ)` at every diagnostic time.
pub fn run_with_solver<O>(
    xi0: &VorticityField,
    cfg: &EvolveConfig,
    solver: &StreamSolver,
    mut observe: O,
) -> Result<(VorticityField, ConservationLog)>
where
    O: FnMut(f64, &VorticityField) -> Result<()>,
{
    cfg.validate()?;
    let mut log = ConservationLog {
        bands: cfg.bands.clone(),
        records: Vec::new(),
    };
    let mut xi = xi0.clone();
    let mut psi = solver.solve(&xi)?;
    log.records.push(record(0.0, &xi, &psi, &cfg.bands)?);
    observe(0.0, &xi)?;
    let mut vel = VelocityField::from_stream(&psi);
    let mut t = 0.0;
    let mut n = 0usize;
    let remaining = |t: f64| cfg.t_end - t;
    while remaining(t) > 1e-12 * cfg.t_end {
        if n > 0 && n.is_multiple_of(cfg.resolve_every) {
            vel = VelocityField::from_stream(&psi);
        }
        let dt = cfl_limit(&vel, cfg.dt_cfl).min(remaining(t));
        xi = step(&xi, &vel, dt, cfg.dt_cfl)?;
        t += dt;
        n += 1;
        let last = remaining(t) <= 1e-12 * cfg.t_end;
        if last {
            t = cfg.t_end;
        }
        let need_psi = n.is_multiple_of(cfg.resolve_every) || n.is_multiple_of(cfg.diag_every) || last;
        if need_psi {
            psi = solver.solve(&xi)?;
        }
        if n.is_multiple_of(cfg.diag_every) || last {
            log.records.push(record(t, &xi, &psi, &cfg.bands)?);
            observe(t, &xi)?;
        }
    }
    Ok((xi, log))
}

/// Initial data for the stability experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// The unit Hill's vortex itself.
    None,
    /// Hill's vortex of radius `a`.
    Radius(f64),
    /// Smooth radial profile falling from 1 to 0 across `| |x| - 1 | < w/2`.
    Bump(f64),
}

impl FromStr for Perturbation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("unrecognised perturbation '{s}'; expected none, radius:A or bump:W"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let value = |a: Option<&str>| -> Result<f64> {
            let v: f64 = a.ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match kind.trim() {
            "none" if arg.is_none() => Ok(Perturbation::None),
            "radius" => Ok(Perturbation::Radius(value(arg)?)),
            "bump" => Ok(Perturbation::Bump(value(arg)?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::None => write!(f, "none"),
            Perturbation::Radius(a) => write!(f, "radius:{a}"),
            Perturbation::Bump(w) => write!(f, "bump:{w}"),
        }
    }
}

/// `C^∞` step: 1 for `t ≤ -½`, 0 for `t ≥ ½`.
fn smooth_step(t: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let (a, b) = (h(0.5 - t), h(t + 0.5));
    a / (a + b)
}

impl Perturbation {
    pub fn field(&self, grid: &AxiGrid) -> Result<VorticityField> {
        match *self {
            Perturbation::None => Ok(hill_field_cell_average(grid, &HillParams::unit())),
            Perturbation::Radius(a) => Ok(hill_field_cell_average(grid, &HillParams::new(1.0, a, 0.0)?)),
            Perturbation::Bump(w) => {
                let f = ScalarField::from_fn(*grid, |r, z| smooth_step(((r * r + z * z).sqrt() - 1.0) / w))?;
                VorticityField::new(f, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub perturbation: String,
    /// Orbital distance of the initial field to the unit Hill's vortex.
    pub delta0: f64,
    pub floor: f64,
    pub factor: f64,
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub max_distance: f64,
    /// `factor · delta0 + floor`
    pub threshold: f64,
    pub pass: bool,
}

/// Tracks `inf_τ ‖ξ(t) - ξ_H(· - τ e_z)‖` (combined metric) against the
/// gridded unit Hill's vortex. `floor` is the scheme-error floor; when
/// omitted the report's own maximum is used, as for the unperturbed run.
pub fn stability_experiment(
    perturbation: Perturbation,
    grid: &AxiGrid,
    cfg: &EvolveConfig,
    eval: &KernelEval,
    factor: f64,
    floor: Option<f64>,
) -> Result<StabilityReport> {
    let solver = StreamSolver::new(grid, eval)?;
    let hill = hill_field_cell_average(grid, &HillParams::unit());
    let xi0 = perturbation.field(grid)?;
    let scan = ShiftScan {
        metric: OrbitalMetric::Combined,
        tau_range: None,
    };
    let mut times = Vec::new();
    let mut distances = Vec::new();
    let mut last_tau = 0.0;
    run_with_solver(&xi0, cfg, &solver, |t, xi| {
        // search a window around the previous optimum; the core moves slowly
        let window = ShiftScan {
            tau_range: if times.is_empty() {
                scan.tau_range
            } else {
                Some((last_tau - 0.5, last_tau + 0.5))
            },
            ..scan
        };
        let d = orbital_distance(xi, &hill, &window)?;
        last_tau = d.tau_star;
        times.push(t);
        distances.push(d.value);
        Ok(())
    })?;
    let delta0 = distances[0];
    let max_distance = distances.iter().fold(0.0f64, |m, &d| m.max(d));
    let floor = floor.unwrap_or(max_distance);
    let threshold = factor * delta0 + floor;
    Ok(StabilityReport {
        perturbation: perturbation.to_string(),
        delta0,
        floor,
        factor,
        times,
        distances,
        max_distance,
        threshold,
        pass: max_distance <= threshold,
    })
}
