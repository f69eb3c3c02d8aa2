//! Energy maximization over `{0 ≤ ξ ≤ λ, ½‖r²ξ‖₁ = μ, ‖ξ‖₁ ≤ ν}`.
//!
//! Each iteration solves for the stream function of the current iterate and
//! replaces the iterate by the bathtub maximizer of the linearized energy
//! `∫ ψ ξ'`, which has the level-set form `ξ' = λ 1{ψ - ½ W r² - γ > 0}` with at
//! most one fractionally filled level. Since the energy is a convex quadratic
//! form, each such step cannot decrease it.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{AxiGrid, ScalarField, StreamSolver, VorticityField};
use crate::functionals::{centroid_z, circulation, energy, impulse, weighted_distance};
use crate::kernel::KernelEval;
use crate::rearrange::steiner_symmetrize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub mu: f64,
    pub nu: f64,
    pub lambda: f64,
}

impl Constraints {
    pub fn new(mu: f64, nu: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("mu", mu), ("nu", nu), ("lambda", lambda)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Constraints { mu, nu, lambda })
    }

    /// `μ ν^{-5/3} λ^{2/3}`, the only scale-free combination.
    pub fn scale_free(&self) -> f64 {
        self.mu * self.nu.powf(-5.0 / 3.0) * self.lambda.powf(2.0 / 3.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierPair {
    #[serde(rename = "W")]
    pub w: f64,
    pub gamma: f64,
}

/// `(W, γ)` from two boundary points `(r', ψ')`, `(r'', ψ'')` of `{Ψ = 0}`.
pub fn multipliers_from_boundary(r1: f64, psi1: f64, r2: f64, psi2: f64) -> Result<MultiplierPair> {
    let d = r1 * r1 - r2 * r2;
    if d == 0.0 {
        return Err(Error::Domain(
            "boundary points must lie at different radii".into(),
        ));
    }
    Ok(MultiplierPair {
        w: 2.0 * (psi1 - psi2) / d,
        gamma: (r1 * r1 * psi2 - r2 * r2 * psi1) / d,
    })
}

/// Cells with their ordering key and constraint weight.
struct Candidate {
    idx: usize,
    key: f64,
    weight: f64,
}

/// Sorts by key descending, then by node index (lexicographic `(i, j)`).
fn sort_candidates(c: &mut [Candidate]) {
    c.sort_by(|a, b| match b.key.total_cmp(&a.key) {
        Ordering::Equal => a.idx.cmp(&b.idx),
        o => o,
    });
}

/// Greedy fill until the weights sum to `budget`. Returns the filled values,
/// the key of the marginal cell (or `None` if the candidates ran out), and
/// the weight actually placed.
fn fill(cands: &[Candidate], budget: f64, len: usize, lambda: f64) -> (Vec<f64>, Option<f64>, f64) {
    let mut values = vec![0.0; len];
    let mut acc = 0.0;
    for c in cands {
        if acc + c.weight >= budget {
            let frac = ((budget - acc) / c.weight).clamp(0.0, 1.0);
            values[c.idx] = lambda * frac;
            return (values, Some(c.key), budget);
        }
        values[c.idx] = lambda;
        acc += c.weight;
    }
    (values, None, acc)
}

/// Bathtub maximizer of `∫ ψ ξ` over the admissible class, with its
/// multipliers.
///
/// With `γ = 0` the cells are ranked by `2ψ/r²`, the speed at which each cell
/// leaves `{Ψ > 0}`, and filled until the impulse equals `μ`; the marginal
/// key is `W`. If that set carries more circulation than `ν`, `W` is bisected
/// with an inner circulation fill at level `γ`, and the two bracketing fills
/// are mixed so that the impulse is matched exactly.
pub fn solve_multipliers(psi: &ScalarField, c: &Constraints) -> Result<(MultiplierPair, VorticityField)> {
    let g = *psi.grid();
    let lambda = c.lambda;
    let positive: Vec<(usize, f64, f64)> = (0..g.nr)
        .flat_map(|i| (0..g.nz).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let p = psi.get(i, j);
            (p > 0.0).then(|| (g.idx(i, j), g.r(i), p))
        })
        .collect();
    let vol = |r: f64| 2.0 * PI * r * g.hr() * g.hz();

    let mut cands: Vec<Candidate> = positive
        .iter()
        .map(|&(idx, r, p)| Candidate {
            idx,
            key: 2.0 * p / (r * r),
            weight: lambda * 0.5 * r * r * vol(r),
        })
        .collect();
    sort_candidates(&mut cands);
    let (values, marginal, _) = fill(&cands, c.mu, g.len(), lambda);
    let w0 = marginal.ok_or_else(|| {
        Error::Infeasible(format!(
            "impulse {} exceeds what the positive set of the stream function can carry",
            c.mu
        ))
    })?;
    let xi0 = VorticityField::clamped(g, values, lambda);
    if circulation(&xi0) <= c.nu * (1.0 + 1e-12) {
        return Ok((MultiplierPair { w: w0, gamma: 0.0 }, xi0));
    }

    // circulation-saturating fill at fixed W
    let at_w = |w: f64| -> (VorticityField, f64, f64) {
        let mut cands: Vec<Candidate> = positive
            .iter()
            .filter_map(|&(idx, r, p)| {
                let key = p - 0.5 * w * r * r;
                (key > 0.0).then(|| Candidate {
                    idx,
                    key,
                    weight: lambda * vol(r),
                })
            })
            .collect();
        sort_candidates(&mut cands);
        let (values, marginal, _) = fill(&cands, c.nu, g.len(), lambda);
        let xi = VorticityField::clamped(g, values, lambda);
        let m = impulse(&xi);
        (xi, marginal.unwrap_or(0.0).max(0.0), m)
    };
    let (mut lo, mut hi) = (0.0, w0);
    let (mut xi_lo, mut g_lo, mut m_lo) = at_w(lo);
    if m_lo < c.mu {
        return Err(Error::Infeasible(format!(
            "impulse {} not reachable with circulation at most {}",
            c.mu, c.nu
        )));
    }
    let (mut xi_hi, mut g_hi, mut m_hi) = at_w(hi);
    while hi - lo > 1e-13 * w0 {
        let mid = 0.5 * (lo + hi);
        let (xi, gm, m) = at_w(mid);
        if m >= c.mu {
            (lo, xi_lo, g_lo, m_lo) = (mid, xi, gm, m);
        } else {
            (hi, xi_hi, g_hi, m_hi) = (mid, xi, gm, m);
        }
    }
    let theta = if m_lo > m_hi {
        ((c.mu - m_hi) / (m_lo - m_hi)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let values = xi_lo
        .values()
        .iter()
        .zip(xi_hi.values())
        .map(|(a, b)| theta * a + (1.0 - theta) * b)
        .collect();
    Ok((
        MultiplierPair {
            w: theta * lo + (1.0 - theta) * hi,
            gamma: theta * g_lo + (1.0 - theta) * g_hi,
        },
        VorticityField::clamped(g, values, lambda),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizeOptions {
    pub max_iters: usize,
    /// Stop once `∫ (1 + r²) |ξ_{k+1} - ξ_k| dx` falls to this value.
    pub set_tol: f64,
    /// Steiner step every this many iterations; 0 disables it.
    pub symmetrize_every: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            max_iters: 200,
            set_tol: 1e-10,
            symmetrize_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizerResult {
    pub xi: VorticityField,
    pub constraints: Constraints,
    pub multipliers: MultiplierPair,
    pub energy: f64,
    pub impulse_residual: f64,
    pub circulation: f64,
    pub iterations: usize,
    pub converged: bool,
    pub set_change_trace: Vec<f64>,
    pub energy_trace: Vec<f64>,
}

/// Solid torus of strength `λ` with core radius `R/2` about radius `R`,
/// where `R` makes the continuum impulse equal `μ`.
pub fn torus_seed(grid: &AxiGrid, c: &Constraints) -> VorticityField {
    // ½∫r²ξ = λ π² (19/64) R⁵ for a core of radius R/2
    let big_r = (64.0 * c.mu / (19.0 * PI * PI * c.lambda)).powf(0.2);
    let b = 0.5 * big_r;
    let zc = 0.5 * (grid.z_min + grid.z_max);
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.nr {
        for j in 0..grid.nz {
            let (dr, dz) = (grid.r(i) - big_r, grid.z(j) - zc);
            values.push(if dr * dr + dz * dz < b * b { c.lambda } else { 0.0 });
        }
    }
    VorticityField::clamped(*grid, values, c.lambda)
}

/// Runs the level-set iteration from the torus seed.
pub fn maximize_energy(
    c: &Constraints,
    grid: &AxiGrid,
    opts: &MaximizeOptions,
    eval: &KernelEval,
) -> Result<MaximizerResult> {
    maximize_energy_from(c, &torus_seed(grid, c), opts, eval)
}

pub fn maximize_energy_from(
    c: &Constraints,
    seed: &VorticityField,
    opts: &MaximizeOptions,
    eval: &KernelEval,
) -> Result<MaximizerResult> {
    let grid = *seed.grid();
    let solver = StreamSolver::new(&grid, eval)?;
    let mut xi = VorticityField::clamped(grid, seed.values().to_vec(), c.lambda);
    let mut set_change_trace = Vec::new();
    let mut energy_trace = Vec::new();
    let mut multipliers = MultiplierPair { w: 0.0, gamma: 0.0 };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let psi = solver.solve(&xi)?;
        energy_trace.push(energy(&xi, &psi)?);
        let (m, mut next) = solve_multipliers(&psi, c)?;
        multipliers = m;
        iterations += 1;
        if opts.symmetrize_every > 0 && iterations % opts.symmetrize_every == 0 {
            next = steiner_symmetrize(&next, centroid_z(&next));
        }
        let change = weighted_distance(&next, &xi)?.weighted();
        set_change_trace.push(change);
        xi = next;
        if change <= opts.set_tol {
            converged = true;
            break;
        }
    }
    let psi = solver.solve(&xi)?;
    let e = energy(&xi, &psi)?;
    energy_trace.push(e);
    Ok(MaximizerResult {
        impulse_residual: impulse(&xi) - c.mu,
        circulation: circulation(&xi),
        xi,
        constraints: *c,
        multipliers,
        energy: e,
        iterations,
        converged,
        set_change_trace,
        energy_trace,
    })
}

/// Serializable summary of a [`MaximizerResult`] without the field itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizerSummary {
    pub constraints: Constraints,
    pub multipliers: MultiplierPair,
    pub energy: f64,
    pub impulse_residual: f64,
    pub circulation: f64,
    pub iterations: usize,
    pub converged: bool,
    pub set_change_trace: Vec<f64>,
    pub energy_trace: Vec<f64>,
    pub identities: RingIdentityReport,
}

impl MaximizerResult {
    pub fn summary(&self) -> MaximizerSummary {
        MaximizerSummary {
            constraints: self.constraints,
            multipliers: self.multipliers,
            energy: self.energy,
            impulse_residual: self.impulse_residual,
            circulation: self.circulation,
            iterations: self.iterations,
            converged: self.converged,
            set_change_trace: self.set_change_trace.clone(),
            energy_trace: self.energy_trace.clone(),
            identities: verify_ring_identities(self),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingIdentityReport {
    /// `|7E - 5Wμ - 3γΓ| / (7E)`
    pub identity_residual: f64,
    /// `E / (2μ)`
    pub speed_lower_bound: f64,
    pub speed_bound_holds: bool,
    /// Cells between the support and the nearest outer grid edge.
    pub support_margin_cells: usize,
}

/// Checks `7E = 5Wμ + 3γΓ`, `W ≥ E/(2μ)`, and the support margin.
pub fn verify_ring_identities(res: &MaximizerResult) -> RingIdentityReport {
    let (e, mu) = (res.energy, res.constraints.mu);
    let MultiplierPair { w, gamma } = res.multipliers;
    let identity_residual = (7.0 * e - 5.0 * w * mu - 3.0 * gamma * res.circulation).abs() / (7.0 * e);
    let g = res.xi.grid();
    let mut margin = usize::MAX;
    for i in 0..g.nr {
        for (j, &v) in res.xi.row(i).iter().enumerate() {
            if v > 0.0 {
                margin = margin.min(g.nr - 1 - i).min(j).min(g.nz - 1 - j);
            }
        }
    }
    RingIdentityReport {
        identity_residual,
        speed_lower_bound: e / (2.0 * mu),
        speed_bound_holds: w >= e / (2.0 * mu),
        support_margin_cells: if margin == usize::MAX { 0 } else { margin },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraints_validated() {
        assert!(Constraints::new(0.0, 1.0, 1.0).is_err());
        assert!(Constraints::new(1.0, -1.0, 1.0).is_err());
        assert!(Constraints::new(1.0, 1.0, f64::NAN).is_err());
        assert!(Constraints::new(1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn zero_stream_is_infeasible() {
        let g = AxiGrid::symmetric(8, 16, 2.0, 2.0).unwrap();
        let c = Constraints::new(0.1, 1.0, 1.0).unwrap();
        assert!(matches!(
            solve_multipliers(&ScalarField::zeros(g), &c),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn boundary_multipliers_invert() {
        let (w, gamma) = (0.3, 0.05);
        let psi = |r: f64| 0.5 * w * r * r + gamma;
        let m = multipliers_from_boundary(0.4, psi(0.4), 1.1, psi(1.1)).unwrap();
        assert!((m.w - w).abs() < 1e-14);
        assert!((m.gamma - gamma).abs() < 1e-14);
        assert!(multipliers_from_boundary(1.0, 0.1, 1.0, 0.2).is_err());
    }

    #[test]
    fn fill_is_exact_with_one_fraction() {
        let cands = vec![
            Candidate { idx: 2, key: 3.0, weight: 1.0 },
            Candidate { idx: 0, key: 2.0, weight: 1.0 },
            Candidate { idx: 1, key: 1.0, weight: 1.0 },
        ];
        let (v, marginal, placed) = fill(&cands, 1.5, 3, 2.0);
        assert_eq!(v, vec![1.0, 0.0, 2.0]);
        assert_eq!(marginal, Some(2.0));
        assert_eq!(placed, 1.5);
    }

    #[test]
    fn ties_fill_lexicographically() {
        let mut c = vec![
            Candidate { idx: 5, key: 1.0, weight: 1.0 },
            Candidate { idx: 1, key: 1.0, weight: 1.0 },
            Candidate { idx: 3, key: 2.0, weight: 1.0 },
        ];
        sort_candidates(&mut c);
        let order: Vec<usize> = c.iter().map(|c| c.idx).collect();
        assert_eq!(order, vec![3, 1, 5]);
    }
}
