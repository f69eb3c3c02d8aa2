//! Steiner symmetrization in z and the radial shift away from the axis.

use crate::error::{Error, Result};
use crate::fields::VorticityField;
use crate::functionals::impulse;

/// Position of the symmetry plane on the half-grid of node and face planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Center {
    /// Centre on node `j0`.
    Node(isize),
    /// Centre on the face between nodes `j0` and `j0 + 1`.
    Face(isize),
}

fn snap_center(z_min: f64, hz: f64, z_center: f64) -> Center {
    // half-index 2k+1 is node k, 2k is the lower face of node k
    let half = ((z_center - z_min) / (0.5 * hz)).round() as isize;
    if half.rem_euclid(2) == 1 {
        Center::Node((half - 1) / 2)
    } else {
        Center::Face(half / 2 - 1)
    }
}

/// Node order used to lay out a row in descending value order.
fn placement_order(center: Center, nz: usize) -> Vec<usize> {
    let n = nz as isize;
    let mut order = Vec::with_capacity(nz);
    let push = |k: isize, order: &mut Vec<usize>| {
        if (0..n).contains(&k) {
            order.push(k as usize);
        }
    };
    // offsets are generated until the order covers every node of the row
    let mut step = 0isize;
    while order.len() < nz {
        match center {
            Center::Node(j0) => {
                if step == 0 {
                    push(j0, &mut order);
                } else {
                    push(j0 - step, &mut order);
                    push(j0 + step, &mut order);
                }
            }
            Center::Face(j0) => {
                push(j0 + 1 + step, &mut order);
                push(j0 - step, &mut order);
            }
        }
        step += 1;
    }
    order
}

/// Lays out each constant-r row in symmetric decreasing order about
/// `z_center`, snapped to the nearest node or face plane.
///
/// Each output row is a permutation of the input row. Centred on a node the
/// largest value sits on that node and the rest alternate below then above;
/// centred on a face they alternate above then below.
pub fn steiner_symmetrize(xi: &VorticityField, z_center: f64) -> VorticityField {
    let g = *xi.grid();
    let order = placement_order(snap_center(g.z_min, g.hz(), z_center), g.nz);
    let mut out = vec![0.0; g.len()];
    let mut sorted = Vec::with_capacity(g.nz);
    for i in 0..g.nr {
        sorted.clear();
        sorted.extend_from_slice(xi.row(i));
        sorted.sort_by(|a, b| b.total_cmp(a));
        let row = &mut out[i * g.nz..(i + 1) * g.nz];
        for (&v, &j) in sorted.iter().zip(&order) {
            row[j] = v;
        }
    }
    VorticityField::clamped(g, out, xi.cap())
}

/// `ξ_τ(r, z) = ((r - τ)/r) ξ(r - τ, z)` for `r ≥ τ`, zero below.
///
/// `ξ(r - τ)` is interpolated linearly between node radii, with an even
/// extension below the first node and zero beyond the last.
pub fn radial_shift(xi: &VorticityField, tau: f64) -> Result<VorticityField> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("radial shift must be nonnegative, got {tau}")));
    }
    let g = *xi.grid();
    if tau == 0.0 {
        return Ok(xi.clone());
    }
    let hr = g.hr();
    let mut out = vec![0.0; g.len()];
    for i in 0..g.nr {
        let r = g.r(i);
        let rs = r - tau;
        if rs <= 0.0 {
            continue;
        }
        let factor = rs / r;
        // node k sits at (k + ½) hr
        let x = rs / hr - 0.5;
        let (lo, w) = if x < 0.0 {
            (0usize, 0.0)
        } else {
            (x.floor() as usize, x - x.floor())
        };
        if lo >= g.nr {
            continue;
        }
        let row_lo = xi.row(lo);
        let hi = lo + 1;
        for j in 0..g.nz {
            let v_hi = if hi < g.nr { xi.get(hi, j) } else { 0.0 };
            let v = (1.0 - w) * row_lo[j] + w * v_hi;
            out[g.idx(i, j)] = factor * v;
        }
    }
    Ok(VorticityField::clamped(g, out, xi.cap()))
}

/// Smallest shift found by bracketing and bisection whose impulse matches
/// `target_mu` to `tol`.
pub fn solve_radial_shift_for_impulse(
    xi: &VorticityField,
    target_mu: f64,
    tol: f64,
) -> Result<(f64, VorticityField)> {
    let mu0 = impulse(xi);
    if target_mu < mu0 - tol {
        return Err(Error::Domain(format!(
            "target impulse {target_mu} is below the current impulse {mu0}"
        )));
    }
    if (target_mu - mu0).abs() <= tol {
        return Ok((0.0, xi.clone()));
    }
    let g = xi.grid();
    let mut lo = 0.0;
    let mut hi = g.hr();
    let mut field_hi = radial_shift(xi, hi)?;
    while impulse(&field_hi) < target_mu {
        lo = hi;
        hi *= 2.0;
        if hi > g.r_max {
            return Err(Error::Infeasible(format!(
                "impulse {target_mu} not reachable by a radial shift within r_max = {}",
                g.r_max
            )));
        }
        field_hi = radial_shift(xi, hi)?;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let field = radial_shift(xi, mid)?;
        let m = impulse(&field);
        if (m - target_mu).abs() <= tol {
            return Ok((mid, field));
        }
        if m < target_mu {
            lo = mid;
        } else {
            hi = mid;
            field_hi = field;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok((hi, field_hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AxiGrid;

    fn row_field(row: &[f64]) -> VorticityField {
        let nz = row.len();
        let g = AxiGrid::new(4, nz, 1.0, 0.0, nz as f64).unwrap();
        let mut v = Vec::new();
        for _ in 0..4 {
            v.extend_from_slice(row);
        }
        VorticityField::from_values(g, v, 10.0).unwrap()
    }

    #[test]
    fn node_centred_layout() {
        let xi = row_field(&[0.0, 3.0, 1.0, 2.0, 0.0]);
        let out = steiner_symmetrize(&xi, 2.5);
        assert_eq!(out.row(0), &[0.0, 2.0, 3.0, 1.0, 0.0]);
    }

    #[test]
    fn face_centred_layout_starts_above() {
        let xi = row_field(&[1.0, 4.0, 3.0, 2.0]);
        let out = steiner_symmetrize(&xi, 2.0);
        assert_eq!(out.row(0), &[1.0, 3.0, 4.0, 2.0]);
    }

    #[test]
    fn off_centre_rows_keep_every_value() {
        let xi = row_field(&[5.0, 1.0, 4.0, 2.0, 3.0, 0.5]);
        let out = steiner_symmetrize(&xi, 0.5);
        assert_eq!(out.row(0), &[5.0, 4.0, 3.0, 2.0, 1.0, 0.5]);
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_center(0.0, 1.0, 2.5), Center::Node(2));
        assert_eq!(snap_center(0.0, 1.0, 2.0), Center::Face(1));
        assert_eq!(snap_center(0.0, 1.0, 2.4), Center::Node(2));
        assert_eq!(snap_center(0.0, 1.0, 0.0), Center::Face(-1));
    }

    #[test]
    fn negative_shift_rejected() {
        let xi = row_field(&[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(radial_shift(&xi, -0.1), Err(Error::Domain(_))));
        assert_eq!(radial_shift(&xi, 0.0).unwrap(), xi);
    }

    #[test]
    fn target_below_current_rejected() {
        let xi = row_field(&[0.0, 1.0, 0.0, 0.0]);
        let mu = impulse(&xi);
        assert!(solve_radial_shift_for_impulse(&xi, 0.5 * mu, 1e-12).is_err());
        let (tau, same) = solve_radial_shift_for_impulse(&xi, mu, 1e-12).unwrap();
        assert_eq!(tau, 0.0);
        assert_eq!(same, xi);
    }
}
