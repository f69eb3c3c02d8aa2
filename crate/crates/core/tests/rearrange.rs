use proptest::prelude::*;
use vring::functionals::{circulation, energy, impulse, l1_norm, l2_norm, weighted_l1};
use vring::rearrange::{radial_shift, solve_radial_shift_for_impulse, steiner_symmetrize};
use vring::{AxiGrid, KernelEval, StreamSolver, VorticityField};

fn small_grid() -> AxiGrid {
    AxiGrid::symmetric(6, 10, 1.5, 1.5).unwrap()
}

fn field_strategy() -> impl Strategy<Value = VorticityField> {
    let g = small_grid();
    prop::collection::vec(0.0f64..=1.0, g.len()).prop_map(move |v| VorticityField::from_values(g, v, 1.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steiner_preserves_norms_bitwise(xi in field_strategy(), zc in -1.5f64..1.5) {
        let s = steiner_symmetrize(&xi, zc);
        prop_assert_eq!(l1_norm(&s).to_bits(), l1_norm(&xi).to_bits());
        prop_assert_eq!(l2_norm(&s).to_bits(), l2_norm(&xi).to_bits());
        prop_assert_eq!(circulation(&s).to_bits(), circulation(&xi).to_bits());
        prop_assert_eq!(impulse(&s).to_bits(), impulse(&xi).to_bits());
        prop_assert_eq!(weighted_l1(&s).to_bits(), weighted_l1(&xi).to_bits());
    }

    #[test]
    fn steiner_is_idempotent(xi in field_strategy(), zc in -1.0f64..1.0) {
        let once = steiner_symmetrize(&xi, zc);
        let twice = steiner_symmetrize(&once, zc);
        prop_assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn steiner_rows_are_unimodal(xi in field_strategy()) {
        let g = small_grid();
        let s = steiner_symmetrize(&xi, 0.0);
        for i in 0..g.nr {
            let row = s.row(i);
            let peak = row.iter().enumerate().fold(0, |b, (k, &v)| if v > row[b] { k } else { b });
            prop_assert!(row[..=peak].windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(row[peak..].windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn steiner_does_not_lower_energy(xi in field_strategy()) {
        let solver = StreamSolver::new(&small_grid(), &KernelEval::default().with_memo(true)).unwrap();
        let e0 = energy(&xi, &solver.solve(&xi).unwrap()).unwrap();
        let s = steiner_symmetrize(&xi, 0.0);
        let e1 = energy(&s, &solver.solve(&s).unwrap()).unwrap();
        prop_assert!(e1 >= e0 - 1e-10 * e0.abs().max(1.0));
    }

    #[test]
    fn radial_shift_raises_impulse(xi in field_strategy(), k in 1usize..3) {
        // keep the support clear of the outer edge so nothing is shifted out
        let g = small_grid();
        let mut v = xi.values().to_vec();
        v[(g.nr - 3) * g.nz..].fill(0.0);
        let xi = VorticityField::from_values(g, v, 1.0).unwrap();
        let shifted = radial_shift(&xi, k as f64 * g.hr()).unwrap();
        prop_assert!(impulse(&shifted) >= impulse(&xi));
        prop_assert!(shifted.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}

/// A field linear in r is reproduced exactly by the linear interpolation.
#[test]
fn radial_shift_of_linear_profile() {
    let g = AxiGrid::symmetric(20, 8, 2.0, 1.0).unwrap();
    let (alpha, beta) = (0.2, 0.3);
    let values: Vec<f64> = (0..g.nr).flat_map(|i| std::iter::repeat_n(alpha + beta * g.r(i), g.nz)).collect();
    let xi = VorticityField::from_values(g, values, 1.0).unwrap();
    let tau = 0.37;
    let out = radial_shift(&xi, tau).unwrap();
    let (r0, r_last) = (g.r(0), g.r(g.nr - 1));
    for i in 0..g.nr {
        let (r, rs) = (g.r(i), g.r(i) - tau);
        let expected = if rs <= 0.0 {
            0.0
        } else if rs < r0 {
            (alpha + beta * r0) * rs / r
        } else if rs <= r_last {
            (alpha + beta * rs) * rs / r
        } else {
            continue;
        };
        for j in 0..g.nz {
            assert!((out.get(i, j) - expected).abs() < 1e-14, "i={i}: {} vs {expected}", out.get(i, j));
        }
    }
    assert!(radial_shift(&xi, -0.1).is_err());
    assert_eq!(radial_shift(&xi, 0.0).unwrap(), xi);
}

#[test]
fn impulse_matching_shift() {
    let g = AxiGrid::symmetric(32, 32, 3.0, 1.5).unwrap();
    let xi = vring::hill::hill_field_cell_average(&g, &vring::HillParams::new(1.0, 0.8, 0.0).unwrap());
    let target = 1.5 * impulse(&xi);
    let (tau, out) = solve_radial_shift_for_impulse(&xi, target, 1e-10).unwrap();
    assert!(tau > 0.0);
    assert!((impulse(&out) - target).abs() <= 1e-9);
    assert!(solve_radial_shift_for_impulse(&xi, 1e3, 1e-10).is_err());
}
