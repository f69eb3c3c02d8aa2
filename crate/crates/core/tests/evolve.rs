use vring::evolve::{cfl_limit, run, step, EvolveConfig, Perturbation, VelocityField};
use vring::functionals::{centroid_z, circulation, impulse, weighted_distance};
use vring::hill::{hill_field_cell_average, HillParams};
use vring::{AxiGrid, Error, KernelEval, ScalarField, StreamSolver};

fn eval() -> KernelEval {
    KernelEval::default().with_memo(true)
}

fn grid() -> AxiGrid {
    AxiGrid::symmetric(48, 96, 3.0, 3.0).unwrap()
}

#[test]
fn one_step_moves_hill_at_its_speed() {
    let g = grid();
    let xi = hill_field_cell_average(&g, &HillParams::unit());
    let psi = StreamSolver::new(&g, &eval()).unwrap().solve(&xi).unwrap();
    let vel = VelocityField::from_stream(&psi);
    let dt = cfl_limit(&vel, 0.5);
    let next = step(&xi, &vel, dt, 0.5).unwrap();
    let speed = (centroid_z(&next) - centroid_z(&xi)) / dt;
    assert!((speed - 2.0 / 15.0).abs() < 0.1 * 2.0 / 15.0, "{speed}");
    assert!(next.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn step_rejects_oversized_dt() {
    let g = grid();
    let xi = hill_field_cell_average(&g, &HillParams::unit());
    let psi = StreamSolver::new(&g, &eval()).unwrap().solve(&xi).unwrap();
    let vel = VelocityField::from_stream(&psi);
    let limit = cfl_limit(&vel, 0.5);
    assert!(matches!(step(&xi, &vel, 2.0 * limit, 0.5), Err(Error::StepSize { .. })));
}

#[test]
fn forward_then_reversed_step_returns_close() {
    // a smooth profile keeps interpolation smearing below the displacement
    let g = grid();
    let xi = Perturbation::Bump(0.6).field(&g).unwrap();
    let psi = StreamSolver::new(&g, &eval()).unwrap().solve(&xi).unwrap();
    let neg = ScalarField::new(g, psi.values().iter().map(|v| -v).collect()).unwrap();
    let (fwd, back) = (VelocityField::from_stream(&psi), VelocityField::from_stream(&neg));
    let dt = cfl_limit(&fwd, 0.5);
    let there = step(&xi, &fwd, dt, 0.5).unwrap();
    let again = step(&there, &back, dt, 0.5).unwrap();
    let moved = weighted_distance(&there, &xi).unwrap().weighted();
    let returned = weighted_distance(&again, &xi).unwrap().weighted();
    assert!(returned < 0.4 * moved, "{returned} vs {moved}");
}

#[test]
fn short_run_conserves_and_logs() {
    let g = AxiGrid::symmetric(32, 64, 3.0, 3.0).unwrap();
    let xi = hill_field_cell_average(&g, &HillParams::unit());
    let cfg = EvolveConfig {
        t_end: 0.5,
        ..EvolveConfig::default()
    };
    let (out, log) = run(&xi, &cfg, &eval()).unwrap();
    let last = log.records.last().unwrap();
    assert_eq!(last.t, 0.5);
    assert!(log.relative_drift(|r| r.circulation) < 5e-2);
    assert!(log.relative_drift(|r| r.impulse) < 5e-2);
    assert!((circulation(&out) - last.circulation).abs() < 1e-12);
    assert!((impulse(&out) - last.impulse).abs() < 1e-12);
    let csv = log.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,l1,l2,impulse,circulation,energy,centroid_z,band_mass_0.5_1.5");
    assert_eq!(lines.count(), log.records.len());
}

#[test]
fn invalid_config_rejected() {
    let g = AxiGrid::symmetric(16, 32, 3.0, 3.0).unwrap();
    let xi = hill_field_cell_average(&g, &HillParams::unit());
    for cfg in [
        EvolveConfig { dt_cfl: 0.0, ..EvolveConfig::default() },
        EvolveConfig { dt_cfl: 1.5, ..EvolveConfig::default() },
        EvolveConfig { t_end: -1.0, ..EvolveConfig::default() },
        EvolveConfig { resolve_every: 0, ..EvolveConfig::default() },
    ] {
        assert!(run(&xi, &cfg, &eval()).is_err(), "{cfg:?}");
    }
}

#[test]
fn perturbation_specs_round_trip() {
    for s in ["none", "radius:1.03", "bump:0.2"] {
        let p: Perturbation = s.parse().unwrap();
        assert_eq!(p.to_string(), s);
    }
    for bad in ["radius", "radius:-1", "bump:x", "spin:2", "none:1"] {
        assert!(bad.parse::<Perturbation>().is_err(), "{bad}");
    }
    let f = Perturbation::Bump(0.2).field(&grid()).unwrap();
    assert!(f.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
}
