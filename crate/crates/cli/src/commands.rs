use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use vring::acceptance::{self, Outcome};
use vring::evolve::{self, EvolveConfig, Perturbation};
use vring::fields::elliptic_residual;
use vring::functionals::{orbital_distance, quantities_with, wan_metric, weighted_distance, ShiftScan};
use vring::hill::{hill_field_cell_average, hill_quantities};
use vring::kernel::{f_large_asymptote, f_small_asymptote};
use vring::maximize::{maximize_energy, maximize_energy_from, Constraints, MaximizeOptions};
use vring::snapshot::Snapshot;
use vring::wan::wan_counterexample;
use vring::{AxiGrid, HillParams, KernelEval, StreamSolver, VorticityField};

use crate::{Cli, Command, EvolveOpts, Format, GridArgs};

/// Writes to stdout, treating a closed pipe as a normal end of output.
fn out(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

macro_rules! outln {
    ($($arg:tt)*) => { out(&(format!($($arg)*) + "\n"))? };
}

/// Malformed option values; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: String) -> anyhow::Error {
    UsageError(msg).into()
}

pub fn dispatch(cli: &Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let eval = KernelEval::new(cli.kernel_tol, 512)?.with_memo(!cli.direct_kernel);
    let fmt = cli.format;
    match &cli.command {
        Command::Hill(a) => {
            let p = HillParams::new(a.lambda, a.a, a.c)?;
            let q = hill_quantities(&p);
            emit(fmt, &json!({"lambda": p.lambda, "a": p.a, "c": p.c, "quantities": q}))?;
        }
        Command::KernelTable(a) => kernel_table(fmt, a.s_min, a.s_max, a.points, &eval)?,
        Command::Stream(a) => {
            let xi = initial_field(&a.init, &a.grid)?;
            let psi = StreamSolver::new(xi.grid(), &eval)?.solve(&xi)?;
            let q = quantities_with(&xi, &psi)?;
            let residual = elliptic_residual(&psi, &xi)?;
            if let Some(out) = &a.out {
                Snapshot::scalar("psi", 0.0, &psi)
                    .save(out)
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            emit(fmt, &json!({"quantities": q, "elliptic_residual": residual}))?;
        }
        Command::Compare(a) => {
            let xa = load_vorticity(&a.a)?;
            let xb = load_vorticity(&a.b)?;
            let d = weighted_distance(&xa, &xb)?;
            let mut rec = json!({
                "l1": d.l1, "l2": d.l2, "w1": d.w1,
                "combined": d.combined(), "weighted": d.weighted(),
            });
            if a.orbital {
                rec["orbital"] = serde_json::to_value(orbital_distance(&xa, &xb, &ShiftScan::default())?)?;
            }
            if a.wan {
                rec["wan"] = json!(wan_metric(&xa, &xb)?);
            }
            emit(fmt, &rec)?;
        }
        Command::Maximize(a) => {
            let c = Constraints::new(a.mu, a.nu, a.lambda)?;
            let opts = MaximizeOptions {
                max_iters: a.max_iters,
                set_tol: a.set_tol,
                symmetrize_every: a.symmetrize_every,
            };
            let res = match &a.seed {
                Some(path) => maximize_energy_from(&c, &load_vorticity(path)?, &opts, &eval)?,
                None => {
                    let (nr, nz) = parse_grid(&a.grid)?;
                    let grid = AxiGrid::symmetric(nr, nz, a.rmax, a.zmax)?;
                    maximize_energy(&c, &grid, &opts, &eval)?
                }
            };
            let summary = res.summary();
            if let Some(dir) = &a.out {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                Snapshot::vorticity("xi", 0.0, &res.xi).save(&dir.join("xi.snap"))?;
                fs::write(dir.join("result.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
            }
            emit(fmt, &summary)?;
        }
        Command::Evolve(a) => {
            let xi0 = initial_field(&a.init, &a.grid)?;
            let cfg = evolve_config(&a.opts)?;
            let solver = StreamSolver::new(xi0.grid(), &eval)?;
            if let Some(dir) = &a.out {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let mut count = 0usize;
            let observe = |t: f64, xi: &VorticityField| -> vring::Result<()> {
                if let Some(dir) = &a.out {
                    if count == 0 || (a.snap_every > 0 && count.is_multiple_of(a.snap_every)) {
                        Snapshot::vorticity("xi", t, xi).save(&dir.join(format!("xi_{count:05}.snap")))?;
                    }
                }
                count += 1;
                Ok(())
            };
            let (xi, log) = evolve::run_with_solver(&xi0, &cfg, &solver, observe)?;
            let t_final = log.records.last().map_or(0.0, |r| r.t);
            if let Some(dir) = &a.out {
                Snapshot::vorticity("xi", t_final, &xi).save(&dir.join("xi_final.snap"))?;
                fs::write(dir.join("log.csv"), log.to_csv())?;
            }
            match fmt {
                Format::Csv => out(&log.to_csv())?,
                Format::Json => emit(
                    fmt,
                    &json!({
                        "t_final": t_final,
                        "records": log.records.len(),
                        "drift": {
                            "l1": log.relative_drift(|r| r.l1),
                            "l2": log.relative_drift(|r| r.l2),
                            "impulse": log.relative_drift(|r| r.impulse),
                            "circulation": log.relative_drift(|r| r.circulation),
                            "energy": log.relative_drift(|r| r.energy),
                        },
                        "centroid_speed": log.centroid_speed(),
                    }),
                )?,
            }
        }
        Command::Stability(a) => {
            let pert: Perturbation = a.perturb.parse().map_err(|e| usage(format!("--perturb: {e}")))?;
            let (nr, nz) = parse_grid(&a.grid.grid)?;
            let grid = AxiGrid::symmetric(nr, nz, a.grid.rmax, a.grid.zmax)?;
            let cfg = evolve_config(&a.opts)?;
            let floor = match (a.floor, &pert) {
                (Some(f), _) => Some(f),
                (None, Perturbation::None) => None,
                (None, _) => Some(
                    evolve::stability_experiment(Perturbation::None, &grid, &cfg, &eval, a.factor, None)?
                        .max_distance,
                ),
            };
            let rep = evolve::stability_experiment(pert, &grid, &cfg, &eval, a.factor, floor)?;
            match fmt {
                Format::Csv => {
                    outln!("t,distance");
                    for (t, d) in rep.times.iter().zip(&rep.distances) {
                        outln!("{t:?},{d:?}");
                    }
                }
                Format::Json => emit(fmt, &rep)?,
            }
        }
        Command::Wan(a) => {
            let rep = wan_counterexample(a.a, &a.t)?;
            match fmt {
                Format::Csv => {
                    outln!("t,center,wan_infimum,wan_tau,orbital,orbital_tau,wan_comoving");
                    for s in &rep.samples {
                        outln!(
                            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                            s.t, s.center, s.wan_infimum, s.wan_tau, s.orbital, s.orbital_tau, s.wan_comoving
                        );
                    }
                }
                Format::Json => emit(fmt, &rep)?,
            }
        }
        Command::Verify(a) => {
            let all_ok = verify(&a.only, &eval)?;
            return Ok(ExitCode::from(if all_ok { 0 } else { 3 }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(only: &[u8], eval: &KernelEval) -> Result<bool> {
    if let Some(bad) = only.iter().find(|&&k| !(1..=12).contains(&k)) {
        return Err(usage(format!("--only: no criterion {bad}")));
    }
    let mut all_ok = true;
    for k in 1..=12u8 {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let outcome: Outcome = match k {
            1 => acceptance::criterion_1()?,
            2 => acceptance::criterion_2()?,
            3 => acceptance::criterion_3(eval)?,
            4 => acceptance::criterion_4(eval)?,
            5 => acceptance::criterion_5(eval)?,
            6 => acceptance::criterion_6(eval)?,
            7 => acceptance::criterion_7(eval)?,
            8 => acceptance::criterion_8(),
            9 => acceptance::criterion_9(eval)?,
            10 => acceptance::criterion_10(eval)?,
            11 => acceptance::criterion_11()?,
            _ => acceptance::criterion_12(eval)?,
        };
        all_ok &= outcome.pass;
        outln!("{}", outcome.line());
    }
    Ok(all_ok)
}

fn kernel_table(fmt: Format, s_min: f64, s_max: f64, points: usize, eval: &KernelEval) -> Result<()> {
    if !(s_min > 0.0 && s_max > s_min && s_max.is_finite()) || points < 2 {
        return Err(usage(format!(
            "need 0 < s-min < s-max and at least 2 points, got [{s_min}, {s_max}] with {points}"
        )));
    }
    let step = (s_max / s_min).ln() / (points - 1) as f64;
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let s = if k + 1 == points { s_max } else { s_min * (k as f64 * step).exp() };
        rows.push((s, eval.f_profile(s)?, f_small_asymptote(s), f_large_asymptote(s)));
    }
    match fmt {
        Format::Csv => {
            outln!("s,F,asymptote_small,asymptote_large");
            for (s, f, a, b) in rows {
                outln!("{s:?},{f:?},{a:?},{b:?}");
            }
        }
        Format::Json => {
            let v: Vec<Value> = rows
                .into_iter()
                .map(|(s, f, a, b)| json!({"s": s, "F": f, "asymptote_small": a, "asymptote_large": b}))
                .collect();
            outln!("{}", serde_json::to_string_pretty(&v)?);
        }
    }
    Ok(())
}

/// Prints a record as pretty JSON, or as a two-line CSV with dotted column
/// names for nested objects and `;`-joined arrays.
fn emit<T: Serialize>(fmt: Format, rec: &T) -> Result<()> {
    let v = serde_json::to_value(rec)?;
    match fmt {
        Format::Json => outln!("{}", serde_json::to_string_pretty(&v)?),
        Format::Csv => {
            let mut cols = Map::new();
            flatten("", &v, &mut cols);
            let keys: Vec<&str> = cols.keys().map(String::as_str).collect();
            let vals: Vec<String> = cols.values().map(csv_cell).collect();
            outln!("{}", keys.join(","));
            outln!("{}", vals.join(","));
        }
    }
    Ok(())
}

fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let parsed = s
        .split_once(['x', 'X'])
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
    parsed.ok_or_else(|| usage(format!("--grid: expected NRxNZ, got '{s}'")))
}

/// `hill:LAMBDA,A,C` on the requested grid, or a vorticity snapshot file.
fn initial_field(spec: &str, g: &GridArgs) -> Result<VorticityField> {
    if let Some(rest) = spec.strip_prefix("hill:") {
        let nums: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| usage(format!("--init: bad number in '{spec}'")))?;
        let [lambda, a, c] = nums[..] else {
            return Err(usage(format!("--init: expected hill:LAMBDA,A,C, got '{spec}'")));
        };
        let (nr, nz) = parse_grid(&g.grid)?;
        let grid = AxiGrid::symmetric(nr, nz, g.rmax, g.zmax)?;
        return Ok(hill_field_cell_average(&grid, &HillParams::new(lambda, a, c)?));
    }
    load_vorticity(Path::new(spec))
}

fn load_vorticity(path: &Path) -> Result<VorticityField> {
    let snap = Snapshot::load(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(snap.to_vorticity()?)
}

fn evolve_config(o: &EvolveOpts) -> Result<EvolveConfig> {
    let bands = o
        .bands
        .split(',')
        .filter(|b| !b.trim().is_empty())
        .map(|b| {
            let (lo, hi) = b.split_once(':').ok_or_else(|| anyhow!("band '{b}' is not A:B"))?;
            Ok((lo.trim().parse::<f64>()?, hi.trim().parse::<f64>()?))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| usage(format!("--bands: {e}")))?;
    let cfg = EvolveConfig {
        dt_cfl: o.cfl,
        t_end: o.t_end,
        resolve_every: o.resolve_every,
        diag_every: o.diag_every,
        bands,
    };
    cfg.validate()?;
    Ok(cfg)
}
