//! Subcommand implementations: thin orchestration over ctds-core plus the
//! file formats (JSONL, CSV, P3) and per-run manifests.

use crate::config::Globals;
use crate::{BudgetArgs, CliError, Command, EnsembleKind, FitMode, LabelMode, PlaneArgs};
use ctds_core::analysis::{
    self, basin_labels_ppm, basin_times_ppm, fsle_ppm, map_csv, CellLabel, LabelBy, PlaneSpec,
};
use ctds_core::formula::{parse_dimacs, write_dimacs, CnfFormula, CoreReport};
use ctds_core::generators::{self, generate, Ensemble, EnsembleSpec};
use ctds_core::integrator::{integrate, RunStatus, TraceSpec};
use ctds_core::solver::{self, BatchSpec, SolveConfig, SolveRecord};
use ctds_core::StepControl;
use serde_json::json;
use std::path::{Path, PathBuf};

pub fn dispatch(command: &Command, globals: &Globals) -> Result<(), CliError> {
    match command {
        Command::Gen {
            ensemble,
            k,
            n,
            density,
        } => gen(globals, *ensemble, *k, *n, *density),
        Command::Solve {
            input,
            starts,
            budget,
        } => solve(globals, input, *starts, budget),
        Command::Batch {
            ensemble,
            k,
            density,
            n_list,
            instances,
            filter_sat,
            oracle_budget,
            starts,
            budget,
        } => batch(
            globals,
            *ensemble,
            *k,
            *density,
            n_list,
            *instances,
            *filter_sat,
            *oracle_budget,
            *starts,
            budget,
        ),
        Command::Fit {
            input,
            mode,
            p_lo,
            p_hi,
        } => fit(globals, input, *mode, (*p_lo, *p_hi)),
        Command::Basin {
            input,
            plane,
            label_by,
            enumeration_cap,
            budget,
        } => basin(globals, input, plane, *label_by, *enumeration_cap, budget),
        Command::Fsle {
            input,
            plane,
            eps0,
            ratio,
            directions,
            budget,
        } => fsle(globals, input, plane, *eps0, *ratio, *directions, budget),
        Command::Core { input } => core(globals, input),
        Command::Traj {
            input,
            max_points,
            s_indices,
            a_indices,
            budget,
        } => traj(globals, input, *max_points, s_indices, a_indices, budget),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::runtime(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::runtime(path, e))
}

fn require_out(globals: &Globals, what: &str) -> Result<PathBuf, CliError> {
    globals
        .out
        .clone()
        .ok_or_else(|| CliError::Usage(format!("--out is required ({what})")))
}

/// Sibling manifest path for a single-file output.
fn sibling_manifest(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes the manifest that makes a run reproducible: resolved arguments,
/// seed, and RNG algorithm.
fn write_manifest(
    path: &Path,
    subcommand: &str,
    globals: &Globals,
    args: serde_json::Value,
) -> Result<(), CliError> {
    let manifest = json!({
        "schema_version": solver::SCHEMA_VERSION,
        "rng_algorithm": ctds_core::rng::RNG_ALGORITHM,
        "subcommand": subcommand,
        "seed": globals.seed,
        "eps": globals.eps,
        "threads": globals.threads,
        "args": args,
    });
    write_file(path, &format!("{:#}\n", manifest))
}

fn control_from(globals: &Globals, budget: &BudgetArgs) -> StepControl {
    let mut control = StepControl {
        eps: globals.eps,
        ..Default::default()
    };
    if let Some(t_max) = budget.t_max {
        control.t_max = t_max;
    }
    if let Some(n_step_max) = budget.n_step_max {
        control.n_step_max = n_step_max;
    }
    control
}

fn ensemble_of(kind: EnsembleKind, k: usize) -> Ensemble {
    match kind {
        EnsembleKind::Ksat => Ensemble::RandomKSat { k },
        EnsembleKind::Lop => Ensemble::Lop1in3,
        EnsembleKind::Xorsat => Ensemble::XorSat { k },
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse `{s}`")))
        })
        .collect()
}

fn parse_plane(plane: &PlaneArgs, num_vars: usize) -> Result<PlaneSpec, CliError> {
    let w: Vec<f64> = parse_list(&plane.window, "--window")?;
    if w.len() != 4 {
        return Err(CliError::Usage("--window needs x0,x1,y0,y1".into()));
    }
    let (gw, gh) = plane
        .grid
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
        .ok_or_else(|| CliError::Usage("--grid needs WxH".into()))?;
    if plane.var_i >= num_vars || plane.var_j >= num_vars || plane.var_i == plane.var_j {
        return Err(CliError::Usage(format!(
            "--var-i/--var-j must be distinct and < {num_vars}"
        )));
    }
    Ok(PlaneSpec {
        var_i: plane.var_i,
        var_j: plane.var_j,
        window: (w[0], w[1], w[2], w[3]),
        grid: (gw, gh),
        background_seed: plane.background_seed,
    })
}

fn load_formula(path: &Path) -> Result<CnfFormula, CliError> {
    parse_dimacs(&read_file(path)?).map_err(|e| CliError::runtime(path, e))
}

fn gen(
    globals: &Globals,
    kind: EnsembleKind,
    k: usize,
    n: usize,
    density: f64,
) -> Result<(), CliError> {
    let out = require_out(globals, "path of the instance file")?;
    let spec = EnsembleSpec {
        ensemble: ensemble_of(kind, k),
        num_vars: n,
        density,
        seed: globals.seed,
    };
    let (formula, xor) = generate(&spec).map_err(|e| CliError::Runtime(e.to_string()))?;
    let xor_output = out.extension().is_some_and(|e| e == "xor");
    let text = match (&xor, xor_output) {
        (Some(instance), true) => generators::write_xor(instance),
        (None, true) => {
            return Err(CliError::Usage(
                "a .xor output needs --ensemble xorsat".into(),
            ))
        }
        _ => write_dimacs(&formula),
    };
    write_file(&out, &text)?;
    write_manifest(
        &sibling_manifest(&out),
        "gen",
        globals,
        json!({
            "ensemble": format!("{:?}", spec.ensemble),
            "num_vars": n,
            "density": density,
            "num_constraints": spec.num_constraints(),
            "out": out,
        }),
    )
}

fn solve(
    globals: &Globals,
    input: &Path,
    starts: usize,
    budget: &BudgetArgs,
) -> Result<(), CliError> {
    let formula = load_formula(input)?;
    let config = SolveConfig {
        control: control_from(globals, budget),
        num_parallel_starts: starts,
        seed: globals.seed,
        ..Default::default()
    };
    let record = solver::solve(&formula, &config);
    let line = serde_json::to_string(&record).map_err(|e| CliError::Runtime(e.to_string()))?;
    match &globals.out {
        None => println!("{line}"),
        Some(out) => {
            write_file(out, &format!("{line}\n"))?;
            write_manifest(
                &sibling_manifest(out),
                "solve",
                globals,
                json!({ "input": input, "starts": starts,
                        "t_max": config.control.t_max,
                        "n_step_max": config.control.n_step_max }),
            )?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn batch(
    globals: &Globals,
    kind: EnsembleKind,
    k: usize,
    density: f64,
    n_list: &str,
    instances: usize,
    filter_sat: bool,
    oracle_budget: u64,
    starts: usize,
    budget: &BudgetArgs,
) -> Result<(), CliError> {
    let n_list: Vec<usize> = parse_list(n_list, "--n-list")?;
    let spec = BatchSpec {
        ensemble: ensemble_of(kind, k),
        density,
        n_list: n_list.clone(),
        instances_per_n: instances,
        config: SolveConfig {
            control: control_from(globals, budget),
            num_parallel_starts: starts,
            seed: globals.seed,
            ..Default::default()
        },
        oracle_filter: filter_sat,
        oracle_budget,
        seed: globals.seed,
    };
    let records = solver::run_batch(&spec);
    let mut lines = String::new();
    for record in &records {
        lines.push_str(
            &serde_json::to_string(record).map_err(|e| CliError::Runtime(e.to_string()))?,
        );
        lines.push('\n');
    }
    match &globals.out {
        None => print!("{lines}"),
        Some(out) => {
            write_file(out, &lines)?;
            write_manifest(
                &sibling_manifest(out),
                "batch",
                globals,
                serde_json::to_value(&spec).map_err(|e| CliError::Runtime(e.to_string()))?,
            )?;
        }
    }
    Ok(())
}

fn read_records(path: &Path) -> Result<Vec<SolveRecord>, CliError> {
    read_file(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| CliError::runtime(path, e)))
        .collect()
}

/// Solved-event values and the total run count, per system size.
fn events_by_n(
    records: &[SolveRecord],
    value: impl Fn(&SolveRecord) -> f64,
) -> std::collections::BTreeMap<usize, (Vec<f64>, usize)> {
    let mut groups: std::collections::BTreeMap<usize, (Vec<f64>, usize)> = Default::default();
    for r in records {
        let entry = groups.entry(r.num_vars).or_default();
        entry.1 += 1;
        if r.status == RunStatus::Solved {
            entry.0.push(value(r));
        }
    }
    groups
}

fn fit(
    globals: &Globals,
    input: &Path,
    mode: FitMode,
    window: (f64, f64),
) -> Result<(), CliError> {
    let records = read_records(input)?;
    let all_times: Vec<f64> = records
        .iter()
        .filter(|r| r.status == RunStatus::Solved)
        .map(|r| r.t_solve.unwrap_or(f64::NAN))
        .collect();
    let all_steps: Vec<f64> = records
        .iter()
        .filter(|r| r.status == RunStatus::Solved)
        .map(|r| r.n_step_total as f64)
        .collect();
    let runtime = |e: analysis::AnalysisError| CliError::runtime(input, e);

    // (summary json, points for the companion CSV)
    let (summary, csv_points): (serde_json::Value, Vec<(f64, f64)>) = match mode {
        FitMode::Exp => {
            let fit = analysis::fit_exponential_decay(&all_times, records.len(), window)
                .map_err(runtime)?;
            let points = analysis::survival_points(&all_times, records.len());
            (json!({ "fit": fit, "total": records.len() }), points)
        }
        FitMode::Steppow => {
            let fit =
                analysis::fit_step_powerlaw(&all_steps, records.len(), window).map_err(runtime)?;
            let points = analysis::survival_points(&all_steps, records.len());
            (json!({ "fit": fit, "total": records.len() }), points)
        }
        FitMode::Rate => {
            let mut pairs = Vec::new();
            for (n, (events, total)) in events_by_n(&records, |r| r.t_solve.unwrap_or(f64::NAN)) {
                let fit = analysis::fit_exponential_decay(&events, total, window)
                    .map_err(runtime)?;
                let analysis::FitModel::ExpDecay { rate, .. } = fit.model else {
                    unreachable!()
                };
                pairs.push((n as f64, rate));
            }
            let fit = analysis::fit_rate_scaling(&pairs).map_err(runtime)?;
            (json!({ "fit": fit, "per_n_rates": &pairs }), pairs)
        }
        FitMode::Eta => {
            let mut pairs = Vec::new();
            for (n, (events, total)) in events_by_n(&records, |r| r.n_step_total as f64) {
                let fit =
                    analysis::fit_step_powerlaw(&events, total, window).map_err(runtime)?;
                let analysis::FitModel::StepPowerLaw { eta, .. } = fit.model else {
                    unreachable!()
                };
                pairs.push((n as f64, eta));
            }
            let fit = analysis::fit_eta_scaling(&pairs).map_err(runtime)?;
            (json!({ "fit": fit, "per_n_etas": &pairs }), pairs)
        }
    };

    let text = format!("{:#}\n", summary);
    match &globals.out {
        None => print!("{text}"),
        Some(out) => {
            write_file(out, &text)?;
            let mut csv = String::from("x,p\n");
            for (x, p) in &csv_points {
                csv.push_str(&format!("{x},{p}\n"));
            }
            write_file(&out.with_extension("csv"), &csv)?;
            write_manifest(
                &sibling_manifest(out),
                "fit",
                globals,
                json!({ "input": input, "mode": format!("{mode:?}"),
                        "p_lo": window.0, "p_hi": window.1 }),
            )?;
        }
    }
    Ok(())
}

fn basin(
    globals: &Globals,
    input: &Path,
    plane_args: &PlaneArgs,
    label_mode: LabelMode,
    enumeration_cap: usize,
    budget: &BudgetArgs,
) -> Result<(), CliError> {
    let out = require_out(globals, "map output directory")?;
    std::fs::create_dir_all(&out).map_err(|e| CliError::runtime(&out, e))?;
    let formula = load_formula(input)?;
    let plane = parse_plane(plane_args, formula.num_vars)?;
    let label_by = match label_mode {
        LabelMode::Solution => LabelBy::Solution,
        LabelMode::Cluster => LabelBy::Cluster { enumeration_cap },
    };
    let control = control_from(globals, budget);
    let map =
        analysis::basin_map(&formula, &plane, &control, label_by).map_err(|e| {
            CliError::runtime(input, e)
        })?;

    let label_cells: Vec<i64> = map
        .labels
        .iter()
        .map(|l| match l {
            CellLabel::Label(id) => *id as i64,
            CellLabel::Unresolved => -1,
        })
        .collect();
    let time_cells: Vec<String> = map
        .times
        .iter()
        .map(|t| t.map_or("nan".to_string(), |t| t.to_string()))
        .collect();
    write_file(&out.join("labels.csv"), &map_csv(&label_cells, plane.grid.0))?;
    write_file(&out.join("times.csv"), &map_csv(&time_cells, plane.grid.0))?;
    write_file(&out.join("labels.ppm"), &basin_labels_ppm(&map))?;
    write_file(&out.join("times.ppm"), &basin_times_ppm(&map))?;
    write_file(
        &out.join("labels.json"),
        &format!(
            "{:#}\n",
            json!({ "label_keys": map.label_keys,
                    "unresolved_fraction": map.unresolved_fraction() })
        ),
    )?;
    write_manifest(
        &out.join("manifest.json"),
        "basin",
        globals,
        json!({ "input": input, "plane": plane, "label_by": format!("{label_mode:?}"),
                "enumeration_cap": enumeration_cap, "t_max": control.t_max }),
    )
}

#[allow(clippy::too_many_arguments)]
fn fsle(
    globals: &Globals,
    input: &Path,
    plane_args: &PlaneArgs,
    eps0: f64,
    ratio: f64,
    directions: usize,
    budget: &BudgetArgs,
) -> Result<(), CliError> {
    let out = require_out(globals, "map output directory")?;
    std::fs::create_dir_all(&out).map_err(|e| CliError::runtime(&out, e))?;
    let formula = load_formula(input)?;
    let plane = parse_plane(plane_args, formula.num_vars)?;
    let control = control_from(globals, budget);
    let map = analysis::fsle_map(&formula, &plane, eps0, ratio, directions, &control);
    write_file(&out.join("phi.csv"), &map_csv(&map.phi, plane.grid.0))?;
    write_file(&out.join("phi.ppm"), &fsle_ppm(&map))?;
    write_manifest(
        &out.join("manifest.json"),
        "fsle",
        globals,
        json!({ "input": input, "plane": plane, "eps0": eps0, "ratio": ratio,
                "directions": directions, "t_max": control.t_max,
                "mean_phi": map.mean_phi() }),
    )
}

fn core_json(report: &CoreReport) -> serde_json::Value {
    json!({
        "remaining_clauses": report.remaining_clauses.iter().collect::<Vec<_>>(),
        "remaining_vars": report.remaining_vars.iter().collect::<Vec<_>>(),
        "is_empty": report.is_empty,
    })
}

fn core(globals: &Globals, input: &Path) -> Result<(), CliError> {
    let report = if input.extension().is_some_and(|e| e == "xor") {
        let instance =
            generators::parse_xor(&read_file(input)?).map_err(|e| CliError::runtime(input, e))?;
        generators::leaf_removal_core(&instance)
    } else {
        load_formula(input)?.pure_literal_core()
    };
    let text = format!("{:#}\n", core_json(&report));
    match &globals.out {
        None => print!("{text}"),
        Some(out) => write_file(out, &text)?,
    }
    Ok(())
}

fn traj(
    globals: &Globals,
    input: &Path,
    max_points: usize,
    s_indices: &str,
    a_indices: &str,
    budget: &BudgetArgs,
) -> Result<(), CliError> {
    let formula = load_formula(input)?;
    let s_indices: Vec<usize> = parse_list(s_indices, "--s-indices")?;
    let a_indices: Vec<usize> = parse_list(a_indices, "--a-indices")?;
    if s_indices.iter().any(|&i| i >= formula.num_vars)
        || a_indices.iter().any(|&i| i >= formula.num_clauses())
    {
        return Err(CliError::Usage(
            "--s-indices/--a-indices out of range for this formula".into(),
        ));
    }
    let trace_spec = TraceSpec {
        max_points,
        s_indices: s_indices.clone(),
        a_indices: a_indices.clone(),
    };
    let sys = ctds_core::dynamics::CtdsSystem::new(&formula);
    use rand::Rng;
    let mut rng = ctds_core::rng::stream(globals.seed);
    let s0: Vec<f64> = (0..formula.num_vars).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let control = control_from(globals, budget);
    let outcome = integrate(
        &sys,
        ctds_core::dynamics::ContinuousState::new(s0, formula.num_clauses()),
        &control,
        Some(&trace_spec),
    );
    let trace = outcome.trace.as_deref().unwrap_or(&[]);
    let bundle =
        analysis::trajectory_diagnostics(trace).map_err(|e| CliError::runtime(input, e))?;

    let mut csv = String::from("t,e,v,speed,accel");
    for i in &s_indices {
        csv.push_str(&format!(",s{i}"));
    }
    for m in &a_indices {
        csv.push_str(&format!(",a{m}"));
    }
    csv.push('\n');
    for row in 0..bundle.t.len() {
        csv.push_str(&format!(
            "{},{},{},{},{}",
            bundle.t[row], bundle.e[row], bundle.v[row], bundle.speed[row], bundle.accel[row]
        ));
        for col in &bundle.s_columns {
            csv.push_str(&format!(",{}", col[row]));
        }
        for col in &bundle.a_columns {
            csv.push_str(&format!(",{}", col[row]));
        }
        csv.push('\n');
    }

    let summary = json!({
        "status": format!("{:?}", outcome.status),
        "t_final": outcome.t_final,
        "n_step": outcome.n_step,
        "length_l": outcome.length_l,
        "speed_increment_kurtosis": bundle.speed_increment_kurtosis,
    });
    match &globals.out {
        None => print!("{csv}"),
        Some(out) => {
            write_file(out, &csv)?;
            println!("{summary}");
            write_manifest(
                &sibling_manifest(out),
                "traj",
                globals,
                json!({ "input": input, "max_points": max_points,
                        "s_indices": s_indices, "a_indices": a_indices,
                        "t_max": control.t_max, "summary": summary }),
            )?;
        }
    }
    Ok(())
}
