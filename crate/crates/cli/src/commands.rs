use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use walkdim_core::audit::{audit_pair, audit_table, AuditSubject};
use walkdim_core::besov::{
    alfors_check, critical_exponent_fit, dyadic_grid, harmonic_point_function, pushforward_check, BesovOptions,
    LipschitzMap, PointSet,
};
use walkdim_core::config::{
    parse_boundary_values, parse_budget, parse_constants, parse_ifs_json, parse_rational, preset,
};
use walkdim_core::dirichlet::{
    exit_time_profile, graph_energy, harmonic_extension, harmonic_extension_f64, heat_kernel_diag, log_time_grid,
    raw_energy, ExitTime,
};
use walkdim_core::graph::{Budget, LevelGraph};
use walkdim_core::ifs::{IfsSpec, DEFAULT_SAMPLING_RESOLUTION};
use walkdim_core::resistance::{renorm_factor, walk_dimension, EnergyScale};
use walkdim_core::{Error, Point, Rational};

use crate::{CliError, CliResult, Command, RenormArgs, WindowArgs};

pub const BUDGET_ENV: &str = "WALKDIM_BUDGET";

fn budget() -> CliResult<Budget> {
    match std::env::var(BUDGET_ENV) {
        Ok(text) => Ok(parse_budget(&text)?),
        Err(_) => Ok(Budget::default()),
    }
}

fn load_one(arg: &str) -> CliResult<IfsSpec> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{arg}: {e}")))?;
        return Ok(parse_ifs_json(&text)?);
    }
    preset(arg).ok_or_else(|| CliError::Io(format!("{arg}: no such file or preset")))
}

/// `a*b*c` composes left to right: `(a∘b)∘c`.
pub fn load_ifs(arg: &str) -> CliResult<IfsSpec> {
    let mut parts = arg.split('*');
    let first = load_one(parts.next().unwrap_or_default())?;
    parts.try_fold(first, |acc, part| Ok(IfsSpec::compose(&acc, &load_one(part)?)?))
}

fn rational(text: &str) -> CliResult<Rational> {
    Ok(parse_rational(text)?)
}

fn boundary_values(ifs: &IfsSpec, text: Option<&str>) -> CliResult<Vec<Rational>> {
    let values = match text {
        Some(t) => parse_boundary_values(t)?,
        None => (0..ifs.boundary_len())
            .map(|i| if i == 0 { Rational::one() } else { Rational::zero() })
            .collect(),
    };
    if values.len() != ifs.boundary_len() {
        return Err(CliError::Usage(format!(
            "{} boundary values given, {} has {} boundary points",
            values.len(),
            ifs.name,
            ifs.boundary_len()
        )));
    }
    Ok(values)
}

fn parse_point(text: &str) -> CliResult<Point> {
    let v = parse_boundary_values(text)?;
    match v.as_slice() {
        [x, y] => Ok(Point::new(x.clone(), y.clone())),
        _ => Err(CliError::Usage(format!("point {text:?} must be x,y"))),
    }
}

fn write_csv(path: &PathBuf, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn alpha_f64(ifs: &IfsSpec) -> CliResult<f64> {
    Ok(ifs.hausdorff_dim()?.value())
}

pub fn run(command: &Command) -> CliResult<Value> {
    let budget = budget()?;
    match command {
        Command::Validate { ifs } => {
            let ifs = load_ifs(ifs)?;
            let report = ifs.validate();
            Ok(json!({ "name": ifs.name, "maps": ifs.len(), "passed": report.passed(), "checks": report.checks }))
        }
        Command::Dim { ifs, renorm } => dim(&load_ifs(ifs)?, renorm),
        Command::Graph { ifs, m, out } => graph(&load_ifs(ifs)?, *m, out.as_ref(), &budget),
        Command::Renorm { ifs, renorm } => renorm_cmd(&load_ifs(ifs)?, renorm),
        Command::Harmonic {
            ifs,
            m,
            boundary,
            scale,
            out,
        } => harmonic(
            &load_ifs(ifs)?,
            *m,
            boundary.as_deref(),
            scale.as_deref(),
            out.as_ref(),
            &budget,
        ),
        Command::ExitFit { ifs, m, start, out } => exit_fit(&load_ifs(ifs)?, *m, *start, out.as_ref(), &budget),
        Command::HeatFit {
            ifs,
            m,
            laziness,
            tmin,
            tmax,
            points,
            out,
        } => {
            let ifs = load_ifs(ifs)?;
            let grid = log_time_grid(*tmin, *tmax, *points);
            let h = heat_kernel_diag(&ifs, *m, *laziness, &grid, &budget)?;
            if let Some(path) = out {
                write_csv(
                    path,
                    &["t", "p_t"],
                    h.times
                        .iter()
                        .zip(&h.diag_values)
                        .map(|(t, p)| vec![t.to_string(), p.to_string()]),
                )?;
            }
            let expected = walk_dimension(
                &ifs,
                crate::RenormArgs::default_max_iter(),
                crate::RenormArgs::default_tol(),
            )
            .ok()
            .map(|d| -d.alpha_f64 / d.beta_f64);
            Ok(json!({
                "name": ifs.name,
                "level": m,
                "estimate": h.fit.slope,
                "stderr": h.fit.slope_stderr,
                "window": [h.window.first(), h.window.last()],
                "window_times": h.window,
                "expected": expected,
                "base_vertex": h.base_vertex,
                "plateau": h.plateau,
                "laziness": h.laziness,
            }))
        }
        Command::BesovFit {
            ifs,
            m,
            boundary,
            coordinate,
            window,
            analytic_volume,
            out,
        } => besov_fit(
            &load_ifs(ifs)?,
            *m,
            boundary.as_deref(),
            coordinate.as_deref(),
            window,
            *analytic_volume,
            out.as_ref(),
            &budget,
        ),
        Command::Pushforward {
            ifs,
            m,
            boundary,
            scale,
            translate,
            window,
        } => {
            let ifs = load_ifs(ifs)?;
            let bv = boundary_values(&ifs, boundary.as_deref())?;
            let bv: Vec<f64> = bv.iter().map(Rational::to_f64).collect();
            let (points, u) = harmonic_point_function(&ifs, *m, &bv, &budget)?;
            let t = LipschitzMap::new(rational(scale)?, parse_point(translate)?)?;
            let opts = BesovOptions {
                alpha: alpha_f64(&ifs)?,
                analytic_volume: false,
            };
            let report = pushforward_check(
                &t,
                &points,
                &u,
                &rational(&window.rmin)?,
                &rational(&window.rmax)?,
                &opts,
                &budget,
            )?;
            Ok(json!({
                "name": ifs.name,
                "level": m,
                "map": { "scale": t.scale.to_string(), "translate": t.translation },
                "bilipschitz_constant": report.inflation.to_string(),
                "lp_ratios": report.lp_ratios,
                "lambda_1": report.lambda_1,
                "lambda_2": report.lambda_2,
                "c_prime": report.c_prime,
                "radii": report.radii,
                "inequality_holds": report.inequality_holds,
                "source": { "estimate": report.source.slope, "stderr": report.source.stderr, "window": report.source.window },
                "image": { "estimate": report.image.slope, "stderr": report.image.stderr, "window": report.image.window },
                "estimates_agree": report.estimates_agree,
                "functionals_identical": report.functionals_identical,
            }))
        }
        Command::Alfors {
            ifs,
            samples,
            depth,
            seed,
            alpha,
            centers,
            rmin,
            rmax,
            out,
        } => {
            let ifs = load_ifs(ifs)?;
            let depth = depth.unwrap_or_else(|| ifs.depth_for_resolution(DEFAULT_SAMPLING_RESOLUTION));
            let sample = ifs.sample_measure(depth, *samples, *seed)?;
            let points = PointSet::from_sample(&sample, &ifs)?;
            let alpha = match alpha {
                Some(a) => *a,
                None => alpha_f64(&ifs)?,
            };
            let grid = dyadic_grid(&rational(rmin)?, &rational(rmax)?)?;
            let report = alfors_check(&points, alpha, &grid, *centers)?;
            if let Some(path) = out {
                write_csv(
                    path,
                    &["r", "min_ratio", "median_ratio", "max_ratio"],
                    report.radii.iter().map(|r| {
                        vec![
                            r.r_f64.to_string(),
                            r.min_ratio.to_string(),
                            r.median_ratio.to_string(),
                            r.max_ratio.to_string(),
                        ]
                    }),
                )?;
            }
            Ok(json!({
                "name": ifs.name,
                "samples": samples,
                "depth": depth,
                "seed": seed,
                "alpha": alpha,
                "constant": report.constant,
                "drift": report.drift,
                "centers": report.centers,
                "radii": report.radii,
            }))
        }
        Command::Cut { ifs, m, remove } => {
            let ifs = load_ifs(ifs)?;
            let g = LevelGraph::build(&ifs, *m, &budget)?;
            let removed = remove.iter().map(|p| parse_point(p)).collect::<CliResult<Vec<_>>>()?;
            let components = g.components_after_removal(&removed)?;
            Ok(json!({ "name": ifs.name, "level": m, "removed": removed, "components": components }))
        }
        Command::Compare { ifs, constants, renorm } => compare(ifs, constants, renorm),
    }
}

impl RenormArgs {
    fn default_max_iter() -> usize {
        walkdim_core::resistance::DEFAULT_MAX_ITER
    }

    fn default_tol() -> f64 {
        walkdim_core::resistance::DEFAULT_TOL
    }
}

fn dim(ifs: &IfsSpec, args: &RenormArgs) -> CliResult<Value> {
    ifs.ensure_valid()?;
    let report = walk_dimension(ifs, args.max_iter, args.tol)?;
    let mut v = report.to_json();
    v["name"] = json!(ifs.name);
    v["maps"] = json!(ifs.len());
    v["ratio"] = json!(ifs.ratio().to_string());
    Ok(v)
}

fn renorm_cmd(ifs: &IfsSpec, args: &RenormArgs) -> CliResult<Value> {
    let r = renorm_factor(ifs, args.max_iter, args.tol)?;
    let dims = walk_dimension(ifs, args.max_iter, args.tol)?.to_json();
    Ok(json!({
        "gamma": dims["gamma"],
        "beta": dims["beta"],
        "floats": dims["floats"],
        "name": ifs.name,
        "energy_scale": r.energy_scale.to_json(),
        "energy_scale_f64": r.energy_scale.value(),
        "exact": r.exact,
        "iterations": r.iterations,
        "last_change": r.last_change,
        "fixed_network": match &r.fixed_network {
            Some(net) => net.to_json(),
            None => r.fixed_network_f64.to_json(),
        },
    }))
}

fn graph(ifs: &IfsSpec, m: usize, out: Option<&PathBuf>, budget: &Budget) -> CliResult<Value> {
    let g = LevelGraph::build(ifs, m, budget)?;
    let mut summary = json!({
        "name": ifs.name,
        "level": m,
        "vertex_count": g.vertex_count(),
        "edge_count": g.edge_count(),
        "cell_count": g.cells.len(),
        "boundary": g.boundary,
        "connected": g.is_connected(),
    });
    match out {
        Some(path) => {
            let text = serde_json::to_string(&g.to_json()).expect("json");
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            summary["written"] = json!(path.display().to_string());
        }
        None => summary["graph"] = g.to_json(),
    }
    Ok(summary)
}

fn harmonic(
    ifs: &IfsSpec,
    m: usize,
    boundary: Option<&str>,
    scale: Option<&str>,
    out: Option<&PathBuf>,
    budget: &Budget,
) -> CliResult<Value> {
    let bv = boundary_values(ifs, boundary)?;
    let scale = match scale {
        Some(s) => EnergyScale::Exact(rational(s)?),
        None => renorm_factor(ifs, RenormArgs::default_max_iter(), RenormArgs::default_tol())?.energy_scale,
    };
    let mut levels = Vec::new();
    let mut rows = Vec::new();
    let mut raws = Vec::new();
    let mut level_one = Value::Null;
    for level in 0..=m {
        let entry = match &scale {
            EnergyScale::Exact(lambda) => {
                let (g, u) = harmonic_extension(ifs, level, &bv, budget)?;
                let e = graph_energy(&g, &u, lambda)?;
                let raw = raw_energy(&g, &u)?;
                if level == 1 {
                    level_one = json!(g
                        .vertices
                        .iter()
                        .zip(&u.values)
                        .map(|(p, v)| json!({ "point": p, "value": v.to_string() }))
                        .collect::<Vec<_>>());
                }
                rows.push(vec![level.to_string(), e.to_f64().to_string()]);
                raws.push(raw.to_f64());
                json!({ "m": level, "energy": e.to_string(), "raw_energy": raw.to_string(), "energy_f64": e.to_f64() })
            }
            EnergyScale::Approximate(lambda) => {
                let bvf: Vec<f64> = bv.iter().map(Rational::to_f64).collect();
                let (g, u) = harmonic_extension_f64(ifs, level, &bvf, budget)?;
                let raw = raw_energy(&g, &u)?;
                let e = lambda.powi(level as i32) * raw;
                rows.push(vec![level.to_string(), e.to_string()]);
                raws.push(raw);
                json!({ "m": level, "energy_f64": e, "raw_energy": raw })
            }
        };
        levels.push(entry);
    }
    if let Some(path) = out {
        write_csv(path, &["m", "energy"], rows)?;
    }
    let estimate = (m >= 1).then(|| raws[m - 1] / raws[m]);
    Ok(json!({
        "name": ifs.name,
        "boundary_values": bv.iter().map(Rational::to_string).collect::<Vec<_>>(),
        "energy_scale": scale.to_json(),
        "estimate": estimate,
        "stderr": 0.0,
        "window": [m.saturating_sub(1), m],
        "levels": levels,
        "level1_values": level_one,
    }))
}

fn exit_fit(ifs: &IfsSpec, m: usize, start: usize, out: Option<&PathBuf>, budget: &Budget) -> CliResult<Value> {
    let p = exit_time_profile(ifs, m, start, budget)?;
    if let Some(path) = out {
        write_csv(
            path,
            &["m", "expected_steps"],
            p.entries
                .iter()
                .map(|e| vec![e.level.to_string(), e.expected_steps.value().to_string()]),
        )?;
    }
    let log_base = ifs.ratio().recip()?.ln();
    let betas: Vec<f64> = p
        .entries
        .iter()
        .filter_map(|e| e.ratio)
        .map(|r| r.ln() / log_base)
        .collect();
    let stderr = match betas.as_slice() {
        [.., a, b] => (b - a).abs(),
        _ => 0.0,
    };
    let entries: Vec<Value> = p
        .entries
        .iter()
        .map(|e| {
            let steps = match &e.expected_steps {
                ExitTime::Exact(r) => json!(r.to_string()),
                ExitTime::Approximate(v) => json!(v),
            };
            json!({ "m": e.level, "expected_steps": steps, "exact": e.expected_steps.exact().is_some(), "ratio": e.ratio })
        })
        .collect();
    Ok(json!({
        "name": ifs.name,
        "start": start,
        "estimate": p.beta_hat,
        "stderr": stderr,
        "window": [m.saturating_sub(1), m],
        "time_scale": p.time_scale,
        "entries": entries,
    }))
}

#[allow(clippy::too_many_arguments)]
fn besov_fit(
    ifs: &IfsSpec,
    m: usize,
    boundary: Option<&str>,
    coordinate: Option<&str>,
    window: &WindowArgs,
    analytic_volume: bool,
    out: Option<&PathBuf>,
    budget: &Budget,
) -> CliResult<Value> {
    let bv = boundary_values(ifs, boundary)?;
    let bvf: Vec<f64> = bv.iter().map(Rational::to_f64).collect();
    let (points, harmonic) = harmonic_point_function(ifs, m, &bvf, budget)?;
    let (u, function) = match coordinate {
        None => (harmonic, "harmonic".to_string()),
        Some("x") => (points.coordinate(0), "x".to_string()),
        Some("y") => (points.coordinate(1), "y".to_string()),
        Some(other) => return Err(CliError::Usage(format!("coordinate {other:?} must be x or y"))),
    };
    let opts = BesovOptions {
        alpha: alpha_f64(ifs)?,
        analytic_volume,
    };
    let est = critical_exponent_fit(
        &points,
        &u,
        &rational(&window.rmin)?,
        &rational(&window.rmax)?,
        &opts,
        budget,
    )?;
    if let Some(path) = out {
        write_csv(
            path,
            &["r", "E_tilde", "V_min_ratio", "V_max_ratio"],
            est.scan.values.iter().map(|v| {
                vec![
                    v.r_f64.to_string(),
                    v.e_tilde.to_string(),
                    v.v_min_ratio.to_string(),
                    v.v_max_ratio.to_string(),
                ]
            }),
        )?;
    }
    let beta = walk_dimension(ifs, RenormArgs::default_max_iter(), RenormArgs::default_tol())
        .ok()
        .map(|d| d.beta_f64);
    Ok(json!({
        "name": ifs.name,
        "level": m,
        "function": function,
        "boundary_values": bv.iter().map(Rational::to_string).collect::<Vec<_>>(),
        "estimate": est.slope,
        "stderr": est.stderr,
        "window": [est.window.0, est.window.1],
        "beta_resistance": beta,
        "radii": est.scan.values,
    }))
}

fn compare(paths: &[String], constants: &[String], args: &RenormArgs) -> CliResult<Value> {
    let mut subjects = Vec::new();
    for p in paths {
        subjects.push(AuditSubject::from_ifs(&load_ifs(p)?, args.max_iter, args.tol)?);
    }
    for c in constants {
        let (n, rho, lambda) = parse_constants(c)?;
        subjects.push(
            AuditSubject::from_constants(c.clone(), n, rho, lambda).map_err(|e| match e {
                Error::InvalidArgument(d) => CliError::Core(Error::Parse(d)),
                other => CliError::Core(other),
            })?,
        );
    }
    match subjects.len() {
        0 | 1 => Err(CliError::Usage("compare needs at least two subjects".into())),
        2 => Ok(serde_json::to_value(audit_pair(&subjects[0], &subjects[1])?).expect("json")),
        _ => Ok(json!({ "pairs": serde_json::to_value(audit_table(&subjects)?).expect("json") })),
    }
}
