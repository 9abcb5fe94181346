//! End-to-end acceptance run: one pass/fail line per criterion.
//!
//! Built without the libtest harness so the report is always printed:
//! `cargo test -p walkdim-cli --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use serde_json::Value;
use walkdim_core::besov::{
    alfors_check, critical_exponent_fit, dyadic_grid, harmonic_point_function, pushforward_check, BesovOptions,
    LipschitzMap, PointSet,
};
use walkdim_core::dirichlet::{exit_time_profile, graph_energy, harmonic_extension, heat_kernel_diag, log_time_grid};
use walkdim_core::graph::{Budget, LevelGraph};
use walkdim_core::ifs::presets::{segment, sierpinski};
use walkdim_core::{Point, Rational};

type Outcome = Result<String, String>;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn walkdim(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_walkdim"))
        .args(args)
        .output()
        .expect("run walkdim");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), json)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sg_alpha() -> f64 {
    3f64.ln() / 2f64.ln()
}

fn sg_beta() -> f64 {
    5f64.ln() / 2f64.ln()
}

fn exact_renormalization() -> Outcome {
    let (code, v) = walkdim(&["renorm", "sg"]);
    ensure(code == 0, || format!("exit {code}"))?;
    ensure(v["exact"] == true, || format!("exact = {}", v["exact"]))?;
    let scale: Rational = v["energy_scale"]
        .as_str()
        .unwrap_or("")
        .parse()
        .map_err(|e| format!("{e}"))?;
    ensure(scale == q("5/3"), || format!("energy_scale = {scale}"))?;
    Ok(format!("energy_scale = {scale}"))
}

fn product_law() -> Outcome {
    let mut seen = Vec::new();
    for (arg, want) in [("sg*sg", "25/9"), ("sg*sg*sg", "125/27")] {
        let (code, v) = walkdim(&["renorm", arg]);
        ensure(code == 0 && v["exact"] == true, || format!("{arg}: exit {code}, {v}"))?;
        let got: Rational = v["energy_scale"]
            .as_str()
            .unwrap_or("")
            .parse()
            .map_err(|e| format!("{e}"))?;
        ensure(got == q(want), || format!("{arg}: {got} != {want}"))?;
        seen.push(got.to_string());
    }
    Ok(seen.join(", "))
}

fn walk_dimension() -> Outcome {
    let (code, v) = walkdim(&["dim", "sg"]);
    ensure(code == 0, || format!("exit {code}"))?;
    let beta = &v["beta"];
    ensure(beta["argument"] == "5" && beta["base"] == "2", || {
        format!("beta = {beta}")
    })?;
    let value = beta["value"].as_f64().unwrap_or(f64::NAN);
    ensure((value - 2.321928094887362).abs() < 1e-9, || {
        format!("beta float {value}")
    })?;
    let (code, v) = walkdim(&["dim", "segment"]);
    ensure(code == 0 && v["beta"]["rational"] == "2", || {
        format!("segment beta = {}", v["beta"])
    })?;
    let (code, _) = walkdim(&["dim", "no/such/file.json"]);
    ensure(code == 2, || format!("missing file exit {code}"))?;
    Ok(format!("beta(sg) = {}, beta(segment) = 2", beta["expr"]))
}

fn audit_table() -> Outcome {
    let k = ["3,1/2,5/3", "27,1/8,295/63", "81,1/16,1475/189", "81,1/16,1475/189"];
    let mut args = vec!["compare"];
    for c in &k {
        args.extend(["--constants", c]);
    }
    let (code, v) = walkdim(&args);
    ensure(code == 0, || format!("exit {code}: {v}"))?;
    let pairs = v["pairs"].as_array().ok_or("no pairs")?;
    ensure(pairs.len() == 6, || format!("{} pairs", pairs.len()))?;
    let labels = ["K1/K2", "K1/K3", "K1/K4", "K2/K3", "K2/K4", "K3/K4"];
    let expect: [(&str, Option<&str>); 6] = [
        ("DISTINCT_BY_BETA", Some("875 != 885")),
        ("DISTINCT_BY_BETA", Some("4375 != 4425")),
        ("DISTINCT_BY_BETA", Some("4375 != 4425")),
        ("DISTINCT_BY_BETA", Some("885 != 875")),
        ("DISTINCT_BY_BETA", Some("885 != 875")),
        ("INVARIANTS_EQUAL", None),
    ];
    for ((pair, label), (verdict, statement)) in pairs.iter().zip(labels).zip(expect) {
        ensure(pair["verdict"] == verdict, || format!("{label}: {}", pair["verdict"]))?;
        let cert = &pair["certificate"];
        ensure(cert["kind"] == "power_comparison", || {
            format!("{label}: certificate {cert}")
        })?;
        if let Some(s) = statement {
            let shown = [cert["statement"].as_str(), cert["reduced_statement"].as_str()];
            ensure(shown.contains(&Some(s)), || format!("{label}: {cert} lacks {s}"))?;
        }
    }
    Ok("5 DISTINCT_BY_BETA, K3/K4 INVARIANTS_EQUAL".into())
}

fn harmonic_extension_rule() -> Outcome {
    let sg = sierpinski();
    let bv = [Rational::one(), Rational::zero(), Rational::zero()];
    let budget = Budget::default();
    let (g, u) = harmonic_extension(&sg, 1, &bv, &budget).map_err(|e| e.to_string())?;
    let at = |x: (i64, i64), y: (i64, i64)| {
        g.index_of(&Point::ratio(x.0, x.1, y.0, y.1))
            .map(|i| u.values[i].clone())
    };
    let mids = [at((1, 2), (0, 1)), at((0, 1), (1, 2)), at((1, 2), (1, 2))];
    let want = [q("2/5"), q("2/5"), q("1/5")];
    ensure(mids.iter().zip(&want).all(|(m, w)| m.as_ref() == Some(w)), || {
        format!("midpoints {mids:?}")
    })?;
    for m in 0..=4 {
        let (g, u) = harmonic_extension(&sg, m, &bv, &budget).map_err(|e| e.to_string())?;
        let e = graph_energy(&g, &u, &q("5/3")).map_err(|e| e.to_string())?;
        ensure(e == q("2"), || format!("level {m}: energy {e}"))?;
    }
    Ok("(2/5, 2/5, 1/5); energy 2 at m = 0..4".into())
}

fn exit_time_scaling() -> Outcome {
    let p = exit_time_profile(&sierpinski(), 4, 0, &Budget::default()).map_err(|e| e.to_string())?;
    let steps: Vec<Option<&Rational>> = p.entries.iter().map(|e| e.expected_steps.exact()).collect();
    ensure(steps[0] == Some(&q("1")) && steps[1] == Some(&q("5")), || {
        format!("{steps:?}")
    })?;
    for e in &p.entries[2..] {
        let r = e.ratio.unwrap_or(f64::NAN);
        ensure((r / 5.0 - 1.0).abs() < 0.01, || format!("m = {}: ratio {r}", e.level))?;
    }
    let beta_hat = p.beta_hat.ok_or("no beta_hat")?;
    ensure((beta_hat / sg_beta() - 1.0).abs() < 0.02, || {
        format!("beta_hat {beta_hat}")
    })?;
    Ok(format!("T = 1, 5; beta_hat = {beta_hat:.4}"))
}

fn heat_kernel() -> Outcome {
    let grid = log_time_grid(10, 1000, 25);
    let h = heat_kernel_diag(&sierpinski(), 6, 0.5, &grid, &Budget::default()).map_err(|e| e.to_string())?;
    let want = -sg_alpha() / sg_beta();
    let got = h.fit.slope;
    ensure((got - want).abs() <= 0.05, || format!("slope {got} vs {want}"))?;
    Ok(format!("slope {got:.4} vs {want:.4}"))
}

fn besov_exponent() -> Outcome {
    let budget = Budget::default();
    let sg = sierpinski();
    let (ps, u) = harmonic_point_function(&sg, 7, &[1.0, 0.0, 0.0], &budget).map_err(|e| e.to_string())?;
    let opts = BesovOptions {
        alpha: sg_alpha(),
        analytic_volume: false,
    };
    let est = critical_exponent_fit(&ps, &u, &q("1/32"), &q("1/2"), &opts, &budget).map_err(|e| e.to_string())?;
    ensure((est.slope / sg_beta() - 1.0).abs() < 0.07, || {
        format!("sg slope {}", est.slope)
    })?;
    let seg = segment();
    let (ps, u) = harmonic_point_function(&seg, 10, &[1.0, 0.0], &budget).map_err(|e| e.to_string())?;
    let opts = BesovOptions {
        alpha: 1.0,
        analytic_volume: false,
    };
    let seg_est = critical_exponent_fit(&ps, &u, &q("1/32"), &q("1/2"), &opts, &budget).map_err(|e| e.to_string())?;
    ensure((seg_est.slope / 2.0 - 1.0).abs() < 0.05, || {
        format!("segment slope {}", seg_est.slope)
    })?;
    Ok(format!("sg {:.4}, segment {:.4}", est.slope, seg_est.slope))
}

fn pushforward() -> Outcome {
    let budget = Budget::default();
    let (ps, u) = harmonic_point_function(&sierpinski(), 7, &[1.0, 0.0, 0.0], &budget).map_err(|e| e.to_string())?;
    let opts = BesovOptions {
        alpha: sg_alpha(),
        analytic_volume: false,
    };
    let (rmin, rmax) = (q("1/32"), q("1/2"));
    let half = LipschitzMap::scaling(q("1/2")).map_err(|e| e.to_string())?;
    let r = pushforward_check(&half, &ps, &u, &rmin, &rmax, &opts, &budget).map_err(|e| e.to_string())?;
    ensure(r.inequality_holds, || {
        let bad: Vec<_> = r.radii.iter().filter(|x| !x.holds).map(|x| x.r.to_string()).collect();
        format!("inequality fails at {bad:?}")
    })?;
    let combined = r.source.stderr.hypot(r.image.stderr);
    ensure((r.source.slope - r.image.slope).abs() <= 2.0 * combined, || {
        format!(
            "{} ± {} vs {} ± {}",
            r.source.slope, r.source.stderr, r.image.slope, r.image.stderr
        )
    })?;
    for t in [
        LipschitzMap::identity(),
        LipschitzMap::translation(Point::ratio(1, 3, -2, 7)),
    ] {
        let e = pushforward_check(&t, &ps, &u, &rmin, &rmax, &opts, &budget).map_err(|e| e.to_string())?;
        ensure(e.functionals_identical && e.source.slope == e.image.slope, || {
            format!("map {:?} changed the functional", t)
        })?;
    }
    Ok(format!(
        "{:.4} vs {:.4}; identity and translation exact",
        r.source.slope, r.image.slope
    ))
}

fn alfors() -> Outcome {
    let sg = sierpinski();
    let sample = sg.sample_measure(10, 100_000, 42).map_err(|e| e.to_string())?;
    let ps = PointSet::from_sample(&sample, &sg).map_err(|e| e.to_string())?;
    let grid = dyadic_grid(&q("1/64"), &q("1/2")).map_err(|e| e.to_string())?;
    let good = alfors_check(&ps, sg_alpha(), &grid, 1000).map_err(|e| e.to_string())?;
    ensure(good.constant <= 8.0, || format!("C = {}", good.constant))?;
    let bad = alfors_check(&ps, 1.0, &grid, 1000).map_err(|e| e.to_string())?;
    ensure(bad.drift > 4.0, || format!("alpha = 1 drift {}", bad.drift))?;
    Ok(format!("C = {:.3}; alpha = 1 drift {:.2}", good.constant, bad.drift))
}

fn cut_points() -> Outcome {
    let g = LevelGraph::build(&sierpinski(), 1, &Budget::default()).map_err(|e| e.to_string())?;
    let mids = [
        Point::ratio(1, 2, 0, 1),
        Point::ratio(0, 1, 1, 2),
        Point::ratio(1, 2, 1, 2),
    ];
    let n = g.components_after_removal(&mids).map_err(|e| e.to_string())?;
    ensure(n == 3, || format!("{n} components"))?;
    let (code, v) = walkdim(&[
        "cut", "sg", "-m", "1", "--remove", "1/2,0", "--remove", "0,1/2", "--remove", "1/2,1/2",
    ]);
    ensure(code == 0 && v["components"] == 3, || format!("cli: exit {code}, {v}"))?;
    Ok("3 components".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 11] = [
        ("exact renormalization", exact_renormalization, 1),
        ("product law", product_law, 10),
        ("walk dimension", walk_dimension, 10),
        ("audit table", audit_table, 1),
        ("harmonic extension", harmonic_extension_rule, 10),
        ("exit-time scaling", exit_time_scaling, 30),
        ("heat-kernel diagonal", heat_kernel, 60),
        ("Besov critical exponent", besov_exponent, 120),
        ("pushforward", pushforward, 120),
        ("Alfors regularity", alfors, 120),
        ("cut points", cut_points, 10),
    ];
    let mut failed = Vec::new();
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("{detail}; took {elapsed:.2?}, limit {limit} s"))
            }
            other => other,
        };
        match &outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({elapsed:.2?})", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why} ({elapsed:.2?})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: 11/11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
