use std::fmt::Write as _;
use std::path::PathBuf;

use bifcurrents::bifurcation::{
    ddc_mass, ma2_mass, read_field, render, scan_l, support_compare, write_field, FieldFile, MassField, RenderMapping,
    ScalarField, ScanMethod,
};
use bifcurrents::families::{parse_builtin, per_curve_m2, per_locus, Family, PerConfig, UserFamily};
use bifcurrents::greenfn::{green, green_p1};
use bifcurrents::lyapunov::{self, Methods};
use bifcurrents::maps::{parse_map_file, RationalMap};
use bifcurrents::sampling::MCEstimate;
use bifcurrents::verify::{self, Level, Mutation, VerifyOptions};
use num_complex::Complex64;
use serde_json::json;

use crate::error::CliError;
use crate::output::{Artifact, Outcome};
use crate::settings::{read_input, Settings};

/// Runs one subcommand. The flag is false when `verify` found failures.
pub fn run(s: &Settings) -> Result<(Outcome, bool), CliError> {
    let outcome = match s.command.name {
        "green" => cmd_green(s)?,
        "lyapunov" => cmd_lyapunov(s)?,
        "scan" => cmd_scan(s)?,
        "ddc" => cmd_ddc(s)?,
        "ma2" => cmd_ma2(s)?,
        "per" => cmd_per(s)?,
        "render" => cmd_render(s)?,
        "verify" => return cmd_verify(s),
        other => unreachable!("no subcommand {other}"),
    };
    Ok((outcome, true))
}

/// Artifact names and paths the subcommand will write.
pub fn artifact_paths(s: &Settings) -> Result<Vec<(&'static str, PathBuf)>, CliError> {
    let needs_out = matches!(s.command.name, "scan" | "ddc" | "ma2" | "render");
    let out = match (s.get("out"), needs_out) {
        (Some(p), _) => PathBuf::from(p),
        (None, true) => return Err(CliError::validation("out", "required")),
        (None, false) => return Ok(Vec::new()),
    };
    let mut v = vec![("out", out.clone())];
    if s.command.name == "render" {
        v.push(("sidecar", sidecar_path(&out)));
    }
    Ok(v)
}

fn sidecar_path(out: &std::path::Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".txt");
    PathBuf::from(p)
}

/// Prints `text` and mirrors it to `--out` when given.
fn text_outcome(s: &Settings, text: String) -> Outcome {
    let artifacts = s
        .get("out")
        .map(|p| vec![Artifact { name: "out", path: p.into(), bytes: text.clone().into_bytes() }])
        .unwrap_or_default();
    Outcome { stdout: text, artifacts }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn load_map(s: &Settings) -> Result<RationalMap, CliError> {
    let spec = s.required("map")?;
    if spec.starts_with("builtin:") {
        parse_builtin(spec).map_err(|e| CliError::from_family("map", e))
    } else {
        parse_map_file(&read_input("map", spec)?).map_err(|e| CliError::from_map("map", e))
    }
}

fn load_family(s: &Settings) -> Result<Family, CliError> {
    Ok(match s.required("family")? {
        "quadratic" => Family::Quadratic,
        "m2" => Family::M2,
        other => {
            let text = read_input("family", other)?;
            Family::User(UserFamily::parse(&text).map_err(|e| CliError::from_family("family", e))?)
        }
    })
}

fn load_field(s: &Settings, key: &str) -> Result<FieldFile, CliError> {
    read_field(&read_input(key, s.required(key)?)?).map_err(|e| CliError::from_bifurcation(key, e))
}

fn load_scalar(s: &Settings) -> Result<ScalarField, CliError> {
    match load_field(s, "in")? {
        FieldFile::Scalar(f) => Ok(f),
        FieldFile::Mass(m) => Err(CliError::validation("in", format!("expected a scalar field, found {}", m.convention))),
    }
}

fn cmd_green(s: &Settings) -> Result<Outcome, CliError> {
    let f = load_map(s)?;
    let tol = s.positive_f64("tol")?;
    let eval = match (s.get("point"), s.get("lift")) {
        (Some(_), None) => green_p1(&f, &s.point("point")?, tol).map_err(|e| CliError::from_green("point", e))?,
        (None, Some(_)) => {
            let z = s.complex_list("lift")?;
            if z.len() != 2 {
                return Err(CliError::validation("lift", "expected two coordinates z0,z1"));
            }
            green(&f, &z, tol).map_err(|e| CliError::from_green("lift", e))?
        }
        _ => return Err(CliError::validation("point", "give exactly one of point and lift")),
    };
    let text = if s.switch("json")? {
        pretty(&eval)
    } else {
        format!(
            "value {:?}\nerror_bound {:?}\niterations {}\nmap_id {:016x}\n",
            eval.value, eval.error_bound, eval.iterations_used, eval.map_id
        )
    };
    Ok(text_outcome(s, text))
}

fn parse_methods(spec: &str) -> Result<Methods, CliError> {
    let mut m = Methods { closed: false, ergodic: false, cycles: false, integral: false };
    for part in spec.split(',') {
        match part.trim() {
            "all" => m = Methods::ALL,
            "closed" => m.closed = true,
            "ergodic" => m.ergodic = true,
            "cycles" => m.cycles = true,
            "integral" => m.integral = true,
            other => return Err(CliError::validation("method", format!("unknown method {other:?}"))),
        }
    }
    Ok(m)
}

fn estimate_line(out: &mut String, label: &str, e: &MCEstimate) {
    let _ = writeln!(out, "{label} {:?} stderr {:?} samples {}", e.value, e.stderr, e.n_samples);
}

fn cmd_lyapunov(s: &Settings) -> Result<Outcome, CliError> {
    let f = load_map(s)?;
    let methods = parse_methods(s.required("method")?)?;
    let samples: usize = s.parse("samples")?;
    let period: usize = s.parse("period")?;
    if samples < 2 || period == 0 {
        return Err(CliError::validation("samples", "need samples >= 2 and period >= 1"));
    }
    let rep = lyapunov::report(&f, methods, samples, period, s.parse("seed")?)
        .map_err(|e| CliError::from_lyapunov("lyapunov", e))?;
    if s.switch("json")? {
        return Ok(text_outcome(s, pretty(&rep)));
    }
    let mut out = format!("degree {}\n", rep.degree);
    if let Some(c) = &rep.closed {
        let _ = writeln!(out, "closed {:?} error_bound {:?}", c.value, c.error_bound);
    }
    if let Some(e) = &rep.ergodic {
        estimate_line(&mut out, "ergodic", e);
    }
    if let Some(c) = &rep.cycles {
        let _ = writeln!(out, "cycles {:?} period {} points {} excluded {}", c.value, c.period, c.count, c.excluded);
    }
    if let Some(i) = &rep.integral {
        estimate_line(&mut out, "integral", &i.via_fubini_study);
        estimate_line(&mut out, "integral_sphere", &i.via_sphere);
    }
    Ok(text_outcome(s, out))
}

fn cmd_scan(s: &Settings) -> Result<Outcome, CliError> {
    let fam = load_family(s)?;
    let boxes = s.boxes("box")?;
    let shape = s.resolution("res")?;
    if shape.len() != 2 * boxes.len() {
        return Err(CliError::validation("res", format!("{} parameters need {} axes", boxes.len(), 2 * boxes.len())));
    }
    let method = match s.required("method")? {
        "closed" => ScanMethod::Closed { tol: s.positive_f64("tol")? },
        "ergodic" => ScanMethod::Ergodic { samples: s.parse("samples")? },
        other => return Err(CliError::validation("method", format!("unknown method {other:?}"))),
    };
    let field = scan_l(&fam, boxes, shape, method, s.parse("seed")?).map_err(|e| CliError::from_bifurcation("family", e))?;
    let stdout = format!("cells {}\nmasked {}\n", field.len(), field.len() - field.valid_count());
    let bytes = write_field(&FieldFile::Scalar(field)).into_bytes();
    Ok(Outcome { stdout, artifacts: vec![Artifact { name: "out", path: s.required("out")?.into(), bytes }] })
}

fn mass_outcome(s: &Settings, mass: MassField) -> Result<Outcome, CliError> {
    let stdout = format!(
        "convention {}\ntotal {:?}\nclamped_negative {:?}\nmasked {}\n",
        mass.convention,
        mass.total(),
        mass.clamped_negative,
        mass.field.len() - mass.field.valid_count()
    );
    let bytes = write_field(&FieldFile::Mass(mass)).into_bytes();
    Ok(Outcome { stdout, artifacts: vec![Artifact { name: "out", path: s.required("out")?.into(), bytes }] })
}

fn cmd_ddc(s: &Settings) -> Result<Outcome, CliError> {
    let field = load_scalar(s)?;
    mass_outcome(s, ddc_mass(&field).map_err(|e| CliError::from_bifurcation("in", e))?)
}

fn cmd_ma2(s: &Settings) -> Result<Outcome, CliError> {
    let field = load_scalar(s)?;
    let r = s.positive_f64("smoothing")?;
    mass_outcome(s, ma2_mass(&field, r).map_err(|e| CliError::from_bifurcation("in", e))?)
}

fn cmd_per(s: &Settings) -> Result<Outcome, CliError> {
    let fam = load_family(s)?;
    let n: usize = s.parse("n")?;
    if n == 0 {
        return Err(CliError::validation("n", "period must be at least 1"));
    }
    let eta = match (s.get("theta"), s.get("eta")) {
        (Some(_), None) => Complex64::from_polar(1.0, std::f64::consts::TAU * s.parse::<f64>("theta")?),
        (None, Some(_)) => s.complex("eta")?,
        _ => return Err(CliError::validation("theta", "give exactly one of theta and eta")),
    };
    let boxes = s.boxes("box")?;
    if boxes.len() != fam.parameter_dim() {
        return Err(CliError::validation("box", format!("family {} needs {} boxes", fam.name(), fam.parameter_dim())));
    }
    let cfg = PerConfig { grid: s.parse("grid")?, ..PerConfig::default() };
    if cfg.grid < 2 {
        return Err(CliError::validation("grid", "need at least 2 nodes per axis"));
    }
    let json = s.switch("json")?;
    if matches!(fam, Family::M2) {
        if s.get("mass").is_some() {
            return Err(CliError::validation("mass", "support comparison needs a one-parameter family"));
        }
        let g1: usize = s.parse("sigma1-grid")?;
        let pts = per_curve_m2(n, eta, boxes[0], g1, boxes[1], &cfg);
        let text = if json {
            pretty(&json!({ "n": n, "eta": eta, "points": pts }))
        } else {
            let mut out = format!("n {n}\neta {:?} {:?}\npoints {}\n", eta.re, eta.im, pts.len());
            for p in &pts {
                let _ = writeln!(out, "{:?} {:?} {:?} {:?}", p.sigma1.re, p.sigma1.im, p.sigma2.re, p.sigma2.im);
            }
            out
        };
        return Ok(text_outcome(s, text));
    }
    let res = per_locus(&fam, n, eta, boxes[0], &cfg).map_err(|e| CliError::from_family("family", e))?;
    let support = match s.get("mass") {
        None => None,
        Some(_) => {
            let FieldFile::Mass(m) = load_field(s, "mass")? else {
                return Err(CliError::validation("mass", "expected a mass field"));
            };
            let pts: Vec<Complex64> = res.solutions.iter().map(|p| p.lambda).collect();
            let q: f64 = s.parse("quantile")?;
            if !(0.0..=1.0).contains(&q) {
                return Err(CliError::validation("quantile", "must lie in [0, 1]"));
            }
            Some(support_compare(&m, &pts, q, s.parse("radius")?).map_err(|e| CliError::from_bifurcation("mass", e))?)
        }
    };
    let text = if json {
        pretty(&json!({ "per": res, "support": support }))
    } else {
        let mut out = format!(
            "n {n}\neta {:?} {:?}\nsolutions {}\nseeds {} diverged {} rejected {}\n",
            eta.re,
            eta.im,
            res.solutions.len(),
            res.seeds,
            res.diverged,
            res.rejected
        );
        for p in &res.solutions {
            let _ = writeln!(out, "lambda {:?} {:?} residual {:?}", p.lambda.re, p.lambda.im, p.residual);
        }
        if let Some(r) = &support {
            let _ = writeln!(
                out,
                "support quantile {:?} radius {} threshold {:?} points_in_high {:?} high_near_points {:?} off_grid {}",
                r.quantile, r.radius_cells, r.threshold, r.points_in_high, r.high_near_points, r.n_off_grid
            );
        }
        out
    };
    Ok(text_outcome(s, text))
}

fn cmd_render(s: &Settings) -> Result<Outcome, CliError> {
    let file = load_field(s, "in")?;
    let mapping = match s.required("map")? {
        "linear" => RenderMapping::Linear,
        "log" => RenderMapping::Log { floor: s.positive_f64("floor")? },
        other => return Err(CliError::validation("map", format!("unknown mapping {other:?}"))),
    };
    let raster = render(file.field(), mapping);
    if raster.width == 0 || raster.height == 0 {
        return Err(CliError::validation("in", "every cell is masked"));
    }
    let out = PathBuf::from(s.required("out")?);
    let sidecar = format!("{}convention {}\n", raster.sidecar, file.convention());
    Ok(Outcome {
        stdout: format!("width {}\nheight {}\n", raster.width, raster.height),
        artifacts: vec![
            Artifact { name: "out", path: out.clone(), bytes: raster.to_pgm() },
            Artifact { name: "sidecar", path: sidecar_path(&out), bytes: sidecar.into_bytes() },
        ],
    })
}

fn cmd_verify(s: &Settings) -> Result<(Outcome, bool), CliError> {
    let level = match s.required("level")? {
        "quick" => Level::Quick,
        "full" => Level::Full,
        other => return Err(CliError::validation("level", format!("expected quick or full, got {other:?}"))),
    };
    let mut opts = VerifyOptions::new(level);
    opts.seed = s.parse("seed")?;
    if let Some(only) = s.get("only") {
        let ids = only
            .split(',')
            .map(|x| x.trim().parse::<u32>().ok().filter(|i| verify::ALL_CRITERIA.contains(i)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| CliError::validation("only", format!("bad criterion list {only:?}")))?;
        opts.only = Some(ids);
    }
    opts.mutation = match s.get("inject") {
        None => None,
        Some("flip-res-sign") => Some(Mutation::FlipResultantSign),
        Some(other) => return Err(CliError::validation("inject", format!("unknown defect {other:?}"))),
    };
    let report = verify::run(&opts);
    let mut table = String::new();
    for c in &report.criteria {
        let _ = writeln!(
            table,
            "criterion {:>2} {} {} measured {:e} tolerance {:e} ({:.1} s)",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance,
            c.seconds
        );
    }
    let _ = writeln!(table, "overall {} ({:.1} s)", if report.passed { "PASS" } else { "FAIL" }, report.seconds);
    let outcome = match s.get("json") {
        None => Outcome { stdout: table, artifacts: Vec::new() },
        Some("true") => Outcome { stdout: pretty(&report), artifacts: Vec::new() },
        Some(path) => Outcome {
            stdout: table,
            artifacts: vec![Artifact { name: "out", path: path.into(), bytes: pretty(&report).into_bytes() }],
        },
    };
    Ok((outcome, report.passed))
}
