use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use radial_cli::config::RunConfig;
use radial_cli::output::{canonical_json, curve_csv, events_json, trajectory_csv};
use radial_cli::svg::{render_overlay, render_portrait, Style};
use radial_core::dynamics::p_point;
use radial_core::exponents::{critical_exponents, fowler_params, kelvin_exponent, saddle_window};
use radial_core::manifolds::{continuability_bounds, trace, BoundSide, ManifoldCurve, Side};
use radial_core::problem::{validate, End, ProblemSpec, ValidationGrid};
use radial_core::shooting::{classify, find_a_sequence, find_b_sequence, regular_orbit};

#[derive(Parser)]
#[command(name = "radial", version, about = "Radial solutions of semilinear elliptic equations via the Fowler flow")]
struct Cli {
    /// TOML run configuration; omitted keys use the default instance.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    UnstablePlus,
    UnstableMinus,
    StablePlus,
    StableMinus,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::UnstablePlus => Side::UnstablePlus,
            SideArg::UnstableMinus => Side::UnstableMinus,
            SideArg::StablePlus => Side::StablePlus,
            SideArg::StableMinus => Side::StableMinus,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sequence {
    A,
    B,
}

#[derive(Subcommand)]
enum Command {
    /// Critical exponents for (n, eta, beta), and Fowler data for --l.
    Exponents {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
    },
    /// Grid check of the structural hypotheses.
    Validate,
    /// Regular solution with u(r) r^kappa -> d, integrated to the horizon.
    Integrate {
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
        /// Exponent for the emitted coordinates (default: l_u).
        #[arg(long)]
        l: Option<f64>,
    },
    /// One branch of the unstable or stable set on the section t = tau.
    Trace {
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long, value_enum, default_value = "unstable-plus")]
        side: SideArg,
        /// Largest |parameter| sampled (default: the continuability bound,
        /// or 200 on the stable sides).
        #[arg(long)]
        param_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Shifted stable branches drawn in the SVG overlay.
        #[arg(long, default_value_t = 2)]
        kmax: usize,
    },
    /// Classify the regular solution u(r, d).
    Shoot {
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
    },
    /// Search for A_0 < ... < A_kmax (or the B sequence) and report.
    Structure {
        #[arg(long, default_value_t = 2)]
        kmax: usize,
        #[arg(long, value_enum, default_value = "a")]
        sequence: Sequence,
    },
    /// Phase portrait of the branches at t = tau, with an optional orbit.
    Portrait {
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        d: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
    },
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

fn branch_range(side: Side, tau: f64, problem: &ProblemSpec, l: f64, cfg: &RunConfig) -> Result<f64> {
    if !side.is_unstable() {
        return Ok(200.0);
    }
    let b = continuability_bounds(tau, BoundSide::Regular, problem, l, &cfg.numerics.tracing())?;
    Ok(b.value.finite().map_or(10.0, |d| d * (1.0 - 1e-6)))
}

fn log_mags(top: f64, n: usize) -> Vec<f64> {
    let (a, b) = ((top * 1e-4).ln(), top.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

fn branch(side: Side, tau: f64, problem: &ProblemSpec, l: f64, top: f64, n: usize, cfg: &RunConfig) -> Result<ManifoldCurve> {
    let c = radial_core::manifolds::trace_params(side, tau, &log_mags(top, n.max(2)), problem, l, &cfg.numerics.tracing())?;
    if c.under_resolved {
        eprintln!("warning: {} branch is under-resolved", side.name());
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out_dir = cli.out.clone().or_else(|| cfg.out_dir.clone());
    let out = out_dir.as_deref();
    let p = &cfg.problem;
    let fmt = cli.format;
    let only = |allowed: &[Format], default: Format| -> Result<Format> {
        let f = fmt.unwrap_or(default);
        if !allowed.contains(&f) {
            bail!("this subcommand does not emit the requested format");
        }
        Ok(f)
    };

    match cli.command {
        Command::Exponents { n, eta, beta, l } => {
            only(&[Format::Json], Format::Json)?;
            let n = n.unwrap_or(p.n);
            let eta = eta.unwrap_or_else(|| p.eta());
            let beta = beta.unwrap_or_else(|| p.beta());
            let bundle = critical_exponents(n, eta, beta)?;
            let mut v = serde_json::to_value(bundle)?;
            if let (Some(l), Value::Object(map)) = (l, &mut v) {
                let fp = fowler_params(n, l)?;
                map.insert("l".into(), json!(l));
                map.insert("alpha".into(), json!(fp.alpha));
                map.insert("gamma".into(), json!(fp.gamma));
                map.insert("saddle_eta".into(), json!(saddle_window(n, eta, l)?));
                map.insert("saddle_beta".into(), json!(saddle_window(n, beta, l)?));
                map.insert("kelvin_l".into(), kelvin_exponent(n, l).map_or(Value::Null, |k| json!(k)));
            }
            if let Value::Object(map) = &mut v {
                map.insert("schema".into(), json!(1));
            }
            emit(out, "exponents.json", &canonical_json(&v)?)
        }
        Command::Validate => {
            only(&[Format::Json], Format::Json)?;
            let rep = validate(p, &ValidationGrid::default());
            let failing: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            if !failing.is_empty() {
                eprintln!("hypotheses failing: {}", failing.join(", "));
            }
            emit(out, "validation.json", &canonical_json(&json!({"schema": 1, "checks": rep.checks}))?)
        }
        Command::Integrate { d, l } => {
            let f = only(&[Format::Csv, Format::Json], Format::Csv)?;
            let opts = cfg.numerics.shooting();
            let orbit = regular_orbit(d, p, opts.horizon, &opts)?;
            let states: Vec<_> = orbit.legs.iter().flat_map(|t| t.states.iter().copied()).collect();
            let events: Vec<_> = orbit.legs.iter().flat_map(|t| t.events.iter().copied()).collect();
            eprintln!("class {}", orbit.class.label());
            let l = l.unwrap_or(p.l_u);
            match f {
                Format::Csv => {
                    let mut buf = Vec::new();
                    trajectory_csv(&states, l, p.n, &mut buf)?;
                    emit(out, "trajectory.csv", std::str::from_utf8(&buf)?)?;
                    match out {
                        Some(_) => emit(out, "trajectory.events.json", &events_json(&events)?),
                        None => Ok(()),
                    }
                }
                _ => emit(out, "trajectory.json", &canonical_json(&json!({"schema": 1, "class": orbit.class, "legs": orbit.legs}))?),
            }
        }
        Command::Trace { tau, l, side, param_max, samples, kmax } => {
            let f = only(&[Format::Csv, Format::Json, Format::Svg], Format::Csv)?;
            let tau = tau.unwrap_or(p.switch_time);
            let l = l.unwrap_or(p.l_u);
            let side: Side = side.into();
            let top = match param_max {
                Some(v) => v,
                None => branch_range(side, tau, p, l, &cfg)?,
            };
            if !(top > 0.0) {
                bail!("--param-max must be positive");
            }
            match f {
                Format::Svg => {
                    let unstable = branch(Side::UnstablePlus, tau, p, l, branch_range(Side::UnstablePlus, tau, p, l, &cfg)?, samples, &cfg)?;
                    let sp = branch(Side::StablePlus, tau, p, l, 200.0, samples, &cfg)?;
                    let sm = branch(Side::StableMinus, tau, p, l, 200.0, samples, &cfg)?;
                    let style = Style { clip_radius: 50.0, ..Style::default() };
                    emit(out, "overlay.svg", &render_overlay(&unstable, &[&sp, &sm], kmax, &style)?)
                }
                Format::Csv => {
                    let c = if param_max.is_some() {
                        trace(side, tau, (0.0, top), samples, p, l, &cfg.numerics.tracing())?
                    } else {
                        branch(side, tau, p, l, top, samples, &cfg)?
                    };
                    if let Some(cut) = c.truncated_at {
                        eprintln!("truncated at parameter {cut}");
                    }
                    let mut buf = Vec::new();
                    curve_csv(&c, &mut buf)?;
                    emit(out, &format!("{}.csv", side.name()), std::str::from_utf8(&buf)?)
                }
                _ => {
                    let c = branch(side, tau, p, l, top, samples, &cfg)?;
                    emit(out, &format!("{}.json", side.name()), &canonical_json(&json!({"schema": 1, "curve": c}))?)
                }
            }
        }
        Command::Shoot { d } => {
            only(&[Format::Json], Format::Json)?;
            let opts = cfg.numerics.shooting();
            let c = classify(d, p, opts.horizon, &opts)?;
            eprintln!("class {}", c.label());
            emit(out, "shoot.json", &canonical_json(&json!({"schema": 1, "class": c, "label": c.label()}))?)
        }
        Command::Structure { kmax, sequence } => {
            only(&[Format::Json], Format::Json)?;
            let opts = cfg.numerics.shooting();
            let rep = match sequence {
                Sequence::A => find_a_sequence(kmax, p, &opts)?,
                Sequence::B => find_b_sequence(kmax, p, &opts)?,
            };
            for flag in &rep.caps_and_flags.flags {
                eprintln!("flag: {flag}");
            }
            emit(out, "structure.json", &canonical_json(&rep)?)
        }
        Command::Portrait { tau, d, l } => {
            only(&[Format::Svg], Format::Svg)?;
            let tau = tau.unwrap_or(p.switch_time);
            let l = l.unwrap_or(p.l_u);
            let top = branch_range(Side::UnstablePlus, tau, p, l, &cfg)?;
            let curves = vec![
                branch(Side::UnstablePlus, tau, p, l, top, 160, &cfg)?,
                branch(Side::StablePlus, tau, p, l, 200.0, 160, &cfg)?,
                branch(Side::StableMinus, tau, p, l, 200.0, 160, &cfg)?,
            ];
            let mut trajectories = Vec::new();
            if let Some(d) = d {
                let opts = cfg.numerics.shooting();
                let orbit = regular_orbit(d, p, opts.horizon, &opts)?;
                for leg in orbit.legs {
                    let states = leg.states.iter().map(|s| radial_core::fowler::switch_l(*s, l)).collect::<radial_core::Result<Vec<_>>>()?;
                    trajectories.push(radial_core::dynamics::Trajectory { states, ..leg });
                }
            }
            let end = if tau >= p.switch_time { End::Future } else { End::Past };
            let svg = render_portrait(&curves, &trajectories, p_point(p, l, end), &Style::default())?;
            emit(out, "portrait.svg", &svg)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
