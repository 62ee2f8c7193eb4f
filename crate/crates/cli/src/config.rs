//! Run configuration read from a TOML file with one level of sections:
//! `[problem]`, `[hardy]`, `[nonlinearity]`, `[weight]`, `[numerics]` and
//! `[output]`. Every key is optional; omitted ones fall back to the preset.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use radial_core::dynamics::Controls;
use radial_core::exponents::l_shift;
use radial_core::manifolds::TraceOptions;
use radial_core::problem::{HardyKind, HardyProfile, Nonlinearity, ProblemSpec, Term, WeightK, WeightKind};
use radial_core::shooting::ShootingOptions;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `n = 4`, `h ≡ 0`, `f = tanh(r-1) u|u|^4`.
    #[default]
    Default,
    /// The default nonlinearity with `h = 0.5 r²/(1+r²)`.
    Hardy,
    /// `n = 4`, `f = u³`: the critical autonomous problem.
    Bubble,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    #[serde(default)]
    preset: Preset,
    n: Option<u32>,
    l_u: Option<f64>,
    l_s: Option<f64>,
    switch_time: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerSection {
    #[serde(default = "one")]
    coef: f64,
    q: f64,
    #[serde(default)]
    delta: f64,
    #[serde(default = "one")]
    sign: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub rho_max: f64,
    pub eps0: f64,
    /// Last time of forward runs.
    pub horizon: f64,
    pub bisect_rel: f64,
    pub interval_samples: usize,
    pub trace_samples: usize,
    pub max_curve_samples: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        let c = Controls::default();
        let s = ShootingOptions::default();
        Numerics {
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            max_step: c.max_step,
            rho_max: c.rho_max,
            eps0: s.eps0,
            horizon: s.horizon,
            bisect_rel: s.bisect_rel,
            interval_samples: s.interval_samples,
            trace_samples: s.trace_samples,
            max_curve_samples: TraceOptions::default().max_samples,
        }
    }
}

impl Numerics {
    pub fn controls(&self) -> Controls {
        Controls {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            rho_max: self.rho_max,
            ..Controls::default()
        }
    }

    pub fn shooting(&self) -> ShootingOptions {
        ShootingOptions {
            controls: self.controls(),
            horizon: self.horizon,
            eps0: self.eps0,
            bisect_rel: self.bisect_rel,
            interval_samples: self.interval_samples,
            trace_samples: self.trace_samples,
        }
    }

    pub fn tracing(&self) -> TraceOptions {
        TraceOptions {
            controls: self.controls(),
            eps0: self.eps0,
            max_samples: self.max_curve_samples,
            ..TraceOptions::default()
        }
    }

    fn check(&self) -> Result<()> {
        self.controls().check()?;
        if !(self.eps0 > 0.0 && self.eps0 < 1e-2) {
            bail!("numerics.eps0 = {} outside (0, 1e-2)", self.eps0);
        }
        if !(self.bisect_rel >= 1e-15 && self.bisect_rel < 1e-2) {
            bail!("numerics.bisect_rel = {} outside [1e-15, 1e-2)", self.bisect_rel);
        }
        if !(self.horizon > 0.0) || self.interval_samples == 0 || self.trace_samples < 2 {
            bail!("numerics.horizon must be positive and sample counts at least 1 (trace: 2)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    problem: ProblemSection,
    hardy: Option<HardyKind>,
    nonlinearity: Option<PowerSection>,
    weight: Option<WeightKind>,
    #[serde(default)]
    numerics: Numerics,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub numerics: Numerics,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { problem: ProblemSpec::default_instance(), numerics: Numerics::default(), out_dir: None }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text)?;
        file.numerics.check()?;
        let problem = build_problem(&file)?;
        Ok(RunConfig { problem, numerics: file.numerics, out_dir: file.output.dir })
    }
}

fn preset(p: Preset) -> Result<ProblemSpec> {
    Ok(match p {
        Preset::Default => ProblemSpec::default_instance(),
        Preset::Hardy => ProblemSpec::hardy_instance(0.5)?,
        Preset::Bubble => ProblemSpec::pure_power(4, 4.0, 1.0, 0.0, 4.0)?,
    })
}

fn build_problem(file: &FileConfig) -> Result<ProblemSpec> {
    let mut p = preset(file.problem.preset)?;
    let sec = &file.problem;
    if let Some(n) = sec.n {
        p.n = n;
    }
    if let Some(h) = &file.hardy {
        p.hardy = HardyProfile { kind: h.clone(), inverted: false };
    }
    let (mut weight, mut power) = match p.nonlinearity.terms.as_slice() {
        [Term::Power { coef, q, delta, weight }] => (
            weight.clone(),
            PowerSection { coef: *coef, q: *q, delta: *delta, sign: p.nonlinearity.sign },
        ),
        _ => bail!("preset nonlinearity is not a single power"),
    };
    let reshaped = file.weight.is_some() || file.nonlinearity.is_some();
    if let Some(w) = &file.weight {
        weight = WeightK { kind: w.clone(), inverted: false };
    }
    if let Some(f) = &file.nonlinearity {
        power = f.clone();
    }
    p.nonlinearity = Nonlinearity {
        sign: power.sign,
        terms: vec![Term::Power { coef: power.coef, q: power.q, delta: power.delta, weight: weight.clone() }],
    };
    if reshaped {
        // exponents that make the nonlinearity asymptotically autonomous
        let lim = weight.limits();
        p.l_u = l_shift(power.q, power.delta + lim.delta0)?;
        p.l_s = l_shift(power.q, power.delta + lim.delta_inf)?;
        if let Some(r) = weight.sign_change_radius() {
            p.switch_time = r.ln();
        }
    }
    if let Some(v) = sec.l_u {
        p.l_u = v;
    }
    if let Some(v) = sec.l_s {
        p.l_s = v;
    }
    if let Some(v) = sec.switch_time {
        p.switch_time = v;
    }
    p.check()?;
    Ok(p)
}
