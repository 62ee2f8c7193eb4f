//! Classification of regular and fast-decay solutions and the search for
//! the parameters `A_k` at which the regular solution `u(r, d)` decays fast
//! with exactly `k` zeros.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, Controls, Termination, Trajectory};
use crate::error::{domain, Error, Result};
use crate::exponents::{kappa, ExtReal};
use crate::fowler::{switch_l, FowlerState};
use crate::manifolds::{
    continuability_bounds, intersections, seed_stable, seed_unstable, trace_params, BoundSide, Side, TraceOptions,
};
use crate::problem::{validate, ProblemSpec, ValidationGrid};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginBehavior {
    /// `u r^{κ(η)} → d` finite.
    Regular,
    /// Converged to `±P` backwards.
    Singular,
    /// Not continuable down to `r = 0`.
    BlowUp,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndBehavior {
    FastDecay,
    SlowDecay,
    BlowUp,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionClass {
    pub origin_behavior: OriginBehavior,
    pub end_behavior: EndBehavior,
    pub zeros: usize,
    /// Zeros plus the crossing forecast when the run stopped near the origin.
    pub predicted_zeros: usize,
    pub d: Option<f64>,
    #[serde(rename = "L")]
    pub big_l: Option<f64>,
    pub blow_up_radius: Option<f64>,
    /// Sign of the limit point `±P` for slow decay.
    pub p_sign: Option<i8>,
    /// Total change of the lifted angle along the run.
    pub winding: f64,
}

impl SolutionClass {
    /// Short label such as `R0s`, `R2f`, `S1f`, `R0b` or `R1u`.
    pub fn label(&self) -> String {
        let o = match self.origin_behavior {
            OriginBehavior::Regular => 'R',
            OriginBehavior::Singular => 'S',
            OriginBehavior::BlowUp => 'B',
            OriginBehavior::Undetermined => 'U',
        };
        let e = match self.end_behavior {
            EndBehavior::FastDecay => 'f',
            EndBehavior::SlowDecay => 's',
            EndBehavior::BlowUp => 'b',
            EndBehavior::Undetermined => 'u',
        };
        format!("{o}{}{e}", self.zeros)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    pub controls: Controls,
    /// Last time of the forward runs (first time of the backward ones,
    /// with the sign flipped).
    pub horizon: f64,
    pub eps0: f64,
    /// Relative width at which the bisection for `A_k` stops.
    pub bisect_rel: f64,
    /// Classified samples per interval between consecutive `A_k`.
    pub interval_samples: usize,
    /// Parameter samples for each traced curve before refinement.
    pub trace_samples: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            controls: Controls::default(),
            horizon: 100.0,
            eps0: 1e-8,
            bisect_rel: 1e-10,
            interval_samples: 32,
            trace_samples: 160,
        }
    }
}

impl ShootingOptions {
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        ShootingOptions { controls: self.controls.with_rel_tol(rel_tol), ..self }
    }

    fn trace_options(&self) -> TraceOptions {
        TraceOptions { controls: self.controls, eps0: self.eps0, ..TraceOptions::default() }
    }
}

/// Two legs split at the switching time: the first in `l_first` without
/// convergence detection, the second in `l_second` with it.
fn two_legs(seed: FowlerState, switch: f64, end: f64, l_second: f64, problem: &ProblemSpec, controls: &Controls) -> Result<(Option<Trajectory>, Trajectory)> {
    let forward = end > seed.t;
    let before = if forward { seed.t < switch } else { seed.t > switch };
    let (first, start) = if before {
        let leg = integrate(seed, switch, problem, &controls.transport())?;
        if leg.termination != Termination::ReachedTEnd {
            let last = *leg.last();
            return Ok((None, Trajectory { states: vec![last], ..leg }));
        }
        let s = switch_l(*leg.last(), l_second)?;
        (Some(leg), s)
    } else {
        (None, switch_l(seed, l_second)?)
    };
    let second = integrate(start, end, problem, controls)?;
    Ok((first, second))
}

/// Forward run of a regular solution: the legs before and after the
/// switching time, each in its own exponent, and the resulting class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub legs: Vec<Trajectory>,
    pub class: SolutionClass,
}

/// Integrate the regular solution `u(r, d)` forward to `t = horizon`.
pub fn regular_orbit(d: f64, problem: &ProblemSpec, horizon: f64, opts: &ShootingOptions) -> Result<Orbit> {
    if d == 0.0 {
        return Err(domain("classify needs d != 0"));
    }
    opts.controls.check()?;
    let seed = seed_unstable(d, problem, problem.l_u, opts.eps0)?;
    if horizon <= seed.t {
        return Err(domain(format!("horizon {horizon} precedes the seed time {}", seed.t)));
    }
    let (first, second) = two_legs(seed, problem.switch_time, horizon, problem.l_s, problem, &opts.controls)?;
    let zeros = first.as_ref().map_or(0, |t| t.zero_count) + second.zero_count;
    let predicted = first.as_ref().map_or(0, |t| t.zero_count) + second.predicted_zeros();
    let winding = second.last().phi - seed.phi;
    let blown = first.as_ref().and_then(|t| t.blow_up_t).or(second.blow_up_t);
    let mut class = SolutionClass {
        origin_behavior: OriginBehavior::Regular,
        end_behavior: EndBehavior::Undetermined,
        zeros,
        predicted_zeros: predicted,
        d: Some(d),
        big_l: None,
        blow_up_radius: None,
        p_sign: None,
        winding,
    };
    if let Some(t) = blown {
        class.end_behavior = EndBehavior::BlowUp;
        class.blow_up_radius = Some(t.exp());
    } else {
        match second.termination {
            Termination::ConvergedOrigin => {
                class.end_behavior = EndBehavior::FastDecay;
                class.big_l = second.origin_fit.map(|f| f.constant);
            }
            Termination::ConvergedPPlus | Termination::ConvergedPMinus => {
                class.end_behavior = EndBehavior::SlowDecay;
                class.p_sign = Some(if second.termination == Termination::ConvergedPPlus { 1 } else { -1 });
            }
            _ => {}
        }
    }
    let legs = first.into_iter().chain(std::iter::once(second)).collect();
    Ok(Orbit { legs, class })
}

/// Classify the regular solution `u(r, d)` by integrating forward to
/// `t = horizon`.
pub fn classify(d: f64, problem: &ProblemSpec, horizon: f64, opts: &ShootingOptions) -> Result<SolutionClass> {
    Ok(regular_orbit(d, problem, horizon, opts)?.class)
}

/// Classify the fast-decay solution with `u r^{n-2-κ(β)} → L` by
/// integrating backward to `t = -horizon`.
pub fn classify_fast_decay(big_l: f64, problem: &ProblemSpec, horizon: f64, opts: &ShootingOptions) -> Result<SolutionClass> {
    if big_l == 0.0 {
        return Err(domain("classify_fast_decay needs L != 0"));
    }
    opts.controls.check()?;
    let seed = seed_stable(big_l, problem, problem.l_s, opts.eps0)?;
    let end = -horizon;
    if end >= seed.t {
        return Err(domain(format!("horizon {horizon} does not reach before the seed time {}", seed.t)));
    }
    let (first, second) = two_legs(seed, problem.switch_time, end, problem.l_u, problem, &opts.controls)?;
    let zeros = first.as_ref().map_or(0, |t| t.zero_count) + second.zero_count;
    let predicted = first.as_ref().map_or(0, |t| t.zero_count) + second.predicted_zeros();
    let blown = first.as_ref().and_then(|t| t.blow_up_t).or(second.blow_up_t);
    let mut class = SolutionClass {
        origin_behavior: OriginBehavior::Undetermined,
        end_behavior: EndBehavior::FastDecay,
        zeros,
        predicted_zeros: predicted,
        d: None,
        big_l: Some(big_l),
        blow_up_radius: None,
        p_sign: None,
        winding: second.last().phi - seed.phi,
    };
    if let Some(t) = blown {
        class.origin_behavior = OriginBehavior::BlowUp;
        class.blow_up_radius = Some(t.exp());
        return Ok(class);
    }
    match second.termination {
        Termination::ConvergedOrigin => {
            class.origin_behavior = OriginBehavior::Regular;
            class.d = second.origin_fit.map(|f| f.constant);
        }
        Termination::ConvergedPPlus | Termination::ConvergedPMinus => {
            class.origin_behavior = OriginBehavior::Singular;
            class.p_sign = Some(if second.termination == Termination::ConvergedPPlus { 1 } else { -1 });
        }
        _ => {}
    }
    Ok(class)
}

/// Predicted winding of a connection with `k` zeros.
pub fn expected_winding(problem: &ProblemSpec, k: usize) -> f64 {
    let n = problem.n as f64;
    -(k as f64) * PI - (n - 2.0 - kappa(problem.n, problem.beta())).atan() + kappa(problem.n, problem.eta()).atan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceKind {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketSource {
    Intersection,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub k: usize,
    pub value: f64,
    /// Parameter at the other end: signed `L` for `A_k`, signed `d` for `B_k`.
    pub partner: Option<f64>,
    pub zeros: usize,
    pub verified: bool,
    pub winding: f64,
    pub expected_winding: f64,
    pub source: BracketSource,
}

/// Onset of the class `R-k-s` below `A_k`: the last sample of another class
/// and the first sample of the run of `R-k-s` ending at `A_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetBracket {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSample {
    pub param: f64,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalClasses {
    pub lo: f64,
    pub hi: f64,
    pub samples: Vec<IntervalSample>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub d_plus: Option<ExtReal>,
    pub continuability_cap: Option<f64>,
    pub stable_param_max: Option<f64>,
    pub curves_under_resolved: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub schema: u32,
    pub kind: SequenceKind,
    #[serde(rename = "A")]
    pub a_seq: Vec<Connection>,
    #[serde(rename = "a")]
    pub onsets: Vec<OnsetBracket>,
    #[serde(rename = "B")]
    pub b_seq: Vec<Connection>,
    pub intervals: Vec<IntervalClasses>,
    pub caps_and_flags: Diagnostics,
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * (i as f64 + 0.5) / n as f64).exp()).collect()
}

/// Does `d` lie beyond the connection with `k` zeros?
fn beyond(d: f64, k: usize, problem: &ProblemSpec, opts: &ShootingOptions) -> Result<bool> {
    Ok(classify(d, problem, opts.horizon, opts)?.predicted_zeros > k)
}

/// Bisect between `lo` (not beyond) and `hi` (beyond).
fn bisect(mut lo: f64, mut hi: f64, k: usize, problem: &ProblemSpec, opts: &ShootingOptions) -> Result<f64> {
    while hi - lo > opts.bisect_rel * hi {
        let mid = 0.5 * (lo + hi);
        if beyond(mid, k, problem, opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grow a relative bracket around `guess` until it straddles the transition.
fn bracket_near(guess: f64, floor: f64, ceil: f64, k: usize, problem: &ProblemSpec, opts: &ShootingOptions) -> Result<Option<(f64, f64)>> {
    let mut w = 1e-6;
    while w < 0.5 {
        let lo = (guess * (1.0 - w)).max(floor);
        let hi = (guess * (1.0 + w)).min(ceil);
        let (bl, bh) = (beyond(lo, k, problem, opts)?, beyond(hi, k, problem, opts)?);
        if !bl && bh {
            return Ok(Some((lo, hi)));
        }
        if bl && bh && lo <= floor || !bl && !bh && hi >= ceil {
            return Ok(None);
        }
        w *= 10.0;
    }
    Ok(None)
}

/// First transition above `floor` found by a log-spaced sweep.
fn bracket_scan(floor: f64, ceil: f64, k: usize, problem: &ProblemSpec, opts: &ShootingOptions) -> Result<Option<(f64, f64)>> {
    let grid = log_space(floor, ceil, 96);
    let flags: Vec<bool> = grid.par_iter().map(|&d| beyond(d, k, problem, opts)).collect::<Result<_>>()?;
    if flags[0] {
        return Ok(None);
    }
    Ok(flags.iter().position(|b| *b).map(|i| (grid[i - 1], grid[i])))
}

/// Locate `A_0 < ... < A_{k_max}` for the regular solutions of `problem`.
pub fn find_a_sequence(k_max: usize, problem: &ProblemSpec, opts: &ShootingOptions) -> Result<StructureReport> {
    let report = validate(problem, &ValidationGrid::default());
    report.require(&["regular-sequences"])?;
    opts.controls.check()?;
    let topts = opts.trace_options();
    let tau = problem.switch_time;
    let l = problem.l_u;
    let mut diag = Diagnostics::default();

    // phase 1: geometry at the switching section
    let bound = continuability_bounds(tau, BoundSide::Regular, problem, l, &topts)?;
    diag.d_plus = Some(bound.value);
    diag.continuability_cap = Some(bound.cap);
    let d_top = bound.value.finite().unwrap_or(bound.cap).min(bound.cap);
    let unstable = trace_params(Side::UnstablePlus, tau, &log_space(d_top * 1e-4, d_top, opts.trace_samples), problem, l, &topts)?;
    let need = (k_max as f64 + 2.0) * PI;
    let mut l_max = 10.0;
    let (sp, sm) = loop {
        let mags = log_space(l_max * 1e-4, l_max, opts.trace_samples);
        let sp = trace_params(Side::StablePlus, tau, &mags, problem, l, &topts)?;
        let sm = trace_params(Side::StableMinus, tau, &mags, problem, l, &topts)?;
        if sp.theta_span() >= need && sm.theta_span() >= need || l_max >= 1e6 {
            break (sp, sm);
        }
        l_max *= 4.0;
    };
    diag.stable_param_max = Some(l_max);
    diag.curves_under_resolved = unstable.under_resolved || sp.under_resolved || sm.under_resolved;
    let recs = intersections(&unstable, &[&sp, &sm], k_max, problem, &topts)?;
    for r in recs.iter().filter(|r| r.bracket_ok == Some(false)) {
        diag.flags.push(format!("L bracketing violated at j = {} (L* = {:e})", r.j, r.l_star));
    }

    // phase 2: classification bisection, one index at a time
    let mut conns: Vec<Connection> = Vec::new();
    let mut floor = d_top * 1e-6;
    for k in 0..=k_max {
        let guess = recs.iter().find(|r| r.j == k && r.first_in_d).map(|r| r.d_star);
        let mut source = BracketSource::Intersection;
        let mut br = match guess {
            Some(g) if g > floor => bracket_near(g, floor, d_top, k, problem, opts)?,
            _ => None,
        };
        if br.is_none() {
            if guess.is_some() {
                diag.flags.push(format!("intersection j = {k} failed classification and was demoted"));
            }
            source = BracketSource::Scan;
            br = bracket_scan(floor, d_top, k, problem, opts)?;
        }
        let Some((lo, hi)) = br else {
            return Err(Error::Search(format!("no transition for k = {k} in ({floor:e}, {d_top:e})")));
        };
        let a = bisect(lo, hi, k, problem, opts)?;
        let c = classify(a, problem, opts.horizon, opts)?;
        let verified = c.end_behavior == EndBehavior::FastDecay && c.zeros == k;
        if !verified {
            diag.flags.push(format!("A_{k} = {a:e} classified as {}", c.label()));
        }
        conns.push(Connection {
            k,
            value: a,
            partner: c.big_l,
            zeros: c.zeros,
            verified,
            winding: c.winding,
            expected_winding: expected_winding(problem, k),
            source,
        });
        floor = a * (1.0 + 1e-6);
    }

    // interval classes and onset brackets
    let mut intervals = Vec::new();
    let mut onsets = Vec::new();
    let mut prev = 0.0;
    for c in &conns {
        let lo = if prev == 0.0 { c.value * 1e-3 } else { prev * (1.0 + 1e-6) };
        let hi = c.value * (1.0 - 1e-6);
        let ds = log_space(lo, hi, opts.interval_samples);
        let classes: Vec<SolutionClass> = ds.par_iter().map(|&d| classify(d, problem, opts.horizon, opts)).collect::<Result<_>>()?;
        let target = format!("R{}s", c.k);
        let run = classes.iter().rev().take_while(|s| s.label() == target).count();
        let first = classes.len() - run;
        onsets.push(OnsetBracket {
            k: c.k,
            lower: if first == 0 { prev } else { ds[first - 1] },
            upper: if run == 0 { c.value } else { ds[first] },
        });
        intervals.push(IntervalClasses {
            lo,
            hi,
            samples: ds.iter().zip(&classes).map(|(&d, s)| IntervalSample { param: d, class: s.label() }).collect(),
        });
        prev = c.value;
    }

    let b_seq = conns
        .iter()
        .filter_map(|c| {
            c.partner.map(|p| Connection { value: p.abs(), partner: Some(c.value), ..*c })
        })
        .collect();
    Ok(StructureReport { schema: SCHEMA, kind: SequenceKind::A, a_seq: conns, onsets, b_seq, intervals, caps_and_flags: diag })
}

/// Locate `B_0 < ... < B_{k_max}`, the fast-decay constants of the regular
/// fast-decay solutions, through the Kelvin-dual problem.
pub fn find_b_sequence(k_max: usize, problem: &ProblemSpec, opts: &ShootingOptions) -> Result<StructureReport> {
    validate(problem, &ValidationGrid::default()).require(&["fast-decay-sequences"])?;
    let dual = problem.kelvin_dual()?;
    let rep = find_a_sequence(k_max, &dual, opts)?;
    // a regular parameter of the dual is a fast-decay constant here
    Ok(StructureReport {
        schema: SCHEMA,
        kind: SequenceKind::B,
        a_seq: rep.b_seq,
        onsets: rep.onsets,
        b_seq: rep.a_seq,
        intervals: rep.intervals,
        caps_and_flags: rep.caps_and_flags,
    })
}
