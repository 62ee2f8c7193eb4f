//! Branches of the unstable set (trajectories leaving the origin as
//! `t → -∞`) and of the stable set (reaching it as `t → +∞`), seeded on the
//! linear eigendirections and transported to a section `t = τ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, Controls, Termination};
use crate::error::{domain, Error, Result};
use crate::exponents::{alpha, kappa, ExtReal};
use crate::fowler::{switch_l, FowlerState};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    UnstablePlus,
    UnstableMinus,
    StablePlus,
    StableMinus,
}

impl Side {
    pub fn is_unstable(self) -> bool {
        matches!(self, Side::UnstablePlus | Side::UnstableMinus)
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::UnstablePlus | Side::StablePlus => 1.0,
            Side::UnstableMinus | Side::StableMinus => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::UnstablePlus => "unstable-plus",
            Side::UnstableMinus => "unstable-minus",
            Side::StablePlus => "stable-plus",
            Side::StableMinus => "stable-minus",
        }
    }
}

/// Angle of a seed: the eigendirection for a positive parameter, half a turn
/// clockwise from it for a negative one.
fn seed_angle(slope: f64, param: f64) -> f64 {
    let base = slope.atan();
    if param < 0.0 { base - PI } else { base }
}

/// Start of the regular solution with `u r^{κ(η)} → d` on the linear
/// unstable direction `(1, -κ(η))`, placed where `|x| = eps0`.
pub fn seed_unstable(d: f64, problem: &ProblemSpec, l: f64, eps0: f64) -> Result<FowlerState> {
    let a = alpha(l);
    let k = kappa(problem.n, problem.eta());
    let rate = a - k;
    if !(rate > 0.0) || !(eps0 > 0.0) {
        return Err(domain(format!("no unstable direction at the origin for l = {l}")));
    }
    let t0 = (eps0 / d.abs().max(f64::MIN_POSITIVE)).ln() / rate;
    if d == 0.0 {
        return Ok(FowlerState { t: eps0.ln() / rate, x: 0.0, y: 0.0, l, phi: seed_angle(-k, 1.0) });
    }
    let x = d * (rate * t0).exp();
    Ok(FowlerState { t: t0, x, y: -k * x, l, phi: seed_angle(-k, d) })
}

/// Start of the fast-decay solution with `u r^{n-2-κ(β)} → L` on the
/// linear stable direction `(1, -(n-2-κ(β)))`, placed where `|x| = eps0`.
pub fn seed_stable(big_l: f64, problem: &ProblemSpec, l: f64, eps0: f64) -> Result<FowlerState> {
    let n = problem.n as f64;
    let a = alpha(l);
    let g = a + 2.0 - n;
    let k = kappa(problem.n, problem.beta());
    let rate = g + k;
    if !(rate < 0.0) || !(eps0 > 0.0) {
        return Err(domain(format!("no stable direction at infinity for l = {l}")));
    }
    let slope = -(n - 2.0 - k);
    if big_l == 0.0 {
        return Ok(FowlerState { t: eps0.ln() / rate, x: 0.0, y: 0.0, l, phi: seed_angle(slope, 1.0) });
    }
    let t1 = (eps0 / big_l.abs()).ln() / rate;
    let x = big_l * (rate * t1).exp();
    Ok(FowlerState { t: t1, x, y: slope * x, l, phi: seed_angle(slope, big_l) })
}

/// Relative change of the transported state at `t_check` when the seed
/// amplitude is halved.
pub fn richardson_gap(side: Side, param: f64, problem: &ProblemSpec, eps0: f64, t_check: f64, controls: &Controls) -> Result<f64> {
    let c = controls.transport();
    let run = |e: f64| -> Result<FowlerState> {
        let s = if side.is_unstable() {
            seed_unstable(param, problem, problem.l_u, e)?
        } else {
            seed_stable(param, problem, problem.l_s, e)?
        };
        let tr = integrate(s, t_check, problem, &c)?;
        if tr.termination != Termination::ReachedTEnd {
            return Err(Error::SectionEmpty(t_check));
        }
        Ok(*tr.last())
    };
    let (a, b) = (run(eps0)?, run(0.5 * eps0)?);
    Ok((a.x - b.x).hypot(a.y - b.y) / a.rho().max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub controls: Controls,
    pub eps0: f64,
    /// Largest angle gap between neighbouring samples before refinement.
    pub max_gap: f64,
    /// Largest gap in `ln R` between neighbours before refinement.
    pub max_log_gap: f64,
    pub max_samples: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { controls: Controls::default(), eps0: 1e-8, max_gap: 0.2, max_log_gap: 0.5, max_samples: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// Signed `d` (unstable sides) or `L` (stable sides).
    pub param: f64,
    /// Angle lifted continuously from the seed direction.
    pub theta: f64,
    pub r: f64,
    pub state: FowlerState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldCurve {
    pub side: Side,
    pub tau: f64,
    pub l: f64,
    /// Ordered by increasing `|param|`.
    pub samples: Vec<CurveSample>,
    /// Smallest `|param|` whose trajectory blew up before reaching `tau`.
    pub truncated_at: Option<f64>,
    pub under_resolved: bool,
}

impl ManifoldCurve {
    pub fn theta_span(&self) -> f64 {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.theta), hi.max(s.theta)));
        hi - lo
    }
}

enum Transport {
    Reached(CurveSample),
    Lost,
}

/// Transport one seed to the section and express it in exponent `l`.
fn transport(side: Side, param: f64, tau: f64, problem: &ProblemSpec, l: f64, opts: &TraceOptions) -> Result<Transport> {
    let seed = if side.is_unstable() {
        seed_unstable(param, problem, problem.l_u, opts.eps0)?
    } else {
        seed_stable(param, problem, problem.l_s, opts.eps0)?
    };
    if side.is_unstable() != (seed.t < tau) {
        return Err(domain(format!("section tau = {tau} lies beyond the seed time {}", seed.t)));
    }
    let tr = integrate(seed, tau, problem, &opts.controls.transport())?;
    if tr.termination != Termination::ReachedTEnd {
        return Ok(Transport::Lost);
    }
    let state = switch_l(*tr.last(), l)?;
    Ok(Transport::Reached(CurveSample { param, theta: state.phi, r: state.rho(), state }))
}

/// Point of a branch at the section, `None` when the trajectory does not
/// reach it.
pub fn curve_point(side: Side, param: f64, tau: f64, problem: &ProblemSpec, l: f64, opts: &TraceOptions) -> Result<Option<CurveSample>> {
    Ok(match transport(side, param, tau, problem, l, opts)? {
        Transport::Reached(s) => Some(s),
        Transport::Lost => None,
    })
}

/// Trace a branch for `|param|` uniformly spaced in `param_range`.
pub fn trace(
    side: Side,
    tau: f64,
    param_range: (f64, f64),
    n_samples: usize,
    problem: &ProblemSpec,
    l: f64,
    opts: &TraceOptions,
) -> Result<ManifoldCurve> {
    let (lo, hi) = param_range;
    if !(lo >= 0.0 && hi > lo) || n_samples < 2 {
        return Err(domain("param_range must satisfy 0 <= lo < hi with at least two samples"));
    }
    let mags: Vec<f64> = (0..n_samples)
        .map(|i| lo + (hi - lo) * i as f64 / (n_samples - 1) as f64)
        .filter(|&m| m > 0.0)
        .collect();
    trace_params(side, tau, &mags, problem, l, opts)
}

/// Trace a branch on the given parameter magnitudes, refining where
/// neighbours are far apart in angle or log-radius.
pub fn trace_params(side: Side, tau: f64, mags: &[f64], problem: &ProblemSpec, l: f64, opts: &TraceOptions) -> Result<ManifoldCurve> {
    let sgn = side.sign();
    let mut mags: Vec<f64> = mags.iter().copied().filter(|m| *m > 0.0).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let eval = |ms: &[f64]| -> Result<Vec<(f64, Option<CurveSample>)>> {
        ms.par_iter()
            .map(|&m| curve_point(side, sgn * m, tau, problem, l, opts).map(|p| (m, p)))
            .collect()
    };
    let mut points: Vec<(f64, Option<CurveSample>)> = eval(&mags)?;
    let mut under_resolved = false;
    loop {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cut = points.iter().position(|p| p.1.is_none()).unwrap_or(points.len());
        let mut extra = Vec::new();
        for w in points[..cut].windows(2) {
            let (a, b) = (w[0].1.as_ref().unwrap(), w[1].1.as_ref().unwrap());
            let far = (a.theta - b.theta).abs() > opts.max_gap
                || (a.r.ln() - b.r.ln()).abs() > opts.max_log_gap;
            let mid = 0.5 * (w[0].0 + w[1].0);
            if far && mid > w[0].0 && mid < w[1].0 {
                extra.push(mid);
            }
        }
        if extra.is_empty() {
            break;
        }
        if points.len() + extra.len() > opts.max_samples {
            under_resolved = true;
            break;
        }
        points.extend(eval(&extra)?);
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cut = points.iter().position(|p| p.1.is_none());
    let truncated_at = cut.map(|i| sgn * points[i].0);
    let samples: Vec<CurveSample> = points[..cut.unwrap_or(points.len())].iter().map(|p| p.1.unwrap()).collect();
    if samples.is_empty() {
        return Err(Error::SectionEmpty(tau));
    }
    if samples.windows(2).any(|w| (w[0].theta - w[1].theta).abs() >= 0.5 * PI) {
        under_resolved = true;
    }
    Ok(ManifoldCurve { side, tau, l, samples, truncated_at, under_resolved })
}

/// Angle of the tangent to a branch at the origin on the section `tau`,
/// estimated from a seed whose transported amplitude is about `1e-6`.
pub fn tangent_angle(side: Side, tau: f64, problem: &ProblemSpec, opts: &TraceOptions) -> Result<f64> {
    let n = problem.n as f64;
    let small = 1e-6;
    let param = if side.is_unstable() {
        let rate = alpha(problem.l_u) - kappa(problem.n, problem.eta());
        small * (-rate * tau).exp()
    } else {
        let rate = alpha(problem.l_s) + 2.0 - n + kappa(problem.n, problem.beta());
        small * (-rate * tau).exp()
    };
    let p = curve_point(side, side.sign() * param, tau, problem, problem.l_u, opts)?
        .ok_or(Error::SectionEmpty(tau))?;
    Ok(p.theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionRecord {
    pub j: usize,
    pub d_star: f64,
    pub l_star: f64,
    /// `(Θ, R)` of the unstable point.
    pub point: (f64, f64),
    /// Distance between the matched points after refinement.
    pub gap: f64,
    pub first_in_d: bool,
    /// Whether `|L̂↓_j| < |L*_j| < |L̂↑_j|` holds; `None` when the crossings
    /// of `Θ = ±π/2` are not covered by the traced stable branch.
    pub bracket_ok: Option<bool>,
}

fn shift_for(j: usize) -> (Side, f64) {
    let k = (j / 2) as f64;
    if j % 2 == 0 { (Side::StablePlus, -2.0 * k * PI) } else { (Side::StableMinus, -2.0 * k * PI) }
}

/// Crossing of segments `p0p1` and `q0q1`: parameters `(s, u)` in `[0, 1]²`.
fn segment_cross(p0: (f64, f64), p1: (f64, f64), q0: (f64, f64), q1: (f64, f64)) -> Option<(f64, f64)> {
    let r = (p1.0 - p0.0, p1.1 - p0.1);
    let s = (q1.0 - q0.0, q1.1 - q0.1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den == 0.0 {
        return None;
    }
    let qp = (q0.0 - p0.0, q0.1 - p0.1);
    let a = (qp.0 * s.1 - qp.1 * s.0) / den;
    let b = (qp.0 * r.1 - qp.1 * r.0) / den;
    if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
        Some((a, b))
    } else {
        None
    }
}

/// Smallest `|L|` at which the shifted branch crosses `Θ = level`.
fn first_level(curve: &ManifoldCurve, shift: f64, level: f64) -> Option<f64> {
    curve.samples.windows(2).find_map(|w| {
        let (a, b) = (w[0].theta + shift - level, w[1].theta + shift - level);
        if a == 0.0 {
            return Some(w[0].param.abs());
        }
        if a * b < 0.0 {
            let s = a / (a - b);
            Some(w[0].param.abs() + s * (w[1].param.abs() - w[0].param.abs()))
        } else {
            None
        }
    })
}

/// Crossings of the unstable-plus curve with the shifted stable branches
/// `Γ_j`, `j = 0..=k_max`, refined by subdividing both parameter intervals.
pub fn intersections(
    unstable: &ManifoldCurve,
    stables: &[&ManifoldCurve],
    k_max: usize,
    problem: &ProblemSpec,
    opts: &TraceOptions,
) -> Result<Vec<IntersectionRecord>> {
    for s in stables {
        if (s.tau - unstable.tau).abs() > 1e-12 || (s.l - unstable.l).abs() > 1e-12 {
            return Err(Error::SectionMismatch(unstable.tau, s.tau));
        }
    }
    let tau = unstable.tau;
    let l = unstable.l;
    let mut out = Vec::new();
    for j in 0..=k_max {
        let (side, shift) = shift_for(j);
        let Some(stable) = stables.iter().find(|c| c.side == side) else {
            continue;
        };
        let up = |s: &CurveSample| (s.theta, s.r);
        let sp = |s: &CurveSample| (s.theta + shift, s.r);
        let mut found = Vec::new();
        for (iu, wu) in unstable.samples.windows(2).enumerate() {
            let (ulo, uhi) = (wu[0].theta.min(wu[1].theta), wu[0].theta.max(wu[1].theta));
            for (is, ws) in stable.samples.windows(2).enumerate() {
                let (a, b) = (ws[0].theta + shift, ws[1].theta + shift);
                if a.max(b) < ulo || a.min(b) > uhi {
                    continue;
                }
                if segment_cross(up(&wu[0]), up(&wu[1]), sp(&ws[0]), sp(&ws[1])).is_some() {
                    found.push((iu, is));
                }
            }
        }
        let mut recs = Vec::new();
        for (iu, is) in found {
            let u = [unstable.samples[iu], unstable.samples[iu + 1]];
            let s = [stable.samples[is], stable.samples[is + 1]];
            if let Some(rec) = refine(u, s, shift, j, tau, problem, l, opts)? {
                recs.push(rec);
            }
        }
        let (lo_level, hi_level) = (first_level(stable, shift, -0.5 * PI), first_level(stable, shift, 0.5 * PI));
        for r in &mut recs {
            let down = if j == 0 { Some(0.0) } else { lo_level };
            r.bracket_ok = match (down, hi_level) {
                (Some(a), Some(b)) => Some(a < r.l_star.abs() && r.l_star.abs() < b),
                _ => None,
            };
        }
        out.extend(recs);
    }
    // minimality in d, each index above the previous first crossing
    let mut prev = 0.0;
    for j in 0..=k_max {
        let best = out
            .iter()
            .enumerate()
            .filter(|(_, r)| r.j == j && r.d_star > prev)
            .min_by(|a, b| a.1.d_star.total_cmp(&b.1.d_star))
            .map(|(i, _)| i);
        match best {
            Some(i) => {
                out[i].first_in_d = true;
                prev = out[i].d_star;
            }
            None => break,
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    mut u: [CurveSample; 2],
    mut s: [CurveSample; 2],
    shift: f64,
    j: usize,
    tau: f64,
    problem: &ProblemSpec,
    l: f64,
    opts: &TraceOptions,
) -> Result<Option<IntersectionRecord>> {
    let up = |c: &CurveSample| (c.theta, c.r);
    let sp = |c: &CurveSample| (c.theta + shift, c.r);
    let side_u = Side::UnstablePlus;
    let side_s = shift_for(j).0;
    let mut gap = f64::INFINITY;
    let mut best = (u[0], s[0]);
    for _ in 0..80 {
        let Some((a, b)) = segment_cross(up(&u[0]), up(&u[1]), sp(&s[0]), sp(&s[1])) else {
            return Ok(None);
        };
        let pu = (u[0].theta + a * (u[1].theta - u[0].theta), u[0].r + a * (u[1].r - u[0].r));
        let du = u[0].param + a * (u[1].param - u[0].param);
        let ls = s[0].param + b * (s[1].param - s[0].param);
        let cu = curve_point(side_u, du, tau, problem, l, opts)?;
        let cs = curve_point(side_s, ls, tau, problem, l, opts)?;
        let (Some(cu), Some(cs)) = (cu, cs) else {
            return Ok(None);
        };
        gap = (cu.theta - cs.theta - shift).hypot(cu.r - cs.r);
        best = (cu, cs);
        let scale = pu.1.abs().max(1.0);
        if gap < 1e-9 * scale {
            break;
        }
        // keep the sub-segments that still cross
        let mut next = None;
        'outer: for uu in [[u[0], cu], [cu, u[1]]] {
            for ss in [[s[0], cs], [cs, s[1]]] {
                if segment_cross(up(&uu[0]), up(&uu[1]), sp(&ss[0]), sp(&ss[1])).is_some() {
                    next = Some((uu, ss));
                    break 'outer;
                }
            }
        }
        match next {
            Some((uu, ss)) => {
                u = uu;
                s = ss;
            }
            None => break,
        }
        if (u[1].param - u[0].param).abs() <= 1e-15 * u[0].param.abs() {
            break;
        }
    }
    let (cu, cs) = best;
    Ok(Some(IntersectionRecord {
        j,
        d_star: cu.param,
        l_star: cs.param,
        point: (cu.theta, cu.r),
        gap,
        first_in_d: false,
        bracket_ok: None,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    /// Largest `d` whose regular solution reaches the section.
    Regular,
    /// Largest `L` whose fast-decay solution reaches it backwards.
    FastDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuabilityBound {
    pub value: ExtReal,
    /// Largest parameter tried by the sweep.
    pub cap: f64,
}

/// Boundary between surviving and blowing-up parameters at the section.
pub fn continuability_bounds(tau: f64, side: BoundSide, problem: &ProblemSpec, l: f64, opts: &TraceOptions) -> Result<ContinuabilityBound> {
    let cap = 1e6;
    let curve_side = match side {
        BoundSide::Regular => Side::UnstablePlus,
        BoundSide::FastDecay => Side::StablePlus,
    };
    let survives = |p: f64| -> Result<bool> { Ok(curve_point(curve_side, p, tau, problem, l, opts)?.is_some()) };
    let (mut lo, mut hi): (f64, f64);
    if survives(1.0)? {
        lo = 1.0;
        loop {
            let next = (lo * 2.0).min(cap);
            if !survives(next)? {
                hi = next;
                break;
            }
            if next >= cap {
                return Ok(ContinuabilityBound { value: ExtReal::PosInf, cap });
            }
            lo = next;
        }
    } else {
        hi = 1.0;
        loop {
            let next = hi / 2.0;
            if next < 1e-12 {
                return Ok(ContinuabilityBound { value: ExtReal::Finite(0.0), cap });
            }
            if survives(next)? {
                lo = next;
                break;
            }
            hi = next;
        }
    }
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if survives(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ContinuabilityBound { value: ExtReal::Finite(0.5 * (lo + hi)), cap })
}
