//! The planar flow `ẋ = α x + y`, `ẏ = -h(e^t) x + γ y - g_l(x, t)`:
//! adaptive integration with event detection, fixed points of the
//! autonomous limits, the first integral at the Sobolev exponent and a
//! sampled check of flux signs across triangle edges.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exponents::{alpha, kappa, sobolev};
use crate::fowler::{nearest_branch, FowlerState};
use crate::ode::{dopri_step, Step};
use crate::problem::{End, ProblemSpec};

/// Right-hand side of the Fowler system in exponent `l`.
pub fn vector_field(t: f64, x: f64, y: f64, problem: &ProblemSpec, l: f64) -> Result<(f64, f64)> {
    if !(l > 2.0) {
        return Err(domain(format!("exponent l must exceed 2, got {l}")));
    }
    if !(t.is_finite() && x.is_finite() && y.is_finite()) {
        return Err(Error::NonFinite(t));
    }
    Ok(field(t, x, y, problem, l))
}

fn field(t: f64, x: f64, y: f64, problem: &ProblemSpec, l: f64) -> (f64, f64) {
    let a = alpha(l);
    let g = a + 2.0 - problem.n as f64;
    (a * x + y, -problem.h(t) * x + g * y - problem.g(x, t, l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub rel_tol: f64,
    /// Target for `|x|` at polished zero crossings.
    pub abs_tol: f64,
    /// Largest step in the integration parameter (about one unit of `t`).
    pub max_step: f64,
    pub max_steps: usize,
    pub rho_max: f64,
    pub detect_origin: bool,
    pub origin_radius: f64,
    /// Allowed angle between the state and the converging eigendirection.
    pub origin_angle_tol: f64,
    /// Allowed ratio of departing to converging eigen-components.
    pub origin_ratio: f64,
    pub origin_dwell: f64,
    pub detect_p: bool,
    pub p_radius: f64,
    pub p_dwell: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.5,
            max_steps: 2_000_000,
            rho_max: 1e8,
            detect_origin: true,
            origin_radius: 1e-3,
            origin_angle_tol: 0.05,
            origin_ratio: 0.05,
            origin_dwell: 2.0,
            detect_p: true,
            p_radius: 1e-5,
            p_dwell: 5.0,
        }
    }
}

impl Controls {
    pub fn check(&self) -> Result<()> {
        if !(1e-13..=1e-3).contains(&self.rel_tol) {
            return Err(domain(format!("rel_tol = {} outside [1e-13, 1e-3]", self.rel_tol)));
        }
        if !(self.abs_tol > 0.0 && self.max_step > 0.0 && self.rho_max > 1.0) {
            return Err(domain("abs_tol, max_step must be positive and rho_max > 1"));
        }
        if !(self.origin_radius > 0.0 && self.origin_dwell >= 0.0 && self.p_radius > 0.0 && self.p_dwell >= 0.0) {
            return Err(domain("acceptance radii must be positive and dwell times non-negative"));
        }
        Ok(())
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Controls { rel_tol, ..self }
    }

    /// Plain transport: no convergence acceptance, only blow-up and `t_end`.
    pub fn transport(self) -> Self {
        Controls { detect_origin: false, detect_p: false, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ZeroCrossing,
    EnteredOriginBall,
    EnteredPBall,
    BlowUpAbort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    ConvergedOrigin,
    ConvergedPPlus,
    ConvergedPMinus,
    BlowUp,
    StepFailure,
}

/// Data gathered while a trajectory dwelt near the origin along the
/// converging eigendirection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginFit {
    /// Average of `a(t) e^{-λ t}` over the dwell window, `a` the converging
    /// component and `λ` its rate: `L` going forward, `d` going backward.
    pub constant: f64,
    /// Departing over converging component at acceptance.
    pub ratio: f64,
    /// The departing component would add one more sign change of `x`.
    pub extra_zero: bool,
    pub t_enter: f64,
    pub t_accept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<FowlerState>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub zero_count: usize,
    pub origin_fit: Option<OriginFit>,
    pub blow_up_t: Option<f64>,
}

impl Trajectory {
    pub fn first(&self) -> &FowlerState {
        &self.states[0]
    }

    pub fn last(&self) -> &FowlerState {
        self.states.last().expect("trajectory holds its start state")
    }

    /// Total change of the lifted angle.
    pub fn winding(&self) -> f64 {
        self.last().phi - self.first().phi
    }

    /// Zero count including the crossing forecast by the origin fit.
    pub fn predicted_zeros(&self) -> usize {
        self.zero_count + usize::from(self.origin_fit.is_some_and(|f| f.extra_zero))
    }
}

/// Eigen-data of the linearization at the end of the time axis in the
/// direction of integration: slopes `y/x` and rates of the mode that decays
/// towards that end and of the one that grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndModes {
    pub conv_slope: f64,
    pub conv_rate: f64,
    pub dep_slope: f64,
    pub dep_rate: f64,
}

impl EndModes {
    pub fn new(problem: &ProblemSpec, l: f64, end: End) -> Self {
        let n = problem.n;
        let a = alpha(l);
        let g = a + 2.0 - n as f64;
        let c = match end {
            End::Past => problem.eta(),
            End::Future => problem.beta(),
        };
        let k = kappa(n, c);
        // (1, -κ) grows like e^{(α-κ)t}; (1, -(n-2-κ)) decays like e^{(γ+κ)t}
        let slow = (-k, a - k);
        let fast = (-(n as f64 - 2.0 - k), g + k);
        let (conv, dep) = match end {
            End::Future => (fast, slow),
            End::Past => (slow, fast),
        };
        EndModes { conv_slope: conv.0, conv_rate: conv.1, dep_slope: dep.0, dep_rate: dep.1 }
    }

    /// Components `(a, b)` of `(x, y)` along `(1, conv_slope)` and `(1, dep_slope)`.
    pub fn decompose(&self, x: f64, y: f64) -> (f64, f64) {
        let b = (y - self.conv_slope * x) / (self.dep_slope - self.conv_slope);
        (x - b, b)
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Angle difference wrapped to `(-π, π]`.
fn wrapped(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI { w - 2.0 * PI } else { w }
}

/// Positive fixed point `(P_x, -α P_x)` of the autonomous limit at `end`.
pub fn p_point(problem: &ProblemSpec, l: f64, end: End) -> Option<(f64, f64)> {
    let lim = problem.autonomous_limit(end, l).ok()?;
    let a = alpha(l);
    let g = a + 2.0 - problem.n as f64;
    let px = lim.solve_ratio(-a * g - lim.h)?;
    Some((px, -a * px))
}

/// Integrate the flow from `start` (in exponent `start.l`) towards `t_end`,
/// which may lie before `start.t`.
///
/// The system is advanced in a parameter `σ` with
/// `dt/dσ = 1/sqrt(1 + (|F|/(W ρ))²)`, so time steps shrink as the
/// logarithmic speed grows and blow-up stays resolvable up to `rho_max`.
pub fn integrate(start: FowlerState, t_end: f64, problem: &ProblemSpec, controls: &Controls) -> Result<Trajectory> {
    controls.check()?;
    let l = start.l;
    if !(l > 2.0) {
        return Err(domain(format!("exponent l must exceed 2, got {l}")));
    }
    if !(start.t.is_finite() && start.x.is_finite() && start.y.is_finite()) {
        return Err(Error::NonFinite(start.t));
    }
    if !t_end.is_finite() {
        return Err(domain("t_end must be finite"));
    }
    let mut traj = Trajectory {
        states: vec![start],
        events: Vec::new(),
        termination: Termination::ReachedTEnd,
        zero_count: 0,
        origin_fit: None,
        blow_up_t: None,
    };
    let dir = if t_end > start.t {
        1.0
    } else if t_end < start.t {
        -1.0
    } else {
        return Ok(traj);
    };
    if start.x == 0.0 && start.y == 0.0 {
        traj.states.push(FowlerState { t: t_end, ..start });
        return Ok(traj);
    }

    let end = if dir > 0.0 { End::Future } else { End::Past };
    let a = alpha(l);
    let gam = a + 2.0 - problem.n as f64;
    let w = 1.0 + a.abs() + gam.abs() + problem.eta().abs().max(problem.beta().abs());
    let flow = |z: &[f64; 3]| -> [f64; 3] {
        let (dx, dy) = field(z[0], z[1], z[2], problem, l);
        let rho = z[1].hypot(z[2]);
        let v = if rho > 0.0 {
            let q = dx.hypot(dy) / (w * rho);
            if q.is_finite() { 1.0 / (1.0 + q * q).sqrt() } else { 0.0 }
        } else {
            1.0
        };
        [dir * v, dir * v * dx, dir * v * dy]
    };

    let modes = EndModes::new(problem, l, end);
    let conv_angle = modes.conv_slope.atan();
    let p = if controls.detect_p && (l - sobolev(problem.n)).abs() > 1e-9 {
        p_point(problem, l, end)
    } else {
        None
    };

    let mut z = [start.t, start.x, start.y];
    let mut phi = start.phi;
    let mut k1 = flow(&z);
    let mut h = 0.05f64.min(controls.max_step);
    let mut last_sign = sign(start.x);
    let mut outward_run = 0usize;
    let mut fast_run = 0usize;
    let mut in_origin_ball = start.rho() < controls.origin_radius;
    let mut in_p_ball = false;
    let mut origin_window: Option<(f64, Vec<(f64, f64)>)> = None;
    let mut p_window: Option<(f64, i8)> = None;
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > controls.max_steps || h < 1e-14 {
            traj.termination = Termination::StepFailure;
            break;
        }
        let st: Step<3> = dopri_step(&flow, z, k1, h);
        if !st.y1.iter().all(|v| v.is_finite()) {
            h *= 0.25;
            continue;
        }
        let rho0 = z[1].hypot(z[2]);
        let rho1 = st.y1[1].hypot(st.y1[2]);
        let sc = controls.rel_tol * rho0.max(rho1) + f64::MIN_POSITIVE;
        let sct = controls.rel_tol * z[0].abs().max(1.0);
        let err = (st.err[1].hypot(st.err[2]) / sc).max(st.err[0].abs() / sct);
        if !(err <= 1.0) {
            let f = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= f;
            continue;
        }

        // locate the end of the usable part of the step
        let mut theta_end = 1.0;
        let reached = dir * (st.y1[0] - t_end) >= 0.0;
        if reached {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if dir * (st.dense(mid)[0] - t_end) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            theta_end = hi;
        }
        let zmid = st.dense(0.5 * theta_end);
        let mut znew = if reached { st.dense(theta_end) } else { st.y1 };
        if reached {
            znew[0] = t_end;
        }
        let half1 = wrapped(zmid[2].atan2(zmid[1]) - z[2].atan2(z[1]));
        let half2 = wrapped(znew[2].atan2(znew[1]) - zmid[2].atan2(zmid[1]));
        if half1.abs() >= 0.5 * PI || half2.abs() >= 0.5 * PI {
            h *= 0.5;
            continue;
        }

        // zero crossing of x
        let s_new = sign(znew[1]);
        if s_new != 0 && last_sign != 0 && s_new != last_sign {
            let (tz, yz) = if z[1] == 0.0 {
                (z[0], z[2])
            } else {
                let (mut lo, mut hi) = (0.0, theta_end);
                let mut at = st.dense(0.5 * (lo + hi));
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    at = st.dense(mid);
                    if at[1].abs() < controls.abs_tol || mid == lo || mid == hi {
                        break;
                    }
                    if sign(at[1]) == last_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (at[0], at[2])
            };
            traj.events.push(Event { t: tz, kind: EventKind::ZeroCrossing, x: 0.0, y: yz });
            traj.zero_count += 1;
        }
        if s_new != 0 {
            last_sign = s_new;
        }

        phi = nearest_branch(phi, zmid[1], zmid[2]);
        phi = nearest_branch(phi, znew[1], znew[2]);
        z = znew;
        traj.states.push(FowlerState { t: z[0], x: z[1], y: z[2], l, phi });
        if reached {
            traj.termination = Termination::ReachedTEnd;
            break;
        }
        k1 = st.last_slope();
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(controls.max_step);

        let (t, x, y) = (z[0], z[1], z[2]);
        let (dx, dy) = field(t, x, y, problem, l);
        let rho = x.hypot(y);
        let rate = dir * (x * dx + y * dy) / (rho * rho);
        outward_run = if rate > 0.0 { outward_run + 1 } else { 0 };
        fast_run = if rate > w { fast_run + 1 } else { 0 };
        if rho > controls.rho_max && outward_run >= 3 && fast_run >= 3 {
            traj.events.push(Event { t, kind: EventKind::BlowUpAbort, x, y });
            traj.blow_up_t = Some(t);
            traj.termination = Termination::BlowUp;
            break;
        }

        let inside = rho < controls.origin_radius;
        if inside && !in_origin_ball {
            traj.events.push(Event { t, kind: EventKind::EnteredOriginBall, x, y });
        }
        in_origin_ball = inside;

        if controls.detect_origin {
            let (ca, cb) = modes.decompose(x, y);
            let angle_ok = {
                let d = (y.atan2(x) - conv_angle).rem_euclid(PI);
                d.min(PI - d) <= controls.origin_angle_tol
            };
            let ok = inside && rate < 0.0 && angle_ok && cb.abs() <= controls.origin_ratio * ca.abs();
            if ok {
                let win = origin_window.get_or_insert_with(|| (t, Vec::new()));
                win.1.push((t, ca * (-modes.conv_rate * t).exp()));
                if (t - win.0).abs() >= controls.origin_dwell {
                    let samples = &win.1;
                    let constant = if samples.len() == 1 {
                        samples[0].1
                    } else {
                        let mut acc = 0.0;
                        for s in samples.windows(2) {
                            acc += 0.5 * (s[0].1 + s[1].1) * (s[1].0 - s[0].0);
                        }
                        acc / (samples[samples.len() - 1].0 - samples[0].0)
                    };
                    traj.origin_fit = Some(OriginFit {
                        constant,
                        ratio: cb / ca,
                        extra_zero: ca * cb < 0.0,
                        t_enter: win.0,
                        t_accept: t,
                    });
                    traj.termination = Termination::ConvergedOrigin;
                    break;
                }
            } else {
                origin_window = None;
            }
        }

        if let Some((px, py)) = p {
            let dplus = (x - px).hypot(y - py);
            let dminus = (x + px).hypot(y + py);
            let (dist, which) = if dplus <= dminus { (dplus, 1i8) } else { (dminus, -1i8) };
            let near = dist < controls.p_radius;
            if near && !in_p_ball {
                traj.events.push(Event { t, kind: EventKind::EnteredPBall, x, y });
            }
            in_p_ball = near;
            match (near, p_window) {
                (true, Some((t0, s))) if s == which => {
                    if (t - t0).abs() >= controls.p_dwell {
                        traj.termination = if which > 0 { Termination::ConvergedPPlus } else { Termination::ConvergedPMinus };
                        break;
                    }
                }
                (true, _) => p_window = Some((t, which)),
                (false, _) => p_window = None,
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    StableNodeFocus,
    UnstableNodeFocus,
    Center,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointInfo {
    pub location: (f64, f64),
    pub stability: Stability,
    /// Ordered by real part.
    pub eigenvalues: [Complex64; 2],
}

fn linear_info(location: (f64, f64), j: [[f64; 2]; 2]) -> FixedPointInfo {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    let eigenvalues = if disc >= 0.0 {
        let s = disc.sqrt();
        // avoid cancellation in the smaller-magnitude root
        let q = 0.5 * (tr + tr.signum() * s);
        let (r1, r2) = if q != 0.0 { (q, det / q) } else { (0.5 * (tr - s), 0.5 * (tr + s)) };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
    } else {
        let im = (-disc).sqrt() / 2.0;
        [Complex64::new(tr / 2.0, -im), Complex64::new(tr / 2.0, im)]
    };
    let stability = if det < 0.0 {
        Stability::Saddle
    } else if tr.abs() <= 1e-12 * (1.0 + det.abs()) {
        Stability::Center
    } else if tr < 0.0 {
        Stability::StableNodeFocus
    } else {
        Stability::UnstableNodeFocus
    };
    FixedPointInfo { location, stability, eigenvalues }
}

/// Critical points of the autonomous limit at `end`: the origin, and `±P`
/// when the limit is attractive.
pub fn fixed_points(problem: &ProblemSpec, l: f64, end: End) -> Result<Vec<FixedPointInfo>> {
    let lim = problem.autonomous_limit(end, l)?;
    let a = alpha(l);
    let g = a + 2.0 - problem.n as f64;
    let c = lim.h;
    let mut out = vec![linear_info((0.0, 0.0), [[a, 1.0], [-c - lim.dg_dx(0.0), g]])];
    if let Some(px) = lim.solve_ratio(-a * g - c) {
        let jac = [[a, 1.0], [-c - lim.dg_dx(px), g]];
        let info = linear_info((px, -a * px), jac);
        out.push(info);
        out.push(FixedPointInfo { location: (-px, a * px), ..info });
    }
    Ok(out)
}

/// `E = (y + αx)²/2 - (α² - η)x²/2 + G(x)`, a first integral when `γ = -α`
/// and `h ≡ η`.
pub fn critical_energy(x: f64, y: f64, t: f64, problem: &ProblemSpec, l: f64) -> Result<f64> {
    let a = alpha(l);
    let g = a + 2.0 - problem.n as f64;
    if (g + a).abs() > 1e-12 {
        return Err(domain(format!("energy needs gamma = -alpha, got l = {l}")));
    }
    let eta = problem
        .hardy
        .constant_value()
        .ok_or_else(|| domain("energy needs a constant Hardy profile"))?;
    let s = y + a * x;
    Ok(0.5 * s * s - 0.5 * (a * a - eta) * x * x + problem.g_primitive(x, t, l)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSide {
    Inward,
    Outward,
    Unchecked,
}

/// Triangle with per-edge flux requirements; edge `i` is opposite vertex `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub vertices: [(f64, f64); 3],
    pub sides: [EdgeSide; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub edge_samples: usize,
    pub time_samples: usize,
}

impl Default for RegionGrid {
    fn default() -> Self {
        RegionGrid { edge_samples: 10, time_samples: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeViolation {
    pub edge: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Outward normal component of the field.
    pub flux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub side: EdgeSide,
    pub samples: usize,
    pub min_flux: f64,
    pub max_flux: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub pass: bool,
    pub edges: Vec<EdgeSummary>,
    pub first_violation: Option<EdgeViolation>,
}

/// Sample the outward flux of the field across each edge (endpoints
/// excluded) on a time grid covering `t_range`.
pub fn verify_invariant_region(
    triangle: &Triangle,
    t_range: (f64, f64),
    problem: &ProblemSpec,
    l: f64,
    grid: &RegionGrid,
) -> Result<RegionReport> {
    let v = triangle.vertices;
    let area2 = (v[1].0 - v[0].0) * (v[2].1 - v[0].1) - (v[2].0 - v[0].0) * (v[1].1 - v[0].1);
    let scale = v.iter().map(|p| p.0.abs().max(p.1.abs())).fold(0.0, f64::max);
    if !(area2.abs() > 1e-14 * scale * scale) {
        return Err(Error::DegenerateTriangle);
    }
    if !(t_range.0.is_finite() && t_range.1.is_finite()) {
        return Err(domain("t_range must be finite"));
    }
    let mut edges = Vec::with_capacity(3);
    let mut first = None;
    let nt = grid.time_samples.max(1);
    let ne = grid.edge_samples.max(1);
    for i in 0..3 {
        let (p, q, opp) = (v[(i + 1) % 3], v[(i + 2) % 3], v[i]);
        let (ex, ey) = (q.0 - p.0, q.1 - p.1);
        let len = ex.hypot(ey);
        let mut nrm = (ey / len, -ex / len);
        if nrm.0 * (opp.0 - p.0) + nrm.1 * (opp.1 - p.1) > 0.0 {
            nrm = (-nrm.0, -nrm.1);
        }
        let side = triangle.sides[i];
        let mut summary = EdgeSummary { side, samples: 0, min_flux: f64::INFINITY, max_flux: f64::NEG_INFINITY, pass: true };
        for it in 0..nt {
            let t = if nt == 1 { t_range.0 } else { t_range.0 + (t_range.1 - t_range.0) * it as f64 / (nt - 1) as f64 };
            for m in 0..ne {
                let s = (m + 1) as f64 / (ne + 1) as f64;
                let (x, y) = (p.0 + s * ex, p.1 + s * ey);
                let (dx, dy) = vector_field(t, x, y, problem, l)?;
                let flux = dx * nrm.0 + dy * nrm.1;
                summary.samples += 1;
                summary.min_flux = summary.min_flux.min(flux);
                summary.max_flux = summary.max_flux.max(flux);
                let ok = match side {
                    EdgeSide::Inward => flux < 0.0,
                    EdgeSide::Outward => flux > 0.0,
                    EdgeSide::Unchecked => true,
                };
                if !ok {
                    summary.pass = false;
                    if first.is_none() {
                        first = Some(EdgeViolation { edge: i, t, x, y, flux });
                    }
                }
            }
        }
        edges.push(summary);
    }
    Ok(RegionReport { pass: edges.iter().all(|e| e.pass), edges, first_violation: first })
}

/// Triangle `O, (δ, -(n-2)δ/2), (0, -(n-2)δ/2)` trapping the stable branch
/// for `t ≥ τ`: outward flux on the two edges through the origin, inward on
/// the bottom edge. `δ` is 0.9 times the largest radius on a grid of
/// `x ∈ (0, x_cap]` for which `g/x < (n-2)²/4 - h` on `[τ, τ + span]`.
pub fn rotation_barrier_triangle(problem: &ProblemSpec, l: f64, tau: f64, span: f64) -> Result<Triangle> {
    let m = (problem.n as f64 - 2.0) / 2.0;
    let ts: Vec<f64> = (0..=200).map(|i| tau + span * i as f64 / 200.0).collect();
    let x_cap = 10.0;
    let mut delta = 0.0;
    for i in 1..=2000 {
        let x = x_cap * i as f64 / 2000.0;
        let ok = ts.iter().all(|&t| {
            let bound = m * m - problem.h(t);
            problem.g(x, t, l) / x < bound && problem.g(-x, t, l) / -x < bound
        });
        if !ok {
            break;
        }
        delta = x;
    }
    if delta == 0.0 {
        return Err(Error::DegenerateTriangle);
    }
    let d = 0.9 * delta;
    Ok(Triangle {
        vertices: [(0.0, 0.0), (d, -m * d), (0.0, -m * d)],
        sides: [EdgeSide::Inward, EdgeSide::Outward, EdgeSide::Outward],
    })
}

/// Triangle `O, (ξ, 𝔪ξ), (ξ, -(n-2)ξ/2)` with `𝔪 = sqrt(S(ξ))`,
/// `S(ξ) = sup{-h - g/x : 0 < x ≤ ξ, t ∈ [t_lo, 𝔗]} ∪ {0}`; inward flux on
/// the edges through the origin. The vertical edge is outward exactly when
/// `α_l > (n-2)/2`, i.e. `l` below the Sobolev exponent; otherwise it is
/// left unchecked.
pub fn unstable_sector_triangle(problem: &ProblemSpec, l: f64, xi: f64, t_lo: f64) -> Result<(Triangle, f64)> {
    if !(xi > 0.0) {
        return Err(domain("xi must be positive"));
    }
    let tt = problem.switch_time;
    let mut s = 0.0f64;
    for it in 0..=400 {
        let t = t_lo + (tt - t_lo) * it as f64 / 400.0;
        for ix in 1..=200 {
            let x = xi * ix as f64 / 200.0;
            s = s.max(-problem.h(t) - problem.g(x, t, l) / x);
        }
    }
    let mm = s.sqrt();
    let m = (problem.n as f64 - 2.0) / 2.0;
    let o_side = if l < sobolev(problem.n) { EdgeSide::Outward } else { EdgeSide::Unchecked };
    Ok((
        Triangle {
            vertices: [(0.0, 0.0), (xi, mm * xi), (xi, -m * xi)],
            sides: [o_side, EdgeSide::Inward, EdgeSide::Inward],
        },
        mm,
    ))
}
