//! Problem instances: dimension, Hardy profile `h`, nonlinearity `f(u, r)`
//! built from weighted power or rational terms, and the Fowler-coordinate
//! nonlinearity `g_l(x, t) = f(x e^{-α t}, e^t) e^{(α+2) t}`.
//!
//! Every term is evaluated in log space, so `g_l` stays finite for the large
//! `|t|` reached when seeding manifolds.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exponents::{
    alpha, hardy_threshold, kelvin_exponent, saddle_window, serrin_shifted, sobolev,
    upper_exponent,
};

/// Largest exponent whose `exp` is finite.
const LOG_MAX: f64 = 709.0;

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z + (-z).exp()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HardyKind {
    Constant { eta: f64 },
    /// `c r^2 / (1 + r^2)`, with limits `0` at the origin and `c` at infinity.
    Rational { c: f64 },
    /// Piecewise linear in `ln r`, clamped to the end values outside the table.
    Tabulated { r: Vec<f64>, h: Vec<f64>, eta: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyProfile {
    pub kind: HardyKind,
    /// Evaluate at `1/r` (Kelvin image).
    #[serde(default)]
    pub inverted: bool,
}

impl HardyProfile {
    pub fn constant(eta: f64) -> Self {
        HardyProfile { kind: HardyKind::Constant { eta }, inverted: false }
    }

    pub fn rational(c: f64) -> Self {
        HardyProfile { kind: HardyKind::Rational { c }, inverted: false }
    }

    pub fn tabulated(r: Vec<f64>, h: Vec<f64>, eta: f64, beta: f64) -> Result<Self> {
        if r.len() != h.len() || r.len() < 2 {
            return Err(domain("tabulated Hardy profile needs matching r/h tables of length >= 2"));
        }
        if r.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
            return Err(domain("tabulated radii must be positive and strictly increasing"));
        }
        Ok(HardyProfile { kind: HardyKind::Tabulated { r, h, eta, beta }, inverted: false })
    }

    pub fn inverted(&self) -> Self {
        HardyProfile { kind: self.kind.clone(), inverted: !self.inverted }
    }

    /// `h(e^t)`.
    pub fn at_log(&self, t: f64) -> f64 {
        let t = if self.inverted { -t } else { t };
        match &self.kind {
            HardyKind::Constant { eta } => *eta,
            HardyKind::Rational { c } => 0.5 * c * (1.0 + t.tanh()),
            HardyKind::Tabulated { r, h, .. } => {
                let lr0 = r[0].ln();
                let last = r.len() - 1;
                if t <= lr0 {
                    return h[0];
                }
                if t >= r[last].ln() {
                    return h[last];
                }
                let i = r.partition_point(|&ri| ri.ln() <= t) - 1;
                let (a, b) = (r[i].ln(), r[i + 1].ln());
                h[i] + (h[i + 1] - h[i]) * (t - a) / (b - a)
            }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.at_log(r.ln())
    }

    fn raw_limits(&self) -> (f64, f64) {
        match &self.kind {
            HardyKind::Constant { eta } => (*eta, *eta),
            HardyKind::Rational { c } => (0.0, *c),
            HardyKind::Tabulated { eta, beta, .. } => (*eta, *beta),
        }
    }

    /// Limit of `h` at the origin.
    pub fn eta(&self) -> f64 {
        let (a, b) = self.raw_limits();
        if self.inverted { b } else { a }
    }

    /// Limit of `h` at infinity.
    pub fn beta(&self) -> f64 {
        let (a, b) = self.raw_limits();
        if self.inverted { a } else { b }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.kind {
            HardyKind::Constant { eta } => Some(eta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Constant { value: f64 },
    /// `tanh((r-R)/w) · r^δ₀ · (1 + r/R)^(δ∞-δ₀)`.
    SmoothStep { radius: f64, width: f64, delta0: f64, delta_inf: f64 },
    /// `scale · ((r/R)^m - 1)/((r/R)^m + 1) · r^δ₀ · (1 + r/R)^(δ∞-δ₀)`.
    PowerProduct { radius: f64, m: f64, scale: f64, delta0: f64, delta_inf: f64 },
    /// `K0 r^δ₀` below `R`, `K∞ r^δ∞` above.
    PiecewiseSign { radius: f64, k0: f64, k_inf: f64, delta0: f64, delta_inf: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightK {
    pub kind: WeightKind,
    #[serde(default)]
    pub inverted: bool,
}

/// Asymptotic data `K(r) ~ K0 r^δ₀` at the origin and `K∞ r^δ∞` at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightLimits {
    pub k0: f64,
    pub delta0: f64,
    pub k_inf: f64,
    pub delta_inf: f64,
}

impl WeightK {
    pub fn constant(value: f64) -> Self {
        WeightK { kind: WeightKind::Constant { value }, inverted: false }
    }

    pub fn smooth_step(radius: f64, width: f64, delta0: f64, delta_inf: f64) -> Self {
        WeightK {
            kind: WeightKind::SmoothStep { radius, width, delta0, delta_inf },
            inverted: false,
        }
    }

    pub fn inverted(&self) -> Self {
        WeightK { kind: self.kind.clone(), inverted: !self.inverted }
    }

    /// `K(e^t) = factor · exp(log_scale)` with `|factor|` bounded.
    pub fn log_form(&self, t: f64) -> (f64, f64) {
        let t = if self.inverted { -t } else { t };
        match self.kind {
            WeightKind::Constant { value } => (value, 0.0),
            WeightKind::SmoothStep { radius, width, delta0, delta_inf } => {
                let r = t.exp();
                let ls = delta0 * t + (delta_inf - delta0) * softplus(t - radius.ln());
                (((r - radius) / width).tanh(), ls)
            }
            WeightKind::PowerProduct { radius, m, scale, delta0, delta_inf } => {
                let ls = delta0 * t + (delta_inf - delta0) * softplus(t - radius.ln());
                (scale * (0.5 * m * (t - radius.ln())).tanh(), ls)
            }
            WeightKind::PiecewiseSign { radius, k0, k_inf, delta0, delta_inf } => {
                if t < radius.ln() {
                    (k0, delta0 * t)
                } else {
                    (k_inf, delta_inf * t)
                }
            }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let (s, ls) = self.log_form(r.ln());
        s * ls.exp()
    }

    /// Radius where the weight changes sign, if it does.
    pub fn sign_change_radius(&self) -> Option<f64> {
        let r = match self.kind {
            WeightKind::Constant { .. } => return None,
            WeightKind::SmoothStep { radius, .. }
            | WeightKind::PowerProduct { radius, .. }
            | WeightKind::PiecewiseSign { radius, .. } => radius,
        };
        Some(if self.inverted { 1.0 / r } else { r })
    }

    pub fn limits(&self) -> WeightLimits {
        let raw = match self.kind {
            WeightKind::Constant { value } => WeightLimits { k0: value, delta0: 0.0, k_inf: value, delta_inf: 0.0 },
            WeightKind::SmoothStep { radius, width, delta0, delta_inf } => WeightLimits {
                k0: (-radius / width).tanh(),
                delta0,
                k_inf: radius.powf(delta0 - delta_inf),
                delta_inf,
            },
            WeightKind::PowerProduct { radius, scale, delta0, delta_inf, .. } => WeightLimits {
                k0: -scale,
                delta0,
                k_inf: scale * radius.powf(delta0 - delta_inf),
                delta_inf,
            },
            WeightKind::PiecewiseSign { k0, k_inf, delta0, delta_inf, .. } => {
                WeightLimits { k0, delta0, k_inf, delta_inf }
            }
        };
        if self.inverted {
            WeightLimits { k0: raw.k_inf, delta0: -raw.delta_inf, k_inf: raw.k0, delta_inf: -raw.delta0 }
        } else {
            raw
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    /// `coef · K(r) · r^δ · u|u|^(q-2)`.
    Power { coef: f64, q: f64, delta: f64, weight: WeightK },
    /// `coef · K(r) · r^δ₁/(1 + r^δ₂) · u|u|^(q₁-2) / (1 + |u|^q₂ r^b)`.
    Rational { coef: f64, q1: f64, q2: f64, delta1: f64, delta2: f64, ubeta: f64, weight: WeightK },
}

impl Term {
    pub fn power(coef: f64, q: f64, delta: f64, weight: WeightK) -> Self {
        Term::Power { coef, q, delta, weight }
    }

    fn weight(&self) -> &WeightK {
        match self {
            Term::Power { weight, .. } | Term::Rational { weight, .. } => weight,
        }
    }

    /// `ln |f(x e^{-a t}, e^t) e^{(a+2) t}|` and its sign; `None` at `x = 0`.
    fn log_scaled(&self, x: f64, t: f64, a: f64) -> Option<(f64, f64)> {
        if x == 0.0 {
            return None;
        }
        let lx = x.abs().ln();
        let (s, ls) = self.weight().log_form(t);
        match *self {
            Term::Power { coef, q, delta, .. } => {
                let e = (q - 1.0) * lx + (delta + a + 2.0 - (q - 1.0) * a) * t + ls;
                Some((coef * s * x.signum(), e))
            }
            Term::Rational { coef, q1, q2, delta1, delta2, ubeta, .. } => {
                let lu = lx - a * t;
                let e = (q1 - 1.0) * lu - softplus(q2 * lu + ubeta * t) + delta1 * t
                    - softplus(delta2 * t)
                    + (a + 2.0) * t
                    + ls;
                Some((coef * s * x.signum(), e))
            }
        }
    }

    fn kelvin(&self, n: f64) -> Term {
        match self {
            Term::Power { coef, q, delta, weight } => Term::Power {
                coef: *coef,
                q: *q,
                delta: (n - 2.0) * (q - 1.0) - delta - 2.0 - n,
                weight: weight.inverted(),
            },
            Term::Rational { coef, q1, q2, delta1, delta2, ubeta, weight } => Term::Rational {
                coef: *coef,
                q1: *q1,
                q2: *q2,
                delta1: delta2 - delta1 + (n - 2.0) * (q1 - 1.0) - 2.0 - n,
                delta2: *delta2,
                ubeta: (n - 2.0) * q2 - ubeta,
                weight: weight.inverted(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    SinglePower,
    SumOfPowers,
    Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    /// Overall sign, `+1` or `-1`.
    pub sign: f64,
    pub terms: Vec<Term>,
}

impl Nonlinearity {
    pub fn single(coef: f64, q: f64, delta: f64, weight: WeightK) -> Self {
        Nonlinearity { sign: 1.0, terms: vec![Term::power(coef, q, delta, weight)] }
    }

    /// The zero nonlinearity.
    pub fn linear() -> Self {
        Nonlinearity { sign: 1.0, terms: Vec::new() }
    }

    pub fn kind(&self) -> NonlinearityKind {
        if self.terms.iter().any(|t| matches!(t, Term::Rational { .. })) {
            NonlinearityKind::Rational
        } else if self.terms.len() == 1 {
            NonlinearityKind::SinglePower
        } else {
            NonlinearityKind::SumOfPowers
        }
    }
}

/// Value of `g_l` with a flag raised when an intermediate exponential saturated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEval {
    pub value: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    /// `t → -∞` (`r → 0`).
    Past,
    /// `t → +∞` (`r → ∞`).
    Future,
}

impl End {
    pub fn name(self) -> &'static str {
        match self {
            End::Past => "past",
            End::Future => "future",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: u32,
    pub hardy: HardyProfile,
    pub nonlinearity: Nonlinearity,
    /// Exponent used near the origin.
    pub l_u: f64,
    /// Exponent used near infinity.
    pub l_s: f64,
    /// Log-radius separating the region where the nonlinearity is repulsive
    /// from the one where it is attractive (`ln R` for a single weight).
    pub switch_time: f64,
}

impl ProblemSpec {
    pub fn new(
        n: u32,
        hardy: HardyProfile,
        nonlinearity: Nonlinearity,
        l_u: f64,
        l_s: f64,
        switch_time: f64,
    ) -> Result<Self> {
        let p = ProblemSpec { n, hardy, nonlinearity, l_u, l_s, switch_time };
        p.check()?;
        Ok(p)
    }

    /// Saddle windows at both ends.
    pub fn check(&self) -> Result<()> {
        if !saddle_window(self.n, self.eta(), self.l_u)? {
            return Err(domain(format!(
                "l_u = {} outside the saddle window at the origin (eta = {})",
                self.l_u,
                self.eta()
            )));
        }
        if !saddle_window(self.n, self.beta(), self.l_s)? {
            return Err(domain(format!(
                "l_s = {} outside the saddle window at infinity (beta = {})",
                self.l_s,
                self.beta()
            )));
        }
        Ok(())
    }

    /// `n = 4`, `h ≡ 0`, `f = tanh(r-1) u|u|^4`, `l_u = l_s = 6`.
    pub fn default_instance() -> Self {
        Self::with_hardy(HardyProfile::constant(0.0))
    }

    /// The default nonlinearity with `h = c r²/(1+r²)`.
    pub fn hardy_instance(c: f64) -> Result<Self> {
        let p = Self::with_hardy(HardyProfile::rational(c));
        p.check()?;
        Ok(p)
    }

    fn with_hardy(hardy: HardyProfile) -> Self {
        ProblemSpec {
            n: 4,
            hardy,
            nonlinearity: Nonlinearity::single(1.0, 6.0, 0.0, WeightK::smooth_step(1.0, 1.0, 0.0, 0.0)),
            l_u: 6.0,
            l_s: 6.0,
            switch_time: 0.0,
        }
    }

    /// Autonomous `f = k u|u|^{q-2}`, `h ≡ eta`, expressed with `l_u = l_s = l`.
    pub fn pure_power(n: u32, q: f64, k: f64, eta: f64, l: f64) -> Result<Self> {
        Self::new(
            n,
            HardyProfile::constant(eta),
            Nonlinearity::single(1.0, q, 0.0, WeightK::constant(k)),
            l,
            l,
            0.0,
        )
    }

    pub fn eta(&self) -> f64 {
        self.hardy.eta()
    }

    pub fn beta(&self) -> f64 {
        self.hardy.beta()
    }

    /// `h(e^t)`.
    pub fn h(&self, t: f64) -> f64 {
        self.hardy.at_log(t)
    }

    pub fn eval_g(&self, x: f64, t: f64, l: f64) -> GEval {
        self.scaled(x, t, alpha(l))
    }

    /// `g_l(x, t)`, saturating on overflow.
    pub fn g(&self, x: f64, t: f64, l: f64) -> f64 {
        self.scaled(x, t, alpha(l)).value
    }

    /// `f(u, r)` in the radial variables.
    pub fn f(&self, u: f64, r: f64) -> f64 {
        let t = r.ln();
        let mut acc = 0.0;
        for term in &self.nonlinearity.terms {
            if let Some((s, e)) = term.log_scaled(u, t, 0.0) {
                acc += s * (e - 2.0 * t).min(LOG_MAX).exp();
            }
        }
        self.nonlinearity.sign * acc
    }

    fn scaled(&self, x: f64, t: f64, a: f64) -> GEval {
        let mut value = 0.0;
        let mut saturated = false;
        for term in &self.nonlinearity.terms {
            if let Some((s, e)) = term.log_scaled(x, t, a) {
                if e > LOG_MAX {
                    saturated = true;
                    value += s.signum() * f64::MAX;
                } else {
                    value += s * e.exp();
                }
            }
        }
        if !value.is_finite() {
            saturated = true;
            value = value.signum() * f64::MAX;
        }
        GEval { value: self.nonlinearity.sign * value, saturated }
    }

    /// `∂g_l/∂x`, analytic for power terms and a central difference otherwise.
    pub fn dg_dx(&self, x: f64, t: f64, l: f64) -> f64 {
        let a = alpha(l);
        let mut acc = 0.0;
        for term in &self.nonlinearity.terms {
            match term {
                Term::Power { q, .. } => {
                    if x == 0.0 {
                        continue;
                    }
                    if let Some((s, e)) = term.log_scaled(x, t, a) {
                        // d/dx of c x|x|^{q-2} is (q-1) c |x|^{q-2}
                        acc += (q - 1.0) * s * x.signum() * (e - x.abs().ln()).min(LOG_MAX).exp();
                    }
                }
                Term::Rational { .. } => {
                    let hstep = 1e-6 * x.abs().max(1e-3);
                    let one = Nonlinearity { sign: 1.0, terms: vec![term.clone()] };
                    let p = ProblemSpec { nonlinearity: one, ..self.clone() };
                    acc += (p.g(x + hstep, t, l) - p.g(x - hstep, t, l)) / (2.0 * hstep);
                }
            }
        }
        self.nonlinearity.sign * acc
    }

    /// Antiderivative `G(x, t) = ∫₀ˣ g_l(s, t) ds`.
    pub fn g_primitive(&self, x: f64, t: f64, l: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let a = alpha(l);
        let mut acc = 0.0;
        for term in &self.nonlinearity.terms {
            match term {
                Term::Power { q, .. } => {
                    if let Some((s, e)) = term.log_scaled(x, t, a) {
                        // x·g/q for the odd power x|x|^{q-2}
                        let e = e + x.abs().ln();
                        acc += s * x.signum() * e.min(LOG_MAX).exp() / q;
                    }
                }
                Term::Rational { .. } => {
                    let one = Nonlinearity { sign: 1.0, terms: vec![term.clone()] };
                    let p = ProblemSpec { nonlinearity: one, ..self.clone() };
                    acc += simpson(&|s| p.g(s, t, l), 0.0, x, 1e-12, 40)
                        .ok_or(Error::Quadrature(x))?;
                }
            }
        }
        Ok(self.nonlinearity.sign * acc)
    }

    /// The Kelvin-inverted problem `f̃(ũ, s) = f(ũ s^{n-2}, 1/s) s^{-2-n}`,
    /// `h̃(s) = h(1/s)`, with exponents exchanged through the Kelvin map.
    pub fn kelvin_dual(&self) -> Result<ProblemSpec> {
        let n = self.n as f64;
        Ok(ProblemSpec {
            n: self.n,
            hardy: self.hardy.inverted(),
            nonlinearity: Nonlinearity {
                sign: self.nonlinearity.sign,
                terms: self.nonlinearity.terms.iter().map(|t| t.kelvin(n)).collect(),
            },
            l_u: kelvin_exponent(self.n, self.l_s)?,
            l_s: kelvin_exponent(self.n, self.l_u)?,
            switch_time: -self.switch_time,
        })
    }

    /// The autonomous system reached as `t → ∓∞` in exponent `l`.
    pub fn autonomous_limit(&self, end: End, l: f64) -> Result<AutonomousLimit<'_>> {
        let dir = match end {
            End::Past => -1.0,
            End::Future => 1.0,
        };
        let (near, far) = (dir * LIMIT_PROBE.0, dir * LIMIT_PROBE.1);
        let unavailable = || Error::NoAutonomousLimit(end.name(), l);
        for &x in &[0.25, 1.0, 4.0] {
            let a = self.eval_g(x, near, l);
            let b = self.eval_g(x, far, l);
            if a.saturated || b.saturated {
                return Err(unavailable());
            }
            if (a.value - b.value).abs() > 1e-8 * b.value.abs().max(1e-12) {
                return Err(unavailable());
            }
        }
        let h = match end {
            End::Past => self.eta(),
            End::Future => self.beta(),
        };
        if (self.h(far) - h).abs() > 1e-8 * h.abs().max(1.0) {
            return Err(unavailable());
        }
        Ok(AutonomousLimit { problem: self, end, l, h, t_far: far })
    }
}

/// Probe log-radii used to decide whether `g_l(x, t)` settles as `|t| → ∞`.
const LIMIT_PROBE: (f64, f64) = (40.0, 80.0);

#[derive(Debug, Clone, Copy)]
pub struct AutonomousLimit<'a> {
    problem: &'a ProblemSpec,
    pub end: End,
    pub l: f64,
    /// Limit of `h` at this end.
    pub h: f64,
    t_far: f64,
}

impl AutonomousLimit<'_> {
    pub fn g(&self, x: f64) -> f64 {
        self.problem.g(x, self.t_far, self.l)
    }

    pub fn dg_dx(&self, x: f64) -> f64 {
        self.problem.dg_dx(x, self.t_far, self.l)
    }

    /// Sign of `g(x)/x` for `x > 0`; zero for a trivial limit.
    pub fn k_sign(&self) -> f64 {
        let v = self.g(1.0);
        if v == 0.0 { 0.0 } else { v.signum() }
    }

    /// Positive root of `g(x)/x = c`, assuming `g(x)/x` increases from 0.
    pub fn solve_ratio(&self, c: f64) -> Option<f64> {
        if !(c > 0.0) || self.k_sign() <= 0.0 {
            return None;
        }
        let ratio = |x: f64| self.g(x) / x;
        let mut hi = 1.0;
        let mut iters = 0;
        while ratio(hi) < c {
            hi *= 2.0;
            iters += 1;
            if iters > 200 || !ratio(hi).is_finite() {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if ratio(mid) < c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Adaptive Simpson with an absolute tolerance split between halves.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, depth: u32) -> Option<f64> {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> Option<f64> {
        let m = 0.5 * (a + b);
        let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if !diff.is_finite() {
            return None;
        }
        if diff.abs() <= 15.0 * eps {
            return Some(left + right + diff / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)? + rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)?)
    }
    // coarse composite estimate sets the absolute scale
    let k = 16;
    let hstep = (b - a) / k as f64;
    let coarse: f64 = (0..k)
        .map(|i| {
            let x0 = a + i as f64 * hstep;
            hstep / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * hstep) + f(x0 + hstep))
        })
        .sum();
    let eps = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, eps, depth)
}

pub fn eval_g(x: f64, t: f64, problem: &ProblemSpec, l: f64) -> GEval {
    problem.eval_g(x, t, l)
}

pub fn eval_g_primitive(x: f64, t: f64, problem: &ProblemSpec, l: f64) -> Result<f64> {
    problem.g_primitive(x, t, l)
}

/// Sampling used by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub r_samples: usize,
    pub x_max: f64,
    pub x_samples: usize,
}

impl Default for ValidationGrid {
    fn default() -> Self {
        ValidationGrid { r_min: 1e-6, r_max: 1e6, r_samples: 512, x_max: 10.0, x_samples: 256 }
    }
}

impl ValidationGrid {
    pub fn log_radii(&self) -> Vec<f64> {
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        let m = self.r_samples.max(2);
        (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect()
    }

    /// Symmetric x-grid without the origin.
    pub fn xs(&self) -> Vec<f64> {
        let m = self.x_samples.max(2);
        (0..m)
            .map(|i| -self.x_max + 2.0 * self.x_max * i as f64 / (m - 1) as f64)
            .filter(|&x| x != 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub pass: bool,
    pub first_violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passes(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.pass)
    }

    /// Error naming the first failing hypothesis among `names`.
    pub fn require(&self, names: &[&str]) -> Result<()> {
        for &name in names {
            match self.get(name) {
                Some(c) if c.pass => {}
                Some(c) => {
                    return Err(Error::Hypothesis {
                        name: name.to_string(),
                        detail: c.first_violation.clone().unwrap_or_default(),
                    })
                }
                None => {
                    return Err(Error::Hypothesis { name: name.to_string(), detail: "not checked".into() })
                }
            }
        }
        Ok(())
    }
}

struct Checker {
    checks: Vec<HypothesisCheck>,
}

impl Checker {
    fn push(&mut self, name: &str, violation: Option<String>) {
        self.checks.push(HypothesisCheck { name: name.to_string(), pass: violation.is_none(), first_violation: violation });
    }
}

/// Grid check of the structural hypotheses. Failures are report entries.
pub fn validate(problem: &ProblemSpec, grid: &ValidationGrid) -> ValidationReport {
    let mut c = Checker { checks: Vec::new() };
    let n = problem.n;
    let ts = grid.log_radii();
    let xs = grid.xs();
    let hc = hardy_threshold(n);

    // H
    let mut v = ts
        .iter()
        .find(|&&t| !(problem.h(t) < hc))
        .map(|&t| format!("h(r={:e}) = {} >= {hc}", t.exp(), problem.h(t)));
    if v.is_none() {
        let (t0, t1) = (ts[0], ts[ts.len() - 1]);
        if (problem.h(t0) - problem.eta()).abs() > 1e-3 * problem.eta().abs().max(1.0) {
            v = Some(format!("h(r_min) = {} differs from eta = {}", problem.h(t0), problem.eta()));
        } else if (problem.h(t1) - problem.beta()).abs() > 1e-3 * problem.beta().abs().max(1.0) {
            v = Some(format!("h(r_max) = {} differs from beta = {}", problem.h(t1), problem.beta()));
        }
    }
    c.push("H", v);

    // K and its mirror image, on every term's weight
    let sign = problem.nonlinearity.sign;
    let k_check = |reversed: bool| -> Option<String> {
        if problem.nonlinearity.terms.is_empty() {
            return Some("no nonlinear term".into());
        }
        for term in &problem.nonlinearity.terms {
            let w = term.weight();
            let coef = match term {
                Term::Power { coef, .. } | Term::Rational { coef, .. } => *coef,
            };
            let Some(radius) = w.sign_change_radius() else {
                return Some("weight has no sign change".into());
            };
            let orient = if reversed { -1.0 } else { 1.0 };
            for &t in &ts {
                let r = t.exp();
                let k = sign * coef * w.eval(r) * orient;
                if r < radius * (1.0 - 1e-9) && !(k < 0.0) {
                    return Some(format!("K(r={r:e}) = {} has the wrong sign below R = {radius}", k * orient));
                }
                if r > radius * (1.0 + 1e-9) && !(k > 0.0) {
                    return Some(format!("K(r={r:e}) = {} has the wrong sign above R = {radius}", k * orient));
                }
            }
            let lim = w.limits();
            let (t0, t1) = (ts[0], ts[ts.len() - 1]);
            let a = w.eval(t0.exp()) * (-lim.delta0 * t0).exp();
            if (a - lim.k0).abs() > 1e-3 * lim.k0.abs().max(1e-12) {
                return Some(format!("K(r) r^-delta0 = {a} at r_min, expected K0 = {}", lim.k0));
            }
            let b = w.eval(t1.exp()) * (-lim.delta_inf * t1).exp();
            if (b - lim.k_inf).abs() > 1e-3 * lim.k_inf.abs().max(1e-12) {
                return Some(format!("K(r) r^-delta_inf = {b} at r_max, expected KInf = {}", lim.k_inf));
            }
        }
        None
    };
    c.push("K", k_check(false));
    c.push("K-reversed", k_check(true));

    // f(0, r) = 0 and ∂f/∂u(0, r) = 0
    let eps = 1e-8;
    let v = ts.iter().find_map(|&t| {
        let r = t.exp();
        let f0 = problem.f(0.0, r);
        let slope = (problem.f(eps, r) - problem.f(-eps, r)) / (2.0 * eps);
        if f0 != 0.0 || !(slope.abs() < 1e-6) {
            Some(format!("f(0,{r:e}) = {f0}, df/du(0) ~ {slope}"))
        } else {
            None
        }
    });
    c.push("superlinear", v);

    // gu / gs: window plus g(0) = ∂g(0) = 0 on the half-line of t
    let g_small = |l: f64, t: f64| -> Option<String> {
        let d = problem.g(eps, t, l) / eps;
        if problem.g(0.0, t, l) != 0.0 || !(d.abs() < 1e-6) {
            Some(format!("g_l(x,t)/x ~ {d} near x=0 at t = {t}"))
        } else {
            None
        }
    };
    let window = |eta: f64, l: f64, name: &str| -> Option<String> {
        match saddle_window(n, eta, l) {
            Ok(true) => None,
            Ok(false) => Some(format!("{name} = {l} outside ({}, {})", serrin_shifted(n, eta), upper_exponent(n, eta))),
            Err(e) => Some(e.to_string()),
        }
    };
    let tt = problem.switch_time;
    let v = window(problem.eta(), problem.l_u, "l_u")
        .or_else(|| ts.iter().filter(|&&t| t <= tt).find_map(|&t| g_small(problem.l_u, t)));
    c.push("gu", v);
    let v = window(problem.beta(), problem.l_s, "l_s")
        .or_else(|| ts.iter().filter(|&&t| t >= tt).find_map(|&t| g_small(problem.l_s, t)));
    c.push("gs", v);

    // Gu / Gs and GA on the limits
    for (end, l, eta, gname, aname) in [
        (End::Past, problem.l_u, problem.eta(), "Gu", "GA-past"),
        (End::Future, problem.l_s, problem.beta(), "Gs", "GA-future"),
    ] {
        match problem.autonomous_limit(end, l) {
            Ok(lim) => {
                let trivial = lim.k_sign() == 0.0;
                let v = window(eta, l, if end == End::Past { "l_u" } else { "l_s" })
                    .or_else(|| trivial.then(|| "limit is trivial".to_string()));
                c.push(gname, v);
                c.push(aname, check_ga(&lim, &xs));
            }
            Err(e) => {
                c.push(gname, Some(e.to_string()));
                c.push(aname, Some(e.to_string()));
            }
        }
    }

    // L1 / L2
    let xmax = grid.x_max;
    let l_rule = |neg_l: f64, pos_l: f64, neg_before: bool| -> Option<String> {
        for &t in &ts {
            let before = t < tt;
            let after = t > tt;
            if (neg_before && before) || (!neg_before && after) {
                if let Some(x) = xs.iter().find(|&&x| problem.g(x, t, neg_l) / x > 0.0) {
                    return Some(format!("g(x,t)/x > 0 at x = {x}, t = {t}"));
                }
            }
            if (neg_before && after) || (!neg_before && before) {
                for x in [xmax, -xmax] {
                    if problem.g(x, t, pos_l) / x < 0.0 {
                        return Some(format!("g(x,t)/x < 0 at |x| = {xmax}, t = {t}"));
                    }
                }
            }
        }
        None
    };
    c.push("L1", l_rule(problem.l_u, problem.l_s, true));
    c.push("L2", l_rule(problem.l_s, problem.l_u, false));

    // combined hypotheses for the sequence searches
    let sob = sobolev(n);
    let k_future = problem.autonomous_limit(End::Future, problem.l_s).map(|l| l.k_sign()).unwrap_or(0.0);
    let k_past = problem.autonomous_limit(End::Past, problem.l_u).map(|l| l.k_sign()).unwrap_or(0.0);
    let passes = |name: &str, cs: &[HypothesisCheck]| cs.iter().any(|c| c.name == name && c.pass);
    let first_fail = |names: &[&str], cs: &[HypothesisCheck]| -> Option<String> {
        names.iter().find(|n| !passes(n, cs)).map(|n| format!("{n} fails"))
    };
    let v = first_fail(&["H", "Gs", "gu", "L1"], &c.checks)
        .or_else(|| (k_future <= 0.0).then(|| "future limit has K <= 0".to_string()))
        .or_else(|| {
            let ok = problem.l_s > sob && upper_exponent(n, problem.beta()).exceeds(problem.l_s);
            (!ok).then(|| format!("l_s = {} outside (2^*, I(beta))", problem.l_s))
        });
    c.push("regular-sequences", v);
    let v = first_fail(&["H", "Gu", "gs", "L2"], &c.checks)
        .or_else(|| (k_past <= 0.0).then(|| "past limit has K <= 0".to_string()))
        .or_else(|| {
            let ok = problem.l_u < sob && problem.l_u > serrin_shifted(n, problem.eta());
            (!ok).then(|| format!("l_u = {} outside (2_*(eta), 2^*)", problem.l_u))
        });
    c.push("fast-decay-sequences", v);

    ValidationReport { checks: c.checks }
}

/// `g(x)/x` one-signed, strictly increasing in `|x|`, and `g` odd.
fn check_ga(lim: &AutonomousLimit<'_>, xs: &[f64]) -> Option<String> {
    let k = lim.k_sign();
    if k == 0.0 {
        return Some("limit is trivial".into());
    }
    let mut pos: Vec<f64> = xs.iter().copied().filter(|&x| x > 0.0).collect();
    pos.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    for &x in &pos {
        let v = k * lim.g(x) / x;
        if !(v > prev) {
            return Some(format!("|g(x)/x| not increasing at x = {x}"));
        }
        let odd = lim.g(-x) + lim.g(x);
        if odd.abs() > 1e-12 * lim.g(x).abs() {
            return Some(format!("g not odd at x = {x}"));
        }
        prev = v;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pure(q: f64, delta: f64, l: f64) -> ProblemSpec {
        ProblemSpec {
            n: 4,
            hardy: HardyProfile::constant(0.0),
            nonlinearity: Nonlinearity::single(1.0, q, delta, WeightK::constant(1.0)),
            l_u: l,
            l_s: l,
            switch_time: 0.0,
        }
    }

    fn rational_problem() -> ProblemSpec {
        ProblemSpec {
            nonlinearity: Nonlinearity {
                sign: 1.0,
                terms: vec![Term::Rational {
                    coef: 1.0,
                    q1: 8.0,
                    q2: 2.0,
                    delta1: 0.5,
                    delta2: 1.0,
                    ubeta: 0.0,
                    weight: WeightK::smooth_step(1.0, 0.5, 0.0, 0.0),
                }],
            },
            ..ProblemSpec::default_instance()
        }
    }

    #[test]
    fn g_vanishes_at_zero() {
        let p = ProblemSpec::default_instance();
        for t in [-30.0, 0.0, 7.0] {
            assert_eq!(p.g(0.0, t, 6.0), 0.0);
        }
    }

    #[test]
    fn matched_exponent_removes_time() {
        let p = pure(6.0, 0.0, 6.0);
        assert!((p.g(2.0, 0.0, 6.0) - 32.0).abs() < 1e-12);
        assert!((p.g(2.0, 5.0, 6.0) - 32.0).abs() < 1e-12);
        let p = pure(6.0, 2.0, 4.0);
        for t in [-3.0, 0.0, 11.0] {
            assert!((p.g(1.0, t, 4.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn saturation_is_flagged() {
        let p = pure(6.0, 0.0, 6.0);
        let v = p.eval_g(1.0, -2000.0, 3.0);
        assert!(v.saturated && v.value == f64::MAX);
    }

    #[test]
    fn primitive_examples() {
        let p = pure(6.0, 0.0, 6.0);
        assert!((p.g_primitive(1.0, 0.0, 6.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(p.g_primitive(0.0, 3.0, 6.0).unwrap(), 0.0);
        let p = ProblemSpec::pure_power(4, 5.0, 2.5, 0.0, 5.0).unwrap();
        for x in [-1.3, 0.7, 2.0] {
            let expect = 2.5 * f64::abs(x).powf(5.0) / 5.0;
            assert!((p.g_primitive(x, 1.0, 5.0).unwrap() - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn primitive_differentiates_back() {
        for p in [ProblemSpec::default_instance(), rational_problem()] {
            for &t in &[-2.0, 0.3, 4.0] {
                for &x in &[-2.0, -0.4, 0.5, 1.7] {
                    let h = 1e-5;
                    let fd = (p.g_primitive(x + h, t, 6.0).unwrap() - p.g_primitive(x - h, t, 6.0).unwrap()) / (2.0 * h);
                    let g = p.g(x, t, 6.0);
                    assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-3), "x={x} t={t} fd={fd} g={g}");
                }
            }
        }
    }

    #[test]
    fn derivative_matches_difference() {
        for p in [ProblemSpec::default_instance(), rational_problem()] {
            for &x in &[-1.5, 0.6, 2.2] {
                let h = 1e-6;
                let fd = (p.g(x + h, 0.4, 6.0) - p.g(x - h, 0.4, 6.0)) / (2.0 * h);
                let d = p.dg_dx(x, 0.4, 6.0);
                assert!((fd - d).abs() <= 1e-5 * d.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn physical_and_fowler_forms_agree() {
        let p = rational_problem();
        for &(u, r) in &[(0.3, 0.5), (-2.0, 3.0), (1.1, 1e-3)] {
            let l = 6.0;
            let a = alpha(l);
            let t: f64 = f64::ln(r);
            let via_g = p.g(u * (a * t).exp(), t, l) * (-(a + 2.0) * t).exp();
            assert!((via_g - p.f(u, r)).abs() <= 1e-12 * p.f(u, r).abs());
        }
    }

    #[test]
    fn kelvin_dual_matches_direct_formula() {
        for p in [ProblemSpec::default_instance(), rational_problem(), ProblemSpec::hardy_instance(0.5).unwrap()] {
            let d = p.kelvin_dual().unwrap();
            let n = p.n as f64;
            for &(u, s) in &[(0.4f64, 0.3f64), (-1.2, 2.0), (2.0, 0.9)] {
                let direct = p.f(u * s.powf(n - 2.0), 1.0 / s) * s.powf(-2.0 - n);
                assert!((d.f(u, s) - direct).abs() <= 1e-12 * direct.abs().max(1e-300), "u={u} s={s}");
                assert!((d.hardy.eval(s) - p.hardy.eval(1.0 / s)).abs() < 1e-15);
            }
            let back = d.kelvin_dual().unwrap();
            assert_eq!((&back.hardy, &back.nonlinearity, back.switch_time), (&p.hardy, &p.nonlinearity, p.switch_time));
            assert!((back.l_u - p.l_u).abs() < 1e-12 && (back.l_s - p.l_s).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_exponents() {
        let d = ProblemSpec::default_instance().kelvin_dual().unwrap();
        assert!((d.l_u - 10.0 / 3.0).abs() < 1e-14 && (d.l_s - 10.0 / 3.0).abs() < 1e-14);
        let lim = d.weight_limits_first();
        assert!(lim.k0 > 0.0 && lim.k_inf < 0.0);
    }

    impl ProblemSpec {
        fn weight_limits_first(&self) -> WeightLimits {
            self.nonlinearity.terms[0].weight().limits()
        }
    }

    #[test]
    fn default_instance_validates() {
        let rep = validate(&ProblemSpec::default_instance(), &ValidationGrid::default());
        for name in ["H", "K", "superlinear", "gu", "gs", "Gu", "Gs", "GA-past", "GA-future", "L1", "regular-sequences"] {
            assert!(rep.passes(name), "{name}: {:?}", rep.get(name));
        }
        assert!(!rep.passes("L2"));
        assert!(!rep.passes("fast-decay-sequences"));
        let dual = ProblemSpec::default_instance().kelvin_dual().unwrap();
        let rep = validate(&dual, &ValidationGrid::default());
        for name in ["H", "K-reversed", "Gu", "gs", "L2", "fast-decay-sequences"] {
            assert!(rep.passes(name), "{name}: {:?}", rep.get(name));
        }
    }

    #[test]
    fn hardy_boundary_fails_everywhere() {
        let p = ProblemSpec { hardy: HardyProfile::constant(1.0), ..ProblemSpec::default_instance() };
        let rep = validate(&p, &ValidationGrid::default());
        let h = rep.get("H").unwrap();
        assert!(!h.pass);
        assert!(h.first_violation.as_ref().unwrap().starts_with("h(r=1"));
    }

    #[test]
    fn constant_weight_fails_k() {
        let p = pure(6.0, 0.0, 6.0);
        let rep = validate(&p, &ValidationGrid::default());
        assert!(!rep.passes("K"));
        assert!(rep.require(&["H", "K"]).is_err());
    }

    #[test]
    fn limits_of_default() {
        let p = ProblemSpec::default_instance();
        let past = p.autonomous_limit(End::Past, 6.0).unwrap();
        let fut = p.autonomous_limit(End::Future, 6.0).unwrap();
        assert!((past.g(1.0) + 1f64.tanh()).abs() < 1e-12);
        assert!((fut.g(1.0) - 1.0).abs() < 1e-12);
        // l = 5 leaves an exponentially growing factor at infinity
        assert!(p.autonomous_limit(End::Future, 5.0).is_err());
    }

    #[test]
    fn tabulated_profile_interpolates() {
        let h = HardyProfile::tabulated(vec![0.1, 1.0, 10.0], vec![0.0, 0.2, 0.4], 0.0, 0.4).unwrap();
        assert!((h.eval(1.0) - 0.2).abs() < 1e-15);
        assert!((h.eval(10f64.sqrt()) - 0.3).abs() < 1e-12);
        assert_eq!(h.eval(1e-5), 0.0);
        assert_eq!(h.eval(1e5), 0.4);
        assert_eq!(h.inverted().eval(1e5), 0.0);
    }

    proptest! {
        #[test]
        fn g_is_odd(x in -5.0f64..5.0, t in -20.0f64..20.0) {
            for p in [ProblemSpec::default_instance(), rational_problem()] {
                prop_assert_eq!(p.g(-x, t, 6.0), -p.g(x, t, 6.0));
            }
        }

        #[test]
        fn autonomy_for_matched_power(x in -3.0f64..3.0, t1 in -30.0f64..30.0, t2 in -30.0f64..30.0) {
            let p = pure(6.0, 0.0, 6.0);
            prop_assert!((p.g(x, t1, 6.0) - p.g(x, t2, 6.0)).abs() < 1e-12 * x.abs().powi(5).max(1.0));
        }
    }
}
