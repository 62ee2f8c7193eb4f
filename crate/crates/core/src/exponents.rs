//! Closed-form exponents: Serrin/Sobolev thresholds, their Hardy-shifted
//! analogues, the Fowler parameters alpha/gamma and the Kelvin-dual exponent.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Result};

/// A real number or `+∞`. Comparisons against the infinite value are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    /// `v < self`.
    pub fn exceeds(self, v: f64) -> bool {
        match self {
            ExtReal::Finite(b) => v < b,
            ExtReal::PosInf => true,
        }
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtRealRepr {
    Num(f64),
    Tag(String),
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ExtRealRepr::deserialize(d)? {
            ExtRealRepr::Num(v) => Ok(ExtReal::Finite(v)),
            ExtRealRepr::Tag(t) if t == "+inf" || t == "inf" => Ok(ExtReal::PosInf),
            ExtRealRepr::Tag(t) => Err(serde::de::Error::custom(format!("not an extended real: {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentBundle {
    pub n: u32,
    pub eta: f64,
    pub beta: f64,
    pub serrin: f64,
    pub sobolev: f64,
    pub serrin_eta: f64,
    pub upper_eta: ExtReal,
    pub kappa_eta: f64,
    pub kappa_beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FowlerParams {
    pub l: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// The Hardy coupling threshold `(n-2)^2/4`.
pub fn hardy_threshold(n: u32) -> f64 {
    let m = n as f64 - 2.0;
    m * m / 4.0
}

fn check_dim(n: u32) -> Result<()> {
    if n <= 2 {
        return Err(domain(format!("dimension must exceed 2, got {n}")));
    }
    Ok(())
}

fn check_coupling(n: u32, c: f64, name: &str) -> Result<()> {
    if !(c < hardy_threshold(n)) {
        return Err(domain(format!(
            "{name} = {c} violates the Hardy bound {name} < {}",
            hardy_threshold(n)
        )));
    }
    Ok(())
}

fn root(n: u32, eta: f64) -> f64 {
    let m = n as f64 - 2.0;
    (m * m - 4.0 * eta).sqrt()
}

pub fn serrin(n: u32) -> f64 {
    let n = n as f64;
    2.0 * (n - 1.0) / (n - 2.0)
}

pub fn sobolev(n: u32) -> f64 {
    let n = n as f64;
    2.0 * n / (n - 2.0)
}

/// `κ(η) = ((n-2) - sqrt((n-2)^2 - 4η)) / 2`.
pub fn kappa(n: u32, eta: f64) -> f64 {
    ((n as f64 - 2.0) - root(n, eta)) / 2.0
}

/// Hardy-shifted Serrin exponent `2(n+s)/(n-2+s)` with `s = sqrt((n-2)^2-4η)`.
pub fn serrin_shifted(n: u32, eta: f64) -> f64 {
    let s = root(n, eta);
    let n = n as f64;
    2.0 * (n + s) / (n - 2.0 + s)
}

/// Upper end of the saddle window: `+∞` for `η ≤ 0`, else `2(n-s)/(n-2-s)`.
pub fn upper_exponent(n: u32, eta: f64) -> ExtReal {
    if eta <= 0.0 {
        return ExtReal::PosInf;
    }
    let s = root(n, eta);
    let n = n as f64;
    ExtReal::Finite(2.0 * (n - s) / (n - 2.0 - s))
}

pub fn critical_exponents(n: u32, eta: f64, beta: f64) -> Result<ExponentBundle> {
    check_dim(n)?;
    check_coupling(n, eta, "eta")?;
    check_coupling(n, beta, "beta")?;
    Ok(ExponentBundle {
        n,
        eta,
        beta,
        serrin: serrin(n),
        sobolev: sobolev(n),
        serrin_eta: serrin_shifted(n, eta),
        upper_eta: upper_exponent(n, eta),
        kappa_eta: kappa(n, eta),
        kappa_beta: kappa(n, beta),
    })
}

pub fn alpha(l: f64) -> f64 {
    2.0 / (l - 2.0)
}

pub fn fowler_params(n: u32, l: f64) -> Result<FowlerParams> {
    check_dim(n)?;
    if !(l > 2.0) {
        return Err(domain(format!("exponent l must exceed 2, got {l}")));
    }
    let a = alpha(l);
    Ok(FowlerParams {
        l,
        alpha: a,
        gamma: a + 2.0 - n as f64,
    })
}

/// `l(q, δ) = 2(q+δ)/(2+δ)`.
pub fn l_shift(q: f64, delta: f64) -> Result<f64> {
    if !(delta > -2.0) {
        return Err(domain(format!("delta must exceed -2, got {delta}")));
    }
    if !(q > 2.0) {
        return Err(domain(format!("q must exceed 2, got {q}")));
    }
    Ok(2.0 * (q + delta) / (2.0 + delta))
}

/// Whether the origin is a saddle: `2_*(η) < l < I(η)`, boundaries excluded.
pub fn saddle_window(n: u32, eta: f64, l: f64) -> Result<bool> {
    check_dim(n)?;
    check_coupling(n, eta, "eta")?;
    if !(l > 2.0) {
        return Err(domain(format!("exponent l must exceed 2, got {l}")));
    }
    Ok(serrin_shifted(n, eta) < l && upper_exponent(n, eta).exceeds(l))
}

/// Exponent of the Kelvin-dual problem, `2 - 2/γ_l`.
pub fn kelvin_exponent(n: u32, l: f64) -> Result<f64> {
    check_dim(n)?;
    if !(l > serrin(n)) {
        return Err(domain(format!(
            "Kelvin exponent needs l > {}, got {l}",
            serrin(n)
        )));
    }
    let nf = n as f64;
    Ok(2.0 * (l * (nf - 1.0) - 2.0 * nf) / (l * (nf - 2.0) - 2.0 * nf + 2.0))
}
