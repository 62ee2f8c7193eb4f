//! Coordinate changes between the radial variables `(r, u, u')` and the
//! Fowler variables `(t, x_l, y_l)`, exponent switching, Kelvin inversion and
//! angle lifting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exponents::alpha;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FowlerState {
    /// Log-radius `t = ln r`.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Exponent the coordinates are expressed in.
    pub l: f64,
    /// Cumulative unwrapped polar angle of `(x, y)`.
    pub phi: f64,
}

impl FowlerState {
    /// State with `phi` set to the principal angle of `(x, y)`.
    pub fn new(t: f64, x: f64, y: f64, l: f64) -> Self {
        FowlerState { t, x, y, l, phi: y.atan2(x) }
    }

    pub fn rho(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalState {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

pub fn to_fowler(p: PhysicalState, l: f64, _n: u32) -> Result<FowlerState> {
    if !(p.r > 0.0) {
        return Err(domain(format!("radius must be positive, got {}", p.r)));
    }
    if !(l > 2.0) {
        return Err(domain(format!("exponent l must exceed 2, got {l}")));
    }
    let a = alpha(l);
    let t = p.r.ln();
    let x = p.u * (a * t).exp();
    let y = p.du * ((a + 1.0) * t).exp();
    Ok(FowlerState::new(t, x, y, l))
}

pub fn from_fowler(s: FowlerState, _n: u32) -> PhysicalState {
    let a = alpha(s.l);
    PhysicalState {
        r: s.t.exp(),
        u: s.x * (-a * s.t).exp(),
        du: s.y * (-(a + 1.0) * s.t).exp(),
    }
}

/// Re-express a state in exponent `l2`; the angle is unchanged.
pub fn switch_l(s: FowlerState, l2: f64) -> Result<FowlerState> {
    if !(l2 > 2.0) {
        return Err(domain(format!("exponent l must exceed 2, got {l2}")));
    }
    let k = ((alpha(l2) - alpha(s.l)) * s.t).exp();
    Ok(FowlerState {
        t: s.t,
        x: s.x * k,
        y: s.y * k,
        l: l2,
        phi: s.phi,
    })
}

/// Kelvin inversion `(t, x, y) -> (-t, x, -y - (n-2) x)`. The map reverses
/// orientation, so the lifted angle is chosen on the branch nearest to `-phi`.
pub fn kelvin(s: FowlerState, n: u32) -> FowlerState {
    let x = s.x;
    let y = -s.y - (n as f64 - 2.0) * s.x;
    FowlerState {
        t: -s.t,
        x,
        y,
        l: s.l,
        phi: nearest_branch(-s.phi, x, y),
    }
}

/// The lift of `atan2(y, x)` closest to `reference`.
pub fn nearest_branch(reference: f64, x: f64, y: f64) -> f64 {
    let a = y.atan2(x);
    let k = ((reference - a) / (2.0 * PI)).round();
    a + 2.0 * PI * k
}

/// Continuous lifting of the polar angle along a sample sequence.
pub fn polar_unwrap(samples: &[(f64, f64)]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(samples.len());
    for (i, &(x, y)) in samples.iter().enumerate() {
        if x == 0.0 && y == 0.0 {
            return Err(Error::OriginSample(i));
        }
        let phi = match out.last() {
            None => y.atan2(x),
            Some(&prev) => nearest_branch(prev, x, y),
        };
        out.push(phi);
    }
    Ok(out)
}

/// `Int[1/2 + φ/π]`: changes exactly when the lifted angle crosses the y-axis.
pub fn half_turn_index(phi: f64) -> i64 {
    (0.5 + phi / PI).floor() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_radius_is_fixed() {
        let s = to_fowler(PhysicalState { r: 1.0, u: 2.0, du: 0.0 }, 5.0, 4).unwrap();
        assert_eq!((s.t, s.x, s.y), (0.0, 2.0, 0.0));
        let p = from_fowler(s, 4);
        assert_eq!((p.r, p.u, p.du), (1.0, 2.0, 0.0));
    }

    #[test]
    fn power_profile_maps_to_constant() {
        let e = std::f64::consts::E;
        let s = to_fowler(PhysicalState { r: e, u: 1.0 / e, du: -1.0 / (e * e) }, 4.0, 4).unwrap();
        assert!((s.t - 1.0).abs() < 1e-15);
        assert!((s.x - 1.0).abs() < 1e-15);
        assert!((s.y + 1.0).abs() < 1e-15);
        let p = from_fowler(FowlerState::new(1.0, 1.0, -1.0, 4.0), 4);
        assert!((p.r - e).abs() < 1e-15 && (p.u - 1.0 / e).abs() < 1e-16);
    }

    #[test]
    fn nonpositive_radius_rejected() {
        assert!(to_fowler(PhysicalState { r: 0.0, u: 1.0, du: 0.0 }, 4.0, 4).is_err());
    }

    #[test]
    fn switch_scaling() {
        let s = FowlerState::new(1.0, 1.0, -1.0, 4.0);
        let w = switch_l(s, 6.0).unwrap();
        let k = (-0.5f64).exp();
        assert!((w.x - k).abs() < 1e-15 && (w.y + k).abs() < 1e-15);
        assert_eq!(w.phi, s.phi);
        let z = FowlerState::new(0.0, 3.0, 2.0, 4.0);
        assert_eq!(switch_l(z, 7.0).unwrap().x, 3.0);
    }

    #[test]
    fn kelvin_examples() {
        let k = kelvin(FowlerState::new(0.0, 1.0, 0.0, 6.0), 4);
        assert_eq!((k.t, k.x, k.y), (0.0, 1.0, -2.0));
        let b = kelvin(k, 4);
        assert_eq!((b.x, b.y), (1.0, 0.0));
        let a = kelvin(FowlerState::new(0.3, 0.0, 2.5, 6.0), 4);
        assert_eq!((a.x, a.y), (0.0, -2.5));
    }

    #[test]
    fn unwrap_examples() {
        let circle: Vec<(f64, f64)> = (0..=100)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 100.0;
                (a.cos(), a.sin())
            })
            .collect();
        let phi = polar_unwrap(&circle).unwrap();
        assert!((phi[100] - 2.0 * PI).abs() < 1e-12);
        assert_eq!(((phi[100] - phi[0]) / (2.0 * PI)).round() as i64, 1);
        let rev: Vec<_> = circle.iter().map(|&(x, y)| (x, -y)).collect();
        let phi = polar_unwrap(&rev).unwrap();
        assert!((phi[100] + 2.0 * PI).abs() < 1e-12);
        let constant = polar_unwrap(&[(1.0, 1.0); 5]).unwrap();
        assert!(constant.iter().all(|&a| a == constant[0]));
        assert!(matches!(polar_unwrap(&[(1.0, 0.0), (0.0, 0.0)]), Err(Error::OriginSample(1))));
    }

    proptest! {
        #[test]
        fn roundtrips(r in 1e-3f64..1e3, u in -10.0f64..10.0, du in -10.0f64..10.0, l in 2.2f64..12.0) {
            let p = PhysicalState { r, u, du };
            let q = from_fowler(to_fowler(p, l, 4).unwrap(), 4);
            prop_assert!((q.r - r).abs() <= 1e-14 * r.max(1.0));
            prop_assert!((q.u - u).abs() <= 1e-14 * u.abs().max(1.0));
            prop_assert!((q.du - du).abs() <= 1e-14 * du.abs().max(1.0));
        }

        #[test]
        fn switch_is_invertible(t in -5.0f64..5.0, x in -3.0f64..3.0, y in -3.0f64..3.0, l1 in 2.5f64..10.0, l2 in 2.5f64..10.0) {
            let s = FowlerState::new(t, x, y, l1);
            let b = switch_l(switch_l(s, l2).unwrap(), l1).unwrap();
            prop_assert!((b.x - x).abs() <= 1e-14 * x.abs().max(1.0));
            prop_assert!((b.y - y).abs() <= 1e-14 * y.abs().max(1.0));
            let p1 = from_fowler(s, 4);
            let p2 = from_fowler(switch_l(s, l2).unwrap(), 4);
            prop_assert!((p1.u - p2.u).abs() <= 1e-12 * p1.u.abs().max(1.0));
        }

        #[test]
        fn kelvin_involution(t in -5.0f64..5.0, x in -3.0f64..3.0, y in -3.0f64..3.0, n in 3u32..10) {
            let s = FowlerState::new(t, x, y, 6.0);
            let b = kelvin(kelvin(s, n), n);
            prop_assert_eq!(b.t, t);
            prop_assert!((b.x - x).abs() <= 1e-14);
            prop_assert!((b.y - y).abs() <= 1e-14 * (1.0 + x.abs() * n as f64));
            prop_assert!((b.phi - s.phi).abs() <= 1e-14);
        }
    }
}
