//! Fundamental diagrams: walking speed as a function of the scaled density.
//!
//! All speeds are scaled so that free walking has speed 1 and the maximal
//! density before jamming is 1. The simulator always uses the truncated
//! diagram `max(δ, f(m))`, which keeps the eikonal slowness `1/f` finite.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagramKind {
    /// `1 − m`
    F1,
    /// `min(1, exp(−α (m − k)/(1 − m)))`
    F2,
    /// `1 − exp(−α (1 − m)/m)`
    F3,
    /// `a4 m⁴ − a3 m³ + a2 m² − a1 m + a0`
    F4,
    /// `k1 / (k2 m)^β`, capped at `vmax`
    F5,
}

impl DiagramKind {
    pub const ALL: [DiagramKind; 5] = [
        DiagramKind::F1,
        DiagramKind::F2,
        DiagramKind::F3,
        DiagramKind::F4,
        DiagramKind::F5,
    ];
}

impl fmt::Display for DiagramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagramKind::F1 => "F1",
            DiagramKind::F2 => "F2",
            DiagramKind::F3 => "F3",
            DiagramKind::F4 => "F4",
            DiagramKind::F5 => "F5",
        };
        f.write_str(s)
    }
}

impl FromStr for DiagramKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F1" => Ok(DiagramKind::F1),
            "F2" => Ok(DiagramKind::F2),
            "F3" => Ok(DiagramKind::F3),
            "F4" => Ok(DiagramKind::F4),
            "F5" => Ok(DiagramKind::F5),
            other => Err(Error::Parse(format!(
                "unknown diagram kind `{other}` (expected F1..F5)"
            ))),
        }
    }
}

/// Diagram-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiagramParams<T> {
    Linear,
    /// `f2`; `k` is the density below which speed is 1.
    CappedExponential { alpha: T, k: T },
    Exponential { alpha: T },
    /// `f4` coefficients, sign convention `a4 m⁴ − a3 m³ + a2 m² − a1 m + a0`.
    Quartic { a4: T, a3: T, a2: T, a1: T, a0: T },
    /// `f5`; unbounded at `m = 0`, so the speed is capped at `vmax`.
    Power { k1: T, k2: T, beta: T, vmax: T },
}

/// A fundamental diagram together with its truncation floor `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramSpec<T> {
    params: DiagramParams<T>,
    delta: T,
}

/// Default truncation floor.
pub const DEFAULT_DELTA: f64 = 1e-3;

impl<T: Real> DiagramSpec<T> {
    pub fn new(params: DiagramParams<T>, delta: T) -> Result<Self> {
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::Config(format!("truncation floor delta must lie in (0,1), got {delta}")));
        }
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("diagram parameter `{name}` must be positive, got {v}")))
            }
        };
        match params {
            DiagramParams::Linear => {}
            DiagramParams::CappedExponential { alpha, k } => {
                positive("alpha", alpha)?;
                if !(k > T::zero() && k < T::one()) {
                    return Err(Error::Config(format!("diagram parameter `k` must lie in (0,1), got {k}")));
                }
            }
            DiagramParams::Exponential { alpha } => positive("alpha", alpha)?,
            DiagramParams::Quartic { a4, a3, a2, a1, a0 } => {
                if ![a4, a3, a2, a1, a0].iter().all(|v| v.is_finite()) {
                    return Err(Error::Config("quartic coefficients must be finite".into()));
                }
            }
            DiagramParams::Power { k1, k2, beta, vmax } => {
                positive("k1", k1)?;
                positive("k2", k2)?;
                positive("vmax", vmax)?;
                if !(beta > T::zero() && beta < T::half()) {
                    return Err(Error::Config(format!("diagram parameter `beta` must lie in (0,1/2), got {beta}")));
                }
            }
        }
        Ok(DiagramSpec { params, delta })
    }

    pub fn linear(delta: T) -> Result<Self> {
        Self::new(DiagramParams::Linear, delta)
    }

    /// Quartic diagram with the Predtechenskii–Milinskii coefficients
    /// `(112, 380, 434, 213)/51` and `a0 = 1`.
    pub fn quartic_reference(delta: T) -> Result<Self> {
        let c = |n: f64| T::lit(n) / T::lit(51.0);
        Self::new(
            DiagramParams::Quartic {
                a4: c(112.0),
                a3: c(380.0),
                a2: c(434.0),
                a1: c(213.0),
                a0: T::one(),
            },
            delta,
        )
    }

    /// Default parameters for each kind: `α = 1, k = 0.2` for F2, `α = 1` for
    /// F3, the reference quartic for F4 and `k1 = 0.5, k2 = 1, β = 0.25,
    /// vmax = 2` for F5.
    pub fn with_defaults(kind: DiagramKind, delta: T) -> Result<Self> {
        match kind {
            DiagramKind::F1 => Self::linear(delta),
            DiagramKind::F2 => Self::new(
                DiagramParams::CappedExponential {
                    alpha: T::one(),
                    k: T::lit(0.2),
                },
                delta,
            ),
            DiagramKind::F3 => Self::new(DiagramParams::Exponential { alpha: T::one() }, delta),
            DiagramKind::F4 => Self::quartic_reference(delta),
            DiagramKind::F5 => Self::new(DiagramParams::Power {
                k1: T::lit(F5_DEFAULTS.0),
                k2: T::lit(F5_DEFAULTS.1),
                beta: T::lit(F5_DEFAULTS.2),
                vmax: T::lit(F5_DEFAULTS.3),
            }, delta),
        }
    }

    pub fn kind(&self) -> DiagramKind {
        match self.params {
            DiagramParams::Linear => DiagramKind::F1,
            DiagramParams::CappedExponential { .. } => DiagramKind::F2,
            DiagramParams::Exponential { .. } => DiagramKind::F3,
            DiagramParams::Quartic { .. } => DiagramKind::F4,
            DiagramParams::Power { .. } => DiagramKind::F5,
        }
    }

    pub fn params(&self) -> &DiagramParams<T> {
        &self.params
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Upper bound of [`speed`](Self::speed) over all densities.
    pub fn max_speed(&self) -> T {
        match self.params {
            DiagramParams::Power { vmax, .. } => vmax.max(self.delta),
            DiagramParams::Quartic { a4, a3, a2, a1, a0 } => {
                // sup over the clamped domain [0,1], sampled densely
                let n = 1024;
                (0..=n)
                    .map(|i| {
                        let m = T::from_usize(i).unwrap() / T::from_usize(n).unwrap();
                        quartic(a4, a3, a2, a1, a0, m)
                    })
                    .fold(self.delta, T::max)
            }
            _ => T::one(),
        }
    }

    /// Untruncated diagram value `f(m)`, with the limit conventions
    /// `f2(1) = 0`, `f3(0) = 1`, `f5(0) = +∞`. The arguments of f2, f3 and f4
    /// are clamped to `[0, 1]`.
    pub fn raw(&self, m: T) -> T {
        let clamped = m.max(T::zero()).min(T::one());
        match self.params {
            DiagramParams::Linear => T::one() - m,
            DiagramParams::CappedExponential { alpha, k } => {
                let m = clamped;
                if m >= T::one() {
                    T::zero()
                } else {
                    T::one().min((-alpha * (m - k) / (T::one() - m)).exp())
                }
            }
            DiagramParams::Exponential { alpha } => {
                let m = clamped;
                if m <= T::zero() {
                    T::one()
                } else {
                    T::one() - (-alpha * (T::one() - m) / m).exp()
                }
            }
            DiagramParams::Quartic { a4, a3, a2, a1, a0 } => quartic(a4, a3, a2, a1, a0, clamped),
            DiagramParams::Power { k1, k2, beta, .. } => {
                let base = k2 * m.max(T::zero());
                if base <= T::zero() {
                    T::infinity()
                } else {
                    k1 / base.powf(beta)
                }
            }
        }
    }

    /// Truncated speed `max(δ, f(m))`, additionally capped at `vmax` for F5.
    pub fn speed(&self, m: T) -> T {
        let v = self.raw(m).max(self.delta);
        match self.params {
            DiagramParams::Power { vmax, .. } => v.min(vmax.max(self.delta)),
            _ => v,
        }
    }

    /// Eikonal slowness `1 / speed(m)`.
    pub fn slowness(&self, m: T) -> T {
        self.speed(m).recip()
    }

    /// `n` equally spaced samples `(m, speed(m))` on `[0, 1]`.
    pub fn table(&self, n: usize) -> Result<Vec<(T, T)>> {
        if n < 2 {
            return Err(Error::Argument(format!("diagram table needs at least 2 samples, got {n}")));
        }
        let last = T::from_usize(n - 1).unwrap();
        Ok((0..n)
            .map(|i| {
                let m = T::from_usize(i).unwrap() / last;
                (m, self.speed(m))
            })
            .collect())
    }
}

/// `(k1, k2, beta, vmax)` used for F5 when the scenario omits them.
pub const F5_DEFAULTS: (f64, f64, f64, f64) = (0.5, 1.0, 0.25, 2.0);

#[inline]
fn quartic<T: Real>(a4: T, a3: T, a2: T, a1: T, a0: T, m: T) -> T {
    // Horner form of a4 m^4 - a3 m^3 + a2 m^2 - a1 m + a0
    (((a4 * m - a3) * m + a2) * m - a1) * m + a0
}
