//! The α-Grushin metric family and its pointwise curvature quantities.
//!
//! All evaluation happens on the half-cylinder `x > 0`; the other half is
//! its mirror image. Curvatures of an embedding refer to the surface of
//! revolution built in [`crate::embedding`], with the unit normal whose
//! profile-plane components are `(−h′, g′)`. Only `H²` enters downstream
//! quantities, so the sign of `H` carries no meaning.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GrushinError, Result};

/// A metric of the family `dx² + |x|^{-2α} dy²`.
///
/// `Winded { n }` carries the Grushin metric (`α = 1`) together with the
/// `n²`-winded bell immersion, which reaches down to `x = 1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrushinModel {
    Alpha { alpha: f64 },
    Winded { n: u32 },
}

impl GrushinModel {
    pub fn alpha(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(GrushinError::invalid(format!(
                "alpha must be finite, got {alpha}"
            )));
        }
        Ok(GrushinModel::Alpha { alpha })
    }

    pub fn winded(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(GrushinError::invalid("winding parameter n must be >= 1"));
        }
        Ok(GrushinModel::Winded { n })
    }

    /// The exponent α of the metric coefficient; winded bells use α = 1.
    pub fn metric_exponent(&self) -> f64 {
        match *self {
            GrushinModel::Alpha { alpha } => alpha,
            GrushinModel::Winded { .. } => 1.0,
        }
    }

    /// Angular speed of the immersion: the angle around the axis is
    /// `rate · y`.
    pub fn angular_rate(&self) -> f64 {
        match *self {
            GrushinModel::Alpha { .. } => 1.0,
            GrushinModel::Winded { n } => f64::from(n) * f64::from(n),
        }
    }

    /// Radius `s₀` at which the revolution embedding stops existing.
    ///
    /// `|α|^{1/(1+α)}` for the α-family, `1/n` for the winded bell. The
    /// punctured plane (`α = −1`) embeds on all of `x > 0` and has none.
    pub fn singular_radius(&self) -> Result<f64> {
        match *self {
            GrushinModel::Alpha { alpha } => {
                if alpha == -1.0 {
                    return Err(GrushinError::domain(
                        "flat-plane case: embedding global on x > 0, no failure radius",
                    ));
                }
                if alpha == 0.0 {
                    return Ok(0.0);
                }
                Ok(alpha.abs().powf(1.0 / (1.0 + alpha)))
            }
            GrushinModel::Winded { n } => Ok(1.0 / f64::from(n)),
        }
    }

    /// Set of `x` on which the revolution embedding exists.
    pub fn validity(&self) -> Interval {
        match *self {
            GrushinModel::Alpha { alpha: 0.0 } => Interval::new(0.0, f64::INFINITY, true, false),
            GrushinModel::Alpha { alpha: -1.0 } => Interval::new(0.0, f64::INFINITY, false, false),
            GrushinModel::Alpha { alpha } if alpha < -1.0 => {
                let s0 = alpha.abs().powf(1.0 / (1.0 + alpha));
                Interval::new(0.0, s0, false, true)
            }
            GrushinModel::Alpha { alpha } => {
                let s0 = alpha.abs().powf(1.0 / (1.0 + alpha));
                Interval::new(s0, f64::INFINITY, true, false)
            }
            GrushinModel::Winded { n } => Interval::new(1.0 / f64::from(n), f64::INFINITY, true, false),
        }
    }

    /// `K = −α(1+α)/x²`; embedding independent.
    pub fn gaussian_curvature(&self, x: f64) -> Result<f64> {
        require_positive(x)?;
        let a = self.metric_exponent();
        Ok(-a * (1.0 + a) / (x * x))
    }

    /// Mean curvature of the revolution embedding at `x`.
    pub fn mean_curvature(&self, x: f64) -> Result<f64> {
        self.require_embedded(x)?;
        match *self {
            GrushinModel::Alpha { alpha } => {
                if alpha == -1.0 {
                    return Ok(0.0);
                }
                let p = x.powf(2.0 * (1.0 + alpha));
                Ok((p - alpha * (1.0 + 2.0 * alpha)) / (2.0 * x * (p - alpha * alpha).sqrt()))
            }
            GrushinModel::Winded { n } => {
                let p = winded_quartic(n, x);
                Ok((p - 3.0) / (2.0 * x * (p - 1.0).sqrt()))
            }
        }
    }

    /// Effective potential `−K + H²` in closed form.
    pub fn effective_potential(&self, x: f64) -> Result<f64> {
        self.require_embedded(x)?;
        match *self {
            GrushinModel::Alpha { alpha } => {
                if alpha == -1.0 {
                    return Ok(0.0);
                }
                let p = x.powf(2.0 * (1.0 + alpha));
                Ok((p + alpha).powi(2) / (4.0 * x * x * (p - alpha * alpha)))
            }
            GrushinModel::Winded { n } => {
                let p = winded_quartic(n, x);
                Ok((p + 1.0).powi(2) / (4.0 * x * x * (p - 1.0)))
            }
        }
    }

    /// Leading pole of the effective potential at the failure radius:
    /// returns `(s₀, c)` with `V_eff(x) = c/(x − s₀) + O(1)`.
    pub fn potential_asymptote(&self) -> Result<(f64, f64)> {
        match *self {
            GrushinModel::Alpha { alpha } => {
                if alpha == 0.0 || alpha == -1.0 {
                    return Err(GrushinError::domain(format!(
                        "no pole: the effective potential is smooth for alpha = {alpha}"
                    )));
                }
                let s0 = self.singular_radius()?;
                Ok((s0, (1.0 + alpha) / (8.0 * s0)))
            }
            GrushinModel::Winded { n } => {
                let n = f64::from(n);
                Ok((1.0 / n, n / 4.0))
            }
        }
    }

    /// Riemannian area density `x^{−α}` (with respect to `dx dy`).
    pub fn area_density(&self, x: f64) -> Result<f64> {
        require_positive(x)?;
        Ok(x.powf(-self.metric_exponent()))
    }

    /// Coefficient `x^{2α}` of the inverse metric, i.e. `g^{yy}`.
    pub fn inverse_metric_yy(&self, x: f64) -> f64 {
        let a = self.metric_exponent();
        if a == 1.0 {
            x * x
        } else {
            x.abs().powf(2.0 * a)
        }
    }

    pub fn curvature_sample(&self, x: f64) -> Result<CurvatureSample> {
        let k = self.gaussian_curvature(x)?;
        let h = self.mean_curvature(x)?;
        let v = self.effective_potential(x)?;
        Ok(CurvatureSample {
            x,
            gaussian: k,
            mean: h,
            effective_potential: v,
        })
    }

    fn require_embedded(&self, x: f64) -> Result<()> {
        require_positive(x)?;
        let v = self.validity();
        if !v.contains_interior(x) {
            return Err(GrushinError::domain(format!(
                "embedding undefined here: x = {x} is not inside {v} for {self}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for GrushinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GrushinModel::Alpha { alpha } => write!(f, "alpha={alpha}"),
            GrushinModel::Winded { n } => write!(f, "winded={n}"),
        }
    }
}

fn winded_quartic(n: u32, x: f64) -> f64 {
    let nx = f64::from(n) * x;
    let sq = nx * nx;
    sq * sq
}

fn require_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(GrushinError::domain(format!(
            "x = {x} is outside the half-cylinder x > 0"
        )))
    }
}

/// Curvature quantities at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub x: f64,
    /// `K` (1/length²).
    pub gaussian: f64,
    /// `H` (1/length).
    pub mean: f64,
    /// `−K + H²` (1/length²).
    pub effective_potential: f64,
}

/// A real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below && x.is_finite()
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.lo && x < self.hi && x.is_finite()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alpha(a: f64) -> GrushinModel {
        GrushinModel::alpha(a).unwrap()
    }

    #[test]
    fn singular_radius_values() {
        assert_eq!(alpha(1.0).singular_radius().unwrap(), 1.0);
        assert_eq!(alpha(0.0).singular_radius().unwrap(), 0.0);
        // 2^{1/3}, 2^{-1}, (1/2)^2
        assert_relative_eq!(
            alpha(2.0).singular_radius().unwrap(),
            1.259_921_049_894_873_2,
            max_relative = 1e-15
        );
        assert_relative_eq!(alpha(-2.0).singular_radius().unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(alpha(-0.5).singular_radius().unwrap(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(
            GrushinModel::winded(3).unwrap().singular_radius().unwrap(),
            1.0 / 3.0
        );
        assert!(matches!(
            alpha(-1.0).singular_radius(),
            Err(GrushinError::Domain(_))
        ));
    }

    #[test]
    fn gaussian_curvature_values() {
        assert_eq!(alpha(1.0).gaussian_curvature(2.0).unwrap(), -0.5);
        assert_eq!(alpha(0.0).gaussian_curvature(3.7).unwrap(), 0.0);
        assert_eq!(alpha(-1.0).gaussian_curvature(0.3).unwrap(), 0.0);
        assert_eq!(alpha(2.0).gaussian_curvature(1.0).unwrap(), -6.0);
        assert!(alpha(1.0).gaussian_curvature(0.0).is_err());
        assert!(alpha(1.0).gaussian_curvature(-1.0).is_err());
    }

    #[test]
    fn mean_curvature_values() {
        assert_relative_eq!(alpha(0.0).mean_curvature(0.7).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(alpha(-1.0).mean_curvature(2.0).unwrap(), 0.0);
        let root = 3f64.powf(0.25);
        assert!(alpha(1.0).mean_curvature(root).unwrap().abs() < 1e-15);
        let w1 = GrushinModel::winded(1).unwrap();
        assert_relative_eq!(
            w1.mean_curvature(2.0).unwrap(),
            0.839_146_391_678_273_7,
            max_relative = 1e-14
        );
    }

    #[test]
    fn mean_curvature_outside_validity_is_rejected() {
        assert!(alpha(1.0).mean_curvature(1.0).is_err());
        assert!(alpha(1.0).mean_curvature(0.5).is_err());
        assert!(alpha(-2.0).mean_curvature(0.5).is_err());
        assert!(alpha(-2.0).mean_curvature(0.7).is_err());
        assert!(alpha(-2.0).mean_curvature(0.3).is_ok());
        assert!(GrushinModel::winded(2).unwrap().mean_curvature(0.5).is_err());
    }

    #[test]
    fn effective_potential_values() {
        assert_relative_eq!(
            alpha(0.0).effective_potential(5.0).unwrap(),
            0.25,
            max_relative = 1e-15
        );
        // (x⁴+1)²/(4x²(x⁴−1)) at 1.01, evaluated in 30-digit arithmetic.
        let v = alpha(1.0).effective_potential(1.01).unwrap();
        assert_relative_eq!(v, 25.133_085_377_576_752, max_relative = 1e-12);
        assert!((v - 25.0).abs() / 25.0 < 0.02);
        let root = 3f64.powf(0.25);
        assert_relative_eq!(
            alpha(1.0).effective_potential(root).unwrap(),
            2.0 / 3f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn asymptote_values() {
        assert_eq!(alpha(1.0).potential_asymptote().unwrap(), (1.0, 0.25));
        assert_eq!(
            GrushinModel::winded(2).unwrap().potential_asymptote().unwrap(),
            (0.5, 0.5)
        );
        assert!(alpha(0.0).potential_asymptote().is_err());
        assert!(alpha(-1.0).potential_asymptote().is_err());
        let m = alpha(1.0);
        for d in [1e-2, 1e-3, 1e-4] {
            let r = m.effective_potential(1.0 + d).unwrap() * d / 0.25;
            assert!((r - 1.0).abs() < 10.0 * d, "ratio {r} at {d}");
        }
    }

    #[test]
    fn area_density_values() {
        assert_eq!(alpha(1.0).area_density(4.0).unwrap(), 0.25);
        assert_eq!(alpha(0.0).area_density(2.5).unwrap(), 1.0);
        assert_relative_eq!(alpha(-2.0).area_density(3.0).unwrap(), 9.0, max_relative = 1e-15);
        assert_eq!(GrushinModel::winded(4).unwrap().area_density(2.0).unwrap(), 0.5);
        assert!(alpha(1.0).area_density(0.0).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(GrushinModel::alpha(f64::NAN).is_err());
        assert!(GrushinModel::winded(0).is_err());
    }

    #[test]
    fn validity_intervals() {
        assert_eq!(
            alpha(1.0).validity(),
            Interval::new(1.0, f64::INFINITY, true, false)
        );
        let v = alpha(-2.0).validity();
        assert!(v.contains(0.5) && !v.contains(0.0) && v.contains(1e-9));
        assert!(alpha(0.0).validity().contains(0.0));
        assert!(!alpha(-1.0).validity().contains(0.0));
    }
}
