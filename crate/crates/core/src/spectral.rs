//! Fourier-mode fiber operators of the quantized Laplacians and Weyl
//! limit-point / limit-circle classification of their endpoints.
//!
//! On a mode `e^{iky}` the Laplace–Beltrami operator acts as
//! `∂x² − k²x^{2α} − (α/x)∂x` on `L²(x^{−α}dx)`. After the unitary map
//! `f ↦ x^{−α/2} f` onto `L²(dx)` the negative of each quantized operator
//! becomes the Schrödinger operator `−d²/dx² + V_k` with
//!
//! * intrinsic `Δ − cK`: `V_k = k²x^{2α} + [(α/2)(1+α/2) − cα(1+α)]/x²`,
//! * extrinsic `Δ − K + H²`: `V_k = k²x^{2α} + (α/2)(1+α/2)/x² − V_eff`.

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{GrushinError, Result};
use crate::geometry::GrushinModel;
use crate::ode::{dopri5_until, Tolerance};
use crate::quadrature::GaussRule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantization {
    Intrinsic { c: f64 },
    Extrinsic,
    WindedExtrinsic { n: u32 },
}

impl fmt::Display for Quantization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantization::Intrinsic { c } => write!(f, "intrinsic(c={c})"),
            Quantization::Extrinsic => write!(f, "extrinsic"),
            Quantization::WindedExtrinsic { n } => write!(f, "winded-extrinsic(n={n})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// `−d²/dx² + V_k` on an open interval whose ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberOperator {
    model: GrushinModel,
    quantization: Quantization,
    k: i64,
    left: f64,
    right: f64,
}

impl FiberOperator {
    /// Builds the mode-`k` fiber.
    ///
    /// Intrinsic fibers live on `x > 0` (the whole line for the flat
    /// cylinder). Extrinsic fibers live where the embedding exists. A winded
    /// model with `Extrinsic`, or an `Alpha(1)` model with
    /// `WindedExtrinsic { n }`, both resolve to the winded bell.
    pub fn new(model: GrushinModel, quantization: Quantization, k: i64) -> Result<Self> {
        let (model, quantization) = match (model, quantization) {
            (GrushinModel::Winded { n }, Quantization::Extrinsic) => {
                (model, Quantization::WindedExtrinsic { n })
            }
            (_, Quantization::WindedExtrinsic { n }) => {
                if model.metric_exponent() != 1.0 {
                    return Err(GrushinError::invalid(format!(
                        "winded quantization needs the alpha = 1 metric, got {model}"
                    )));
                }
                if let GrushinModel::Winded { n: m } = model {
                    if m != n {
                        return Err(GrushinError::invalid(format!(
                            "winding mismatch: model n = {m}, quantization n = {n}"
                        )));
                    }
                }
                (GrushinModel::winded(n)?, quantization)
            }
            (_, Quantization::Intrinsic { c }) => {
                if !(c >= 0.0) || !c.is_finite() {
                    return Err(GrushinError::invalid(format!(
                        "c must be finite and >= 0, got {c}"
                    )));
                }
                (model, quantization)
            }
            _ => (model, quantization),
        };
        let a = model.metric_exponent();
        let (left, right) = match quantization {
            _ if matches!(model, GrushinModel::Alpha { .. }) && a == 0.0 => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Quantization::Intrinsic { .. } => (0.0, f64::INFINITY),
            _ => {
                let v = model.validity();
                (v.lo, v.hi)
            }
        };
        Ok(FiberOperator {
            model,
            quantization,
            k,
            left,
            right,
        })
    }

    pub fn model(&self) -> GrushinModel {
        self.model
    }

    pub fn quantization(&self) -> Quantization {
        self.quantization
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.left, self.right)
    }

    pub fn endpoint(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    /// The side whose endpoint sits at `position` (`±inf` allowed).
    pub fn side_at(&self, position: f64) -> Result<Side> {
        let close =
            |e: f64| e == position || (e.is_finite() && (e - position).abs() <= 1e-12 * e.abs().max(1.0));
        if close(self.left) {
            Ok(Side::Left)
        } else if close(self.right) {
            Ok(Side::Right)
        } else {
            Err(GrushinError::invalid(format!(
                "{position} is not an endpoint of ({}, {})",
                self.left, self.right
            )))
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.left && x < self.right
    }

    fn k2(&self) -> f64 {
        (self.k as f64) * (self.k as f64)
    }

    /// Coefficient `(α/2)(1+α/2) − cα(1+α)` of `1/x²` for intrinsic fibers.
    fn intrinsic_gamma(&self, c: f64) -> (f64, f64) {
        let a = self.model.metric_exponent();
        let base = 0.5 * a * (1.0 + 0.5 * a);
        let curv = c * a * (1.0 + a);
        // excess over 3/4, formed so that α = 1 gives exactly −2c
        ((base - curv), (base - 0.75) - curv)
    }

    /// `V_k(x)`.
    pub fn potential(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            return Err(GrushinError::domain(format!(
                "x = {x} is outside the fiber interval ({}, {})",
                self.left, self.right
            )));
        }
        Ok(self.potential_unchecked(x))
    }

    fn potential_unchecked(&self, x: f64) -> f64 {
        let a = self.model.metric_exponent();
        let kinetic = self.k2() * self.model.inverse_metric_yy(x);
        match self.quantization {
            Quantization::Intrinsic { c } => kinetic + inverse_square(self.intrinsic_gamma(c).0, x),
            _ => {
                let veff = if a == 0.0 && matches!(self.model, GrushinModel::Alpha { .. }) {
                    0.25
                } else {
                    self.model.effective_potential(x).unwrap_or(f64::NAN)
                };
                kinetic + inverse_square(0.5 * a * (1.0 + 0.5 * a), x) - veff
            }
        }
    }

    /// Leading behaviour of `V_k` at one end.
    pub fn asymptotics(&self, side: Side) -> Asymptotic {
        let a = self.model.metric_exponent();
        let k2 = self.k2();
        let end = self.endpoint(side);
        if end.is_infinite() {
            let (coef, exponent) = match self.quantization {
                Quantization::Intrinsic { .. } => {
                    if k2 != 0.0 && a > 0.0 {
                        (k2, 2.0 * a)
                    } else {
                        (k2, 0.0)
                    }
                }
                Quantization::Extrinsic => {
                    if a == 0.0 {
                        (k2 - 0.25, 0.0)
                    } else {
                        // V = (k² − 1/4) x^{2α} + O(x^{−4−2α})
                        (k2 - 0.25, 2.0 * a)
                    }
                }
                Quantization::WindedExtrinsic { n } => {
                    let n4 = f64::from(n).powi(4);
                    (k2 - 0.25 * n4, 2.0)
                }
            };
            return Asymptotic::AtInfinity { coef, exponent };
        }
        match self.quantization {
            Quantization::Intrinsic { c } => {
                let (gamma, excess) = self.intrinsic_gamma(c);
                if a < -1.0 && k2 != 0.0 {
                    Asymptotic::Power {
                        coef: k2,
                        exponent: -2.0 * a,
                    }
                } else if a == -1.0 {
                    Asymptotic::InverseSquare {
                        gamma: gamma + k2,
                        excess: excess + k2,
                    }
                } else if gamma != 0.0 {
                    Asymptotic::InverseSquare { gamma, excess }
                } else if k2 != 0.0 && a < 0.0 {
                    Asymptotic::Power {
                        coef: k2,
                        exponent: -2.0 * a,
                    }
                } else {
                    Asymptotic::Bounded
                }
            }
            Quantization::Extrinsic | Quantization::WindedExtrinsic { .. } => {
                if let Ok((s0, c)) = self.model.potential_asymptote() {
                    if end == s0 {
                        return Asymptotic::SimplePole { coef: -c };
                    }
                }
                if a == -1.0 {
                    Asymptotic::InverseSquare {
                        gamma: k2 - 0.25,
                        excess: k2 - 1.0,
                    }
                } else if a < -1.0 {
                    // V = (k² − 1/4) x^{2α} + O(x^{−4−2α}) near 0
                    Asymptotic::Power {
                        coef: k2 - 0.25,
                        exponent: -2.0 * a,
                    }
                } else {
                    Asymptotic::Bounded
                }
            }
        }
    }

    /// Analytic Weyl classification of one endpoint.
    pub fn classify_endpoint(&self, side: Side) -> Result<EndpointClass> {
        let asym = self.asymptotics(side);
        let endpoint = self.endpoint(side);
        let mut out = EndpointClass {
            endpoint,
            kind: EndpointKind::LimitPoint,
            borderline: false,
            evidence: Evidence::BoundedNearEndpoint,
            gamma: None,
            pole_coefficient: None,
        };
        let unclassified = || {
            GrushinError::Unclassified(format!(
                "asymptotics {asym:?} at {endpoint} match no implemented criterion"
            ))
        };
        match asym {
            Asymptotic::InverseSquare { gamma, excess } => {
                if !gamma.is_finite() || !excess.is_finite() {
                    return Err(unclassified());
                }
                out.evidence = Evidence::InverseSquare;
                out.gamma = Some(gamma);
                out.borderline = excess == 0.0;
                out.kind = if excess >= 0.0 {
                    EndpointKind::LimitPoint
                } else {
                    EndpointKind::LimitCircle
                };
            }
            Asymptotic::Power { coef, exponent } => {
                if !coef.is_finite() || !exponent.is_finite() || exponent == 2.0 {
                    return Err(unclassified());
                }
                out.evidence = Evidence::DominantPower;
                out.kind = if exponent > 2.0 && coef > 0.0 {
                    EndpointKind::LimitPoint
                } else if exponent < 2.0 || coef < 0.0 {
                    EndpointKind::LimitCircle
                } else {
                    return Err(unclassified());
                };
            }
            Asymptotic::SimplePole { coef } => {
                if !coef.is_finite() {
                    return Err(unclassified());
                }
                out.evidence = Evidence::SimplePole;
                out.pole_coefficient = Some(coef);
                out.kind = EndpointKind::LimitCircle;
            }
            Asymptotic::Bounded => {
                out.evidence = Evidence::BoundedNearEndpoint;
                out.kind = EndpointKind::LimitCircle;
            }
            Asymptotic::AtInfinity { coef, exponent } => {
                if !coef.is_finite() || !exponent.is_finite() {
                    return Err(unclassified());
                }
                out.kind = EndpointKind::LimitPoint;
                out.evidence = if exponent <= 0.0 || coef == 0.0 {
                    Evidence::BoundedAtInfinity
                } else if coef > 0.0 {
                    Evidence::GrowthAtInfinity
                } else if exponent <= 2.0 {
                    Evidence::SubquadraticDecreaseAtInfinity
                } else {
                    out.kind = EndpointKind::LimitCircle;
                    Evidence::SuperquadraticDecreaseAtInfinity
                };
            }
        }
        Ok(out)
    }

    /// Point from which the Weyl solutions are launched.
    pub fn weyl_anchor(&self) -> f64 {
        match (self.left.is_finite(), self.right.is_finite()) {
            (true, true) => 0.5 * (self.left + self.right),
            (true, false) => self.left + 1.0,
            (false, true) => self.right - 1.0,
            (false, false) => 0.0,
        }
    }

    /// Abscissa of the cutoff `δ` toward `side`: `δ` away from a finite
    /// end, `1/δ` beyond the anchor toward an infinite one.
    pub fn cutoff_position(&self, side: Side, delta: f64) -> f64 {
        let end = self.endpoint(side);
        let anchor = self.weyl_anchor();
        match (side, end.is_finite()) {
            (Side::Left, true) => end + delta,
            (Side::Right, true) => end - delta,
            (Side::Left, false) => anchor - 1.0 / delta,
            (Side::Right, false) => anchor + 1.0 / delta,
        }
    }

    pub fn default_cutoffs(&self, side: Side) -> Vec<f64> {
        if self.endpoint(side).is_finite() {
            vec![1e-2, 1e-3, 1e-4]
        } else {
            vec![1e-1, 1e-2, 1e-3]
        }
    }
}

/// `γ/x²`, read as zero when `γ = 0` so that regular fibers may cross `x = 0`.
fn inverse_square(gamma: f64, x: f64) -> f64 {
    if gamma == 0.0 {
        0.0
    } else {
        gamma / (x * x)
    }
}

/// Leading term of a fiber potential at an endpoint; `d` is the distance
/// to a finite end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptotic {
    /// `V ≈ γ/d²`; `excess = γ − 3/4`, computed without rounding at α = 1.
    InverseSquare {
        gamma: f64,
        excess: f64,
    },
    /// `V ≈ coef · d^{−exponent}` with `exponent ≠ 2`.
    Power {
        coef: f64,
        exponent: f64,
    },
    /// `V ≈ coef/(x − end)`.
    SimplePole {
        coef: f64,
    },
    Bounded,
    /// `V ≈ coef · |x|^{exponent}`; `exponent ≤ 0` means bounded.
    AtInfinity {
        coef: f64,
        exponent: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    LimitPoint,
    LimitCircle,
}

impl EndpointKind {
    pub fn short(&self) -> &'static str {
        match self {
            EndpointKind::LimitPoint => "LP",
            EndpointKind::LimitCircle => "LC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    /// `γ/d²` against the 3/4 threshold.
    InverseSquare,
    /// A power stronger or weaker than `d^{−2}` dominates.
    DominantPower,
    /// `c/d`, bounded above by `(3/4 − ε)/d²`.
    SimplePole,
    BoundedNearEndpoint,
    GrowthAtInfinity,
    BoundedAtInfinity,
    /// `V ≥ −C x²` eventually (Sears).
    SubquadraticDecreaseAtInfinity,
    SuperquadraticDecreaseAtInfinity,
    NumericalWeyl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointClass {
    #[serde(serialize_with = "serialize_position")]
    pub endpoint: f64,
    #[serde(rename = "class")]
    pub kind: EndpointKind,
    pub borderline: bool,
    pub evidence: Evidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pole_coefficient: Option<f64>,
}

fn serialize_position<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// One classification as emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationRecord {
    pub model: GrushinModel,
    pub quantization: Quantization,
    pub k: i64,
    #[serde(flatten)]
    pub class: EndpointClass,
}

pub fn classification_record(op: &FiberOperator, side: Side) -> Result<ClassificationRecord> {
    Ok(ClassificationRecord {
        model: op.model,
        quantization: op.quantization,
        k: op.k,
        class: op.classify_endpoint(side)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MassBehavior {
    Converged,
    Divergent,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylRow {
    pub cutoff: f64,
    pub position: f64,
    pub mass: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeylVerdict {
    LimitPoint,
    LimitCircle,
    Inconclusive,
}

impl WeylVerdict {
    pub fn agrees_with(&self, kind: EndpointKind) -> bool {
        matches!(
            (self, kind),
            (WeylVerdict::LimitPoint, EndpointKind::LimitPoint)
                | (WeylVerdict::LimitCircle, EndpointKind::LimitCircle)
        )
    }
}

/// Masses `M_j(δ) = ∫|u_j|²` between each cutoff and the anchor for the
/// two solutions of `−u″ + (V_k − i)u = 0` with `(u, u′)(anchor) = (1, 0)`
/// and `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylReport {
    pub anchor: f64,
    pub rows: Vec<WeylRow>,
    pub behavior: [MassBehavior; 2],
    pub verdict: WeylVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Mass increments shrinking by at least this factor count as convergent.
pub const WEYL_CONVERGED_RATIO: f64 = 0.5;
/// Mass increments shrinking by at most this factor count as divergent.
pub const WEYL_DIVERGENT_RATIO: f64 = 0.9;
const WEYL_BLOWUP: f64 = 1e200;

fn mass_behavior(masses: &[f64], blew_up: bool) -> MassBehavior {
    if blew_up {
        return MassBehavior::Divergent;
    }
    if masses.len() < 3 {
        return MassBehavior::Undetermined;
    }
    let n = masses.len();
    let d_prev = masses[n - 2] - masses[n - 3];
    let d_last = masses[n - 1] - masses[n - 2];
    if d_last <= 1e-12 * masses[n - 1] {
        return MassBehavior::Converged;
    }
    if d_prev <= 0.0 {
        return MassBehavior::Undetermined;
    }
    let rho = d_last / d_prev;
    if rho <= WEYL_CONVERGED_RATIO {
        MassBehavior::Converged
    } else if rho >= WEYL_DIVERGENT_RATIO {
        MassBehavior::Divergent
    } else {
        MassBehavior::Undetermined
    }
}

/// Numerical Weyl alternative at one endpoint.
///
/// Solutions are integrated with adaptive Dormand–Prince at relative
/// tolerance 1e−10 from the anchor through each cutoff. A solution whose
/// mass exceeds 1e200 is recorded as divergent and ends the table for it.
pub fn weyl_numerical_check(op: &FiberOperator, side: Side, cutoffs: &[f64]) -> Result<WeylReport> {
    if cutoffs.is_empty() {
        return Err(GrushinError::invalid("at least one cutoff is required"));
    }
    if cutoffs.iter().any(|d| !(*d > 0.0)) || cutoffs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(GrushinError::invalid(
            "cutoffs must be positive and strictly decreasing",
        ));
    }
    let anchor = op.weyl_anchor();
    let positions: Vec<f64> = cutoffs.iter().map(|&d| op.cutoff_position(side, d)).collect();
    let toward = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    if (positions[0] - anchor) * toward <= 0.0 || !op.contains(positions[0]) {
        return Err(GrushinError::invalid(format!(
            "largest cutoff {} does not lie between the anchor {anchor} and the endpoint",
            cutoffs[0]
        )));
    }
    let tol = Tolerance {
        rtol: 1e-10,
        atol: 1e-12,
        max_steps: 5_000_000,
    };
    let rhs = |x: f64, s: &[f64; 5]| {
        let v = op.potential_unchecked(x);
        [
            s[2],
            s[3],
            v * s[0] + s[1],
            v * s[1] - s[0],
            toward * (s[0] * s[0] + s[1] * s[1]),
        ]
    };
    let mut masses = [Vec::new(), Vec::new()];
    let mut blew_up = [false; 2];
    let mut diagnostic = None;
    for (j, init) in [[1.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0, 0.0]]
        .into_iter()
        .enumerate()
    {
        let mut x = anchor;
        let mut s = init;
        for &p in &positions {
            let h0 = 1e-3 * (p - x).abs().min(1.0);
            match dopri5_until(rhs, x, s, p, h0, tol, |s| s[4] > WEYL_BLOWUP || !s[4].is_finite()) {
                Ok((_, _, true)) => {
                    blew_up[j] = true;
                    diagnostic = Some(format!("solution {} blew up before x = {p}", j + 1));
                    break;
                }
                Ok((_, y, false)) => {
                    s = y;
                    x = p;
                    masses[j].push(s[4]);
                }
                Err(e) => {
                    blew_up[j] = true;
                    diagnostic = Some(format!("solution {} stopped before x = {p}: {e}", j + 1));
                    break;
                }
            }
        }
    }
    let rows = cutoffs
        .iter()
        .zip(&positions)
        .enumerate()
        .map(|(i, (&cutoff, &position))| WeylRow {
            cutoff,
            position,
            mass: [
                masses[0].get(i).copied().unwrap_or(f64::INFINITY),
                masses[1].get(i).copied().unwrap_or(f64::INFINITY),
            ],
        })
        .collect();
    let behavior = [
        mass_behavior(&masses[0], blew_up[0]),
        mass_behavior(&masses[1], blew_up[1]),
    ];
    let verdict = if behavior.contains(&MassBehavior::Divergent) {
        WeylVerdict::LimitPoint
    } else if behavior.iter().all(|b| *b == MassBehavior::Converged) {
        WeylVerdict::LimitCircle
    } else {
        WeylVerdict::Inconclusive
    };
    Ok(WeylReport {
        anchor,
        rows,
        behavior,
        verdict,
        diagnostic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberDeficiency {
    pub k: i64,
    pub left: EndpointClass,
    pub right: EndpointClass,
    /// Both deficiency indices of this fiber (they coincide for real `V`).
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficiencyReport {
    pub model: GrushinModel,
    pub quantization: Quantization,
    pub fibers: Vec<FiberDeficiency>,
    pub total_index: u32,
    pub essentially_self_adjoint: bool,
}

/// Per-mode deficiency indices: one for each limit-circle end.
pub fn deficiency_report(
    model: GrushinModel,
    quantization: Quantization,
    k_range: std::ops::RangeInclusive<i64>,
) -> Result<DeficiencyReport> {
    let ks: Vec<i64> = k_range.collect();
    let fibers = ks
        .par_iter()
        .map(|&k| {
            let op = FiberOperator::new(model, quantization, k)?;
            let left = op.classify_endpoint(Side::Left)?;
            let right = op.classify_endpoint(Side::Right)?;
            let index = [left.kind, right.kind]
                .iter()
                .filter(|c| **c == EndpointKind::LimitCircle)
                .count() as u32;
            Ok(FiberDeficiency {
                k,
                left,
                right,
                index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_index = fibers.iter().map(|f| f.index).sum();
    let (model, quantization) = match fibers.first() {
        Some(_) => {
            let op = FiberOperator::new(model, quantization, 0)?;
            (op.model, op.quantization)
        }
        None => (model, quantization),
    };
    Ok(DeficiencyReport {
        model,
        quantization,
        fibers,
        total_index,
        essentially_self_adjoint: total_index == 0,
    })
}

/// Quadratic forms of one smooth compactly supported `f` on `[a, b]`.
///
/// Returns `(original, transformed)`: the mode-`k` form of the negative
/// quantized Laplacian on `L²(x^{−α}dx)`, and the Schrödinger form of
/// `u = x^{−α/2} f` on `L²(dx)`. `f` yields `(f, f′)`.
pub fn quadratic_forms(
    op: &FiberOperator,
    f: impl Fn(f64) -> (f64, f64),
    support: (f64, f64),
    nodes: usize,
) -> Result<(f64, f64)> {
    let (a, b) = support;
    if !(op.contains(a) && op.contains(b) && a < b) {
        return Err(GrushinError::domain(format!(
            "support [{a}, {b}] must lie inside the fiber interval"
        )));
    }
    let m = op.model;
    let alpha = m.metric_exponent();
    let k2 = op.k2();
    let rule = GaussRule::new(nodes, a, b);
    let curvature_term = |x: f64| -> f64 {
        match op.quantization {
            Quantization::Intrinsic { c } => c * m.gaussian_curvature(x).unwrap_or(f64::NAN),
            _ => {
                op.potential_unchecked(x)
                    - k2 * m.inverse_metric_yy(x)
                    - inverse_square(0.5 * alpha * (1.0 + 0.5 * alpha), x)
            }
        }
    };
    let original = rule.integrate(|x| {
        let (v, dv) = f(x);
        (dv * dv + (k2 * m.inverse_metric_yy(x) + curvature_term(x)) * v * v) * x.powf(-alpha)
    });
    let transformed = rule.integrate(|x| {
        let (v, dv) = f(x);
        let w = x.powf(-0.5 * alpha);
        let u = w * v;
        let du = w * (dv - 0.5 * alpha * v / x);
        du * du + op.potential_unchecked(x) * u * u
    });
    Ok((original, transformed))
}

/// One operator-endpoint pair of the reference corpus with its expected
/// class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusEntry {
    pub label: &'static str,
    pub op: FiberOperator,
    pub side: Side,
    pub expected: EndpointKind,
}

/// Reference verdicts for the Grushin cylinder and its embeddings.
pub fn classification_corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    let grushin = GrushinModel::Alpha { alpha: 1.0 };
    let push = |out: &mut Vec<CorpusEntry>, label, model, q, k, side, expected| {
        out.push(CorpusEntry {
            label,
            op: FiberOperator::new(model, q, k).expect("corpus operators are valid"),
            side,
            expected,
        });
    };
    use EndpointKind::*;
    for k in -5..=5 {
        let q = Quantization::Intrinsic { c: 0.0 };
        push(
            &mut out,
            "intrinsic c=0, alpha=1, x=0",
            grushin,
            q,
            k,
            Side::Left,
            LimitPoint,
        );
        push(
            &mut out,
            "intrinsic c=0, alpha=1, x=inf",
            grushin,
            q,
            k,
            Side::Right,
            LimitPoint,
        );
    }
    for c in [1.0 / 6.0, 1.0 / 3.0, 0.5] {
        let q = Quantization::Intrinsic { c };
        push(
            &mut out,
            "intrinsic c>0, alpha=1, k=0, x=0",
            grushin,
            q,
            0,
            Side::Left,
            LimitCircle,
        );
    }
    for k in -5..=5 {
        push(
            &mut out,
            "extrinsic, alpha=1, x=1",
            grushin,
            Quantization::Extrinsic,
            k,
            Side::Left,
            LimitCircle,
        );
    }
    for n in 1..=3 {
        push(
            &mut out,
            "winded extrinsic, x=1/n",
            grushin,
            Quantization::WindedExtrinsic { n },
            0,
            Side::Left,
            LimitCircle,
        );
    }
    for alpha in [-2.0, -0.5, 0.5, 1.0, 2.0] {
        let side = if alpha < -1.0 { Side::Right } else { Side::Left };
        push(
            &mut out,
            "extrinsic, x=s0",
            GrushinModel::Alpha { alpha },
            Quantization::Extrinsic,
            0,
            side,
            LimitCircle,
        );
    }
    push(
        &mut out,
        "extrinsic, alpha=-2, k=0, x=0",
        GrushinModel::Alpha { alpha: -2.0 },
        Quantization::Extrinsic,
        0,
        Side::Left,
        LimitCircle,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alpha(a: f64) -> GrushinModel {
        GrushinModel::alpha(a).unwrap()
    }

    fn op(m: GrushinModel, q: Quantization, k: i64) -> FiberOperator {
        FiberOperator::new(m, q, k).unwrap()
    }

    #[test]
    fn intrinsic_potential_examples() {
        let o = op(alpha(1.0), Quantization::Intrinsic { c: 0.0 }, 0);
        assert_eq!(o.potential(2.0).unwrap(), 0.1875);
        let o = op(alpha(1.0), Quantization::Intrinsic { c: 0.375 }, 0);
        assert_eq!(o.potential(2.0).unwrap(), 0.0);
        for c in [0.0, 0.1, 1.0 / 3.0, 2.0] {
            let o = op(alpha(1.0), Quantization::Intrinsic { c }, 0);
            assert_relative_eq!(o.potential(3.0).unwrap() * 9.0, 0.75 - 2.0 * c, epsilon = 1e-14);
        }
    }

    #[test]
    fn extrinsic_potential_has_quarter_pole() {
        let o = op(alpha(1.0), Quantization::Extrinsic, 0);
        let expected = [(1e-3, 0.6226901522394393), (1e-5, 0.6249768752656210)];
        for (d, want) in expected {
            let got = o.potential(1.0 + d).unwrap() + 0.25 / d;
            assert!((got - want).abs() < 1e-6, "d={d}: {got}");
        }
    }

    #[test]
    fn extrinsic_potential_matches_grushin_display() {
        for k in [0, 1, -3] {
            let o = op(alpha(1.0), Quantization::Extrinsic, k);
            for x in [1.01, 1.5, 2.0, 4.0] {
                let k2 = (k * k) as f64;
                let x4 = x * x * x * x;
                let want = k2 * x * x + 0.75 / (x * x) - (x4 + 1.0).powi(2) / (4.0 * x * x * (x4 - 1.0));
                assert_relative_eq!(o.potential(x).unwrap(), want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn extrinsic_inverse_square_terms_cancel() {
        // V = (k² − 1/4) x^{2α} − α²(1+α)²/(4x²(x^{2(1+α)} − α²)) exactly.
        for a in [-2.0, -0.5, 0.5, 2.0, 3.0] {
            for k in [0i64, 2] {
                let o = op(alpha(a), Quantization::Extrinsic, k);
                let (lo, hi) = o.interval();
                for t in [0.1, 0.4, 0.8] {
                    let x = if hi.is_finite() {
                        lo + t * (hi - lo)
                    } else {
                        lo + 3.0 * t
                    };
                    let p = x.powf(2.0 * (1.0 + a));
                    let want = ((k * k) as f64 - 0.25) * x.powf(2.0 * a)
                        - a * a * (1.0 + a).powi(2) / (4.0 * x * x * (p - a * a));
                    assert_relative_eq!(
                        o.potential(x).unwrap(),
                        want,
                        max_relative = 1e-10,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn potential_rejects_points_outside_interval() {
        let o = op(alpha(1.0), Quantization::Extrinsic, 0);
        assert!(matches!(o.potential(0.5), Err(GrushinError::Domain(_))));
    }

    #[test]
    fn classification_examples() {
        let c = op(alpha(1.0), Quantization::Extrinsic, 3)
            .classify_endpoint(Side::Left)
            .unwrap();
        assert_eq!(
            (c.kind, c.evidence),
            (EndpointKind::LimitCircle, Evidence::SimplePole)
        );
        assert_relative_eq!(c.pole_coefficient.unwrap(), -0.25, epsilon = 1e-15);

        let c = op(alpha(1.0), Quantization::Intrinsic { c: 0.0 }, 0)
            .classify_endpoint(Side::Left)
            .unwrap();
        assert_eq!(c.kind, EndpointKind::LimitPoint);
        assert!(c.borderline);
        assert_eq!(c.gamma, Some(0.75));

        let c = op(alpha(1.0), Quantization::Intrinsic { c: 1.0 / 3.0 }, 0)
            .classify_endpoint(Side::Left)
            .unwrap();
        assert_eq!(c.kind, EndpointKind::LimitCircle);
        assert!(!c.borderline);

        let c = op(alpha(-2.0), Quantization::Extrinsic, 0)
            .classify_endpoint(Side::Left)
            .unwrap();
        assert_eq!(
            (c.kind, c.evidence),
            (EndpointKind::LimitCircle, Evidence::DominantPower)
        );
    }

    #[test]
    fn threshold_switches_exactly_at_zero() {
        for c in [f64::MIN_POSITIVE, 1e-300, 1e-12, 0.1] {
            let k = op(alpha(1.0), Quantization::Intrinsic { c }, 0)
                .classify_endpoint(Side::Left)
                .unwrap();
            assert_eq!(k.kind, EndpointKind::LimitCircle, "c = {c}");
        }
    }

    #[test]
    fn infinity_rules() {
        let lp = |m, q, k| op(m, q, k).classify_endpoint(Side::Right).unwrap();
        let c = lp(alpha(1.0), Quantization::Extrinsic, 0);
        assert_eq!(
            (c.kind, c.evidence),
            (EndpointKind::LimitPoint, Evidence::SubquadraticDecreaseAtInfinity)
        );
        let c = lp(alpha(2.0), Quantization::Extrinsic, 0);
        assert_eq!(c.kind, EndpointKind::LimitCircle);
        let c = lp(alpha(2.0), Quantization::Extrinsic, 1);
        assert_eq!(
            (c.kind, c.evidence),
            (EndpointKind::LimitPoint, Evidence::GrowthAtInfinity)
        );
        let c = lp(alpha(1.0), Quantization::WindedExtrinsic { n: 2 }, 2);
        assert_eq!(
            (c.kind, c.evidence),
            (EndpointKind::LimitPoint, Evidence::BoundedAtInfinity)
        );
    }

    #[test]
    fn punctured_plane_only_radial_mode_is_deficient() {
        let r = deficiency_report(alpha(-1.0), Quantization::Extrinsic, -3..=3).unwrap();
        let idx: Vec<u32> = r.fibers.iter().map(|f| f.index).collect();
        assert_eq!(idx, vec![0, 0, 0, 1, 0, 0, 0]);
        assert!(r.fibers[2].left.borderline);
    }

    #[test]
    fn deficiency_examples() {
        let r = deficiency_report(alpha(1.0), Quantization::Extrinsic, -5..=5).unwrap();
        assert!(r.fibers.iter().all(|f| f.index == 1));
        assert_eq!(r.total_index, 11);
        assert!(!r.essentially_self_adjoint);

        let r = deficiency_report(alpha(1.0), Quantization::Intrinsic { c: 0.0 }, -5..=5).unwrap();
        assert!(r.essentially_self_adjoint);

        let r = deficiency_report(alpha(-2.0), Quantization::Extrinsic, 0..=0).unwrap();
        assert_eq!(r.fibers[0].index, 2);
    }

    #[test]
    fn flat_cylinder_fibers_are_whole_lines() {
        let o = op(alpha(0.0), Quantization::Extrinsic, 1);
        assert_eq!(o.interval(), (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!(o.potential(-3.0).unwrap(), 0.75);
        let r = deficiency_report(alpha(0.0), Quantization::Intrinsic { c: 1.0 }, -2..=2).unwrap();
        assert!(r.essentially_self_adjoint);
    }

    #[test]
    fn winded_quantization_needs_grushin_metric() {
        assert!(FiberOperator::new(alpha(2.0), Quantization::WindedExtrinsic { n: 2 }, 0).is_err());
        let o = op(GrushinModel::winded(2).unwrap(), Quantization::Extrinsic, 0);
        assert_eq!(o.quantization(), Quantization::WindedExtrinsic { n: 2 });
        assert_eq!(o.interval().0, 0.5);
    }

    #[test]
    fn unitary_transform_preserves_forms() {
        let bump = |a: f64, b: f64| {
            move |x: f64| {
                let m = 0.5 * (a + b);
                let w = 0.5 * (b - a);
                let u = (x - m) / w;
                let g = 1.0 - u * u;
                (g.powi(4), -8.0 * u * g.powi(3) / w)
            }
        };
        let cases = [
            (alpha(1.0), Quantization::Intrinsic { c: 0.0 }, 2, (0.3, 2.0)),
            (alpha(1.0), Quantization::Intrinsic { c: 0.7 }, 0, (0.3, 2.0)),
            (alpha(2.0), Quantization::Extrinsic, 1, (1.5, 3.0)),
            (alpha(-0.5), Quantization::Extrinsic, 3, (0.5, 2.5)),
            (alpha(-2.0), Quantization::Extrinsic, 0, (0.1, 0.4)),
            (alpha(1.0), Quantization::WindedExtrinsic { n: 3 }, 1, (0.5, 1.5)),
        ];
        for (m, q, k, s) in cases {
            let o = op(m, q, k);
            let (orig, tr) = quadratic_forms(&o, bump(s.0, s.1), s, 128).unwrap();
            assert!(
                (orig - tr).abs() <= 1e-8 * orig.abs().max(1.0),
                "{m} {q}: {orig} vs {tr}"
            );
        }
    }

    #[test]
    fn weyl_limit_circle_at_pole() {
        let o = op(alpha(1.0), Quantization::Extrinsic, 0);
        let r = weyl_numerical_check(&o, Side::Left, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert_eq!(r.verdict, WeylVerdict::LimitCircle);
        assert_eq!(r.rows.len(), 3);
    }

    #[test]
    fn weyl_logarithmic_divergence_at_borderline() {
        let o = op(alpha(1.0), Quantization::Intrinsic { c: 0.0 }, 0);
        let r = weyl_numerical_check(&o, Side::Left, &[1e-2, 1e-3, 1e-4, 1e-5]).unwrap();
        // increments of a |ln δ| mass are equal for geometric cutoffs
        let m: Vec<f64> = r.rows.iter().map(|row| row.mass[1]).collect();
        let ratio = (m[3] - m[2]) / (m[2] - m[1]);
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
        assert_eq!(r.behavior[1], MassBehavior::Divergent);
    }

    #[test]
    fn weyl_limit_point_at_infinity() {
        let o = op(alpha(1.0), Quantization::Intrinsic { c: 0.0 }, 2);
        let r = weyl_numerical_check(&o, Side::Right, &o.default_cutoffs(Side::Right)).unwrap();
        assert_eq!(r.verdict, WeylVerdict::LimitPoint);
    }

    #[test]
    fn weyl_rejects_bad_cutoffs() {
        let o = op(alpha(1.0), Quantization::Extrinsic, 0);
        assert!(weyl_numerical_check(&o, Side::Left, &[1e-3, 1e-2]).is_err());
        assert!(weyl_numerical_check(&o, Side::Left, &[5.0]).is_err());
    }

    #[test]
    fn records_serialize_infinity_as_text() {
        let o = op(alpha(1.0), Quantization::Extrinsic, 1);
        let j = serde_json::to_value(classification_record(&o, Side::Right).unwrap()).unwrap();
        assert_eq!(j["endpoint"], "inf");
        assert_eq!(j["class"], "limit_point");
        assert_eq!(j["quantization"]["kind"], "extrinsic");
    }
}
