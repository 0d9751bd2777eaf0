//! Geodesic flow of `dx² + |x|^{−2α}dy²` as the Hamiltonian system of
//! `H = ½(p_x² + |x|^{2α} p_y²)`.
//!
//! Integration uses the implicit midpoint rule (symplectic, order 2) with a
//! fixed-point inner solve. Crossing the singular circle `x = 0` is allowed
//! only where `|x|^{2α}` is smooth, i.e. `α ∈ {0, 1}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GrushinError, Result};
use crate::geometry::GrushinModel;

const INNER_TOLERANCE: f64 = 1e-13;
const INNER_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhasePoint {
    pub fn new(x: f64, y: f64, px: f64, py: f64) -> Self {
        PhasePoint { x, y, px, py }
    }

    fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.px, self.py]
    }

    fn from_slice(s: &[f64]) -> Self {
        PhasePoint::new(s[0], s[1], s[2], s[3])
    }
}

pub fn hamiltonian(model: GrushinModel, p: PhasePoint) -> f64 {
    0.5 * (p.px * p.px + model.inverse_metric_yy(p.x) * p.py * p.py)
}

/// `a(x) = |x|^{2α}` with its first two derivatives.
#[derive(Debug, Clone, Copy)]
struct Coefficient {
    alpha: f64,
}

impl Coefficient {
    fn new(model: GrushinModel) -> Self {
        Coefficient {
            alpha: model.metric_exponent(),
        }
    }

    fn crossing_allowed(&self) -> bool {
        self.alpha == 0.0 || self.alpha == 1.0
    }

    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let a = self.alpha;
        if a == 0.0 {
            (1.0, 0.0, 0.0)
        } else if a == 1.0 {
            (x * x, 2.0 * x, 2.0)
        } else {
            let ax = x.abs();
            let s = x.signum();
            (
                ax.powf(2.0 * a),
                2.0 * a * ax.powf(2.0 * a - 1.0) * s,
                2.0 * a * (2.0 * a - 1.0) * ax.powf(2.0 * a - 2.0),
            )
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if !self.crossing_allowed() && x <= 0.0 {
            return Err(GrushinError::domain(format!(
                "singular-set crossing undefined for this alpha (alpha = {}, x = {x})",
                self.alpha
            )));
        }
        Ok(())
    }
}

fn field(c: &Coefficient, s: &[f64; 4]) -> [f64; 4] {
    let (a, a1, _) = c.eval(s[0]);
    [s[2], a * s[3], -0.5 * a1 * s[3] * s[3], 0.0]
}

/// Geodesic field extended by two Jacobi columns `∂/∂p_x0` and `∂/∂p_y0`.
fn jacobi_field(c: &Coefficient, s: &[f64; 12]) -> [f64; 12] {
    let (a, a1, a2) = c.eval(s[0]);
    let py = s[3];
    let mut out = [0.0; 12];
    out[..4].copy_from_slice(&[s[2], a * py, -0.5 * a1 * py * py, 0.0]);
    for col in 0..2 {
        let o = 4 + 4 * col;
        let (dx, dpx, dpy) = (s[o], s[o + 2], s[o + 3]);
        out[o] = dpx;
        out[o + 1] = a1 * py * dx + a * dpy;
        out[o + 2] = -0.5 * a2 * py * py * dx - a1 * py * dpy;
        out[o + 3] = 0.0;
    }
    out
}

/// One implicit-midpoint step `y₁ = y₀ + h f((y₀ + y₁)/2)`.
fn midpoint_step<const N: usize>(
    c: &Coefficient,
    f: impl Fn(&Coefficient, &[f64; N]) -> [f64; N],
    y0: &[f64; N],
    h: f64,
) -> Result<[f64; N]> {
    let mut k = f(c, y0);
    let mut mid = [0.0; N];
    let mut converged = false;
    for _ in 0..INNER_MAX_ITER {
        for i in 0..N {
            mid[i] = y0[i] + 0.5 * h * k[i];
        }
        c.check(mid[0])?;
        let k_new = f(c, &mid);
        let mut diff = 0.0f64;
        let mut norm = 0.0f64;
        for i in 0..N {
            diff = diff.max((k_new[i] - k[i]).abs());
            norm = norm.max(k_new[i].abs());
        }
        k = k_new;
        if converged {
            break;
        }
        // One extra sweep after the tolerance is met.
        converged = diff <= INNER_TOLERANCE * (1.0 + norm);
    }
    if !converged {
        return Err(GrushinError::numerical(
            "implicit midpoint iteration did not converge; reduce the step",
            None,
        ));
    }
    let mut y1 = *y0;
    for i in 0..N {
        y1[i] += h * k[i];
    }
    c.check(y1[0])?;
    Ok(y1)
}

/// Fixed-step trajectory over `[0, T]` (or `[T, 0]`) with `steps + 1`
/// samples, endpoints included.
pub fn geodesic_flow(
    model: GrushinModel,
    start: PhasePoint,
    t_end: f64,
    steps: usize,
) -> Result<Vec<(f64, PhasePoint)>> {
    if steps == 0 {
        return Err(GrushinError::invalid("geodesic flow needs at least one step"));
    }
    if !t_end.is_finite() {
        return Err(GrushinError::invalid(format!(
            "duration must be finite, got {t_end}"
        )));
    }
    let c = Coefficient::new(model);
    c.check(start.x)?;
    let h = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = start.to_array();
    out.push((0.0, start));
    for i in 1..=steps {
        s = midpoint_step(&c, field, &s, h)?;
        let t = if i == steps { t_end } else { h * i as f64 };
        out.push((t, PhasePoint::from_slice(&s)));
    }
    Ok(out)
}

/// Endpoint of [`geodesic_flow`] without storing the trajectory.
pub fn flow_endpoint(model: GrushinModel, start: PhasePoint, t_end: f64, steps: usize) -> Result<PhasePoint> {
    if steps == 0 {
        return Err(GrushinError::invalid("geodesic flow needs at least one step"));
    }
    let c = Coefficient::new(model);
    c.check(start.x)?;
    let h = t_end / steps as f64;
    let mut s = start.to_array();
    for _ in 0..steps {
        s = midpoint_step(&c, field, &s, h)?;
    }
    Ok(PhasePoint::from_slice(&s))
}

/// Exact geodesic of the Grushin metric (`α = 1`), where `ẍ = −p_y² x`.
///
/// Fails with an invalid-argument error when `p_y = 0`; the geodesic is then
/// the straight line `x = x₀ + p_x t`.
pub fn closed_form_alpha1(start: PhasePoint, t: f64) -> Result<PhasePoint> {
    let w = start.py;
    if w == 0.0 {
        return Err(GrushinError::invalid(
            "p_y = 0: use the linear case x = x0 + px*t, y = y0",
        ));
    }
    let a = start.x;
    let b = start.px / w;
    let (s, c) = (w * t).sin_cos();
    let s2 = (2.0 * w * t).sin();
    let integral = (a * a + b * b) * t / 2.0 + (a * a - b * b) * s2 / (4.0 * w) + a * b * s * s / w;
    Ok(PhasePoint {
        x: a * c + b * s,
        y: start.y + w * integral,
        px: w * (b * c - a * s),
        py: w,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavefrontPoint {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
}

/// Launch covector of unit energy at angle `θ`: `(cos θ, x₀^{−α} sin θ)`.
pub fn unit_covector(model: GrushinModel, x0: f64, theta: f64) -> (f64, f64) {
    let g = model.inverse_metric_yy(x0).sqrt();
    (theta.cos(), theta.sin() / g)
}

/// Endpoints at time `T` of `n_angles` unit-energy geodesics from `base`,
/// with `θ_j = 2πj/n_angles`. Angles run in parallel; output is ordered by `j`.
pub fn wavefront(
    model: GrushinModel,
    base: (f64, f64),
    t_end: f64,
    n_angles: usize,
    steps: usize,
) -> Result<Vec<WavefrontPoint>> {
    if n_angles == 0 {
        return Err(GrushinError::invalid("wavefront needs at least one angle"));
    }
    if !(base.0 > 0.0) {
        return Err(GrushinError::domain(format!(
            "wavefront base needs x > 0, got {}",
            base.0
        )));
    }
    (0..n_angles)
        .into_par_iter()
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_angles as f64;
            let (px, py) = unit_covector(model, base.0, theta);
            let start = PhasePoint::new(base.0, base.1, px, py);
            let end = if t_end == 0.0 {
                start
            } else {
                flow_endpoint(model, start, t_end, steps)?
            };
            Ok(WavefrontPoint {
                theta,
                x: end.x,
                y: end.y,
            })
        })
        .collect()
}

fn jacobi_state(start: PhasePoint) -> [f64; 12] {
    let mut s = [0.0; 12];
    s[..4].copy_from_slice(&start.to_array());
    s[4 + 2] = 1.0; // column ∂/∂p_x0
    s[8 + 3] = 1.0; // column ∂/∂p_y0
    s
}

fn position_determinant(s: &[f64; 12]) -> f64 {
    s[4] * s[9] - s[8] * s[5]
}

/// Determinant of `∂(x, y)/∂(p_x0, p_y0)` sampled along the geodesic.
pub fn jacobi_determinants(
    model: GrushinModel,
    start: PhasePoint,
    t_end: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    if steps == 0 {
        return Err(GrushinError::invalid("need at least one step"));
    }
    let c = Coefficient::new(model);
    c.check(start.x)?;
    let h = t_end / steps as f64;
    let mut s = jacobi_state(start);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, 0.0));
    for i in 1..=steps {
        s = midpoint_step(&c, jacobi_field, &s, h)?;
        out.push((h * i as f64, position_determinant(&s)));
    }
    Ok(out)
}

/// First time in `(0, T_max]` at which the position block of the
/// linearized flow becomes singular, located by a sign change of its
/// determinant and refined by bisection on the length of the last step.
pub fn conjugate_time(
    model: GrushinModel,
    start: PhasePoint,
    t_max: f64,
    steps: usize,
) -> Result<Option<f64>> {
    if steps < 2 {
        return Err(GrushinError::invalid("conjugate search needs at least two steps"));
    }
    if !(t_max > 0.0) {
        return Err(GrushinError::invalid(format!(
            "T_max must be positive, got {t_max}"
        )));
    }
    if !(hamiltonian(model, start) > 0.0) {
        return Err(GrushinError::invalid("the initial covector has zero energy"));
    }
    let c = Coefficient::new(model);
    c.check(start.x)?;
    let h = t_max / steps as f64;
    let mut s = jacobi_state(start);
    s = midpoint_step(&c, jacobi_field, &s, h)?;
    let sign0 = position_determinant(&s).signum();
    if sign0 == 0.0 {
        return Ok(Some(h));
    }
    for i in 2..=steps {
        let next = midpoint_step(&c, jacobi_field, &s, h)?;
        let d = position_determinant(&next);
        if d == 0.0 || d.signum() != sign0 {
            let t0 = h * (i - 1) as f64;
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let dm = position_determinant(&midpoint_step(&c, jacobi_field, &s, mid)?);
                if dm.signum() == sign0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(t0 + 0.5 * (lo + hi)));
        }
        s = next;
    }
    Ok(None)
}
