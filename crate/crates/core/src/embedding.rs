//! Isometric surface-of-revolution immersions of the Grushin half-cylinder.
//!
//! A model is realized as
//! `(ρ(x) cos(m y), ρ(x) sin(m y), z(x))` where `m` is the angular rate
//! (1 for the α-family, `n²` for the winded bell), `m ρ(x) = x^{−α}` and the
//! profile `(ρ, z)` has unit speed, so that `z(x) = z₀ + ∫ √(1 − ρ′²)`.
//! The height integral has a square-root endpoint singularity at the failure
//! radius `s₀`; segments are integrated in the variable `u = √|s − s₀|`,
//! which makes the integrand smooth.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{GrushinError, Result};
use crate::geometry::{GrushinModel, Interval};
use crate::quadrature::{integrate_adaptive, Estimate};

/// Contractual absolute error bound on [`RevolutionProfile::profile_height`].
pub const HEIGHT_TOLERANCE: f64 = 1e-10;
const SEGMENT_TOLERANCE: f64 = 1e-13;
const MAX_KNOTS: usize = 8192;

/// Default relative finite-difference step of [`RevolutionProfile::verify_isometry`].
pub const ISOMETRY_STEP: f64 = 1e-5;
/// Grid points closer than this many steps to `s₀` are not sampled.
pub const POLE_EXCLUSION_STEPS: f64 = 10.0;
/// Tolerance on every entry of the induced-metric error.
pub const ISOMETRY_TOLERANCE: f64 = 1e-6;

/// Radius and axial height of the generating curve with derivatives, at
/// one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub radius: f64,
    pub radius_d1: f64,
    pub radius_d2: f64,
    pub radius_d3: f64,
    pub axial_d1: f64,
    pub axial_d2: f64,
    pub axial_d3: f64,
}

impl ProfileJet {
    /// Curvature of the meridian, `ρ′z″ − z′ρ″`.
    pub fn meridian_curvature(&self) -> f64 {
        self.radius_d1 * self.axial_d2 - self.axial_d1 * self.radius_d2
    }

    /// Curvature of the parallel circle, `z′/ρ`.
    pub fn parallel_curvature(&self) -> f64 {
        self.axial_d1 / self.radius
    }

    pub fn meridian_curvature_d1(&self) -> f64 {
        self.radius_d1 * self.axial_d3 - self.axial_d1 * self.radius_d3
    }

    pub fn parallel_curvature_d1(&self) -> f64 {
        self.axial_d2 / self.radius - self.axial_d1 * self.radius_d1 / (self.radius * self.radius)
    }
}

#[derive(Debug, Clone, Copy)]
struct Knot {
    x: f64,
    h: f64,
    err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PoleSide {
    Below,
    Above,
}

/// Generating curve of the embedding, with a memo of height integrals.
///
/// The memo is transparent: concurrent readers always obtain the value of
/// the integral from the anchor, whichever knots happen to be cached.
#[derive(Debug)]
pub struct RevolutionProfile {
    model: GrushinModel,
    validity: Interval,
    anchor: (f64, f64),
    pole: Option<(f64, PoleSide)>,
    knots: Mutex<Vec<Knot>>,
}

impl Clone for RevolutionProfile {
    fn clone(&self) -> Self {
        let knots = self.knots.lock().map(|k| k.clone()).unwrap_or_default();
        RevolutionProfile {
            model: self.model,
            validity: self.validity,
            anchor: self.anchor,
            pole: self.pole,
            knots: Mutex::new(knots),
        }
    }
}

impl RevolutionProfile {
    pub fn new(model: GrushinModel) -> Self {
        let validity = model.validity();
        let (anchor, pole) = match model {
            GrushinModel::Alpha { alpha } if alpha == 0.0 || alpha == -1.0 => ((0.0, 0.0), None),
            GrushinModel::Alpha { alpha } if alpha < -1.0 => {
                ((0.0, 0.0), Some((validity.hi, PoleSide::Above)))
            }
            _ => {
                let s0 = validity.lo;
                ((s0, s0), Some((s0, PoleSide::Below)))
            }
        };
        RevolutionProfile {
            model,
            validity,
            anchor,
            pole,
            knots: Mutex::new(vec![Knot {
                x: anchor.0,
                h: anchor.1,
                err: 0.0,
            }]),
        }
    }

    pub fn model(&self) -> GrushinModel {
        self.model
    }

    pub fn validity(&self) -> Interval {
        self.validity
    }

    /// `(x_ref, z3_ref)` fixing the vertical placement.
    pub fn anchor(&self) -> (f64, f64) {
        self.anchor
    }

    /// Failure radius, if the profile has one.
    pub fn pole(&self) -> Option<f64> {
        self.pole.map(|p| p.0)
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.validity.contains(x) {
            Ok(())
        } else {
            Err(GrushinError::domain(format!(
                "x = {x} is outside the embedding interval {} of {}",
                self.validity, self.model
            )))
        }
    }

    /// Radius `ρ(x)` of the parallel through `x`.
    pub fn radius(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.radius_unchecked(x))
    }

    fn radius_unchecked(&self, x: f64) -> f64 {
        match self.model {
            GrushinModel::Alpha { alpha } => x.powf(-alpha),
            GrushinModel::Winded { n } => 1.0 / (f64::from(n) * f64::from(n) * x),
        }
    }

    fn radius_slope(&self, s: f64) -> f64 {
        match self.model {
            GrushinModel::Alpha { alpha } => {
                if alpha == 0.0 {
                    0.0
                } else {
                    -alpha * s.powf(-alpha - 1.0)
                }
            }
            GrushinModel::Winded { n } => {
                let nn = f64::from(n) * f64::from(n);
                -1.0 / (nn * s * s)
            }
        }
    }

    /// Axial slope `√(1 − ρ′²)` of the unit-speed profile.
    pub fn axial_slope(&self, s: f64) -> f64 {
        let d = self.radius_slope(s);
        (1.0 - d * d).max(0.0).sqrt()
    }

    /// Derivatives of the profile up to third order at an interior point.
    pub fn jet(&self, x: f64) -> Result<ProfileJet> {
        if !self.validity.contains_interior(x) {
            return Err(GrushinError::domain(format!(
                "profile derivatives need x strictly inside {}, got {x}",
                self.validity
            )));
        }
        let (r, r1, r2, r3) = match self.model {
            GrushinModel::Alpha { alpha: a } => (
                x.powf(-a),
                -a * x.powf(-a - 1.0),
                a * (a + 1.0) * x.powf(-a - 2.0),
                -a * (a + 1.0) * (a + 2.0) * x.powf(-a - 3.0),
            ),
            GrushinModel::Winded { n } => {
                let c = 1.0 / (f64::from(n) * f64::from(n));
                (c / x, -c / (x * x), 2.0 * c / x.powi(3), -6.0 * c / x.powi(4))
            }
        };
        let z1 = (1.0 - r1 * r1).sqrt();
        let (z2, z3) = if z1 > 0.0 {
            let z2 = -r1 * r2 / z1;
            (z2, -(r2 * r2 + r1 * r3 + z2 * z2) / z1)
        } else {
            (0.0, 0.0)
        };
        Ok(ProfileJet {
            radius: r,
            radius_d1: r1,
            radius_d2: r2,
            radius_d3: r3,
            axial_d1: z1,
            axial_d2: z2,
            axial_d3: z3,
        })
    }

    /// Unit normal `(−z′ cos(my), −z′ sin(my), ρ′)` at an interior point.
    pub fn unit_normal(&self, x: f64, y: f64) -> Result<[f64; 3]> {
        let j = self.jet(x)?;
        let angle = self.model.angular_rate() * y;
        Ok([-j.axial_d1 * angle.cos(), -j.axial_d1 * angle.sin(), j.radius_d1])
    }

    fn segment(&self, a: f64, b: f64) -> Result<Estimate> {
        match self.pole {
            None => integrate_adaptive(|s| self.axial_slope(s), a, b, SEGMENT_TOLERANCE, 4096),
            Some((s0, PoleSide::Below)) => {
                let ua = (a - s0).max(0.0).sqrt();
                let ub = (b - s0).max(0.0).sqrt();
                integrate_adaptive(
                    |u| 2.0 * u * self.axial_slope(s0 + u * u),
                    ua,
                    ub,
                    SEGMENT_TOLERANCE,
                    4096,
                )
            }
            Some((s0, PoleSide::Above)) => {
                let ua = (s0 - a).max(0.0).sqrt();
                let ub = (s0 - b).max(0.0).sqrt();
                integrate_adaptive(
                    |u| -2.0 * u * self.axial_slope(s0 - u * u),
                    ua,
                    ub,
                    SEGMENT_TOLERANCE,
                    4096,
                )
            }
        }
    }

    /// Height `z(x)` with its accumulated quadrature error bound.
    pub fn height_estimate(&self, x: f64) -> Result<Estimate> {
        self.check(x)?;
        let start = {
            let knots = self.knots.lock().expect("height cache poisoned");
            nearest_knot(&knots, x)
        };
        if start.x == x {
            return Ok(Estimate {
                value: start.h,
                error: start.err,
            });
        }
        let seg = self.segment(start.x, x)?;
        let mut est = Estimate {
            value: start.h + seg.value,
            error: start.err + seg.error,
        };
        if est.error > 0.5 * HEIGHT_TOLERANCE && start.x != self.anchor.0 {
            let seg = self.segment(self.anchor.0, x)?;
            est = Estimate {
                value: self.anchor.1 + seg.value,
                error: seg.error,
            };
        }
        if est.error > HEIGHT_TOLERANCE {
            return Err(GrushinError::numerical(
                format!("height integral at x = {x} missed its tolerance"),
                Some(est.error),
            ));
        }
        let mut knots = self.knots.lock().expect("height cache poisoned");
        if knots.len() < MAX_KNOTS {
            let pos = knots.partition_point(|k| k.x < x);
            if knots.get(pos).is_none_or(|k| k.x != x) {
                knots.insert(
                    pos,
                    Knot {
                        x,
                        h: est.value,
                        err: est.error,
                    },
                );
            }
        }
        Ok(est)
    }

    /// Height `z(x)` of the embedded parallel through `x`.
    pub fn profile_height(&self, x: f64) -> Result<f64> {
        self.height_estimate(x).map(|e| e.value)
    }

    /// `z(b) − z(a)` integrated directly over `[a, b]`; accurate to rounding
    /// for short segments, which finite differences rely on.
    pub fn height_increment(&self, a: f64, b: f64) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        self.segment(a, b).map(|e| e.value)
    }

    /// Number of memoized knots, including the anchor.
    pub fn cached_knots(&self) -> usize {
        self.knots.lock().map(|k| k.len()).unwrap_or(0)
    }

    /// Image of the parameter point `(x, y)` in `R³`.
    pub fn embed_point(&self, x: f64, y: f64) -> Result<[f64; 3]> {
        let z = self.profile_height(x)?;
        let r = self.radius_unchecked(x);
        let angle = self.model.angular_rate() * y;
        Ok([r * angle.cos(), r * angle.sin(), z])
    }

    /// Tensor-grid tessellation over `x_range × [0, span)`.
    ///
    /// `span` is `2π` for the α-family. Winded bells sweep one fundamental
    /// period `2π/n²` unless `full_winding` is set, in which case `y` covers
    /// the whole circle and the surface wraps `n²` times. Consecutive `y`
    /// columns are closed up into a ring in both cases.
    pub fn generate_mesh(
        &self,
        x_range: (f64, f64),
        nx: usize,
        ny: usize,
        full_winding: bool,
    ) -> Result<Mesh> {
        if nx < 2 || ny < 2 {
            return Err(GrushinError::invalid(format!(
                "mesh needs nx, ny >= 2 (got {nx} x {ny})"
            )));
        }
        let (x0, x1) = x_range;
        if !(x0 < x1) {
            return Err(GrushinError::invalid(format!("empty x range [{x0}, {x1}]")));
        }
        self.check(x0)?;
        self.check(x1)?;
        let span = match self.model {
            GrushinModel::Winded { .. } if !full_winding => 2.0 * PI / self.model.angular_rate(),
            _ => 2.0 * PI,
        };
        let mut vertices = Vec::with_capacity(nx * ny);
        let mut param_grid = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            let x = if i == nx - 1 {
                x1
            } else {
                x0 + (x1 - x0) * i as f64 / (nx - 1) as f64
            };
            for j in 0..ny {
                let y = span * j as f64 / ny as f64;
                vertices.push(self.embed_point(x, y)?);
                param_grid.push((x, y));
            }
        }
        let mut faces = Vec::with_capacity(2 * (nx - 1) * ny);
        for i in 0..nx - 1 {
            for j in 0..ny {
                let j1 = (j + 1) % ny;
                let v00 = i * ny + j;
                let v01 = i * ny + j1;
                let v10 = (i + 1) * ny + j;
                let v11 = (i + 1) * ny + j1;
                faces.push([v00, v10, v11]);
                faces.push([v00, v11, v01]);
            }
        }
        Ok(Mesh {
            vertices,
            faces,
            param_grid,
        })
    }

    /// Compares the finite-difference first fundamental form of
    /// [`embed_point`](Self::embed_point) against `diag(1, x^{−2α})`.
    ///
    /// `rel_step` is the relative step in `x` and the absolute step in `y`.
    /// Points within [`POLE_EXCLUSION_STEPS`] steps of `s₀`, or whose
    /// stencil leaves the embedding interval, are flagged instead.
    pub fn verify_isometry(&self, x_grid: &[f64], rel_step: f64) -> Vec<IsometryOutcome> {
        const Y: f64 = 0.5;
        let a = self.model.metric_exponent();
        x_grid
            .iter()
            .map(|&x| {
                let hx = rel_step * x.abs().max(f64::MIN_POSITIVE);
                let hy = rel_step;
                if let Some(s0) = self.pole() {
                    if (x - s0).abs() < POLE_EXCLUSION_STEPS * hx {
                        return IsometryOutcome::Flagged {
                            x,
                            reason: format!("within {POLE_EXCLUSION_STEPS} steps of s0 = {s0}"),
                        };
                    }
                }
                if !self.validity.contains(x - hx) || !self.validity.contains(x + hx) {
                    return IsometryOutcome::Flagged {
                        x,
                        reason: "stencil leaves the embedding interval".to_string(),
                    };
                }
                let pts = (|| -> Result<[[f64; 3]; 4]> {
                    Ok([
                        self.embed_point(x - hx, Y)?,
                        self.embed_point(x + hx, Y)?,
                        self.embed_point(x, Y - hy)?,
                        self.embed_point(x, Y + hy)?,
                    ])
                })();
                let pts = match pts {
                    Ok(p) => p,
                    Err(e) => {
                        return IsometryOutcome::Flagged {
                            x,
                            reason: e.to_string(),
                        }
                    }
                };
                let rx = scaled_diff(&pts[1], &pts[0], 2.0 * hx);
                let ry = scaled_diff(&pts[3], &pts[2], 2.0 * hy);
                let e = dot(&rx, &rx);
                let f = dot(&rx, &ry);
                let g = dot(&ry, &ry);
                IsometryOutcome::Checked(IsometryRow {
                    x,
                    e_err: (e - 1.0).abs(),
                    f_err: f.abs(),
                    g_err: (g - x.powf(-2.0 * a)).abs(),
                })
            })
            .collect()
    }
}

fn nearest_knot(knots: &[Knot], x: f64) -> Knot {
    let pos = knots.partition_point(|k| k.x < x);
    let mut best = knots[pos.min(knots.len() - 1)];
    if pos > 0 {
        let left = knots[pos - 1];
        if (x - left.x).abs() <= (best.x - x).abs() {
            best = left;
        }
    }
    best
}

fn scaled_diff(a: &[f64; 3], b: &[f64; 3], d: f64) -> [f64; 3] {
    [(a[0] - b[0]) / d, (a[1] - b[1]) / d, (a[2] - b[2]) / d]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Induced-metric errors at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryRow {
    pub x: f64,
    pub e_err: f64,
    pub f_err: f64,
    pub g_err: f64,
}

impl IsometryRow {
    pub fn max_error(&self) -> f64 {
        self.e_err.max(self.f_err).max(self.g_err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum IsometryOutcome {
    Checked(IsometryRow),
    Flagged { x: f64, reason: String },
}

/// A triangulated surface with the parameter point behind each vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub param_grid: Vec<(f64, f64)>,
}

impl Mesh {
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.param_grid.len() != n {
            return Err(GrushinError::invalid(
                "param grid and vertex list differ in length",
            ));
        }
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(GrushinError::invalid(format!(
                "face {f:?} indexes past {n} vertices"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MeshFormat {
    Obj,
    Csv,
}

/// Writes `mesh` as Wavefront OBJ (`v`/`f` lines, 1-based) or as CSV with
/// one `x,y,z1,z2,z3` row per vertex.
pub fn write_mesh(mesh: &Mesh, format: MeshFormat, out: &mut impl Write) -> Result<()> {
    match format {
        MeshFormat::Obj => {
            for v in &mesh.vertices {
                writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
            }
            for f in &mesh.faces {
                writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
            }
        }
        MeshFormat::Csv => {
            writeln!(out, "x,y,z1,z2,z3")?;
            for ((x, y), v) in mesh.param_grid.iter().zip(&mesh.vertices) {
                writeln!(out, "{x},{y},{},{},{}", v[0], v[1], v[2])?;
            }
        }
    }
    Ok(())
}

pub fn export_mesh(mesh: &Mesh, format: MeshFormat) -> Result<Vec<u8>> {
    mesh.validate()?;
    let mut buf = Vec::new();
    write_mesh(mesh, format, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn profile(model: GrushinModel) -> RevolutionProfile {
        RevolutionProfile::new(model)
    }

    fn alpha(a: f64) -> RevolutionProfile {
        profile(GrushinModel::alpha(a).unwrap())
    }

    #[test]
    fn height_anchor_values() {
        assert_eq!(alpha(1.0).profile_height(1.0).unwrap(), 1.0);
        let w = profile(GrushinModel::winded(3).unwrap());
        assert_eq!(w.profile_height(1.0 / 3.0).unwrap(), 1.0 / 3.0);
        assert_eq!(alpha(-2.0).profile_height(0.0 + 1e-300).unwrap() < 1e-200, true);
    }

    #[test]
    fn cylinder_height_is_identity() {
        let p = alpha(0.0);
        for t in [0.0, 0.3, 1.0, 7.5] {
            assert_relative_eq!(p.profile_height(t).unwrap(), t, epsilon = 1e-14);
        }
    }

    // Reference values from 30-digit adaptive quadrature (mpmath).
    #[test]
    fn height_matches_high_precision_values() {
        let cases: [(GrushinModel, f64, f64); 6] = [
            (GrushinModel::alpha(1.0).unwrap(), 2.0, 1.822_835_464_180_351_9),
            (GrushinModel::alpha(1.0).unwrap(), 3.0, 2.808_040_802_158_969_1),
            (GrushinModel::alpha(2.0).unwrap(), 2.0, 1.861_083_482_695_070_4),
            (
                GrushinModel::alpha(-2.0).unwrap(),
                0.5,
                std::f64::consts::PI / 8.0,
            ),
            (GrushinModel::alpha(-2.0).unwrap(), 0.3, 0.280_875_277_198_321_1),
            (GrushinModel::winded(2).unwrap(), 1.0, 0.911_417_732_090_176_0),
        ];
        for (m, x, want) in cases {
            let p = profile(m);
            let got = p.height_estimate(x).unwrap();
            assert!(
                (got.value - want).abs() < 1e-10,
                "{m} at {x}: {} vs {want}",
                got.value
            );
            assert!(got.error <= HEIGHT_TOLERANCE);
        }
        let p = alpha(-0.5);
        assert!((p.profile_height(1.0).unwrap() - 0.786_785_929_553_234_5).abs() < 1e-10);
    }

    #[test]
    fn cache_is_transparent() {
        let cold = alpha(1.0);
        let warm = alpha(1.0);
        for x in [1.1, 1.7, 2.3, 2.9, 4.0] {
            warm.profile_height(x).unwrap();
        }
        for x in [1.05, 1.5, 2.0, 3.5, 10.0] {
            let a = cold.profile_height(x).unwrap();
            let b = warm.profile_height(x).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(warm.cached_knots() > 5);
    }

    #[test]
    fn concurrent_readers_agree() {
        let p = std::sync::Arc::new(alpha(1.0));
        let xs: Vec<f64> = (0..64).map(|i| 1.0 + 0.05 * i as f64).collect();
        let serial: Vec<f64> = xs
            .iter()
            .map(|&x| alpha(1.0).profile_height(x).unwrap())
            .collect();
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let p = p.clone();
                let xs = xs.clone();
                std::thread::spawn(move || {
                    let mut order: Vec<usize> = (0..xs.len()).collect();
                    order.rotate_left(t * 16);
                    order
                        .into_iter()
                        .map(|i| (i, p.profile_height(xs[i]).unwrap()))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, v) in h.join().unwrap() {
                assert!((v - serial[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn height_outside_validity_is_domain_error() {
        assert!(matches!(
            alpha(1.0).profile_height(0.9),
            Err(GrushinError::Domain(_))
        ));
        assert!(matches!(
            alpha(-2.0).profile_height(0.6),
            Err(GrushinError::Domain(_))
        ));
    }

    #[test]
    fn embed_point_examples() {
        let p = alpha(1.0);
        let v = p.embed_point(1.0, 0.0).unwrap();
        assert_eq!(v, [1.0, 0.0, 1.0]);
        let plane = alpha(-1.0);
        let v = plane.embed_point(2.0, 0.3).unwrap();
        assert_relative_eq!(v[0], 2.0 * 0.3f64.cos(), epsilon = 1e-15);
        assert_relative_eq!(v[1], 2.0 * 0.3f64.sin(), epsilon = 1e-15);
        assert_eq!(v[2], 0.0);
        let w = profile(GrushinModel::winded(2).unwrap());
        assert_eq!(w.embed_point(0.5, 0.0).unwrap(), [0.5, 0.0, 0.5]);
    }

    #[test]
    fn cylinder_band_mesh() {
        let m = alpha(0.0).generate_mesh((0.0, 1.0), 2, 4, false).unwrap();
        assert_eq!(m.vertices.len(), 8);
        for v in &m.vertices {
            assert_relative_eq!(v[0].hypot(v[1]), 1.0, epsilon = 1e-15);
        }
        m.validate().unwrap();
    }

    #[test]
    fn trumpet_bell_widest_at_singularity() {
        let m = alpha(1.0).generate_mesh((1.0, 3.0), 50, 64, false).unwrap();
        let radii: Vec<f64> = m.vertices.iter().map(|v| v[0].hypot(v[1])).collect();
        let max = radii.iter().cloned().fold(0.0, f64::max);
        assert_relative_eq!(max, 1.0, epsilon = 1e-14);
        let imax = radii.iter().position(|&r| r == max).unwrap();
        assert_eq!(m.param_grid[imax].0, 1.0);
    }

    #[test]
    fn full_winding_sweeps_whole_circle() {
        let p = profile(GrushinModel::winded(2).unwrap());
        let one = p.generate_mesh((0.5, 1.0), 3, 8, false).unwrap();
        let full = p.generate_mesh((0.5, 1.0), 3, 32, true).unwrap();
        let ymax_one = one.param_grid.iter().map(|g| g.1).fold(0.0, f64::max);
        let ymax_full = full.param_grid.iter().map(|g| g.1).fold(0.0, f64::max);
        assert!(ymax_one < 2.0 * PI / 4.0);
        assert_relative_eq!(ymax_full, 2.0 * PI * 31.0 / 32.0, epsilon = 1e-14);
        // angle n²·y wraps four times: column j and j+8 coincide in space
        for j in 0..8 {
            let a = full.vertices[j];
            let b = full.vertices[j + 8];
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn mesh_rejects_bad_input() {
        let p = alpha(1.0);
        assert!(matches!(
            p.generate_mesh((0.5, 2.0), 4, 4, false),
            Err(GrushinError::Domain(_))
        ));
        assert!(matches!(
            p.generate_mesh((1.0, 2.0), 1, 4, false),
            Err(GrushinError::InvalidArgument(_))
        ));
    }

    #[test]
    fn interior_faces_are_not_degenerate() {
        for (m, range) in [
            (GrushinModel::alpha(1.0).unwrap(), (1.0, 3.0)),
            (GrushinModel::alpha(-2.0).unwrap(), (0.05, 0.5)),
            (GrushinModel::winded(3).unwrap(), (1.0 / 3.0, 2.0)),
        ] {
            let mesh = profile(m).generate_mesh(range, 10, 12, false).unwrap();
            for f in &mesh.faces {
                let [a, b, c] = f.map(|i| mesh.vertices[i]);
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let cross = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                assert!(dot(&cross, &cross).sqrt() > 1e-10, "{m}: degenerate face {f:?}");
            }
        }
    }

    #[test]
    fn isometry_examples() {
        let rows = alpha(0.0).verify_isometry(&[0.5, 1.0, 2.0], ISOMETRY_STEP);
        for r in rows {
            let IsometryOutcome::Checked(r) = r else {
                panic!("flagged")
            };
            assert!(r.max_error() < 1e-9);
        }
        let IsometryOutcome::Checked(r) = alpha(1.0).verify_isometry(&[2.0], ISOMETRY_STEP)[0] else {
            panic!("flagged")
        };
        assert!(r.max_error() <= ISOMETRY_TOLERANCE);
        let w = profile(GrushinModel::winded(3).unwrap());
        let IsometryOutcome::Checked(r) = w.verify_isometry(&[1.0], ISOMETRY_STEP)[0] else {
            panic!("flagged")
        };
        assert!(r.g_err <= ISOMETRY_TOLERANCE);
    }

    #[test]
    fn isometry_flags_points_near_pole() {
        let out = alpha(1.0).verify_isometry(&[1.0 + 5e-5, 1.0], ISOMETRY_STEP);
        assert!(out.iter().all(|o| matches!(o, IsometryOutcome::Flagged { .. })));
    }

    #[test]
    fn jet_curvatures_reproduce_closed_forms() {
        for (m, xs) in [
            (GrushinModel::alpha(1.0).unwrap(), vec![1.01, 1.5, 3.0, 20.0]),
            (GrushinModel::alpha(2.0).unwrap(), vec![1.3, 2.0, 5.0]),
            (GrushinModel::alpha(-0.5).unwrap(), vec![0.3, 1.0, 4.0]),
            (GrushinModel::alpha(-2.0).unwrap(), vec![0.05, 0.2, 0.45]),
            (GrushinModel::winded(2).unwrap(), vec![0.6, 1.0, 3.0]),
        ] {
            let p = profile(m);
            for x in xs {
                let j = p.jet(x).unwrap();
                let k1 = j.meridian_curvature();
                let k2 = j.parallel_curvature();
                let k = m.gaussian_curvature(x).unwrap();
                let h = m.mean_curvature(x).unwrap();
                assert_relative_eq!(k1 * k2, k, max_relative = 1e-11, epsilon = 1e-13);
                assert_relative_eq!(0.5 * (k1 + k2), h, max_relative = 1e-11, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let p = alpha(1.0);
        let x = 1.7;
        let h = 1e-5;
        let j = p.jet(x).unwrap();
        let jp = p.jet(x + h).unwrap();
        let jm = p.jet(x - h).unwrap();
        let fd = |a: f64, b: f64| (a - b) / (2.0 * h);
        assert_relative_eq!(j.axial_d2, fd(jp.axial_d1, jm.axial_d1), max_relative = 1e-8);
        assert_relative_eq!(j.axial_d3, fd(jp.axial_d2, jm.axial_d2), max_relative = 1e-7);
        assert_relative_eq!(
            j.meridian_curvature_d1(),
            fd(jp.meridian_curvature(), jm.meridian_curvature()),
            max_relative = 1e-7
        );
        assert_relative_eq!(
            j.parallel_curvature_d1(),
            fd(jp.parallel_curvature(), jm.parallel_curvature()),
            max_relative = 1e-7
        );
    }

    #[test]
    fn export_single_triangle() {
        let mesh = Mesh {
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.5]],
            faces: vec![[0, 1, 2]],
            param_grid: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
        };
        let obj = String::from_utf8(export_mesh(&mesh, MeshFormat::Obj).unwrap()).unwrap();
        assert_eq!(obj, "v 0 0 0\nv 1 0 0\nv 0 1 0.5\nf 1 2 3\n");
        let csv = String::from_utf8(export_mesh(&mesh, MeshFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().next(), Some("x,y,z1,z2,z3"));
    }

    #[test]
    fn export_rejects_out_of_range_faces() {
        let mesh = Mesh {
            vertices: vec![[0.0; 3]],
            faces: vec![[0, 1, 2]],
            param_grid: vec![(0.0, 0.0)],
        };
        assert!(export_mesh(&mesh, MeshFormat::Obj).is_err());
    }
}
